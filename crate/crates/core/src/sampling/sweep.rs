//! Per-detuning aggregate statistics and their CSV form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SWEEP_HEADER: [&str; 5] = ["delta_g_ev", "delta_mu_ev", "mean_conc", "conc_pmf_json", "log_z"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta_g_ev: f64,
    pub delta_mu_ev: f64,
    pub mean_conc: f64,
    pub conc_pmf: Vec<f64>,
    /// Present for enumeration and Monte Carlo points.
    pub log_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn detunings(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta_g_ev).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean_conc).collect()
    }

    /// True when the mean concentration never increases with Δμ.
    pub fn is_nonincreasing_in_mu(&self) -> bool {
        let mut pts: Vec<&SweepPoint> = self.points.iter().collect();
        pts.sort_by(|a, b| a.delta_mu_ev.total_cmp(&b.delta_mu_ev));
        pts.windows(2).all(|w| w[1].mean_conc <= w[0].mean_conc)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SWEEP_HEADER)?;
        for p in &self.points {
            w.write_record([
                format!("{:e}", p.delta_g_ev),
                format!("{:e}", p.delta_mu_ev),
                format!("{}", p.mean_conc),
                serde_json::to_string(&p.conc_pmf)?,
                p.log_z.map(|z| format!("{z}")).unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        let col = |name: &str| header.iter().position(|h| h == name);
        let (g, m, c) = match (col("delta_g_ev"), col("delta_mu_ev"), col("mean_conc")) {
            (Some(g), Some(m), Some(c)) => (g, m, c),
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "header must contain delta_g_ev, delta_mu_ev and mean_conc".into(),
                })
            }
        };
        let pmf_col = col("conc_pmf_json");
        let z_col = col("log_z");
        let mut points = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let line = k + 2;
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                let s = rec.get(i).unwrap_or("");
                s.parse::<f64>()
                    .map_err(|_| Error::Parse { line, message: format!("bad number '{s}' in column {}", header[i]) })
            };
            let conc_pmf = match pmf_col.and_then(|i| rec.get(i)).filter(|s| !s.is_empty()) {
                Some(s) => serde_json::from_str(s).map_err(|e| Error::Parse { line, message: e.to_string() })?,
                None => Vec::new(),
            };
            let log_z = match z_col.and_then(|i| rec.get(i)).filter(|s| !s.is_empty()) {
                Some(_) => Some(num(z_col.expect("present"))?),
                None => None,
            };
            points.push(SweepPoint { delta_g_ev: num(g)?, delta_mu_ev: num(m)?, mean_conc: num(c)?, conc_pmf, log_z });
        }
        Ok(SweepResult { points })
    }
}
