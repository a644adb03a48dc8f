//! Text formats: the formation-energy dataset CSV and probability-mass files.

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::fitting::{DatasetRecord, Split};

pub const DATASET_HEADER: &str = "bitstring,energy_ev,tag,sic_id";

/// Parses `bitstring,energy_ev,tag[,sic_id]` with a header row. Every record
/// must have the same bitstring length.
pub fn read_dataset(text: &str) -> Result<Vec<DatasetRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let Some((hline, header)) = lines.next() else {
        return Err(Error::NoRecords);
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[..3] != ["bitstring", "energy_ev", "tag"] || (cols.len() == 4 && cols[3] != "sic_id") || cols.len() > 4 {
        return Err(Error::Parse { line: hline + 1, message: format!("expected header '{DATASET_HEADER}' (sic_id optional)") });
    }

    let mut records: Vec<DatasetRecord> = Vec::new();
    for (k, raw) in lines {
        let line = k + 1;
        let err = |message: String| Error::Parse { line, message };
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(err(format!("expected 3 or 4 fields, found {}", fields.len())));
        }
        let config: Configuration = fields[0].parse().map_err(|e: Error| err(e.to_string()))?;
        if let Some(first) = records.first() {
            if first.config.len() != config.len() {
                return Err(err(format!("bitstring length {} differs from {}", config.len(), first.config.len())));
            }
        }
        let energy: f64 = fields[1].parse().map_err(|_| err(format!("bad energy '{}'", fields[1])))?;
        if !energy.is_finite() {
            return Err(err(format!("energy '{}' is not finite", fields[1])));
        }
        let tag: Split = fields[2].parse().map_err(|e: Error| err(e.to_string()))?;
        let sic_id = match fields.get(3).filter(|s| !s.is_empty()) {
            Some(s) => Some(s.parse().map_err(|_| err(format!("bad sic_id '{s}'")))?),
            None => None,
        };
        records.push(DatasetRecord { config, energy, tag, sic_id });
    }
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    Ok(records)
}

pub fn write_dataset(records: &[DatasetRecord]) -> String {
    let with_id = records.iter().any(|r| r.sic_id.is_some());
    let mut out = String::from(if with_id { DATASET_HEADER } else { "bitstring,energy_ev,tag" });
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{:e},{}", r.config, r.energy, r.tag));
        if with_id {
            out.push(',');
            if let Some(id) = r.sic_id {
                out.push_str(&id.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Reads a probability mass function indexed by dopant count. Accepts a
/// JSON array, or CSV whose last column holds the probabilities (a
/// non-numeric first row is treated as a header).
pub fn read_pmf(text: &str) -> Result<Vec<f64>> {
    let t = text.trim();
    if t.starts_with('[') {
        return Ok(serde_json::from_str(t)?);
    }
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let last = l.rsplit(',').next().unwrap_or("").trim();
        match last.parse::<f64>() {
            Ok(p) => out.push(p),
            Err(_) if out.is_empty() && k == first_content_line(text) => continue,
            Err(_) => return Err(Error::Parse { line: k + 1, message: format!("bad probability '{last}'") }),
        }
    }
    if out.is_empty() {
        return Err(Error::NoRecords);
    }
    Ok(out)
}

fn first_content_line(text: &str) -> usize {
    text.lines().position(|l| !l.trim().is_empty() && !l.trim().starts_with('#')).unwrap_or(0)
}

pub fn write_pmf(pmf: &[f64]) -> String {
    let mut out = String::from("dopants,probability\n");
    for (n, p) in pmf.iter().enumerate() {
        out.push_str(&format!("{n},{p}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trip() {
        let text = "bitstring,energy_ev,tag,sic_id\n0110,3.5e-4,train,2\n1000,1e-4,test,\n";
        let recs = read_dataset(text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].sic_id, Some(2));
        assert_eq!(recs[1].tag, Split::Test);
        assert_eq!(read_dataset(&write_dataset(&recs)).unwrap(), recs);
    }

    #[test]
    fn optional_sic_column() {
        let recs = read_dataset("bitstring,energy_ev,tag\n01,0,train\n").unwrap();
        assert_eq!(recs[0].sic_id, None);
        assert!(write_dataset(&recs).starts_with("bitstring,energy_ev,tag\n"));
    }

    #[test]
    fn errors_name_the_line() {
        let text = "bitstring,energy_ev,tag\n0110,1,train\n01x0,1,train\n";
        match read_dataset(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_dataset("bitstring,energy_ev,tag\n01,1,train\n011,1,train\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(read_dataset("bitstring,energy_ev,tag\n01,nan,train\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read_dataset("bitstring,energy_ev,tag\n01,1,valid\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(read_dataset("").unwrap_err().to_string(), "no records");
        assert_eq!(read_dataset("bitstring,energy_ev,tag\n").unwrap_err().to_string(), "no records");
    }

    #[test]
    fn pmf_formats() {
        assert_eq!(read_pmf("[0.5, 0.5]").unwrap(), vec![0.5, 0.5]);
        assert_eq!(read_pmf("dopants,probability\n0,0.25\n1,0.75\n").unwrap(), vec![0.25, 0.75]);
        assert_eq!(read_pmf("0.1\n0.9\n").unwrap(), vec![0.1, 0.9]);
        assert_eq!(read_pmf(&write_pmf(&[0.2, 0.3, 0.5])).unwrap(), vec![0.2, 0.3, 0.5]);
        assert!(matches!(read_pmf("n,p\n0,0.5\n1,x\n"), Err(Error::Parse { line: 3, .. })));
    }
}
