//! Zero-intercept least squares onto the two-parameter Rydberg form.
//!
//! Each record contributes the row (‖n‖₁, Σ_s m_s·f_s) where m_s counts
//! occupied pairs in shell s, so E ≈ V·‖n‖₁ + V_NN·pair_load.

use serde::{Deserialize, Serialize};

use crate::configuration::Configuration;
use crate::energetics::SHELL_FACTORS;
use crate::error::{Error, Result};
use crate::hardware::HardwareSpec;
use crate::lattice::Lattice;

/// Relative determinant below which the 2×2 normal matrix counts as singular.
const SINGULAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("tag must be train or test, got '{other}'"))),
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub config: Configuration,
    /// Formation energy in eV.
    pub energy: f64,
    pub tag: Split,
    pub sic_id: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub n_count: usize,
    pub pair_load: f64,
}

/// (‖n‖₁, Σ_s m_s·f_s) for one configuration; periodic image multiplicities
/// count as separate pairs.
pub fn build_design_row(lattice: &Lattice, config: &Configuration) -> Result<DesignRow> {
    config.check_len(lattice.num_sites())?;
    let mut pair_load = 0.0;
    for (s, factor) in SHELL_FACTORS.iter().enumerate() {
        let m: usize = lattice
            .shell_pairs(s)
            .iter()
            .filter(|p| config.get(p.i) && config.get(p.j))
            .map(|p| p.multiplicity as usize)
            .sum();
        pair_load += m as f64 * factor;
    }
    Ok(DesignRow { n_count: config.count_ones(), pair_load })
}

/// Pearson r, Spearman ρ and MSE between predictions and references.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Absent when either side has zero variance.
    pub pearson_r: Option<f64>,
    pub spearman_rho: Option<f64>,
    pub mse: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub v: f64,
    /// Absent when no training record has an occupied pair in range.
    pub v_nn: Option<f64>,
    pub r_nn_model: Option<f64>,
    /// Metrics on the training records.
    pub train: Metrics,
    pub mse_test: Option<f64>,
    /// Reference minus prediction per training record, in input order.
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn predict(&self, row: DesignRow) -> f64 {
        self.v * row.n_count as f64 + self.v_nn.unwrap_or(0.0) * row.pair_load
    }

    /// The fitted R_NN, or an error when the pair strength was not constrained.
    pub fn require_r_nn(&self) -> Result<f64> {
        self.r_nn_model.ok_or(Error::MissingPairStrength)
    }
}

fn rows_for(lattice: &Lattice, records: &[&DatasetRecord]) -> Result<Vec<(DesignRow, f64)>> {
    records
        .iter()
        .map(|r| {
            if !r.energy.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite energy for {}", r.config)));
            }
            Ok((build_design_row(lattice, &r.config)?, r.energy))
        })
        .collect()
}

/// Order-independent sum: sort, then accumulate.
fn stable_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// Fits (V, V_NN) to the training records of `dataset` and reports test MSE
/// when test records are present.
pub fn fit_model(dataset: &[DatasetRecord], lattice: &Lattice, spec: &HardwareSpec) -> Result<FitResult> {
    let train: Vec<&DatasetRecord> = dataset.iter().filter(|r| r.tag == Split::Train).collect();
    if train.is_empty() {
        return Err(Error::NoRecords);
    }
    let rows = rows_for(lattice, &train)?;

    let sxx = stable_sum(rows.iter().map(|(r, _)| (r.n_count * r.n_count) as f64).collect());
    let sxp = stable_sum(rows.iter().map(|(r, _)| r.n_count as f64 * r.pair_load).collect());
    let spp = stable_sum(rows.iter().map(|(r, _)| r.pair_load * r.pair_load).collect());
    let sxy = stable_sum(rows.iter().map(|(r, y)| r.n_count as f64 * y).collect());
    let spy = stable_sum(rows.iter().map(|(r, y)| r.pair_load * y).collect());

    let (v, v_nn) = if spp == 0.0 {
        if sxx == 0.0 {
            return Err(Error::SingularDesign);
        }
        (sxy / sxx, None)
    } else {
        let det = sxx * spp - sxp * sxp;
        if det.abs() <= SINGULAR_TOLERANCE * sxx * spp {
            return Err(Error::SingularDesign);
        }
        ((sxy * spp - spy * sxp) / det, Some((sxx * spy - sxp * sxy) / det))
    };

    let r_nn_model = match v_nn {
        Some(w) if w > 0.0 => Some((spec.c6_ev_um6() / w).powf(1.0 / 6.0)),
        Some(w) => return Err(Error::NonPositivePairStrength(w)),
        None => None,
    };

    let mut fit = FitResult {
        v,
        v_nn,
        r_nn_model,
        train: Metrics { pearson_r: None, spearman_rho: None, mse: 0.0, count: 0 },
        mse_test: None,
        residuals: Vec::new(),
    };
    let predicted: Vec<f64> = rows.iter().map(|(r, _)| fit.predict(*r)).collect();
    let reference: Vec<f64> = rows.iter().map(|(_, y)| *y).collect();
    fit.residuals = reference.iter().zip(&predicted).map(|(y, p)| y - p).collect();
    fit.train = metrics(&predicted, &reference);

    let test: Vec<&DatasetRecord> = dataset.iter().filter(|r| r.tag == Split::Test).collect();
    if !test.is_empty() {
        fit.mse_test = Some(evaluate_metrics(&fit, &test.into_iter().cloned().collect::<Vec<_>>(), lattice)?.mse);
    }
    Ok(fit)
}

/// Metrics of `fit` on every record of `records`, whatever its tag.
pub fn evaluate_metrics(fit: &FitResult, records: &[DatasetRecord], lattice: &Lattice) -> Result<Metrics> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let refs: Vec<&DatasetRecord> = records.iter().collect();
    let rows = rows_for(lattice, &refs)?;
    let predicted: Vec<f64> = rows.iter().map(|(r, _)| fit.predict(*r)).collect();
    let reference: Vec<f64> = rows.iter().map(|(_, y)| *y).collect();
    Ok(metrics(&predicted, &reference))
}

/// Pearson, Spearman (average ranks for ties) and MSE.
pub fn metrics(predicted: &[f64], reference: &[f64]) -> Metrics {
    let mse = stable_sum(predicted.iter().zip(reference).map(|(p, y)| (p - y).powi(2)).collect())
        / predicted.len() as f64;
    Metrics {
        pearson_r: pearson(predicted, reference),
        spearman_rho: pearson(&ranks(predicted), &ranks(reference)),
        mse,
        count: predicted.len(),
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = stable_sum(a.to_vec()) / n;
    let mb = stable_sum(b.to_vec()) / n;
    let cov = stable_sum(a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect());
    let va = stable_sum(a.iter().map(|x| (x - ma).powi(2)).collect());
    let vb = stable_sum(b.iter().map(|y| (y - mb).powi(2)).collect());
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut end = k + 1;
        while end < idx.len() && xs[idx[end]] == xs[idx[k]] {
            end += 1;
        }
        let avg = (k + end + 1) as f64 / 2.0;
        for &i in &idx[k..end] {
            out[i] = avg;
        }
        k = end;
    }
    out
}
