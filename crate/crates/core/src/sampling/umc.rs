//! Uniform Monte Carlo estimates of grand-canonical averages.
//!
//! Samples are drawn in fixed-size batches, each with its own sub-seed, and
//! regenerated for a second pass once the lowest observed energy is known.
//! Weights are self-normalized, so only energy differences enter.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{
    BoltzmannStats, EnergyHistogram, HistogramSpec, DEFAULT_HISTOGRAM_SPAN_KT, EXP_UNDERFLOW,
};
use super::{check_temperature, rng_for};
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::units::{ln_binomial, thermal_energy};

const BATCH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Proposal {
    /// Every site occupied independently with probability ½.
    UniformBits,
    /// Occupation count uniform in `k_min..=k_max`, then a uniform subset of
    /// that size.
    StratifiedComposition { k_min: usize, k_max: usize },
}

impl Default for Proposal {
    fn default() -> Self {
        Proposal::StratifiedComposition { k_min: 0, k_max: 10 }
    }
}

impl fmt::Display for Proposal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Proposal::UniformBits => write!(f, "uniform-bits"),
            Proposal::StratifiedComposition { k_min, k_max } => write!(f, "stratified:{k_min}..{k_max}"),
        }
    }
}

impl FromStr for Proposal {
    type Err = Error;

    /// `uniform-bits`, `stratified` (0..10) or `stratified:K1..K2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown proposal '{s}'"));
        match s {
            "uniform-bits" | "uniform" => Ok(Proposal::UniformBits),
            "stratified" | "stratified-composition" => Ok(Proposal::default()),
            _ => {
                let range = s
                    .strip_prefix("stratified:")
                    .or_else(|| s.strip_prefix("stratified-composition:"))
                    .ok_or_else(bad)?;
                let (a, b) = range.split_once("..").ok_or_else(bad)?;
                let k_min = a.trim().parse().map_err(|_| bad())?;
                let k_max = b.trim().parse().map_err(|_| bad())?;
                Ok(Proposal::StratifiedComposition { k_min, k_max })
            }
        }
    }
}

impl Proposal {
    fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Proposal::UniformBits => Ok(()),
            Proposal::StratifiedComposition { k_min, k_max } => {
                if k_min > k_max || k_max > n {
                    Err(Error::InvalidArgument(format!(
                        "composition range {k_min}..{k_max} invalid for {n} sites"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Configuration {
        match *self {
            Proposal::UniformBits => {
                let mut c = Configuration::empty(n);
                for i in 0..n {
                    c.set(i, rng.random::<bool>());
                }
                c
            }
            Proposal::StratifiedComposition { k_min, k_max } => {
                let k = rng.random_range(k_min..=k_max);
                let sites = rand::seq::index::sample(rng, n, k).into_vec();
                Configuration::from_sites(n, &sites)
            }
        }
    }

    /// ln of (target-uniform mass / proposal mass) up to a constant.
    fn log_correction(&self, n: usize, k: usize) -> f64 {
        match self {
            Proposal::UniformBits => 0.0,
            Proposal::StratifiedComposition { .. } => ln_binomial(n, k),
        }
    }

    /// ln of the proposal normalisation entering the partition-function
    /// estimate.
    fn log_volume(&self, n: usize) -> f64 {
        match *self {
            Proposal::UniformBits => n as f64 * std::f64::consts::LN_2,
            Proposal::StratifiedComposition { k_min, k_max } => ((k_max - k_min + 1) as f64).ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmcEstimate {
    pub stats: BoltzmannStats,
    /// Kish effective sample size (Σw)²/Σw².
    pub ess: f64,
    /// Delta-method standard error of the mean concentration.
    pub std_error: f64,
    pub n_samples: usize,
    pub proposal: Proposal,
}

struct Pass2 {
    pmf: Vec<f64>,
    hist: EnergyHistogram,
    s0: f64,
    s2: f64,
    s2x: f64,
    s2xx: f64,
}

fn batch_ranges(n_samples: usize) -> Vec<(u64, usize)> {
    (0..n_samples.div_ceil(BATCH))
        .map(|b| (b as u64, BATCH.min(n_samples - b * BATCH)))
        .collect()
}

/// Self-normalized importance estimate of the Boltzmann statistics.
pub fn uniform_mc_stats(
    ham: &Hamiltonian,
    temperature_k: f64,
    n_samples: usize,
    proposal: Proposal,
    seed: u64,
    hist: HistogramSpec,
) -> Result<UmcEstimate> {
    check_temperature(temperature_k)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    if hist.bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    let n = ham.num_sites();
    proposal.validate(n)?;
    let kt = thermal_energy(temperature_k);
    let batches = batch_ranges(n_samples);

    let draw_batch = |id: u64, len: usize| {
        let mut rng = rng_for(seed, id);
        (0..len).map(move |_| proposal.draw(n, &mut rng))
    };

    // pass 1: observed energy range and smallest reduced cost
    // a = E/k_BT − ln(correction), the negated log-weight
    #[derive(Clone, Copy)]
    struct Range {
        e_min: f64,
        e_max: f64,
        a_min: f64,
    }
    let empty = Range { e_min: f64::INFINITY, e_max: f64::NEG_INFINITY, a_min: f64::INFINITY };
    let merge = |x: Range, y: Range| Range {
        e_min: x.e_min.min(y.e_min),
        e_max: x.e_max.max(y.e_max),
        a_min: x.a_min.min(y.a_min),
    };
    let reduced = |e: f64, k: usize| {
        let thermal = if kt.is_infinite() { 0.0 } else { e / kt };
        thermal - proposal.log_correction(n, k)
    };
    let range = batches
        .par_iter()
        .map(|&(id, len)| {
            draw_batch(id, len).fold(empty, |r, c| {
                let e = ham.linear_energy(&c) + ham.pair_energy(&c);
                merge(r, Range { e_min: e, e_max: e, a_min: reduced(e, c.count_ones()) })
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(empty, merge);
    let (e_min, e_max, a_min) = (range.e_min, range.e_max, range.a_min);

    let (lo, hi) = hist.range.unwrap_or((e_min, e_max.min(e_min + DEFAULT_HISTOGRAM_SPAN_KT * kt)));
    let template = EnergyHistogram::with_range(lo, hi, hist.bins);

    let parts: Vec<Pass2> = batches
        .par_iter()
        .map(|&(id, len)| {
            let mut acc = Pass2 { pmf: vec![0.0; n + 1], hist: template.clone(), s0: 0.0, s2: 0.0, s2x: 0.0, s2xx: 0.0 };
            for c in draw_batch(id, len) {
                let e = ham.linear_energy(&c) + ham.pair_energy(&c);
                let k = c.count_ones();
                let arg = reduced(e, k) - a_min;
                if !(arg < EXP_UNDERFLOW) {
                    continue;
                }
                let w = (-arg).exp();
                acc.pmf[k] += w;
                let b = acc.hist.bin(e);
                acc.hist.mass[b] += w;
                let x = k as f64;
                acc.s0 += w;
                acc.s2 += w * w;
                acc.s2x += w * w * x;
                acc.s2xx += w * w * x * x;
            }
            acc
        })
        .collect();

    let mut pmf = vec![0.0; n + 1];
    let mut histogram = template;
    let (mut s0, mut s2, mut s2x, mut s2xx) = (0.0, 0.0, 0.0, 0.0);
    for p in parts {
        pmf.iter_mut().zip(&p.pmf).for_each(|(a, b)| *a += b);
        histogram.mass.iter_mut().zip(&p.hist.mass).for_each(|(a, b)| *a += b);
        s0 += p.s0;
        s2 += p.s2;
        s2x += p.s2x;
        s2xx += p.s2xx;
    }
    pmf.iter_mut().for_each(|p| *p /= s0);
    histogram.normalize();
    let mean: f64 = pmf.iter().enumerate().map(|(c, p)| c as f64 * p).sum();
    let ess = s0 * s0 / s2;
    let var_num = (s2xx - 2.0 * mean * s2x + mean * mean * s2).max(0.0);
    let std_error = var_num.sqrt() / s0;
    let log_z = proposal.log_volume(n) - (n_samples as f64).ln() - a_min + s0.ln();

    Ok(UmcEstimate {
        stats: BoltzmannStats {
            n_sites: n,
            temperature_k,
            mean_concentration: mean,
            concentration_pmf: pmf,
            energy_histogram: histogram,
            log_z,
            ground_energy: e_min,
        },
        ess,
        std_error,
        n_samples,
        proposal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energetics::{ChemicalPotential, EnergyModel};
    use crate::hardware::HardwareSpec;
    use crate::lattice::{build_flake, FlakeShape};
    use crate::sampling::stats::enumerate_stats;

    fn ham12(mu: f64) -> Hamiltonian {
        let l = build_flake(FlakeShape::Rect { rows: 2, cols: 6 }).unwrap();
        let m = EnergyModel::from_distance(3.613e-4, 1.6122, HardwareSpec::default().c6_ev_um6()).unwrap();
        Hamiltonian::material(&m, &l, ChemicalPotential(mu)).unwrap()
    }

    #[test]
    fn parses_proposals() {
        assert_eq!("uniform-bits".parse::<Proposal>().unwrap(), Proposal::UniformBits);
        assert_eq!("stratified".parse::<Proposal>().unwrap(), Proposal::default());
        assert_eq!(
            "stratified:2..5".parse::<Proposal>().unwrap(),
            Proposal::StratifiedComposition { k_min: 2, k_max: 5 }
        );
        assert!("stratified:5".parse::<Proposal>().is_err());
        let p = Proposal::StratifiedComposition { k_min: 1, k_max: 3 };
        assert_eq!(p.to_string().parse::<Proposal>().unwrap(), p);
    }

    #[test]
    fn single_sample() {
        let e = uniform_mc_stats(&ham12(-3.7e-4), 9.7e-3, 1, Proposal::UniformBits, 3, HistogramSpec::default()).unwrap();
        let drawn = Proposal::UniformBits.draw(12, &mut rng_for(3, 0));
        assert_eq!(e.ess, 1.0);
        assert_eq!(e.stats.mean_concentration, drawn.count_ones() as f64);
    }

    #[test]
    fn infinite_temperature_is_plain_mean() {
        let h = ham12(-3.7e-4);
        let n_samples = 5000;
        let e = uniform_mc_stats(&h, f64::INFINITY, n_samples, Proposal::UniformBits, 8, HistogramSpec::default()).unwrap();
        let mut total = 0.0;
        for (id, len) in batch_ranges(n_samples) {
            let mut rng = rng_for(8, id);
            for _ in 0..len {
                total += Proposal::UniformBits.draw(12, &mut rng).count_ones() as f64;
            }
        }
        assert!((e.stats.mean_concentration - total / n_samples as f64).abs() < 1e-12);
        assert!((e.ess - n_samples as f64).abs() < 1e-6);
    }

    #[test]
    fn agrees_with_enumeration() {
        let h = ham12(-3.65e-4);
        let t = 9.7e-3;
        let exact = enumerate_stats(&h, t, HistogramSpec::default()).unwrap();
        let est = uniform_mc_stats(&h, t, 1_000_000, Proposal::UniformBits, 21, HistogramSpec::default()).unwrap();
        let diff = (est.stats.mean_concentration - exact.mean_concentration).abs();
        assert!(diff < 3.0 * est.std_error, "diff {diff} se {}", est.std_error);
        assert!((est.stats.log_z - exact.log_z).abs() < 0.05);
    }

    #[test]
    fn stratified_full_range_agrees_with_enumeration() {
        let h = ham12(-3.65e-4);
        let t = 9.7e-3;
        let exact = enumerate_stats(&h, t, HistogramSpec::default()).unwrap();
        let p = Proposal::StratifiedComposition { k_min: 0, k_max: 12 };
        let est = uniform_mc_stats(&h, t, 1_000_000, p, 22, HistogramSpec::default()).unwrap();
        let diff = (est.stats.mean_concentration - exact.mean_concentration).abs();
        assert!(diff < 3.0 * est.std_error, "diff {diff} se {}", est.std_error);
        assert!((est.stats.log_z - exact.log_z).abs() < 0.05);
    }

    #[test]
    fn deterministic_given_seed() {
        let h = ham12(-3.7e-4);
        let a = uniform_mc_stats(&h, 9.7e-3, 10_000, Proposal::default(), 5, HistogramSpec::default()).unwrap();
        let b = uniform_mc_stats(&h, 9.7e-3, 10_000, Proposal::default(), 5, HistogramSpec::default()).unwrap();
        assert_eq!(a, b);
    }
}
