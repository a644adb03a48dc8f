//! Grand-canonical statistics: exhaustive enumeration, Monte Carlo estimates,
//! Boltzmann samplers and the mock QPU.

pub mod engine;
pub mod exact;
pub mod metropolis;
pub mod qpu;
pub mod stats;
pub mod sweep;
pub mod temperature;
pub mod umc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::configuration::Configuration;
use crate::error::{Error, Result};

pub use engine::{Block, Enumerator, ENUMERATION_CAP};
pub use exact::{exact_boltzmann_sample, ExactSampler, EXACT_SAMPLER_CAP};
pub use metropolis::{metropolis_sample, MetropolisConfig};
pub use qpu::{mock_qpu_run, qpu_mean_concentration, NoiseModel, ThermalBackend};
pub use stats::{
    enumerate_stats, log_sum_exp, sample_energy_histogram, softmax, tvd, BoltzmannStats, EnergyHistogram,
    HistogramSpec,
};
pub use sweep::{SweepPoint, SweepResult};
pub use temperature::{default_temperature_grid, fit_effective_temperature, CanonicalProfile, TemperatureFit};
pub use umc::{uniform_mc_stats, Proposal, UmcEstimate};

/// Temperatures must be positive; `f64::INFINITY` stands for β = 0.
pub(crate) fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(Error::NonPositiveTemperature(t))
    }
}

/// SplitMix64 finalizer over (seed, stream): independent sub-seeds for
/// parallel ranges and for the separate random streams of one run.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, stream))
}

/// One measured shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub bits: Configuration,
    pub fill: Configuration,
    pub valid: bool,
}

impl ShotRecord {
    pub fn new(bits: Configuration, fill: Configuration) -> Self {
        ShotRecord { bits, fill, valid: fill.is_all_ones() }
    }
}

/// Parameters a sample set was drawn at.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleContext {
    pub detuning_ev: Option<f64>,
    pub mu_ev: Option<f64>,
    pub temperature_k: Option<f64>,
    pub r_nn_um: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleSet {
    pub records: Vec<ShotRecord>,
    pub shots_requested: usize,
    pub seed: u64,
    pub context: SampleContext,
}

impl SampleSet {
    pub fn new(shots_requested: usize, seed: u64) -> Self {
        SampleSet { records: Vec::with_capacity(shots_requested), shots_requested, seed, context: SampleContext::default() }
    }

    /// Appends a shot taken with every site filled.
    pub fn push_valid(&mut self, bits: Configuration) {
        let fill = Configuration::filled(bits.len());
        self.records.push(ShotRecord { bits, fill, valid: true });
    }

    pub fn push(&mut self, record: ShotRecord) {
        self.records.push(record);
    }

    pub fn valid_records(&self) -> impl Iterator<Item = &ShotRecord> + '_ {
        self.records.iter().filter(|r| r.valid)
    }

    pub fn num_valid(&self) -> usize {
        self.valid_records().count()
    }

    /// Valid shots over requested shots.
    pub fn retained_fraction(&self) -> f64 {
        if self.shots_requested == 0 {
            0.0
        } else {
            self.num_valid() as f64 / self.shots_requested as f64
        }
    }

    /// Empirical distribution of occupation counts 0..=n over valid shots.
    pub fn concentration_pmf(&self, n_sites: usize) -> Result<Vec<f64>> {
        let mut pmf = vec![0.0; n_sites + 1];
        let mut total = 0usize;
        for r in self.valid_records() {
            r.bits.check_len(n_sites)?;
            pmf[r.bits.count_ones()] += 1.0;
            total += 1;
        }
        if total == 0 {
            return Err(Error::NoValidRecords);
        }
        pmf.iter_mut().for_each(|p| *p /= total as f64);
        Ok(pmf)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut set = SampleSet::default();
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: ShotRecord = serde_json::from_str(line)
                .map_err(|e| Error::Parse { line: k + 1, message: e.to_string() })?;
            if r.valid != r.fill.is_all_ones() {
                return Err(Error::Parse { line: k + 1, message: "valid flag disagrees with fill mask".into() });
            }
            set.records.push(r);
        }
        set.shots_requested = set.records.len();
        Ok(set)
    }
}
