//! Mock QPU: a thermal sampler behind an occupancy and readout noise model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::exact::{ExactSampler, EXACT_SAMPLER_CAP};
use super::metropolis::{metropolis_sample, MetropolisConfig};
use super::{check_temperature, rng_for, SampleSet, ShotRecord};
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::hardware::{validate_layout, HardwareSpec, Layout};

const FILL_STREAM: u64 = 0x0f11;
const FLIP_STREAM: u64 = 0x0f1e;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Per-site probability that a tweezer is loaded.
    pub p_fill: f64,
    /// Per-site probability that a readout bit is flipped.
    pub p_readout_flip: f64,
}

impl NoiseModel {
    pub const NOISELESS: NoiseModel = NoiseModel { p_fill: 1.0, p_readout_flip: 0.0 };

    /// Fill probability giving the observed average retained fraction of
    /// 60.5 % on a 28-site array.
    pub fn default_p_fill() -> f64 {
        0.605f64.powf(1.0 / 28.0)
    }

    fn validate(&self) -> Result<()> {
        for (name, p) in [("p_fill", self.p_fill), ("p_readout_flip", self.p_readout_flip)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { p_fill: Self::default_p_fill(), p_readout_flip: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThermalBackend {
    /// Exact sampler up to its site cap, Metropolis above.
    #[default]
    Auto,
    Exact,
    Metropolis,
}

impl std::str::FromStr for ThermalBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(ThermalBackend::Auto),
            "exact" => Ok(ThermalBackend::Exact),
            "metropolis" => Ok(ThermalBackend::Metropolis),
            _ => Err(Error::InvalidArgument(format!("unknown backend '{s}'"))),
        }
    }
}

impl ThermalBackend {
    /// Draws `shots` thermal configurations.
    pub fn sample(
        self,
        ham: &Hamiltonian,
        temperature_k: f64,
        shots: usize,
        metropolis: MetropolisConfig,
        seed: u64,
    ) -> Result<Vec<Configuration>> {
        let use_exact = match self {
            ThermalBackend::Auto => ham.num_sites() <= EXACT_SAMPLER_CAP,
            ThermalBackend::Exact => true,
            ThermalBackend::Metropolis => false,
        };
        check_temperature(temperature_k)?;
        if shots == 0 {
            return Ok(Vec::new());
        }
        if use_exact {
            Ok(ExactSampler::new(ham, temperature_k)?.sample(shots, seed))
        } else {
            let set = metropolis_sample(ham, temperature_k, shots, metropolis, seed)?;
            Ok(set.records.into_iter().map(|r| r.bits).collect())
        }
    }
}

/// Emulated device run at detuning `detuning_ev` and device temperature.
///
/// Each shot draws a fill mask; only fully loaded shots are sampled from the
/// thermal backend (seeded with `seed` itself, so a noiseless run reproduces
/// the backend exactly) and then passed through readout flips. Shots with a
/// loading defect are kept as invalid records with all-zero bits.
#[allow(clippy::too_many_arguments)]
pub fn mock_qpu_run(
    layout: &Layout,
    spec: &HardwareSpec,
    detuning_ev: f64,
    temperature_k: f64,
    shots: usize,
    noise: NoiseModel,
    backend: ThermalBackend,
    seed: u64,
) -> Result<SampleSet> {
    validate_layout(layout, spec).into_result()?;
    noise.validate()?;
    let n = layout.num_atoms();
    let ham = Hamiltonian::hardware(layout, spec, detuning_ev);

    let mut fill_rng = rng_for(seed, FILL_STREAM);
    let fills: Vec<Configuration> = (0..shots)
        .map(|_| {
            let mut f = Configuration::empty(n);
            for i in 0..n {
                f.set(i, fill_rng.random_bool(noise.p_fill));
            }
            f
        })
        .collect();
    let n_valid = fills.iter().filter(|f| f.is_all_ones()).count();
    let mut thermal = backend
        .sample(&ham, temperature_k, n_valid, MetropolisConfig::default(), seed)?
        .into_iter();

    let mut flip_rng = rng_for(seed, FLIP_STREAM);
    let mut set = SampleSet::new(shots, seed);
    set.context.detuning_ev = Some(detuning_ev);
    set.context.temperature_k = Some(temperature_k);
    set.context.r_nn_um = Some(layout.r_nn_um());
    for fill in fills {
        let bits = if fill.is_all_ones() {
            let mut b = thermal.next().expect("one draw per valid shot");
            if noise.p_readout_flip > 0.0 {
                for i in 0..n {
                    if flip_rng.random_bool(noise.p_readout_flip) {
                        b.flip(i);
                    }
                }
            }
            b
        } else {
            Configuration::empty(n)
        };
        set.push(ShotRecord::new(bits, fill));
    }
    Ok(set)
}

/// Mean Hamming weight over the valid records.
pub fn qpu_mean_concentration(samples: &SampleSet) -> Result<f64> {
    let (sum, count) = samples
        .valid_records()
        .fold((0usize, 0usize), |(s, c), r| (s + r.bits.count_ones(), c + 1));
    if count == 0 {
        return Err(Error::NoValidRecords);
    }
    Ok(sum as f64 / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardware::scale_to_hardware;
    use crate::lattice::{build_flake, FlakeShape};

    fn layout(shape: FlakeShape) -> Layout {
        scale_to_hardware(&build_flake(shape).unwrap(), 4.0).unwrap()
    }

    #[test]
    fn noiseless_run_equals_backend() {
        let l = layout(FlakeShape::Rect { rows: 2, cols: 5 });
        let spec = HardwareSpec::default();
        let run = mock_qpu_run(&l, &spec, 3e-8, 41e-6, 300, NoiseModel::NOISELESS, ThermalBackend::Auto, 17).unwrap();
        let ham = Hamiltonian::hardware(&l, &spec, 3e-8);
        let direct = ExactSampler::new(&ham, 41e-6).unwrap().sample(300, 17);
        assert_eq!(run.records.iter().map(|r| r.bits).collect::<Vec<_>>(), direct);
        assert_eq!(run.retained_fraction(), 1.0);
    }

    #[test]
    fn retained_fraction_follows_bernoulli_product() {
        let l = layout(FlakeShape::Flake28);
        let noise = NoiseModel { p_fill: 0.99, p_readout_flip: 0.0 };
        let shots = 10_000;
        // very negative detuning keeps the thermal draw trivial and fast
        let run = mock_qpu_run(&l, &HardwareSpec::default(), -8e-8, 41e-6, shots, noise, ThermalBackend::Metropolis, 3);
        let run = run.unwrap();
        let p = 0.99f64.powi(28);
        let sigma = (p * (1.0 - p) / shots as f64).sqrt();
        assert!((run.retained_fraction() - p).abs() < 3.0 * sigma);
        for r in &run.records {
            assert_eq!(r.valid, r.fill.is_all_ones());
            if !r.valid {
                assert_eq!(r.bits.count_ones(), 0);
            }
        }
    }

    #[test]
    fn default_fill_probability() {
        let p = NoiseModel::default_p_fill();
        assert!((p.powi(28) - 0.605).abs() < 1e-12);
    }

    #[test]
    fn invalid_layout_is_rejected() {
        let l = scale_to_hardware(&build_flake(FlakeShape::Rect { rows: 1, cols: 2 }).unwrap(), 3.9).unwrap();
        let r = mock_qpu_run(&l, &HardwareSpec::default(), 0.0, 41e-6, 10, NoiseModel::NOISELESS, ThermalBackend::Auto, 0);
        assert!(r.is_err());
    }

    #[test]
    fn mean_concentration_examples() {
        let mut s = SampleSet::new(2, 0);
        s.push_valid("0000".parse().unwrap());
        assert_eq!(qpu_mean_concentration(&s).unwrap(), 0.0);
        let mut s = SampleSet::new(2, 0);
        s.push_valid("0011".parse().unwrap());
        s.push_valid("0001".parse().unwrap());
        assert_eq!(qpu_mean_concentration(&s).unwrap(), 1.5);
        let mut s = SampleSet::new(2, 0);
        s.push_valid("0011".parse().unwrap());
        s.push(ShotRecord::new("1111".parse().unwrap(), "0111".parse().unwrap()));
        assert_eq!(qpu_mean_concentration(&s).unwrap(), 2.0);
        assert!(matches!(qpu_mean_concentration(&SampleSet::new(1, 0)), Err(Error::NoValidRecords)));
    }

    #[test]
    fn readout_flips_change_bits() {
        let l = layout(FlakeShape::Rect { rows: 2, cols: 3 });
        let noise = NoiseModel { p_fill: 1.0, p_readout_flip: 0.5 };
        let run = mock_qpu_run(&l, &HardwareSpec::default(), -8e-8, 41e-6, 2000, noise, ThermalBackend::Exact, 1).unwrap();
        let mean = qpu_mean_concentration(&run).unwrap();
        assert!((mean - 3.0).abs() < 0.15, "{mean}");
    }
}
