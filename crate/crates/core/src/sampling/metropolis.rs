//! Single-bit-flip Metropolis sampler, one independent chain per shot.

use rand::Rng;
use rayon::prelude::*;

use super::{check_temperature, rng_for, SampleSet};
use crate::configuration::Configuration;
use crate::error::Result;
use crate::hamiltonian::Hamiltonian;
use crate::units::thermal_energy;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetropolisConfig {
    /// Full sweeps (N attempted flips each) before the shot is read out;
    /// `None` means 10·N.
    pub burn_in_sweeps: Option<usize>,
}

impl MetropolisConfig {
    pub fn sweeps_for(&self, n: usize) -> usize {
        self.burn_in_sweeps.unwrap_or(10 * n)
    }
}

fn run_chain(ham: &Hamiltonian, adj: &[Vec<(usize, f64)>], kt: f64, sweeps: usize, seed: u64, shot: u64) -> Configuration {
    let n = ham.num_sites();
    let mut rng = rng_for(seed, shot);
    let mut config = Configuration::empty(n);
    for i in 0..n {
        config.set(i, rng.random::<bool>());
    }
    if n == 0 {
        return config;
    }
    for _ in 0..sweeps * n {
        let i = rng.random_range(0..n);
        let de = ham.flip_delta(adj, &config, i);
        let u: f64 = rng.random();
        if de <= 0.0 || u < (-de / kt).exp() {
            config.flip(i);
        }
    }
    config
}

/// Draws `shots` configurations, each the end state of its own chain started
/// from a uniformly random configuration. Shot `s` uses the sub-seed
/// `(seed, s)`, so the output does not depend on the thread count.
pub fn metropolis_sample(
    ham: &Hamiltonian,
    temperature_k: f64,
    shots: usize,
    config: MetropolisConfig,
    seed: u64,
) -> Result<SampleSet> {
    check_temperature(temperature_k)?;
    let kt = thermal_energy(temperature_k);
    let adj = ham.neighbour_lists();
    let sweeps = config.sweeps_for(ham.num_sites());
    let draws: Vec<Configuration> = (0..shots as u64)
        .into_par_iter()
        .map(|s| run_chain(ham, &adj, kt, sweeps, seed, s))
        .collect();
    let mut set = SampleSet::new(shots, seed);
    set.context.temperature_k = Some(temperature_k);
    draws.into_iter().for_each(|c| set.push_valid(c));
    Ok(set)
}
