//! Exact i.i.d. Boltzmann sampling by streaming inverse CDF.
//!
//! Pass 1 records, for every enumeration block, its minimum energy and the
//! sum of weights relative to that minimum. Shots are located in a block by
//! binary search over the block prefix sums; pass 2 replays only the chunks
//! holding a target block and scans inside it. Nothing of size 2^N is stored.

use rand::Rng;

use super::engine::Enumerator;
use super::stats::EXP_UNDERFLOW;
use super::{check_temperature, rng_for, SampleSet};
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::units::thermal_energy;

/// Largest site count accepted by the exact sampler.
pub const EXACT_SAMPLER_CAP: usize = 28;

#[derive(Clone, Copy)]
struct BlockSummary {
    min: f64,
    /// Σ exp(−(E − min)/k_BT) over the block.
    sum: f64,
}

/// Sampler with the pass-1 block table precomputed, reusable across draws.
pub struct ExactSampler {
    enumerator: Enumerator,
    kt: f64,
    n: usize,
    blocks_per_chunk: usize,
    summaries: Vec<BlockSummary>,
    /// Inclusive prefix sums of global block weights.
    prefix: Vec<f64>,
}

#[inline]
fn weight(de: f64, kt: f64) -> f64 {
    if de < EXP_UNDERFLOW * kt {
        (-de / kt).exp()
    } else {
        0.0
    }
}

impl ExactSampler {
    pub fn new(ham: &Hamiltonian, temperature_k: f64) -> Result<Self> {
        check_temperature(temperature_k)?;
        let n = ham.num_sites();
        if n > EXACT_SAMPLER_CAP {
            return Err(Error::OverEnumerationCap { sites: n, cap: EXACT_SAMPLER_CAP });
        }
        let enumerator = Enumerator::new(ham)?;
        let kt = thermal_energy(temperature_k);
        let blocks_per_chunk = enumerator.blocks_per_chunk();

        let summaries: Vec<BlockSummary> = enumerator
            .run(
                |_| Vec::with_capacity(blocks_per_chunk),
                |acc: &mut Vec<BlockSummary>, b| {
                    let mut min = f64::INFINITY;
                    for x in 0..b.len() {
                        min = min.min(b.energy(x));
                    }
                    let sum = (0..b.len()).map(|x| weight(b.energy(x) - min, kt)).sum();
                    acc.push(BlockSummary { min, sum });
                },
            )
            .into_iter()
            .flatten()
            .collect();

        let e_min = summaries.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
        let mut prefix = Vec::with_capacity(summaries.len());
        let mut running = 0.0;
        for s in &summaries {
            running += s.sum * weight(s.min - e_min, kt);
            prefix.push(running);
        }
        Ok(ExactSampler { enumerator, kt, n, blocks_per_chunk, summaries, prefix })
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    /// Draws `shots` configurations from uniforms seeded by `seed`.
    pub fn sample(&self, shots: usize, seed: u64) -> Vec<Configuration> {
        if shots == 0 {
            return Vec::new();
        }
        let total = *self.prefix.last().expect("at least one block");
        let mut rng = rng_for(seed, 0);
        // (block, fraction of the block's weight, shot index)
        let mut targets: Vec<(usize, f64, usize)> = (0..shots)
            .map(|s| {
                let u: f64 = rng.random::<f64>() * total;
                let b = self.prefix.partition_point(|&p| p <= u).min(self.prefix.len() - 1);
                let before = if b == 0 { 0.0 } else { self.prefix[b - 1] };
                let width = self.prefix[b] - before;
                let frac = if width > 0.0 { ((u - before) / width).clamp(0.0, 1.0) } else { 0.0 };
                (b, frac, s)
            })
            .collect();
        targets.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

        let mut chunks: Vec<usize> = targets.iter().map(|t| t.0 / self.blocks_per_chunk).collect();
        chunks.dedup();
        let per_chunk: Vec<&[(usize, f64, usize)]> = chunks
            .iter()
            .map(|&c| {
                let lo = targets.partition_point(|t| t.0 / self.blocks_per_chunk < c);
                let hi = targets.partition_point(|t| t.0 / self.blocks_per_chunk <= c);
                &targets[lo..hi]
            })
            .collect();

        let kt = self.kt;
        let n = self.n;
        let found = self.enumerator.run_chunks(
            &chunks,
            |c| (c, 0usize, Vec::new()),
            |(c, step, out): &mut (usize, usize, Vec<(usize, u64)>), b| {
                let block = *c * self.blocks_per_chunk + *step;
                *step += 1;
                let k = chunks.binary_search(c).expect("scheduled chunk");
                let list = per_chunk[k];
                let lo = list.partition_point(|t| t.0 < block);
                let hi = list.partition_point(|t| t.0 <= block);
                if lo == hi {
                    return;
                }
                let summary = self.summaries[block];
                let mut cum = 0.0;
                let mut last_nonzero = 0;
                let mut x = 0;
                for t in &list[lo..hi] {
                    let goal = t.1 * summary.sum;
                    while x < b.len() {
                        let w = weight(b.energy(x) - summary.min, kt);
                        if w > 0.0 {
                            last_nonzero = x;
                        }
                        if cum + w > goal {
                            break;
                        }
                        cum += w;
                        x += 1;
                    }
                    let pick = if x < b.len() { x } else { last_nonzero };
                    out.push((t.2, b.mask(pick)));
                }
            },
        );

        let mut result = vec![Configuration::empty(n); shots];
        for (_, _, picks) in found {
            for (s, mask) in picks {
                result[s] = Configuration::from_mask(n, mask);
            }
        }
        result
    }
}

/// Draws `shots` i.i.d. configurations from the exact Boltzmann distribution.
pub fn exact_boltzmann_sample(ham: &Hamiltonian, temperature_k: f64, shots: usize, seed: u64) -> Result<SampleSet> {
    let mut set = SampleSet::new(shots, seed);
    set.context.temperature_k = Some(temperature_k);
    if shots == 0 {
        check_temperature(temperature_k)?;
        return Ok(set);
    }
    for c in ExactSampler::new(ham, temperature_k)?.sample(shots, seed) {
        set.push_valid(c);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardware::{scale_to_hardware, HardwareSpec};
    use crate::lattice::{build_flake, FlakeShape};
    use crate::sampling::stats::{enumerate_stats, tvd, HistogramSpec};

    fn flake_ham(rows: usize, cols: usize, detuning: f64) -> Hamiltonian {
        let l = build_flake(FlakeShape::Rect { rows, cols }).unwrap();
        Hamiltonian::hardware(&scale_to_hardware(&l, 4.0).unwrap(), &HardwareSpec::default(), detuning)
    }

    #[test]
    fn two_site_toy_matches_exact_pmf() {
        let h = flake_ham(1, 2, 0.0);
        let exact = enumerate_stats(&h, 41e-6, HistogramSpec::default()).unwrap();
        let set = exact_boltzmann_sample(&h, 41e-6, 100_000, 5).unwrap();
        let d = tvd(&set.concentration_pmf(2).unwrap(), &exact.concentration_pmf).unwrap();
        assert!(d < 0.01, "tvd {d}");
        assert!(set.records.iter().all(|r| r.bits.count_ones() < 2));
    }

    #[test]
    fn cold_limit_returns_ground_state() {
        // negative detuning under the default sign makes occupation costly
        let h = flake_ham(2, 3, -5e-8);
        let set = exact_boltzmann_sample(&h, 1e-9, 200, 1).unwrap();
        assert!(set.records.iter().all(|r| r.bits.count_ones() == 0));
    }

    #[test]
    fn zero_shots_is_empty() {
        let set = exact_boltzmann_sample(&flake_ham(1, 2, 0.0), 41e-6, 0, 0).unwrap();
        assert!(set.records.is_empty());
    }

    #[test]
    fn seeded_and_deterministic() {
        let h = flake_ham(3, 5, 3e-8);
        let a = exact_boltzmann_sample(&h, 41e-6, 500, 11).unwrap();
        let b = exact_boltzmann_sample(&h, 41e-6, 500, 11).unwrap();
        let c = exact_boltzmann_sample(&h, 41e-6, 500, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn multi_block_sampling_tracks_enumeration() {
        // 18 sites spans several blocks and chunks
        let h = flake_ham(3, 6, 4e-8);
        let exact = enumerate_stats(&h, 41e-6, HistogramSpec::default()).unwrap();
        let set = exact_boltzmann_sample(&h, 41e-6, 100_000, 3).unwrap();
        let d = tvd(&set.concentration_pmf(18).unwrap(), &exact.concentration_pmf).unwrap();
        let k = exact.concentration_pmf.len() as f64;
        assert!(d < 3.0 * (k / 1e5).sqrt(), "tvd {d}");
    }

    #[test]
    fn over_cap_is_rejected() {
        let h = Hamiltonian::new(vec![0.0; 29], vec![]).unwrap();
        assert!(matches!(ExactSampler::new(&h, 1.0), Err(Error::OverEnumerationCap { sites: 29, cap: 28 })));
    }
}
