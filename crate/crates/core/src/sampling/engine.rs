//! Streaming exhaustive enumeration of all 2^N configurations.
//!
//! Sites are split into a low group (up to [`LOW_BITS`] sites) and a high
//! group. Every low-group configuration is tabulated once: its on-site sum,
//! its internal pair energy, and for each high site the coupling field it
//! produces. High-group configurations are then walked in Gray-code order,
//! one bit flip per step, and each flip updates the per-low-configuration
//! cross-term vector with a single vector add. A *block* is the set of 2^low
//! configurations sharing one high-group state; its energies are a constant
//! plus a table lookup, which keeps the inner loops branch-free.
//!
//! The high group is further split into independent chunks (fixed top bits)
//! that run in parallel. Each chunk re-evaluates its starting state directly,
//! and chunk results are always reduced in chunk order, so outputs do not
//! depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;

/// Largest site count accepted for exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 30;

/// Size of the tabulated low site group.
pub const LOW_BITS: usize = 12;

const MAX_CHUNK_BITS: usize = 6;

/// Energies of the 2^low configurations sharing one high-group state.
pub struct Block<'a> {
    /// Occupation mask of the high sites (bit `i` = site `i`).
    pub hi_mask: u64,
    pub hi_count: u32,
    pub hi_linear: f64,
    pub hi_pair: f64,
    /// On-site sum of each low configuration.
    pub lo_linear: &'a [f64],
    /// Pair energy of each low configuration plus its cross terms with the
    /// current high state.
    pub lo_pair: &'a [f64],
    pub lo_count: &'a [u8],
}

impl Block<'_> {
    #[inline]
    pub fn len(&self) -> usize {
        self.lo_linear.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.lo_linear.is_empty()
    }

    #[inline]
    pub fn mask(&self, x: usize) -> u64 {
        self.hi_mask | x as u64
    }

    #[inline]
    pub fn count(&self, x: usize) -> usize {
        (self.hi_count + self.lo_count[x] as u32) as usize
    }

    #[inline]
    pub fn linear(&self, x: usize) -> f64 {
        self.hi_linear + self.lo_linear[x]
    }

    #[inline]
    pub fn pair(&self, x: usize) -> f64 {
        self.hi_pair + self.lo_pair[x]
    }

    #[inline]
    pub fn energy(&self, x: usize) -> f64 {
        self.linear(x) + self.pair(x)
    }
}

pub struct Enumerator {
    n: usize,
    lo: usize,
    chunk_bits: usize,
    onsite: Vec<f64>,
    /// Dense couplings, row-major n × n.
    coupling: Vec<f64>,
    lo_linear: Vec<f64>,
    lo_pair: Vec<f64>,
    lo_count: Vec<u8>,
    /// `cross[k][x]`: field on high site `lo + k` from low configuration `x`.
    cross: Vec<Vec<f64>>,
}

impl Enumerator {
    pub fn new(ham: &Hamiltonian) -> Result<Self> {
        let n = ham.num_sites();
        if n > ENUMERATION_CAP {
            return Err(Error::OverEnumerationCap { sites: n, cap: ENUMERATION_CAP });
        }
        let lo = n.min(LOW_BITS);
        let hi = n - lo;
        let coupling = ham.dense_couplings();
        let onsite = ham.onsite().to_vec();
        let size = 1usize << lo;

        let mut lo_linear = vec![0.0; size];
        let mut lo_pair = vec![0.0; size];
        let mut lo_count = vec![0u8; size];
        for x in 1..size {
            let b = x.trailing_zeros() as usize;
            let rest = x & (x - 1);
            lo_linear[x] = lo_linear[rest] + onsite[b];
            lo_count[x] = lo_count[rest] + 1;
            let mut field = 0.0;
            let mut r = rest;
            while r != 0 {
                let j = r.trailing_zeros() as usize;
                field += coupling[b * n + j];
                r &= r - 1;
            }
            lo_pair[x] = lo_pair[rest] + field;
        }

        let cross = (lo..n)
            .map(|i| {
                let mut t = vec![0.0; size];
                for x in 1..size {
                    let b = x.trailing_zeros() as usize;
                    t[x] = t[x & (x - 1)] + coupling[i * n + b];
                }
                t
            })
            .collect();

        Ok(Enumerator {
            n,
            lo,
            chunk_bits: hi.min(MAX_CHUNK_BITS),
            onsite,
            coupling,
            lo_linear,
            lo_pair,
            lo_count,
            cross,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn num_chunks(&self) -> usize {
        1 << self.chunk_bits
    }

    /// Number of blocks visited per chunk.
    pub fn blocks_per_chunk(&self) -> usize {
        1 << (self.n - self.lo - self.chunk_bits)
    }

    pub fn num_configurations(&self) -> u64 {
        1u64 << self.n
    }

    /// Runs `visit` over every block of every chunk. Each chunk gets its own
    /// state from `init`; states are returned in chunk order.
    pub fn run<S, I, F>(&self, init: I, visit: F) -> Vec<S>
    where
        S: Send,
        I: Fn(usize) -> S + Sync,
        F: Fn(&mut S, &Block<'_>) + Sync,
    {
        (0..self.num_chunks())
            .into_par_iter()
            .map(|c| {
                let mut state = init(c);
                self.run_chunk(c, |b| visit(&mut state, b));
                state
            })
            .collect()
    }

    /// Same as [`Enumerator::run`] restricted to the listed chunks, in the
    /// order given.
    pub fn run_chunks<S, I, F>(&self, chunks: &[usize], init: I, visit: F) -> Vec<S>
    where
        S: Send,
        I: Fn(usize) -> S + Sync,
        F: Fn(&mut S, &Block<'_>) + Sync,
    {
        chunks
            .par_iter()
            .map(|&c| {
                let mut state = init(c);
                self.run_chunk(c, |b| visit(&mut state, b));
                state
            })
            .collect()
    }

    /// Sequential visit of every configuration as (mask, count, linear, pair).
    pub fn for_each(&self, mut f: impl FnMut(u64, usize, f64, f64)) {
        for c in 0..self.num_chunks() {
            self.run_chunk(c, |b| {
                for x in 0..b.len() {
                    f(b.mask(x), b.count(x), b.linear(x), b.pair(x));
                }
            });
        }
    }

    /// Energy of every configuration indexed by mask. Memory grows as 2^N, so
    /// this is only meant for small systems.
    pub fn energy_table(&self) -> Result<Vec<f64>> {
        if self.n > 24 {
            return Err(Error::InvalidArgument("energy table limited to 24 sites".into()));
        }
        let mut out = vec![0.0; 1 << self.n];
        self.for_each(|m, _, l, p| out[m as usize] = l + p);
        Ok(out)
    }

    fn run_chunk(&self, chunk: usize, mut visit: impl FnMut(&Block<'_>)) {
        let n = self.n;
        let lo = self.lo;
        let mid = n - lo - self.chunk_bits;
        let mut hi_mask: u64 = (chunk as u64) << (lo + mid);

        // direct evaluation of the chunk's starting high state
        let mut hi_linear = 0.0;
        let mut hi_pair = 0.0;
        let mut pair_buf = self.lo_pair.clone();
        let hi_sites: Vec<usize> = (lo..n).filter(|&i| hi_mask >> i & 1 == 1).collect();
        for (a, &i) in hi_sites.iter().enumerate() {
            hi_linear += self.onsite[i];
            for &j in &hi_sites[..a] {
                hi_pair += self.coupling[i * n + j];
            }
            for (p, c) in pair_buf.iter_mut().zip(&self.cross[i - lo]) {
                *p += c;
            }
        }
        let mut hi_count = hi_sites.len() as u32;

        for step in 0..(1u64 << mid) {
            if step > 0 {
                let i = lo + step.trailing_zeros() as usize;
                let adding = hi_mask >> i & 1 == 0;
                // field on site i from the other occupied high sites
                let mut field = 0.0;
                let mut m = hi_mask & !(1u64 << i);
                while m != 0 {
                    let j = m.trailing_zeros() as usize;
                    field += self.coupling[i * n + j];
                    m &= m - 1;
                }
                let cross = &self.cross[i - lo];
                if adding {
                    hi_linear += self.onsite[i];
                    hi_pair += field;
                    hi_count += 1;
                    for (p, c) in pair_buf.iter_mut().zip(cross) {
                        *p += c;
                    }
                } else {
                    hi_linear -= self.onsite[i];
                    hi_pair -= field;
                    hi_count -= 1;
                    for (p, c) in pair_buf.iter_mut().zip(cross) {
                        *p -= c;
                    }
                }
                hi_mask ^= 1u64 << i;
            }
            visit(&Block {
                hi_mask,
                hi_count,
                hi_linear,
                hi_pair,
                lo_linear: &self.lo_linear,
                lo_pair: &pair_buf,
                lo_count: &self.lo_count,
            });
        }
    }
}
