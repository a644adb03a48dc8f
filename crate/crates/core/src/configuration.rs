//! Site occupation vectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported site count (the hardware atom limit).
pub const MAX_SITES: usize = 256;

const WORDS: usize = MAX_SITES / 64;

/// Fixed-width occupation vector, `n_i = 1` meaning site `i` carries a dopant.
///
/// Site 0 is stored in the most significant bit of the first word, so the
/// derived ordering is the lexicographic order of the bitstring written with
/// site 0 first.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    words: [u64; WORDS],
    len: u16,
}

#[inline]
fn locate(i: usize) -> (usize, u64) {
    (i / 64, 1u64 << (63 - (i % 64)))
}

impl Configuration {
    /// The all-empty configuration on `len` sites.
    pub fn empty(len: usize) -> Self {
        assert!(len <= MAX_SITES, "at most {MAX_SITES} sites supported");
        Self { words: [0; WORDS], len: len as u16 }
    }

    pub fn filled(len: usize) -> Self {
        let mut c = Self::empty(len);
        for i in 0..len {
            c.set(i, true);
        }
        c
    }

    /// Builds a configuration from a machine mask where bit `i` is site `i`.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        assert!(len <= 64);
        let mut c = Self::empty(len);
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            assert!(i < len, "mask has bits beyond site count");
            c.set(i, true);
            m &= m - 1;
        }
        c
    }

    /// Inverse of [`Configuration::from_mask`].
    pub fn to_mask(&self) -> u64 {
        assert!(self.len() <= 64);
        self.iter_ones().fold(0u64, |m, i| m | (1 << i))
    }

    pub fn from_sites(len: usize, sites: &[usize]) -> Self {
        let mut c = Self::empty(len);
        for &i in sites {
            c.set(i, true);
        }
        c
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len());
        let (w, b) = locate(i);
        self.words[w] & b != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len(), "site {i} out of range");
        let (w, b) = locate(i);
        if value {
            self.words[w] |= b;
        } else {
            self.words[w] &= !b;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len(), "site {i} out of range");
        let (w, b) = locate(i);
        self.words[w] ^= b;
    }

    /// Hamming weight ‖n‖₁.
    #[inline]
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_all_ones(&self) -> bool {
        self.count_ones() == self.len()
    }

    /// Occupied site indices in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut m = word;
            std::iter::from_fn(move || {
                if m == 0 {
                    return None;
                }
                let lz = m.leading_zeros() as usize;
                m &= !(1u64 << (63 - lz));
                Some(w * 64 + lz)
            })
        })
    }

    pub fn and(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.words.iter_mut().zip(other.words.iter()) {
            *a &= b;
        }
        out
    }

    /// Image of this configuration under a site permutation: site `i` moves to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::empty(self.len());
        for i in self.iter_ones() {
            out.set(perm[i], true);
        }
        out
    }

    pub fn check_len(&self, expected: usize) -> Result<()> {
        if self.len() != expected {
            return Err(Error::LengthMismatch { expected, found: self.len() });
        }
        Ok(())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({self})")
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() > MAX_SITES {
            return Err(Error::InvalidBitstring(s.to_string()));
        }
        let mut c = Self::empty(s.len());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => c.set(i, true),
                _ => return Err(Error::InvalidBitstring(s.to_string())),
            }
        }
        Ok(c)
    }
}

impl Serialize for Configuration {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
