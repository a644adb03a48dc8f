//! Lattice symmetry groups, canonical forms and orbit bookkeeping.
//!
//! Candidate isometries are the twelve operations of the hexagonal point group
//! composed with the translations that send site 0 to every site. A candidate
//! is kept when it maps the site set onto itself (modulo the cell) and
//! preserves every minimum-image distance.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::fitting::DatasetRecord;
use crate::lattice::{add, sub, to_fractional, Lattice};

const MATCH_TOLERANCE: f64 = 1e-6;
const DISTANCE_TOLERANCE: f64 = 1e-9;

/// Rotation by k·60° (k = 0..5) or reflection across the line at k·30°
/// (k = 6..11).
fn point_op(k: usize) -> ([[f64; 2]; 2], String) {
    if k < 6 {
        let t = (k as f64) * std::f64::consts::PI / 3.0;
        let (s, c) = t.sin_cos();
        ([[c, -s], [s, c]], format!("rotation {}°", 60 * k))
    } else {
        let m = k - 6;
        let t = 2.0 * (m as f64) * std::f64::consts::PI / 6.0;
        let (s, c) = t.sin_cos();
        ([[c, s], [s, -c]], format!("mirror {}°", 30 * m))
    }
}

#[inline]
fn apply(m: [[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() < MATCH_TOLERANCE
}

/// A group of site permutations; `perm[i]` is the image of site `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryGroup {
    pub permutations: Vec<Vec<usize>>,
    /// How each element was generated.
    pub notes: Vec<String>,
}

impl SymmetryGroup {
    fn from_candidates(n: usize, candidates: Vec<(Vec<usize>, String)>) -> Self {
        let mut seen = BTreeMap::new();
        for (p, note) in candidates {
            seen.entry(p).or_insert(note);
        }
        let identity: Vec<usize> = (0..n).collect();
        seen.entry(identity).or_insert_with(|| "identity".into());
        let (permutations, notes) = seen.into_iter().unzip();
        SymmetryGroup { permutations, notes }
    }

    pub fn order(&self) -> usize {
        self.permutations.len()
    }

    pub fn num_sites(&self) -> usize {
        self.permutations.first().map_or(0, Vec::len)
    }

    pub fn contains(&self, perm: &[usize]) -> bool {
        self.permutations.binary_search_by(|p| p.as_slice().cmp(perm)).is_ok()
    }

    /// Identity present, every element a bijection, closed under composition.
    pub fn verify_closure(&self) -> bool {
        let n = self.num_sites();
        let identity: Vec<usize> = (0..n).collect();
        if !self.contains(&identity) {
            return false;
        }
        let bijective = self.permutations.iter().all(|p| {
            let mut hit = vec![false; n];
            p.iter().all(|&j| j < n && !std::mem::replace(&mut hit[j], true))
        });
        if !bijective {
            return false;
        }
        let set: HashSet<&Vec<usize>> = self.permutations.iter().collect();
        self.permutations.par_iter().all(|a| {
            self.permutations.iter().all(|b| {
                let composed: Vec<usize> = a.iter().map(|&i| b[i]).collect();
                set.contains(&composed)
            })
        })
    }

    /// Every element preserves all pairwise (minimum-image) distances.
    pub fn preserves_distances(&self, lattice: &Lattice) -> bool {
        self.permutations.par_iter().all(|p| preserves_distances(lattice, p))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn preserves_distances(lattice: &Lattice, perm: &[usize]) -> bool {
    let n = lattice.num_sites();
    (0..n).all(|i| {
        ((i + 1)..n).all(|j| (lattice.distance(i, j) - lattice.distance(perm[i], perm[j])).abs() < DISTANCE_TOLERANCE)
    })
}

/// Space group of a periodic supercell as site permutations.
pub fn automorphisms(lattice: &Lattice) -> Result<SymmetryGroup> {
    let cell = lattice.cell_vectors().ok_or(Error::NotPeriodic)?;
    let n = lattice.num_sites();
    let sites = lattice.sites();

    let key = |p: [f64; 2]| -> (i64, i64) {
        let f = to_fractional(p, cell);
        let wrap = |x: f64| ((x.rem_euclid(1.0) * 1e6).round() as i64).rem_euclid(1_000_000);
        (wrap(f[0]), wrap(f[1]))
    };
    let index: HashMap<(i64, i64), usize> = sites.iter().map(|s| (key(s.frac_pos), s.index)).collect();
    if index.len() != n {
        return Err(Error::InvalidLattice("sites coincide modulo the cell".into()));
    }

    let mut candidates = Vec::new();
    for k in 0..12 {
        let (m, name) = point_op(k);
        // the operation must map the superlattice onto itself
        let keeps_cell = cell.iter().all(|&c| {
            let f = to_fractional(apply(m, c), cell);
            near_integer(f[0]) && near_integer(f[1])
        });
        if !keeps_cell {
            continue;
        }
        let origin = apply(m, sites[0].frac_pos);
        for target in sites {
            let t = sub(target.frac_pos, origin);
            let perm: Option<Vec<usize>> = sites
                .iter()
                .map(|s| index.get(&key(add(apply(m, s.frac_pos), t))).copied())
                .collect();
            let Some(perm) = perm else { continue };
            let mut hit = vec![false; n];
            if perm.iter().any(|&j| std::mem::replace(&mut hit[j], true)) {
                continue;
            }
            if preserves_distances(lattice, &perm) {
                candidates.push((perm, format!("{name}, site 0 -> {}", target.index)));
            }
        }
    }
    Ok(SymmetryGroup::from_candidates(n, candidates))
}

/// Point group of a finite flake about its centroid (no translations).
pub fn point_group(lattice: &Lattice) -> Result<SymmetryGroup> {
    if lattice.is_periodic() {
        return Err(Error::InvalidArgument("point-group mode needs a non-periodic lattice".into()));
    }
    let sites = lattice.sites();
    let n = sites.len();
    let centroid = sites
        .iter()
        .fold([0.0, 0.0], |a, s| add(a, s.frac_pos))
        .map(|x| x / n as f64);
    let mut candidates = Vec::new();
    for k in 0..12 {
        let (m, name) = point_op(k);
        let perm: Option<Vec<usize>> = sites
            .iter()
            .map(|s| {
                let p = add(apply(m, sub(s.frac_pos, centroid)), centroid);
                sites.iter().position(|t| {
                    let d = sub(t.frac_pos, p);
                    d[0].abs() < MATCH_TOLERANCE && d[1].abs() < MATCH_TOLERANCE
                })
            })
            .collect();
        if let Some(perm) = perm {
            candidates.push((perm, name));
        }
    }
    Ok(SymmetryGroup::from_candidates(n, candidates))
}

fn check(config: &Configuration, group: &SymmetryGroup) -> Result<()> {
    config.check_len(group.num_sites())
}

/// Lexicographically smallest image (bitstring order, site 0 first).
pub fn canonical_form(config: &Configuration, group: &SymmetryGroup) -> Result<Configuration> {
    check(config, group)?;
    Ok(group
        .permutations
        .iter()
        .map(|p| config.permuted(p))
        .min()
        .unwrap_or(*config))
}

/// Distinct images of `config` and the orbit size.
pub fn expand_orbit(config: &Configuration, group: &SymmetryGroup) -> Result<(BTreeSet<Configuration>, usize)> {
    check(config, group)?;
    let orbit: BTreeSet<Configuration> = group.permutations.iter().map(|p| config.permuted(p)).collect();
    let size = orbit.len();
    Ok((orbit, size))
}

/// Symmetry-independent representatives with orbit multiplicities, in
/// lexicographic order. Duplicates and orbit-mates collapse to one entry.
pub fn reduce_to_sic(configs: &[Configuration], group: &SymmetryGroup) -> Result<Vec<(Configuration, usize)>> {
    let canon: Vec<Configuration> = configs
        .par_iter()
        .map(|c| canonical_form(c, group))
        .collect::<Result<_>>()?;
    let unique: BTreeSet<Configuration> = canon.into_iter().collect();
    unique
        .into_iter()
        .map(|rep| Ok((rep, expand_orbit(&rep, group)?.1)))
        .collect()
}

/// Assigns each record's energy to every configuration in its orbit.
///
/// Records in the same orbit are merged (first occurrence wins); the output
/// carries `sic_id` = index of the representative in lexicographic order.
pub fn expand_dataset(records: &[DatasetRecord], group: &SymmetryGroup) -> Result<Vec<DatasetRecord>> {
    let mut reps: BTreeMap<Configuration, &DatasetRecord> = BTreeMap::new();
    for r in records {
        reps.entry(canonical_form(&r.config, group)?).or_insert(r);
    }
    let mut out = Vec::new();
    for (id, (rep, record)) in reps.into_iter().enumerate() {
        for config in expand_orbit(&rep, group)?.0 {
            out.push(DatasetRecord { config, energy: record.energy, tag: record.tag, sic_id: Some(id as u64) });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energetics::{material_energy, ChemicalPotential, EnergyModel};
    use crate::hardware::HardwareSpec;
    use crate::lattice::{build_flake, build_supercell, FlakeShape};

    fn all_k_subsets(n: usize, k: usize) -> Vec<Configuration> {
        (0u64..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| Configuration::from_mask(n, m))
            .collect()
    }

    /// Number of k-subsets fixed by a permutation: coefficient of x^k in
    /// Π_cycles (1 + x^len).
    fn fixed_subsets(perm: &[usize], k: usize) -> u128 {
        let n = perm.len();
        let mut seen = vec![false; n];
        let mut poly = vec![0u128; n + 1];
        poly[0] = 1;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = perm[i];
                len += 1;
            }
            for d in (len..=n).rev() {
                poly[d] += poly[d - len];
            }
        }
        poly[k]
    }

    fn burnside(group: &SymmetryGroup, k: usize) -> u128 {
        let total: u128 = group.permutations.iter().map(|p| fixed_subsets(p, k)).sum();
        assert_eq!(total % group.order() as u128, 0);
        total / group.order() as u128
    }

    #[test]
    fn unit_cell_has_sublattice_swap() {
        let g = automorphisms(&build_supercell(1, 1).unwrap()).unwrap();
        assert_eq!(24 % g.order(), 0);
        assert!(g.contains(&[1, 0]));
        assert!(g.contains(&[0, 1]));
    }

    #[test]
    fn hexagon_point_group_is_dihedral() {
        let hex = build_flake(FlakeShape::Hexagon).unwrap();
        let g = point_group(&hex).unwrap();
        assert_eq!(g.order(), 12);
        assert!(g.verify_closure());
        assert!(g.preserves_distances(&hex));
    }

    #[test]
    fn supercell_groups_are_closed_and_isometric() {
        for (a, b) in [(1, 1), (2, 2), (3, 3), (2, 3), (4, 4)] {
            let l = build_supercell(a, b).unwrap();
            let g = automorphisms(&l).unwrap();
            assert!(g.verify_closure(), "{a}x{b}");
            assert!(g.preserves_distances(&l));
        }
        // square supercells keep the full hexagonal point group
        assert_eq!(automorphisms(&build_supercell(3, 3).unwrap()).unwrap().order(), 9 * 12);
    }

    #[test]
    fn non_periodic_input_is_rejected() {
        assert!(matches!(automorphisms(&build_flake(FlakeShape::Hexagon).unwrap()), Err(Error::NotPeriodic)));
    }

    #[test]
    fn burnside_counts_match() {
        for (a, b) in [(2, 2), (3, 3)] {
            let l = build_supercell(a, b).unwrap();
            let g = automorphisms(&l).unwrap();
            for k in 1..=3 {
                let sics = reduce_to_sic(&all_k_subsets(l.num_sites(), k), &g).unwrap();
                assert_eq!(sics.len() as u128, burnside(&g, k), "{a}x{b} k={k}");
                let total: usize = sics.iter().map(|(_, m)| m).sum();
                assert_eq!(total as u128, crate::units::binomial(l.num_sites() as u64, k as u64).unwrap());
                assert!(sics.iter().all(|(_, m)| g.order().is_multiple_of(*m)));
            }
        }
    }

    #[test]
    fn canonical_form_is_a_class_function() {
        let l = build_supercell(2, 2).unwrap();
        let g = automorphisms(&l).unwrap();
        for c in all_k_subsets(8, 3) {
            let canon = canonical_form(&c, &g).unwrap();
            assert_eq!(canonical_form(&canon, &g).unwrap(), canon);
            for p in &g.permutations {
                assert_eq!(canonical_form(&c.permuted(p), &g).unwrap(), canon);
            }
            let (orbit, _) = expand_orbit(&c, &g).unwrap();
            assert!(orbit.iter().all(|o| *o >= canon));
        }
        let empty = Configuration::empty(8);
        assert_eq!(canonical_form(&empty, &g).unwrap(), empty);
        assert_eq!(expand_orbit(&empty, &g).unwrap().1, 1);
    }

    #[test]
    fn single_dopant_orbit_is_all_sites() {
        let l = build_supercell(3, 3).unwrap();
        let g = automorphisms(&l).unwrap();
        assert_eq!(expand_orbit(&Configuration::from_sites(18, &[4]), &g).unwrap().1, 18);
    }

    #[test]
    fn orbits_are_energy_degenerate() {
        let l = build_supercell(3, 3).unwrap();
        let g = automorphisms(&l).unwrap();
        let model = EnergyModel::from_distance(3.613e-4, 1.6122, HardwareSpec::default().c6_ev_um6()).unwrap();
        let mu = ChemicalPotential(-3.6e-4);
        for c in all_k_subsets(18, 3).into_iter().step_by(7) {
            let e0 = material_energy(&model, &l, &c, mu).unwrap();
            for p in &g.permutations {
                let e = material_energy(&model, &l, &c.permuted(p), mu).unwrap();
                assert!((e - e0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reduce_edge_cases() {
        let g = automorphisms(&build_supercell(2, 2).unwrap()).unwrap();
        assert!(reduce_to_sic(&[], &g).unwrap().is_empty());
        let c = Configuration::from_sites(8, &[1, 2]);
        assert_eq!(reduce_to_sic(&[c, c, c], &g).unwrap().len(), 1);
        assert!(canonical_form(&Configuration::empty(5), &g).is_err());
    }

    #[test]
    fn dataset_expansion_covers_orbits() {
        use crate::fitting::Split;
        let g = automorphisms(&build_supercell(2, 2).unwrap()).unwrap();
        let recs = vec![
            DatasetRecord { config: Configuration::from_sites(8, &[0]), energy: 1.0, tag: Split::Train, sic_id: None },
            DatasetRecord { config: Configuration::from_sites(8, &[0, 1]), energy: 2.0, tag: Split::Train, sic_id: None },
        ];
        let out = expand_dataset(&recs, &g).unwrap();
        let singles = out.iter().filter(|r| r.config.count_ones() == 1).count();
        assert_eq!(singles, 8);
        assert!(out.iter().filter(|r| r.config.count_ones() == 2).all(|r| r.energy == 2.0));
        let ids: BTreeSet<u64> = out.iter().map(|r| r.sic_id.unwrap()).collect();
        assert_eq!(ids.len(), 2);
    }
}
