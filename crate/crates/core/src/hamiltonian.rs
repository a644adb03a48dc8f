//! Compiled diagonal energy functions.
//!
//! Both the material model and the Rydberg energy are quadratic pseudo-boolean
//! functions `E(n) = Σ_i h_i n_i + Σ_{i<j} J_ij n_i n_j`. The sampling engines
//! consume this common form.

use serde::{Deserialize, Serialize};

use crate::configuration::Configuration;
use crate::energetics::{ChemicalPotential, EnergyModel, OnSite, PairRange};
use crate::error::{Error, Result};
use crate::hardware::{HardwareSpec, Layout};
use crate::lattice::{Lattice, SHELL_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    onsite: Vec<f64>,
    couplings: Vec<Coupling>,
}

/// Where a Hamiltonian comes from: the material model at a chemical
/// potential, or the device energy at a detuning.
#[derive(Debug, Clone, Copy)]
pub enum EnergySource<'a> {
    Material { model: &'a EnergyModel, lattice: &'a Lattice, mu: ChemicalPotential },
    Hardware { layout: &'a Layout, spec: &'a HardwareSpec, detuning_ev: f64 },
}

impl EnergySource<'_> {
    pub fn compile(&self) -> Result<Hamiltonian> {
        match *self {
            EnergySource::Material { model, lattice, mu } => Hamiltonian::material(model, lattice, mu),
            EnergySource::Hardware { layout, spec, detuning_ev } => {
                Ok(Hamiltonian::hardware(layout, spec, detuning_ev))
            }
        }
    }
}

impl Hamiltonian {
    pub fn new(onsite: Vec<f64>, couplings: Vec<Coupling>) -> Result<Self> {
        let n = onsite.len();
        for c in &couplings {
            if c.i >= c.j || c.j >= n {
                return Err(Error::InvalidArgument(format!(
                    "coupling ({}, {}) must satisfy i < j < {n}",
                    c.i, c.j
                )));
            }
        }
        Ok(Hamiltonian { onsite, couplings })
    }

    /// Material energy at chemical potential `mu`: h_i = V_i + Δμ.
    pub fn material(model: &EnergyModel, lattice: &Lattice, mu: ChemicalPotential) -> Result<Self> {
        let n = lattice.num_sites();
        if let OnSite::PerSite(v) = &model.on_site {
            if v.len() != n {
                return Err(Error::LengthMismatch { expected: n, found: v.len() });
            }
        }
        let onsite = (0..n).map(|i| model.on_site.at(i) + mu.0).collect();
        let couplings = match model.pair_range {
            PairRange::Shells => (0..SHELL_COUNT)
                .flat_map(|s| {
                    let strength = model.shell_strength(s);
                    lattice.shell_pairs(s).iter().map(move |p| Coupling {
                        i: p.i,
                        j: p.j,
                        value: strength * p.multiplicity as f64,
                    })
                })
                .collect(),
            PairRange::Untruncated => lattice
                .all_pairs()?
                .into_iter()
                .map(|(i, j, d)| Coupling { i, j, value: model.pair_strength_at(d) })
                .collect(),
        };
        Hamiltonian::new(onsite, couplings)
    }

    /// Device energy at global detuning `detuning_ev` (all pairs, C₆/R⁶).
    pub fn hardware(layout: &Layout, spec: &HardwareSpec, detuning_ev: f64) -> Self {
        let n = layout.num_atoms();
        let h = spec.sign.detuning_coefficient() * detuning_ev;
        let c6 = spec.c6_ev_um6();
        let mut couplings = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                couplings.push(Coupling { i, j, value: c6 / layout.distance(i, j).powi(6) });
            }
        }
        Hamiltonian { onsite: vec![h; n], couplings }
    }

    pub fn num_sites(&self) -> usize {
        self.onsite.len()
    }

    pub fn onsite(&self) -> &[f64] {
        &self.onsite
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// The common on-site coefficient when every site shares it.
    pub fn uniform_onsite(&self) -> Option<f64> {
        let first = *self.onsite.first()?;
        self.onsite.iter().all(|&h| h == first).then_some(first)
    }

    /// Same couplings with every on-site coefficient shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        Hamiltonian {
            onsite: self.onsite.iter().map(|h| h + delta).collect(),
            couplings: self.couplings.clone(),
        }
    }

    /// Dense symmetric coupling matrix, row-major `n × n`, zero diagonal.
    pub fn dense_couplings(&self) -> Vec<f64> {
        let n = self.num_sites();
        let mut m = vec![0.0; n * n];
        for c in &self.couplings {
            m[c.i * n + c.j] += c.value;
            m[c.j * n + c.i] += c.value;
        }
        m
    }

    /// Per-site lists of (neighbour, coupling), omitting zero couplings.
    pub fn neighbour_lists(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.num_sites()];
        for c in &self.couplings {
            if c.value != 0.0 {
                adj[c.i].push((c.j, c.value));
                adj[c.j].push((c.i, c.value));
            }
        }
        adj
    }

    pub fn linear_energy(&self, config: &Configuration) -> f64 {
        config.iter_ones().map(|i| self.onsite[i]).sum()
    }

    pub fn pair_energy(&self, config: &Configuration) -> f64 {
        self.couplings
            .iter()
            .filter(|c| config.get(c.i) && config.get(c.j))
            .map(|c| c.value)
            .sum()
    }

    /// Direct O(pairs) evaluation.
    pub fn energy(&self, config: &Configuration) -> Result<f64> {
        config.check_len(self.num_sites())?;
        Ok(self.linear_energy(config) + self.pair_energy(config))
    }

    /// Energy change from flipping site `i` of `config`.
    pub fn flip_delta(&self, adj: &[Vec<(usize, f64)>], config: &Configuration, i: usize) -> f64 {
        let field: f64 = adj[i].iter().filter(|(j, _)| config.get(*j)).map(|(_, v)| v).sum();
        let d = self.onsite[i] + field;
        if config.get(i) {
            -d
        } else {
            d
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energetics::{hardware_energy, material_energy};
    use crate::hardware::scale_to_hardware;
    use crate::lattice::{build_flake, build_supercell, FlakeShape};

    fn model() -> EnergyModel {
        EnergyModel::from_distance(3.613e-4, 1.6122, HardwareSpec::default().c6_ev_um6()).unwrap()
    }

    fn configs(n: usize, count: usize) -> Vec<Configuration> {
        let mut s = 0x9e37_79b9_7f4a_7c15u64;
        (0..count)
            .map(|_| {
                let mut c = Configuration::empty(n);
                for i in 0..n {
                    s = s.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
                    c.set(i, (s >> 33) & 1 == 1);
                }
                c
            })
            .collect()
    }

    #[test]
    fn material_compilation_matches_direct() {
        let mu = ChemicalPotential(-3.7e-4);
        for lattice in [build_flake(FlakeShape::Flake28).unwrap(), build_supercell(3, 3).unwrap()] {
            let h = Hamiltonian::material(&model(), &lattice, mu).unwrap();
            for c in configs(lattice.num_sites(), 200) {
                let a = h.energy(&c).unwrap();
                let b = material_energy(&model(), &lattice, &c, mu).unwrap();
                assert!((a - b).abs() < 1e-15, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn hardware_compilation_matches_direct() {
        let spec = HardwareSpec::default();
        let layout = scale_to_hardware(&build_flake(FlakeShape::Flake28).unwrap(), 4.0).unwrap();
        let h = Hamiltonian::hardware(&layout, &spec, 3e-8);
        assert_eq!(h.uniform_onsite(), Some(-3e-8));
        for c in configs(28, 200) {
            let a = h.energy(&c).unwrap();
            let b = hardware_energy(&layout, &spec, 3e-8, &c).unwrap();
            assert!((a - b).abs() < 1e-18);
        }
    }

    #[test]
    fn flip_delta_matches_difference() {
        let lattice = build_flake(FlakeShape::Rect { rows: 3, cols: 4 }).unwrap();
        let h = Hamiltonian::material(&model(), &lattice, ChemicalPotential(-3.6e-4)).unwrap();
        let adj = h.neighbour_lists();
        for c in configs(12, 50) {
            for i in 0..12 {
                let mut d = c;
                d.flip(i);
                let expected = h.energy(&d).unwrap() - h.energy(&c).unwrap();
                assert!((h.flip_delta(&adj, &c, i) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_couplings() {
        assert!(Hamiltonian::new(vec![0.0; 3], vec![Coupling { i: 2, j: 1, value: 1.0 }]).is_err());
        assert!(Hamiltonian::new(vec![0.0; 3], vec![Coupling { i: 1, j: 3, value: 1.0 }]).is_err());
    }
}
