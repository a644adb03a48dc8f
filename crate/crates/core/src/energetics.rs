//! Formation energies, grand-canonical energies, the fitted material model
//! and the Rydberg diagonal energy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::hardware::{HardwareSpec, Layout};
use crate::lattice::{Lattice, SHELL_COUNT};

/// Pair decay per shell, (R_NN / R_s)⁶ for R_s ∈ {1, √3, 2, √7}·R_NN.
pub const SHELL_FACTORS: [f64; SHELL_COUNT] = [1.0, 1.0 / 27.0, 1.0 / 64.0, 1.0 / 343.0];

/// Guards the relative residual when the material energy vanishes.
const RESIDUAL_FLOOR: f64 = 1e-30;

/// Per-species reference energies E_χ in eV/atom.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEnergies {
    pub energies: BTreeMap<String, f64>,
}

impl ReferenceEnergies {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self { energies: entries.into_iter().map(|(k, v)| (k.into(), v)).collect() }
    }
}

/// ΔE_f = E_total − Σ_χ N_χ E_χ.
pub fn formation_energy(e_total: f64, counts: &[(&str, u64)], refs: &ReferenceEnergies) -> Result<f64> {
    let mut reference = 0.0;
    for &(species, n) in counts {
        let e = refs
            .energies
            .get(species)
            .ok_or_else(|| Error::MissingReference(species.to_string()))?;
        reference += n as f64 * e;
    }
    Ok(e_total - reference)
}

/// Nitrogen chemical potential relative to carbon (μ_C = 0), in eV.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ChemicalPotential(pub f64);

impl ChemicalPotential {
    pub fn ev(self) -> f64 {
        self.0
    }
}

/// ΔẼ_f = ΔE_f + N_N·Δμ.
pub fn grand_canonical_energy(delta_e_f: f64, n_nitrogen: u64, mu: ChemicalPotential) -> f64 {
    delta_e_f + n_nitrogen as f64 * mu.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnSite {
    Uniform(f64),
    PerSite(Vec<f64>),
}

impl OnSite {
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        match self {
            OnSite::Uniform(v) => *v,
            OnSite::PerSite(v) => v[i],
        }
    }

    pub fn uniform(&self) -> Option<f64> {
        match self {
            OnSite::Uniform(v) => Some(*v),
            OnSite::PerSite(_) => None,
        }
    }
}

/// Which pairs contribute to the material pair energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairRange {
    /// Shells 1–4 with fixed decay factors.
    #[default]
    Shells,
    /// Every pair at v_nn·(R_NN/R_ij)⁶ (non-periodic lattices only).
    Untruncated,
}

/// Two-parameter Rydberg-form material model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub on_site: OnSite,
    /// Nearest-neighbour pair strength in eV.
    pub v_nn: f64,
    /// C₆ in eV·μm⁶ used to express v_nn as a distance.
    pub c6_ev_um6: f64,
    #[serde(default)]
    pub pair_range: PairRange,
}

impl EnergyModel {
    pub fn new(on_site: OnSite, v_nn: f64, c6_ev_um6: f64) -> Result<Self> {
        if !(v_nn > 0.0) {
            return Err(Error::NonPositivePairStrength(v_nn));
        }
        if let OnSite::PerSite(v) = &on_site {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("non-finite on-site energy".into()));
            }
        }
        Ok(EnergyModel { on_site, v_nn, c6_ev_um6, pair_range: PairRange::Shells })
    }

    /// Uniform model from (V, R_NN) as reported by a fit.
    pub fn from_distance(v: f64, r_nn_model_um: f64, c6_ev_um6: f64) -> Result<Self> {
        if !(r_nn_model_um > 0.0) {
            return Err(Error::InvalidArgument(format!("model R_NN must be positive, got {r_nn_model_um}")));
        }
        Self::new(OnSite::Uniform(v), c6_ev_um6 / r_nn_model_um.powi(6), c6_ev_um6)
    }

    pub fn with_pair_range(mut self, range: PairRange) -> Self {
        self.pair_range = range;
        self
    }

    /// R_NN such that C₆/R_NN⁶ = v_nn, in μm.
    pub fn r_nn_model_um(&self) -> f64 {
        (self.c6_ev_um6 / self.v_nn).powf(1.0 / 6.0)
    }

    pub fn shell_strength(&self, shell: usize) -> f64 {
        self.v_nn * SHELL_FACTORS[shell]
    }

    /// Pair strength at a lattice-unit separation under this model's range.
    pub fn pair_strength_at(&self, d: f64) -> f64 {
        self.v_nn / d.powi(6)
    }
}

/// Σ_i (V_i + Δμ)·n_i + Σ_pairs v_nn·f_s·n_i·n_j, each pair counted once.
pub fn material_energy(
    model: &EnergyModel,
    lattice: &Lattice,
    config: &Configuration,
    mu: ChemicalPotential,
) -> Result<f64> {
    config.check_len(lattice.num_sites())?;
    if let OnSite::PerSite(v) = &model.on_site {
        if v.len() != lattice.num_sites() {
            return Err(Error::LengthMismatch { expected: lattice.num_sites(), found: v.len() });
        }
    }
    let linear: f64 = config.iter_ones().map(|i| model.on_site.at(i) + mu.0).sum();
    let pair = match model.pair_range {
        PairRange::Shells => (0..SHELL_COUNT)
            .map(|s| {
                let occupied: u32 = lattice
                    .shell_pairs(s)
                    .iter()
                    .filter(|p| config.get(p.i) && config.get(p.j))
                    .map(|p| p.multiplicity)
                    .sum();
                model.shell_strength(s) * occupied as f64
            })
            .sum(),
        PairRange::Untruncated => {
            if lattice.is_periodic() {
                return Err(Error::InvalidLattice(
                    "untruncated pair sums require a non-periodic lattice".into(),
                ));
            }
            let occ: Vec<usize> = config.iter_ones().collect();
            let mut acc = 0.0;
            for (a, &i) in occ.iter().enumerate() {
                for &j in &occ[a + 1..] {
                    acc += model.pair_strength_at(lattice.distance(i, j));
                }
            }
            acc
        }
    };
    Ok(linear + pair)
}

/// Rydberg diagonal energy s·Δ_g·‖n‖₁ + Σ_{i<j} C₆/R_ij⁶·n_i·n_j, with the
/// sign `s` taken from `spec.sign` (−1 by default). Pairs are not
/// truncated.
pub fn hardware_energy(
    layout: &Layout,
    spec: &HardwareSpec,
    detuning_ev: f64,
    config: &Configuration,
) -> Result<f64> {
    config.check_len(layout.num_atoms())?;
    let occ: Vec<usize> = config.iter_ones().collect();
    let c6 = spec.c6_ev_um6();
    let mut pair = 0.0;
    for (a, &i) in occ.iter().enumerate() {
        for &j in &occ[a + 1..] {
            pair += c6 / layout.distance(i, j).powi(6);
        }
    }
    Ok(spec.sign.detuning_coefficient() * detuning_ev * occ.len() as f64 + pair)
}

/// Relative mismatch |E_material − α_v·E_hardware| / max(|E_material|, ε).
///
/// α_v is computed from the layout spacing and the model's R_NN. With an
/// untruncated model and the detuning mapped from Δμ the residual is at
/// rounding level for every configuration.
#[allow(clippy::too_many_arguments)]
pub fn scaling_equivalence_residual(
    model: &EnergyModel,
    lattice: &Lattice,
    mu: ChemicalPotential,
    layout: &Layout,
    spec: &HardwareSpec,
    detuning_ev: f64,
    config: &Configuration,
) -> Result<f64> {
    check_pairing(lattice, layout)?;
    let alpha = crate::rescaling::alpha_v(layout.r_nn_um(), model.r_nn_model_um())?;
    let e_mat = material_energy(model, lattice, config, mu)?;
    let e_hw = hardware_energy(layout, spec, detuning_ev, config)?;
    Ok((e_mat - alpha * e_hw).abs() / e_mat.abs().max(RESIDUAL_FLOOR))
}

/// Absolute energy (eV, material scale) neglected by shell truncation for
/// this configuration: occupied pairs beyond shell 4 times v_nn/343, i.e.
/// α_v·C₆/(√7·r_nn)⁶ per pair.
pub fn truncation_bound(model: &EnergyModel, lattice: &Lattice, config: &Configuration) -> Result<f64> {
    config.check_len(lattice.num_sites())?;
    let occ: Vec<usize> = config.iter_ones().collect();
    let k = occ.len() as u64;
    let total_pairs = k * k.saturating_sub(1) / 2;
    let shell_pairs: u64 = (0..SHELL_COUNT)
        .map(|s| {
            lattice
                .shell_pairs(s)
                .iter()
                .filter(|p| config.get(p.i) && config.get(p.j))
                .count() as u64
        })
        .sum();
    Ok((total_pairs - shell_pairs) as f64 * model.shell_strength(SHELL_COUNT - 1))
}

fn check_pairing(lattice: &Lattice, layout: &Layout) -> Result<()> {
    if lattice.num_sites() != layout.num_atoms() {
        return Err(Error::InconsistentLayout(format!(
            "{} lattice sites vs {} atoms",
            lattice.num_sites(),
            layout.num_atoms()
        )));
    }
    let r = layout.r_nn_um();
    for (s, p) in lattice.sites().iter().zip(layout.positions()) {
        let dx = s.frac_pos[0] * r - p[0];
        let dy = s.frac_pos[1] * r - p[1];
        if dx.hypot(dy) > 1e-9 * r.max(1.0) {
            return Err(Error::InconsistentLayout(format!(
                "site {} is not the lattice position scaled by {r} um",
                s.index
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardware::scale_to_hardware;
    use crate::lattice::{build_flake, FlakeShape};
    use crate::rescaling::detuning_from_mu;

    const V: f64 = 3.613e-4;

    fn c6() -> f64 {
        HardwareSpec::default().c6_ev_um6()
    }

    fn model() -> EnergyModel {
        EnergyModel::from_distance(V, 1.6122, c6()).unwrap()
    }

    #[test]
    fn formation_energy_cases() {
        let refs = ReferenceEnergies::new([("C", -9.2), ("N", -8.3)]);
        let e_c = -9.2;
        let pristine = formation_energy(78.0 * e_c, &[("C", 78), ("N", 0)], &refs).unwrap();
        assert!(pristine.abs() < 1e-12);
        let shifted = formation_energy(78.0 * e_c + 0.5, &[("C", 78)], &refs).unwrap();
        assert!((shifted - 0.5).abs() < 1e-12);
        let doped = formation_energy(77.0 * e_c - 8.3 + 3.6e-4, &[("C", 77), ("N", 1)], &refs).unwrap();
        assert!((doped - 3.6e-4).abs() < 1e-10);
        assert!(matches!(
            formation_energy(0.0, &[("P", 1)], &refs),
            Err(Error::MissingReference(s)) if s == "P"
        ));
    }

    #[test]
    fn grand_canonical_cases() {
        assert_eq!(grand_canonical_energy(0.2, 0, ChemicalPotential(123.0)), 0.2);
        assert!((grand_canonical_energy(0.2, 2, ChemicalPotential(-0.05)) - 0.1).abs() < 1e-15);
        assert_eq!(grand_canonical_energy(3.613e-4, 1, ChemicalPotential(-3.613e-4)), 0.0);
    }

    #[test]
    fn model_distance_identity() {
        let m = EnergyModel::new(OnSite::Uniform(2e-4), 1e-4, 3.5675e-3).unwrap();
        let r = m.r_nn_model_um();
        assert!((r - 1.8144).abs() < 1e-4);
        assert!((r.powi(6) * m.v_nn - m.c6_ev_um6).abs() / m.c6_ev_um6 < 1e-12);
        assert!(EnergyModel::new(OnSite::Uniform(1.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn material_energy_examples() {
        let l = build_flake(FlakeShape::Flake28).unwrap();
        let m = model();
        let mu = ChemicalPotential(-V);
        let empty = Configuration::empty(28);
        assert_eq!(material_energy(&m, &l, &empty, mu).unwrap(), 0.0);
        for (shell, factor) in SHELL_FACTORS.iter().enumerate() {
            let p = l.shell_pairs(shell)[0];
            let c = Configuration::from_sites(28, &[p.i, p.j]);
            let e = material_energy(&m, &l, &c, mu).unwrap();
            assert!((e - m.v_nn * factor).abs() <= 1e-15 * m.v_nn, "shell {shell}");
        }
        assert!(material_energy(&m, &l, &Configuration::empty(5), mu).is_err());
    }

    #[test]
    fn hardware_energy_examples() {
        let l = build_flake(FlakeShape::Rect { rows: 1, cols: 2 }).unwrap();
        let spec = HardwareSpec::default();
        let both = Configuration::filled(2);
        let e4 = hardware_energy(&scale_to_hardware(&l, 4.0).unwrap(), &spec, 0.0, &both).unwrap();
        assert!((e4 - 8.710e-7).abs() / 8.710e-7 < 1e-3);
        let e5 = hardware_energy(&scale_to_hardware(&l, 5.0).unwrap(), &spec, 0.0, &both).unwrap();
        assert!((e5 - 2.28e-7).abs() / 2.28e-7 < 0.01);
        let layout = scale_to_hardware(&l, 4.0).unwrap();
        assert_eq!(hardware_energy(&layout, &spec, 1e-8, &Configuration::empty(2)).unwrap(), 0.0);
        let single = Configuration::from_sites(2, &[0]);
        assert_eq!(hardware_energy(&layout, &spec, 1e-8, &single).unwrap(), -1e-8);
        let flipped = HardwareSpec { sign: crate::hardware::SignConvention::Flipped, ..spec };
        assert_eq!(hardware_energy(&layout, &flipped, 1e-8, &single).unwrap(), 1e-8);
    }

    #[test]
    fn single_dopant_equivalence_is_exact() {
        let l = build_flake(FlakeShape::Flake28).unwrap();
        let m = model();
        let spec = HardwareSpec::default();
        let layout = scale_to_hardware(&l, 4.0).unwrap();
        let alpha = crate::rescaling::alpha_v(4.0, m.r_nn_model_um()).unwrap();
        for mu in [-4e-4, -V, 0.0, 1e-3] {
            let dg = detuning_from_mu(mu, V, alpha);
            for i in 0..28 {
                let c = Configuration::from_sites(28, &[i]);
                let r = scaling_equivalence_residual(&m, &l, ChemicalPotential(mu), &layout, &spec, dg, &c)
                    .unwrap();
                assert!(r < 1e-12, "site {i} mu {mu}: {r}");
            }
            let r = scaling_equivalence_residual(
                &m, &l, ChemicalPotential(mu), &layout, &spec, dg, &Configuration::empty(28),
            )
            .unwrap();
            assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn truncated_residual_within_bound() {
        let l = build_flake(FlakeShape::Flake28).unwrap();
        let m = model();
        let spec = HardwareSpec::default();
        let layout = scale_to_hardware(&l, 4.0).unwrap();
        let alpha = crate::rescaling::alpha_v(4.0, m.r_nn_model_um()).unwrap();
        let mu = -3.7e-4;
        let dg = detuning_from_mu(mu, V, alpha);
        let full = m.clone().with_pair_range(PairRange::Untruncated);
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for _ in 0..500 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let c = Configuration::from_mask(28, state & ((1 << 28) - 1));
            let r_full =
                scaling_equivalence_residual(&full, &l, ChemicalPotential(mu), &layout, &spec, dg, &c).unwrap();
            assert!(r_full < 1e-12, "{r_full}");
            let e = material_energy(&m, &l, &c, ChemicalPotential(mu)).unwrap();
            let bound = truncation_bound(&m, &l, &c).unwrap() / e.abs().max(1e-30);
            let r = scaling_equivalence_residual(&m, &l, ChemicalPotential(mu), &layout, &spec, dg, &c).unwrap();
            assert!(r <= bound * (1.0 + 1e-9) + 1e-12, "{r} > {bound}");
        }
    }

    #[test]
    fn mismatched_layout_is_rejected() {
        let l = build_flake(FlakeShape::Flake28).unwrap();
        let other = scale_to_hardware(&build_flake(FlakeShape::Hexagon).unwrap(), 4.0).unwrap();
        let r = scaling_equivalence_residual(
            &model(), &l, ChemicalPotential(0.0), &other, &HardwareSpec::default(), 0.0,
            &Configuration::empty(28),
        );
        assert!(matches!(r, Err(Error::InconsistentLayout(_))));
    }
}
