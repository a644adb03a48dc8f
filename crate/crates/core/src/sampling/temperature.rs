//! Effective sampling temperature by matching mean-concentration curves.
//!
//! With a uniform on-site coefficient h the energy splits as E = h·N + P, so
//! the grand-canonical distribution at any h follows from the canonical
//! profile Q_N(T) = Σ_{‖n‖=N} exp(−(P − P_min,N)/k_BT). One enumeration pass
//! fills Q_N for every grid temperature; every detuning and temperature is
//! then a sum over N + 1 terms.

use serde::{Deserialize, Serialize};

use super::engine::Enumerator;
use super::stats::{log_sum_exp, softmax, EXP_UNDERFLOW};
use super::sweep::SweepResult;
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::hardware::{HardwareSpec, Layout};
use crate::units::thermal_energy;

/// 60 equally spaced temperatures from 1 μK to 60 μK.
pub fn default_temperature_grid() -> Vec<f64> {
    (1..=60).map(|k| k as f64 * 1e-6).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalProfile {
    n_sites: usize,
    temperatures: Vec<f64>,
    /// Lowest pair energy at each occupation count.
    p_min: Vec<f64>,
    /// ln Q_N(T), indexed [temperature][N].
    ln_q: Vec<Vec<f64>>,
}

impl CanonicalProfile {
    /// Profile of the pair part of `ham` at each temperature.
    pub fn compute(ham: &Hamiltonian, temperatures: &[f64]) -> Result<Self> {
        if temperatures.is_empty() {
            return Err(Error::InvalidArgument("temperature grid is empty".into()));
        }
        for &t in temperatures {
            super::check_temperature(t)?;
        }
        let n = ham.num_sites();
        let en = Enumerator::new(ham)?;

        let p_min = en
            .run(
                |_| vec![f64::INFINITY; n + 1],
                |acc, b| {
                    for x in 0..b.len() {
                        let c = b.count(x);
                        acc[c] = acc[c].min(b.pair(x));
                    }
                },
            )
            .into_iter()
            .fold(vec![f64::INFINITY; n + 1], |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x = x.min(*y));
                a
            });

        // hottest first, so the inner loop can stop at the first underflow
        let mut order: Vec<usize> = (0..temperatures.len()).collect();
        order.sort_by(|&a, &b| temperatures[b].total_cmp(&temperatures[a]));
        let inv_kt: Vec<f64> = order.iter().map(|&j| 1.0 / thermal_energy(temperatures[j])).collect();
        let nt = temperatures.len();

        let sums = en
            .run(
                |_| vec![0.0; (n + 1) * nt],
                |acc, b| {
                    for x in 0..b.len() {
                        let c = b.count(x);
                        let de = b.pair(x) - p_min[c];
                        let row = &mut acc[c * nt..(c + 1) * nt];
                        for (slot, &beta) in row.iter_mut().zip(&inv_kt) {
                            let arg = de * beta;
                            if arg >= EXP_UNDERFLOW {
                                break;
                            }
                            *slot += (-arg).exp();
                        }
                    }
                },
            )
            .into_iter()
            .fold(vec![0.0; (n + 1) * nt], |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            });

        let mut ln_q = vec![vec![f64::NEG_INFINITY; n + 1]; nt];
        for c in 0..=n {
            for (slot, &j) in order.iter().enumerate() {
                ln_q[j][c] = sums[c * nt + slot].ln();
            }
        }
        Ok(CanonicalProfile { n_sites: n, temperatures: temperatures.to_vec(), p_min, ln_q })
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temperatures
    }

    pub fn num_sites(&self) -> usize {
        self.n_sites
    }

    fn log_weights(&self, t_index: usize, onsite: f64) -> Vec<f64> {
        let beta = 1.0 / thermal_energy(self.temperatures[t_index]);
        (0..=self.n_sites)
            .map(|c| -(onsite * c as f64 + self.p_min[c]) * beta + self.ln_q[t_index][c])
            .collect()
    }

    /// Occupation-count distribution with on-site coefficient `onsite`.
    pub fn pmf(&self, t_index: usize, onsite: f64) -> Vec<f64> {
        softmax(&self.log_weights(t_index, onsite))
    }

    pub fn mean_concentration(&self, t_index: usize, onsite: f64) -> f64 {
        self.pmf(t_index, onsite).iter().enumerate().map(|(c, p)| c as f64 * p).sum()
    }

    /// ln Σ exp(−E/k_BT) with on-site coefficient `onsite`.
    pub fn log_z(&self, t_index: usize, onsite: f64) -> f64 {
        log_sum_exp(&self.log_weights(t_index, onsite))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFit {
    pub t_star_k: f64,
    pub rmse_at_optimum: f64,
    pub temperatures_k: Vec<f64>,
    pub rmse: Vec<f64>,
    /// Model mean concentration per temperature, per measured point.
    pub curves: Vec<Vec<f64>>,
}

impl TemperatureFit {
    pub fn rmse_csv(&self) -> String {
        let mut out = String::from("temperature_k,rmse\n");
        for (t, r) in self.temperatures_k.iter().zip(&self.rmse) {
            out.push_str(&format!("{t:e},{r:e}\n"));
        }
        out
    }
}

/// Grid temperature whose exact curve best matches the measured means.
/// Ties go to the lower temperature.
pub fn fit_effective_temperature(
    measured: &SweepResult,
    layout: &Layout,
    spec: &HardwareSpec,
    t_grid: &[f64],
) -> Result<TemperatureFit> {
    if measured.points.len() < 2 {
        return Err(Error::InvalidArgument("need at least two measured points".into()));
    }
    let ham = Hamiltonian::hardware(layout, spec, 0.0);
    let profile = CanonicalProfile::compute(&ham, t_grid)?;
    let coef = spec.sign.detuning_coefficient();

    let mut rmse = Vec::with_capacity(t_grid.len());
    let mut curves = Vec::with_capacity(t_grid.len());
    for j in 0..t_grid.len() {
        let curve: Vec<f64> = measured
            .points
            .iter()
            .map(|p| profile.mean_concentration(j, coef * p.delta_g_ev))
            .collect();
        let mse = curve
            .iter()
            .zip(&measured.points)
            .map(|(m, p)| (m - p.mean_conc).powi(2))
            .sum::<f64>()
            / curve.len() as f64;
        rmse.push(mse.sqrt());
        curves.push(curve);
    }

    let best = (0..t_grid.len())
        .min_by(|&a, &b| rmse[a].total_cmp(&rmse[b]).then(t_grid[a].total_cmp(&t_grid[b])))
        .expect("grid is nonempty");
    Ok(TemperatureFit {
        t_star_k: t_grid[best],
        rmse_at_optimum: rmse[best],
        temperatures_k: t_grid.to_vec(),
        rmse,
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardware::scale_to_hardware;
    use crate::lattice::{build_flake, FlakeShape};
    use crate::sampling::stats::{enumerate_stats, HistogramSpec};
    use crate::sampling::sweep::SweepPoint;

    fn layout() -> Layout {
        scale_to_hardware(&build_flake(FlakeShape::Rect { rows: 3, cols: 5 }).unwrap(), 4.0).unwrap()
    }

    #[test]
    fn default_grid() {
        let g = default_temperature_grid();
        assert_eq!(g.len(), 60);
        assert_eq!(g[0], 1e-6);
        assert!((g[59] - 60e-6).abs() < 1e-18);
        assert!((g[40] - 41e-6).abs() < 1e-18);
    }

    #[test]
    fn profile_matches_enumeration() {
        let spec = HardwareSpec::default();
        let temps = [5e-6, 41e-6, 60e-6];
        let profile = CanonicalProfile::compute(&Hamiltonian::hardware(&layout(), &spec, 0.0), &temps).unwrap();
        for dg in [-4e-8, 0.0, 3e-8, 8e-8] {
            let ham = Hamiltonian::hardware(&layout(), &spec, dg);
            for (j, &t) in temps.iter().enumerate() {
                let exact = enumerate_stats(&ham, t, HistogramSpec::default()).unwrap();
                let onsite = spec.sign.detuning_coefficient() * dg;
                assert!((profile.mean_concentration(j, onsite) - exact.mean_concentration).abs() < 1e-10);
                assert!((profile.log_z(j, onsite) - exact.log_z).abs() < 1e-9 * exact.log_z.abs().max(1.0));
            }
        }
    }

    fn exact_sweep(t: f64, spec: &HardwareSpec) -> SweepResult {
        let points = (0..6)
            .map(|k| {
                let dg = -4e-8 + k as f64 * 2.4e-8;
                let s = enumerate_stats(&Hamiltonian::hardware(&layout(), spec, dg), t, HistogramSpec::default()).unwrap();
                SweepPoint { delta_g_ev: dg, delta_mu_ev: 0.0, mean_conc: s.mean_concentration, conc_pmf: s.concentration_pmf, log_z: Some(s.log_z) }
            })
            .collect();
        SweepResult { points }
    }

    #[test]
    fn exact_curve_gives_zero_rmse() {
        let spec = HardwareSpec::default();
        let fit = fit_effective_temperature(&exact_sweep(23e-6, &spec), &layout(), &spec, &default_temperature_grid()).unwrap();
        assert_eq!(fit.t_star_k, 23e-6);
        assert!(fit.rmse_at_optimum < 1e-10);
        assert_eq!(fit.rmse.len(), 60);
    }

    #[test]
    fn ties_go_to_lower_temperature() {
        // no interactions and zero detuning: every temperature gives N/2
        let l = scale_to_hardware(&build_flake(FlakeShape::Rect { rows: 1, cols: 1 }).unwrap(), 4.0).unwrap();
        let pts = (0..2)
            .map(|_| SweepPoint { delta_g_ev: 0.0, delta_mu_ev: 0.0, mean_conc: 0.5, conc_pmf: vec![], log_z: None })
            .collect();
        let fit = fit_effective_temperature(&SweepResult { points: pts }, &l, &HardwareSpec::default(), &[3e-6, 1e-6, 2e-6]).unwrap();
        assert_eq!(fit.t_star_k, 1e-6);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let spec = HardwareSpec::default();
        let sweep = exact_sweep(10e-6, &spec);
        assert!(fit_effective_temperature(&sweep, &layout(), &spec, &[]).is_err());
        let one = SweepResult { points: sweep.points[..1].to_vec() };
        assert!(fit_effective_temperature(&one, &layout(), &spec, &[1e-6]).is_err());
    }
}
