//! Mapping of material parameters onto hardware-feasible ones.
//!
//! With α_v = (R_hw / R_model)⁶ every material energy equals α_v times the
//! corresponding hardware energy once the detuning is set to
//! Δ_g = −(V + Δμ)/α_v. Boltzmann weights therefore coincide when the
//! material temperature is T′ = α_v·T.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware::HardwareSpec;

/// α_v = (r_hw / r_model)⁶.
pub fn alpha_v(r_hw_um: f64, r_model_um: f64) -> Result<f64> {
    if !(r_hw_um > 0.0 && r_model_um > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distances must be positive (r_hw = {r_hw_um}, r_model = {r_model_um})"
        )));
    }
    Ok((r_hw_um / r_model_um).powi(6))
}

/// Δ_g = −(V + Δμ)/α.
pub fn detuning_from_mu(mu_ev: f64, v_model_ev: f64, alpha: f64) -> f64 {
    -(v_model_ev + mu_ev) / alpha
}

/// Δμ = −α·Δ_g − V.
pub fn mu_from_detuning(detuning_ev: f64, v_model_ev: f64, alpha: f64) -> f64 {
    -alpha * detuning_ev - v_model_ev
}

/// T′ = α·T.
pub fn effective_temperature(t_sampling_k: f64, alpha: f64) -> Result<f64> {
    if !(t_sampling_k > 0.0) {
        return Err(Error::NonPositiveTemperature(t_sampling_k));
    }
    Ok(t_sampling_k * alpha)
}

/// Chemical potentials reachable with |Δ_g| ≤ Δ_g^max: centred on −V with
/// half-width α·Δ_g^max.
pub fn accessible_mu_range(spec: &HardwareSpec, v_model_ev: f64, alpha: f64) -> (f64, f64) {
    let half = alpha * spec.detuning_max_ev;
    (-v_model_ev - half, -v_model_ev + half)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledMapping {
    pub alpha_v: f64,
    /// Material on-site energy V in eV.
    pub v_model: f64,
    /// V / α_v in eV.
    pub v_scaled: f64,
    pub r_nn_hw: f64,
    pub r_nn_model: f64,
    pub spec: HardwareSpec,
}

impl RescaledMapping {
    pub fn new(v_model: f64, r_nn_model: f64, r_nn_hw: f64, spec: HardwareSpec) -> Result<Self> {
        let alpha = alpha_v(r_nn_hw, r_nn_model)?;
        Ok(RescaledMapping {
            alpha_v: alpha,
            v_model,
            v_scaled: v_model / alpha,
            r_nn_hw,
            r_nn_model,
            spec,
        })
    }

    /// Detuning realising `mu` under the spec's sign convention.
    pub fn detuning_for(&self, mu_ev: f64) -> f64 {
        -self.spec.sign.detuning_coefficient() * detuning_from_mu(mu_ev, self.v_model, self.alpha_v)
    }

    pub fn mu_for(&self, detuning_ev: f64) -> f64 {
        mu_from_detuning(
            -self.spec.sign.detuning_coefficient() * detuning_ev,
            self.v_model,
            self.alpha_v,
        )
    }

    pub fn effective_temperature(&self, t_sampling_k: f64) -> Result<f64> {
        effective_temperature(t_sampling_k, self.alpha_v)
    }

    pub fn mu_range(&self) -> (f64, f64) {
        accessible_mu_range(&self.spec, self.v_model, self.alpha_v)
    }

    /// Largest nearest-neighbour pair energy realised on the device, C₆/r_hw⁶.
    pub fn v_nn_scaled(&self) -> f64 {
        self.spec.pair_energy(self.r_nn_hw)
    }
}
