//! Physical constants and unit conversions.
//!
//! Internal units are eV, μm, K and μs throughout the crate.

/// Reduced Planck constant in eV·s.
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;

/// Boltzmann constant in eV/K.
pub const K_B_EV_PER_K: f64 = 8.617_333_262e-5;

/// μm⁶ per m⁶.
const UM6_PER_M6: f64 = 1e36;

/// Angular frequency (rad/s) to energy (eV).
pub fn rad_per_s_to_ev(omega: f64) -> f64 {
    omega * HBAR_EV_S
}

/// Energy (eV) to angular frequency (rad/s).
pub fn ev_to_rad_per_s(energy: f64) -> f64 {
    energy / HBAR_EV_S
}

/// Converts a van der Waals coefficient from rad·m⁶/s to eV·μm⁶.
pub fn c6_rad_m6_s_to_ev_um6(c6: f64) -> f64 {
    c6 * HBAR_EV_S * UM6_PER_M6
}

/// Thermal energy k_B·T in eV.
pub fn thermal_energy(temperature_k: f64) -> f64 {
    K_B_EV_PER_K * temperature_k
}

/// Exact binomial coefficient, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is always divisible by (i + 1) at this point
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Natural log of the binomial coefficient, usable far beyond `u128` range.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c6_conversion() {
        let c6 = c6_rad_m6_s_to_ev_um6(5.42e-24);
        assert!((c6 - 3.5675e-3).abs() / 3.5675e-3 < 1e-4, "{c6}");
    }

    #[test]
    fn rad_s_round_trip() {
        for e in [8.2276e-8, -3.1e-9, 1.0] {
            let back = rad_per_s_to_ev(ev_to_rad_per_s(e));
            assert!(((back - e) / e).abs() < 1e-12);
        }
        assert!((ev_to_rad_per_s(8.2276e-8) - 1.25e8).abs() / 1.25e8 < 1e-3);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(78, 2), Some(3003));
        assert_eq!(binomial(78, 3), Some(76_076));
        assert_eq!(binomial(5, 0), Some(1));
        assert_eq!(binomial(5, 6), Some(0));
        assert!((ln_binomial(78, 3) - 76_076f64.ln()).abs() < 1e-12);
    }
}
