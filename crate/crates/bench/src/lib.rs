//! Shared fixtures for the engine benchmarks.

use rydmap_core::{build_flake, scale_to_hardware, FlakeShape, Hamiltonian, HardwareSpec};

/// Device temperature used by every benchmark, in kelvin.
pub const TEMPERATURE_K: f64 = 41e-6;

/// Hardware Hamiltonian on a `rows`×`cols` flake at 4 µm spacing.
pub fn rect_hamiltonian(rows: usize, cols: usize, detuning_ev: f64) -> Hamiltonian {
    let lattice = build_flake(FlakeShape::Rect { rows, cols }).expect("valid flake");
    let layout = scale_to_hardware(&lattice, 4.0).expect("valid spacing");
    Hamiltonian::hardware(&layout, &HardwareSpec::default(), detuning_ev)
}

/// Hardware Hamiltonian on the 28-site flake at 4 µm spacing.
pub fn flake28_hamiltonian(detuning_ev: f64) -> Hamiltonian {
    let lattice = build_flake(FlakeShape::Flake28).expect("valid flake");
    let layout = scale_to_hardware(&lattice, 4.0).expect("valid spacing");
    Hamiltonian::hardware(&layout, &HardwareSpec::default(), detuning_ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_expected_sizes() {
        assert_eq!(rect_hamiltonian(4, 5, 0.0).num_sites(), 20);
        assert_eq!(flake28_hamiltonian(0.0).num_sites(), 28);
    }
}
