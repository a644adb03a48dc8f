//! Grand-canonical sampling of nitrogen dopants in honeycomb lattices,
//! mapped onto Rydberg atom arrays.
//!
//! The crate covers the whole pipeline: lattice geometry and hardware
//! layouts, the two-parameter material model and its least-squares fit,
//! the α-rescaling between material and hardware energies, exhaustive and
//! Monte Carlo Boltzmann statistics, a mock QPU, symmetry reduction of
//! configurations and annealing schedule export.
//!
//! ```
//! use rydmap_core::{build_flake, scale_to_hardware, validate_layout, FlakeShape, HardwareSpec};
//!
//! let flake = build_flake(FlakeShape::Flake28).unwrap();
//! let layout = scale_to_hardware(&flake, 4.0).unwrap();
//! assert!(validate_layout(&layout, &HardwareSpec::default()).is_valid());
//! ```

// `!(x > 0.0)` is used deliberately so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod configuration;
pub mod energetics;
pub mod error;
pub mod fitting;
pub mod hamiltonian;
pub mod hardware;
pub mod io;
pub mod lattice;
pub mod rescaling;
pub mod sampling;
pub mod schedule;
pub mod symmetry;
pub mod units;

pub use configuration::{Configuration, MAX_SITES};
pub use energetics::{
    formation_energy, grand_canonical_energy, hardware_energy, material_energy, scaling_equivalence_residual,
    truncation_bound, ChemicalPotential, EnergyModel, OnSite, PairRange, ReferenceEnergies, SHELL_FACTORS,
};
pub use error::{Error, Result};
pub use fitting::{build_design_row, evaluate_metrics, fit_model, DatasetRecord, DesignRow, FitResult, Metrics, Split};
pub use hamiltonian::{Coupling, EnergySource, Hamiltonian};
pub use hardware::{
    scale_to_hardware, validate_layout, validate_positions, AreaMode, HardwareSpec, Layout, RowMode, SignConvention,
    ValidationReport, Violation,
};
pub use lattice::{build_flake, build_supercell, FlakeShape, Lattice, LatticeDoc, LatticeSpec, Sublattice};
pub use rescaling::{
    accessible_mu_range, alpha_v, detuning_from_mu, effective_temperature, mu_from_detuning, RescaledMapping,
};
pub use sampling::{
    enumerate_stats, exact_boltzmann_sample, fit_effective_temperature, metropolis_sample, mock_qpu_run,
    qpu_mean_concentration, tvd, uniform_mc_stats, BoltzmannStats, HistogramSpec, MetropolisConfig, NoiseModel,
    Proposal, SampleSet, SweepPoint, SweepResult, TemperatureFit, ThermalBackend, UmcEstimate,
};
pub use schedule::{build_schedule, export_program, import_program, validate_schedule, Schedule, ScheduleParams, Waveform};
pub use symmetry::{automorphisms, canonical_form, expand_dataset, expand_orbit, point_group, reduce_to_sic, SymmetryGroup};
