use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rydmap_core::{AreaMode, HardwareSpec, LatticeSpec, RowMode, SignConvention};

#[derive(Debug, Parser)]
#[command(name = "rydmap", version, about = "Dopant thermodynamics on honeycomb lattices mapped onto Rydberg atom arrays")]
pub struct Cli {
    /// Flat `key = value` file; keys are long flag names of the chosen command.
    /// Flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Sign of the detuning term: `hamiltonian` (E = −Δg·N + …) or `flipped`.
    #[arg(long, global = true, default_value = "hamiltonian")]
    pub sign_convention: SignArg,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SignArg {
    Hamiltonian,
    Flipped,
}

impl From<SignArg> for SignConvention {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Hamiltonian => SignConvention::Hamiltonian,
            SignArg::Flipped => SignConvention::Flipped,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit (V, R_NN) to a formation-energy dataset.
    Fit(FitArgs),
    /// Evaluate a saved fit on the test records of a dataset.
    Metrics(MetricsArgs),
    /// Print the Δg ↔ Δμ mapping table and effective temperatures.
    Rescale(RescaleArgs),
    /// Mean concentration over a detuning or chemical-potential grid.
    Sweep(SweepArgs),
    /// Exact Boltzmann statistics at one point.
    Enumerate(PointArgs),
    /// Importance-sampled Boltzmann statistics at one point.
    Umc(UmcArgs),
    /// Mock QPU shots at one detuning.
    Sample(SampleArgs),
    /// Effective sampling temperature from a measured sweep.
    FitTemp(FitTempArgs),
    /// Compare two concentration pmfs or two sweeps.
    Compare(CompareArgs),
    /// Symmetry reduction and dataset expansion.
    #[command(subcommand)]
    Symmetry(SymmetryCommand),
    /// Build, validate and export an annealing schedule.
    Schedule(ScheduleArgs),
    /// Check a layout against the hardware constraints.
    ValidateLayout(LayoutArgs),
}

#[derive(Debug, Subcommand)]
pub enum SymmetryCommand {
    /// Group configurations into symmetry-distinct classes.
    Reduce(ReduceArgs),
    /// Label dataset records with their symmetry class and add all equivalent copies.
    ExpandDataset(ExpandArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AreaArg {
    Default,
    Tall,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RowArg {
    Default,
    Tight,
}

#[derive(Debug, Clone, Args)]
pub struct HardwareArgs {
    /// Usable area: default (76 × 75 μm) or tall (128 × 75 μm).
    #[arg(long, default_value = "default")]
    pub area: AreaArg,
    /// Minimum row spacing: default (4 μm) or tight (2 μm).
    #[arg(long, default_value = "tight")]
    pub rows: RowArg,
    /// Override the maximum detuning magnitude in eV
    #[arg(long, value_name = "EV")]
    pub detuning_max_ev: Option<f64>,
}

impl HardwareArgs {
    pub fn spec(&self, sign: SignConvention) -> HardwareSpec {
        let mut spec = HardwareSpec {
            area_mode: match self.area {
                AreaArg::Default => AreaMode::Default,
                AreaArg::Tall => AreaMode::Tall,
            },
            row_mode: match self.rows {
                RowArg::Default => RowMode::Default,
                RowArg::Tight => RowMode::Tight,
            },
            sign,
            ..HardwareSpec::default()
        };
        if let Some(d) = self.detuning_max_ev {
            spec.detuning_max_ev = d;
        }
        spec
    }
}

#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    /// flake28, flake78, hexagon, RxC or supercell:AxB.
    #[arg(long, default_value = "flake28")]
    pub lattice: LatticeSpec,
    /// Hardware nearest-neighbour spacing in μm.
    #[arg(long, default_value_t = 4.0)]
    pub r_nn_um: f64,
    #[command(flatten)]
    pub hardware: HardwareArgs,
}

/// Energy-model provenance: explicit parameters or a dataset to fit.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Material on-site energy V in eV.
    #[arg(long, value_name = "EV", requires = "r_nn_model_um", conflicts_with = "dataset")]
    pub v_ev: Option<f64>,
    /// Material nearest-neighbour distance R_NN in μm.
    #[arg(long, value_name = "UM", requires = "v_ev")]
    pub r_nn_model_um: Option<f64>,
    /// Dataset CSV to fit instead of explicit parameters.
    #[arg(long, value_name = "CSV")]
    pub dataset: Option<PathBuf>,
    /// Lattice the dataset configurations live on.
    #[arg(long, default_value = "supercell:3x13")]
    pub dataset_lattice: LatticeSpec,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_name = "CSV")]
    pub dataset: PathBuf,
    #[arg(long, default_value = "supercell:3x13")]
    pub lattice: LatticeSpec,
    /// Write the fit JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Residuals CSV (bitstring,energy_ev,predicted_ev,residual_ev).
    #[arg(long)]
    pub residuals: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Fit JSON written by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub dataset: PathBuf,
    #[arg(long, default_value = "supercell:3x13")]
    pub lattice: LatticeSpec,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RescaleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Hardware spacings in μm, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4.0")]
    pub r_nn_um: Vec<f64>,
    /// Device sampling temperature in K.
    #[arg(long, default_value_t = 41e-6)]
    pub temp_k: f64,
    /// Detuning grid points spanning [−Δg_max, Δg_max].
    #[arg(long, default_value_t = 11)]
    pub points: usize,
    #[command(flatten)]
    pub hardware: HardwareArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum Engine {
    Enumerate,
    Umc,
    MockQpu,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendArg {
    Auto,
    Exact,
    Metropolis,
}

impl From<BackendArg> for rydmap_core::ThermalBackend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Auto => Self::Auto,
            BackendArg::Exact => Self::Exact,
            BackendArg::Metropolis => Self::Metropolis,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Per-site loading probability (default gives a 60.5 % retained fraction on 28 sites).
    #[arg(long)]
    pub p_fill: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub p_flip: f64,
    /// Thermal backend: exact up to 28 sites under `auto`, Metropolis above.
    #[arg(long, default_value = "auto")]
    pub backend: BackendArg,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Statistics engine used at each grid point
    #[arg(long, default_value = "enumerate")]
    pub engine: Engine,
    /// Detuning grid in eV: `a,b,c` or `lo:hi:n`. Default 10 points over [−Δg_max/2, Δg_max].
    #[arg(long, allow_hyphen_values = true, conflicts_with = "mu_ev")]
    pub detuning_ev: Option<String>,
    /// Chemical-potential grid in eV: `a,b,c` or `lo:hi:n`.
    #[arg(long, allow_hyphen_values = true)]
    pub mu_ev: Option<String>,
    /// Device sampling temperature in K.
    #[arg(long, default_value_t = 41e-6)]
    pub temp_k: f64,
    /// Shots per point for the mock QPU
    #[arg(long, default_value_t = 1000)]
    pub shots: usize,
    /// Monte Carlo samples per point for the umc engine.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Proposal: `uniform` or `stratified:KMIN..KMAX`
    #[arg(long, default_value = "stratified:0..10")]
    pub proposal: rydmap_core::Proposal,
    /// Root seed; runs with the same seed are identical
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum Mode {
    Hardware,
    Material,
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// hardware: device energy at the detuning and T; material: material energy at Δμ and T.
    #[arg(long, default_value = "hardware")]
    pub mode: Mode,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "mu_ev")]
    pub detuning_ev: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_ev: Option<f64>,
    /// Temperature in K (device temperature in hardware mode, material temperature otherwise).
    #[arg(long, default_value_t = 41e-6)]
    pub temp_k: f64,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    /// Energy histogram CSV.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UmcArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Proposal: `uniform` or `stratified:KMIN..KMAX`
    #[arg(long, default_value = "stratified:0..10")]
    pub proposal: rydmap_core::Proposal,
    /// Root seed; runs with the same seed are identical
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "mu_ev")]
    pub detuning_ev: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_ev: Option<f64>,
    #[arg(long, default_value_t = 41e-6)]
    pub temp_k: f64,
    /// Shots per point for the mock QPU
    #[arg(long, default_value_t = 1000)]
    pub shots: usize,
    /// Root seed; runs with the same seed are identical
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Shot records as JSONL (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Concentration pmf CSV of the valid shots.
    #[arg(long)]
    pub pmf: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitTempArgs {
    /// Sweep CSV with measured mean concentrations.
    #[arg(long)]
    pub measured: PathBuf,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Temperature grid in K: `a,b,c` or `lo:hi:n`. Default 1 μK to 60 μK in 60 steps.
    #[arg(long)]
    pub t_grid: Option<String>,
    /// RMSE-versus-temperature CSV.
    #[arg(long)]
    pub rmse_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// pmf file (JSON array or CSV) or sweep CSV.
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long, default_value = "supercell:3x3")]
    pub lattice: LatticeSpec,
    /// One bitstring per line.
    #[arg(long)]
    pub configs: Option<PathBuf>,
    /// Enumerate every configuration with this many dopants instead.
    #[arg(long, conflicts_with = "configs")]
    pub dopants: Option<usize>,
    /// Group permutations as JSON.
    #[arg(long)]
    pub group_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[arg(long, value_name = "CSV")]
    pub dataset: PathBuf,
    #[arg(long, default_value = "supercell:3x13")]
    pub lattice: LatticeSpec,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Final detuning in eV.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "mu_ev")]
    pub detuning_ev: Option<f64>,
    /// Target chemical potential in eV (mapped to the final detuning).
    #[arg(long, allow_hyphen_values = true)]
    pub mu_ev: Option<f64>,
    /// Initial detuning in eV (default −Δg_max).
    #[arg(long, allow_hyphen_values = true)]
    pub detuning_initial_ev: Option<f64>,
    #[arg(long, default_value_t = rydmap_core::schedule::DEFAULT_TOTAL_TIME_US)]
    pub total_time_us: f64,
    #[arg(long, default_value_t = rydmap_core::schedule::DEFAULT_HOLD_FRACTION)]
    pub hold_fraction: f64,
    /// Peak Rabi frequency in rad/s.
    #[arg(long, default_value_t = rydmap_core::schedule::DEFAULT_RABI_PEAK_RAD_S)]
    pub rabi_peak: f64,
    /// Program JSON (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Waveform samples CSV at 1000 points.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Layout JSON (positions in μm) instead of --lattice/--r-nn-um.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
