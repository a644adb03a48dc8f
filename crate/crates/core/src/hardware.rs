//! Device constraints, hardware-scale layouts and layout validation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{norm, scale, sub, Lattice, LatticeDoc};
use crate::units::c6_rad_m6_s_to_ev_um6;

/// Default C₆ coefficient in rad·m⁶/s.
pub const DEFAULT_C6_RAD_M6_S: f64 = 5.42e-24;
/// Largest accessible global detuning magnitude in eV.
pub const DEFAULT_DETUNING_MAX_EV: f64 = 8.227_649e-8;

/// Separation tolerance (μm) applied before reporting a distance violation.
const DISTANCE_TOL_UM: f64 = 1e-9;
/// Grid used to snap y coordinates when identifying rows.
const ROW_SNAP_UM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaMode {
    /// 76 μm × 75 μm.
    #[default]
    Default,
    /// 128 μm × 75 μm.
    Tall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowMode {
    /// 4 μm minimum row spacing.
    Default,
    /// 2 μm minimum row spacing.
    #[default]
    Tight,
}

/// Sign of the detuning term in the hardware energy.
///
/// `Hamiltonian` is `E = −Δ_g·‖n‖₁ + Σ C₆/R⁶` (positive detuning favours
/// excitation). `Flipped` uses `+Δ_g·‖n‖₁` for cross-checking plots drawn
/// with the opposite convention; the detuning ↔ chemical potential map flips
/// along with it so that the two energies stay proportional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    #[default]
    Hamiltonian,
    Flipped,
}

impl SignConvention {
    /// Coefficient multiplying `Δ_g·‖n‖₁` in the hardware energy.
    pub fn detuning_coefficient(self) -> f64 {
        match self {
            SignConvention::Hamiltonian => -1.0,
            SignConvention::Flipped => 1.0,
        }
    }
}

impl FromStr for SignConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamiltonian" => Ok(SignConvention::Hamiltonian),
            "flipped" => Ok(SignConvention::Flipped),
            _ => Err(Error::InvalidArgument(format!("unknown sign convention {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareSpec {
    pub c6_rad_m6_s: f64,
    pub detuning_max_ev: f64,
    pub r_min_atom_um: f64,
    pub max_atoms: usize,
    pub area_mode: AreaMode,
    pub row_mode: RowMode,
    #[serde(default)]
    pub sign: SignConvention,
}

impl Default for HardwareSpec {
    fn default() -> Self {
        HardwareSpec {
            c6_rad_m6_s: DEFAULT_C6_RAD_M6_S,
            detuning_max_ev: DEFAULT_DETUNING_MAX_EV,
            r_min_atom_um: 4.0,
            max_atoms: 256,
            area_mode: AreaMode::Default,
            row_mode: RowMode::Tight,
            sign: SignConvention::Hamiltonian,
        }
    }
}

impl HardwareSpec {
    /// C₆ in eV·μm⁶.
    pub fn c6_ev_um6(&self) -> f64 {
        c6_rad_m6_s_to_ev_um6(self.c6_rad_m6_s)
    }

    pub fn r_min_row_um(&self) -> f64 {
        match self.row_mode {
            RowMode::Default => 4.0,
            RowMode::Tight => 2.0,
        }
    }

    /// Usable (width, height) in μm.
    pub fn area_um(&self) -> (f64, f64) {
        match self.area_mode {
            AreaMode::Default => (76.0, 75.0),
            AreaMode::Tall => (128.0, 75.0),
        }
    }

    /// Pair interaction C₆/R⁶ in eV for a separation in μm.
    pub fn pair_energy(&self, r_um: f64) -> f64 {
        self.c6_ev_um6() / r_um.powi(6)
    }
}

/// Atom positions in μm obtained by scaling a lattice.
#[derive(Debug, Clone)]
pub struct Layout {
    positions: Vec<[f64; 2]>,
    r_nn_um: f64,
    source: Lattice,
}

impl Layout {
    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn r_nn_um(&self) -> f64 {
        self.r_nn_um
    }

    pub fn source_lattice(&self) -> &Lattice {
        &self.source
    }

    pub fn num_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        norm(sub(self.positions[j], self.positions[i]))
    }

    pub fn to_doc(&self) -> LatticeDoc {
        LatticeDoc::new(
            self.positions.iter().copied().zip(self.source.sites().iter().map(|s| s.sublattice)),
            self.source.is_periodic(),
            self.source.cell_vectors().map(|c| [scale(c[0], self.r_nn_um), scale(c[1], self.r_nn_um)]),
            Some(self.r_nn_um),
        )
    }

    /// Rebuilds a layout from its JSON document.
    pub fn from_doc(doc: &LatticeDoc) -> Result<Self> {
        let r = doc
            .r_nn_um
            .ok_or_else(|| Error::InconsistentLayout("layout document lacks r_nn_um".into()))?;
        let mut lattice_doc = doc.clone();
        for s in &mut lattice_doc.sites {
            s.x /= r;
            s.y /= r;
        }
        lattice_doc.cell = doc.cell.map(|c| [scale(c[0], 1.0 / r), scale(c[1], 1.0 / r)]);
        lattice_doc.r_nn_um = None;
        scale_to_hardware(&Lattice::from_doc(&lattice_doc)?, r)
    }
}

/// Scales lattice coordinates so nearest neighbours sit `r_nn_um` apart.
pub fn scale_to_hardware(lattice: &Lattice, r_nn_um: f64) -> Result<Layout> {
    if !(r_nn_um > 0.0) {
        return Err(Error::InvalidArgument(format!("r_nn must be positive, got {r_nn_um}")));
    }
    Ok(Layout {
        positions: lattice.sites().iter().map(|s| scale(s.frac_pos, r_nn_um)).collect(),
        r_nn_um,
        source: lattice.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    AtomCount { count: usize, max: usize },
    EmptyLayout,
    MinAtomDistance { found_um: f64, required_um: f64, i: usize, j: usize },
    RowSpacing { found_um: f64, required_um: f64 },
    BoundingBox { width_um: f64, height_um: f64, max_width_um: f64, max_height_um: f64 },
    DetuningOutOfRange { time_us: f64, value_ev: f64, max_ev: f64 },
    NegativeRabi { time_us: f64, value_rad_s: f64 },
    NonzeroPhase { time_us: f64, value_rad: f64 },
    RabiEndpoint { time_us: f64, value_rad_s: f64 },
    WaveformTiming { message: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AtomCount { count, max } => write!(f, "atom count {count} exceeds {max}"),
            Violation::EmptyLayout => write!(f, "layout has no atoms"),
            Violation::MinAtomDistance { found_um, required_um, i, j } => write!(
                f,
                "min atom distance {required_um} um violated: atoms {i} and {j} are {found_um:.6} um apart"
            ),
            Violation::RowSpacing { found_um, required_um } => {
                write!(f, "row spacing {found_um:.6} um below {required_um} um")
            }
            Violation::BoundingBox { width_um, height_um, max_width_um, max_height_um } => write!(
                f,
                "bounding box {width_um:.3}x{height_um:.3} um exceeds {max_width_um}x{max_height_um} um"
            ),
            Violation::DetuningOutOfRange { time_us, value_ev, max_ev } => {
                let side = if *value_ev > 0.0 { "above" } else { "below" };
                let bound = if *value_ev > 0.0 { *max_ev } else { -max_ev };
                write!(f, "detuning {side} {bound:e} eV at t = {time_us} us ({value_ev:e} eV)")
            }
            Violation::NegativeRabi { time_us, value_rad_s } => {
                write!(f, "negative rabi amplitude {value_rad_s:e} rad/s at t = {time_us} us")
            }
            Violation::NonzeroPhase { time_us, value_rad } => {
                write!(f, "nonzero phase {value_rad} rad at t = {time_us} us")
            }
            Violation::RabiEndpoint { time_us, value_rad_s } => {
                write!(f, "rabi amplitude {value_rad_s:e} rad/s at endpoint t = {time_us} us must be 0")
            }
            Violation::WaveformTiming { message } => f.write_str(message),
        }
    }
}

/// Constraint violations; an empty report means the input is valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            return Ok(());
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        Err(Error::Validation(msgs.join("; ")))
    }
}

/// Checks atom count, minimum separation, row spacing and the usable area.
pub fn validate_layout(layout: &Layout, spec: &HardwareSpec) -> ValidationReport {
    validate_positions(layout.positions(), spec)
}

pub fn validate_positions(positions: &[[f64; 2]], spec: &HardwareSpec) -> ValidationReport {
    let mut violations = Vec::new();
    let n = positions.len();
    if n == 0 {
        violations.push(Violation::EmptyLayout);
        return ValidationReport { violations };
    }
    if n > spec.max_atoms {
        violations.push(Violation::AtomCount { count: n, max: spec.max_atoms });
    }

    let mut closest: Option<(f64, usize, usize)> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = norm(sub(positions[j], positions[i]));
            if closest.is_none_or(|(c, _, _)| d < c) {
                closest = Some((d, i, j));
            }
        }
    }
    if let Some((d, i, j)) = closest {
        if d + DISTANCE_TOL_UM < spec.r_min_atom_um {
            violations.push(Violation::MinAtomDistance {
                found_um: d,
                required_um: spec.r_min_atom_um,
                i,
                j,
            });
        }
    }

    let mut rows: Vec<i64> = positions.iter().map(|p| (p[1] / ROW_SNAP_UM).round() as i64).collect();
    rows.sort_unstable();
    rows.dedup();
    if let Some(gap) = rows.windows(2).map(|w| (w[1] - w[0]) as f64 * ROW_SNAP_UM).reduce(f64::min) {
        if gap + DISTANCE_TOL_UM < spec.r_min_row_um() {
            violations.push(Violation::RowSpacing { found_um: gap, required_um: spec.r_min_row_um() });
        }
    }

    let (min_x, max_x, min_y, max_y) = positions.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| (a.min(p[0]), b.max(p[0]), c.min(p[1]), d.max(p[1])),
    );
    let (w, h) = (max_x - min_x, max_y - min_y);
    let (max_w, max_h) = spec.area_um();
    if w > max_w + DISTANCE_TOL_UM || h > max_h + DISTANCE_TOL_UM {
        violations.push(Violation::BoundingBox {
            width_um: w,
            height_um: h,
            max_width_um: max_w,
            max_height_um: max_h,
        });
    }

    ValidationReport { violations }
}
