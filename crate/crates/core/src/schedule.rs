//! Annealing waveforms and the exported device program.
//!
//! Detuning holds at its initial value, ramps linearly, then holds at its
//! final value. The Rabi amplitude rises during the first hold, stays flat
//! through the ramp and falls during the last hold. Phase stays at zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware::{validate_positions, HardwareSpec, Layout, ValidationReport, Violation};
use crate::units::{ev_to_rad_per_s, rad_per_s_to_ev};

pub const DEFAULT_TOTAL_TIME_US: f64 = 4.0;
pub const DEFAULT_HOLD_FRACTION: f64 = 0.0625;
/// Placeholder peak Rabi frequency in rad/s; configurable per run.
pub const DEFAULT_RABI_PEAK_RAD_S: f64 = 15.8e6;

/// Relative slack on the detuning bound, absorbing unit round trips.
const DETUNING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformKind {
    /// rad/s
    Rabi,
    /// eV
    Detuning,
    /// rad
    Phase,
}

/// Piecewise-linear waveform; knots are (time in μs, value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub kind: WaveformKind,
    pub knots: Vec<(f64, f64)>,
}

impl Waveform {
    pub fn new(kind: WaveformKind, knots: Vec<(f64, f64)>) -> Result<Self> {
        let w = Waveform { kind, knots };
        if let Some(msg) = w.timing_problem() {
            return Err(Error::InvalidArgument(msg));
        }
        Ok(w)
    }

    fn timing_problem(&self) -> Option<String> {
        let kind = format!("{:?}", self.kind).to_lowercase();
        match self.knots.first() {
            None => return Some(format!("{kind} waveform has no knots")),
            Some(&(t0, _)) if t0 != 0.0 => return Some(format!("{kind} waveform starts at {t0} us, not 0")),
            _ => {}
        }
        if self.knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Some(format!("{kind} knot times are not strictly increasing"));
        }
        if self.knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Some(format!("{kind} waveform has non-finite knots"));
        }
        None
    }

    pub fn end_time(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.0)
    }

    /// Linear interpolation; constant beyond the end knots.
    pub fn value_at(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        let i = k.partition_point(|&(tk, _)| tk <= t);
        if i >= k.len() {
            return k[k.len() - 1].1;
        }
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        if t == t0 {
            return v0;
        }
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub rabi: Waveform,
    pub detuning: Waveform,
    pub phase: Waveform,
    pub total_time_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub detuning_final_ev: f64,
    pub detuning_initial_ev: f64,
    pub total_time_us: f64,
    pub hold_fraction: f64,
    pub rabi_peak_rad_s: f64,
}

impl ScheduleParams {
    /// Defaults for a given final detuning: initial detuning at the lower
    /// hardware limit, 4 μs total, 6.25 % holds.
    pub fn with_final(detuning_final_ev: f64, spec: &HardwareSpec) -> Self {
        ScheduleParams {
            detuning_final_ev,
            detuning_initial_ev: -spec.detuning_max_ev,
            total_time_us: DEFAULT_TOTAL_TIME_US,
            hold_fraction: DEFAULT_HOLD_FRACTION,
            rabi_peak_rad_s: DEFAULT_RABI_PEAK_RAD_S,
        }
    }
}

pub fn build_schedule(p: &ScheduleParams) -> Result<Schedule> {
    let t = p.total_time_us;
    let h = p.hold_fraction;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("total time must be positive, got {t} us")));
    }
    if !(0.0..0.5).contains(&h) {
        return Err(Error::InvalidArgument(format!("hold fraction {h} outside [0, 0.5)")));
    }
    if !(p.rabi_peak_rad_s >= 0.0) {
        return Err(Error::InvalidArgument("rabi peak must be non-negative".into()));
    }
    let (t1, t2) = (h * t, (1.0 - h) * t);
    let (d0, d1) = (p.detuning_initial_ev, p.detuning_final_ev);
    let (detuning, rabi) = if h == 0.0 {
        (vec![(0.0, d0), (t, d1)], vec![(0.0, 0.0), (t / 2.0, p.rabi_peak_rad_s), (t, 0.0)])
    } else {
        (
            vec![(0.0, d0), (t1, d0), (t2, d1), (t, d1)],
            vec![(0.0, 0.0), (t1, p.rabi_peak_rad_s), (t2, p.rabi_peak_rad_s), (t, 0.0)],
        )
    };
    Ok(Schedule {
        rabi: Waveform::new(WaveformKind::Rabi, rabi)?,
        detuning: Waveform::new(WaveformKind::Detuning, detuning)?,
        phase: Waveform::new(WaveformKind::Phase, vec![(0.0, 0.0), (t, 0.0)])?,
        total_time_us: t,
    })
}

impl Schedule {
    /// Detuning ramp rate in eV/μs (zero without a ramp).
    pub fn ramp_rate_ev_per_us(&self) -> f64 {
        let k = &self.detuning.knots;
        k.windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .fold(0.0, |a: f64, r| if r.abs() > a.abs() { r } else { a })
    }

    /// (t μs, Ω rad/s, Δ eV, φ rad) at `points` evenly spaced times.
    pub fn samples(&self, points: usize) -> Vec<[f64; 4]> {
        let t = self.total_time_us;
        (0..points)
            .map(|k| {
                let x = if points > 1 { t * k as f64 / (points - 1) as f64 } else { 0.0 };
                [x, self.rabi.value_at(x), self.detuning.value_at(x), self.phase.value_at(x)]
            })
            .collect()
    }

    pub fn samples_csv(&self, points: usize) -> String {
        let mut out = String::from("time_us,rabi_rad_per_s,detuning_ev,phase_rad\n");
        for [t, o, d, p] in self.samples(points) {
            out.push_str(&format!("{t},{o:e},{d:e},{p}\n"));
        }
        out
    }
}

/// Flags detuning outside ±Δ_g^max, negative or non-vanishing-endpoint
/// Rabi values, nonzero phase and inconsistent timing.
pub fn validate_schedule(schedule: &Schedule, spec: &HardwareSpec) -> ValidationReport {
    let mut violations = Vec::new();
    let total = schedule.total_time_us;
    for w in [&schedule.rabi, &schedule.detuning, &schedule.phase] {
        if let Some(message) = w.timing_problem() {
            violations.push(Violation::WaveformTiming { message });
        } else if w.end_time() != total {
            violations.push(Violation::WaveformTiming {
                message: format!("{:?} waveform ends at {} us, total is {total} us", w.kind, w.end_time()).to_lowercase(),
            });
        }
    }
    let max = spec.detuning_max_ev;
    for &(t, v) in &schedule.detuning.knots {
        if v.abs() > max * (1.0 + DETUNING_SLACK) {
            violations.push(Violation::DetuningOutOfRange { time_us: t, value_ev: v, max_ev: max });
        }
    }
    for &(t, v) in &schedule.rabi.knots {
        if v < 0.0 {
            violations.push(Violation::NegativeRabi { time_us: t, value_rad_s: v });
        }
    }
    for &(t, v) in [schedule.rabi.knots.first(), schedule.rabi.knots.last()].into_iter().flatten() {
        if v != 0.0 {
            violations.push(Violation::RabiEndpoint { time_us: t, value_rad_s: v });
        }
    }
    for &(t, v) in &schedule.phase.knots {
        if v != 0.0 {
            violations.push(Violation::NonzeroPhase { time_us: t, value_rad: v });
        }
    }
    ValidationReport { violations }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramWaveform {
    pub unit: String,
    pub times_s: Vec<f64>,
    pub values: Vec<f64>,
}

/// Device program: atom coordinates plus the three drive waveforms in SI
/// angular units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramDoc {
    pub atoms_um: Vec<[f64; 2]>,
    pub total_time_s: f64,
    pub rabi: ProgramWaveform,
    pub detuning: ProgramWaveform,
    pub phase: ProgramWaveform,
}

fn program_waveform(w: &Waveform, unit: &str, convert: impl Fn(f64) -> f64) -> ProgramWaveform {
    ProgramWaveform {
        unit: unit.into(),
        times_s: w.knots.iter().map(|k| k.0 * 1e-6).collect(),
        values: w.knots.iter().map(|k| convert(k.1)).collect(),
    }
}

fn schedule_waveform(p: &ProgramWaveform, kind: WaveformKind, convert: impl Fn(f64) -> f64) -> Result<Waveform> {
    if p.times_s.len() != p.values.len() {
        return Err(Error::InvalidArgument(format!("{kind:?} times and values differ in length")));
    }
    Waveform::new(kind, p.times_s.iter().zip(&p.values).map(|(t, v)| (t * 1e6, convert(*v))).collect())
}

/// Validates layout and schedule, then converts to the program document.
pub fn export_program(layout: &Layout, schedule: &Schedule, spec: &HardwareSpec) -> Result<ProgramDoc> {
    let mut report = validate_positions(layout.positions(), spec);
    report.violations.extend(validate_schedule(schedule, spec).violations);
    report.into_result()?;
    Ok(ProgramDoc {
        atoms_um: layout.positions().to_vec(),
        total_time_s: schedule.total_time_us * 1e-6,
        rabi: program_waveform(&schedule.rabi, "rad/s", |v| v),
        detuning: program_waveform(&schedule.detuning, "rad/s", ev_to_rad_per_s),
        phase: program_waveform(&schedule.phase, "rad", |v| v),
    })
}

/// Atom positions and schedule back from a program document.
pub fn import_program(doc: &ProgramDoc) -> Result<(Vec<[f64; 2]>, Schedule)> {
    let schedule = Schedule {
        rabi: schedule_waveform(&doc.rabi, WaveformKind::Rabi, |v| v)?,
        detuning: schedule_waveform(&doc.detuning, WaveformKind::Detuning, rad_per_s_to_ev)?,
        phase: schedule_waveform(&doc.phase, WaveformKind::Phase, |v| v)?,
        total_time_us: doc.total_time_s * 1e6,
    };
    Ok((doc.atoms_um.clone(), schedule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardware::scale_to_hardware;
    use crate::lattice::{build_flake, FlakeShape};

    const DG_MAX: f64 = 8.227_649e-8;

    fn default_schedule(final_ev: f64) -> Schedule {
        build_schedule(&ScheduleParams::with_final(final_ev, &HardwareSpec::default())).unwrap()
    }

    #[test]
    fn default_timing() {
        let s = default_schedule(DG_MAX);
        assert_eq!(s.total_time_us, 4.0);
        let times: Vec<f64> = s.detuning.knots.iter().map(|k| k.0).collect();
        assert_eq!(times, vec![0.0, 0.25, 3.75, 4.0]);
        assert_eq!(times[2] - times[1], 3.5);
        assert_eq!(s.rabi.value_at(0.0), 0.0);
        assert_eq!(s.rabi.value_at(4.0), 0.0);
        assert!(s.phase.knots.iter().all(|k| k.1 == 0.0));
        assert_eq!(s.detuning.value_at(0.0), -DG_MAX);
        assert_eq!(s.detuning.value_at(4.0), DG_MAX);
        assert!(validate_schedule(&s, &HardwareSpec::default()).is_valid());
    }

    #[test]
    fn ramp_slope() {
        let s = default_schedule(8.2276e-8);
        let p = ScheduleParams { detuning_initial_ev: -8.2276e-8, ..ScheduleParams::with_final(8.2276e-8, &HardwareSpec::default()) };
        let s2 = build_schedule(&p).unwrap();
        assert!((s2.ramp_rate_ev_per_us() - 4.70e-8).abs() < 0.005e-8);
        assert!(s.ramp_rate_ev_per_us() > 0.0);
        let flat = build_schedule(&ScheduleParams { detuning_initial_ev: 1e-8, ..ScheduleParams::with_final(1e-8, &HardwareSpec::default()) }).unwrap();
        assert_eq!(flat.ramp_rate_ev_per_us(), 0.0);
        assert!(flat.samples(50).iter().all(|s| s[2] == 1e-8));
    }

    #[test]
    fn zero_hold_gives_triangle() {
        let p = ScheduleParams { hold_fraction: 0.0, ..ScheduleParams::with_final(0.0, &HardwareSpec::default()) };
        let s = build_schedule(&p).unwrap();
        assert_eq!(s.rabi.knots.len(), 3);
        assert_eq!(s.rabi.value_at(2.0), DEFAULT_RABI_PEAK_RAD_S);
        assert!(build_schedule(&ScheduleParams { hold_fraction: 0.5, ..p }).is_err());
        assert!(build_schedule(&ScheduleParams { hold_fraction: -0.1, ..p }).is_err());
        assert!(build_schedule(&ScheduleParams { total_time_us: 0.0, ..p }).is_err());
    }

    #[test]
    fn detuning_bound_is_enforced() {
        let s = default_schedule(9e-8);
        let r = validate_schedule(&s, &HardwareSpec::default());
        assert_eq!(r.violations.len(), 2);
        assert!(r.violations.iter().all(|v| matches!(v, Violation::DetuningOutOfRange { time_us, .. } if *time_us >= 3.75)));
        assert!(r.violations[0].to_string().contains("detuning above 8.227649e-8 eV"), "{}", r.violations[0]);
    }

    #[test]
    fn phase_and_rabi_violations() {
        let mut s = default_schedule(0.0);
        s.phase.knots[1].1 = 0.1;
        s.rabi.knots[1].1 = -1.0;
        let r = validate_schedule(&s, &HardwareSpec::default());
        assert!(r.violations.iter().any(|v| matches!(v, Violation::NonzeroPhase { .. })));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::NegativeRabi { .. })));
    }

    #[test]
    fn export_round_trip() {
        let layout = scale_to_hardware(&build_flake(FlakeShape::Flake28).unwrap(), 4.0).unwrap();
        let spec = HardwareSpec::default();
        let p = ScheduleParams { detuning_initial_ev: -8.2276e-8, ..ScheduleParams::with_final(8.2276e-8, &spec) };
        let s = build_schedule(&p).unwrap();
        let doc = export_program(&layout, &s, &spec).unwrap();
        assert!((doc.detuning.values[3] - 1.25e8).abs() / 1.25e8 < 1e-3);
        assert_eq!(doc.total_time_s, 4e-6);
        let json = serde_json::to_string(&doc).unwrap();
        let (atoms, back) = import_program(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(atoms.len(), 28);
        assert!((back.total_time_us - 4.0).abs() < 1e-12);
        for (a, b) in [(&s.rabi, &back.rabi), (&s.detuning, &back.detuning), (&s.phase, &back.phase)] {
            for (x, y) in a.knots.iter().zip(&b.knots) {
                assert!((x.0 - y.0).abs() <= 1e-9 * x.0.abs().max(1.0));
                assert!((x.1 - y.1).abs() <= 1e-9 * x.1.abs());
            }
        }
    }

    #[test]
    fn export_rejects_invalid_inputs() {
        let spec = HardwareSpec::default();
        let doc = crate::lattice::LatticeDoc { sites: vec![], periodic: false, cell: None, r_nn_um: Some(4.0) };
        if let Ok(empty) = Layout::from_doc(&doc) {
            assert!(export_program(&empty, &default_schedule(0.0), &spec).is_err());
        }
        let tight = scale_to_hardware(&build_flake(FlakeShape::Rect { rows: 1, cols: 2 }).unwrap(), 3.9).unwrap();
        assert!(export_program(&tight, &default_schedule(0.0), &spec).is_err());
        let layout = scale_to_hardware(&build_flake(FlakeShape::Rect { rows: 1, cols: 2 }).unwrap(), 4.0).unwrap();
        assert!(export_program(&layout, &default_schedule(9e-8), &spec).is_err());
    }

    #[test]
    fn sweeps_share_rabi_and_phase() {
        let schedules: Vec<Schedule> =
            (0..10).map(|k| default_schedule(-0.5 * DG_MAX + 1.5 * DG_MAX * k as f64 / 9.0)).collect();
        for s in &schedules[1..] {
            assert_eq!(s.rabi, schedules[0].rabi);
            assert_eq!(s.phase, schedules[0].phase);
        }
    }

    #[test]
    fn interpolation_hits_knots() {
        let w = Waveform::new(WaveformKind::Detuning, vec![(0.0, 1.0), (1.0, 3.0), (2.0, 3.0)]).unwrap();
        assert_eq!(w.value_at(0.5), 2.0);
        assert_eq!(w.value_at(1.0), 3.0);
        assert_eq!(w.value_at(5.0), 3.0);
        assert!(Waveform::new(WaveformKind::Rabi, vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(Waveform::new(WaveformKind::Rabi, vec![(0.5, 0.0)]).is_err());
    }
}
