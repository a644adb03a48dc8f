use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use rydmap_core::io::{read_dataset, read_pmf, write_dataset, write_pmf};
use rydmap_core::sampling::{default_temperature_grid, sub_seed};
use rydmap_core::{
    build_schedule, enumerate_stats, evaluate_metrics, expand_dataset, export_program, fit_effective_temperature,
    fit_model, mock_qpu_run, qpu_mean_concentration, reduce_to_sic, scale_to_hardware, tvd, uniform_mc_stats,
    validate_layout, validate_schedule, ChemicalPotential, Configuration, EnergyModel, FitResult, Hamiltonian,
    HardwareSpec, HistogramSpec, Lattice, LatticeDoc, Layout, NoiseModel, RescaledMapping, ScheduleParams, Split,
    SweepPoint, SweepResult, SymmetryGroup,
};

use crate::args::*;

/// Validation failure that should end the process with exit code 2.
#[derive(Debug)]
pub struct ValidationFailed(pub String);

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "validation failed: {}", self.0)
    }
}

impl std::error::Error for ValidationFailed {}

pub struct Ctx {
    pub sign: rydmap_core::SignConvention,
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(path, &s)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// `a,b,c` or `lo:hi:n` (n evenly spaced values including both ends).
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = if parts.len() == 3 {
        let lo: f64 = parts[0].trim().parse()?;
        let hi: f64 = parts[1].trim().parse()?;
        let n: usize = parts[2].trim().parse()?;
        linspace(lo, hi, n)
    } else {
        s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| anyhow!("bad grid value '{v}': {e}"))).collect::<Result<_>>()?
    };
    if grid.is_empty() {
        bail!("grid is empty");
    }
    Ok(grid)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// (V, R_NN) from explicit parameters or a fitted dataset.
fn model_params(m: &ModelArgs, spec: &HardwareSpec) -> Result<Option<(f64, f64)>> {
    if let (Some(v), Some(r)) = (m.v_ev, m.r_nn_model_um) {
        return Ok(Some((v, r)));
    }
    let Some(path) = &m.dataset else {
        return Ok(None);
    };
    let records = read_dataset(&read(path)?)?;
    let fit = fit_model(&records, &m.dataset_lattice.build()?, spec)?;
    Ok(Some((fit.v, fit.require_r_nn()?)))
}

fn mapping(m: &ModelArgs, spec: &HardwareSpec, r_nn_hw: f64) -> Result<Option<RescaledMapping>> {
    model_params(m, spec)?
        .map(|(v, r)| RescaledMapping::new(v, r, r_nn_hw, *spec).map_err(Into::into))
        .transpose()
}

fn require_mapping(m: &ModelArgs, spec: &HardwareSpec, r_nn_hw: f64) -> Result<RescaledMapping> {
    mapping(m, spec, r_nn_hw)?.ok_or_else(|| anyhow!("supply --v-ev and --r-nn-model-um, or --dataset"))
}

fn geometry(g: &GeometryArgs, ctx: &Ctx) -> Result<(Lattice, Layout, HardwareSpec)> {
    let lattice = g.lattice.build()?;
    let layout = scale_to_hardware(&lattice, g.r_nn_um)?;
    Ok((lattice, layout, g.hardware.spec(ctx.sign)))
}

fn noise(n: &NoiseArgs) -> NoiseModel {
    NoiseModel { p_fill: n.p_fill.unwrap_or_else(NoiseModel::default_p_fill), p_readout_flip: n.p_flip }
}

fn symmetry_group(lattice: &Lattice) -> Result<SymmetryGroup> {
    Ok(if lattice.is_periodic() {
        rydmap_core::automorphisms(lattice)?
    } else {
        rydmap_core::point_group(lattice)?
    })
}

pub fn fit(a: &FitArgs, ctx: &Ctx) -> Result<()> {
    let records = read_dataset(&read(&a.dataset)?)?;
    let lattice = a.lattice.build()?;
    let spec = HardwareSpec { sign: ctx.sign, ..HardwareSpec::default() };
    let fit = fit_model(&records, &lattice, &spec)?;
    if let Some(path) = &a.residuals {
        let mut out = String::from("bitstring,energy_ev,predicted_ev,residual_ev\n");
        let train = records.iter().filter(|r| r.tag == Split::Train);
        for (r, res) in train.zip(&fit.residuals) {
            out.push_str(&format!("{},{:e},{:e},{:e}\n", r.config, r.energy, r.energy - res, res));
        }
        emit(Some(path), &out)?;
    }
    emit_json(a.out.as_deref(), &fit)
}

pub fn metrics(a: &MetricsArgs) -> Result<()> {
    let fit: FitResult = serde_json::from_str(&read(&a.fit)?).context("parsing fit JSON")?;
    let records = read_dataset(&read(&a.dataset)?)?;
    let test: Vec<_> = records.into_iter().filter(|r| r.tag == Split::Test).collect();
    if test.is_empty() {
        bail!("dataset has no test records");
    }
    let m = evaluate_metrics(&fit, &test, &a.lattice.build()?)?;
    emit_json(a.out.as_deref(), &m)
}

pub fn rescale(a: &RescaleArgs, ctx: &Ctx) -> Result<()> {
    let spec = a.hardware.spec(ctx.sign);
    if a.points == 0 {
        bail!("--points must be at least 1");
    }
    let mut out = String::from("r_nn_um,alpha_v,v_scaled_ev,delta_g_ev,delta_mu_ev,t_sampling_k,t_effective_k\n");
    for &r in &a.r_nn_um {
        let m = require_mapping(&a.model, &spec, r)?;
        let t_eff = m.effective_temperature(a.temp_k)?;
        for dg in linspace(-spec.detuning_max_ev, spec.detuning_max_ev, a.points) {
            out.push_str(&format!(
                "{r},{},{:e},{:e},{:e},{:e},{:e}\n",
                m.alpha_v,
                m.v_scaled,
                dg,
                m.mu_for(dg),
                a.temp_k,
                t_eff
            ));
        }
    }
    emit(a.out.as_deref(), &out)
}

pub fn sweep(a: &SweepArgs, ctx: &Ctx) -> Result<()> {
    let (_, layout, spec) = geometry(&a.geometry, ctx)?;
    let map = require_mapping(&a.model, &spec, a.geometry.r_nn_um)?;
    let grid: Vec<(f64, f64)> = match (&a.detuning_ev, &a.mu_ev) {
        (_, Some(mus)) => parse_grid(mus)?.into_iter().map(|mu| (map.detuning_for(mu), mu)).collect(),
        (Some(dgs), None) => parse_grid(dgs)?.into_iter().map(|dg| (dg, map.mu_for(dg))).collect(),
        (None, None) => {
            let max = spec.detuning_max_ev;
            linspace(-0.5 * max, max, 10).into_iter().map(|dg| (dg, map.mu_for(dg))).collect()
        }
    };
    let n = layout.num_atoms();
    let mut points = Vec::with_capacity(grid.len());
    for (k, &(dg, mu)) in grid.iter().enumerate() {
        let ham = Hamiltonian::hardware(&layout, &spec, dg);
        let point = match a.engine {
            Engine::Enumerate => {
                let s = enumerate_stats(&ham, a.temp_k, HistogramSpec::default())?;
                SweepPoint { delta_g_ev: dg, delta_mu_ev: mu, mean_conc: s.mean_concentration, conc_pmf: s.concentration_pmf, log_z: Some(s.log_z) }
            }
            Engine::Umc => {
                let e = uniform_mc_stats(&ham, a.temp_k, a.samples, a.proposal, sub_seed(a.seed, k as u64), HistogramSpec::default())?;
                SweepPoint { delta_g_ev: dg, delta_mu_ev: mu, mean_conc: e.stats.mean_concentration, conc_pmf: e.stats.concentration_pmf, log_z: Some(e.stats.log_z) }
            }
            Engine::MockQpu => {
                let set = mock_qpu_run(&layout, &spec, dg, a.temp_k, a.shots, noise(&a.noise), a.noise.backend.into(), sub_seed(a.seed, k as u64))?;
                SweepPoint { delta_g_ev: dg, delta_mu_ev: mu, mean_conc: qpu_mean_concentration(&set)?, conc_pmf: set.concentration_pmf(n)?, log_z: None }
            }
        };
        points.push(point);
    }
    let result = SweepResult { points };
    if a.engine == Engine::Enumerate && !result.is_nonincreasing_in_mu() {
        eprintln!("warning: exact mean concentration increases with chemical potential somewhere on the grid");
    }
    emit(a.out.as_deref(), &result.to_csv()?)
}

struct Point {
    ham: Hamiltonian,
    delta_g_ev: Option<f64>,
    delta_mu_ev: Option<f64>,
}

fn point(p: &PointArgs, ctx: &Ctx) -> Result<Point> {
    let (lattice, layout, spec) = geometry(&p.geometry, ctx)?;
    let map = mapping(&p.model, &spec, p.geometry.r_nn_um)?;
    let need = || anyhow!("--mu-ev needs --v-ev/--r-nn-model-um or --dataset");
    match p.mode {
        Mode::Hardware => {
            let dg = match (p.detuning_ev, p.mu_ev) {
                (Some(dg), _) => dg,
                (None, Some(mu)) => map.as_ref().ok_or_else(need)?.detuning_for(mu),
                (None, None) => bail!("supply --detuning-ev or --mu-ev"),
            };
            Ok(Point { ham: Hamiltonian::hardware(&layout, &spec, dg), delta_g_ev: Some(dg), delta_mu_ev: map.map(|m| m.mu_for(dg)) })
        }
        Mode::Material => {
            let m = map.ok_or_else(|| anyhow!("material mode needs --v-ev/--r-nn-model-um or --dataset"))?;
            let mu = match (p.mu_ev, p.detuning_ev) {
                (Some(mu), _) => mu,
                (None, Some(dg)) => m.mu_for(dg),
                (None, None) => bail!("supply --detuning-ev or --mu-ev"),
            };
            let model = EnergyModel::from_distance(m.v_model, m.r_nn_model, spec.c6_ev_um6())?;
            let ham = Hamiltonian::material(&model, &lattice, ChemicalPotential(mu))?;
            Ok(Point { ham, delta_g_ev: Some(m.detuning_for(mu)), delta_mu_ev: Some(mu) })
        }
    }
}

pub fn enumerate(p: &PointArgs, ctx: &Ctx) -> Result<()> {
    let pt = point(p, ctx)?;
    let stats = enumerate_stats(&pt.ham, p.temp_k, HistogramSpec { bins: p.bins, range: None })?;
    if let Some(path) = &p.histogram {
        emit(Some(path), &stats.energy_histogram.to_csv())?;
    }
    emit_json(
        p.out.as_deref(),
        &json!({
            "mode": format!("{:?}", p.mode).to_lowercase(),
            "delta_g_ev": pt.delta_g_ev,
            "delta_mu_ev": pt.delta_mu_ev,
            "stats": stats,
        }),
    )
}

pub fn umc(a: &UmcArgs, ctx: &Ctx) -> Result<()> {
    let p = &a.point;
    let pt = point(p, ctx)?;
    let est = uniform_mc_stats(&pt.ham, p.temp_k, a.samples, a.proposal, a.seed, HistogramSpec { bins: p.bins, range: None })?;
    if let Some(path) = &p.histogram {
        emit(Some(path), &est.stats.energy_histogram.to_csv())?;
    }
    emit_json(
        p.out.as_deref(),
        &json!({
            "mode": format!("{:?}", p.mode).to_lowercase(),
            "delta_g_ev": pt.delta_g_ev,
            "delta_mu_ev": pt.delta_mu_ev,
            "seed": a.seed,
            "estimate": est,
        }),
    )
}

pub fn sample(a: &SampleArgs, ctx: &Ctx) -> Result<()> {
    let (_, layout, spec) = geometry(&a.geometry, ctx)?;
    let map = mapping(&a.model, &spec, a.geometry.r_nn_um)?;
    let dg = match (a.detuning_ev, a.mu_ev) {
        (Some(dg), _) => dg,
        (None, Some(mu)) => map.as_ref().ok_or_else(|| anyhow!("--mu-ev needs a model"))?.detuning_for(mu),
        (None, None) => bail!("supply --detuning-ev or --mu-ev"),
    };
    let mut set = mock_qpu_run(&layout, &spec, dg, a.temp_k, a.shots, noise(&a.noise), a.noise.backend.into(), a.seed)?;
    set.context.mu_ev = map.map(|m| m.mu_for(dg));
    if let Some(path) = &a.pmf {
        emit(Some(path), &write_pmf(&set.concentration_pmf(layout.num_atoms())?))?;
    }
    emit(a.out.as_deref(), &set.to_jsonl()?)?;
    let mean = qpu_mean_concentration(&set).map(|m| m.to_string()).unwrap_or_else(|_| "n/a".into());
    eprintln!("shots {}  retained {:.4}  mean dopants {mean}", a.shots, set.retained_fraction());
    Ok(())
}

pub fn fit_temp(a: &FitTempArgs, ctx: &Ctx) -> Result<()> {
    let measured = SweepResult::from_csv(&read(&a.measured)?)?;
    let (_, layout, spec) = geometry(&a.geometry, ctx)?;
    let grid = match &a.t_grid {
        Some(s) => parse_grid(s)?,
        None => default_temperature_grid(),
    };
    let fit = fit_effective_temperature(&measured, &layout, &spec, &grid)?;
    if let Some(path) = &a.rmse_out {
        emit(Some(path), &fit.rmse_csv())?;
    }
    emit_json(a.out.as_deref(), &fit)
}

fn is_sweep(text: &str) -> bool {
    text.lines().next().is_some_and(|h| h.split(',').any(|c| c.trim() == "delta_g_ev"))
}

fn pmf_mean(p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(c, q)| c as f64 * q).sum()
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let (ta, tb) = (read(&a.a)?, read(&a.b)?);
    let report = if is_sweep(&ta) && is_sweep(&tb) {
        let (sa, sb) = (SweepResult::from_csv(&ta)?, SweepResult::from_csv(&tb)?);
        if sa.points.len() != sb.points.len() {
            bail!("sweeps have {} and {} points", sa.points.len(), sb.points.len());
        }
        let diffs: Vec<f64> = sa.points.iter().zip(&sb.points).map(|(p, q)| p.mean_conc - q.mean_conc).collect();
        let rmse = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
        let tvds = sa
            .points
            .iter()
            .zip(&sb.points)
            .map(|(p, q)| if p.conc_pmf.is_empty() || q.conc_pmf.is_empty() { Ok(None) } else { tvd(&p.conc_pmf, &q.conc_pmf).map(Some) })
            .collect::<rydmap_core::Result<Vec<_>>>()?;
        json!({ "kind": "sweep", "rmse_mean_conc": rmse, "mean_conc_diff": diffs, "tvd": tvds })
    } else {
        let (pa, pb) = (read_pmf(&ta)?, read_pmf(&tb)?);
        let d = tvd(&pa, &pb)?;
        let (ma, mb) = (pmf_mean(&pa), pmf_mean(&pb));
        let per_bin: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
        json!({ "kind": "pmf", "tvd": d, "mean_a": ma, "mean_b": mb, "rmse_mean_conc": (ma - mb).abs(), "per_bin_diff": per_bin })
    };
    emit_json(a.out.as_deref(), &report)
}

/// All `k`-subsets of `n` sites in lexicographic order.
fn fixed_weight(n: usize, k: usize) -> Result<Vec<Configuration>> {
    let count = rydmap_core::units::binomial(n as u64, k as u64).unwrap_or(u128::MAX);
    if k > n || count > 5_000_000 {
        bail!("refusing to enumerate C({n}, {k}) configurations");
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(Configuration::from_sites(n, &idx));
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            break;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(out)
}

pub fn symmetry_reduce(a: &ReduceArgs) -> Result<()> {
    let lattice = a.lattice.build()?;
    let group = symmetry_group(&lattice)?;
    if let Some(path) = &a.group_out {
        emit(Some(path), &group.to_json()?)?;
    }
    let configs = match (&a.configs, a.dopants) {
        (Some(path), _) => read(path)?
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(k, l)| l.trim().parse::<Configuration>().map_err(|e| anyhow!("line {}: {e}", k + 1)))
            .collect::<Result<Vec<_>>>()?,
        (None, Some(k)) => fixed_weight(lattice.num_sites(), k)?,
        (None, None) => bail!("supply --configs or --dopants"),
    };
    let classes = reduce_to_sic(&configs, &group)?;
    let mut out = String::from("representative,multiplicity\n");
    for (rep, mult) in &classes {
        out.push_str(&format!("{rep},{mult}\n"));
    }
    eprintln!("group order {}  classes {}", group.order(), classes.len());
    emit(a.out.as_deref(), &out)
}

pub fn symmetry_expand(a: &ExpandArgs) -> Result<()> {
    let records = read_dataset(&read(&a.dataset)?)?;
    let group = symmetry_group(&a.lattice.build()?)?;
    let expanded = expand_dataset(&records, &group)?;
    emit(a.out.as_deref(), &write_dataset(&expanded))
}

pub fn schedule(a: &ScheduleArgs, ctx: &Ctx) -> Result<()> {
    let (_, layout, spec) = geometry(&a.geometry, ctx)?;
    let final_dg = match (a.detuning_ev, a.mu_ev) {
        (Some(dg), _) => dg,
        (None, Some(mu)) => require_mapping(&a.model, &spec, a.geometry.r_nn_um)?.detuning_for(mu),
        (None, None) => bail!("supply --detuning-ev or --mu-ev"),
    };
    let params = ScheduleParams {
        detuning_initial_ev: a.detuning_initial_ev.unwrap_or(-spec.detuning_max_ev),
        total_time_us: a.total_time_us,
        hold_fraction: a.hold_fraction,
        rabi_peak_rad_s: a.rabi_peak,
        ..ScheduleParams::with_final(final_dg, &spec)
    };
    let schedule = build_schedule(&params)?;
    let mut report = validate_layout(&layout, &spec);
    report.violations.extend(validate_schedule(&schedule, &spec).violations);
    if !report.is_valid() {
        eprintln!("{}", serde_json::to_string_pretty(&report)?);
        let msg: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(ValidationFailed(msg.join("; ")).into());
    }
    let program = export_program(&layout, &schedule, &spec)?;
    if let Some(path) = &a.csv {
        emit(Some(path), &schedule.samples_csv(1000))?;
    }
    eprintln!("ramp rate {:e} eV/us", schedule.ramp_rate_ev_per_us());
    emit_json(a.out.as_deref(), &program)
}

pub fn validate(a: &LayoutArgs, ctx: &Ctx) -> Result<()> {
    let spec = a.geometry.hardware.spec(ctx.sign);
    let layout = match &a.layout {
        Some(path) => {
            let doc: LatticeDoc = serde_json::from_str(&read(path)?).context("parsing layout JSON")?;
            Layout::from_doc(&doc)?
        }
        None => scale_to_hardware(&a.geometry.lattice.build()?, a.geometry.r_nn_um)?,
    };
    let report = validate_layout(&layout, &spec);
    emit_json(a.out.as_deref(), &report)?;
    if !report.is_valid() {
        let msg: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(ValidationFailed(msg.join("; ")).into());
    }
    Ok(())
}
