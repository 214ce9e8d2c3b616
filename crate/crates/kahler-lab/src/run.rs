//! The `flow` pipeline: geometry, chunked integration, per-row diagnostics streamed to
//! CSV, whole-run reports, snapshots and the manifest.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use kahler_estimates::{
    harnack_pointwise, harnack_two_point, lyh_quadratic, noncollapse, perelman_tracker, seeded_pairs, EstimateError, Hypothesis,
    LyhSweep, NoncollapseReport, RadiusPolicy, SlackReport, Witness,
};
use kahler_flow::{evolution_residuals, integrate_to, FlowKind, FlowState, class_coefficient, Halt, PotentialData, Representation, Trajectory};
use kahler_functionals::{a_coefficient, futaki, mu, ricci_potential, w_functional, HolomorphicField};
use kahler_kernel::{curvature, min_bisectional, CurvatureOptions, HermitianMetricField, RadialBackend, RadialGrid, RadialMetric, C64};
use kahler_models::{bump_profile, geodesic_table, radial_metric, Pole};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::write_snapshot;
use crate::config::{ExperimentConfig, Model};
use crate::error::{LabError, Result};
use crate::manifest::{prepare_dir, write_json, Check, RunManifest};
use crate::table::{column, CsvWriter, Row};

/// Directions sampled per node by the bisectional search.
const BISECTIONAL_BUDGET: usize = 32;

pub fn initial_metric(cfg: &ExperimentConfig) -> Result<RadialMetric> {
    let g = &cfg.geometry;
    let grid = Arc::new(RadialGrid::new(g.dim, g.resolution).map_err(|e| LabError::stage("geometry", e))?);
    match g.model {
        Model::Fs => Ok(RadialMetric::fubini_study(grid)),
        Model::Bump => {
            let p = bump_profile(grid, g.amplitude).map_err(|e| LabError::stage("geometry", e))?;
            match radial_metric(&p).map_err(|e| LabError::stage("geometry", e))? {
                HermitianMetricField::Radial(m) => Ok(m),
                HermitianMetricField::Periodic(_) => unreachable!("profiles are radial"),
            }
        }
    }
}

pub fn initial_state(cfg: &ExperimentConfig) -> Result<FlowState> {
    let m = initial_metric(cfg)?;
    Ok(match cfg.flow.kind {
        FlowKind::Krf | FlowKind::Nkrf => FlowState::radial(0.0, cfg.flow.kind, m),
        FlowKind::Potential => FlowState {
            t: 0.0,
            lambda: 1.0,
            repr: Representation::Potential(PotentialData::new(m).map_err(|e| LabError::stage("geometry", e))?),
        },
    })
}

/// Output times, as the integrator lays them out for `dt` and `t_end`.
pub fn output_times(dt: f64, t_end: f64) -> Vec<f64> {
    let steps = (t_end / dt - 1e-9).ceil() as usize;
    (1..=steps).map(|k| (k as f64 * dt).min(t_end)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackSummary {
    pub label: String,
    pub min: f64,
    pub tolerance: f64,
    pub asserted: bool,
    pub passes: bool,
    pub samples: usize,
    pub witness: Option<Witness>,
    pub hypotheses: Vec<Hypothesis>,
}

impl From<&SlackReport> for SlackSummary {
    fn from(r: &SlackReport) -> Self {
        SlackSummary {
            label: r.label.clone(),
            min: r.min,
            tolerance: r.tolerance,
            asserted: r.asserted(),
            passes: r.passes(),
            samples: r.sample_count(),
            witness: r.witness.clone(),
            hypotheses: r.hypotheses.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackSummary {
    pub pointwise: Option<SlackSummary>,
    pub two_point: Option<SlackSummary>,
    pub quadric: Option<SlackSummary>,
    /// Slacks not evaluated, with the reason.
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoncollapseSummary {
    pub kappa: Option<f64>,
    pub kappa_series: Vec<(f64, Option<f64>)>,
    /// Relative spread of the per-time minimum over `t >= 0.5`.
    pub late_variation: Option<f64>,
    pub no_admissible_radius: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerSummary {
    pub c3: f64,
    pub c2: f64,
    pub sup_grad_ratio: f64,
    pub sup_scalar_ratio: f64,
    pub sup_diam: f64,
    pub sup_abs_r: f64,
    pub avg_r_deviation: f64,
    pub kappa_min: Option<f64>,
    pub floor_violations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReports {
    pub states: usize,
    pub t_final: f64,
    pub halt: Option<Halt>,
    pub rejections: usize,
    pub max_substeps: usize,
    /// `(t, mu(g(t), 1))` on entropy rows.
    pub entropy: Vec<(f64, f64)>,
    pub harnack: Option<HarnackSummary>,
    pub noncollapse: Option<NoncollapseSummary>,
    pub tracker: Option<TrackerSummary>,
    pub residual_sup_scalar: Option<f64>,
    pub residual_sup_ricci: Option<f64>,
    pub futaki_sup: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub reports: RunReports,
    pub rows: Vec<Row>,
    pub trajectory: Trajectory,
    pub dir: PathBuf,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn inf(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Columns that depend on one state only.
fn state_cells(cfg: &ExperimentConfig, traj: &Trajectory, k: usize) -> Result<Row> {
    let s = &traj.states[k];
    let d = traj.rows().nth(k).expect("one row per state");
    let at = |stage: &'static str, e: &dyn std::fmt::Display| LabError::Stage { stage, message: format!("t = {}: {e}", s.t) };
    let metric = s.metric().map_err(|e| at("diagnostics", &e))?;
    let m = s.radial_metric().map_err(|e| at("diagnostics", &e))?;
    let n = m.grid.complex_dim();
    let mut row: Row = [None; 20];
    let mut set = |name: &str, v: f64| row[column(name)] = Some(v);
    set("t", d.t);
    set("dt", d.dt);
    set("vol", d.vol);
    set("R_min", d.r_min);
    set("R_max", d.r_max);
    set("R_avg", d.r_avg);
    set("diam", geodesic_table(&metric, Pole::Origin).map_err(|e| at("diameter", &e))?.diameter);
    // the unnormalized class shrinks; potential and entropy columns use the unit-class rescaling
    let unit_m = if traj.kind == FlowKind::Krf { m.scaled(1.0 / class_coefficient(&m)) } else { m.clone() };
    let unit = HermitianMetricField::Radial(unit_m.clone());
    let pot = ricci_potential(&unit).map_err(|e| at("ricci potential", &e))?;
    let f = pot.f.real_part();
    let geo = unit_m.geometry(RadialBackend::Collocation).map_err(|e| at("diagnostics", &e))?;
    set("f_min", inf(&f));
    set("f_max", sup(&f));
    set("grad_f_sup", sup(&geo.grad_norm2(&f)));
    set("a_t", a_coefficient(&unit, &pot.f).map_err(|e| at("a(t)", &e))?);
    let every = cfg.diagnostics.entropy_every;
    if every > 0 && k % every == 0 {
        set("mu", mu(&unit, 1.0).map_err(|e| at("entropy", &e))?.mu);
        set("W", w_functional(&unit, &pot.f, 1.0).map_err(|e| at("entropy", &e))?.value);
    }
    if cfg.diagnostics.futaki {
        let v = futaki(&metric, &HolomorphicField::scaling(n, C64::new(1.0, 0.0))).map_err(|e| at("futaki", &e))?;
        set("futaki_re", v.value.re);
        set("futaki_im", v.value.im);
    }
    if cfg.diagnostics.bisectional {
        let pack = curvature(&metric, &CurvatureOptions::unchecked()).map_err(|e| at("bisectional", &e))?;
        set("bisec_min", min_bisectional(&pack, BISECTIONAL_BUDGET, cfg.seed).value);
    }
    Ok(row)
}

/// Rows `range` of `traj`. Columns with time derivatives or per-window reports are
/// evaluated on the range plus two neighbours before and one after, enough for the
/// three-point stencils, so the rows match a whole-trajectory evaluation exactly.
fn emit(cfg: &ExperimentConfig, traj: &Trajectory, range: Range<usize>, notes: &mut Vec<String>) -> Result<Vec<Row>> {
    let mut rows: Vec<Row> = range.clone().into_par_iter().map(|k| state_cells(cfg, traj, k)).collect::<Result<_>>()?;
    let lo = range.start.saturating_sub(2);
    let hi = (range.end + 1).min(traj.states.len());
    let d = &cfg.diagnostics;
    if !(d.residuals || d.harnack || d.noncollapse) {
        return Ok(rows);
    }
    let window = Trajectory::from_states(traj.kind, traj.states[lo..hi].to_vec(), traj.meta.scheme)
        .map_err(|e| LabError::stage("diagnostics", e))?;
    let offset = range.start - lo;
    if d.residuals && window.states.len() >= 3 {
        let res = evolution_residuals(&window).map_err(|e| LabError::stage("residuals", e))?;
        for (j, row) in rows.iter_mut().enumerate() {
            row[column("res_eq2_10")] = Some(res.scalar[j + offset]);
            row[column("res_eq2_9")] = Some(res.ricci[j + offset]);
        }
    }
    if d.harnack && window.states.len() >= 3 {
        match harnack_pointwise(&window, d.harnack_t_min) {
            Ok(rep) => {
                for (t, vals) in rep.times.iter().zip(&rep.values) {
                    if let Some(j) = rows.iter().position(|r| r[0] == Some(*t)) {
                        rows[j][column("harnack_slack_min")] = Some(inf(vals));
                    }
                }
            }
            Err(e @ EstimateError::NonPositiveScalar { .. }) => notes.push(format!("harnack column: {e}")),
            Err(e) => return Err(LabError::stage("harnack", e)),
        }
    }
    if d.noncollapse {
        let rep = noncollapse(&window, &RadiusPolicy::default()).map_err(|e| LabError::stage("noncollapse", e))?;
        for (j, row) in rows.iter_mut().enumerate() {
            row[column("kappa_min")] = rep.kappa_series[j + offset].1;
        }
    }
    Ok(rows)
}

fn append(traj: &mut Trajectory, part: Trajectory) {
    traj.states.extend(part.states.into_iter().skip(1));
    traj.diagnostics.extend(part.diagnostics);
    traj.meta.dt_history.extend(part.meta.dt_history);
    traj.meta.substeps.extend(part.meta.substeps);
    traj.meta.rejections += part.meta.rejections;
    traj.halt = part.halt;
}

fn summarize(r: std::result::Result<SlackReport, EstimateError>, what: &str, skipped: &mut Vec<String>) -> Result<Option<SlackSummary>> {
    match r {
        Ok(rep) => Ok(Some(SlackSummary::from(&rep))),
        Err(e @ (EstimateError::NonPositiveScalar { .. } | EstimateError::Unsupported(_))) => {
            skipped.push(format!("{what}: {e}"));
            Ok(None)
        }
        Err(e) => Err(LabError::stage("harnack", e)),
    }
}

fn harnack_reports(cfg: &ExperimentConfig, traj: &Trajectory) -> Result<HarnackSummary> {
    let d = &cfg.diagnostics;
    let mut out = HarnackSummary { pointwise: None, two_point: None, quadric: None, skipped: Vec::new() };
    if traj.states.len() < 3 {
        out.skipped.push("harnack: fewer than three stored states".into());
        return Ok(out);
    }
    out.pointwise = summarize(harnack_pointwise(traj, d.harnack_t_min), "pointwise", &mut out.skipped)?;
    let pairs = seeded_pairs(traj, d.harnack_pairs, cfg.seed, d.harnack_t_min);
    out.two_point = summarize(harnack_two_point(traj, &pairs), "two-point", &mut out.skipped)?;
    if traj.kind == FlowKind::Krf {
        let sweep = LyhSweep { per_node: d.lyh_per_node, seed: cfg.seed, t_min: d.harnack_t_min };
        out.quadric = summarize(lyh_quadratic(traj, &sweep), "quadric", &mut out.skipped)?;
    }
    Ok(out)
}

fn checks(cfg: &ExperimentConfig, traj: &Trajectory, rows: &[Row], reports: &RunReports) -> Vec<Check> {
    let tol = &cfg.tolerances;
    let n = cfg.geometry.dim as f64;
    let col = |name: &str| -> Vec<f64> { rows.iter().filter_map(|r| r[column(name)]).collect() };
    let mut out = Vec::new();
    let normalized = traj.kind != FlowKind::Krf;
    if normalized {
        if cfg.geometry.model == Model::Fs {
            let dev = col("R_min").iter().chain(&col("R_max")).map(|r| (r - n).abs()).fold(0.0, f64::max);
            out.push(Check::at_most("fixed_point", dev, tol.fixed_point));
        }
        let vols = col("vol");
        let drift = vols.iter().map(|v| ((v - vols[0]) / vols[0]).abs()).fold(0.0, f64::max);
        out.push(Check::at_most("volume", drift, tol.volume));
        let avg = col("R_avg").iter().map(|r| (r - n).abs()).fold(0.0, f64::max);
        out.push(Check::at_most("average_scalar", avg, tol.average_scalar));
        if cfg.diagnostics.entropy_every > 0 {
            let drop = reports.entropy.windows(2).map(|w| w[0].1 - w[1].1).fold(f64::NEG_INFINITY, f64::max);
            out.push(if reports.entropy.len() < 2 {
                Check::observed("entropy_monotone", None, "fewer than two entropy rows")
            } else {
                Check::at_most("entropy_monotone", drop, tol.entropy).with_detail("largest decrease of mu between entropy rows")
            });
        }
    }
    if let Some(h) = &reports.harnack {
        for (name, s) in [("harnack_pointwise", &h.pointwise), ("harnack_two_point", &h.two_point), ("harnack_quadric", &h.quadric)] {
            if let Some(s) = s {
                out.push(if s.asserted {
                    Check::at_most(name, -s.min, s.tolerance).with_detail("negated minimum slack")
                } else {
                    let failed: Vec<&str> = s.hypotheses.iter().filter(|h| !h.holds).map(|h| h.name.as_str()).collect();
                    Check::observed(name, Some(s.min), format!("hypotheses fail: {}", failed.join(", ")))
                });
            }
        }
        for s in &h.skipped {
            out.push(Check::observed("harnack_skipped", None, s.clone()));
        }
    }
    let b = col("bisec_min");
    if let Some(&b0) = b.first() {
        let worst = -inf(&b);
        out.push(if b0 >= -tol.bisectional {
            Check::at_most("bisectional_preserved", worst, tol.bisectional).with_detail("negated run minimum")
        } else {
            Check::observed("bisectional_preserved", Some(-worst), "initial data has negative bisectional curvature")
        });
    }
    if let Some(nc) = &reports.noncollapse {
        out.push(match nc.kappa {
            Some(k) => Check::flag("kappa_positive", k > 0.0, format!("kappa = {k:e}")),
            None => Check::flag("kappa_positive", false, "no admissible radius"),
        });
    }
    if let Some(tr) = &reports.tracker {
        out.push(Check::flag(
            "scalar_floor",
            tr.floor_violations.is_empty(),
            format!("{} rows below the floor", tr.floor_violations.len()),
        ));
        let finite = [tr.c2, tr.sup_grad_ratio, tr.sup_scalar_ratio, tr.sup_diam].iter().all(|v| v.is_finite());
        out.push(Check::flag("bounds_finite", finite, format!("C2 = {:e}, sup diam = {:e}", tr.c2, tr.sup_diam)));
    }
    if let Some(f) = reports.futaki_sup {
        out.push(Check::at_most("futaki_vanishes", f, tol.futaki));
    }
    if let Some(r) = reports.residual_sup_scalar {
        out.push(Check::observed("residual_scalar", Some(r), "sup over rows"));
    }
    out
}

/// Runs the `flow` pipeline into `cfg.output.dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    run_in(cfg, Path::new(&cfg.output.dir))
}

pub fn run_in(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutcome> {
    prepare_dir(dir)?;
    let ckpt_dir = dir.join("checkpoints");
    prepare_dir(&ckpt_dir)?;
    let canonical = cfg.canonical();
    std::fs::write(dir.join("config.txt"), &canonical).map_err(|e| LabError::io("writing config.txt", e))?;
    let mut manifest = RunManifest::start("flow", cfg.hash());
    let mut csv = CsvWriter::create(&dir.join("diagnostics.csv"))?;

    let initial = initial_state(cfg)?;
    let step = cfg.flow.step_options();
    let mut traj = integrate_to(initial, &[], &step, cfg.flow.max_rejections).map_err(|e| LabError::stage("flow", e))?;
    let kind = traj.kind;
    let mut rows: Vec<Row> = Vec::new();
    let mut notes = Vec::new();
    let mut failure: Option<String> = None;
    let every = cfg.output.checkpoint_every;
    let snapshot = |k: usize, s: &FlowState| write_snapshot(&ckpt_dir.join(format!("state_{k:06}.bin")), kind, step.scheme, std::slice::from_ref(s));
    if every > 0 {
        snapshot(0, &traj.states[0])?;
    }

    for chunk in output_times(cfg.flow.dt, cfg.flow.t_end).chunks(cfg.diagnostics.flush_every) {
        let before = traj.states.len();
        match integrate_to(traj.last().clone(), chunk, &step, cfg.flow.max_rejections) {
            Ok(part) => append(&mut traj, part),
            Err(e) => failure = Some(format!("flow: {e}")),
        }
        for k in before..traj.states.len() {
            let h = traj.meta.dt_history[k - 1] / traj.meta.substeps[k - 1] as f64;
            if h < cfg.flow.dt_floor && failure.is_none() {
                failure = Some(format!("substep {h:e} at t = {} is below flow.dt_floor", traj.states[k].t));
            }
            if every > 0 && k % every == 0 {
                snapshot(k, &traj.states[k])?;
            }
        }
        if failure.is_some() || traj.halt.is_some() {
            break;
        }
        let end = traj.states.len() - 1;
        match emit(cfg, &traj, rows.len()..end, &mut notes) {
            Ok(new) => {
                for r in &new {
                    csv.push(r)?;
                }
                rows.extend(new);
                csv.flush()?;
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    if rows.len() < traj.states.len() {
        match emit(cfg, &traj, rows.len()..traj.states.len(), &mut notes) {
            Ok(new) => {
                for r in &new {
                    csv.push(r)?;
                }
                rows.extend(new);
            }
            Err(e) => failure = failure.or(Some(e.to_string())),
        }
    }
    if let Some(reason) = &failure {
        csv.truncate(reason)?;
        manifest.truncated = true;
        manifest.error = Some(reason.clone());
    } else {
        csv.flush()?;
    }
    drop(csv);
    write_snapshot(&dir.join("trajectory.bin"), kind, step.scheme, &traj.states)?;

    let reports = whole_run_reports(cfg, &traj, &rows, notes)?;
    write_json(&dir.join("reports.json"), &reports)?;
    manifest.checks = checks(cfg, &traj, &rows, &reports);
    manifest.checks.insert(
        0,
        match &failure {
            None => Check::flag("completed", true, traj.halt.map(|h| format!("{h:?}")).unwrap_or_default()),
            Some(r) => Check::flag("completed", false, r.clone()),
        },
    );
    manifest.finish();
    manifest.write(dir)?;
    Ok(RunOutcome { manifest, reports, rows, trajectory: traj, dir: dir.to_path_buf() })
}

fn whole_run_reports(cfg: &ExperimentConfig, traj: &Trajectory, rows: &[Row], notes: Vec<String>) -> Result<RunReports> {
    let d = &cfg.diagnostics;
    let col = |name: &str| -> Vec<f64> { rows.iter().filter_map(|r| r[column(name)]).collect() };
    let entropy = rows
        .iter()
        .filter_map(|r| Some((r[column("t")]?, r[column("mu")]?)))
        .collect();
    let harnack = if d.harnack { Some(harnack_reports(cfg, traj)?) } else { None };
    let nc: Option<NoncollapseReport> = if d.noncollapse || d.tracker {
        Some(noncollapse(traj, &RadiusPolicy::default()).map_err(|e| LabError::stage("noncollapse", e))?)
    } else {
        None
    };
    let noncollapse = nc.as_ref().filter(|_| d.noncollapse).map(|r| NoncollapseSummary {
        kappa: r.kappa,
        kappa_series: r.kappa_series.clone(),
        late_variation: r.variation(0.5, f64::INFINITY),
        no_admissible_radius: r.no_admissible_radius.clone(),
    });
    let tracker = if d.tracker {
        let b = perelman_tracker(traj, nc.as_ref()).map_err(|e| LabError::stage("tracker", e))?;
        Some(TrackerSummary {
            c3: b.c3,
            c2: b.c2,
            sup_grad_ratio: b.sup_grad_ratio,
            sup_scalar_ratio: b.sup_scalar_ratio,
            sup_diam: b.sup_diam,
            sup_abs_r: b.sup_abs_r,
            avg_r_deviation: b.avg_r_deviation,
            kappa_min: b.kappa_min,
            floor_violations: b.floor_violations,
        })
    } else {
        None
    };
    let opt_sup = |name: &str| {
        let v = col(name);
        (!v.is_empty()).then(|| v.iter().map(|x| x.abs()).fold(0.0, f64::max))
    };
    let futaki_sup = d.futaki.then(|| {
        rows.iter()
            .filter_map(|r| Some(C64::new(r[column("futaki_re")]?, r[column("futaki_im")]?).norm()))
            .fold(0.0, f64::max)
    });
    Ok(RunReports {
        states: traj.states.len(),
        t_final: traj.last().t,
        halt: traj.halt,
        rejections: traj.meta.rejections,
        max_substeps: traj.meta.substeps.iter().copied().max().unwrap_or(0),
        entropy,
        harnack,
        noncollapse,
        tracker,
        residual_sup_scalar: opt_sup("res_eq2_10"),
        residual_sup_ricci: opt_sup("res_eq2_9"),
        futaki_sup,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg(text: &str) -> ExperimentConfig {
        parse_config(text).unwrap()
    }

    #[test]
    fn output_times_end_exactly() {
        assert_eq!(output_times(0.25, 1.0), vec![0.25, 0.5, 0.75, 1.0]);
        let t = output_times(0.3, 1.0);
        assert_eq!((t.len(), *t.last().unwrap()), (4, 1.0));
    }

    #[test]
    fn fixed_point_run_writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("geometry.resolution = 12\nflow.dt = 0.05\nflow.t_end = 0.3\ndiagnostics.flush_every = 2\noutput.checkpoint_every = 3\n");
        let out = run_in(&c, dir.path()).unwrap();
        assert!(out.manifest.all_passed(), "{:?}", out.manifest.failures());
        assert_eq!(out.rows.len(), 7);
        for f in ["config.txt", "diagnostics.csv", "reports.json", "manifest.json", "trajectory.bin", "checkpoints/state_000003.bin"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let text = std::fs::read_to_string(dir.path().join("config.txt")).unwrap();
        assert_eq!(crate::config::hash_text(&text), out.manifest.config_hash);
        let table = crate::table::read_table(&std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap()).unwrap();
        assert_eq!(table.rows, out.rows);
        assert!(table.column("mu").iter().all(Option::is_none));
    }

    #[test]
    fn chunked_rows_match_a_single_window() {
        let base = "geometry.model = bump\ngeometry.amplitude = 0.05\ngeometry.resolution = 12\nflow.dt = 0.02\nflow.t_end = 0.2\ndiagnostics.residuals = true\ndiagnostics.noncollapse = true\n";
        let a = run_in(&cfg(&format!("{base}diagnostics.flush_every = 3\n")), tempfile::tempdir().unwrap().path()).unwrap();
        let b = run_in(&cfg(&format!("{base}diagnostics.flush_every = 100\n")), tempfile::tempdir().unwrap().path()).unwrap();
        assert_eq!(a.rows, b.rows);
        assert!(a.rows.iter().all(|r| r[column("res_eq2_10")].is_some() && r[column("kappa_min")].is_some()));
    }

    #[test]
    fn a_substep_floor_truncates_the_run() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("geometry.resolution = 16\nflow.dt = 0.05\nflow.dt_floor = 0.04\nflow.t_end = 0.5\n");
        let out = run_in(&c, dir.path()).unwrap();
        assert!(out.manifest.truncated && !out.manifest.all_passed());
        let text = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
        assert!(text.lines().last().unwrap().starts_with(crate::table::TRUNCATION_MARKER));
        assert!(RunManifest::read(dir.path()).unwrap().truncated);
    }
}
