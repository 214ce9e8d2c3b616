//! `entropy`, `blowup` and `report`: work on snapshots and run directories.

use std::path::Path;

use kahler_flow::{blowup_rescale, classify_type, to_krf, FlowKind, Pick, PickRule, TypeClass, Trajectory};
use kahler_functionals::{mu_entropy, EntropyQuery};
use serde::{Deserialize, Serialize};

use crate::checkpoint::read_snapshot;
use crate::config::hash_text;
use crate::error::{LabError, Result};
use crate::manifest::{Check, RunManifest};
use crate::table::read_table;

/// Euler-Lagrange residual below which a minimizer counts as converged.
pub const ENTROPY_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySummary {
    pub t: f64,
    pub sigma: f64,
    pub mu: f64,
    pub w: f64,
    pub el_residual: f64,
    pub constraint_error: f64,
    pub iterations: usize,
    pub variation_check: f64,
    pub converged: bool,
}

/// `mu(g, sigma)` on state `index` of a snapshot file (the last state if `None`).
pub fn entropy_of_snapshot(path: &Path, index: Option<usize>, sigma: f64) -> Result<EntropySummary> {
    let snap = read_snapshot(path)?;
    let k = index.unwrap_or(snap.states.len().saturating_sub(1));
    let state = snap
        .states
        .get(k)
        .ok_or_else(|| LabError::stage("entropy", format!("snapshot has {} states, asked for {k}", snap.states.len())))?;
    let m = state.radial_metric().map_err(|e| LabError::stage("entropy", e))?;
    let r = mu_entropy(&EntropyQuery::new(m, sigma)).map_err(|e| LabError::stage("entropy", e))?;
    Ok(EntropySummary {
        t: state.t,
        sigma,
        mu: r.mu,
        w: r.w,
        el_residual: r.el_residual,
        constraint_error: r.constraint_error,
        iterations: r.iterations,
        variation_check: r.variation_check,
        converged: r.el_residual <= ENTROPY_RESIDUAL_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupSummary {
    pub classification: TypeClass,
    pub singular_time: f64,
    pub sup_product: f64,
    pub growth_exponent: f64,
    pub pick: Pick,
    pub omega: f64,
    /// Largest `K(t^)(omega - t^)/(omega + eps)`; at most one when the Type I bound holds.
    pub max_bound_ratio: Option<f64>,
    /// `|Rm|` of the rescaled metric at the pick, one by construction.
    pub curvature_at_pick: f64,
}

/// Classifies and rescales a stored trajectory; normalized runs are first read in
/// unnormalized time.
pub fn blowup_of_trajectory(traj: &Trajectory, rule: PickRule, threshold: f64, eps: f64) -> Result<BlowupSummary> {
    let krf = if traj.kind == FlowKind::Krf { traj.clone() } else { to_krf(traj, None).map_err(|e| LabError::stage("blowup", e))? };
    let report = classify_type(&krf).map_err(|e| LabError::stage("blowup", e))?;
    let b = blowup_rescale(&krf, rule, threshold, eps).map_err(|e| LabError::stage("blowup", e))?;
    let pick_row = b.trajectory.rows().nth(b.pick.state_index).expect("one row per state");
    Ok(BlowupSummary {
        classification: report.classification,
        singular_time: report.singular_time,
        sup_product: report.sup_product,
        growth_exponent: report.growth_exponent,
        pick: b.pick,
        omega: b.omega,
        max_bound_ratio: matches!(rule, PickRule::TypeI).then(|| b.max_bound_ratio()),
        curvature_at_pick: pick_row.rm_max,
    })
}

pub fn blowup_of_snapshot(path: &Path, rule: PickRule, threshold: f64, eps: f64) -> Result<BlowupSummary> {
    blowup_of_trajectory(&read_snapshot(path)?.trajectory()?, rule, threshold, eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub rows: usize,
    pub t_first: Option<f64>,
    pub t_last: Option<f64>,
    pub truncated: bool,
    pub truncation_reason: Option<String>,
    pub config_hash_matches: bool,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Summary of a run directory; fails the hash check if `config.txt` was edited.
pub fn summarize_run(dir: &Path) -> Result<RunSummary> {
    let manifest = RunManifest::read(dir)?;
    let read = |name: &str| {
        let p = dir.join(name);
        std::fs::read_to_string(&p).map_err(|e| LabError::io(format!("reading {}", p.display()), e))
    };
    let config_hash_matches = hash_text(&read("config.txt")?) == manifest.config_hash;
    let (rows, t_first, t_last, csv_truncated, reason) = if manifest.command == "flow" {
        let t = read_table(&read("diagnostics.csv")?)?;
        let times: Vec<f64> = t.column("t").into_iter().flatten().collect();
        (t.rows.len(), times.first().copied(), times.last().copied(), t.truncated.is_some(), t.truncated)
    } else {
        (0, None, None, false, None)
    };
    let truncated = manifest.truncated || csv_truncated;
    Ok(RunSummary {
        command: manifest.command.clone(),
        rows,
        t_first,
        t_last,
        truncated,
        truncation_reason: reason.or(manifest.error.clone()),
        config_hash_matches,
        passed: manifest.all_passed() && config_hash_matches && !truncated,
        checks: manifest.checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkpoint::write_snapshot;
    use crate::config::parse_config;
    use crate::run::run_in;
    use kahler_flow::{homothety, Scheme};
    use kahler_kernel::{RadialGrid, RadialMetric};
    use std::sync::Arc;

    #[test]
    fn round_sphere_entropy_and_blowup_from_snapshots() {
        let dir = tempfile::tempdir().unwrap();
        let fs = RadialMetric::fubini_study(Arc::new(RadialGrid::new(1, 16).unwrap()));
        let times: Vec<f64> = (0..10).map(|k| 0.1 * k as f64).collect();
        let traj = homothety(&fs, &times).unwrap();
        let path = dir.path().join("h.bin");
        write_snapshot(&path, FlowKind::Krf, Scheme::Rk4, &traj.states).unwrap();
        let e = entropy_of_snapshot(&path, Some(0), 1.0).unwrap();
        assert!(e.converged);
        let b = blowup_of_snapshot(&path, PickRule::TypeI, 0.5, 1e-3).unwrap();
        assert_eq!(b.classification, TypeClass::TypeI);
        assert!((b.curvature_at_pick - 1.0).abs() < 1e-9);
        assert!(b.max_bound_ratio.unwrap() <= 1.0);
        assert!(entropy_of_snapshot(&path, Some(99), 1.0).is_err());
    }

    #[test]
    fn report_detects_an_edited_config() {
        let dir = tempfile::tempdir().unwrap();
        let c = parse_config("geometry.resolution = 8\nflow.dt = 0.1\nflow.t_end = 0.2\n").unwrap();
        run_in(&c, dir.path()).unwrap();
        let s = summarize_run(dir.path()).unwrap();
        assert!(s.passed && s.config_hash_matches && s.rows == 3);
        let p = dir.path().join("config.txt");
        let text = std::fs::read_to_string(&p).unwrap().replace("seed = 7", "seed = 8");
        std::fs::write(&p, text).unwrap();
        let s = summarize_run(dir.path()).unwrap();
        assert!(!s.config_hash_matches && !s.passed);
    }
}
