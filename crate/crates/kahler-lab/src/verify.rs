//! The `verify` suites: curvature identities on flat, Fubini-Study and random periodic
//! charts, the heat-kernel identity, and the trace inequality.

use std::path::Path;
use std::sync::Arc;

use kahler_estimates::{heat_kernel_identity, trace_inequality, EstimateError, HeatKernelReport, TraceFamily};
use kahler_kernel::curvature::periodic_curvature;
use kahler_kernel::{
    assemble_metric, identity_residuals, HermitianMetricField, IdentityOptions, PeriodicGrid, PeriodicMetric, PeriodicScheme, C64,
};
use kahler_models::{fubini_study, random_periodic_potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::manifest::{prepare_dir, write_json, Check, RunManifest};

/// Wave numbers of the random periodic potential never exceed two, so spectral and
/// tenth-order differences agree to roundoff at the default resolutions.
const CHECK_SCHEME: PeriodicScheme = PeriodicScheme::FiniteDifference(10);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub entries: Vec<(String, f64)>,
    pub worst: (String, f64),
    /// Node of the largest disagreement between the two curvature backends.
    pub backend_witness: Option<usize>,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub m: usize,
    pub sample: usize,
    pub margin: f64,
    pub matrix: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceOutcome {
    pub family: TraceFamily,
    pub block_sizes: Vec<usize>,
    pub samples_per_size: usize,
    pub worst_margin: f64,
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
    pub heat_kernel: Vec<HeatKernelReport>,
    pub trace: Vec<TraceOutcome>,
}

fn suite(name: &str, metric: &HermitianMetricField, cfg: &ExperimentConfig, fault: Option<usize>) -> Result<SuiteResult> {
    let stage = |e: kahler_kernel::KernelError| LabError::Stage { stage: "verify", message: format!("{name}: {e}") };
    let periodic = metric.as_periodic();
    let opts = IdentityOptions {
        seed: cfg.seed,
        scheme: PeriodicScheme::Spectral,
        // the periodic cross-check is recomputed below so that it can carry a witness
        check_scheme: if periodic.is_some() { None } else { Some(CHECK_SCHEME) },
    };
    let rep = identity_residuals(metric, &opts).map_err(stage)?;
    let mut entries: Vec<(String, f64)> = rep.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let mut backend_witness = None;
    if let Some(m) = periodic {
        let (primary, _) = periodic_curvature(m, PeriodicScheme::Spectral);
        let (mut check, _) = periodic_curvature(m, CHECK_SCHEME);
        if let Some(node) = fault {
            let p = check.n.pow(4);
            for v in &mut check.rm[node * p..(node + 1) * p] {
                *v += C64::new(1e-3, 0.0);
            }
        }
        let (diff, node) = primary.max_abs_rm_diff(&check);
        entries.push(("backend_agreement".into(), diff));
        backend_witness = Some(node);
    }
    let worst = entries
        .iter()
        .cloned()
        .fold(("none".to_string(), 0.0), |a, e| if e.1 > a.1 || e.1.is_nan() { e } else { a });
    let tolerance = cfg.tolerances.identity;
    Ok(SuiteResult {
        name: name.into(),
        passed: worst.1 < tolerance,
        entries,
        worst,
        backend_witness,
        tolerance,
    })
}

fn heat_points(n: usize, count: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
    let points = (0..count).map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let times = (0..count).map(|_| rng.random_range(0.05..4.0)).collect();
    (points, times)
}

fn trace_family(cfg: &ExperimentConfig, family: TraceFamily) -> Result<TraceOutcome> {
    let v = &cfg.verify;
    let mut out = TraceOutcome {
        family,
        block_sizes: (1..=v.trace_m).collect(),
        samples_per_size: v.trace_samples,
        worst_margin: f64::INFINITY,
        counterexample: None,
    };
    for m in 1..=v.trace_m {
        match trace_inequality(v.trace_samples, cfg.seed, m, family) {
            Ok(r) => out.worst_margin = out.worst_margin.min(r.worst_margin),
            Err(EstimateError::CounterexampleFound { m, sample, margin, matrix, .. }) => {
                out.worst_margin = out.worst_margin.min(margin);
                out.counterexample = Some(Counterexample { m, sample, margin, matrix });
                break;
            }
            Err(e) => return Err(LabError::stage("trace inequality", e)),
        }
    }
    Ok(out)
}

/// Runs every static suite; the report and a manifest go to `dir`.
pub fn verify_identities(cfg: &ExperimentConfig, dir: &Path) -> Result<(VerifyReport, RunManifest)> {
    prepare_dir(dir)?;
    let canonical = cfg.canonical();
    std::fs::write(dir.join("config.txt"), &canonical).map_err(|e| LabError::io("writing config.txt", e))?;
    let mut manifest = RunManifest::start("verify", cfg.hash());
    let v = &cfg.verify;
    let grid = Arc::new(PeriodicGrid::new(v.dim, v.resolution).map_err(|e| LabError::stage("verify", e))?);
    let flat = HermitianMetricField::Periodic(PeriodicMetric::flat(grid.clone()));
    let phi = random_periodic_potential(&grid, cfg.seed, v.amplitude, v.modes).map_err(|e| LabError::stage("verify", e))?;
    let random = assemble_metric(&flat, &phi).map_err(|e| LabError::stage("verify", e))?;
    let fs = fubini_study(cfg.geometry.dim, cfg.geometry.resolution).map_err(|e| LabError::stage("verify", e))?;
    let suites = vec![
        suite("flat", &flat, cfg, v.fault_node)?,
        suite("fubini_study", &fs, cfg, None)?,
        suite("random_periodic", &random, cfg, v.fault_node)?,
    ];
    let heat_kernel = (1..=3)
        .map(|n| {
            let (p, t) = heat_points(n, v.heat_points, cfg.seed);
            heat_kernel_identity(&p, &t, n).map_err(|e| LabError::stage("heat kernel", e))
        })
        .collect::<Result<Vec<_>>>()?;
    let trace = [TraceFamily::Real, TraceFamily::RealSymmetric, TraceFamily::Complex]
        .into_iter()
        .map(|f| trace_family(cfg, f))
        .collect::<Result<Vec<_>>>()?;

    for s in &suites {
        let witness = s.backend_witness.map(|n| format!(", backend witness node {n}")).unwrap_or_default();
        manifest.checks.push(
            Check::at_most(&format!("identities_{}", s.name), s.worst.1, s.tolerance)
                .with_detail(format!("worst entry {}{witness}", s.worst.0)),
        );
    }
    for h in &heat_kernel {
        let worst = h.max_matrix_residual.max(h.max_trace_residual);
        manifest.checks.push(
            Check::at_most(&format!("heat_kernel_{}d", h.n_real), worst, cfg.tolerances.heat_kernel)
                .with_detail(format!("{} points, witness point {}", h.points, h.witness)),
        );
    }
    for t in &trace {
        let detail = match &t.counterexample {
            Some(c) => format!("counterexample at m = {}, sample {}, margin {:e}", c.m, c.sample, c.margin),
            None => format!("{} samples per block size, worst relative margin {:e}", t.samples_per_size, t.worst_margin),
        };
        manifest.checks.push(Check::flag(&format!("trace_{}", t.family.label()), t.counterexample.is_none(), detail));
    }
    let report = VerifyReport { suites, heat_kernel, trace };
    write_json(&dir.join("verify.json"), &report)?;
    manifest.finish();
    manifest.write(dir)?;
    Ok((report, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn small(extra: &str) -> ExperimentConfig {
        parse_config(&format!("verify.resolution = 32\nverify.amplitude = 0.01\nverify.trace_samples = 200\ngeometry.resolution = 16\n{extra}")).unwrap()
    }

    #[test]
    fn identity_suites_pass_and_the_general_trace_families_do_not() {
        let dir = tempfile::tempdir().unwrap();
        let (rep, m) = verify_identities(&small(""), dir.path()).unwrap();
        assert!(rep.suites.iter().all(|s| s.passed), "{:?}", rep.suites);
        assert!(m.checks.iter().filter(|c| c.name.starts_with("heat_kernel")).all(|c| c.passed));
        assert!(m.check("trace_real-symmetric").unwrap().passed);
        assert!(!m.check("trace_real").unwrap().passed);
        assert!(!m.all_passed());
        assert!(dir.path().join("verify.json").exists());
    }

    #[test]
    fn a_broken_backend_is_caught_at_its_node() {
        let dir = tempfile::tempdir().unwrap();
        let (rep, m) = verify_identities(&small("verify.fault_node = 37\n"), dir.path()).unwrap();
        let s = rep.suites.iter().find(|s| s.name == "random_periodic").unwrap();
        assert!(!s.passed);
        assert_eq!(s.worst.0, "backend_agreement");
        assert_eq!(s.backend_witness, Some(37));
        assert!(!m.check("identities_flat").unwrap().passed);
        assert!(m.check("identities_fubini_study").unwrap().passed);
    }
}
