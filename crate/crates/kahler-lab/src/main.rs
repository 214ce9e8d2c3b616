use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kahler_flow::PickRule;
use kahler_functionals::mu;
use kahler_kernel::HermitianMetricField;
use kahler_lab::{
    blowup_of_snapshot, entropy_of_snapshot, init_threads, initial_metric, parse_config, run, summarize_run, verify_identities,
    ExperimentConfig, LabError, RunManifest,
};

#[derive(Parser)]
#[command(name = "kahler-lab", version, about = "Kahler-Ricci flow lab on CP^1/CP^2 profiles and periodic charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Type1,
    Type2,
}

#[derive(Subcommand)]
enum Command {
    /// Identity suites, heat-kernel identity and trace inequality.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate the flow and write diagnostics, reports and snapshots.
    Flow {
        #[arg(long)]
        config: PathBuf,
    },
    /// Entropy mu(g, sigma) of a snapshot state, or of the configured initial metric.
    Entropy {
        #[arg(long, conflicts_with = "config")]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// State index in the snapshot; the last state by default.
        #[arg(long)]
        index: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Classify and rescale a stored trajectory.
    Blowup {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value = "type1")]
        rule: Rule,
        /// Horizon of the Type II pick rule.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
    /// Summarize a run directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
    Ok(parse_config(&text)?)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), LabError> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn print_manifest(m: &RunManifest) {
    for c in &m.checks {
        let status = match (c.asserted, c.passed) {
            (false, _) => "INFO",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        let value = c.value.map(|v| format!(" value={v:e}")).unwrap_or_default();
        let tol = c.tolerance.map(|v| format!(" tol={v:e}")).unwrap_or_default();
        println!("{status} {}{value}{tol} {}", c.name, c.detail);
    }
    if let Some(e) = &m.error {
        println!("ERROR {e}");
    }
}

fn execute(cmd: Command) -> Result<bool, LabError> {
    match cmd {
        Command::Verify { config } => {
            let cfg = load(&config)?;
            let (_, m) = verify_identities(&cfg, Path::new(&cfg.output.dir))?;
            print_manifest(&m);
            Ok(m.all_passed())
        }
        Command::Flow { config } => {
            let cfg = load(&config)?;
            let out = run(&cfg)?;
            print_manifest(&out.manifest);
            Ok(out.manifest.all_passed())
        }
        Command::Entropy { snapshot, config, index, sigma } => {
            let summary = match (snapshot, config) {
                (Some(s), _) => entropy_of_snapshot(&s, index, sigma)?,
                (None, Some(c)) => {
                    let m = initial_metric(&load(&c)?)?;
                    let r = mu(&HermitianMetricField::Radial(m), sigma).map_err(|e| LabError::stage("entropy", e))?;
                    kahler_lab::EntropySummary {
                        t: 0.0,
                        sigma,
                        mu: r.mu,
                        w: r.w,
                        el_residual: r.el_residual,
                        constraint_error: r.constraint_error,
                        iterations: r.iterations,
                        variation_check: r.variation_check,
                        converged: r.el_residual <= kahler_lab::commands::ENTROPY_RESIDUAL_TOL,
                    }
                }
                (None, None) => return Err(LabError::stage("entropy", "give --snapshot or --config")),
            };
            print_json(&summary)?;
            Ok(summary.converged)
        }
        Command::Blowup { snapshot, rule, horizon, threshold, eps } => {
            let rule = match (rule, horizon) {
                (Rule::Type1, _) => PickRule::TypeI,
                (Rule::Type2, Some(h)) => PickRule::TypeII { horizon: h },
                (Rule::Type2, None) => return Err(LabError::stage("blowup", "the type2 rule needs --horizon")),
            };
            let b = blowup_of_snapshot(&snapshot, rule, threshold, eps)?;
            print_json(&b)?;
            Ok(b.max_bound_ratio.map_or(true, |r| r <= 1.0))
        }
        Command::Report { dir } => {
            let s = summarize_run(&dir)?;
            print_json(&s)?;
            Ok(s.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
