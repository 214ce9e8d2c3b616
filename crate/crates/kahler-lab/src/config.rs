//! Experiment configuration: flat `section.key = value` text, `#` starts a comment.
//!
//! Every key has a default (see [`KEYS`]); a config only lists what it changes. The
//! canonical form lists every key in schema order and is what the run hash covers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use kahler_flow::{FlowKind, RunOptions, Scheme, StepOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FieldError, ValidationErrors};

/// `(key, default, description)` in canonical order.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("seed", "7", "global seed for every sampled diagnostic"),
    ("geometry.model", "fs", "fs | bump"),
    ("geometry.dim", "1", "complex dimension, 1 or 2"),
    ("geometry.resolution", "32", "polynomial degree of the radial profile"),
    ("geometry.amplitude", "0.0", "bump amplitude (bump model only)"),
    ("flow.kind", "nkrf", "nkrf | krf | potential"),
    ("flow.scheme", "rk4", "rk4 | imex"),
    ("flow.dt", "0.01", "output step"),
    ("flow.dt_floor", "0.0", "least admissible substep; smaller substeps truncate the run"),
    ("flow.cfl", "0.1", "curvature step factor"),
    ("flow.stability", "2.5", "spectral step factor (rk4)"),
    ("flow.max_rejections", "4", "substep halvings per output step"),
    ("flow.t_end", "1.0", "final time"),
    ("diagnostics.entropy_every", "0", "mu and W every k rows; 0 disables"),
    ("diagnostics.harnack", "false", "pointwise, two-point and quadric slacks"),
    ("diagnostics.harnack_t_min", "0.1", "earliest time entering the Harnack slacks"),
    ("diagnostics.harnack_pairs", "1000", "seeded point pairs for the two-point slack"),
    ("diagnostics.lyh_per_node", "8", "(V, W) samples per node for the quadric"),
    ("diagnostics.noncollapse", "false", "ball ratios and kappa"),
    ("diagnostics.tracker", "false", "uniform bounds along the normalized flow"),
    ("diagnostics.bisectional", "false", "min bisectional curvature per row"),
    ("diagnostics.residuals", "false", "evolution-equation residuals per row"),
    ("diagnostics.futaki", "false", "Futaki invariant of the Euler field per row"),
    ("diagnostics.flush_every", "16", "rows per CSV flush"),
    ("tolerances.fixed_point", "1e-6", "sup |R - n| on the fs model"),
    ("tolerances.volume", "1e-6", "relative volume drift"),
    ("tolerances.average_scalar", "1e-6", "|avg R - n|"),
    ("tolerances.entropy", "1e-5", "allowed decrease of mu per row"),
    ("tolerances.bisectional", "1e-6", "allowed negative bisectional curvature"),
    ("tolerances.futaki", "1e-5", "|F(V)|"),
    ("tolerances.identity", "1e-7", "identity-suite residuals"),
    ("tolerances.heat_kernel", "1e-12", "heat-kernel residual"),
    ("verify.dim", "1", "complex dimension of the periodic charts"),
    ("verify.resolution", "64", "points per axis of the periodic charts"),
    ("verify.amplitude", "0.05", "amplitude of the random periodic potential"),
    ("verify.modes", "3", "Fourier modes of the random periodic potential"),
    ("verify.heat_points", "1000", "random points per real dimension"),
    ("verify.trace_samples", "100000", "seeded samples per trace family"),
    ("verify.trace_m", "3", "block size of the trace samples"),
    ("verify.fault_node", "none", "test hook: corrupt the check backend at this node"),
    ("output.dir", "runs/default", "run directory"),
    ("output.checkpoint_every", "0", "state snapshot every k rows; 0 keeps only the last"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    Fs,
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub model: Model,
    pub dim: usize,
    pub resolution: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub kind: FlowKind,
    pub scheme: Scheme,
    pub dt: f64,
    pub dt_floor: f64,
    pub cfl: f64,
    pub stability: f64,
    pub max_rejections: usize,
    pub t_end: f64,
}

impl FlowSpec {
    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            dt: self.dt,
            t_end: self.t_end,
            step: self.step_options(),
            max_rejections: self.max_rejections,
        }
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            scheme: self.scheme,
            cfl: self.cfl,
            stability: self.stability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSpec {
    pub entropy_every: usize,
    pub harnack: bool,
    pub harnack_t_min: f64,
    pub harnack_pairs: usize,
    pub lyh_per_node: usize,
    pub noncollapse: bool,
    pub tracker: bool,
    pub bisectional: bool,
    pub residuals: bool,
    pub futaki: bool,
    pub flush_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub fixed_point: f64,
    pub volume: f64,
    pub average_scalar: f64,
    pub entropy: f64,
    pub bisectional: f64,
    pub futaki: f64,
    pub identity: f64,
    pub heat_kernel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySpec {
    pub dim: usize,
    pub resolution: usize,
    pub amplitude: f64,
    pub modes: usize,
    pub heat_points: usize,
    pub trace_samples: usize,
    pub trace_m: usize,
    pub fault_node: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: String,
    pub checkpoint_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub geometry: GeometrySpec,
    pub flow: FlowSpec,
    pub diagnostics: DiagnosticsSpec,
    pub tolerances: Tolerances,
    pub verify: VerifySpec,
    pub output: OutputSpec,
}

struct Fields {
    values: BTreeMap<&'static str, String>,
    errors: Vec<FieldError>,
}

impl Fields {
    fn err(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(FieldError { path: path.into(), message: message.into() });
    }

    fn default_of(key: &str) -> &'static str {
        KEYS.iter().find(|k| k.0 == key).map(|k| k.1).expect("key is in the schema")
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &'static str, what: &str) -> T {
        let raw = self.values.get(key).cloned().unwrap_or_else(|| Self::default_of(key).into());
        match raw.parse() {
            Ok(v) => v,
            Err(_) => {
                self.err(key, format!("expected {what}, got '{raw}'"));
                Self::default_of(key).parse().ok().expect("defaults parse")
            }
        }
    }

    fn f64(&mut self, key: &'static str) -> f64 {
        let v: f64 = self.parsed(key, "a number");
        if !v.is_finite() {
            self.err(key, "must be finite");
        }
        v
    }

    fn usize(&mut self, key: &'static str) -> usize {
        self.parsed(key, "a nonnegative integer")
    }

    fn bool(&mut self, key: &'static str) -> bool {
        self.parsed(key, "true or false")
    }

    fn choice<T: Copy>(&mut self, key: &'static str, options: &[(&str, T)]) -> T {
        let raw = self.values.get(key).cloned().unwrap_or_else(|| Self::default_of(key).into());
        match options.iter().find(|o| o.0 == raw) {
            Some(o) => o.1,
            None => {
                let names: Vec<&str> = options.iter().map(|o| o.0).collect();
                self.err(key, format!("expected one of {}, got '{raw}'", names.join(", ")));
                let d = Self::default_of(key);
                options.iter().find(|o| o.0 == d).expect("default is an option").1
            }
        }
    }

    fn string(&self, key: &'static str) -> String {
        self.values.get(key).cloned().unwrap_or_else(|| Self::default_of(key).into())
    }

    fn positive(&mut self, key: &'static str, v: f64) {
        if !(v > 0.0) {
            self.err(key, format!("must be positive, got {v}"));
        }
    }
}

const MODELS: &[(&str, Model)] = &[("fs", Model::Fs), ("bump", Model::Bump)];
const KINDS: &[(&str, FlowKind)] = &[("nkrf", FlowKind::Nkrf), ("krf", FlowKind::Krf), ("potential", FlowKind::Potential)];
const SCHEMES: &[(&str, Scheme)] = &[("rk4", Scheme::Rk4), ("imex", Scheme::Imex)];

fn name_of<T: PartialEq>(options: &[(&'static str, T)], v: &T) -> &'static str {
    options.iter().find(|o| o.1 == *v).map(|o| o.0).expect("value is an option")
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

/// Parses and validates, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ValidationErrors> {
    let mut f = Fields { values: BTreeMap::new(), errors: Vec::new() };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            f.err(&format!("line {}", lineno + 1), format!("expected 'key = value', got '{line}'"));
            continue;
        };
        let (key, value) = (key.trim(), unquote(value.trim()).to_string());
        match KEYS.iter().find(|k| k.0 == key) {
            None => f.err(key, "unknown key"),
            Some(k) => {
                if f.values.insert(k.0, value).is_some() {
                    f.err(key, "given more than once");
                }
            }
        }
    }

    let seed = f.parsed("seed", "a nonnegative integer");
    let geometry = GeometrySpec {
        model: f.choice("geometry.model", MODELS),
        dim: f.usize("geometry.dim"),
        resolution: f.usize("geometry.resolution"),
        amplitude: f.f64("geometry.amplitude"),
    };
    let flow = FlowSpec {
        kind: f.choice("flow.kind", KINDS),
        scheme: f.choice("flow.scheme", SCHEMES),
        dt: f.f64("flow.dt"),
        dt_floor: f.f64("flow.dt_floor"),
        cfl: f.f64("flow.cfl"),
        stability: f.f64("flow.stability"),
        max_rejections: f.usize("flow.max_rejections"),
        t_end: f.f64("flow.t_end"),
    };
    let diagnostics = DiagnosticsSpec {
        entropy_every: f.usize("diagnostics.entropy_every"),
        harnack: f.bool("diagnostics.harnack"),
        harnack_t_min: f.f64("diagnostics.harnack_t_min"),
        harnack_pairs: f.usize("diagnostics.harnack_pairs"),
        lyh_per_node: f.usize("diagnostics.lyh_per_node"),
        noncollapse: f.bool("diagnostics.noncollapse"),
        tracker: f.bool("diagnostics.tracker"),
        bisectional: f.bool("diagnostics.bisectional"),
        residuals: f.bool("diagnostics.residuals"),
        futaki: f.bool("diagnostics.futaki"),
        flush_every: f.usize("diagnostics.flush_every"),
    };
    let tolerances = Tolerances {
        fixed_point: f.f64("tolerances.fixed_point"),
        volume: f.f64("tolerances.volume"),
        average_scalar: f.f64("tolerances.average_scalar"),
        entropy: f.f64("tolerances.entropy"),
        bisectional: f.f64("tolerances.bisectional"),
        futaki: f.f64("tolerances.futaki"),
        identity: f.f64("tolerances.identity"),
        heat_kernel: f.f64("tolerances.heat_kernel"),
    };
    let fault = f.string("verify.fault_node");
    let fault_node = match fault.as_str() {
        "none" => None,
        s => match s.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                f.err("verify.fault_node", format!("expected 'none' or a node index, got '{s}'"));
                None
            }
        },
    };
    let verify = VerifySpec {
        dim: f.usize("verify.dim"),
        resolution: f.usize("verify.resolution"),
        amplitude: f.f64("verify.amplitude"),
        modes: f.usize("verify.modes"),
        heat_points: f.usize("verify.heat_points"),
        trace_samples: f.usize("verify.trace_samples"),
        trace_m: f.usize("verify.trace_m"),
        fault_node,
    };
    let output = OutputSpec {
        dir: f.string("output.dir"),
        checkpoint_every: f.usize("output.checkpoint_every"),
    };

    if !(1..=2).contains(&geometry.dim) {
        f.err("geometry.dim", format!("profiles exist for dimensions 1 and 2, got {}", geometry.dim));
    }
    if !(4..=1024).contains(&geometry.resolution) {
        f.err("geometry.resolution", format!("must lie in [4, 1024], got {}", geometry.resolution));
    }
    if geometry.model == Model::Fs && geometry.amplitude != 0.0 {
        f.err("geometry.amplitude", "the fs model takes no amplitude; use model = bump");
    }
    f.positive("flow.dt", flow.dt);
    f.positive("flow.t_end", flow.t_end);
    f.positive("flow.cfl", flow.cfl);
    f.positive("flow.stability", flow.stability);
    if flow.dt_floor < 0.0 {
        f.err("flow.dt_floor", format!("must be nonnegative, got {}", flow.dt_floor));
    } else if flow.dt > 0.0 && flow.dt_floor > flow.dt {
        f.err("flow.dt_floor", format!("exceeds flow.dt = {}", flow.dt));
    }
    if diagnostics.tracker && flow.kind == FlowKind::Krf {
        f.err("diagnostics.tracker", "the tracker follows the normalized flow; set flow.kind = nkrf or potential");
    }
    if diagnostics.flush_every == 0 {
        f.err("diagnostics.flush_every", "must be at least 1");
    }
    if diagnostics.harnack && diagnostics.harnack_t_min < 0.0 {
        f.err("diagnostics.harnack_t_min", "must be nonnegative");
    }
    for (key, v) in [
        ("tolerances.fixed_point", tolerances.fixed_point),
        ("tolerances.volume", tolerances.volume),
        ("tolerances.average_scalar", tolerances.average_scalar),
        ("tolerances.entropy", tolerances.entropy),
        ("tolerances.bisectional", tolerances.bisectional),
        ("tolerances.futaki", tolerances.futaki),
        ("tolerances.identity", tolerances.identity),
        ("tolerances.heat_kernel", tolerances.heat_kernel),
    ] {
        f.positive(key, v);
    }
    if !(1..=2).contains(&verify.dim) {
        f.err("verify.dim", format!("periodic charts are built for dimensions 1 and 2, got {}", verify.dim));
    }
    if verify.resolution < 4 || verify.resolution % 2 == 1 {
        f.err("verify.resolution", format!("must be even and at least 4, got {}", verify.resolution));
    }
    if verify.trace_m == 0 {
        f.err("verify.trace_m", "must be at least 1");
    }
    if let Some(node) = fault_node {
        let len = verify.resolution.pow(2 * verify.dim as u32);
        if node >= len {
            f.err("verify.fault_node", format!("chart has {len} nodes, got {node}"));
        }
    }
    if output.dir.is_empty() {
        f.err("output.dir", "must not be empty");
    }

    if f.errors.is_empty() {
        Ok(ExperimentConfig { seed, geometry, flow, diagnostics, tolerances, verify, output })
    } else {
        Err(ValidationErrors(f.errors))
    }
}

impl ExperimentConfig {
    /// Every key in schema order with normalized values; reparses to the same config.
    pub fn canonical(&self) -> String {
        let (g, fl, d, t, v, o) = (&self.geometry, &self.flow, &self.diagnostics, &self.tolerances, &self.verify, &self.output);
        let fault = v.fault_node.map_or("none".to_string(), |n| n.to_string());
        let values: Vec<String> = vec![
            self.seed.to_string(),
            name_of(MODELS, &g.model).into(),
            g.dim.to_string(),
            g.resolution.to_string(),
            format!("{:?}", g.amplitude),
            name_of(KINDS, &fl.kind).into(),
            name_of(SCHEMES, &fl.scheme).into(),
            format!("{:?}", fl.dt),
            format!("{:?}", fl.dt_floor),
            format!("{:?}", fl.cfl),
            format!("{:?}", fl.stability),
            fl.max_rejections.to_string(),
            format!("{:?}", fl.t_end),
            d.entropy_every.to_string(),
            d.harnack.to_string(),
            format!("{:?}", d.harnack_t_min),
            d.harnack_pairs.to_string(),
            d.lyh_per_node.to_string(),
            d.noncollapse.to_string(),
            d.tracker.to_string(),
            d.bisectional.to_string(),
            d.residuals.to_string(),
            d.futaki.to_string(),
            d.flush_every.to_string(),
            format!("{:?}", t.fixed_point),
            format!("{:?}", t.volume),
            format!("{:?}", t.average_scalar),
            format!("{:?}", t.entropy),
            format!("{:?}", t.bisectional),
            format!("{:?}", t.futaki),
            format!("{:?}", t.identity),
            format!("{:?}", t.heat_kernel),
            v.dim.to_string(),
            v.resolution.to_string(),
            format!("{:?}", v.amplitude),
            v.modes.to_string(),
            v.heat_points.to_string(),
            v.trace_samples.to_string(),
            v.trace_m.to_string(),
            fault,
            format!("\"{}\"", o.dir),
            o.checkpoint_every.to_string(),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        let mut out = String::new();
        for ((key, _, _), value) in KEYS.iter().zip(values) {
            writeln!(out, "{key} = {value}").expect("writing to a string");
        }
        out
    }

    /// Hex SHA-256 of [`ExperimentConfig::canonical`].
    pub fn hash(&self) -> String {
        hash_text(&self.canonical())
    }
}

pub fn hash_text(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "geometry.model = fs\nflow.kind = nkrf\nflow.t_end = 1\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.geometry.model, Model::Fs);
        assert_eq!((c.geometry.dim, c.geometry.resolution), (1, 32));
        assert_eq!(c.flow.kind, FlowKind::Nkrf);
        assert_eq!(c.flow.scheme, Scheme::Rk4);
        assert_eq!((c.flow.t_end, c.flow.dt, c.flow.dt_floor), (1.0, 0.01, 0.0));
        assert_eq!(c.diagnostics.entropy_every, 0);
        assert!(!c.diagnostics.harnack);
        assert_eq!(c.output.dir, "runs/default");
        assert_eq!(c.seed, 7);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_config("flow.tend = 2\ngeometry.colour = red\n").unwrap_err();
        assert_eq!(e.paths(), vec!["flow.tend", "geometry.colour"]);
        assert!(e.0.iter().all(|x| x.message == "unknown key"));
    }

    #[test]
    fn negative_dt_floor_is_reported_on_the_policy_field() {
        let e = parse_config("flow.dt_floor = -1e-4\n").unwrap_err();
        assert_eq!(e.paths(), vec!["flow.dt_floor"]);
    }

    #[test]
    fn all_errors_are_collected() {
        let e = parse_config("flow.dt = -1\nflow.kind = ricci\ngeometry.dim = 3\ntolerances.volume = 0\nnot a line\n").unwrap_err();
        let p = e.paths();
        for k in ["line 5", "flow.kind", "geometry.dim", "flow.dt", "tolerances.volume"] {
            assert!(p.contains(&k), "{k} missing from {p:?}");
        }
    }

    #[test]
    fn unsupported_combinations_are_rejected() {
        let e = parse_config("flow.kind = krf\ndiagnostics.tracker = true\ngeometry.amplitude = 0.1\n").unwrap_err();
        assert_eq!(e.paths(), vec!["geometry.amplitude", "diagnostics.tracker"]);
    }

    #[test]
    fn comments_quotes_and_duplicates() {
        let c = parse_config("# a run\noutput.dir = \"out/x\" # trailing\n\n").unwrap();
        assert_eq!(c.output.dir, "out/x");
        let e = parse_config("seed = 1\nseed = 2\n").unwrap_err();
        assert_eq!(e.paths(), vec!["seed"]);
    }

    #[test]
    fn canonical_form_round_trips() {
        let c = parse_config("geometry.model = bump\ngeometry.amplitude = 0.2\nflow.dt = 1e-3\nverify.fault_node = 12\n").unwrap();
        let text = c.canonical();
        assert_eq!(text.lines().count(), KEYS.len());
        let again = parse_config(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.canonical(), text);
        assert_eq!(c.hash(), hash_text(&text));
        assert_ne!(c.hash(), parse_config(MINIMAL).unwrap().hash());
    }
}
