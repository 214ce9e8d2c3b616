//! Flow states, trajectories and per-step diagnostics.

use std::sync::Arc;

use kahler_kernel::{curvature, CurvatureOptions, HermitianMetricField, RadialBackend, RadialGeometry, RadialGrid, RadialMetric};
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::potential::PotentialData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowKind {
    /// `dg/dt = -Rc`.
    Krf,
    /// `dg/dt = -Rc + g`.
    Nkrf,
    /// The normalized flow written as a parabolic equation for the potential.
    Potential,
}

impl FlowKind {
    pub fn lambda(self) -> f64 {
        match self {
            FlowKind::Krf => 0.0,
            FlowKind::Nkrf | FlowKind::Potential => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Representation {
    Metric(HermitianMetricField),
    Potential(PotentialData),
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub lambda: f64,
    pub repr: Representation,
}

impl FlowState {
    pub fn new(t: f64, kind: FlowKind, metric: HermitianMetricField) -> Self {
        FlowState {
            t,
            lambda: kind.lambda(),
            repr: Representation::Metric(metric),
        }
    }

    pub fn radial(t: f64, kind: FlowKind, metric: RadialMetric) -> Self {
        FlowState::new(t, kind, HermitianMetricField::Radial(metric))
    }

    pub fn kind(&self) -> FlowKind {
        match (&self.repr, self.lambda == 0.0) {
            (Representation::Potential(_), _) => FlowKind::Potential,
            (_, true) => FlowKind::Krf,
            (_, false) => FlowKind::Nkrf,
        }
    }

    /// The metric `g(t)`, assembled from the potential if necessary.
    pub fn metric(&self) -> Result<HermitianMetricField> {
        match &self.repr {
            Representation::Metric(m) => Ok(m.clone()),
            Representation::Potential(p) => Ok(HermitianMetricField::Radial(p.metric().map_err(|e| FlowError::at(self.t, e))?)),
        }
    }

    pub fn radial_metric(&self) -> Result<RadialMetric> {
        match self.metric()? {
            HermitianMetricField::Radial(m) => Ok(m),
            HermitianMetricField::Periodic(_) => Err(FlowError::Unsupported("flows are integrated on radial profiles".into())),
        }
    }

    pub fn grid(&self) -> Option<Arc<RadialGrid>> {
        self.radial_metric().ok().map(|m| m.grid)
    }
}

/// One row per accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub dt: f64,
    pub substeps: usize,
    pub vol: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub r_avg: f64,
    /// `sup |Rm|`.
    pub rm_max: f64,
    /// `sup |phi_t - f|` for potential-flow states, with `f` the normalized Ricci potential.
    pub gauge_residual: Option<f64>,
}

pub(crate) fn diagnose(state: &FlowState, dt: f64, substeps: usize) -> Result<StepDiagnostics> {
    let metric = state.metric()?;
    let pack = curvature(&metric, &CurvatureOptions::unchecked()).map_err(|e| FlowError::at(state.t, e))?;
    let (vol, r_avg) = match &metric {
        HermitianMetricField::Radial(m) => {
            let geo = RadialGeometry::new(m.grid.clone(), &m.beta, RadialBackend::Collocation)
                .map_err(|e| FlowError::at(state.t, e))?;
            let vol = geo.volume();
            (vol, geo.integrate(&pack.scalar) / vol)
        }
        HermitianMetricField::Periodic(m) => {
            let w = m.grid.weight();
            let dv: Vec<f64> = (0..m.grid.len()).map(|k| w * kahler_kernel::metric::det_hermitian(m.complex_dim(), m.at(k))).collect();
            let vol: f64 = dv.iter().sum();
            (vol, dv.iter().zip(&pack.scalar).map(|(a, b)| a * b).sum::<f64>() / vol)
        }
    };
    let gauge_residual = match &state.repr {
        Representation::Potential(p) => Some(p.gauge_residual().map_err(|e| match e {
            FlowError::Kernel(k) => FlowError::at(state.t, k),
            other => other,
        })?),
        Representation::Metric(_) => None,
    };
    Ok(StepDiagnostics {
        t: state.t,
        dt,
        substeps,
        vol,
        r_min: pack.scalar.iter().copied().fold(f64::INFINITY, f64::min),
        r_max: pack.scalar.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        r_avg,
        rm_max: pack.rm_norm2.iter().copied().fold(0.0, f64::max).sqrt(),
        gauge_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    Rk4,
    /// Linearly implicit Euler with the Laplacian of the current metric treated implicitly.
    Imex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorMeta {
    pub scheme: Scheme,
    pub dt_history: Vec<f64>,
    pub substeps: Vec<usize>,
    pub rejections: usize,
}

/// Why an integration stopped before `t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Halt {
    SingularTime { s: f64, class_coefficient: f64, curvature: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kind: FlowKind,
    pub states: Vec<FlowState>,
    /// Diagnostics of `states[0]`.
    pub initial: StepDiagnostics,
    /// `diagnostics[k]` belongs to `states[k + 1]`.
    pub diagnostics: Vec<StepDiagnostics>,
    pub meta: IntegratorMeta,
    pub halt: Option<Halt>,
}

impl Trajectory {
    /// Trajectory from given states, with diagnostics computed for each.
    pub fn from_states(kind: FlowKind, states: Vec<FlowState>, scheme: Scheme) -> Result<Self> {
        if states.is_empty() {
            return Err(FlowError::Unsupported("a trajectory needs at least one state".into()));
        }
        for w in states.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(FlowError::Unsupported(format!("times must increase: {} then {}", w[0].t, w[1].t)));
            }
        }
        let initial = diagnose(&states[0], 0.0, 0)?;
        let mut diagnostics = Vec::with_capacity(states.len() - 1);
        for w in states.windows(2) {
            diagnostics.push(diagnose(&w[1], w[1].t - w[0].t, 1)?);
        }
        Ok(Trajectory {
            kind,
            meta: IntegratorMeta {
                scheme,
                dt_history: diagnostics.iter().map(|d| d.dt).collect(),
                substeps: vec![1; diagnostics.len()],
                rejections: 0,
            },
            states,
            initial,
            diagnostics,
            halt: None,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    /// All rows including the initial state.
    pub fn rows(&self) -> impl Iterator<Item = &StepDiagnostics> {
        std::iter::once(&self.initial).chain(self.diagnostics.iter())
    }

    /// `(t, metric)` pairs, with metrics assembled from potentials where needed.
    pub fn radial_metrics(&self) -> Result<Vec<(f64, RadialMetric)>> {
        self.states.iter().map(|s| Ok((s.t, s.radial_metric()?))).collect()
    }

    pub fn last(&self) -> &FlowState {
        self.states.last().expect("trajectories are nonempty")
    }
}
