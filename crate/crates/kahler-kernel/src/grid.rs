use std::sync::Arc;

use crate::periodic::PeriodicGrid;
use crate::radial::RadialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    PeriodicChart,
    RadialCpn,
    FullSphereProfile,
}

/// Smoothness orders of a radial profile at `z = 0` and `z = infinity`.
///
/// The profile is stored as `log(u/u_FS)`, a polynomial in the compactified
/// variable; any such polynomial extends smoothly over both poles, so the orders
/// equal the polynomial degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Closure {
    pub origin_order: usize,
    pub infinity_order: usize,
}

#[derive(Debug, Clone)]
pub enum ChartGrid {
    Periodic(Arc<PeriodicGrid>),
    Radial(Arc<RadialGrid>),
}

impl ChartGrid {
    pub fn complex_dim(&self) -> usize {
        match self {
            ChartGrid::Periodic(g) => g.complex_dim(),
            ChartGrid::Radial(g) => g.complex_dim(),
        }
    }

    pub fn topology(&self) -> Topology {
        match self {
            ChartGrid::Periodic(_) => Topology::PeriodicChart,
            ChartGrid::Radial(g) => g.topology(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ChartGrid::Periodic(g) => g.len(),
            ChartGrid::Radial(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of a node: real chart coordinates, or the compactified radial variable.
    pub fn node(&self, i: usize) -> Vec<f64> {
        match self {
            ChartGrid::Periodic(g) => g.coords(i),
            ChartGrid::Radial(g) => vec![g.xi()[i]],
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        match self {
            ChartGrid::Periodic(g) => vec![g.weight(); g.len()],
            ChartGrid::Radial(g) => g.weights().to_vec(),
        }
    }

    pub fn reference_volume(&self) -> f64 {
        match self {
            ChartGrid::Periodic(g) => g.reference_volume(),
            ChartGrid::Radial(_) => 2.0,
        }
    }

    pub fn closure(&self) -> Option<Closure> {
        match self {
            ChartGrid::Periodic(_) => None,
            ChartGrid::Radial(g) => Some(g.closure()),
        }
    }

    pub fn same_as(&self, other: &ChartGrid) -> bool {
        match (self, other) {
            (ChartGrid::Periodic(a), ChartGrid::Periodic(b)) => Arc::ptr_eq(a, b) || a == b,
            (ChartGrid::Radial(a), ChartGrid::Radial(b)) => {
                Arc::ptr_eq(a, b)
                    || (a.complex_dim() == b.complex_dim() && a.degree() == b.degree())
            }
            _ => false,
        }
    }
}
