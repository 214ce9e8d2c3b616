//! Binary state snapshots: little-endian, full precision, versioned.
//!
//! Layout: magic `KLABSNAP`, `u32` schema version, `u32` flow kind, `u32` scheme,
//! `u32` state count, then per state `u32` representation, `u32` n, `u32` degree,
//! `f64` t, `f64` lambda and the node arrays (`beta`, or background `beta`, `phi`, gauge `b`).

use std::path::Path;
use std::sync::Arc;

use kahler_flow::{FlowKind, FlowState, PotentialData, Representation, Scheme, Trajectory};
use kahler_kernel::{HermitianMetricField, RadialGrid, RadialMetric};

use crate::error::{LabError, Result};

pub const MAGIC: &[u8; 8] = b"KLABSNAP";
pub const SCHEMA_VERSION: u32 = 1;

fn kind_code(k: FlowKind) -> u32 {
    match k {
        FlowKind::Krf => 0,
        FlowKind::Nkrf => 1,
        FlowKind::Potential => 2,
    }
}

fn scheme_code(s: Scheme) -> u32 {
    match s {
        Scheme::Rk4 => 0,
        Scheme::Imex => 1,
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode(kind: FlowKind, scheme: Scheme, states: &[FlowState]) -> Result<Vec<u8>> {
    let mut out = MAGIC.to_vec();
    put_u32(&mut out, SCHEMA_VERSION);
    put_u32(&mut out, kind_code(kind));
    put_u32(&mut out, scheme_code(scheme));
    put_u32(&mut out, states.len() as u32);
    for s in states {
        let (repr, m) = match &s.repr {
            Representation::Metric(HermitianMetricField::Radial(m)) => (0, m),
            Representation::Potential(p) => (1, &p.background),
            Representation::Metric(HermitianMetricField::Periodic(_)) => {
                return Err(LabError::stage("checkpoint", "periodic states are not flowed and have no snapshot format"))
            }
        };
        put_u32(&mut out, repr);
        put_u32(&mut out, m.grid.complex_dim() as u32);
        put_u32(&mut out, m.grid.degree() as u32);
        put_f64s(&mut out, &[s.t, s.lambda]);
        put_f64s(&mut out, &m.beta);
        if let Representation::Potential(p) = &s.repr {
            put_f64s(&mut out, &p.phi);
            put_f64s(&mut out, &[p.b]);
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: String,
}

impl Reader<'_> {
    fn fail(&self, message: impl Into<String>) -> LabError {
        LabError::Checkpoint { path: self.path.clone(), message: message.into() }
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.fail(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(8 * n)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes"))).collect())
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub kind: FlowKind,
    pub scheme: Scheme,
    pub states: Vec<FlowState>,
}

impl Snapshot {
    pub fn trajectory(&self) -> Result<Trajectory> {
        Trajectory::from_states(self.kind, self.states.clone(), self.scheme).map_err(|e| LabError::stage("checkpoint", e))
    }
}

pub fn decode(bytes: &[u8], path: &str) -> Result<Snapshot> {
    let mut r = Reader { bytes, pos: 0, path: path.into() };
    if r.take(8)? != MAGIC {
        return Err(r.fail("not a snapshot file"));
    }
    let version = r.u32()?;
    if version != SCHEMA_VERSION {
        return Err(r.fail(format!("schema version {version}, expected {SCHEMA_VERSION}")));
    }
    let kind = match r.u32()? {
        0 => FlowKind::Krf,
        1 => FlowKind::Nkrf,
        2 => FlowKind::Potential,
        k => return Err(r.fail(format!("unknown flow kind {k}"))),
    };
    let scheme = match r.u32()? {
        0 => Scheme::Rk4,
        1 => Scheme::Imex,
        s => return Err(r.fail(format!("unknown scheme {s}"))),
    };
    let count = r.u32()? as usize;
    let mut grids: Vec<Arc<RadialGrid>> = Vec::new();
    let mut states = Vec::with_capacity(count);
    for _ in 0..count {
        let repr = r.u32()?;
        let (n, degree) = (r.u32()? as usize, r.u32()? as usize);
        let grid = match grids.iter().find(|g| g.complex_dim() == n && g.degree() == degree) {
            Some(g) => g.clone(),
            None => {
                let g = Arc::new(RadialGrid::new(n, degree).map_err(|e| r.fail(e.to_string()))?);
                grids.push(g.clone());
                g
            }
        };
        let tl = r.f64s(2)?;
        let beta = r.f64s(degree + 1)?;
        let metric = RadialMetric::new(grid, beta).map_err(|e| r.fail(e.to_string()))?;
        let repr = match repr {
            0 => Representation::Metric(HermitianMetricField::Radial(metric)),
            1 => {
                let phi = r.f64s(degree + 1)?;
                let b = r.f64s(1)?[0];
                let mut p = PotentialData::new(metric).map_err(|e| r.fail(e.to_string()))?.with_phi(phi);
                p.b = b;
                Representation::Potential(p)
            }
            k => return Err(r.fail(format!("unknown representation {k}"))),
        };
        states.push(FlowState { t: tl[0], lambda: tl[1], repr });
    }
    if r.pos != bytes.len() {
        return Err(r.fail(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(Snapshot { kind, scheme, states })
}

pub fn write_snapshot(path: &Path, kind: FlowKind, scheme: Scheme, states: &[FlowState]) -> Result<()> {
    let bytes = encode(kind, scheme, states)?;
    std::fs::write(path, bytes).map_err(|e| LabError::io(format!("writing {}", path.display()), e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = std::fs::read(path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
    decode(&bytes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use kahler_models::bump_profile;

    fn beta_of(s: &FlowState) -> Vec<f64> {
        s.radial_metric().unwrap().beta
    }

    #[test]
    fn states_round_trip_bit_exactly() {
        let grid = Arc::new(RadialGrid::new(2, 12).unwrap());
        let p = bump_profile(grid.clone(), 0.1).unwrap();
        let m = RadialMetric::new(p.radial_grid(), p.beta()).unwrap();
        let mut pot = PotentialData::new(m.clone()).unwrap();
        pot = pot.with_phi(grid.xi().iter().map(|x| 0.01 * (1.0 - x * x) / 3.0).collect());
        let states = vec![
            FlowState::radial(0.0, FlowKind::Nkrf, m.clone()),
            FlowState::radial(0.1 + 1e-17, FlowKind::Nkrf, m.scaled(1.0 / 3.0)),
            FlowState { t: 0.25, lambda: 1.0, repr: Representation::Potential(pot.clone()) },
        ];
        let bytes = encode(FlowKind::Nkrf, Scheme::Imex, &states).unwrap();
        let back = decode(&bytes, "mem").unwrap();
        assert_eq!((back.kind, back.scheme), (FlowKind::Nkrf, Scheme::Imex));
        for (a, b) in states.iter().zip(&back.states) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!(beta_of(a), beta_of(b));
        }
        match &back.states[2].repr {
            Representation::Potential(q) => assert_eq!((&q.phi, q.b), (&pot.phi, pot.b)),
            _ => panic!("representation lost"),
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let m = RadialMetric::fubini_study(Arc::new(RadialGrid::new(1, 8).unwrap()));
        let bytes = encode(FlowKind::Krf, Scheme::Rk4, &[FlowState::radial(0.0, FlowKind::Krf, m)]).unwrap();
        assert!(decode(&bytes[..bytes.len() - 3], "x").is_err());
        let mut wrong = bytes.clone();
        wrong[8] = 9;
        assert!(matches!(decode(&wrong, "x"), Err(LabError::Checkpoint { .. })));
        assert!(decode(b"NOTASNAP", "x").is_err());
    }
}
