//! Serialized outputs: spectrum reports (JSON) and eigenfunction blobs.
//!
//! Blob layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 5     | magic `STKS1` |
//! | 4     | `nx` (u32, cells along x) |
//! | 4     | `ny` (u32, cells along y) |
//! | 8     | `h` (f64) |
//! | 4     | `m` (u32, number of stored fields) |
//! | 8·(nx+1)(ny+1) per field | node values, row-major in y, zero outside Ω |
//!
//! Velocity families are stored as `2m` fields: `u1` of member 0, `u2` of
//! member 0, `u1` of member 1, and so on.

use std::io::{self, Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::COMPUTED_SLACK;
use crate::extrapolate::Refinement;
use crate::frame::{FRAME_SLACK, INCOMPRESSIBILITY_TOL, ORTHONORMALITY_TOL};
use crate::grid::{DomainSpec, GridError, GriddedDomain, ScalarField, VectorField2};
use crate::lt_attractor::{lt_constants, LT_SLACK};
use crate::operators::Problem;

pub const BLOB_MAGIC: &[u8; 5] = b"STKS1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not an eigenfunction blob (bad magic)")]
    BadMagic,
    #[error("blob grid {got:?} does not match the domain grid {expected:?}")]
    GridMismatch { got: (usize, usize, f64), expected: (usize, usize, f64) },
    #[error("velocity blobs need an even number of fields, got {0}")]
    OddFieldCount(usize),
    #[error("field {index} has {got} values, expected {expected}")]
    FieldSize { index: usize, got: usize, expected: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Every tolerance and constant the checks use, echoed into reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportConstants {
    pub c_lt: f64,
    pub c_sp: f64,
    pub lt_r: f64,
    pub l_cl_1_2: f64,
    pub computed_spectrum_slack: f64,
    pub frame_slack: f64,
    pub lt_slack: f64,
    pub orthonormality_tol: f64,
    pub incompressibility_tol: f64,
}

impl ReportConstants {
    pub fn current() -> Self {
        let c = lt_constants();
        Self {
            c_lt: c.c_lt,
            c_sp: c.c_sp,
            lt_r: c.r,
            l_cl_1_2: c.l_cl_1_2,
            computed_spectrum_slack: COMPUTED_SLACK,
            frame_slack: FRAME_SLACK,
            lt_slack: LT_SLACK,
            orthonormality_tol: ORTHONORMALITY_TOL,
            incompressibility_tol: INCOMPRESSIBILITY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub problem: Problem,
    pub domain: DomainSpec,
    pub h: f64,
    pub measure: f64,
    pub m: usize,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub solver_seed: u64,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement: Option<Refinement>,
    pub constants: ReportConstants,
}

impl SpectrumReport {
    /// The extrapolated first eigenvalue if a refinement is attached,
    /// otherwise the computed one.
    pub fn best_first_eigenvalue(&self) -> Option<f64> {
        self.refinement.as_ref().map(|r| r.extrapolation.value).or_else(|| self.eigenvalues.first().copied())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Fields read back from a blob, each on the full `(nx+1)(ny+1)` node box.
#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub fields: Vec<Vec<f64>>,
}

impl Blob {
    fn check_grid(&self, d: &GriddedDomain) -> Result<(), ReportError> {
        if self.nx != d.nx() || self.ny != d.ny() || self.h != d.h() {
            return Err(ReportError::GridMismatch {
                got: (self.nx, self.ny, self.h),
                expected: (d.nx(), d.ny(), d.h()),
            });
        }
        Ok(())
    }

    fn interior(d: &GriddedDomain, field: &[f64]) -> Vec<f64> {
        d.interior_nodes().iter().map(|&node| field[node]).collect()
    }

    /// Interprets every field as a scalar field on `domain`.
    pub fn scalar_family(&self, domain: &Arc<GriddedDomain>) -> Result<Vec<ScalarField>, ReportError> {
        self.check_grid(domain)?;
        self.fields.iter().map(|f| Ok(ScalarField::new(domain.clone(), Self::interior(domain, f))?)).collect()
    }

    /// Interprets consecutive field pairs as velocity components.
    pub fn vector_family(&self, domain: &Arc<GriddedDomain>) -> Result<Vec<VectorField2>, ReportError> {
        self.check_grid(domain)?;
        if !self.fields.len().is_multiple_of(2) {
            return Err(ReportError::OddFieldCount(self.fields.len()));
        }
        self.fields
            .chunks(2)
            .map(|p| {
                Ok(VectorField2::new(domain.clone(), Self::interior(domain, &p[0]), Self::interior(domain, &p[1]))?)
            })
            .collect()
    }
}

fn box_values(d: &GriddedDomain, interior: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; d.mask().len()];
    for (&node, &v) in d.interior_nodes().iter().zip(interior) {
        out[node] = v;
    }
    out
}

/// Writes raw node-box fields with the blob header.
pub fn write_blob<W: Write>(mut w: W, nx: usize, ny: usize, h: f64, fields: &[Vec<f64>]) -> Result<(), ReportError> {
    let expected = (nx + 1) * (ny + 1);
    if let Some((index, f)) = fields.iter().enumerate().find(|(_, f)| f.len() != expected) {
        return Err(ReportError::FieldSize { index, got: f.len(), expected });
    }
    w.write_all(BLOB_MAGIC)?;
    w.write_all(&(nx as u32).to_le_bytes())?;
    w.write_all(&(ny as u32).to_le_bytes())?;
    w.write_all(&h.to_le_bytes())?;
    w.write_all(&(fields.len() as u32).to_le_bytes())?;
    for f in fields {
        let bytes: Vec<u8> = f.iter().flat_map(|v| v.to_le_bytes()).collect();
        w.write_all(&bytes)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scalar_blob<W: Write>(w: W, family: &[ScalarField]) -> Result<(), ReportError> {
    let Some(first) = family.first() else {
        return Ok(());
    };
    let d = first.domain();
    let fields: Vec<Vec<f64>> = family.iter().map(|f| box_values(d, f.values())).collect();
    write_blob(w, d.nx(), d.ny(), d.h(), &fields)
}

pub fn write_vector_blob<W: Write>(w: W, family: &[VectorField2]) -> Result<(), ReportError> {
    let Some(first) = family.first() else {
        return Ok(());
    };
    let d = first.domain();
    let fields: Vec<Vec<f64>> = family.iter().flat_map(|u| [box_values(d, u.u1()), box_values(d, u.u2())]).collect();
    write_blob(w, d.nx(), d.ny(), d.h(), &fields)
}

pub fn read_blob<R: Read>(mut r: R) -> Result<Blob, ReportError> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != BLOB_MAGIC {
        return Err(ReportError::BadMagic);
    }
    let mut u32buf = [0u8; 4];
    let mut f64buf = [0u8; 8];
    let mut next_u32 = |r: &mut R| -> io::Result<usize> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf) as usize)
    };
    let nx = next_u32(&mut r)?;
    let ny = next_u32(&mut r)?;
    r.read_exact(&mut f64buf)?;
    let h = f64::from_le_bytes(f64buf);
    let m = next_u32(&mut r)?;
    let len = (nx + 1) * (ny + 1);
    let mut bytes = vec![0u8; 8 * len];
    let mut fields = Vec::with_capacity(m);
    for _ in 0..m {
        r.read_exact(&mut bytes)?;
        fields.push(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect());
    }
    Ok(Blob { nx, ny, h, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_disk;

    fn disk() -> Arc<GriddedDomain> {
        Arc::new(make_disk(1.0, 12).unwrap())
    }

    #[test]
    fn scalar_round_trip() {
        let d = disk();
        let fam = vec![
            ScalarField::from_fn(d.clone(), |x, y| x + 2.0 * y),
            ScalarField::from_fn(d.clone(), |x, y| x * y - 0.25),
        ];
        let mut buf = Vec::new();
        write_scalar_blob(&mut buf, &fam).unwrap();
        assert_eq!(&buf[..5], b"STKS1");
        assert_eq!(buf.len(), 5 + 4 + 4 + 8 + 4 + 2 * 8 * 13 * 13);
        let blob = read_blob(&buf[..]).unwrap();
        assert_eq!((blob.nx, blob.ny, blob.h), (12, 12, d.h()));
        let back = blob.scalar_family(&d).unwrap();
        assert_eq!(back[1].values(), fam[1].values());
    }

    #[test]
    fn vector_round_trip_interleaves_components() {
        let d = disk();
        let a = ScalarField::from_fn(d.clone(), |x, _| x);
        let b = ScalarField::from_fn(d.clone(), |_, y| y);
        let u = VectorField2::from_components(a, b).unwrap();
        let mut buf = Vec::new();
        write_vector_blob(&mut buf, &[u.clone(), u.clone()]).unwrap();
        let blob = read_blob(&buf[..]).unwrap();
        assert_eq!(blob.fields.len(), 4);
        let back = blob.vector_family(&d).unwrap();
        assert_eq!(back[1].u2(), u.u2());
        assert_eq!(blob.scalar_family(&d).unwrap()[2].values(), u.u1());
    }

    #[test]
    fn blob_errors() {
        assert!(matches!(read_blob(&b"NOPE1xxxx"[..]), Err(ReportError::BadMagic)));
        let d = disk();
        let mut buf = Vec::new();
        write_scalar_blob(&mut buf, &[ScalarField::zeros(d.clone())]).unwrap();
        assert!(matches!(read_blob(&buf[..buf.len() - 1]), Err(ReportError::Io(_))));
        let other = Arc::new(make_disk(1.0, 14).unwrap());
        let blob = read_blob(&buf[..]).unwrap();
        assert!(matches!(blob.scalar_family(&other), Err(ReportError::GridMismatch { .. })));
        assert!(matches!(blob.vector_family(&d), Err(ReportError::OddFieldCount(1))));
        assert!(matches!(write_blob(Vec::new(), 2, 2, 0.5, &[vec![0.0; 8]]), Err(ReportError::FieldSize { .. })));
    }

    #[test]
    fn report_json_has_contract_fields() {
        let r = SpectrumReport {
            problem: Problem::Laplace,
            domain: DomainSpec::Rectangle { width: 1.0, height: 1.0, nx: 16 },
            h: 1.0 / 16.0,
            measure: 1.0,
            m: 1,
            eigenvalues: vec![19.7],
            residuals: vec![1e-10],
            solver_seed: 3,
            tol: 1e-8,
            refinement: None,
            constants: ReportConstants::current(),
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["domain", "h", "m", "eigenvalues", "residuals", "solver_seed", "constants"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["domain"]["shape"], "rectangle");
        let back: SpectrumReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.best_first_eigenvalue(), Some(19.7));
    }
}
