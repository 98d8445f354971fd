//! Fourier-transform frame bounds for orthonormal, suborthonormal and
//! divergence-free families.
//!
//! Transforms are trapezoidal quadratures of the zero-extended field,
//! `û(ξ) = h² Σ_j e^{−iξ·x_j} u_j`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, GriddedDomain, ScalarField, VectorField2};

/// Relative slack on frame bounds.
pub const FRAME_SLACK: f64 = 0.02;
/// Largest accepted `max |G − I|` for families fed to [`frame_check`].
pub const ORTHONORMALITY_TOL: f64 = 2e-2;
/// Threshold on the incompressibility residual of divergence-free families.
pub const INCOMPRESSIBILITY_TOL: f64 = 1e-2;
/// Lattice half-width of the default ξ grid.
pub const LATTICE_HALF_WIDTH: i32 = 32;
/// Random directions per radius in the default ξ grid.
pub const RANDOM_DIRECTIONS: usize = 64;
pub const RANDOM_RADII: [f64; 3] = [1.0, 5.0, 25.0];
pub const DEFAULT_XI_SEED: u64 = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("empty family")]
    EmptyFamily,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("family is not orthonormal: max |G − I| = {defect:.3e}, largest Gram eigenvalue {gram_max:.6}")]
    NotOrthonormal { defect: f64, gram_max: f64 },
    #[error("{kind:?} bound needs a {expected} family")]
    KindMismatch { kind: BoundKind, expected: &'static str },
    #[error("quarter turns need a domain that is invariant under them")]
    NotRotatable,
    #[error("empty ξ grid")]
    EmptyGrid,
}

/// Members of a family with a discrete L₂ product.
pub trait L2Member {
    fn l2_inner(&self, other: &Self) -> Result<f64, GridError>;
}

impl L2Member for ScalarField {
    fn l2_inner(&self, other: &Self) -> Result<f64, GridError> {
        self.inner(other)
    }
}

impl L2Member for VectorField2 {
    fn l2_inner(&self, other: &Self) -> Result<f64, GridError> {
        self.inner(other)
    }
}

pub fn gram_matrix<T: L2Member>(family: &[T]) -> Result<DMatrix<f64>, FrameError> {
    let m = family.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = family[i].l2_inner(&family[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Largest eigenvalue of the Gram matrix; a family is suborthonormal iff
/// this is at most 1.
pub fn gram_max_eigenvalue<T: L2Member>(family: &[T]) -> Result<f64, FrameError> {
    if family.is_empty() {
        return Err(FrameError::EmptyFamily);
    }
    let g = gram_matrix(family)?;
    Ok(SymmetricEigen::new(g).eigenvalues.max())
}

/// `max |G − I|` and the largest Gram eigenvalue.
pub fn orthonormality<T: L2Member>(family: &[T]) -> Result<(f64, f64), FrameError> {
    if family.is_empty() {
        return Err(FrameError::EmptyFamily);
    }
    let g = gram_matrix(family)?;
    let m = g.nrows();
    let defect = (&g - DMatrix::<f64>::identity(m, m)).abs().max();
    Ok((defect, SymmetricEigen::new(g).eigenvalues.max()))
}

/// The axis-1 or axis-2 components of a vector family.
pub fn project_component(family: &[VectorField2], axis: usize) -> Vec<ScalarField> {
    family.iter().map(|u| u.component_field(axis)).collect()
}

/// Separable phase factors `e^{−iξ·(x_j − c)}` for every interior node.
fn phases(d: &GriddedDomain, xi: [f64; 2], center: [f64; 2]) -> Vec<Complex64> {
    let h = d.h();
    let [ox, oy] = d.origin();
    let ex: Vec<Complex64> =
        (0..=d.nx()).map(|i| Complex64::from_polar(1.0, -xi[0] * (ox + i as f64 * h - center[0]))).collect();
    let ey: Vec<Complex64> =
        (0..=d.ny()).map(|j| Complex64::from_polar(1.0, -xi[1] * (oy + j as f64 * h - center[1]))).collect();
    d.interior_nodes()
        .iter()
        .map(|&node| {
            let (ix, iy) = d.node_coords(node);
            ex[ix] * ey[iy]
        })
        .collect()
}

fn quadrature(phase: &[Complex64], values: &[f64], h2: f64) -> Complex64 {
    phase.iter().zip(values).fold(Complex64::new(0.0, 0.0), |acc, (p, &v)| acc + p * v) * h2
}

/// `f̂(ξ)` with positions measured from the coordinate origin.
pub fn fourier_at(field: &ScalarField, xi: [f64; 2]) -> Complex64 {
    fourier_about(field, xi, [0.0, 0.0])
}

/// `f̂(ξ)` with positions measured from `center`; differs from
/// [`fourier_at`] by the phase `e^{iξ·c}`.
pub fn fourier_about(field: &ScalarField, xi: [f64; 2], center: [f64; 2]) -> Complex64 {
    let d = field.domain();
    quadrature(&phases(d, xi, center), field.values(), d.h() * d.h())
}

/// Componentwise transform `(û₁(ξ), û₂(ξ))`.
pub fn fourier_vector_at(field: &VectorField2, xi: [f64; 2]) -> [Complex64; 2] {
    fourier_vector_about(field, xi, [0.0, 0.0])
}

pub fn fourier_vector_about(field: &VectorField2, xi: [f64; 2], center: [f64; 2]) -> [Complex64; 2] {
    let d = field.domain();
    let p = phases(d, xi, center);
    let h2 = d.h() * d.h();
    [quadrature(&p, field.u1(), h2), quadrature(&p, field.u2(), h2)]
}

/// Lattice `(2πp/Lx, 2πq/Ly)`, `|p|, |q| ≤ half_width`, over the bounding
/// box, followed by `directions` seeded random directions at each radius.
pub fn xi_grid(domain: &GriddedDomain, half_width: i32, directions: usize, radii: &[f64], seed: u64) -> Vec<[f64; 2]> {
    let [lx, ly] = domain.box_size();
    let mut out = Vec::new();
    for p in -half_width..=half_width {
        for q in -half_width..=half_width {
            out.push([2.0 * PI * p as f64 / lx, 2.0 * PI * q as f64 / ly]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &r in radii {
        for _ in 0..directions {
            let t: f64 = rng.random_range(0.0..2.0 * PI);
            out.push([r * t.cos(), r * t.sin()]);
        }
    }
    out
}

/// The default test grid: 65² lattice points plus 3 × 64 random points.
pub fn default_xi_grid(domain: &GriddedDomain) -> Vec<[f64; 2]> {
    xi_grid(domain, LATTICE_HALF_WIDTH, RANDOM_DIRECTIONS, &RANDOM_RADII, DEFAULT_XI_SEED)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// `Σ|φ̂_k|² ≤ |Ω|` for scalar families.
    Scalar,
    /// `Σ|û_k|² ≤ n|Ω|` for vector families.
    Vector,
    /// `Σ|û_k|² ≤ (n−1)|Ω|` for divergence-free vector families.
    DivFree,
}

impl BoundKind {
    pub fn bound(self, measure: f64) -> f64 {
        let n = 2.0;
        match self {
            BoundKind::Scalar => measure,
            BoundKind::Vector => n * measure,
            BoundKind::DivFree => (n - 1.0) * measure,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Family<'a> {
    Scalar(&'a [ScalarField]),
    Vector(&'a [VectorField2]),
}

impl Family<'_> {
    pub fn len(&self) -> usize {
        match self {
            Family::Scalar(f) => f.len(),
            Family::Vector(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn domain(&self) -> Option<&GriddedDomain> {
        match self {
            Family::Scalar(f) => f.first().map(|x| &**x.domain()),
            Family::Vector(f) => f.first().map(|x| &**x.domain()),
        }
    }

    fn orthonormality(&self) -> Result<(f64, f64), FrameError> {
        match self {
            Family::Scalar(f) => orthonormality(f),
            Family::Vector(f) => orthonormality(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub m: usize,
    pub bound_kind: BoundKind,
    pub bound: f64,
    /// max over the ξ grid of `Σ_k |û_k(ξ)|²`.
    pub sup_value: f64,
    pub argmax_xi: [f64; 2],
    /// Divergence-free kind only: max over `ξ ≠ 0` of
    /// `sqrt(Σ_k |ξ·û_k|²) / (|ξ| (sqrt(Σ_k |û_k|²) + ε))`.
    pub max_div_residual: Option<f64>,
    pub slack: f64,
    pub passed: bool,
    #[serde(skip)]
    pub xi_grid: Vec<[f64; 2]>,
}

impl FrameReport {
    /// Whether the incompressibility residual (if any) is within tolerance.
    pub fn incompressible(&self) -> bool {
        self.max_div_residual.is_none_or(|r| r <= INCOMPRESSIBILITY_TOL)
    }
}

/// Per-ξ family sums: `Σ_k |û_k|²` and, for vector families, `Σ_k |ξ·û_k|²`.
pub fn frame_sums(family: Family, xi_grid: &[[f64; 2]]) -> Vec<(f64, f64)> {
    let Some(d) = family.domain() else {
        return vec![(0.0, 0.0); xi_grid.len()];
    };
    let h2 = d.h() * d.h();
    let eval = |xi: &[f64; 2]| {
        let p = phases(d, *xi, [0.0, 0.0]);
        match family {
            Family::Scalar(f) => {
                let s = f.iter().map(|g| quadrature(&p, g.values(), h2).norm_sqr()).sum();
                (s, 0.0)
            }
            Family::Vector(f) => f.iter().fold((0.0, 0.0), |(s, t), u| {
                let a = quadrature(&p, u.u1(), h2);
                let b = quadrature(&p, u.u2(), h2);
                let dot = a * xi[0] + b * xi[1];
                (s + a.norm_sqr() + b.norm_sqr(), t + dot.norm_sqr())
            }),
        }
    };
    #[cfg(feature = "parallel")]
    {
        xi_grid.par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        xi_grid.iter().map(eval).collect()
    }
}

/// Checks the frame bound of `kind` over `xi_grid` after verifying the
/// family is orthonormal within [`ORTHONORMALITY_TOL`].
pub fn frame_check(family: Family, xi_grid: &[[f64; 2]], kind: BoundKind) -> Result<FrameReport, FrameError> {
    match (kind, family) {
        (BoundKind::Scalar, Family::Vector(_)) => return Err(FrameError::KindMismatch { kind, expected: "scalar" }),
        (BoundKind::Vector | BoundKind::DivFree, Family::Scalar(_)) => {
            return Err(FrameError::KindMismatch { kind, expected: "vector" })
        }
        _ => {}
    }
    if xi_grid.is_empty() {
        return Err(FrameError::EmptyGrid);
    }
    let (defect, gram_max) = family.orthonormality()?;
    if defect > ORTHONORMALITY_TOL {
        return Err(FrameError::NotOrthonormal { defect, gram_max });
    }
    let d = family.domain().expect("nonempty family");
    let bound = kind.bound(d.measure());
    let sums = frame_sums(family, xi_grid);
    let (imax, sup_value) =
        sums.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &(s, _))| if s > bv { (i, s) } else { (bi, bv) });
    let max_div_residual = (kind == BoundKind::DivFree).then(|| {
        let eps = 1e-3 * bound.sqrt();
        xi_grid
            .iter()
            .zip(&sums)
            .filter(|(xi, _)| xi[0] != 0.0 || xi[1] != 0.0)
            .map(|(xi, &(s, t))| t.sqrt() / (xi[0].hypot(xi[1]) * (s.sqrt() + eps)))
            .fold(0.0, f64::max)
    });
    Ok(FrameReport {
        m: family.len(),
        bound_kind: kind,
        bound,
        sup_value,
        argmax_xi: xi_grid[imax],
        max_div_residual,
        slack: FRAME_SLACK,
        passed: sup_value <= bound * (1.0 + FRAME_SLACK),
        xi_grid: xi_grid.to_vec(),
    })
}

/// Quarter turn counterclockwise about the bounding-box centre,
/// `u_ρ(x) = ρ u(ρ⁻¹x)`. The domain must map onto itself.
pub fn rotate90(family: &[VectorField2]) -> Result<Vec<VectorField2>, FrameError> {
    let Some(first) = family.first() else {
        return Ok(Vec::new());
    };
    let d = first.domain().clone();
    let n = d.nx();
    if d.ny() != n {
        return Err(FrameError::NotRotatable);
    }
    // target node (i, j) reads source node (j, n − i)
    let source: Vec<Option<usize>> = d
        .interior_nodes()
        .iter()
        .map(|&node| {
            let (i, j) = d.node_coords(node);
            d.interior_index(d.node_id(j, n - i))
        })
        .collect();
    if source.iter().any(Option::is_none) {
        return Err(FrameError::NotRotatable);
    }
    let source: Vec<usize> = source.into_iter().flatten().collect();
    family
        .iter()
        .map(|u| {
            if !u.domain().same_grid(&d) {
                return Err(FrameError::Grid(GridError::DomainMismatch));
            }
            // ρ(a, b) = (−b, a)
            let u1 = source.iter().map(|&s| -u.u2()[s]).collect();
            let u2 = source.iter().map(|&s| u.u1()[s]).collect();
            Ok(VectorField2::new(d.clone(), u1, u2)?)
        })
        .collect()
}

/// Bounding-box centre, the fixed point of [`rotate90`].
pub fn box_center(d: &GriddedDomain) -> [f64; 2] {
    let [ox, oy] = d.origin();
    let [lx, ly] = d.box_size();
    [ox + lx / 2.0, oy + ly / 2.0]
}
