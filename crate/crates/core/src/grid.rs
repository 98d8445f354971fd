//! Uniform-grid planar domains and the discrete fields that live on them.
//!
//! A [`GriddedDomain`] is a bounding box of `(nx + 1) × (ny + 1)` nodes with
//! spacing `h` and a boolean mask marking the interior nodes of Ω. Fields
//! store values on interior nodes only; everything outside the mask is zero.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest accepted cell count along the x axis for the shape constructors.
pub const MIN_CELLS: usize = 8;

const EXTERIOR: usize = usize::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("domain dimensions must be positive (got {0})")]
    NonPositiveDimension(f64),
    #[error("nx = {0} is too small (need at least {MIN_CELLS})")]
    TooFewCells(usize),
    #[error("height {height} is not a whole number of cells of size {h}")]
    NonCommensurate { height: f64, h: f64 },
    #[error("mask has {got} entries, expected {expected}")]
    MaskSize { got: usize, expected: usize },
    #[error("interior node ({0}, {1}) touches the bounding box")]
    InteriorOnBox(usize, usize),
    #[error("domain has no interior nodes")]
    EmptyInterior,
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error("field has {got} values, domain has {expected} interior nodes")]
    FieldLength { got: usize, expected: usize },
}

/// How a domain was generated; kept for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Rectangle { width: f64, height: f64 },
    Disk { radius: f64 },
    Mask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDomain {
    shape: Shape,
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    mask: Vec<bool>,
    measure: f64,
    interior: Vec<usize>,
    node_to_interior: Vec<usize>,
}

impl GriddedDomain {
    /// Builds a domain from an explicit node mask, row-major in y.
    ///
    /// `nx`, `ny` count cells, so the mask has `(nx + 1) * (ny + 1)` entries.
    /// Nodes on the bounding box must be exterior so every interior node has
    /// four neighbors inside the box.
    pub fn from_mask(
        nx: usize,
        ny: usize,
        h: f64,
        origin: [f64; 2],
        mask: Vec<bool>,
        measure: f64,
    ) -> Result<Self, GridError> {
        Self::build(Shape::Mask, nx, ny, h, origin, mask, measure)
    }

    fn build(
        shape: Shape,
        nx: usize,
        ny: usize,
        h: f64,
        origin: [f64; 2],
        mask: Vec<bool>,
        measure: f64,
    ) -> Result<Self, GridError> {
        if !(h > 0.0) {
            return Err(GridError::NonPositiveDimension(h));
        }
        if !(measure > 0.0) {
            return Err(GridError::NonPositiveDimension(measure));
        }
        let expected = (nx + 1) * (ny + 1);
        if mask.len() != expected {
            return Err(GridError::MaskSize { got: mask.len(), expected });
        }
        let mut interior = Vec::new();
        let mut node_to_interior = vec![EXTERIOR; expected];
        for iy in 0..=ny {
            for ix in 0..=nx {
                let node = iy * (nx + 1) + ix;
                if !mask[node] {
                    continue;
                }
                if ix == 0 || iy == 0 || ix == nx || iy == ny {
                    return Err(GridError::InteriorOnBox(ix, iy));
                }
                node_to_interior[node] = interior.len();
                interior.push(node);
            }
        }
        if interior.is_empty() {
            return Err(GridError::EmptyInterior);
        }
        Ok(Self { shape, nx, ny, h, origin, mask, measure, interior, node_to_interior })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    /// |Ω|: exact for rectangles, cell count × h² for masked shapes.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    /// Extent of the bounding box along each axis.
    pub fn box_size(&self) -> [f64; 2] {
        [self.nx as f64 * self.h, self.ny as f64 * self.h]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    /// Node ids (row-major in the bounding box) of the interior nodes.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn node_id(&self, ix: usize, iy: usize) -> usize {
        iy * (self.nx + 1) + ix
    }

    pub fn node_coords(&self, node: usize) -> (usize, usize) {
        (node % (self.nx + 1), node / (self.nx + 1))
    }

    pub fn position(&self, ix: usize, iy: usize) -> [f64; 2] {
        [self.origin[0] + ix as f64 * self.h, self.origin[1] + iy as f64 * self.h]
    }

    /// Interior index of a node, or `None` outside Ω.
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        match self.node_to_interior.get(node) {
            Some(&k) if k != EXTERIOR => Some(k),
            _ => None,
        }
    }

    /// Interior index of the node at integer offset `(dx, dy)` from `node`.
    /// Offsets must stay within the bounding box.
    pub fn neighbor(&self, node: usize, dx: isize, dy: isize) -> Option<usize> {
        let (ix, iy) = self.node_coords(node);
        let jx = ix as isize + dx;
        let jy = iy as isize + dy;
        if jx < 0 || jy < 0 || jx > self.nx as isize || jy > self.ny as isize {
            return None;
        }
        self.interior_index(self.node_id(jx as usize, jy as usize))
    }

    /// Interior nodes whose four axis neighbors are also interior.
    pub fn full_stencil(&self, k: usize) -> bool {
        let node = self.interior[k];
        [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().all(|&(dx, dy)| self.neighbor(node, dx, dy).is_some())
    }

    /// Longest run of consecutive interior nodes along x and along y.
    pub fn max_runs(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for iy in 0..=self.ny {
            let mut run = 0;
            for ix in 0..=self.nx {
                run = if self.mask[self.node_id(ix, iy)] { run + 1 } else { 0 };
                best.0 = best.0.max(run);
            }
        }
        for ix in 0..=self.nx {
            let mut run = 0;
            for iy in 0..=self.ny {
                run = if self.mask[self.node_id(ix, iy)] { run + 1 } else { 0 };
                best.1 = best.1.max(run);
            }
        }
        best
    }

    /// Same grid and mask (the shape tag is not compared).
    pub fn same_grid(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.h == other.h
            && self.origin == other.origin
            && self.mask == other.mask
    }
}

/// Rectangle `[0, width] × [0, height]` with `h = width / nx`.
pub fn make_rectangle(width: f64, height: f64, nx: usize) -> Result<GriddedDomain, GridError> {
    for v in [width, height] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(GridError::NonPositiveDimension(v));
        }
    }
    if nx < MIN_CELLS {
        return Err(GridError::TooFewCells(nx));
    }
    let h = width / nx as f64;
    let cells_y = height / h;
    let ny = cells_y.round() as usize;
    if ny < 2 || (cells_y - ny as f64).abs() > 1e-9 * cells_y.max(1.0) {
        return Err(GridError::NonCommensurate { height, h });
    }
    let mut mask = vec![false; (nx + 1) * (ny + 1)];
    for iy in 1..ny {
        for ix in 1..nx {
            mask[iy * (nx + 1) + ix] = true;
        }
    }
    GriddedDomain::build(Shape::Rectangle { width, height }, nx, ny, h, [0.0, 0.0], mask, width * height)
}

/// Staircase disk centred at the origin: nodes with `|x| < radius` on a grid
/// of `nx` cells across the diameter. The measure is the interior count × h²,
/// which converges to πr² only at first order in h.
pub fn make_disk(radius: f64, nx: usize) -> Result<GriddedDomain, GridError> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(GridError::NonPositiveDimension(radius));
    }
    if nx < 4 {
        return Err(GridError::TooFewCells(nx));
    }
    let h = 2.0 * radius / nx as f64;
    let origin = [-radius, -radius];
    let mut mask = vec![false; (nx + 1) * (nx + 1)];
    let r2 = radius * radius;
    let mut count = 0usize;
    for iy in 0..=nx {
        for ix in 0..=nx {
            let x = origin[0] + ix as f64 * h;
            let y = origin[1] + iy as f64 * h;
            if x * x + y * y < r2 {
                mask[iy * (nx + 1) + ix] = true;
                count += 1;
            }
        }
    }
    let measure = count as f64 * h * h;
    GriddedDomain::build(Shape::Disk { radius }, nx, nx, h, origin, mask, measure)
}

/// Serializable recipe for a domain, e.g.
/// `{"shape": "rectangle", "width": 2, "height": 1, "nx": 64}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Rectangle { width: f64, height: f64, nx: usize },
    Disk { radius: f64, nx: usize },
}

impl DomainSpec {
    pub fn build(&self) -> Result<GriddedDomain, GridError> {
        match *self {
            DomainSpec::Rectangle { width, height, nx } => make_rectangle(width, height, nx),
            DomainSpec::Disk { radius, nx } => make_disk(radius, nx),
        }
    }

    pub fn nx(&self) -> usize {
        match *self {
            DomainSpec::Rectangle { nx, .. } | DomainSpec::Disk { nx, .. } => nx,
        }
    }

    /// Same shape at a different resolution.
    pub fn with_nx(&self, nx: usize) -> Self {
        match *self {
            DomainSpec::Rectangle { width, height, .. } => DomainSpec::Rectangle { width, height, nx },
            DomainSpec::Disk { radius, .. } => DomainSpec::Disk { radius, nx },
        }
    }
}

fn check_len(domain: &GriddedDomain, len: usize) -> Result<(), GridError> {
    if len != domain.n_interior() {
        return Err(GridError::FieldLength { got: len, expected: domain.n_interior() });
    }
    Ok(())
}

fn same_domain(a: &Arc<GriddedDomain>, b: &Arc<GriddedDomain>) -> Result<(), GridError> {
    if Arc::ptr_eq(a, b) || a.same_grid(b) {
        Ok(())
    } else {
        Err(GridError::DomainMismatch)
    }
}

/// Real values on the interior nodes of a domain.
#[derive(Debug, Clone)]
pub struct ScalarField {
    domain: Arc<GriddedDomain>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: Arc<GriddedDomain>, values: Vec<f64>) -> Result<Self, GridError> {
        check_len(&domain, values.len())?;
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: Arc<GriddedDomain>) -> Self {
        let values = vec![0.0; domain.n_interior()];
        Self { domain, values }
    }

    /// Samples `f(x, y)` at every interior node.
    pub fn from_fn(domain: Arc<GriddedDomain>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = domain
            .interior_nodes()
            .iter()
            .map(|&node| {
                let (ix, iy) = domain.node_coords(node);
                let [x, y] = domain.position(ix, iy);
                f(x, y)
            })
            .collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &Arc<GriddedDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    /// Value at a bounding-box node, zero outside Ω.
    pub fn at_node(&self, node: usize) -> f64 {
        self.domain.interior_index(node).map_or(0.0, |k| self.values[k])
    }

    /// Values on the full bounding box, row-major in y, zeros outside Ω.
    pub fn to_box(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.domain.mask().len()];
        for (k, &node) in self.domain.interior_nodes().iter().enumerate() {
            out[node] = self.values[k];
        }
        out
    }

    pub fn inner(&self, other: &Self) -> Result<f64, GridError> {
        same_domain(&self.domain, &other.domain)?;
        let h2 = self.domain.h() * self.domain.h();
        Ok(h2 * dot(&self.values, &other.values))
    }

    pub fn norm_sq(&self) -> f64 {
        let h2 = self.domain.h() * self.domain.h();
        h2 * dot(&self.values, &self.values)
    }

    /// Discrete ‖∇f‖²: forward differences over every grid edge touching Ω,
    /// with zero extension outside. Equals `h² fᵀ L f` for the 5-point −Δ.
    pub fn grad_norm_sq(&self) -> f64 {
        let d = &*self.domain;
        let mut acc = 0.0;
        for (k, &node) in d.interior_nodes().iter().enumerate() {
            let v = self.values[k];
            for (dx, dy) in [(1isize, 0isize), (0, 1)] {
                let w = d.neighbor(node, dx, dy).map_or(0.0, |j| self.values[j]);
                acc += (w - v) * (w - v);
            }
            // edges whose lower/left endpoint is exterior
            for (dx, dy) in [(-1isize, 0isize), (0, -1)] {
                if d.neighbor(node, dx, dy).is_none() {
                    acc += v * v;
                }
            }
        }
        acc
    }
}

/// Planar vector field `(u1, u2)` on the interior nodes.
#[derive(Debug, Clone)]
pub struct VectorField2 {
    domain: Arc<GriddedDomain>,
    u1: Vec<f64>,
    u2: Vec<f64>,
}

impl VectorField2 {
    pub fn new(domain: Arc<GriddedDomain>, u1: Vec<f64>, u2: Vec<f64>) -> Result<Self, GridError> {
        check_len(&domain, u1.len())?;
        check_len(&domain, u2.len())?;
        Ok(Self { domain, u1, u2 })
    }

    pub fn from_components(a: ScalarField, b: ScalarField) -> Result<Self, GridError> {
        same_domain(&a.domain, &b.domain)?;
        Ok(Self { domain: a.domain, u1: a.values, u2: b.values })
    }

    pub fn domain(&self) -> &Arc<GriddedDomain> {
        &self.domain
    }

    pub fn u1(&self) -> &[f64] {
        &self.u1
    }

    pub fn u2(&self) -> &[f64] {
        &self.u2
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        if axis == 1 {
            &self.u1
        } else {
            &self.u2
        }
    }

    pub fn component_field(&self, axis: usize) -> ScalarField {
        ScalarField { domain: self.domain.clone(), values: self.component(axis).to_vec() }
    }

    pub fn scale(&mut self, c: f64) {
        self.u1.iter_mut().chain(self.u2.iter_mut()).for_each(|v| *v *= c);
    }

    pub fn inner(&self, other: &Self) -> Result<f64, GridError> {
        same_domain(&self.domain, &other.domain)?;
        let h2 = self.domain.h() * self.domain.h();
        Ok(h2 * (dot(&self.u1, &other.u1) + dot(&self.u2, &other.u2)))
    }

    pub fn norm_sq(&self) -> f64 {
        let h2 = self.domain.h() * self.domain.h();
        h2 * (dot(&self.u1, &self.u1) + dot(&self.u2, &self.u2))
    }

    /// Sum of the component gradient norms, ‖∇u1‖² + ‖∇u2‖².
    pub fn grad_norm_sq(&self) -> f64 {
        self.component_field(1).grad_norm_sq() + self.component_field(2).grad_norm_sq()
    }

    /// Centered-difference divergence at interior nodes (zero extension).
    pub fn divergence(&self) -> Vec<f64> {
        let d = &*self.domain;
        let inv = 1.0 / (2.0 * d.h());
        let at = |field: &[f64], node, dx, dy| d.neighbor(node, dx, dy).map_or(0.0, |j| field[j]);
        d.interior_nodes()
            .iter()
            .map(|&node| {
                (at(&self.u1, node, 1, 0) - at(&self.u1, node, -1, 0)) * inv
                    + (at(&self.u2, node, 0, 1) - at(&self.u2, node, 0, -1)) * inv
            })
            .collect()
    }

    /// Largest |div u| over interior nodes with a full 5-point stencil.
    pub fn max_divergence(&self) -> f64 {
        self.divergence()
            .iter()
            .enumerate()
            .filter(|(k, _)| self.domain.full_stencil(*k))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn domain_spec_json() {
        let spec: DomainSpec =
            serde_json::from_str(r#"{"shape": "rectangle", "width": 2.0, "height": 1.0, "nx": 16}"#).unwrap();
        assert_eq!(spec.build().unwrap().measure(), 2.0);
        assert_eq!(spec.with_nx(32).build().unwrap().ny(), 16);
        let disk: DomainSpec = serde_json::from_str(r#"{"shape": "disk", "radius": 1.0, "nx": 32}"#).unwrap();
        assert_eq!(disk.nx(), 32);
        assert!(serde_json::from_str::<DomainSpec>(r#"{"shape": "hexagon", "nx": 16}"#).is_err());
    }

    #[test]
    fn rectangle_basics() {
        let d = make_rectangle(1.0, 1.0, 64).unwrap();
        assert_eq!(d.measure(), 1.0);
        assert_eq!(d.h(), 1.0 / 64.0);
        assert_eq!(d.n_interior(), 63 * 63);
        let d = make_rectangle(2.0, 1.0, 64).unwrap();
        assert_eq!(d.measure(), 2.0);
        assert_eq!(d.ny(), 32);
    }

    #[test]
    fn rectangle_rejects_bad_input() {
        assert_eq!(make_rectangle(1.0, 1.0, 4), Err(GridError::TooFewCells(4)));
        assert!(matches!(make_rectangle(0.0, 1.0, 16), Err(GridError::NonPositiveDimension(_))));
        assert!(matches!(make_rectangle(1.0, 0.33, 16), Err(GridError::NonCommensurate { .. })));
    }

    #[test]
    fn disk_measure_close_to_pi() {
        let d = make_disk(1.0, 256).unwrap();
        // oracle: direct count of lattice points strictly inside the circle
        let h = 2.0 / 256.0;
        let mut count = 0;
        for i in 0..=256 {
            for j in 0..=256 {
                let x = -1.0 + i as f64 * h;
                let y = -1.0 + j as f64 * h;
                if x * x + y * y < 1.0 {
                    count += 1;
                }
            }
        }
        assert_eq!(d.n_interior(), count);
        assert!((d.measure() - PI).abs() / PI < 0.02);
        let coarse = make_disk(1.0, 16).unwrap();
        assert!(coarse.measure() > 0.0);
        assert!(make_disk(0.0, 64).is_err());
    }

    #[test]
    fn every_interior_node_has_box_neighbors() {
        let d = make_disk(1.0, 32).unwrap();
        for &node in d.interior_nodes() {
            let (ix, iy) = d.node_coords(node);
            assert!(ix > 0 && iy > 0 && ix < d.nx() && iy < d.ny());
        }
    }

    #[test]
    fn single_node_mask() {
        let mut mask = vec![false; 9];
        mask[4] = true;
        let d = GriddedDomain::from_mask(2, 2, 0.5, [0.0, 0.0], mask, 0.25).unwrap();
        assert_eq!(d.n_interior(), 1);
        let mut bad = vec![false; 9];
        bad[0] = true;
        assert_eq!(GriddedDomain::from_mask(2, 2, 0.5, [0.0, 0.0], bad, 0.25), Err(GridError::InteriorOnBox(0, 0)));
    }

    #[test]
    fn inner_of_constant_approaches_measure() {
        let d = Arc::new(make_rectangle(1.0, 1.0, 256).unwrap());
        let f = ScalarField::from_fn(d, |_, _| 1.0);
        let v = f.inner(&f).unwrap();
        assert!((v - 1.0).abs() < 1e-2, "{v}");
    }

    #[test]
    fn inner_rejects_other_domain() {
        let a = ScalarField::zeros(Arc::new(make_rectangle(1.0, 1.0, 16).unwrap()));
        let b = ScalarField::zeros(Arc::new(make_rectangle(1.0, 1.0, 32).unwrap()));
        assert_eq!(a.inner(&b), Err(GridError::DomainMismatch));
    }

    #[test]
    fn grad_norm_zero_and_homogeneous() {
        let d = Arc::new(make_rectangle(1.0, 1.0, 32).unwrap());
        assert_eq!(ScalarField::zeros(d.clone()).grad_norm_sq(), 0.0);
        let f = ScalarField::from_fn(d, |x, y| x * (1.0 - y) + 0.3);
        let mut g = f.clone();
        g.scale(3.0);
        assert!((g.grad_norm_sq() - 9.0 * f.grad_norm_sq()).abs() < 1e-10 * f.grad_norm_sq());
    }

    #[test]
    fn sine_mode_rayleigh_quotient_converges_at_second_order() {
        let quotient = |n: usize| {
            let d = Arc::new(make_rectangle(1.0, 1.0, n).unwrap());
            let f = ScalarField::from_fn(d, |x, y| (PI * x).sin() * (PI * y).sin());
            f.grad_norm_sq() / f.norm_sq()
        };
        let mu = 2.0 * PI * PI;
        let e1 = (quotient(32) - mu).abs();
        let e2 = (quotient(64) - mu).abs();
        let order = (e1 / e2).log2();
        assert!(e2 / mu < 1e-3);
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn divergence_of_constant_field_vanishes_inside() {
        let d = Arc::new(make_rectangle(1.0, 1.0, 16).unwrap());
        let n = d.n_interior();
        let u = VectorField2::new(d, vec![1.0; n], vec![-2.0; n]).unwrap();
        assert_eq!(u.max_divergence(), 0.0);
    }
}
