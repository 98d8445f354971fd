//! Richardson extrapolation over grid sequences halving `h`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eig::EigenOptions;
use crate::grid::{DomainSpec, GridError};
use crate::operators::{OperatorError, Problem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtrapolationError {
    #[error("need at least two values, got {0}")]
    TooFewValues(usize),
    #[error("order must be positive, got {0}")]
    BadOrder(f64),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

/// Result of extrapolating a sequence computed at `h, h/2, h/4, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    /// Extrapolant from the two finest values.
    pub value: f64,
    /// Distance to the previous extrapolant (three or more values), else the
    /// correction applied to the finest value.
    pub error_estimate: f64,
    /// `log₂((f₁−f₂)/(f₂−f₃))` over the three finest values, if available
    /// and well defined.
    pub observed_order: Option<f64>,
    /// Finest computed value.
    pub finest: f64,
}

/// `values` ordered coarse to fine, each grid spacing half the previous.
pub fn richardson(values: &[f64], order: f64) -> Result<Extrapolation, ExtrapolationError> {
    if values.len() < 2 {
        return Err(ExtrapolationError::TooFewValues(values.len()));
    }
    if !(order > 0.0) {
        return Err(ExtrapolationError::BadOrder(order));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(ExtrapolationError::NonFinite(i));
    }
    let r = 2f64.powf(order);
    let step = |coarse: f64, fine: f64| fine + (fine - coarse) / (r - 1.0);
    let k = values.len();
    let finest = values[k - 1];
    let value = step(values[k - 2], finest);
    let (error_estimate, observed_order) = if k >= 3 {
        let prev = step(values[k - 3], values[k - 2]);
        let d1 = values[k - 3] - values[k - 2];
        let d2 = values[k - 2] - values[k - 1];
        let ratio = d1 / d2;
        let observed = (ratio > 0.0 && ratio.is_finite()).then(|| ratio.log2());
        ((value - prev).abs(), observed)
    } else {
        ((value - finest).abs(), None)
    };
    Ok(Extrapolation { value, error_estimate, observed_order, finest })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("grid sizes must double at each step, got {0:?}")]
    Grids(Vec<usize>),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Extrapolation(#[from] ExtrapolationError),
}

/// First eigenvalue over a sequence of grids and its extrapolant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub problem: Problem,
    pub grids: Vec<usize>,
    pub h: Vec<f64>,
    pub values: Vec<f64>,
    pub extrapolation: Extrapolation,
}

/// Solves for the first eigenvalue of `problem` at each `nx` in `grids`
/// (each twice the previous) and extrapolates with order 2.
pub fn refine_first_eigenvalue(
    problem: Problem,
    spec: &DomainSpec,
    grids: &[usize],
    opts: &EigenOptions,
) -> Result<Refinement, RefineError> {
    if grids.len() < 2 || grids.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(RefineError::Grids(grids.to_vec()));
    }
    let mut h = Vec::with_capacity(grids.len());
    let mut values = Vec::with_capacity(grids.len());
    for &nx in grids {
        let domain = Arc::new(spec.with_nx(nx).build()?);
        h.push(domain.h());
        let (vals, _) = problem.eigenvalues(domain, 1, opts)?;
        values.push(vals[0]);
    }
    let extrapolation = richardson(&values, 2.0)?;
    Ok(Refinement { problem, grids: grids.to_vec(), h, values, extrapolation })
}
