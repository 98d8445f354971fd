//! Lieb–Thirring density inequality for orthonormal divergence-free
//! families and the attractor-dimension estimate for 2D Navier–Stokes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{gamma_half_integer, BoundCheck, Direction};
use crate::frame::{orthonormality, FrameError, ORTHONORMALITY_TOL};
use crate::grid::{GridError, ScalarField, VectorField2};

/// Relative slack on the density inequality.
pub const LT_SLACK: f64 = 0.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtError {
    #[error("empty family")]
    EmptyFamily,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("family is not orthonormal: max |G − I| = {0:.3e}")]
    NotOrthonormal(f64),
    #[error("family is not divergence-free: max |div u| = {0:.3e}")]
    NotDivergenceFree(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl From<FrameError> for LtError {
    fn from(e: FrameError) -> Self {
        match e {
            FrameError::Grid(g) => LtError::Grid(g),
            FrameError::EmptyFamily => LtError::EmptyFamily,
            other => LtError::InvalidParameter(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LTConstants {
    /// Ratio between the sharp and classical Lieb–Thirring constants, π/√3.
    pub r: f64,
    /// Classical constant `L^cl_{1,2}` = 1/(8π).
    pub l_cl_1_2: f64,
    /// Density-inequality constant `4·R·L^cl_{1,2}` = 1/(2√3).
    pub c_lt: f64,
    /// Spectral coefficient: `Σ_{k≤m} λ_k ≥ c_sp m²/|Ω|` in 2D.
    pub c_sp: f64,
}

/// `Γ(γ+1) / ((4π)^{n/2} Γ(γ+n/2+1))` for `γ` a nonnegative multiple of 1/2.
pub fn classical_lt_constant(gamma: f64, n: u32) -> Result<f64, LtError> {
    let twice = 2.0 * gamma;
    if !(gamma >= 0.0) || twice.fract() != 0.0 || n < 1 {
        return Err(LtError::InvalidParameter(format!("need γ ∈ ½ℕ and n ≥ 1, got γ = {gamma}, n = {n}")));
    }
    let g2 = twice as u32;
    Ok(gamma_half_integer(g2 + 2) / ((4.0 * PI).powf(n as f64 / 2.0) * gamma_half_integer(g2 + n + 2)))
}

pub fn lt_constants() -> LTConstants {
    let r = PI / 3f64.sqrt();
    let l_cl_1_2 = classical_lt_constant(1.0, 2).expect("valid arguments");
    LTConstants { r, l_cl_1_2, c_lt: 4.0 * r * l_cl_1_2, c_sp: 2.0 * PI }
}

/// `ρ(x) = Σ_k |v_k(x)|²`.
pub fn density(family: &[VectorField2]) -> Result<ScalarField, LtError> {
    let first = family.first().ok_or(LtError::EmptyFamily)?;
    let d = first.domain().clone();
    let mut rho = vec![0.0; d.n_interior()];
    for u in family {
        if !u.domain().same_grid(&d) {
            return Err(GridError::DomainMismatch.into());
        }
        for ((r, a), b) in rho.iter_mut().zip(u.u1()).zip(u.u2()) {
            *r += a * a + b * b;
        }
    }
    Ok(ScalarField::new(d, rho)?)
}

/// `‖ρ‖² ≤ c_LT Σ_k ‖∇v_k‖²` as an upper-bound check with 2% slack.
pub fn lt_check(family: &[VectorField2]) -> Result<BoundCheck, LtError> {
    let first = family.first().ok_or(LtError::EmptyFamily)?;
    let d = first.domain().clone();
    let (defect, _) = orthonormality(family)?;
    if defect > ORTHONORMALITY_TOL {
        return Err(LtError::NotOrthonormal(defect));
    }
    let (div, scale) = family.iter().fold((0.0f64, 0.0f64), |(dv, s), u| {
        let amp = u.u1().iter().chain(u.u2()).fold(0.0f64, |m, v| m.max(v.abs()));
        (dv.max(u.max_divergence()), s.max(amp))
    });
    if div > 1e-10 * scale / d.h() {
        return Err(LtError::NotDivergenceFree(div));
    }
    let c = lt_constants();
    let lhs = density(family)?.norm_sq();
    let rhs = c.c_lt * family.iter().map(VectorField2::grad_norm_sq).sum::<f64>();
    Ok(BoundCheck::new("lieb_thirring", family.len(), lhs, rhs, Direction::Upper, LT_SLACK * rhs, 2, d.measure()))
}

/// Where λ₁ in a [`FluidParams`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lambda1Source {
    Supplied,
    Extrapolated,
    Computed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    pub n: u32,
    pub measure: f64,
    pub nu: f64,
    pub f_norm: f64,
    pub lambda1: f64,
}

impl FluidParams {
    /// Errors on nonpositive values or `n ≠ 2`; returns whether λ₁ exceeds
    /// the 2D floor 2π/|Ω|.
    pub fn validate(&self) -> Result<bool, LtError> {
        if self.n != 2 {
            return Err(LtError::InvalidParameter(format!("dimension must be 2, got {}", self.n)));
        }
        for (name, v) in
            [("measure", self.measure), ("nu", self.nu), ("f_norm", self.f_norm), ("lambda1", self.lambda1)]
        {
            if !(v > 0.0) || !v.is_finite() {
                return Err(LtError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(self.lambda1 > 2.0 * PI / self.measure)
    }

    /// `G = ‖f‖ / (λ₁ ν²)`.
    pub fn grashof(&self) -> f64 {
        self.f_norm / (self.lambda1 * self.nu * self.nu)
    }

    /// `(a, b)` with `q(m) ≤ −a m² + b`.
    pub fn q_coeffs(&self) -> (f64, f64) {
        let c = lt_constants();
        let g = self.grashof();
        (self.nu * c.c_sp / (2.0 * self.measure), self.nu * self.lambda1 * c.c_lt * g * g / 4.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimBound {
    #[serde(rename = "G")]
    pub grashof: f64,
    pub m_star: f64,
    pub dim_bound: f64,
    pub dim_bound_coarse: f64,
    pub q_coeffs: (f64, f64),
    pub lambda1_source: Lambda1Source,
    /// False when λ₁ ≤ 2π/|Ω|; the coarse bound is then not implied.
    pub lambda1_above_floor: bool,
}

/// Fractal-dimension bound `√(c_LT/(2c_sp)) √(λ₁|Ω|) G` and its
/// λ₁-free relaxation `‖f‖|Ω| / (4π 3^{1/4} ν²)`.
pub fn dim_bound(params: &FluidParams, source: Lambda1Source) -> Result<DimBound, LtError> {
    let above = params.validate()?;
    if !above {
        log::warn!("lambda1 = {} does not exceed 2π/|Ω| = {}", params.lambda1, 2.0 * PI / params.measure);
    }
    let c = lt_constants();
    let g = params.grashof();
    let m_star = (c.c_lt / (2.0 * c.c_sp)).sqrt() * (params.lambda1 * params.measure).sqrt() * g;
    Ok(DimBound {
        grashof: g,
        m_star,
        dim_bound: m_star,
        dim_bound_coarse: params.f_norm * params.measure / (4.0 * PI * 3f64.powf(0.25) * params.nu * params.nu),
        q_coeffs: params.q_coeffs(),
        lambda1_source: source,
        lambda1_above_floor: above,
    })
}

/// The quadratic majorant `−a m² + b` of the Lyapunov sums.
pub fn q_upper(params: &FluidParams, m: f64) -> Result<f64, LtError> {
    params.validate()?;
    if !(m >= 0.0) {
        return Err(LtError::InvalidParameter(format!("m must be nonnegative, got {m}")));
    }
    let (a, b) = params.q_coeffs();
    Ok(-a * m * m + b)
}
