//! Closed-form eigenvalue bounds and asymptotics, and checks of computed
//! spectra against them.
//!
//! All bounds share the coefficient
//! `n/(n+2) · ((2π)ⁿ / (ωₙ · k · |Ω|))^{2/n}` with `k = 1` for the Dirichlet
//! Laplacian and `k = n − 1` for the Stokes operator.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack for checks against computed (discretized) spectra.
pub const COMPUTED_SLACK: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("spectrum decreases at index {0}")]
    UnorderedSpectrum(usize),
    #[error("csv output failed: {0}")]
    Csv(String),
}

fn invalid(msg: impl Into<String>) -> BoundsError {
    BoundsError::InvalidParameter(msg.into())
}

/// Γ(k/2) for a positive integer `k`, from Γ(1) = 1, Γ(1/2) = √π and
/// Γ(x + 1) = xΓ(x).
pub fn gamma_half_integer(k: u32) -> f64 {
    assert!(k >= 1, "Γ(k/2) needs k ≥ 1");
    let (mut x, mut g) = if k.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    let target = k as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the unit ball in ℝⁿ, `π^{n/2} / Γ(1 + n/2)`.
pub fn omega_n(n: u32) -> Result<f64, BoundsError> {
    if n < 1 {
        return Err(invalid("dimension n must be at least 1"));
    }
    Ok(PI.powf(n as f64 / 2.0) / gamma_half_integer(n + 2))
}

fn check_common(n: u32, measure: f64) -> Result<(), BoundsError> {
    if n < 1 {
        return Err(invalid("dimension n must be at least 1"));
    }
    if !(measure > 0.0) || !measure.is_finite() {
        return Err(invalid(format!("measure must be positive, got {measure}")));
    }
    Ok(())
}

/// `((2π)ⁿ / (ωₙ · k · |Ω|))^{2/n}`.
fn base_coefficient(n: u32, multiplicity: f64, measure: f64) -> Result<f64, BoundsError> {
    let nf = n as f64;
    Ok(((2.0 * PI).powf(nf) / (omega_n(n)? * multiplicity * measure)).powf(2.0 / nf))
}

fn sum_bound(n: u32, multiplicity: f64, measure: f64, m: usize) -> Result<f64, BoundsError> {
    if m < 1 {
        return Err(invalid("m must be at least 1"));
    }
    let nf = n as f64;
    Ok(nf / (nf + 2.0) * base_coefficient(n, multiplicity, measure)? * (m as f64).powf(1.0 + 2.0 / nf))
}

/// Lower bound for the sum of the first `m` Dirichlet Laplacian eigenvalues.
pub fn li_yau_sum_bound(n: u32, measure: f64, m: usize) -> Result<f64, BoundsError> {
    check_common(n, measure)?;
    sum_bound(n, 1.0, measure, m)
}

fn check_stokes(n: u32, measure: f64) -> Result<(), BoundsError> {
    check_common(n, measure)?;
    if n < 2 {
        return Err(invalid("Stokes bounds need n ≥ 2"));
    }
    Ok(())
}

/// Lower bound for the sum of the first `m` Stokes eigenvalues.
pub fn stokes_sum_bound(n: u32, measure: f64, m: usize) -> Result<f64, BoundsError> {
    check_stokes(n, measure)?;
    sum_bound(n, (n - 1) as f64, measure, m)
}

/// Lower bound for the individual Stokes eigenvalue `λ_k`.
pub fn stokes_each_bound(n: u32, measure: f64, k: usize) -> Result<f64, BoundsError> {
    check_stokes(n, measure)?;
    if k < 1 {
        return Err(invalid("k must be at least 1"));
    }
    let nf = n as f64;
    Ok(nf / (nf + 2.0) * base_coefficient(n, (n - 1) as f64, measure)? * (k as f64).powf(2.0 / nf))
}

/// Floor for μ₁ (and hence λ₁): the Laplacian sum bound at `m = 1`.
pub fn lambda1_floor(n: u32, measure: f64) -> Result<f64, BoundsError> {
    li_yau_sum_bound(n, measure, 1)
}

/// Leading coefficient `C` of the Stokes asymptotics `λ_k ∼ C k^{2/n}`.
pub fn weyl_coefficient(n: u32, measure: f64) -> Result<f64, BoundsError> {
    check_stokes(n, measure)?;
    base_coefficient(n, (n - 1) as f64, measure)
}

/// Leading coefficient of the Dirichlet Laplacian asymptotics.
pub fn laplace_weyl_coefficient(n: u32, measure: f64) -> Result<f64, BoundsError> {
    check_common(n, measure)?;
    base_coefficient(n, 1.0, measure)
}

/// Largest possible `∫f` over `0 ≤ f ≤ M1` with `∫|ξ|² f ≤ M2` in ℝⁿ,
/// attained by `M1` times the indicator of a centred ball.
pub fn bathtub_bound(n: u32, m1: f64, m2: f64) -> Result<f64, BoundsError> {
    if n < 1 {
        return Err(invalid("dimension n must be at least 1"));
    }
    if !(m1 > 0.0) || !(m2 > 0.0) {
        return Err(invalid(format!("M1 and M2 must be positive, got {m1}, {m2}")));
    }
    let nf = n as f64;
    Ok((m1 * omega_n(n)?).powf(2.0 / (2.0 + nf)) * (m2 * (2.0 + nf) / nf).powf(nf / (2.0 + nf)))
}

/// Whether the computed quantity should sit above or below the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Upper,
}

/// One inequality instance. `margin ≥ 0` means the inequality holds
/// (`lhs − rhs` for lower bounds, `rhs − lhs` for upper bounds);
/// `passed ⇔ margin ≥ −slack`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub m: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub slack: f64,
    pub passed: bool,
    pub direction: Direction,
    pub n: u32,
    pub measure: f64,
}

impl BoundCheck {
    /// `slack` is absolute.
    pub fn new(
        name: impl Into<String>,
        m: usize,
        lhs: f64,
        rhs: f64,
        direction: Direction,
        slack: f64,
        n: u32,
        measure: f64,
    ) -> Self {
        let margin = match direction {
            Direction::Lower => lhs - rhs,
            Direction::Upper => rhs - lhs,
        };
        Self { name: name.into(), m, lhs, rhs, margin, slack, passed: margin >= -slack, direction, n, measure }
    }
}

/// Which eigenvalue-sum bound to check against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumBound {
    LiYau,
    Stokes,
}

impl SumBound {
    pub fn eval(self, n: u32, measure: f64, m: usize) -> Result<f64, BoundsError> {
        match self {
            SumBound::LiYau => li_yau_sum_bound(n, measure, m),
            SumBound::Stokes => stokes_sum_bound(n, measure, m),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SumBound::LiYau => "li_yau_sum",
            SumBound::Stokes => "stokes_sum",
        }
    }
}

fn check_ordered(spectrum: &[f64]) -> Result<(), BoundsError> {
    match spectrum.windows(2).position(|w| w[1] < w[0]) {
        Some(i) => Err(BoundsError::UnorderedSpectrum(i + 1)),
        None => Ok(()),
    }
}

/// One check per `m = 1..=len`: `Σ_{k≤m} λ_k` against the chosen bound, with
/// slack `slack_rel · rhs`.
pub fn check_sum_bound(
    spectrum: &[f64],
    bound: SumBound,
    n: u32,
    measure: f64,
    slack_rel: f64,
) -> Result<Vec<BoundCheck>, BoundsError> {
    check_ordered(spectrum)?;
    let mut sum = 0.0;
    spectrum
        .iter()
        .enumerate()
        .map(|(i, &lam)| {
            sum += lam;
            let m = i + 1;
            let rhs = bound.eval(n, measure, m)?;
            Ok(BoundCheck::new(bound.name(), m, sum, rhs, Direction::Lower, slack_rel * rhs, n, measure))
        })
        .collect()
}

/// `λ_k ≥ stokes_each_bound(k)` for every index.
pub fn check_each_bound(
    spectrum: &[f64],
    n: u32,
    measure: f64,
    slack_rel: f64,
) -> Result<Vec<BoundCheck>, BoundsError> {
    check_ordered(spectrum)?;
    spectrum
        .iter()
        .enumerate()
        .map(|(i, &lam)| {
            let rhs = stokes_each_bound(n, measure, i + 1)?;
            Ok(BoundCheck::new("stokes_each", i + 1, lam, rhs, Direction::Lower, slack_rel * rhs, n, measure))
        })
        .collect()
}

/// `λ₁ > μ₁ ≥ floor`. The strict gap uses zero slack and requires a
/// positive margin larger than `gap_uncertainty`.
pub fn check_first_gap(
    lambda1: f64,
    mu1: f64,
    gap_uncertainty: f64,
    n: u32,
    measure: f64,
) -> Result<Vec<BoundCheck>, BoundsError> {
    let floor = lambda1_floor(n, measure)?;
    let mut gap = BoundCheck::new("stokes_gt_laplace", 1, lambda1, mu1, Direction::Lower, 0.0, n, measure);
    gap.passed = gap.margin > gap_uncertainty.max(0.0);
    gap.slack = -gap_uncertainty.max(0.0);
    Ok(vec![gap, BoundCheck::new("laplace_first_floor", 1, mu1, floor, Direction::Lower, 0.0, n, measure)])
}

/// `λ_k / (C k^{2/n})` with `C` the Stokes asymptotic coefficient.
pub fn weyl_ratios(spectrum: &[f64], n: u32, measure: f64) -> Result<Vec<f64>, BoundsError> {
    let c = weyl_coefficient(n, measure)?;
    Ok(spectrum.iter().enumerate().map(|(i, &lam)| lam / (c * ((i + 1) as f64).powf(2.0 / n as f64))).collect())
}

#[derive(Serialize)]
struct CsvRow<'a> {
    name: &'a str,
    m: usize,
    lhs: f64,
    rhs: f64,
    margin: f64,
    passed: bool,
}

/// CSV with columns `name,m,lhs,rhs,margin,passed`.
pub fn write_checks_csv<W: Write>(checks: &[BoundCheck], out: W) -> Result<(), BoundsError> {
    let mut w = csv::Writer::from_writer(out);
    for c in checks {
        w.serialize(CsvRow { name: &c.name, m: c.m, lhs: c.lhs, rhs: c.rhs, margin: c.margin, passed: c.passed })
            .map_err(|e| BoundsError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| BoundsError::Csv(e.to_string()))
}

/// First `count` Dirichlet eigenvalues of a `width × height` rectangle,
/// `π²((p/width)² + (q/height)²)` in ascending order.
pub fn analytic_rectangle_laplacian(width: f64, height: f64, count: usize) -> Vec<f64> {
    let reach = (count as f64).sqrt().ceil() as usize * 2 + 2;
    let mut v = Vec::with_capacity(reach * reach);
    for p in 1..=reach {
        for q in 1..=reach {
            let a = p as f64 / width;
            let b = q as f64 / height;
            v.push(PI * PI * (a * a + b * b));
        }
    }
    v.sort_by(f64::total_cmp);
    v.truncate(count);
    v
}
