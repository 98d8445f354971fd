//! WebAssembly bindings for a single-page demo: eigenmode viewer, bound
//! curves and the attractor-dimension calculator.

use std::sync::Arc;

use serde::Serialize;
use stokes_spectrum::bounds::{laplace_weyl_coefficient, li_yau_sum_bound, stokes_sum_bound, weyl_coefficient};
use stokes_spectrum::grid::{make_disk, make_rectangle, GriddedDomain};
use stokes_spectrum::lt_attractor::{dim_bound, FluidParams, Lambda1Source};
use stokes_spectrum::operators::{solve_laplace, solve_stokes, stream_to_velocity, Problem};
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; keeps a solve under a few seconds.
pub const MAX_NX: u32 = 64;
pub const MAX_MODES: u32 = 40;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn parse_problem(name: &str) -> Result<Problem, JsError> {
    match name {
        "laplace" => Ok(Problem::Laplace),
        "stokes" => Ok(Problem::Stokes),
        other => Err(JsError::new(&format!("unknown problem {other:?}"))),
    }
}

fn build_domain(shape: &str, nx: u32) -> Result<GriddedDomain, JsError> {
    if !(8..=MAX_NX).contains(&nx) {
        return Err(JsError::new(&format!("nx must lie in 8..={MAX_NX}")));
    }
    let nx = nx as usize;
    match shape {
        "square" => make_rectangle(1.0, 1.0, nx),
        "rectangle" => make_rectangle(2.0, 1.0, nx),
        "disk" => make_disk(1.0, nx),
        other => return Err(JsError::new(&format!("unknown shape {other:?}"))),
    }
    .map_err(js_err)
}

/// Eigenpairs of one solve, sampled on the bounding-box nodes.
#[wasm_bindgen]
pub struct Modes {
    problem: Problem,
    nodes_x: usize,
    nodes_y: usize,
    measure: f64,
    eigenvalues: Vec<f64>,
    fields: Vec<Vec<f64>>,
    speeds: Vec<Vec<f64>>,
}

#[wasm_bindgen]
impl Modes {
    /// Solves `problem` ("laplace" | "stokes") on `shape` ("square" |
    /// "rectangle" | "disk") with `nx` cells across and `m` modes.
    #[wasm_bindgen(constructor)]
    pub fn new(problem: &str, shape: &str, nx: u32, m: u32) -> Result<Modes, JsError> {
        let problem = parse_problem(problem)?;
        if !(1..=MAX_MODES).contains(&m) {
            return Err(JsError::new(&format!("m must lie in 1..={MAX_MODES}")));
        }
        let domain = Arc::new(build_domain(shape, nx)?);
        let opts = problem.default_options();
        let m = m as usize;
        let (eigenvalues, functions) = match problem {
            Problem::Laplace => {
                let s = solve_laplace(domain.clone(), m, &opts).map_err(js_err)?;
                (s.eigenvalues, s.functions)
            }
            Problem::Stokes => {
                let s = solve_stokes(domain.clone(), m, &opts).map_err(js_err)?;
                (s.eigenvalues, s.stream_functions)
            }
        };
        let speeds = match problem {
            Problem::Laplace => Vec::new(),
            Problem::Stokes => functions
                .iter()
                .map(|psi| {
                    let u = stream_to_velocity(psi);
                    let (a, b) = (u.component_field(0).to_box(), u.component_field(1).to_box());
                    a.iter().zip(&b).map(|(x, y)| x.hypot(*y)).collect()
                })
                .collect(),
        };
        Ok(Modes {
            problem,
            nodes_x: domain.nx() + 1,
            nodes_y: domain.ny() + 1,
            measure: domain.measure(),
            eigenvalues,
            fields: functions.iter().map(|f| f.to_box()).collect(),
            speeds,
        })
    }

    #[wasm_bindgen(getter)]
    pub fn nodes_x(&self) -> usize {
        self.nodes_x
    }

    #[wasm_bindgen(getter)]
    pub fn nodes_y(&self) -> usize {
        self.nodes_y
    }

    #[wasm_bindgen(getter)]
    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.clone()
    }

    /// Mode `k` (0-based) row-major in y: the eigenfunction, or the stream
    /// function for Stokes.
    pub fn field(&self, k: usize) -> Result<Vec<f64>, JsError> {
        self.fields.get(k).cloned().ok_or_else(|| JsError::new("mode index out of range"))
    }

    /// Velocity magnitude of Stokes mode `k`; empty for the Laplacian.
    pub fn speed(&self, k: usize) -> Vec<f64> {
        self.speeds.get(k).cloned().unwrap_or_default()
    }

    /// Bound curves of this spectrum as JSON, see [`curves_for`].
    pub fn curves(&self) -> Result<String, JsError> {
        curves_for(self.problem, &self.eigenvalues, self.measure)
    }
}

#[derive(Serialize)]
struct Curves {
    /// `Σ_{k≤m} λ_k` for m = 1..len.
    partial_sums: Vec<f64>,
    /// The matching lower bound at each m.
    sum_bound: Vec<f64>,
    /// `λ_k / (coefficient · k)`.
    weyl_ratio: Vec<f64>,
    weyl_coefficient: f64,
}

fn curves_for(problem: Problem, eigenvalues: &[f64], measure: f64) -> Result<String, JsError> {
    let coeff = match problem {
        Problem::Laplace => laplace_weyl_coefficient(2, measure),
        Problem::Stokes => weyl_coefficient(2, measure),
    }
    .map_err(js_err)?;
    let mut sum = 0.0;
    let mut c =
        Curves { partial_sums: Vec::new(), sum_bound: Vec::new(), weyl_ratio: Vec::new(), weyl_coefficient: coeff };
    for (i, &lam) in eigenvalues.iter().enumerate() {
        let m = i + 1;
        sum += lam;
        let bound = match problem {
            Problem::Laplace => li_yau_sum_bound(2, measure, m),
            Problem::Stokes => stokes_sum_bound(2, measure, m),
        }
        .map_err(js_err)?;
        c.partial_sums.push(sum);
        c.sum_bound.push(bound);
        c.weyl_ratio.push(lam / (coeff * m as f64));
    }
    serde_json::to_string(&c).map_err(js_err)
}

/// Attractor-dimension bound for `(ν, ‖f‖, |Ω|, λ₁)` as JSON.
#[wasm_bindgen]
pub fn dimension_bound(nu: f64, f_norm: f64, measure: f64, lambda1: f64) -> Result<String, JsError> {
    let params = FluidParams { n: 2, measure, nu, f_norm, lambda1 };
    let d = dim_bound(&params, Lambda1Source::Supplied).map_err(js_err)?;
    serde_json::to_string(&d).map_err(js_err)
}
