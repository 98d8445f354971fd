use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use stokes_spectrum::bounds::{
    analytic_rectangle_laplacian, check_each_bound, check_sum_bound, laplace_weyl_coefficient, weyl_coefficient,
    write_checks_csv, BoundCheck, SumBound, COMPUTED_SLACK,
};
use stokes_spectrum::eig::EigenError;
use stokes_spectrum::extrapolate::{refine_first_eigenvalue, RefineError, Refinement};
use stokes_spectrum::frame::{default_xi_grid, frame_check, BoundKind, Family, FrameError};
use stokes_spectrum::grid::{ScalarField, VectorField2};
use stokes_spectrum::lt_attractor::{dim_bound, lt_check, FluidParams, Lambda1Source};
use stokes_spectrum::operators::{solve_laplace, solve_stokes, OperatorError, Problem};
use stokes_spectrum::report::{read_blob, write_scalar_blob, write_vector_blob, ReportConstants, SpectrumReport};

use crate::config::{expand_checks, CheckKind, RunConfig, SpectrumSource};
use crate::CliError;

const LT_SIZES: [usize; 4] = [1, 5, 10, 20];

fn operator_error(e: OperatorError) -> CliError {
    match e {
        OperatorError::Eigen(EigenError::NotConverged { applications, worst, .. }) => {
            CliError::NotConverged(format!("worst residual {worst:.3e} after {applications} operator applications"))
        }
        other => CliError::Usage(other.to_string()),
    }
}

fn refine_error(e: RefineError) -> CliError {
    match e {
        RefineError::Operator(o) => operator_error(o),
        other => CliError::Usage(other.to_string()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    fs::write(path, text)?;
    Ok(())
}

fn write_csv(path: &Path, checks: &[BoundCheck]) -> Result<(), CliError> {
    write_checks_csv(checks, BufWriter::new(File::create(path)?)).map_err(|e| CliError::Failed(e.to_string()))
}

/// A solved spectrum with its eigenfunctions.
struct Solved {
    report: SpectrumReport,
    scalars: Vec<ScalarField>,
    velocities: Vec<VectorField2>,
}

fn solve_config(cfg: &RunConfig) -> Result<Solved, CliError> {
    let spec = cfg.domain()?;
    let domain = Arc::new(spec.build().map_err(|e| CliError::Usage(e.to_string()))?);
    let opts = cfg.eigen_options();
    let m = cfg.solver.m;
    let (eigenvalues, residuals, scalars, velocities) = match cfg.problem {
        Problem::Laplace => {
            let s = solve_laplace(domain.clone(), m, &opts).map_err(operator_error)?;
            (s.eigenvalues, s.residuals, s.functions, Vec::new())
        }
        Problem::Stokes => {
            let s = solve_stokes(domain.clone(), m, &opts).map_err(operator_error)?;
            (s.eigenvalues, s.residuals, s.stream_functions, s.velocities)
        }
    };
    let refinement: Option<Refinement> = if cfg.solver.grids.is_empty() {
        None
    } else {
        Some(refine_first_eigenvalue(cfg.problem, spec, &cfg.solver.grids, &opts).map_err(refine_error)?)
    };
    let report = SpectrumReport {
        problem: cfg.problem,
        domain: spec.clone(),
        h: domain.h(),
        measure: domain.measure(),
        m,
        eigenvalues,
        residuals,
        solver_seed: opts.seed,
        tol: opts.tol,
        refinement,
        constants: ReportConstants::current(),
    };
    Ok(Solved { report, scalars, velocities })
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Result<bool, CliError> {
    let s = solve_config(cfg)?;
    write_json(&out.join("spectrum.json"), &s.report)?;
    match cfg.problem {
        Problem::Laplace => {
            write_scalar_blob(BufWriter::new(File::create(out.join("eigenfunctions.bin"))?), &s.scalars)
                .map_err(|e| CliError::Failed(e.to_string()))?;
        }
        Problem::Stokes => {
            write_scalar_blob(BufWriter::new(File::create(out.join("stream_functions.bin"))?), &s.scalars)
                .map_err(|e| CliError::Failed(e.to_string()))?;
            write_vector_blob(BufWriter::new(File::create(out.join("velocities.bin"))?), &s.velocities)
                .map_err(|e| CliError::Failed(e.to_string()))?;
        }
    }
    println!("{:?} eigenvalues (h = {}, |Ω| = {}):", s.report.problem, s.report.h, s.report.measure);
    for (k, (v, r)) in s.report.eigenvalues.iter().zip(&s.report.residuals).enumerate() {
        println!("  {:>3}  {v:.10}  residual {r:.2e}", k + 1);
    }
    if let Some(r) = &s.report.refinement {
        println!(
            "first eigenvalue extrapolated over nx = {:?}: {:.8} (error estimate {:.2e})",
            r.grids, r.extrapolation.value, r.extrapolation.error_estimate
        );
    }
    Ok(true)
}

/// Eigenvalues for checks and reports, from the config's spectrum source or
/// a fresh solve.
struct Spectrum {
    problem: Problem,
    values: Vec<f64>,
    measure: f64,
    slack: f64,
    lambda1: Option<(f64, Lambda1Source)>,
}

struct Context<'a> {
    cfg: &'a RunConfig,
    solved: Option<Solved>,
}

impl Context<'_> {
    fn solved(&mut self) -> Result<&Solved, CliError> {
        if self.solved.is_none() {
            self.solved = Some(solve_config(self.cfg)?);
        }
        Ok(self.solved.as_ref().expect("just set"))
    }

    fn spectrum(&mut self) -> Result<Spectrum, CliError> {
        match &self.cfg.spectrum {
            Some(SpectrumSource::AnalyticRectangle { width, height, count }) => {
                if self.cfg.problem != Problem::Laplace {
                    return Err(CliError::Usage("analytic spectra exist only for the Laplacian".into()));
                }
                if !(*width > 0.0 && *height > 0.0) {
                    return Err(CliError::Usage("analytic rectangle needs positive sides".into()));
                }
                let values = analytic_rectangle_laplacian(*width, *height, *count);
                Ok(Spectrum { problem: Problem::Laplace, lambda1: None, values, measure: width * height, slack: 0.0 })
            }
            Some(SpectrumSource::Report(path)) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read spectrum {}: {e}", path.display())))?;
                let r: SpectrumReport = serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("invalid spectrum {}: {e}", path.display())))?;
                Ok(spectrum_of(&r))
            }
            None => Ok(spectrum_of(&self.solved()?.report)),
        }
    }
}

fn spectrum_of(r: &SpectrumReport) -> Spectrum {
    let lambda1 = match (&r.refinement, r.problem) {
        (Some(refine), Problem::Stokes) => Some((refine.extrapolation.value, Lambda1Source::Extrapolated)),
        (None, Problem::Stokes) => r.eigenvalues.first().map(|&v| (v, Lambda1Source::Computed)),
        _ => None,
    };
    Spectrum { problem: r.problem, values: r.eigenvalues.clone(), measure: r.measure, slack: COMPUTED_SLACK, lambda1 }
}

fn sum_bound_for(problem: Problem) -> SumBound {
    match problem {
        Problem::Laplace => SumBound::LiYau,
        Problem::Stokes => SumBound::Stokes,
    }
}

fn bound_error(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn check_bounds(ctx: &mut Context, out: &Path) -> Result<Value, CliError> {
    let s = ctx.spectrum()?;
    let mut rows = check_sum_bound(&s.values, sum_bound_for(s.problem), 2, s.measure, s.slack).map_err(bound_error)?;
    if s.problem == Problem::Stokes {
        rows.extend(check_each_bound(&s.values, 2, s.measure, s.slack).map_err(bound_error)?);
    }
    write_csv(&out.join("bounds.csv"), &rows)?;
    let passed = rows.iter().all(|c| c.passed);
    let failing = rows.iter().filter(|c| !c.passed).count();
    println!("bounds: {} rows, {failing} failing (slack {} of the bound)", rows.len(), s.slack);
    Ok(json!({ "name": "bounds", "passed": passed, "rows": rows }))
}

/// The family to check: from the configured blob, or solved.
enum Members {
    Scalar(Vec<ScalarField>),
    Vector(Vec<VectorField2>),
}

fn family(ctx: &mut Context) -> Result<Members, CliError> {
    let cfg = ctx.cfg;
    if let Some(path) = &cfg.family {
        let spec = cfg.domain()?;
        let domain = Arc::new(spec.build().map_err(|e| CliError::Usage(e.to_string()))?);
        let file =
            File::open(path).map_err(|e| CliError::Usage(format!("cannot read family {}: {e}", path.display())))?;
        let blob = read_blob(BufReader::new(file)).map_err(|e| CliError::Usage(e.to_string()))?;
        return match cfg.problem {
            Problem::Laplace => blob.scalar_family(&domain).map(Members::Scalar),
            Problem::Stokes => blob.vector_family(&domain).map(Members::Vector),
        }
        .map_err(|e| CliError::Usage(e.to_string()));
    }
    let s = ctx.solved()?;
    Ok(match cfg.problem {
        Problem::Laplace => Members::Scalar(s.scalars.clone()),
        Problem::Stokes => Members::Vector(s.velocities.clone()),
    })
}

fn check_frame(ctx: &mut Context, out: &Path) -> Result<Value, CliError> {
    let members = family(ctx)?;
    let (fam, kinds) = match &members {
        Members::Scalar(f) => (Family::Scalar(f), vec![BoundKind::Scalar]),
        Members::Vector(f) => (Family::Vector(f), vec![BoundKind::DivFree, BoundKind::Vector]),
    };
    let domain = match &members {
        Members::Scalar(f) => f.first().map(|x| x.domain().clone()),
        Members::Vector(f) => f.first().map(|x| x.domain().clone()),
    }
    .ok_or_else(|| CliError::Usage("family is empty".into()))?;
    let xi = default_xi_grid(&domain);
    let mut entries = Vec::new();
    let mut passed = true;
    for kind in kinds {
        match frame_check(fam, &xi, kind) {
            Ok(r) => {
                passed &= r.passed;
                println!(
                    "frame {kind:?}: sup {:.6} vs bound {} (slack {}): {}",
                    r.sup_value,
                    r.bound,
                    r.slack,
                    if r.passed { "pass" } else { "FAIL" }
                );
                if let Some(res) = r.max_div_residual {
                    // quadrature ξ·û carries an O((|ξ|h)²) error on coarse grids
                    let note = if r.incompressible() { "" } else { " (above tolerance; refine the grid)" };
                    println!("frame {kind:?}: incompressibility residual {res:.3e}{note}");
                }
                entries.push(
                    json!({ "kind": kind, "passed": r.passed, "incompressible": r.incompressible(), "report": r }),
                );
            }
            Err(e @ FrameError::NotOrthonormal { .. }) => {
                passed = false;
                println!("frame {kind:?}: FAIL, precondition: {e}");
                entries.push(json!({ "kind": kind, "passed": false, "error": e.to_string() }));
            }
            Err(e) => return Err(CliError::Usage(e.to_string())),
        }
    }
    write_json(&out.join("frame.json"), &entries)?;
    Ok(json!({ "name": "frame", "passed": passed, "rows": entries }))
}

fn check_lt(ctx: &mut Context, out: &Path) -> Result<Value, CliError> {
    let Members::Vector(f) = family(ctx)? else {
        return Err(CliError::Usage("the Lieb–Thirring check needs a Stokes family".into()));
    };
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for m in LT_SIZES.into_iter().filter(|&m| m <= f.len()) {
        match lt_check(&f[..m]) {
            Ok(c) => rows.push(c),
            Err(e) => errors.push(format!("m = {m}: {e}")),
        }
    }
    write_csv(&out.join("lt.csv"), &rows)?;
    for c in &rows {
        println!("lieb_thirring m = {:>2}: ‖ρ‖² {:.6} ≤ {:.6}: {}", c.m, c.lhs, c.rhs, c.passed);
    }
    for e in &errors {
        println!("lieb_thirring FAIL, precondition: {e}");
    }
    let passed = errors.is_empty() && !rows.is_empty() && rows.iter().all(|c| c.passed);
    Ok(json!({ "name": "lt", "passed": passed, "rows": rows, "errors": errors }))
}

fn check_dim(ctx: &mut Context, out: &Path) -> Result<Value, CliError> {
    let cfg = ctx.cfg;
    let fluid =
        cfg.fluid.clone().ok_or_else(|| CliError::Usage("the dimension check needs \"fluid\" parameters".into()))?;
    let (lambda1, source, spectrum_measure) = match fluid.lambda1 {
        Some(l) => (l, Lambda1Source::Supplied, None),
        None => {
            let s = ctx.spectrum()?;
            let (l, src) =
                s.lambda1.ok_or_else(|| CliError::Usage("no Stokes λ₁ available for the dimension check".into()))?;
            (l, src, Some(s.measure))
        }
    };
    let measure = match fluid.measure.or(spectrum_measure) {
        Some(m) => m,
        None => cfg.domain()?.build().map_err(|e| CliError::Usage(e.to_string()))?.measure(),
    };
    let params = FluidParams { n: 2, measure, nu: fluid.nu, f_norm: fluid.f_norm, lambda1 };
    let d = dim_bound(&params, source).map_err(|e| CliError::Usage(e.to_string()))?;
    write_json(&out.join("dim.json"), &d)?;
    let passed = d.lambda1_above_floor && d.dim_bound < d.dim_bound_coarse;
    println!(
        "dim_bound = {:.6} (coarse {:.6}, G = {:.6}, m* = {:.6}, λ₁ {:?} = {lambda1})",
        d.dim_bound, d.dim_bound_coarse, d.grashof, d.m_star, d.lambda1_source
    );
    if !d.lambda1_above_floor {
        println!("dim: FLAGGED, λ₁ does not exceed 2π/|Ω|");
    }
    Ok(json!({ "name": "dim", "passed": passed, "result": d }))
}

pub fn check(cfg: &RunConfig, out: &Path) -> Result<bool, CliError> {
    let checks = expand_checks(&cfg.checks);
    if checks.is_empty() {
        return Err(CliError::Usage("no checks selected (use \"checks\" or --checks)".into()));
    }
    let mut ctx = Context { cfg, solved: None };
    let mut results = Vec::new();
    for c in checks {
        results.push(match c {
            CheckKind::Bounds => check_bounds(&mut ctx, out)?,
            CheckKind::Frame => check_frame(&mut ctx, out)?,
            CheckKind::Lt => check_lt(&mut ctx, out)?,
            CheckKind::Dim => check_dim(&mut ctx, out)?,
            CheckKind::All => unreachable!("expanded"),
        });
    }
    let passed = results.iter().all(|r| r["passed"] == json!(true));
    write_json(
        &out.join("checks.json"),
        &json!({ "passed": passed, "checks": results, "constants": ReportConstants::current() }),
    )?;
    println!("{}", if passed { "all checks pass" } else { "some checks FAIL" });
    Ok(passed)
}

#[derive(Serialize)]
struct WeylRow {
    k: usize,
    lambda_k: f64,
    weyl_ratio: f64,
    liyau_margin: f64,
}

pub fn report(cfg: &RunConfig, out: &Path) -> Result<bool, CliError> {
    let mut ctx = Context { cfg, solved: None };
    let s = ctx.spectrum()?;
    let coeff = match s.problem {
        Problem::Laplace => laplace_weyl_coefficient(2, s.measure),
        Problem::Stokes => weyl_coefficient(2, s.measure),
    }
    .map_err(bound_error)?;
    let sums = check_sum_bound(&s.values, sum_bound_for(s.problem), 2, s.measure, s.slack).map_err(bound_error)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out.join("weyl.csv"))?));
    for (i, (&lam, c)) in s.values.iter().zip(&sums).enumerate() {
        let k = i + 1;
        w.serialize(WeylRow { k, lambda_k: lam, weyl_ratio: lam / (coeff * k as f64), liyau_margin: c.margin })
            .map_err(|e| CliError::Failed(e.to_string()))?;
    }
    w.flush()?;
    println!("weyl.csv: {} rows (coefficient {coeff:.6})", s.values.len());
    Ok(true)
}
