use std::f64::consts::PI;
use std::sync::Arc;

use hadamard_dirichlet::barrier::BarrierSpec;
use hadamard_dirichlet::exhaustion::{choose_r0, run_schedule};
use hadamard_dirichlet::expr::Expr;
use hadamard_dirichlet::manifold::WarpingFunction;
use hadamard_dirichlet::operator::AProfile;
use hadamard_dirichlet::sc_geometry::{certify_convexity, integrate_sr_ode};
use hadamard_dirichlet::solver::{
    exhaustion_solve, harmonic_oracle, solve_annulus, solve_ball, BoundaryData, DirichletProblem,
    DiscreteSolution, GridPolicy, NewtonOptions, PolarGrid,
};
use hadamard_dirichlet::Result;
use serde_json::{json, Value as Json};

use crate::config::{Command, Params, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

/// A CSV artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn floats<const N: usize>(file: &str, header: [&'static str; N], rows: impl IntoIterator<Item = [f64; N]>) -> Self {
        Self {
            file: file.to_string(),
            header: header.to_vec(),
            rows: rows.into_iter().map(|r| r.iter().map(|&x| Cell::Float(x)).collect()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub result: Json,
    pub tables: Vec<Table>,
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    let p = &config.params;
    match config.command {
        Command::CheckProfile => check_profile(p),
        Command::CheckManifold => check_manifold(p),
        Command::Barrier => barrier(p),
        Command::SrCurve => sr_curve(p),
        Command::CertifyConvexity => convexity(p),
        Command::Borbely => borbely(p),
        Command::Solve => solve(p),
        Command::Cascade => cascade(p),
        Command::Report => report(p),
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

fn profile(p: &Params) -> Result<AProfile> {
    match p.opt_f("p") {
        Some(x) => AProfile::p_laplacian(x),
        None => Ok(AProfile::minimal()),
    }
}

fn warping(p: &Params) -> Result<WarpingFunction> {
    let (k, r_max) = (p.f("k"), p.f("r_max"));
    match p.text("warping") {
        "hyperbolic" => WarpingFunction::hyperbolic(k, r_max),
        "sinh_scaled" => WarpingFunction::sinh_scaled(p.f("q"), k, r_max),
        _ => WarpingFunction::from_expressions(p.text("f"), p.text("f_prime"), p.text("f_double_prime"), k, r_max),
    }
}

fn angle_fn(source: &str) -> Result<Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
    let e = Expr::parse_in(source, "t")?;
    Ok(Arc::new(move |t| e.eval(t)))
}

fn newton_options(p: &Params) -> NewtonOptions {
    NewtonOptions {
        max_newton: p.count("max_newton"),
        tol_newton: p.f("tol_newton"),
        damping_floor: p.f("damping_floor"),
        regularization: p.opt_f("regularization"),
    }
}

fn check_profile(p: &Params) -> Result<Outcome> {
    let a = profile(p)?;
    let grid = logspace(p.f("s_min"), p.f("s_max"), p.count("n_s"));
    let report = a.check_conditions(&grid)?;
    let table = Table::floats(
        "profile.csv",
        ["s", "a", "a_prime", "energy_density"],
        grid.iter().map(|&s| [s, a.a(s), a.a_prime(s), a.energy_density(s)]),
    );
    Ok(Outcome {
        pass: report.all_pass(),
        result: json!({
            "profile": a.kind(),
            "sup_a": a.sup_a(),
            "growth": { "p": a.growth_p, "c": a.growth_c, "q": a.growth_q, "delta": a.delta },
            "conditions": report,
        }),
        tables: vec![table],
    })
}

fn check_manifold(p: &Params) -> Result<Outcome> {
    let wf = warping(p)?;
    let grid = linspace(p.f("r_min"), p.f("r_check"), p.count("n_r"));
    let report = wf.comparison_check(&grid);
    let mut rows = Vec::with_capacity(grid.len());
    for &r in &grid {
        rows.push([r, wf.f(r), wf.f_prime(r), wf.f_double_prime(r), wf.radial_curvature(r)?]);
    }
    let divergence = wf.divergence_test(p.count("n"), p.f("divergence_p"), 1.0, p.f("divergence_cut"))?;
    Ok(Outcome {
        pass: report.passes(1e-12),
        result: json!({
            "warping": wf.kind(),
            "k": wf.k,
            "comparison": report,
            "divergence": divergence,
        }),
        tables: vec![Table::floats("manifold.csv", ["r", "f", "f_prime", "f_double_prime", "curvature"], rows)],
    })
}

fn barrier_spec(p: &Params, k: f64, calibrate: bool) -> Result<BarrierSpec> {
    let spec = BarrierSpec::new(profile(p)?, k, p.count("n"), p.f("height_c"))?;
    if calibrate {
        spec.calibrated()
    } else {
        Ok(spec)
    }
}

fn barrier(p: &Params) -> Result<Outcome> {
    let spec = barrier_spec(p, p.f("k"), p.flag("calibrate"))?;
    let grid = linspace(0.0, p.f("s_max"), p.count("n_s"));
    let rows = spec.table(&grid)?;
    let positive: Vec<f64> = grid.iter().copied().filter(|&s| s > 0.0).collect();
    let residual = spec.residual_report(&positive, None)?;
    Ok(Outcome {
        pass: residual.pass,
        result: json!({
            "barrier": spec.summary()?,
            "residual": {
                "max_residual": residual.max_residual,
                "worst_at": residual.worst_at,
                "fd_max_gap": residual.fd_max_gap,
                "pass": residual.pass,
                "fd_consistent": residual.fd_consistent,
            },
        }),
        tables: vec![Table::floats(
            "barrier.csv",
            ["s", "g", "Sigma", "residual"],
            rows.iter().map(|r| [r.s, r.g, r.sigma, r.residual]),
        )],
    })
}

fn sr_curve(p: &Params) -> Result<Outcome> {
    let (r0, k, tol) = (p.f("R"), p.f("k"), p.f("tol"));
    let curve = integrate_sr_ode(r0, k, (p.f("t_min"), p.f("t_max")), tol, p.count("n_samples"))?;
    Ok(Outcome {
        pass: curve.max_residual <= 10.0 * tol,
        result: json!({
            "R": r0,
            "k": k,
            "t_span": curve.t_span,
            "tol": tol,
            "samples": curve.samples.len(),
            "max_first_integral_residual": curve.max_residual,
            "final_theta": curve.samples.last().map(|s| s.theta),
            "limit_angle": curve.limit_angle(),
        }),
        tables: vec![Table::floats("sr_curve.csv", ["t", "r", "theta", "residual"], curve.rows())],
    })
}

fn convexity_certificate(p: &Params, t_grid: &[f64], n_angles: usize, tol: f64) -> Result<Json> {
    let wf = warping(p)?;
    let angles: Vec<f64> = (0..n_angles).map(|i| PI * (i as f64 + 0.5) / n_angles as f64).collect();
    let cert = certify_convexity(&wf, p.f("R"), t_grid, &angles, tol)?;
    let mut out = serde_json::to_value(&cert).expect("certificate serializes");
    out["verdict"] = json!(if cert.pass { "pass" } else { "fail" });
    Ok(out)
}

fn convexity(p: &Params) -> Result<Outcome> {
    let t = linspace(p.f("t_min"), p.f("t_max"), p.count("n_t"));
    let cert = convexity_certificate(p, &t, p.count("n_angles"), p.f("tol"))?;
    Ok(Outcome { pass: cert["pass"] == json!(true), result: cert, tables: vec![] })
}

fn borbely(p: &Params) -> Result<Outcome> {
    let (k, eps, alpha) = (p.f("k"), p.f("eps"), p.f("alpha"));
    let r0 = match p.opt_f("r0") {
        Some(r0) => r0,
        None => choose_r0(k, eps, alpha)?,
    };
    let r_stop = p.opt_f("r_stop").unwrap_or(r0 + 10.0 / k);
    let s = run_schedule(k, eps, alpha, r0, p.count("max_steps") as u64, r_stop)?;
    let pass = s.reached_stop && s.converged_r0 && s.angle_budget <= alpha;
    let table = Table {
        file: "schedule.csv".into(),
        header: vec!["n", "r_n", "eps_n", "theta_bound_n", "partial_budget"],
        rows: s
            .steps
            .iter()
            .map(|st| {
                vec![
                    Cell::Int(st.n),
                    Cell::Float(st.r),
                    Cell::Float(st.epsilon),
                    Cell::Float(st.theta_bound),
                    Cell::Float(st.partial_budget),
                ]
            })
            .collect(),
    };
    let mut budget = s.steps.last().map_or(0.0, |st| st.partial_budget);
    let blocks = Table::floats(
        "blocks.csv",
        ["r_lo", "r_hi", "log10_steps", "theta_bound", "partial_budget"],
        s.blocks.iter().map(|b| {
            budget += b.theta_bound;
            [b.lo, b.hi, b.log10_steps, b.theta_bound, budget]
        }),
    );
    Ok(Outcome {
        pass,
        result: json!({
            "k": k,
            "eps": eps,
            "alpha": alpha,
            "r0": r0,
            "r0_chosen": p.opt_f("r0").is_none(),
            "r_stop": r_stop,
            "L": s.l,
            "m": s.m,
            "beta": s.beta,
            "c_ang": s.c_ang,
            "r_tilde": s.r_tilde,
            "explicit_steps": s.steps.len(),
            "blocks": s.blocks.len(),
            "log10_step_count": s.log10_step_count,
            "final_r": s.final_r,
            "reached_stop": s.reached_stop,
            "max_steps_hit": s.max_steps_hit,
            "angle_budget": s.angle_budget,
            "bucket_budget": s.bucket_budget,
            "converged_r0": s.converged_r0,
        }),
        tables: vec![table, blocks],
    })
}

fn solution_summary(sol: &DiscreteSolution) -> Json {
    let g = &sol.grid;
    let slack = |e: f64| 64.0 * f64::EPSILON * e.abs().max(1.0);
    let monotone = sol.energy_history.windows(2).all(|w| w[1] <= w[0] + slack(w[0]));
    json!({
        "grid": { "kind": g.kind, "r_in": g.r_in, "r_out": g.r_out, "n_r": g.n_r, "n_t": g.n_t },
        "energy": sol.energy,
        "residual_norm": sol.residual_norm,
        "newton_iters": sol.newton_iters,
        "energy_history": sol.energy_history,
        "energy_monotone": monotone,
        "max_principle": sol.max_principle(),
    })
}

fn solution_table(sol: &DiscreteSolution) -> Table {
    Table::floats("solution.csv", ["r", "t", "u"], sol.rows())
}

fn solve(p: &Params) -> Result<Outcome> {
    let wf = warping(p)?;
    let a = profile(p)?;
    let opts = newton_options(p);
    let (n_r, n_t) = (p.count("n_r"), p.count("n_t"));
    let sol = if p.text("domain") == "ball" {
        let grid = PolarGrid::ball(&wf, p.f("radius"), n_r, n_t)?;
        let data = BoundaryData::Asymptotic(angle_fn(p.text("data"))?);
        solve_ball(&DirichletProblem::new(wf.clone(), a, data).with_options(opts), &grid)?
    } else {
        let grid = PolarGrid::annulus(&wf, p.f("r_in"), p.f("r_out"), n_r, n_t)?;
        let (inner, outer) = (angle_fn(p.text("inner"))?, angle_fn(p.text("outer"))?);
        let data = BoundaryData::Annulus {
            inner: grid.angles().iter().map(|&t| inner(t)).collect(),
            outer: grid.angles().iter().map(|&t| outer(t)).collect(),
        };
        solve_annulus(&DirichletProblem::new(wf.clone(), a, data).with_options(opts), &grid)?
    };
    let mut result = solution_summary(&sol);
    let mp = sol.max_principle().holds;
    result["oracle_error"] = if p.flag("oracle") {
        let phi = angle_fn(p.text("data"))?;
        let g = &sol.grid;
        let mut err: f64 = 0.0;
        for i in 0..=g.n_r {
            for j in 0..g.n_t {
                let exact = harmonic_oracle(wf.k, g.r_out, &*phi, g.radius(i), g.angle(j));
                err = err.max((sol.value(i, j) - exact).abs());
            }
        }
        json!(err)
    } else {
        Json::Null
    };
    Ok(Outcome { pass: mp, result, tables: vec![solution_table(&sol)] })
}

fn cascade(p: &Params) -> Result<Outcome> {
    let wf = warping(p)?;
    let problem = DirichletProblem::new(wf, profile(p)?, BoundaryData::Asymptotic(angle_fn(p.text("data"))?))
        .with_options(newton_options(p));
    let policy = GridPolicy { dr: p.f("dr"), n_t: p.count("n_t") };
    let (sol, report) = exhaustion_solve(&problem, p.list("radii"), policy, p.f("tol_cascade"))?;
    let pass = report.converged && !report.non_monotone && report.stages.iter().all(|s| s.max_principle);
    Ok(Outcome {
        pass,
        result: json!({ "cascade": report, "final": solution_summary(&sol) }),
        tables: vec![solution_table(&sol)],
    })
}

// Quick checks with their default grids, one verdict each.
fn report(p: &Params) -> Result<Outcome> {
    let a = profile(p)?;
    let conditions = a.check_conditions(&logspace(1e-6, 1e6, 121))?;
    let wf = warping(p)?;
    let comparison = wf.comparison_check(&linspace(0.02, 20.0f64.min(wf.r_max), 1000));
    let spec = barrier_spec(p, wf.k, true)?;
    let residual = spec.residual_report(&linspace(0.05, 10.0, 200), None)?;
    let cert = convexity_certificate(p, &linspace(-10.0, 10.0, 200), 50, 1e-8)?;
    let checks = json!({
        "profile_conditions": { "pass": conditions.all_pass(), "report": conditions },
        "curvature_comparison": { "pass": comparison.passes(1e-12), "report": comparison },
        "barrier_residual": {
            "pass": residual.pass,
            "max_residual": residual.max_residual,
            "worst_at": residual.worst_at,
            "barrier": spec.summary()?,
        },
        "convexity": { "pass": cert["pass"], "certificate": cert },
    });
    let pass = checks.as_object().expect("object").values().all(|c| c["pass"] == json!(true));
    Ok(Outcome { pass, result: json!({ "checks": checks }), tables: vec![] })
}
