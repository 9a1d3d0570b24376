use std::sync::Arc;

use hadamard_dirichlet::manifold::WarpingFunction;
use hadamard_dirichlet::operator::AProfile;
use hadamard_dirichlet::solver::{
    comparison_check_discrete, exhaustion_solve, solve_annulus, solve_ball, solve_radial, BoundaryData,
    DirichletProblem, GridPolicy, PolarGrid,
};
use proptest::prelude::*;

fn hyp() -> WarpingFunction {
    WarpingFunction::hyperbolic(1.0, 50.0).unwrap()
}

fn profiles() -> impl Strategy<Value = AProfile> {
    prop_oneof![
        Just(AProfile::p_laplacian(1.5).unwrap()),
        Just(AProfile::p_laplacian(2.0).unwrap()),
        Just(AProfile::p_laplacian(3.0).unwrap()),
        Just(AProfile::minimal()),
    ]
}

// a few Fourier modes with small amplitude, bounded by 0.9
fn data() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-0.45f64..0.45)
}

fn phi(c: [f64; 4]) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
    move |t: f64| c[0] * t.cos() + c[1] * t.sin() + c[2] * (2.0 * t).cos() + c[3] * (3.0 * t).sin()
}

fn ball_problem(profile: AProfile, values: Vec<f64>) -> DirichletProblem {
    DirichletProblem::new(hyp(), profile, BoundaryData::Values(values))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rotation_equivariance(profile in profiles(), c in data(), shift in 1usize..32) {
        let grid = PolarGrid::ball(&hyp(), 2.0, 12, 32).unwrap();
        let f = phi(c);
        let ring: Vec<f64> = grid.angles().iter().map(|&t| f(t)).collect();
        let rotated: Vec<f64> = (0..32).map(|j| ring[(j + 32 - shift) % 32]).collect();
        let u = solve_ball(&ball_problem(profile.clone(), ring), &grid).unwrap();
        let v = solve_ball(&ball_problem(profile, rotated), &grid).unwrap();
        let tol = u.tol_newton;
        for i in 0..=grid.n_r {
            for j in 0..grid.n_t {
                let d = (v.value(i, (j + shift) % 32) - u.value(i, j)).abs();
                prop_assert!(d <= tol, "node ({i}, {j}): {d}");
            }
        }
    }

    #[test]
    fn max_principle_and_monotone_energy(profile in profiles(), c in data()) {
        let grid = PolarGrid::ball(&hyp(), 2.0, 12, 32).unwrap();
        let pb = DirichletProblem::new(hyp(), profile, BoundaryData::Asymptotic(Arc::new(phi(c))));
        let u = solve_ball(&pb, &grid).unwrap();
        prop_assert!(u.max_principle().holds);
        for w in u.energy_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 64.0 * f64::EPSILON * w[0].abs().max(1.0), "{:?}", u.energy_history);
        }
    }

    #[test]
    fn ordered_data_give_ordered_solutions(profile in profiles(), c in data(), lift in 0.0f64..0.3) {
        let grid = PolarGrid::ball(&hyp(), 2.0, 10, 16).unwrap();
        let f = phi(c);
        let lo: Vec<f64> = grid.angles().iter().map(|&t| f(t)).collect();
        let hi: Vec<f64> = grid.angles().iter().map(|&t| f(t) + lift * (1.0 + (2.0 * t).cos())).collect();
        let u = solve_ball(&ball_problem(profile.clone(), lo), &grid).unwrap();
        let v = solve_ball(&ball_problem(profile, hi), &grid).unwrap();
        prop_assert!(comparison_check_discrete(&u, &v).unwrap().ordered);
    }
}

#[test]
fn annulus_matches_radial_solution() {
    let wf = hyp();
    for profile in [AProfile::p_laplacian(2.0).unwrap(), AProfile::p_laplacian(3.0).unwrap()] {
        let grid = PolarGrid::annulus(&wf, 1.0, 2.0, 64, 8).unwrap();
        let pb = DirichletProblem::new(wf.clone(), profile.clone(), BoundaryData::Radial { u_in: 0.0, u_out: 1.0 });
        let sol = solve_annulus(&pb, &grid).unwrap();
        let exact = solve_radial(&profile, &wf, 1, 1.0, 2.0, 0.0, 1.0).unwrap();
        let radii: Vec<f64> = (0..=grid.n_r).map(|i| grid.radius(i)).collect();
        let ex = exact.values(&radii);
        let err = (0..=grid.n_r)
            .flat_map(|i| (0..grid.n_t).map(move |j| (i, j)))
            .map(|(i, j)| (sol.value(i, j) - ex[i]).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{profile:?}: {err}");
    }
}

#[test]
fn radial_ball_data_give_constants() {
    let grid = PolarGrid::ball(&hyp(), 2.0, 8, 8).unwrap();
    let sol = solve_ball(&ball_problem(AProfile::minimal(), vec![-0.3; 8]), &grid).unwrap();
    assert!(sol.values.iter().all(|&v| v == -0.3));
    assert_eq!(sol.rows().len(), 1 + 8 * 8);
}

#[test]
fn cascade_is_monotone_for_cos() {
    let pb = DirichletProblem::new(hyp(), AProfile::minimal(), BoundaryData::Asymptotic(Arc::new(f64::cos)));
    let policy = GridPolicy { dr: 0.125, n_t: 32 };
    let (last, rep) = exhaustion_solve(&pb, &[2.0, 3.0, 4.0], policy, 1e-2).unwrap();
    assert!(rep.strictly_decreasing && !rep.non_monotone, "{:?}", rep.d);
    assert_eq!(rep.stages.len(), 3);
    assert!(rep.stages[0].d_k.is_none());
    assert_eq!(last.grid.r_out, 4.0);
}

#[test]
fn steep_data_need_more_newton_steps() {
    let grid = PolarGrid::ball(&hyp(), 2.0, 12, 32).unwrap();
    let pb = DirichletProblem::new(hyp(), AProfile::p_laplacian(3.0).unwrap(), BoundaryData::Asymptotic(Arc::new(|t: f64| 3.0 * t.cos())));
    let sol = solve_ball(&pb, &grid).unwrap();
    assert!(sol.newton_iters > 0 && sol.residual_norm <= sol.tol_newton);
}
