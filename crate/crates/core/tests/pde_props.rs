use brw_core::pde::{
    psi_ode_verify, solve_fkpp, traveling_wave, traveling_wave_with_step, BoundaryCap, FkppProblem, Grid,
    PsiClosedForm, Scheme,
};
use proptest::prelude::*;

fn small_problem(theta: f64, cap: f64) -> FkppProblem {
    let mut p = FkppProblem::new(theta, 1.0, 1.0, Grid::new(0.2, 4.0, 0.05, 0.5));
    p.boundary = BoundaryCap::Fixed(cap);
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn larger_caps_give_larger_solutions(theta in -2.0f64..2.0, cap in 1.0f64..100.0, factor in 1.1f64..4.0) {
        let lo = solve_fkpp(&small_problem(theta, cap)).unwrap();
        let hi = solve_fkpp(&small_problem(theta, cap * factor)).unwrap();
        for (a, b) in lo.final_values().iter().zip(hi.final_values()) {
            prop_assert!(a <= &(b + 1e-12));
        }
    }

    #[test]
    fn solutions_grow_in_time_and_fall_in_space(theta in -2.0f64..2.0) {
        let sol = solve_fkpp(&FkppProblem::new(theta, 1.0, 1.0, Grid::new(0.2, 4.0, 0.05, 0.5))).unwrap();
        prop_assert!(sol.monotone_t);
        prop_assert!(sol.monotone_x);
        prop_assert!(sol.values.iter().flatten().all(|v| *v >= 0.0));
    }
}

#[test]
fn wave_slope_is_stable_under_step_halving() {
    for rho in [0.5, 1.0] {
        let coarse = traveling_wave_with_step(rho, 30.0, 1e-6, 0.005).unwrap();
        let fine = traveling_wave_with_step(rho, 30.0, 1e-6, 0.0025).unwrap();
        let change = ((coarse.decay_slope - fine.decay_slope) / fine.decay_slope).abs();
        assert!(change < 0.005, "ρ={rho}: {change}");
    }
}

#[test]
fn wave_eval_is_monotone_across_the_sample_edge() {
    let w = traveling_wave(1.0, 30.0, 1e-8).unwrap();
    let xs: Vec<f64> = (0..400).map(|i| 0.1 * i as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|x| w.eval(*x)).collect();
    assert!(vals.windows(2).all(|p| p[1] >= p[0]));
    assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn crank_nicolson_and_explicit_agree_on_the_stationary_profile() {
    let grid = Grid::new(0.1, 8.0, 0.02, 6.0);
    let ex = solve_fkpp(&FkppProblem::new(-1.0, 1.0, 1.0, grid)).unwrap();
    let mut cn = FkppProblem::new(-1.0, 1.0, 1.0, grid);
    cn.scheme = Scheme::CrankNicolson;
    let cn = solve_fkpp(&cn).unwrap();
    let psi = PsiClosedForm::new(-1.0, 1.0, 1.0).unwrap();
    for x in [0.5, 1.0, 2.0] {
        let target = psi.eval(x).unwrap();
        let a = ex.eval(6.0, x).unwrap();
        let b = cn.eval(6.0, x).unwrap();
        assert!(((a - b) / target).abs() < 0.01, "x={x}: {a} vs {b}");
        assert!(((a - target) / target).abs() < 0.03, "x={x}: {a} vs {target}");
    }
}

#[test]
fn closed_form_solves_its_ode_at_second_order() {
    for theta in [2.0, 0.5, -0.5, -3.0] {
        let pcf = PsiClosedForm::new(theta, 1.5, 0.7).unwrap();
        let xs: Vec<f64> = (1..=20).map(|i| 0.25 * i as f64).collect();
        let rep = psi_ode_verify(&pcf, &xs, 0.05).unwrap();
        assert!((rep.fitted_order - 2.0).abs() < 0.3, "θ={theta}: {rep:?}");
    }
}
