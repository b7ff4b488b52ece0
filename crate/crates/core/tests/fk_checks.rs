use brw_core::exact::w_table;
use brw_core::fk::{
    check_martingale, enumerate_paths, fk_identity, fk_sweep, martingale_sweep, table_for, y_trace, ReflectedWalk,
    StoppingSpec, Upper, DEFAULT_PATH_BUDGET,
};
use brw_core::model::{BrwParams, Family, StepLaw};
use brw_core::{Rational, Scalar};
use num_traits::Zero;

fn r(a: i64, b: i64) -> Rational {
    Rational::from_ratio(a, b)
}

fn skewed_step() -> StepLaw<Rational> {
    // mean zero but asymmetric, so reflection is visible
    StepLaw::from_offsets(&[(-1, r(2, 3)), (2, r(1, 3))]).unwrap()
}

#[test]
fn reflected_paths_carry_mirrored_probabilities() {
    let step = skewed_step();
    let walk = ReflectedWalk::new(&step, 3).unwrap();
    let paths = enumerate_paths(&walk, 3, DEFAULT_PATH_BUDGET).unwrap();
    let total = paths
        .iter()
        .fold(<Rational as Scalar>::zero(), |acc, p| acc + p.prob.clone());
    assert_eq!(total, <Rational as Scalar>::one());
    for path in &paths {
        assert_eq!(path.sites[0], 3);
        let expect = path
            .sites
            .windows(2)
            .fold(<Rational as Scalar>::one(), |acc, w| acc * step.prob(w[0] - w[1]));
        assert_eq!(path.prob, expect);
    }
}

#[test]
fn identities_hold_for_a_skewed_step_law() {
    let p = BrwParams::from_family(Family::Binary, r(1, 1), 6, skewed_step()).unwrap();
    let reports = fk_sweep(&p, 3, 4).unwrap();
    assert!(!reports.is_empty());
    for rep in &reports {
        assert!(
            rep.max_diff.is_zero(),
            "m={} k={} x={} {:?}",
            rep.m,
            rep.k,
            rep.x0,
            rep.spec
        );
    }
    for (m, x0, d) in martingale_sweep(&p, 3, 4).unwrap() {
        assert!(d.is_zero(), "m={m} x0={x0}");
    }
}

#[test]
fn identities_hold_for_a_lazy_walk() {
    let p = BrwParams::from_family(Family::Binary, r(-2, 1), 5, StepLaw::lazy(r(1, 2)).unwrap()).unwrap();
    for rep in fk_sweep(&p, 4, 3).unwrap() {
        assert!(rep.max_diff.is_zero());
    }
}

#[test]
fn float_mode_agrees_to_rounding() {
    let p = BrwParams::binary_simple(1.0, 10).unwrap();
    for rep in fk_sweep(&p, 4, 4).unwrap() {
        assert!(rep.max_diff < 1e-14, "{}", rep.max_diff);
    }
    assert!(check_martingale(&p, 4, 2).unwrap() < 1e-14);
}

#[test]
fn infinite_barrier_and_no_stopping_before_horizon_agree() {
    let p = BrwParams::binary_simple(r(0, 1), 1).unwrap();
    let table = table_for(&p, 4, 3).unwrap();
    let a = fk_identity(4, 0, 2, &StoppingSpec::new(0, Upper::Infinite).unwrap(), &table).unwrap();
    let b = fk_identity(4, 0, 2, &StoppingSpec::new(0, Upper::At(100)).unwrap(), &table).unwrap();
    assert_eq!(a.rhs_ii, b.rhs_ii);
    assert_eq!(a.lhs, a.rhs_ii);
}

#[test]
fn trace_starts_at_the_tail_value() {
    let p = BrwParams::binary_simple(r(1, 1), 10).unwrap();
    let table = w_table(&p, 3, 6).unwrap();
    let trace = y_trace(&[2, 3, 2, 1], 3, &table).unwrap();
    assert_eq!(trace.y_values[0], table.w(3, 2));
    assert_eq!(trace.tau_bar, None);
    let absorbed = y_trace(&[1, 0, 0, 0], 3, &table).unwrap();
    assert_eq!(absorbed.tau_bar, Some(1));
    assert_eq!(absorbed.y_values[1], absorbed.y_values[3]);
}
