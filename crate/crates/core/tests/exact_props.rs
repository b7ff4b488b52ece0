mod support;

use brw_core::exact::{w_infinity, w_table};
use brw_core::model::{BrwParams, OffspringLaw, StepLaw};
use brw_core::{Rational, Scalar};
use num_traits::Zero;
use proptest::prelude::*;

use support::tree_enum::max_displacement_tails;

fn r(a: i64, b: i64) -> Rational {
    Rational::from_ratio(a, b)
}

fn theta_n() -> impl Strategy<Value = (i64, u64)> {
    (-3i64..=3, 4u64..=40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rows_are_monotone_and_respect_the_range((theta, n) in theta_n(), lazy in any::<bool>()) {
        let step = if lazy { StepLaw::lazy(r(1, 3)).unwrap() } else { StepLaw::simple() };
        let p = BrwParams::from_family(brw_core::model::Family::Binary, r(theta, 1), n, step).unwrap();
        let table = w_table(&p, 6, 8).unwrap();
        for k in 0..=6usize {
            for x in 1..=8i64 {
                let w = table.w(k, x);
                prop_assert!(w >= <Rational as Scalar>::zero() && w <= <Rational as Scalar>::one());
                if k > 0 {
                    prop_assert!(w >= table.w(k - 1, x), "not increasing in k at ({k},{x})");
                }
                prop_assert!(table.w(k, x + 1) <= w, "not decreasing in x at ({k},{x})");
                if x > k as i64 {
                    prop_assert!(w.is_zero(), "w_{k}({x}) = {w} beyond reach");
                }
            }
        }
    }
}

#[test]
fn table_matches_tree_enumeration_off_criticality() {
    for theta in [1, -1, 3] {
        let p = BrwParams::binary_simple(r(theta, 1), 10).unwrap();
        let table = w_table(&p, 4, 4).unwrap();
        let offspring: Vec<(usize, Rational)> = p.offspring.probs().iter().cloned().enumerate().collect();
        let oracle = max_displacement_tails(&offspring, &p.step.support(), 4, 4);
        for (k, row) in oracle.iter().enumerate() {
            for (i, expect) in row.iter().enumerate() {
                assert_eq!(&table.w(k, i as i64 + 1), expect, "θ={theta} k={k} x={}", i + 1);
            }
        }
    }
}

fn assert_matches_oracle(p: &BrwParams<Rational>, k_max: usize, x_max: i64) {
    let table = w_table(p, k_max, x_max as usize + 2).unwrap();
    let law: Vec<(usize, Rational)> = p.offspring.probs().iter().cloned().enumerate().collect();
    let oracle = max_displacement_tails(&law, &p.step.support(), k_max, x_max);
    for (k, row) in oracle.iter().enumerate() {
        for (i, expect) in row.iter().enumerate() {
            assert_eq!(&table.w(k, i as i64 + 1), expect, "k={k} x={}", i + 1);
        }
    }
}

#[test]
fn table_matches_tree_enumeration_for_wider_laws() {
    let step =
        StepLaw::from_offsets(&[(-2, r(1, 8)), (-1, r(1, 4)), (0, r(1, 4)), (1, r(1, 4)), (2, r(1, 8))]).unwrap();
    let binary = BrwParams::from_family(brw_core::model::Family::Binary, r(1, 1), 4, step.clone()).unwrap();
    assert_matches_oracle(&binary, 3, 6);

    let offspring = OffspringLaw::new(vec![r(1, 3), r(1, 3), r(1, 6), r(1, 6)]).unwrap();
    let theta = offspring.mean() - <Rational as Scalar>::one();
    let three = BrwParams::new(1, theta, offspring, step).unwrap();
    assert_matches_oracle(&three, 2, 4);
}

#[test]
fn float_and_rational_tables_agree() {
    let p = BrwParams::binary_simple(r(2, 1), 7).unwrap();
    let exact = w_table(&p, 12, 12).unwrap();
    let float = w_table(&p.to_f64(), 12, 12).unwrap();
    for k in 0..=12 {
        for x in 1..=12 {
            assert!((exact.w(k, x).to_f64() - float.w(k, x)).abs() < 1e-14);
        }
    }
}

#[test]
fn fixed_point_dominates_finite_rows() {
    let p = BrwParams::binary_simple(-1.0, 25).unwrap();
    let fp = w_infinity(&p, 120, 1e-14, None).unwrap();
    assert!(fp.converged);
    let table = w_table(&p, 200, 120).unwrap();
    for x in 1..=60 {
        assert!(fp.w(x) >= table.w(200, x) - 1e-15);
        assert!(fp.w(x) - table.w(200, x) < 1e-3);
    }
}
