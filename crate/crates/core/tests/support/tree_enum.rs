//! Brute-force law of the maximal displacement, independent of the tail
//! recursion: the whole population is evolved forward generation by
//! generation, over every joint jump/offspring outcome, in exact arithmetic.
//!
//! States are `(sorted sites of the current generation, running max)`. Two
//! reductions keep the state space small without changing any probability of
//! interest: the running max is capped at `x_max`, and particles that can no
//! longer push the max past its current value are dropped.

use std::collections::BTreeMap;

use brw_core::Rational;
use num_traits::{One, Zero};

type State = (Vec<i64>, i64);

/// `tails[k][x − 1] = P(M_k ≥ x)` for `0 ≤ k ≤ k_max`, `1 ≤ x ≤ x_max`, from
/// one particle at the origin.
pub fn max_displacement_tails(
    offspring: &[(usize, Rational)],
    steps: &[(i64, Rational)],
    k_max: usize,
    x_max: i64,
) -> Vec<Vec<Rational>> {
    let range = steps.iter().map(|(y, _)| y.abs()).max().unwrap_or(0);
    let mut dist: BTreeMap<State, Rational> = BTreeMap::new();
    dist.insert((vec![0], 0), Rational::one());
    let mut tails = vec![tail_row(&dist, x_max)];
    for k in 1..=k_max {
        let reach = range * (k_max - k) as i64;
        let mut next: BTreeMap<State, Rational> = BTreeMap::new();
        for ((sites, m), p) in &dist {
            // expand one parent at a time
            let mut partial: BTreeMap<State, Rational> = BTreeMap::new();
            partial.insert((Vec::new(), *m), p.clone());
            for &s in sites {
                let mut grown: BTreeMap<State, Rational> = BTreeMap::new();
                for ((kids, mm), q) in &partial {
                    for (y, a) in steps {
                        for (count, b) in offspring {
                            let w = q.clone() * a.clone() * b.clone();
                            if w.is_zero() {
                                continue;
                            }
                            let mut kids2 = kids.clone();
                            let mut m2 = *mm;
                            if *count > 0 {
                                kids2.extend(std::iter::repeat_n(s + y, *count));
                                m2 = m2.max((s + y).min(x_max));
                            }
                            *grown.entry((kids2, m2)).or_insert_with(Rational::zero) += w;
                        }
                    }
                }
                partial = grown;
            }
            for ((mut kids, m2), q) in partial {
                kids.retain(|c| m2 < x_max && c + reach > m2);
                kids.sort_unstable();
                *next.entry((kids, m2)).or_insert_with(Rational::zero) += q;
            }
        }
        dist = next;
        tails.push(tail_row(&dist, x_max));
    }
    tails
}

fn tail_row(dist: &BTreeMap<State, Rational>, x_max: i64) -> Vec<Rational> {
    (1..=x_max)
        .map(|x| {
            dist.iter()
                .filter(|((_, m), _)| *m >= x)
                .fold(Rational::zero(), |acc, (_, p)| acc + p.clone())
        })
        .collect()
}
