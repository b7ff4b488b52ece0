//! Exact checks of the reflected-walk martingale and the discrete Feynman–Kac
//! representation of `w_m(x)`, by exhaustive enumeration of walk paths.
//!
//! With `𝒲` the walk whose steps have law `a_{−y}`, `τ̄ = min{k : 𝒲_k ≤ 0}` and
//! `Π_k = Π_{j=1}^{k} [1 − H(w_{m−j}(𝒲_j))]`,
//!
//! ```text
//! Y_k = (1+η)^k w_{m−k}(𝒲_k) 1{τ̄ ≥ k} Π_k
//!     + Σ_{i=1}^{k−1} (1+η)^{i−1} (1 − p₀) 1{τ̄ = i} Π_{i−1}
//! ```
//!
//! is a martingale for `𝒲_0 ≥ 1`, and optional stopping at any bounded
//! stopping time `T ≤ τ̄` gives
//! `w_m(x) = E_x[(1+η)^T w_{m−T}(𝒲_T) Π_T]`.
//!
//! In rational arithmetic every identity here must hold with zero difference.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exact::{w_table, TailTable};
use crate::model::{BrwParams, StepLaw};
use crate::par;
use crate::scalar::Scalar;

/// Default cap on the number of enumerated paths.
pub const DEFAULT_PATH_BUDGET: u64 = 10_000_000;

/// The reflected walk `𝒲` started at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedWalk<T: Scalar> {
    step: StepLaw<T>,
    start: i64,
}

impl<T: Scalar> ReflectedWalk<T> {
    /// Reflects `original` (offset `y` gets probability `a_{−y}`).
    pub fn new(original: &StepLaw<T>, start: i64) -> Result<Self> {
        if start < 0 {
            return Err(Error::Precondition(format!("start {start} must be non-negative")));
        }
        Ok(Self {
            step: original.reflected(),
            start,
        })
    }

    pub fn step(&self) -> &StepLaw<T> {
        &self.step
    }
    pub fn start(&self) -> i64 {
        self.start
    }
}

/// Upper barrier `z` of a [`StoppingSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Upper {
    At(i64),
    Infinite,
}

/// Exit times `τ̄_y = min{k: 𝒲_k ≤ y}`, `τ_z = min{k: 𝒲_k ≥ z}` and
/// `τ̄_{y,z} = τ̄_y ∧ τ_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoppingSpec {
    lower: i64,
    upper: Upper,
}

impl StoppingSpec {
    pub fn new(lower: i64, upper: Upper) -> Result<Self> {
        if lower < 0 {
            return Err(Error::Precondition(format!(
                "lower barrier {lower} must be non-negative"
            )));
        }
        if let Upper::At(z) = upper {
            if z <= lower {
                return Err(Error::Precondition(format!("need y < z, got y={lower} z={z}")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `τ̄ = τ̄_0` with no upper barrier.
    pub fn below_zero() -> Self {
        Self {
            lower: 0,
            upper: Upper::Infinite,
        }
    }

    pub fn lower(&self) -> i64 {
        self.lower
    }
    pub fn upper(&self) -> Upper {
        self.upper
    }

    pub fn stops_at(&self, site: i64) -> bool {
        site <= self.lower
            || match self.upper {
                Upper::At(z) => site >= z,
                Upper::Infinite => false,
            }
    }

    /// First index of `path` at which the spec stops, if any.
    pub fn exit_time(&self, path: &[i64]) -> Option<usize> {
        path.iter().position(|&s| self.stops_at(s))
    }

    pub fn to_json(&self) -> Value {
        let z = match self.upper {
            Upper::At(z) => json!(z),
            Upper::Infinite => json!("inf"),
        };
        json!({ "y": self.lower, "z": z })
    }
}

/// A walk path `𝒲_0..𝒲_m` with its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPath<T: Scalar> {
    pub sites: Vec<i64>,
    pub prob: T,
}

/// All length-`m` paths of `walk`, in lexicographic order of their steps.
pub fn enumerate_paths<T: Scalar>(walk: &ReflectedWalk<T>, m: usize, budget: u64) -> Result<Vec<WeightedPath<T>>> {
    let support = walk.step.support();
    let count = (support.len() as u64)
        .checked_pow(m as u32)
        .filter(|c| *c <= budget)
        .ok_or_else(|| Error::Resource(format!("{}^{m} paths exceed the budget of {budget}", support.len())))?;
    let mut out = Vec::with_capacity(count as usize);
    let mut sites = vec![walk.start];
    fn rec<T: Scalar>(support: &[(i64, T)], m: usize, sites: &mut Vec<i64>, prob: T, out: &mut Vec<WeightedPath<T>>) {
        if sites.len() == m + 1 {
            out.push(WeightedPath {
                sites: sites.clone(),
                prob,
            });
            return;
        }
        let here = *sites.last().expect("non-empty");
        for (y, a) in support {
            sites.push(here + y);
            rec(support, m, sites, prob.clone() * a.clone(), out);
            sites.pop();
        }
    }
    rec(&support, m, &mut sites, T::one(), &mut out);
    Ok(out)
}

/// `Y_0..Y_m` along one path, with both summands.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleTrace<T: Scalar> {
    pub path: Vec<i64>,
    pub y_values: Vec<T>,
    /// `Π_k` for `k = 0..=m`.
    pub products: Vec<T>,
    /// The absorbed sum (second summand) at each `k`.
    pub absorbed: Vec<T>,
    /// `τ̄` if the path reaches `(−∞, 0]`.
    pub tau_bar: Option<usize>,
}

fn check_table<T: Scalar>(table: &TailTable<T>, m: usize) -> Result<()> {
    if table.k_max() < m {
        return Err(Error::Precondition(format!(
            "table depth {} below m = {m}",
            table.k_max()
        )));
    }
    if !table.covers_range() {
        return Err(Error::Precondition(format!(
            "table x_max {} below R·k_max = {}; sites past x_max would not be exact",
            table.x_max(),
            table.params().step.range() * table.k_max() as i64
        )));
    }
    Ok(())
}

// Y_k computed incrementally along a path.
#[derive(Clone)]
struct YState<T: Scalar> {
    k: usize,
    site: i64,
    tau_bar: Option<usize>,
    pow: T,
    prod: T,
    // (1+η)^{k−1}, Π_{k−1}; meaningful for k ≥ 1
    prev_pow: T,
    prev_prod: T,
    absorbed: T,
}

struct YContext<'a, T: Scalar> {
    table: &'a TailTable<T>,
    m: usize,
    mean: T,
    one_minus_p0: T,
}

impl<'a, T: Scalar> YContext<'a, T> {
    fn new(table: &'a TailTable<T>, m: usize) -> Self {
        let law = &table.params().offspring;
        Self {
            table,
            m,
            mean: law.mean(),
            one_minus_p0: T::one() - law.p0(),
        }
    }

    fn start(&self, x0: i64) -> YState<T> {
        YState {
            k: 0,
            site: x0,
            tau_bar: (x0 <= 0).then_some(0),
            pow: T::one(),
            prod: T::one(),
            prev_pow: T::one(),
            prev_prod: T::one(),
            absorbed: T::zero(),
        }
    }

    fn first_term(&self, s: &YState<T>) -> T {
        match s.tau_bar {
            Some(t) if t < s.k => T::zero(),
            _ => s.pow.clone() * self.table.w(self.m - s.k, s.site) * s.prod.clone(),
        }
    }

    fn y(&self, s: &YState<T>) -> T {
        self.first_term(s) + s.absorbed.clone()
    }

    fn advance(&self, s: &YState<T>, site: i64) -> YState<T> {
        let k = s.k + 1;
        let w = self.table.w(self.m - k, site);
        let factor = T::one() - self.table.params().offspring.big_h_unchecked(&w);
        let mut absorbed = s.absorbed.clone();
        // the i = s.k term enters the sum at k = s.k + 1
        if s.k >= 1 && s.tau_bar == Some(s.k) {
            absorbed = absorbed + s.prev_pow.clone() * self.one_minus_p0.clone() * s.prev_prod.clone();
        }
        YState {
            k,
            site,
            tau_bar: s.tau_bar.or((site <= 0).then_some(k)),
            pow: s.pow.clone() * self.mean.clone(),
            prod: s.prod.clone() * factor,
            prev_pow: s.pow.clone(),
            prev_prod: s.prod.clone(),
            absorbed,
        }
    }
}

/// Evaluates `Y_0..Y_m` along `path` (which must have `m + 1` sites).
pub fn y_trace<T: Scalar>(path: &[i64], m: usize, table: &TailTable<T>) -> Result<MartingaleTrace<T>> {
    check_table(table, m)?;
    if path.len() != m + 1 {
        return Err(Error::Precondition(format!(
            "path has {} sites, expected m + 1 = {}",
            path.len(),
            m + 1
        )));
    }
    let ctx = YContext::new(table, m);
    let mut state = ctx.start(path[0]);
    let mut y_values = vec![ctx.y(&state)];
    let mut products = vec![state.prod.clone()];
    let mut absorbed = vec![state.absorbed.clone()];
    for &site in &path[1..] {
        state = ctx.advance(&state, site);
        y_values.push(ctx.y(&state));
        products.push(state.prod.clone());
        absorbed.push(state.absorbed.clone());
    }
    Ok(MartingaleTrace {
        path: path.to_vec(),
        y_values,
        products,
        absorbed,
        tau_bar: state.tau_bar,
    })
}

/// Builds the table `check_martingale` and `fk_identity` need for horizon `m`.
pub fn table_for<T: Scalar>(params: &BrwParams<T>, m: usize, x_reach: i64) -> Result<TailTable<T>> {
    let r = params.step.range();
    let x_max = (x_reach.max(0) + r * m as i64).max(1) as usize;
    w_table(params, m, x_max)
}

/// `max_k max_{histories} |E[Y_{k+1} | ℱ_k] − Y_k|` for the walk started at `x0`.
///
/// Histories that have already been absorbed (`τ̄ < k`) are pruned: `Y` is
/// constant on them from then on.
pub fn check_martingale<T: Scalar>(params: &BrwParams<T>, m: usize, x0: i64) -> Result<T> {
    let table = table_for(params, m, x0)?;
    check_martingale_with(&table, m, x0, DEFAULT_PATH_BUDGET)
}

pub fn check_martingale_with<T: Scalar>(table: &TailTable<T>, m: usize, x0: i64, budget: u64) -> Result<T> {
    check_table(table, m)?;
    if x0 < 0 {
        return Err(Error::Precondition(format!("start {x0} must be non-negative")));
    }
    let support = table.params().step.reflected().support();
    let prefixes = (support.len() as u64).checked_pow(m as u32).unwrap_or(u64::MAX);
    if prefixes > budget {
        return Err(Error::Resource(format!(
            "{prefixes} histories exceed the budget of {budget}"
        )));
    }
    let ctx = YContext::new(table, m);
    let mut worst = T::zero();
    let mut stack = vec![ctx.start(x0)];
    while let Some(state) = stack.pop() {
        if state.k == m {
            continue;
        }
        let y_now = ctx.y(&state);
        let mut expect = T::zero();
        let mut children = Vec::with_capacity(support.len());
        for (dy, a) in &support {
            let child = ctx.advance(&state, state.site + dy);
            expect = expect + a.clone() * ctx.y(&child);
            children.push(child);
        }
        let diff = (expect - y_now).abs();
        worst = T::max_of(worst, diff);
        let absorbed = matches!(state.tau_bar, Some(t) if t <= state.k);
        if !absorbed {
            stack.extend(children);
        }
    }
    Ok(worst)
}

/// Outcome of one Feynman–Kac check.
#[derive(Debug, Clone, PartialEq)]
pub struct FkReport<T: Scalar> {
    pub m: usize,
    pub k: usize,
    pub x0: i64,
    pub spec: StoppingSpec,
    /// `w_m(x)` from the recursion.
    pub lhs: T,
    /// Expectation stopped at `τ̄_{y,z} ∧ (m − k)`.
    pub rhs_i: T,
    /// Expectation stopped at `τ̄_{y,z} ∧ m`.
    pub rhs_ii: T,
    pub max_diff: T,
}

impl<T: Scalar> FkReport<T> {
    pub fn to_json(&self, instance: &str) -> Value {
        json!({
            "instance": instance,
            "m": self.m,
            "k": self.k,
            "x0": self.x0,
            "spec": self.spec.to_json(),
            "lhs": self.lhs.to_wire(),
            "rhs_i": self.rhs_i.to_wire(),
            "rhs_ii": self.rhs_ii.to_wire(),
            "max_diff": self.max_diff.to_wire(),
            "exact": T::EXACT,
        })
    }
}

/// `E_x[(1+η)^T w_{m−T}(𝒲_T) Π_T]` with `T = τ̄_{y,z} ∧ horizon`.
fn stopped_expectation<T: Scalar>(table: &TailTable<T>, m: usize, x: i64, spec: &StoppingSpec, horizon: usize) -> T {
    let params = table.params();
    let support = params.step.reflected().support();
    let mean = params.offspring.mean();
    // (site, time, probability·(1+η)^time·Π_time)
    let mut total = T::zero();
    let mut stack = vec![(x, 0usize, T::one())];
    while let Some((site, time, weight)) = stack.pop() {
        if time == horizon || spec.stops_at(site) {
            total = total + weight * table.w(m - time, site);
            continue;
        }
        for (dy, a) in &support {
            let next = site + dy;
            let w = table.w(m - time - 1, next);
            let factor = T::one() - params.offspring.big_h_unchecked(&w);
            stack.push((next, time + 1, weight.clone() * a.clone() * mean.clone() * factor));
        }
    }
    total
}

/// Compares `w_m(x)` with both stopped expectations.
///
/// Requires `0 ≤ y ≤ x < z` and `k ≤ m`.
pub fn fk_identity<T: Scalar>(
    m: usize,
    k: usize,
    x: i64,
    spec: &StoppingSpec,
    table: &TailTable<T>,
) -> Result<FkReport<T>> {
    check_table(table, m)?;
    if k > m {
        return Err(Error::Precondition(format!("k = {k} exceeds m = {m}")));
    }
    if x < spec.lower() {
        return Err(Error::Precondition(format!("need y ≤ x, got y={} x={x}", spec.lower())));
    }
    if let Upper::At(z) = spec.upper() {
        if x >= z {
            return Err(Error::Precondition(format!("need x < z, got x={x} z={z}")));
        }
    }
    let lhs = table.w(m, x);
    let rhs_i = stopped_expectation(table, m, x, spec, m - k);
    let rhs_ii = stopped_expectation(table, m, x, spec, m);
    let max_diff = T::max_of(
        (lhs.clone() - rhs_i.clone()).abs(),
        (lhs.clone() - rhs_ii.clone()).abs(),
    );
    Ok(FkReport {
        m,
        k,
        x0: x,
        spec: *spec,
        lhs,
        rhs_i,
        rhs_ii,
        max_diff,
    })
}

/// Every `(m, k, x, y, z)` with `m ≤ m_max`, `1 ≤ x ≤ min(R·m, x_cap)`,
/// `0 ≤ y < x`, `z ∈ {x+1, …, R·m+1, ∞}`, `k ≤ m`.
pub fn fk_sweep_cases(range: i64, m_max: usize, x_cap: i64) -> Vec<(usize, usize, i64, StoppingSpec)> {
    let mut cases = Vec::new();
    for m in 0..=m_max {
        let rm = range * m as i64;
        for x in 1..=rm.min(x_cap) {
            for y in 0..x {
                let mut uppers: Vec<Upper> = ((x + 1)..=(rm + 1)).map(Upper::At).collect();
                uppers.push(Upper::Infinite);
                for upper in uppers {
                    let spec = StoppingSpec::new(y, upper).expect("y < x < z");
                    for k in 0..=m {
                        cases.push((m, k, x, spec));
                    }
                }
            }
        }
    }
    cases
}

/// Runs [`fk_identity`] over [`fk_sweep_cases`], in parallel across cases.
pub fn fk_sweep<T: Scalar>(params: &BrwParams<T>, m_max: usize, x_cap: i64) -> Result<Vec<FkReport<T>>> {
    let table = table_for(params, m_max, x_cap)?;
    let cases = fk_sweep_cases(params.step.range(), m_max, x_cap);
    par::map_indexed(cases.len(), |i| {
        let (m, k, x, spec) = &cases[i];
        fk_identity(*m, *k, *x, spec, &table)
    })
    .into_iter()
    .collect()
}

/// One martingale check per `(m, x0)` with `m ≤ m_max`, `1 ≤ x0 ≤ max(1, min(R·m, x_cap))`.
pub fn martingale_sweep<T: Scalar>(params: &BrwParams<T>, m_max: usize, x_cap: i64) -> Result<Vec<(usize, i64, T)>> {
    let table = table_for(params, m_max, x_cap)?;
    let r = params.step.range();
    let mut cases = Vec::new();
    for m in 0..=m_max {
        for x0 in 1..=(r * m as i64).min(x_cap).max(1) {
            cases.push((m, x0));
        }
    }
    par::map_indexed(cases.len(), |i| {
        let (m, x0) = cases[i];
        check_martingale_with(&table, m, x0, DEFAULT_PATH_BUDGET).map(|d| (m, x0, d))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(a: i64, b: i64) -> Rational {
        Rational::from_ratio(a, b)
    }

    fn critical() -> BrwParams<Rational> {
        BrwParams::binary_simple(r(0, 1), 1).unwrap()
    }

    #[test]
    fn path_enumeration_examples() {
        let walk = ReflectedWalk::new(&StepLaw::<Rational>::simple(), 1).unwrap();
        let paths = enumerate_paths(&walk, 2, DEFAULT_PATH_BUDGET).unwrap();
        assert_eq!(paths.len(), 4);
        assert!(paths.iter().all(|p| p.prob == r(1, 4)));
        let three = enumerate_paths(&walk, 3, DEFAULT_PATH_BUDGET).unwrap();
        assert_eq!(three.len(), 8);
        let total = three.iter().fold(r(0, 1), |a, p| a + p.prob.clone());
        assert_eq!(total, r(1, 1));
        let still = ReflectedWalk::new(&StepLaw::<Rational>::degenerate(), 3).unwrap();
        let one = enumerate_paths(&still, 5, DEFAULT_PATH_BUDGET).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].sites, vec![3; 6]);
        assert_eq!(one[0].prob, r(1, 1));
        assert!(matches!(enumerate_paths(&walk, 30, 1000), Err(Error::Resource(_))));
    }

    #[test]
    fn trace_examples() {
        let p = critical();
        let table = table_for(&p, 2, 1).unwrap();
        let tr = y_trace(&[1, 0, -1], 2, &table).unwrap();
        assert_eq!(tr.tau_bar, Some(1));
        assert_eq!(tr.y_values[0], table.w(2, 1));
        // Y_2 is exactly the absorbed term (1 − p₀)·1
        assert_eq!(tr.y_values[2], r(1, 2));
        assert_eq!(tr.absorbed[2], r(1, 2));
        for path in [[1, 2, 3], [1, 2, 1], [1, 0, 1]] {
            let tr = y_trace(&path, 2, &table).unwrap();
            assert_eq!(tr.y_values[0], r(1, 4));
            assert!(tr.y_values.iter().all(|y| *y >= r(0, 1)));
        }
    }

    #[test]
    fn constant_path_collapses() {
        let p = BrwParams::new(
            10,
            r(1, 1),
            crate::model::OffspringLaw::binary(r(11, 10)).unwrap(),
            StepLaw::degenerate(),
        )
        .unwrap();
        let table = w_table(&p, 3, 4).unwrap();
        let tr = y_trace(&[2, 2, 2, 2], 3, &table).unwrap();
        let mut prod = r(1, 1);
        for k in 0..=3usize {
            if k > 0 {
                prod *= r(1, 1) - p.offspring.big_h_fn(&table.w(3 - k, 2)).unwrap();
            }
            let expected = r(11, 10).powi(k as u32) * table.w(3 - k, 2) * prod.clone();
            assert_eq!(tr.y_values[k], expected);
        }
    }

    #[test]
    fn martingale_examples() {
        let p = critical();
        assert_eq!(check_martingale(&p, 2, 1).unwrap(), r(0, 1));
        assert_eq!(check_martingale(&p, 0, 1).unwrap(), r(0, 1));
        let sup = BrwParams::binary_simple(r(1, 1), 10).unwrap();
        assert_eq!(check_martingale(&sup, 3, 2).unwrap(), r(0, 1));
        // started on the absorbing set the first step breaks the identity
        assert!(check_martingale(&p, 2, 0).unwrap() > r(0, 1));
    }

    #[test]
    fn fk_examples() {
        let p = critical();
        let table = table_for(&p, 3, 4).unwrap();
        let rep = fk_identity(2, 0, 1, &StoppingSpec::below_zero(), &table).unwrap();
        assert_eq!(rep.lhs, r(1, 4));
        assert_eq!(rep.rhs_ii, r(1, 4));
        assert_eq!(rep.max_diff, r(0, 1));
        let spec = StoppingSpec::new(0, Upper::At(3)).unwrap();
        let rep = fk_identity(3, 1, 1, &spec, &table).unwrap();
        assert_eq!(rep.lhs, rep.rhs_i);
        let far = fk_identity(2, 0, 4, &StoppingSpec::below_zero(), &table).unwrap();
        assert_eq!(far.lhs, r(0, 1));
        assert_eq!(far.rhs_i, r(0, 1));
        assert_eq!(far.rhs_ii, r(0, 1));
    }

    #[test]
    fn fk_preconditions() {
        let table = table_for(&critical(), 2, 2).unwrap();
        let spec = StoppingSpec::new(2, Upper::Infinite).unwrap();
        assert!(matches!(
            fk_identity(2, 0, 1, &spec, &table),
            Err(Error::Precondition(_))
        ));
        let spec = StoppingSpec::new(0, Upper::At(2)).unwrap();
        assert!(fk_identity(2, 0, 2, &spec, &table).is_err());
        assert!(fk_identity(2, 3, 1, &StoppingSpec::below_zero(), &table).is_err());
        assert!(StoppingSpec::new(3, Upper::At(3)).is_err());
        assert!(StoppingSpec::new(-1, Upper::Infinite).is_err());
    }

    #[test]
    fn report_json_shape() {
        let table = table_for(&critical(), 2, 1).unwrap();
        let rep = fk_identity(2, 0, 1, &StoppingSpec::below_zero(), &table).unwrap();
        let doc = rep.to_json("critical");
        assert_eq!(doc["exact"], json!(true));
        assert_eq!(doc["spec"]["z"], json!("inf"));
        assert_eq!(doc["lhs"], json!(["1", "4"]));
        assert_eq!(doc["x0"], json!(1));
    }
}
