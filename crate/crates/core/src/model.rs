//! Offspring and step laws of the branching random walk, and the
//! generating-function algebra (`f`, `Q`, `h`, `H`) every other module uses.
//!
//! A generation is "jump, then branch": each particle takes one step drawn from
//! a [`StepLaw`] and is then replaced by a random number of children drawn from
//! an [`OffspringLaw`]. The near-critical regime uses offspring mean `1 + θ/n`.

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const SUM_TOL: f64 = 1e-12;

/// Truncation point of the shipped geometric family when none is given.
pub const DEFAULT_GEOMETRIC_CAP: usize = 32;

/// Lower end of the extinction-root bracket is `[0, 1 - EXTINCTION_EPS]`.
pub const EXTINCTION_EPS: f64 = 1e-9;

/// Shipped near-critical offspring families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Offspring in {0, 2} with `p2 = μ/2`. Variance `2μ − μ²`, so σ² → 1.
    Binary,
    /// `p_i ∝ r^i` on `0..=cap`, with `r` tuned so the mean is `μ`.
    GeometricTruncated { cap: usize },
}

impl Family {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "binary" => Ok(Family::Binary),
            "geometric" | "geometric-truncated" | "geometric_truncated" => Ok(Family::GeometricTruncated {
                cap: DEFAULT_GEOMETRIC_CAP,
            }),
            other => Err(Error::Config(format!("unknown offspring family `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Binary => "binary",
            Family::GeometricTruncated { .. } => "geometric-truncated",
        }
    }
}

/// Finite offspring distribution. `probs[i]` is the probability of `i` children.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw<T: Scalar> {
    probs: Vec<T>,
    mean: T,
    variance: T,
    third_moment: T,
    // c_j = P(X > j), d_l = Σ_{j>l} c_j; give cancellation-free Q and H.
    tail: Vec<T>,
    tail2: Vec<T>,
}

impl<T: Scalar> OffspringLaw<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Construction("offspring law has empty support".into()));
        }
        let zero = T::zero();
        let one = T::one();
        for (i, p) in probs.iter().enumerate() {
            if *p < zero || *p > one {
                return Err(Error::Construction(format!("p_{i} = {p} outside [0, 1]")));
            }
        }
        let total = probs.iter().cloned().fold(T::zero(), |a, b| a + b);
        if !total.near(&one, SUM_TOL) {
            return Err(Error::Construction(format!("probabilities sum to {total}, not 1")));
        }
        if !(probs[0] > zero) {
            return Err(Error::Construction("p_0 must be positive".into()));
        }
        let mut probs = probs;
        while probs.len() > 1 && probs.last().is_some_and(|p| p.is_zero_value()) {
            probs.pop();
        }

        let (mut m1, mut m2, mut m3) = (T::zero(), T::zero(), T::zero());
        for (i, p) in probs.iter().enumerate() {
            let k = T::from_u64(i as u64);
            let pk = p.clone() * k.clone();
            m1 = m1 + pk.clone();
            m2 = m2 + pk.clone() * k.clone();
            m3 = m3 + pk * k.clone() * k;
        }
        let variance = m2 - m1.clone() * m1.clone();

        let k = probs.len();
        let mut tail = vec![T::zero(); k.saturating_sub(1)];
        let mut acc = T::zero();
        for j in (0..k.saturating_sub(1)).rev() {
            acc = acc + probs[j + 1].clone();
            tail[j] = acc.clone();
        }
        let mut tail2 = vec![T::zero(); tail.len().saturating_sub(1)];
        let mut acc = T::zero();
        for l in (0..tail.len().saturating_sub(1)).rev() {
            acc = acc + tail[l + 1].clone();
            tail2[l] = acc.clone();
        }

        Ok(Self {
            probs,
            mean: m1,
            variance,
            third_moment: m3,
            tail,
            tail2,
        })
    }

    /// Binary law `{0: 1 − μ/2, 2: μ/2}`.
    pub fn binary(mean: T) -> Result<Self> {
        let two = T::from_u64(2);
        let p2 = mean.clone() / two;
        if !(mean > T::zero()) || !(p2 < T::one()) {
            return Err(Error::Construction(format!(
                "binary family cannot have mean {mean}: need 0 < μ < 2"
            )));
        }
        Self::new(vec![T::one() - p2.clone(), T::zero(), p2])
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }
    pub fn prob(&self, i: usize) -> T {
        self.probs.get(i).cloned().unwrap_or_else(T::zero)
    }
    pub fn p0(&self) -> T {
        self.probs[0].clone()
    }
    pub fn max_offspring(&self) -> usize {
        self.probs.len() - 1
    }
    /// `1 + η`.
    pub fn mean(&self) -> T {
        self.mean.clone()
    }
    /// `η = mean − 1`.
    pub fn eta(&self) -> T {
        self.mean.clone() - T::one()
    }
    pub fn variance(&self) -> T {
        self.variance.clone()
    }
    /// Raw third moment `E[X³]`.
    pub fn third_moment(&self) -> T {
        self.third_moment.clone()
    }

    fn check_unit(s: &T, what: &str) -> Result<()> {
        if *s < T::zero() || *s > T::one() {
            return Err(Error::Domain(format!("{what} requires s in [0, 1], got {s}")));
        }
        Ok(())
    }

    /// Probability generating function `f(s) = Σ p_i s^i`.
    pub fn pgf(&self, s: &T) -> Result<T> {
        Self::check_unit(s, "pgf")?;
        Ok(self.pgf_unchecked(s))
    }

    pub(crate) fn pgf_unchecked(&self, s: &T) -> T {
        self.probs
            .iter()
            .rev()
            .fold(T::zero(), |acc, p| acc * s.clone() + p.clone())
    }

    /// `Q(s) = 1 − f(1 − s)`: probability that at least one of the children's
    /// subtrees succeeds when each succeeds independently with probability `s`.
    pub fn q_fn(&self, s: &T) -> Result<T> {
        Self::check_unit(s, "Q")?;
        Ok(self.q_unchecked(s))
    }

    /// Evaluated as `s · Σ_j P(X > j)(1 − s)^j`, free of cancellation at small `s`.
    #[inline]
    pub(crate) fn q_unchecked(&self, s: &T) -> T {
        let u = T::one() - s.clone();
        let poly = self
            .tail
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * u.clone() + c.clone());
        s.clone() * poly
    }

    /// `h(s) = (1 + η)s − Q(s) ≥ 0`.
    pub fn h_fn(&self, s: &T) -> Result<T> {
        Self::check_unit(s, "h")?;
        Ok(self.mean.clone() * s.clone() - self.q_unchecked(s))
    }

    /// `H(s) = h(s) / ((1 + η)s)`, extended by `H(0) = 0`.
    pub fn big_h_fn(&self, s: &T) -> Result<T> {
        Self::check_unit(s, "H")?;
        Ok(self.big_h_unchecked(s))
    }

    #[inline]
    pub(crate) fn big_h_unchecked(&self, s: &T) -> T {
        if self.mean.is_zero_value() {
            return T::zero();
        }
        let u = T::one() - s.clone();
        let poly = self
            .tail2
            .iter()
            .rev()
            .fold(T::zero(), |acc, d| acc * u.clone() + d.clone());
        s.clone() * poly / self.mean.clone()
    }

    /// Upper bound `(η⁺ + p₀)/(1 + η)` on `H` over `[0, 1]`.
    pub fn big_h_bound(&self) -> T {
        let eta = self.eta();
        let eta_plus = T::max_of(eta, T::zero());
        (eta_plus + self.p0()) / self.mean.clone()
    }

    pub fn to_f64(&self) -> OffspringLaw<f64> {
        OffspringLaw::new(self.probs.iter().map(Scalar::to_f64).collect())
            .expect("a valid law stays valid in floating point")
    }

    /// `{"probs": {"0": p0, ...}, "mean": .., "variance": .., "third_moment": ..}`.
    pub fn to_json(&self) -> Value {
        let mut probs = Map::new();
        for (i, p) in self.probs.iter().enumerate() {
            if !p.is_zero_value() {
                probs.insert(i.to_string(), p.to_wire());
            }
        }
        let mut doc = Map::new();
        doc.insert("probs".into(), Value::Object(probs));
        doc.insert("mean".into(), self.mean.to_wire());
        doc.insert("variance".into(), self.variance.to_wire());
        doc.insert("third_moment".into(), self.third_moment.to_wire());
        Value::Object(doc)
    }

    /// Parses the document written by [`Self::to_json`]. Moments are recomputed
    /// from the probabilities and must agree with any stored values.
    pub fn from_json(doc: &Value) -> Result<Self> {
        let probs = doc
            .get("probs")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Config("offspring law document lacks `probs`".into()))?;
        let mut dense: Vec<T> = Vec::new();
        for (k, v) in probs {
            let i: usize = k
                .parse()
                .map_err(|_| Error::Config(format!("offspring count key `{k}` is not a non-negative integer")))?;
            let p = T::from_wire(v).ok_or_else(|| Error::Config(format!("bad probability for key `{k}`")))?;
            if dense.len() <= i {
                dense.resize(i + 1, T::zero());
            }
            dense[i] = p;
        }
        let law = Self::new(dense)?;
        for (field, value) in [
            ("mean", law.mean()),
            ("variance", law.variance()),
            ("third_moment", law.third_moment()),
        ] {
            if let Some(stored) = doc.get(field) {
                let stored = T::from_wire(stored).ok_or_else(|| Error::Config(format!("bad `{field}`")))?;
                if !stored.near(&value, SUM_TOL) {
                    return Err(Error::Config(format!(
                        "stored {field} {stored} disagrees with recomputed {value}"
                    )));
                }
            }
        }
        Ok(law)
    }
}

/// Near-critical member of `family` with mean exactly `1 + θ/n`.
pub fn near_critical_family<T: Scalar>(family: Family, theta: &T, n: u64) -> Result<OffspringLaw<T>> {
    if n == 0 {
        return Err(Error::Construction("n must be positive".into()));
    }
    let mean = T::one() + theta.clone() / T::from_u64(n);
    match family {
        Family::Binary => OffspringLaw::binary(mean),
        Family::GeometricTruncated { cap } => {
            if T::EXACT {
                return Err(Error::Construction(
                    "the truncated geometric family has irrational weights; use floating point".into(),
                ));
            }
            let probs = geometric_with_mean(mean.to_f64(), cap)?;
            OffspringLaw::new(probs.into_iter().map(|p| T::from_f64(p).expect("finite")).collect())
        }
    }
}

fn geometric_weights(log_r: f64, cap: usize) -> Vec<f64> {
    // normalise in log space so large |log r| cannot overflow
    let shift = if log_r > 0.0 { log_r * cap as f64 } else { 0.0 };
    let raw: Vec<f64> = (0..=cap).map(|i| (log_r * i as f64 - shift).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn geometric_with_mean(mean: f64, cap: usize) -> Result<Vec<f64>> {
    if cap < 1 || !(mean > 0.0) || mean >= cap as f64 {
        return Err(Error::Construction(format!(
            "truncated geometric on 0..={cap} cannot have mean {mean}"
        )));
    }
    let mean_of = |lr: f64| -> f64 {
        geometric_weights(lr, cap)
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * p)
            .sum()
    };
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    if mean_of(lo) > mean || mean_of(hi) < mean {
        return Err(Error::Construction(format!(
            "mean {mean} not attainable with cap {cap}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_of(mid) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut probs = geometric_weights(0.5 * (lo + hi), cap);
    // Put the residual rounding error of the mean on the top two atoms.
    let err = mean - probs.iter().enumerate().map(|(i, p)| i as f64 * p).sum::<f64>();
    if err != 0.0 {
        let shift = err;
        probs[cap] += shift;
        probs[cap - 1] -= shift;
        if probs[cap] < 0.0 || probs[cap - 1] < 0.0 {
            probs[cap] -= shift;
            probs[cap - 1] += shift;
        }
    }
    Ok(probs)
}

/// Smallest root in `[0, 1]` of `f(q) = q`, to absolute accuracy `tol`.
///
/// Returns exactly 1 when the mean is at most 1. Otherwise bisects on
/// `[0, 1 − ε₀]` and falls back to Newton from `q = 0` when the root sits
/// closer to 1 than `ε₀`. The equation is evaluated as `Q(s) = s` with
/// `s = 1 − q` so there is no cancellation near the critical point.
pub fn extinction_prob(law: &OffspringLaw<f64>, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    if law.mean() <= 1.0 {
        return Ok(1.0);
    }
    // g(q) = f(q) − q written through s = 1 − q: g = s − Q(s)
    let g = |q: f64| {
        let s = 1.0 - q;
        s - law.q_unchecked(&s)
    };
    let hi0 = 1.0 - EXTINCTION_EPS;
    if g(hi0) < 0.0 {
        let (mut lo, mut hi) = (0.0f64, hi0);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(0.5 * (lo + hi));
    }
    // Root within ε₀ of 1. g is convex and decreasing up to the root, so
    // Newton from the left converges monotonically.
    let dg = |q: f64| {
        let mut d = 0.0;
        for (i, p) in law.probs().iter().enumerate().skip(1).rev() {
            d = d * q + i as f64 * p;
        }
        d - 1.0
    };
    let mut q = 0.0f64;
    for _ in 0..10_000 {
        let step = g(q) / dg(q);
        if !step.is_finite() {
            break;
        }
        let next = (q - step).min(1.0);
        if (next - q).abs() < tol * 1e-3 {
            return Ok(next);
        }
        q = next;
    }
    Err(Error::Numerical("extinction root did not converge".into()))
}

/// Subcritical dual law: pgf `f(sq)/q` with `q` the extinction probability.
///
/// A supercritical Galton–Watson process conditioned on extinction has the law
/// of the process driven by the dual.
pub fn dual_law(law: &OffspringLaw<f64>) -> Result<OffspringLaw<f64>> {
    if law.mean() <= 1.0 {
        return Err(Error::Precondition(format!(
            "dual law needs a supercritical law, mean is {}",
            law.mean()
        )));
    }
    let q = extinction_prob(law, 1e-15)?;
    let probs = law
        .probs()
        .iter()
        .enumerate()
        .map(|(i, p)| p * q.powi(i as i32 - 1))
        .collect::<Vec<_>>();
    let total: f64 = probs.iter().sum();
    OffspringLaw::new(probs.into_iter().map(|p| p / total).collect())
}

/// Supercritical law whose dual is `law`, together with its extinction
/// probability. The pre-image's `q` is `1/r` where `r > 1` is the second fixed
/// point of the subcritical pgf.
pub fn dual_preimage(law: &OffspringLaw<f64>) -> Result<(OffspringLaw<f64>, f64)> {
    if law.mean() >= 1.0 || law.max_offspring() < 2 {
        return Err(Error::Precondition(
            "pre-image needs a subcritical law with mass on two or more children".into(),
        ));
    }
    let g = |r: f64| law.pgf_unchecked(&r) - r;
    let mut hi = 2.0f64;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numerical("no second fixed point found".into()));
        }
    }
    // g < 0 just right of 1 (slope mean − 1 < 0); find the first crossing.
    let mut lo = 1.0 + 1e-12;
    if g(lo) >= 0.0 {
        return Err(Error::Numerical("law too close to critical for a pre-image".into()));
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = 1.0 / (0.5 * (lo + hi));
    let probs: Vec<f64> = law
        .probs()
        .iter()
        .enumerate()
        .map(|(i, p)| p * q.powi(1 - i as i32))
        .collect();
    let total: f64 = probs.iter().sum();
    let pre = OffspringLaw::new(probs.into_iter().map(|p| p / total).collect())?;
    Ok((pre, q))
}

/// Mean-zero jump distribution supported on `[−R, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLaw<T: Scalar> {
    // probs[j] is the probability of offset j − R
    probs: Vec<T>,
    range: i64,
    variance: T,
}

impl<T: Scalar> StepLaw<T> {
    /// Builds a law from `(offset, probability)` pairs. Offsets not listed have
    /// probability zero.
    pub fn from_offsets(entries: &[(i64, T)]) -> Result<Self> {
        let range = entries.iter().map(|(o, _)| o.abs()).max().unwrap_or(0);
        let mut probs = vec![T::zero(); (2 * range + 1) as usize];
        for (o, p) in entries {
            let slot = &mut probs[(o + range) as usize];
            *slot = slot.clone() + p.clone();
        }
        Self::from_dense(probs)
    }

    fn from_dense(mut probs: Vec<T>) -> Result<Self> {
        if probs.len().is_multiple_of(2) {
            return Err(Error::Construction("dense step law needs odd length".into()));
        }
        // shrink to the true support
        while probs.len() > 1 && probs[0].is_zero_value() && probs[probs.len() - 1].is_zero_value() {
            probs.pop();
            probs.remove(0);
        }
        let range = (probs.len() as i64 - 1) / 2;
        let zero = T::zero();
        let one = T::one();
        let mut total = T::zero();
        let mut mean = T::zero();
        let mut second = T::zero();
        for (j, p) in probs.iter().enumerate() {
            if *p < zero || *p > one {
                return Err(Error::Construction(format!("step probability {p} outside [0, 1]")));
            }
            let off = T::from_ratio(j as i64 - range, 1);
            total = total + p.clone();
            mean = mean + p.clone() * off.clone();
            second = second + p.clone() * off.clone() * off;
        }
        if !total.near(&one, SUM_TOL) {
            return Err(Error::Construction(format!("step probabilities sum to {total}")));
        }
        if !mean.near(&zero, SUM_TOL) {
            return Err(Error::Construction(format!("step law has mean {mean}, expected 0")));
        }
        Ok(Self {
            probs,
            range,
            variance: second,
        })
    }

    /// Simple symmetric walk `a_{±1} = ½`.
    pub fn simple() -> Self {
        let half = T::from_ratio(1, 2);
        Self::from_offsets(&[(-1, half.clone()), (1, half)]).expect("valid")
    }

    /// Lazy walk: stay with probability `stay`, else ±1 evenly.
    pub fn lazy(stay: T) -> Result<Self> {
        let side = (T::one() - stay.clone()) / T::from_u64(2);
        Self::from_offsets(&[(-1, side.clone()), (0, stay), (1, side)])
    }

    /// Uniform on `{−R, …, R}`.
    pub fn uniform(range: i64) -> Result<Self> {
        if range < 0 {
            return Err(Error::Construction("range must be non-negative".into()));
        }
        let p = T::from_ratio(1, 2 * range + 1);
        Self::from_dense(vec![p; (2 * range + 1) as usize])
    }

    /// Point mass at 0. Accepted for trivial-case tests only; see [`Self::is_degenerate`].
    pub fn degenerate() -> Self {
        Self::from_dense(vec![T::one()]).expect("valid")
    }

    pub fn is_degenerate(&self) -> bool {
        self.variance.is_zero_value()
    }

    pub fn range(&self) -> i64 {
        self.range
    }
    pub fn variance(&self) -> T {
        self.variance.clone()
    }

    pub fn prob(&self, offset: i64) -> T {
        if offset.abs() > self.range {
            return T::zero();
        }
        self.probs[(offset + self.range) as usize].clone()
    }

    /// `(offset, probability)` for every offset with positive mass, ascending.
    pub fn support(&self) -> Vec<(i64, T)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero_value())
            .map(|(j, p)| (j as i64 - self.range, p.clone()))
            .collect()
    }

    /// The law of `−Y`.
    pub fn reflected(&self) -> Self {
        let mut probs = self.probs.clone();
        probs.reverse();
        Self {
            probs,
            range: self.range,
            variance: self.variance.clone(),
        }
    }

    pub fn to_f64(&self) -> StepLaw<f64> {
        StepLaw::from_dense(self.probs.iter().map(Scalar::to_f64).collect()).expect("valid")
    }

    /// `{"probs": {"-1": .., "1": ..}, "range": R, "variance": σ_R²}`.
    pub fn to_json(&self) -> Value {
        let mut probs = Map::new();
        for (o, p) in self.support() {
            probs.insert(o.to_string(), p.to_wire());
        }
        let mut doc = Map::new();
        doc.insert("probs".into(), Value::Object(probs));
        doc.insert("range".into(), Value::from(self.range));
        doc.insert("variance".into(), self.variance.to_wire());
        Value::Object(doc)
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let probs = doc
            .get("probs")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Config("step law document lacks `probs`".into()))?;
        let mut entries = Vec::with_capacity(probs.len());
        for (k, v) in probs {
            let o: i64 = k
                .parse()
                .map_err(|_| Error::Config(format!("step offset key `{k}` is not an integer")))?;
            let p = T::from_wire(v).ok_or_else(|| Error::Config(format!("bad probability for offset `{k}`")))?;
            entries.push((o, p));
        }
        Self::from_offsets(&entries)
    }
}

impl StepLaw<f64> {
    /// `Σ_z a_z e^{−γz}`.
    pub fn exp_moment(&self, gamma: f64) -> f64 {
        self.support().iter().map(|(z, a)| a * (-gamma * *z as f64).exp()).sum()
    }
}

/// Parameters of the `n`-particle near-critical system.
#[derive(Debug, Clone, PartialEq)]
pub struct BrwParams<T: Scalar> {
    pub n: u64,
    pub theta: T,
    pub offspring: OffspringLaw<T>,
    pub step: StepLaw<T>,
}

impl<T: Scalar> BrwParams<T> {
    pub fn new(n: u64, theta: T, offspring: OffspringLaw<T>, step: StepLaw<T>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Construction("n must be positive".into()));
        }
        let expected = T::one() + theta.clone() / T::from_u64(n);
        if !offspring.mean().near(&expected, SUM_TOL) {
            return Err(Error::Construction(format!(
                "offspring mean {} differs from 1 + θ/n = {expected}",
                offspring.mean()
            )));
        }
        Ok(Self {
            n,
            theta,
            offspring,
            step,
        })
    }

    /// Family member with mean `1 + θ/n` and the given step law.
    pub fn from_family(family: Family, theta: T, n: u64, step: StepLaw<T>) -> Result<Self> {
        let offspring = near_critical_family(family, &theta, n)?;
        Self::new(n, theta, offspring, step)
    }

    /// Binary offspring with the simple ±1 walk: σ² → 1, σ_R² = 1.
    pub fn binary_simple(theta: T, n: u64) -> Result<Self> {
        Self::from_family(Family::Binary, theta, n, StepLaw::simple())
    }

    pub fn to_f64(&self) -> BrwParams<f64> {
        BrwParams {
            n: self.n,
            theta: self.theta.to_f64(),
            offspring: self.offspring.to_f64(),
            step: self.step.to_f64(),
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "n": self.n,
            "theta": self.theta.to_wire(),
            "offspring": self.offspring.to_json(),
            "step": self.step.to_json(),
        })
    }
}
