//! Traveling wave `½f'' − ρf' + f − f² = 0`, `f(0) = 0`, `f(∞) = 1`, and the
//! lower bound it yields for the FKPP solution.
//!
//! The ODE is integrated for `u = 1 − f`, which keeps the decaying tail at full
//! relative precision: `u'' = 2ρu' + 2u − 2u²`. The connecting orbit is found by
//! shooting. A single shot loses the orbit after about ten units because the
//! unstable mode grows like `e^{(ρ+√(ρ²+2))x}`, so the shot is restarted every
//! few units: at each restart `u` is kept and `u'` is re-bisected.

use crate::error::{Error, Result};

// Length of one shooting segment.
const SEGMENT: f64 = 4.0;
// How far a trial trajectory may run before it must have declared itself.
const CLASSIFY_HORIZON: f64 = 80.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TravelingWave {
    pub rho: f64,
    pub x_max: f64,
    /// Integration step.
    pub h: f64,
    pub xs: Vec<f64>,
    /// `f` at `xs`.
    pub fs: Vec<f64>,
    /// `f'` at `xs`.
    pub dfs: Vec<f64>,
    /// `1 − f` at `xs`, kept separately for precision in the tail.
    pub us: Vec<f64>,
    /// Shooting slope `f'(0)`.
    pub initial_slope: f64,
    /// Least-squares slope of `ln(1 − f)` over `[x_max/2, x_max]`.
    pub decay_slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// `f` crossed 1: slope too large.
    Over,
    /// `f` turned down below 1: slope too small.
    Under,
}

#[inline]
fn rhs(rho: f64, u: f64, v: f64) -> (f64, f64) {
    (v, 2.0 * rho * v + 2.0 * u - 2.0 * u * u)
}

#[inline]
fn rk4(rho: f64, u: f64, v: f64, h: f64) -> (f64, f64) {
    let (a1, b1) = rhs(rho, u, v);
    let (a2, b2) = rhs(rho, u + 0.5 * h * a1, v + 0.5 * h * b1);
    let (a3, b3) = rhs(rho, u + 0.5 * h * a2, v + 0.5 * h * b2);
    let (a4, b4) = rhs(rho, u + h * a3, v + h * b3);
    (
        u + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        v + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
    )
}

fn classify(rho: f64, u0: f64, v0: f64, h: f64) -> Option<Shot> {
    let (mut u, mut v) = (u0, v0);
    let steps = (CLASSIFY_HORIZON / h).ceil() as usize;
    for _ in 0..steps {
        (u, v) = rk4(rho, u, v, h);
        if u < 0.0 {
            return Some(Shot::Over);
        }
        if v > 0.0 {
            return Some(Shot::Under);
        }
    }
    None
}

/// Bisects `v = u'` at fixed `u0` between an undershooting and an
/// overshooting value.
fn bisect(rho: f64, u0: f64, mut under: f64, mut over: f64, h: f64) -> Result<f64> {
    for _ in 0..2000 {
        let mid = 0.5 * (under + over);
        if mid == under || mid == over {
            break;
        }
        match classify(rho, u0, mid, h) {
            Some(Shot::Over) => over = mid,
            Some(Shot::Under) => under = mid,
            None => return Ok(mid),
        }
    }
    Ok(0.5 * (under + over))
}

/// Finds an overshooting `v` by doubling `|v|` from `start`.
fn expand_over(rho: f64, u0: f64, start: f64, h: f64) -> Result<f64> {
    let mut v = start;
    for _ in 0..200 {
        if classify(rho, u0, v, h) == Some(Shot::Over) {
            return Ok(v);
        }
        v *= 2.0;
    }
    Err(Error::Numerical(format!(
        "no overshooting slope found for ρ = {rho} at u = {u0}"
    )))
}

/// Finds an undershooting `v` by halving `|v|` from `start`.
fn expand_under(rho: f64, u0: f64, start: f64, h: f64) -> Result<f64> {
    let mut v = start;
    for _ in 0..200 {
        if classify(rho, u0, v, h) == Some(Shot::Under) {
            return Ok(v);
        }
        v *= 0.5;
    }
    Err(Error::Numerical(format!(
        "no undershooting slope found for ρ = {rho} at u = {u0}"
    )))
}

/// Solves for `f_ρ` on `[0, x_max]` with RK4 step `h` (default choice in
/// [`traveling_wave`] is `0.0025`, a quarter of a 0.01 sample spacing) and
/// checks `|1 − f(x_max)| < tol`.
pub fn traveling_wave_with_step(rho: f64, x_max: f64, tol: f64, h: f64) -> Result<TravelingWave> {
    if !(rho > 0.0 && rho < 2f64.sqrt()) {
        return Err(Error::Precondition(format!("need 0 < ρ < √2, got {rho}")));
    }
    if !(x_max > 2.0) || !(tol > 0.0) || !(h > 0.0) {
        return Err(Error::Precondition("need x_max > 2, tol > 0, h > 0".into()));
    }
    // u(0) = 1, u'(0) = −f'(0); slopes are negative
    let under0 = expand_under(rho, 1.0, -1e-3, h)?;
    let over0 = expand_over(rho, 1.0, -0.1, h)?;
    let mut v = bisect(rho, 1.0, under0, over0, h)?;
    let initial_slope = -v;

    let mut xs = vec![0.0];
    let mut us = vec![1.0];
    let mut vs = vec![v];
    let mut u = 1.0;
    let total_steps = (x_max / h).round() as usize;
    let seg_steps = ((SEGMENT / h).round() as usize).max(1);
    let mut step = 0;
    while step < total_steps {
        let n = seg_steps.min(total_steps - step);
        for _ in 0..n {
            (u, v) = rk4(rho, u, v, h);
            step += 1;
            let x = step as f64 * h;
            if u <= 0.0 || v > 0.0 {
                return Err(Error::Numerical(format!(
                    "shooting lost the orbit at x = {x:.3} (u = {u:e}, u' = {v:e})"
                )));
            }
            xs.push(x);
            us.push(u);
            vs.push(v);
        }
        if step < total_steps {
            // re-bisect u' at the current u; the orbit slope is near λ₋·u
            let under = expand_under(rho, u, v * 0.5, h)?;
            let over = expand_over(rho, u, v * 2.0, h)?;
            v = bisect(rho, u, under, over, h)?;
            *vs.last_mut().expect("non-empty") = v;
        }
    }
    let end_gap = *us.last().expect("non-empty");
    if !(end_gap.abs() < tol) {
        return Err(Error::Numerical(format!(
            "1 − f(x_max) = {end_gap:e} is not below tol = {tol:e}; increase x_max"
        )));
    }

    let half = x_max / 2.0;
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(&us)
        .filter(|(x, _)| **x >= half)
        .map(|(x, u)| (*x, u.ln()))
        .collect();
    let decay_slope = linear_slope(&pts);
    Ok(TravelingWave {
        rho,
        x_max,
        h,
        fs: us.iter().map(|u| 1.0 - u).collect(),
        dfs: vs.iter().map(|v| -v).collect(),
        xs,
        us,
        initial_slope,
        decay_slope,
    })
}

/// [`traveling_wave_with_step`] with `h = 0.0025`.
pub fn traveling_wave(rho: f64, x_max: f64, tol: f64) -> Result<TravelingWave> {
    traveling_wave_with_step(rho, x_max, tol, 0.0025)
}

fn linear_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

impl TravelingWave {
    /// `f_ρ(ξ)`: 0 for `ξ ≤ 0`, cubic Hermite inside the samples, and the
    /// fitted exponential tail beyond `x_max`.
    pub fn eval(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        let last = self.xs.len() - 1;
        if xi >= self.xs[last] {
            return 1.0 - self.us[last] * (self.decay_slope * (xi - self.xs[last])).exp();
        }
        let i = ((xi / self.h) as usize).min(last - 1);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let dx = x1 - x0;
        let s = (xi - x0) / dx;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.fs[i] + h10 * dx * self.dfs[i] + h01 * self.fs[i + 1] + h11 * dx * self.dfs[i + 1]
    }

    /// `ρ − √(ρ² + 2)`, the decay rate of `1 − f_ρ`.
    pub fn predicted_decay(&self) -> f64 {
        self.rho - (self.rho * self.rho + 2.0).sqrt()
    }
}

/// `(2θ/σ²)·f_ρ((ρθt − √θ·x/σ_R)⁺)`, a lower bound for `φ(t, x)` when `θ > 0`.
pub fn corollary_lower_bound(
    theta: f64,
    wave: &TravelingWave,
    sigma2: f64,
    sigma_r2: f64,
    t: f64,
    x: f64,
) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::Precondition(format!("the wave bound needs θ > 0, got {theta}")));
    }
    let arg = wave.rho * theta * t - theta.sqrt() * x / sigma_r2.sqrt();
    Ok(2.0 * theta / sigma2 * wave.eval(arg.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        let w = traveling_wave(1.0, 30.0, 1e-8).unwrap();
        assert_eq!(w.eval(0.0), 0.0);
        assert_eq!(w.fs[0], 0.0);
        assert!((1.0 - w.eval(30.0)).abs() < 1e-8);
        assert!(w.fs.windows(2).all(|p| p[1] > p[0]));
        assert!(w.fs.iter().all(|f| (0.0..=1.0).contains(f)));
    }

    #[test]
    fn decay_rate() {
        for rho in [0.5, 1.0] {
            let w = traveling_wave(rho, 30.0, 1e-6).unwrap();
            let target = w.predicted_decay();
            assert!(
                ((w.decay_slope - target) / target).abs() < 0.02,
                "ρ={rho}: {}",
                w.decay_slope
            );
        }
    }

    #[test]
    fn hermite_matches_samples() {
        let w = traveling_wave(1.0, 20.0, 1e-5).unwrap();
        for i in [1usize, 17, 400, 3000] {
            assert!((w.eval(w.xs[i]) - w.fs[i]).abs() < 1e-12);
        }
        assert!(w.eval(25.0) > w.eval(20.0) && w.eval(25.0) < 1.0);
    }

    #[test]
    fn preconditions() {
        assert!(traveling_wave(1.5, 30.0, 1e-6).is_err());
        assert!(traveling_wave(0.0, 30.0, 1e-6).is_err());
        assert!(matches!(traveling_wave(0.5, 6.0, 1e-12), Err(Error::Numerical(_))));
        let w = traveling_wave(1.0, 20.0, 1e-5).unwrap();
        assert!(corollary_lower_bound(0.0, &w, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn lower_bound_values() {
        let w = traveling_wave(1.0, 30.0, 1e-8).unwrap();
        assert_eq!(corollary_lower_bound(1.0, &w, 1.0, 1.0, 0.5, 1.0).unwrap(), 0.0);
        let far = corollary_lower_bound(1.0, &w, 1.0, 1.0, 1000.0, 1.0).unwrap();
        assert!((far - 2.0).abs() < 1e-9);
        let v = corollary_lower_bound(1.0, &w, 1.0, 1.0, 10.0, 1.0).unwrap();
        assert!((v - 2.0 * w.eval(9.0)).abs() < 1e-15);
    }
}
