//! Finite-difference solver for
//!
//! ```text
//! φ_t = (σ_R²/2) φ_xx + θφ − (σ²/2) φ²,   φ(0, x) = 0,
//! φ(t, x_min) = cap,  φ(t, x_max) = 0,
//! ```
//!
//! the half-line problem with an infinite boundary value at `x = 0`, truncated
//! to `[x_min, x_max]` with a finite boundary value. Coefficients are kept in
//! physical units; no rescaling of `x` or `φ` is applied.

use std::io::Write;

use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Spatial and temporal grid. `dt = None` picks a stable default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub t_max: f64,
    pub dt: Option<f64>,
    /// Spacing of stored time slices.
    pub snapshot_every: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, dx: f64, t_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            dx,
            t_max,
            dt: None,
            snapshot_every: (t_max / 200.0).max(dx),
        }
    }
}

/// How the value at `x_min` stands in for the infinite boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCap {
    /// The two-term small-`x` expansion of the stationary profile,
    /// `6σ_R²/(σ² x_min²) + (2θ⁺ − |θ|)/σ²`.
    Matched,
    Fixed(f64),
    /// Solve with `start, 2·start, 4·start, …` until the sup-norm change on
    /// `x ≥ interior_from` at `t_max` drops below `tol`.
    Doubling {
        start: f64,
        tol: f64,
        max_doublings: u32,
        interior_from: f64,
    },
}

impl BoundaryCap {
    /// Doubling from 10³ to a 10⁻⁶ interior change.
    pub fn doubling_default(interior_from: f64) -> Self {
        BoundaryCap::Doubling {
            start: 1e3,
            tol: 1e-6,
            max_doublings: 12,
            interior_from,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Forward Euler, default `dt = 0.4·dx²/σ_R²`.
    Explicit,
    /// Crank–Nicolson diffusion with the reaction rate lagged one step,
    /// default `dt = 2·dx²/σ_R²`.
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkppProblem {
    pub theta: f64,
    pub sigma2: f64,
    pub sigma_r2: f64,
    pub grid: Grid,
    pub boundary: BoundaryCap,
    pub scheme: Scheme,
}

impl FkppProblem {
    /// Explicit scheme with the matched boundary value.
    pub fn new(theta: f64, sigma2: f64, sigma_r2: f64, grid: Grid) -> Self {
        Self {
            theta,
            sigma2,
            sigma_r2,
            grid,
            boundary: BoundaryCap::Matched,
            scheme: Scheme::Explicit,
        }
    }

    fn validate(&self) -> Result<()> {
        let g = &self.grid;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.sigma2 > 0.0) || !(self.sigma_r2 > 0.0) || !self.theta.is_finite() {
            return bad("need finite θ and positive σ², σ_R²");
        }
        if !(g.dx > 0.0) || !(g.x_min > 0.0) || !(g.x_max > g.x_min + 2.0 * g.dx) {
            return bad("grid needs 0 < x_min, dx > 0 and at least three nodes");
        }
        if !(g.t_max >= 0.0) || !(g.snapshot_every > 0.0) {
            return bad("t_max must be non-negative and snapshot spacing positive");
        }
        if let Some(dt) = g.dt {
            if !(dt > 0.0) {
                return bad("dt must be positive");
            }
        }
        Ok(())
    }

    fn matched_cap(&self) -> f64 {
        let x = self.grid.x_min;
        6.0 * self.sigma_r2 / (self.sigma2 * x * x) + (2.0 * self.theta.max(0.0) - self.theta.abs()) / self.sigma2
    }

    fn explicit_limit(&self, cap: f64) -> f64 {
        let g = &self.grid;
        1.0 / (self.sigma_r2 / (g.dx * g.dx) + self.theta.abs() + 0.5 * self.sigma2 * cap)
    }

    fn step_size(&self, cap: f64) -> Result<f64> {
        let g = &self.grid;
        let diffusive = g.dx * g.dx / self.sigma_r2;
        match (self.scheme, g.dt) {
            (Scheme::Explicit, Some(dt)) => {
                if dt > diffusive || dt > self.explicit_limit(cap) {
                    return Err(Error::Config(format!(
                        "dt = {dt} violates the explicit stability bound min(dx²/σ_R², {:.3e}) for cap {cap}",
                        self.explicit_limit(cap)
                    )));
                }
                Ok(dt)
            }
            (Scheme::Explicit, None) => Ok((0.4 * diffusive).min(0.9 * self.explicit_limit(cap))),
            (Scheme::CrankNicolson, Some(dt)) => Ok(dt),
            (Scheme::CrankNicolson, None) => Ok(2.0 * diffusive),
        }
    }
}

/// Numerical `φ` on the grid, stored at snapshot times.
#[derive(Debug, Clone, PartialEq)]
pub struct FkppSolution {
    pub problem: FkppProblem,
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[i][j] = φ(times[i], xs[j])`.
    pub values: Vec<Vec<f64>>,
    pub dt: f64,
    pub cap_used: f64,
    /// `(cap, sup change against the previous cap)`; one entry per solve.
    pub cap_history: Vec<(f64, f64)>,
    pub cap_converged: bool,
    /// Sup-norm change between the last two caps, 0 for a single solve.
    pub residual_norm: f64,
    pub monotone_t: bool,
    pub monotone_x: bool,
}

impl FkppSolution {
    /// Bilinear interpolation; `None` outside the grid.
    pub fn eval(&self, t: f64, x: f64) -> Option<f64> {
        let g = &self.problem.grid;
        if !(x >= g.x_min - 1e-12)
            || !(x <= g.x_max + 1e-12)
            || !(t >= 0.0)
            || t > self.times[self.times.len() - 1] + 1e-12
        {
            return None;
        }
        let xi = ((x - g.x_min) / g.dx).clamp(0.0, (self.xs.len() - 1) as f64);
        let j = (xi.floor() as usize).min(self.xs.len() - 2);
        let fx = xi - j as f64;
        let i = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            p => (p - 1).min(self.times.len().saturating_sub(2)),
        };
        let at = |row: &[f64]| row[j] * (1.0 - fx) + row[j + 1] * fx;
        if self.times.len() == 1 {
            return Some(at(&self.values[0]));
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let ft = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        Some(at(&self.values[i]) * (1.0 - ft) + at(&self.values[i + 1]) * ft)
    }

    /// Last stored slice.
    pub fn final_values(&self) -> &[f64] {
        &self.values[self.values.len() - 1]
    }

    /// CSV `t,x,phi` over all stored slices.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "x", "phi"])?;
        for (t, row) in self.times.iter().zip(&self.values) {
            for (x, v) in self.xs.iter().zip(row) {
                wtr.write_record([format!("{t:.16e}"), format!("{x:.16e}"), format!("{v:.16e}")])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Grid, scheme, boundary handling and convergence diagnostics.
    pub fn header_json(&self) -> Value {
        let p = &self.problem;
        let g = &p.grid;
        json!({
            "equation": "phi_t = (sigma_r2/2) phi_xx + theta phi - (sigma2/2) phi^2",
            "units": "physical; no rescaling of x or phi",
            "theta": p.theta,
            "sigma2": p.sigma2,
            "sigma_r2": p.sigma_r2,
            "grid": { "x_min": g.x_min, "x_max": g.x_max, "dx": g.dx, "t_max": g.t_max, "dt": self.dt },
            "scheme": format!("{:?}", p.scheme),
            "boundary": format!("{:?}", p.boundary),
            "cap_used": self.cap_used,
            "cap_history": self.cap_history.iter().map(|(c, d)| json!({"cap": c, "sup_change": d})).collect::<Vec<_>>(),
            "cap_converged": self.cap_converged,
            "residual_norm": self.residual_norm,
            "monotone_t": self.monotone_t,
            "monotone_x": self.monotone_x,
        })
    }
}

/// Solves with a right-hand side observer called after every time step with
/// `(t, φ)`.
pub fn solve_fkpp_observed(problem: &FkppProblem, mut observe: impl FnMut(f64, &[f64])) -> Result<FkppSolution> {
    problem.validate()?;
    match problem.boundary {
        BoundaryCap::Matched => {
            let cap = problem.matched_cap();
            solve_once(problem, cap, &mut observe).map(|s| finish(s, vec![(cap, 0.0)], true, 0.0))
        }
        BoundaryCap::Fixed(cap) => {
            if !(cap > 0.0) {
                return Err(Error::Config("boundary cap must be positive".into()));
            }
            solve_once(problem, cap, &mut observe).map(|s| finish(s, vec![(cap, 0.0)], true, 0.0))
        }
        BoundaryCap::Doubling {
            start,
            tol,
            max_doublings,
            interior_from,
        } => {
            if !(start > 0.0) || !(tol > 0.0) {
                return Err(Error::Config("doubling needs a positive start and tolerance".into()));
            }
            let mut cap = start;
            let mut prev = solve_once(problem, cap, &mut |_, _| {})?;
            let mut history = vec![(cap, f64::INFINITY)];
            let first = prev.xs.partition_point(|&x| x < interior_from);
            for _ in 0..max_doublings {
                cap *= 2.0;
                let next = solve_once(problem, cap, &mut |_, _| {})?;
                let change = next.final_values()[first..]
                    .iter()
                    .zip(&prev.final_values()[first..])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                history.push((cap, change));
                prev = next;
                if change < tol {
                    let last = solve_once(problem, cap, &mut observe)?;
                    return Ok(finish(last, history, true, change));
                }
            }
            let change = history.last().map(|h| h.1).unwrap_or(0.0);
            let last = solve_once(problem, cap, &mut observe)?;
            Ok(finish(last, history, false, change))
        }
    }
}

pub fn solve_fkpp(problem: &FkppProblem) -> Result<FkppSolution> {
    solve_fkpp_observed(problem, |_, _| {})
}

fn finish(mut s: FkppSolution, history: Vec<(f64, f64)>, converged: bool, residual: f64) -> FkppSolution {
    s.cap_history = history;
    s.cap_converged = converged;
    s.residual_norm = residual;
    s
}

fn solve_once(problem: &FkppProblem, cap: f64, observe: &mut dyn FnMut(f64, &[f64])) -> Result<FkppSolution> {
    let g = &problem.grid;
    let nodes = ((g.x_max - g.x_min) / g.dx + 1e-9).floor() as usize + 1;
    let xs: Vec<f64> = (0..nodes).map(|j| g.x_min + j as f64 * g.dx).collect();
    let dt_target = problem.step_size(cap)?;
    let steps = if g.t_max == 0.0 {
        0
    } else {
        (g.t_max / dt_target).ceil() as usize
    };
    let dt = if steps == 0 { dt_target } else { g.t_max / steps as f64 };

    let mut phi = vec![0.0f64; nodes];
    phi[0] = cap;
    let mut scratch = vec![0.0f64; nodes];
    let mut times = vec![0.0];
    let mut values = vec![phi.clone()];
    // the stored t = 0 slice uses φ(0, x) = 0 in the interior
    let mut next_snapshot = g.snapshot_every;

    let d = problem.sigma_r2 / (2.0 * g.dx * g.dx);
    let (theta, half_s2) = (problem.theta, 0.5 * problem.sigma2);
    let mut tri = Tridiagonal::new(nodes);

    for s in 1..=steps {
        match problem.scheme {
            Scheme::Explicit => {
                scratch[0] = cap;
                scratch[nodes - 1] = 0.0;
                for j in 1..nodes - 1 {
                    let p = phi[j];
                    let lap = phi[j + 1] - 2.0 * p + phi[j - 1];
                    scratch[j] = p + dt * (d * lap + theta * p - half_s2 * p * p);
                }
                std::mem::swap(&mut phi, &mut scratch);
            }
            Scheme::CrankNicolson => {
                let h = 0.5 * dt;
                for j in 1..nodes - 1 {
                    let r = theta - half_s2 * phi[j];
                    tri.lower[j] = -h * d;
                    tri.upper[j] = -h * d;
                    tri.diag[j] = 1.0 + 2.0 * h * d - h * r;
                    tri.rhs[j] = phi[j] * (1.0 - 2.0 * h * d + h * r) + h * d * (phi[j + 1] + phi[j - 1]);
                }
                tri.diag[0] = 1.0;
                tri.upper[0] = 0.0;
                tri.rhs[0] = cap;
                tri.diag[nodes - 1] = 1.0;
                tri.lower[nodes - 1] = 0.0;
                tri.rhs[nodes - 1] = 0.0;
                tri.solve_into(&mut phi);
            }
        }
        let t = s as f64 * dt;
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite φ at t = {t}")));
        }
        observe(t, &phi);
        if t + 1e-12 >= next_snapshot || s == steps {
            times.push(t);
            values.push(phi.clone());
            while next_snapshot <= t + 1e-12 {
                next_snapshot += g.snapshot_every;
            }
        }
    }

    let tol = 1e-12;
    let monotone_t = values
        .windows(2)
        .all(|w| w[1].iter().zip(&w[0]).all(|(b, a)| *b >= *a - tol * (1.0 + a.abs())));
    let monotone_x = values
        .iter()
        .all(|row| row.windows(2).all(|p| p[1] <= p[0] + tol * (1.0 + p[0].abs())));
    Ok(FkppSolution {
        problem: *problem,
        xs,
        times,
        values,
        dt,
        cap_used: cap,
        cap_history: Vec::new(),
        cap_converged: true,
        residual_norm: 0.0,
        monotone_t,
        monotone_x,
    })
}

struct Tridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    c: Vec<f64>,
}

impl Tridiagonal {
    fn new(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            rhs: vec![0.0; n],
            c: vec![0.0; n],
        }
    }

    // Thomas algorithm; the matrix is diagonally dominant here.
    fn solve_into(&mut self, out: &mut [f64]) {
        let n = self.diag.len();
        self.c[0] = self.upper[0] / self.diag[0];
        out[0] = self.rhs[0] / self.diag[0];
        for i in 1..n {
            let m = self.diag[i] - self.lower[i] * self.c[i - 1];
            self.c[i] = self.upper[i] / m;
            out[i] = (self.rhs[i] - self.lower[i] * out[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            out[i] -= self.c[i] * out[i + 1];
        }
    }
}

/// `sup_x [ln φ(t, x) + x²/(2σ_R²(1+ε)t) − θt]` over the outer quarter of the
/// grid at the stored slice nearest `t`. Nodes where `φ` underflows to 0 are
/// skipped. Returns `None` when no node qualifies.
pub fn gaussian_rate_excess(sol: &FkppSolution, eps: f64, t: f64) -> Option<f64> {
    let p = &sol.problem;
    let i = sol
        .times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
        .0;
    let t = sol.times[i];
    if t <= 0.0 {
        return None;
    }
    let x_cut = p.grid.x_min + 0.75 * (p.grid.x_max - p.grid.x_min);
    sol.xs
        .iter()
        .zip(&sol.values[i])
        .filter(|(x, v)| **x >= x_cut && **v > 0.0)
        .map(|(x, v)| v.ln() + x * x / (2.0 * p.sigma_r2 * (1.0 + eps) * t) - p.theta * t)
        .reduce(f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::psi::PsiClosedForm;

    fn grid(x_max: f64, dx: f64, t_max: f64) -> Grid {
        Grid::new(0.1, x_max, dx, t_max)
    }

    #[test]
    fn initial_slice_is_zero() {
        let sol = solve_fkpp(&FkppProblem::new(0.0, 1.0, 1.0, grid(4.0, 0.05, 0.1))).unwrap();
        assert_eq!(sol.times[0], 0.0);
        assert!(sol.values[0][1..].iter().all(|v| *v == 0.0));
        assert_eq!(sol.eval(0.0, 2.0), Some(0.0));
        assert!(sol.monotone_t && sol.monotone_x);
    }

    #[test]
    fn relaxes_to_closed_form() {
        let sol = solve_fkpp(&FkppProblem::new(-1.0, 1.0, 1.0, grid(8.0, 0.02, 8.0))).unwrap();
        let psi = PsiClosedForm::new(-1.0, 1.0, 1.0).unwrap();
        for x in [0.5, 1.0, 1.5, 2.0] {
            let ratio = sol.eval(8.0, x).unwrap() / psi.eval(x).unwrap();
            assert!((ratio - 1.0).abs() < 0.02, "x={x}: {ratio}");
        }
    }

    #[test]
    fn stability_violation_is_a_config_error() {
        let mut g = grid(4.0, 0.05, 0.1);
        g.dt = Some(0.01);
        assert!(matches!(
            solve_fkpp(&FkppProblem::new(0.0, 1.0, 1.0, g)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn crank_nicolson_agrees_with_explicit() {
        let mut p = FkppProblem::new(1.0, 1.0, 1.0, grid(6.0, 0.02, 1.0));
        let a = solve_fkpp(&p).unwrap();
        p.scheme = Scheme::CrankNicolson;
        let b = solve_fkpp(&p).unwrap();
        for x in [0.5, 1.0, 2.0, 3.0] {
            let (u, v) = (a.eval(1.0, x).unwrap(), b.eval(1.0, x).unwrap());
            assert!(((u - v) / u).abs() < 0.01, "x={x}: {u} vs {v}");
        }
    }

    #[test]
    fn doubling_reports_history() {
        let mut p = FkppProblem::new(0.0, 1.0, 1.0, grid(4.0, 0.05, 0.2));
        p.boundary = BoundaryCap::Doubling {
            start: 100.0,
            tol: 1e-6,
            max_doublings: 2,
            interior_from: 1.0,
        };
        let sol = solve_fkpp(&p).unwrap();
        assert_eq!(sol.cap_history.len(), 3);
        assert_eq!(sol.cap_used, 400.0);
        assert!(sol.residual_norm > 0.0);
    }

    #[test]
    fn csv_and_header() {
        let sol = solve_fkpp(&FkppProblem::new(0.0, 1.0, 1.0, grid(1.0, 0.25, 0.0))).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,phi\n"));
        assert_eq!(sol.header_json()["units"], json!("physical; no rescaling of x or phi"));
    }
}
