//! Tail probabilities of the maximal displacement by dynamic programming.
//!
//! `w_k(x) = P₁(M_k ≥ x)` obeys the one-generation recursion
//! `w_k(x) = Σ_y a_y Q(w_{k−1}(x − y))` with the plug-in convention
//! `w_{k−1}(z) = 1` for `z ≤ 0`. Rows live on sites `1..=x_max`; sites beyond
//! `x_max` are treated as 0, which is exact while `x_max ≥ R·k`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::BrwParams;
use crate::par;
use crate::scalar::Scalar;

/// Default memory budget for a full [`TailTable`].
pub const DEFAULT_TABLE_BUDGET_BYTES: usize = 1 << 30;

/// Default fixed-point tolerance on the sup-norm change between rows.
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-12;

/// Default total work of a fixed-point run, in site updates; the iteration cap
/// is this divided by `x_max`.
pub const DEFAULT_FIXED_POINT_WORK: u64 = 1_000_000_000;

// Rows shorter than this are not worth a parallel split.
const PAR_MIN_WORK: usize = 8192;

/// Lattice site `⌈√n·x⌉` used when comparing against scaling limits.
pub fn lattice_site(n: u64, x: f64) -> i64 {
    ((n as f64).sqrt() * x - 1e-9).ceil() as i64
}

/// Generation count `⌊n·t⌋`.
pub fn lattice_generations(n: u64, t: f64) -> usize {
    (n as f64 * t + 1e-9).floor().max(0.0) as usize
}

/// `u = 1 − (1 − w)ⁿ`, the tail for `n` independent initial particles.
///
/// Evaluated as `−expm1(n·ln(1 − w))` so that `u ≈ n·w` keeps full relative
/// accuracy when `n·w` is small.
pub fn u_from_w(w: f64, n: u64) -> f64 {
    if w >= 1.0 {
        return 1.0;
    }
    if w <= 0.0 {
        return 0.0;
    }
    if n == 1 {
        return w;
    }
    -(n as f64 * (-w).ln_1p()).exp_m1()
}

/// One generation of the recursion. `prev[i]` is `w_{k−1}(i + 1)`.
pub fn w_step<T: Scalar>(prev: &[T], params: &BrwParams<T>) -> Vec<T> {
    let x_max = prev.len();
    let law = &params.offspring;
    let q_one = law.q_unchecked(&T::one());
    let q_prev: Vec<T> = if T::EXACT || x_max < PAR_MIN_WORK {
        prev.iter().map(|w| law.q_unchecked(w)).collect()
    } else {
        par::map_indexed_chunked(x_max, 1024, |i| law.q_unchecked(&prev[i]))
    };
    let support = params.step.support();
    let body = |i: usize| -> T {
        let x = i as i64 + 1;
        let mut acc = T::zero();
        for (y, a) in &support {
            let z = x - y;
            let q = if z <= 0 {
                &q_one
            } else if z as usize > x_max {
                continue;
            } else {
                &q_prev[(z - 1) as usize]
            };
            acc = acc + a.clone() * q.clone();
        }
        acc
    };
    if T::EXACT {
        par::map_indexed(x_max, body)
    } else if x_max * support.len() < PAR_MIN_WORK {
        (0..x_max).map(body).collect()
    } else {
        par::map_indexed_chunked(x_max, 1024, body)
    }
}

/// Dense table of `w_k(x)` for `0 ≤ k ≤ k_max`, `1 ≤ x ≤ x_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailTable<T: Scalar> {
    params: BrwParams<T>,
    k_max: usize,
    x_max: usize,
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> TailTable<T> {
    pub fn params(&self) -> &BrwParams<T> {
        &self.params
    }
    pub fn k_max(&self) -> usize {
        self.k_max
    }
    pub fn x_max(&self) -> usize {
        self.x_max
    }
    /// `w_k` on sites `1..=x_max`.
    pub fn row(&self, k: usize) -> &[T] {
        &self.rows[k]
    }

    /// `w_k(x)` for any integer `x`: 1 at `x ≤ 0`, 0 beyond `x_max`.
    ///
    /// # Panics
    /// If `k > k_max`.
    pub fn w(&self, k: usize, x: i64) -> T {
        assert!(k <= self.k_max, "generation {k} beyond table depth {}", self.k_max);
        if x <= 0 {
            T::one()
        } else if x as usize > self.x_max {
            T::zero()
        } else {
            self.rows[k][(x - 1) as usize].clone()
        }
    }

    /// Whether `w_k(x)` is exact at every `x` for every stored `k`, i.e. the
    /// truncation at `x_max` never cut off reachable sites.
    pub fn covers_range(&self) -> bool {
        self.x_max as i64 >= self.params.step.range() * self.k_max as i64
    }

    /// `1 − (1 − w_k(x))ⁿ` for the table's `n`.
    pub fn u(&self, k: usize, x: i64) -> f64 {
        u_from_w(self.w(k, x).to_f64(), self.params.n)
    }

    /// CSV with header `k,x,w,u`, one row per cell, 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["k", "x", "w", "u"])?;
        for (k, row) in self.rows.iter().enumerate() {
            for (i, w) in row.iter().enumerate() {
                let wf = w.to_f64();
                wtr.write_record([
                    k.to_string(),
                    (i + 1).to_string(),
                    format!("{wf:.16e}"),
                    format!("{:.16e}", u_from_w(wf, self.params.n)),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

fn bytes_per_value<T: Scalar>() -> usize {
    // rationals grow with k; 64 bytes is a floor, not a bound
    if T::EXACT {
        64
    } else {
        std::mem::size_of::<T>()
    }
}

/// Full table under [`DEFAULT_TABLE_BUDGET_BYTES`].
pub fn w_table<T: Scalar>(params: &BrwParams<T>, k_max: usize, x_max: usize) -> Result<TailTable<T>> {
    w_table_with_budget(params, k_max, x_max, DEFAULT_TABLE_BUDGET_BYTES)
}

pub fn w_table_with_budget<T: Scalar>(
    params: &BrwParams<T>,
    k_max: usize,
    x_max: usize,
    budget_bytes: usize,
) -> Result<TailTable<T>> {
    if x_max == 0 {
        return Err(Error::Precondition("x_max must be at least 1".into()));
    }
    let need = (k_max + 1)
        .checked_mul(x_max)
        .and_then(|c| c.checked_mul(bytes_per_value::<T>()))
        .ok_or_else(|| Error::Resource("table size overflows".into()))?;
    if need > budget_bytes {
        return Err(Error::Resource(format!(
            "table of {} x {x_max} needs about {need} bytes, budget is {budget_bytes}",
            k_max + 1
        )));
    }
    let mut rows = Vec::with_capacity(k_max + 1);
    rows.push(vec![T::zero(); x_max]);
    for k in 1..=k_max {
        let next = w_step(&rows[k - 1], params);
        rows.push(next);
    }
    Ok(TailTable {
        params: params.clone(),
        k_max,
        x_max,
        rows,
    })
}

/// Only the row `w_k`, keeping two rows in memory.
pub fn w_row<T: Scalar>(params: &BrwParams<T>, k: usize, x_max: usize) -> Vec<T> {
    let mut row = vec![T::zero(); x_max];
    for _ in 0..k {
        row = w_step(&row, params);
    }
    row
}

/// Rows `w_k` for each requested `k` (ascending), sharing one sweep.
pub fn w_rows_at<T: Scalar>(params: &BrwParams<T>, ks: &[usize], x_max: usize) -> Vec<Vec<T>> {
    let mut order: Vec<usize> = (0..ks.len()).collect();
    order.sort_by_key(|&i| ks[i]);
    let mut out = vec![Vec::new(); ks.len()];
    let mut row = vec![T::zero(); x_max];
    let mut k = 0;
    for i in order {
        while k < ks[i] {
            row = w_step(&row, params);
            k += 1;
        }
        out[i] = row.clone();
    }
    out
}

/// All-time tail `w_∞(x) = P₁(sup_k M_k ≥ x)` on sites `1..=x_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFixedPoint {
    pub params: BrwParams<f64>,
    pub x_max: usize,
    /// `values[i]` is `w_∞(i + 1)`.
    pub values: Vec<f64>,
    pub iterations: u64,
    /// Sup-norm change of the last iteration.
    pub residual: f64,
    pub converged: bool,
}

impl TailFixedPoint {
    /// `w_∞(x)` with the same plug-in convention as [`TailTable::w`].
    pub fn w(&self, x: i64) -> f64 {
        if x <= 0 {
            1.0
        } else if x as usize > self.x_max {
            0.0
        } else {
            self.values[(x - 1) as usize]
        }
    }

    /// `n·w_∞(⌈√n·x⌉)`.
    pub fn scaled(&self, x: f64) -> f64 {
        self.params.n as f64 * self.w(lattice_site(self.params.n, x))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "w", "u"])?;
        for (i, w) in self.values.iter().enumerate() {
            wtr.write_record([
                (i + 1).to_string(),
                format!("{w:.16e}"),
                format!("{:.16e}", u_from_w(*w, self.params.n)),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Iterates [`w_step`] from `w_0 = 0` until the sup-norm change drops below
/// `tol` or `k_cap` iterations have run. The iterates increase to the limit,
/// so a capped run is still a valid lower bound; it is returned with
/// `converged = false`.
///
/// Sites beyond `x_max` are read as 0, so every iterate (and the limit) is a
/// lower bound for the untruncated value; the bias is confined to sites near
/// `x_max`.
///
/// `k_cap = None` uses `DEFAULT_FIXED_POINT_WORK / x_max`.
pub fn w_infinity(params: &BrwParams<f64>, x_max: usize, tol: f64, k_cap: Option<u64>) -> Result<TailFixedPoint> {
    if x_max == 0 {
        return Err(Error::Precondition("x_max must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let k_cap = k_cap.unwrap_or((DEFAULT_FIXED_POINT_WORK / x_max as u64).max(1));
    let mut row = vec![0.0f64; x_max];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < k_cap {
        let next = w_step(&row, params);
        residual = next.iter().zip(&row).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        row = next;
        iterations += 1;
        if residual < tol {
            break;
        }
    }
    Ok(TailFixedPoint {
        params: params.clone(),
        x_max,
        values: row,
        iterations,
        residual,
        converged: residual < tol,
    })
}
