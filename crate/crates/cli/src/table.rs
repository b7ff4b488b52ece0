use brw_core::exact::{lattice_generations, lattice_site, w_infinity, w_rows_at};
use brw_core::model::BrwParams;
use brw_core::pde::{solve_fkpp, FkppProblem, Grid};
use serde_json::{json, Value};

use crate::config::{TableCfg, TableKind};
use crate::report::{csv_rows, num, Check, CliError, Report};
use crate::run::{default_fixed_point_sites, limit_profile, Context};

fn rel_error(value: f64, target: f64) -> f64 {
    if value == 0.0 && target == 0.0 {
        0.0
    } else {
        (value - target).abs() / target.abs()
    }
}

/// Scaled exact values against their limit for each `n`; every `x` must show a
/// decreasing relative error.
pub fn convergence_table(ctx: &Context, tc: &TableCfg) -> Result<u8, CliError> {
    if tc.n_list.is_empty() || tc.n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::field(
            "table.n_list",
            "n_list must be non-empty and strictly increasing",
        ));
    }
    if tc.x_list.iter().any(|x| !(*x > 0.0)) {
        return Err(CliError::field("table.x_list", "x values must be positive"));
    }
    let theta = if tc.kind == TableKind::CriticalTail {
        0.0
    } else {
        tc.theta
    };
    let t = match tc.kind {
        TableKind::FkppLimit => Some(*ctx.config.require(&tc.t, "table.t")?),
        _ => None,
    };
    if t.is_some_and(|t| !(t >= 0.0)) {
        return Err(CliError::field("table.t", "t must be non-negative"));
    }

    // targets do not depend on n
    let targets: Vec<(f64, &'static str)> = match tc.kind {
        TableKind::FkppLimit => {
            let t = t.unwrap_or(0.0);
            let x_hi = tc.x_list.iter().cloned().fold(0.0, f64::max);
            let mut grid = Grid::new(0.1, (2.0 * x_hi + 2.0).max(8.0), tc.dx, t);
            grid.snapshot_every = t.max(tc.dx);
            let sol = solve_fkpp(&FkppProblem::new(theta, 1.0, 1.0, grid))?;
            tc.x_list
                .iter()
                .map(|&x| {
                    sol.eval(t, x)
                        .map(|v| (v, "numerical limit"))
                        .ok_or_else(|| CliError::field("table.x_list", format!("x = {x} is outside the PDE grid")))
                })
                .collect::<Result<_, _>>()?
        }
        _ => tc
            .x_list
            .iter()
            .map(|&x| limit_profile(theta, 1.0, 1.0, x))
            .collect::<Result<_, _>>()?,
    };

    let mut report = Report::new(&ctx.out, tc.kind.name())?;
    let mut errors = vec![Vec::new(); tc.x_list.len()];
    let mut rows = Vec::new();
    for &n in &tc.n_list {
        let p = BrwParams::binary_simple(theta, n)?;
        let values: Vec<f64> = match (tc.kind, t) {
            (TableKind::FkppLimit, Some(t)) => {
                let k = lattice_generations(n, t);
                let x_max = tc.x_list.iter().map(|&x| lattice_site(n, x)).max().unwrap_or(1) as usize
                    + (8.0 * (n as f64).sqrt()) as usize;
                let row = w_rows_at(&p, &[k], x_max).remove(0);
                tc.x_list
                    .iter()
                    .map(|&x| n as f64 * row[(lattice_site(n, x) - 1) as usize])
                    .collect()
            }
            _ => {
                let fp = w_infinity(&p, default_fixed_point_sites(n), 1e-13, None)?;
                if !fp.converged {
                    return Err(CliError::resource(format!(
                        "fixed point for n={n} hit its iteration cap"
                    )));
                }
                tc.x_list.iter().map(|&x| fp.scaled(x)).collect()
            }
        };
        for (i, (&x, v)) in tc.x_list.iter().zip(values).enumerate() {
            let (target, _) = targets[i];
            let e = rel_error(v, target);
            errors[i].push(e);
            rows.push(vec![
                n.to_string(),
                num(x),
                t.map(num).unwrap_or_default(),
                num(v),
                num(target),
                num(e),
            ]);
        }
    }
    report.write_file("convergence.csv", |w| {
        csv_rows(w, &["n", "x", "t", "value", "target", "rel_error"], &rows)
    })?;
    for (i, &x) in tc.x_list.iter().enumerate() {
        let e = &errors[i];
        let decreasing = e.windows(2).all(|w| w[1] < w[0]) || e.iter().all(|v| *v == 0.0);
        let last = *e.last().expect("n_list is non-empty");
        let prev = if e.len() > 1 { e[e.len() - 2] } else { last };
        report.checks.push(Check::with(
            format!("relative error decreasing in n at x={x}"),
            last,
            prev,
            0.0,
            targets[i].1,
            Some(decreasing),
        ));
    }
    report.extra = json!({ "relative_errors": errors });
    let manifest: Value = ctx.manifest(json!({ "table": tc, "theta_used": theta }));
    report.write_json("manifest.json", &manifest)?;
    report.finish()
}
