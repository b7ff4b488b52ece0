use std::path::PathBuf;

use brw_core::exact::{lattice_generations, lattice_site, u_from_w, w_infinity, w_rows_at};
use brw_core::fk::{fk_sweep, martingale_sweep, Upper, DEFAULT_PATH_BUDGET};
use brw_core::mc::{
    estimate_extinction, estimate_tail, front_speed_experiment, speed_thresholds, McOptions,
    DEFAULT_EXTINCTION_HORIZON_FACTOR, DEFAULT_MASS_CAP,
};
use brw_core::model::{extinction_prob, BrwParams};
use brw_core::pde::{
    critical_psi, solve_fkpp, traveling_wave_with_step, BoundaryCap, FkppProblem, Grid, PsiClosedForm, Scheme,
};
use brw_core::{Rational, Scalar};
use serde_json::{json, Value};

use crate::config::{Config, FkppCfg, Kind, Num, ParamsCfg, VerifyCfg};
use crate::report::{csv_rows, num, Check, CliError, Report};

/// Resolved settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: Config,
    pub out: PathBuf,
    pub exact: bool,
}

impl Context {
    fn seed(&self) -> Result<u64, CliError> {
        self.config.require(&self.config.seed, "seed").copied()
    }

    fn params_cfg(&self) -> Result<&ParamsCfg, CliError> {
        self.config.require(&self.config.params, "params")
    }

    fn params_f64(&self) -> Result<BrwParams<f64>, CliError> {
        self.params_cfg()?.build::<f64>()
    }

    /// Config echo without settings that cannot change results.
    pub fn manifest(&self, extra: Value) -> Value {
        let mut cfg = self.config.clone();
        cfg.out = None;
        cfg.threads = None;
        json!({
            "tool": "brw",
            "version": env!("CARGO_PKG_VERSION"),
            "exact": self.exact,
            "config": cfg,
            "resolved": extra,
        })
    }
}

pub fn run(ctx: &Context) -> Result<u8, CliError> {
    let kind = *ctx.config.require(&ctx.config.kind, "kind")?;
    if kind.is_stochastic() {
        ctx.seed()?;
    }
    let mut report = Report::new(&ctx.out, kind.name())?;
    let resolved = match kind {
        Kind::Tail => tail(ctx, &mut report)?,
        Kind::Extinction => extinction(ctx, &mut report)?,
        Kind::Speed => speed(ctx, &mut report)?,
        Kind::FixedPoint => fixed_point(ctx, &mut report)?,
        Kind::Fkpp => fkpp(ctx, &mut report)?,
        Kind::Wave => wave(ctx, &mut report)?,
        Kind::Verify => {
            let vc = ctx.config.verify.clone().unwrap_or_default();
            verify(ctx, &vc, &mut report)?
        }
    };
    let manifest = ctx.manifest(resolved);
    report.write_json("manifest.json", &manifest)?;
    report.finish()
}

fn mc_options(mass_cap: Option<u64>, initial: Option<u64>) -> McOptions {
    McOptions {
        mass_cap: mass_cap.unwrap_or(DEFAULT_MASS_CAP),
        initial,
    }
}

fn tail(ctx: &Context, report: &mut Report) -> Result<Value, CliError> {
    let tc = ctx.config.require(&ctx.config.tail, "tail")?;
    let p = ctx.params_f64()?;
    let seed = ctx.seed()?;
    let opts = mc_options(tc.mass_cap, None);
    let k = lattice_generations(p.n, tc.t);
    let max_site = tc.x.iter().map(|&x| lattice_site(p.n, x)).max().unwrap_or(1).max(1);
    let exact_row = tc
        .compare_exact
        .then(|| w_rows_at(&p, &[k], (max_site + p.step.range() * k as i64) as usize).remove(0));
    let mut rows = Vec::new();
    for &x in &tc.x {
        let est = estimate_tail(&p, tc.t, x, tc.reps, seed, &opts)?;
        let site = lattice_site(p.n, x);
        let mut row = vec![
            num(tc.t),
            num(x),
            site.to_string(),
            k.to_string(),
            num(est.estimate),
            num(est.stderr),
            est.replicates.to_string(),
            est.undecided.to_string(),
            est.capped.to_string(),
        ];
        if site <= 0 {
            report
                .checks
                .push(Check::abs(format!("tail at x={x}"), est.estimate, 1.0, 0.0, "trivial"));
        }
        if let Some(w) = &exact_row {
            let target = if site <= 0 {
                1.0
            } else {
                u_from_w(w[(site - 1) as usize], p.n)
            };
            row.push(num(target));
            let tol = if est.stderr > 0.0 { 4.0 * est.stderr } else { 1e-12 };
            report.checks.push(Check::abs(
                format!("tail vs exact at x={x}"),
                est.estimate,
                target,
                tol,
                "exact computation",
            ));
        }
        rows.push(row);
    }
    let mut header = vec![
        "t",
        "x",
        "site",
        "generations",
        "estimate",
        "stderr",
        "replicates",
        "undecided",
        "capped",
    ];
    if exact_row.is_some() {
        header.push("exact");
    }
    report.write_file("tail.csv", |w| csv_rows(w, &header, &rows))?;
    Ok(json!({ "params": p.to_json(), "seed": seed, "options": opts }))
}

fn extinction(ctx: &Context, report: &mut Report) -> Result<Value, CliError> {
    let ec = ctx.config.require(&ctx.config.extinction, "extinction")?;
    let p = ctx.params_f64()?;
    let seed = ctx.seed()?;
    let opts = mc_options(ec.mass_cap, ec.initial);
    let horizon = ec.horizon.unwrap_or((DEFAULT_EXTINCTION_HORIZON_FACTOR * p.n) as usize);
    let est = estimate_extinction(&p, horizon, ec.reps, seed, &opts)?;
    let initial = ec.initial.unwrap_or(p.n);
    let q = extinction_prob(&p.offspring, 1e-15)?;
    let target = q.powf(initial as f64);
    let tol = if est.stderr > 0.0 { 4.0 * est.stderr } else { 1e-12 };
    // a finite horizon biases non-supercritical runs downwards, so only gate the supercritical case
    let gated = p.offspring.mean() > 1.0;
    let passed = gated.then(|| (est.estimate - target).abs() <= tol);
    report.checks.push(Check::with(
        "extinction frequency vs q^initial",
        est.estimate,
        target,
        tol,
        "exact computation",
        passed,
    ));
    if initial == p.n {
        let limit = (-2.0 * p.theta.max(0.0) / p.offspring.variance()).exp();
        report.checks.push(Check::with(
            "q^n vs its large-n limit",
            target,
            limit,
            0.01,
            "analytic limit",
            None,
        ));
    }
    let rows = vec![vec![
        horizon.to_string(),
        initial.to_string(),
        num(est.estimate),
        num(est.stderr),
        est.replicates.to_string(),
        est.undecided.to_string(),
        est.capped.to_string(),
        num(target),
    ]];
    report.write_file("extinction.csv", |w| {
        csv_rows(
            w,
            &[
                "horizon",
                "initial",
                "estimate",
                "stderr",
                "replicates",
                "undecided",
                "capped",
                "q_pow_initial",
            ],
            &rows,
        )
    })?;
    Ok(json!({ "params": p.to_json(), "seed": seed, "horizon": horizon, "q": q }))
}

fn speed(ctx: &Context, report: &mut Report) -> Result<Value, CliError> {
    let sc = ctx.config.require(&ctx.config.speed, "speed")?;
    let p = ctx.params_f64()?;
    let seed = ctx.seed()?;
    let opts = mc_options(sc.mass_cap, None);
    let (g_hat, g_alt) = speed_thresholds(p.theta, p.step.variance())?;
    let mut gammas: Vec<f64> = sc.gamma_factors.iter().map(|f| f * g_hat).collect();
    gammas.push(g_alt);
    let cells = front_speed_experiment(&p, &gammas, &sc.t, sc.reps, seed, &opts)?;
    let q = extinction_prob(&p.offspring, 1e-15)?;
    let qn = q.powf(opts.initial.unwrap_or(p.n) as f64);
    let mut rows = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        // cells run over gammas (configured factors, then the alternative) times ts
        let alt = i / sc.t.len() == sc.gamma_factors.len();
        let factor = cell.gamma / g_hat;
        let est = cell.result.estimate;
        let label = format!("γ={:.4} ({factor:.3}·threshold), t={}", cell.gamma, cell.t);
        let check = if factor <= 0.2 + 1e-12 && !alt {
            Check::with(label, est, 0.9, 0.0, "analytic limit", Some(est >= 0.9))
        } else if factor >= 5.0 - 1e-12 && !alt {
            Check::with(label, est, qn + 0.1, 0.0, "analytic limit", Some(est <= qn + 0.1))
        } else {
            Check::with(label, est, f64::NAN, 0.0, "simulation", None)
        };
        report.checks.push(check);
        rows.push(vec![
            num(cell.gamma),
            num(factor),
            num(cell.t),
            cell.generations.to_string(),
            cell.bound_site.to_string(),
            num(est),
            num(cell.result.stderr),
            cell.result.replicates.to_string(),
            cell.result.capped.to_string(),
        ]);
    }
    report.write_file("speed.csv", |w| {
        csv_rows(
            w,
            &[
                "gamma",
                "gamma_factor",
                "t",
                "generations",
                "bound_site",
                "estimate",
                "stderr",
                "replicates",
                "capped",
            ],
            &rows,
        )
    })?;
    Ok(json!({ "params": p.to_json(), "seed": seed, "threshold": g_hat, "alternative": g_alt, "q_pow_n": qn }))
}

/// Limit profile of the scaled all-time tail and where it comes from.
pub fn limit_profile(theta: f64, sigma2: f64, sigma_r2: f64, x: f64) -> Result<(f64, &'static str), CliError> {
    if theta == 0.0 {
        Ok((critical_psi(sigma2, sigma_r2, x)?, "analytic limit"))
    } else {
        Ok((PsiClosedForm::new(theta, sigma2, sigma_r2)?.eval(x)?, "closed form"))
    }
}

pub fn default_fixed_point_sites(n: u64) -> usize {
    (16.0 * (n as f64).sqrt()) as usize + 10
}

fn fixed_point(ctx: &Context, report: &mut Report) -> Result<Value, CliError> {
    let fc = ctx.config.require(&ctx.config.fixed_point, "fixed_point")?;
    let p = ctx.params_f64()?;
    let x_max = fc.x_max.unwrap_or_else(|| default_fixed_point_sites(p.n));
    let fp = w_infinity(&p, x_max, fc.tol, fc.max_iterations)?;
    report.write_file("fixed_point.csv", |w| fp.write_csv(w).map_err(CliError::from))?;
    report.checks.push(Check::with(
        "fixed-point residual",
        fp.residual,
        0.0,
        fc.tol,
        "exact computation",
        Some(fp.converged),
    ));
    let sigma2 = p.offspring.variance();
    let sigma_r2 = p.step.variance();
    for &x in &fc.x {
        let (target, source) = limit_profile(p.theta, sigma2, sigma_r2, x)?;
        report.checks.push(Check::rel(
            format!("n·w∞ at x={x}"),
            fp.scaled(x),
            target,
            fc.tolerance,
            source,
        ));
    }
    Ok(json!({
        "params": p.to_json(),
        "x_max": x_max,
        "iterations": fp.iterations,
        "converged": fp.converged,
        "exact_applied": false,
    }))
}

pub fn fkpp_problem(fc: &FkppCfg) -> Result<FkppProblem, CliError> {
    let mut grid = Grid::new(fc.x_min, fc.x_max, fc.dx, fc.t_max);
    grid.dt = fc.dt;
    if let Some(s) = fc.snapshot_every {
        grid.snapshot_every = s;
    }
    let mut problem = FkppProblem::new(fc.theta, fc.sigma2, fc.sigma_r2, grid);
    problem.boundary = match &fc.boundary {
        None => BoundaryCap::Matched,
        Some(Num::Text(s)) if s == "matched" => BoundaryCap::Matched,
        Some(Num::Text(s)) if s == "doubling" => BoundaryCap::doubling_default(2.0 * fc.x_min),
        Some(v) => BoundaryCap::Fixed(v.to_f64("fkpp.boundary")?),
    };
    problem.scheme = match fc.scheme.as_deref() {
        None | Some("explicit") => Scheme::Explicit,
        Some("crank_nicolson") => Scheme::CrankNicolson,
        Some(other) => {
            return Err(CliError::field("fkpp.scheme", format!("unknown scheme `{other}`")));
        }
    };
    Ok(problem)
}

fn fkpp(ctx: &Context, report: &mut Report) -> Result<Value, CliError> {
    let fc = ctx.config.require(&ctx.config.fkpp, "fkpp")?;
    let sol = solve_fkpp(&fkpp_problem(fc)?)?;
    report.write_file("fkpp.csv", |w| sol.write_csv(w).map_err(CliError::from))?;
    report.write_json("fkpp_header.json", &sol.header_json())?;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    report.checks.push(Check::abs(
        "φ non-decreasing in t",
        flag(sol.monotone_t),
        1.0,
        0.0,
        "analytic limit",
    ));
    report.checks.push(Check::abs(
        "φ non-increasing in x",
        flag(sol.monotone_x),
        1.0,
        0.0,
        "analytic limit",
    ));
    report.checks.push(Check::with(
        "boundary cap converged",
        sol.residual_norm,
        0.0,
        0.0,
        "exact computation",
        Some(sol.cap_converged),
    ));
    Ok(json!({ "dt": sol.dt, "cap_used": sol.cap_used }))
}

fn wave(ctx: &Context, report: &mut Report) -> Result<Value, CliError> {
    let wc = ctx.config.require(&ctx.config.wave, "wave")?;
    let w = traveling_wave_with_step(wc.rho, wc.x_max, wc.tol, wc.h.unwrap_or(0.0025))?;
    let rows: Vec<Vec<String>> =
        w.xs.iter()
            .zip(&w.fs)
            .zip(&w.dfs)
            .map(|((x, f), d)| vec![num(*x), num(*f), num(*d)])
            .collect();
    report.write_file("wave.csv", |out| csv_rows(out, &["xi", "f", "df"], &rows))?;
    report.checks.push(Check::rel(
        "decay slope",
        w.decay_slope,
        w.predicted_decay(),
        0.02,
        "analytic limit",
    ));
    Ok(json!({ "rho": w.rho, "initial_slope": w.initial_slope, "h": w.h }))
}

fn upper_str(u: Upper) -> String {
    match u {
        Upper::At(z) => z.to_string(),
        Upper::Infinite => "inf".into(),
    }
}

fn verify_with<T: Scalar>(p: &BrwParams<T>, vc: &VerifyCfg, tol: f64, report: &mut Report) -> Result<Value, CliError> {
    let paths = (p.step.support().len() as f64).powi(vc.m_max as i32);
    if paths > DEFAULT_PATH_BUDGET as f64 {
        return Err(CliError::resource(format!(
            "m_max = {} needs {paths:.3e} walk paths, above the budget of {DEFAULT_PATH_BUDGET}",
            vc.m_max
        )));
    }
    let reports = fk_sweep(p, vc.m_max, vc.x_cap)?;
    let mut worst = T::zero();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            worst = T::max_of(worst.clone(), r.max_diff.clone());
            vec![
                r.m.to_string(),
                r.k.to_string(),
                r.x0.to_string(),
                r.spec.lower().to_string(),
                upper_str(r.spec.upper()),
                format!("{}", r.lhs),
                format!("{}", r.rhs_i),
                format!("{}", r.rhs_ii),
                format!("{}", r.max_diff),
            ]
        })
        .collect();
    report.write_file("fk_identity.csv", |w| {
        csv_rows(
            w,
            &["m", "k", "x", "y", "z", "lhs", "rhs_i", "rhs_ii", "max_diff"],
            &rows,
        )
    })?;
    let mart = martingale_sweep(p, vc.m_max, vc.x_cap)?;
    let mut worst_mart = T::zero();
    let mrows: Vec<Vec<String>> = mart
        .iter()
        .map(|(m, x0, d)| {
            worst_mart = T::max_of(worst_mart.clone(), d.clone());
            vec![m.to_string(), x0.to_string(), format!("{d}")]
        })
        .collect();
    report.write_file("martingale.csv", |w| csv_rows(w, &["m", "x0", "max_diff"], &mrows))?;
    let check = |name: &str, v: &T| {
        let passed = if T::EXACT { v.is_zero_value() } else { v.to_f64() <= tol };
        Check::with(name, v.to_f64(), 0.0, tol, "exact computation", Some(passed))
    };
    report.checks.push(check("Feynman-Kac identity max diff", &worst));
    report.checks.push(check("martingale max diff", &worst_mart));
    Ok(json!({ "params": p.to_json(), "cases": reports.len(), "martingale_cases": mart.len() }))
}

pub fn verify(ctx: &Context, vc: &VerifyCfg, report: &mut Report) -> Result<Value, CliError> {
    let default = ParamsCfg {
        n: 1,
        theta: Num::Int(0),
        family: "binary".into(),
        geometric_cap: None,
        offspring: None,
        step: Default::default(),
    };
    let pc = ctx.config.params.as_ref().unwrap_or(&default);
    if ctx.exact {
        verify_with(&pc.build::<Rational>()?, vc, 0.0, report)
    } else {
        verify_with(&pc.build::<f64>()?, vc, 1e-12, report)
    }
}
