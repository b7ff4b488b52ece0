use brw_core::exact::w_table;
use brw_core::fk::{fk_sweep, martingale_sweep};
use brw_core::mc::{estimate_tail, McOptions};
use brw_core::model::{extinction_prob, BrwParams};
use brw_core::pde::{traveling_wave, PsiClosedForm};
use brw_core::{Rational, Scalar};

use crate::report::{CliError, EXIT_CHECK_FAILED, EXIT_PASS};

type Outcome = Result<(bool, String), brw_core::Error>;
type Named = (&'static str, fn() -> Outcome);

fn r(a: i64, b: i64) -> Rational {
    Rational::from_ratio(a, b)
}

fn spot_values() -> Outcome {
    let p = BrwParams::binary_simple(r(0, 1), 1)?;
    let t = w_table(&p, 2, 4)?;
    let ok = t.w(1, 1) == r(1, 4) && t.w(2, 2) == r(7, 64);
    Ok((ok, format!("w1(1) = {}, w2(2) = {}", t.w(1, 1), t.w(2, 2))))
}

fn exact_identities() -> Outcome {
    let p = BrwParams::binary_simple(r(1, 1), 10)?;
    let fk = fk_sweep(&p, 3, 4)?;
    let mart = martingale_sweep(&p, 3, 4)?;
    let bad = fk.iter().filter(|c| !c.max_diff.is_zero_value()).count()
        + mart.iter().filter(|c| !c.2.is_zero_value()).count();
    Ok((bad == 0, format!("{} cases, {bad} nonzero", fk.len() + mart.len())))
}

fn extinction_limit() -> Outcome {
    let p = BrwParams::binary_simple(1.0, 10_000)?;
    let qn = extinction_prob(&p.offspring, 1e-15)?.powf(10_000.0);
    let d = (qn - (-2.0f64).exp()).abs();
    Ok((d <= 0.01, format!("|q^n − e^-2| = {d:.2e}")))
}

fn gumbel_tail() -> Outcome {
    let psi = PsiClosedForm::new(-1.0, 1.0, 1.0)?;
    let ratio = psi.eval(8.0)? * (8.0 * 2f64.sqrt()).exp() / 12.0;
    Ok(((ratio - 1.0).abs() <= 0.01, format!("ratio at x=8: {ratio:.6}")))
}

fn wave_slope() -> Outcome {
    let w = traveling_wave(1.0, 30.0, 1e-6)?;
    let target = w.predicted_decay();
    let e = ((w.decay_slope - target) / target).abs();
    Ok((e <= 0.02, format!("slope {:.5} vs {target:.5}", w.decay_slope)))
}

fn reproducible_mc() -> Outcome {
    let p = BrwParams::binary_simple(0.0, 16)?;
    let a = estimate_tail(&p, 0.5, 0.5, 500, 42, &McOptions::default())?;
    let b = estimate_tail(&p, 0.5, 0.5, 500, 42, &McOptions::default())?;
    let origin = estimate_tail(&p, 0.5, 0.0, 10, 42, &McOptions::default())?;
    Ok((
        a == b && origin.estimate == 1.0,
        format!("estimate {:.4} twice; x=0 gives {}", a.estimate, origin.estimate),
    ))
}

pub fn selftest() -> Result<u8, CliError> {
    let checks: [Named; 6] = [
        ("exact spot values", spot_values),
        ("exact Feynman-Kac and martingale identities", exact_identities),
        ("extinction limit", extinction_limit),
        ("closed-form Gumbel tail", gumbel_tail),
        ("traveling-wave decay slope", wave_slope),
        ("seeded Monte Carlo is reproducible", reproducible_mc),
    ];
    let mut all = true;
    for (name, f) in checks {
        let (ok, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        all &= ok;
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    Ok(if all { EXIT_PASS } else { EXIT_CHECK_FAILED })
}
