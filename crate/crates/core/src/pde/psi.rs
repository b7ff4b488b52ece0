//! The all-time tail limit `ψ(x) = lim n·w_∞(√n·x)`.
//!
//! `ψ̃ = ψ − 2θ⁺/σ²` solves `ψ̃'' = aψ̃ + bψ̃²` with `a = 2|θ|/σ_R²`,
//! `b = σ²/σ_R²`, blows up like `6/(b x²)` at 0 and vanishes at infinity:
//!
//! ```text
//! ψ(x) = 2θ⁺/σ² + (3a / 2b) / sinh²(√a·x / 2)
//! ```

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiClosedForm {
    pub theta: f64,
    pub sigma2: f64,
    pub sigma_r2: f64,
}

impl PsiClosedForm {
    pub fn new(theta: f64, sigma2: f64, sigma_r2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !(sigma_r2 > 0.0) || !theta.is_finite() {
            return Err(Error::Precondition(format!(
                "need finite θ and positive variances, got θ={theta} σ²={sigma2} σ_R²={sigma_r2}"
            )));
        }
        Ok(Self {
            theta,
            sigma2,
            sigma_r2,
        })
    }

    pub fn a(&self) -> f64 {
        2.0 * self.theta.abs() / self.sigma_r2
    }

    pub fn b(&self) -> f64 {
        self.sigma2 / self.sigma_r2
    }

    /// `lim_{x→∞} ψ(x) = 2θ⁺/σ²`.
    pub fn plateau(&self) -> f64 {
        2.0 * self.theta.max(0.0) / self.sigma2
    }

    /// `ψ(x)`; `θ = 0` is evaluated by [`critical_psi`].
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.plateau() + self.excess(x)?)
    }

    /// `ψ̃(x) = ψ(x) − 2θ⁺/σ²`.
    pub fn excess(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("ψ needs x > 0, got {x}")));
        }
        if self.theta == 0.0 {
            return critical_psi(self.sigma2, self.sigma_r2, x);
        }
        let a = self.a();
        let u = a.sqrt() * x / 2.0;
        // 1/sinh²(u) = 4e/(1 − e)² with e = exp(−2u); 1 − e via expm1
        let e = (-2.0 * u).exp();
        let one_minus_e = -(-2.0 * u).exp_m1();
        let inv_sinh2 = 4.0 * e / (one_minus_e * one_minus_e);
        Ok(1.5 * a / self.b() * inv_sinh2)
    }
}

/// `6σ_R²/(σ²x²)`, the critical (`θ = 0`) all-time tail.
pub fn critical_psi(sigma2: f64, sigma_r2: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("ψ needs x > 0, got {x}")));
    }
    Ok(6.0 * sigma_r2 / (sigma2 * x * x))
}

/// `max_x |(f(x+h) − 2f(x) + f(x−h))/h² − a f(x) − b f(x)²|` over `xs`.
pub fn ode_residual(f: impl Fn(f64) -> f64, a: f64, b: f64, xs: &[f64], h: f64) -> f64 {
    xs.iter()
        .map(|&x| {
            let c = f(x);
            let d2 = (f(x + h) - 2.0 * c + f(x - h)) / (h * h);
            (d2 - a * c - b * c * c).abs()
        })
        .fold(0.0, f64::max)
}

/// Finite-difference check of the ODE at three step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiOdeReport {
    pub steps: [f64; 3],
    pub max_residuals: [f64; 3],
    /// `residual(h) / residual(h/2)` for the two halvings.
    pub ratios: [f64; 2],
    /// `log2` of the mean ratio.
    pub fitted_order: f64,
}

/// Evaluates the ODE residual of `ψ̃` on `xs` with steps `dx, dx/2, dx/4`.
/// Every point of `xs` must exceed `dx`.
pub fn psi_ode_verify(pcf: &PsiClosedForm, xs: &[f64], dx: f64) -> Result<PsiOdeReport> {
    if xs.iter().any(|&x| !(x > dx)) || !(dx > 0.0) {
        return Err(Error::Precondition("grid must lie strictly inside (dx, ∞)".into()));
    }
    let (a, b) = (pcf.a(), pcf.b());
    let f = |x: f64| pcf.excess(x).expect("x > 0");
    let steps = [dx, dx / 2.0, dx / 4.0];
    let max_residuals = steps.map(|h| ode_residual(f, a, b, xs, h));
    let ratios = [max_residuals[0] / max_residuals[1], max_residuals[1] / max_residuals[2]];
    let fitted_order = (0.5 * (ratios[0] + ratios[1])).log2();
    Ok(PsiOdeReport {
        steps,
        max_residuals,
        ratios,
        fitted_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(theta: f64) -> PsiClosedForm {
        PsiClosedForm::new(theta, 1.0, 1.0).unwrap()
    }

    #[test]
    fn large_x_plateau() {
        let p = unit(1.0);
        assert!((p.eval(40.0 / p.a().sqrt()).unwrap() - 2.0).abs() < 1e-8);
        assert_eq!(unit(-1.0).plateau(), 0.0);
    }

    #[test]
    fn gumbel_tail_constant() {
        let v = unit(-1.0).eval(6.0).unwrap();
        let ratio = v / (12.0 * (-(2.0f64).sqrt() * 6.0).exp());
        assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn critical_values_and_continuity() {
        assert_eq!(critical_psi(1.0, 1.0, 1.0).unwrap(), 6.0);
        assert_eq!(critical_psi(1.0, 1.0, 2.0).unwrap(), 1.5);
        assert_eq!(unit(0.0).eval(1.0).unwrap(), 6.0);
        // the offset is (2θ⁺ − |θ|)/σ² to first order, so compare relatively
        for theta in [1e-6, -1e-6] {
            let near = unit(theta).eval(1.0).unwrap();
            assert!(((near - 6.0) / 6.0).abs() < 1e-6, "{near}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(unit(1.0).eval(0.0), Err(Error::Domain(_))));
        assert!(matches!(critical_psi(1.0, 1.0, -1.0), Err(Error::Domain(_))));
        assert!(PsiClosedForm::new(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn strictly_decreasing() {
        for theta in [-2.0, -1.0, 0.0, 1.0, 3.0] {
            let p = unit(theta);
            let mut prev = f64::INFINITY;
            for i in 1..200 {
                let v = p.eval(i as f64 * 0.05).unwrap();
                assert!(v < prev);
                prev = v;
            }
        }
    }

    #[test]
    fn ode_is_second_order() {
        let xs: Vec<f64> = (0..=25).map(|i| 0.5 + 0.1 * i as f64).collect();
        for theta in [1.0, -2.0, 0.0] {
            let rep = psi_ode_verify(&unit(theta), &xs, 0.1).unwrap();
            for r in rep.ratios {
                assert!((3.5..=4.5).contains(&r), "θ={theta}: {rep:?}");
            }
        }
        assert_eq!(ode_residual(|_| 0.0, 2.0, 1.0, &xs, 0.1), 0.0);
    }

    #[test]
    fn singular_behaviour_at_zero() {
        let p = unit(-1.0);
        for x in [1e-3, 1e-2] {
            let ratio = p.eval(x).unwrap() / critical_psi(1.0, 1.0, x).unwrap();
            assert!((ratio - 1.0).abs() < x * x, "x={x}: {ratio}");
        }
    }
}
