//! Limit objects of the rescaled tail: the singular FKPP solution `φ(t, x)`,
//! the traveling wave `f_ρ`, and the closed-form all-time tail `ψ(x)`.

pub mod fkpp;
pub mod psi;
pub mod wave;

pub use fkpp::{
    gaussian_rate_excess, solve_fkpp, solve_fkpp_observed, BoundaryCap, FkppProblem, FkppSolution, Grid, Scheme,
};
pub use psi::{critical_psi, ode_residual, psi_ode_verify, PsiClosedForm, PsiOdeReport};
pub use wave::{corollary_lower_bound, traveling_wave, traveling_wave_with_step, TravelingWave};
