use std::path::{Path, PathBuf};

use brw_core::model::{BrwParams, Family, OffspringLaw, StepLaw};
use brw_core::{Rational, Scalar};
use serde::{Deserialize, Serialize};

use crate::report::CliError;

/// Number written as an integer, a float or a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    pub fn to_scalar<T: Scalar>(&self, field: &str) -> Result<T, CliError> {
        let bad = || CliError::field(field, format!("`{self:?}` is not a number or a p/q fraction"));
        match self {
            Num::Int(i) => Ok(T::from_ratio(*i, 1)),
            Num::Float(f) => T::from_f64(*f).ok_or_else(bad),
            Num::Text(s) => {
                let r: Rational = s.trim().parse().map_err(|_| bad())?;
                if T::EXACT {
                    T::from_wire(&serde_json::json!([r.numer().to_string(), r.denom().to_string()])).ok_or_else(bad)
                } else {
                    T::from_f64(r.to_f64()).ok_or_else(bad)
                }
            }
        }
    }

    pub fn to_f64(&self, field: &str) -> Result<f64, CliError> {
        self.to_scalar::<f64>(field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Tail,
    Extinction,
    Speed,
    FixedPoint,
    Fkpp,
    Wave,
    Verify,
}

impl Kind {
    pub fn is_stochastic(self) -> bool {
        matches!(self, Kind::Tail | Kind::Extinction | Kind::Speed)
    }
    pub fn name(self) -> &'static str {
        match self {
            Kind::Tail => "tail",
            Kind::Extinction => "extinction",
            Kind::Speed => "speed",
            Kind::FixedPoint => "fixed_point",
            Kind::Fkpp => "fkpp",
            Kind::Wave => "wave",
            Kind::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub kind: Option<Kind>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub exact: Option<bool>,
    pub params: Option<ParamsCfg>,
    pub tail: Option<TailCfg>,
    pub extinction: Option<ExtinctionCfg>,
    pub speed: Option<SpeedCfg>,
    pub fixed_point: Option<FixedPointCfg>,
    pub fkpp: Option<FkppCfg>,
    pub wave: Option<WaveCfg>,
    pub verify: Option<VerifyCfg>,
    pub table: Option<TableCfg>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsCfg {
    pub n: u64,
    pub theta: Num,
    #[serde(default = "default_family")]
    pub family: String,
    pub geometric_cap: Option<usize>,
    /// Explicit offspring probabilities `p_0, p_1, …`; overrides `family`.
    pub offspring: Option<Vec<Num>>,
    #[serde(default)]
    pub step: StepCfg,
}

fn default_family() -> String {
    "binary".into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepCfg {
    #[default]
    Simple,
    Lazy {
        stay: Num,
    },
    Uniform {
        range: i64,
    },
    Offsets {
        entries: Vec<(i64, Num)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailCfg {
    pub t: f64,
    pub x: Vec<f64>,
    pub reps: u64,
    pub mass_cap: Option<u64>,
    /// Also compute the exact target and check agreement to 4 standard errors.
    #[serde(default)]
    pub compare_exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtinctionCfg {
    pub reps: u64,
    pub horizon: Option<usize>,
    pub initial: Option<u64>,
    pub mass_cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedCfg {
    /// Multiples of `(2θσ_R²)^{-1/2}`.
    #[serde(default = "default_speed_factors")]
    pub gamma_factors: Vec<f64>,
    #[serde(default = "default_speed_ts")]
    pub t: Vec<f64>,
    pub reps: u64,
    pub mass_cap: Option<u64>,
}

fn default_speed_factors() -> Vec<f64> {
    vec![0.2, 5.0]
}
fn default_speed_ts() -> Vec<f64> {
    vec![4.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointCfg {
    pub x_max: Option<usize>,
    #[serde(default = "default_fp_tol")]
    pub tol: f64,
    pub max_iterations: Option<u64>,
    #[serde(default)]
    pub x: Vec<f64>,
    /// Relative tolerance against the limit profile at each `x`.
    #[serde(default = "default_limit_tol")]
    pub tolerance: f64,
}

fn default_fp_tol() -> f64 {
    1e-12
}
fn default_limit_tol() -> f64 {
    0.15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FkppCfg {
    pub theta: f64,
    #[serde(default = "one")]
    pub sigma2: f64,
    #[serde(default = "one")]
    pub sigma_r2: f64,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub t_max: f64,
    pub dt: Option<f64>,
    pub snapshot_every: Option<f64>,
    /// `matched`, `doubling`, or a number for a fixed boundary value.
    pub boundary: Option<Num>,
    /// `explicit` or `crank_nicolson`.
    pub scheme: Option<String>,
}

fn one() -> f64 {
    1.0
}
fn default_x_min() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveCfg {
    pub rho: f64,
    #[serde(default = "default_wave_x_max")]
    pub x_max: f64,
    #[serde(default = "default_wave_tol")]
    pub tol: f64,
    pub h: Option<f64>,
}

fn default_wave_x_max() -> f64 {
    30.0
}
fn default_wave_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyCfg {
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default = "default_x_cap")]
    pub x_cap: i64,
}

fn default_m_max() -> usize {
    3
}
fn default_x_cap() -> i64 {
    4
}

impl Default for VerifyCfg {
    fn default() -> Self {
        Self {
            m_max: default_m_max(),
            x_cap: default_x_cap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    /// Scaled finite-time tail against the FKPP solution.
    FkppLimit,
    /// Scaled all-time tail against the stationary closed form.
    AllTimeTail,
    /// Scaled critical all-time tail against `6σ_R²/(σ²x²)`.
    CriticalTail,
}

impl TableKind {
    pub fn name(self) -> &'static str {
        match self {
            TableKind::FkppLimit => "fkpp_limit",
            TableKind::AllTimeTail => "all_time_tail",
            TableKind::CriticalTail => "critical_tail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableCfg {
    pub kind: TableKind,
    #[serde(default)]
    pub theta: f64,
    pub n_list: Vec<u64>,
    pub x_list: Vec<f64>,
    /// Time for `fkpp_limit`.
    pub t: Option<f64>,
    #[serde(default = "default_table_dx")]
    pub dx: f64,
}

fn default_table_dx() -> f64 {
    0.01
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.message().to_string()))
    }

    pub fn require<'a, T>(&self, value: &'a Option<T>, field: &str) -> Result<&'a T, CliError> {
        value.as_ref().ok_or_else(|| {
            let kind = self.kind.map(Kind::name).unwrap_or("table");
            CliError::field(field, format!("field `{field}` is required for kind `{kind}`"))
        })
    }
}

impl ParamsCfg {
    pub fn build<T: Scalar>(&self) -> Result<BrwParams<T>, CliError> {
        let theta: T = self.theta.to_scalar("params.theta")?;
        let step = self.step.build::<T>()?;
        if let Some(probs) = &self.offspring {
            let probs = probs
                .iter()
                .map(|p| p.to_scalar::<T>("params.offspring"))
                .collect::<Result<Vec<_>, _>>()?;
            let law = OffspringLaw::new(probs).map_err(CliError::from_core)?;
            return BrwParams::new(self.n, theta, law, step).map_err(CliError::from_core);
        }
        let family = match Family::parse(&self.family).map_err(|e| CliError::field("params.family", e.to_string()))? {
            Family::GeometricTruncated { cap } => Family::GeometricTruncated {
                cap: self.geometric_cap.unwrap_or(cap),
            },
            f => f,
        };
        BrwParams::from_family(family, theta, self.n, step).map_err(CliError::from_core)
    }
}

impl StepCfg {
    pub fn build<T: Scalar>(&self) -> Result<StepLaw<T>, CliError> {
        let law = match self {
            StepCfg::Simple => Ok(StepLaw::simple()),
            StepCfg::Lazy { stay } => StepLaw::lazy(stay.to_scalar("params.step.stay")?),
            StepCfg::Uniform { range } => StepLaw::uniform(*range),
            StepCfg::Offsets { entries } => {
                let entries = entries
                    .iter()
                    .map(|(y, p)| Ok((*y, p.to_scalar::<T>("params.step.entries")?)))
                    .collect::<Result<Vec<_>, CliError>>()?;
                StepLaw::from_offsets(&entries)
            }
        };
        law.map_err(CliError::from_core)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_tail_config() {
        let cfg = Config::parse(
            r#"
            kind = "tail"
            seed = 7
            [params]
            n = 25
            theta = "-1"
            [params.step]
            kind = "lazy"
            stay = "1/3"
            [tail]
            t = 0.4
            x = [0.4, 0.8]
            reps = 1000
            "#,
        )
        .unwrap();
        assert_eq!(cfg.kind, Some(Kind::Tail));
        let p = cfg.params.unwrap().build::<Rational>().unwrap();
        assert_eq!(p.step.prob(0), Rational::from_ratio(1, 3));
        assert_eq!(p.theta, Rational::from_ratio(-1, 1));
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(Config::parse("kind = \"tail\"\nsede = 3\n").is_err());
    }
}
