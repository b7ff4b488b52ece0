//! Monte Carlo simulation of the `n`-particle branching random walk.
//!
//! Populations are stored as occupied sites with counts and evolve in
//! aggregate: the jumps out of a site are split over the step offsets by a
//! multinomial draw, and the children at a destination are the sum of i.i.d.
//! offspring counts, drawn as a multinomial over offspring values. Both draws
//! are exact, so the law is that of the per-particle model.
//!
//! Every replicate owns a ChaCha8 stream selected by `(seed, replicate index)`,
//! and per-replicate outcomes are folded in index order, so results do not
//! depend on the thread count.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exact::{lattice_generations, lattice_site};
use crate::model::{BrwParams, OffspringLaw, StepLaw};
use crate::par;

/// Default cap on total particle mass before a replicate is abandoned.
pub const DEFAULT_MASS_CAP: u64 = 100_000_000;

/// Default extinction horizon in units of `n` generations.
pub const DEFAULT_EXTINCTION_HORIZON_FACTOR: u64 = 200;

/// Replicate generator: `ChaCha8` seeded with `seed`, on stream `index`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[inline]
fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
    }
}

/// Sequential-binomial multinomial sampler over a fixed finite law.
#[derive(Debug, Clone)]
struct Splitter {
    values: Vec<i64>,
    // P(value_j | not value_0..value_{j−1})
    conditional: Vec<f64>,
}

impl Splitter {
    fn new(entries: &[(i64, f64)]) -> Self {
        let mut values = Vec::with_capacity(entries.len());
        let mut conditional = Vec::with_capacity(entries.len());
        let mut rest = 1.0f64;
        for (i, (v, p)) in entries.iter().enumerate() {
            values.push(*v);
            if i + 1 == entries.len() {
                conditional.push(1.0);
            } else {
                conditional.push(if rest > 0.0 { (p / rest).clamp(0.0, 1.0) } else { 0.0 });
                rest -= p;
            }
        }
        Self { values, conditional }
    }

    /// Calls `emit(value, count)` for every value with a positive count.
    #[inline]
    fn split<R: Rng + ?Sized>(&self, rng: &mut R, mut count: u64, mut emit: impl FnMut(i64, u64)) {
        for (v, c) in self.values.iter().zip(&self.conditional) {
            if count == 0 {
                break;
            }
            let k = if *c >= 1.0 { count } else { binomial(rng, count, *c) };
            if k > 0 {
                emit(*v, k);
                count -= k;
            }
        }
    }
}

/// Draws the total offspring of `count` independent parents.
#[derive(Debug, Clone)]
struct OffspringSampler {
    // Some(p) when the law lives on {0, 2}
    binary: Option<f64>,
    splitter: Splitter,
}

impl OffspringSampler {
    fn new(law: &OffspringLaw<f64>) -> Self {
        let probs = law.probs();
        let binary = (probs.len() == 3 && probs[1] == 0.0).then(|| probs[2]);
        // largest values first keeps the expected number of draws small
        let entries: Vec<(i64, f64)> = probs.iter().enumerate().rev().map(|(i, p)| (i as i64, *p)).collect();
        Self {
            binary,
            splitter: Splitter::new(&entries),
        }
    }

    #[inline]
    fn total<R: Rng + ?Sized>(&self, rng: &mut R, count: u64) -> u64 {
        if let Some(p2) = self.binary {
            return 2 * binomial(rng, count, p2);
        }
        let mut children = 0u64;
        self.splitter.split(rng, count, |v, k| children += v as u64 * k);
        children
    }
}

/// Particle counts by site at one generation. Sites are strictly increasing
/// and every stored count is positive.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Population {
    sites: Vec<(i64, u64)>,
    generation: usize,
    total: u64,
}

impl Population {
    /// `count` particles at `site`, generation 0.
    pub fn at(site: i64, count: u64) -> Self {
        let sites = if count > 0 { vec![(site, count)] } else { Vec::new() };
        Self {
            sites,
            generation: 0,
            total: count,
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds from arbitrary `(site, count)` pairs.
    pub fn from_counts(entries: &[(i64, u64)], generation: usize) -> Self {
        let mut sites: Vec<(i64, u64)> = entries.iter().copied().filter(|(_, c)| *c > 0).collect();
        sites.sort_unstable_by_key(|(s, _)| *s);
        let mut merged: Vec<(i64, u64)> = Vec::with_capacity(sites.len());
        for (s, c) in sites {
            match merged.last_mut() {
                Some((ls, lc)) if *ls == s => *lc += c,
                _ => merged.push((s, c)),
            }
        }
        let total = merged.iter().map(|(_, c)| c).sum();
        Self {
            sites: merged,
            generation,
            total,
        }
    }

    pub fn sites(&self) -> &[(i64, u64)] {
        &self.sites
    }
    pub fn generation(&self) -> usize {
        self.generation
    }
    pub fn total(&self) -> u64 {
        self.total
    }
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
    pub fn count_at(&self, site: i64) -> u64 {
        self.sites
            .binary_search_by_key(&site, |(s, _)| *s)
            .map(|i| self.sites[i].1)
            .unwrap_or(0)
    }
    /// Rightmost occupied site.
    pub fn max_site(&self) -> Option<i64> {
        self.sites.last().map(|(s, _)| *s)
    }
}

/// Precomputed samplers for one parameter set, plus scratch space.
#[derive(Debug, Clone)]
pub struct Evolver {
    steps: Splitter,
    offspring: OffspringSampler,
    range: i64,
    scratch: Vec<u64>,
}

impl Evolver {
    pub fn new(params: &BrwParams<f64>) -> Self {
        Self::from_laws(&params.offspring, &params.step)
    }

    pub fn from_laws(offspring: &OffspringLaw<f64>, step: &StepLaw<f64>) -> Self {
        Self {
            steps: Splitter::new(&step.support()),
            offspring: OffspringSampler::new(offspring),
            range: step.range(),
            scratch: Vec::new(),
        }
    }

    /// One generation: every particle jumps, then is replaced by its children
    /// at the post-jump site.
    pub fn step<R: Rng + ?Sized>(&mut self, pop: &Population, rng: &mut R) -> Population {
        let (Some(&(lo, _)), Some(&(hi, _))) = (pop.sites.first(), pop.sites.last()) else {
            return Population {
                sites: Vec::new(),
                generation: pop.generation + 1,
                total: 0,
            };
        };
        let base = lo - self.range;
        let width = (hi - lo + 2 * self.range + 1) as usize;
        self.scratch.clear();
        self.scratch.resize(width, 0);
        for &(site, count) in &pop.sites {
            let scratch = &mut self.scratch;
            self.steps.split(rng, count, |off, k| {
                scratch[(site + off - base) as usize] += k;
            });
        }
        let mut sites = Vec::with_capacity(pop.sites.len() + 2 * self.range as usize);
        let mut total = 0u64;
        for (i, &jumped) in self.scratch.iter().enumerate() {
            if jumped == 0 {
                continue;
            }
            let children = self.offspring.total(rng, jumped);
            if children > 0 {
                sites.push((base + i as i64, children));
                total += children;
            }
        }
        Population {
            sites,
            generation: pop.generation + 1,
            total,
        }
    }

    /// Total mass after one generation, ignoring positions.
    pub fn step_mass<R: Rng + ?Sized>(&self, total: u64, rng: &mut R) -> u64 {
        self.offspring.total(rng, total)
    }
}

/// One generation of `pop` under `params`.
pub fn evolve_generation<R: Rng + ?Sized>(pop: &Population, params: &BrwParams<f64>, rng: &mut R) -> Population {
    Evolver::new(params).step(pop, rng)
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunEnd {
    Horizon,
    Extinct,
    /// The front reached the requested stopping site.
    FrontReached,
    /// Total mass exceeded the cap.
    Capped,
}

/// Trajectory summary of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    /// `front[k]` is the rightmost site occupied in generations `0..=k`.
    pub front: Vec<i64>,
    /// Last generation with a positive population.
    pub survived_to: usize,
    /// Rightmost site with positive local time (equals the final front).
    pub local_time_max: i64,
    pub total_mass_history: Option<Vec<u64>>,
    pub end: RunEnd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub generations: usize,
    /// Stop once the front reaches this site.
    pub stop_front_at: Option<i64>,
    pub mass_cap: u64,
    pub record_mass: bool,
}

/// Simulates one replicate from `initial`.
pub fn simulate_run<R: Rng + ?Sized>(
    evolver: &mut Evolver,
    initial: Population,
    opts: &RunOptions,
    rng: &mut R,
) -> RunStats {
    let mut pop = initial;
    let mut front_now = pop.max_site().unwrap_or(i64::MIN);
    let mut front = vec![front_now];
    let mut masses = opts.record_mass.then(|| vec![pop.total()]);
    let mut survived_to = 0;
    let done = |f: i64| opts.stop_front_at.is_some_and(|s| f >= s);
    let mut end = if pop.is_empty() {
        RunEnd::Extinct
    } else if done(front_now) {
        RunEnd::FrontReached
    } else {
        RunEnd::Horizon
    };
    if end == RunEnd::Horizon {
        for _ in 0..opts.generations {
            pop = evolver.step(&pop, rng);
            if let Some(s) = pop.max_site() {
                front_now = front_now.max(s);
            }
            front.push(front_now);
            if let Some(m) = masses.as_mut() {
                m.push(pop.total());
            }
            if pop.is_empty() {
                end = RunEnd::Extinct;
                break;
            }
            survived_to = pop.generation();
            if done(front_now) {
                end = RunEnd::FrontReached;
                break;
            }
            if pop.total() > opts.mass_cap {
                end = RunEnd::Capped;
                break;
            }
        }
    }
    RunStats {
        front,
        survived_to,
        local_time_max: front_now,
        total_mass_history: masses,
        end,
    }
}

/// Frequency estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub estimate: f64,
    /// Sample standard deviation over `√(decided replicates)`.
    pub stderr: f64,
    pub replicates: u64,
    pub seed: u64,
    /// Replicates still undetermined at the horizon.
    pub undecided: u64,
    /// Replicates abandoned at the mass cap.
    pub capped: u64,
}

impl EstimatorResult {
    fn from_counts(hits: u64, trials: u64, replicates: u64, seed: u64, undecided: u64, capped: u64) -> Self {
        let (estimate, stderr) = if trials == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let p = hits as f64 / trials as f64;
            let var = if trials > 1 {
                p * (1.0 - p) * trials as f64 / (trials - 1) as f64
            } else {
                0.0
            };
            (p, (var / trials as f64).sqrt())
        };
        Self {
            estimate,
            stderr,
            replicates,
            seed,
            undecided,
            capped,
        }
    }

    /// `|estimate − target| ≤ k·stderr`, with a zero-stderr estimate required
    /// to hit the target to 1e−12.
    pub fn within(&self, target: f64, k: f64) -> bool {
        let d = (self.estimate - target).abs();
        if self.stderr == 0.0 {
            d <= 1e-12
        } else {
            d <= k * self.stderr
        }
    }
}

/// Simulation limits shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McOptions {
    pub mass_cap: u64,
    /// Initial particle count; `None` means `n`.
    pub initial: Option<u64>,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            mass_cap: DEFAULT_MASS_CAP,
            initial: None,
        }
    }
}

impl McOptions {
    fn initial_for(&self, params: &BrwParams<f64>) -> u64 {
        self.initial.unwrap_or(params.n)
    }
}

fn check_reps(reps: u64) -> Result<()> {
    if reps == 0 {
        return Err(Error::Precondition("need at least one replicate".into()));
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Outcome {
    Hit,
    Miss,
    Undecided,
    Capped,
}

fn tally(outcomes: &[Outcome], seed: u64, undecided_counts_as_hit: Option<bool>) -> EstimatorResult {
    let (mut hit, mut miss, mut und, mut cap) = (0u64, 0u64, 0u64, 0u64);
    for o in outcomes {
        match o {
            Outcome::Hit => hit += 1,
            Outcome::Miss => miss += 1,
            Outcome::Undecided => und += 1,
            Outcome::Capped => cap += 1,
        }
    }
    let (hits, trials) = match undecided_counts_as_hit {
        Some(true) => (hit + und, hit + miss + und),
        Some(false) => (hit, hit + miss + und),
        None => (hit, hit + miss),
    };
    EstimatorResult::from_counts(hits, trials, outcomes.len() as u64, seed, und, cap)
}

/// `P_n(M_{⌊nt⌋} ≥ ⌈√n·x⌉)` from `reps` replicates of the `n`-particle system.
///
/// A replicate stops as soon as the front reaches the target or the
/// population dies. Replicates that hit the mass cap first are undetermined:
/// they are excluded from the estimate and reported in `capped`.
pub fn estimate_tail(
    params: &BrwParams<f64>,
    t: f64,
    x: f64,
    reps: u64,
    seed: u64,
    opts: &McOptions,
) -> Result<EstimatorResult> {
    check_reps(reps)?;
    if !(t >= 0.0) || !(x >= 0.0) {
        return Err(Error::Precondition("t and x must be non-negative".into()));
    }
    let target = lattice_site(params.n, x);
    let generations = lattice_generations(params.n, t);
    if target <= 0 {
        return Ok(EstimatorResult::from_counts(reps, reps, reps, seed, 0, 0));
    }
    if target > params.step.range() * generations as i64 {
        return Ok(EstimatorResult::from_counts(0, reps, reps, seed, 0, 0));
    }
    let run_opts = RunOptions {
        generations,
        stop_front_at: Some(target),
        mass_cap: opts.mass_cap,
        record_mass: false,
    };
    let initial = opts.initial_for(params);
    let template = Evolver::new(params);
    let outcomes = par::map_indexed(reps as usize, |i| {
        let mut rng = replicate_rng(seed, i as u64);
        let mut ev = template.clone();
        let stats = simulate_run(&mut ev, Population::at(0, initial), &run_opts, &mut rng);
        match stats.end {
            RunEnd::FrontReached => Outcome::Hit,
            RunEnd::Capped => Outcome::Capped,
            _ => Outcome::Miss,
        }
    });
    Ok(tally(&outcomes, seed, None))
}

/// Frequency of extinction before `horizon` generations, tracking total mass
/// only. Runs alive at the horizon count as survivals and are reported in
/// `undecided`; runs above the mass cap count as survivals and are reported in
/// `capped`.
pub fn estimate_extinction(
    params: &BrwParams<f64>,
    horizon: usize,
    reps: u64,
    seed: u64,
    opts: &McOptions,
) -> Result<EstimatorResult> {
    check_reps(reps)?;
    let initial = opts.initial_for(params);
    let ev = Evolver::new(params);
    let outcomes = par::map_indexed(reps as usize, |i| {
        let mut rng = replicate_rng(seed, i as u64);
        let mut total = initial;
        for _ in 0..horizon {
            if total == 0 {
                return Outcome::Hit;
            }
            if total > opts.mass_cap {
                return Outcome::Capped;
            }
            total = ev.step_mass(total, &mut rng);
        }
        if total == 0 {
            Outcome::Hit
        } else {
            Outcome::Undecided
        }
    });
    let extinct = outcomes.iter().filter(|o| matches!(o, Outcome::Hit)).count() as u64;
    let undecided = outcomes.iter().filter(|o| matches!(o, Outcome::Undecided)).count() as u64;
    let capped = outcomes.iter().filter(|o| matches!(o, Outcome::Capped)).count() as u64;
    Ok(EstimatorResult::from_counts(
        extinct, reps, reps, seed, undecided, capped,
    ))
}

/// Candidate front-speed thresholds: `(2θσ_R²)^{−1/2}` (used for gating) and
/// `(2θσ_R²)^{−1}` (recorded for comparison).
pub fn speed_thresholds(theta: f64, sigma_r2: f64) -> Result<(f64, f64)> {
    if !(theta > 0.0) || !(sigma_r2 > 0.0) {
        return Err(Error::Precondition("speed thresholds need θ > 0 and σ_R² > 0".into()));
    }
    let v = 2.0 * theta * sigma_r2;
    Ok((v.powf(-0.5), 1.0 / v))
}

/// One `(γ, t)` cell of a front-speed experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedCell {
    pub gamma: f64,
    pub t: f64,
    pub generations: usize,
    /// The event is "no particle ever strictly right of `√n·t`", i.e. front ≤ this site.
    pub bound_site: i64,
    pub result: EstimatorResult,
}

/// Frequency of `{L_{⌊nγt⌋}((√n·t, ∞)) = 0}` for every `(γ, t)`.
///
/// Replicates stop once the front passes `√n·t` (event fails) or the
/// population dies (event holds). Runs reaching the mass cap first are
/// reported in `capped` and excluded.
pub fn front_speed_experiment(
    params: &BrwParams<f64>,
    gammas: &[f64],
    ts: &[f64],
    reps: u64,
    seed: u64,
    opts: &McOptions,
) -> Result<Vec<SpeedCell>> {
    check_reps(reps)?;
    if !(params.theta > 0.0) {
        return Err(Error::Precondition("front-speed experiments need θ > 0".into()));
    }
    let initial = opts.initial_for(params);
    let template = Evolver::new(params);
    let sqrt_n = (params.n as f64).sqrt();
    let mut cells = Vec::with_capacity(gammas.len() * ts.len());
    for &gamma in gammas {
        for &t in ts {
            if !(gamma > 0.0) || !(t >= 0.0) {
                return Err(Error::Precondition("need γ > 0 and t ≥ 0".into()));
            }
            let generations = lattice_generations(params.n, gamma * t);
            let bound_site = (sqrt_n * t + 1e-9).floor() as i64;
            let run_opts = RunOptions {
                generations,
                stop_front_at: Some(bound_site + 1),
                mass_cap: opts.mass_cap,
                record_mass: false,
            };
            let outcomes = par::map_indexed(reps as usize, |i| {
                let mut rng = replicate_rng(seed, i as u64);
                let mut ev = template.clone();
                let stats = simulate_run(&mut ev, Population::at(0, initial), &run_opts, &mut rng);
                match stats.end {
                    RunEnd::FrontReached => Outcome::Miss,
                    RunEnd::Capped => Outcome::Capped,
                    _ => Outcome::Hit,
                }
            });
            cells.push(SpeedCell {
                gamma,
                t,
                generations,
                bound_site,
                result: tally(&outcomes, seed, None),
            });
        }
    }
    Ok(cells)
}

/// `m(γ) = (1 + θ/n)·Σ_z a_z e^{−γz}`.
pub fn m_gamma(params: &BrwParams<f64>, gamma: f64) -> f64 {
    params.offspring.mean() * params.step.exp_moment(gamma)
}

/// Per-generation sample mean of `W_k = m(γ)^{−k} Σ_z e^{−γz} X_k(z)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdditiveMartingale {
    pub gamma: f64,
    pub m_gamma: f64,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub replicates: u64,
    pub seed: u64,
}

impl AdditiveMartingale {
    /// Largest `|mean_k − W_0| / stderr_k` over generations with positive stderr.
    pub fn worst_z(&self, w0: f64) -> f64 {
        self.means
            .iter()
            .zip(&self.stderrs)
            .filter(|(_, s)| **s > 0.0)
            .map(|(m, s)| (m - w0).abs() / s)
            .fold(0.0, f64::max)
    }
}

/// Additive martingale with `γ = −β/√n`, averaged over `reps` replicates
/// started from `opts.initial` particles (default 1) at the origin.
///
/// A replicate that reaches the mass cap is an error rather than a tally:
/// truncating it would bias every later mean.
pub fn additive_martingale(
    params: &BrwParams<f64>,
    beta: f64,
    k_max: usize,
    reps: u64,
    seed: u64,
    opts: &McOptions,
) -> Result<AdditiveMartingale> {
    check_reps(reps)?;
    let gamma = -beta / (params.n as f64).sqrt();
    let m = m_gamma(params, gamma);
    let initial = opts.initial.unwrap_or(1);
    let template = Evolver::new(params);
    let ln_m = m.ln();
    let paths: Vec<Result<Vec<f64>>> = par::map_indexed(reps as usize, |i| {
        let mut rng = replicate_rng(seed, i as u64);
        let mut ev = template.clone();
        let mut pop = Population::at(0, initial);
        let mut values = Vec::with_capacity(k_max + 1);
        values.push(initial as f64);
        for k in 1..=k_max {
            if pop.is_empty() {
                values.push(0.0);
                continue;
            }
            pop = ev.step(&pop, &mut rng);
            if pop.total() > opts.mass_cap {
                return Err(Error::Resource(format!(
                    "replicate {i} exceeded mass cap {} at generation {k}",
                    opts.mass_cap
                )));
            }
            let shift = k as f64 * ln_m;
            let w: f64 = pop
                .sites()
                .iter()
                .map(|&(z, c)| c as f64 * (-gamma * z as f64 - shift).exp())
                .sum();
            if !w.is_finite() {
                return Err(Error::Numerical(format!("weight overflow at generation {k}")));
            }
            values.push(w);
        }
        Ok(values)
    });
    let mut sum = vec![0.0f64; k_max + 1];
    let mut sum_sq = vec![0.0f64; k_max + 1];
    for p in paths {
        let p = p?;
        for (k, v) in p.iter().enumerate() {
            sum[k] += v;
            sum_sq[k] += v * v;
        }
    }
    let r = reps as f64;
    let means: Vec<f64> = sum.iter().map(|s| s / r).collect();
    let stderrs = sum_sq
        .iter()
        .zip(&means)
        .map(|(sq, mu)| {
            if reps < 2 {
                0.0
            } else {
                let var = ((sq - r * mu * mu) / (r - 1.0)).max(0.0);
                (var / r).sqrt()
            }
        })
        .collect();
    Ok(AdditiveMartingale {
        gamma,
        m_gamma: m,
        means,
        stderrs,
        replicates: reps,
        seed,
    })
}

/// Writes rows of `key columns…, estimate, stderr, reps, undecided, capped, seed`.
pub fn write_estimates_csv<W: Write>(out: W, keys: &[&str], rows: &[(Vec<f64>, EstimatorResult)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = keys.to_vec();
    header.extend(["estimate", "stderr", "reps", "undecided", "capped", "seed"]);
    wtr.write_record(&header)?;
    for (vals, r) in rows {
        if vals.len() != keys.len() {
            return Err(Error::Precondition("row key count differs from header".into()));
        }
        let mut rec: Vec<String> = vals.iter().map(|v| format!("{v}")).collect();
        rec.push(format!("{:.16e}", r.estimate));
        rec.push(format!("{:.16e}", r.stderr));
        rec.push(r.replicates.to_string());
        rec.push(r.undecided.to_string());
        rec.push(r.capped.to_string());
        rec.push(r.seed.to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reproduction manifest: parameters, options, seed and the RNG scheme.
pub fn manifest(params: &BrwParams<f64>, opts: &McOptions, seed: u64, extra: Value) -> Value {
    json!({
        "params": params.to_json(),
        "options": opts,
        "seed": seed,
        "rng": "chacha8, stream = replicate index",
        "experiment": extra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(theta: f64, n: u64) -> BrwParams<f64> {
        BrwParams::binary_simple(theta, n).unwrap()
    }

    #[test]
    fn empty_population_stays_empty() {
        let mut rng = replicate_rng(1, 0);
        let next = evolve_generation(&Population::empty(), &params(0.0, 1), &mut rng);
        assert!(next.is_empty());
        assert_eq!(next.generation(), 1);
    }

    #[test]
    fn single_particle_law() {
        let p = params(0.0, 1);
        let mut ev = Evolver::new(&p);
        let draws = 100_000u64;
        let (mut empty, mut left, mut right) = (0u64, 0u64, 0u64);
        let mut rng = replicate_rng(7, 0);
        for _ in 0..draws {
            let next = ev.step(&Population::at(0, 1), &mut rng);
            match next.sites() {
                [] => empty += 1,
                [(-1, 2)] => left += 1,
                [(1, 2)] => right += 1,
                other => panic!("impossible outcome {other:?}"),
            }
        }
        for (count, p) in [(empty, 0.5), (left, 0.25), (right, 0.25)] {
            let f = count as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((f - p).abs() < 4.0 * se, "{f} vs {p}");
        }
    }

    #[test]
    fn degenerate_step_mean_mass() {
        let p = BrwParams::new(10, 1.0, OffspringLaw::binary(1.1).unwrap(), StepLaw::degenerate()).unwrap();
        let mut ev = Evolver::new(&p);
        let mut rng = replicate_rng(3, 0);
        let draws = 100_000;
        let totals: Vec<f64> = (0..draws)
            .map(|_| ev.step(&Population::at(0, 10), &mut rng).total() as f64)
            .collect();
        let mean = totals.iter().sum::<f64>() / draws as f64;
        let var = totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        assert!((mean - 11.0).abs() < 4.0 * se);
    }

    #[test]
    fn tail_trivial_cases() {
        let p = params(0.0, 25);
        let opts = McOptions::default();
        let r = estimate_tail(&p, 0.4, 0.0, 100, 1, &opts).unwrap();
        assert_eq!((r.estimate, r.stderr), (1.0, 0.0));
        let r = estimate_tail(&p, 0.4, 3.0, 100, 1, &opts).unwrap();
        assert_eq!((r.estimate, r.stderr), (0.0, 0.0));
        assert!(estimate_tail(&p, 0.4, 1.0, 0, 1, &opts).is_err());
    }

    #[test]
    fn speed_at_time_zero_is_certain() {
        let p = params(1.0, 100);
        let cells = front_speed_experiment(&p, &[0.5], &[0.0], 50, 9, &McOptions::default()).unwrap();
        assert_eq!(cells[0].result.estimate, 1.0);
        assert_eq!(cells[0].generations, 0);
        assert!(front_speed_experiment(&params(0.0, 100), &[0.5], &[1.0], 5, 9, &McOptions::default()).is_err());
    }

    #[test]
    fn supercritical_per_particle_extinction() {
        // mean 1.5: p0 = 0.25, p2 = 0.75, q = 1/3
        let p = params(0.5, 1);
        let opts = McOptions {
            mass_cap: 10_000,
            initial: Some(1),
        };
        let r = estimate_extinction(&p, 200, 20_000, 5, &opts).unwrap();
        assert!(r.within(1.0 / 3.0, 4.0), "{r:?}");
    }

    #[test]
    fn additive_martingale_at_zero_gamma() {
        let p = params(1.0, 50);
        assert_eq!(m_gamma(&p, 0.0), 1.0 + 1.0 / 50.0);
        let am = additive_martingale(&p, 0.0, 3, 20_000, 2, &McOptions::default()).unwrap();
        assert_eq!(am.means[0], 1.0);
        assert!(am.worst_z(1.0) < 4.0, "{:?}", am.means);
    }

    #[test]
    fn seeds_are_deterministic() {
        let p = params(1.0, 25);
        let opts = McOptions::default();
        let a = estimate_tail(&p, 0.4, 0.8, 2000, 42, &opts).unwrap();
        let b = estimate_tail(&p, 0.4, 0.8, 2000, 42, &opts).unwrap();
        assert_eq!(a, b);
        let c = estimate_tail(&p, 0.4, 0.8, 2000, 43, &opts).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn population_bookkeeping() {
        let pop = Population::from_counts(&[(3, 1), (-1, 2), (3, 4), (0, 0)], 5);
        assert_eq!(pop.sites(), &[(-1, 2), (3, 5)]);
        assert_eq!(pop.total(), 7);
        assert_eq!(pop.count_at(3), 5);
        assert_eq!(pop.count_at(0), 0);
        assert_eq!(pop.max_site(), Some(3));
    }

    #[test]
    fn csv_layout() {
        let r = EstimatorResult::from_counts(1, 2, 2, 11, 0, 0);
        let mut buf = Vec::new();
        write_estimates_csv(&mut buf, &["t", "x"], &[(vec![0.4, 0.8], r)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,estimate,stderr,reps,undecided,capped,seed\n0.4,0.8,5.0000000000000000e-1,"));
    }
}
