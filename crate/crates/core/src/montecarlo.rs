//! Subordinator and subordinate-Brownian-motion sampling, first-exit
//! simulation and the Monte Carlo estimators built on exit samples.
//!
//! RNG contract: path `i` of a run with seed `s` draws from ChaCha8 seeded
//! with `s` on stream `i`. Results therefore do not depend on how paths are
//! distributed over worker threads, and aggregation is a pairwise sum in
//! path order.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cbf::CompleteBernsteinFunction;
use crate::error::{domain, Error, Result};
use crate::geometry::{distance, norm, OpenSetSpec};
use crate::kernels::{FreeGreen, JumpKernel};
use crate::quad::{gauss_legendre_on, integrate_semi_infinite, interp_uniform, Tolerance};
use crate::report::full;
use crate::special::gamma;
use crate::stats::{mean_se, pairwise_sum};

pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Nodes of the tabulated Lévy tail.
pub const TAIL_NODES: usize = 4096;

/// How the jump-compensation scheme splits small from large jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SmallJumpRule {
    /// Fixed cutoff `ε`.
    Cutoff { epsilon: f64 },
    /// `ε` chosen per step so that `h·μ̄(ε)` equals the given mean number of
    /// simulated jumps.
    ExpectedJumps { mean: f64 },
}

/// `ln μ̄(t)` and `ln ∫₀^t sμ(s) ds` on a uniform grid in `ln t`.
#[derive(Debug, Clone)]
pub struct LevyTable {
    ln_lo: f64,
    step: f64,
    ln_tail: Vec<f64>,
    ln_small_mean: Vec<f64>,
}

impl LevyTable {
    pub fn new(f: &CompleteBernsteinFunction) -> Result<Self> {
        if f.levy_density(1.0).is_none() {
            return Err(Error::Unsupported(format!("{f} has no closed-form Lévy density")));
        }
        let mu = |t: f64| f.levy_density(t).unwrap_or(0.0);
        let tol = Tolerance {
            rel: 1e-12,
            abs: 0.0,
            max_intervals: 2000,
        };
        let tail_at = |t: f64| -> Result<f64> {
            let ln_t = t.ln();
            Ok(integrate_semi_infinite(
                |v: f64| {
                    let s = (ln_t + v).exp();
                    s * mu(s)
                },
                0.0,
                20.0,
                tol,
            )?
            .value)
        };
        let lo = 1e-20f64;
        let mut hi = 1e20f64;
        // exponentially tempered tails: stop where the tail leaves f64 range
        if tail_at(hi)? < 1e-280 {
            let (mut a, mut b) = (lo.ln(), hi.ln());
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if tail_at(m.exp())? < 1e-280 {
                    b = m;
                } else {
                    a = m;
                }
            }
            hi = a.exp();
        }
        let ln_lo = lo.ln();
        let step = (hi.ln() - ln_lo) / (TAIL_NODES - 1) as f64;
        let node = |i: usize| (ln_lo + step * i as f64).exp();
        let gl = gauss_legendre_on(8, 0.0, step);
        let piece = |i: usize, weight: &dyn Fn(f64) -> f64| -> f64 {
            let a = ln_lo + step * i as f64;
            gl.iter().map(|&(v, w)| w * weight((a + v).exp())).sum()
        };
        let mut tail = vec![0.0; TAIL_NODES];
        tail[TAIL_NODES - 1] = tail_at(node(TAIL_NODES - 1))?;
        for i in (0..TAIL_NODES - 1).rev() {
            tail[i] = tail[i + 1] + piece(i, &|s| s * mu(s));
        }
        let mut small = vec![0.0; TAIL_NODES];
        let ln_t0 = ln_lo;
        small[0] = integrate_semi_infinite(
            |v: f64| {
                let s = (ln_t0 - v).exp();
                s * s * mu(s)
            },
            0.0,
            20.0,
            tol,
        )?
        .value;
        for i in 1..TAIL_NODES {
            small[i] = small[i - 1] + piece(i - 1, &|s| s * s * mu(s));
        }
        Ok(Self {
            ln_lo,
            step,
            ln_tail: tail.iter().map(|v| v.ln()).collect(),
            ln_small_mean: small.iter().map(|v| v.ln()).collect(),
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (
            self.ln_lo.exp(),
            (self.ln_lo + self.step * (self.ln_tail.len() - 1) as f64).exp(),
        )
    }

    /// `μ̄(t) = ∫_t^∞ μ`.
    pub fn tail(&self, t: f64) -> f64 {
        interp_uniform(self.ln_lo, self.step, &self.ln_tail, t.ln()).exp()
    }

    /// `∫₀^t s μ(s) ds`.
    pub fn small_jump_mean(&self, t: f64) -> f64 {
        interp_uniform(self.ln_lo, self.step, &self.ln_small_mean, t.ln()).exp()
    }

    /// `t` with `ln μ̄(t) = y`: log-log linear guess refined by secant steps
    /// on the interpolant, extrapolating beyond the table ends.
    fn inverse_ln_tail(&self, y: f64) -> f64 {
        let v = &self.ln_tail;
        let n = v.len();
        // v is decreasing: first index with v[i] < y
        let i = v.partition_point(|&x| x >= y).clamp(1, n - 1);
        let (a, b) = (v[i - 1], v[i]);
        let mut x1 = self.ln_lo + self.step * ((i - 1) as f64 + (y - a) / (b - a));
        let mut x0 = x1 + 0.1 * self.step;
        let g = |x: f64| interp_uniform(self.ln_lo, self.step, v, x) - y;
        let (mut g0, mut g1) = (g(x0), g(x1));
        for _ in 0..4 {
            if g1 == 0.0 || g1 == g0 {
                break;
            }
            let x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
            (x0, g0) = (x1, g1);
            x1 = x2;
            g1 = g(x1);
        }
        x1.exp()
    }
}

#[derive(Debug, Clone)]
pub enum SubordinatorSampler {
    /// Sum of independent positive-stable draws, one per component `(β, w)`
    /// of `φ(λ) = Σ w λ^β`.
    ExactStable {
        components: Vec<(f64, f64)>,
    },
    JumpCompensation {
        table: Box<LevyTable>,
        rule: SmallJumpRule,
    },
}

impl SubordinatorSampler {
    pub fn exact_stable(alpha: f64) -> Result<Self> {
        Self::exact(&CompleteBernsteinFunction::stable(alpha)?)
    }

    pub fn exact(f: &CompleteBernsteinFunction) -> Result<Self> {
        let components = f
            .stable_components()
            .ok_or_else(|| Error::Unsupported(format!("no exact sampler for {f}")))?;
        Ok(SubordinatorSampler::ExactStable { components })
    }

    pub fn jump_compensation(f: &CompleteBernsteinFunction, rule: SmallJumpRule) -> Result<Self> {
        let table = LevyTable::new(f)?;
        if let SmallJumpRule::Cutoff { epsilon } = rule {
            let (lo, hi) = table.range();
            if !(epsilon >= lo && epsilon <= hi) {
                return Err(Error::Range { value: epsilon, lo, hi });
            }
        }
        Ok(SubordinatorSampler::JumpCompensation {
            table: Box::new(table),
            rule,
        })
    }

    /// Exact scheme when `φ` is a sum of stable exponents, jump compensation
    /// with 32 expected jumps per step otherwise.
    pub fn for_phi(f: &CompleteBernsteinFunction) -> Result<Self> {
        Self::exact(f).or_else(|_| Self::jump_compensation(f, SmallJumpRule::ExpectedJumps { mean: 32.0 }))
    }

    pub fn name(&self) -> &'static str {
        match self {
            SubordinatorSampler::ExactStable { .. } => "exact-stable",
            SubordinatorSampler::JumpCompensation { .. } => "jump-compensation",
        }
    }
}

/// Positive `β`-stable draw with `E e^{−λS} = e^{−λ^β}` (Kanter's
/// representation).
pub fn positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>() * std::f64::consts::PI;
    let e: f64 = Exp1.sample(rng);
    if u == 0.0 {
        return 0.0;
    }
    let ln_s =
        (beta * u).sin().ln() - (u.sin().ln()) / beta + (1.0 - beta) / beta * (((1.0 - beta) * u).sin().ln() - e.ln());
    ln_s.exp()
}

/// One draw of `S_h`.
pub fn sample_increment<R: Rng + ?Sized>(s: &SubordinatorSampler, h: f64, rng: &mut R) -> Result<f64> {
    if !(h > 0.0) {
        return Err(domain(format!("time step must be positive, got {h}")));
    }
    Ok(increment_unchecked(s, h, rng))
}

#[inline]
fn increment_unchecked<R: Rng + ?Sized>(s: &SubordinatorSampler, h: f64, rng: &mut R) -> f64 {
    match s {
        SubordinatorSampler::ExactStable { components } => components
            .iter()
            .map(|&(beta, w)| (w * h).powf(1.0 / beta) * positive_stable(beta, rng))
            .sum(),
        SubordinatorSampler::JumpCompensation { table, rule } => {
            let (eps, ln_rate) = match *rule {
                SmallJumpRule::Cutoff { epsilon } => (
                    epsilon,
                    interp_uniform(table.ln_lo, table.step, &table.ln_tail, epsilon.ln()),
                ),
                SmallJumpRule::ExpectedJumps { mean } => {
                    let y = (mean / h).ln();
                    (table.inverse_ln_tail(y), y)
                }
            };
            let mean = h * ln_rate.exp();
            let mut total = h * table.small_jump_mean(eps);
            if mean > 0.0 && mean.is_finite() {
                let count = Poisson::new(mean).map(|p| p.sample(rng)).unwrap_or(0.0) as u64;
                for _ in 0..count {
                    let u: f64 = 1.0 - rng.random::<f64>();
                    total += table.inverse_ln_tail(ln_rate + u.ln());
                }
            }
            total
        }
    }
}

/// `√(2 S_h) Z` with `Z` standard normal in `ℝ^d`, matching the Brownian
/// normalization `E e^{iξ·W_t} = e^{−t|ξ|²}`.
pub fn sample_sbm_increment<R: Rng + ?Sized>(
    s: &SubordinatorSampler,
    h: f64,
    d: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let ds = sample_increment(s, h, rng)?;
    let scale = (2.0 * ds).sqrt();
    Ok((0..d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub seed: u64,
    /// Step policy parameter: `h(x) = θ / φ(δ_D(x)^{−2})`.
    pub theta: f64,
    /// Time horizon; `None` means unbounded.
    pub t_max: Option<f64>,
    /// Spatial cutoff on `|X|`.
    pub rho_max: f64,
    pub samples: usize,
    pub max_steps: u32,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            theta: 0.1,
            t_max: None,
            rho_max: 1e6,
            samples: 10_000,
            max_steps: 1_000_000,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(domain(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if self.samples == 0 {
            return Err(domain("sample count must be at least 1"));
        }
        if !(self.rho_max > 0.0) {
            return Err(domain("rho_max must be positive"));
        }
        Ok(())
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Exponent, dimension and sampler of the process being simulated.
#[derive(Debug, Clone)]
pub struct Process {
    pub phi: CompleteBernsteinFunction,
    pub d: usize,
    pub sampler: SubordinatorSampler,
}

impl Process {
    pub fn new(phi: CompleteBernsteinFunction, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(domain("dimension must be at least 1"));
        }
        let sampler = SubordinatorSampler::for_phi(&phi)?;
        Ok(Self { phi, d, sampler })
    }

    pub fn with_sampler(phi: CompleteBernsteinFunction, d: usize, sampler: SubordinatorSampler) -> Self {
        Self { phi, d, sampler }
    }

    /// Step length at distance `delta` from the complement.
    #[inline]
    pub fn step(&self, theta: f64, delta: f64) -> f64 {
        theta / self.phi.value(1.0 / (delta * delta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Censor {
    Horizon,
    Cutoff,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitSample {
    /// Exit position, or the last position for censored paths.
    pub position: Vec<f64>,
    pub time: f64,
    pub steps: u32,
    pub censor: Option<Censor>,
    /// The exit step's displacement exceeded four times the typical
    /// displacement at that step's time scale.
    pub jump_exit: bool,
}

impl ExitSample {
    pub fn exited(&self) -> bool {
        self.censor.is_none()
    }

    /// Exit position of an uncensored path.
    pub fn exit_position(&self) -> Option<&[f64]> {
        self.exited().then_some(&self.position[..])
    }
}

/// Walks `X` from `x` until it leaves `domain`, calling `occupation(X, h)`
/// with the pre-step position and step length of every step.
pub fn simulate_exit_observed<R, F>(
    p: &Process,
    domain: &OpenSetSpec,
    x: &[f64],
    cfg: &PathConfig,
    rng: &mut R,
    mut occupation: F,
) -> ExitSample
where
    R: Rng + ?Sized,
    F: FnMut(&[f64], f64),
{
    let d = p.d;
    let mut pos = x.to_vec();
    pos.resize(d, 0.0);
    let mut time = 0.0;
    let mut steps = 0u32;
    let horizon = cfg.t_max.unwrap_or(f64::INFINITY);
    let mut dx = vec![0.0; d];
    loop {
        let delta = domain.dist_to_complement(&pos);
        if delta <= 0.0 {
            // started outside: the exit is immediate
            return ExitSample {
                position: pos,
                time,
                steps,
                censor: None,
                jump_exit: false,
            };
        }
        if time >= horizon || steps >= cfg.max_steps {
            return ExitSample {
                position: pos,
                time,
                steps,
                censor: Some(Censor::Horizon),
                jump_exit: false,
            };
        }
        let h = p.step(cfg.theta, delta).min(horizon - time);
        occupation(&pos, h);
        let ds = increment_unchecked(&p.sampler, h, rng);
        let scale = (2.0 * ds).sqrt();
        let mut len2 = 0.0;
        for (c, v) in dx.iter_mut().zip(pos.iter_mut()) {
            let z: f64 = StandardNormal.sample(rng);
            *c = scale * z;
            *v += *c;
            len2 += *c * *c;
        }
        time += h;
        steps += 1;
        if !domain.contains(&pos) {
            let typical = (2.0 * d as f64 / p.phi.inverse(1.0 / h)).sqrt();
            return ExitSample {
                position: pos,
                time,
                steps,
                censor: None,
                jump_exit: len2.sqrt() > 4.0 * typical,
            };
        }
        if norm(&pos) > cfg.rho_max {
            return ExitSample {
                position: pos,
                time,
                steps,
                censor: Some(Censor::Cutoff),
                jump_exit: false,
            };
        }
    }
}

pub fn simulate_exit<R: Rng + ?Sized>(
    p: &Process,
    domain: &OpenSetSpec,
    x: &[f64],
    cfg: &PathConfig,
    rng: &mut R,
) -> ExitSample {
    simulate_exit_observed(p, domain, x, cfg, rng, |_, _| {})
}

/// `cfg.samples` independent exits from `x`, in path order.
pub fn simulate_batch(p: &Process, domain: &OpenSetSpec, x: &[f64], cfg: &PathConfig) -> Result<Vec<ExitSample>> {
    cfg.validate()?;
    Ok((0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| simulate_exit(p, domain, x, cfg, &mut path_rng(cfg.seed, i)))
        .collect())
}

/// Exits together with per-path occupation integrals `Σ g_k(X) h` for each
/// functional in `functionals`.
pub fn simulate_batch_occupation<G>(
    p: &Process,
    domain: &OpenSetSpec,
    x: &[f64],
    cfg: &PathConfig,
    functionals: &[G],
) -> Result<Vec<(ExitSample, Vec<f64>)>>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    Ok((0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; functionals.len()];
            let s = simulate_exit_observed(p, domain, x, cfg, &mut path_rng(cfg.seed, i), |y, h| {
                for (a, g) in acc.iter_mut().zip(functionals) {
                    *a += g(y) * h;
                }
            });
            (s, acc)
        })
        .collect())
}

/// Like [`simulate_batch_occupation`] with path `i` started at `starts[i]`.
pub fn simulate_occupation_from<G>(
    p: &Process,
    domain: &OpenSetSpec,
    starts: &[Vec<f64>],
    cfg: &PathConfig,
    functionals: &[G],
) -> Result<Vec<(ExitSample, Vec<f64>)>>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    Ok(starts
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut acc = vec![0.0; functionals.len()];
            let s = simulate_exit_observed(p, domain, x, cfg, &mut path_rng(cfg.seed, i as u64), |y, h| {
                for (a, g) in acc.iter_mut().zip(functionals) {
                    *a += g(y) * h;
                }
            });
            (s, acc)
        })
        .collect())
}

/// `n` points uniform in `B(center, radius)`, point `i` drawn from stream
/// `i` of `seed`.
pub fn uniform_in_ball(center: &[f64], radius: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = center.len();
    (0..n as u64)
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let len = norm(&z);
            let u: f64 = rng.random();
            let scale = radius * u.powf(1.0 / d as f64) / len;
            center.iter().zip(&z).map(|(c, v)| c + scale * v).collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
    pub censored_fraction: f64,
    pub censored_horizon: f64,
    pub censored_cutoff: f64,
    pub jump_exit_fraction: f64,
    pub mean_steps: f64,
}

impl HarmonicEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            n: 0,
            censored_fraction: 0.0,
            censored_horizon: 0.0,
            censored_cutoff: 0.0,
            jump_exit_fraction: 0.0,
            mean_steps: 0.0,
        }
    }

    /// `|self − other|` in units of the combined standard error.
    pub fn z_score(&self, other: f64, other_se: f64) -> f64 {
        let se = (self.std_error * self.std_error + other_se * other_se).sqrt();
        if se == 0.0 {
            if self.value == other {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.value - other).abs() / se
        }
    }
}

/// Mean of `value(sample)` over a batch with censoring bookkeeping.
pub fn batch_estimate<F>(samples: &[ExitSample], value: F) -> HarmonicEstimate
where
    F: Fn(&ExitSample) -> f64,
{
    let vals: Vec<f64> = samples.iter().map(&value).collect();
    estimate_from_values(samples.iter(), &vals)
}

pub fn estimate_from_values<'a>(samples: impl Iterator<Item = &'a ExitSample>, vals: &[f64]) -> HarmonicEstimate {
    let m = mean_se(vals);
    let n = vals.len().max(1) as f64;
    let (mut hz, mut cut, mut jumps, mut exits) = (0usize, 0usize, 0usize, 0usize);
    let mut steps = Vec::with_capacity(vals.len());
    for s in samples {
        match s.censor {
            Some(Censor::Horizon) => hz += 1,
            Some(Censor::Cutoff) => cut += 1,
            None => {
                exits += 1;
                if s.jump_exit {
                    jumps += 1;
                }
            }
        }
        steps.push(s.steps as f64);
    }
    HarmonicEstimate {
        value: m.mean,
        std_error: m.std_error,
        n: m.n,
        censored_fraction: (hz + cut) as f64 / n,
        censored_horizon: hz as f64 / n,
        censored_cutoff: cut as f64 / n,
        jump_exit_fraction: if exits > 0 { jumps as f64 / exits as f64 } else { 0.0 },
        mean_steps: pairwise_sum(&steps) / n,
    }
}

/// `E_x[f(X_τ); τ < ∞]`, censored paths contributing zero.
pub fn estimate_harmonic<F>(
    p: &Process,
    domain: &OpenSetSpec,
    payoff: F,
    x: &[f64],
    cfg: &PathConfig,
) -> Result<HarmonicEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    let batch = simulate_batch(p, domain, x, cfg)?;
    Ok(batch_estimate(&batch, |s| s.exit_position().map_or(0.0, &payoff)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenEstimate {
    pub value: f64,
    pub std_error: f64,
    pub free_value: f64,
    pub exit_term: HarmonicEstimate,
    pub quadrature_rel_error: f64,
}

/// `G_D(x, y) = G(x, y) − E_x[G(X_τ, y); τ < ∞]` from a batch of exits
/// started at `x`.
pub fn green_from_batch(free: &FreeGreen, batch: &[ExitSample], x: &[f64], y: &[f64]) -> Result<GreenEstimate> {
    let r = distance(x, y);
    if r == 0.0 {
        return Err(Error::Singular("Green function evaluated on the diagonal".into()));
    }
    let g = free.eval(r);
    let exit_term = batch_estimate(batch, |s| s.exit_position().map_or(0.0, |z| free.eval(distance(z, y))));
    Ok(GreenEstimate {
        value: g - exit_term.value,
        std_error: exit_term.std_error,
        free_value: g,
        exit_term,
        quadrature_rel_error: match free {
            FreeGreen::Riesz { .. } => 0.0,
            FreeGreen::Table { max_rel_error, .. } => *max_rel_error,
        },
    })
}

pub fn estimate_green(
    p: &Process,
    free: &FreeGreen,
    domain: &OpenSetSpec,
    x: &[f64],
    y: &[f64],
    cfg: &PathConfig,
) -> Result<GreenEstimate> {
    if distance(x, y) == 0.0 {
        return Err(Error::Singular("x = y".into()));
    }
    let batch = simulate_batch(p, domain, x, cfg)?;
    green_from_batch(free, &batch, x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonKernelEstimate {
    /// Occupation route `E_x ∫₀^τ j(|X_s − z|) ds`.
    pub occupation: HarmonicEstimate,
    /// Gaussian kernel-density estimate of the exit law at `z`.
    pub density: HarmonicEstimate,
    pub bandwidth: f64,
    /// `|occupation − density|` over the combined standard error.
    pub agreement_z: f64,
}

/// Poisson kernel `K_D(x, z)` for `z` outside the closure of `D`, by two
/// routes on the same paths.
pub fn estimate_poisson_kernel(
    p: &Process,
    jump: &JumpKernel,
    domain: &OpenSetSpec,
    x: &[f64],
    z: &[f64],
    cfg: &PathConfig,
    bandwidth: Option<f64>,
) -> Result<PoissonKernelEstimate> {
    let gap = -domain.signed_distance(z);
    if !(gap > 0.0) {
        return Err(domain_err(z));
    }
    let bw = bandwidth.unwrap_or(0.1 * gap);
    let d = p.d as i32;
    let norm_c = (2.0 * std::f64::consts::PI * bw * bw).powf(-0.5 * d as f64);
    let f = |y: &[f64]| jump.eval(distance(y, z));
    let rows = simulate_batch_occupation(p, domain, x, cfg, &[f])?;
    let samples: Vec<ExitSample> = rows.iter().map(|r| r.0.clone()).collect();
    let occ: Vec<f64> = rows.iter().map(|r| r.1[0]).collect();
    let kde: Vec<f64> = samples
        .iter()
        .map(|s| {
            s.exit_position().map_or(0.0, |y| {
                let r = distance(y, z);
                norm_c * (-0.5 * r * r / (bw * bw)).exp()
            })
        })
        .collect();
    let occupation = estimate_from_values(samples.iter(), &occ);
    let density = estimate_from_values(samples.iter(), &kde);
    Ok(PoissonKernelEstimate {
        agreement_z: occupation.z_score(density.value, density.std_error),
        occupation,
        density,
        bandwidth: bw,
    })
}

fn domain_err(z: &[f64]) -> Error {
    domain(format!(
        "Poisson kernel point {z:?} must lie outside the closure of the domain"
    ))
}

/// Streams exits as CSV: coordinates, time, steps, censor flag, jump flag.
pub fn write_exit_csv<W: Write>(samples: &[ExitSample], d: usize, mut w: W) -> Result<()> {
    let coords: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    writeln!(w, "{},time,steps,censored,jump_exit", coords.join(","))?;
    for s in samples {
        let pos: Vec<String> = s.position.iter().map(|v| full(*v)).collect();
        let censor = match s.censor {
            None => "none",
            Some(Censor::Horizon) => "horizon",
            Some(Censor::Cutoff) => "cutoff",
        };
        writeln!(
            w,
            "{},{},{},{},{}",
            pos.join(","),
            full(s.time),
            s.steps,
            censor,
            s.jump_exit
        )?;
    }
    Ok(())
}

/// Mean of the positive-stable law is infinite; this is `E e^{−λ S_h}` for
/// a sum of stable components, used by calibration checks.
pub fn stable_laplace(components: &[(f64, f64)], h: f64, lambda: f64) -> f64 {
    (-h * components.iter().map(|&(b, w)| w * lambda.powf(b)).sum::<f64>()).exp()
}

/// Closed-form `∫₀^t sμ(s) ds` for a sum of stable components.
pub fn stable_small_jump_mean(components: &[(f64, f64)], t: f64) -> f64 {
    components
        .iter()
        .map(|&(b, w)| w * b / gamma(1.0 - b) * t.powf(1.0 - b) / (1.0 - b))
        .sum()
}
