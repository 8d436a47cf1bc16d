//! Named experiments that turn two-sided potential-theoretic estimates into
//! bounded-ratio and decay checks, with report emission.
//!
//! Harmonic functions are generated from ball payoffs placed in the
//! complement of the domain. Their values come from the occupation identity
//! `E_x[f(X_τ)] = E_x ∫₀^τ J_f(X_s) ds`, where `J_f(w) = ∫ j(|w − z|) f(z) dz`
//! is the jump intensity into the payoff, so every path contributes and not
//! only the few that land in the payoff.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cbf::CompleteBernsteinFunction;
use crate::error::{domain, Error, Result};
use crate::geometry::{axis_point, certificate, distance, norm, OpenSetSpec};
use crate::kernels::{BallJumpIntensity, FreeGreen, JumpKernel};
use crate::montecarlo::{
    simulate_batch, simulate_batch_occupation, simulate_occupation_from, uniform_in_ball, ExitSample, PathConfig,
    Process,
};
use crate::potential::StableOracle;
use crate::quad::{integrate, Tolerance};
use crate::report::{band, full, Verdict, SCHEMA_VERSION};
use crate::special::ball_volume;
use crate::stats::{combined_std_error, linear_fit, mean_se, ratio_estimate, MeanSe, RatioEstimate};

/// Relative change of a spread (or fitted exponent) under θ-halving that
/// still counts as refinement-stable.
pub const MC_REFINEMENT_TOLERANCE: f64 = 0.1;

/// A ratio whose log-log slope over the outermost grid points exceeds this
/// (significantly) is growing or decaying without bound.
pub const TREND_EXPONENT_LIMIT: f64 = 0.5;

/// A spread change under refinement within this many standard errors counts
/// as noise ...
pub const REFINEMENT_NOISE_Z: f64 = 2.0;

/// ... provided the relative standard error of the spread is at most this.
pub const REFINEMENT_NOISE_REL_SE: f64 = 0.25;

/// Shells enter the oscillation fit only above this many standard errors;
/// a max − min over a dozen noisy points is itself biased by about 3.5.
pub const OSCILLATION_SIGNAL_Z: f64 = 5.0;

/// Points closer than this fraction of `r` to the complement are skipped,
/// except in the boundary-decay experiment.
pub const BOUNDARY_LAYER: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentId {
    Factorization,
    BhpInfinity,
    Harnack,
    DecayBhp,
    ExitComparability,
    Vanishing,
    GrowthAndShells,
    Oscillation,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::Factorization,
        ExperimentId::BhpInfinity,
        ExperimentId::Harnack,
        ExperimentId::DecayBhp,
        ExperimentId::ExitComparability,
        ExperimentId::Vanishing,
        ExperimentId::GrowthAndShells,
        ExperimentId::Oscillation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::Factorization => "exp_factorization",
            ExperimentId::BhpInfinity => "exp_bhp_infinity",
            ExperimentId::Harnack => "exp_harnack",
            ExperimentId::DecayBhp => "exp_decay_bhp",
            ExperimentId::ExitComparability => "exp_exit_comparability",
            ExperimentId::Vanishing => "exp_vanishing",
            ExperimentId::GrowthAndShells => "exp_growth_and_shells",
            ExperimentId::Oscillation => "exp_oscillation",
        }
    }

    /// Domain used when none is given.
    pub fn default_domain(&self) -> OpenSetSpec {
        match self {
            ExperimentId::Harnack | ExperimentId::DecayBhp => OpenSetSpec::ball(1.0),
            ExperimentId::GrowthAndShells | ExperimentId::Oscillation => OpenSetSpec::HalfSpace,
            _ => OpenSetSpec::exterior_ball(1.0),
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.strip_prefix("exp_").unwrap_or(s).replace('-', "_");
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.name()[4..] == key)
            .ok_or_else(|| Error::Parse(format!("unknown experiment `{s}`")))
    }
}

impl Serialize for ExperimentId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ExperimentId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Variant of the generated harmonic functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Control {
    #[default]
    None,
    /// A payoff supported outside both `U` and `B̄(0, r)`, which the
    /// two-sided estimates exclude.
    Negative,
    /// Identical functions in the two-function experiments.
    SameFunctions,
    /// The constant function 1 on `ℝ^d`.
    Constant,
    /// The analytic positive harmonic profile of the half-space (stable φ).
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub phi: CompleteBernsteinFunction,
    pub domain: OpenSetSpec,
    pub d: usize,
    /// Inner radius; experiment default when absent.
    pub r: Option<f64>,
    pub a: f64,
    /// Radial points per ray, shells, or depths, by experiment.
    pub grid_points: usize,
    pub path: PathConfig,
    pub payoff_scale: f64,
    pub control: Control,
    /// Rerun at θ/2 and require stability.
    pub refine: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentId, phi: CompleteBernsteinFunction) -> Self {
        let grid_points = match experiment {
            ExperimentId::Vanishing => 6,
            ExperimentId::GrowthAndShells => 4,
            ExperimentId::Oscillation => 8,
            _ => 5,
        };
        Self {
            experiment,
            phi,
            domain: experiment.default_domain(),
            d: 3,
            r: None,
            a: 2.0,
            grid_points,
            path: PathConfig {
                theta: 0.05,
                samples: 20_000,
                ..PathConfig::default()
            },
            payoff_scale: 1.0,
            control: Control::None,
            refine: true,
        }
    }

    pub fn with_domain(mut self, domain: OpenSetSpec) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.path.samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.path.seed = seed;
        self
    }

    pub fn with_control(mut self, control: Control) -> Self {
        self.control = control;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.path.validate()?;
        if self.d == 0 {
            return Err(domain("dimension must be at least 1"));
        }
        if matches!(self.experiment, ExperimentId::Factorization | ExperimentId::BhpInfinity) {
            if !(self.a > 1.0) {
                return Err(domain(format!("a must exceed 1, got {}", self.a)));
            }
            if let Some(r) = self.r {
                if !(r >= 1.0) {
                    return Err(domain(format!("r must be at least 1, got {r}")));
                }
            }
        }
        if let Some(r) = self.r {
            if !(r > 0.0) {
                return Err(domain("r must be positive"));
            }
        }
        if self.grid_points < 2 {
            return Err(domain("need at least two grid points"));
        }
        if !(self.payoff_scale > 0.0) {
            return Err(domain("payoff scale must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    /// Grouping key: ray, shell, radius or pair family.
    pub group: String,
    pub point: Vec<f64>,
    pub other_point: Option<Vec<f64>>,
    /// Position along the group's axis (|x|, r, shell index, δ).
    pub coordinate: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub std_error: f64,
    pub refined_ratio: Option<f64>,
    pub refined_std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub theta: f64,
    pub samples: usize,
    pub rho_max: f64,
    pub t_max: Option<f64>,
    pub r: f64,
    pub a: f64,
    pub grid_points: usize,
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_std_error: f64,
    pub slope_p_value: f64,
    /// The exponent derived from the slope (ν̂, γ̂, decay rate).
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: ExperimentId,
    pub phi: String,
    pub domain: String,
    pub d: usize,
    pub control: Control,
    pub rows: Vec<ReportRow>,
    pub band: [f64; 2],
    pub spread: f64,
    pub refined_spread: Option<f64>,
    pub refinement_delta: Option<f64>,
    /// Largest `|ratio − refined ratio|` over combined standard errors.
    pub refinement_max_z: Option<f64>,
    /// `|ln spread − ln refined spread|` over its standard error.
    pub refinement_spread_z: Option<f64>,
    pub trend_exponent: Option<f64>,
    pub trend_std_error: Option<f64>,
    /// Some group's outer rows grow or decay as a power beyond the limit.
    pub trend_violated: bool,
    pub fit: Option<FitSummary>,
    pub refined_fit: Option<FitSummary>,
    pub censored_fraction: f64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "group,coordinate,point,other_point,numerator,denominator,ratio,std_error,refined_ratio,refined_std_error"
        )?;
        let pt = |p: &[f64]| p.iter().map(|v| full(*v)).collect::<Vec<_>>().join(";");
        let opt = |v: Option<f64>| v.map(full).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.group,
                full(r.coordinate),
                pt(&r.point),
                r.other_point.as_deref().map(pt).unwrap_or_default(),
                full(r.numerator),
                full(r.denominator),
                full(r.ratio),
                full(r.std_error),
                opt(r.refined_ratio),
                opt(r.refined_std_error)
            )?;
        }
        Ok(())
    }
}

/// Process, kernels and payoffs shared by the experiments.
struct Setup {
    process: Process,
    jump: JumpKernel,
    d: usize,
}

impl Setup {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            process: Process::new(cfg.phi.clone(), cfg.d)?,
            jump: JumpKernel::new(&cfg.phi, cfg.d)?,
            d: cfg.d,
        })
    }

    fn free(&self) -> Result<FreeGreen> {
        FreeGreen::new(&self.process.phi, self.d)
    }

    fn payoff(&self, center: Vec<f64>, radius: f64, scale: f64) -> Result<BallPayoff> {
        Ok(BallPayoff {
            intensity: BallJumpIntensity::new(&self.jump, &center, radius, 0.25)?,
            center,
            radius,
            scale,
        })
    }
}

/// `scale · 𝟙_{B(center, radius)}`.
struct BallPayoff {
    center: Vec<f64>,
    radius: f64,
    scale: f64,
    intensity: BallJumpIntensity,
}

impl BallPayoff {
    fn value(&self, z: &[f64]) -> f64 {
        if distance(z, &self.center) < self.radius {
            self.scale
        } else {
            0.0
        }
    }

    fn rate(&self, w: &[f64]) -> f64 {
        self.scale * self.intensity.eval(w)
    }
}

type Functional<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>;

/// Per-path occupation integrals at one start point.
struct Occupation {
    columns: Vec<Vec<f64>>,
    exits: Vec<ExitSample>,
    censored: f64,
}

impl Occupation {
    fn mean(&self, k: usize) -> MeanSe {
        mean_se(&self.columns[k])
    }
}

fn occupation(
    setup: &Setup,
    dom: &OpenSetSpec,
    x: &[f64],
    path: &PathConfig,
    functionals: &[Functional<'_>],
) -> Result<Occupation> {
    let rows = simulate_batch_occupation(&setup.process, dom, x, path, functionals)?;
    let mut columns = vec![Vec::with_capacity(rows.len()); functionals.len()];
    let mut exits = Vec::with_capacity(rows.len());
    for (s, v) in rows {
        for (c, x) in columns.iter_mut().zip(v) {
            c.push(x);
        }
        exits.push(s);
    }
    let censored = exits.iter().filter(|s| !s.exited()).count() as f64 / exits.len().max(1) as f64;
    Ok(Occupation {
        columns,
        exits,
        censored,
    })
}

/// Sub-paths per entry point are capped at this many.
const MAX_SPLIT: usize = 16;

/// Occupation integrals from `x` with multilevel splitting on the spheres
/// `|z| = inner·4^j`: a path started beyond a sphere is run until it enters
/// the ball, and every entry point inside `dom` is continued by several
/// independent sub-paths whose mean replaces a single continuation. The
/// estimator is unbiased and keeps paths from far points useful.
fn split_occupation(
    setup: &Setup,
    dom: &OpenSetSpec,
    x: &[f64],
    path: &PathConfig,
    functionals: &[Functional<'_>],
    inner: f64,
) -> Result<Occupation> {
    if norm(x) <= inner {
        return occupation(setup, dom, x, path, functionals);
    }
    let starts = vec![x.to_vec(); path.samples];
    let (values, censored) = split_values(setup, dom, &starts, path, functionals, inner, path.seed, 0)?;
    let mut columns = vec![Vec::with_capacity(values.len()); functionals.len()];
    for v in values {
        for (c, x) in columns.iter_mut().zip(v) {
            c.push(x);
        }
    }
    let n = columns[0].len().max(1) as f64;
    Ok(Occupation {
        columns,
        exits: Vec::new(),
        censored: censored / n,
    })
}

/// Largest `j` with `inner·4^j < |z|`, evaluated exactly as the sphere radius
/// is, so a start always lies strictly outside its sphere.
fn split_level(z: &[f64], inner: f64) -> Option<i32> {
    let r = norm(z);
    if !(r > inner) {
        return None;
    }
    let mut j = 0;
    while inner * 4f64.powi(j + 1) < r {
        j += 1;
    }
    Some(j)
}

/// Per-start occupation totals and the (fractional) number of censored
/// paths.
#[allow(clippy::too_many_arguments)]
fn split_values(
    setup: &Setup,
    dom: &OpenSetSpec,
    starts: &[Vec<f64>],
    path: &PathConfig,
    functionals: &[Functional<'_>],
    inner: f64,
    seed: u64,
    depth: u64,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let mut out = vec![Vec::new(); starts.len()];
    let mut censored = 0.0;
    let mut groups: BTreeMap<Option<i32>, Vec<usize>> = BTreeMap::new();
    for (i, z) in starts.iter().enumerate() {
        groups.entry(split_level(z, inner)).or_default().push(i);
    }
    for (level, idx) in groups {
        let group: Vec<Vec<f64>> = idx.iter().map(|&i| starts[i].clone()).collect();
        let tag = depth
            .wrapping_mul(0x100)
            .wrapping_add(level.map_or(0, |l| l as u64 + 1));
        let gseed = if depth == 0 {
            seed
        } else {
            seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        };
        let cfg = PathConfig { seed: gseed, ..*path };
        let Some(level) = level else {
            for (&i, (s, v)) in idx.iter().zip(simulate_occupation_from(
                &setup.process,
                dom,
                &group,
                &cfg,
                functionals,
            )?) {
                censored += if s.exited() { 0.0 } else { 1.0 };
                out[i] = v;
            }
            continue;
        };
        let sphere = inner * 4f64.powi(level);
        let outer = OpenSetSpec::Intersection(
            Box::new(dom.clone()),
            Box::new(OpenSetSpec::Complement(Box::new(OpenSetSpec::Ball {
                center: vec![0.0; setup.d],
                radius: sphere,
            }))),
        );
        let first = simulate_occupation_from(&setup.process, &outer, &group, &cfg, functionals)?;
        let entries: Vec<usize> = (0..first.len())
            .filter(|&k| first[k].0.exit_position().is_some_and(|z| dom.contains(z)))
            .collect();
        let copies = if entries.is_empty() {
            0
        } else {
            group.len().div_ceil(entries.len()).clamp(1, MAX_SPLIT)
        };
        let next: Vec<Vec<f64>> = entries
            .iter()
            .flat_map(|&k| std::iter::repeat_n(first[k].0.position.clone(), copies))
            .collect();
        let (cont, cont_censored) = if next.is_empty() {
            (Vec::new(), 0.0)
        } else {
            split_values(setup, dom, &next, path, functionals, inner, gseed, depth + 1)?
        };
        censored += cont_censored / copies.max(1) as f64;
        let mut slot = vec![None; first.len()];
        for (e, &k) in entries.iter().enumerate() {
            slot[k] = Some(e);
        }
        for (k, (&i, (s, v))) in idx.iter().zip(first).enumerate() {
            let mut v = v;
            match slot[k] {
                Some(e) => {
                    for (j, a) in v.iter_mut().enumerate() {
                        let sum: f64 = cont[e * copies..(e + 1) * copies].iter().map(|c| c[j]).sum();
                        *a += sum / copies as f64;
                    }
                }
                None => censored += if s.exited() { 0.0 } else { 1.0 },
            }
            out[i] = v;
        }
    }
    Ok((out, censored))
}

fn unit(d: usize, coords: &[(usize, f64)]) -> Vec<f64> {
    let mut v = vec![0.0; d];
    for &(i, c) in coords {
        v[i] = c;
    }
    let n = norm(&v);
    v.iter().map(|c| c / n).collect()
}

fn scaled(dir: &[f64], t: f64) -> Vec<f64> {
    dir.iter().map(|c| c * t).collect()
}

/// Log-log slope of a group's outer rows: a weighted least-squares fit over
/// the outermost three, and the outermost segment alone.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Trend {
    slope: f64,
    std_error: f64,
    last_slope: f64,
    last_std_error: f64,
}

impl Trend {
    /// Power-law growth or decay beyond the limit that persists into the
    /// last segment; a ratio that is still settling towards a constant
    /// flattens there.
    fn is_violation(&self) -> bool {
        let beyond = |s: f64, e: f64| s.abs() > TREND_EXPONENT_LIMIT && s.abs() > 3.0 * e;
        beyond(self.slope, self.std_error)
            && beyond(self.last_slope, self.last_std_error)
            && self.slope.signum() == self.last_slope.signum()
    }
}

fn weighted_slope(pts: &[(f64, f64, f64)]) -> (f64, f64) {
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.0 * p.2).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.1 * p.2).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    (sxy / sxx, (1.0 / sxx).sqrt())
}

/// Per-group trends of `ln ratio` against `ln coordinate`; groups with fewer
/// than three positive rows have none.
fn outer_trends(rows: &[ReportRow]) -> Vec<Trend> {
    let mut groups: BTreeMap<&str, Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(&r.group).or_default().push(r);
    }
    let mut out = Vec::new();
    for (_, mut g) in groups {
        g.sort_by(|a, b| a.coordinate.total_cmp(&b.coordinate));
        if g.len() < 3 {
            continue;
        }
        let tail = &g[g.len() - 3..];
        if tail.iter().any(|r| !(r.ratio > 0.0 && r.ratio.is_finite())) {
            continue;
        }
        let pts: Vec<(f64, f64, f64)> = tail
            .iter()
            .map(|r| {
                let s = (r.std_error / r.ratio).max(1e-12);
                (r.coordinate.ln(), r.ratio.ln(), 1.0 / (s * s))
            })
            .collect();
        let (slope, std_error) = weighted_slope(&pts);
        let (last_slope, last_std_error) = weighted_slope(&pts[1..]);
        out.push(Trend {
            slope,
            std_error,
            last_slope,
            last_std_error,
        });
    }
    out
}

/// The trend of largest significance, for the report.
fn strongest(trends: &[Trend]) -> Option<Trend> {
    let score = |t: &Trend| t.slope.abs() / t.std_error.max(1e-300);
    trends.iter().copied().max_by(|a, b| score(a).total_cmp(&score(b)))
}

/// Rows at one θ plus the report-level extras.
struct Table {
    rows: Vec<ReportRow>,
    fit: Option<FitSummary>,
    censored: f64,
    notes: Vec<String>,
    r: f64,
}

fn fit_summary(x: &[f64], y: &[f64], exponent: impl Fn(f64) -> f64) -> Option<FitSummary> {
    let f = linear_fit(x, y)?;
    Some(FitSummary {
        slope: f.slope,
        intercept: f.intercept,
        r_squared: f.r_squared,
        slope_std_error: f.slope_std_error,
        slope_p_value: f.slope_p_value,
        exponent: exponent(f.slope),
    })
}

/// Runs an experiment at the configured θ and, when `refine` is set, at θ/2.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    let compute = |path: &PathConfig| -> Result<Table> {
        match cfg.experiment {
            ExperimentId::Factorization => factorization_table(&setup, cfg, path),
            ExperimentId::BhpInfinity => bhp_table(&setup, cfg, path),
            ExperimentId::Harnack => harnack_table(&setup, cfg, path),
            ExperimentId::DecayBhp => decay_bhp_table(&setup, cfg, path),
            ExperimentId::ExitComparability => exit_comparability_table(&setup, cfg, path),
            ExperimentId::Vanishing => vanishing_table(&setup, cfg, path),
            ExperimentId::GrowthAndShells => growth_table(&setup, cfg, path),
            ExperimentId::Oscillation => oscillation_table(&setup, cfg, path),
        }
    };
    let base = compute(&cfg.path)?;
    let refined = if cfg.refine {
        Some(compute(&PathConfig {
            theta: 0.5 * cfg.path.theta,
            ..cfg.path
        })?)
    } else {
        None
    };
    Ok(assemble(cfg, base, refined))
}

fn assemble(cfg: &ExperimentConfig, base: Table, refined: Option<Table>) -> ExperimentReport {
    let mut rows = base.rows;
    let mut max_z: Option<f64> = None;
    if let Some(t) = &refined {
        for (r, q) in rows.iter_mut().zip(&t.rows) {
            r.refined_ratio = Some(q.ratio);
            r.refined_std_error = Some(q.std_error);
            let se = (r.std_error.powi(2) + q.std_error.powi(2)).sqrt();
            let z = if se > 0.0 {
                (r.ratio - q.ratio).abs() / se
            } else if r.ratio == q.ratio {
                0.0
            } else {
                f64::INFINITY
            };
            max_z = Some(max_z.map_or(z, |m: f64| m.max(z)));
        }
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let (lo, hi, spread) = band(&ratios);
    let refined_spread = refined
        .as_ref()
        .map(|t| band(&t.rows.iter().map(|r| r.ratio).collect::<Vec<_>>()).2);
    let refinement_delta = refined_spread.map(|s| if s == spread { 0.0 } else { (s / spread - 1.0).abs() });
    let spread_z = refined.as_ref().map(|_| spread_refinement_z(&rows));
    let stable = refinement_stable(refinement_delta, spread_z.map(|z| z.0), spread_z.map(|z| z.1));
    let trends = outer_trends(&rows);
    let trend = strongest(&trends);
    let trend_violated = trends.iter().any(Trend::is_violation);
    let refined_fit = refined.as_ref().and_then(|t| t.fit.clone());
    let mut notes = base.notes;
    if refinement_delta.is_none() {
        notes.push("refinement disabled: a positive verdict needs the θ/2 rerun".into());
    }
    let verdict = decide(cfg, &rows, spread, stable, trend_violated, &base.fit, &refined_fit);
    let mut tolerances = BTreeMap::new();
    tolerances.insert("refinement".to_string(), MC_REFINEMENT_TOLERANCE);
    tolerances.insert("trend_exponent".to_string(), TREND_EXPONENT_LIMIT);
    tolerances.insert("boundary_layer".to_string(), BOUNDARY_LAYER);
    tolerances.insert("oscillation_signal_z".to_string(), OSCILLATION_SIGNAL_Z);
    tolerances.insert("refinement_noise_z".to_string(), REFINEMENT_NOISE_Z);
    tolerances.insert("refinement_noise_rel_se".to_string(), REFINEMENT_NOISE_REL_SE);
    ExperimentReport {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.experiment,
        phi: cfg.phi.id(),
        domain: cfg.domain.to_string(),
        d: cfg.d,
        control: cfg.control,
        rows,
        band: [lo, hi],
        spread,
        refined_spread,
        refinement_delta,
        refinement_max_z: max_z,
        refinement_spread_z: spread_z.map(|z| z.0),
        trend_exponent: trend.map(|t| t.slope),
        trend_std_error: trend.map(|t| t.std_error),
        trend_violated,
        fit: base.fit,
        refined_fit,
        censored_fraction: base.censored,
        verdict,
        notes,
        provenance: Provenance {
            seed: cfg.path.seed,
            theta: cfg.path.theta,
            samples: cfg.path.samples,
            rho_max: cfg.path.rho_max,
            t_max: cfg.path.t_max,
            r: base.r,
            a: cfg.a,
            grid_points: cfg.grid_points,
            tolerances,
        },
    }
}

/// `(z, relative standard error)` of the change in `ln spread` between the
/// two runs, taking the extreme rows of each.
fn spread_refinement_z(rows: &[ReportRow]) -> (f64, f64) {
    let ln_se = |vals: &[(f64, f64)]| {
        let max = vals
            .iter()
            .copied()
            .fold((f64::NEG_INFINITY, 0.0), |b, v| if v.0 > b.0 { v } else { b });
        let min = vals
            .iter()
            .copied()
            .fold((f64::INFINITY, 0.0), |b, v| if v.0 < b.0 { v } else { b });
        (
            (max.0 / min.0).ln(),
            ((max.1 / max.0).powi(2) + (min.1 / min.0).powi(2)).sqrt(),
        )
    };
    let base: Vec<(f64, f64)> = rows.iter().map(|r| (r.ratio, r.std_error)).collect();
    let refined: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.refined_ratio?, r.refined_std_error?)))
        .collect();
    let (a, sa) = ln_se(&base);
    let (b, sb) = ln_se(&refined);
    let se = (sa * sa + sb * sb).sqrt();
    let z = if a == b {
        0.0
    } else if se > 0.0 {
        (a - b).abs() / se
    } else {
        f64::INFINITY
    };
    (z, sa.max(sb))
}

/// Spread change within tolerance, or within Monte Carlo noise when that
/// noise is itself small.
fn refinement_stable(delta: Option<f64>, z: Option<f64>, rel_se: Option<f64>) -> bool {
    match (delta, z, rel_se) {
        (Some(d), _, _) if d <= MC_REFINEMENT_TOLERANCE => true,
        (Some(_), Some(z), Some(s)) => z <= REFINEMENT_NOISE_Z && s <= REFINEMENT_NOISE_REL_SE,
        _ => false,
    }
}

fn decide(
    cfg: &ExperimentConfig,
    rows: &[ReportRow],
    spread: f64,
    stable: bool,
    trend_violated: bool,
    fit: &Option<FitSummary>,
    refined_fit: &Option<FitSummary>,
) -> Verdict {
    match cfg.experiment {
        ExperimentId::Harnack => {
            // r-uniformity: no significant trend of ln spread in ln r
            let Some(f) = fit else { return Verdict::Inconclusive };
            if !spread.is_finite() {
                return Verdict::Inconclusive;
            }
            let trending = f.slope.abs() > 0.05 && f.slope_p_value < 0.05;
            if trending {
                Verdict::Violated
            } else if stable {
                Verdict::Bounded
            } else {
                Verdict::Inconclusive
            }
        }
        ExperimentId::Vanishing => {
            let Some(f) = fit else { return Verdict::Inconclusive };
            let decaying = f.slope < 0.0
                && (f.slope.abs() > 3.0 * f.slope_std_error || f.slope_std_error == 0.0)
                && f.slope.abs() > 1e-9;
            if !decaying {
                return Verdict::Violated;
            }
            let fit_stable = refined_fit
                .as_ref()
                .is_some_and(|g| (g.exponent / f.exponent - 1.0).abs() <= MC_REFINEMENT_TOLERANCE);
            if fit_stable {
                Verdict::Decaying { nu: f.exponent }
            } else {
                Verdict::Inconclusive
            }
        }
        ExperimentId::GrowthAndShells => {
            let Some(f) = fit else { return Verdict::Inconclusive };
            let d = cfg.d as f64;
            let lower_ok = rows
                .iter()
                .filter(|r| r.group == "lower-bound")
                .all(|r| r.ratio > 3.0 * r.std_error && r.ratio > 0.0);
            // any γ̂ > 0 is compatible with the bound for some γ ∈ (0, d)
            if !(f.exponent > 0.0) || !lower_ok {
                return Verdict::Violated;
            }
            if f.r_squared < 0.9 {
                return Verdict::Inconclusive;
            }
            let fit_stable = refined_fit
                .as_ref()
                .is_some_and(|g| (g.exponent - f.exponent).abs() <= MC_REFINEMENT_TOLERANCE * d);
            if fit_stable {
                Verdict::Bounded
            } else {
                Verdict::Inconclusive
            }
        }
        ExperimentId::Oscillation => {
            if cfg.control == Control::SameFunctions {
                return if rows.iter().all(|r| r.ratio == 0.0) {
                    Verdict::Bounded
                } else {
                    Verdict::Violated
                };
            }
            let Some(f) = fit else { return Verdict::Inconclusive };
            if !(f.exponent > 0.0 && f.r_squared >= 0.9) {
                return Verdict::Inconclusive;
            }
            let fit_stable = refined_fit.as_ref().is_some_and(|g| {
                g.exponent > 0.0
                    && (g.exponent / f.exponent - 1.0).abs()
                        <= 2.0 * MC_REFINEMENT_TOLERANCE + 3.0 * f.slope_std_error.max(g.slope_std_error) / f.exponent
            });
            if fit_stable {
                Verdict::Decaying { nu: f.exponent }
            } else {
                Verdict::Inconclusive
            }
        }
        _ => {
            if trend_violated {
                return Verdict::Violated;
            }
            if !spread.is_finite() {
                return Verdict::Inconclusive;
            }
            if stable {
                Verdict::Bounded
            } else {
                Verdict::Inconclusive
            }
        }
    }
}

fn row(
    group: &str,
    point: Vec<f64>,
    coordinate: f64,
    numerator: f64,
    denominator: f64,
    ratio: f64,
    std_error: f64,
) -> ReportRow {
    ReportRow {
        group: group.to_string(),
        point,
        other_point: None,
        coordinate,
        numerator,
        denominator,
        ratio,
        std_error,
        refined_ratio: None,
        refined_std_error: None,
    }
}

/// Radial grid `a r · 1.25 · 2^k` on the rays `e_d` and `e_1`, restricted to
/// points of `U` away from its boundary.
fn outer_grid(cfg: &ExperimentConfig, dom: &OpenSetSpec, r: f64) -> Vec<(String, Vec<f64>, f64)> {
    let d = cfg.d;
    let mut rays = vec![("ray-axis".to_string(), axis_point(d, 1.0))];
    if d >= 2 {
        rays.push(("ray-side".to_string(), unit(d, &[(0, 1.0)])));
    }
    let mut pts = Vec::new();
    for (name, dir) in rays {
        for k in 0..cfg.grid_points {
            let t = cfg.a * r * 1.25 * 2f64.powi(k as i32);
            let x = scaled(&dir, t);
            if dom.dist_to_complement(&x) >= BOUNDARY_LAYER * r {
                pts.push((name.clone(), x, t));
            }
        }
    }
    pts
}

/// The payoff supported outside `U ∪ B̄(0, r)` used by the negative control:
/// a ball of radius `r/2` inside a hole of radius `r` cut from the domain.
fn negative_control_domain(cfg: &ExperimentConfig, dom: &OpenSetSpec, r: f64) -> (OpenSetSpec, Vec<f64>, f64) {
    let center = axis_point(cfg.d, 6.0 * cfg.a * r);
    let hole = OpenSetSpec::Ball {
        center: center.clone(),
        radius: r,
    };
    (
        OpenSetSpec::Intersection(Box::new(dom.clone()), Box::new(OpenSetSpec::Complement(Box::new(hole)))),
        center,
        0.5 * r,
    )
}

/// `∫_{B(0, ρ)} u` with `u = f` off `U` and `u = E_z ∫ J_f` on `U`, from one
/// path per uniform start point.
fn ball_integral(setup: &Setup, dom: &OpenSetSpec, payoff: &BallPayoff, rho: f64, path: &PathConfig) -> Result<MeanSe> {
    let d = setup.d;
    let starts = uniform_in_ball(&vec![0.0; d], rho, path.samples, path.seed ^ 0x9e37_79b9_7f4a_7c15);
    let f: Vec<Functional<'_>> = vec![Box::new(|w: &[f64]| payoff.rate(w))];
    let rows = simulate_occupation_from(&setup.process, dom, &starts, path, &f)?;
    let vol = ball_volume(d) * rho.powi(d as i32);
    let vals: Vec<f64> = rows
        .iter()
        .zip(&starts)
        .map(|((_, occ), z)| vol * if dom.contains(z) { occ[0] } else { payoff.value(z) })
        .collect();
    Ok(mean_se(&vals))
}

fn require_avoids(dom: &OpenSetSpec, r: f64) -> Result<()> {
    if dom.avoids_ball(r) {
        Ok(())
    } else {
        Err(domain(format!(
            "the domain must lie outside the closed ball of radius {r}"
        )))
    }
}

fn factorization_table(setup: &Setup, cfg: &ExperimentConfig, path: &PathConfig) -> Result<Table> {
    let r = cfg.r.unwrap_or(1.0);
    require_avoids(&cfg.domain, r)?;
    let d = cfg.d;
    let (dom, payoff) = if cfg.control == Control::Negative {
        let (dom, c, rad) = negative_control_domain(cfg, &cfg.domain, r);
        (dom, setup.payoff(c, rad, cfg.payoff_scale)?)
    } else {
        (
            cfg.domain.clone(),
            setup.payoff(vec![0.0; d], 0.5 * r, cfg.payoff_scale)?,
        )
    };
    let integral = ball_integral(setup, &dom, &payoff, cfg.a * r, path)?;
    let jump = &setup.jump;
    let mut rows = Vec::new();
    let mut censored = 0.0;
    let grid = outer_grid(cfg, &dom, r);
    for (group, x, t) in &grid {
        let f: Vec<Functional<'_>> = vec![
            Box::new(|w: &[f64]| payoff.rate(w)),
            Box::new(|w: &[f64]| jump.eval(norm(w))),
        ];
        let occ = split_occupation(setup, &dom, x, path, &f, cfg.a * r)?;
        censored += occ.censored / grid.len() as f64;
        let q = ratio_estimate(&occ.columns[0], &occ.columns[1]);
        let (u, k) = (occ.mean(0).mean, occ.mean(1).mean);
        let ratio = q.value / integral.mean;
        let se = ratio * ((q.std_error / q.value).powi(2) + (integral.std_error / integral.mean).powi(2)).sqrt();
        rows.push(row(group, x.clone(), *t, u, k * integral.mean, ratio, se));
    }
    Ok(Table {
        rows,
        fit: None,
        censored,
        notes: vec![format!(
            "ball integral {} ± {}",
            full(integral.mean),
            full(integral.std_error)
        )],
        r,
    })
}

fn bhp_table(setup: &Setup, cfg: &ExperimentConfig, path: &PathConfig) -> Result<Table> {
    let r = cfg.r.unwrap_or(1.0);
    require_avoids(&cfg.domain, r)?;
    let d = cfg.d;
    let side = |s: f64| {
        let mut c = vec![0.0; d];
        c[0] = s * 0.5 * r;
        c
    };
    let v_payoff = setup.payoff(side(-1.0), 0.25 * r, 1.0)?;
    let (dom, u_payoff) = match cfg.control {
        Control::Negative => {
            let (dom, c, rad) = negative_control_domain(cfg, &cfg.domain, r);
            (dom, setup.payoff(c, rad, cfg.payoff_scale)?)
        }
        Control::SameFunctions => (
            cfg.domain.clone(),
            setup.payoff(side(-1.0), 0.25 * r, cfg.payoff_scale)?,
        ),
        _ => (cfg.domain.clone(), setup.payoff(side(1.0), 0.25 * r, cfg.payoff_scale)?),
    };
    let grid = outer_grid(cfg, &dom, r);
    let mut quotients: Vec<(String, Vec<f64>, f64, RatioEstimate)> = Vec::new();
    let mut censored = 0.0;
    for (group, x, t) in &grid {
        let f: Vec<Functional<'_>> = vec![
            Box::new(|w: &[f64]| u_payoff.rate(w)),
            Box::new(|w: &[f64]| v_payoff.rate(w)),
        ];
        let occ = split_occupation(setup, &dom, x, path, &f, cfg.a * r)?;
        censored += occ.censored / grid.len() as f64;
        quotients.push((
            group.clone(),
            x.clone(),
            *t,
            ratio_estimate(&occ.columns[0], &occ.columns[1]),
        ));
    }
    // (u/v)(x) / (u/v)(y) against the innermost point of the axis ray
    let mut rows = Vec::new();
    let Some(reference) = quotients.first() else {
        return Err(domain("no grid point lies in the domain"));
    };
    let q0 = reference.3.value;
    for (group, x, t, q) in &quotients {
        let ratio = q.value / q0;
        let se = ratio * ((q.std_error / q.value).powi(2) + (reference.3.std_error / q0).powi(2)).sqrt();
        let se = if std::ptr::eq(q, &reference.3) { 0.0 } else { se };
        let mut rw = row(group, x.clone(), *t, q.value, q0, ratio, se);
        rw.other_point = Some(reference.1.clone());
        rows.push(rw);
    }
    Ok(Table {
        rows,
        fit: None,
        censored,
        notes: vec!["pair ratios (u/v)(x)/(u/v)(y) with y the innermost axis point; the band over all pairs is [min/max, max/min]".into()],
        r,
    })
}

fn harnack_table(setup: &Setup, cfg: &ExperimentConfig, path: &PathConfig) -> Result<Table> {
    let d = cfg.d;
    let radii: Vec<f64> = (0..cfg.grid_points)
        .map(|k| 1e-2 * 1e4f64.powf(k as f64 / (cfg.grid_points - 1) as f64))
        .collect();
    let mut rows = Vec::new();
    let mut censored = 0.0;
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for &r in &radii {
        let ball = OpenSetSpec::Ball {
            center: vec![0.0; d],
            radius: r,
        };
        let mut c = vec![0.0; d];
        c[0] = 2.0 * r;
        let payoff = setup.payoff(c, 0.5 * r, cfg.payoff_scale)?;
        let mut pts = vec![vec![0.0; d]];
        for i in 0..d.min(2) {
            for s in [-1.0, 1.0] {
                let mut x = vec![0.0; d];
                x[i] = s * 0.45 * r;
                pts.push(x);
            }
        }
        let mut vals = Vec::new();
        for x in &pts {
            if cfg.control == Control::Constant {
                vals.push((cfg.payoff_scale, 0.0));
                continue;
            }
            let f: Vec<Functional<'_>> = vec![Box::new(|w: &[f64]| payoff.rate(w))];
            let occ = occupation(setup, &ball, x, path, &f)?;
            censored += occ.censored / (pts.len() * radii.len()) as f64;
            let m = occ.mean(0);
            vals.push((m.mean, m.std_error));
        }
        let (imax, max) = vals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, v)| if v.0 > b.1 { (i, v.0) } else { b });
        let (imin, min) = vals
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, v)| if v.0 < b.1 { (i, v.0) } else { b });
        let spread = max / min;
        let se = spread * ((vals[imax].1 / max).powi(2) + (vals[imin].1 / min).powi(2)).sqrt();
        lx.push(r.ln());
        ly.push(spread.ln());
        rows.push(row("radius", vec![0.0; d], r, max, min, spread, se));
    }
    Ok(Table {
        rows,
        fit: fit_summary(&lx, &ly, |s| s),
        censored,
        notes: vec!["ratio = sup/inf of u over B(0, r/2); fit is ln spread against ln r".into()],
        r: 1.0,
    })
}

/// Boundary point, inward normal and a payoff ball away from it.
#[allow(clippy::type_complexity)]
fn decay_geometry(dom: &OpenSetSpec, d: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    let e1 = unit(d, &[(0, 1.0)]);
    match dom {
        OpenSetSpec::Ball { center, radius } if norm(center) == 0.0 => {
            Ok((scaled(&e1, -radius), e1.clone(), scaled(&e1, 3.0 * radius), *radius))
        }
        OpenSetSpec::ExteriorBall { center, radius } if norm(center) == 0.0 => Ok((
            scaled(&e1, *radius),
            e1.clone(),
            scaled(&e1, -0.5 * radius),
            0.25 * radius,
        )),
        _ => Err(Error::Unsupported(
            "boundary decay runs on centred balls and exterior balls".into(),
        )),
    }
}

fn decay_bhp_table(setup: &Setup, cfg: &ExperimentConfig, path: &PathConfig) -> Result<Table> {
    let d = cfg.d;
    let (q, normal, pc, pr) = decay_geometry(&cfg.domain, d)?;
    let scale = match &cfg.domain {
        OpenSetSpec::Ball { radius, .. } | OpenSetSpec::ExteriorBall { radius, .. } => *radius,
        _ => 1.0,
    };
    let payoff = setup.payoff(pc, pr, cfg.payoff_scale)?;
    let depths: Vec<f64> = (0..cfg.grid_points)
        .map(|k| 0.2 * scale * 0.5f64.powi(k as i32))
        .collect();
    let mut vals = Vec::new();
    let mut censored = 0.0;
    for &delta in &depths {
        let x: Vec<f64> = q.iter().zip(&normal).map(|(a, n)| a + delta * n).collect();
        let f: Vec<Functional<'_>> = vec![Box::new(|w: &[f64]| payoff.rate(w))];
        let occ = occupation(setup, &cfg.domain, &x, path, &f)?;
        censored += occ.censored / depths.len() as f64;
        let m = occ.mean(0);
        vals.push((x, delta, m));
    }
    let phi = &setup.process.phi;
    let mut rows = Vec::new();
    for i in 0..vals.len() {
        for j in 0..vals.len() {
            if i == j {
                continue;
            }
            let (x, dx, ux) = &vals[i];
            let (y, dy, uy) = &vals[j];
            if dx >= dy {
                continue;
            }
            // u(x)/u(y) over sqrt(φ(δ(y)^{-2}) / φ(δ(x)^{-2})), x nearer the boundary
            let bound = (phi.value(dy.powi(-2)) / phi.value(dx.powi(-2))).sqrt();
            let ratio = ux.mean / uy.mean / bound;
            let se = ratio * ((ux.std_error / ux.mean).powi(2) + (uy.std_error / uy.mean).powi(2)).sqrt();
            let mut rw = row(
                &format!("pair-{i}-{j}"),
                x.clone(),
                *dx / *dy,
                ux.mean / uy.mean,
                bound,
                ratio,
                se,
            );
            rw.other_point = Some(y.clone());
            rows.push(rw);
        }
    }
    Ok(Table {
        rows,
        fit: None,
        censored,
        notes: vec!["coordinate = δ(x)/δ(y); the fitted constant c is the band maximum".into()],
        r: scale,
    })
}

fn exit_comparability_table(setup: &Setup, cfg: &ExperimentConfig, path: &PathConfig) -> Result<Table> {
    let d = cfg.d;
    let free = setup.free()?;
    let phi = &setup.process.phi;
    let oracle = StableOracle::for_phi(phi, d).ok();
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut censored = 0.0;
    let jump = &setup.jump;
    let radii = [0.5, 1.0, 2.0];
    let factors = [1.5, 3.0, 6.0];
    let mut oracle_z: f64 = 0.0;
    for &r in &radii {
        let dom = OpenSetSpec::exterior_ball(r);
        for &m in &factors {
            let x = axis_point(d, m * r);
            let f: Vec<Functional<'_>> = vec![Box::new(|w: &[f64]| jump.eval(norm(w)))];
            let occ = occupation(setup, &dom, &x, path, &f)?;
            censored += occ.censored / (radii.len() * factors.len()) as f64;
            let hits: Vec<f64> = occ.exits.iter().map(|s| if s.exited() { 1.0 } else { 0.0 }).collect();
            let p = mean_se(&hits);
            let k = occ.mean(0);
            let g = free.eval(m * r);
            let scale = phi.value(1.0 / (r * r));
            let den_p = r.powi(d as i32) * scale * g;
            rows.push(row(
                &format!("hit-r{r}"),
                x.clone(),
                m,
                p.mean,
                den_p,
                p.mean / den_p,
                p.std_error / den_p,
            ));
            let den_k = scale * g;
            rows.push(row(
                &format!("poisson-r{r}"),
                x.clone(),
                m,
                k.mean,
                den_k,
                k.mean / den_k,
                k.std_error / den_k,
            ));
            if let Some(o) = &oracle {
                let want = o.ball_hitting_probability(r, m * r);
                oracle_z = oracle_z.max((p.mean - want).abs() / p.std_error.max(1e-300));
            }
        }
    }
    if oracle.is_some() {
        notes.push(format!("largest |hit − oracle| / se = {}", full(oracle_z)));
    }
    Ok(Table {
        rows,
        fit: None,
        censored,
        notes,
        r: 1.0,
    })
}

fn vanishing_table(setup: &Setup, cfg: &ExperimentConfig, path: &PathConfig) -> Result<Table> {
    let d = cfg.d;
    let cert = certificate(&cfg.domain, d)?;
    let r = cfg.r.unwrap_or(cert.big_r);
    let dir = {
        let w = cert.witness_at(r);
        let n = norm(&w);
        w.iter().map(|c| c / n).collect::<Vec<_>>()
    };
    let payoff = setup.payoff(vec![0.0; d], 0.5 * r.min(cert.big_r), cfg.payoff_scale)?;
    let jump = &setup.jump;
    let mut rows = Vec::new();
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    let mut censored = 0.0;
    let mut poisson = Vec::new();
    for k in 0..cfg.grid_points {
        let t = 2.0 * r * 2f64.powi(k as i32);
        let x = scaled(&dir, t);
        let (u, k_val) = if cfg.control == Control::Constant {
            (
                MeanSe {
                    mean: 1.0,
                    std_error: 0.0,
                    n: 0,
                },
                None,
            )
        } else {
            let f: Vec<Functional<'_>> = vec![
                Box::new(|w: &[f64]| payoff.rate(w)),
                Box::new(|w: &[f64]| jump.eval(norm(w))),
            ];
            let occ = split_occupation(setup, &cfg.domain, &x, path, &f, r)?;
            censored += occ.censored / cfg.grid_points as f64;
            (occ.mean(0), Some(occ.mean(1)))
        };
        lx.push(t.ln());
        ly.push(u.mean.ln());
        if let Some(kv) = k_val {
            poisson.push(kv.mean);
        }
        rows.push(row("ray", x, t, u.mean, 1.0, u.mean, u.std_error));
    }
    let mut notes = Vec::new();
    if !poisson.is_empty() {
        let monotone = poisson.windows(2).all(|w| w[1] < w[0]);
        notes.push(format!("K(x,0) decreasing along the ray: {monotone}"));
    }
    Ok(Table {
        rows,
        fit: fit_summary(&lx, &ly, |s| -s),
        censored,
        notes,
        r,
    })
}

/// `G_D(y₀, x)` for many `x` from one batch of exits started at `y₀`.
fn green_from(free: &FreeGreen, batch: &[ExitSample], y0: &[f64], x: &[f64]) -> Vec<f64> {
    let g = free.eval(distance(x, y0));
    batch
        .iter()
        .map(|s| g - s.exit_position().map_or(0.0, |z| free.eval(distance(z, x))))
        .collect()
}

fn growth_table(setup: &Setup, cfg: &ExperimentConfig, path: &PathConfig) -> Result<Table> {
    let d = cfg.d;
    let dom = &cfg.domain;
    let cert = certificate(dom, d)?;
    let r = cfg.r.unwrap_or(2.0 * cert.big_r);
    let step = 2.0 / cert.kappa;
    let shells: Vec<f64> = (0..cfg.grid_points).map(|k| r * step.powi(k as i32)).collect();
    let anchors: Vec<Vec<f64>> = shells.iter().map(|&s| cert.witness_at(s)).collect();
    let phi = &setup.process.phi;
    let profile = cfg.control == Control::Profile;
    if profile && !matches!(dom, OpenSetSpec::HalfSpace) {
        return Err(Error::Unsupported(
            "the analytic profile exists for the half-space only".into(),
        ));
    }
    let mut notes = Vec::new();
    let mut censored = 0.0;
    let (values, lower): (Vec<MeanSe>, MeanSe) = if profile {
        let o = StableOracle::for_phi(phi, d)?;
        notes.push("h = x_d^{α/2}, the positive harmonic profile of the half-space".into());
        let exact = |v: f64| MeanSe {
            mean: v,
            std_error: 0.0,
            n: 0,
        };
        let vals = anchors.iter().map(|a| exact(o.half_space_profile(a))).collect();
        // ∫_{B(0,r)} (x_d)_+^{α/2} by cross-sections
        let tol = Tolerance::rel(1e-10);
        let int = integrate(
            |t: f64| ball_volume(d - 1) * (r * r - t * t).max(0.0).powf(0.5 * (d - 1) as f64) * t.powf(0.5 * o.alpha),
            0.0,
            r,
            tol,
        )?
        .value;
        (vals, exact(int))
    } else {
        let (center, radius) = complement_ball(dom, d, r)
            .ok_or_else(|| domain("no ball of the complement inside B(0, r) to carry the payoff"))?;
        notes.push(format!("h = P_x(X exits into B({center:?}, {radius}))"));
        let payoff = setup.payoff(center, radius, cfg.payoff_scale)?;
        let mut vals = Vec::new();
        for a in &anchors {
            let f: Vec<Functional<'_>> = vec![Box::new(|w: &[f64]| payoff.rate(w))];
            let occ = split_occupation(setup, dom, a, path, &f, r)?;
            censored += occ.censored / anchors.len() as f64;
            vals.push(occ.mean(0));
        }
        (vals, ball_integral(setup, dom, &payoff, r, path)?)
    };
    let rel = |m: &MeanSe| m.std_error / m.mean;
    let mut rows = Vec::new();
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (k, (h, a)) in values.iter().zip(&anchors).enumerate() {
        let ratio = values[0].mean / h.mean;
        let se = if k == 0 {
            0.0
        } else {
            ratio * (rel(&values[0]).powi(2) + rel(h).powi(2)).sqrt()
        };
        lx.push(k as f64);
        ly.push(ratio.ln());
        rows.push(row("shell", a.clone(), k as f64, values[0].mean, h.mean, ratio, se));
    }
    let rd = r.powi(d as i32);
    let lb = values[0].mean * rd / lower.mean;
    let lb_se = lb * (rel(&values[0]).powi(2) + rel(&lower).powi(2)).sqrt();
    rows.push(row(
        "lower-bound",
        anchors[0].clone(),
        r,
        values[0].mean * rd,
        lower.mean,
        lb,
        lb_se,
    ));
    let ln_step = (2.0 / cert.kappa).ln();
    let dd = d as f64;
    Ok(Table {
        rows,
        fit: fit_summary(&lx, &ly, |s| dd - s / ln_step),
        censored,
        notes,
        r,
    })
}

/// A ball inside the complement of `dom` and inside `B(0, r)`, from a few
/// candidate centres.
fn complement_ball(dom: &OpenSetSpec, d: usize, r: f64) -> Option<(Vec<f64>, f64)> {
    let mut candidates = vec![vec![0.0; d], axis_point(d, -0.5 * r), axis_point(d, 0.5 * r)];
    if d >= 2 {
        candidates.push(scaled(&unit(d, &[(0, 1.0)]), 0.5 * r));
        candidates.push(scaled(&unit(d, &[(0, -1.0)]), 0.5 * r));
    }
    candidates
        .into_iter()
        .map(|c| {
            let depth = -dom.signed_distance(&c);
            let rad = (0.5 * depth).min(0.25 * r).min(r - norm(&c));
            (c, rad)
        })
        .filter(|(_, rad)| *rad > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

fn oscillation_directions(d: usize) -> Vec<Vec<f64>> {
    let last = d - 1;
    let mut dirs = vec![axis_point(d, 1.0), axis_point(d, -1.0)];
    if d >= 2 {
        dirs.push(unit(d, &[(last, 1.0), (0, 1.0)]));
        dirs.push(unit(d, &[(last, 1.0), (0, -1.0)]));
        dirs.push(unit(d, &[(0, 1.0)]));
        dirs.push(unit(d, &[(0, -1.0)]));
    }
    if d >= 3 {
        dirs.push(unit(d, &[(last, 1.0), (1, 1.0)]));
        dirs.push(unit(d, &[(1, 1.0)]));
    }
    dirs
}

fn oscillation_table(setup: &Setup, cfg: &ExperimentConfig, path: &PathConfig) -> Result<Table> {
    let d = cfg.d;
    let dom = &cfg.domain;
    let cert = certificate(dom, d)?;
    let r = cfg.r.unwrap_or(8.0 * cert.big_r);
    let free = setup.free()?;
    let poles: Vec<Vec<f64>> = [0.25, 0.125, 0.0625]
        .iter()
        .map(|f| cert.witness_at(f * r))
        .filter(|y| dom.contains(y) && norm(y) < r)
        .collect();
    if poles.len() < 2 {
        return Err(domain("need two witness points of the domain inside B(0, r)"));
    }
    let y1 = poles[0].clone();
    let y2 = if cfg.control == Control::SameFunctions {
        y1.clone()
    } else {
        poles[1].clone()
    };
    let b1 = simulate_batch(&setup.process, dom, &y1, path)?;
    let b2 = if y2 == y1 {
        b1.clone()
    } else {
        simulate_batch(&setup.process, dom, &y2, path)?
    };
    let censored = b1.iter().chain(&b2).filter(|s| !s.exited()).count() as f64 / (b1.len() + b2.len()) as f64;
    // u = G_D(·, y1), v = G_D(·, y2), normalized so that u(A_r) = v(A_r)
    let quotient = |x: &[f64]| ratio_estimate(&green_from(&free, &b1, &y1, x), &green_from(&free, &b2, &y2, x));
    let anchor = quotient(&cert.witness_at(r));
    let dirs = oscillation_directions(d);
    let mut rows = Vec::new();
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    let (mut lx_raw, mut ly_raw) = (Vec::new(), Vec::new());
    for k in 0..cfg.grid_points {
        let base = r * 2f64.powi(k as i32);
        let mut pts = Vec::new();
        for dir in &dirs {
            for m in [1.0, std::f64::consts::SQRT_2] {
                let x = scaled(dir, base * m);
                if dom.dist_to_complement(&x) >= BOUNDARY_LAYER * norm(&x) {
                    pts.push((x, quotient(&scaled(dir, base * m))));
                }
            }
        }
        if pts.len() < 2 {
            return Err(domain(format!("shell {k} has fewer than two admissible points")));
        }
        let (imax, _) =
            pts.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |b, (i, p)| if p.1.value > b.1 { (i, p.1.value) } else { b },
            );
        let (imin, _) =
            pts.iter().enumerate().fold(
                (0, f64::INFINITY),
                |b, (i, p)| if p.1.value < b.1 { (i, p.1.value) } else { b },
            );
        let (qmax, qmin) = (&pts[imax].1, &pts[imin].1);
        let a = anchor.value;
        let osc = (qmax.value - qmin.value) / a;
        // normalized oscillation (q_max − q_min)/q(A_r) on shared paths
        let se = combined_std_error(&[
            (1.0 / a, &qmax.influence),
            (-1.0 / a, &qmin.influence),
            (-osc / a, &anchor.influence),
        ]);
        let raw_se = combined_std_error(&[(1.0, &qmax.influence), (-1.0, &qmin.influence)]);
        if osc > OSCILLATION_SIGNAL_Z * se && osc > 0.0 {
            lx.push(base.ln());
            ly.push(osc.ln());
        }
        let raw = qmax.value - qmin.value;
        if raw > OSCILLATION_SIGNAL_Z * raw_se && raw > 0.0 {
            lx_raw.push(base.ln());
            ly_raw.push(raw.ln());
        }
        let mut rw = row(
            "shell",
            pts[imax].0.clone(),
            base,
            qmax.value / a,
            qmin.value / a,
            osc,
            se,
        );
        rw.other_point = Some(pts[imin].0.clone());
        rows.push(rw);
    }
    let mut notes = vec![format!(
        "poles y1 = {y1:?}, y2 = {y2:?}; fit uses shells whose oscillation exceeds {} standard errors ({} of {})",
        OSCILLATION_SIGNAL_Z,
        lx.len(),
        cfg.grid_points
    )];
    if lx_raw.len() >= 3 {
        if let Some(f) = linear_fit(&lx_raw, &ly_raw) {
            notes.push(format!(
                "nu without normalization = {} (r² = {})",
                full(-f.slope),
                full(f.r_squared)
            ));
        }
    }
    let fit = if lx.len() >= 3 {
        fit_summary(&lx, &ly, |s| -s)
    } else {
        None
    };
    Ok(Table {
        rows,
        fit,
        censored,
        notes,
        r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_ids_round_trip() {
        for e in ExperimentId::ALL {
            assert_eq!(e.name().parse::<ExperimentId>().unwrap(), e);
        }
        assert_eq!(
            "factorization".parse::<ExperimentId>().unwrap(),
            ExperimentId::Factorization
        );
        assert!("exp_nothing".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn config_validation() {
        let phi = CompleteBernsteinFunction::stable(1.0).unwrap();
        let mut c = ExperimentConfig::new(ExperimentId::Factorization, phi);
        assert!(c.validate().is_ok());
        c.a = 1.0;
        assert!(c.validate().is_err());
        c.a = 2.0;
        c.r = Some(0.5);
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let phi: CompleteBernsteinFunction = "mix:0.5,1.0+1.5,1.0".parse().unwrap();
        let c = ExperimentConfig::new(ExperimentId::Oscillation, phi).with_domain("extball:r=1".parse().unwrap());
        let s = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn outer_trend_detects_power_growth() {
        let mk = |t: f64, v: f64| row("g", vec![], t, v, 1.0, v, 0.01 * v);
        let grow: Vec<ReportRow> = [1.0, 2.0, 4.0, 8.0].iter().map(|&t| mk(t, t * t)).collect();
        assert!(outer_trends(&grow).iter().any(Trend::is_violation));
        let flat: Vec<ReportRow> = [1.0, 2.0, 4.0, 8.0].iter().map(|&t| mk(t, 3.0 + 0.1 / t)).collect();
        assert!(!outer_trends(&flat).iter().any(Trend::is_violation));
        // 1 − 3/t² saturates: steep at first, flat in the last segment
        let settling: Vec<ReportRow> = [2.0, 4.0, 8.0].iter().map(|&t| mk(t, 1.0 - 3.0 / (t * t))).collect();
        assert!(!outer_trends(&settling).iter().any(Trend::is_violation));
    }
}
