//! Complete Bernstein functions: catalog, evaluation, Lévy and potential
//! densities, scaling-profile estimation and the transience test.
//!
//! A catalog entry is addressed by a string id:
//!
//! | id                                | Laplace exponent                      |
//! |-----------------------------------|---------------------------------------|
//! | `stable:alpha=1.0`                | `λ^{α/2}`                             |
//! | `mix:0.5,1.0+1.5,1.0`             | `Σ wᵢ λ^{αᵢ/2}` (pairs `αᵢ,wᵢ`)       |
//! | `relativistic:alpha=1.0,m=1.0`    | `(λ + m^{2/α})^{α/2} − m`             |
//! | `tab:0.01:0.1,1:1,100:10`         | log-log interpolation of `λ:φ` pairs  |
//!
//! `α ∈ (0, 2)` is the index of the subordinate process, so the subordinator
//! itself is `α/2`-stable.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, Tolerance};
use crate::special::gamma;

#[derive(Debug, Clone, PartialEq)]
pub enum CbfKind {
    Stable {
        alpha: f64,
    },
    StableMixture {
        components: Vec<(f64, f64)>,
    },
    Relativistic {
        alpha: f64,
        m: f64,
    },
    /// Strictly increasing `(λ, φ(λ))` samples.
    Tabulated {
        points: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompleteBernsteinFunction {
    kind: CbfKind,
    killing: f64,
    drift: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(domain(format!("alpha must lie in (0, 2), got {alpha}")))
    }
}

impl CompleteBernsteinFunction {
    pub fn new(kind: CbfKind) -> Result<Self> {
        Self::with_terms(kind, 0.0, 0.0)
    }

    /// Constructs an entry with explicit killing and drift terms, both of
    /// which must vanish for the processes studied here.
    pub fn with_terms(kind: CbfKind, killing: f64, drift: f64) -> Result<Self> {
        if killing != 0.0 {
            return Err(domain(format!("killing term must be 0, got {killing}")));
        }
        if drift != 0.0 {
            return Err(domain(format!("drift must be 0, got {drift}")));
        }
        match &kind {
            CbfKind::Stable { alpha } => check_alpha(*alpha)?,
            CbfKind::StableMixture { components } => {
                if components.is_empty() {
                    return Err(domain("stable mixture needs at least one component"));
                }
                for &(a, w) in components {
                    check_alpha(a)?;
                    if !(w > 0.0 && w.is_finite()) {
                        return Err(domain(format!("mixture weight must be positive, got {w}")));
                    }
                }
            }
            CbfKind::Relativistic { alpha, m } => {
                check_alpha(*alpha)?;
                if !(*m > 0.0 && m.is_finite()) {
                    return Err(domain(format!("relativistic mass must be positive, got {m}")));
                }
            }
            CbfKind::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(domain("tabulated exponent needs at least two points"));
                }
                for w in points.windows(2) {
                    if !(w[0].0 > 0.0 && w[1].0 > w[0].0 && w[0].1 > 0.0 && w[1].1 > w[0].1) {
                        return Err(domain(
                            "tabulated points must be positive and strictly increasing in both λ and φ",
                        ));
                    }
                }
            }
        }
        Ok(Self { kind, killing, drift })
    }

    pub fn stable(alpha: f64) -> Result<Self> {
        Self::new(CbfKind::Stable { alpha })
    }

    pub fn mixture(components: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(CbfKind::StableMixture { components })
    }

    pub fn relativistic(alpha: f64, m: f64) -> Result<Self> {
        Self::new(CbfKind::Relativistic { alpha, m })
    }

    pub fn kind(&self) -> &CbfKind {
        &self.kind
    }

    pub fn killing(&self) -> f64 {
        self.killing
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn is_catalog(&self) -> bool {
        !matches!(self.kind, CbfKind::Tabulated { .. })
    }

    /// `α` when the entry is a pure stable exponent.
    pub fn stable_alpha(&self) -> Option<f64> {
        match self.kind {
            CbfKind::Stable { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Stable components `(β, weight)` with `β = α/2`, when `φ` is a sum of
    /// stable exponents.
    pub fn stable_components(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            CbfKind::Stable { alpha } => Some(vec![(alpha / 2.0, 1.0)]),
            CbfKind::StableMixture { components } => Some(components.iter().map(|&(a, w)| (a / 2.0, w)).collect()),
            _ => None,
        }
    }

    /// `φ(λ)` without argument checks. Returns NaN outside a table's range.
    #[inline]
    pub fn value(&self, lambda: f64) -> f64 {
        match &self.kind {
            CbfKind::Stable { alpha } => lambda.powf(0.5 * alpha),
            CbfKind::StableMixture { components } => components.iter().map(|&(a, w)| w * lambda.powf(0.5 * a)).sum(),
            CbfKind::Relativistic { alpha, m } => {
                let b = m.powf(2.0 / alpha);
                let beta = 0.5 * alpha;
                // (b + λ)^β − b^β, written to avoid cancellation for small λ
                let x = lambda / b;
                if x < 1e-3 {
                    *m * (beta * x.ln_1p()).exp_m1()
                } else {
                    (b + lambda).powf(beta) - m
                }
            }
            CbfKind::Tabulated { points } => interpolate_loglog(points, lambda),
        }
    }

    /// Lévy density `μ(t)` of the subordinator; `None` for tabulated entries.
    #[inline]
    pub fn levy_density(&self, t: f64) -> Option<f64> {
        match &self.kind {
            CbfKind::Stable { alpha } => Some(stable_levy(0.5 * alpha, 1.0, t)),
            CbfKind::StableMixture { components } => {
                Some(components.iter().map(|&(a, w)| stable_levy(0.5 * a, w, t)).sum())
            }
            CbfKind::Relativistic { alpha, m } => {
                let b = m.powf(2.0 / alpha);
                Some(stable_levy(0.5 * alpha, 1.0, t) * (-b * t).exp())
            }
            CbfKind::Tabulated { .. } => None,
        }
    }

    /// Tail `∫_t^∞ μ(s) ds` in closed form where available.
    pub fn levy_tail_closed_form(&self, t: f64) -> Option<f64> {
        let comps = self.stable_components()?;
        Some(
            comps
                .iter()
                .map(|&(beta, w)| w * t.powf(-beta) / gamma(1.0 - beta))
                .sum(),
        )
    }

    /// Potential density `u(t)` of the subordinator, known in closed form for
    /// the stable kind only.
    #[inline]
    pub fn potential_density(&self, t: f64) -> Option<f64> {
        match self.kind {
            CbfKind::Stable { alpha } => {
                let beta = 0.5 * alpha;
                Some(t.powf(beta - 1.0) / gamma(beta))
            }
            _ => None,
        }
    }

    pub fn has_potential_density(&self) -> bool {
        matches!(self.kind, CbfKind::Stable { .. })
    }

    /// Reference scaling exponents `(at zero, at infinity)` of `φ`.
    pub fn reference_exponents(&self) -> (f64, f64) {
        match &self.kind {
            CbfKind::Stable { alpha } => (0.5 * alpha, 0.5 * alpha),
            CbfKind::StableMixture { components } => {
                let lo = components.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
                let hi = components.iter().map(|c| c.0).fold(0.0, f64::max);
                (0.5 * lo, 0.5 * hi)
            }
            CbfKind::Relativistic { alpha, .. } => (1.0, 0.5 * alpha),
            CbfKind::Tabulated { points } => {
                let n = points.len();
                let slope = |i: usize, j: usize| (points[j].1 / points[i].1).ln() / (points[j].0 / points[i].0).ln();
                (slope(0, 1), slope(n - 2, n - 1))
            }
        }
    }

    /// Inverse `φ^{-1}(y)` for `y > 0` by bisection in log space.
    pub fn inverse(&self, y: f64) -> f64 {
        if let CbfKind::Stable { alpha } = self.kind {
            return y.powf(2.0 / alpha);
        }
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while self.value(lo.exp()) > y {
            lo *= 2.0;
        }
        while self.value(hi.exp()) < y {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.value(mid.exp()) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * (1.0 + mid.abs()) {
                break;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    pub fn id(&self) -> String {
        self.to_string()
    }
}

#[inline]
fn stable_levy(beta: f64, weight: f64, t: f64) -> f64 {
    weight * beta / gamma(1.0 - beta) * t.powf(-1.0 - beta)
}

fn interpolate_loglog(points: &[(f64, f64)], x: f64) -> f64 {
    let n = points.len();
    if !(x >= points[0].0 && x <= points[n - 1].0) {
        return f64::NAN;
    }
    let i = points.partition_point(|p| p.0 <= x).clamp(1, n - 1);
    let (x0, y0) = points[i - 1];
    let (x1, y1) = points[i];
    let s = (x / x0).ln() / (x1 / x0).ln();
    (y0.ln() + s * (y1 / y0).ln()).exp()
}

impl fmt::Display for CompleteBernsteinFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            CbfKind::Stable { alpha } => write!(f, "stable:alpha={alpha:?}"),
            CbfKind::StableMixture { components } => {
                let parts: Vec<String> = components.iter().map(|(a, w)| format!("{a:?},{w:?}")).collect();
                write!(f, "mix:{}", parts.join("+"))
            }
            CbfKind::Relativistic { alpha, m } => write!(f, "relativistic:alpha={alpha:?},m={m:?}"),
            CbfKind::Tabulated { points } => {
                let parts: Vec<String> = points.iter().map(|(l, v)| format!("{l:?}:{v:?}")).collect();
                write!(f, "tab:{}", parts.join(","))
            }
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

fn parse_params(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {kv:?}")))?;
            Ok((k.trim().to_string(), parse_f64(v)?))
        })
        .collect()
}

fn param(params: &[(String, f64)], key: &str) -> Result<f64> {
    params
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Parse(format!("missing parameter {key:?}")))
}

impl FromStr for CompleteBernsteinFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("unknown exponent id {s:?}")))?;
        match head.trim() {
            "stable" => {
                let p = parse_params(body)?;
                Self::stable(param(&p, "alpha")?)
            }
            "relativistic" => {
                let p = parse_params(body)?;
                Self::relativistic(param(&p, "alpha")?, param(&p, "m")?)
            }
            "mix" => {
                let components = body
                    .split('+')
                    .map(|c| {
                        let (a, w) = c
                            .split_once(',')
                            .ok_or_else(|| Error::Parse(format!("mixture component {c:?} is not alpha,weight")))?;
                        Ok((parse_f64(a)?, parse_f64(w)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::mixture(components)
            }
            "tab" => {
                let points = body
                    .split(',')
                    .map(|c| {
                        let (l, v) = c
                            .split_once(':')
                            .ok_or_else(|| Error::Parse(format!("table entry {c:?} is not lambda:phi")))?;
                        Ok((parse_f64(l)?, parse_f64(v)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::new(CbfKind::Tabulated { points })
            }
            other => Err(Error::Parse(format!("unknown exponent family {other:?}"))),
        }
    }
}

impl Serialize for CompleteBernsteinFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.id())
    }
}

impl<'de> Deserialize<'de> for CompleteBernsteinFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `φ(λ)` with argument and range checks.
pub fn eval_phi(f: &CompleteBernsteinFunction, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(domain(format!("φ is evaluated at λ > 0, got {lambda}")));
    }
    if let CbfKind::Tabulated { points } = &f.kind {
        let (lo, hi) = (points[0].0, points[points.len() - 1].0);
        if lambda < lo || lambda > hi {
            return Err(Error::Range { value: lambda, lo, hi });
        }
    }
    Ok(f.value(lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernsteinBoundsCheck {
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

const BOUNDS_SLACK: f64 = 1e-12;

/// `ρ = φ(λt)/φ(t)` against `1∧λ ≤ ρ ≤ 1∨λ`.
pub fn check_bernstein_bounds(f: &CompleteBernsteinFunction, lambda: f64, t: f64) -> Result<BernsteinBoundsCheck> {
    if !(t > 0.0) {
        return Err(domain(format!("t must be positive, got {t}")));
    }
    let ratio = eval_phi(f, lambda * t)? / eval_phi(f, t)?;
    let lower = lambda.min(1.0);
    let upper = lambda.max(1.0);
    let pass = ratio >= lower * (1.0 - BOUNDS_SLACK) && ratio <= upper * (1.0 + BOUNDS_SLACK);
    Ok(BernsteinBoundsCheck {
        ratio,
        lower,
        upper,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingProfile {
    pub delta1: f64,
    pub delta2: f64,
    pub a1: f64,
    pub a2: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub a3: f64,
    pub a4: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub profile: ScalingProfile,
    /// Fitted exponents at infinity lie in `(0, 1)` with margin.
    pub h1_valid: bool,
    /// Fitted exponents at zero lie in `(0, 1)` with margin.
    pub h2_valid: bool,
    /// Tightest constant for the global two-sided scaling bound over all
    /// sampled argument pairs.
    pub global_constant: f64,
    pub grid_points: usize,
}

/// Exponents within this distance of 0 or 1 are reported as violating the
/// strict bounds `0 < δ < 1`.
pub const EXPONENT_MARGIN: f64 = 1e-3;

/// Log-uniform grid with `per_decade` points per decade over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

/// Default scaling grid: 64 points per decade over 8 decades centred at 1.
pub fn default_scaling_grid() -> Vec<f64> {
    log_grid(1e-4, 1e4, 64)
}

fn fit_region(f: &CompleteBernsteinFunction, lambdas: &[f64], ts: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut pairs = Vec::with_capacity(lambdas.len() * ts.len());
    for &t in ts {
        let pt = f.value(t);
        for &l in lambdas {
            let rho = f.value(l * t) / pt;
            if !rho.is_finite() {
                continue;
            }
            let s = rho.ln() / l.ln();
            lo = lo.min(s);
            hi = hi.max(s);
            pairs.push((l, rho));
        }
    }
    if pairs.is_empty() {
        return None;
    }
    // tightest constants making a·λ^δ bracket ρ for the fitted exponents
    let mut c_lo_slow = f64::INFINITY; // ρ / λ^{lo}
    let mut c_hi_slow = f64::NEG_INFINITY;
    let mut c_lo_fast = f64::INFINITY; // ρ / λ^{hi}
    let mut c_hi_fast = f64::NEG_INFINITY;
    for (l, rho) in pairs {
        let a = rho / l.powf(lo);
        let b = rho / l.powf(hi);
        c_lo_slow = c_lo_slow.min(a);
        c_hi_slow = c_hi_slow.max(a);
        c_lo_fast = c_lo_fast.min(b);
        c_hi_fast = c_hi_fast.max(b);
    }
    Some((lo, hi, c_lo_slow.min(c_lo_fast), c_hi_fast.max(c_hi_slow)))
}

/// Fits the exponents of the scaling hypotheses at infinity (pairs with
/// `λ > 1, t ≥ 1`) and at zero (`λ < 1, t ≤ 1`) as the extreme secant slopes
/// of `λ ↦ φ(λt)/φ(t)`, then the tightest constants for those exponents.
pub fn estimate_scaling_profile(
    f: &CompleteBernsteinFunction,
    lambda_grid: &[f64],
    t_grid: &[f64],
) -> Result<ScalingReport> {
    let span = |g: &[f64]| {
        let lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = g.iter().cloned().fold(0.0, f64::max);
        (hi / lo).log10()
    };
    if span(lambda_grid) < 4.0 - 1e-9 || span(t_grid) < 4.0 - 1e-9 {
        return Err(domain("scaling grids must span at least 4 decades"));
    }
    let mirror = |g: &[f64], above: bool| -> Vec<f64> {
        let mut v: Vec<f64> = g
            .iter()
            .cloned()
            .filter(|&x| if above { x >= 1.0 } else { x <= 1.0 })
            .collect();
        if v.len() < 2 {
            v = g
                .iter()
                .map(|&x| if above { x.max(1.0 / x) } else { x.min(1.0 / x) })
                .collect();
        }
        v
    };
    let l_inf: Vec<f64> = mirror(lambda_grid, true).into_iter().filter(|&l| l > 1.0).collect();
    let t_inf = mirror(t_grid, true);
    let l_zero: Vec<f64> = mirror(lambda_grid, false).into_iter().filter(|&l| l < 1.0).collect();
    let t_zero = mirror(t_grid, false);
    let (delta1, delta2, a1, a2) =
        fit_region(f, &l_inf, &t_inf).ok_or_else(|| domain("no valid scaling pairs at infinity"))?;
    // at zero: a3 λ^{δ4} φ(t) ≤ φ(λt) ≤ a4 λ^{δ3} φ(t) with λ < 1
    let (s_lo, s_hi, _, _) = fit_region(f, &l_zero, &t_zero).ok_or_else(|| domain("no valid scaling pairs at zero"))?;
    let (delta3, delta4) = (s_lo, s_hi);
    let mut a3 = f64::INFINITY;
    let mut a4 = f64::NEG_INFINITY;
    for &t in &t_zero {
        let pt = f.value(t);
        for &l in &l_zero {
            let rho = f.value(l * t) / pt;
            if rho.is_finite() {
                a3 = a3.min(rho / l.powf(delta4));
                a4 = a4.max(rho / l.powf(delta3));
            }
        }
    }
    let profile = ScalingProfile {
        delta1,
        delta2,
        a1,
        a2,
        delta3,
        delta4,
        a3,
        a4,
    };
    let ok = |lo: f64, hi: f64| lo >= EXPONENT_MARGIN && hi <= 1.0 - EXPONENT_MARGIN && lo <= hi;
    let mut all: Vec<f64> = lambda_grid.iter().chain(t_grid).cloned().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let mut global_constant: f64 = 1.0;
    for (i, &r) in all.iter().enumerate() {
        for &big in &all[i + 1..] {
            global_constant = global_constant.max(global_scaling_constant(f, &profile, r, big));
        }
    }
    Ok(ScalingReport {
        profile,
        h1_valid: ok(delta1, delta2),
        h2_valid: ok(delta3, delta4),
        global_constant,
        grid_points: l_inf.len() * t_inf.len() + l_zero.len() * t_zero.len(),
    })
}

pub fn estimate_default_profile(f: &CompleteBernsteinFunction) -> Result<ScalingReport> {
    let g = default_scaling_grid();
    estimate_scaling_profile(f, &g, &g)
}

fn global_scaling_constant(f: &CompleteBernsteinFunction, p: &ScalingProfile, r: f64, big: f64) -> f64 {
    let q = big / r;
    let ratio = f.value(big) / f.value(r);
    let lower = q.powf(p.delta1.min(p.delta3));
    let upper = q.powf(p.delta2.max(p.delta4));
    (lower / ratio).max(ratio / upper).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalScalingCheck {
    pub ratio: f64,
    pub tightest_constant: f64,
    pub recorded_constant: f64,
    pub pass: bool,
}

/// Two-sided global scaling bound for `φ(R)/φ(r)`, `0 < r < R`, checked
/// against the constant recorded in `report`.
pub fn check_global_scaling(
    f: &CompleteBernsteinFunction,
    report: &ScalingReport,
    r: f64,
    big_r: f64,
) -> Result<GlobalScalingCheck> {
    if !(r > 0.0 && r < big_r) {
        return Err(domain(format!("need 0 < r < R, got r={r}, R={big_r}")));
    }
    let ratio = eval_phi(f, big_r)? / eval_phi(f, r)?;
    let c = global_scaling_constant(f, &report.profile, r, big_r);
    Ok(GlobalScalingCheck {
        ratio,
        tightest_constant: c,
        recorded_constant: report.global_constant,
        pass: c <= report.global_constant * (1.0 + 1e-12),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transience {
    Transient,
    NotEstablished,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransienceReport {
    pub verdict: Transience,
    pub dimension: usize,
    pub exponent_bound: f64,
    pub profile_condition: bool,
    /// Chung–Fuchs integral value at the largest cutoff, if it stabilised.
    pub chung_fuchs_integral: Option<f64>,
}

/// Transience via the profile condition `d > 2(δ2 ∨ δ4)` together with
/// numerical convergence of `∫₀¹ λ^{d/2−1}/φ(λ) dλ`.
pub fn transience_check(f: &CompleteBernsteinFunction, d: usize) -> Result<TransienceReport> {
    if d == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    let report = estimate_default_profile(f)?;
    let bound = report.profile.delta2.max(report.profile.delta4);
    let profile_condition = d as f64 > 2.0 * bound;
    let integral = chung_fuchs_integral(f, d);
    let verdict = if profile_condition && integral.is_some() {
        Transience::Transient
    } else {
        Transience::NotEstablished
    };
    Ok(TransienceReport {
        verdict,
        dimension: d,
        exponent_bound: bound,
        profile_condition,
        chung_fuchs_integral: integral,
    })
}

/// `∫₀¹ λ^{d/2−1}/φ(λ) dλ` after `λ = e^{−v}`, with the upper cutoff doubled
/// until two successive values agree to 1e-8 relative.
pub fn chung_fuchs_integral(f: &CompleteBernsteinFunction, d: usize) -> Option<f64> {
    let half_d = 0.5 * d as f64;
    let g = |v: f64| {
        let lam = (-v).exp();
        let p = f.value(lam);
        if p > 0.0 {
            (-half_d * v).exp() / p
        } else {
            0.0
        }
    };
    let tol = Tolerance {
        rel: 1e-12,
        abs: 0.0,
        max_intervals: 4000,
    };
    let mut cut = 25.0;
    let mut prev = integrate(g, 0.0, cut, tol).ok()?.value;
    for _ in 0..12 {
        let extra = integrate(g, cut, 2.0 * cut, tol).ok()?.value;
        let next = prev + extra;
        if !next.is_finite() {
            return None;
        }
        if (next - prev).abs() < 1e-8 * next.abs() {
            return Some(next);
        }
        prev = next;
        cut *= 2.0;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignPatternReport {
    pub pass: bool,
    pub violations: Vec<(usize, f64)>,
}

/// Checks `(−1)^{n−1} φ^{(n)} ≥ 0` for `n = 1, 2, 3` by forward divided
/// differences with step `t/10`. The `n`-th forward difference is a
/// B-spline average of `φ^{(n)}`, so its sign is exact for any step.
pub fn check_sign_pattern(f: &CompleteBernsteinFunction, grid: &[f64]) -> SignPatternReport {
    let mut violations = Vec::new();
    for &t in grid {
        let h = 0.1 * t;
        let v: Vec<f64> = (0..4).map(|k| f.value(t + k as f64 * h)).collect();
        let scale = v[0].abs().max(v[3].abs());
        let diffs = [
            v[1] - v[0],
            v[2] - 2.0 * v[1] + v[0],
            v[3] - 3.0 * v[2] + 3.0 * v[1] - v[0],
        ];
        for (n, &dn) in diffs.iter().enumerate() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            // rounding floor for an n-th difference of values of size `scale`
            let floor = 16.0 * f64::EPSILON * scale * (1 << (n + 1)) as f64;
            if sign * dn < -floor {
                violations.push((n + 1, t));
            }
        }
        if diffs[0] <= 0.0 {
            violations.push((0, t));
        }
    }
    SignPatternReport {
        pass: violations.is_empty(),
        violations,
    }
}

/// Positivity and monotone decrease of `μ` on `grid`, plus a convexity
/// spot-check via second divided differences.
pub fn check_levy_density(f: &CompleteBernsteinFunction, grid: &[f64]) -> Result<bool> {
    let mut prev = f64::INFINITY;
    for w in grid.windows(3) {
        let m: Vec<f64> = w
            .iter()
            .map(|&t| {
                f.levy_density(t)
                    .ok_or_else(|| Error::Unsupported("no closed-form Lévy density".into()))
            })
            .collect::<Result<_>>()?;
        if !(m[0] > 0.0 && m[0] <= prev && m[1] <= m[0] && m[2] <= m[1]) {
            return Ok(false);
        }
        let d1 = (m[1] - m[0]) / (w[1] - w[0]);
        let d2 = (m[2] - m[1]) / (w[2] - w[1]);
        if d2 < d1 - 1e-12 * d1.abs() {
            return Ok(false);
        }
        prev = m[0];
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mix() -> CompleteBernsteinFunction {
        "mix:0.5,1.0+1.5,1.0".parse().unwrap()
    }

    #[test]
    fn eval_examples() {
        let s = CompleteBernsteinFunction::stable(1.0).unwrap();
        assert_eq!(eval_phi(&s, 4.0).unwrap(), 2.0);
        assert!((eval_phi(&mix(), 16.0).unwrap() - 10.0).abs() < 1e-12);
        let r = CompleteBernsteinFunction::relativistic(1.0, 1.0).unwrap();
        assert!((eval_phi(&r, 3.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eval_errors() {
        let s = CompleteBernsteinFunction::stable(1.0).unwrap();
        assert!(matches!(eval_phi(&s, 0.0), Err(Error::Domain(_))));
        assert!(matches!(eval_phi(&s, -1.0), Err(Error::Domain(_))));
        let t: CompleteBernsteinFunction = "tab:1:1,10:3,100:9".parse().unwrap();
        assert!(matches!(eval_phi(&t, 1000.0), Err(Error::Range { .. })));
        assert!((eval_phi(&t, 10.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn nonzero_terms_rejected() {
        let k = CbfKind::Stable { alpha: 1.0 };
        assert!(CompleteBernsteinFunction::with_terms(k.clone(), 0.1, 0.0).is_err());
        assert!(CompleteBernsteinFunction::with_terms(k, 0.0, 1.0).is_err());
        assert!(CompleteBernsteinFunction::stable(2.0).is_err());
    }

    #[test]
    fn ids_round_trip() {
        for id in [
            "stable:alpha=1.0",
            "mix:0.5,1.0+1.5,1.0",
            "relativistic:alpha=1.0,m=1.0",
        ] {
            let f: CompleteBernsteinFunction = id.parse().unwrap();
            assert_eq!(f.id(), id);
        }
        assert!("cauchy:1".parse::<CompleteBernsteinFunction>().is_err());
        assert!("stable:beta=1".parse::<CompleteBernsteinFunction>().is_err());
    }

    #[test]
    fn relativistic_small_argument_branch_is_continuous() {
        let r = CompleteBernsteinFunction::relativistic(1.0, 1.0).unwrap();
        let x = 1e-3;
        let a = r.value(x * (1.0 - 1e-12));
        let b = r.value(x * (1.0 + 1e-12));
        assert!((a - b).abs() < 1e-14);
        assert!((r.value(x) - ((1.0 + x).sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn bernstein_bound_examples() {
        let s = CompleteBernsteinFunction::stable(1.0).unwrap();
        let c = check_bernstein_bounds(&s, 1.0, 7.3).unwrap();
        assert!(c.pass && (c.ratio - 1.0).abs() < 1e-15);
        let c = check_bernstein_bounds(&s, 2.0, 1.0).unwrap();
        assert!(c.pass && (c.ratio - 2f64.sqrt()).abs() < 1e-15);
        // direct evaluation: φ(1)/φ(4) = 2 / (√2 + 2√2)
        let c = check_bernstein_bounds(&mix(), 0.25, 4.0).unwrap();
        let expected = 2.0 / (4f64.powf(0.25) + 4f64.powf(0.75));
        assert!(c.pass && (c.ratio - expected).abs() < 1e-14 && c.ratio >= 0.25 && c.ratio <= 1.0);
    }

    #[test]
    fn stable_profile_is_exact() {
        let s = CompleteBernsteinFunction::stable(1.0).unwrap();
        let r = estimate_default_profile(&s).unwrap();
        let p = r.profile;
        for d in [p.delta1, p.delta2, p.delta3, p.delta4] {
            assert!((d - 0.5).abs() < 1e-6);
        }
        for a in [p.a1, p.a2, p.a3, p.a4] {
            assert!((a - 1.0).abs() < 1e-6);
        }
        assert!(r.h1_valid && r.h2_valid);
    }

    #[test]
    fn mixture_profile_brackets_component_exponents() {
        let r = estimate_default_profile(&mix()).unwrap();
        let p = r.profile;
        assert!((p.delta1 - 0.5).abs() < 1e-2 && p.delta2 < 0.75 && p.delta2 > 0.7);
        assert!(p.delta3 > 0.25 && p.delta3 < 0.3 && (p.delta4 - 0.5).abs() < 1e-2);
        assert!(r.h1_valid && r.h2_valid);
    }

    #[test]
    fn relativistic_profile_flags_zero_end() {
        let f = CompleteBernsteinFunction::relativistic(1.0, 1.0).unwrap();
        let r = estimate_default_profile(&f).unwrap();
        assert!(r.h1_valid);
        assert!(!r.h2_valid, "δ4 = {}", r.profile.delta4);
        assert!(r.profile.delta4 > 0.99);
    }

    #[test]
    fn global_scaling_examples() {
        let s = CompleteBernsteinFunction::stable(1.0).unwrap();
        let rep = estimate_default_profile(&s).unwrap();
        let c = check_global_scaling(&s, &rep, 1.0, 100.0).unwrap();
        assert!((c.ratio - 10.0).abs() < 1e-12 && (c.tightest_constant - 1.0).abs() < 1e-9 && c.pass);
        let m = mix();
        let rep = estimate_default_profile(&m).unwrap();
        let c = check_global_scaling(&m, &rep, 1e-2, 1e2).unwrap();
        assert!(c.pass && c.tightest_constant.is_finite());
        assert!(check_global_scaling(&m, &rep, 2.0, 1.0).is_err());
        // R = 2r is the λ = 2 Bernstein bound case
        let c = check_global_scaling(&m, &rep, 3.0, 6.0).unwrap();
        let b = check_bernstein_bounds(&m, 2.0, 3.0).unwrap();
        assert!((c.ratio - b.ratio).abs() < 1e-15 && b.pass);
    }

    #[test]
    fn transience_examples() {
        let s = CompleteBernsteinFunction::stable(1.0).unwrap();
        assert_eq!(transience_check(&s, 3).unwrap().verdict, Transience::Transient);
        assert_eq!(transience_check(&s, 1).unwrap().verdict, Transience::NotEstablished);
        let r = transience_check(&mix(), 2).unwrap();
        assert!(r.exponent_bound < 0.75 && r.exponent_bound > 0.7);
        assert_eq!(r.verdict, Transience::Transient);
    }

    #[test]
    fn chung_fuchs_stable_closed_form() {
        // ∫₀¹ λ^{1/2}/λ^{1/4} dλ = 1/(5/4)
        let s = CompleteBernsteinFunction::stable(0.5).unwrap();
        let v = chung_fuchs_integral(&s, 3).unwrap();
        assert!((v - 0.8).abs() < 1e-9);
    }

    #[test]
    fn sign_pattern_and_levy_density() {
        let grid = log_grid(1e-4, 1e4, 8);
        for f in [
            CompleteBernsteinFunction::stable(1.3).unwrap(),
            mix(),
            CompleteBernsteinFunction::relativistic(1.0, 1.0).unwrap(),
        ] {
            let sp = check_sign_pattern(&f, &grid);
            assert!(sp.pass, "{f} {:?}", sp.violations);
            // e^{−t} underflows past t ≈ 700 for the relativistic density
            assert!(check_levy_density(&f, &log_grid(1e-4, 1e2, 8)).unwrap(), "{f}");
        }
    }

    #[test]
    fn levy_density_reproduces_phi() {
        // φ(λ) = ∫ (1 − e^{−λt}) μ(t) dt, integrated in log t
        for f in [mix(), CompleteBernsteinFunction::relativistic(1.0, 1.0).unwrap()] {
            for lam in [0.1, 1.0, 10.0] {
                let q = integrate(
                    |s: f64| {
                        let t = s.exp();
                        -(-lam * t).exp_m1() * f.levy_density(t).unwrap() * t
                    },
                    -200.0,
                    400.0,
                    Tolerance::rel(1e-12),
                )
                .unwrap();
                assert!(
                    (q.value / f.value(lam) - 1.0).abs() < 1e-8,
                    "{f} λ={lam}: {} vs {}",
                    q.value,
                    f.value(lam)
                );
            }
        }
    }

    #[test]
    fn inverse_round_trips() {
        for f in [mix(), CompleteBernsteinFunction::relativistic(1.0, 1.0).unwrap()] {
            for y in [1e-3, 0.7, 50.0] {
                let x = f.inverse(y);
                assert!((f.value(x) / y - 1.0).abs() < 1e-12);
            }
        }
    }
}
