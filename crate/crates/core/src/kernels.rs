//! Jump density, Green density and free Green function of a subordinate
//! Brownian motion, computed from subordination integrals, plus the
//! two-sided comparability scans built on them.
//!
//! Both subordination integrals have the form
//! `∫₀^∞ (4πt)^{−d/2} e^{−r²/(4t)} w(t) dt` and are evaluated after the
//! substitution `t = r² e^s`, which makes the lower end doubly-exponentially
//! small and turns power-law tails into exponential ones.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::cbf::{CbfKind, CompleteBernsteinFunction};
use crate::error::{domain, Error, Result};
use crate::quad::{accelerate, integrate, integrate_semi_infinite, interp_uniform, Quad, Tolerance};
use crate::report::{band, full, Verdict};
use crate::special::{bessel_j, bessel_zero_approx, gamma};

/// Relative accuracy requested from the adaptive rule for kernel values.
pub const KERNEL_TOLERANCE: f64 = 1e-10;

/// Relative change of a spread under grid doubling that still counts as
/// stable.
pub const REFINEMENT_STABILITY: f64 = 0.05;

const S_LOWER: f64 = -40.0;
const S_PIECE: f64 = 40.0;

fn subordination_integral(d: usize, r: f64, w: impl Fn(f64) -> f64) -> Result<Quad> {
    let half_d = 0.5 * d as f64;
    let r2 = r * r;
    let integrand = |s: f64| {
        let t = r2 * s.exp();
        let v = w(t);
        if v == 0.0 {
            return 0.0;
        }
        // (4πt)^{−d/2} e^{−r²/4t} w(t) t, gathered in log form
        let log_heat = -half_d * (4.0 * PI * t).ln() - 0.25 * (-s).exp();
        (log_heat + t.ln()).exp() * v
    };
    let tol = Tolerance {
        rel: KERNEL_TOLERANCE,
        abs: 0.0,
        max_intervals: 4000,
    };
    integrate_semi_infinite(integrand, S_LOWER, S_PIECE, tol)
}

fn require_density(f: &CompleteBernsteinFunction) -> Result<()> {
    if f.is_catalog() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "kernel quadrature needs a catalog exponent with a closed-form Lévy density".into(),
        ))
    }
}

fn require_transient(f: &CompleteBernsteinFunction, d: usize) -> Result<()> {
    // for catalog entries the exponent at zero is exact, so this is the
    // Chung–Fuchs criterion itself
    let (at_zero, _) = f.reference_exponents();
    if d as f64 > 2.0 * at_zero {
        Ok(())
    } else {
        Err(domain(format!("{f} is not transient in dimension {d}")))
    }
}

fn require_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("radius must be positive and finite, got {r}")))
    }
}

/// `j(r)` together with the quadrature diagnostics. Underflow of the true
/// value (e.g. exponentially tempered jumps at large `r`) yields `0`.
pub fn jump_density_quad(f: &CompleteBernsteinFunction, d: usize, r: f64) -> Result<Quad> {
    require_density(f)?;
    require_radius(r)?;
    subordination_integral(d, r, |t| f.levy_density(t).unwrap_or(0.0))
}

pub fn jump_density(f: &CompleteBernsteinFunction, d: usize, r: f64) -> Result<f64> {
    jump_density_quad(f, d, r).map(|q| q.value)
}

/// `g(r)` from the potential density of the subordinator.
pub fn green_density_quad(f: &CompleteBernsteinFunction, d: usize, r: f64) -> Result<Quad> {
    require_density(f)?;
    require_radius(r)?;
    require_transient(f, d)?;
    if !f.has_potential_density() {
        return Err(Error::Unsupported(format!(
            "{f} has no closed-form potential density; use green_density_fourier"
        )));
    }
    subordination_integral(d, r, |t| f.potential_density(t).unwrap_or(0.0))
}

pub fn green_density(f: &CompleteBernsteinFunction, d: usize, r: f64) -> Result<f64> {
    green_density_quad(f, d, r).map(|q| q.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierDiagnostics {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub partial_sums: Vec<f64>,
}

/// `g(r)` from the radial Fourier inversion of `1/φ(|ξ|²)`:
/// `g(r) = (2π)^{−d/2} r^{−d} ∫₀^∞ k^{d/2} J_{d/2−1}(k) / φ(k²/r²) dk`.
///
/// The integral is split at the zeros of the Bessel factor; the first piece
/// is integrated in a logarithmic variable and the oscillating tail is summed
/// with Levin acceleration.
pub fn green_density_fourier_diag(f: &CompleteBernsteinFunction, d: usize, r: f64) -> Result<FourierDiagnostics> {
    require_radius(r)?;
    require_transient(f, d)?;
    if d < 2 {
        return Err(Error::Unsupported("the Fourier route is implemented for d ≥ 2".into()));
    }
    let nu = 0.5 * d as f64 - 1.0;
    let half_d = 0.5 * d as f64;
    let inv_r2 = 1.0 / (r * r);
    let integrand = |k: f64| k.powf(half_d) * bessel_j(nu, k) / f.value(k * k * inv_r2);
    let tol = Tolerance {
        rel: 1e-13,
        abs: 0.0,
        max_intervals: 2000,
    };
    let z1 = bessel_zero_approx(nu, 1);
    let first = integrate_semi_infinite(
        |v: f64| {
            let k = z1 * (-v).exp();
            integrand(k) * k
        },
        0.0,
        20.0,
        tol,
    )?;
    let abs_floor = 1e-16 * first.value.abs();
    let mut partial = vec![first.value];
    let mut err = f64::INFINITY;
    let mut value = f64::NAN;
    let mut lo = z1;
    for (round, target) in [40usize, 80, 160].into_iter().enumerate() {
        while partial.len() < target {
            let hi = bessel_zero_approx(nu, partial.len() + 1);
            let q = integrate(integrand, lo, hi, Tolerance { abs: abs_floor, ..tol })?;
            partial.push(partial.last().unwrap() + q.value);
            lo = hi;
        }
        if let Some((v, e)) = accelerate(&partial) {
            // compare against the transform from a shorter prefix as well
            let shorter = accelerate(&partial[..partial.len() * 3 / 4]).map(|x| x.0).unwrap_or(v);
            value = v;
            err = e.max((v - shorter).abs());
            if err <= 1e-9 * v.abs() || (round == 2 && err <= 1e-6 * v.abs()) {
                break;
            }
        }
    }
    let scale = (2.0 * PI).powf(-half_d) * r.powi(-(d as i32));
    if !(err <= 1e-6 * value.abs()) {
        return Err(Error::Quadrature {
            what: format!(
                "oscillatory Fourier integral at r={r}: partial sums {:?}",
                &partial[partial.len().saturating_sub(6)..]
            ),
            estimate: value * scale,
            error: err * scale,
            evaluations: partial.len(),
        });
    }
    Ok(FourierDiagnostics {
        value: value * scale,
        error: err * scale.abs(),
        intervals: partial.len(),
        partial_sums: partial,
    })
}

pub fn green_density_fourier(f: &CompleteBernsteinFunction, d: usize, r: f64) -> Result<f64> {
    green_density_fourier_diag(f, d, r).map(|x| x.value)
}

/// `g(r)` by whichever route applies: the potential-density integral when
/// it exists, the Fourier route otherwise.
pub fn green_any(f: &CompleteBernsteinFunction, d: usize, r: f64) -> Result<(f64, f64)> {
    if f.has_potential_density() {
        let q = green_density_quad(f, d, r)?;
        Ok((q.value, q.rel_error()))
    } else {
        let x = green_density_fourier_diag(f, d, r)?;
        Ok((x.value, (x.error / x.value).abs()))
    }
}

/// Riesz constant of the stable jump density `j(r) = A r^{−d−α}`.
pub fn riesz_jump_constant(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (df + alpha)) / (PI.powf(0.5 * df) * gamma(1.0 - 0.5 * alpha))
}

/// Riesz constant of the stable Green function `g(r) = B r^{α−d}`.
pub fn riesz_green_constant(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    gamma(0.5 * (df - alpha)) / (2f64.powf(alpha) * PI.powf(0.5 * df) * gamma(0.5 * alpha))
}

/// Free Green function `G(x, y) = g(|x − y|)` prepared for repeated
/// evaluation: closed form for stable and sums of stable components with a
/// potential density, otherwise a table of `g(r) r^d φ(r^{−2})` in `ln r`
/// held constant beyond its ends.
#[derive(Debug, Clone)]
pub enum FreeGreen {
    Riesz {
        d: usize,
        coefficient: f64,
        power: f64,
    },
    Table {
        f: CompleteBernsteinFunction,
        d: usize,
        ln_lo: f64,
        step: f64,
        shape: Vec<f64>,
        max_rel_error: f64,
    },
}

impl FreeGreen {
    pub fn new(f: &CompleteBernsteinFunction, d: usize) -> Result<Self> {
        require_density(f)?;
        require_transient(f, d)?;
        if let Some(alpha) = f.stable_alpha() {
            return Ok(FreeGreen::Riesz {
                d,
                coefficient: riesz_green_constant(d, alpha),
                power: alpha - d as f64,
            });
        }
        let (lo, hi, per_decade) = (1e-4f64, 1e4f64, 32usize);
        let n = (hi / lo).log10() as usize * per_decade;
        let ln_lo = lo.ln();
        let step = (hi / lo).ln() / n as f64;
        let rows: Vec<Result<(f64, f64)>> = (0..=n)
            .into_par_iter()
            .map(|i| {
                let r = (ln_lo + step * i as f64).exp();
                let (g, e) = green_any(f, d, r)?;
                Ok((g * r.powi(d as i32) * f.value(1.0 / (r * r)), e))
            })
            .collect();
        let mut shape = Vec::with_capacity(n + 1);
        let mut max_rel_error: f64 = 0.0;
        for row in rows {
            let (s, e) = row?;
            shape.push(s);
            max_rel_error = max_rel_error.max(e);
        }
        Ok(FreeGreen::Table {
            f: f.clone(),
            d,
            ln_lo,
            step,
            shape,
            max_rel_error,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            FreeGreen::Riesz { coefficient, power, .. } => coefficient * r.powf(*power),
            FreeGreen::Table {
                f,
                d,
                ln_lo,
                step,
                shape,
                ..
            } => {
                let hi = ln_lo + step * (shape.len() - 1) as f64;
                let s = interp_uniform(*ln_lo, *step, shape, r.ln().clamp(*ln_lo, hi));
                s / (r.powi(*d as i32) * f.value(1.0 / (r * r)))
            }
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            FreeGreen::Riesz { d, .. } | FreeGreen::Table { d, .. } => *d,
        }
    }
}

/// Jump density prepared for repeated evaluation inside path loops: a sum of
/// Riesz terms for stable components, otherwise `ln j` tabulated against
/// `ln r` with linear extrapolation past both ends.
#[derive(Debug, Clone)]
pub enum JumpKernel {
    Riesz { d: usize, terms: Vec<(f64, f64)> },
    Table { ln_lo: f64, step: f64, ln_values: Vec<f64> },
}

impl JumpKernel {
    pub fn new(f: &CompleteBernsteinFunction, d: usize) -> Result<Self> {
        require_density(f)?;
        if let Some(comps) = f.stable_components() {
            let terms = comps
                .iter()
                .map(|&(beta, w)| {
                    let alpha = 2.0 * beta;
                    (w * riesz_jump_constant(d, alpha), -(d as f64) - alpha)
                })
                .collect();
            return Ok(JumpKernel::Riesz { d, terms });
        }
        let (lo, hi, per_decade) = (1e-4f64, 1e3f64, 64usize);
        let n = ((hi / lo).log10() * per_decade as f64).round() as usize;
        let ln_lo = lo.ln();
        let step = (hi / lo).ln() / n as f64;
        let values: Vec<Result<f64>> = (0..=n)
            .into_par_iter()
            .map(|i| jump_density(f, d, (ln_lo + step * i as f64).exp()))
            .collect();
        let mut ln_values = Vec::with_capacity(n + 1);
        for v in values {
            let v = v?;
            if !(v > 0.0) {
                break;
            }
            ln_values.push(v.ln());
        }
        if ln_values.len() < 2 {
            return Err(Error::Singular("jump density underflows on the whole table".into()));
        }
        Ok(JumpKernel::Table { ln_lo, step, ln_values })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            JumpKernel::Riesz { terms, .. } => terms.iter().map(|(c, p)| c * r.powf(*p)).sum(),
            JumpKernel::Table { ln_lo, step, ln_values } => interp_uniform(*ln_lo, *step, ln_values, r.ln()).exp(),
        }
    }
}

/// Jump intensity from `w` into a ball, `J(w) = ∫_{B(c, ρ)} j(|w − z|) dz`,
/// tabulated in `ln(|w − c| − ρ)` from `gap·ρ` outwards. Beyond the table
/// `J / (|B| j)` is held at its last value; closer points are integrated
/// directly.
#[derive(Debug, Clone)]
pub struct BallJumpIntensity {
    center: Vec<f64>,
    radius: f64,
    volume: f64,
    jump: JumpKernel,
    ln_lo: f64,
    step: f64,
    /// `ln(J(s) / (|B| j(s)))` against `ln(s − ρ)`
    ln_shape: Vec<f64>,
}

impl BallJumpIntensity {
    pub fn new(jump: &JumpKernel, center: &[f64], radius: f64, gap: f64) -> Result<Self> {
        if !(radius > 0.0 && gap > 0.0) {
            return Err(domain("ball radius and gap must be positive"));
        }
        let d = center.len();
        let volume = crate::special::ball_volume(d) * radius.powi(d as i32);
        let lo = radius * gap;
        let (decades, per_decade) = ((1e4 / gap).log10().ceil() as usize, 32usize);
        let n = decades * per_decade;
        let ln_lo = lo.ln();
        let step = std::f64::consts::LN_10 / per_decade as f64;
        let rows: Vec<Result<f64>> = (0..=n)
            .into_par_iter()
            .map(|i| {
                let s = radius + (ln_lo + step * i as f64).exp();
                let v = ball_intensity_quad(jump, d, radius, s)?;
                Ok((v / (volume * jump.eval(s))).ln())
            })
            .collect();
        Ok(Self {
            center: center.to_vec(),
            radius,
            volume,
            jump: jump.clone(),
            ln_lo,
            step,
            ln_shape: rows.into_iter().collect::<Result<_>>()?,
        })
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        let s = crate::geometry::distance(w, &self.center);
        let ls = (s - self.radius).ln();
        if !(ls >= self.ln_lo) {
            return ball_intensity_quad(&self.jump, self.center.len(), self.radius, s).unwrap_or(f64::NAN);
        }
        let hi = self.ln_lo + self.step * (self.ln_shape.len() - 1) as f64;
        let shape = interp_uniform(self.ln_lo, self.step, &self.ln_shape, ls.min(hi)).exp();
        shape * self.volume * self.jump.eval(s)
    }
}

/// `∫_{B(0, ρ)} j(|w − z|) dz` at `|w| = s > ρ`, by radial and polar-angle
/// quadrature of sphere means.
fn ball_intensity_quad(jump: &JumpKernel, d: usize, radius: f64, s: f64) -> Result<f64> {
    if !(s > radius) {
        return Err(domain("point must lie outside the ball"));
    }
    let tol = Tolerance {
        rel: 1e-10,
        abs: 0.0,
        max_intervals: 2000,
    };
    let area = crate::special::sphere_area(d);
    let failure = std::cell::RefCell::new(None);
    let sphere_mean = |t: f64| -> f64 {
        if d == 1 {
            return 0.5 * (jump.eval(s - t) + jump.eval(s + t));
        }
        let w = |psi: f64| psi.sin().powi(d as i32 - 2);
        let r = |psi: f64| (s * s + t * t - 2.0 * s * t * psi.cos()).max(0.0).sqrt();
        let num = integrate(|psi: f64| jump.eval(r(psi)) * w(psi), 0.0, PI, tol);
        let den = integrate(w, 0.0, PI, tol);
        match (num, den) {
            (Ok(a), Ok(b)) => a.value / b.value,
            (Err(e), _) | (_, Err(e)) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let q = integrate(|t: f64| area * t.powi(d as i32 - 1) * sphere_mean(t), 0.0, radius, tol)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(q.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelTable {
    pub phi: String,
    pub dimension: usize,
    pub radii: Vec<f64>,
    pub phi_values: Vec<f64>,
    pub j_values: Vec<f64>,
    pub g_values: Vec<f64>,
    /// Estimated relative quadrature error, the larger of the `j` and `g`
    /// entries.
    pub quadrature_error: Vec<f64>,
    pub tolerance: f64,
    pub flagged: Vec<usize>,
}

/// Tabulates `φ(r^{−2})`, `j(r)` and `g(r)` on `radii`.
pub fn build_kernel_table(f: &CompleteBernsteinFunction, d: usize, radii: &[f64]) -> Result<KernelTable> {
    require_density(f)?;
    let rows: Vec<Result<(f64, f64, f64, f64)>> = radii
        .par_iter()
        .map(|&r| {
            let j = jump_density_quad(f, d, r)?;
            let (g, ge) = green_any(f, d, r)?;
            Ok((f.value(1.0 / (r * r)), j.value, g, j.rel_error().max(ge)))
        })
        .collect();
    let mut t = KernelTable {
        phi: f.id(),
        dimension: d,
        radii: radii.to_vec(),
        phi_values: vec![],
        j_values: vec![],
        g_values: vec![],
        quadrature_error: vec![],
        tolerance: 1e-8,
        flagged: vec![],
    };
    for (i, row) in rows.into_iter().enumerate() {
        let (p, j, g, e) = row?;
        t.phi_values.push(p);
        t.j_values.push(j);
        t.g_values.push(g);
        t.quadrature_error.push(e);
        let monotone = i == 0 || (j < t.j_values[i - 1] && g < t.g_values[i - 1]);
        if !(e <= t.tolerance) || !(j > 0.0 && g > 0.0) || !monotone {
            t.flagged.push(i);
        }
    }
    Ok(t)
}

impl KernelTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,phi_r_inv2,j,g,quadrature_rel_error,flagged")?;
        for i in 0..self.radii.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                full(self.radii[i]),
                full(self.phi_values[i]),
                full(self.j_values[i]),
                full(self.g_values[i]),
                full(self.quadrature_error[i]),
                self.flagged.contains(&i)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparabilityReport {
    pub statistic: String,
    pub grid: Vec<f64>,
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    /// Spread on the grid with doubled point density.
    pub refined_spread: f64,
    /// `|refined_spread / spread − 1|`.
    pub refinement_delta: f64,
    pub verdict: Verdict,
}

impl ComparabilityReport {
    fn from_ratios(statistic: String, grid: Vec<f64>, ratios: Vec<f64>, refined: &[f64]) -> Self {
        let (min, max, spread) = band(&ratios);
        let (_, _, refined_spread) = band(refined);
        let refinement_delta = if spread.is_finite() && refined_spread.is_finite() {
            (refined_spread / spread - 1.0).abs()
        } else {
            f64::INFINITY
        };
        let verdict = if spread.is_finite() && refinement_delta < REFINEMENT_STABILITY {
            Verdict::Bounded
        } else {
            Verdict::Violated
        };
        Self {
            statistic,
            grid,
            ratios,
            min,
            max,
            spread,
            refined_spread,
            refinement_delta,
            verdict,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,ratio")?;
        for (r, q) in self.grid.iter().zip(&self.ratios) {
            writeln!(w, "{},{}", full(*r), full(*q))?;
        }
        Ok(())
    }
}

/// The grid with a geometric midpoint inserted between neighbours.
pub fn refine_log_grid(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for (i, &x) in grid.iter().enumerate() {
        if i > 0 {
            out.push((grid[i - 1] * x).sqrt());
        }
        out.push(x);
    }
    out
}

fn decades(grid: &[f64]) -> f64 {
    let lo = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().cloned().fold(0.0, f64::max);
    (hi / lo).log10()
}

fn scan<F>(grid: &[f64], stat: F) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let fine = refine_log_grid(grid);
    let values: Vec<f64> = fine.par_iter().map(|&r| stat(r)).collect::<Result<_>>()?;
    let coarse = values.iter().step_by(2).cloned().collect();
    Ok((coarse, values))
}

/// Scans `j(r) r^d / φ(r^{−2})` and `g(r) r^d φ(r^{−2})` over `grid`.
pub fn verify_jg_estimates(f: &CompleteBernsteinFunction, d: usize, grid: &[f64]) -> Result<[ComparabilityReport; 2]> {
    if decades(grid) < 6.0 - 1e-9 {
        return Err(domain("comparability grid must span at least 6 decades"));
    }
    let dd = d as i32;
    let (jc, jf) = scan(grid, |r| {
        Ok(jump_density(f, d, r)? * r.powi(dd) / f.value(1.0 / (r * r)))
    })?;
    let (gc, gf) = scan(grid, |r| {
        Ok(green_any(f, d, r)?.0 * r.powi(dd) * f.value(1.0 / (r * r)))
    })?;
    Ok([
        ComparabilityReport::from_ratios("j(r) r^d / phi(r^-2)".into(), grid.to_vec(), jc, &jf),
        ComparabilityReport::from_ratios("g(r) r^d phi(r^-2)".into(), grid.to_vec(), gc, &gf),
    ])
}

/// Tightest `c` with `j(r) ≤ c·j(Lr)` over `grid`; `max` of the report.
pub fn verify_doubling(f: &CompleteBernsteinFunction, d: usize, l: f64, grid: &[f64]) -> Result<ComparabilityReport> {
    if !(l > 1.0) {
        return Err(domain(format!("doubling factor must exceed 1, got {l}")));
    }
    let (c, fine) = scan(grid, |r| Ok(jump_density(f, d, r)? / jump_density(f, d, l * r)?))?;
    let mut rep = ComparabilityReport::from_ratios(format!("j(r) / j({l} r)"), grid.to_vec(), c, &fine);
    // boundedness here is about the maximum, not the spread
    let refined_max = fine.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    rep.refinement_delta = if rep.max.is_finite() {
        (refined_max / rep.max - 1.0).abs()
    } else {
        f64::INFINITY
    };
    rep.verdict = if rep.max.is_finite() && rep.min > 0.0 && rep.refinement_delta < REFINEMENT_STABILITY {
        Verdict::Bounded
    } else {
        Verdict::Violated
    };
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralInequality {
    pub name: String,
    pub lambdas: Vec<f64>,
    /// `LHS / RHS` per `λ`.
    pub ratios: Vec<f64>,
    /// Tightest constant: `max ratio` for one-sided bounds, and the larger
    /// of `max ratio` and `1/min ratio` for the two-sided one.
    pub constant: f64,
    pub spread: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralEstimatesReport {
    pub phi: String,
    pub inequalities: [IntegralInequality; 3],
}

fn integral_inequality(name: &str, lambdas: &[f64], ratios: Vec<f64>, two_sided: bool) -> IntegralInequality {
    let (min, max, spread) = band(&ratios);
    let constant = if two_sided { max.max(1.0 / min) } else { max };
    IntegralInequality {
        name: name.into(),
        lambdas: lambdas.to_vec(),
        verdict: if constant.is_finite() && spread.is_finite() {
            Verdict::Bounded
        } else {
            Verdict::Violated
        },
        ratios,
        constant,
        spread,
    }
}

/// Evaluates the three integral estimates of `φ(r^{−2})` on `lambdas`.
///
/// (a) `∫₀^{1/λ} φ(r^{−2})^{1/2} dr ≤ c λ^{−1} φ(λ²)^{1/2}`;
/// (b) `λ² ∫₀^{1/λ} r φ(r^{−2}) dr + ∫_{1/λ}^∞ r^{−1} φ(r^{−2}) dr ≤ c φ(λ²)`;
/// (c) `∫₀^{1/λ} r^{−1} φ(r^{−2})^{−1} dr ≍ φ(λ²)^{−1}`.
pub fn verify_integral_estimates(f: &CompleteBernsteinFunction, lambdas: &[f64]) -> Result<IntegralEstimatesReport> {
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(domain("λ grid must be positive"));
    }
    let tol = Tolerance {
        rel: 1e-12,
        abs: 0.0,
        max_intervals: 4000,
    };
    let mut ra = Vec::new();
    let mut rb = Vec::new();
    let mut rc = Vec::new();
    for &lam in lambdas {
        let p = f.value(lam * lam);
        // r = e^{−v}/λ on (0, 1/λ]
        let a = integrate_semi_infinite(
            |v: f64| {
                let r = (-v).exp() / lam;
                f.value(1.0 / (r * r)).sqrt() * r
            },
            0.0,
            20.0,
            tol,
        )?;
        ra.push(a.value / (p.sqrt() / lam));
        let b_inner = integrate_semi_infinite(
            |v: f64| {
                let r = (-v).exp() / lam;
                r * f.value(1.0 / (r * r)) * r
            },
            0.0,
            20.0,
            tol,
        )?;
        // r = e^{v}/λ on [1/λ, ∞)
        let b_outer = integrate_semi_infinite(
            |v: f64| {
                let r = v.exp() / lam;
                f.value(1.0 / (r * r))
            },
            0.0,
            20.0,
            tol,
        )?;
        rb.push((lam * lam * b_inner.value + b_outer.value) / p);
        let c = integrate_semi_infinite(
            |v: f64| {
                let r = (-v).exp() / lam;
                1.0 / f.value(1.0 / (r * r))
            },
            0.0,
            20.0,
            tol,
        )?;
        rc.push(c.value * p);
    }
    Ok(IntegralEstimatesReport {
        phi: f.id(),
        inequalities: [
            integral_inequality("a", lambdas, ra, false),
            integral_inequality("b", lambdas, rb, false),
            integral_inequality("c", lambdas, rc, true),
        ],
    })
}

/// `true` for kinds whose Lévy density is exponentially tempered.
pub fn is_tempered(f: &CompleteBernsteinFunction) -> bool {
    matches!(f.kind(), CbfKind::Relativistic { .. })
}
