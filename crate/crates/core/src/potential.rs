//! Closed-form stable-process oracles, Martin kernels and their limits at
//! infinity, and the generator applied to smooth test functions.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cbf::CompleteBernsteinFunction;
use crate::error::{domain, Error, Result};
use crate::geometry::{distance, norm, FatnessCertificate, OpenSetSpec};
use crate::kernels::{jump_density_quad, riesz_green_constant, riesz_jump_constant, FreeGreen};
use crate::montecarlo::{simulate_batch, ExitSample, PathConfig, Process};
use crate::quad::{accelerate, integrate, integrate_semi_infinite, Tolerance};
use crate::report::Verdict;
use crate::special::{bessel_zero_approx, beta_reg, gamma, ln_gamma, sphere_area, sphere_mean_cos_minus_one};
use crate::stats::{linear_fit, mean_se, ratio_estimate};

/// Closed forms for the isotropic `α`-stable process in `ℝ^d`, `d > α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableOracle {
    pub d: usize,
    pub alpha: f64,
}

/// Objects available through [`oracle_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleObject {
    /// args: `[r]`
    Jump,
    /// args: `[r]`
    Green,
    /// args: `[radius, x.., z..]`
    BallPoisson,
    /// args: `[radius, x.., y..]`
    BallGreen,
    /// args: `[radius, |x|]`
    BallHitting,
    /// args: `[radius, ρ]`, exit from the centre
    BallExitRadiusCdf,
    /// args: `[x..]`
    HalfSpaceProfile,
}

impl FromStr for OracleObject {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "jump" => OracleObject::Jump,
            "green" => OracleObject::Green,
            "ball-poisson" => OracleObject::BallPoisson,
            "ball-green" => OracleObject::BallGreen,
            "ball-hitting" => OracleObject::BallHitting,
            "ball-exit-radius-cdf" => OracleObject::BallExitRadiusCdf,
            "half-space-profile" => OracleObject::HalfSpaceProfile,
            _ => return Err(Error::Parse(format!("unknown oracle object `{s}`"))),
        })
    }
}

impl StableOracle {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(domain(format!("stable index must lie in (0, 2), got {alpha}")));
        }
        if !(d as f64 > alpha) {
            return Err(domain(format!("need d > alpha, got d = {d}, alpha = {alpha}")));
        }
        Ok(Self { d, alpha })
    }

    pub fn for_phi(f: &CompleteBernsteinFunction, d: usize) -> Result<Self> {
        let alpha = f
            .stable_alpha()
            .ok_or_else(|| Error::Unsupported(format!("no stable oracle for {f}")))?;
        Self::new(d, alpha)
    }

    pub fn jump(&self, r: f64) -> f64 {
        riesz_jump_constant(self.d, self.alpha) * r.powf(-(self.d as f64) - self.alpha)
    }

    pub fn green(&self, r: f64) -> f64 {
        riesz_green_constant(self.d, self.alpha) * r.powf(self.alpha - self.d as f64)
    }

    /// Density at `z` of the exit position from `B(0, radius)` started at `x`.
    pub fn ball_poisson_kernel(&self, radius: f64, x: &[f64], z: &[f64]) -> Result<f64> {
        let (nx, nz) = (norm(x), norm(z));
        if !(nx < radius && nz > radius) {
            return Err(domain("ball Poisson kernel needs |x| < radius < |z|"));
        }
        let d = self.d as f64;
        let c = gamma(0.5 * d) * PI.powf(-0.5 * d - 1.0) * (0.5 * PI * self.alpha).sin();
        let q = (radius * radius - nx * nx) / (nz * nz - radius * radius);
        Ok(c * q.powf(0.5 * self.alpha) * distance(x, z).powf(-d))
    }

    /// `P_0(|X_τ| ≤ ρ)` for the exit from `B(0, radius)`.
    pub fn ball_exit_radius_cdf(&self, radius: f64, rho: f64) -> f64 {
        if rho <= radius {
            return 0.0;
        }
        let a = 0.5 * self.alpha;
        1.0 - beta_reg(a, 1.0 - a, (radius / rho).powi(2))
    }

    /// Probability of ever hitting `B(0, radius)` from distance `dist`.
    pub fn ball_hitting_probability(&self, radius: f64, dist: f64) -> f64 {
        if dist <= radius {
            return 1.0;
        }
        let d = self.d as f64;
        beta_reg(0.5 * (d - self.alpha), 0.5 * self.alpha, (radius / dist).powi(2))
    }

    /// Green function of `B(0, radius)`.
    pub fn ball_green(&self, radius: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        let (nx, ny) = (norm(x), norm(y));
        if !(nx < radius && ny < radius) {
            return Ok(0.0);
        }
        let r = distance(x, y);
        if r == 0.0 {
            return Err(Error::Singular("ball Green function on the diagonal".into()));
        }
        let d = self.d as f64;
        let (a, b) = (0.5 * self.alpha, 0.5 * (d - self.alpha));
        let w = (radius * radius - nx * nx) * (radius * radius - ny * ny) / (radius * radius * r * r);
        let ln_kappa = ln_gamma(0.5 * d) - self.alpha * 2f64.ln() - 0.5 * d * PI.ln() - 2.0 * ln_gamma(a);
        let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
        Ok((ln_kappa + ln_beta).exp() * r.powf(self.alpha - d) * beta_reg(a, b, w / (1.0 + w)))
    }

    /// Positive harmonic profile of the half-space `{x_d > 0}` vanishing on
    /// its complement.
    pub fn half_space_profile(&self, x: &[f64]) -> f64 {
        x.last().copied().unwrap_or(0.0).max(0.0).powf(0.5 * self.alpha)
    }
}

pub fn oracle_eval(o: &StableOracle, object: OracleObject, args: &[f64]) -> Result<f64> {
    let d = o.d;
    let need = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(domain(format!("{object:?} takes {n} arguments, got {}", args.len())))
        }
    };
    match object {
        OracleObject::Jump | OracleObject::Green => {
            need(1)?;
            if !(args[0] > 0.0) {
                return Err(domain("radius must be positive"));
            }
            Ok(if object == OracleObject::Jump {
                o.jump(args[0])
            } else {
                o.green(args[0])
            })
        }
        OracleObject::BallPoisson => {
            need(1 + 2 * d)?;
            o.ball_poisson_kernel(args[0], &args[1..1 + d], &args[1 + d..])
        }
        OracleObject::BallGreen => {
            need(1 + 2 * d)?;
            let (x, y) = (&args[1..1 + d], &args[1 + d..]);
            if !(norm(x) < args[0] && norm(y) < args[0]) {
                return Err(domain("ball Green function needs both points inside the ball"));
            }
            o.ball_green(args[0], x, y)
        }
        OracleObject::BallHitting => {
            need(2)?;
            Ok(o.ball_hitting_probability(args[0], args[1]))
        }
        OracleObject::BallExitRadiusCdf => {
            need(2)?;
            Ok(o.ball_exit_radius_cdf(args[0], args[1]))
        }
        OracleObject::HalfSpaceProfile => {
            need(d)?;
            Ok(o.half_space_profile(args))
        }
    }
}

/// Smooth bounded test functions for the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    /// `cos(ξ·x)`
    Cosine {
        frequency: Vec<f64>,
    },
    /// `exp(−|x − c|² / (2w²))`
    GaussianBump {
        center: Vec<f64>,
        width: f64,
    },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Generalized Laguerre `L_k^{(a)}(x)` for `k = 0..=n`.
fn laguerre_all(n: usize, a: f64, x: f64) -> Vec<f64> {
    let mut l = vec![1.0; n + 1];
    if n >= 1 {
        l[1] = 1.0 + a - x;
    }
    for k in 1..n {
        let kf = k as f64;
        l[k + 1] = ((2.0 * kf + 1.0 + a - x) * l[k] - (kf + a) * l[k - 1]) / (kf + 1.0);
    }
    l
}

impl TestFunction {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Constant { value } => *value,
            TestFunction::Cosine { frequency } => dot(frequency, x).cos(),
            TestFunction::GaussianBump { center, width } => {
                let r = distance(x, center);
                (-0.5 * r * r / (width * width)).exp()
            }
        }
    }

    /// Length scale on which the function varies.
    pub fn scale(&self) -> f64 {
        match self {
            TestFunction::Constant { .. } => f64::INFINITY,
            TestFunction::Cosine { frequency } => 1.0 / norm(frequency),
            TestFunction::GaussianBump { width, .. } => *width,
        }
    }

    /// Mean of `f` over the sphere of radius `rho` about `x`, minus `f(x)`,
    /// by the Pizzetti series `Σ ρ^{2k} Δ^k f / (2^k k! d(d+2)⋯(d+2k−2))`.
    fn sphere_excess_series(&self, x: &[f64], d: usize, rho: f64) -> f64 {
        match self {
            TestFunction::Constant { .. } => 0.0,
            TestFunction::Cosine { frequency } => self.value(x) * sphere_mean_cos_minus_one(d, norm(frequency) * rho),
            TestFunction::GaussianBump { center, width } => {
                // Δ^k e^{−|y|²/2} = (−2)^k k! L_k^{(d/2−1)}(|y|²/2) e^{−|y|²/2}
                let u = 0.5 * distance(x, center).powi(2) / (width * width);
                let t = rho / width;
                let df = d as f64;
                let lag = laguerre_all(60, 0.5 * df - 1.0, u);
                let mut sum = 0.0;
                let mut coef = 1.0;
                for (k, l) in lag.iter().enumerate().skip(1) {
                    let kf = k as f64;
                    // ρ^{2k}(−2)^k k! / (2^k k! Π(d+2i)) = (−ρ²)^k / Π(d+2i)
                    coef *= -t * t / (df + 2.0 * (kf - 1.0));
                    let term = coef * l;
                    sum += term;
                    if term.abs() < 1e-17 * sum.abs() && kf > 4.0 {
                        break;
                    }
                }
                self.value(x) * sum
            }
        }
    }

    /// The same sphere mean by direct quadrature over the polar angle.
    fn sphere_excess_direct(&self, x: &[f64], d: usize, rho: f64) -> Result<f64> {
        match self {
            TestFunction::Constant { .. } | TestFunction::Cosine { .. } => Ok(self.sphere_excess_series(x, d, rho)),
            TestFunction::GaussianBump { center, width } => {
                if d == 1 {
                    let a = x[0] - center[0];
                    let g = |y: f64| (-0.5 * y * y / (width * width)).exp();
                    return Ok(0.5 * (g(a + rho) + g(a - rho)) - g(a));
                }
                let a = distance(x, center);
                let s2 = width * width;
                let f0 = self.value(x);
                let dm2 = (d - 2) as i32;
                let weight = |psi: f64| psi.sin().powi(dm2);
                let tol = Tolerance::rel(1e-12);
                let norm_c = integrate(weight, 0.0, PI, tol)?.value;
                let q = integrate(
                    |psi: f64| {
                        let r2 = a * a + rho * rho - 2.0 * a * rho * psi.cos();
                        ((-0.5 * r2 / s2).exp() - f0) * weight(psi)
                    },
                    0.0,
                    PI,
                    tol,
                )?;
                Ok(q.value / norm_c)
            }
        }
    }
}

/// `ℒf(x)` at two split radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorValue {
    pub value: f64,
    pub epsilon: f64,
    pub value_half_epsilon: f64,
    /// `|value − value_half_epsilon| / max(|value|, tiny)`.
    pub epsilon_delta: f64,
}

/// Applies the generator of the subordinate Brownian motion to `f_test` at
/// `x`. Spherical symmetry of `j` removes the gradient term, so
/// `ℒf(x) = ∫₀^∞ |S^{d−1}| ρ^{d−1} j(ρ) (M_ρ f(x) − f(x)) dρ` with `M_ρ` the
/// sphere mean; below the split radius the sphere mean comes from its Taylor
/// (Pizzetti) series, above it from direct quadrature, and the value is
/// recomputed with the split halved.
pub fn apply_generator(
    f_test: &TestFunction,
    x: &[f64],
    phi: &CompleteBernsteinFunction,
    d: usize,
) -> Result<GeneratorValue> {
    if x.len() != d {
        return Err(domain(format!("point has {} coordinates, expected {d}", x.len())));
    }
    if let TestFunction::Cosine { frequency } | TestFunction::GaussianBump { center: frequency, .. } = f_test {
        if frequency.len() != d {
            return Err(domain("test function parameters do not match the dimension"));
        }
    }
    if let TestFunction::Constant { .. } = f_test {
        return Ok(GeneratorValue {
            value: 0.0,
            epsilon: 1.0,
            value_half_epsilon: 0.0,
            epsilon_delta: 0.0,
        });
    }
    let eps = f_test.scale().min(1.0);
    let value = generator_with_split(f_test, x, phi, d, eps)?;
    let value_half_epsilon = generator_with_split(f_test, x, phi, d, 0.5 * eps)?;
    Ok(GeneratorValue {
        value,
        epsilon: eps,
        value_half_epsilon,
        epsilon_delta: (value - value_half_epsilon).abs() / value.abs().max(1e-300),
    })
}

const GENERATOR_TOLERANCE: f64 = 1e-9;

fn generator_with_split(
    f_test: &TestFunction,
    x: &[f64],
    phi: &CompleteBernsteinFunction,
    d: usize,
    eps: f64,
) -> Result<f64> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let j = |rho: f64| -> f64 {
        match jump_density_quad(phi, d, rho) {
            Ok(q) => q.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let area = sphere_area(d);
    let dm1 = (d - 1) as i32;
    let tol = Tolerance {
        rel: GENERATOR_TOLERANCE,
        abs: 0.0,
        max_intervals: 4000,
    };
    // ρ = ε e^{−v}
    let inner = integrate_semi_infinite(
        |v: f64| {
            let rho = eps * (-v).exp();
            area * rho.powi(dm1) * j(rho) * f_test.sphere_excess_series(x, d, rho) * rho
        },
        0.0,
        10.0,
        tol,
    )?;
    let scale = f_test.scale();
    let (middle_end, tail) = match f_test {
        TestFunction::Cosine { frequency } => {
            let k = norm(frequency);
            let nu = 0.5 * d as f64 - 1.0;
            // split the oscillatory tail at zeros of the sphere mean
            let first = (1..)
                .find(|&n| bessel_zero_approx(nu, n) / k > eps.max(20.0 * scale))
                .unwrap_or(1);
            let start = bessel_zero_approx(nu, first) / k;
            let f0 = f_test.value(x);
            let mut partial = Vec::with_capacity(80);
            let mut acc = 0.0;
            let mut a = start;
            for n in 1..=80 {
                let b = bessel_zero_approx(nu, first + n) / k;
                acc += integrate(
                    |rho: f64| area * rho.powi(dm1) * j(rho) * f0 * (sphere_mean_cos_minus_one(d, k * rho) + 1.0),
                    a,
                    b,
                    tol,
                )?
                .value;
                partial.push(acc);
                a = b;
            }
            let (oscillatory, _) = accelerate(&partial).unwrap_or((acc, f64::NAN));
            let mass = levy_tail_mass(&j, d, start, tol)?;
            (start, oscillatory - f0 * mass)
        }
        TestFunction::GaussianBump { center, width } => {
            let reach = distance(x, center) + 40.0 * width;
            let start = reach.max(eps);
            (start, -f_test.value(x) * levy_tail_mass(&j, d, start, tol)?)
        }
        TestFunction::Constant { .. } => unreachable!(),
    };
    let direct_failure: RefCell<Option<Error>> = RefCell::new(None);
    let middle = integrate(
        |rho: f64| {
            let excess = match f_test.sphere_excess_direct(x, d, rho) {
                Ok(v) => v,
                Err(e) => {
                    direct_failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            };
            area * rho.powi(dm1) * j(rho) * excess
        },
        eps,
        middle_end,
        tol,
    )?;
    if let Some(e) = failure.into_inner().or(direct_failure.into_inner()) {
        return Err(e);
    }
    Ok(inner.value + middle.value + tail)
}

/// `∫_a^∞ |S^{d−1}| ρ^{d−1} j(ρ) dρ`.
fn levy_tail_mass(j: &impl Fn(f64) -> f64, d: usize, a: f64, tol: Tolerance) -> Result<f64> {
    let area = sphere_area(d);
    Ok(integrate_semi_infinite(
        |v: f64| {
            let rho = a * v.exp();
            area * rho.powi(d as i32) * j(rho)
        },
        0.0,
        10.0,
        tol,
    )?
    .value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartinValue {
    pub value: f64,
    pub std_error: f64,
}

/// Per-path contributions to `G_D(x, y)`: `G(x, y) − G(X_τ, y)`, with
/// censored paths contributing `G(x, y)`.
fn green_contributions(free: &FreeGreen, batch: &[ExitSample], x: &[f64], y: &[f64]) -> Vec<f64> {
    let g = free.eval(distance(x, y));
    batch
        .iter()
        .map(|s| g - s.exit_position().map_or(0.0, |z| free.eval(distance(z, y))))
        .collect()
}

fn paired_ratio(a: &[f64], b: &[f64]) -> Result<(f64, Vec<f64>)> {
    let r = ratio_estimate(a, b);
    if r.is_unstable() {
        return Err(Error::UnstableRatio {
            value: r.denominator.mean,
            stderr: r.denominator.std_error,
        });
    }
    Ok((r.value, r.influence))
}

fn se_of(values: &[f64]) -> f64 {
    mean_se(values).std_error
}

/// `M_D(x, y) = G_D(x, y) / G_D(x₀, y)`. Uses the closed-form ball Green
/// function when `D` is a centred ball and `φ` is stable; otherwise Monte
/// Carlo exits from `x` and `x₀` on common random streams.
pub fn martin_kernel(
    p: &Process,
    free: &FreeGreen,
    domain_spec: &OpenSetSpec,
    x: &[f64],
    y: &[f64],
    x0: &[f64],
    cfg: &PathConfig,
) -> Result<MartinValue> {
    for (name, pt) in [("x", x), ("y", y), ("x0", x0)] {
        if !domain_spec.contains(pt) {
            return Err(domain(format!("{name} must lie in the domain")));
        }
    }
    if distance(y, x) == 0.0 || distance(y, x0) == 0.0 {
        return Err(Error::Singular("y coincides with x or x0".into()));
    }
    if distance(x, x0) == 0.0 {
        return Ok(MartinValue {
            value: 1.0,
            std_error: 0.0,
        });
    }
    if let (OpenSetSpec::Ball { center, radius }, Some(alpha)) = (domain_spec, p.phi.stable_alpha()) {
        if norm(center) == 0.0 {
            let o = StableOracle::new(p.d, alpha)?;
            let den = o.ball_green(*radius, x0, y)?;
            return Ok(MartinValue {
                value: o.ball_green(*radius, x, y)? / den,
                std_error: 0.0,
            });
        }
    }
    let bx = simulate_batch(p, domain_spec, x, cfg)?;
    let b0 = simulate_batch(p, domain_spec, x0, cfg)?;
    let (value, infl) = paired_ratio(
        &green_contributions(free, &bx, x, y),
        &green_contributions(free, &b0, x0, y),
    )?;
    Ok(MartinValue {
        value,
        std_error: se_of(&infl),
    })
}

/// Shell values `M_D(x, y_n)` along a ray, the declared limit and the fitted
/// decay of successive differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartinEstimate {
    pub base_point: Vec<f64>,
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    /// `|y_n|`
    pub shells: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Standard errors of `M(x, y_{n+1}) − M(x, y_n)` on the shared paths.
    pub difference_std_errors: Vec<f64>,
    pub limit: Option<f64>,
    pub limit_std_error: Option<f64>,
    /// Index of the first shell of the stabilized window.
    pub stabilized_from: Option<usize>,
    pub nu: Option<f64>,
    pub nu_r_squared: Option<f64>,
    pub censored_fraction: f64,
    pub verdict: Verdict,
}

/// Two shell values count as equal when they differ by at most this many
/// combined standard errors `√(se_i² + se_k²)`.
pub const STABILIZATION_Z: f64 = 2.0;

/// Shells `|y_n| = 2^n R` for `n = 0..=last_shell`.
#[allow(clippy::too_many_arguments)]
pub fn martin_from_batches(
    free: &FreeGreen,
    batch_x: &[ExitSample],
    batch_x0: &[ExitSample],
    x: &[f64],
    x0: &[f64],
    direction: &[f64],
    big_r: f64,
    last_shell: u32,
) -> Result<MartinEstimate> {
    if batch_x.len() != batch_x0.len() {
        return Err(domain("paired batches must have equal size"));
    }
    let dn = norm(direction);
    if !(dn > 0.0) {
        return Err(domain("ray direction must be nonzero"));
    }
    let same = distance(x, x0) == 0.0;
    let mut shells = Vec::new();
    let mut values = Vec::new();
    let mut errors = Vec::new();
    let mut influences: Vec<Vec<f64>> = Vec::new();
    for n in 0..=last_shell {
        let t = big_r * 2f64.powi(n as i32);
        let y: Vec<f64> = direction.iter().map(|c| c / dn * t).collect();
        shells.push(t);
        if distance(&y, x) == 0.0 || distance(&y, x0) == 0.0 {
            return Err(Error::Singular(format!("shell point {y:?} coincides with x or x0")));
        }
        if same {
            values.push(1.0);
            errors.push(0.0);
            influences.push(vec![0.0; batch_x.len()]);
            continue;
        }
        let (r, infl) = paired_ratio(
            &green_contributions(free, batch_x, x, &y),
            &green_contributions(free, batch_x0, x0, &y),
        )?;
        values.push(r);
        errors.push(se_of(&infl));
        influences.push(infl);
    }
    let diff_se: Vec<f64> = influences
        .windows(2)
        .map(|w| {
            let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
            se_of(&d)
        })
        .collect();
    let stable_pair = |i: usize, k: usize| -> bool {
        let se = errors[i].hypot(errors[k]);
        let gap = (values[k] - values[i]).abs();
        gap <= STABILIZATION_Z * se || gap == 0.0
    };
    let n = values.len();
    let stabilized = n >= 3 && stable_pair(n - 3, n - 2) && stable_pair(n - 2, n - 1) && stable_pair(n - 3, n - 1);
    let stabilized_from = if stabilized {
        // earliest window start from which all later triples are stable
        let mut start = n - 3;
        while start > 0 && stable_pair(start - 1, start) && stable_pair(start - 1, start + 1) {
            start -= 1;
        }
        Some(start)
    } else {
        None
    };
    // decay of successive differences that stand above their noise
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (i, se) in diff_se.iter().enumerate() {
        let gap = (values[i + 1] - values[i]).abs();
        if gap > 2.0 * se && gap > 0.0 {
            lx.push(shells[i].ln());
            ly.push(gap.ln());
        }
    }
    let fit = if lx.len() >= 3 { linear_fit(&lx, &ly) } else { None };
    let censored =
        batch_x.iter().chain(batch_x0).filter(|s| !s.exited()).count() as f64 / (2 * batch_x.len()).max(1) as f64;
    Ok(MartinEstimate {
        base_point: x0.to_vec(),
        point: x.to_vec(),
        direction: direction.to_vec(),
        shells,
        limit: stabilized.then(|| values[n - 1]),
        limit_std_error: stabilized.then(|| errors[n - 1]),
        values,
        std_errors: errors,
        difference_std_errors: diff_se,
        stabilized_from,
        nu: fit.map(|f| -f.slope),
        nu_r_squared: fit.map(|f| f.r_squared),
        censored_fraction: censored,
        verdict: if same || stabilized {
            Verdict::Bounded
        } else {
            Verdict::Inconclusive
        },
    })
}

/// Martin kernel along the dyadic escaping sequence `y_n = 2^n R e` with
/// `R` from the fatness certificate.
#[allow(clippy::too_many_arguments)]
pub fn estimate_martin_limit(
    p: &Process,
    free: &FreeGreen,
    domain_spec: &OpenSetSpec,
    cert: &FatnessCertificate,
    x: &[f64],
    x0: &[f64],
    direction: &[f64],
    last_shell: u32,
    cfg: &PathConfig,
) -> Result<MartinEstimate> {
    if !(domain_spec.contains(x) && domain_spec.contains(x0)) {
        return Err(domain("x and x0 must lie in the domain"));
    }
    let dn = norm(direction);
    for n in 0..=last_shell {
        let t = cert.big_r * 2f64.powi(n as i32);
        let y: Vec<f64> = direction.iter().map(|c| c / dn * t).collect();
        if !domain_spec.contains(&y) {
            return Err(domain(format!("shell point {y:?} lies outside the domain")));
        }
    }
    let bx = simulate_batch(p, domain_spec, x, cfg)?;
    let b0 = if distance(x, x0) == 0.0 {
        bx.clone()
    } else {
        simulate_batch(p, domain_spec, x0, cfg)?
    };
    martin_from_batches(free, &bx, &b0, x, x0, direction, cert.big_r, last_shell)
}
