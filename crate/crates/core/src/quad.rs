//! Numerical integration primitives shared by the kernel, generator and
//! experiment code: globally adaptive Gauss–Kronrod, fixed Gauss–Legendre
//! rules, and Levin-type acceleration of partial sums.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// 21-point Kronrod abscissae (positive half, descending, last is the centre).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

/// 10-point Gauss weights matching `XGK[1], XGK[3], .., XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

impl Quad {
    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            self.abs_error
        } else {
            self.abs_error / self.value.abs()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 0.0,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn rel(rel: f64) -> Self {
        Self { rel, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Globally adaptive 21-point Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Non-finite integrand values are an error: callers are expected to map
/// singular endpoints away with a substitution first.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Quad> {
    if a == b {
        return Ok(Quad {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let (v, e) = kronrod21(&mut f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut total_err = e;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Quadrature {
                what: "non-finite integrand".into(),
                estimate: total,
                error: total_err,
                evaluations,
            });
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                what: format!("subdivision limit {} reached", tol.max_intervals),
                estimate: total,
                error: total_err,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval exhausted at machine resolution; accept what we have
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod21(&mut f, worst.a, mid);
        let (v2, e2) = kronrod21(&mut f, mid, worst.b);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed accumulated cancellation from the running updates
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let abs_error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(Quad {
        value,
        abs_error,
        evaluations,
    })
}

/// Integral of `f` over `[a, ∞)` for integrands with at least exponential
/// decay: adaptive pieces of length `piece` are appended until the newest
/// piece falls below `1e-14` of the running total.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(mut f: F, a: f64, piece: f64, tol: Tolerance) -> Result<Quad> {
    let mut total = integrate(&mut f, a, a + piece, tol)?;
    let mut lo = a + piece;
    for _ in 0..200 {
        let q = integrate(&mut f, lo, lo + piece, tol)?;
        total.value += q.value;
        total.abs_error += q.abs_error;
        total.evaluations += q.evaluations;
        lo += piece;
        if q.value.abs() <= 1e-14 * total.value.abs() || total.value == 0.0 && q.value == 0.0 {
            return Ok(total);
        }
    }
    Err(Error::Quadrature {
        what: "semi-infinite tail did not decay".into(),
        estimate: total.value,
        error: total.abs_error,
        evaluations: total.evaluations,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    x.iter().zip(&w).map(|(&xi, &wi)| (c + h * xi, h * wi)).collect()
}

/// Four-point Lagrange interpolation of `values` sampled at `x0 + k·step`,
/// extrapolating with the end stencils outside the grid.
pub fn interp_uniform(x0: f64, step: f64, values: &[f64], x: f64) -> f64 {
    let n = values.len();
    let u = (x - x0) / step;
    if n < 4 {
        let i = (u.floor().max(0.0) as usize).min(n.saturating_sub(2));
        let w = u - i as f64;
        return values[i] + w * (values[(i + 1).min(n - 1)] - values[i]);
    }
    let i = (u.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let t = u - i as f64;
    let (a, b, c, d) = (values[i], values[i + 1], values[i + 2], values[i + 3]);
    -a * (t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0 + b * t * (t - 2.0) * (t - 3.0) / 2.0
        - c * t * (t - 1.0) * (t - 3.0) / 2.0
        + d * t * (t - 1.0) * (t - 2.0) / 6.0
}

/// Levin u-transform of a sequence of partial sums.
///
/// Returns the accelerated limit estimate using the last `order + 1` partial
/// sums. The remainder model is `omega_n = (n + 1) * a_n` with
/// `a_n = s_n - s_{n-1}`.
pub fn levin_u(partial: &[f64], order: usize) -> Option<f64> {
    let n = partial.len();
    if n < order + 2 {
        return None;
    }
    let start = n - order - 1;
    let beta = 1.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..=order {
        let idx = start + j;
        let a = partial[idx] - partial[idx - 1];
        if a == 0.0 {
            return Some(partial[idx]);
        }
        let omega = (beta + idx as f64) * a;
        let binom = binomial(order, j);
        let ratio = ((beta + (start + j) as f64) / (beta + (start + order) as f64)).powi(order as i32 - 1);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign * binom * ratio / omega;
        num += c * partial[idx];
        den += c;
    }
    let v = num / den;
    v.is_finite().then_some(v)
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r *= (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Sum of an oscillatory tail given as per-interval contributions, with
/// Levin acceleration. Returns (limit, error estimate from the spread of the
/// last two transforms).
pub fn accelerate(partial: &[f64]) -> Option<(f64, f64)> {
    let order = (partial.len().saturating_sub(2)).min(14);
    let a = levin_u(partial, order)?;
    let b = levin_u(
        &partial[..partial.len() - 1],
        order.min(partial.len().saturating_sub(3)),
    )?;
    Some((a, (a - b).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_interpolation_is_exact_on_cubics() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let v: Vec<f64> = (0..10).map(|k| f(0.5 + 0.25 * k as f64)).collect();
        for x in [0.5, 0.61, 1.3, 2.74, 2.75, 3.1] {
            assert!((interp_uniform(0.5, 0.25, &v, x) - f(x)).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn kronrod_polynomial_exact() {
        let q = integrate(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0, Tolerance::default()).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((q.value - exact).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let q = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::rel(1e-12)).unwrap();
        let exact = 2.0 / 1e-4f64.sqrt() * (1.0 / 1e-4f64.sqrt()).atan();
        assert!((q.value / exact - 1.0).abs() < 1e-10, "{} vs {}", q.value, exact);
    }

    #[test]
    fn gauss_legendre_integrates_degree_2n_minus_1() {
        for n in [1, 2, 5, 16, 33] {
            let s: f64 = gauss_legendre_on(n, 0.0, 1.0)
                .iter()
                .map(|(x, w)| w * x.powi(2 * n as i32 - 1))
                .sum();
            assert!((s - 1.0 / (2 * n) as f64).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn levin_sums_alternating_harmonic() {
        let mut s = 0.0;
        let partial: Vec<f64> = (1..=20)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        let (v, _) = accelerate(&partial).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn levin_abel_sums_growing_oscillation() {
        // int_0^inf sqrt(x) sin(x) dx = Gamma(3/2) sin(3 pi / 4) in the Abel sense
        let mut partial = Vec::new();
        let mut s = 0.0;
        for k in 0..24 {
            let a = k as f64 * std::f64::consts::PI;
            let b = a + std::f64::consts::PI;
            s += integrate(|x| x.sqrt() * x.sin(), a, b, Tolerance::rel(1e-13))
                .unwrap()
                .value;
            partial.push(s);
        }
        let (v, _) = accelerate(&partial).unwrap();
        let exact = 0.886_226_925_452_758 * (0.75 * std::f64::consts::PI).sin();
        assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
    }
}
