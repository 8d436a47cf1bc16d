//! Deterministic summation and the small set of statistical tests used by
//! the Monte Carlo checks.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Pairwise summation with a fixed split, so the result depends only on the
/// order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Sample mean and `stdev/√N`.
pub fn mean_se(values: &[f64]) -> MeanSe {
    let n = values.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            std_error: f64::NAN,
            n,
        };
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return MeanSe {
            mean,
            std_error: 0.0,
            n,
        };
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    MeanSe {
        mean,
        std_error: (var / n as f64).sqrt(),
        n,
    }
}

/// Asymptotic Kolmogorov survival function `P(K > x)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test (asymptotic p-value with the usual
/// small-sample correction of the scaled statistic).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival((en + 0.12 + 0.11 / en) * d),
    }
}

/// Sup distance between the empirical CDF of `sample` and `cdf`.
pub fn ks_distance_to(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Standard normal upper tail, two-sided p-value of a z statistic.
pub fn z_two_sided_p(z: f64) -> f64 {
    statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// `mean(a) / mean(b)` on paired samples with its delta-method standard
/// error; `influence[i] = (a_i − R b_i) / mean(b)` so that differences of
/// ratios on the same samples can be assessed too.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioEstimate {
    pub value: f64,
    pub std_error: f64,
    pub denominator: MeanSe,
    pub influence: Vec<f64>,
}

impl RatioEstimate {
    /// Denominator within three standard errors of zero.
    pub fn is_unstable(&self) -> bool {
        self.denominator.mean.abs() <= 3.0 * self.denominator.std_error
    }
}

pub fn ratio_estimate(a: &[f64], b: &[f64]) -> RatioEstimate {
    let ma = mean_se(a);
    let mb = mean_se(b);
    let value = ma.mean / mb.mean;
    let influence: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - value * y) / mb.mean).collect();
    RatioEstimate {
        value,
        std_error: mean_se(&influence).std_error,
        denominator: mb,
        influence,
    }
}

/// Standard error of `Σ c_k R_k` for ratios estimated on the same samples.
pub fn combined_std_error(terms: &[(f64, &[f64])]) -> f64 {
    let n = terms.first().map_or(0, |t| t.1.len());
    let v: Vec<f64> = (0..n)
        .map(|i| terms.iter().map(|(c, infl)| c * infl[i]).sum())
        .collect();
    mean_se(&v).std_error
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_std_error: f64,
    /// Two-sided p-value of `slope = 0`.
    pub slope_p_value: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() || x.iter().chain(y).any(|v| !v.is_finite()) {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let (slope_std_error, slope_p_value) = if n > 2 {
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let p = if se == 0.0 {
            if slope == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            let t = StudentsT::new(0.0, 1.0, nf - 2.0).expect("valid degrees of freedom");
            2.0 * (1.0 - t.cdf((slope / se).abs()))
        };
        (se, p)
    } else {
        (f64::NAN, f64::NAN)
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        slope_std_error,
        slope_p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }

    #[test]
    fn mean_se_small_sample() {
        let m = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // P(K > 1.36) ≈ 0.049, P(K > 1.63) ≈ 0.0098
        assert!((kolmogorov_survival(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_survival(1.63) - 0.0098).abs() < 5e-4);
    }

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let b: Vec<f64> = a.iter().map(|v| v + 50.0).collect();
        assert!(ks_two_sample(&a, &b).p_value < 1e-6);
    }

    #[test]
    fn ratio_estimate_of_proportional_samples_is_exact() {
        let b = [1.0, 2.0, 3.0, 4.0];
        let a: Vec<f64> = b.iter().map(|v| 2.5 * v).collect();
        let r = ratio_estimate(&a, &b);
        assert!((r.value - 2.5).abs() < 1e-15 && r.std_error < 1e-15);
        assert!(!r.is_unstable());
        let s = combined_std_error(&[(1.0, &r.influence), (-1.0, &r.influence)]);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn linear_fit_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }
}
