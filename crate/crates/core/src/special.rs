//! Special functions not covered by `statrs`: Bessel functions of the first
//! kind for the orders that radial Fourier transforms in integer dimension
//! produce, and the spherical mean of a plane wave.

use std::f64::consts::PI;

pub use statrs::function::beta::beta_reg;
pub use statrs::function::gamma::{gamma, ln_gamma};

/// Series of `J_nu(z) / (z/2)^nu` (without the power prefactor).
fn bessel_series_reduced(nu: f64, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0 / gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= -q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn bessel_asymptotic(nu: f64, z: f64) -> f64 {
    // Hankel expansion; terminates for half-integer orders.
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * z);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        if term == 0.0 {
            break;
        }
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let chi = z - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Bessel function of the first kind `J_nu(z)` for `nu >= -1/2` and `z >= 0`.
pub fn bessel_j(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if (nu + 0.5).abs() < 1e-15 {
        return (2.0 / (PI * z)).sqrt() * z.cos();
    }
    if (nu - 0.5).abs() < 1e-15 {
        return (2.0 / (PI * z)).sqrt() * z.sin();
    }
    if z <= 12.0 + nu {
        (0.5 * z).powf(nu) * bessel_series_reduced(nu, z)
    } else {
        bessel_asymptotic(nu, z)
    }
}

/// Mean of `cos(xi . omega * rho)` over the unit sphere in `R^d`, as a
/// function of `z = |xi| rho`: `Gamma(d/2) (2/z)^nu J_nu(z)` with
/// `nu = d/2 - 1`.
pub fn sphere_mean_cos(d: usize, z: f64) -> f64 {
    1.0 + sphere_mean_cos_minus_one(d, z)
}

/// `sphere_mean_cos(d, z) - 1`, free of cancellation for small `z`.
pub fn sphere_mean_cos_minus_one(d: usize, z: f64) -> f64 {
    let nu = 0.5 * d as f64 - 1.0;
    if z < 2.0 {
        let q = 0.25 * z * z;
        let g = gamma(nu + 1.0);
        let mut term = 1.0 / g;
        let mut sum = 0.0;
        for k in 1..100 {
            let kf = k as f64;
            term *= -q / (kf * (kf + nu));
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        return g * sum;
    }
    match d {
        1 => z.cos() - 1.0,
        3 => z.sin() / z - 1.0,
        _ => gamma(nu + 1.0) * (2.0 / z).powf(nu) * bessel_j(nu, z) - 1.0,
    }
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(0.5 * d as f64) / gamma(0.5 * d as f64)
}

/// Volume of the unit ball in `R^d`.
pub fn ball_volume(d: usize) -> f64 {
    sphere_area(d) / d as f64
}

/// Approximate location of the `k`-th positive zero of `J_nu` (McMahon).
/// Used only as a partition point for oscillatory integrals.
pub fn bessel_zero_approx(nu: f64, k: usize) -> f64 {
    let beta = (k as f64 + 0.5 * nu - 0.25) * PI;
    let mu = 4.0 * nu * nu;
    beta - (mu - 1.0) / (8.0 * beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integer_orders_match_closed_forms() {
        for &z in &[0.1, 1.0, 5.0, 13.0, 40.0] {
            let j32 = (2.0 / (PI * z)).sqrt() * (z.sin() / z - z.cos());
            assert!((bessel_j(1.5, z) - j32).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn integer_orders_match_reference_values() {
        // J0(1), J1(2.5), J0(20), J1(15) (Abramowitz & Stegun tables)
        assert!((bessel_j(0.0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-13);
        assert!((bessel_j(1.0, 2.5) - 0.497_094_102_464_274_4).abs() < 1e-13);
        assert!((bessel_j(0.0, 20.0) - 0.167_024_664_340_583_1).abs() < 1e-11);
        assert!((bessel_j(1.0, 15.0) - 0.205_104_038_613_522_8).abs() < 1e-11);
    }

    #[test]
    fn series_and_asymptotic_agree_at_switch() {
        for nu in [0.0f64, 1.0, 2.0] {
            let z = 12.0 + nu;
            let s = (0.5 * z).powf(nu) * bessel_series_reduced(nu, z);
            let a = bessel_asymptotic(nu, z);
            assert!((s - a).abs() < 1e-9, "nu={nu}: {s} vs {a}");
        }
    }

    #[test]
    fn sphere_mean_is_continuous_across_branches() {
        for d in 1..=5 {
            let lo = sphere_mean_cos_minus_one(d, 2.0 - 1e-12);
            let hi = sphere_mean_cos_minus_one(d, 2.0 + 1e-12);
            assert!((lo - hi).abs() < 1e-10, "d={d}: {lo} {hi}");
        }
        assert!((sphere_mean_cos(3, 1.0) - 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn sphere_area_values() {
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-12);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-12);
    }
}
