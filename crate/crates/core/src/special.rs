//! Special functions: normal CDF and quantile, unit-ball volumes, Gaussian ball masses.

use std::f64::consts::{PI, SQRT_2};

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::quad;

/// Standard normal CDF Φ.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Inverse of Φ on (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// β_ℓ = Vol_ℓ(B^ℓ) = π^{ℓ/2} / Γ(ℓ/2 + 1).
pub fn unit_ball_volume(ell: usize) -> f64 {
    if ell == 0 {
        return 1.0;
    }
    let h = ell as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Surface area of S^{n-1}, n β_n.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// γ_ℓ(r B^ℓ) by radial quadrature of t^{ℓ-1} e^{-t²/2}.
pub fn gaussian_ball_measure(ell: usize, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if ell == 0 {
        return 1.0;
    }
    let k = ell as f64;
    // normalizer ∫₀^∞ t^{ℓ-1} e^{-t²/2} dt = 2^{ℓ/2-1} Γ(ℓ/2)
    let log_norm = (k / 2.0 - 1.0) * 2f64.ln() + ln_gamma(k / 2.0);
    let integrand = |t: f64| {
        if t <= 0.0 {
            if ell == 1 {
                1.0
            } else {
                0.0
            }
        } else {
            ((k - 1.0) * t.ln() - 0.5 * t * t - log_norm).exp()
        }
    };
    let upper = r.min(40.0);
    let res = quad::integrate(integrand, 0.0, upper, 1e-12, 1e-15).map(|q| q.value);
    res.unwrap_or(f64::NAN).clamp(0.0, 1.0)
}
