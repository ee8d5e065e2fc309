//! Standard-normal distribution helpers.

use statrs::function::erf::erfc_inv;

/// Φ(x), computed through `erfc` so the lower tail keeps full relative
/// precision.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Φ⁻¹(p) for `p` in (0, 1).
pub fn quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal quantile needs p in (0, 1), got {p}");
    let mut x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return bisect_quantile(p);
    }
    // Newton polish against the accurate cdf
    for _ in 0..3 {
        let f = density(x);
        if f <= 0.0 {
            break;
        }
        x -= (cdf(x) - p) / f;
    }
    if x.is_finite() && (cdf(x) - p).abs() <= 1e-13 * p.min(1.0 - p).max(1e-3) {
        x
    } else {
        bisect_quantile(p)
    }
}

fn bisect_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sided p-value 2Φ(−|z|).
pub fn two_sided_p(z: f64) -> f64 {
    (2.0 * cdf(-z.abs())).min(1.0)
}
