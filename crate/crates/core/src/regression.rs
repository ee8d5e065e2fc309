//! The two-group linear model `Y_i = α + β T_i + ε_i`, fitted in closed form
//! from arm means, and the Wald (Huber-White) and Rao score tests built on
//! it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{normal_test, Method, TestResult};
use crate::population::{mean, ObservedData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// Intercept, the observed control mean.
    pub alpha_hat: f64,
    /// Slope, equal to the difference in means.
    pub beta_hat: f64,
    pub residuals: Vec<f64>,
    /// Residual variance with divisor N - 2.
    pub sigma2_hat: f64,
    /// Null-restricted MLE of the error variance (β = 0), divisor N.
    pub sigma2_mle: f64,
}

pub fn ols_fit(d: &ObservedData) -> Result<OlsFit> {
    let n = d.n();
    if n <= 2 {
        return Err(Error::Degenerate(format!("residual variance needs at least 3 units, got {n}")));
    }
    let m1 = mean(&d.treated());
    let m0 = mean(&d.control());
    let residuals: Vec<f64> = d.yobs().iter().zip(d.labels()).map(|(y, &t)| y - if t == 1 { m1 } else { m0 }).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let ybar = mean(d.yobs());
    let tss: f64 = d.yobs().iter().map(|y| (y - ybar) * (y - ybar)).sum();
    Ok(OlsFit {
        alpha_hat: m0,
        beta_hat: m1 - m0,
        residuals,
        sigma2_hat: rss / (n as f64 - 2.0),
        sigma2_mle: tss / n as f64,
    })
}

impl OlsFit {
    /// Conventional homoskedastic variance of β̂, `σ̂²(1/N1 + 1/N0)`.
    pub fn ols_variance(&self, d: &ObservedData) -> f64 {
        self.sigma2_hat * (1.0 / d.n1() as f64 + 1.0 / d.n0() as f64)
    }

    /// Huber-White sandwich from residuals:
    /// `Σ ε̂_i² (T_i - T̄)² / {Σ (T_i - T̄)²}²`.
    pub fn hw_variance(&self, d: &ObservedData) -> f64 {
        let tbar = d.n1() as f64 / d.n() as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for (e, &t) in self.residuals.iter().zip(d.labels()) {
            let dt = t as f64 - tbar;
            num += e * e * dt * dt;
            den += dt * dt;
        }
        num / (den * den)
    }
}

/// Wald test of `β = 0` with the Huber-White variance.
pub fn wald_hw_test(fit: &OlsFit, d: &ObservedData) -> Result<TestResult> {
    let v = fit.hw_variance(d);
    if v.is_nan() || v <= 0.0 {
        return Err(Error::Degenerate("Huber-White variance is zero".into()));
    }
    Ok(normal_test(Method::WaldHw, fit.beta_hat, v))
}

/// `V̂_S = (N - 1) s² / (N1 N0)`.
pub fn score_variance(d: &ObservedData) -> Result<f64> {
    let n = d.n() as f64;
    let ybar = mean(d.yobs());
    let ssq = d.yobs().iter().map(|y| (y - ybar) * (y - ybar)).sum::<f64>() / (n - 1.0);
    if ssq == 0.0 {
        return Err(Error::Degenerate("constant outcomes; score test undefined".into()));
    }
    Ok((n - 1.0) * ssq / (d.n1() as f64 * d.n0() as f64))
}

/// Rao score test of `β = 0` under the homoskedastic normal model.
pub fn score_test(d: &ObservedData) -> Result<TestResult> {
    let v = score_variance(d)?;
    let fit = ols_fit(d)?;
    Ok(normal_test(Method::Score, fit.beta_hat, v))
}

/// Score statistic in quadratic form: the squared score for β at the null
/// MLE times the (2,2) entry of the inverse information,
/// `(N1 N0 τ̂ / (N σ̃²))² · N σ̃² / (N1 N0)`.
pub fn score_chi_square(d: &ObservedData) -> Result<f64> {
    let fit = ols_fit(d)?;
    if fit.sigma2_mle == 0.0 {
        return Err(Error::Degenerate("constant outcomes; score test undefined".into()));
    }
    let (n, n1, n0) = (d.n() as f64, d.n1() as f64, d.n0() as f64);
    let score = n1 * n0 * fit.beta_hat / (n * fit.sigma2_mle);
    Ok(score * score * n * fit.sigma2_mle / (n1 * n0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{diff_in_means, variance_report};

    fn d4() -> ObservedData {
        ObservedData::new(vec![1.0, 2.0, 3.0, 4.0], vec![1, 1, 0, 0]).unwrap()
    }

    #[test]
    fn d4_fit() {
        let f = ols_fit(&d4()).unwrap();
        assert_eq!(f.alpha_hat, 3.5);
        assert_eq!(f.beta_hat, -2.0);
        assert!((f.sigma2_hat - 0.5).abs() < 1e-15);
        assert_eq!(f.residuals, vec![-0.5, 0.5, -0.5, 0.5]);
        assert!((f.hw_variance(&d4()) - 0.25).abs() < 1e-15);
        assert!((f.ols_variance(&d4()) - variance_report(&d4()).unwrap().v_ols).abs() < 1e-15);
    }

    #[test]
    fn constant_outcomes() {
        let d = ObservedData::new(vec![2.0; 5], vec![1, 0, 1, 0, 0]).unwrap();
        let f = ols_fit(&d).unwrap();
        assert!(f.residuals.iter().all(|&e| e == 0.0));
        assert_eq!(f.sigma2_hat, 0.0);
        assert!(score_test(&d).is_err());
        assert!(wald_hw_test(&f, &d).is_err());
    }

    #[test]
    fn too_few_units() {
        let d = ObservedData::new(vec![1.0, 2.0], vec![1, 0]).unwrap();
        assert!(ols_fit(&d).is_err());
    }

    #[test]
    fn score_d4() {
        let t = score_test(&d4()).unwrap();
        assert!((score_variance(&d4()).unwrap() - 1.25).abs() < 1e-15);
        assert!((t.statistic - -1.788_854_381_999_831_8).abs() < 1e-12);
        assert!((score_chi_square(&d4()).unwrap() - t.statistic * t.statistic).abs() < 1e-12);
    }

    #[test]
    fn slope_is_difference_in_means() {
        let d = ObservedData::new(vec![0.3, 1.1, -0.4, 2.0, 0.0, 0.8, 1.5], vec![1, 0, 0, 1, 1, 0, 1]).unwrap();
        assert_eq!(ols_fit(&d).unwrap().beta_hat, diff_in_means(&d));
    }

    #[test]
    fn hw_ratio_balanced_fifty() {
        // equal arm variances, N1 = N0 = 50: V̂_HW / V̂(Neyman) = 49/50
        let mut y = Vec::new();
        let mut t = Vec::new();
        for i in 0..50 {
            y.push((i as f64 * 0.37).sin());
            t.push(1);
        }
        for i in 0..50 {
            y.push((i as f64 * 0.37).sin() + 3.0);
            t.push(0);
        }
        let d = ObservedData::new(y, t).unwrap();
        let v = variance_report(&d).unwrap();
        assert!((v.v_hw / v.v_neyman - 49.0 / 50.0).abs() < 1e-12);
    }
}
