//! Point and variance estimators computed from observed data only.

use serde::{Deserialize, Serialize};

use crate::error::{Arm, Error, Result};
use crate::population::{
    check_contrast, contrast_combination, mean, sample_var, FactorialObserved, ObservedData, PairObserved,
    PopulationSummary,
};

/// Difference in observed arm means, `Ȳ1^obs - Ȳ0^obs`.
pub fn diff_in_means(d: &ObservedData) -> f64 {
    let (mut s1, mut s0) = (0.0, 0.0);
    for (y, &t) in d.yobs().iter().zip(d.labels()) {
        if t == 1 {
            s1 += y;
        } else {
            s0 += y;
        }
    }
    s1 / d.n1() as f64 - s0 / d.n0() as f64
}

/// Every two-arm variance estimator side by side, for one observed dataset.
///
/// Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub tau_hat: f64,
    /// `s1²/N1 + s0²/N0`
    pub v_neyman: f64,
    /// Randomization variance of τ̂ under the sharp null, `N s² / (N1 N0)`.
    pub v_fisher: f64,
    /// Homoskedastic OLS variance in exact finite-sample form.
    pub v_ols: f64,
    /// Huber-White sandwich, `s1²(N1-1)/N1² + s0²(N0-1)/N0²`.
    pub v_hw: f64,
    /// Score-test variance `(N-1) s² / (N1 N0)`.
    pub v_score: f64,
    /// `N0/(N1 N) s1² + N1/(N0 N) s0² + 2 s1 s0 / N`
    pub v_improved: f64,
    pub s1sq: f64,
    pub s0sq: f64,
    pub ssq: f64,
}

pub const VARIANCE_REPORT_HEADER: &str = "tau_hat,v_neyman,v_fisher,v_ols,v_hw,v_score,v_improved,s1sq,s0sq,ssq";

pub(crate) fn require_arm_sizes(d: &ObservedData, need: usize) -> Result<()> {
    if d.n1() < need {
        return Err(Error::InsufficientArm { arm: Arm::Treatment, got: d.n1(), need });
    }
    if d.n0() < need {
        return Err(Error::InsufficientArm { arm: Arm::Control, got: d.n0(), need });
    }
    Ok(())
}

pub fn variance_report(d: &ObservedData) -> Result<VarianceReport> {
    require_arm_sizes(d, 2)?;
    let (n, n1, n0) = (d.n() as f64, d.n1() as f64, d.n0() as f64);
    let treated = d.treated();
    let control = d.control();
    let s1sq = sample_var(&treated);
    let s0sq = sample_var(&control);
    let ssq = sample_var(d.yobs());
    let tau_hat = mean(&treated) - mean(&control);

    let v_neyman = s1sq / n1 + s0sq / n0;
    let v_fisher = n * ssq / (n1 * n0);
    let v_ols = n * (n1 - 1.0) * s1sq / ((n - 2.0) * n1 * n0) + n * (n0 - 1.0) * s0sq / ((n - 2.0) * n1 * n0);
    let v_hw = s1sq * (n1 - 1.0) / (n1 * n1) + s0sq * (n0 - 1.0) / (n0 * n0);
    let v_score = (n - 1.0) * ssq / (n1 * n0);
    let v_improved = n0 / (n1 * n) * s1sq + n1 / (n0 * n) * s0sq + 2.0 * (s1sq * s0sq).sqrt() / n;

    Ok(VarianceReport { tau_hat, v_neyman, v_fisher, v_ols, v_hw, v_score, v_improved, s1sq, s0sq, ssq })
}

/// Leading-order value of `V̂(Fisher) - V̂(Neyman)` for a population split
/// into arms of size `n1`, `n0`:
/// `(1/N0 - 1/N1)(S1² - S0²) + (Ȳ1 - Ȳ0)²/N`.
pub fn crd_gap_formula(summary: &PopulationSummary, n1: usize, n0: usize) -> f64 {
    let (n1, n0) = (n1 as f64, n0 as f64);
    (1.0 / n0 - 1.0 / n1) * (summary.s1sq - summary.s0sq) + (summary.ybar1 - summary.ybar0).powi(2) / (n1 + n0)
}

/// Proportion-based variances for 0/1 outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryReport {
    pub p1_hat: f64,
    pub p0_hat: f64,
    pub p_hat: f64,
    /// `p̂1(1-p̂1)/N1 + p̂0(1-p̂0)/N0`; the Neyman-side variance.
    pub unpooled: f64,
    /// `p̂(1-p̂)(1/N1 + 1/N0)`; the Fisher-side variance.
    pub pooled: f64,
    /// Set when an arm is all zeros or all ones.
    pub constant_arm: bool,
}

pub fn binary_report(d: &ObservedData) -> Result<BinaryReport> {
    if let Some((index, &value)) = d.yobs().iter().enumerate().find(|(_, &y)| y != 0.0 && y != 1.0) {
        return Err(Error::NonBinary { index, value });
    }
    let (n1, n0) = (d.n1() as f64, d.n0() as f64);
    let p1_hat = mean(&d.treated());
    let p0_hat = mean(&d.control());
    let p_hat = mean(d.yobs());
    let constant_arm = [p1_hat, p0_hat].iter().any(|&p| p == 0.0 || p == 1.0);
    Ok(BinaryReport {
        p1_hat,
        p0_hat,
        p_hat,
        unpooled: p1_hat * (1.0 - p1_hat) / n1 + p0_hat * (1.0 - p0_hat) / n0,
        pooled: p_hat * (1.0 - p_hat) * (1.0 / n1 + 1.0 / n0),
        constant_arm,
    })
}

/// Leading-order pooled-minus-unpooled gap at population proportions
/// `(p1, p0)`.
pub fn binary_gap(p1: f64, p0: f64, n1: usize, n0: usize) -> f64 {
    let (n1, n0) = (n1 as f64, n0 as f64);
    (1.0 / n0 - 1.0 / n1) * (p1 * (1.0 - p1) - p0 * (1.0 - p0)) + (p1 - p0).powi(2) / (n1 + n0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEffectReport {
    pub tau_hat: f64,
    pub per_pair: Vec<f64>,
    /// `Σ(τ̂_i - τ̂)² / (N(N-1))`
    pub v_neyman: f64,
    /// `Σ τ̂_i² / N²`
    pub v_fisher: f64,
}

pub fn pair_report(obs: &PairObserved) -> Result<PairEffectReport> {
    let per_pair = obs.pair_differences();
    pair_report_from_differences(per_pair)
}

/// Same as [`pair_report`] but starting from the treated-minus-control
/// differences directly.
pub fn pair_report_from_differences(per_pair: Vec<f64>) -> Result<PairEffectReport> {
    let n = per_pair.len();
    if n < 2 {
        return Err(Error::DegeneratePopulation(n));
    }
    let nf = n as f64;
    let tau_hat = mean(&per_pair);
    let v_neyman = per_pair.iter().map(|t| (t - tau_hat).powi(2)).sum::<f64>() / (nf * (nf - 1.0));
    let v_fisher = per_pair.iter().map(|t| t * t).sum::<f64>() / (nf * nf);
    Ok(PairEffectReport { tau_hat, per_pair, v_neyman, v_fisher })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialEffectReport {
    pub k: usize,
    pub r: usize,
    pub contrast: Vec<i8>,
    pub tau1_hat: f64,
    /// `Σ_z s²(z) / (2^{2(K-1)} r)`
    pub v1_neyman: f64,
    /// `J s² / (2^{2(K-1)} r)`, s² over all N observed outcomes.
    pub v1_fisher: f64,
    pub cell_means: Vec<f64>,
    pub cell_vars: Vec<f64>,
}

pub fn factorial_report(obs: &FactorialObserved, contrast: &[i8]) -> Result<FactorialEffectReport> {
    let j = obs.n_cells();
    check_contrast(contrast, j)?;
    if obs.r < 2 {
        return Err(Error::InvalidParameter(format!("need r >= 2, got {}", obs.r)));
    }
    let groups = obs.by_cell();
    let cell_means: Vec<f64> = groups.iter().map(|g| mean(g)).collect();
    let cell_vars: Vec<f64> = groups.iter().map(|g| sample_var(g)).collect();
    let scale = (1u64 << (2 * (obs.k - 1))) as f64 * obs.r as f64;
    Ok(FactorialEffectReport {
        k: obs.k,
        r: obs.r,
        contrast: contrast.to_vec(),
        tau1_hat: contrast_combination(contrast, &cell_means, obs.k),
        v1_neyman: cell_vars.iter().sum::<f64>() / scale,
        v1_fisher: j as f64 * sample_var(&obs.yobs) / scale,
        cell_means,
        cell_vars,
    })
}

/// Leading-order `V̂1(Fisher) - V̂1(Neyman)` for population cell means:
/// `Σ_z Σ_z' (Ȳ(z) - Ȳ(z'))² / (2^{3K-1} r)`.
pub fn factorial_gap_formula(cell_means: &[f64], k: usize, r: usize) -> Result<f64> {
    let j = 1usize << k;
    if cell_means.len() != j {
        return Err(Error::LengthMismatch { expected: j, got: cell_means.len() });
    }
    let mut total = 0.0;
    for a in cell_means {
        for b in cell_means {
            total += (a - b) * (a - b);
        }
    }
    Ok(total / ((1u64 << (3 * k - 1)) as f64 * r as f64))
}
