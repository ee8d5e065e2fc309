//! Independent oracles shared by the integration and acceptance targets.
//! Everything here is computed by brute force from definitions.
#![allow(dead_code)]

use rand::Rng;
use randinf::design::enumerate_crd;
use randinf::estimators::variance_report;
use randinf::inference::{frt_exact, Statistic};
use randinf::population::{observe, ObservedData, PotentialTable};
use randinf::rng;

pub const CAP: u128 = 1 << 20;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn var_n(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

pub fn var_n1(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Random population of `n` units from stream `(seed, 0)`.
pub fn random_population(n: usize, seed: u64, constant_effect: bool) -> PotentialTable {
    let mut r = rng::stream(seed, 0);
    let y0: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
    let y1: Vec<f64> = if constant_effect {
        let tau = r.gen_range(-1.0..1.0);
        y0.iter().map(|y| y + tau).collect()
    } else {
        y0.iter().map(|y| y + r.gen_range(-1.5..2.5) * y + r.gen_range(-1.0..1.0)).collect()
    };
    PotentialTable::new(y1, y0).unwrap()
}

/// Moments of the randomization distribution by enumerating every
/// assignment.
pub struct Exhaustive {
    pub count: usize,
    pub mean_tau_hat: f64,
    pub var_tau_hat: f64,
    pub mean_v_neyman: f64,
    pub mean_v_fisher: f64,
}

pub fn exhaustive(pop: &PotentialTable, n1: usize) -> Exhaustive {
    let mut taus = Vec::new();
    let mut vn = Vec::new();
    let mut vf = Vec::new();
    for a in enumerate_crd(pop.n(), n1, CAP).unwrap() {
        let v = variance_report(&observe(pop, &a).unwrap()).unwrap();
        taus.push(v.tau_hat);
        vn.push(v.v_neyman);
        vf.push(v.v_fisher);
    }
    Exhaustive {
        count: taus.len(),
        mean_tau_hat: mean(&taus),
        var_tau_hat: var_n(&taus),
        mean_v_neyman: mean(&vn),
        mean_v_fisher: mean(&vf),
    }
}

/// Lemma-1 moments in exact integer arithmetic: returns an error naming the
/// first moment that differs.
pub fn lemma1_exact(n: usize, n1: usize) -> Result<(), String> {
    let c = binomial(n as u64, n1 as u64) as i128;
    let mut s = vec![0i128; n];
    let mut s2 = vec![vec![0i128; n]; n];
    for a in enumerate_crd(n, n1, CAP).unwrap() {
        let t = a.labels();
        for i in 0..n {
            s[i] += t[i] as i128;
            for j in 0..n {
                s2[i][j] += (t[i] * t[j]) as i128;
            }
        }
    }
    let (nn, n1i, n0i) = (n as i128, n1 as i128, (n - n1) as i128);
    for i in 0..n {
        // E T_i = n1/n
        if s[i] * nn != n1i * c {
            return Err(format!("mean of T_{i}: {}/{} != {n1}/{n}", s[i], c));
        }
        // var T_i = n1 n0 / n^2
        if (c * s2[i][i] - s[i] * s[i]) * nn * nn != n1i * n0i * c * c {
            return Err(format!("variance of T_{i}"));
        }
        for j in 0..n {
            // cov(T_i, T_j) = -n1 n0 / {n^2 (n - 1)}
            if i != j && (c * s2[i][j] - s[i] * s[j]) * nn * nn * (nn - 1) != -n1i * n0i * c * c {
                return Err(format!("covariance of T_{i}, T_{j}"));
            }
        }
    }
    Ok(())
}

/// Exact FRT size under the sharp null for outcomes `y`: for each level on
/// the achievable grid, the fraction of assignments rejected. Returns the
/// worst `(alpha, size)` where size exceeds alpha, if any.
pub fn exact_size_violation(y: &[f64], n1: usize, statistic: Statistic) -> Option<(f64, f64)> {
    let pop = PotentialTable::sharp_null(y.to_vec()).unwrap();
    let mut ps = Vec::new();
    for a in enumerate_crd(y.len(), n1, CAP).unwrap() {
        let d: ObservedData = observe(&pop, &a).unwrap();
        ps.push(frt_exact(&d, statistic, CAP).unwrap().p_value);
    }
    let total = ps.len() as f64;
    let mut grid = ps.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    // Also probe levels between grid points and the standard levels.
    grid.extend([0.01, 0.05, 0.10]);
    for alpha in grid {
        let size = ps.iter().filter(|&&p| p <= alpha).count() as f64 / total;
        if size > alpha * (1.0 + 1e-12) {
            return Some((alpha, size));
        }
    }
    None
}
