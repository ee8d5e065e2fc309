//! Hypothesis tests and interval estimators.
//!
//! Two-sided extremeness everywhere is `|stat(T')| >= |stat_obs|`, ties
//! counted as extreme. Permuted and observed statistics go through the same
//! code path (a mask-weighted sum in unit order), so an assignment always
//! ties with itself and comparisons need no epsilon.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::Combinations;
use crate::design::{crd_count, FactorialSampler, SubsetSampler, DEFAULT_ENUMERATION_CAP, MAX_ENUMERATED_PAIRS};
use crate::error::{Error, Result};
use crate::estimators::{diff_in_means, require_arm_sizes, variance_report, FactorialEffectReport, PairEffectReport};
use crate::normal;
use crate::population::{sample_var, FactorialObserved, ObservedData};
use crate::rng;

/// Levels at which every [`TestResult`] records a decision.
pub const STANDARD_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_DRAWS: usize = 100_000;

/// Reject when `p <= alpha`.
pub fn rejects(p_value: f64, alpha: f64) -> bool {
    p_value <= alpha
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Neyman,
    FisherNormal,
    FrtMc,
    FrtExact,
    FrtVarRatio,
    PairNeyman,
    PairFrt,
    FactorialNeyman,
    FactorialFrt,
    WaldHw,
    Score,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Neyman => "neyman",
            Method::FisherNormal => "fisher_normal",
            Method::FrtMc => "frt_mc",
            Method::FrtExact => "frt_exact",
            Method::FrtVarRatio => "frt_var_ratio",
            Method::PairNeyman => "pair_neyman",
            Method::PairFrt => "pair_frt",
            Method::FactorialNeyman => "factorial_neyman",
            Method::FactorialFrt => "factorial_frt",
            Method::WaldHw => "wald_hw",
            Method::Score => "score",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Test statistic for the two-arm randomization test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    #[default]
    DiffInMeans,
    /// `s1²/s0²`, extremeness `|ln(ratio)|`.
    VarianceRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: Method,
    pub statistic: f64,
    pub p_value: f64,
    /// Monte Carlo draws; 0 for exact and asymptotic tests.
    pub m_draws: u64,
    /// Number of assignments enumerated by an exact test, else 0. The exact
    /// p-value is `extreme_count / enumerated`.
    pub enumerated: u64,
    pub extreme_count: u64,
    pub reject_at: Vec<(f64, bool)>,
    /// Set when the test could not be carried out in the usual way, such as
    /// zero variance or constant outcomes.
    pub degenerate: bool,
}

impl TestResult {
    fn new(method: Method, statistic: f64, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            method,
            statistic,
            p_value,
            m_draws: 0,
            enumerated: 0,
            extreme_count: 0,
            reject_at: STANDARD_LEVELS.iter().map(|&a| (a, rejects(p_value, a))).collect(),
            degenerate: false,
        }
    }

    fn flagged(mut self) -> Self {
        self.degenerate = true;
        self
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        rejects(self.p_value, alpha)
    }
}

pub const TEST_RESULT_HEADER: &str = "method,statistic,p_value,m_draws";

/// Two-sided normal test of `estimate` with variance `var`. Zero variance
/// is flagged: p is 0 for a nonzero estimate and 1 otherwise.
pub fn normal_test(method: Method, estimate: f64, var: f64) -> TestResult {
    if var > 0.0 {
        let z = estimate / var.sqrt();
        TestResult::new(method, z, normal::two_sided_p(z))
    } else if estimate == 0.0 {
        TestResult::new(method, 0.0, 1.0).flagged()
    } else {
        TestResult::new(method, estimate.signum() * f64::INFINITY, 0.0).flagged()
    }
}

/// Wald test of Neyman's null `τ = 0` with the conservative variance.
pub fn neyman_test(d: &ObservedData) -> Result<TestResult> {
    let v = variance_report(d)?;
    Ok(normal_test(Method::Neyman, v.tau_hat, v.v_neyman))
}

/// Normal approximation to the FRT: τ̂ against the sharp-null variance.
pub fn fisher_normal_test(d: &ObservedData) -> Result<TestResult> {
    let v = variance_report(d)?;
    Ok(normal_test(Method::FisherNormal, v.tau_hat, v.v_fisher))
}

/// `s1²/s0²`.
pub fn variance_ratio_statistic(d: &ObservedData) -> Result<f64> {
    require_arm_sizes(d, 2)?;
    let s0sq = sample_var(&d.control());
    if s0sq == 0.0 {
        return Err(Error::Degenerate("control arm has zero variance; variance ratio undefined".into()));
    }
    Ok(sample_var(&d.treated()) / s0sq)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrtOptions {
    /// Report `(1 + count)/(1 + M)` instead of `count/M`.
    pub add_one: bool,
}

/// Randomization distribution of a two-arm statistic with the observed
/// outcomes held fixed.
///
/// Draws and enumerates the smaller arm. `mask` marks that arm's members.
pub struct CrdRandomization {
    y: Vec<f64>,
    yc: Vec<f64>,
    yc2: Vec<f64>,
    n1: usize,
    n0: usize,
    /// true: the drawn arm is the treatment arm
    draw_treated: bool,
    total: f64,
    total_c: f64,
    total_c2: f64,
    statistic: Statistic,
}

impl CrdRandomization {
    pub fn new(d: &ObservedData, statistic: Statistic) -> Result<Self> {
        if statistic == Statistic::VarianceRatio {
            variance_ratio_statistic(d)?;
        }
        let y = d.yobs().to_vec();
        let m = y.iter().sum::<f64>() / y.len() as f64;
        let yc: Vec<f64> = y.iter().map(|v| v - m).collect();
        let yc2: Vec<f64> = yc.iter().map(|v| v * v).collect();
        Ok(Self {
            total: y.iter().sum(),
            total_c: yc.iter().sum(),
            total_c2: yc2.iter().sum(),
            y,
            yc,
            yc2,
            n1: d.n1(),
            n0: d.n0(),
            draw_treated: d.n1() <= d.n0(),
            statistic,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Size of the arm that gets drawn.
    pub fn k(&self) -> usize {
        if self.draw_treated {
            self.n1
        } else {
            self.n0
        }
    }

    pub fn observed_mask(&self, d: &ObservedData) -> Vec<f64> {
        let label = self.draw_treated as u8;
        d.labels().iter().map(|&t| (t == label) as u8 as f64).collect()
    }

    fn split<T: Copy + std::ops::Sub<Output = T>>(&self, drawn: T, total: T) -> (T, T) {
        if self.draw_treated {
            (drawn, total - drawn)
        } else {
            (total - drawn, drawn)
        }
    }

    /// Signed statistic for the assignment marked by `mask`.
    pub fn statistic(&self, mask: &[f64]) -> f64 {
        let (n1, n0) = (self.n1 as f64, self.n0 as f64);
        match self.statistic {
            Statistic::DiffInMeans => {
                let s: f64 = self.y.iter().zip(mask).map(|(y, w)| y * w).sum();
                let (s1, s0) = self.split(s, self.total);
                s1 / n1 - s0 / n0
            }
            Statistic::VarianceRatio => {
                let (mut s, mut q) = (0.0, 0.0);
                for ((y, y2), w) in self.yc.iter().zip(&self.yc2).zip(mask) {
                    s += y * w;
                    q += y2 * w;
                }
                let (s1, s0) = self.split(s, self.total_c);
                let (q1, q0) = self.split(q, self.total_c2);
                let v1 = ((q1 - s1 * s1 / n1) / (n1 - 1.0)).max(0.0);
                let v0 = ((q0 - s0 * s0 / n0) / (n0 - 1.0)).max(0.0);
                v1 / v0
            }
        }
    }

    /// Two-sided extremeness of a statistic value.
    pub fn extremeness(&self, stat: f64) -> f64 {
        let e = match self.statistic {
            Statistic::DiffInMeans => stat.abs(),
            Statistic::VarianceRatio => stat.ln().abs(),
        };
        if e.is_nan() {
            0.0
        } else {
            e
        }
    }

    /// Count of `m` random assignments at least as extreme as `threshold`.
    pub fn count_extreme_mc<R: Rng + ?Sized>(&self, threshold: f64, m: usize, rng: &mut R) -> u64 {
        let mut sampler = SubsetSampler::new(self.n(), self.k());
        let mut mask = vec![0.0; self.n()];
        let mut count = 0u64;
        for _ in 0..m {
            let idx = sampler.sample(rng);
            for &i in idx {
                mask[i as usize] = 1.0;
            }
            if self.extremeness(self.statistic(&mask)) >= threshold {
                count += 1;
            }
            for &i in idx {
                mask[i as usize] = 0.0;
            }
        }
        count
    }

    /// Count over the lexicographic rank range `[start, start + len)` of the
    /// drawn arm's subsets.
    pub fn count_extreme_range(&self, threshold: f64, start: u128, len: u128) -> u64 {
        let mut mask = vec![0.0; self.n()];
        let mut count = 0u64;
        Combinations::starting_at(self.n(), self.k(), start).take_count(len).for_each_ref(|set| {
            for &i in set {
                mask[i] = 1.0;
            }
            if self.extremeness(self.statistic(&mask)) >= threshold {
                count += 1;
            }
            for &i in set {
                mask[i] = 0.0;
            }
        });
        count
    }
}

fn frt_method(statistic: Statistic, exact: bool) -> Method {
    match (statistic, exact) {
        (Statistic::VarianceRatio, _) => Method::FrtVarRatio,
        (Statistic::DiffInMeans, true) => Method::FrtExact,
        (Statistic::DiffInMeans, false) => Method::FrtMc,
    }
}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|&x| x == xs[0])
}

/// Monte Carlo FRT with `m` fresh assignments from `rng`.
pub fn frt_monte_carlo<R: Rng + ?Sized>(
    d: &ObservedData,
    statistic: Statistic,
    m: usize,
    rng: &mut R,
    opts: FrtOptions,
) -> Result<TestResult> {
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one Monte Carlo draw".into()));
    }
    let method = frt_method(statistic, false);
    if is_constant(d.yobs()) {
        let mut out = TestResult::new(method, 0.0, 1.0).flagged();
        out.m_draws = m as u64;
        return Ok(out);
    }
    let engine = CrdRandomization::new(d, statistic)?;
    let observed = engine.statistic(&engine.observed_mask(d));
    let count = engine.count_extreme_mc(engine.extremeness(observed), m, rng);
    Ok(mc_result(method, observed, count, m, opts))
}

/// Monte Carlo FRT whose draws are split into fixed-size chunks, each on its
/// own stream `(seed, chunk)`, and run in parallel. The result depends only
/// on `seed`, never on the number of worker threads.
pub fn frt_monte_carlo_seeded(
    d: &ObservedData,
    statistic: Statistic,
    m: usize,
    seed: u64,
    opts: FrtOptions,
) -> Result<TestResult> {
    const CHUNK: usize = 8192;
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one Monte Carlo draw".into()));
    }
    let method = frt_method(statistic, false);
    if is_constant(d.yobs()) {
        let mut out = TestResult::new(method, 0.0, 1.0).flagged();
        out.m_draws = m as u64;
        return Ok(out);
    }
    let engine = CrdRandomization::new(d, statistic)?;
    let observed = engine.statistic(&engine.observed_mask(d));
    let threshold = engine.extremeness(observed);
    let chunks = m.div_ceil(CHUNK);
    let count: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(m - c * CHUNK);
            engine.count_extreme_mc(threshold, len, &mut rng::stream(seed, c as u64))
        })
        .sum();
    Ok(mc_result(method, observed, count, m, opts))
}

fn mc_result(method: Method, observed: f64, count: u64, m: usize, opts: FrtOptions) -> TestResult {
    let p = if opts.add_one { (1 + count) as f64 / (1 + m) as f64 } else { count as f64 / m as f64 };
    let mut out = TestResult::new(method, observed, p);
    out.m_draws = m as u64;
    out.extreme_count = count;
    out
}

/// Exact FRT over every assignment, refused above `cap` assignments.
pub fn frt_exact(d: &ObservedData, statistic: Statistic, cap: u128) -> Result<TestResult> {
    const CHUNK: u128 = 1 << 14;
    let total = crd_count(d.n(), d.n1(), cap)?;
    let method = frt_method(statistic, true);
    if is_constant(d.yobs()) {
        let mut out = TestResult::new(method, 0.0, 1.0).flagged();
        out.enumerated = total as u64;
        out.extreme_count = total as u64;
        return Ok(out);
    }
    let engine = CrdRandomization::new(d, statistic)?;
    let observed = engine.statistic(&engine.observed_mask(d));
    let threshold = engine.extremeness(observed);
    let chunks = total.div_ceil(CHUNK) as u64;
    let count: u64 =
        (0..chunks).into_par_iter().map(|c| engine.count_extreme_range(threshold, c as u128 * CHUNK, CHUNK)).sum();
    let mut out = TestResult::new(method, observed, count as f64 / total as f64);
    out.enumerated = total as u64;
    out.extreme_count = count;
    Ok(out)
}

/// [`frt_exact`] with the default enumeration cap.
pub fn frt_exact_default(d: &ObservedData, statistic: Statistic) -> Result<TestResult> {
    frt_exact(d, statistic, DEFAULT_ENUMERATION_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    NeymanCi,
    Fiducial,
}

impl IntervalMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            IntervalMethod::NeymanCi => "neyman_ci",
            IntervalMethod::Fiducial => "fiducial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalStatus {
    Ok,
    /// No candidate effect was retained; bounds are NaN.
    Empty,
    /// Retained values on the coarse grid were not contiguous; the bounds
    /// are the hull of all retained values.
    Disconnected,
    /// The retained set reached the edge of the search grid, so the true
    /// interval may be wider.
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalResult {
    pub method: IntervalMethod,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub status: IntervalStatus,
}

impl IntervalResult {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

pub const INTERVAL_RESULT_HEADER: &str = "method,level,lower,upper";

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("confidence level must be in (0, 1), got {level}")))
    }
}

/// `τ̂ ± z_{1-α/2} √V̂(Neyman)`.
pub fn neyman_ci(d: &ObservedData, level: f64) -> Result<IntervalResult> {
    check_level(level)?;
    let v = variance_report(d)?;
    if v.v_neyman <= 0.0 {
        return Err(Error::Degenerate("Neyman variance estimate is zero".into()));
    }
    let half = normal::quantile(1.0 - (1.0 - level) / 2.0) * v.v_neyman.sqrt();
    Ok(IntervalResult {
        method: IntervalMethod::NeymanCi,
        level,
        lower: v.tau_hat - half,
        upper: v.tau_hat + half,
        status: IntervalStatus::Ok,
    })
}

/// Randomization distribution of the difference in means for the whole
/// family of constant-effect nulls `Y_i(1) - Y_i(0) = c`.
///
/// Shifting treated outcomes by `c` makes the statistic of assignment `m`
/// equal to `a_m - c·b_m`, where `a_m` is its statistic on the unshifted
/// data and `b_m` the difference in means of the observed treatment
/// indicator under it. Storing `(a_m, b_m)` lets every candidate `c` be
/// tested against the same set of assignments.
#[derive(Debug, Clone)]
pub struct ShiftFamily {
    a: Vec<f64>,
    b: Vec<f64>,
    tau_hat: f64,
    add_one: bool,
}

impl ShiftFamily {
    fn build(d: &ObservedData, add_one: bool, mut visit: impl FnMut(&mut dyn FnMut(&[f64]))) -> Result<Self> {
        let engine = CrdRandomization::new(d, Statistic::DiffInMeans)?;
        let (n1, n0) = (d.n1() as f64, d.n0() as f64);
        // observed treatment indicator in the same mask convention
        let treated: Vec<f64> = d.labels().iter().map(|&t| t as f64).collect();
        let observed_mask = engine.observed_mask(d);
        let overlap_of = |mask: &[f64]| -> f64 {
            let hits: f64 = treated.iter().zip(mask).map(|(t, w)| t * w).sum();
            // hits counts observed-treated units in the drawn arm
            let in_treated = if engine.draw_treated { hits } else { n1 - hits };
            in_treated / n1 - (n1 - in_treated) / n0
        };
        let tau_hat = engine.statistic(&observed_mask);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        visit(&mut |mask: &[f64]| {
            a.push(engine.statistic(mask));
            b.push(overlap_of(mask));
        });
        debug_assert_eq!(overlap_of(&observed_mask), 1.0);
        Ok(Self { a, b, tau_hat, add_one })
    }

    /// Family built from `m` Monte Carlo assignments.
    pub fn monte_carlo<R: Rng + ?Sized>(d: &ObservedData, m: usize, rng: &mut R, add_one: bool) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one Monte Carlo draw".into()));
        }
        let (n, k) = {
            let e = CrdRandomization::new(d, Statistic::DiffInMeans)?;
            (e.n(), e.k())
        };
        Self::build(d, add_one, |f| {
            let mut sampler = SubsetSampler::new(n, k);
            let mut mask = vec![0.0; n];
            for _ in 0..m {
                let idx = sampler.sample(rng);
                for &i in idx {
                    mask[i as usize] = 1.0;
                }
                f(&mask);
                for &i in idx {
                    mask[i as usize] = 0.0;
                }
            }
        })
    }

    /// Family built from every assignment.
    pub fn exact(d: &ObservedData, cap: u128) -> Result<Self> {
        crd_count(d.n(), d.n1(), cap)?;
        let (n, k) = {
            let e = CrdRandomization::new(d, Statistic::DiffInMeans)?;
            (e.n(), e.k())
        };
        Self::build(d, false, |f| {
            let mut mask = vec![0.0; n];
            Combinations::new(n, k).for_each_ref(|set| {
                for &i in set {
                    mask[i] = 1.0;
                }
                f(&mask);
                for &i in set {
                    mask[i] = 0.0;
                }
            });
        })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// FRT p-value of `H0: Y_i(1) - Y_i(0) = c for all i`.
    pub fn p_value(&self, c: f64) -> f64 {
        let threshold = (self.tau_hat - c).abs();
        let count = self.a.iter().zip(&self.b).filter(|(a, b)| (*a - c * *b).abs() >= threshold).count();
        if self.add_one {
            (1 + count) as f64 / (1 + self.len()) as f64
        } else {
            count as f64 / self.len() as f64
        }
    }
}

/// Number of coarse grid points in the fiducial search.
pub const FIDUCIAL_GRID: usize = 201;

/// `1 - level`, snapped to 12 decimals so that level 0.9 compares against
/// exactly 0.1 rather than 0.09999999999999998; exact p-values such as
/// 21/210 sit on that boundary.
pub fn alpha_for_level(level: f64) -> f64 {
    ((1.0 - level) * 1e12).round() / 1e12
}

/// Invert constant-effect FRTs: the hull of `c` whose p-value exceeds
/// `1 - level`, located on a 201-point grid over `τ̂ ± 10·se` and refined by
/// bisection to `1e-4·se`, where `se = √V̂(Neyman)`.
pub fn invert_shift_family(family: &ShiftFamily, d: &ObservedData, level: f64) -> Result<IntervalResult> {
    check_level(level)?;
    let alpha = alpha_for_level(level);
    let v = variance_report(d)?;
    let se = if v.v_neyman > 0.0 { v.v_neyman.sqrt() } else { v.v_fisher.sqrt() };
    if se.is_nan() || se <= 0.0 {
        return Err(Error::Degenerate("zero variance; no scale for the fiducial search".into()));
    }
    let retained = |c: f64| family.p_value(c) > alpha;
    let center = v.tau_hat;
    let step = 20.0 * se / (FIDUCIAL_GRID - 1) as f64;
    let grid: Vec<f64> = (0..FIDUCIAL_GRID).map(|i| center - 10.0 * se + i as f64 * step).collect();
    let keep: Vec<bool> = grid.iter().map(|&c| retained(c)).collect();

    let (Some(first), Some(last)) = (keep.iter().position(|&k| k), keep.iter().rposition(|&k| k)) else {
        return Ok(IntervalResult {
            method: IntervalMethod::Fiducial,
            level,
            lower: f64::NAN,
            upper: f64::NAN,
            status: IntervalStatus::Empty,
        });
    };
    let mut status = IntervalStatus::Ok;
    if keep[first..=last].iter().any(|&k| !k) {
        status = IntervalStatus::Disconnected;
    }
    let tol = 1e-4 * se;
    let refine = |mut inside: f64, mut outside: f64| -> f64 {
        while (inside - outside).abs() > tol {
            let mid = 0.5 * (inside + outside);
            if retained(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let lower = if first == 0 {
        status = IntervalStatus::Truncated;
        grid[0]
    } else {
        refine(grid[first], grid[first - 1])
    };
    let upper = if last == FIDUCIAL_GRID - 1 {
        status = IntervalStatus::Truncated;
        grid[last]
    } else {
        refine(grid[last], grid[last + 1])
    };
    Ok(IntervalResult { method: IntervalMethod::Fiducial, level, lower, upper, status })
}

/// Fiducial interval from `m` Monte Carlo assignments shared by every
/// candidate effect.
pub fn fiducial_interval<R: Rng + ?Sized>(
    d: &ObservedData,
    level: f64,
    m: usize,
    rng: &mut R,
) -> Result<IntervalResult> {
    let family = ShiftFamily::monte_carlo(d, m, rng, false)?;
    invert_shift_family(&family, d, level)
}

/// Fiducial interval from exhaustive enumeration.
pub fn fiducial_interval_exact(d: &ObservedData, level: f64, cap: u128) -> Result<IntervalResult> {
    let family = ShiftFamily::exact(d, cap)?;
    invert_shift_family(&family, d, level)
}

/// How the sharp-null p-value of a matched-pair experiment is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFisherMode {
    /// All `2^N` sign patterns (N at most 20).
    Exact,
    MonteCarlo {
        m: usize,
    },
    /// Normal approximation with the sharp-null variance.
    Normal,
    /// Exact up to 20 pairs, Monte Carlo with `m` draws beyond.
    Auto {
        m: usize,
    },
}

fn signed_mean(diffs: &[f64], signs: u64) -> f64 {
    // bit i set flips pair i
    let mut s = 0.0;
    for (i, d) in diffs.iter().enumerate() {
        if (signs >> i) & 1 == 1 {
            s -= d;
        } else {
            s += d;
        }
    }
    s / diffs.len() as f64
}

/// Neyman and Fisher tests for a matched-pair experiment.
pub fn pair_tests<R: Rng + ?Sized>(
    report: &PairEffectReport,
    mode: PairFisherMode,
    rng: &mut R,
) -> Result<(TestResult, TestResult)> {
    let diffs = &report.per_pair;
    let n = diffs.len();
    let neyman = normal_test(Method::PairNeyman, report.tau_hat, report.v_neyman);
    let mode = match mode {
        PairFisherMode::Auto { m } if n <= MAX_ENUMERATED_PAIRS => {
            let _ = m;
            PairFisherMode::Exact
        }
        PairFisherMode::Auto { m } => PairFisherMode::MonteCarlo { m },
        other => other,
    };
    let observed = signed_mean(diffs, 0);
    let threshold = observed.abs();
    let fisher = match mode {
        PairFisherMode::Normal => normal_test(Method::PairFrt, report.tau_hat, report.v_fisher),
        PairFisherMode::Exact => {
            if n > MAX_ENUMERATED_PAIRS {
                return Err(Error::EnumerationCap { count: 1u128 << n.min(127), cap: 1u128 << MAX_ENUMERATED_PAIRS });
            }
            let total = 1u64 << n;
            let count = (0..total).filter(|&code| signed_mean(diffs, code).abs() >= threshold).count() as u64;
            let mut out = TestResult::new(Method::PairFrt, observed, count as f64 / total as f64);
            out.enumerated = total;
            out.extreme_count = count;
            out
        }
        PairFisherMode::MonteCarlo { m } => {
            if m == 0 {
                return Err(Error::InvalidParameter("need at least one Monte Carlo draw".into()));
            }
            let mut count = 0u64;
            let mut signs = vec![0u64; n.div_ceil(64)];
            for _ in 0..m {
                for w in signs.iter_mut() {
                    *w = rng.gen();
                }
                let mut s = 0.0;
                for (i, d) in diffs.iter().enumerate() {
                    if (signs[i / 64] >> (i % 64)) & 1 == 1 {
                        s -= d;
                    } else {
                        s += d;
                    }
                }
                if (s / n as f64).abs() >= threshold {
                    count += 1;
                }
            }
            mc_result(Method::PairFrt, observed, count, m, FrtOptions::default())
        }
        PairFisherMode::Auto { .. } => unreachable!(),
    };
    let fisher = if diffs.iter().all(|&d| d == 0.0) { fisher.flagged() } else { fisher };
    Ok((neyman, fisher))
}

/// Factorial-effect statistic through one fixed code path: the contrast
/// weight of each unit's cell, summed in unit order.
fn factorial_statistic(yobs: &[f64], cells: &[usize], contrast: &[i8], scale: f64) -> f64 {
    let s: f64 = yobs.iter().zip(cells).map(|(y, &c)| contrast[c] as f64 * y).sum();
    s * scale
}

/// Neyman Wald test of `τ1 = 0` and a Monte Carlo FRT of the sharp null
/// `Y_i(z) = Y_i^obs` with statistic τ̂1.
pub fn factorial_tests<R: Rng + ?Sized>(
    report: &FactorialEffectReport,
    obs: &FactorialObserved,
    m: usize,
    rng: &mut R,
) -> Result<(TestResult, TestResult)> {
    if obs.k != report.k || obs.r != report.r {
        return Err(Error::InvalidParameter("report and observed data describe different designs".into()));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one Monte Carlo draw".into()));
    }
    let neyman = normal_test(Method::FactorialNeyman, report.tau1_hat, report.v1_neyman);
    let scale = 1.0 / ((1u64 << (obs.k - 1)) as f64 * obs.r as f64);
    let observed = factorial_statistic(&obs.yobs, &obs.cell, &report.contrast, scale);
    let threshold = observed.abs();
    let mut sampler = FactorialSampler::new(obs.k, obs.r);
    let mut cells = vec![0usize; obs.yobs.len()];
    let mut count = 0u64;
    for _ in 0..m {
        sampler.sample_into(rng, &mut cells);
        if factorial_statistic(&obs.yobs, &cells, &report.contrast, scale).abs() >= threshold {
            count += 1;
        }
    }
    let mut fisher = mc_result(Method::FactorialFrt, observed, count, m, FrtOptions::default());
    if is_constant(&obs.yobs) {
        fisher = fisher.flagged();
    }
    Ok((neyman, fisher))
}

/// Draws of τ̂1 under the factorial sharp null, for checking its
/// randomization variance.
pub fn factorial_null_draws<R: Rng + ?Sized>(
    obs: &FactorialObserved,
    contrast: &[i8],
    m: usize,
    rng: &mut R,
) -> Vec<f64> {
    let scale = 1.0 / ((1u64 << (obs.k - 1)) as f64 * obs.r as f64);
    let mut sampler = FactorialSampler::new(obs.k, obs.r);
    let mut cells = vec![0usize; obs.yobs.len()];
    (0..m)
        .map(|_| {
            sampler.sample_into(rng, &mut cells);
            factorial_statistic(&obs.yobs, &cells, contrast, scale)
        })
        .collect()
}

/// Observed-statistic helper matching [`diff_in_means`] for callers that
/// only need the point estimate.
pub fn observed_statistic(d: &ObservedData, statistic: Statistic) -> Result<f64> {
    match statistic {
        Statistic::DiffInMeans => Ok(diff_in_means(d)),
        Statistic::VarianceRatio => variance_ratio_statistic(d),
    }
}
