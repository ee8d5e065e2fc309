//! Finite populations of potential outcomes and the observed data an
//! assignment reveals.
//!
//! A population is fixed once built. All randomness in the rest of the
//! crate comes from treatment assignments drawn against it.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::design::{Assignment, FactorialAssignment, PairAssignment};
use crate::error::{Arm, Error, Result};
use crate::rng;

fn check_finite(xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with divisor `len - 1`. Two-pass for accuracy.
pub(crate) fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Both potential outcomes for every unit of a two-arm experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialTable {
    y1: Vec<f64>,
    y0: Vec<f64>,
}

impl PotentialTable {
    pub fn new(y1: Vec<f64>, y0: Vec<f64>) -> Result<Self> {
        if y1.len() != y0.len() {
            return Err(Error::LengthMismatch { expected: y1.len(), got: y0.len() });
        }
        if y1.len() < 2 {
            return Err(Error::DegeneratePopulation(y1.len()));
        }
        check_finite(&y1)?;
        check_finite(&y0)?;
        Ok(Self { y1, y0 })
    }

    /// Table satisfying the sharp null: both potential outcomes equal `y`.
    pub fn sharp_null(y: Vec<f64>) -> Result<Self> {
        Self::new(y.clone(), y)
    }

    /// Table with constant individual effect `tau`: `Y(1) = Y(0) + tau`.
    pub fn constant_effect(y0: Vec<f64>, tau: f64) -> Result<Self> {
        let y1 = y0.iter().map(|y| y + tau).collect();
        Self::new(y1, y0)
    }

    pub fn n(&self) -> usize {
        self.y1.len()
    }

    pub fn y1(&self) -> &[f64] {
        &self.y1
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    /// Individual effects `Y_i(1) - Y_i(0)`.
    pub fn effects(&self) -> impl Iterator<Item = f64> + '_ {
        self.y1.iter().zip(&self.y0).map(|(a, b)| a - b)
    }

    pub fn summarize(&self) -> PopulationSummary {
        summarize_population(self)
    }

    /// Affinely rescale each column so that `Ȳ1 = mu1`, `S1² = var1`,
    /// `Ȳ0 = mu0` and `S0² = var0` hold exactly (up to rounding). Each
    /// column keeps its shape, and so does the correlation between them.
    pub fn rescaled_to_moments(&self, mu1: f64, var1: f64, mu0: f64, var0: f64) -> Result<Self> {
        fn rescale(xs: &[f64], mu: f64, var: f64) -> Result<Vec<f64>> {
            if !(var >= 0.0 && var.is_finite() && mu.is_finite()) {
                return Err(Error::InvalidParameter(format!("cannot rescale to mean {mu}, variance {var}")));
            }
            let m = mean(xs);
            let v = sample_var(xs);
            if v == 0.0 && var > 0.0 {
                return Err(Error::Degenerate("constant column cannot be rescaled to positive variance".into()));
            }
            let scale = if v == 0.0 { 0.0 } else { (var / v).sqrt() };
            Ok(xs.iter().map(|x| mu + (x - m) * scale).collect())
        }
        Self::new(rescale(&self.y1, mu1, var1)?, rescale(&self.y0, mu0, var0)?)
    }
}

/// Population-level estimands of a [`PotentialTable`]. Variances use the
/// `N - 1` divisor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationSummary {
    pub n: usize,
    pub tau: f64,
    pub ybar1: f64,
    pub ybar0: f64,
    pub s1sq: f64,
    pub s0sq: f64,
    pub stausq: f64,
    pub s10: f64,
}

impl PopulationSummary {
    /// Exact randomization variance of the difference in means,
    /// `S1²/N1 + S0²/N0 - Sτ²/N`.
    pub fn sampling_variance(&self, n1: usize, n0: usize) -> Result<f64> {
        check_split(self.n, n1, n0)?;
        Ok(self.s1sq / n1 as f64 + self.s0sq / n0 as f64 - self.stausq / self.n as f64)
    }
}

pub(crate) fn check_split(n: usize, n1: usize, n0: usize) -> Result<()> {
    if n1 + n0 != n {
        return Err(Error::InvalidParameter(format!("n1 + n0 = {} but population has {n} units", n1 + n0)));
    }
    if n1 == 0 {
        return Err(Error::InsufficientArm { arm: Arm::Treatment, got: 0, need: 1 });
    }
    if n0 == 0 {
        return Err(Error::InsufficientArm { arm: Arm::Control, got: 0, need: 1 });
    }
    Ok(())
}

pub fn summarize_population(pop: &PotentialTable) -> PopulationSummary {
    let n = pop.n() as f64;
    let ybar1 = mean(&pop.y1);
    let ybar0 = mean(&pop.y0);
    let s1sq = sample_var(&pop.y1);
    let s0sq = sample_var(&pop.y0);
    let tau_i: Vec<f64> = pop.effects().collect();
    let stausq = sample_var(&tau_i);
    let s10 = pop.y1.iter().zip(&pop.y0).map(|(a, b)| (a - ybar1) * (b - ybar0)).sum::<f64>() / (n - 1.0);
    PopulationSummary { n: pop.n(), tau: ybar1 - ybar0, ybar1, ybar0, s1sq, s0sq, stausq, s10 }
}

fn normal(mu: f64, var: f64, what: &str) -> Result<Normal<f64>> {
    if !(var > 0.0 && var.is_finite()) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{what}: need finite mean and positive variance, got N({mu}, {var})"
        )));
    }
    Normal::new(mu, var.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Draw `Y_i(1) ~ N(mu1, var1)` and `Y_i(0) ~ N(mu0, var0)` independently,
/// once. The result is deterministic in `seed`.
pub fn freeze_normal_population(
    n: usize,
    mu1: f64,
    var1: f64,
    mu0: f64,
    var0: f64,
    seed: u64,
) -> Result<PotentialTable> {
    if n < 2 {
        return Err(Error::DegeneratePopulation(n));
    }
    let d1 = normal(mu1, var1, "treatment")?;
    let d0 = normal(mu0, var0, "control")?;
    let mut rng = rng::stream(seed, 0);
    let mut y1 = Vec::with_capacity(n);
    let mut y0 = Vec::with_capacity(n);
    for _ in 0..n {
        y1.push(d1.sample(&mut rng));
        y0.push(d0.sample(&mut rng));
    }
    PotentialTable::new(y1, y0)
}

/// What one completely randomized assignment reveals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedData {
    yobs: Vec<f64>,
    t: Vec<u8>,
    n1: usize,
    n0: usize,
}

impl ObservedData {
    pub fn new(yobs: Vec<f64>, t: Vec<u8>) -> Result<Self> {
        if yobs.len() != t.len() {
            return Err(Error::LengthMismatch { expected: yobs.len(), got: t.len() });
        }
        check_finite(&yobs)?;
        if let Some(i) = t.iter().position(|&x| x > 1) {
            return Err(Error::InvalidParameter(format!("treatment label {} at position {i} is not 0/1", t[i])));
        }
        let n1 = t.iter().filter(|&&x| x == 1).count();
        let n0 = t.len() - n1;
        check_split(t.len(), n1, n0)?;
        Ok(Self { yobs, t, n1, n0 })
    }

    pub fn yobs(&self) -> &[f64] {
        &self.yobs
    }

    pub fn labels(&self) -> &[u8] {
        &self.t
    }

    pub fn n(&self) -> usize {
        self.yobs.len()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn treated(&self) -> Vec<f64> {
        self.arm(1)
    }

    pub fn control(&self) -> Vec<f64> {
        self.arm(0)
    }

    fn arm(&self, label: u8) -> Vec<f64> {
        self.yobs.iter().zip(&self.t).filter(|(_, &t)| t == label).map(|(y, _)| *y).collect()
    }

    /// Impute the constant-effect null `Y_i(1) - Y_i(0) = c` by subtracting
    /// `c` from every treated outcome.
    pub fn shifted(&self, c: f64) -> Self {
        let yobs = self.yobs.iter().zip(&self.t).map(|(y, &t)| if t == 1 { y - c } else { *y }).collect();
        Self { yobs, t: self.t.clone(), n1: self.n1, n0: self.n0 }
    }
}

/// `Y_i^obs = T_i Y_i(1) + (1 - T_i) Y_i(0)`.
pub fn observe(pop: &PotentialTable, a: &Assignment) -> Result<ObservedData> {
    if a.labels().len() != pop.n() {
        return Err(Error::LengthMismatch { expected: pop.n(), got: a.labels().len() });
    }
    let yobs = a.labels().iter().enumerate().map(|(i, &t)| if t == 1 { pop.y1[i] } else { pop.y0[i] }).collect();
    ObservedData::new(yobs, a.labels().to_vec())
}

/// Potential outcomes for one matched pair, indexed `[unit][arm]` with
/// unit 0/1 the first/second member and arm 1 = treatment.
pub type PairOutcomes = [[f64; 2]; 2];

/// Science table for a matched-pair experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPairTable {
    pairs: Vec<PairOutcomes>,
}

impl MatchedPairTable {
    pub fn new(pairs: Vec<PairOutcomes>) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::DegeneratePopulation(pairs.len()));
        }
        for (i, p) in pairs.iter().enumerate() {
            if p.iter().flatten().any(|y| !y.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(Self { pairs })
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[PairOutcomes] {
        &self.pairs
    }

    /// Within-pair average effects τ_i.
    pub fn pair_effects(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| (p[0][1] + p[1][1] - p[0][0] - p[1][0]) / 2.0).collect()
    }

    pub fn tau(&self) -> f64 {
        mean(&self.pair_effects())
    }

    /// Exact randomization variance of the paired difference in means.
    pub fn sampling_variance(&self) -> f64 {
        let n = self.pairs.len() as f64;
        self.pairs
            .iter()
            .map(|p| {
                let d = p[0][1] + p[0][0] - p[1][1] - p[1][0];
                d * d
            })
            .sum::<f64>()
            / (4.0 * n * n)
    }
}

/// Pair outcomes as revealed by the flips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairObserved {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub flips: Vec<u8>,
}

impl PairObserved {
    pub fn new(first: Vec<f64>, second: Vec<f64>, flips: Vec<u8>) -> Result<Self> {
        if first.len() != second.len() || first.len() != flips.len() {
            return Err(Error::LengthMismatch { expected: first.len(), got: second.len().min(flips.len()) });
        }
        check_finite(&first)?;
        check_finite(&second)?;
        Ok(Self { first, second, flips })
    }

    /// Treated-minus-control difference in each pair.
    pub fn pair_differences(&self) -> Vec<f64> {
        self.first
            .iter()
            .zip(&self.second)
            .zip(&self.flips)
            .map(|((a, b), &t)| if t == 1 { a - b } else { b - a })
            .collect()
    }
}

/// When `T_i = 1` the first unit is treated and the second is control.
pub fn observe_pairs(pt: &MatchedPairTable, a: &PairAssignment) -> Result<PairObserved> {
    if a.flips().len() != pt.n_pairs() {
        return Err(Error::LengthMismatch { expected: pt.n_pairs(), got: a.flips().len() });
    }
    let mut first = Vec::with_capacity(pt.n_pairs());
    let mut second = Vec::with_capacity(pt.n_pairs());
    for (p, &t) in pt.pairs.iter().zip(a.flips()) {
        let t = t as usize;
        first.push(p[0][t]);
        second.push(p[1][1 - t]);
    }
    PairObserved::new(first, second, a.flips().to_vec())
}

/// Draw a matched-pair table: both members of each pair get independent
/// `N(mu1, var1)` / `N(mu0, var0)` potential outcomes plus a shared pair
/// effect `N(0, pair_var)` (use `pair_var = 0` for none).
pub fn freeze_normal_pairs(
    n_pairs: usize,
    mu1: f64,
    var1: f64,
    mu0: f64,
    var0: f64,
    pair_var: f64,
    seed: u64,
) -> Result<MatchedPairTable> {
    let d1 = normal(mu1, var1, "treatment")?;
    let d0 = normal(mu0, var0, "control")?;
    if !(pair_var >= 0.0 && pair_var.is_finite()) {
        return Err(Error::InvalidParameter(format!("pair variance must be nonnegative, got {pair_var}")));
    }
    let block = Normal::new(0.0, pair_var.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = rng::stream(seed, 1);
    let pairs = (0..n_pairs)
        .map(|_| {
            let b = block.sample(&mut rng);
            let mut p = [[0.0; 2]; 2];
            for unit in &mut p {
                unit[1] = b + d1.sample(&mut rng);
                unit[0] = b + d0.sample(&mut rng);
            }
            p
        })
        .collect();
    MatchedPairTable::new(pairs)
}

/// Level (+1 or -1) of `factor` (0-based) in the `j`-th treatment
/// combination. Combinations are ordered lexicographically with +1 before
/// -1 in each coordinate, so for K = 2 the order is (+,+), (+,-), (-,+), (-,-).
pub fn factor_level(j: usize, factor: usize, k: usize) -> i8 {
    if (j >> (k - 1 - factor)) & 1 == 0 {
        1
    } else {
        -1
    }
}

/// Main-effect contrast vector of `factor` over the J = 2^K combinations.
pub fn main_effect_contrast(k: usize, factor: usize) -> Vec<i8> {
    (0..1usize << k).map(|j| factor_level(j, factor, k)).collect()
}

/// Science table of a balanced 2^K factorial experiment: N = r·2^K units,
/// one potential outcome per unit and treatment combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialTable {
    k: usize,
    r: usize,
    // row-major N x J
    y: Vec<f64>,
}

impl FactorialTable {
    pub fn new(k: usize, r: usize, y: Vec<f64>) -> Result<Self> {
        if k == 0 || k > 20 {
            return Err(Error::InvalidParameter(format!("number of factors must be in 1..=20, got {k}")));
        }
        if r < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 replications per cell, got {r}")));
        }
        let j = 1usize << k;
        let expected = r * j * j;
        if y.len() != expected {
            return Err(Error::LengthMismatch { expected, got: y.len() });
        }
        check_finite(&y)?;
        Ok(Self { k, r, y })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n_cells(&self) -> usize {
        1 << self.k
    }

    pub fn n(&self) -> usize {
        self.r << self.k
    }

    /// `Y_i(z_j)`.
    pub fn outcome(&self, unit: usize, cell: usize) -> f64 {
        self.y[unit * self.n_cells() + cell]
    }

    pub fn column(&self, cell: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.outcome(i, cell)).collect()
    }

    /// Population means Ȳ(z) in canonical order.
    pub fn cell_means(&self) -> Vec<f64> {
        (0..self.n_cells()).map(|c| mean(&self.column(c))).collect()
    }

    /// Population variances S²(z) in canonical order.
    pub fn cell_variances(&self) -> Vec<f64> {
        (0..self.n_cells()).map(|c| sample_var(&self.column(c))).collect()
    }

    /// Population factorial effect `2^{-(K-1)} Σ_j g_j Ȳ(z_j)`.
    pub fn factorial_effect(&self, contrast: &[i8]) -> Result<f64> {
        check_contrast(contrast, self.n_cells())?;
        let means = self.cell_means();
        Ok(contrast_combination(contrast, &means, self.k))
    }
}

pub(crate) fn contrast_combination(contrast: &[i8], values: &[f64], k: usize) -> f64 {
    let dot: f64 = contrast.iter().zip(values).map(|(&g, v)| g as f64 * v).sum();
    dot / (1u64 << (k - 1)) as f64
}

pub(crate) fn check_contrast(contrast: &[i8], j: usize) -> Result<()> {
    if contrast.len() != j {
        return Err(Error::MalformedContrast(format!("length {} but there are {j} cells", contrast.len())));
    }
    if contrast.iter().any(|&g| g != 1 && g != -1) {
        return Err(Error::MalformedContrast("entries must be +1 or -1".into()));
    }
    let plus = contrast.iter().filter(|&&g| g == 1).count();
    if 2 * plus != j {
        return Err(Error::MalformedContrast(format!("{plus} of {j} entries are +1; need exactly half")));
    }
    Ok(())
}

/// Draw `Y_i(z) = cell_means[z] + N(0, var)` independently for every unit
/// and combination.
pub fn freeze_normal_factorial(k: usize, r: usize, cell_means: &[f64], var: f64, seed: u64) -> Result<FactorialTable> {
    let j = 1usize << k;
    if cell_means.len() != j {
        return Err(Error::LengthMismatch { expected: j, got: cell_means.len() });
    }
    let noise = normal(0.0, var, "cell noise")?;
    let mut rng = rng::stream(seed, 2);
    let n = r * j;
    let mut y = Vec::with_capacity(n * j);
    for _ in 0..n {
        for m in cell_means {
            y.push(m + noise.sample(&mut rng));
        }
    }
    FactorialTable::new(k, r, y)
}

/// Factorial outcomes as revealed by an assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialObserved {
    pub k: usize,
    pub r: usize,
    pub yobs: Vec<f64>,
    pub cell: Vec<usize>,
}

impl FactorialObserved {
    pub fn new(k: usize, r: usize, yobs: Vec<f64>, cell: Vec<usize>) -> Result<Self> {
        let j = 1usize << k;
        if yobs.len() != cell.len() || yobs.len() != r * j {
            return Err(Error::LengthMismatch { expected: r * j, got: yobs.len().min(cell.len()) });
        }
        check_finite(&yobs)?;
        let mut counts = vec![0usize; j];
        for &c in &cell {
            if c >= j {
                return Err(Error::InvalidParameter(format!("cell index {c} out of range 0..{j}")));
            }
            counts[c] += 1;
        }
        if counts.iter().any(|&c| c != r) {
            return Err(Error::InvalidParameter(format!("every cell must hold exactly {r} units")));
        }
        Ok(Self { k, r, yobs, cell })
    }

    pub fn n_cells(&self) -> usize {
        1 << self.k
    }

    /// Outcomes grouped by cell, canonical order.
    pub fn by_cell(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::with_capacity(self.r); self.n_cells()];
        for (y, &c) in self.yobs.iter().zip(&self.cell) {
            out[c].push(*y);
        }
        out
    }
}

pub fn observe_factorial(ft: &FactorialTable, a: &FactorialAssignment) -> Result<FactorialObserved> {
    if a.cells().len() != ft.n() {
        return Err(Error::LengthMismatch { expected: ft.n(), got: a.cells().len() });
    }
    let yobs = a.cells().iter().enumerate().map(|(i, &c)| ft.outcome(i, c)).collect();
    FactorialObserved::new(ft.k, ft.r, yobs, a.cells().to_vec())
}

/// Hájek's maximal-deviation ratio `max_i (x_i - x̄)² / (Σ (x_i - x̄)² / N)`
/// for a finite population `x` sampled without replacement at size
/// `n_sample`. Large values warn that the normal approximation to the
/// sample mean may be poor.
pub fn hajek_diagnostic(x: &[f64], n_sample: usize) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::DegeneratePopulation(x.len()));
    }
    check_finite(x)?;
    if n_sample == 0 || n_sample >= x.len() {
        return Err(Error::InvalidParameter(format!("sample size {n_sample} must be in 1..{}", x.len())));
    }
    let m = mean(x);
    let dev2: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    let total: f64 = dev2.iter().sum();
    if total == 0.0 {
        return Err(Error::Degenerate("constant population: Hájek ratio undefined".into()));
    }
    let max = dev2.iter().cloned().fold(0.0, f64::max);
    Ok(max / (total / x.len() as f64))
}

/// Hájek ratio of `x_i = Y_i(1)/N1 + Y_i(0)/N0`, the population whose
/// sample mean drives the difference-in-means estimator.
pub fn crd_hajek_diagnostic(pop: &PotentialTable, n1: usize) -> Result<f64> {
    let n0 = pop.n().saturating_sub(n1);
    check_split(pop.n(), n1, n0)?;
    let x: Vec<f64> = pop.y1.iter().zip(&pop.y0).map(|(a, b)| a / n1 as f64 + b / n0 as f64).collect();
    hajek_diagnostic(&x, n1)
}
