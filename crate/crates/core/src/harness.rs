//! Simulation scenarios: freeze one population, re-randomize it many times,
//! and record how the Neymanian and Fisherian tests decide on each draw.
//!
//! Replication `i` draws everything from stream `(seed, i)`, and results
//! are gathered in replication order. Output is therefore identical for any
//! number of worker threads.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{draw_crd, draw_factorial, draw_pairs};
use crate::error::{Error, Result};
use crate::estimators::{crd_gap_formula, factorial_gap_formula, factorial_report, pair_report, variance_report};
use crate::inference::{
    factorial_tests, fiducial_interval, frt_monte_carlo, neyman_ci, normal_test, pair_tests, rejects, FrtOptions,
    Method, PairFisherMode, Statistic, DEFAULT_ALPHA, DEFAULT_DRAWS,
};
use crate::population::{
    freeze_normal_factorial, freeze_normal_pairs, freeze_normal_population, main_effect_contrast, observe,
    observe_factorial, observe_pairs, FactorialTable, MatchedPairTable, PotentialTable,
};
use crate::rng::{self, derive_seed};

const POPULATION_TAG: u64 = 0x0050_4f50;
const ASSIGNMENT_TAG: u64 = 0x0041_5353;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Design {
    Crd { n: usize, n1: usize },
    Pairs { n_pairs: usize },
    Factorial { k: usize, r: usize },
}

/// Where the frozen population comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PopulationSpec {
    /// Independent normal potential outcomes. With `exact_moments` the
    /// drawn columns are rescaled so their means and variances equal the
    /// parameters exactly.
    Normal {
        mu1: f64,
        var1: f64,
        mu0: f64,
        var0: f64,
        #[serde(default)]
        exact_moments: bool,
    },
    /// Matched pairs: unit outcomes as in `Normal`, plus a shared pair
    /// effect with variance `pair_var`.
    NormalPairs {
        mu1: f64,
        var1: f64,
        mu0: f64,
        var0: f64,
        pair_var: f64,
    },
    /// Factorial: `Y_i(z) = cell_means[z] + N(0, var)`.
    FactorialNormal {
        cell_means: Vec<f64>,
        var: f64,
    },
    Table(PotentialTable),
    PairTable(MatchedPairTable),
    FactorialTable(FactorialTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub design: Design,
    pub population: PopulationSpec,
    pub reps: usize,
    /// Monte Carlo draws per FRT.
    pub m: usize,
    pub alpha: f64,
    #[serde(default)]
    pub statistic: Statistic,
    pub master_seed: u64,
    #[serde(default)]
    pub add_one: bool,
}

impl ScenarioConfig {
    /// Balanced example: N = 100, N1 = N0 = 50, Y(1) ~ N(0.1, 1/16),
    /// Y(0) ~ N(0, 1/16), 1000 replications, M = 10^5.
    pub fn example_balanced(master_seed: u64) -> Self {
        Self {
            design: Design::Crd { n: 100, n1: 50 },
            population: PopulationSpec::Normal {
                mu1: 0.1,
                var1: 1.0 / 16.0,
                mu0: 0.0,
                var0: 1.0 / 16.0,
                exact_moments: false,
            },
            reps: 1000,
            m: DEFAULT_DRAWS,
            alpha: DEFAULT_ALPHA,
            statistic: Statistic::DiffInMeans,
            master_seed,
            add_one: false,
        }
    }

    /// Unbalanced example: N1 = 70, N0 = 30, Y(1) ~ N(0.1, 1/4),
    /// Y(0) ~ N(0, 1/16).
    pub fn example_unbalanced(master_seed: u64) -> Self {
        Self {
            design: Design::Crd { n: 100, n1: 70 },
            population: PopulationSpec::Normal {
                mu1: 0.1,
                var1: 0.25,
                mu0: 0.0,
                var0: 1.0 / 16.0,
                exact_moments: false,
            },
            ..Self::example_balanced(master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        Ok(())
    }

    pub fn population_seed(&self) -> u64 {
        derive_seed(self.master_seed, POPULATION_TAG)
    }

    fn assignment_seed(&self) -> u64 {
        derive_seed(self.master_seed, ASSIGNMENT_TAG)
    }
}

/// Frozen population for a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Population {
    Crd(PotentialTable),
    Pairs(MatchedPairTable),
    Factorial(FactorialTable),
}

pub fn build_population(cfg: &ScenarioConfig) -> Result<Population> {
    let seed = cfg.population_seed();
    let pop = match (&cfg.design, &cfg.population) {
        (Design::Crd { n, .. }, PopulationSpec::Normal { mu1, var1, mu0, var0, exact_moments }) => {
            let pop = freeze_normal_population(*n, *mu1, *var1, *mu0, *var0, seed)?;
            let pop = if *exact_moments { pop.rescaled_to_moments(*mu1, *var1, *mu0, *var0)? } else { pop };
            Population::Crd(pop)
        }
        (Design::Crd { .. }, PopulationSpec::Table(t)) => Population::Crd(t.clone()),
        (Design::Pairs { n_pairs }, PopulationSpec::Normal { mu1, var1, mu0, var0, .. }) => {
            Population::Pairs(freeze_normal_pairs(*n_pairs, *mu1, *var1, *mu0, *var0, 0.0, seed)?)
        }
        (Design::Pairs { n_pairs }, PopulationSpec::NormalPairs { mu1, var1, mu0, var0, pair_var }) => {
            Population::Pairs(freeze_normal_pairs(*n_pairs, *mu1, *var1, *mu0, *var0, *pair_var, seed)?)
        }
        (Design::Pairs { .. }, PopulationSpec::PairTable(t)) => Population::Pairs(t.clone()),
        (Design::Factorial { k, r }, PopulationSpec::FactorialNormal { cell_means, var }) => {
            Population::Factorial(freeze_normal_factorial(*k, *r, cell_means, *var, seed)?)
        }
        (Design::Factorial { .. }, PopulationSpec::FactorialTable(t)) => Population::Factorial(t.clone()),
        (d, p) => {
            return Err(Error::InvalidParameter(format!("population {p:?} does not fit design {d:?}")));
        }
    };
    // table sizes must agree with the design
    match (&cfg.design, &pop) {
        (Design::Crd { n, n1 }, Population::Crd(t)) if t.n() != *n || *n1 == 0 || n1 >= n => {
            Err(Error::InvalidParameter(format!("design n = {n}, n1 = {n1} does not fit a {}-unit table", t.n())))
        }
        (Design::Pairs { n_pairs }, Population::Pairs(t)) if t.n_pairs() != *n_pairs => {
            Err(Error::LengthMismatch { expected: *n_pairs, got: t.n_pairs() })
        }
        (Design::Factorial { k, r }, Population::Factorial(t)) if t.k() != *k || t.r() != *r => {
            Err(Error::InvalidParameter(format!("design K = {k}, r = {r} does not match table")))
        }
        _ => Ok(pop),
    }
}

/// 2×2 cross-tabulation: rows are the Neyman decision, columns the Fisher
/// decision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionTable {
    pub keep_keep: usize,
    pub keep_reject: usize,
    pub reject_keep: usize,
    pub reject_reject: usize,
    /// Replications excluded because a test was degenerate.
    pub degenerate: usize,
}

impl RejectionTable {
    pub fn record(&mut self, neyman_rejects: bool, fisher_rejects: bool) {
        match (neyman_rejects, fisher_rejects) {
            (false, false) => self.keep_keep += 1,
            (false, true) => self.keep_reject += 1,
            (true, false) => self.reject_keep += 1,
            (true, true) => self.reject_reject += 1,
        }
    }

    pub fn valid(&self) -> usize {
        self.keep_keep + self.keep_reject + self.reject_keep + self.reject_reject
    }

    pub fn neyman_rejections(&self) -> usize {
        self.reject_keep + self.reject_reject
    }

    pub fn fisher_rejections(&self) -> usize {
        self.keep_reject + self.reject_reject
    }

    pub fn neyman_power(&self) -> Rate {
        Rate::new(self.neyman_rejections(), self.valid())
    }

    pub fn fisher_power(&self) -> Rate {
        Rate::new(self.fisher_rejections(), self.valid())
    }
}

/// A proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub count: usize,
    pub total: usize,
    pub rate: f64,
    pub se: f64,
}

impl Rate {
    pub fn new(count: usize, total: usize) -> Self {
        if total == 0 {
            return Self { count, total, rate: f64::NAN, se: f64::NAN };
        }
        let rate = count as f64 / total as f64;
        Self { count, total, rate, se: (rate * (1.0 - rate) / total as f64).sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceScatterRow {
    pub rep_index: usize,
    pub v_neyman: f64,
    pub v_fisher: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RepOutcome {
    estimate: f64,
    v_neyman: f64,
    v_fisher: f64,
    neyman_p: f64,
    fisher_p: f64,
    degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub reps: usize,
    pub valid_reps: usize,
    pub degenerate: usize,
    pub neyman_power: Rate,
    pub fisher_power: Rate,
    /// Population estimand (τ, paired τ, or factorial τ1).
    pub estimand: f64,
    pub mean_estimate: f64,
    pub mean_v_neyman: f64,
    pub mean_v_fisher: f64,
    pub mean_gap: f64,
    /// Leading-order gap formula for the population, when one exists.
    pub theoretical_gap: Option<f64>,
    /// Replications with `v_fisher >= v_neyman`.
    pub fisher_variance_larger: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub table: RejectionTable,
    pub scatter: Vec<VarianceScatterRow>,
    pub summary: ScenarioSummary,
}

fn degenerate_rep() -> RepOutcome {
    RepOutcome {
        estimate: f64::NAN,
        v_neyman: f64::NAN,
        v_fisher: f64::NAN,
        neyman_p: 1.0,
        fisher_p: 1.0,
        degenerate: true,
    }
}

fn crd_rep(cfg: &ScenarioConfig, pop: &PotentialTable, n1: usize, rep: usize) -> Result<RepOutcome> {
    let mut rng = rng::stream(cfg.assignment_seed(), rep as u64);
    let a = draw_crd(pop.n(), n1, &mut rng)?;
    let d = observe(pop, &a)?;
    let v = match variance_report(&d) {
        Ok(v) => v,
        Err(_) => return Ok(degenerate_rep()),
    };
    let neyman = normal_test(Method::Neyman, v.tau_hat, v.v_neyman);
    let fisher = match frt_monte_carlo(&d, cfg.statistic, cfg.m, &mut rng, FrtOptions { add_one: cfg.add_one }) {
        Ok(f) => f,
        Err(_) => return Ok(degenerate_rep()),
    };
    Ok(RepOutcome {
        estimate: v.tau_hat,
        v_neyman: v.v_neyman,
        v_fisher: v.v_fisher,
        neyman_p: neyman.p_value,
        fisher_p: fisher.p_value,
        degenerate: neyman.degenerate || fisher.degenerate,
    })
}

fn pair_rep(cfg: &ScenarioConfig, pop: &MatchedPairTable, rep: usize) -> Result<RepOutcome> {
    let mut rng = rng::stream(cfg.assignment_seed(), rep as u64);
    let a = draw_pairs(pop.n_pairs(), &mut rng)?;
    let report = pair_report(&observe_pairs(pop, &a)?)?;
    let (neyman, fisher) = pair_tests(&report, PairFisherMode::Auto { m: cfg.m }, &mut rng)?;
    Ok(RepOutcome {
        estimate: report.tau_hat,
        v_neyman: report.v_neyman,
        v_fisher: report.v_fisher,
        neyman_p: neyman.p_value,
        fisher_p: fisher.p_value,
        degenerate: neyman.degenerate || fisher.degenerate,
    })
}

fn factorial_rep(cfg: &ScenarioConfig, pop: &FactorialTable, contrast: &[i8], rep: usize) -> Result<RepOutcome> {
    let mut rng = rng::stream(cfg.assignment_seed(), rep as u64);
    let a = draw_factorial(pop.k(), pop.r(), &mut rng)?;
    let obs = observe_factorial(pop, &a)?;
    let report = factorial_report(&obs, contrast)?;
    let (neyman, fisher) = factorial_tests(&report, &obs, cfg.m, &mut rng)?;
    Ok(RepOutcome {
        estimate: report.tau1_hat,
        v_neyman: report.v1_neyman,
        v_fisher: report.v1_fisher,
        neyman_p: neyman.p_value,
        fisher_p: fisher.p_value,
        degenerate: neyman.degenerate || fisher.degenerate,
    })
}

/// Run a scenario on the current rayon pool.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let pop = build_population(cfg)?;
    let contrast = match cfg.design {
        Design::Factorial { k, .. } => main_effect_contrast(k, 0),
        _ => Vec::new(),
    };
    let outcomes: Vec<RepOutcome> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| match (&pop, cfg.design) {
            (Population::Crd(t), Design::Crd { n1, .. }) => crd_rep(cfg, t, n1, rep),
            (Population::Pairs(t), _) => pair_rep(cfg, t, rep),
            (Population::Factorial(t), _) => factorial_rep(cfg, t, &contrast, rep),
            _ => unreachable!("build_population checks design and population agree"),
        })
        .collect::<Result<Vec<_>>>()?;

    let (estimand, theoretical_gap) = match (&pop, cfg.design) {
        (Population::Crd(t), Design::Crd { n, n1 }) => {
            let s = t.summarize();
            (s.tau, Some(crd_gap_formula(&s, n1, n - n1)))
        }
        (Population::Pairs(t), _) => (t.tau(), None),
        (Population::Factorial(t), Design::Factorial { k, r }) => {
            (t.factorial_effect(&contrast)?, Some(factorial_gap_formula(&t.cell_means(), k, r)?))
        }
        _ => unreachable!(),
    };

    let mut table = RejectionTable::default();
    let mut scatter = Vec::with_capacity(cfg.reps);
    let (mut sum_est, mut sum_vn, mut sum_vf) = (0.0, 0.0, 0.0);
    let mut fisher_variance_larger = 0;
    for (rep_index, o) in outcomes.iter().enumerate() {
        if o.degenerate {
            table.degenerate += 1;
            continue;
        }
        table.record(rejects(o.neyman_p, cfg.alpha), rejects(o.fisher_p, cfg.alpha));
        scatter.push(VarianceScatterRow { rep_index, v_neyman: o.v_neyman, v_fisher: o.v_fisher });
        sum_est += o.estimate;
        sum_vn += o.v_neyman;
        sum_vf += o.v_fisher;
        if o.v_fisher >= o.v_neyman {
            fisher_variance_larger += 1;
        }
    }
    let valid = table.valid() as f64;
    let summary = ScenarioSummary {
        reps: cfg.reps,
        valid_reps: table.valid(),
        degenerate: table.degenerate,
        neyman_power: table.neyman_power(),
        fisher_power: table.fisher_power(),
        estimand,
        mean_estimate: sum_est / valid,
        mean_v_neyman: sum_vn / valid,
        mean_v_fisher: sum_vf / valid,
        mean_gap: (sum_vf - sum_vn) / valid,
        theoretical_gap,
        fisher_variance_larger,
    };
    Ok(ScenarioOutcome { table, scatter, summary })
}

/// Empirical mean of `V̂(Fisher) - V̂(Neyman)` against its leading-order
/// formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub reps: usize,
    pub empirical_gap: f64,
    /// Monte Carlo standard error of `empirical_gap`.
    pub empirical_se: f64,
    pub theoretical_gap: f64,
    /// `(empirical - theoretical) / theoretical`; NaN when the formula is 0.
    pub relative_deviation: f64,
    /// `N · empirical_gap` (or `r ·` for factorial designs), for checking
    /// that a gap is of smaller order than 1/N.
    pub scaled_gap: f64,
}

/// Variance estimates only; no tests are run, so this is cheap.
pub fn verify_gap_theorem(cfg: &ScenarioConfig) -> Result<GapReport> {
    cfg.validate()?;
    let pop = build_population(cfg)?;
    let (gaps, theoretical, scale): (Vec<f64>, f64, f64) = match (&pop, cfg.design) {
        (Population::Crd(t), Design::Crd { n, n1 }) => {
            let gaps = (0..cfg.reps)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = rng::stream(cfg.assignment_seed(), rep as u64);
                    let d = observe(t, &draw_crd(n, n1, &mut rng)?)?;
                    let v = variance_report(&d)?;
                    Ok(v.v_fisher - v.v_neyman)
                })
                .collect::<Result<Vec<f64>>>()?;
            (gaps, crd_gap_formula(&t.summarize(), n1, n - n1), n as f64)
        }
        (Population::Factorial(t), Design::Factorial { k, r }) => {
            let contrast = main_effect_contrast(k, 0);
            let gaps = (0..cfg.reps)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = rng::stream(cfg.assignment_seed(), rep as u64);
                    let obs = observe_factorial(t, &draw_factorial(k, r, &mut rng)?)?;
                    let rep = factorial_report(&obs, &contrast)?;
                    Ok(rep.v1_fisher - rep.v1_neyman)
                })
                .collect::<Result<Vec<f64>>>()?;
            (gaps, factorial_gap_formula(&t.cell_means(), k, r)?, r as f64)
        }
        _ => {
            return Err(Error::InvalidParameter(
                "gap check supports completely randomized and factorial designs".into(),
            ))
        }
    };
    let m = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / m;
    let var = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (m - 1.0).max(1.0);
    Ok(GapReport {
        reps: cfg.reps,
        empirical_gap: mean,
        empirical_se: (var / m).sqrt(),
        theoretical_gap: theoretical,
        relative_deviation: if theoretical != 0.0 { (mean - theoretical) / theoretical } else { f64::NAN },
        scaled_gap: mean * scale,
    })
}

/// How the constant effect depends on N in a power sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EffectSchedule {
    /// `τ = c / √N`, shrinking local alternatives.
    Local { c: f64 },
    /// `τ` fixed for every N.
    Fixed { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub tau: f64,
    pub neyman_power: Rate,
    pub fisher_power: Rate,
    pub mean_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schedule: EffectSchedule,
    pub rows: Vec<SweepRow>,
}

/// Balanced constant-effect populations of each size in `n_grid`:
/// `Y_i(0) ~ N(0, noise_var)`, `Y_i(1) = Y_i(0) + τ_N`, N1 = N0 = N/2.
pub fn effect_sweep(
    schedule: EffectSchedule,
    n_grid: &[usize],
    noise_var: f64,
    reps: usize,
    m: usize,
    alpha: f64,
    seed: u64,
) -> Result<SweepReport> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n_grid must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for (g, &n) in n_grid.iter().enumerate() {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!("sweep sizes must be even and at least 4, got {n}")));
        }
        let tau = match schedule {
            EffectSchedule::Local { c } => c / (n as f64).sqrt(),
            EffectSchedule::Fixed { tau } => tau,
        };
        let grid_seed = derive_seed(seed, g as u64);
        let base = freeze_normal_population(n, 0.0, noise_var, 0.0, noise_var, grid_seed)?;
        let pop = PotentialTable::constant_effect(base.y0().to_vec(), tau)?;
        let cfg = ScenarioConfig {
            design: Design::Crd { n, n1: n / 2 },
            population: PopulationSpec::Table(pop),
            reps,
            m,
            alpha,
            statistic: Statistic::DiffInMeans,
            master_seed: grid_seed,
            add_one: false,
        };
        let out = run_scenario(&cfg)?;
        rows.push(SweepRow {
            n,
            tau,
            neyman_power: out.summary.neyman_power,
            fisher_power: out.summary.fisher_power,
            mean_gap: out.summary.mean_gap,
        });
    }
    Ok(SweepReport { schedule, rows })
}

/// Local-alternative sweep `τ_i = c/√N`.
pub fn local_alternative_sweep(c: f64, n_grid: &[usize], reps: usize, m: usize, seed: u64) -> Result<SweepReport> {
    if !c.is_finite() {
        return Err(Error::InvalidParameter(format!("c must be finite, got {c}")));
    }
    effect_sweep(EffectSchedule::Local { c }, n_grid, 1.0, reps, m, DEFAULT_ALPHA, seed)
}

/// Equal means with unequal variances and an unbalanced design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityConfig {
    pub n1: usize,
    pub n0: usize,
    /// Common mean Ȳ1 = Ȳ0.
    pub mean: f64,
    pub var1: f64,
    pub var0: f64,
    pub reps: usize,
    pub m: usize,
    pub alpha: f64,
    pub master_seed: u64,
}

impl HeterogeneityConfig {
    /// Ȳ1 = Ȳ0 = 0, S1² = 4 S0², N1 = 70, N0 = 30.
    pub fn standard(master_seed: u64) -> Self {
        Self {
            n1: 70,
            n0: 30,
            mean: 0.0,
            var1: 0.25,
            var0: 0.0625,
            reps: 1000,
            m: 10_000,
            alpha: DEFAULT_ALPHA,
            master_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityReport {
    pub neyman: Rate,
    pub frt_diff_in_means: Rate,
    pub frt_variance_ratio: Rate,
    pub degenerate: usize,
}

/// Rejection rates of Neyman's test and the FRT with the
/// difference-in-means and variance-ratio statistics.
///
/// The population is comonotone, `Y_i(1) - Ȳ = (S1/S0)(Y_i(0) - Ȳ)`, with
/// exactly equal means and the requested variances; equal variances give
/// the sharp null.
pub fn heterogeneity_demo(cfg: &HeterogeneityConfig) -> Result<HeterogeneityReport> {
    let n = cfg.n1 + cfg.n0;
    let pop_seed = derive_seed(cfg.master_seed, POPULATION_TAG);
    let z = freeze_normal_population(n, 0.0, 1.0, 0.0, 1.0, pop_seed)?.y0().to_vec();
    let pop = PotentialTable::sharp_null(z)?.rescaled_to_moments(cfg.mean, cfg.var1, cfg.mean, cfg.var0)?;
    let seed = derive_seed(cfg.master_seed, ASSIGNMENT_TAG);
    let decisions = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| -> Result<Option<[bool; 3]>> {
            let mut rng = rng::stream(seed, rep as u64);
            let d = observe(&pop, &draw_crd(n, cfg.n1, &mut rng)?)?;
            let v = match variance_report(&d) {
                Ok(v) if v.v_neyman > 0.0 && v.s0sq > 0.0 => v,
                _ => return Ok(None),
            };
            let neyman = normal_test(Method::Neyman, v.tau_hat, v.v_neyman);
            let diff = frt_monte_carlo(&d, Statistic::DiffInMeans, cfg.m, &mut rng, FrtOptions::default())?;
            let ratio = frt_monte_carlo(&d, Statistic::VarianceRatio, cfg.m, &mut rng, FrtOptions::default())?;
            Ok(Some([neyman.rejects(cfg.alpha), diff.rejects(cfg.alpha), ratio.rejects(cfg.alpha)]))
        })
        .collect::<Result<Vec<_>>>()?;
    let valid: Vec<[bool; 3]> = decisions.iter().flatten().copied().collect();
    let count = |i: usize| valid.iter().filter(|d| d[i]).count();
    Ok(HeterogeneityReport {
        neyman: Rate::new(count(0), valid.len()),
        frt_diff_in_means: Rate::new(count(1), valid.len()),
        frt_variance_ratio: Rate::new(count(2), valid.len()),
        degenerate: decisions.len() - valid.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalComparison {
    pub reps: usize,
    pub mean_fiducial_width: f64,
    pub mean_neyman_width: f64,
    pub fiducial_covers: usize,
    pub neyman_covers: usize,
    /// Fiducial intervals that were not a clean single interval.
    pub irregular: usize,
}

/// Fiducial and Neyman interval widths over repeated assignments of one
/// completely randomized scenario.
pub fn compare_intervals(cfg: &ScenarioConfig, level: f64) -> Result<IntervalComparison> {
    cfg.validate()?;
    let pop = match build_population(cfg)? {
        Population::Crd(t) => t,
        _ => return Err(Error::InvalidParameter("interval comparison needs a completely randomized design".into())),
    };
    let Design::Crd { n, n1 } = cfg.design else { unreachable!() };
    let tau = pop.summarize().tau;
    let rows = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(cfg.assignment_seed(), rep as u64);
            let d = observe(&pop, &draw_crd(n, n1, &mut rng)?)?;
            let ci = neyman_ci(&d, level)?;
            let fi = fiducial_interval(&d, level, cfg.m, &mut rng)?;
            Ok((ci, fi))
        })
        .collect::<Result<Vec<_>>>()?;
    let reps = rows.len() as f64;
    Ok(IntervalComparison {
        reps: rows.len(),
        mean_fiducial_width: rows.iter().map(|(_, f)| f.width()).sum::<f64>() / reps,
        mean_neyman_width: rows.iter().map(|(c, _)| c.width()).sum::<f64>() / reps,
        fiducial_covers: rows.iter().filter(|(_, f)| f.contains(tau)).count(),
        neyman_covers: rows.iter().filter(|(c, _)| c.contains(tau)).count(),
        irregular: rows.iter().filter(|(_, f)| f.status != crate::inference::IntervalStatus::Ok).count(),
    })
}

/// Complete record written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub summary: ScenarioSummary,
    pub table: RejectionTable,
}

pub fn write_rejections<W: Write>(out: W, table: &RejectionTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell", "count", "rate", "se"])?;
    let valid = table.valid();
    let cells = [
        ("keep_keep", table.keep_keep),
        ("keep_reject", table.keep_reject),
        ("reject_keep", table.reject_keep),
        ("reject_reject", table.reject_reject),
        ("neyman_reject", table.neyman_rejections()),
        ("fisher_reject", table.fisher_rejections()),
    ];
    for (name, count) in cells {
        let r = Rate::new(count, valid);
        w.write_record([name.to_string(), count.to_string(), r.rate.to_string(), r.se.to_string()])?;
    }
    w.write_record(["degenerate".to_string(), table.degenerate.to_string(), String::new(), String::new()])?;
    w.flush()?;
    Ok(())
}

pub fn write_scatter<W: Write>(out: W, rows: &[VarianceScatterRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rep_index", "v_neyman", "v_fisher"])?;
    for r in rows {
        w.write_record([r.rep_index.to_string(), r.v_neyman.to_string(), r.v_fisher.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Write `rejections.csv`, `variances.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ScenarioConfig, outcome: &ScenarioOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_rejections(fs::File::create(dir.join("rejections.csv"))?, &outcome.table)?;
    write_scatter(fs::File::create(dir.join("variances.csv"))?, &outcome.scatter)?;
    let report = ScenarioReport { config: cfg.clone(), summary: outcome.summary.clone(), table: outcome.table };
    let mut f = fs::File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, &report)?;
    f.write_all(b"\n")?;
    Ok(())
}
