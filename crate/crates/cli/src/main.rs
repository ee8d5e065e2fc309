//! `randinf` command-line tool.
//!
//! Exit codes:
//! - 0: success
//! - 1: `replicate-tables` ran but a paradox signature check failed
//! - 2: bad input (parse error, bad flag value, unreadable file)
//! - 3: degenerate data (an arm too small, zero variance)

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use randinf::design::DEFAULT_ENUMERATION_CAP;
use randinf::estimators::{binary_report, variance_report, BinaryReport, VarianceReport};
use randinf::harness::{self, Design, GapReport, PopulationSpec, RejectionTable, ScenarioConfig, ScenarioOutcome};
use randinf::inference::{
    self, fiducial_interval_exact, frt_exact, frt_monte_carlo_seeded, neyman_ci, normal_test, FrtOptions,
    IntervalResult, Method, ShiftFamily, Statistic, TestResult, DEFAULT_ALPHA, DEFAULT_DRAWS,
};
use randinf::io as rio;
use randinf::population::ObservedData;
use randinf::regression::{ols_fit, score_test, wald_hw_test};
use randinf::{combinatorics, rng, Error};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "randinf", version, about = "Neymanian and Fisherian randomization inference")]
struct Cli {
    /// Maximum worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test and estimate on one `yobs,t` dataset.
    Analyze(AnalyzeArgs),
    /// Run a simulation scenario on a frozen population.
    Simulate(SimulateArgs),
    /// Run the balanced and unbalanced rejection-table examples.
    ReplicateTables(ReplicateArgs),
    /// Compare the mean variance gap with its leading-order formula.
    GapCheck(GapArgs),
    /// Neyman and fiducial intervals for one `yobs,t` dataset.
    Fiducial(FiducialArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum StatArg {
    DiffInMeans,
    VarianceRatio,
}

impl From<StatArg> for Statistic {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::DiffInMeans => Statistic::DiffInMeans,
            StatArg::VarianceRatio => Statistic::VarianceRatio,
        }
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
    /// Write machine-readable JSON to stdout instead of files.
    #[arg(long)]
    stdout: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// CSV with header `yobs,t`.
    input: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
    /// Monte Carlo draws when exact enumeration is too large.
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = StatArg::DiffInMeans)]
    statistic: StatArg,
    /// Interval level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Largest number of assignments to enumerate for exact tests.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    exact_cap: u128,
    /// Outcomes are 0/1: also report pooled and unpooled variances.
    #[arg(long)]
    binary: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum DesignArg {
    Crd,
    Pairs,
    Factorial,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// JSON scenario config. Flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, required = true)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    design: Option<DesignArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n_pairs: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    statistic: Option<StatArg>,
    #[arg(long, allow_negative_numbers = true)]
    mu1: Option<f64>,
    #[arg(long)]
    var1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu0: Option<f64>,
    #[arg(long)]
    var0: Option<f64>,
    /// Shared pair-effect variance for matched pairs.
    #[arg(long)]
    pair_var: Option<f64>,
    /// Factorial cell means in canonical order, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    cell_means: Option<Vec<f64>>,
    /// Potential-outcome table: `y1,y0`, pair or factorial layout.
    #[arg(long)]
    population: Option<PathBuf>,
    /// JSON sidecar (`k`, `r`, optional `column_order`) for a factorial table.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReplicateArgs {
    /// Which example to run; both when omitted.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    example: Option<u8>,
    #[arg(long, required = true)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct GapArgs {
    #[arg(long, value_enum, default_value_t = DesignArg::Crd)]
    design: DesignArg,
    #[arg(long, required = true)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 700)]
    n1: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 160)]
    r: usize,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    mu1: f64,
    #[arg(long, default_value_t = 0.25)]
    var1: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu0: f64,
    #[arg(long, default_value_t = 0.0625)]
    var0: f64,
    /// Factorial cell means in canonical order.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    cell_means: Option<Vec<f64>>,
    /// Factorial within-cell variance.
    #[arg(long, default_value_t = 1.0)]
    var: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct FiducialArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    exact_cap: u128,
    #[command(flatten)]
    output: OutputArgs,
}

enum Failure {
    Signature(String),
    Input(String),
    Degenerate(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Signature(_) => 1,
            Failure::Input(_) => 2,
            Failure::Degenerate(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Signature(m) | Failure::Input(m) | Failure::Degenerate(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InsufficientArm { .. } | Error::Degenerate(_) | Error::DegeneratePopulation(_) => {
                Failure::Degenerate(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Analyze(a) => analyze(&a),
        Command::Simulate(a) => simulate(&a),
        Command::ReplicateTables(a) => replicate_tables(&a),
        Command::GapCheck(a) => gap_check(&a),
        Command::Fiducial(a) => fiducial(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(fs::File) -> randinf::Result<()>) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    f(fs::File::create(&path)?)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::Input(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn check_level(level: f64) -> CliResult<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Failure::Input(format!("--level must be in (0, 1), got {level}")))
    }
}

fn load_observed(path: &Path) -> CliResult<ObservedData> {
    let d = rio::read_observed(path)?;
    for (arm, size) in [("treatment", d.n1()), ("control", d.n0())] {
        if size < 2 {
            return Err(Failure::Degenerate(format!("{arm} arm has {size} units, need at least 2")));
        }
    }
    Ok(d)
}

fn fits_exact(d: &ObservedData, cap: u128) -> bool {
    combinatorics::binomial(d.n() as u64, d.n1() as u64).is_some_and(|c| c <= cap)
}

fn frt(d: &ObservedData, statistic: Statistic, m: usize, seed: u64, cap: u128) -> CliResult<TestResult> {
    Ok(if fits_exact(d, cap) {
        frt_exact(d, statistic, cap)?
    } else {
        frt_monte_carlo_seeded(d, statistic, m, seed, FrtOptions::default())?
    })
}

fn intervals(d: &ObservedData, level: f64, m: usize, seed: u64, cap: u128) -> CliResult<Vec<IntervalResult>> {
    let ci = neyman_ci(d, level)?;
    let fid = if fits_exact(d, cap) {
        fiducial_interval_exact(d, level, cap)?
    } else {
        let family = ShiftFamily::monte_carlo(d, m, &mut rng::stream(seed, 1), false)?;
        inference::invert_shift_family(&family, d, level)?
    };
    Ok(vec![ci, fid])
}

#[derive(Serialize)]
struct BinaryRow {
    variance: &'static str,
    value: f64,
    z: f64,
    p_value: f64,
}

fn binary_rows(b: &BinaryReport) -> Vec<BinaryRow> {
    let diff = b.p1_hat - b.p0_hat;
    [("unpooled", b.unpooled), ("pooled", b.pooled)]
        .into_iter()
        .map(|(variance, value)| {
            let t = normal_test(Method::Neyman, diff, value);
            BinaryRow { variance, value, z: t.statistic, p_value: t.p_value }
        })
        .collect()
}

fn write_binary(out: fs::File, rows: &[BinaryRow]) -> randinf::Result<()> {
    let mut w = io::BufWriter::new(out);
    writeln!(w, "variance,value,z,p_value")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.variance, r.value, r.z, r.p_value)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeOutput {
    variance: VarianceReport,
    tests: Vec<TestResult>,
    intervals: Vec<IntervalResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    binary: Option<Vec<BinaryRow>>,
}

fn analyze(a: &AnalyzeArgs) -> CliResult<()> {
    check_level(a.level)?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Failure::Input(format!("--alpha must be in (0, 1), got {}", a.alpha)));
    }
    let d = load_observed(&a.input)?;
    let v = variance_report(&d)?;
    if v.v_neyman == 0.0 {
        return Err(Failure::Degenerate("both arms are constant, so the Neyman variance is zero".into()));
    }
    let fit = ols_fit(&d)?;
    let tests = vec![
        inference::neyman_test(&d)?,
        inference::fisher_normal_test(&d)?,
        frt(&d, a.statistic.into(), a.m, a.seed, a.exact_cap)?,
        wald_hw_test(&fit, &d)?,
        score_test(&d)?,
    ];
    let ivs = intervals(&d, a.level, a.m, a.seed, a.exact_cap)?;
    let binary = if a.binary { Some(binary_rows(&binary_report(&d)?)) } else { None };
    for t in &tests {
        let verdict = if t.rejects(a.alpha) { "reject" } else { "keep" };
        eprintln!("{:<14} p = {:<10.6} {verdict} at {}", t.method.as_str(), t.p_value, a.alpha);
    }
    if a.output.stdout {
        return print_json(&AnalyzeOutput { variance: v, tests, intervals: ivs, binary });
    }
    let dir = &a.output.out;
    write_file(dir, "tests.csv", |f| rio::write_test_results(f, &tests))?;
    write_file(dir, "variances.csv", |f| rio::write_variance_reports(f, &[v]))?;
    write_file(dir, "intervals.csv", |f| rio::write_intervals(f, &ivs))?;
    if let Some(rows) = binary {
        write_file(dir, "binary.csv", |f| write_binary(f, &rows))?;
    }
    Ok(())
}

fn fiducial(a: &FiducialArgs) -> CliResult<()> {
    check_level(a.level)?;
    let d = load_observed(&a.input)?;
    let ivs = intervals(&d, a.level, a.m, a.seed, a.exact_cap)?;
    for iv in &ivs {
        eprintln!("{:<10} [{}, {}] {:?}", iv.method.as_str(), iv.lower, iv.upper, iv.status);
    }
    if a.output.stdout {
        return print_json(&ivs);
    }
    write_file(&a.output.out, "intervals.csv", |f| rio::write_intervals(f, &ivs))
}

fn scenario_from_args(a: &SimulateArgs) -> CliResult<ScenarioConfig> {
    let seed = a.seed.expect("clap enforces --seed");
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str::<ScenarioConfig>(&text)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
        }
        None => ScenarioConfig::example_balanced(seed),
    };
    cfg.master_seed = seed;
    if let Some(v) = a.reps {
        cfg.reps = v;
    }
    if let Some(v) = a.m {
        cfg.m = v;
    }
    if let Some(v) = a.alpha {
        cfg.alpha = v;
    }
    if let Some(s) = a.statistic {
        cfg.statistic = s.into();
    }

    let design = a.design.unwrap_or(match cfg.design {
        Design::Crd { .. } => DesignArg::Crd,
        Design::Pairs { .. } => DesignArg::Pairs,
        Design::Factorial { .. } => DesignArg::Factorial,
    });
    cfg.design = match (design, cfg.design) {
        (DesignArg::Crd, Design::Crd { n, n1 }) => Design::Crd { n: a.n.unwrap_or(n), n1: a.n1.unwrap_or(n1) },
        (DesignArg::Crd, _) => Design::Crd { n: need(a.n, "--n")?, n1: need(a.n1, "--n1")? },
        (DesignArg::Pairs, Design::Pairs { n_pairs }) => Design::Pairs { n_pairs: a.n_pairs.unwrap_or(n_pairs) },
        (DesignArg::Pairs, _) => Design::Pairs { n_pairs: need(a.n_pairs, "--n-pairs")? },
        (DesignArg::Factorial, Design::Factorial { k, r }) => {
            Design::Factorial { k: a.k.unwrap_or(k), r: a.r.unwrap_or(r) }
        }
        (DesignArg::Factorial, _) => Design::Factorial { k: need(a.k, "--k")?, r: need(a.r, "--r")? },
    };

    if let Some(path) = &a.population {
        cfg.population = match cfg.design {
            Design::Crd { .. } => PopulationSpec::Table(rio::read_potential_table(path)?),
            Design::Pairs { .. } => PopulationSpec::PairTable(rio::read_pair_table(path)?),
            Design::Factorial { .. } => {
                let sidecar = a
                    .sidecar
                    .as_ref()
                    .ok_or_else(|| Failure::Input("--population for a factorial design needs --sidecar".into()))?;
                PopulationSpec::FactorialTable(rio::read_factorial_table(path, sidecar)?)
            }
        };
        return Ok(cfg);
    }

    cfg.population = match (cfg.design, cfg.population.clone()) {
        (Design::Factorial { .. }, PopulationSpec::FactorialNormal { cell_means, var }) => {
            PopulationSpec::FactorialNormal {
                cell_means: a.cell_means.clone().unwrap_or(cell_means),
                var: a.var0.unwrap_or(var),
            }
        }
        (Design::Factorial { k, .. }, _) => PopulationSpec::FactorialNormal {
            cell_means: a.cell_means.clone().unwrap_or_else(|| vec![0.0; 1 << k]),
            var: a.var0.unwrap_or(1.0),
        },
        (design, p) => {
            let (mu1, var1, mu0, var0, exact, pv) = match p {
                PopulationSpec::Normal { mu1, var1, mu0, var0, exact_moments } => {
                    (mu1, var1, mu0, var0, exact_moments, 0.0)
                }
                PopulationSpec::NormalPairs { mu1, var1, mu0, var0, pair_var } => {
                    (mu1, var1, mu0, var0, false, pair_var)
                }
                table => return Ok(ScenarioConfig { population: table, ..cfg }),
            };
            let (mu1, var1) = (a.mu1.unwrap_or(mu1), a.var1.unwrap_or(var1));
            let (mu0, var0) = (a.mu0.unwrap_or(mu0), a.var0.unwrap_or(var0));
            match design {
                Design::Pairs { .. } => {
                    PopulationSpec::NormalPairs { mu1, var1, mu0, var0, pair_var: a.pair_var.unwrap_or(pv) }
                }
                _ => PopulationSpec::Normal { mu1, var1, mu0, var0, exact_moments: exact },
            }
        }
    };
    Ok(cfg)
}

fn need<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| Failure::Input(format!("{flag} is required for this design")))
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    config: &'a ScenarioConfig,
    summary: &'a harness::ScenarioSummary,
    table: &'a RejectionTable,
    variances: &'a [harness::VarianceScatterRow],
}

fn report_table(label: &str, t: &RejectionTable) {
    let (ny, fi) = (t.neyman_power(), t.fisher_power());
    eprintln!("{label}");
    eprintln!("                 Fisher keep  Fisher reject");
    eprintln!("  Neyman keep    {:>11}  {:>13}", t.keep_keep, t.keep_reject);
    eprintln!("  Neyman reject  {:>11}  {:>13}", t.reject_keep, t.reject_reject);
    eprintln!(
        "  power: Neyman {:.3} (se {:.3}), Fisher {:.3} (se {:.3}); degenerate {}",
        ny.rate, ny.se, fi.rate, fi.se, t.degenerate
    );
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let cfg = scenario_from_args(a)?;
    let out = harness::run_scenario(&cfg)?;
    report_table("rejections", &out.table);
    emit_scenario(&a.output, &a.output.out, &cfg, &out)
}

fn emit_scenario(output: &OutputArgs, dir: &Path, cfg: &ScenarioConfig, out: &ScenarioOutcome) -> CliResult<()> {
    if output.stdout {
        return print_json(&SimulateOutput {
            config: cfg,
            summary: &out.summary,
            table: &out.table,
            variances: &out.scatter,
        });
    }
    harness::write_outputs(dir, cfg, out)?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

/// Qualitative signature of each example: which test wins and by how much.
fn signature(example: u8, t: &RejectionTable, alpha: f64) -> Vec<(String, bool)> {
    let (ny, fi) = (t.neyman_power().rate, t.fisher_power().rate);
    match example {
        1 => vec![
            (format!("Fisher rejects while Neyman keeps at most 2 times (got {})", t.keep_reject), t.keep_reject <= 2),
            (format!("Neyman rejects at least as often as Fisher ({ny:.3} vs {fi:.3})"), ny >= fi),
        ],
        _ => vec![
            (format!("Fisher power below alpha ({fi:.3} < {alpha})"), fi < alpha),
            (format!("Neyman power above Fisher power ({ny:.3} > {fi:.3})"), ny > fi),
        ],
    }
}

#[derive(Serialize)]
struct ReplicateEntry {
    example: u8,
    config: ScenarioConfig,
    table: RejectionTable,
    summary: harness::ScenarioSummary,
    checks: Vec<(String, bool)>,
}

fn replicate_tables(a: &ReplicateArgs) -> CliResult<()> {
    let seed = a.seed.expect("clap enforces --seed");
    let examples: Vec<u8> = a.example.map_or(vec![1, 2], |e| vec![e]);
    let mut entries = Vec::new();
    let mut all_ok = true;
    for ex in examples {
        let mut cfg =
            if ex == 1 { ScenarioConfig::example_balanced(seed) } else { ScenarioConfig::example_unbalanced(seed) };
        if let Some(r) = a.reps {
            cfg.reps = r;
        }
        if let Some(m) = a.m {
            cfg.m = m;
        }
        let out = harness::run_scenario(&cfg)?;
        report_table(
            &format!(
                "example {ex} (N = 100, N1 = {})",
                match cfg.design {
                    Design::Crd { n1, .. } => n1,
                    _ => 0,
                }
            ),
            &out.table,
        );
        let checks = signature(ex, &out.table, cfg.alpha);
        for (label, ok) in &checks {
            eprintln!("  [{}] {label}", if *ok { "pass" } else { "FAIL" });
            all_ok &= ok;
        }
        if !a.output.stdout {
            harness::write_outputs(&a.output.out.join(format!("example{ex}")), &cfg, &out)?;
        }
        entries.push(ReplicateEntry { example: ex, config: cfg, table: out.table, summary: out.summary, checks });
    }
    if a.output.stdout {
        print_json(&entries)?;
    } else {
        eprintln!("wrote {}", a.output.out.display());
    }
    if all_ok {
        Ok(())
    } else {
        Err(Failure::Signature("paradox signature check failed".into()))
    }
}

fn gap_check(a: &GapArgs) -> CliResult<()> {
    let seed = a.seed.expect("clap enforces --seed");
    let (design, population) = match a.design {
        DesignArg::Crd => (
            Design::Crd { n: a.n, n1: a.n1 },
            PopulationSpec::Normal { mu1: a.mu1, var1: a.var1, mu0: a.mu0, var0: a.var0, exact_moments: false },
        ),
        DesignArg::Factorial => {
            let cell_means = a
                .cell_means
                .clone()
                .ok_or_else(|| Failure::Input("--cell-means is required for a factorial gap check".into()))?;
            (Design::Factorial { k: a.k, r: a.r }, PopulationSpec::FactorialNormal { cell_means, var: a.var })
        }
        DesignArg::Pairs => return Err(Failure::Input("gap-check supports crd and factorial designs".into())),
    };
    let cfg = ScenarioConfig {
        design,
        population,
        reps: a.reps,
        m: 1,
        alpha: DEFAULT_ALPHA,
        statistic: Statistic::DiffInMeans,
        master_seed: seed,
        add_one: false,
    };
    let report: GapReport = harness::verify_gap_theorem(&cfg)?;
    eprintln!(
        "empirical gap {:.6e} (se {:.2e}), formula {:.6e}, relative deviation {:+.4}",
        report.empirical_gap, report.empirical_se, report.theoretical_gap, report.relative_deviation
    );
    if a.output.stdout {
        return print_json(&report);
    }
    write_file(&a.output.out, "gap.json", |mut f| {
        serde_json::to_writer_pretty(&mut f, &report)?;
        f.write_all(b"\n")?;
        Ok(())
    })
}
