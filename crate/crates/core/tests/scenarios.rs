use randinf::harness::{
    effect_sweep, heterogeneity_demo, local_alternative_sweep, run_scenario, verify_gap_theorem, write_outputs, Design,
    EffectSchedule, HeterogeneityConfig, PopulationSpec, ScenarioConfig,
};
use randinf::inference::Statistic;
use randinf::population::PotentialTable;

fn crd(n: usize, n1: usize, population: PopulationSpec, reps: usize, m: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        design: Design::Crd { n, n1 },
        population,
        reps,
        m,
        alpha: 0.05,
        statistic: Statistic::DiffInMeans,
        master_seed: seed,
        add_one: false,
    }
}

fn normal(mu1: f64, var1: f64, mu0: f64, var0: f64, exact_moments: bool) -> PopulationSpec {
    PopulationSpec::Normal { mu1, var1, mu0, var0, exact_moments }
}

#[test]
fn sharp_null_scenario_keeps_both_sizes() {
    let y: Vec<f64> = (0..60).map(|i| ((i * 37 % 60) as f64 / 7.0).sin()).collect();
    let cfg = crd(60, 30, PopulationSpec::Table(PotentialTable::sharp_null(y).unwrap()), 600, 2000, 3);
    let out = run_scenario(&cfg).unwrap();
    let bound = 0.05 + 2.0 * (0.05f64 * 0.95 / 600.0).sqrt();
    let (ny, fi) = (out.summary.neyman_power.rate, out.summary.fisher_power.rate);
    println!("sharp null sizes: neyman {ny}, fisher {fi}");
    assert!(ny <= bound && fi <= bound);
}

#[test]
fn output_files_do_not_depend_on_worker_count() {
    let cfg = crd(40, 15, normal(0.2, 1.0, 0.0, 0.5, false), 64, 3000, 17);
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let out = pool.install(|| run_scenario(&cfg).unwrap());
        let dir = tempfile::tempdir().unwrap();
        write_outputs(dir.path(), &cfg, &out).unwrap();
        ["rejections.csv", "variances.csv", "summary.json"].map(|f| std::fs::read(dir.path().join(f)).unwrap())
    };
    assert_eq!(render(1), render(4));
}

#[test]
fn balanced_table_has_no_fisher_only_rejections_when_fisher_variance_dominates() {
    let cfg = crd(60, 30, normal(0.15, 0.0625, 0.0, 0.0625, false), 300, 5000, 5);
    let out = run_scenario(&cfg).unwrap();
    let t = out.table;
    assert_eq!(t.valid() + t.degenerate, 300);
    if out.scatter.iter().all(|r| r.v_fisher >= r.v_neyman) {
        // Monte Carlo p-values can still put Fisher on the other side of the
        // cutoff; allow a sliver of noise.
        assert!(t.keep_reject <= 2, "{t:?}");
    }
    assert!(t.reject_keep >= t.keep_reject);
}

#[test]
fn balanced_gap_under_neyman_null_is_higher_order() {
    let mut scaled = Vec::new();
    for n in [100, 400, 1600] {
        let cfg = crd(n, n / 2, normal(0.0, 0.25, 0.0, 0.0625, true), 2000, 1, 9);
        let r = verify_gap_theorem(&cfg).unwrap();
        println!("N = {n}: N*gap = {} (formula {})", r.scaled_gap, r.theoretical_gap * n as f64);
        scaled.push(r.scaled_gap.abs());
    }
    // Compare with the 1/N scale of the arm variances: N * gap must vanish.
    assert!(scaled[2] < 0.01, "{scaled:?}");
}

#[test]
fn unbalanced_gap_matches_formula() {
    let cfg = crd(1000, 700, normal(0.1, 0.25, 0.0, 0.0625, false), 2000, 1, 12);
    let r = verify_gap_theorem(&cfg).unwrap();
    println!("{r:?}");
    assert!(r.relative_deviation.abs() < 0.10);
    // more units in the noisier arm: Fisher's variance is the larger one
    assert!(r.theoretical_gap > 0.0);
}

#[test]
fn factorial_gap_deviation_shrinks_with_replication() {
    let mut devs = Vec::new();
    for r in [10, 40, 160] {
        let cfg = ScenarioConfig {
            design: Design::Factorial { k: 2, r },
            population: PopulationSpec::FactorialNormal { cell_means: vec![1.0, 0.4, 0.2, -0.3], var: 1.0 },
            ..crd(4, 2, normal(0.0, 1.0, 0.0, 1.0, false), 4000, 1, 21)
        };
        let rep = verify_gap_theorem(&cfg).unwrap();
        println!("r = {r}: {rep:?}");
        devs.push(rep.relative_deviation.abs());
    }
    assert!(devs[2] < devs[0], "{devs:?}");
}

#[test]
fn null_local_sweep_has_nominal_power() {
    let sweep = local_alternative_sweep(0.0, &[20, 60, 120], 400, 2000, 4).unwrap();
    for row in &sweep.rows {
        println!("{row:?}");
        for p in [row.neyman_power, row.fisher_power] {
            assert!((p.rate - 0.05).abs() <= 3.0 * (0.05f64 * 0.95 / 400.0).sqrt(), "{row:?}");
        }
    }
}

#[test]
fn fixed_effect_sweep_favours_neyman() {
    let sweep = effect_sweep(EffectSchedule::Fixed { tau: 0.3 }, &[20, 60, 120], 1.0, 400, 2000, 0.05, 6).unwrap();
    for row in &sweep.rows {
        println!("{row:?}");
        let noise = 2.0 * (row.neyman_power.se.powi(2) + row.fisher_power.se.powi(2)).sqrt();
        assert!(row.neyman_power.rate + noise >= row.fisher_power.rate, "{row:?}");
    }
}

#[test]
fn local_sweep_powers_converge() {
    let sweep = local_alternative_sweep(2.0, &[10, 40, 160], 600, 2000, 8).unwrap();
    let gaps: Vec<f64> = sweep.rows.iter().map(|r| (r.neyman_power.rate - r.fisher_power.rate).abs()).collect();
    for row in &sweep.rows {
        println!("{row:?}");
    }
    assert!(gaps[2] <= gaps[0], "{gaps:?}");
}

#[test]
fn heterogeneity_with_equal_variances_is_nominal() {
    let cfg =
        HeterogeneityConfig { var1: 0.0625, var0: 0.0625, reps: 400, m: 2000, ..HeterogeneityConfig::standard(2) };
    let r = heterogeneity_demo(&cfg).unwrap();
    println!("{r:?}");
    let tol = 3.0 * (0.05f64 * 0.95 / 400.0).sqrt();
    for rate in [r.neyman, r.frt_diff_in_means, r.frt_variance_ratio] {
        assert!((rate.rate - 0.05).abs() <= tol, "{r:?}");
    }
}

#[test]
fn factorial_scenario_shows_neyman_advantage() {
    let cfg = ScenarioConfig {
        design: Design::Factorial { k: 2, r: 15 },
        population: PopulationSpec::FactorialNormal { cell_means: vec![0.8, 0.6, 0.1, 0.0], var: 1.0 },
        ..crd(4, 2, normal(0.0, 1.0, 0.0, 1.0, false), 400, 2000, 13)
    };
    let out = run_scenario(&cfg).unwrap();
    println!("{:?}", out.table);
    assert!(out.table.neyman_rejections() >= out.table.fisher_rejections());
    assert!(out.summary.mean_gap > 0.0);
}

#[test]
fn paired_scenario_runs_exhaustively() {
    let cfg = ScenarioConfig {
        design: Design::Pairs { n_pairs: 12 },
        population: PopulationSpec::NormalPairs { mu1: 0.6, var1: 0.3, mu0: 0.0, var0: 0.3, pair_var: 2.0 },
        ..crd(4, 2, normal(0.0, 1.0, 0.0, 1.0, false), 200, 2000, 14)
    };
    let out = run_scenario(&cfg).unwrap();
    println!("{:?}", out.table);
    assert_eq!(out.table.valid() + out.table.degenerate, 200);
    assert!(out.table.neyman_rejections() >= out.table.fisher_rejections());
}
