//! Acceptance suite: one test per gate, each printing a PASS line with its
//! measured numbers. The desk-scale pipeline artifacts are built once and
//! shared across the heavy tests.
//!
//! Run with `cargo test -p mixcert-cli --test acceptance -- --nocapture`.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use tempfile::TempDir;

use mixcert_cli::artifacts::read_dashboard_csv;
use mixcert_cli::commands;
use mixcert_cli::config::RunConfig;
use mixcert_core::certify::{required_samples, CertificationConfig};
use mixcert_core::dynamics::{
    compute_d_with, ControlInput, NominalParameterSet, StateVector,
};
use mixcert_core::feedback::{
    chemo_rate, feedback, immuno_vaccine_rate, sufficient_decrease, ControlLawConfig,
    ControlParameters,
};
use mixcert_core::forest::{fit_classifier, fit_regressor, ForestConfig, FeatureRule};
use mixcert_core::protocol::integrate_interval;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn nominal_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/nominal_params.json")
}

fn nominal() -> NominalParameterSet {
    NominalParameterSet::load(&nominal_path()).expect("nominal parameter file")
}

fn desk_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.nominal_params = nominal_path();
    cfg.seed = 2026;
    cfg.sampling.per_level = 1000; // 7 levels x 1000 rows
    cfg.forest.n_trees = 100;
    cfg.forest.max_leaves = 2000;
    cfg.certification.scenario_count = Some(386);
    cfg.dashboard.n_tumor = 10;
    cfg.dashboard.n_lymphocytes = 10;
    cfg.dashboard.zetas = vec![0.0, 0.2, 0.4];
    cfg.validate.loops_per_cell = 50;
    cfg.validate.max_cells = 24;
    cfg
}

struct Fixture {
    _dir: TempDir,
    root: PathBuf,
    cfg: RunConfig,
    pipeline_secs: f64,
    dashboard_secs: f64,
}

static FIXTURE: OnceLock<Fixture> = OnceLock::new();

fn fixture() -> &'static Fixture {
    FIXTURE.get_or_init(|| {
        let dir = TempDir::new().expect("tempdir");
        let root = dir.path().to_path_buf();
        let cfg = desk_config();
        let started = Instant::now();
        commands::generate::run(&cfg, &root).expect("generate");
        commands::train::run(&cfg, &root, None).expect("train");
        commands::sensitivity::run(&cfg, &root, None, None).expect("sensitivity");
        let pipeline_secs = started.elapsed().as_secs_f64();
        let started = Instant::now();
        commands::dashboard::run(&cfg, &root, None).expect("dashboard");
        let dashboard_secs = started.elapsed().as_secs_f64();
        Fixture { _dir: dir, root, cfg, pipeline_secs, dashboard_secs }
    })
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("read json")).expect("parse json")
}

#[test]
fn analytic_ode_oracles() {
    let started = Instant::now();
    let p = *nominal().params();
    let h = 0.005;

    // Chemotherapy decay against the closed form over 7 days.
    let m0 = 3.7;
    let x = StateVector::new(0.0, 0.0, 0.0, 0.0, m0, 0.0);
    let end = integrate_interval(&x, &ControlInput::zero(), &p, 7.0, h, 0.0).unwrap().state;
    let expected = m0 * (-p.gamma * 7.0).exp();
    let decay_err = ((end.chemo - expected) / expected).abs();
    assert!(decay_err <= 1e-6, "decay error {decay_err}");

    // Drug-free equilibrium drift over 7 days.
    let c_star = p.alpha / p.beta;
    let n_star = p.e * c_star / p.f;
    let x = StateVector::new(0.0, n_star, 0.0, c_star, 0.0, 0.0);
    let end = integrate_interval(&x, &ControlInput::zero(), &p, 7.0, h, 0.0).unwrap().state;
    let drift_c = ((end.circulating - c_star) / c_star).abs();
    let drift_n = ((end.nk - n_star) / n_star).abs();
    assert!(drift_c <= 1e-6 && drift_n <= 1e-6, "drift C {drift_c}, N {drift_n}");

    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 1.0, "runtime {secs:.3} s");
    println!(
        "[acceptance] analytic ODE oracles: PASS (decay err {decay_err:.2e}, drift {drift_c:.2e}/{drift_n:.2e}, {secs:.3} s)"
    );
}

#[test]
fn feedback_property_suite() {
    let started = Instant::now();
    let nom = nominal();
    let cfg = ControlLawConfig::from_nominal(&nom);
    let mut rng = ChaCha8Rng::seed_from_u64(424242);
    let mut fired = [0usize; 4]; // cutoff, decrease, lymphocyte band, kill ceiling
    for i in 0..100_000usize {
        let ctrl = ControlParameters {
            t_stop: 10f64.powf(1.0 + 2.0 * rng.random::<f64>()),
            r: 10f64.powf(-1.0 + 2.0 * rng.random::<f64>()),
            mu_c: 10f64.powf(-rng.random::<f64>()),
            beta_c: 1.05 + 2.95 * rng.random::<f64>(),
            c_d: 0.8 + 0.7 * rng.random::<f64>(),
            kappa: 0.2 + 0.7 * rng.random::<f64>(),
            t_s: [0.5, 1.0, 2.0][i % 3],
        };
        // Wide state coverage, including tiny tumors below the cutoff and
        // saturated kill terms.
        let x = StateVector::new(
            10f64.powf(-1.0 + 10.0 * rng.random::<f64>()),
            10f64.powf(-3.0 + 6.0 * rng.random::<f64>()),
            10f64.powf(-3.0 + 12.0 * rng.random::<f64>()),
            10f64.powf(10.3 + 0.8 * rng.random::<f64>()),
            rng.random::<f64>() * 5.0,
            rng.random::<f64>() * 2e4,
        );
        let u = feedback(&x, &ctrl, &cfg, &nom);

        // Saturation bounds, always.
        assert!((0.0..=cfg.vbar_chemo).contains(&u.chemo_rate), "v_M {u:?}");
        assert!((0.0..=cfg.vbar_immuno).contains(&u.immuno_rate), "v_I {u:?}");
        assert!((0.0..=cfg.vbar_vaccine).contains(&u.vaccine_rate), "v_L {u:?}");

        // Chemo gates.
        let decrease = sufficient_decrease(&x, ctrl.r, &nom);
        if x.tumor <= ctrl.t_stop {
            fired[0] += 1;
            assert_eq!(u.chemo_rate, 0.0);
        }
        if decrease {
            fired[1] += 1;
            assert_eq!(u.chemo_rate, 0.0);
            assert_eq!((u.immuno_rate, u.vaccine_rate), (0.0, 0.0));
        }
        if x.circulating <= ctrl.beta_c * cfg.c_min {
            fired[2] += 1;
            assert_eq!(u.chemo_rate, 0.0);
        }
        // Kill-term ceiling.
        let d_now = compute_d_with(x.tumor, x.cd8, cfg.d_nom, cfg.ell_nom, cfg.s_nom);
        if d_now >= ctrl.c_d * cfg.d_nom {
            fired[3] += 1;
            assert_eq!((u.immuno_rate, u.vaccine_rate), (0.0, 0.0));
        }
        // Spot-check the assembled law against its parts.
        if i % 1000 == 0 {
            assert_eq!(u.chemo_rate, chemo_rate(&x, &ctrl, &cfg, &nom));
            assert_eq!(
                (u.immuno_rate, u.vaccine_rate),
                immuno_vaccine_rate(&x, &ctrl, &cfg, &nom)
            );
        }
    }
    // Every gate must actually have been exercised.
    assert!(fired.iter().all(|c| *c > 100), "gate firings {fired:?}");
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 5.0, "runtime {secs:.3} s");
    println!(
        "[acceptance] feedback property suite: PASS (100000 draws, zero violations, gates fired {fired:?}, {secs:.3} s)"
    );
}

#[test]
fn forest_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(9001);

    // A single unlimited tree memorizes duplicate-free training data.
    let x: Vec<Vec<f64>> = (0..300)
        .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
        .collect();
    let y: Vec<bool> = (0..300).map(|_| rng.random::<f64>() > 0.5).collect();
    let memorizer_cfg = ForestConfig {
        n_trees: 1,
        max_leaves: usize::MAX,
        feature_rule: FeatureRule::All,
        bootstrap: false,
        seed: 0,
    };
    let names: Vec<String> = (0..4).map(|i| format!("f{i}")).collect();
    let memorizer = fit_classifier(&x, &y, &names, &memorizer_cfg).unwrap();
    for (row, label) in x.iter().zip(y.iter()) {
        assert_eq!(memorizer.predict_class(row).unwrap(), *label);
    }

    // One relevant feature among noise dominates the importances.
    let x2: Vec<Vec<f64>> = (0..600)
        .map(|_| (0..6).map(|_| rng.random::<f64>()).collect())
        .collect();
    let y2: Vec<bool> = x2.iter().map(|r| r[2] > 0.5).collect();
    let names6: Vec<String> = (0..6).map(|i| format!("f{i}")).collect();
    let relevant =
        fit_classifier(&x2, &y2, &names6, &ForestConfig::classifier(33)).unwrap();
    assert!(
        relevant.importances[2] > 0.8,
        "importances {:?}",
        relevant.importances
    );

    // Importances sum to one on every fitted model here.
    let y3: Vec<f64> = x2.iter().map(|r| r[0] + r[5]).collect();
    let regressor = fit_regressor(&x2, &y3, &names6, &ForestConfig::regressor(44)).unwrap();
    for (label, model) in
        [("memorizer", &memorizer), ("classifier", &relevant), ("regressor", &regressor)]
    {
        let sum: f64 = model.importances.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9, "{label} importance sum {sum}");
    }
    println!(
        "[acceptance] forest oracles: PASS (memorization exact, relevant-feature importance {:.3}, sums within 1e-9)",
        relevant.importances[2]
    );
}

#[test]
fn certification_formula() {
    let started = Instant::now();
    let cert = |eta: f64, m: u64, n_theta: usize| CertificationConfig {
        eta,
        delta: 1e-3,
        accepted_failures: m,
        n_theta,
    };
    assert_eq!(required_samples(&cert(0.1, 1, 1)).unwrap(), 117);
    assert_eq!(required_samples(&cert(0.1, 0, 1)).unwrap(), 70);
    assert_eq!(required_samples(&cert(0.05, 1, 81)).unwrap(), 342);

    let mut combos = 0;
    for eta in [0.1, 0.05, 0.02, 0.01, 0.001] {
        for m in [0u64, 1, 2, 5, 10] {
            for n_theta in [1usize, 5, 10, 100, 1000] {
                combos += 1;
                let n = required_samples(&cert(eta, m, n_theta)).unwrap();
                assert!(required_samples(&cert(eta, m + 1, n_theta)).unwrap() >= n);
                assert!(required_samples(&cert(eta, m, n_theta * 3)).unwrap() >= n);
                assert!(required_samples(&cert(eta / 2.0, m, n_theta)).unwrap() >= n);
            }
        }
    }
    assert!(combos >= 100);

    // The deviation from the published table is emitted side by side.
    let dir = TempDir::new().unwrap();
    let mut cfg = desk_config();
    cfg.certification.scenario_count = None;
    commands::certify::run(&cfg, dir.path()).unwrap();
    let table =
        std::fs::read_to_string(dir.path().join("certify").join("sample_sizes.csv")).unwrap();
    assert!(table.contains("0.1,0.001,1,1,117,132"), "117 vs 132 row missing:\n{table}");
    assert!(table.contains("0.05,0.001,1,81,342,386"), "342 vs 386 row missing:\n{table}");

    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 1.0, "runtime {secs:.3} s");
    println!(
        "[acceptance] certification formula: PASS (117/70/342 exact, {combos} monotonicity combos, table deviation emitted, {secs:.3} s)"
    );
}

#[test]
fn desk_scale_pipeline() {
    let fx = fixture();
    let metrics = read_json(&fx.root.join("train").join("metrics.json"));

    // (a) classifiers beat the majority baseline by at least 10 points.
    let mut accuracies = Vec::new();
    for model in ["f_t", "f_h"] {
        let acc = metrics[model]["metrics"]["accuracy"].as_f64().unwrap();
        let majority = metrics[model]["majority_rate"].as_f64().unwrap();
        assert!(
            acc >= majority + 0.10,
            "{model}: accuracy {acc:.3} vs majority {majority:.3}"
        );
        accuracies.push((model, acc, majority));
    }

    // (b) reduced-feature refits lose at most 2 accuracy points.
    let report = read_json(&fx.root.join("sensitivity").join("report.json"));
    let mut deltas = Vec::new();
    for part in ["tumor", "health"] {
        let delta = report[part]["delta"]["accuracy"].as_f64().unwrap();
        assert!(delta >= -0.02, "{part} reduced-refit accuracy delta {delta:.4}");
        deltas.push((part, delta));
    }

    // (c) the state matching each label leads its classifier's ranking.
    let top2 = |part: &str| -> Vec<String> {
        (0..2)
            .map(|i| report[part]["ranked"][i]["name"].as_str().unwrap().to_string())
            .collect()
    };
    let tumor_top = top2("tumor");
    let health_top = top2("health");
    assert!(tumor_top.contains(&"x1".to_string()), "tumor top-2 {tumor_top:?}");
    assert!(health_top.contains(&"x4".to_string()), "health top-2 {health_top:?}");

    println!(
        "[acceptance] desk-scale pipeline: PASS (accuracies {:?}, refit deltas {:?}, top-2 {:?}/{:?}, generate+train+sensitivity {:.1} s; target < 600 s)",
        accuracies, deltas, tumor_top, health_top, fx.pipeline_secs
    );
}

#[test]
fn dashboard_monotonicity() {
    let fx = fixture();
    let cells = read_dashboard_csv(&fx.root.join("dashboard").join("dashboard.csv")).unwrap();
    let mut counts = Vec::new();
    for zeta in &fx.cfg.dashboard.zetas {
        let feasible = cells.iter().filter(|c| c.zeta == *zeta && c.feasible).count();
        counts.push((*zeta, feasible));
    }
    for pair in counts.windows(2) {
        let (z_lo, n_lo) = pair[0];
        let (z_hi, n_hi) = pair[1];
        assert!(
            n_hi <= n_lo + 1,
            "feasible cells grew with uncertainty: zeta {z_lo} -> {n_lo}, zeta {z_hi} -> {n_hi}"
        );
    }
    assert!(
        fx.dashboard_secs < 300.0,
        "dashboard runtime {:.1} s exceeds 5 min",
        fx.dashboard_secs
    );
    println!(
        "[acceptance] dashboard monotonicity: PASS (feasible counts {counts:?}, {:.1} s)",
        fx.dashboard_secs
    );
}

#[test]
fn surrogate_simulation_cross_check() {
    let fx = fixture();
    commands::validate::run(&fx.cfg, &fx.root, None).expect("validate");
    let summary = read_json(&fx.root.join("validate").join("summary.json"));
    let checked = summary["cells_checked"].as_u64().unwrap();
    let fraction = summary["pass_fraction"].as_f64().unwrap();
    assert!(checked >= 20, "only {checked} feasible cells validated");
    assert!(fraction >= 0.8, "pass fraction {fraction:.3} below 0.8 over {checked} cells");
    println!(
        "[acceptance] surrogate-vs-simulation cross-check: PASS ({checked} cells x 50 loops, {:.0}% inside their binomial region)",
        fraction * 100.0
    );
}

#[test]
fn end_to_end_determinism() {
    let mut cfg = desk_config();
    cfg.sampling.per_level = 100;
    cfg.forest.n_trees = 20;
    cfg.forest.max_leaves = 300;
    cfg.certification.scenario_count = Some(60);
    cfg.dashboard.n_tumor = 4;
    cfg.dashboard.n_lymphocytes = 4;
    cfg.dashboard.zetas = vec![0.0, 0.2];
    cfg.curves.c0_over_floor = vec![1.5, 2.0];
    cfg.curves.n_tumor = 5;

    let run_all = |root: &Path| {
        commands::generate::run(&cfg, root).unwrap();
        commands::train::run(&cfg, root, None).unwrap();
        commands::sensitivity::run(&cfg, root, None, None).unwrap();
        commands::certify::run(&cfg, root).unwrap();
        commands::dashboard::run(&cfg, root, None).unwrap();
        commands::curves::run(&cfg, root, None).unwrap();
    };
    let dir_a = TempDir::new().unwrap();
    let dir_b = TempDir::new().unwrap();
    run_all(dir_a.path());
    run_all(dir_b.path());

    let files = [
        "generate/dataset.csv",
        "generate/manifest.json",
        "train/models/f_t.json",
        "train/models/f_h.json",
        "train/models/f_m.json",
        "train/models/f_i.json",
        "train/models/f_l.json",
        "train/metrics.json",
        "train/manifest.json",
        "sensitivity/models_reduced/f_t.json",
        "sensitivity/models_reduced/f_h.json",
        "sensitivity/models_reduced/f_m.json",
        "sensitivity/models_reduced/f_i.json",
        "sensitivity/models_reduced/f_l.json",
        "sensitivity/report.json",
        "sensitivity/manifest.json",
        "certify/sample_sizes.csv",
        "certify/manifest.json",
        "dashboard/dashboard.csv",
        "dashboard/manifest.json",
        "curves/curves.csv",
        "curves/manifest.json",
    ];
    for file in files {
        let a = std::fs::read(dir_a.path().join(file)).unwrap_or_else(|e| panic!("{file}: {e}"));
        let b = std::fs::read(dir_b.path().join(file)).unwrap_or_else(|e| panic!("{file}: {e}"));
        assert!(a == b, "{file} differs between identical runs");
    }
    println!(
        "[acceptance] end-to-end determinism: PASS ({} artifacts byte-identical across two runs)",
        files.len()
    );
}
