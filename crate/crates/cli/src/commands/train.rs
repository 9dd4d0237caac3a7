//! Fits the five full-feature surrogates (two outcome classifiers, three
//! drug-usage regressors), evaluates them on the held-out split and persists
//! everything.

use std::path::{Path, PathBuf};

use serde::Serialize;

use mixcert_core::forest::{
    evaluate_classifier, evaluate_regressor, fit_classifier, fit_regressor, split_train_test,
    ClassifierMetrics, ForestModel, RegressorMetrics,
};
use mixcert_core::sampling::Dataset;
use mixcert_core::schema;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;
use crate::plot;
use crate::util::subseed;

pub const SMALL_DATASET_WARNING_ROWS: usize = 1000;

#[derive(Debug, Serialize)]
struct ClassifierEntry {
    metrics: ClassifierMetrics,
    /// Accuracy of always predicting the test split's majority class.
    majority_rate: f64,
    true_fraction_test: f64,
}

#[derive(Debug, Serialize)]
struct RegressorEntry {
    metrics: RegressorMetrics,
    target_mean_test: f64,
}

#[derive(Debug, Serialize)]
struct TrainReport {
    rows: usize,
    train_rows: usize,
    test_rows: usize,
    f_t: ClassifierEntry,
    f_h: ClassifierEntry,
    f_m: RegressorEntry,
    f_i: RegressorEntry,
    f_l: RegressorEntry,
}

pub fn default_dataset_path(root: &Path) -> PathBuf {
    super::command_dir(root, "generate").join("dataset.csv")
}

pub fn run(cfg: &RunConfig, root: &Path, dataset_path: Option<PathBuf>) -> CliResult<()> {
    let nominal = cfg.load_nominal()?;
    cfg.validate(&nominal)?;
    let dataset_path = dataset_path.unwrap_or_else(|| default_dataset_path(root));
    super::require_file(&dataset_path)?;

    let mut manifest = ManifestBuilder::new("train", cfg, &super::command_dir(root, "train"))?;
    manifest.record_input(&dataset_path)?;

    manifest.phase("load");
    let dataset = Dataset::read_csv(std::fs::File::open(&dataset_path)?)?;
    let n = dataset.records.len();
    if n < 10 {
        return Err(CliError::Config(format!(
            "dataset has only {n} rows; too small to split and train"
        )));
    }
    if n < SMALL_DATASET_WARNING_ROWS {
        eprintln!("warning: training on a small dataset ({n} rows); expect noisy surrogates");
    }

    let x = dataset.feature_matrix();
    let names = schema::feature_names();
    let (train_idx, test_idx) =
        split_train_test(n, cfg.forest.test_fraction, subseed(cfg.seed, "split"))?;
    let take_rows = |idx: &[usize]| -> Vec<Vec<f64>> { idx.iter().map(|i| x[*i].clone()).collect() };
    let x_train = take_rows(&train_idx);
    let x_test = take_rows(&test_idx);

    manifest.phase("fit");
    let mut classifier_entries = Vec::new();
    let mut regressor_entries = Vec::new();

    for (label, file) in [("f_t", "models/f_t.json"), ("f_h", "models/f_h.json")] {
        let labels: Vec<bool> = dataset
            .records
            .iter()
            .map(|rec| {
                if label == "f_t" {
                    rec.labels.tumor_contracted
                } else {
                    rec.labels.health_preserved
                }
            })
            .collect();
        let y_train: Vec<bool> = train_idx.iter().map(|i| labels[*i]).collect();
        let y_test: Vec<bool> = test_idx.iter().map(|i| labels[*i]).collect();
        let model = fit_classifier(
            &x_train,
            &y_train,
            &names,
            &cfg.forest.classifier_config(subseed(cfg.seed, label)),
        )?;
        let metrics = evaluate_classifier(&model, &x_test, &y_test)?;
        let n_true = y_test.iter().filter(|v| **v).count();
        let majority_rate = n_true.max(y_test.len() - n_true) as f64 / y_test.len() as f64;
        manifest.write_output(file, &serde_json::to_vec(&model)?)?;
        manifest.write_output(
            &format!("metrics_{label}.svg"),
            classifier_svg(label, &metrics).as_bytes(),
        )?;
        classifier_entries.push(ClassifierEntry {
            metrics,
            majority_rate,
            true_fraction_test: n_true as f64 / y_test.len() as f64,
        });
    }

    for (label, file) in
        [("f_m", "models/f_m.json"), ("f_i", "models/f_i.json"), ("f_l", "models/f_l.json")]
    {
        let targets: Vec<f64> = dataset
            .records
            .iter()
            .map(|rec| match label {
                "f_m" => rec.labels.chemo_used,
                "f_i" => rec.labels.immuno_used,
                _ => rec.labels.vaccine_used,
            })
            .collect();
        let y_train: Vec<f64> = train_idx.iter().map(|i| targets[*i]).collect();
        let y_test: Vec<f64> = test_idx.iter().map(|i| targets[*i]).collect();
        let model = fit_regressor(
            &x_train,
            &y_train,
            &names,
            &cfg.forest.regressor_config(subseed(cfg.seed, label)),
        )?;
        let metrics = evaluate_regressor(&model, &x_test, &y_test)?;
        manifest.write_output(file, &serde_json::to_vec(&model)?)?;
        manifest.write_output(
            &format!("scatter_{label}.svg"),
            regressor_scatter(label, &model, &x_test, &y_test)?.as_bytes(),
        )?;
        regressor_entries.push(RegressorEntry {
            metrics,
            target_mean_test: y_test.iter().sum::<f64>() / y_test.len() as f64,
        });
    }

    manifest.phase("report");
    let mut classifiers = classifier_entries.into_iter();
    let mut regressors = regressor_entries.into_iter();
    let report = TrainReport {
        rows: n,
        train_rows: train_idx.len(),
        test_rows: test_idx.len(),
        f_t: classifiers.next().unwrap(),
        f_h: classifiers.next().unwrap(),
        f_m: regressors.next().unwrap(),
        f_i: regressors.next().unwrap(),
        f_l: regressors.next().unwrap(),
    };
    manifest.write_output("metrics.json", serde_json::to_string_pretty(&report)?.as_bytes())?;
    manifest.finish()
}

fn classifier_svg(label: &str, metrics: &ClassifierMetrics) -> String {
    plot::bar_chart(
        &format!("{label} test metrics"),
        &[
            ("accuracy".to_string(), metrics.accuracy),
            ("precision (true)".to_string(), metrics.precision_true),
            ("recall (true)".to_string(), metrics.recall_true),
            ("precision (false)".to_string(), metrics.precision_false),
            ("recall (false)".to_string(), metrics.recall_false),
        ],
    )
}

fn regressor_scatter(
    label: &str,
    model: &ForestModel,
    x_test: &[Vec<f64>],
    y_test: &[f64],
) -> CliResult<String> {
    let mut points = Vec::with_capacity(x_test.len().min(1500));
    for (row, actual) in x_test.iter().zip(y_test.iter()).take(1500) {
        points.push((*actual, model.predict_value(row)?));
    }
    Ok(plot::scatter_with_diagonal(&format!("{label} prediction vs actual"), &points))
}
