//! Global sensitivity workflow: rank features by impurity importance,
//! select a reduced subset, refit on the identical train/test partition and
//! report the quality delta.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{
    evaluate_classifier, evaluate_regressor, fit_classifier, fit_regressor, split_train_test,
    ForestConfig, ForestModel, Metrics, TaskKind,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    pub importance: f64,
}

/// Features sorted by descending importance; equal importances keep schema
/// order (stable sort).
pub fn rank_features(model: &ForestModel) -> Vec<RankedFeature> {
    let mut ranked: Vec<RankedFeature> = model
        .feature_names
        .iter()
        .zip(model.importances.iter())
        .map(|(name, importance)| RankedFeature { name: name.clone(), importance: *importance })
        .collect();
    ranked.sort_by(|a, b| b.importance.total_cmp(&a.importance));
    ranked
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// The k best-ranked features (clamped to the full list).
    TopK(usize),
    /// The shortest prefix whose importances sum to at least the mass.
    CumulativeMass(f64),
}

/// Applies the selection policy to a ranking. A `TopK` beyond the list
/// length returns the full set (the caller may warn).
pub fn select_features(ranked: &[RankedFeature], policy: SelectionPolicy) -> Vec<String> {
    match policy {
        SelectionPolicy::TopK(k) => {
            ranked.iter().take(k).map(|r| r.name.clone()).collect()
        }
        SelectionPolicy::CumulativeMass(mass) => {
            let mut total = 0.0;
            let mut selected = Vec::new();
            for r in ranked {
                selected.push(r.name.clone());
                total += r.importance;
                if total >= mass {
                    return selected;
                }
            }
            selected
        }
    }
}

/// Difference between reduced and full evaluation results (reduced minus
/// full), per applicable metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricsDelta {
    pub accuracy: Option<f64>,
    pub rmse: Option<f64>,
    pub r2: Option<f64>,
}

fn delta(full: &Metrics, reduced: &Metrics) -> MetricsDelta {
    match (full, reduced) {
        (Metrics::Classifier(f), Metrics::Classifier(r)) => MetricsDelta {
            accuracy: Some(r.accuracy - f.accuracy),
            ..Default::default()
        },
        (Metrics::Regressor(f), Metrics::Regressor(r)) => MetricsDelta {
            rmse: Some(r.rmse - f.rmse),
            r2: Some(r.r2 - f.r2),
            ..Default::default()
        },
        _ => MetricsDelta::default(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub ranked: Vec<RankedFeature>,
    pub selected: Vec<String>,
    pub full_metrics: Metrics,
    pub reduced_metrics: Metrics,
    pub delta: MetricsDelta,
}

/// A refit comparison plus the two fitted models (the reduced one feeds the
/// certification stage).
#[derive(Debug, Clone)]
pub struct RefitOutcome {
    pub report: SensitivityReport,
    pub full_model: ForestModel,
    pub reduced_model: ForestModel,
}

/// Targets for a refit.
#[derive(Debug, Clone)]
pub enum Targets {
    Class(Vec<bool>),
    Reg(Vec<f64>),
}

fn project(x: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    x.iter().map(|row| cols.iter().map(|c| row[*c]).collect()).collect()
}

fn take<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|i| items[*i].clone()).collect()
}

/// Fits full-feature and reduced-feature models on the identical train
/// split, evaluates both on the identical test split, and reports deltas.
///
/// `subset` names must exist in `feature_names`; the split derives from
/// `split_seed` so repeated calls and other commands share partitions.
pub fn refit_reduced(
    x: &[Vec<f64>],
    y: &Targets,
    feature_names: &[String],
    subset: &[String],
    cfg: &ForestConfig,
    test_fraction: f64,
    split_seed: u64,
) -> Result<RefitOutcome> {
    let cols: Vec<usize> = subset
        .iter()
        .map(|name| {
            feature_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::SchemaMismatch(format!("unknown feature {name}")))
        })
        .collect::<Result<_>>()?;

    let (train_idx, test_idx) = split_train_test(x.len(), test_fraction, split_seed)?;
    let x_train = take(x, &train_idx);
    let x_test = take(x, &test_idx);
    let x_train_red = project(&x_train, &cols);
    let x_test_red = project(&x_test, &cols);
    let reduced_names: Vec<String> = subset.to_vec();

    let (full_model, reduced_model, full_metrics, reduced_metrics) = match y {
        Targets::Class(labels) => {
            let y_train = take(labels, &train_idx);
            let y_test = take(labels, &test_idx);
            let full = fit_classifier(&x_train, &y_train, feature_names, cfg)?;
            let reduced = fit_classifier(&x_train_red, &y_train, &reduced_names, cfg)?;
            let fm = Metrics::Classifier(evaluate_classifier(&full, &x_test, &y_test)?);
            let rm = Metrics::Classifier(evaluate_classifier(&reduced, &x_test_red, &y_test)?);
            (full, reduced, fm, rm)
        }
        Targets::Reg(values) => {
            let y_train = take(values, &train_idx);
            let y_test = take(values, &test_idx);
            let full = fit_regressor(&x_train, &y_train, feature_names, cfg)?;
            let reduced = fit_regressor(&x_train_red, &y_train, &reduced_names, cfg)?;
            let fm = Metrics::Regressor(evaluate_regressor(&full, &x_test, &y_test)?);
            let rm = Metrics::Regressor(evaluate_regressor(&reduced, &x_test_red, &y_test)?);
            (full, reduced, fm, rm)
        }
    };
    debug_assert_eq!(full_model.kind, reduced_model.kind);
    debug_assert_eq!(full_model.kind == TaskKind::Classifier, matches!(y, Targets::Class(_)));

    let d = delta(&full_metrics, &reduced_metrics);
    let report = SensitivityReport {
        ranked: rank_features(&full_model),
        selected: subset.to_vec(),
        full_metrics,
        reduced_metrics,
        delta: d,
    };
    Ok(RefitOutcome { report, full_model, reduced_model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{fit_classifier, ForestConfig};
    use crate::schema;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("f{i}")).collect()
    }

    fn stub_model(importances: Vec<f64>) -> ForestModel {
        let k = importances.len();
        ForestModel {
            schema_version: schema::SCHEMA_VERSION.to_string(),
            kind: crate::forest::TaskKind::Classifier,
            config: ForestConfig::classifier(0),
            feature_names: names(k),
            importances,
            trees: vec![],
        }
    }

    #[test]
    fn ranking_sorts_descending_with_stable_ties() {
        let model = stub_model(vec![0.3, 0.5, 0.2]);
        let ranked = rank_features(&model);
        let order: Vec<&str> = ranked.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(order, vec!["f1", "f0", "f2"]);

        // All-zero importances keep the input order.
        let model = stub_model(vec![0.0, 0.0, 0.0, 0.0]);
        let ranked = rank_features(&model);
        let order: Vec<&str> = ranked.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(order, vec!["f0", "f1", "f2", "f3"]);
    }

    #[test]
    fn ranking_is_a_permutation_of_the_schema() {
        let model = stub_model(vec![0.1, 0.4, 0.25, 0.25]);
        let mut ranked: Vec<String> = rank_features(&model).into_iter().map(|r| r.name).collect();
        ranked.sort();
        let mut expected = names(4);
        expected.sort();
        assert_eq!(ranked, expected);
    }

    #[test]
    fn selection_policies() {
        let model = stub_model(vec![0.5, 0.3, 0.2]);
        let ranked = rank_features(&model);
        assert_eq!(select_features(&ranked, SelectionPolicy::TopK(1)), vec!["f0"]);
        assert_eq!(
            select_features(&ranked, SelectionPolicy::TopK(99)).len(),
            3 // clamped to the full set
        );
        assert_eq!(
            select_features(&ranked, SelectionPolicy::CumulativeMass(1.0)).len(),
            3
        );
        assert_eq!(
            select_features(&ranked, SelectionPolicy::CumulativeMass(0.75)),
            vec!["f0", "f1"]
        );
    }

    #[test]
    fn selection_is_idempotent() {
        let model = stub_model(vec![0.4, 0.3, 0.2, 0.1]);
        let ranked = rank_features(&model);
        let first = select_features(&ranked, SelectionPolicy::TopK(2));
        let again: Vec<RankedFeature> = ranked
            .into_iter()
            .filter(|r| first.contains(&r.name))
            .collect();
        assert_eq!(select_features(&again, SelectionPolicy::TopK(2)), first);
    }

    fn synthetic(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..5).map(|_| rng.random::<f64>()).collect())
            .collect();
        let y: Vec<bool> = x.iter().map(|r| r[1] > 0.5).collect();
        (x, y)
    }

    #[test]
    fn full_subset_refit_changes_little() {
        let (x, y) = synthetic(31, 600);
        let cfg = ForestConfig { n_trees: 30, ..ForestConfig::classifier(3) };
        let outcome = refit_reduced(
            &x,
            &Targets::Class(y),
            &names(5),
            &names(5),
            &cfg,
            0.3,
            7,
        )
        .unwrap();
        assert!(outcome.report.delta.accuracy.unwrap().abs() < 0.01);
        assert_eq!(outcome.reduced_model.feature_names, names(5));
    }

    #[test]
    fn noise_only_subset_collapses_to_majority_rate() {
        let (x, y) = synthetic(37, 600);
        let cfg = ForestConfig { n_trees: 30, ..ForestConfig::classifier(5) };
        let outcome = refit_reduced(
            &x,
            &Targets::Class(y.clone()),
            &names(5),
            &["f4".to_string()], // pure noise
            &cfg,
            0.3,
            7,
        )
        .unwrap();
        let report = outcome.report;
        let majority = {
            let n_true = y.iter().filter(|v| **v).count();
            (n_true.max(y.len() - n_true)) as f64 / y.len() as f64
        };
        let reduced_acc = match report.reduced_metrics {
            Metrics::Classifier(m) => m.accuracy,
            _ => unreachable!(),
        };
        assert!((reduced_acc - majority).abs() < 0.1, "{reduced_acc} vs {majority}");
    }

    #[test]
    fn relevant_feature_ranks_first_on_synthetic_data() {
        let (x, y) = synthetic(41, 600);
        let cfg = ForestConfig { n_trees: 30, ..ForestConfig::classifier(9) };
        let model = fit_classifier(&x, &y, &names(5), &cfg).unwrap();
        let ranked = rank_features(&model);
        assert_eq!(ranked[0].name, "f1");
    }

    #[test]
    fn refit_rejects_unknown_subset_names() {
        let (x, y) = synthetic(43, 100);
        let cfg = ForestConfig { n_trees: 5, ..ForestConfig::classifier(1) };
        let err = refit_reduced(
            &x,
            &Targets::Class(y),
            &names(5),
            &["ghost".to_string()],
            &cfg,
            0.3,
            7,
        );
        assert!(err.is_err());
    }
}
