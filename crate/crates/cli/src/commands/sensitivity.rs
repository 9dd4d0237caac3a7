//! Feature ranking, reduced-set selection and refits. The reduced
//! classifiers keep their own selections; the regressors are refitted on the
//! union of both classifier selections.

use std::path::{Path, PathBuf};

use serde::Serialize;

use mixcert_core::forest::ForestModel;
use mixcert_core::sampling::Dataset;
use mixcert_core::schema;
use mixcert_core::sensitivity::{
    rank_features, refit_reduced, select_features, RankedFeature, SelectionPolicy,
    SensitivityReport, Targets,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;
use crate::plot;
use crate::util::{fmt_f64, subseed};

pub fn default_models_dir(root: &Path) -> PathBuf {
    super::command_dir(root, "train").join("models")
}

#[derive(Debug, Serialize)]
struct FullReport {
    tumor: SensitivityReport,
    health: SensitivityReport,
    union: Vec<String>,
    chemo: SensitivityReport,
    immuno: SensitivityReport,
    vaccine: SensitivityReport,
}

pub fn run(
    cfg: &RunConfig,
    root: &Path,
    dataset_path: Option<PathBuf>,
    models_dir: Option<PathBuf>,
) -> CliResult<()> {
    let nominal = cfg.load_nominal()?;
    cfg.validate(&nominal)?;
    let dataset_path =
        dataset_path.unwrap_or_else(|| super::command_dir(root, "generate").join("dataset.csv"));
    let models_dir = models_dir.unwrap_or_else(|| default_models_dir(root));
    super::require_file(&dataset_path)?;
    let f_t_path = models_dir.join("f_t.json");
    let f_h_path = models_dir.join("f_h.json");
    super::require_file(&f_t_path)?;
    super::require_file(&f_h_path)?;

    let mut manifest =
        ManifestBuilder::new("sensitivity", cfg, &super::command_dir(root, "sensitivity"))?;
    manifest.record_input(&dataset_path)?;
    manifest.record_input(&f_t_path)?;
    manifest.record_input(&f_h_path)?;

    manifest.phase("load");
    let dataset = Dataset::read_csv(std::fs::File::open(&dataset_path)?)?;
    let x = dataset.feature_matrix();
    let names = schema::feature_names();
    let f_t_full = ForestModel::load(&f_t_path)?;
    let f_h_full = ForestModel::load(&f_h_path)?;

    let policy_for = |k: usize| match cfg.selection.cumulative_mass {
        Some(mass) => SelectionPolicy::CumulativeMass(mass),
        None => SelectionPolicy::TopK(k),
    };
    for k in [cfg.selection.k_tumor, cfg.selection.k_health] {
        if k > names.len() {
            eprintln!(
                "warning: selection count {k} exceeds the {} available features; using all",
                names.len()
            );
        }
    }

    manifest.phase("select");
    let ranked_t = rank_features(&f_t_full);
    let ranked_h = rank_features(&f_h_full);
    let selected_t = select_features(&ranked_t, policy_for(cfg.selection.k_tumor));
    let selected_h = select_features(&ranked_h, policy_for(cfg.selection.k_health));
    let mut union = selected_t.clone();
    for name in &selected_h {
        if !union.contains(name) {
            union.push(name.clone());
        }
    }

    manifest.phase("refit");
    let split_seed = subseed(cfg.seed, "split");
    let y_t: Vec<bool> = dataset.records.iter().map(|r| r.labels.tumor_contracted).collect();
    let y_h: Vec<bool> = dataset.records.iter().map(|r| r.labels.health_preserved).collect();
    let tumor = refit_reduced(
        &x,
        &Targets::Class(y_t),
        &names,
        &selected_t,
        &cfg.forest.classifier_config(subseed(cfg.seed, "f_t")),
        cfg.forest.test_fraction,
        split_seed,
    )?;
    let health = refit_reduced(
        &x,
        &Targets::Class(y_h),
        &names,
        &selected_h,
        &cfg.forest.classifier_config(subseed(cfg.seed, "f_h")),
        cfg.forest.test_fraction,
        split_seed,
    )?;

    let mut regressor_outcomes = Vec::new();
    for (label, target) in [
        ("f_m", dataset.records.iter().map(|r| r.labels.chemo_used).collect::<Vec<f64>>()),
        ("f_i", dataset.records.iter().map(|r| r.labels.immuno_used).collect()),
        ("f_l", dataset.records.iter().map(|r| r.labels.vaccine_used).collect()),
    ] {
        let outcome = refit_reduced(
            &x,
            &Targets::Reg(target),
            &names,
            &union,
            &cfg.forest.regressor_config(subseed(cfg.seed, label)),
            cfg.forest.test_fraction,
            split_seed,
        )?;
        regressor_outcomes.push(outcome);
    }

    manifest.phase("write");
    for (name, model) in [
        ("models_reduced/f_t.json", &tumor.reduced_model),
        ("models_reduced/f_h.json", &health.reduced_model),
        ("models_reduced/f_m.json", &regressor_outcomes[0].reduced_model),
        ("models_reduced/f_i.json", &regressor_outcomes[1].reduced_model),
        ("models_reduced/f_l.json", &regressor_outcomes[2].reduced_model),
    ] {
        manifest.write_output(name, &serde_json::to_vec(model)?)?;
    }
    manifest.write_output("importances_f_t.csv", importances_csv(&ranked_t).as_bytes())?;
    manifest.write_output("importances_f_h.csv", importances_csv(&ranked_h).as_bytes())?;
    manifest.write_output(
        "importances_f_t.svg",
        importances_svg("F_T importances", &ranked_t).as_bytes(),
    )?;
    manifest.write_output(
        "importances_f_h.svg",
        importances_svg("F_H importances", &ranked_h).as_bytes(),
    )?;

    let mut regs = regressor_outcomes.into_iter();
    let report = FullReport {
        tumor: tumor.report,
        health: health.report,
        union: union.clone(),
        chemo: regs.next().unwrap().report,
        immuno: regs.next().unwrap().report,
        vaccine: regs.next().unwrap().report,
    };
    manifest.write_output("report.json", serde_json::to_string_pretty(&report)?.as_bytes())?;
    manifest.note(format!("selected for tumor classifier: {selected_t:?}"));
    manifest.note(format!("selected for health classifier: {selected_h:?}"));
    manifest.note(format!("union used by the drug regressors: {union:?}"));
    manifest.finish()
}

fn importances_csv(ranked: &[RankedFeature]) -> String {
    let mut out = String::from("feature,importance\n");
    for r in ranked {
        out.push_str(&format!("{},{}\n", r.name, fmt_f64(r.importance)));
    }
    out
}

fn importances_svg(title: &str, ranked: &[RankedFeature]) -> String {
    let bars: Vec<(String, f64)> =
        ranked.iter().take(15).map(|r| (r.name.clone(), r.importance)).collect();
    plot::bar_chart(title, &bars)
}

/// Fails early when the loaded models do not match the current schema.
pub fn check_schema(model: &ForestModel) -> CliResult<()> {
    if model.schema_version != schema::SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "model trained under schema {}, this build uses {}",
            model.schema_version,
            schema::SCHEMA_VERSION
        )));
    }
    Ok(())
}
