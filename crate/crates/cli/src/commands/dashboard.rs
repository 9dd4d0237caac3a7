//! Success-region dashboards: one constrained grid search per (T0, C0) cell
//! and uncertainty level, against a scenario cloud shared across cells and
//! levels.

use std::path::{Path, PathBuf};

use mixcert_core::certify::{build_dashboard, draw_scenarios, log_spaced, DashboardCell};

use crate::artifacts::{dashboard_csv, load_surrogates, MODEL_FILES};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::manifest::{ManifestBuilder, THETA_GRID_NOTE};
use crate::plot;
use crate::util::subseed;

pub fn default_models_dir(cfg: &RunConfig, root: &Path) -> PathBuf {
    if cfg.certification.use_reduced_models {
        super::command_dir(root, "sensitivity").join("models_reduced")
    } else {
        super::command_dir(root, "train").join("models")
    }
}

pub fn run(cfg: &RunConfig, root: &Path, models_dir: Option<PathBuf>) -> CliResult<()> {
    let nominal = cfg.load_nominal()?;
    cfg.validate(&nominal)?;
    let models_dir = models_dir.unwrap_or_else(|| default_models_dir(cfg, root));
    let mut manifest =
        ManifestBuilder::new("dashboard", cfg, &super::command_dir(root, "dashboard"))?;
    for (_, file) in MODEL_FILES {
        manifest.record_input(&models_dir.join(file))?;
    }

    manifest.phase("load");
    let surrogates = load_surrogates(&models_dir)?;
    let grid = cfg.theta_grid.to_core()?;
    let n_scenarios = cfg.scenario_count(grid.len())?;
    let state_box = cfg.sampling.state_box(&cfg.labels);
    let t0s = log_spaced(state_box.lower.tumor, state_box.upper.tumor, cfg.dashboard.n_tumor);
    let c0s = log_spaced(
        state_box.lower.circulating,
        state_box.upper.circulating,
        cfg.dashboard.n_lymphocytes,
    );

    manifest.phase("optimize");
    let scenario_seed = subseed(cfg.seed, "scenarios");
    let mut all_cells: Vec<DashboardCell> = Vec::new();
    let mut per_zeta_feasible: Vec<(f64, usize)> = Vec::new();
    for &zeta in &cfg.dashboard.zetas {
        let scenarios = draw_scenarios(
            n_scenarios,
            zeta,
            &state_box,
            &nominal,
            cfg.sampling.scale,
            scenario_seed,
        );
        let cells = build_dashboard(
            &t0s,
            &c0s,
            zeta,
            &grid,
            &scenarios,
            &surrogates,
            cfg.prices.to_array(),
            cfg.certification.accepted_failures,
            &cfg.certification.fixed,
        )?;
        per_zeta_feasible.push((zeta, cells.iter().filter(|c| c.feasible).count()));
        all_cells.extend(cells);
    }

    manifest.phase("write");
    manifest.write_output("dashboard.csv", &dashboard_csv(&all_cells))?;
    for (zeta, _) in &per_zeta_feasible {
        let feasible: Vec<bool> = all_cells
            .iter()
            .filter(|c| c.zeta == *zeta)
            .map(|c| c.feasible)
            .collect();
        let svg = plot::region_map(
            &format!("Successful-therapy region, zeta = {zeta}"),
            &t0s,
            &c0s,
            &feasible,
        );
        manifest.write_output(&format!("dashboard_zeta_{zeta}.svg"), svg.as_bytes())?;
    }

    manifest.assumption(THETA_GRID_NOTE);
    manifest.note(format!(
        "scenario cloud: N = {n_scenarios} per level, shared seed across levels and cells"
    ));
    for (zeta, count) in &per_zeta_feasible {
        manifest.note(format!(
            "zeta = {zeta}: {count} of {} cells feasible",
            t0s.len() * c0s.len()
        ));
    }
    manifest.finish()
}
