//! Expected drug-usage curves over the initial tumor size, one line set per
//! initial lymphocyte level. A curve ends where feasibility is lost.

use std::path::{Path, PathBuf};

use mixcert_core::certify::{drug_usage_curves, draw_scenarios, log_spaced};

use crate::artifacts::{load_surrogates, MODEL_FILES};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::manifest::{ManifestBuilder, THETA_GRID_NOTE};
use crate::plot;
use crate::util::{fmt_f64, subseed};

const SIGMAS: [&str; 3] = ["M", "I", "L"];

pub fn run(cfg: &RunConfig, root: &Path, models_dir: Option<PathBuf>) -> CliResult<()> {
    let nominal = cfg.load_nominal()?;
    cfg.validate(&nominal)?;
    let models_dir =
        models_dir.unwrap_or_else(|| super::dashboard::default_models_dir(cfg, root));
    let mut manifest = ManifestBuilder::new("curves", cfg, &super::command_dir(root, "curves"))?;
    for (_, file) in MODEL_FILES {
        manifest.record_input(&models_dir.join(file))?;
    }

    manifest.phase("load");
    let surrogates = load_surrogates(&models_dir)?;
    let grid = cfg.theta_grid.to_core()?;
    let n_scenarios = cfg.scenario_count(grid.len())?;
    let state_box = cfg.sampling.state_box(&cfg.labels);
    let t0s = log_spaced(state_box.lower.tumor, state_box.upper.tumor, cfg.curves.n_tumor);
    let c0s: Vec<f64> = cfg
        .curves
        .c0_over_floor
        .iter()
        .map(|mult| mult * cfg.labels.lymphocyte_floor)
        .collect();
    let zeta = cfg.curves.zeta;

    manifest.phase("optimize");
    let scenarios = draw_scenarios(
        n_scenarios,
        zeta,
        &state_box,
        &nominal,
        cfg.sampling.scale,
        subseed(cfg.seed, "scenarios"),
    );
    let cells = drug_usage_curves(
        &c0s,
        &t0s,
        zeta,
        &grid,
        &scenarios,
        &surrogates,
        cfg.prices.to_array(),
        cfg.certification.accepted_failures,
        &cfg.certification.fixed,
    )?;

    manifest.phase("write");
    let mut csv = String::from("C0,T0,sigma,Q_hat,feasible\n");
    for cell in &cells {
        for (idx, sigma) in SIGMAS.iter().enumerate() {
            let q = cell.q_hat.map(|q| fmt_f64(q[idx])).unwrap_or_default();
            csv.push_str(&format!(
                "{},{},{sigma},{q},{}\n",
                fmt_f64(cell.c0),
                fmt_f64(cell.t0),
                if cell.feasible { "1" } else { "0" }
            ));
        }
    }
    manifest.write_output("curves.csv", csv.as_bytes())?;

    for (i, &c0) in c0s.iter().enumerate() {
        let line: Vec<_> = cells.iter().filter(|c| c.c0 == c0).collect();
        let series: Vec<(String, Vec<(f64, f64)>)> = SIGMAS
            .iter()
            .enumerate()
            .map(|(idx, sigma)| {
                (
                    format!("Q_{sigma}"),
                    line.iter()
                        .filter_map(|c| c.q_hat.map(|q| (c.t0.log10(), q[idx])))
                        .collect(),
                )
            })
            .collect();
        let svg = plot::line_chart(
            &format!(
                "Expected drug usage, C0 = {} x floor, zeta = {zeta}",
                fmt_f64(cfg.curves.c0_over_floor[i])
            ),
            "log10 T0",
            "normalized quantity",
            &series,
        );
        manifest.write_output(&format!("curves_c0_{i}.svg"), svg.as_bytes())?;
    }

    manifest.assumption(THETA_GRID_NOTE);
    let feasible = cells.iter().filter(|c| c.feasible).count();
    manifest.note(format!(
        "{feasible} of {} (C0, T0) samples feasible at zeta = {zeta}, N = {n_scenarios}",
        cells.len()
    ));
    manifest.finish()
}
