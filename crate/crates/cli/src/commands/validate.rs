//! Surrogate-versus-simulation cross-check: re-simulates a spread of
//! feasible dashboard cells under their optimized control parameters with
//! fresh scenario draws, and tests whether each cell's empirical success
//! frequency falls inside the central binomial acceptance region implied by
//! the surrogate's probability estimate.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use mixcert_core::certify::{
    assemble_control, assemble_initial_state, binomial_central_region, draw_scenarios,
    DashboardCell,
};
use mixcert_core::feedback::ParameterizedLaw;
use mixcert_core::protocol::{extract_labels, simulate_closed_loop};

use crate::artifacts::read_dashboard_csv;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;
use crate::util::{fmt_f64, subseed};

#[derive(Debug, Serialize)]
pub struct CellCheck {
    pub zeta: f64,
    pub t0: f64,
    pub c0: f64,
    pub p_hat: f64,
    pub loops: u64,
    pub numerical_failures: u64,
    pub successes: u64,
    pub k_lo: u64,
    pub k_hi: u64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct ValidationSummary {
    pub cells_checked: usize,
    pub cells_passed: usize,
    pub pass_fraction: f64,
    pub loops_per_cell: u64,
    pub interval_alpha: f64,
}

pub fn run(cfg: &RunConfig, root: &Path, cells_path: Option<PathBuf>) -> CliResult<()> {
    let nominal = cfg.load_nominal()?;
    cfg.validate(&nominal)?;
    let cells_path =
        cells_path.unwrap_or_else(|| super::command_dir(root, "dashboard").join("dashboard.csv"));
    super::require_file(&cells_path)?;

    let mut manifest =
        ManifestBuilder::new("validate", cfg, &super::command_dir(root, "validate"))?;
    manifest.record_input(&cells_path)?;

    manifest.phase("select-cells");
    let all_cells = read_dashboard_csv(&cells_path)?;
    let feasible: Vec<&DashboardCell> = all_cells.iter().filter(|c| c.feasible).collect();
    if feasible.is_empty() {
        return Err(CliError::Config(format!(
            "{} contains no feasible cells to validate",
            cells_path.display()
        )));
    }
    let selected = spread(&feasible, cfg.validate.max_cells);

    manifest.phase("re-simulate");
    let law_cfg = cfg.law.to_core(&nominal, &cfg.labels);
    let label_cfg = cfg.labels.to_core();
    let protocol = cfg.protocol.to_core();
    let state_box = cfg.sampling.state_box(&cfg.labels);
    let validate_seed = subseed(cfg.seed, "validate");
    let loops = cfg.validate.loops_per_cell;

    let checks: Vec<CellCheck> = selected
        .par_iter()
        .enumerate()
        .map(|(i, cell)| {
            let theta = cell.theta_star.expect("feasible cells carry theta");
            let ctrl = assemble_control(&theta, &cfg.certification.fixed);
            let cell_seed = subseed(validate_seed, &format!("cell-{i}"));
            let scenarios = draw_scenarios(
                loops,
                cell.zeta,
                &state_box,
                &nominal,
                cfg.sampling.scale,
                cell_seed,
            );
            let mut successes = 0u64;
            let mut numerical_failures = 0u64;
            for omega in &scenarios {
                let x0 = assemble_initial_state(cell.t0, cell.c0, omega);
                let law = ParameterizedLaw { ctrl, cfg: &law_cfg, nominal: &nominal };
                match simulate_closed_loop(&x0, &omega.params, &ctrl, &protocol, &law) {
                    Ok(traj) => {
                        let labels = extract_labels(&traj, &label_cfg, law_cfg.max_rates());
                        if labels.tumor_contracted && labels.health_preserved {
                            successes += 1;
                        }
                    }
                    Err(_) => numerical_failures += 1,
                }
            }
            let effective = loops - numerical_failures;
            let (k_lo, k_hi) =
                binomial_central_region(effective, cell.p_hat, cfg.validate.interval_alpha);
            CellCheck {
                zeta: cell.zeta,
                t0: cell.t0,
                c0: cell.c0,
                p_hat: cell.p_hat,
                loops: effective,
                numerical_failures,
                successes,
                k_lo,
                k_hi,
                pass: (k_lo..=k_hi).contains(&successes),
            }
        })
        .collect();

    manifest.phase("write");
    let mut csv =
        String::from("zeta,T0,C0,P_hat,loops,numerical_failures,successes,k_lo,k_hi,pass\n");
    for c in &checks {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(c.zeta),
            fmt_f64(c.t0),
            fmt_f64(c.c0),
            fmt_f64(c.p_hat),
            c.loops,
            c.numerical_failures,
            c.successes,
            c.k_lo,
            c.k_hi,
            if c.pass { "1" } else { "0" }
        ));
    }
    manifest.write_output("validation.csv", csv.as_bytes())?;

    let passed = checks.iter().filter(|c| c.pass).count();
    let summary = ValidationSummary {
        cells_checked: checks.len(),
        cells_passed: passed,
        pass_fraction: passed as f64 / checks.len() as f64,
        loops_per_cell: loops,
        interval_alpha: cfg.validate.interval_alpha,
    };
    manifest.write_output("summary.json", serde_json::to_string_pretty(&summary)?.as_bytes())?;
    manifest.note(format!(
        "{passed} of {} checked cells fall inside their binomial acceptance region",
        checks.len()
    ));
    manifest.finish()
}

/// An even spread over the feasible cells (which arrive ordered by level and
/// grid position), capped at `max`.
fn spread<'a>(cells: &[&'a DashboardCell], max: usize) -> Vec<&'a DashboardCell> {
    if cells.len() <= max {
        return cells.to_vec();
    }
    (0..max)
        .map(|i| cells[i * cells.len() / max])
        .collect()
}
