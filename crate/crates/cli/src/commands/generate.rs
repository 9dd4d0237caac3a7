//! Learning-cloud generation: one labeled CSV row per simulated closed loop.

use std::path::Path;

use mixcert_core::sampling::generate_dataset;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::manifest::{ExcludedRows, ManifestBuilder};

pub fn run(cfg: &RunConfig, root: &Path) -> CliResult<()> {
    let nominal = cfg.load_nominal()?;
    cfg.validate(&nominal)?;
    let mut manifest = ManifestBuilder::new("generate", cfg, &super::command_dir(root, "generate"))?;

    manifest.phase("simulate-cloud");
    let cloud = cfg.cloud_config(&nominal);
    let dataset = generate_dataset(&cloud, &nominal)?;

    manifest.phase("write");
    let mut csv = Vec::new();
    dataset.write_csv(&mut csv)?;
    manifest.write_output("dataset.csv", &csv)?;

    if !dataset.failures.is_empty() {
        let mut per_level: Vec<(f64, usize)> = Vec::new();
        for level in &cloud.levels {
            let count = dataset.failures.iter().filter(|f| f.zeta == *level).count();
            if count > 0 {
                per_level.push((*level, count));
            }
        }
        eprintln!(
            "warning: {} of {} scenarios left the numeric domain and were excluded (counts per zeta: {:?})",
            dataset.failures.len(),
            cloud.total_rows(),
            per_level
        );
        manifest.excluded_rows(ExcludedRows {
            total: dataset.failures.len(),
            per_level,
            rows: dataset.failures.iter().map(|f| f.row).collect(),
        });
    }
    manifest.note(format!(
        "rows: {} kept, {} excluded, {} requested",
        dataset.records.len(),
        dataset.failures.len(),
        cloud.total_rows()
    ));
    manifest.finish()
}
