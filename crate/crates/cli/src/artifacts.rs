//! On-disk artifact formats shared by more than one command: the surrogate
//! model directory and the dashboard cell table.

use std::path::Path;

use mixcert_core::certify::{DashboardCell, ReducedControlVector, SurrogateSet};
use mixcert_core::forest::ForestModel;

use crate::error::{CliError, CliResult};
use crate::util::fmt_f64;

pub const MODEL_FILES: [(&str, &str); 5] = [
    ("f_t", "f_t.json"),
    ("f_h", "f_h.json"),
    ("f_m", "f_m.json"),
    ("f_i", "f_i.json"),
    ("f_l", "f_l.json"),
];

/// Loads the five surrogates from a model directory and validates kinds and
/// schema version.
pub fn load_surrogates(dir: &Path) -> CliResult<SurrogateSet> {
    let mut loaded: Vec<ForestModel> = Vec::with_capacity(5);
    for (_, file) in MODEL_FILES {
        let path = dir.join(file);
        if !path.exists() {
            return Err(CliError::MissingInput(path));
        }
        loaded.push(ForestModel::load(&path)?);
    }
    let f_l = loaded.pop().unwrap();
    let f_i = loaded.pop().unwrap();
    let f_m = loaded.pop().unwrap();
    let f_h = loaded.pop().unwrap();
    let f_t = loaded.pop().unwrap();
    let set = SurrogateSet { f_t, f_h, f_m, f_i, f_l };
    set.validate()?;
    Ok(set)
}

pub const DASHBOARD_HEADER: [&str; 13] = [
    "T0", "C0", "zeta", "feasible", "r", "beta_C", "kappa", "T_stop", "P_hat", "QM", "QI", "QL",
    "J_hat",
];

/// Dashboard cells as CSV; theta/expectation columns are empty for
/// infeasible cells.
pub fn dashboard_csv(cells: &[DashboardCell]) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&DASHBOARD_HEADER.join(","));
    out.push('\n');
    for cell in cells {
        let mut fields = vec![
            fmt_f64(cell.t0),
            fmt_f64(cell.c0),
            fmt_f64(cell.zeta),
            if cell.feasible { "1" } else { "0" }.to_string(),
        ];
        match (&cell.theta_star, &cell.q_hat, &cell.j_hat) {
            (Some(theta), Some(q), Some(j)) => {
                fields.extend(theta.to_array().iter().map(|v| fmt_f64(*v)));
                fields.push(fmt_f64(cell.p_hat));
                fields.extend(q.iter().map(|v| fmt_f64(*v)));
                fields.push(fmt_f64(*j));
            }
            _ => {
                fields.extend(std::iter::repeat(String::new()).take(4));
                fields.push(fmt_f64(cell.p_hat));
                fields.extend(std::iter::repeat(String::new()).take(4));
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

/// Parses a dashboard CSV produced by [`dashboard_csv`].
pub fn read_dashboard_csv(path: &Path) -> CliResult<Vec<DashboardCell>> {
    if !path.exists() {
        return Err(CliError::MissingInput(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != DASHBOARD_HEADER.join(",") {
        return Err(CliError::Config(format!(
            "{} does not look like a dashboard table",
            path.display()
        )));
    }
    let mut cells = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != DASHBOARD_HEADER.len() {
            return Err(CliError::Config(format!(
                "{}:{}: expected {} fields, got {}",
                path.display(),
                lineno + 2,
                DASHBOARD_HEADER.len(),
                fields.len()
            )));
        }
        let num = |i: usize| -> CliResult<f64> {
            fields[i].parse::<f64>().map_err(|e| {
                CliError::Config(format!("{}:{}: bad number: {e}", path.display(), lineno + 2))
            })
        };
        let feasible = fields[3] == "1";
        let (theta_star, q_hat, j_hat) = if feasible {
            (
                Some(ReducedControlVector {
                    r: num(4)?,
                    beta_c: num(5)?,
                    kappa: num(6)?,
                    t_stop: num(7)?,
                }),
                Some([num(9)?, num(10)?, num(11)?]),
                Some(num(12)?),
            )
        } else {
            (None, None, None)
        };
        cells.push(DashboardCell {
            t0: num(0)?,
            c0: num(1)?,
            zeta: num(2)?,
            feasible,
            theta_star,
            p_hat: num(8)?,
            q_hat,
            j_hat,
        });
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dashboard_csv_round_trip() {
        let cells = vec![
            DashboardCell {
                t0: 1e6,
                c0: 5e10,
                zeta: 0.2,
                feasible: true,
                theta_star: Some(ReducedControlVector {
                    r: 0.1,
                    beta_c: 1.5,
                    kappa: 0.9,
                    t_stop: 100.0,
                }),
                p_hat: 0.997409326424870,
                q_hat: Some([0.25, 0.5, 0.75]),
                j_hat: Some(0.5),
            },
            DashboardCell {
                t0: 1e8,
                c0: 4e10,
                zeta: 0.2,
                feasible: false,
                theta_star: None,
                p_hat: 0.25,
                q_hat: None,
                j_hat: None,
            },
        ];
        let bytes = dashboard_csv(&cells);
        let dir = std::env::temp_dir().join("mixcert-artifact-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("dashboard.csv");
        std::fs::write(&path, &bytes).unwrap();
        let back = read_dashboard_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].theta_star.unwrap().kappa, 0.9);
        assert_eq!(back[0].p_hat, cells[0].p_hat);
        assert!(!back[1].feasible);
        assert!(back[1].theta_star.is_none());
    }
}
