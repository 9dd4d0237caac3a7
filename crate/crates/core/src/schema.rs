//! Canonical feature/label schema of the learning dataset.
//!
//! Feature order is fixed and versioned: the six initial state components
//! (x1..x6), the 28 model coefficients, then the seven control parameters.
//! The uncertainty-level tag `zeta` sits between features and labels in the
//! CSV; it is not fed to the learners.

use crate::dynamics::{ModelParameters, StateVector, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::feedback::ControlParameters;

/// Bump on any change to feature meaning or order.
pub const SCHEMA_VERSION: &str = "features-v1";

pub const STATE_NAMES: [&str; 6] = ["x1", "x2", "x3", "x4", "x5", "x6"];

pub const CONTROL_NAMES: [&str; 7] = ["T_stop", "r", "mu_C", "beta_C", "c_d", "kappa", "T_s"];

pub const LABEL_NAMES: [&str; 6] = ["QM", "QI", "QL", "Tf", "yT", "yH"];

pub const N_FEATURES: usize = 41;

/// The 41 feature names in schema order.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(N_FEATURES);
    names.extend(STATE_NAMES.iter().map(|s| s.to_string()));
    names.extend(PARAM_NAMES.iter().map(|s| s.to_string()));
    names.extend(CONTROL_NAMES.iter().map(|s| s.to_string()));
    names
}

/// Full CSV header: features, the zeta tag, then the six label columns.
pub fn csv_header() -> Vec<String> {
    let mut header = feature_names();
    header.push("zeta".to_string());
    header.extend(LABEL_NAMES.iter().map(|s| s.to_string()));
    header
}

/// Assembles the feature row for one scenario in schema order.
pub fn feature_row(x0: &StateVector, params: &ModelParameters, ctrl: &ControlParameters) -> Vec<f64> {
    let mut row = Vec::with_capacity(N_FEATURES);
    row.extend_from_slice(&x0.to_array());
    row.extend_from_slice(&params.to_array());
    row.extend_from_slice(&ctrl.to_array());
    row
}

/// Maps each name in `wanted` to its index in `available`, erroring on any
/// name that is missing.
pub fn projection(available: &[String], wanted: &[String]) -> Result<Vec<usize>> {
    wanted
        .iter()
        .map(|name| {
            available.iter().position(|n| n == name).ok_or_else(|| {
                Error::SchemaMismatch(format!("feature {name} not present in schema"))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_has_41_features_and_48_columns() {
        assert_eq!(feature_names().len(), N_FEATURES);
        assert_eq!(csv_header().len(), N_FEATURES + 7);
        assert_eq!(feature_names()[0], "x1");
        assert_eq!(feature_names()[6], "a");
        assert_eq!(feature_names()[33], "d");
        assert_eq!(feature_names()[34], "T_stop");
        assert_eq!(feature_names()[40], "T_s");
        assert_eq!(csv_header()[41], "zeta");
        assert_eq!(csv_header()[47], "yH");
    }

    #[test]
    fn no_duplicate_names() {
        let names = csv_header();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }

    #[test]
    fn projection_finds_indices_and_rejects_unknowns() {
        let names = feature_names();
        let wanted = vec!["x4".to_string(), "k_C".to_string(), "kappa".to_string()];
        let idx = projection(&names, &wanted).unwrap();
        assert_eq!(idx, vec![3, 28, 39]);
        assert!(projection(&names, &["nope".to_string()]).is_err());
    }
}
