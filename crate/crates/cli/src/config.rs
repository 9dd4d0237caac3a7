//! Run configuration: one hierarchical JSON document with defaults for every
//! knob, validated in full before any compute. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mixcert_core::certify::{FixedKnobs, ThetaGrid};
use mixcert_core::dynamics::{NominalParameterSet, StateVector};
use mixcert_core::feedback::{ControlLawConfig, ControlParameters, RateTestMode};
use mixcert_core::protocol::{LabelConfig, ProtocolConfig};
use mixcert_core::sampling::{CloudConfig, ControlRanges, SamplingScale, StateBox};

use crate::error::{CliError, CliResult};

/// Substep used by every command that integrates sampled scenarios. The
/// stiffest sampled cases (large tumor with strong NK/CD8 inactivation) put
/// the fastest eigenvalue near 3e3/day; classical RK4 needs h below ~8e-4
/// there, so 2.5e-4 keeps a 3x stability margin.
pub const PIPELINE_SUBSTEP: f64 = 2.5e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub therapy_days: f64,
    pub basic_period_days: f64,
    pub duty_cycle: f64,
    pub sampling_period_days: f64,
    pub max_substep_days: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            therapy_days: 7.0,
            basic_period_days: 1.0,
            duty_cycle: 0.5,
            sampling_period_days: 1.0 / 24.0,
            max_substep_days: PIPELINE_SUBSTEP,
        }
    }
}

impl ProtocolSection {
    pub fn to_core(&self) -> ProtocolConfig {
        ProtocolConfig {
            therapy_days: self.therapy_days,
            period_days: self.basic_period_days,
            duty_cycle: self.duty_cycle,
            sampling_period: self.sampling_period_days,
            max_substep: self.max_substep_days,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelSection {
    pub contraction_factor: f64,
    pub health_margin: f64,
    pub lymphocyte_floor: f64,
}

impl Default for LabelSection {
    fn default() -> Self {
        Self { contraction_factor: 0.01, health_margin: 0.5, lymphocyte_floor: 3.125e10 }
    }
}

impl LabelSection {
    pub fn to_core(&self) -> LabelConfig {
        LabelConfig {
            contraction_factor: self.contraction_factor,
            health_margin: self.health_margin,
            lymphocyte_floor: self.lymphocyte_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LawSection {
    pub t_max: f64,
    pub vbar_chemo: f64,
    pub vbar_immuno: f64,
    pub vbar_vaccine: f64,
    pub rate_test: RateTestMode,
}

impl Default for LawSection {
    fn default() -> Self {
        Self {
            t_max: 1e8,
            vbar_chemo: 1.0,
            vbar_immuno: 1e4,
            vbar_vaccine: 1e7,
            rate_test: RateTestMode::NominalModel,
        }
    }
}

impl LawSection {
    /// Kill-term coefficients come from the nominal set, the lymphocyte
    /// floor from the label section.
    pub fn to_core(&self, nominal: &NominalParameterSet, labels: &LabelSection) -> ControlLawConfig {
        let p = nominal.params();
        ControlLawConfig {
            t_max: self.t_max,
            vbar_chemo: self.vbar_chemo,
            vbar_immuno: self.vbar_immuno,
            vbar_vaccine: self.vbar_vaccine,
            d_nom: p.d,
            ell_nom: p.ell,
            s_nom: p.s,
            c_min: labels.lymphocyte_floor,
            rate_test: self.rate_test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub levels: Vec<f64>,
    pub per_level: usize,
    pub scale: SamplingScale,
    /// Explicit hyperbox override; by default derived from the lymphocyte
    /// floor.
    pub state_box: Option<StateBox>,
    pub control_ranges: ControlRanges,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            levels: mixcert_core::sampling::DEFAULT_LEVELS.to_vec(),
            per_level: 1000,
            scale: SamplingScale::Log,
            state_box: None,
            control_ranges: ControlRanges::default(),
        }
    }
}

impl SamplingSection {
    pub fn state_box(&self, labels: &LabelSection) -> StateBox {
        self.state_box.unwrap_or_else(|| StateBox::reference(labels.lymphocyte_floor))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestSection {
    pub n_trees: usize,
    pub max_leaves: usize,
    pub bootstrap: bool,
    pub test_fraction: f64,
}

impl Default for ForestSection {
    fn default() -> Self {
        Self { n_trees: 100, max_leaves: 2000, bootstrap: true, test_fraction: 0.3 }
    }
}

impl ForestSection {
    pub fn classifier_config(&self, seed: u64) -> mixcert_core::forest::ForestConfig {
        mixcert_core::forest::ForestConfig {
            n_trees: self.n_trees,
            max_leaves: self.max_leaves,
            bootstrap: self.bootstrap,
            ..mixcert_core::forest::ForestConfig::classifier(seed)
        }
    }

    pub fn regressor_config(&self, seed: u64) -> mixcert_core::forest::ForestConfig {
        mixcert_core::forest::ForestConfig {
            n_trees: self.n_trees,
            max_leaves: self.max_leaves,
            bootstrap: self.bootstrap,
            ..mixcert_core::forest::ForestConfig::regressor(seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionSection {
    /// Reduced feature count for the tumor classifier.
    pub k_tumor: usize,
    /// Reduced feature count for the health classifier.
    pub k_health: usize,
    /// Alternative cumulative-importance policy; when set, overrides the
    /// top-k counts.
    pub cumulative_mass: Option<f64>,
}

impl Default for SelectionSection {
    fn default() -> Self {
        Self { k_tumor: 5, k_health: 7, cumulative_mass: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertificationSection {
    pub eta: f64,
    pub delta: f64,
    pub accepted_failures: u64,
    /// Scenario-cloud size; `null` evaluates the sample-size bound at the
    /// configured grid cardinality.
    pub scenario_count: Option<u64>,
    /// Query the reduced-feature surrogates (when available) rather than the
    /// full-feature ones.
    pub use_reduced_models: bool,
    /// Frozen values of the control knobs outside theta.
    pub fixed: FixedKnobs,
}

impl Default for CertificationSection {
    fn default() -> Self {
        Self {
            eta: 0.05,
            delta: 1e-3,
            accepted_failures: 1,
            scenario_count: None,
            use_reduced_models: true,
            fixed: FixedKnobs::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThetaGridSection {
    pub r: Vec<f64>,
    pub beta_c: Vec<f64>,
    pub kappa: Vec<f64>,
    pub t_stop: Vec<f64>,
}

impl Default for ThetaGridSection {
    fn default() -> Self {
        let g = ThetaGrid::reference();
        Self { r: g.r, beta_c: g.beta_c, kappa: g.kappa, t_stop: g.t_stop }
    }
}

impl ThetaGridSection {
    pub fn to_core(&self) -> CliResult<ThetaGrid> {
        ThetaGrid::new(self.r.clone(), self.beta_c.clone(), self.kappa.clone(), self.t_stop.clone())
            .map_err(Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriceSection {
    pub chemo: f64,
    pub immuno: f64,
    pub vaccine: f64,
}

impl Default for PriceSection {
    fn default() -> Self {
        let third = 1.0 / 3.0;
        Self { chemo: third, immuno: third, vaccine: third }
    }
}

impl PriceSection {
    pub fn to_array(&self) -> [f64; 3] {
        [self.chemo, self.immuno, self.vaccine]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DashboardSection {
    pub n_tumor: usize,
    pub n_lymphocytes: usize,
    pub zetas: Vec<f64>,
}

impl Default for DashboardSection {
    fn default() -> Self {
        Self { n_tumor: 20, n_lymphocytes: 20, zetas: vec![0.0, 0.2, 0.4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurvesSection {
    /// Lymphocyte starting levels as multiples of the floor C_min.
    pub c0_over_floor: Vec<f64>,
    pub n_tumor: usize,
    pub zeta: f64,
}

impl Default for CurvesSection {
    fn default() -> Self {
        Self { c0_over_floor: vec![1.1, 1.5, 2.0, 3.0], n_tumor: 20, zeta: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSection {
    /// Closed-loop re-simulations per checked cell.
    pub loops_per_cell: u64,
    /// Upper bound on the number of feasible cells to check.
    pub max_cells: usize,
    /// Two-sided level of the binomial acceptance region.
    pub interval_alpha: f64,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self { loops_per_cell: 50, max_cells: 24, interval_alpha: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// Initial state for single-scenario runs.
    pub x0: StateVector,
    pub control: ControlParameters,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            x0: StateVector::new(1e7, 1e2, 1e3, 6.25e10, 1e-3, 1e-3),
            control: ControlParameters {
                t_stop: 100.0,
                r: 1.0,
                mu_c: 0.5,
                beta_c: 1.5,
                c_d: 1.15,
                kappa: 0.5,
                t_s: 1.0,
            },
        }
    }
}

/// The complete run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Path of the nominal-parameter data file.
    pub nominal_params: PathBuf,
    /// Master seed; every randomized stage derives its own stream space
    /// from it.
    pub seed: u64,
    /// Worker threads (0 = all available cores).
    pub workers: usize,
    pub protocol: ProtocolSection,
    pub labels: LabelSection,
    pub law: LawSection,
    pub sampling: SamplingSection,
    pub forest: ForestSection,
    pub selection: SelectionSection,
    pub certification: CertificationSection,
    pub theta_grid: ThetaGridSection,
    pub prices: PriceSection,
    pub dashboard: DashboardSection,
    pub curves: CurvesSection,
    pub validate: ValidateSection,
    pub simulate: SimulateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nominal_params: PathBuf::from("data/nominal_params.json"),
            seed: 7,
            workers: 0,
            protocol: ProtocolSection::default(),
            labels: LabelSection::default(),
            law: LawSection::default(),
            sampling: SamplingSection::default(),
            forest: ForestSection::default(),
            selection: SelectionSection::default(),
            certification: CertificationSection::default(),
            theta_grid: ThetaGridSection::default(),
            prices: PriceSection::default(),
            dashboard: DashboardSection::default(),
            curves: CurvesSection::default(),
            validate: ValidateSection::default(),
            simulate: SimulateSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses a JSON config file over the defaults; unknown keys anywhere in
    /// the document are rejected with the parser's line/column position.
    pub fn load(path: &Path) -> CliResult<Self> {
        if !path.exists() {
            return Err(CliError::MissingInput(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Loads and validates the nominal-parameter file.
    pub fn load_nominal(&self) -> CliResult<NominalParameterSet> {
        if !self.nominal_params.exists() {
            return Err(CliError::MissingInput(self.nominal_params.clone()));
        }
        NominalParameterSet::load(&self.nominal_params).map_err(Into::into)
    }

    /// Full cross-section validation; must pass before any compute starts.
    pub fn validate(&self, nominal: &NominalParameterSet) -> CliResult<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        self.protocol.to_core().validate()?;
        self.labels.to_core().validate()?;
        self.law.to_core(nominal, &self.labels).validate()?;
        self.sampling.control_ranges.validate()?;
        self.sampling.state_box(&self.labels).validate(self.labels.lymphocyte_floor)?;
        if self.sampling.levels.is_empty() || self.sampling.per_level == 0 {
            return fail("sampling needs at least one level and one row per level".into());
        }
        for z in self.sampling.levels.iter().chain(self.dashboard.zetas.iter()) {
            if !(*z >= 0.0 && *z < 1.0) {
                return fail(format!("uncertainty level {z} outside [0, 1)"));
            }
        }
        if !(self.curves.zeta >= 0.0 && self.curves.zeta < 1.0) {
            return fail(format!("curves zeta {} outside [0, 1)", self.curves.zeta));
        }
        self.forest_checks()?;
        if self.selection.k_tumor == 0 || self.selection.k_health == 0 {
            return fail("selection counts must be positive".into());
        }
        if let Some(mass) = self.selection.cumulative_mass {
            if !(mass > 0.0 && mass <= 1.0) {
                return fail(format!("cumulative mass {mass} outside (0, 1]"));
            }
        }
        let grid = self.theta_grid.to_core()?;
        mixcert_core::certify::required_samples(&mixcert_core::certify::CertificationConfig {
            eta: self.certification.eta,
            delta: self.certification.delta,
            accepted_failures: self.certification.accepted_failures,
            n_theta: grid.len(),
        })?;
        mixcert_core::certify::expected_cost([0.0; 3], self.prices.to_array())?;
        if self.dashboard.n_tumor == 0 || self.dashboard.n_lymphocytes == 0 || self.curves.n_tumor == 0 {
            return fail("dashboard/curves grids need at least one point per axis".into());
        }
        if self.curves.c0_over_floor.iter().any(|v| *v < 1.05) {
            return fail("curve C0 multiples must be >= 1.05 (the sampling box floor)".into());
        }
        if self.validate.loops_per_cell == 0 || self.validate.max_cells == 0 {
            return fail("validation needs at least one loop and one cell".into());
        }
        if !(self.validate.interval_alpha > 0.0 && self.validate.interval_alpha < 1.0) {
            return fail("interval alpha must lie in (0, 1)".into());
        }
        self.simulate.control.validate()?;
        if !self.simulate.x0.is_valid() {
            return fail("simulate.x0 must be finite and nonnegative".into());
        }
        Ok(())
    }

    fn forest_checks(&self) -> CliResult<()> {
        self.forest.classifier_config(0).validate()?;
        if !(self.forest.test_fraction > 0.0 && self.forest.test_fraction < 1.0) {
            return Err(CliError::Config(format!(
                "test fraction {} outside (0, 1)",
                self.forest.test_fraction
            )));
        }
        Ok(())
    }

    /// The cloud-generation view of this config.
    pub fn cloud_config(&self, nominal: &NominalParameterSet) -> CloudConfig {
        CloudConfig {
            levels: self.sampling.levels.clone(),
            per_level: self.sampling.per_level,
            state_box: self.sampling.state_box(&self.labels),
            control_ranges: self.sampling.control_ranges.clone(),
            scale: self.sampling.scale,
            protocol: self.protocol.to_core(),
            labels: self.labels.to_core(),
            law: self.law.to_core(nominal, &self.labels),
            seed: self.seed,
        }
    }

    /// Scenario-cloud size: the explicit override when set, otherwise the
    /// sample-size bound at the configured grid cardinality.
    pub fn scenario_count(&self, n_theta: usize) -> CliResult<u64> {
        if let Some(n) = self.certification.scenario_count {
            return Ok(n);
        }
        mixcert_core::certify::required_samples(&mixcert_core::certify::CertificationConfig {
            eta: self.certification.eta,
            delta: self.certification.delta,
            accepted_failures: self.certification.accepted_failures,
            n_theta,
        })
        .map_err(Into::into)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::default();
        let nominal = NominalParameterSet::load(Path::new(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/nominal_params.json"
        )))
        .unwrap();
        cfg.validate(&nominal).unwrap();
        assert_eq!(cfg.theta_grid.to_core().unwrap().len(), 81);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"seed": 1, "bogus": true}"#);
        assert!(err.is_err());
        let err = serde_json::from_str::<RunConfig>(r#"{"forest": {"n_trees": 5, "oops": 1}}"#);
        assert!(err.is_err());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"seed": 42, "forest": {"n_trees": 10}}"#).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.forest.n_trees, 10);
        assert_eq!(cfg.forest.max_leaves, 2000);
        assert_eq!(cfg.labels.lymphocyte_floor, 3.125e10);
    }

    #[test]
    fn scenario_count_override_and_bound() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.scenario_count(81).unwrap(), 342);
        cfg.certification.scenario_count = Some(386);
        assert_eq!(cfg.scenario_count(81).unwrap(), 386);
    }

    #[test]
    fn config_echo_round_trips() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
