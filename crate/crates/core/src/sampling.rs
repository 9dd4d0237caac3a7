//! Monte-Carlo generation of the learning cloud: model-parameter
//! realizations per uncertainty level, initial states from a hyperbox,
//! control parameters from their sampling ranges, and the labeled dataset
//! obtained by simulating every closed loop.
//!
//! Reproducibility contract: the dataset is a pure function of
//! (configuration, seed, nominal parameters). Every row draws from its own
//! ChaCha stream keyed by the global row index, so rows are independent and
//! the output is identical regardless of worker count or scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ModelParameters, NominalParameterSet, StateVector};
use crate::error::{Error, Result};
use crate::feedback::{ControlLawConfig, ControlParameters, ParameterizedLaw};
use crate::protocol::{extract_labels, simulate_closed_loop, LabelConfig, Labels, ProtocolConfig};
use crate::schema;

/// Relative half-width of the coefficient dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyLevel {
    pub zeta: f64,
}

impl UncertaintyLevel {
    pub fn new(zeta: f64) -> Result<Self> {
        if !(zeta >= 0.0 && zeta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "uncertainty level must lie in [0, 1), got {zeta}"
            )));
        }
        Ok(Self { zeta })
    }
}

/// The default level set.
pub const DEFAULT_LEVELS: [f64; 7] = [0.0, 0.10, 0.20, 0.30, 0.40, 0.50, 0.80];

/// Hyperbox for initial-state sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateBox {
    pub lower: StateVector,
    pub upper: StateVector,
}

/// Value the drug concentration components are pinned to at t = 0.
pub const DRUG_PIN: f64 = 1e-3;

impl StateBox {
    /// The sampling hyperbox: tumor 1e5..1e9, NK 1e-3..1e3, CD8 1e-3..1e8,
    /// lymphocytes 1.05 * C_min..10^11.1, drugs pinned at 1e-3.
    pub fn reference(c_min: f64) -> Self {
        Self {
            lower: StateVector::new(1e5, 1e-3, 1e-3, 1.05 * c_min, DRUG_PIN, DRUG_PIN),
            upper: StateVector::new(1e9, 1e3, 1e8, 10f64.powf(11.1), DRUG_PIN, DRUG_PIN),
        }
    }

    pub fn validate(&self, c_min: f64) -> Result<()> {
        let lo = self.lower.to_array();
        let hi = self.upper.to_array();
        for i in 0..6 {
            if !(lo[i].is_finite() && hi[i].is_finite() && lo[i] <= hi[i] && lo[i] >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "state box component {i} invalid: [{}, {}]",
                    lo[i], hi[i]
                )));
            }
        }
        if self.lower.circulating < 1.05 * c_min - 1e-6 * c_min {
            return Err(Error::InvalidConfig(format!(
                "lymphocyte lower bound {} must be >= 1.05 * C_min = {}",
                self.lower.circulating,
                1.05 * c_min
            )));
        }
        for v in [self.lower.chemo, self.upper.chemo, self.lower.immuno, self.upper.immuno] {
            if v > 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "drug components must be pinned near 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Whether multi-decade ranges are sampled log-uniformly or literally
/// uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScale {
    #[default]
    Log,
    Linear,
}

/// Sampling ranges of the control parameters. T_s is drawn equiprobably from
/// a finite set; c_d and kappa are linear-uniform; the rest log-uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlRanges {
    pub t_stop: (f64, f64),
    pub r: (f64, f64),
    pub mu_c: (f64, f64),
    pub beta_c: (f64, f64),
    pub c_d: (f64, f64),
    pub kappa: (f64, f64),
    pub t_s_choices: Vec<f64>,
}

impl Default for ControlRanges {
    fn default() -> Self {
        Self {
            t_stop: (1e1, 1e3),
            r: (1e-1, 1e1),
            mu_c: (1e-1, 1.0),
            // The non-saturating domain of the safety multiplier: the chemo
            // gate beta_C * C_min sweeps the reachable lymphocyte range
            // [1.05 C_min, 10^11.1]; below 1.05 the gate is always open,
            // above ~4 always closed. Covers the optimization grid's
            // {1.2, 1.5, 2}.
            beta_c: (1.05, 4.0),
            c_d: (0.8, 1.5),
            kappa: (0.2, 0.9),
            t_s_choices: vec![0.5, 1.0, 2.0],
        }
    }
}

impl ControlRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("T_stop", self.t_stop),
            ("r", self.r),
            ("mu_C", self.mu_c),
            ("beta_C", self.beta_c),
            ("c_d", self.c_d),
            ("kappa", self.kappa),
        ] {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
                return Err(Error::InvalidConfig(format!(
                    "control range {name} invalid: [{lo}, {hi}]"
                )));
            }
        }
        if self.t_s_choices.is_empty() || self.t_s_choices.iter().any(|v| *v <= 0.0) {
            return Err(Error::InvalidConfig("T_s choices must be positive".into()));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// Log-uniform when the range spans more than a decade (and log sampling is
/// selected), linear-uniform otherwise.
pub fn scaled_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64, scale: SamplingScale) -> f64 {
    if lo == hi {
        return lo;
    }
    match scale {
        SamplingScale::Log if lo > 0.0 && hi / lo > 10.0 => log_uniform(rng, lo, hi),
        _ => uniform(rng, lo, hi),
    }
}

/// One coefficient draw per component, uniform in
/// `[(1 - zeta) p_nom, (1 + zeta) p_nom]`.
pub fn draw_model_parameters(
    zeta: f64,
    nominal: &NominalParameterSet,
    rng: &mut ChaCha8Rng,
) -> ModelParameters {
    let nom = nominal.params().to_array();
    let mut out = [0.0f64; 28];
    for (slot, value) in out.iter_mut().zip(nom.iter()) {
        *slot = if zeta == 0.0 {
            *value
        } else {
            uniform(rng, (1.0 - zeta) * value, (1.0 + zeta) * value)
        };
    }
    ModelParameters::from_array(out)
}

/// One initial state draw from the box. Degenerate components (lower ==
/// upper, e.g. the pinned drugs) consume no randomness.
pub fn draw_initial_state(
    state_box: &StateBox,
    scale: SamplingScale,
    rng: &mut ChaCha8Rng,
) -> StateVector {
    let lo = state_box.lower.to_array();
    let hi = state_box.upper.to_array();
    let mut out = [0.0f64; 6];
    for i in 0..6 {
        out[i] = scaled_uniform(rng, lo[i], hi[i], scale);
    }
    StateVector::from_array(out)
}

/// One control-parameter draw from the sampling ranges.
pub fn draw_control_parameters(ranges: &ControlRanges, rng: &mut ChaCha8Rng) -> ControlParameters {
    let t_stop = log_uniform(rng, ranges.t_stop.0, ranges.t_stop.1);
    let r = log_uniform(rng, ranges.r.0, ranges.r.1);
    let mu_c = log_uniform(rng, ranges.mu_c.0, ranges.mu_c.1);
    let beta_c = log_uniform(rng, ranges.beta_c.0, ranges.beta_c.1);
    let c_d = uniform(rng, ranges.c_d.0, ranges.c_d.1);
    let kappa = uniform(rng, ranges.kappa.0, ranges.kappa.1);
    let n = ranges.t_s_choices.len();
    let idx = ((rng.random::<f64>() * n as f64) as usize).min(n - 1);
    let t_s = ranges.t_s_choices[idx];
    ControlParameters { t_stop, r, mu_c, beta_c, c_d, kappa, t_s }
}

/// Batch sampler for the model coefficients (one shared stream).
pub fn sample_model_parameters(
    zeta: f64,
    count: usize,
    nominal: &NominalParameterSet,
    rng: &mut ChaCha8Rng,
) -> Vec<ModelParameters> {
    (0..count).map(|_| draw_model_parameters(zeta, nominal, rng)).collect()
}

/// Batch sampler for initial states (one shared stream).
pub fn sample_initial_states(
    count: usize,
    state_box: &StateBox,
    scale: SamplingScale,
    rng: &mut ChaCha8Rng,
) -> Vec<StateVector> {
    (0..count).map(|_| draw_initial_state(state_box, scale, rng)).collect()
}

/// Batch sampler for control parameters (one shared stream).
pub fn sample_control_parameters(
    count: usize,
    ranges: &ControlRanges,
    rng: &mut ChaCha8Rng,
) -> Vec<ControlParameters> {
    (0..count).map(|_| draw_control_parameters(ranges, rng)).collect()
}

/// One labeled scenario: the feature triplet, its uncertainty tag and the
/// extracted labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub x0: StateVector,
    pub params: ModelParameters,
    pub ctrl: ControlParameters,
    pub zeta: f64,
    pub labels: Labels,
}

impl ScenarioRecord {
    /// The 41 features in schema order.
    pub fn features(&self) -> Vec<f64> {
        schema::feature_row(&self.x0, &self.params, &self.ctrl)
    }
}

/// A scenario whose closed loop left the numeric domain; excluded from the
/// dataset but counted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowFailure {
    pub row: usize,
    pub zeta: f64,
    pub reason: String,
}

/// The labeled learning cloud.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub schema_version: String,
    pub records: Vec<ScenarioRecord>,
    pub failures: Vec<RowFailure>,
}

/// Everything the cloud generator needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CloudConfig {
    /// Uncertainty levels; rows are grouped by level in order.
    pub levels: Vec<f64>,
    /// Scenarios per level.
    pub per_level: usize,
    pub state_box: StateBox,
    pub control_ranges: ControlRanges,
    pub scale: SamplingScale,
    pub protocol: ProtocolConfig,
    pub labels: LabelConfig,
    pub law: ControlLawConfig,
    pub seed: u64,
}

impl CloudConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.per_level == 0 {
            return Err(Error::InvalidConfig(
                "cloud needs at least one level and one scenario per level".into(),
            ));
        }
        for zeta in &self.levels {
            UncertaintyLevel::new(*zeta)?;
        }
        self.state_box.validate(self.labels.lymphocyte_floor)?;
        self.control_ranges.validate()?;
        self.protocol.validate()?;
        self.labels.validate()?;
        self.law.validate()?;
        Ok(())
    }

    pub fn total_rows(&self) -> usize {
        self.levels.len() * self.per_level
    }
}

/// Draws the i-th triplet from its own stream and simulates its closed loop.
fn simulate_row(
    cfg: &CloudConfig,
    nominal: &NominalParameterSet,
    row: usize,
) -> std::result::Result<ScenarioRecord, RowFailure> {
    let zeta = cfg.levels[row / cfg.per_level];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(row as u64);
    // Fixed draw order: 28 coefficients, initial state, control parameters.
    let params = draw_model_parameters(zeta, nominal, &mut rng);
    let x0 = draw_initial_state(&cfg.state_box, cfg.scale, &mut rng);
    let ctrl = draw_control_parameters(&cfg.control_ranges, &mut rng);

    let law = ParameterizedLaw { ctrl, cfg: &cfg.law, nominal };
    match simulate_closed_loop(&x0, &params, &ctrl, &cfg.protocol, &law) {
        Ok(traj) => {
            let labels = extract_labels(&traj, &cfg.labels, cfg.law.max_rates());
            Ok(ScenarioRecord { x0, params, ctrl, zeta, labels })
        }
        Err(e) => Err(RowFailure { row, zeta, reason: e.to_string() }),
    }
}

/// Generates the full cloud: one record per (level, index) pair, paired by
/// index (the i-th coefficient draw with the i-th state and i-th control
/// draw). Rows run in parallel; output order is by row index.
pub fn generate_dataset(cfg: &CloudConfig, nominal: &NominalParameterSet) -> Result<Dataset> {
    cfg.validate()?;
    let total = cfg.total_rows();
    let outcomes: Vec<_> = (0..total)
        .into_par_iter()
        .map(|row| simulate_row(cfg, nominal, row))
        .collect();
    let mut records = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(rec) => records.push(rec),
            Err(fail) => failures.push(fail),
        }
    }
    Ok(Dataset {
        schema_version: schema::SCHEMA_VERSION.to_string(),
        records,
        failures,
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

impl Dataset {
    /// Serializes to CSV with the canonical header; booleans as 0/1, floats
    /// as shortest round-trip decimals.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(schema::csv_header())?;
        for rec in &self.records {
            let mut fields: Vec<String> =
                rec.features().iter().map(|v| fmt_f64(*v)).collect();
            fields.push(fmt_f64(rec.zeta));
            fields.push(fmt_f64(rec.labels.chemo_used));
            fields.push(fmt_f64(rec.labels.immuno_used));
            fields.push(fmt_f64(rec.labels.vaccine_used));
            fields.push(fmt_f64(rec.labels.final_tumor));
            fields.push(if rec.labels.tumor_contracted { "1" } else { "0" }.to_string());
            fields.push(if rec.labels.health_preserved { "1" } else { "0" }.to_string());
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a CSV produced by [`Dataset::write_csv`], checking the header
    /// against the canonical schema.
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> =
            r.headers()?.iter().map(|s| s.to_string()).collect();
        let expected = schema::csv_header();
        if header != expected {
            return Err(Error::SchemaMismatch(format!(
                "dataset header does not match schema {}",
                schema::SCHEMA_VERSION
            )));
        }
        let mut records = Vec::new();
        for row in r.records() {
            let row = row?;
            let values: std::result::Result<Vec<f64>, _> =
                row.iter().map(|s| s.parse::<f64>()).collect();
            let values = values.map_err(|e| Error::SchemaMismatch(format!("bad number: {e}")))?;
            if values.len() != expected.len() {
                return Err(Error::SchemaMismatch(format!(
                    "row has {} fields, expected {}",
                    values.len(),
                    expected.len()
                )));
            }
            let x0 = StateVector::from_array(values[0..6].try_into().unwrap());
            let params = ModelParameters::from_array(values[6..34].try_into().unwrap());
            let c = &values[34..41];
            let ctrl = ControlParameters {
                t_stop: c[0],
                r: c[1],
                mu_c: c[2],
                beta_c: c[3],
                c_d: c[4],
                kappa: c[5],
                t_s: c[6],
            };
            let labels = Labels {
                chemo_used: values[42],
                immuno_used: values[43],
                vaccine_used: values[44],
                final_tumor: values[45],
                tumor_contracted: values[46] != 0.0,
                health_preserved: values[47] != 0.0,
            };
            records.push(ScenarioRecord { x0, params, ctrl, zeta: values[41], labels });
        }
        Ok(Dataset {
            schema_version: schema::SCHEMA_VERSION.to_string(),
            records,
            failures: Vec::new(),
        })
    }

    /// Feature matrix (41 columns) for the learners.
    pub fn feature_matrix(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.features()).collect()
    }
}
