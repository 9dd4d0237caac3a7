//! Randomized certification and constrained grid optimization over the free
//! control parameters.
//!
//! The number of scenario draws needed to certify—with confidence 1 − delta
//! and success probability 1 − eta, allowing m unsuccessful scenarios—is
//!
//! `N = ceil[(1/eta) (m + ln(n_Theta/delta) + sqrt(2 m ln(n_Theta/delta)))]`.
//!
//! One shared scenario set is evaluated against every candidate theta (the
//! n_Theta term in the bound presumes exactly that), and the same base seed
//! drives every uncertainty level and grid cell so that region comparisons
//! across levels are not confounded by sampling noise.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ModelParameters, NominalParameterSet, StateVector};
use crate::error::{Error, Result};
use crate::feedback::ControlParameters;
use crate::forest::{ForestModel, TaskKind};
use crate::sampling::{draw_model_parameters, scaled_uniform, SamplingScale, StateBox, DRUG_PIN};
use crate::schema;

/// Parameters of the certification bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificationConfig {
    /// Accepted failure probability (success level 1 - eta).
    pub eta: f64,
    /// Confidence complement (confidence 1 - delta).
    pub delta: f64,
    /// Accepted number of unsuccessful scenarios.
    pub accepted_failures: u64,
    /// Cardinality of the candidate set Theta.
    pub n_theta: usize,
}

impl CertificationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidConfig(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.n_theta < 1 {
            return Err(Error::InvalidConfig("n_theta must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sample-size bound; monotone nondecreasing in m and n_Theta, nonincreasing
/// in eta.
pub fn required_samples(cfg: &CertificationConfig) -> Result<u64> {
    let ratio = cfg.n_theta as f64 / cfg.delta;
    if ratio <= 1.0 {
        return Err(Error::Domain(format!(
            "n_theta/delta = {ratio} must exceed 1 for the bound to be defined"
        )));
    }
    cfg.validate()?;
    let ln_ratio = ratio.ln();
    let m = cfg.accepted_failures as f64;
    let bound = (m + ln_ratio + (2.0 * m * ln_ratio).sqrt()) / cfg.eta;
    Ok(bound.ceil() as u64)
}

/// Published sample sizes for delta = 1e-3, m = 1 (columns are the etas in
/// [`TABLE4_ETAS`]). These exceed the bound above by roughly 10-13%; both
/// numbers are reported side by side, never silently reconciled.
pub const TABLE4_ETAS: [f64; 4] = [0.1, 0.05, 0.01, 0.001];

pub const TABLE4_ROWS: [(usize, [u64; 4]); 6] = [
    (1, [132, 264, 1317, 13164]),
    (5, [154, 308, 1536, 15354]),
    (10, [163, 326, 1628, 16280]),
    (100, [193, 386, 1930, 19299]),
    (1000, [223, 445, 2225, 22249]),
    (10000, [252, 503, 2515, 25148]),
];

/// Published reference value for (n_theta, eta) at delta = 1e-3, m = 1, when
/// the pair appears in the table.
pub fn table4_reference(n_theta: usize, eta: f64) -> Option<u64> {
    let col = TABLE4_ETAS.iter().position(|e| (e - eta).abs() < 1e-12)?;
    TABLE4_ROWS.iter().find(|(n, _)| *n == n_theta).map(|(_, row)| row[col])
}

/// Published value adopted for a non-tabulated cardinality: the row of the
/// smallest tabulated cardinality at or above it (an 81-point grid reads the
/// 100 row, giving 386 at eta = 0.05).
pub fn table4_adopted(n_theta: usize, eta: f64) -> Option<u64> {
    let col = TABLE4_ETAS.iter().position(|e| (e - eta).abs() < 1e-12)?;
    TABLE4_ROWS
        .iter()
        .filter(|(n, _)| *n >= n_theta)
        .min_by_key(|(n, _)| *n)
        .map(|(_, row)| row[col])
}

/// The free decision variables theta = (r, beta_C, kappa, T_stop).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedControlVector {
    pub r: f64,
    pub beta_c: f64,
    pub kappa: f64,
    pub t_stop: f64,
}

impl ReducedControlVector {
    pub fn to_array(&self) -> [f64; 4] {
        [self.r, self.beta_c, self.kappa, self.t_stop]
    }
}

/// Finite candidate grid; iteration is lexicographic in
/// (r, beta_C, kappa, T_stop) with each axis sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub r: Vec<f64>,
    pub beta_c: Vec<f64>,
    pub kappa: Vec<f64>,
    pub t_stop: Vec<f64>,
}

impl ThetaGrid {
    pub fn new(r: Vec<f64>, beta_c: Vec<f64>, kappa: Vec<f64>, t_stop: Vec<f64>) -> Result<Self> {
        let mut grid = Self { r, beta_c, kappa, t_stop };
        for axis in [&mut grid.r, &mut grid.beta_c, &mut grid.kappa, &mut grid.t_stop] {
            if axis.is_empty() || axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("theta grid axes must be non-empty and finite".into()));
            }
            axis.sort_by(|a, b| a.total_cmp(b));
            axis.dedup();
        }
        Ok(grid)
    }

    /// The 81-point grid used throughout: r in {0.1, 5, 10}, beta_C in
    /// {1.2, 1.5, 2}, kappa in {0.2, 0.5, 0.9}, T_stop in {10, 100, 1000}.
    pub fn reference() -> Self {
        Self::new(
            vec![0.1, 5.0, 10.0],
            vec![1.2, 1.5, 2.0],
            vec![0.2, 0.5, 0.9],
            vec![10.0, 100.0, 1000.0],
        )
        .expect("reference grid is valid")
    }

    pub fn len(&self) -> usize {
        self.r.len() * self.beta_c.len() * self.kappa.len() * self.t_stop.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = ReducedControlVector> + '_ {
        self.r.iter().flat_map(move |&r| {
            self.beta_c.iter().flat_map(move |&beta_c| {
                self.kappa.iter().flat_map(move |&kappa| {
                    self.t_stop
                        .iter()
                        .map(move |&t_stop| ReducedControlVector { r, beta_c, kappa, t_stop })
                })
            })
        })
    }
}

/// The randomness unknown to the controller: the unmeasured initial immune
/// states and the patient's coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioVector {
    /// Initial NK count x2(0).
    pub nk0: f64,
    /// Initial CD8+T count x3(0).
    pub cd80: f64,
    pub params: ModelParameters,
}

/// Draws a shared scenario cloud for one uncertainty level. Scenario j uses
/// ChaCha stream j of `seed` regardless of the level, so draws are coupled
/// across levels (the same unit deviates, scaled by zeta).
pub fn draw_scenarios(
    count: u64,
    zeta: f64,
    state_box: &StateBox,
    nominal: &NominalParameterSet,
    scale: SamplingScale,
    seed: u64,
) -> Vec<ScenarioVector> {
    let lo = state_box.lower.to_array();
    let hi = state_box.upper.to_array();
    (0..count)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j);
            let params = draw_model_parameters(zeta, nominal, &mut rng);
            let nk0 = scaled_uniform(&mut rng, lo[1], hi[1], scale);
            let cd80 = scaled_uniform(&mut rng, lo[2], hi[2], scale);
            ScenarioVector { nk0, cd80, params }
        })
        .collect()
}

/// Control knobs outside theta, frozen at their reference values when
/// assembling surrogate inputs (and when re-simulating certified cells).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedKnobs {
    pub mu_c: f64,
    pub c_d: f64,
    pub t_s: f64,
}

impl Default for FixedKnobs {
    fn default() -> Self {
        Self { mu_c: 0.5, c_d: 1.15, t_s: 1.0 }
    }
}

/// Full control vector from theta plus the frozen knobs.
pub fn assemble_control(theta: &ReducedControlVector, fixed: &FixedKnobs) -> ControlParameters {
    ControlParameters {
        t_stop: theta.t_stop,
        r: theta.r,
        mu_c: fixed.mu_c,
        beta_c: theta.beta_c,
        c_d: fixed.c_d,
        kappa: theta.kappa,
        t_s: fixed.t_s,
    }
}

/// Initial state of a certified scenario: the dashboard coordinates plus the
/// scenario's immune states, drugs pinned as in training.
pub fn assemble_initial_state(t0: f64, c0: f64, omega: &ScenarioVector) -> StateVector {
    StateVector::new(t0, omega.nk0, omega.cd80, c0, DRUG_PIN, DRUG_PIN)
}

/// Full 41-feature row for surrogate evaluation, in canonical schema order.
pub fn assemble_row(
    t0: f64,
    c0: f64,
    omega: &ScenarioVector,
    theta: &ReducedControlVector,
    fixed: &FixedKnobs,
) -> Vec<f64> {
    let x0 = assemble_initial_state(t0, c0, omega);
    let ctrl = assemble_control(theta, fixed);
    schema::feature_row(&x0, &omega.params, &ctrl)
}

/// The five fitted surrogates.
#[derive(Debug, Clone)]
pub struct SurrogateSet {
    pub f_t: ForestModel,
    pub f_h: ForestModel,
    pub f_m: ForestModel,
    pub f_i: ForestModel,
    pub f_l: ForestModel,
}

impl SurrogateSet {
    pub fn validate(&self) -> Result<()> {
        let names = schema::feature_names();
        for (label, model, kind) in [
            ("F_T", &self.f_t, TaskKind::Classifier),
            ("F_H", &self.f_h, TaskKind::Classifier),
            ("F_M", &self.f_m, TaskKind::Regressor),
            ("F_I", &self.f_i, TaskKind::Regressor),
            ("F_L", &self.f_l, TaskKind::Regressor),
        ] {
            if model.schema_version != schema::SCHEMA_VERSION {
                return Err(Error::SchemaMismatch(format!(
                    "{label} was trained under schema {}, expected {}",
                    model.schema_version,
                    schema::SCHEMA_VERSION
                )));
            }
            if model.kind != kind {
                return Err(Error::SchemaMismatch(format!("{label} has the wrong task kind")));
            }
            schema::projection(&names, &model.feature_names)?;
        }
        Ok(())
    }
}

/// Caches per-scenario feature rows and per-model projections so the grid
/// search only patches the (T0, C0, theta) slots.
struct ThetaEvaluator<'a> {
    surrogates: &'a SurrogateSet,
    rows: Vec<Vec<f64>>,
    proj_t: Vec<usize>,
    proj_h: Vec<usize>,
    proj_m: Vec<usize>,
    proj_i: Vec<usize>,
    proj_l: Vec<usize>,
}

// Patched slots in the canonical schema.
const SLOT_T0: usize = 0; // x1
const SLOT_C0: usize = 3; // x4
const SLOT_T_STOP: usize = 34;
const SLOT_R: usize = 35;
const SLOT_BETA_C: usize = 37;
const SLOT_KAPPA: usize = 39;

impl<'a> ThetaEvaluator<'a> {
    fn new(
        surrogates: &'a SurrogateSet,
        scenarios: &[ScenarioVector],
        fixed: &FixedKnobs,
    ) -> Result<Self> {
        surrogates.validate()?;
        if scenarios.is_empty() {
            return Err(Error::InvalidConfig("scenario set is empty".into()));
        }
        let names = schema::feature_names();
        let template_theta =
            ReducedControlVector { r: 0.0, beta_c: 0.0, kappa: 0.0, t_stop: 0.0 };
        let rows: Vec<Vec<f64>> = scenarios
            .iter()
            .map(|omega| assemble_row(0.0, 0.0, omega, &template_theta, fixed))
            .collect();
        Ok(Self {
            surrogates,
            rows,
            proj_t: schema::projection(&names, &surrogates.f_t.feature_names)?,
            proj_h: schema::projection(&names, &surrogates.f_h.feature_names)?,
            proj_m: schema::projection(&names, &surrogates.f_m.feature_names)?,
            proj_i: schema::projection(&names, &surrogates.f_i.feature_names)?,
            proj_l: schema::projection(&names, &surrogates.f_l.feature_names)?,
        })
    }

    fn patch(row: &mut [f64], t0: f64, c0: f64, theta: &ReducedControlVector) {
        row[SLOT_T0] = t0;
        row[SLOT_C0] = c0;
        row[SLOT_T_STOP] = theta.t_stop;
        row[SLOT_R] = theta.r;
        row[SLOT_BETA_C] = theta.beta_c;
        row[SLOT_KAPPA] = theta.kappa;
    }

    fn p_hat(&mut self, t0: f64, c0: f64, theta: &ReducedControlVector) -> f64 {
        let mut successes = 0usize;
        for row in &mut self.rows {
            Self::patch(row, t0, c0, theta);
            let ok = self.surrogates.f_t.predict_class_mapped(row, &self.proj_t)
                && self.surrogates.f_h.predict_class_mapped(row, &self.proj_h);
            successes += ok as usize;
        }
        successes as f64 / self.rows.len() as f64
    }

    fn q_hat(&mut self, t0: f64, c0: f64, theta: &ReducedControlVector) -> [f64; 3] {
        let mut sums = [0.0f64; 3];
        for row in &mut self.rows {
            Self::patch(row, t0, c0, theta);
            sums[0] += self.surrogates.f_m.predict_value_mapped(row, &self.proj_m);
            sums[1] += self.surrogates.f_i.predict_value_mapped(row, &self.proj_i);
            sums[2] += self.surrogates.f_l.predict_value_mapped(row, &self.proj_l);
        }
        let n = self.rows.len() as f64;
        [
            (sums[0] / n).max(0.0),
            (sums[1] / n).max(0.0),
            (sums[2] / n).max(0.0),
        ]
    }
}

/// Fraction of the scenario cloud on which both classifiers predict success.
pub fn estimate_success_probability(
    f_t: &ForestModel,
    f_h: &ForestModel,
    t0: f64,
    c0: f64,
    theta: &ReducedControlVector,
    scenarios: &[ScenarioVector],
    fixed: &FixedKnobs,
) -> Result<f64> {
    if scenarios.is_empty() {
        return Err(Error::InvalidConfig("scenario set is empty".into()));
    }
    let names = schema::feature_names();
    let proj_t = schema::projection(&names, &f_t.feature_names)?;
    let proj_h = schema::projection(&names, &f_h.feature_names)?;
    let mut successes = 0usize;
    for omega in scenarios {
        let row = assemble_row(t0, c0, omega, theta, fixed);
        let ok = f_t.predict_class_mapped(&row, &proj_t) && f_h.predict_class_mapped(&row, &proj_h);
        successes += ok as usize;
    }
    Ok(successes as f64 / scenarios.len() as f64)
}

/// Mean regressor output over the scenario cloud, clamped below at 0.
pub fn estimate_drug_expectation(
    f_sigma: &ForestModel,
    t0: f64,
    c0: f64,
    theta: &ReducedControlVector,
    scenarios: &[ScenarioVector],
    fixed: &FixedKnobs,
) -> Result<f64> {
    if scenarios.is_empty() {
        return Err(Error::InvalidConfig("scenario set is empty".into()));
    }
    let names = schema::feature_names();
    let proj = schema::projection(&names, &f_sigma.feature_names)?;
    let mut sum = 0.0;
    for omega in scenarios {
        let row = assemble_row(t0, c0, omega, theta, fixed);
        sum += f_sigma.predict_value_mapped(&row, &proj);
    }
    Ok((sum / scenarios.len() as f64).max(0.0))
}

/// Price-weighted expected cost. Weights must be nonnegative and sum to 1
/// within 1e-9.
pub fn expected_cost(q_hat: [f64; 3], prices: [f64; 3]) -> Result<f64> {
    let sum: f64 = prices.iter().sum();
    if prices.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::WeightSum(sum));
    }
    Ok(q_hat.iter().zip(prices.iter()).map(|(q, p)| q * p).sum())
}

/// Outcome of one grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaOutcome {
    pub feasible: bool,
    pub theta_star: Option<ReducedControlVector>,
    /// Success-probability estimate of theta_star when feasible, otherwise
    /// the best estimate seen over the grid.
    pub p_hat: f64,
    pub q_hat: Option<[f64; 3]>,
    pub j_hat: Option<f64>,
}

/// Evaluates every theta on the shared scenario set; the feasible set is
/// `{theta : P_hat >= 1 - m/N}` with N the scenario count, and the returned
/// theta minimizes the expected cost (ties resolve to the lexicographically
/// smallest theta via the grid's iteration order).
pub fn optimize_theta(
    t0: f64,
    c0: f64,
    grid: &ThetaGrid,
    scenarios: &[ScenarioVector],
    surrogates: &SurrogateSet,
    prices: [f64; 3],
    accepted_failures: u64,
    fixed: &FixedKnobs,
) -> Result<ThetaOutcome> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("theta grid is empty".into()));
    }
    expected_cost([0.0; 3], prices)?;
    let mut evaluator = ThetaEvaluator::new(surrogates, scenarios, fixed)?;
    let threshold = 1.0 - accepted_failures as f64 / scenarios.len() as f64;

    let mut best_p = f64::NEG_INFINITY;
    let mut best: Option<(ReducedControlVector, f64, [f64; 3], f64)> = None;
    for theta in grid.iter() {
        let p = evaluator.p_hat(t0, c0, &theta);
        best_p = best_p.max(p);
        if p >= threshold {
            let q = evaluator.q_hat(t0, c0, &theta);
            let j = expected_cost(q, prices)?;
            let better = match &best {
                None => true,
                Some((_, _, _, j_best)) => j < *j_best,
            };
            if better {
                best = Some((theta, p, q, j));
            }
        }
    }
    Ok(match best {
        Some((theta, p, q, j)) => ThetaOutcome {
            feasible: true,
            theta_star: Some(theta),
            p_hat: p,
            q_hat: Some(q),
            j_hat: Some(j),
        },
        None => ThetaOutcome {
            feasible: false,
            theta_star: None,
            p_hat: best_p,
            q_hat: None,
            j_hat: None,
        },
    })
}

/// One dashboard cell in the (T0, C0) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DashboardCell {
    pub t0: f64,
    pub c0: f64,
    pub zeta: f64,
    pub feasible: bool,
    pub theta_star: Option<ReducedControlVector>,
    pub p_hat: f64,
    pub q_hat: Option<[f64; 3]>,
    pub j_hat: Option<f64>,
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Runs one grid search per (T0, C0) cell against the shared scenario set.
/// Cells are evaluated concurrently and returned in row-major order (C0
/// outer, T0 inner).
pub fn build_dashboard(
    t0_values: &[f64],
    c0_values: &[f64],
    zeta: f64,
    grid: &ThetaGrid,
    scenarios: &[ScenarioVector],
    surrogates: &SurrogateSet,
    prices: [f64; 3],
    accepted_failures: u64,
    fixed: &FixedKnobs,
) -> Result<Vec<DashboardCell>> {
    let cells: Vec<(f64, f64)> = c0_values
        .iter()
        .flat_map(|&c0| t0_values.iter().map(move |&t0| (t0, c0)))
        .collect();
    cells
        .into_par_iter()
        .map(|(t0, c0)| {
            let outcome =
                optimize_theta(t0, c0, grid, scenarios, surrogates, prices, accepted_failures, fixed)?;
            Ok(DashboardCell {
                t0,
                c0,
                zeta,
                feasible: outcome.feasible,
                theta_star: outcome.theta_star,
                p_hat: outcome.p_hat,
                q_hat: outcome.q_hat,
                j_hat: outcome.j_hat,
            })
        })
        .collect()
}

/// Expected per-drug usage along log-spaced T0 samples for each C0 line;
/// points where no theta is feasible carry no expectations (the curve ends
/// where feasibility is lost).
pub fn drug_usage_curves(
    c0_values: &[f64],
    t0_values: &[f64],
    zeta: f64,
    grid: &ThetaGrid,
    scenarios: &[ScenarioVector],
    surrogates: &SurrogateSet,
    prices: [f64; 3],
    accepted_failures: u64,
    fixed: &FixedKnobs,
) -> Result<Vec<DashboardCell>> {
    build_dashboard(
        t0_values,
        c0_values,
        zeta,
        grid,
        scenarios,
        surrogates,
        prices,
        accepted_failures,
        fixed,
    )
}

/// Central (equal-tailed) acceptance region of Binomial(n, p) at level
/// 1 - alpha: the smallest k with `P(X <= k) > alpha/2` through the largest
/// k with `P(X >= k) > alpha/2`.
pub fn binomial_central_region(n: u64, p: f64, alpha: f64) -> (u64, u64) {
    assert!((0.0..=1.0).contains(&p) && alpha > 0.0 && alpha < 1.0);
    if p <= 0.0 {
        return (0, 0);
    }
    if p >= 1.0 {
        return (n, n);
    }
    let nf = n as f64;
    let ln_fact: Vec<f64> = {
        let mut acc = vec![0.0f64; n as usize + 1];
        for i in 1..=n as usize {
            acc[i] = acc[i - 1] + (i as f64).ln();
        }
        acc
    };
    let pmf = |k: u64| -> f64 {
        let kf = k as f64;
        let ln = ln_fact[n as usize] - ln_fact[k as usize] - ln_fact[(n - k) as usize]
            + kf * p.ln()
            + (nf - kf) * (1.0 - p).ln();
        ln.exp()
    };
    let half = alpha / 2.0;
    let mut cdf = 0.0;
    let mut k_lo = n;
    for k in 0..=n {
        cdf += pmf(k);
        if cdf > half {
            k_lo = k;
            break;
        }
    }
    let mut upper_tail = 0.0;
    let mut k_hi = 0;
    for k in (0..=n).rev() {
        upper_tail += pmf(k);
        if upper_tail > half {
            k_hi = k;
            break;
        }
    }
    (k_lo, k_hi.max(k_lo))
}
