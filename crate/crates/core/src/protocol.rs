//! Treatment/rest scheduling, fixed-step closed-loop integration and label
//! extraction.
//!
//! A therapy of duration `T_th` is a sequence of basic periods of length
//! `T_s`, each split into a treatment sub-period of length `kappa * T_s`
//! followed by rest. Treatment sub-periods are tiled by elementary intervals
//! of length `tau` over which the sampled feedback is held constant; rest
//! carries zero input. Integration is classical fixed-step RK4 with substep
//! `h <= h_max`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{rhs, ControlInput, ModelParameters, StateVector, STATE_COMPONENT_NAMES};
use crate::error::{Error, Result};
use crate::feedback::{ControlParameters, FeedbackLaw};

/// Default integration substep cap [days].
pub const DEFAULT_SUBSTEP: f64 = 0.005;

/// Relative band below zero inside which an integration overshoot is clamped
/// back to zero instead of raising an error.
const CLAMP_BAND: f64 = 1e-9;

/// Timing of the therapy and of the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Total therapy duration T_th [days].
    pub therapy_days: f64,
    /// Basic period T_s [days].
    pub period_days: f64,
    /// Duty cycle kappa in (0, 1).
    pub duty_cycle: f64,
    /// Elementary sampling period tau [days].
    pub sampling_period: f64,
    /// Integration substep cap h_max [days].
    #[serde(default = "default_substep")]
    pub max_substep: f64,
}

fn default_substep() -> f64 {
    DEFAULT_SUBSTEP
}

impl ProtocolConfig {
    /// Fixed-protocol reference values: 7-day therapy, 1-day basic period,
    /// 1-hour sampling.
    pub fn reference() -> Self {
        Self {
            therapy_days: 7.0,
            period_days: 1.0,
            duty_cycle: 0.5,
            sampling_period: 1.0 / 24.0,
            max_substep: DEFAULT_SUBSTEP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duty_cycle > 0.0 && self.duty_cycle < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "duty cycle must lie in (0, 1), got {}",
                self.duty_cycle
            )));
        }
        if !(self.sampling_period > 0.0
            && self.sampling_period <= self.duty_cycle * self.period_days)
        {
            return Err(Error::InvalidConfig(format!(
                "sampling period {} must lie in (0, kappa * T_s = {}]",
                self.sampling_period,
                self.duty_cycle * self.period_days
            )));
        }
        if !(self.period_days > 0.0 && self.period_days <= self.therapy_days) {
            return Err(Error::InvalidConfig(format!(
                "basic period {} must lie in (0, T_th = {}]",
                self.period_days, self.therapy_days
            )));
        }
        if !(self.max_substep > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "substep cap must be positive, got {}",
                self.max_substep
            )));
        }
        Ok(())
    }

    /// Copy with the per-scenario protocol knobs taken from sampled control
    /// parameters.
    pub fn with_control(&self, ctrl: &ControlParameters) -> Self {
        Self {
            period_days: ctrl.t_s,
            duty_cycle: ctrl.kappa,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalMode {
    Treatment,
    Rest,
}

/// One schedule entry: a half-open time interval and its mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleInterval {
    pub start: f64,
    pub end: f64,
    pub mode: IntervalMode,
}

/// Builds the treatment/rest tiling of `[0, T_th]`.
///
/// Each basic period contributes its treatment intervals (elementary tiles of
/// length tau, the last one truncated when `kappa * T_s` is not a multiple of
/// tau) followed by one rest interval. A final partial period is truncated at
/// `T_th` when `T_th` is not a multiple of `T_s`.
pub fn build_schedule(cfg: &ProtocolConfig) -> Result<Vec<ScheduleInterval>> {
    cfg.validate()?;
    let mut intervals = Vec::new();
    let t_s = cfg.period_days;
    let tau = cfg.sampling_period;
    let mut period = 0usize;
    loop {
        let p_start = period as f64 * t_s;
        if p_start >= cfg.therapy_days - 1e-12 {
            break;
        }
        let treat_end = (p_start + cfg.duty_cycle * t_s).min(cfg.therapy_days);
        let p_end = (p_start + t_s).min(cfg.therapy_days);

        let treat_len = treat_end - p_start;
        let n_full = (treat_len / tau + 1e-9).floor() as usize;
        for i in 0..n_full {
            let start = p_start + i as f64 * tau;
            let end = if i + 1 == n_full { (p_start + n_full as f64 * tau).min(treat_end) } else { p_start + (i + 1) as f64 * tau };
            intervals.push(ScheduleInterval { start, end, mode: IntervalMode::Treatment });
        }
        let tiled_end = p_start + n_full as f64 * tau;
        if treat_end - tiled_end > 1e-9 {
            intervals.push(ScheduleInterval {
                start: tiled_end,
                end: treat_end,
                mode: IntervalMode::Treatment,
            });
        } else if let Some(last) = intervals.last_mut() {
            // Snap the last tile to the exact treatment boundary.
            last.end = treat_end;
        }
        if p_end - treat_end > 1e-9 {
            intervals.push(ScheduleInterval {
                start: treat_end,
                end: p_end,
                mode: IntervalMode::Rest,
            });
        }
        period += 1;
    }
    Ok(intervals)
}

/// Final state of one integrated interval plus the lymphocyte minimum seen
/// across its substeps.
#[derive(Debug, Clone, Copy)]
pub struct IntervalResult {
    pub state: StateVector,
    pub min_circulating: f64,
}

/// Integrates the model over `dt` under a constant input with classical RK4,
/// using `n = ceil(dt / h_max)` equal substeps.
///
/// After every substep, components inside the clamp band
/// `[-1e-9 * scale, 0)` are snapped to zero (`scale` being the component's
/// pre-step magnitude floored at 1); anything more negative, and any
/// non-finite value, raises a numerical-domain error.
pub fn integrate_interval(
    x: &StateVector,
    u: &ControlInput,
    p: &ModelParameters,
    dt: f64,
    h_max: f64,
    t_start: f64,
) -> Result<IntervalResult> {
    debug_assert!(dt > 0.0 && h_max > 0.0);
    let n_sub = (dt / h_max).ceil().max(1.0) as usize;
    let h = dt / n_sub as f64;
    let mut state = *x;
    let mut min_circ = x.circulating;
    for i in 0..n_sub {
        let t = t_start + i as f64 * h;
        state = rk4_step(&state, u, p, h, t)?;
        min_circ = min_circ.min(state.circulating);
    }
    Ok(IntervalResult { state, min_circulating: min_circ })
}

fn rk4_step(
    x: &StateVector,
    u: &ControlInput,
    p: &ModelParameters,
    h: f64,
    t: f64,
) -> Result<StateVector> {
    let k1 = rhs(x, u, p).map_err(|e| at_time(e, t))?;
    let x2 = advance(x, &k1, h / 2.0);
    let k2 = rhs(&x2, u, p).map_err(|e| at_time(e, t))?;
    let x3 = advance(x, &k2, h / 2.0);
    let k3 = rhs(&x3, u, p).map_err(|e| at_time(e, t))?;
    let x4 = advance(x, &k3, h);
    let k4 = rhs(&x4, u, p).map_err(|e| at_time(e, t))?;

    let prev = x.to_array();
    let (a1, a2, a3, a4) = (k1.to_array(), k2.to_array(), k3.to_array(), k4.to_array());
    let mut next = [0.0f64; 6];
    for i in 0..6 {
        next[i] = prev[i] + h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
        if !next[i].is_finite() {
            return Err(Error::NumericalDomain {
                component: STATE_COMPONENT_NAMES[i],
                value: next[i],
                time: t,
            });
        }
        if next[i] < 0.0 {
            let scale = prev[i].abs().max(1.0);
            if next[i] >= -CLAMP_BAND * scale {
                next[i] = 0.0;
            } else {
                return Err(Error::NumericalDomain {
                    component: STATE_COMPONENT_NAMES[i],
                    value: next[i],
                    time: t,
                });
            }
        }
    }
    Ok(StateVector::from_array(next))
}

fn advance(x: &StateVector, k: &StateVector, h: f64) -> StateVector {
    let a = x.to_array();
    let b = k.to_array();
    let mut out = [0.0f64; 6];
    for i in 0..6 {
        out[i] = a[i] + h * b[i];
    }
    StateVector::from_array(out)
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::NumericalDomain { component, value, .. } => {
            Error::NumericalDomain { component, value, time: t }
        }
        other => other,
    }
}

/// One closed-loop run: states recorded at every elementary boundary and at
/// rest-period boundaries, the input held over each recorded interval, and
/// running drug integrals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    /// Recorded instants, strictly increasing from 0 to T_th [days].
    pub times: Vec<f64>,
    /// State at each recorded instant.
    pub states: Vec<StateVector>,
    /// Input held over `[times[i], times[i+1])`; length `times.len() - 1`.
    pub inputs: Vec<ControlInput>,
    /// Cumulative raw drug integrals (chemo, immuno, vaccine) at each
    /// recorded instant [rate * day].
    pub drug_integrals: Vec<[f64; 3]>,
    /// Minimum lymphocyte count over all integrator substeps.
    pub min_circulating: f64,
}

impl Trajectory {
    pub fn initial_tumor(&self) -> f64 {
        self.states.first().map(|s| s.tumor).unwrap_or(f64::NAN)
    }

    pub fn final_tumor(&self) -> f64 {
        self.states.last().map(|s| s.tumor).unwrap_or(f64::NAN)
    }

    pub fn total_drug_integrals(&self) -> [f64; 3] {
        *self.drug_integrals.last().unwrap_or(&[0.0; 3])
    }
}

/// Simulates the sampled-data closed loop over the schedule derived from
/// `cfg` with the per-scenario knobs (T_s, kappa) taken from `ctrl`.
///
/// Over each treatment elementary interval the law is evaluated at the
/// interval's start state and held; rest sub-periods carry zero input. A
/// numerical-domain error aborts the run (the caller counts such scenarios).
pub fn simulate_closed_loop<L: FeedbackLaw>(
    x0: &StateVector,
    p: &ModelParameters,
    ctrl: &ControlParameters,
    cfg: &ProtocolConfig,
    law: &L,
) -> Result<Trajectory> {
    let run_cfg = cfg.with_control(ctrl);
    let schedule = build_schedule(&run_cfg)?;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![*x0],
        inputs: Vec::with_capacity(schedule.len()),
        drug_integrals: vec![[0.0; 3]],
        min_circulating: x0.circulating,
    };
    let mut state = *x0;
    let mut prev_sample: Option<(f64, f64)> = None; // (time, tumor) at previous boundary
    for interval in &schedule {
        let dt = interval.end - interval.start;
        let u = match interval.mode {
            IntervalMode::Treatment => {
                let measured = prev_sample.map(|(t_prev, tumor_prev)| {
                    (state.tumor - tumor_prev) / (interval.start - t_prev)
                });
                law.control(&state, measured.filter(|r| r.is_finite()))
            }
            IntervalMode::Rest => ControlInput::zero(),
        };
        prev_sample = Some((interval.start, state.tumor));
        let result = integrate_interval(&state, &u, p, dt, run_cfg.max_substep, interval.start)?;
        state = result.state;
        traj.min_circulating = traj.min_circulating.min(result.min_circulating);
        let prev_q = *traj.drug_integrals.last().unwrap();
        let u_arr = u.to_array();
        traj.drug_integrals.push([
            prev_q[0] + u_arr[0] * dt,
            prev_q[1] + u_arr[1] * dt,
            prev_q[2] + u_arr[2] * dt,
        ]);
        traj.inputs.push(u);
        traj.times.push(interval.end);
        traj.states.push(state);
    }
    Ok(traj)
}

/// Thresholds of the outcome labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelConfig {
    /// Contraction factor gamma_c: success requires T(T_th) <= gamma_c T(0).
    pub contraction_factor: f64,
    /// Health margin rho on the tightened lymphocyte-floor condition.
    pub health_margin: f64,
    /// Lymphocyte floor C_min [cells].
    pub lymphocyte_floor: f64,
}

impl LabelConfig {
    /// gamma_c = 0.01, rho = 0.5, C_min = 3.125e10.
    pub fn reference() -> Self {
        Self { contraction_factor: 0.01, health_margin: 0.5, lymphocyte_floor: 3.125e10 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.contraction_factor > 0.0 && self.contraction_factor < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "contraction factor must lie in (0, 1), got {}",
                self.contraction_factor
            )));
        }
        if !(self.health_margin >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "health margin must be >= 0, got {}",
                self.health_margin
            )));
        }
        if !(self.lymphocyte_floor > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lymphocyte floor must be > 0, got {}",
                self.lymphocyte_floor
            )));
        }
        Ok(())
    }
}

/// The five outcome labels of a trajectory plus the final tumor size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    /// Tumor contraction: T(T_th) <= gamma_c * T(0).
    pub tumor_contracted: bool,
    /// Tightened health condition: (min_t C(t) - C_min) / C_min >= rho.
    pub health_preserved: bool,
    /// Normalized chemotherapy total Q_M.
    pub chemo_used: f64,
    /// Normalized immunotherapy total Q_I.
    pub immuno_used: f64,
    /// Normalized vaccine total Q_L.
    pub vaccine_used: f64,
    /// Final tumor size T_f [cells].
    pub final_tumor: f64,
}

impl Labels {
    pub fn drug_totals(&self) -> [f64; 3] {
        [self.chemo_used, self.immuno_used, self.vaccine_used]
    }
}

/// Extracts the outcome labels from a completed trajectory. `max_rates` are
/// the per-drug saturation bounds used to normalize the drug integrals.
pub fn extract_labels(traj: &Trajectory, lab: &LabelConfig, max_rates: [f64; 3]) -> Labels {
    let q = traj.total_drug_integrals();
    let floor = lab.lymphocyte_floor;
    Labels {
        tumor_contracted: traj.final_tumor() <= lab.contraction_factor * traj.initial_tumor(),
        health_preserved: (traj.min_circulating - floor) / floor >= lab.health_margin,
        chemo_used: q[0] / max_rates[0],
        immuno_used: q[1] / max_rates[1],
        vaccine_used: q[2] / max_rates[2],
        final_tumor: traj.final_tumor(),
    }
}
