//! Explicit parameterized injection law.
//!
//! Three rules compose the law evaluated at each sampling instant:
//!
//! * chemotherapy stops below the tumor cutoff `T_stop`, under a sufficient
//!   tumor rate of decrease, or when the lymphocyte count is within the
//!   safety band `beta_C * C_min`; otherwise it is proportional to the
//!   lymphocyte headroom, saturated at the maximum rate;
//! * all injections stop under a sufficient rate of decrease
//!   (`dT/dt <= -r T`);
//! * immunotherapy and vaccine rates scale with the headroom of the kill
//!   term below its ceiling `D_max = c_d * d_nom` and with the relative
//!   tumor size `T / T_max`, saturated at their maximum rates.
//!
//! The controller never sees the patient's true coefficients: the rate test
//! and the kill term are evaluated with nominal values.

use serde::{Deserialize, Serialize};

use crate::dynamics::{compute_d_with, tumor_rate, ControlInput, NominalParameterSet, StateVector};
use crate::error::{Error, Result};

/// Feedback gains/thresholds plus the protocol knobs sampled with them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParameters {
    /// Tumor size below which chemotherapy stops [cells].
    pub t_stop: f64,
    /// Sufficient relative decrease rate of the tumor [1/day].
    pub r: f64,
    /// Chemotherapy gain on the lymphocyte headroom [1/cells/day].
    pub mu_c: f64,
    /// Lymphocyte safety multiplier (> 1) on the floor C_min.
    pub beta_c: f64,
    /// Safety factor on the nominal kill-term ceiling.
    pub c_d: f64,
    /// Duty cycle of each basic period.
    pub kappa: f64,
    /// Basic period length [days].
    pub t_s: f64,
}

impl ControlParameters {
    pub const fn to_array(self) -> [f64; 7] {
        [self.t_stop, self.r, self.mu_c, self.beta_c, self.c_d, self.kappa, self.t_s]
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("T_stop", self.t_stop > 0.0),
            ("r", self.r > 0.0),
            ("mu_C", self.mu_c > 0.0),
            ("beta_C", self.beta_c > 1.0),
            ("c_d", self.c_d > 0.0),
            ("kappa", self.kappa > 0.0 && self.kappa < 1.0),
            ("T_s", self.t_s > 0.0),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "control parameter {name} out of range in {self:?}"
                )));
            }
        }
        Ok(())
    }
}

/// How the law obtains the tumor rate for the sufficient-decrease test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateTestMode {
    /// Evaluate the tumor equation with nominal coefficients at the sampled
    /// state (stateless, causal).
    #[default]
    NominalModel,
    /// Finite-difference the measured tumor count between consecutive
    /// samples; falls back to the nominal model on the first sample.
    MeasuredDifference,
}

/// Fixed quantities of the law: saturation rates, the reference tumor scale,
/// the lymphocyte floor and the nominal kill-term coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlLawConfig {
    /// Reference large tumor size [cells].
    pub t_max: f64,
    /// Maximum chemotherapy injection rate [drug units/day].
    pub vbar_chemo: f64,
    /// Maximum immunotherapy injection rate [drug units/day].
    pub vbar_immuno: f64,
    /// Maximum vaccine injection rate [cells/day].
    pub vbar_vaccine: f64,
    /// Nominal kill-term saturation level.
    pub d_nom: f64,
    /// Nominal kill-term exponent.
    pub ell_nom: f64,
    /// Nominal kill-term steepness.
    pub s_nom: f64,
    /// Lymphocyte floor [cells].
    pub c_min: f64,
    /// Tumor-rate source for the sufficient-decrease test.
    #[serde(default)]
    pub rate_test: RateTestMode,
}

impl ControlLawConfig {
    /// Fixed reference values with the kill-term coefficients taken from the
    /// nominal parameter set.
    pub fn from_nominal(nominal: &NominalParameterSet) -> Self {
        let p = nominal.params();
        Self {
            t_max: 1e8,
            vbar_chemo: 1.0,
            vbar_immuno: 1e4,
            vbar_vaccine: 1e7,
            d_nom: p.d,
            ell_nom: p.ell,
            s_nom: p.s,
            c_min: 3.125e10,
            rate_test: RateTestMode::NominalModel,
        }
    }

    pub fn max_rates(&self) -> [f64; 3] {
        [self.vbar_chemo, self.vbar_immuno, self.vbar_vaccine]
    }

    pub fn validate(&self) -> Result<()> {
        let values = [
            ("T_max", self.t_max),
            ("vbar_M", self.vbar_chemo),
            ("vbar_I", self.vbar_immuno),
            ("vbar_L", self.vbar_vaccine),
            ("d_nom", self.d_nom),
            ("ell_nom", self.ell_nom),
            ("s_nom", self.s_nom),
            ("C_min", self.c_min),
        ];
        for (name, v) in values {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "control-law value {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// True when the tumor shrinks at least at relative rate `r`, judged from
/// the nominal model at the sampled state: `dT/dt <= -r T`.
pub fn sufficient_decrease(x: &StateVector, r: f64, nominal: &NominalParameterSet) -> bool {
    tumor_rate(x, nominal.params()) <= -r * x.tumor
}

fn sufficient_decrease_from_rate(rate: f64, r: f64, tumor: f64) -> bool {
    rate <= -r * tumor
}

/// Chemotherapy rate: zero under the tumor cutoff / sufficient-decrease
/// gates, otherwise proportional to the lymphocyte headroom above
/// `beta_C * C_min`, clamped to `[0, vbar_M]`.
pub fn chemo_rate(
    x: &StateVector,
    ctrl: &ControlParameters,
    cfg: &ControlLawConfig,
    nominal: &NominalParameterSet,
) -> f64 {
    chemo_rate_given(x, ctrl, cfg, sufficient_decrease(x, ctrl.r, nominal))
}

fn chemo_rate_given(
    x: &StateVector,
    ctrl: &ControlParameters,
    cfg: &ControlLawConfig,
    decrease_ok: bool,
) -> f64 {
    if x.tumor <= ctrl.t_stop || decrease_ok {
        return 0.0;
    }
    let headroom = ctrl.mu_c * (x.circulating - ctrl.beta_c * cfg.c_min);
    cfg.vbar_chemo.min(headroom.max(0.0))
}

/// Immunotherapy and vaccine rates: zero under sufficient decrease,
/// otherwise scaled by the kill-term headroom below `D_max = c_d * d_nom`
/// and the relative tumor size, clamped to the saturation bounds.
pub fn immuno_vaccine_rate(
    x: &StateVector,
    ctrl: &ControlParameters,
    cfg: &ControlLawConfig,
    nominal: &NominalParameterSet,
) -> (f64, f64) {
    immuno_vaccine_rate_given(x, ctrl, cfg, sufficient_decrease(x, ctrl.r, nominal))
}

fn immuno_vaccine_rate_given(
    x: &StateVector,
    ctrl: &ControlParameters,
    cfg: &ControlLawConfig,
    decrease_ok: bool,
) -> (f64, f64) {
    if decrease_ok {
        return (0.0, 0.0);
    }
    let d_now = compute_d_with(x.tumor, x.cd8, cfg.d_nom, cfg.ell_nom, cfg.s_nom);
    let d_max = ctrl.c_d * cfg.d_nom;
    // The headroom bracket is clamped at 0: c_d may be below 1, in which
    // case D can exceed D_max and a negative injection is meaningless.
    let headroom = ((d_max - d_now) / d_max).max(0.0);
    let scale = (headroom * (x.tumor / cfg.t_max)).min(1.0);
    (scale * cfg.vbar_immuno, scale * cfg.vbar_vaccine)
}

/// Assembles the complete input vector; always within the saturation bounds.
pub fn feedback(
    x: &StateVector,
    ctrl: &ControlParameters,
    cfg: &ControlLawConfig,
    nominal: &NominalParameterSet,
) -> ControlInput {
    feedback_given(x, ctrl, cfg, sufficient_decrease(x, ctrl.r, nominal))
}

fn feedback_given(
    x: &StateVector,
    ctrl: &ControlParameters,
    cfg: &ControlLawConfig,
    decrease_ok: bool,
) -> ControlInput {
    let v_m = chemo_rate_given(x, ctrl, cfg, decrease_ok);
    let (v_i, v_l) = immuno_vaccine_rate_given(x, ctrl, cfg, decrease_ok);
    ControlInput::new(v_m, v_i, v_l)
}

/// Anything the closed-loop simulator can sample for an input. The measured
/// tumor rate is the finite difference between the two most recent recorded
/// samples; it is `None` at the first sample.
pub trait FeedbackLaw {
    fn control(&self, x: &StateVector, measured_tumor_rate: Option<f64>) -> ControlInput;
}

/// The parameterized law of this crate.
#[derive(Debug, Clone)]
pub struct ParameterizedLaw<'a> {
    pub ctrl: ControlParameters,
    pub cfg: &'a ControlLawConfig,
    pub nominal: &'a NominalParameterSet,
}

impl FeedbackLaw for ParameterizedLaw<'_> {
    fn control(&self, x: &StateVector, measured_tumor_rate: Option<f64>) -> ControlInput {
        let decrease_ok = match (self.cfg.rate_test, measured_tumor_rate) {
            (RateTestMode::MeasuredDifference, Some(rate)) => {
                sufficient_decrease_from_rate(rate, self.ctrl.r, x.tumor)
            }
            _ => sufficient_decrease(x, self.ctrl.r, self.nominal),
        };
        feedback_given(x, &self.ctrl, self.cfg, decrease_ok)
    }
}

/// No injections at all; the drug-free flow.
#[derive(Debug, Clone, Copy)]
pub struct ZeroLaw;

impl FeedbackLaw for ZeroLaw {
    fn control(&self, _x: &StateVector, _measured: Option<f64>) -> ControlInput {
        ControlInput::zero()
    }
}

impl<F> FeedbackLaw for F
where
    F: Fn(&StateVector) -> ControlInput,
{
    fn control(&self, x: &StateVector, _measured: Option<f64>) -> ControlInput {
        self(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::test_support::nominal;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctrl_mid() -> ControlParameters {
        ControlParameters {
            t_stop: 100.0,
            r: 1.0,
            mu_c: 0.5,
            beta_c: 1.5,
            c_d: 1.15,
            kappa: 0.5,
            t_s: 1.0,
        }
    }

    #[test]
    fn sufficient_decrease_trivial_cases() {
        let nom = nominal();
        // T = 0: both sides vanish, 0 <= 0 holds.
        let x = StateVector::new(0.0, 1e3, 1e2, 1e10, 0.0, 0.0);
        assert!(sufficient_decrease(&x, 1.0, &nom));
    }

    #[test]
    fn sufficient_decrease_threshold_sides() {
        // Pick states where the nominal rate is -2T and -0.5T by tuning the
        // kill term: with N = 0, M = 0, small T, rate = (a - D) T.
        let nom = nominal();
        let p = nom.params();
        // D saturates to d = 2.34 for L >> T, so rate ~ (0.431 - 2.34) T ~ -1.9 T.
        let x = StateVector::new(10.0, 0.0, 1e7, 1e10, 0.0, 0.0);
        assert!(sufficient_decrease(&x, 1.0, &nom));
        assert!(!sufficient_decrease(&x, 2.0, &nom));
        // Drug-free growing tumor: rate = +a(1-bT) T > 0, never sufficient.
        let x = StateVector::new(1e6, 0.0, 0.0, 1e10, 0.0, 0.0);
        assert!(p.a > 0.0);
        assert!(!sufficient_decrease(&x, 0.1, &nom));
    }

    #[test]
    fn chemo_stops_below_cutoff() {
        let nom = nominal();
        let cfg = ControlLawConfig::from_nominal(&nom);
        let mut ctrl = ctrl_mid();
        ctrl.t_stop = 10.0;
        let x = StateVector::new(5.0, 0.0, 0.0, 1e11, 0.0, 0.0);
        assert_eq!(chemo_rate(&x, &ctrl, &cfg, &nom), 0.0);
    }

    #[test]
    fn chemo_zero_at_safety_band_edge() {
        let nom = nominal();
        let cfg = ControlLawConfig::from_nominal(&nom);
        let ctrl = ctrl_mid();
        let x = StateVector::new(1e6, 0.0, 0.0, ctrl.beta_c * cfg.c_min, 0.0, 0.0);
        assert_eq!(chemo_rate(&x, &ctrl, &cfg, &nom), 0.0);
    }

    #[test]
    fn chemo_proportional_hand_value() {
        let nom = nominal();
        let mut cfg = ControlLawConfig::from_nominal(&nom);
        cfg.vbar_chemo = 1.0;
        let mut ctrl = ctrl_mid();
        ctrl.mu_c = 0.5;
        // One cell of headroom above the safety band, growing tumor.
        let x = StateVector::new(1e6, 0.0, 0.0, ctrl.beta_c * cfg.c_min + 1.0, 0.0, 0.0);
        assert_eq!(chemo_rate(&x, &ctrl, &cfg, &nom), 0.5);
    }

    #[test]
    fn immuno_vaccine_zero_under_sufficient_decrease() {
        let nom = nominal();
        let cfg = ControlLawConfig::from_nominal(&nom);
        let mut ctrl = ctrl_mid();
        ctrl.r = 1.0;
        // Saturated kill term shrinks the tumor fast enough.
        let x = StateVector::new(10.0, 0.0, 1e7, 1e10, 0.0, 0.0);
        assert_eq!(immuno_vaccine_rate(&x, &ctrl, &cfg, &nom), (0.0, 0.0));
        assert_eq!(feedback(&x, &ctrl, &cfg, &nom), ControlInput::zero());
    }

    #[test]
    fn immuno_vaccine_zero_at_kill_ceiling() {
        let nom = nominal();
        let cfg = ControlLawConfig::from_nominal(&nom);
        let mut ctrl = ctrl_mid();
        // c_d < 1 can push D above D_max; the bracket clamps at zero.
        ctrl.c_d = 0.8;
        ctrl.r = 1e6; // keep the decrease test off
        let x = StateVector::new(1e3, 0.0, 1e9, 1e10, 0.0, 0.0); // L/T huge -> D ~ d_nom
        let (v_i, v_l) = immuno_vaccine_rate(&x, &ctrl, &cfg, &nom);
        assert_eq!((v_i, v_l), (0.0, 0.0));
    }

    #[test]
    fn immuno_vaccine_hand_value_at_half_ceiling() {
        let nom = nominal();
        let mut cfg = ControlLawConfig::from_nominal(&nom);
        // Make D easily steerable: D = d_nom/2 exactly at L = T with s = 1.
        cfg.s_nom = 1.0;
        cfg.d_nom = 2.0;
        let mut ctrl = ctrl_mid();
        ctrl.c_d = 1.0; // D_max = d_nom, so D = D_max/2
        ctrl.r = 1e9;
        let x = StateVector::new(cfg.t_max, 0.0, cfg.t_max, 1e10, 0.0, 0.0);
        let (v_i, v_l) = immuno_vaccine_rate(&x, &ctrl, &cfg, &nom);
        assert!((v_i - 0.5 * cfg.vbar_immuno).abs() < 1e-9 * cfg.vbar_immuno);
        assert!((v_l - 0.5 * cfg.vbar_vaccine).abs() < 1e-9 * cfg.vbar_vaccine);
    }

    #[test]
    fn gate_composition_keeps_immuno_active_below_cutoff() {
        let nom = nominal();
        let cfg = ControlLawConfig::from_nominal(&nom);
        let mut ctrl = ctrl_mid();
        ctrl.t_stop = 1e7;
        // Growing tumor below the chemo cutoff: v_M = 0 but (v_I, v_L) > 0.
        let x = StateVector::new(1e6, 0.0, 0.0, 1e11, 0.0, 0.0);
        let u = feedback(&x, &ctrl, &cfg, &nom);
        assert_eq!(u.chemo_rate, 0.0);
        assert!(u.immuno_rate > 0.0);
        assert!(u.vaccine_rate > 0.0);
    }

    fn random_ctrl(rng: &mut ChaCha8Rng) -> ControlParameters {
        ControlParameters {
            t_stop: 10f64.powf(1.0 + 2.0 * rng.random::<f64>()),
            r: 10f64.powf(-1.0 + 2.0 * rng.random::<f64>()),
            mu_c: 10f64.powf(-1.0 * rng.random::<f64>()),
            beta_c: 1.05 + 2.95 * rng.random::<f64>(),
            c_d: 0.8 + 0.7 * rng.random::<f64>(),
            kappa: 0.2 + 0.7 * rng.random::<f64>(),
            t_s: [0.5, 1.0, 2.0][(rng.random::<f64>() * 3.0) as usize % 3],
        }
    }

    fn random_state(rng: &mut ChaCha8Rng) -> StateVector {
        StateVector::new(
            10f64.powf(5.0 + 4.0 * rng.random::<f64>()),
            10f64.powf(-3.0 + 6.0 * rng.random::<f64>()),
            10f64.powf(-3.0 + 11.0 * rng.random::<f64>()),
            10f64.powf(10.4 + 0.7 * rng.random::<f64>()),
            rng.random::<f64>() * 5.0,
            rng.random::<f64>() * 2e4,
        )
    }

    #[test]
    fn saturation_and_gating_invariants_randomized() {
        let nom = nominal();
        let cfg = ControlLawConfig::from_nominal(&nom);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20_000 {
            let ctrl = random_ctrl(&mut rng);
            let x = random_state(&mut rng);
            let u = feedback(&x, &ctrl, &cfg, &nom);
            assert!((0.0..=cfg.vbar_chemo).contains(&u.chemo_rate));
            assert!((0.0..=cfg.vbar_immuno).contains(&u.immuno_rate));
            assert!((0.0..=cfg.vbar_vaccine).contains(&u.vaccine_rate));
            let gated = x.tumor <= ctrl.t_stop
                || x.circulating <= ctrl.beta_c * cfg.c_min
                || sufficient_decrease(&x, ctrl.r, &nom);
            if gated {
                assert_eq!(u.chemo_rate, 0.0);
            }
            let d_now = compute_d_with(x.tumor, x.cd8, cfg.d_nom, cfg.ell_nom, cfg.s_nom);
            if d_now >= ctrl.c_d * cfg.d_nom {
                assert_eq!((u.immuno_rate, u.vaccine_rate), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn chemo_monotone_in_lymphocytes_on_active_branch() {
        let nom = nominal();
        let cfg = ControlLawConfig::from_nominal(&nom);
        let ctrl = ctrl_mid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let c1 = 3.2e10 + rng.random::<f64>() * 9e10;
            let c2 = c1 + rng.random::<f64>() * 5e10;
            let x1 = StateVector::new(1e7, 0.0, 0.0, c1, 0.0, 0.0);
            let x2 = StateVector::new(1e7, 0.0, 0.0, c2, 0.0, 0.0);
            assert!(chemo_rate(&x1, &ctrl, &cfg, &nom) <= chemo_rate(&x2, &ctrl, &cfg, &nom));
        }
    }
}
