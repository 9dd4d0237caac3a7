//! Population model: state/parameter types, the composite kill term and the
//! ODE right-hand side.
//!
//! Six populations evolve over time (units: cells, drug units, days):
//! tumor cells, NK cells, CD8+T cells, circulating lymphocytes, and the two
//! drug concentrations (chemotherapy and immunotherapy). Three bounded
//! injection rates act as inputs. All functions here are pure; they can be
//! called concurrently without restriction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tumor sizes at or below this count are treated as extinct when forming
/// the CD8-to-tumor ratio of the kill term.
pub const TUMOR_EXTINCT_THRESHOLD: f64 = 1e-6;

/// The six population/concentration states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    /// Tumor cell count (x1) [cells].
    pub tumor: f64,
    /// NK cell count (x2) [cells].
    pub nk: f64,
    /// CD8+T cell count (x3) [cells].
    pub cd8: f64,
    /// Circulating lymphocyte count (x4) [cells].
    pub circulating: f64,
    /// Chemotherapy drug concentration (x5) [drug units].
    pub chemo: f64,
    /// Immunotherapy drug concentration (x6) [drug units].
    pub immuno: f64,
}

/// Names used in error reporting and the dataset schema, component order
/// matching [`StateVector::to_array`].
pub const STATE_COMPONENT_NAMES: [&str; 6] = ["T", "N", "L", "C", "M", "I"];

impl StateVector {
    pub fn new(tumor: f64, nk: f64, cd8: f64, circulating: f64, chemo: f64, immuno: f64) -> Self {
        Self { tumor, nk, cd8, circulating, chemo, immuno }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.tumor, self.nk, self.cd8, self.circulating, self.chemo, self.immuno]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// All components finite and nonnegative.
    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// The three bounded injection rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// Chemotherapy injection rate v_M [drug units/day].
    pub chemo_rate: f64,
    /// Immunotherapy injection rate v_I [drug units/day].
    pub immuno_rate: f64,
    /// Vaccine injection rate v_L [cells/day].
    pub vaccine_rate: f64,
}

impl ControlInput {
    pub fn new(chemo_rate: f64, immuno_rate: f64, vaccine_rate: f64) -> Self {
        Self { chemo_rate, immuno_rate, vaccine_rate }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.chemo_rate, self.immuno_rate, self.vaccine_rate]
    }
}

/// The 28 uncertain coefficients of the population model, JSON keys matching
/// the canonical coefficient names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParameters {
    /// Tumor growth rate [1/day].
    pub a: f64,
    /// Inverse tumor carrying capacity [1/cells].
    pub b: f64,
    /// NK-induced tumor death coefficient [1/cells/day].
    pub c: f64,
    /// NK synthesis rate from circulating lymphocytes [1/day].
    pub e: f64,
    /// NK turnover rate [1/day].
    pub f: f64,
    /// Maximum NK recruitment rate by tumor [1/day].
    pub g: f64,
    /// Steepness of NK recruitment [cells^2].
    pub h: f64,
    /// NK inactivation by tumor [1/cells/day].
    pub p: f64,
    /// Chemotherapy kill coefficient on tumor [1/day].
    #[serde(rename = "K_T")]
    pub k_t: f64,
    /// Chemotherapy kill coefficient on NK cells [1/day].
    #[serde(rename = "K_N")]
    pub k_n: f64,
    /// CD8+T turnover rate [1/day].
    pub m: f64,
    /// Maximum CD8+T recruitment rate [1/day].
    pub j: f64,
    /// Steepness of CD8+T recruitment [cells^2].
    pub k: f64,
    /// CD8+T inactivation by tumor [1/cells/day].
    pub q: f64,
    /// CD8+T stimulation by NK-lysed tumor debris [1/cells/day].
    pub r1: f64,
    /// CD8+T stimulation by circulating lymphocytes [1/cells/day].
    pub r2: f64,
    /// CD8+T self-limitation [1/cells^2/day].
    pub u: f64,
    /// Chemotherapy kill coefficient on CD8+T cells [1/day].
    #[serde(rename = "k_L")]
    pub k_l: f64,
    /// Maximum CD8+T recruitment rate by immunotherapy [1/day].
    #[serde(rename = "p_I")]
    pub p_i: f64,
    /// Steepness of immunotherapy recruitment [drug units].
    #[serde(rename = "g_I")]
    pub g_i: f64,
    /// Lymphocyte synthesis rate [cells/day].
    pub alpha: f64,
    /// Lymphocyte turnover rate [1/day].
    pub beta: f64,
    /// Chemotherapy kill coefficient on lymphocytes [1/day].
    #[serde(rename = "k_C")]
    pub k_c: f64,
    /// Chemotherapy decay rate [1/day].
    pub gamma: f64,
    /// Immunotherapy decay rate [1/day].
    #[serde(rename = "mu_I")]
    pub mu_i: f64,
    /// Exponent of the CD8-to-tumor ratio in the kill term.
    pub ell: f64,
    /// Steepness of the kill-term saturation.
    pub s: f64,
    /// Saturation level of the kill term [1/day].
    pub d: f64,
}

/// Canonical coefficient names, in the order used by the dataset schema and
/// by [`ModelParameters::to_array`].
pub const PARAM_NAMES: [&str; 28] = [
    "a", "b", "c", "e", "f", "g", "h", "p", "K_T", "K_N", "m", "j", "k", "q", "r1", "r2", "u",
    "k_L", "p_I", "g_I", "alpha", "beta", "k_C", "gamma", "mu_I", "ell", "s", "d",
];

impl ModelParameters {
    pub fn to_array(self) -> [f64; 28] {
        [
            self.a, self.b, self.c, self.e, self.f, self.g, self.h, self.p, self.k_t, self.k_n,
            self.m, self.j, self.k, self.q, self.r1, self.r2, self.u, self.k_l, self.p_i,
            self.g_i, self.alpha, self.beta, self.k_c, self.gamma, self.mu_i, self.ell, self.s,
            self.d,
        ]
    }

    pub fn from_array(v: [f64; 28]) -> Self {
        Self {
            a: v[0],
            b: v[1],
            c: v[2],
            e: v[3],
            f: v[4],
            g: v[5],
            h: v[6],
            p: v[7],
            k_t: v[8],
            k_n: v[9],
            m: v[10],
            j: v[11],
            k: v[12],
            q: v[13],
            r1: v[14],
            r2: v[15],
            u: v[16],
            k_l: v[17],
            p_i: v[18],
            g_i: v[19],
            alpha: v[20],
            beta: v[21],
            k_c: v[22],
            gamma: v[23],
            mu_i: v[24],
            ell: v[25],
            s: v[26],
            d: v[27],
        }
    }

    /// Checks the coefficient invariants: all finite and nonnegative, with
    /// the denominators (b, s, h, k, g_I) strictly positive.
    pub fn validate(&self) -> Result<()> {
        let arr = self.to_array();
        for (name, value) in PARAM_NAMES.iter().zip(arr.iter()) {
            if !value.is_finite() || *value < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "model parameter {name} must be finite and >= 0, got {value}"
                )));
            }
        }
        for (name, value) in [("b", self.b), ("s", self.s), ("h", self.h), ("k", self.k), ("g_I", self.g_i)] {
            if value <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "model parameter {name} must be > 0, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// The nominal coefficient set, loaded once from a data file and immutable
/// afterwards. The feedback law evaluates the tumor rate and the kill term
/// against these values (never the patient's true coefficients).
#[derive(Debug, Clone)]
pub struct NominalParameterSet {
    params: ModelParameters,
}

impl NominalParameterSet {
    /// Parses and validates a flat key-to-number JSON map. Unknown keys are
    /// rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let params: ModelParameters = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("nominal parameter file: {e}")))?;
        params.validate()?;
        Ok(Self { params })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Wraps an already-validated parameter set (used by tests and samplers).
    pub fn from_params(params: ModelParameters) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &ModelParameters {
        &self.params
    }
}

/// Composite kill strength D = d (L/T)^ell / (s + (L/T)^ell), in [0, d].
///
/// Singular limits are defined explicitly: zero CD8 count gives 0, and a
/// tumor at or below [`TUMOR_EXTINCT_THRESHOLD`] with CD8 present saturates
/// to d (the analytic limit of the ratio).
pub fn compute_d(tumor: f64, cd8: f64, p: &ModelParameters) -> f64 {
    compute_d_with(tumor, cd8, p.d, p.ell, p.s)
}

/// Same as [`compute_d`] with explicit coefficients, used by the feedback
/// law which works with nominal values of (d, ell, s).
pub fn compute_d_with(tumor: f64, cd8: f64, d: f64, ell: f64, s: f64) -> f64 {
    if cd8 <= 0.0 {
        return 0.0;
    }
    if tumor <= TUMOR_EXTINCT_THRESHOLD {
        return d;
    }
    let ratio_pow = (cd8 / tumor).powf(ell);
    if ratio_pow.is_infinite() {
        return d;
    }
    d * ratio_pow / (s + ratio_pow)
}

/// Tumor equation right-hand side. It has no direct input dependence, so the
/// feedback's rate-of-decrease test can evaluate it from a measured state and
/// nominal coefficients alone.
pub fn tumor_rate(x: &StateVector, p: &ModelParameters) -> f64 {
    let kill = 1.0 - (-x.chemo).exp();
    let d_term = compute_d(x.tumor, x.cd8, p);
    (p.a * (1.0 - p.b * x.tumor) - p.c * x.nk - d_term - p.k_t * kill) * x.tumor
}

/// Full six-component right-hand side of the population model.
///
/// Any non-finite derivative component is reported as a numerical-domain
/// error naming the offending component.
pub fn rhs(x: &StateVector, u: &ControlInput, p: &ModelParameters) -> Result<StateVector> {
    let kill = 1.0 - (-x.chemo).exp();
    let d_term = compute_d(x.tumor, x.cd8, p);
    let t2 = x.tumor * x.tumor;
    let dt2 = d_term * d_term * t2;

    let d_tumor = (p.a * (1.0 - p.b * x.tumor) - p.c * x.nk - d_term - p.k_t * kill) * x.tumor;
    let d_nk = p.e * x.circulating
        + (-p.f + p.g * t2 / (p.h + t2) - p.p * x.tumor - p.k_n * kill) * x.nk;
    let d_cd8 = -p.m * x.cd8 + p.j * dt2 / (p.k + dt2) * x.cd8 - p.q * x.cd8 * x.tumor
        + (p.r1 * x.nk + p.r2 * x.circulating) * x.tumor
        - p.u * x.nk * x.cd8 * x.cd8
        - p.k_l * kill * x.cd8
        + p.p_i * x.immuno / (p.g_i + x.immuno) * x.cd8
        + u.vaccine_rate;
    let d_circ = p.alpha - p.beta * x.circulating - p.k_c * kill * x.circulating;
    let d_chemo = -p.gamma * x.chemo + u.chemo_rate;
    let d_immuno = -p.mu_i * x.immuno + u.immuno_rate;

    let deriv = StateVector::new(d_tumor, d_nk, d_cd8, d_circ, d_chemo, d_immuno);
    if !deriv.is_finite() {
        let arr = deriv.to_array();
        let idx = arr.iter().position(|v| !v.is_finite()).unwrap();
        return Err(Error::NumericalDomain {
            component: STATE_COMPONENT_NAMES[idx],
            value: arr[idx],
            time: f64::NAN,
        });
    }
    Ok(deriv)
}


#[cfg(test)]
mod tests {
    use super::test_support::nominal;
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng) -> StateVector {
        StateVector::new(
            rng.random::<f64>() * 1e9,
            rng.random::<f64>() * 1e5,
            rng.random::<f64>() * 1e8,
            rng.random::<f64>() * 1e11,
            rng.random::<f64>() * 5.0,
            rng.random::<f64>() * 1e4,
        )
    }

    #[test]
    fn nominal_file_loads_and_validates() {
        let nom = nominal();
        assert_eq!(nom.params().a, 4.31e-1);
        assert_eq!(nom.params().d, 2.34);
        assert_eq!(nom.params().alpha, 7.5e8);
    }

    #[test]
    fn nominal_file_rejects_unknown_keys() {
        let err = NominalParameterSet::from_json(r#"{"a": 1.0, "bogus": 2.0}"#);
        assert!(err.is_err());
    }

    #[test]
    fn kill_term_vanishes_without_cd8() {
        let p = *nominal().params();
        assert_eq!(compute_d(1e6, 0.0, &p), 0.0);
    }

    #[test]
    fn kill_term_saturates_on_extinct_tumor() {
        let p = *nominal().params();
        assert_eq!(compute_d(TUMOR_EXTINCT_THRESHOLD, 10.0, &p), p.d);
        assert_eq!(compute_d(0.0, 1.0, &p), p.d);
    }

    #[test]
    fn kill_term_hand_value_at_unit_ratio() {
        // L = T, s = 1, d = 2 gives d * 1/(1+1) = 1 for any exponent.
        let mut p = *nominal().params();
        p.s = 1.0;
        p.d = 2.0;
        for ell in [0.5, 1.0, 2.09, 5.0] {
            p.ell = ell;
            assert_eq!(compute_d(12345.0, 12345.0, &p), 1.0);
        }
    }

    #[test]
    fn kill_term_monotone_in_cd8_and_bounded() {
        let p = *nominal().params();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let tumor = rng.random::<f64>() * 1e9 + 1.0;
            let l1 = rng.random::<f64>() * 1e8;
            let l2 = l1 + rng.random::<f64>() * 1e8;
            let d1 = compute_d(tumor, l1, &p);
            let d2 = compute_d(tumor, l2, &p);
            assert!(d1 <= d2 + 1e-15);
            assert!((0.0..=p.d).contains(&d1));
            assert!((0.0..=p.d).contains(&d2));
        }
    }

    #[test]
    fn tumor_rate_is_zero_at_zero_tumor() {
        let p = *nominal().params();
        let x = StateVector::new(0.0, 1e4, 1e5, 1e10, 1.0, 10.0);
        assert_eq!(tumor_rate(&x, &p), 0.0);
    }

    #[test]
    fn tumor_rate_logistic_hand_value() {
        // With N = L = M = 0 and T = 1/(2b), only the logistic term remains:
        // a (1 - 1/2) T = a T / 2.
        let p = *nominal().params();
        let t = 1.0 / (2.0 * p.b);
        let x = StateVector::new(t, 0.0, 0.0, 1e10, 0.0, 0.0);
        let expected = p.a * t / 2.0;
        assert!((tumor_rate(&x, &p) - expected).abs() <= 1e-9 * expected.abs());
    }

    #[test]
    fn tumor_rate_matches_rhs_component_under_any_input() {
        let p = *nominal().params();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let x = random_state(&mut rng);
            let u1 = ControlInput::new(rng.random(), rng.random::<f64>() * 1e4, rng.random::<f64>() * 1e7);
            let u2 = ControlInput::new(rng.random(), rng.random::<f64>() * 1e4, rng.random::<f64>() * 1e7);
            let r = tumor_rate(&x, &p);
            assert_eq!(rhs(&x, &u1, &p).unwrap().tumor, r);
            assert_eq!(rhs(&x, &u2, &p).unwrap().tumor, r);
        }
    }

    #[test]
    fn rhs_tumor_component_proportional_to_tumor() {
        let p = *nominal().params();
        let x = StateVector::new(0.0, 5e4, 0.0, 8e10, 0.0, 0.0);
        let u = ControlInput::new(0.0, 3.0, 14.0);
        assert_eq!(rhs(&x, &u, &p).unwrap().tumor, 0.0);
    }

    #[test]
    fn rhs_lymphocyte_equilibrium() {
        let p = *nominal().params();
        let x = StateVector::new(1e6, 1e3, 1e2, p.alpha / p.beta, 0.0, 0.0);
        let d_circ = rhs(&x, &ControlInput::zero(), &p).unwrap().circulating;
        assert!(d_circ.abs() <= 1e-6 * p.alpha);
    }

    #[test]
    fn rhs_chemo_injection_hand_value() {
        let p = *nominal().params();
        let x = StateVector::new(1e6, 1e3, 1e2, 1e10, 0.0, 0.0);
        let u = ControlInput::new(2.0, 0.0, 0.0);
        assert_eq!(rhs(&x, &u, &p).unwrap().chemo, 2.0);
    }

    #[test]
    fn positivity_preserved_at_zero_components() {
        // Components whose value is 0 must have nonnegative derivatives so
        // exact dynamics never cross into negative territory.
        let p = *nominal().params();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..500 {
            let base = random_state(&mut rng);
            let u = ControlInput::new(rng.random(), rng.random::<f64>() * 1e4, rng.random::<f64>() * 1e7);

            let mut x = base;
            x.tumor = 0.0;
            assert_eq!(rhs(&x, &u, &p).unwrap().tumor, 0.0);

            let mut x = base;
            x.nk = 0.0;
            assert!(rhs(&x, &u, &p).unwrap().nk >= 0.0);

            let mut x = base;
            x.cd8 = 0.0;
            assert!(rhs(&x, &u, &p).unwrap().cd8 >= 0.0);

            let mut x = base;
            x.circulating = 0.0;
            assert!(rhs(&x, &u, &p).unwrap().circulating >= 0.0);

            let mut x = base;
            x.chemo = 0.0;
            assert!(rhs(&x, &u, &p).unwrap().chemo >= 0.0);

            let mut x = base;
            x.immuno = 0.0;
            assert!(rhs(&x, &u, &p).unwrap().immuno >= 0.0);
        }
    }

    #[test]
    fn rhs_finite_on_valid_inputs() {
        let p = *nominal().params();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..2000 {
            let x = random_state(&mut rng);
            let u = ControlInput::new(rng.random(), rng.random::<f64>() * 1e4, rng.random::<f64>() * 1e7);
            assert!(rhs(&x, &u, &p).unwrap().is_finite());
        }
    }

    #[test]
    fn parameter_validation_rejects_negatives_and_zero_denominators() {
        let mut p = *nominal().params();
        p.a = -1.0;
        assert!(p.validate().is_err());
        let mut p = *nominal().params();
        p.s = 0.0;
        assert!(p.validate().is_err());
        let mut p = *nominal().params();
        p.k = 0.0;
        assert!(p.validate().is_err());
        assert!(nominal().params().validate().is_ok());
    }
}
