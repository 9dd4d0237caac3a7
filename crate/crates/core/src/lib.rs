//! Core machinery for designing and statistically certifying parameterized
//! drug-delivery feedback laws for mixed cancer therapy under large
//! model-parameter uncertainty.
//!
//! The pipeline, end to end:
//!
//! 1. [`dynamics`] — the six-population ODE model (tumor, NK, CD8+T,
//!    circulating lymphocytes, chemo and immuno drug concentrations).
//! 2. [`feedback`] — the explicit parameterized injection law (chemo gating,
//!    tumor rate-of-decrease cutoff, kill-term saturation rule).
//! 3. [`protocol`] — treatment/rest scheduling and sampled-data closed-loop
//!    integration, plus outcome-label extraction per trajectory.
//! 4. [`sampling`] — Monte-Carlo clouds of (initial state, patient
//!    parameters, control parameters) triplets and the labeled dataset.
//! 5. [`forest`] — bagged decision-forest classifiers/regressors with
//!    impurity-based feature importances, built from scratch.
//! 6. [`sensitivity`] — importance ranking, feature selection and
//!    reduced-model refits.
//! 7. [`certify`] — randomized-certification sample sizing, surrogate-based
//!    success-probability / drug-expectation estimation, and constrained
//!    grid optimization of the free control parameters.
//!
//! Everything is deterministic given a seed: parallel work uses per-unit
//! ChaCha streams and results are assembled in index order.

pub mod certify;
pub mod dynamics;
pub mod error;
pub mod feedback;
pub mod forest;
pub mod protocol;
pub mod sampling;
pub mod schema;
pub mod sensitivity;

pub use error::{Error, Result};
