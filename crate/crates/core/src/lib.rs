//! Generalized inductive updating over finite hypothesis sets.
//!
//! Two updating rules are provided. Inferential updating multiplies prior
//! credibility by an evidential score and rescales; it never rules a
//! hypothesis out. Predictive updating adds the score to the prior and
//! shifts everything by the smallest constant that restores a probability
//! vector, dropping the fewest possible hypotheses to zero.
//!
//! Around those rules sit the evidential measures that feed them (likelihood,
//! exponential loss, CRPS, minimum absolute error), an accuracy-dominance
//! checker for the squared-Euclidean case, a numerical bench for the
//! algebraic properties that single out additive and multiplicative
//! combination, and a seeded simulation harness.

pub mod characterization;
pub mod credal;
pub mod dominance;
pub mod error;
pub mod evidence;
pub mod harness;
pub mod numeric;
pub mod updating;

pub use credal::{Credibility, HypothesisSet, ProbabilityVector};
pub use error::{Error, Result};
pub use evidence::{Forecast, LossValue, ScoreMode, ScoreVector};
pub use updating::{NormalizationResult, UpdateRule};
