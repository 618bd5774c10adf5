//! Simulation laboratory for the minimax error of supervised classification
//! with Gaussian class conditionals when the dimension outruns the sample size.
//!
//! The crate is organised bottom-up:
//!
//! - [`analytic`]: Q-function, Bayes error, the MAP rule and structured
//!   covariance algebra, plus the closed-form moment identities.
//! - [`paramsets`]: constant-difficulty parameter families (sphere,
//!   sensing-aware) and the exponential / polynomial sparsity classes.
//! - [`datagen`]: seeded dataset synthesis and the auxiliary statistics
//!   `V` and `W` of the sphere model.
//! - [`classifiers`]: Bayes oracle, matched filter, plug-in ML, ML projection,
//!   soft-threshold projection and a coin-flip baseline.
//! - [`sweep`]: the Monte Carlo engine, sweeps over `(d, n(d))` trajectories,
//!   moment diagnostics and trend verdicts.
//!
//! Everything random is derived from a single 64-bit master seed through
//! [`rng::mix`], so results do not depend on thread count or scheduling.

pub mod analytic;
pub mod classifiers;
pub mod datagen;
mod error;
pub mod exec;
pub mod paramsets;
pub mod rng;
pub mod stats;
pub mod sweep;

pub use error::{Error, Result};

/// A class label in `{-1, +1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    /// Decision for a real-valued score; ties go to `+1`.
    #[inline]
    pub fn from_score(score: f64) -> Label {
        if score >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Label::Neg => -1.0,
            Label::Pos => 1.0,
        }
    }

    #[inline]
    pub fn as_i8(self) -> i8 {
        match self {
            Label::Neg => -1,
            Label::Pos => 1,
        }
    }

    #[inline]
    pub fn flipped(self) -> Label {
        match self {
            Label::Neg => Label::Pos,
            Label::Pos => Label::Neg,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:+}", self.as_i8())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
