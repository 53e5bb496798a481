//! Weighted topological pressure for chains of subshifts of finite type.
//!
//! A [`ChainSystem`] is a chain `X_1 -> ... -> X_k` of one-step SFTs joined
//! by 1-block codes, with a weight vector `a = (a_1, ..., a_k)`. The crate
//! computes finite-stage covering sums over weighted cylinders, the
//! fractional covering LP and its Frostman dual, Markov-measure side
//! quantities (entropies, hidden-Markov brackets, weighted SMB rates), and
//! assembles both sides of the weighted variational principle.
//!
//! ```
//! use wpress_core::{fixtures, covering};
//!
//! let sys = fixtures::fs42();
//! let p = covering::upper_pressure(&sys, &wpress_core::Potential::zero(), 10).unwrap();
//! assert!((p - 2.5 * std::f64::consts::LN_2).abs() < 1e-12);
//! ```

pub mod covering;
pub mod cylinders;
pub mod error;
pub mod fixtures;
pub mod frostman;
pub mod io;
pub mod measures;
pub mod power;
pub mod simplex;
pub mod symbolic;
pub mod variational;

pub use covering::{PressureBracket, StageSpec};
pub use cylinders::{Cover, CoverFamily, WeightedCylinder, WindowProfile};
pub use error::{Error, Result};
pub use frostman::{FrostmanCertificate, StageMeasure};
pub use measures::{EntropyBracket, MarkovMeasure, WordDistribution};
pub use symbolic::{
    Alphabet, BlockCode, ChainSystem, Limits, Potential, Subshift, Symbol, ValidationReport,
    Weights, Word,
};
pub use variational::{ObjectiveValue, OptimizeOptions, VpReport};
