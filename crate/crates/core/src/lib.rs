//! Data-parallel particle filter resampling.
//!
//! This crate implements the resampling stage of a particle filter as a set of
//! pure, deterministic functions over importance weights:
//!
//! - [`multinomial`], [`stratified`], [`systematic`] and [`metropolis`]
//!   resamplers, all unbiased (`E[o_i] = P·v_i`) and scale invariant in the
//!   input weights;
//! - [`tuning`]: closed-form selection of the Metropolis iteration count from
//!   a two-state Markov chain analysis of the heaviest particle, plus a Monte
//!   Carlo convergence checker;
//! - [`simdata`]: symmetric Dirichlet weight-set simulation for benchmarking;
//! - [`rng`]: a counter-based generator (Philox 4x32-10) giving every particle
//!   its own reproducible random stream, so results do not depend on thread
//!   scheduling.
//!
//! The multinomial and Metropolis resamplers report an *ancestor* index per
//! output slot; the stratified and systematic resamplers report an *offspring*
//! count per input particle. [`offspring_to_ancestors`] and
//! [`ancestors_to_offspring`] convert between the two representations.
//!
//! All indices are 0-based.

mod error;
pub mod resamplers;
pub mod rng;
pub mod scan;
pub mod simdata;
pub mod tuning;
mod weights;

pub use error::Error;
pub use resamplers::{
    metropolis, multinomial, resample, stratified, systematic, ResampleConfig, Resampled, Scheme,
};
pub use scan::{prefix_sum, CumulativeWeights};
pub use weights::{
    ancestors_to_offspring, offspring_to_ancestors, resampling_error, AncestorVector,
    OffspringVector, WeightSet,
};
