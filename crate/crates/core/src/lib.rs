//! Dynamical scanpath model with exact sequential likelihoods: an attention
//! map and an inhibition map evolve during each fixation, and their
//! combination gives the distribution of the next fixation.
//!
//! Layers, bottom up: [`grid`] and [`params`], [`dynamics`], [`likelihood`],
//! then [`optimize`], [`bayes`] and [`eval`]. [`pipeline`] wires them into
//! the commands of the `scenewalk` binary, configured by [`config`].

pub mod bayes;
pub mod config;
pub mod data;
pub mod dynamics;
pub mod error;
pub mod eval;
pub mod grid;
pub mod likelihood;
pub mod optimize;
pub mod params;
pub mod pipeline;

pub use error::{Error, Result};
pub use grid::{Fixation, GridSpec, Map};
pub use likelihood::{LikelihoodTrace, Scanpath};
pub use params::{ModelParams, ModelVariant};
