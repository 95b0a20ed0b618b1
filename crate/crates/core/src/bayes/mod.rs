//! Bayesian inference: priors and posterior, Metropolis-Hastings sampling,
//! hierarchical Gibbs sampling over per-subject spans, and convergence
//! diagnostics.

pub mod diagnostics;
pub mod hierarchical;
pub mod mh;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use diagnostics::{
    ess, ess_chains, histogram_1d, histogram_2d, posterior_summaries, rhat, rhat_multivariate, PosteriorSummary,
};
pub use hierarchical::{gibbs_hierarchical, HierarchicalChain, HierarchicalSpec, Hyper};
pub use mh::{metropolis_hastings, run_chains, tune_proposal, Chain, GaussianProposal, ProposalSpec};

use crate::error::Result;
use crate::grid::Map;
use crate::likelihood::{dataset_total_log2, Scanpath};
use crate::params::{ModelParams, ModelVariant, ParamId};

/// Unnormalized log-density over an unconstrained vector.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Natural-log density; `-inf` outside the support.
    fn log_density(&self, x: &[f64]) -> f64;

    fn names(&self) -> Vec<String> {
        (0..self.dim()).map(|k| format!("x{k}")).collect()
    }

    /// Whether coordinates are logarithms of the reported quantities.
    fn log_space(&self) -> bool {
        false
    }
}

/// A log-density given by a closure.
pub struct FnDensity<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnDensity<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> LogDensity for FnDensity<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Prior on one positive parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamPrior {
    /// Log-normal with the given location and scale of `ln θ`.
    LogNormal { location: f64, scale: f64 },
    /// Constant density on `[lo, hi]`.
    Flat { lo: f64, hi: f64 },
}

impl ParamPrior {
    pub fn ln_density(&self, theta: f64) -> f64 {
        if !(theta > 0.0 && theta.is_finite()) {
            return f64::NEG_INFINITY;
        }
        match *self {
            ParamPrior::LogNormal { location, scale } => {
                let z = (theta.ln() - location) / scale;
                -theta.ln() - scale.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * z * z
            }
            ParamPrior::Flat { lo, hi } => {
                if (lo..=hi).contains(&theta) {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// Independent priors on the free parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Prior {
    pub default: ParamPrior,
    pub overrides: BTreeMap<ParamId, ParamPrior>,
}

impl Default for Prior {
    fn default() -> Self {
        Self { default: ParamPrior::LogNormal { location: 0.0, scale: 30.0 }, overrides: BTreeMap::new() }
    }
}

impl Prior {
    pub fn flat(lo: f64, hi: f64) -> Self {
        Self { default: ParamPrior::Flat { lo, hi }, overrides: BTreeMap::new() }
    }

    pub fn with(mut self, id: ParamId, prior: ParamPrior) -> Self {
        self.overrides.insert(id, prior);
        self
    }

    pub fn for_param(&self, id: ParamId) -> ParamPrior {
        self.overrides.get(&id).copied().unwrap_or(self.default)
    }

    /// Log prior density of the free parameters of `variant`.
    pub fn ln_density(&self, theta: &ModelParams, variant: &ModelVariant) -> f64 {
        variant.free_params().into_iter().map(|id| self.for_param(id).ln_density(theta.get(id))).sum()
    }
}

/// `ln prior(θ) + ln L(θ)` in nats. Invalid parameter vectors give `-inf`.
pub fn log_posterior(
    theta: &ModelParams,
    data: &[Scanpath],
    saliencies: &BTreeMap<String, Map>,
    variant: &ModelVariant,
    prior: &Prior,
) -> Result<f64> {
    let lp = prior.ln_density(theta, variant);
    if !lp.is_finite() || theta.validate().is_err() {
        return Ok(f64::NEG_INFINITY);
    }
    if data.is_empty() {
        return Ok(lp);
    }
    match dataset_total_log2(data, saliencies, theta, variant) {
        Ok((bits, _)) => Ok(lp + bits * std::f64::consts::LN_2),
        Err(crate::error::Error::NumericDomain { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Posterior over the natural logs of the free parameters (with Jacobian).
pub struct PosteriorTarget<'a> {
    pub data: &'a [Scanpath],
    pub saliencies: &'a BTreeMap<String, Map>,
    pub variant: ModelVariant,
    pub prior: Prior,
    /// Values of parameters that are not free.
    pub base: ModelParams,
}

impl<'a> PosteriorTarget<'a> {
    pub fn new(
        data: &'a [Scanpath],
        saliencies: &'a BTreeMap<String, Map>,
        variant: ModelVariant,
        prior: Prior,
    ) -> Self {
        Self { data, saliencies, variant, prior, base: ModelParams::reference_fit() }
    }
}

impl LogDensity for PosteriorTarget<'_> {
    fn dim(&self) -> usize {
        self.variant.dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let Ok(theta) = self.variant.from_log_free(x, &self.base) else { return f64::NEG_INFINITY };
        match log_posterior(&theta, self.data, self.saliencies, &self.variant, &self.prior) {
            Ok(v) if !v.is_nan() => v + x.iter().sum::<f64>(),
            _ => f64::NEG_INFINITY,
        }
    }

    fn names(&self) -> Vec<String> {
        self.variant.free_params().into_iter().map(|id| id.name().to_string()).collect()
    }

    fn log_space(&self) -> bool {
        true
    }
}
