//! Model evaluation: information criteria, KL divergence, likelihood
//! histograms, cross-validation and spatial statistics.

pub mod cv;
pub mod spatial;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use cv::{cross_validate, cv_split, ComparisonTable, CvCell, CvConfig, CvPlan, Fold, ModelSummary};
pub use spatial::{
    ks_statistic, pair_correlation, pair_correlation_by_image, pair_correlation_leave_one_out,
    saccade_length_distribution, PcfPoint, SaccadeHistogram,
};

use crate::error::{Error, Result};
use crate::grid::Map;
use crate::likelihood::LikelihoodTrace;

/// Akaike information criterion on the deviance scale, from a natural-log likelihood.
pub fn aic(total_loglik_nats: f64, dim: usize) -> f64 {
    -2.0 * total_loglik_nats + 2.0 * dim as f64
}

/// Bayesian information criterion on the deviance scale.
pub fn bic(total_loglik_nats: f64, dim: usize, n_obs: usize) -> Result<f64> {
    if n_obs == 0 {
        return Err(Error::InvalidArgument("BIC needs at least one observation".into()));
    }
    Ok(-2.0 * total_loglik_nats + (n_obs as f64).ln() * dim as f64)
}

pub fn aic_penalty(dim: usize) -> f64 {
    2.0 * dim as f64
}

pub fn bic_penalty(dim: usize, n_obs: usize) -> f64 {
    (n_obs as f64).ln() * dim as f64
}

/// Converts a deviance-scale penalty to bits per scored fixation.
pub fn penalty_bits_per_fix(penalty: f64, n_obs: usize) -> f64 {
    penalty / (2.0 * n_obs as f64 * std::f64::consts::LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlDivergence {
    pub nats: f64,
    pub bits: f64,
    /// `p` has mass where `q` has none.
    pub infinite: bool,
}

/// `Σ p ln(p/q)` over all cells of two probability maps.
pub fn kl_divergence(p: &Map, q: &Map) -> Result<KlDivergence> {
    if p.grid() != q.grid() {
        return Err(Error::InvalidArgument("KL divergence of maps on different grids".into()));
    }
    for (name, m) in [("p", p), ("q", q)] {
        if !m.is_probability(1e-9) {
            return Err(Error::InvalidArgument(format!("{name} is not a probability map (sum {})", m.sum())));
        }
    }
    let mut nats = 0.0;
    for (&a, &b) in p.values().iter().zip(q.values()) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(KlDivergence { nats: f64::INFINITY, bits: f64::INFINITY, infinite: true });
            }
            nats += a * (a / b).ln();
        }
    }
    // rounding can push an exact match a hair below zero
    let nats = nats.max(0.0);
    Ok(KlDivergence { nats, bits: nats / std::f64::consts::LN_2, infinite: false })
}

/// Histogram of per-fixation log₂-likelihoods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodHistogram {
    pub centers: Vec<f64>,
    pub counts: Vec<usize>,
    pub width: f64,
}

impl LikelihoodHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Plot data as `x,y` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut out = String::from("x,y\n");
        for (c, n) in self.centers.iter().zip(&self.counts) {
            out.push_str(&format!("{c},{n}\n"));
        }
        w.write_all(out.as_bytes()).map_err(|e| Error::io("<histogram>", e))
    }
}

/// Bins a trace's per-fixation values into `bins` equal bins spanning its
/// range. A trace whose values are all equal gives one bin at that value.
pub fn likelihood_histogram(trace: &LikelihoodTrace, bins: usize) -> Result<LikelihoodHistogram> {
    if trace.n_scored() == 0 {
        return Err(Error::InsufficientData("empty likelihood trace".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    let v = trace.per_fixation_log2();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        return Ok(LikelihoodHistogram { centers: vec![lo], counts: vec![v.len()], width: 0.0 });
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in &v {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let centers = (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect();
    Ok(LikelihoodHistogram { centers, counts, width })
}
