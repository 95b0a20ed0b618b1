//! Hierarchical model over per-subject spans: each subject has its own
//! `(ln σ_A′, ln σ_F′)` drawn from a bivariate Gaussian population; all
//! other parameters are frozen. Sampled by Metropolis-within-Gibbs.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mh::{mh_step, GaussianProposal};
use crate::error::{Error, Result};
use crate::grid::Map;
use crate::likelihood::{dataset_total_log2, Scanpath};
use crate::params::{ModelParams, ModelVariant, ModelVariantName};

/// Population parameters over log-spans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub mu_a: f64,
    pub mu_f: f64,
    pub v_a: f64,
    pub v_f: f64,
    pub rho: f64,
}

impl Hyper {
    /// Log density of a subject's log-spans under the population Gaussian.
    pub fn ln_population(&self, z: [f64; 2]) -> f64 {
        let one_m = 1.0 - self.rho * self.rho;
        if !(self.v_a > 0.0 && self.v_f > 0.0 && one_m > 0.0) {
            return f64::NEG_INFINITY;
        }
        let da = (z[0] - self.mu_a) / self.v_a.sqrt();
        let df = (z[1] - self.mu_f) / self.v_f.sqrt();
        let q = (da * da - 2.0 * self.rho * da * df + df * df) / one_m;
        -(2.0 * std::f64::consts::PI).ln() - 0.5 * (self.v_a * self.v_f * one_m).ln() - 0.5 * q
    }

    fn to_vec(self) -> Vec<f64> {
        vec![self.mu_a, self.mu_f, self.v_a.ln(), self.v_f.ln(), self.rho]
    }

    fn from_slice(h: &[f64]) -> Self {
        Hyper { mu_a: h[0], mu_f: h[1], v_a: h[2].exp(), v_f: h[3].exp(), rho: h[4] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HierarchicalSpec {
    /// Values of every non-span parameter; the spans here seed the chains.
    pub shared: ModelParams,
    pub variant: ModelVariantName,
    /// Support of the uniform hyperprior on both log-span means.
    pub mu_bounds: (f64, f64),
    pub ig_shape: f64,
    pub ig_scale: f64,
    /// Random-walk sd of each subject's log-spans.
    pub subject_step: f64,
    /// Random-walk sds of `(μ_A, μ_F, ln v_A, ln v_F, ρ)`.
    pub hyper_steps: [f64; 5],
    /// Hyperparameter updates per sweep; they do not touch the data.
    pub hyper_updates: usize,
    /// Keeps the hyperparameters fixed at this value.
    pub frozen_hyper: Option<Hyper>,
    pub initial_hyper: Option<Hyper>,
}

impl Default for HierarchicalSpec {
    fn default() -> Self {
        Self {
            shared: ModelParams::reference_fit(),
            variant: ModelVariantName(ModelVariant::subtractive()),
            mu_bounds: (0.01f64.ln(), 20f64.ln()),
            ig_shape: 0.25,
            ig_scale: 1.0,
            subject_step: 0.05,
            hyper_steps: [0.05, 0.05, 0.3, 0.3, 0.1],
            hyper_updates: 1,
            frozen_hyper: None,
            initial_hyper: None,
        }
    }
}

impl HierarchicalSpec {
    fn ln_inv_gamma(&self, v: f64) -> f64 {
        -(self.ig_shape + 1.0) * v.ln() - self.ig_scale / v
    }

    /// Log density of the hyperparameter vector `(μ_A, μ_F, ln v_A, ln v_F, ρ)`
    /// given the subjects' log-spans.
    fn ln_hyper_conditional(&self, h: &[f64], subjects: &[[f64; 2]]) -> f64 {
        let (lo, hi) = self.mu_bounds;
        if !(lo..=hi).contains(&h[0]) || !(lo..=hi).contains(&h[1]) || !(h[4] > -1.0 && h[4] < 1.0) {
            return f64::NEG_INFINITY;
        }
        let hyper = Hyper::from_slice(h);
        let pop: f64 = subjects.iter().map(|z| hyper.ln_population(*z)).sum();
        // Variances are sampled on the log scale, hence the + ln v terms.
        pop + self.ln_inv_gamma(hyper.v_a) + self.ln_inv_gamma(hyper.v_f) + h[2] + h[3]
    }

    fn params_for(&self, z: [f64; 2]) -> ModelParams {
        let mut p = self.shared;
        p.sigma_a_prime = z[0].exp();
        p.sigma_f_prime = z[1].exp();
        p
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchicalChain {
    pub subjects: Vec<String>,
    /// `[sweep][subject]` log-spans `(ln σ_A′, ln σ_F′)`.
    pub subject_draws: Vec<Vec<[f64; 2]>>,
    pub hyper_draws: Vec<Hyper>,
    pub subject_acceptance: Vec<f64>,
    pub hyper_acceptance: f64,
    pub excluded: Vec<String>,
    pub seed: u64,
}

impl HierarchicalChain {
    /// Posterior mean of each subject's spans on the natural scale.
    pub fn posterior_mean_spans(&self, burn_in: usize) -> Result<BTreeMap<String, (f64, f64)>> {
        let kept = self.subject_draws.get(burn_in..).filter(|k| !k.is_empty()).ok_or_else(|| {
            Error::InsufficientData(format!("{} sweeps, burn-in {burn_in}", self.subject_draws.len()))
        })?;
        let n = kept.len() as f64;
        Ok(self
            .subjects
            .iter()
            .enumerate()
            .map(|(s, name)| {
                let a = kept.iter().map(|d| d[s][0].exp()).sum::<f64>() / n;
                let f = kept.iter().map(|d| d[s][1].exp()).sum::<f64>() / n;
                (name.clone(), (a, f))
            })
            .collect())
    }

    pub fn hyper_column(&self, k: usize) -> Vec<f64> {
        self.hyper_draws
            .iter()
            .map(|h| match k {
                0 => h.mu_a,
                1 => h.mu_f,
                2 => h.v_a,
                3 => h.v_f,
                _ => h.rho,
            })
            .collect()
    }
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over a combined key
    let mut z = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `n_sweeps` Gibbs sweeps. Each sweep updates every subject's
/// log-spans by one Metropolis step (likelihood of that subject's data times
/// the population density), then the hyperparameters.
pub fn gibbs_hierarchical(
    spec: &HierarchicalSpec,
    data: &BTreeMap<String, Vec<Scanpath>>,
    saliencies: &BTreeMap<String, Map>,
    n_sweeps: usize,
    seed: u64,
) -> Result<HierarchicalChain> {
    spec.shared.validate()?;
    let variant = spec.variant.0;
    let mut subjects = Vec::new();
    let mut paths: Vec<&[Scanpath]> = Vec::new();
    let mut excluded = Vec::new();
    for (name, p) in data {
        if p.iter().all(|t| t.len() < 2) {
            log::warn!("subject {name} has no scored fixations and is excluded");
            excluded.push(name.clone());
        } else {
            subjects.push(name.clone());
            paths.push(p.as_slice());
        }
    }
    let min_subjects = if spec.frozen_hyper.is_some() { 1 } else { 2 };
    if subjects.len() < min_subjects {
        return Err(Error::InsufficientData(format!(
            "hierarchical sampling needs {min_subjects} subject(s) with data, got {}",
            subjects.len()
        )));
    }
    let (lo, hi) = spec.mu_bounds;
    if !(lo < hi) || !(spec.ig_shape > 0.0 && spec.ig_scale > 0.0) {
        return Err(Error::Configuration("invalid hyperprior settings".into()));
    }

    let loglik = |p: &[Scanpath], z: [f64; 2]| -> Result<f64> {
        let theta = spec.params_for(z);
        if theta.validate().is_err() {
            return Ok(f64::NEG_INFINITY);
        }
        match dataset_total_log2(p, saliencies, &theta, &variant) {
            Ok((bits, _)) => Ok(bits * std::f64::consts::LN_2),
            Err(Error::NumericDomain { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    };

    let z0 = [spec.shared.sigma_a_prime.ln(), spec.shared.sigma_f_prime.ln()];
    let mut z: Vec<[f64; 2]> = vec![z0; subjects.len()];
    let mut ll: Vec<f64> = paths.iter().map(|p| loglik(p, z0)).collect::<Result<_>>()?;
    let mut hyper = spec.frozen_hyper.or(spec.initial_hyper).unwrap_or(Hyper {
        mu_a: z0[0].clamp(lo, hi),
        mu_f: z0[1].clamp(lo, hi),
        v_a: 0.1,
        v_f: 0.1,
        rho: 0.0,
    });
    let subject_prop = GaussianProposal::diagonal(&[spec.subject_step; 2])?;
    let hyper_prop = GaussianProposal::diagonal(&spec.hyper_steps)?;
    let mut hyper_rng = ChaCha8Rng::seed_from_u64(mix(seed, u64::MAX, 0));

    let mut subject_draws = Vec::with_capacity(n_sweeps);
    let mut hyper_draws = Vec::with_capacity(n_sweeps);
    let mut accepted = vec![0usize; subjects.len()];
    let mut hyper_accepted = 0usize;
    for sweep in 0..n_sweeps {
        let h = hyper;
        let updates = paths
            .par_iter()
            .zip(z.par_iter().zip(ll.par_iter()))
            .enumerate()
            .map(|(s, (p, (zs, lls)))| -> Result<([f64; 2], f64, bool)> {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, sweep as u64, s as u64));
                let mut x = zs.to_vec();
                let mut lp = lls + h.ln_population(*zs);
                let mut err = None;
                let ok = mh_step(
                    |y| match loglik(p, [y[0], y[1]]) {
                        Ok(l) => l + h.ln_population([y[0], y[1]]),
                        Err(e) => {
                            err = Some(e);
                            f64::NEG_INFINITY
                        }
                    },
                    &subject_prop,
                    &mut x,
                    &mut lp,
                    &mut rng,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                let znew = [x[0], x[1]];
                Ok((znew, lp - h.ln_population(znew), ok))
            })
            .collect::<Result<Vec<_>>>()?;
        for (s, (zn, l, ok)) in updates.into_iter().enumerate() {
            z[s] = zn;
            ll[s] = l;
            accepted[s] += ok as usize;
        }

        if spec.frozen_hyper.is_none() {
            let mut hv = hyper.to_vec();
            let mut lp = spec.ln_hyper_conditional(&hv, &z);
            for _ in 0..spec.hyper_updates.max(1) {
                if mh_step(|y| spec.ln_hyper_conditional(y, &z), &hyper_prop, &mut hv, &mut lp, &mut hyper_rng) {
                    hyper_accepted += 1;
                }
            }
            hyper = Hyper::from_slice(&hv);
        }
        subject_draws.push(z.clone());
        hyper_draws.push(hyper);
    }
    let sweeps = n_sweeps.max(1) as f64;
    Ok(HierarchicalChain {
        subjects,
        subject_draws,
        hyper_draws,
        subject_acceptance: accepted.iter().map(|a| *a as f64 / sweeps).collect(),
        hyper_acceptance: hyper_accepted as f64 / (sweeps * spec.hyper_updates.max(1) as f64),
        excluded,
        seed,
    })
}
