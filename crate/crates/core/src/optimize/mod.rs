//! Maximum-likelihood fitting in log-parameter space: genetic search over a
//! box, simplex refinement from the best distinct individuals, and an audit
//! of the local maxima found.

pub mod genetic;
pub mod simplex;

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use genetic::{distinct_points, genetic_search, GeneticConfig, GeneticResult};
pub use simplex::{nelder_mead, SimplexConfig, SimplexResult};

use crate::error::{Error, Result};
use crate::grid::Map;
use crate::likelihood::{dataset_total_log2, Scanpath};
use crate::params::{ModelParams, ModelVariant, ParamId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Natural-log search interval of parameters missing from
    /// `bound_overrides`.
    pub log_bounds: (f64, f64),
    pub bound_overrides: BTreeMap<ParamId, (f64, f64)>,
    pub genetic: GeneticConfig,
    pub simplex: SimplexConfig,
    /// Additional simplex starts beyond the genetic best.
    pub restarts: usize,
    /// Log-space distance below which two optima count as the same.
    pub distinct_tol: f64,
    pub seed: u64,
}

/// Plausible natural-scale search range of each parameter.
pub fn default_range(id: ParamId) -> (f64, f64) {
    match id {
        ParamId::OmegaA => (0.1, 1000.0),
        ParamId::OmegaF => (0.01, 100.0),
        ParamId::SigmaAPrime | ParamId::SigmaFPrime => (0.1, 30.0),
        ParamId::Gamma => (0.05, 100.0),
        ParamId::Lambda => (0.05, 20.0),
        ParamId::CF => (1e-3, 10.0),
        ParamId::Zeta => (1e-4, 0.9),
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            log_bounds: (-10.0, 10.0),
            bound_overrides: ParamId::ALL
                .into_iter()
                .map(|id| {
                    let (lo, hi) = default_range(id);
                    (id, (lo.ln(), hi.ln()))
                })
                .collect(),
            genetic: GeneticConfig::default(),
            simplex: SimplexConfig::default(),
            restarts: 5,
            distinct_tol: 0.5,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn bounds_for(&self, variant: &ModelVariant) -> Result<Vec<(f64, f64)>> {
        let b = variant
            .free_params()
            .into_iter()
            .map(|id| self.bound_overrides.get(&id).copied().unwrap_or(self.log_bounds))
            .collect::<Vec<_>>();
        genetic::check_bounds(&b)?;
        Ok(b)
    }
}

/// One refined optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMaximum {
    pub theta: ModelParams,
    pub log_theta: Vec<f64>,
    /// Total log₂-likelihood (bits).
    pub loglik: f64,
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub variant: String,
    pub free_params: Vec<ParamId>,
    pub theta_hat: ModelParams,
    pub log_theta: Vec<f64>,
    /// Total log₂-likelihood at the optimum (bits).
    pub loglik_at_max: f64,
    pub n_scored: usize,
    pub per_fix_at_max: f64,
    /// Distinct optima, best first.
    pub all_local_maxima: Vec<LocalMaximum>,
    pub converged: bool,
    /// True when the requested number of simplex starts was run.
    pub global_audit: bool,
    pub evaluations: usize,
    pub genetic_best: f64,
    pub wall_seconds: f64,
    pub config: FitConfig,
}

impl FitResult {
    pub fn write_json<W: std::io::Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// Memoizes an objective by the exact bit pattern of its argument.
pub struct CachedObjective<F> {
    inner: F,
    cache: Mutex<HashMap<Vec<u64>, f64>>,
    calls: Mutex<usize>,
}

impl<F: Fn(&[f64]) -> f64> CachedObjective<F> {
    pub fn new(inner: F) -> Self {
        Self { inner, cache: Mutex::new(HashMap::new()), calls: Mutex::new(0) }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return *v;
        }
        let v = (self.inner)(x);
        *self.calls.lock().expect("counter lock") += 1;
        self.cache.lock().expect("cache lock").insert(key, v);
        v
    }

    /// Number of distinct points actually evaluated.
    pub fn evaluations(&self) -> usize {
        *self.calls.lock().expect("counter lock")
    }
}

/// Fits `variant` to `data` by maximum likelihood.
pub fn mle_fit(
    data: &[Scanpath],
    saliencies: &BTreeMap<String, Map>,
    variant: &ModelVariant,
    config: &FitConfig,
) -> Result<FitResult> {
    if data.is_empty() {
        return Err(Error::InsufficientData("no scanpaths to fit".into()));
    }
    let started = Instant::now();
    let bounds = config.bounds_for(variant)?;
    let base = ModelParams::reference_fit();
    // Surface configuration problems once instead of per evaluation.
    let (_, n_scored) = dataset_total_log2(data, saliencies, &base, variant)?;
    if n_scored == 0 {
        return Err(Error::InsufficientData("no fixation after the first in any scanpath".into()));
    }

    let objective = CachedObjective::new(|x: &[f64]| {
        let Ok(theta) = variant.from_log_free(x, &base) else { return f64::NEG_INFINITY };
        if theta.validate().is_err() {
            return f64::NEG_INFINITY;
        }
        match dataset_total_log2(data, saliencies, &theta, variant) {
            Ok((v, _)) if v.is_finite() => v,
            _ => f64::NEG_INFINITY,
        }
    });
    let f = |x: &[f64]| objective.eval(x);

    let ga = genetic_search(&f, &bounds, &config.genetic, config.seed)?;
    if !ga.best_value.is_finite() {
        return Err(Error::OptimizationFailed(format!(
            "all {} genetic evaluations were non-finite for {variant}",
            ga.evaluations
        )));
    }
    log::info!("{variant}: genetic best {:.3} bits after {} evaluations", ga.best_value, ga.evaluations);

    let starts = distinct_points(&ga.population, config.distinct_tol, config.restarts + 1);
    let mut maxima: Vec<LocalMaximum> = Vec::new();
    for (x0, _) in &starts {
        let r = nelder_mead(&f, x0, &config.simplex)?;
        let theta = variant.from_log_free(&r.x, &base)?;
        log::debug!("{variant}: simplex {:.4} bits (converged {})", r.value, r.converged);
        let candidate =
            LocalMaximum { theta, log_theta: r.x, loglik: r.value, converged: r.converged, evaluations: r.evaluations };
        match maxima.iter_mut().find(|m| genetic::euclid(&m.log_theta, &candidate.log_theta) <= config.distinct_tol) {
            Some(m) if m.loglik >= candidate.loglik => {}
            Some(m) => *m = candidate,
            None => maxima.push(candidate),
        }
    }
    maxima.retain(|m| m.loglik.is_finite());
    maxima.sort_by(|a, b| b.loglik.total_cmp(&a.loglik));
    let best = maxima.first().cloned().ok_or_else(|| {
        Error::OptimizationFailed(format!("simplex refinement produced no finite optimum for {variant}"))
    })?;

    Ok(FitResult {
        variant: variant.to_string(),
        free_params: variant.free_params(),
        theta_hat: best.theta,
        log_theta: best.log_theta.clone(),
        loglik_at_max: best.loglik,
        n_scored,
        per_fix_at_max: best.loglik / n_scored as f64,
        converged: best.converged,
        global_audit: starts.len() > config.restarts,
        evaluations: objective.evaluations(),
        genetic_best: ga.best_value,
        all_local_maxima: maxima,
        wall_seconds: started.elapsed().as_secs_f64(),
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{kde_density, Fixation, GridSpec};
    use crate::likelihood::{simulate_scanpath, StartRule};

    #[test]
    fn cache_skips_repeats() {
        let c = CachedObjective::new(|x: &[f64]| x[0] * 2.0);
        assert_eq!(c.eval(&[1.0]), 2.0);
        assert_eq!(c.eval(&[1.0]), 2.0);
        assert_eq!(c.eval(&[2.0]), 4.0);
        assert_eq!(c.evaluations(), 2);
    }

    #[test]
    fn quadratic_recovered_by_pipeline() {
        // Same genetic + simplex composition on an oracle objective.
        let f = |x: &[f64]| -(x[0] - 0.3).powi(2) - 2.0 * (x[1] + 1.2).powi(2) - (x[2] - 4.0).powi(2);
        let bounds = vec![(-10.0, 10.0); 3];
        let ga =
            genetic_search(&f, &bounds, &GeneticConfig { population: 50, generations: 20, ..Default::default() }, 3)
                .unwrap();
        let c = SimplexConfig { x_tol: 1e-9, f_tol: 1e-14, ..Default::default() };
        let r = nelder_mead(&f, &ga.best, &c).unwrap();
        for (x, t) in r.x.iter().zip([0.3, -1.2, 4.0]) {
            assert!((x - t).abs() < 1e-6);
        }
    }

    fn tiny_data() -> (Vec<Scanpath>, BTreeMap<String, Map>) {
        let g = GridSpec::new(16, 1.0).unwrap();
        let pts: Vec<Fixation> =
            [(3.0, 4.0), (12.0, 5.0), (8.0, 12.0)].iter().map(|&(x, y)| Fixation::new(x, y, 0.2).unwrap()).collect();
        let sal = kde_density(&pts, 1.5, &g).unwrap();
        let truth = ModelParams {
            omega_a: 10.0,
            omega_f: 2.0,
            sigma_a_prime: 3.0,
            sigma_f_prime: 2.0,
            gamma: 1.0,
            lambda: 1.0,
            c_f: 0.3,
            zeta: 0.05,
        };
        let d = vec![0.25; 15];
        let paths = (0..20)
            .map(|t| {
                let mut p =
                    simulate_scanpath(&sal, &truth, &ModelVariant::no_inhibition(), 15, &d, t, &StartRule::Center)
                        .unwrap();
                p.image = "a".into();
                p.trial = t as u32;
                p
            })
            .collect();
        let mut sals = BTreeMap::new();
        sals.insert("a".to_string(), sal);
        (paths, sals)
    }

    #[test]
    fn fit_runs_and_reports() {
        let (paths, sals) = tiny_data();
        let variant = ModelVariant::no_inhibition().with_lambda(1.0);
        let config = FitConfig {
            genetic: GeneticConfig { population: 16, generations: 4, ..Default::default() },
            restarts: 1,
            ..Default::default()
        };
        let fit = mle_fit(&paths, &sals, &variant, &config).unwrap();
        assert_eq!(fit.log_theta.len(), 3);
        assert!(fit.loglik_at_max >= fit.genetic_best);
        assert!(fit.all_local_maxima.iter().all(|m| m.loglik <= fit.loglik_at_max));
        assert!(fit.theta_hat.to_array().iter().all(|v| *v > 0.0));
        let again = mle_fit(&paths, &sals, &variant, &config).unwrap();
        assert_eq!(fit.log_theta, again.log_theta);
        let mut json = Vec::new();
        fit.write_json(&mut json).unwrap();
        assert!(String::from_utf8(json).unwrap().contains("none-lambda1"));
    }

    #[test]
    fn empty_data_is_rejected() {
        let (_, sals) = tiny_data();
        assert!(matches!(
            mle_fit(&[], &sals, &ModelVariant::subtractive(), &FitConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }
}
