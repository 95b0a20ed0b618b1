//! Exact sequential likelihood by forced replay of observed scanpaths,
//! scanpath simulation, and static density baselines.
//!
//! The replay initializes the maps at the first fixation, then for every
//! later fixation evolves the maps over the previous fixation's duration,
//! reads out the next-target distribution, records the probability of the
//! observed cell and forces the model onto that fixation. Probabilities are
//! per grid cell (area unit one cell), so log-likelihoods are in bits.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Stepper;
use crate::error::{Error, Result};
use crate::grid::{bin_fixation, Fixation, GridSpec, Map};
use crate::params::{Inhibition, ModelParams, ModelVariant};

/// Tolerance used when checking that an input density has unit sum.
pub const PROBABILITY_TOL: f64 = 1e-6;

/// One observed (or simulated) fixation sequence on one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scanpath {
    pub subject: String,
    pub image: String,
    pub trial: u32,
    pub fixations: Vec<Fixation>,
}

impl Scanpath {
    pub fn new(
        subject: impl Into<String>,
        image: impl Into<String>,
        trial: u32,
        fixations: Vec<Fixation>,
    ) -> Result<Self> {
        if fixations.is_empty() {
            return Err(Error::InsufficientData("a scanpath needs at least one fixation".into()));
        }
        Ok(Self { subject: subject.into(), image: image.into(), trial, fixations })
    }

    pub fn len(&self) -> usize {
        self.fixations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixations.is_empty()
    }

    /// Euclidean lengths of the saccades between consecutive fixations.
    pub fn saccade_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.fixations.windows(2).map(|w| w[0].distance(&w[1]))
    }

    fn cells(&self, grid: &GridSpec) -> Result<Vec<usize>> {
        self.fixations
            .iter()
            .enumerate()
            .map(|(k, f)| {
                bin_fixation(f.x, f.y, grid).map(|(i, j)| grid.index(i, j)).map_err(|_| Error::FixationOutOfBounds {
                    subject: self.subject.clone(),
                    image: self.image.clone(),
                    trial: self.trial,
                    fix_index: k,
                    x: f.x,
                    y: f.y,
                })
            })
            .collect()
    }
}

/// Log₂ probability of one scored fixation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredFixation {
    pub subject: String,
    pub image: String,
    pub trial: u32,
    pub fix_index: usize,
    pub log2p: f64,
}

/// Per-fixation log₂-probabilities with their total.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LikelihoodTrace {
    entries: Vec<ScoredFixation>,
    total_log2: f64,
}

impl LikelihoodTrace {
    pub fn from_entries(entries: Vec<ScoredFixation>) -> Self {
        let total_log2 = entries.iter().map(|e| e.log2p).sum();
        Self { entries, total_log2 }
    }

    pub fn entries(&self) -> &[ScoredFixation] {
        &self.entries
    }

    pub fn per_fixation_log2(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.log2p).collect()
    }

    pub fn total_log2(&self) -> f64 {
        self.total_log2
    }

    pub fn n_scored(&self) -> usize {
        self.entries.len()
    }

    /// Bits per scored fixation; zero for an empty trace.
    pub fn per_fix_avg(&self) -> f64 {
        if self.entries.is_empty() {
            0.0
        } else {
            self.total_log2 / self.entries.len() as f64
        }
    }

    /// Total log-likelihood in nats.
    pub fn total_nats(&self) -> f64 {
        self.total_log2 * std::f64::consts::LN_2
    }

    /// Concatenates traces in order.
    pub fn concat(traces: impl IntoIterator<Item = LikelihoodTrace>) -> Self {
        let mut entries = Vec::new();
        let mut total = 0.0;
        for t in traces {
            total += t.total_log2;
            entries.extend(t.entries);
        }
        Self { entries, total_log2: total }
    }

    /// CSV with header `subject,image,trial,fix_index,log2p`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for e in &self.entries {
            out.serialize(e)?;
        }
        out.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn summary(&self, model: impl Into<String>) -> TraceSummary {
        TraceSummary {
            model: model.into(),
            total_log2: self.total_log2,
            per_fix_avg: self.per_fix_avg(),
            n_scored: self.n_scored(),
            variant: None,
            params: None,
            readout: READOUT_TIMING.to_string(),
        }
    }
}

/// Describes when the target distribution is read out.
pub const READOUT_TIMING: &str = "end of fixation";

/// Summary metadata written next to exported traces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSummary {
    pub model: String,
    pub total_log2: f64,
    pub per_fix_avg: f64,
    pub n_scored: usize,
    pub variant: Option<String>,
    pub params: Option<ModelParams>,
    pub readout: String,
}

/// How the first fixation of each scanpath enters the likelihood.
#[derive(Debug, Clone, Default)]
pub enum FirstFixation {
    /// Conditioned on, not scored.
    #[default]
    Condition,
    /// Scored against the given initial distribution.
    Score(Map),
}

fn check_density(density: &Map, what: &str) -> Result<()> {
    if !density.is_probability(PROBABILITY_TOL) {
        return Err(Error::InvalidArgument(format!("{what} must be a probability map (sum {})", density.sum())));
    }
    Ok(())
}

/// Replays one scanpath and calls `record(fix_index, log2p)` for each scored fixation.
struct Replayer {
    grid: GridSpec,
    stepper: Stepper,
    attn: Vec<f64>,
    inhib: Vec<f64>,
    u: Vec<f64>,
}

impl Replayer {
    fn new(grid: GridSpec) -> Self {
        let n = grid.n_cells();
        Self { grid, stepper: Stepper::new(grid), attn: vec![0.0; n], inhib: vec![0.0; n], u: vec![0.0; n] }
    }

    fn reset(&mut self) {
        let v = 1.0 / self.grid.n_cells() as f64;
        self.attn.fill(v);
        self.inhib.fill(v);
    }

    /// Advances over `prev` and fills `self.u` with the potential. Returns Σu*.
    fn step(&mut self, prev: &Fixation, saliency: &Map, params: &ModelParams, variant: &ModelVariant) -> Result<f64> {
        let inhib = (variant.inhibition != Inhibition::None).then_some(self.inhib.as_mut_slice());
        self.stepper.evolve(&mut self.attn, inhib, prev.pos(), saliency.values(), prev.duration, params)?;
        self.stepper.potential(&self.attn, &self.inhib, params, variant, &mut self.u)?;
        Ok(crate::dynamics::positive_mass(&self.u))
    }

    fn replay(
        &mut self,
        path: &Scanpath,
        saliency: &Map,
        params: &ModelParams,
        variant: &ModelVariant,
        first: &FirstFixation,
        mut record: impl FnMut(usize, f64),
    ) -> Result<()> {
        let cells = path.cells(&self.grid)?;
        if let FirstFixation::Score(init) = first {
            record(0, init.values()[cells[0]].log2());
        }
        self.reset();
        let n = self.grid.n_cells() as f64;
        let floor = params.zeta / n;
        for k in 1..path.len() {
            let mass = self.step(&path.fixations[k - 1], saliency, params, variant)?;
            let p = if mass > 0.0 { (1.0 - params.zeta) * self.u[cells[k]].max(0.0) / mass + floor } else { 1.0 / n };
            record(k, p.log2());
        }
        Ok(())
    }
}

fn check_inputs(saliency: &Map, params: &ModelParams, first: &FirstFixation) -> Result<()> {
    params.validate()?;
    check_density(saliency, "saliency")?;
    if let FirstFixation::Score(m) = first {
        check_density(m, "initial fixation distribution")?;
        if m.grid().side() != saliency.grid().side() {
            return Err(Error::InvalidArgument("initial distribution uses a different grid".into()));
        }
    }
    Ok(())
}

/// Forced-replay likelihood of one scanpath, conditioning on the first fixation.
pub fn scanpath_loglik(
    path: &Scanpath,
    saliency: &Map,
    params: &ModelParams,
    variant: &ModelVariant,
) -> Result<LikelihoodTrace> {
    scanpath_loglik_with(path, saliency, params, variant, &FirstFixation::Condition)
}

pub fn scanpath_loglik_with(
    path: &Scanpath,
    saliency: &Map,
    params: &ModelParams,
    variant: &ModelVariant,
    first: &FirstFixation,
) -> Result<LikelihoodTrace> {
    check_inputs(saliency, params, first)?;
    let mut replayer = Replayer::new(*saliency.grid());
    trace_one(&mut replayer, path, saliency, params, variant, first)
}

fn trace_one(
    replayer: &mut Replayer,
    path: &Scanpath,
    saliency: &Map,
    params: &ModelParams,
    variant: &ModelVariant,
    first: &FirstFixation,
) -> Result<LikelihoodTrace> {
    let mut entries = Vec::with_capacity(path.len());
    replayer.replay(path, saliency, params, variant, first, |k, log2p| {
        entries.push(ScoredFixation {
            subject: path.subject.clone(),
            image: path.image.clone(),
            trial: path.trial,
            fix_index: k,
            log2p,
        })
    })?;
    Ok(LikelihoodTrace::from_entries(entries))
}

fn saliency_for<'a>(saliencies: &'a BTreeMap<String, Map>, path: &Scanpath) -> Result<&'a Map> {
    saliencies
        .get(&path.image)
        .ok_or_else(|| Error::Configuration(format!("no saliency map for image `{}`", path.image)))
}

/// Likelihood trace over many scanpaths, each scored against its image's saliency map.
pub fn dataset_loglik(
    paths: &[Scanpath],
    saliencies: &BTreeMap<String, Map>,
    params: &ModelParams,
    variant: &ModelVariant,
) -> Result<LikelihoodTrace> {
    dataset_loglik_with(paths, saliencies, params, variant, &FirstFixation::Condition)
}

pub fn dataset_loglik_with(
    paths: &[Scanpath],
    saliencies: &BTreeMap<String, Map>,
    params: &ModelParams,
    variant: &ModelVariant,
    first: &FirstFixation,
) -> Result<LikelihoodTrace> {
    let grid = prepare_dataset(paths, saliencies, params, first)?;
    let Some(grid) = grid else { return Ok(LikelihoodTrace::default()) };
    let traces = paths
        .par_iter()
        .map_init(
            || Replayer::new(grid),
            |r, path| trace_one(r, path, saliency_for(saliencies, path)?, params, variant, first),
        )
        .collect::<Result<Vec<_>>>()?;
    Ok(LikelihoodTrace::concat(traces))
}

fn prepare_dataset(
    paths: &[Scanpath],
    saliencies: &BTreeMap<String, Map>,
    params: &ModelParams,
    first: &FirstFixation,
) -> Result<Option<GridSpec>> {
    let mut grid = None;
    for path in paths {
        let sal = saliency_for(saliencies, path)?;
        if grid.is_none() {
            check_inputs(sal, params, first)?;
            grid = Some(*sal.grid());
        }
    }
    for sal in saliencies.values() {
        check_density(sal, "saliency")?;
    }
    Ok(grid)
}

/// Total log₂-likelihood and number of scored fixations, without building a trace.
pub fn dataset_total_log2(
    paths: &[Scanpath],
    saliencies: &BTreeMap<String, Map>,
    params: &ModelParams,
    variant: &ModelVariant,
) -> Result<(f64, usize)> {
    let first = FirstFixation::Condition;
    let Some(grid) = prepare_dataset(paths, saliencies, params, &first)? else { return Ok((0.0, 0)) };
    let parts = paths
        .par_iter()
        .map_init(
            || Replayer::new(grid),
            |r, path| {
                let mut total = 0.0;
                let mut n = 0usize;
                r.replay(path, saliency_for(saliencies, path)?, params, variant, &first, |_, l| {
                    total += l;
                    n += 1;
                })?;
                Ok((total, n))
            },
        )
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().fold((0.0, 0), |(t, n), (a, b)| (t + a, n + b)))
}

/// How the first fixation of a simulated scanpath is placed.
#[derive(Debug, Clone, Default)]
pub enum StartRule {
    /// Center of the cell containing the image center.
    #[default]
    Center,
    /// A fixed position in degrees.
    At(f64, f64),
    /// Sampled from a density over cells.
    Sample(Map),
}

/// A simulated scanpath with per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub path: Scanpath,
    /// `log₂ π` of each sampled fixation after the first.
    pub realized_log2: Vec<f64>,
    /// `Σ π log₂ π` of the distribution each fixation was drawn from.
    pub expected_log2: Vec<f64>,
}

/// Simulates a scanpath by sampling each next fixation from the model's
/// target distribution. Fixations land on cell centers; the i-th fixation
/// lasts `durations[i]` seconds.
pub fn simulate_scanpath(
    saliency: &Map,
    params: &ModelParams,
    variant: &ModelVariant,
    n_fixations: usize,
    durations: &[f64],
    seed: u64,
    start: &StartRule,
) -> Result<Scanpath> {
    simulate_detailed(saliency, params, variant, n_fixations, durations, seed, start).map(|s| s.path)
}

pub fn simulate_detailed(
    saliency: &Map,
    params: &ModelParams,
    variant: &ModelVariant,
    n_fixations: usize,
    durations: &[f64],
    seed: u64,
    start: &StartRule,
) -> Result<Simulation> {
    if n_fixations == 0 {
        return Err(Error::InvalidArgument("need at least one fixation to simulate".into()));
    }
    if durations.len() < n_fixations {
        return Err(Error::InvalidArgument(format!("need {n_fixations} durations, got {}", durations.len())));
    }
    check_inputs(saliency, params, &FirstFixation::Condition)?;
    let grid = *saliency.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center_of = |k: usize| {
        let (x, y) = grid.cell_center(k % grid.side(), k / grid.side());
        (x, y)
    };
    let (x0, y0) = match start {
        StartRule::Center => {
            let (cx, cy) = grid.center();
            let (i, j) = bin_fixation(cx, cy, &grid)?;
            grid.cell_center(i, j)
        }
        StartRule::At(x, y) => {
            bin_fixation(*x, *y, &grid)?;
            (*x, *y)
        }
        StartRule::Sample(m) => {
            check_density(m, "start distribution")?;
            center_of(sample_index(m.values(), 1.0, &mut rng))
        }
    };
    let mut fixations = Vec::with_capacity(n_fixations);
    fixations.push(Fixation::new(x0, y0, durations[0])?);
    let mut replayer = Replayer::new(grid);
    replayer.reset();
    let n = grid.n_cells() as f64;
    let floor = params.zeta / n;
    let mut pi = vec![0.0; grid.n_cells()];
    let mut realized = Vec::with_capacity(n_fixations);
    let mut expected = Vec::with_capacity(n_fixations);
    for k in 1..n_fixations {
        let mass = replayer.step(&fixations[k - 1], saliency, params, variant)?;
        if mass > 0.0 {
            let w = (1.0 - params.zeta) / mass;
            for (p, u) in pi.iter_mut().zip(&replayer.u) {
                *p = u.max(0.0) * w + floor;
            }
        } else {
            pi.fill(1.0 / n);
        }
        let total: f64 = pi.iter().sum();
        let idx = sample_index(&pi, total, &mut rng);
        realized.push(pi[idx].log2());
        expected.push(pi.iter().filter(|p| **p > 0.0).map(|p| p * p.log2()).sum());
        let (x, y) = center_of(idx);
        fixations.push(Fixation::new(x, y, durations[k])?);
    }
    let path = Scanpath::new("sim", "sim", 0, fixations)?;
    Ok(Simulation { path, realized_log2: realized, expected_log2: expected })
}

/// Inverse-CDF draw of an index with probability `weights[k] / total`.
fn sample_index<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if acc > target {
            return k;
        }
    }
    // Rounding can leave `acc` a hair below `total`; fall back to the last
    // cell with positive weight.
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
}

/// Simulates one scanpath per template: same image, length and fixation
/// durations, starting from the template's first fixation. Trial `k` uses a
/// seed derived from `seed` and `k`.
pub fn simulate_like(
    templates: &[Scanpath],
    saliencies: &BTreeMap<String, Map>,
    params: &ModelParams,
    variant: &ModelVariant,
    seed: u64,
) -> Result<Vec<Scanpath>> {
    templates
        .par_iter()
        .enumerate()
        .map(|(k, t)| {
            let sal = saliency_for(saliencies, t)?;
            let durations: Vec<f64> = t.fixations.iter().map(|f| f.duration).collect();
            let first = t.fixations[0];
            let trial_seed = seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let mut sim = simulate_scanpath(
                sal,
                params,
                variant,
                t.len(),
                &durations,
                trial_seed,
                &StartRule::At(first.x, first.y),
            )?;
            sim.subject = t.subject.clone();
            sim.image = t.image.clone();
            sim.trial = t.trial;
            Ok(sim)
        })
        .collect()
}

/// Scores every fixation after the first against a fixed density.
pub fn static_model_loglik(paths: &[Scanpath], density: &Map) -> Result<LikelihoodTrace> {
    static_loglik_impl(paths, |_| Ok(density), "static")
}

/// Like [`static_model_loglik`] with one density per image.
pub fn static_dataset_loglik(
    paths: &[Scanpath],
    densities: &BTreeMap<String, Map>,
    model: &str,
) -> Result<LikelihoodTrace> {
    static_loglik_impl(paths, |p| saliency_for(densities, p), model)
}

fn static_loglik_impl<'a>(
    paths: &[Scanpath],
    density_for: impl Fn(&Scanpath) -> Result<&'a Map>,
    model: &str,
) -> Result<LikelihoodTrace> {
    let mut entries = Vec::new();
    for path in paths {
        let density = density_for(path)?;
        check_density(density, "static density")?;
        let grid = *density.grid();
        let cells = path.cells(&grid)?;
        for (k, &c) in cells.iter().enumerate().skip(1) {
            let p = density.values()[c];
            if p <= 0.0 {
                return Err(Error::ZeroProbability {
                    model: model.to_string(),
                    i: c % grid.side(),
                    j: c / grid.side(),
                });
            }
            entries.push(ScoredFixation {
                subject: path.subject.clone(),
                image: path.image.clone(),
                trial: path.trial,
                fix_index: k,
                log2p: p.log2(),
            });
        }
    }
    Ok(LikelihoodTrace::from_entries(entries))
}

/// Log-likelihood ratio of a model against a reference, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLikRatio {
    pub bits: f64,
    pub bits_per_fix: f64,
    pub n_scored: usize,
}

impl LogLikRatio {
    /// Factor by which the data are more likely under the model.
    pub fn likelihood_ratio(&self) -> f64 {
        self.bits.exp2()
    }

    /// Geometric-mean likelihood ratio per fixation.
    pub fn per_fix_ratio(&self) -> f64 {
        self.bits_per_fix.exp2()
    }
}

pub fn loglik_ratio(model: &LikelihoodTrace, null: &LikelihoodTrace) -> Result<LogLikRatio> {
    if model.n_scored() != null.n_scored() {
        return Err(Error::Comparison(format!("traces scored {} and {} fixations", model.n_scored(), null.n_scored())));
    }
    Ok(LogLikRatio {
        bits: model.total_log2() - null.total_log2(),
        bits_per_fix: model.per_fix_avg() - null.per_fix_avg(),
        n_scored: model.n_scored(),
    })
}
