//! Command pipelines behind the command-line tool. Every command reads a
//! [`RunConfig`] and writes its artifacts under `out_dir`; each JSON artifact
//! carries the run metadata and each CSV gets a `.meta.json` sidecar.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bayes::{
    self, gibbs_hierarchical, posterior_summaries, run_chains, tune_proposal, GaussianProposal, PosteriorTarget,
};
use crate::config::{FirstFixationMode, RunConfig};
use crate::data::{self, generate_synthetic, Dataset};
use crate::error::{Error, Result};
use crate::eval::{
    self, cross_validate, kl_divergence, ks_statistic, likelihood_histogram, pair_correlation_leave_one_out,
    saccade_length_distribution, CvPlan,
};
use crate::grid::{kde_density, GridSpec, Map};
use crate::likelihood::{
    dataset_loglik, dataset_loglik_with, loglik_ratio, simulate_like, static_dataset_loglik, FirstFixation, Scanpath,
};
use crate::optimize::{mle_fit, FitResult};
use crate::params::{ModelParams, ModelVariant};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Ingest,
    Synth,
    Fit,
    Sample,
    Hier,
    Simulate,
    Eval,
    Crossval,
    Stats,
    Compare,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Ingest,
        Command::Synth,
        Command::Fit,
        Command::Sample,
        Command::Hier,
        Command::Simulate,
        Command::Eval,
        Command::Crossval,
        Command::Stats,
        Command::Compare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Synth => "synth",
            Command::Fit => "fit",
            Command::Sample => "sample",
            Command::Hier => "hier",
            Command::Simulate => "simulate",
            Command::Eval => "eval",
            Command::Crossval => "crossval",
            Command::Stats => "stats",
            Command::Compare => "compare",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Configuration(format!("unknown command `{s}`")))
    }
}

/// Embedded in every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub command: Command,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

struct Outputs {
    dir: PathBuf,
    meta: Metadata,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(command: Command, config: &RunConfig) -> Result<Self> {
        let dir = config.out_dir.clone();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let meta = Metadata {
            command,
            version: VERSION.to_string(),
            config_hash: config.hash()?,
            seed: config.seed,
            config: config.clone(),
        };
        Ok(Self { dir, meta, written: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(BufWriter::new(f))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let doc = json!({ "metadata": self.meta, "result": value });
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &doc)?;
        w.flush().map_err(|e| Error::io(self.dir.join(name), e))
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut w = self.create(name)?;
        write(&mut w)?;
        w.flush().map_err(|e| Error::io(self.dir.join(name), e))?;
        let meta = serde_json::to_value(&self.meta)?;
        self.json(&format!("{name}.meta.json"), &meta)
    }

    fn finish(self, summary: Value) -> RunReport {
        RunReport { command: self.meta.command, outputs: self.written, summary }
    }
}

/// Tidy `series,x,y` plot data.
fn write_series<W: Write>(w: &mut W, series: &[(&str, Vec<(f64, f64)>)]) -> Result<()> {
    let mut out = String::from("series,x,y\n");
    for (name, pts) in series {
        for (x, y) in pts {
            out.push_str(&format!("{name},{x},{y}\n"));
        }
    }
    w.write_all(out.as_bytes()).map_err(|e| Error::io("<series>", e))
}

pub fn run(command: Command, config: &RunConfig) -> Result<RunReport> {
    log::info!("{command}: config hash {}", config.hash()?);
    match command {
        Command::Ingest => ingest(config),
        Command::Synth => synth(config),
        Command::Fit => fit(config),
        Command::Sample => sample(config),
        Command::Hier => hier(config),
        Command::Simulate => simulate(config),
        Command::Eval => evaluate(config),
        Command::Crossval => crossval(config),
        Command::Stats => stats(config),
        Command::Compare => compare(config),
    }
}

pub fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    let path =
        config.data.path.as_ref().ok_or_else(|| Error::Configuration("no data file given (`data.path`)".into()))?;
    data::ingest(path)
}

/// Saliency maps from `data.saliency_dir`, or else the density of every
/// fixation on each image.
pub fn load_saliency(config: &RunConfig, ds: &Dataset, grid: &GridSpec) -> Result<BTreeMap<String, Map>> {
    match &config.data.saliency_dir {
        Some(dir) => ds
            .images()
            .into_iter()
            .map(|image| {
                let path = dir.join(format!("{image}.csv"));
                let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
                let m = Map::read_csv(std::io::BufReader::new(f), grid.degrees_per_cell())?;
                if m.grid() != grid {
                    return Err(Error::Configuration(format!(
                        "{} is {}x{}, the configured grid is {}x{}",
                        path.display(),
                        m.grid().side(),
                        m.grid().side(),
                        grid.side(),
                        grid.side()
                    )));
                }
                Ok((image, m.normalized()?))
            })
            .collect(),
        None => eval::cv::empirical_saliency(ds, &ds.subjects(), grid, config.kde_bandwidth, config.data.density_floor),
    }
}

fn read_fit(path: &Path) -> Result<FitResult> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut v: Value = serde_json::from_str(&text)?;
    if let Some(inner) = v.get_mut("result") {
        v = inner.take();
    }
    Ok(serde_json::from_value(v)?)
}

/// `params`, or the optimum of the fit named by `params_from`.
pub fn resolve_params(config: &RunConfig) -> Result<ModelParams> {
    let mut p = match &config.params_from {
        Some(path) => {
            let fit = read_fit(path)?;
            if fit.variant != config.variant.0.to_string() {
                log::warn!(
                    "{} holds a `{}` fit, the configured variant is `{}`",
                    path.display(),
                    fit.variant,
                    config.variant.0
                );
            }
            fit.theta_hat
        }
        None => config.params,
    };
    config.variant.0.apply_fixed(&mut p);
    p.validate()?;
    Ok(p)
}

fn first_fixation(config: &RunConfig, ds: &Dataset, grid: &GridSpec) -> Result<FirstFixation> {
    Ok(match config.first_fixation {
        FirstFixationMode::Condition => FirstFixation::Condition,
        FirstFixationMode::Uniform => FirstFixation::Score(Map::uniform(*grid)),
        FirstFixationMode::CentralBias => {
            let firsts: Vec<_> = ds.trials.iter().map(|t| t.fixations[0]).collect();
            let kde = kde_density(&firsts, config.kde_bandwidth, grid)?;
            let floor = config.data.density_floor;
            let u = 1.0 / grid.n_cells() as f64;
            FirstFixation::Score(Map::new(*grid, kde.values().iter().map(|v| (1.0 - floor) * v + floor * u).collect())?)
        }
    })
}

fn ingest(config: &RunConfig) -> Result<RunReport> {
    let ds = load_dataset(config)?;
    let mut out = Outputs::new(Command::Ingest, config)?;
    out.csv("data.csv", |w| ds.to_csv(w))?;
    let summary = json!({
        "subjects": ds.subjects().len(),
        "images": ds.images().len(),
        "trials": ds.trials.len(),
        "fixations": ds.n_fixations(),
        "scored_fixations": ds.n_scored(),
    });
    out.json("ingest.json", &summary)?;
    Ok(out.finish(summary))
}

fn synth(config: &RunConfig) -> Result<RunReport> {
    let mut sc = config.synth.clone();
    sc.grid_side = config.grid.side;
    sc.degrees_per_cell = config.grid.degrees_per_cell;
    let ds = generate_synthetic(&sc)?;
    let mut out = Outputs::new(Command::Synth, config)?;
    out.csv("data.csv", |w| ds.to_csv(w))?;
    for (image, map) in &ds.saliency {
        out.csv(&format!("saliency/{image}.csv"), |w| map.write_csv(w).map_err(|e| Error::io(image, e)))?;
    }
    let summary = json!({
        "subjects": ds.subjects().len(),
        "images": ds.images().len(),
        "fixations": ds.n_fixations(),
        "subject_params": ds.subject_params,
        "synth": sc,
    });
    out.json("synth.json", &summary)?;
    Ok(out.finish(summary))
}

fn fit(config: &RunConfig) -> Result<RunReport> {
    let grid = config.grid.spec()?;
    let ds = load_dataset(config)?;
    let sal = load_saliency(config, &ds, &grid)?;
    let res = mle_fit(&ds.trials, &sal, &config.variant.0, &config.fit)?;
    let mut out = Outputs::new(Command::Fit, config)?;
    out.json("fit.json", &res)?;
    let summary = json!({
        "variant": res.variant,
        "per_fix_at_max": res.per_fix_at_max,
        "theta_hat": res.theta_hat,
        "local_maxima": res.all_local_maxima.len(),
        "converged": res.converged,
    });
    Ok(out.finish(summary))
}

fn sample(config: &RunConfig) -> Result<RunReport> {
    let grid = config.grid.spec()?;
    let ds = load_dataset(config)?;
    let sal = load_saliency(config, &ds, &grid)?;
    let sc = &config.sampler;
    let variant = config.variant.0;
    let start = match sc.start {
        Some(p) => p,
        None => resolve_params(config)?,
    };
    let mut target = PosteriorTarget::new(&ds.trials, &sal, variant, sc.prior.clone());
    target.base = start;
    let center = variant.to_log_free(&start);
    let dim = center.len();
    let initial = GaussianProposal::diagonal(&vec![sc.initial_sd; dim])?;
    let (proposal, _, tuning) =
        tune_proposal(&target, &initial, &center, config.seed, sc.pilot_len, sc.tune_rounds, sc.target_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5a5a);
    let starts: Vec<Vec<f64>> = (0..sc.chains.max(1))
        .map(|_| {
            center
                .iter()
                .map(|c| c + sc.start_jitter * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect()
        })
        .collect();
    let chains = run_chains(&target, &proposal, sc.draws, &starts, config.seed.wrapping_add(1))?;
    let summary = posterior_summaries(&chains, sc.burn_in)?;

    let mut out = Outputs::new(Command::Sample, config)?;
    let chain_dir = out.dir.join("chains");
    std::fs::create_dir_all(&chain_dir).map_err(|e| Error::io(&chain_dir, e))?;
    for (k, c) in chains.iter().enumerate() {
        c.save(&chain_dir, &format!("chain{k}"))?;
        out.written.push(chain_dir.join(format!("chain{k}.json")));
    }
    let reference: Vec<f64> = variant.free_params().into_iter().map(|id| start.get(id)).collect();
    out.csv("posterior.csv", |w| summary.write_csv(w, Some(&reference)))?;
    let marginals: Vec<(String, Vec<(f64, f64)>)> = summary
        .params
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let draws: Vec<f64> = chains.iter().flat_map(|c| c.after(sc.burn_in).column(k)).map(f64::exp).collect();
            let lo = draws.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = draws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let hi = if hi > lo { hi } else { lo + lo.abs().max(1.0) * 1e-9 };
            let (centers, counts) = bayes::histogram_1d(&draws, lo, hi, 40)?;
            Ok((p.name.clone(), centers.into_iter().zip(counts.into_iter().map(|c| c as f64)).collect()))
        })
        .collect::<Result<_>>()?;
    let series: Vec<(&str, Vec<(f64, f64)>)> = marginals.iter().map(|(n, v)| (n.as_str(), v.clone())).collect();
    out.csv("marginals.csv", |w| write_series(w, &series))?;
    let result = json!({
        "summary": summary,
        "tuning": tuning,
        "acceptance": chains.iter().map(|c| c.acceptance_rate).collect::<Vec<_>>(),
    });
    out.json("sample.json", &result)?;
    Ok(out.finish(json!({
        "multivariate_rhat": summary.multivariate_rhat,
        "acceptance": chains.iter().map(|c| c.acceptance_rate).collect::<Vec<_>>(),
    })))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per subject: observed mean saccade length and the mean saccade length of
/// scanpaths simulated with the given spans on the same trials.
pub fn predicted_saccade_lengths(
    data: &BTreeMap<String, Vec<Scanpath>>,
    saliencies: &BTreeMap<String, Map>,
    shared: &ModelParams,
    variant: &ModelVariant,
    spans: &BTreeMap<String, (f64, f64)>,
    repeats: usize,
    seed: u64,
) -> Result<BTreeMap<String, (f64, f64)>> {
    let mut out = BTreeMap::new();
    for (k, (subject, &(sa, sf))) in spans.iter().enumerate() {
        let paths = data.get(subject).ok_or_else(|| Error::Configuration(format!("no data for subject {subject}")))?;
        let mut p = *shared;
        p.sigma_a_prime = sa;
        p.sigma_f_prime = sf;
        let observed: Vec<f64> = paths.iter().flat_map(|t| t.saccade_lengths()).collect();
        let mut simulated = Vec::new();
        for r in 0..repeats.max(1) {
            let s = seed ^ ((k as u64) << 32) ^ r as u64;
            for t in simulate_like(paths, saliencies, &p, variant, s)? {
                simulated.extend(t.saccade_lengths());
            }
        }
        out.insert(subject.clone(), (mean(&observed), mean(&simulated)));
    }
    Ok(out)
}

fn hier(config: &RunConfig) -> Result<RunReport> {
    let grid = config.grid.spec()?;
    let ds = load_dataset(config)?;
    let sal = load_saliency(config, &ds, &grid)?;
    let mut spec = config.hier.spec.clone();
    spec.shared = resolve_params(config)?;
    spec.variant = config.variant;
    let by_subject = ds.by_subject();
    let chain = gibbs_hierarchical(&spec, &by_subject, &sal, config.hier.sweeps, config.seed)?;
    let spans = chain.posterior_mean_spans(config.hier.burn_in)?;
    let lengths = predicted_saccade_lengths(
        &by_subject,
        &sal,
        &spec.shared,
        &spec.variant.0,
        &spans,
        config.simulate.repeats,
        config.seed,
    )?;

    let mut out = Outputs::new(Command::Hier, config)?;
    out.csv("subjects.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record([
            "subject",
            "sigma_a_prime",
            "sigma_f_prime",
            "observed_mean_saccade",
            "predicted_mean_saccade",
        ])?;
        for (s, (sa, sf)) in &spans {
            let (o, p) = lengths[s];
            c.write_record([s.clone(), sa.to_string(), sf.to_string(), o.to_string(), p.to_string()])?;
        }
        c.flush().map_err(|e| Error::io("subjects.csv", e))
    })?;
    out.json("hier.json", &chain)?;
    let kept = &chain.hyper_draws[config.hier.burn_in.min(chain.hyper_draws.len())..];
    let hyper_mean = |f: fn(&bayes::Hyper) -> f64| mean(&kept.iter().map(f).collect::<Vec<_>>());
    Ok(out.finish(json!({
        "subjects": chain.subjects.len(),
        // The population Gaussian and mu/rho below are over ln σ′.
        "population_scale": "log_spans",
        "excluded": chain.excluded,
        "hyper_acceptance": chain.hyper_acceptance,
        "mu_a": hyper_mean(|h| h.mu_a),
        "mu_f": hyper_mean(|h| h.mu_f),
        "rho": hyper_mean(|h| h.rho),
    })))
}

fn simulate(config: &RunConfig) -> Result<RunReport> {
    let grid = config.grid.spec()?;
    let ds = load_dataset(config)?;
    let sal = load_saliency(config, &ds, &grid)?;
    let params = resolve_params(config)?;
    let mut trials = Vec::new();
    for r in 0..config.simulate.repeats.max(1) {
        let mut sims = simulate_like(&ds.trials, &sal, &params, &config.variant.0, config.seed.wrapping_add(r as u64))?;
        for s in &mut sims {
            s.trial = s.trial * config.simulate.repeats.max(1) as u32 + r as u32;
        }
        trials.extend(sims);
    }
    let sim = Dataset { trials, conditions: ds.conditions.clone(), ..Default::default() };
    let mut out = Outputs::new(Command::Simulate, config)?;
    out.csv("simulated.csv", |w| sim.to_csv(w))?;
    Ok(out.finish(json!({ "trials": sim.trials.len(), "fixations": sim.n_fixations() })))
}

fn evaluate(config: &RunConfig) -> Result<RunReport> {
    let grid = config.grid.spec()?;
    let ds = load_dataset(config)?;
    let sal = load_saliency(config, &ds, &grid)?;
    let params = resolve_params(config)?;
    let first = first_fixation(config, &ds, &grid)?;
    let model = dataset_loglik_with(&ds.trials, &sal, &params, &config.variant.0, &first)?;
    let uniform: BTreeMap<String, Map> = ds.images().into_iter().map(|i| (i, Map::uniform(grid))).collect();
    let uni = static_dataset_loglik(&ds.trials, &uniform, "uniform")?;
    let emp = static_dataset_loglik(&ds.trials, &sal, "saliency")?;
    let mut out = Outputs::new(Command::Eval, config)?;
    out.csv("trace.csv", |w| model.write_csv(w))?;
    let vs_uniform = if matches!(first, FirstFixation::Condition) { Some(loglik_ratio(&model, &uni)?) } else { None };
    let result = json!({
        "model": model.summary(config.variant.0.to_string()),
        "uniform": uni.summary("uniform"),
        "saliency": emp.summary("saliency"),
        "gain_over_uniform": vs_uniform,
        "first_fixation": config.first_fixation,
    });
    out.json("eval.json", &result)?;
    Ok(out.finish(json!({
        "model_bits_per_fix": model.per_fix_avg(),
        "uniform_bits_per_fix": uni.per_fix_avg(),
        "saliency_bits_per_fix": emp.per_fix_avg(),
    })))
}

fn crossval(config: &RunConfig) -> Result<RunReport> {
    let grid = config.grid.spec()?;
    let ds = load_dataset(config)?;
    let plan = CvPlan::for_dataset(&ds, config.crossval.folds, config.seed)?;
    let variants: Vec<ModelVariant> = config.crossval.variants.iter().map(|v| v.0).collect();
    let cache = config.out_dir.join("cv_cache");
    let table = cross_validate(&ds, &variants, &plan, &config.crossval.cv, &grid, Some(&cache))?;
    for (fold, a, b, d) in table.nesting_violations(1e-6) {
        log::warn!("fold {fold}: {a} trails the nested {b} by {d:.5} bits/fix on training data");
    }
    let mut out = Outputs::new(Command::Crossval, config)?;
    out.csv("crossval.csv", |w| table.write_csv(w))?;
    out.csv("crossval_summary.csv", |w| table.write_summary_csv(w))?;
    out.json("crossval.json", &json!({ "plan": plan, "table": table }))?;
    Ok(out.finish(serde_json::to_value(table.summaries())?))
}

fn floored_kde(paths: &[Scanpath], grid: &GridSpec, config: &RunConfig) -> Result<BTreeMap<String, Map>> {
    let mut by_image: BTreeMap<&str, Vec<&Scanpath>> = BTreeMap::new();
    for p in paths {
        by_image.entry(&p.image).or_default().push(p);
    }
    let floor = config.data.density_floor;
    let u = 1.0 / grid.n_cells() as f64;
    by_image
        .into_iter()
        .map(|(image, ps)| {
            let kde = kde_density(ps.iter().flat_map(|p| &p.fixations), config.kde_bandwidth, grid)?;
            let m = Map::new(*grid, kde.values().iter().map(|v| (1.0 - floor) * v + floor * u).collect())?;
            Ok((image.to_string(), m))
        })
        .collect()
}

/// Scanpaths of independent draws from each image's saliency, matching the
/// templates' lengths.
pub fn independent_draws(
    templates: &[Scanpath],
    saliencies: &BTreeMap<String, Map>,
    seed: u64,
) -> Result<Vec<Scanpath>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    templates
        .iter()
        .map(|t| {
            let sal = saliencies
                .get(&t.image)
                .ok_or_else(|| Error::Configuration(format!("no saliency for image {}", t.image)))?;
            let grid = sal.grid();
            let total = sal.sum();
            let fixations = t
                .fixations
                .iter()
                .map(|f| {
                    let u = rng.gen::<f64>() * total;
                    let mut acc = 0.0;
                    let k = sal
                        .values()
                        .iter()
                        .position(|v| {
                            acc += v;
                            acc > u
                        })
                        .unwrap_or(grid.n_cells() - 1);
                    let (x, y) = grid.cell_center(k % grid.side(), k / grid.side());
                    crate::grid::Fixation::new(x, y, f.duration)
                })
                .collect::<Result<Vec<_>>>()?;
            Scanpath::new(t.subject.clone(), t.image.clone(), t.trial, fixations)
        })
        .collect()
}

fn stats(config: &RunConfig) -> Result<RunReport> {
    let grid = config.grid.spec()?;
    let st = &config.stats;
    let ds = load_dataset(config)?;
    let sal = load_saliency(config, &ds, &grid)?;
    let params = resolve_params(config)?;
    let variant = config.variant.0;
    let sim = simulate_like(&ds.trials, &sal, &params, &variant, config.seed)?;
    let iid = independent_draws(&ds.trials, &sal, config.seed ^ 0x11d)?;

    let h_obs = saccade_length_distribution(&ds.trials, st.saccade_bin_width)?;
    let h_sim = saccade_length_distribution(&sim, st.saccade_bin_width)?;
    let h_iid = saccade_length_distribution(&iid, st.saccade_bin_width)?;
    let zip = |h: &eval::SaccadeHistogram| h.centers.iter().copied().zip(h.density.iter().copied()).collect::<Vec<_>>();
    let mut out = Outputs::new(Command::Stats, config)?;
    out.csv("saccade_lengths.csv", |w| {
        write_series(w, &[("observed", zip(&h_obs)), ("simulated", zip(&h_sim)), ("independent", zip(&h_iid))])
    })?;

    let d_obs = floored_kde(&ds.trials, &grid, config)?;
    let d_sim = floored_kde(&sim, &grid, config)?;
    let pcf = |paths: &[Scanpath]| {
        pair_correlation_leave_one_out(
            paths,
            &grid,
            config.kde_bandwidth,
            config.data.density_floor,
            &st.pcf_radii,
            st.pcf_bandwidth,
        )
    };
    let pcf_obs = pcf(&ds.trials)?;
    let pcf_sim = pcf(&sim)?;
    let pts = |v: &[eval::PcfPoint]| v.iter().map(|p| (p.r, p.g)).collect::<Vec<_>>();
    out.csv("pcf.csv", |w| write_series(w, &[("observed", pts(&pcf_obs)), ("simulated", pts(&pcf_sim))]))?;

    let mut kl = BTreeMap::new();
    for (image, p) in &d_obs {
        if let Some(q) = d_sim.get(image) {
            kl.insert(image.clone(), kl_divergence(p, q)?);
        }
    }
    out.csv("kl.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["image", "kl_nats", "kl_bits"])?;
        for (image, k) in &kl {
            c.write_record([image.clone(), k.nats.to_string(), k.bits.to_string()])?;
        }
        c.flush().map_err(|e| Error::io("kl.csv", e))
    })?;

    let t_obs = dataset_loglik(&ds.trials, &sal, &params, &variant)?;
    let t_sim = dataset_loglik(&sim, &sal, &params, &variant)?;
    let lh_obs = likelihood_histogram(&t_obs, st.histogram_bins)?;
    let lh_sim = likelihood_histogram(&t_sim, st.histogram_bins)?;
    let hist = |h: &eval::LikelihoodHistogram| {
        h.centers.iter().copied().zip(h.counts.iter().map(|c| *c as f64)).collect::<Vec<_>>()
    };
    out.csv("likelihood_histogram.csv", |w| {
        write_series(w, &[("observed", hist(&lh_obs)), ("simulated", hist(&lh_sim))])
    })?;

    let kl_vals: Vec<f64> = kl.values().map(|k| k.nats).collect();
    let result = json!({
        "mean_kl_nats": mean(&kl_vals),
        "ks_observed_simulated": ks_statistic(&h_obs.lengths, &h_sim.lengths)?,
        "ks_observed_independent": ks_statistic(&h_obs.lengths, &h_iid.lengths)?,
        "mean_saccade": { "observed": h_obs.mean(), "simulated": h_sim.mean(), "independent": h_iid.mean() },
        "bits_per_fix": { "observed": t_obs.per_fix_avg(), "simulated": t_sim.per_fix_avg() },
        "pcf_observed": pcf_obs,
        "pcf_simulated": pcf_sim,
    });
    out.json("stats.json", &result)?;
    Ok(out.finish(result))
}

#[derive(Debug, Clone, Serialize)]
struct CompareRow {
    variant: String,
    dim: usize,
    n_scored: usize,
    loglik_bits: f64,
    bits_per_fix: f64,
    aic: f64,
    bic: f64,
    aic_penalty_bits_per_fix: f64,
    bic_penalty_bits_per_fix: f64,
}

fn compare(config: &RunConfig) -> Result<RunReport> {
    let fits: Vec<FitResult> = if config.compare.fits.is_empty() {
        let grid = config.grid.spec()?;
        let ds = load_dataset(config)?;
        let sal = load_saliency(config, &ds, &grid)?;
        config.compare.variants.iter().map(|v| mle_fit(&ds.trials, &sal, &v.0, &config.fit)).collect::<Result<_>>()?
    } else {
        config.compare.fits.iter().map(|p| read_fit(p)).collect::<Result<_>>()?
    };
    let rows: Vec<CompareRow> = fits
        .iter()
        .map(|f| {
            let nats = f.loglik_at_max * std::f64::consts::LN_2;
            let dim = f.free_params.len();
            Ok(CompareRow {
                variant: f.variant.clone(),
                dim,
                n_scored: f.n_scored,
                loglik_bits: f.loglik_at_max,
                bits_per_fix: f.per_fix_at_max,
                aic: eval::aic(nats, dim),
                bic: eval::bic(nats, dim, f.n_scored)?,
                aic_penalty_bits_per_fix: eval::penalty_bits_per_fix(eval::aic_penalty(dim), f.n_scored),
                bic_penalty_bits_per_fix: eval::penalty_bits_per_fix(eval::bic_penalty(dim, f.n_scored), f.n_scored),
            })
        })
        .collect::<Result<_>>()?;
    let mut out = Outputs::new(Command::Compare, config)?;
    out.csv("compare.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        for r in &rows {
            c.serialize(r)?;
        }
        c.flush().map_err(|e| Error::io("compare.csv", e))
    })?;
    out.json("compare.json", &json!({ "rows": rows, "fits": fits }))?;
    Ok(out.finish(serde_json::to_value(&rows)?))
}
