//! Fixation datasets: CSV ingestion and export, and synthetic data
//! generated by the model itself.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Fixation, GridSpec, Map};
use crate::likelihood::{simulate_scanpath, Scanpath, StartRule};
use crate::params::{ModelParams, ModelVariant, ModelVariantName};

/// Scanpaths plus image metadata.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    /// Sorted by (subject, image, trial).
    pub trials: Vec<Scanpath>,
    /// Condition label per image (empty when unlabeled).
    pub conditions: BTreeMap<String, String>,
    /// Generating saliency maps of synthetic data.
    pub saliency: BTreeMap<String, Map>,
    /// Generating parameters per subject of synthetic data.
    pub subject_params: BTreeMap<String, ModelParams>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    subject: String,
    image: String,
    trial: u32,
    fix_index: usize,
    x_deg: f64,
    y_deg: f64,
    duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    condition: Option<String>,
}

impl Dataset {
    pub fn subjects(&self) -> Vec<String> {
        self.trials.iter().map(|t| t.subject.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn images(&self) -> Vec<String> {
        self.trials.iter().map(|t| t.image.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn n_fixations(&self) -> usize {
        self.trials.iter().map(Scanpath::len).sum()
    }

    /// Fixations that are scored when the first one is conditioned on.
    pub fn n_scored(&self) -> usize {
        self.trials.iter().map(|t| t.len() - 1).sum()
    }

    pub fn condition_of(&self, image: &str) -> Option<&str> {
        self.conditions.get(image).map(String::as_str)
    }

    pub fn select(&self, mut keep: impl FnMut(&Scanpath) -> bool) -> Vec<Scanpath> {
        self.trials.iter().filter(|t| keep(t)).cloned().collect()
    }

    pub fn by_subject(&self) -> BTreeMap<String, Vec<Scanpath>> {
        let mut out: BTreeMap<String, Vec<Scanpath>> = BTreeMap::new();
        for t in &self.trials {
            out.entry(t.subject.clone()).or_default().push(t.clone());
        }
        out
    }

    /// All fixation durations, in data order.
    pub fn durations(&self) -> Vec<f64> {
        self.trials.iter().flat_map(|t| t.fixations.iter().map(|f| f.duration)).collect()
    }

    /// Checks non-emptiness, ordering and registry consistency.
    pub fn validate(&self) -> Result<()> {
        if self.trials.is_empty() {
            return Err(Error::InsufficientData("dataset has no trials".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &self.trials {
            if t.fixations.is_empty() {
                return Err(Error::Integrity(format!("trial {}/{}/{} is empty", t.subject, t.image, t.trial)));
            }
            if !seen.insert((&t.subject, &t.image, t.trial)) {
                return Err(Error::Integrity(format!("trial {}/{}/{} appears twice", t.subject, t.image, t.trial)));
            }
            if !self.conditions.is_empty() && !self.conditions.contains_key(&t.image) {
                return Err(Error::Integrity(format!("image `{}` has no condition label", t.image)));
            }
        }
        Ok(())
    }

    /// Reads the fixation CSV. Rows may come in any order; an optional
    /// `condition` column labels images.
    pub fn from_csv<R: Read>(r: R) -> Result<Dataset> {
        let mut reader = csv::Reader::from_reader(r);
        let mut groups: BTreeMap<(String, String, u32), Vec<(usize, Fixation)>> = BTreeMap::new();
        let mut conditions: BTreeMap<String, String> = BTreeMap::new();
        let headers = reader.headers()?.clone();
        let mut record = csv::StringRecord::new();
        loop {
            let more = reader.read_record(&mut record).map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                Error::Parse { line, message: e.to_string() }
            })?;
            if !more {
                break;
            }
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let row: Row =
                record.deserialize(Some(&headers)).map_err(|e| Error::Parse { line, message: e.to_string() })?;
            let fix = Fixation::new(row.x_deg, row.y_deg, row.duration_s)
                .map_err(|e| Error::Parse { line, message: e.to_string() })?;
            if let Some(c) = row.condition {
                match conditions.get(&row.image) {
                    Some(prev) if *prev != c => {
                        return Err(Error::Integrity(format!(
                            "line {line}: image `{}` labeled both `{prev}` and `{c}`",
                            row.image
                        )))
                    }
                    _ => {
                        conditions.insert(row.image.clone(), c);
                    }
                }
            }
            let key = (row.subject, row.image, row.trial);
            let group = groups.entry(key.clone()).or_default();
            if group.iter().any(|(k, _)| *k == row.fix_index) {
                return Err(Error::Integrity(format!(
                    "line {line}: duplicate fix_index {} in trial {}/{}/{}",
                    row.fix_index, key.0, key.1, key.2
                )));
            }
            group.push((row.fix_index, fix));
        }
        if groups.is_empty() {
            return Err(Error::InsufficientData("no fixation rows".into()));
        }
        let trials = groups
            .into_iter()
            .map(|((subject, image, trial), mut fixes)| {
                fixes.sort_by_key(|(k, _)| *k);
                Scanpath::new(subject, image, trial, fixes.into_iter().map(|(_, f)| f).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let ds = Dataset { trials, conditions, ..Default::default() };
        ds.validate()?;
        Ok(ds)
    }

    /// Canonical CSV: rows sorted by (subject, image, trial, fix_index),
    /// fixation indices renumbered from 0, shortest round-trip floats.
    pub fn to_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for t in &self.trials {
            for (k, f) in t.fixations.iter().enumerate() {
                out.serialize(Row {
                    subject: t.subject.clone(),
                    image: t.image.clone(),
                    trial: t.trial,
                    fix_index: k,
                    x_deg: f.x,
                    y_deg: f.y,
                    duration_s: f.duration,
                    condition: self.conditions.get(&t.image).cloned(),
                })?;
            }
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn ingest(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Dataset::from_csv(std::io::BufReader::new(file))
}

pub fn export(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    dataset.to_csv(std::io::BufWriter::new(file))
}

/// Per-subject variation of the two spans, as a Gaussian over their logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanSpread {
    pub log_sd_a: f64,
    pub log_sd_f: f64,
    pub rho: f64,
}

impl Default for SpanSpread {
    fn default() -> Self {
        // Subject-level saccade lengths spanning roughly a factor of two.
        Self { log_sd_a: 0.2, log_sd_f: 0.2, rho: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub grid_side: usize,
    pub degrees_per_cell: f64,
    pub n_subjects: usize,
    pub n_images: usize,
    pub fixations_per_trial: usize,
    pub params: ModelParams,
    pub variant: ModelVariantName,
    /// Median and log-sd of the log-normal duration distribution.
    pub duration_median: f64,
    pub duration_log_sd: f64,
    pub span_spread: Option<SpanSpread>,
    /// Images with index ≥ n_images/2 are labeled "texture", others "natural".
    pub label_conditions: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let mut params = ModelParams::reference_fit();
        params.omega_a = 20.0;
        Self {
            grid_side: 64,
            degrees_per_cell: 0.5,
            n_subjects: 10,
            n_images: 10,
            fixations_per_trial: 20,
            params,
            variant: ModelVariantName(ModelVariant::subtractive()),
            duration_median: 0.25,
            duration_log_sd: 0.4,
            span_spread: None,
            label_conditions: true,
            seed: 1,
        }
    }
}

/// Random smooth saliency: a normalized mixture of Gaussian blobs.
pub fn random_saliency<R: Rng>(grid: &GridSpec, n_blobs: usize, sigma_range: (f64, f64), rng: &mut R) -> Result<Map> {
    let extent = grid.extent();
    let blobs: Vec<(f64, f64, f64, f64)> = (0..n_blobs.max(1))
        .map(|_| {
            let margin = 0.1 * extent;
            (
                rng.gen_range(margin..extent - margin),
                rng.gen_range(margin..extent - margin),
                rng.gen_range(sigma_range.0..=sigma_range.1),
                rng.gen_range(0.5..1.5),
            )
        })
        .collect();
    Map::from_fn(*grid, |i, j| {
        let (x, y) = grid.cell_center(i, j);
        // A small floor keeps every cell strictly positive.
        1e-3 + blobs
            .iter()
            .map(|&(cx, cy, s, w)| w * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp())
            .sum::<f64>()
    })?
    .normalized()
}

/// Simulates a dataset from the model. Trial `k` (0-based over
/// subject-major order) is simulated with seed `seed ^ k`.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Dataset> {
    config.params.validate()?;
    if config.n_subjects == 0 || config.n_images == 0 || config.fixations_per_trial == 0 {
        return Err(Error::InvalidArgument("subjects, images and fixations per trial must be positive".into()));
    }
    if !(config.duration_median > 0.0 && config.duration_log_sd >= 0.0) {
        return Err(Error::InvalidArgument("invalid duration distribution".into()));
    }
    let grid = GridSpec::new(config.grid_side, config.degrees_per_cell)?;
    let variant = config.variant.0;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let extent = grid.extent();

    let mut saliency = BTreeMap::new();
    let mut conditions = BTreeMap::new();
    let width = (config.n_images - 1).to_string().len();
    for m in 0..config.n_images {
        let name = format!("img{m:0width$}");
        let texture = config.label_conditions && 2 * m >= config.n_images;
        let blobs = if texture { rng.gen_range(8..=14) } else { rng.gen_range(3..=7) };
        let sal = random_saliency(&grid, blobs, (0.04 * extent, 0.12 * extent), &mut rng)?;
        saliency.insert(name.clone(), sal);
        if config.label_conditions {
            conditions.insert(name, if texture { "texture" } else { "natural" }.to_string());
        }
    }

    let mut subject_params = BTreeMap::new();
    let width = (config.n_subjects - 1).to_string().len();
    for s in 0..config.n_subjects {
        let mut p = config.params;
        variant.apply_fixed(&mut p);
        if let Some(spread) = config.span_spread {
            let z1: f64 = rng.sample(rand_distr::StandardNormal);
            let z2: f64 = rng.sample(rand_distr::StandardNormal);
            let za = z1;
            let zf = spread.rho * z1 + (1.0 - spread.rho * spread.rho).sqrt() * z2;
            p.sigma_a_prime *= (spread.log_sd_a * za).exp();
            p.sigma_f_prime *= (spread.log_sd_f * zf).exp();
        }
        subject_params.insert(format!("s{s:0width$}"), p);
    }

    let durations = LogNormal::new(config.duration_median.ln(), config.duration_log_sd)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut trials = Vec::with_capacity(config.n_subjects * config.n_images);
    let mut trial_id = 0u32;
    for (subject, p) in &subject_params {
        for (image, sal) in &saliency {
            let mut drng = ChaCha8Rng::seed_from_u64(config.seed ^ u64::from(trial_id) ^ 0x5eed_d0a7);
            let d: Vec<f64> =
                (0..config.fixations_per_trial).map(|_| durations.sample(&mut drng).clamp(0.05, 2.0)).collect();
            let mut path = simulate_scanpath(
                sal,
                p,
                &variant,
                config.fixations_per_trial,
                &d,
                config.seed ^ u64::from(trial_id),
                &StartRule::Center,
            )?;
            path.subject = subject.clone();
            path.image = image.clone();
            path.trial = trial_id;
            trials.push(path);
            trial_id += 1;
        }
    }
    Ok(Dataset { trials, conditions, saliency, subject_params })
}
