//! Cross-validation across subjects and images.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grid::{kde_density, GridSpec, Map, DEFAULT_KDE_BANDWIDTH};
use crate::likelihood::{dataset_loglik, static_dataset_loglik, LikelihoodTrace, Scanpath};
use crate::optimize::{mle_fit, FitConfig};
use crate::params::{ModelParams, ModelVariant};

pub const UNIFORM: &str = "uniform";
pub const CENTRAL_BIAS: &str = "central_bias";
pub const EMPIRICAL_SALIENCY: &str = "empirical_saliency";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub train_subjects: Vec<String>,
    pub test_subjects: Vec<String>,
    pub train_images: Vec<String>,
    pub test_images: Vec<String>,
}

impl Fold {
    /// Training subjects on training images.
    pub fn train_paths(&self, ds: &Dataset) -> Vec<Scanpath> {
        let s: BTreeSet<&str> = self.train_subjects.iter().map(String::as_str).collect();
        let i: BTreeSet<&str> = self.train_images.iter().map(String::as_str).collect();
        ds.select(|p| s.contains(p.subject.as_str()) && i.contains(p.image.as_str()))
    }

    /// Test subjects on test images.
    pub fn test_paths(&self, ds: &Dataset) -> Vec<Scanpath> {
        let s: BTreeSet<&str> = self.test_subjects.iter().map(String::as_str).collect();
        let i: BTreeSet<&str> = self.test_images.iter().map(String::as_str).collect();
        ds.select(|p| s.contains(p.subject.as_str()) && i.contains(p.image.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlan {
    pub n_folds: usize,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

impl CvPlan {
    pub fn for_dataset(ds: &Dataset, n_folds: usize, seed: u64) -> Result<Self> {
        let images: Vec<(String, String)> = ds
            .images()
            .into_iter()
            .map(|i| {
                let c = ds.condition_of(&i).unwrap_or("").to_string();
                (i, c)
            })
            .collect();
        cv_split(&ds.subjects(), &images, n_folds, seed)
    }
}

fn round_robin(items: &[String], n_folds: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    let mut shuffled = items.to_vec();
    shuffled.shuffle(rng);
    let mut out = vec![Vec::new(); n_folds];
    for (k, it) in shuffled.into_iter().enumerate() {
        out[k % n_folds].push(it);
    }
    for f in &mut out {
        f.sort();
    }
    out
}

/// Splits subjects, and images within each condition, into `n_folds`
/// disjoint test groups. `images` pairs each image with its condition label.
pub fn cv_split(subjects: &[String], images: &[(String, String)], n_folds: usize, seed: u64) -> Result<CvPlan> {
    if n_folds < 2 {
        return Err(Error::Configuration(format!("cross-validation needs at least 2 folds, got {n_folds}")));
    }
    let subjects: BTreeSet<&String> = subjects.iter().collect();
    if subjects.len() < n_folds {
        return Err(Error::Configuration(format!("{} subjects cannot fill {n_folds} folds", subjects.len())));
    }
    let mut by_condition: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (img, cond) in images {
        by_condition.entry(cond.as_str()).or_default().push(img.clone());
    }
    for (cond, imgs) in &mut by_condition {
        imgs.sort();
        imgs.dedup();
        if imgs.len() < n_folds {
            return Err(Error::Configuration(format!(
                "condition `{cond}` has {} images, fewer than {n_folds} folds",
                imgs.len()
            )));
        }
    }
    if by_condition.is_empty() {
        return Err(Error::Configuration("no images to split".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all_subjects: Vec<String> = subjects.into_iter().cloned().collect();
    let subject_groups = round_robin(&all_subjects, n_folds, &mut rng);
    let mut image_groups = vec![Vec::new(); n_folds];
    for imgs in by_condition.values() {
        for (k, g) in round_robin(imgs, n_folds, &mut rng).into_iter().enumerate() {
            image_groups[k].extend(g);
        }
    }
    let all_images: BTreeSet<String> = by_condition.into_values().flatten().collect();
    let folds = (0..n_folds)
        .map(|k| {
            let test_subjects = subject_groups[k].clone();
            let mut test_images = image_groups[k].clone();
            test_images.sort();
            Fold {
                index: k,
                train_subjects: all_subjects.iter().filter(|s| !test_subjects.contains(s)).cloned().collect(),
                train_images: all_images.iter().filter(|i| !test_images.contains(i)).cloned().collect(),
                test_subjects,
                test_images,
            }
        })
        .collect();
    Ok(CvPlan { n_folds, seed, folds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub fit: FitConfig,
    /// Gaussian kernel bandwidth of the empirical densities, degrees.
    pub kde_bandwidth: f64,
    /// Weight of a uniform component mixed into every empirical density so
    /// that no cell has zero probability.
    pub density_floor: f64,
    pub baselines: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { fit: FitConfig::default(), kde_bandwidth: DEFAULT_KDE_BANDWIDTH, density_floor: 1e-3, baselines: true }
    }
}

/// One model on one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub model: String,
    pub fold: usize,
    pub train_bits_per_fix: Option<f64>,
    pub test_bits_per_fix: Option<f64>,
    /// Test bits/fix per image condition.
    pub test_by_condition: BTreeMap<String, f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub theta: Option<ModelParams>,
    pub local_maxima: usize,
    pub error: Option<String>,
    #[serde(default)]
    pub from_cache: bool,
}

impl CvCell {
    fn failed(model: &str, fold: usize, e: &Error) -> Self {
        log::warn!("{model}, fold {fold}: {e}");
        CvCell {
            model: model.to_string(),
            fold,
            train_bits_per_fix: None,
            test_bits_per_fix: None,
            test_by_condition: BTreeMap::new(),
            n_train: 0,
            n_test: 0,
            theta: None,
            local_maxima: 0,
            error: Some(e.to_string()),
            from_cache: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub mean_train: f64,
    pub mean_test: f64,
    /// Spread of test scores across folds.
    pub sd_test: f64,
    pub folds_ok: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub n_folds: usize,
    pub models: Vec<String>,
    pub cells: Vec<CvCell>,
    pub config_hash: String,
}

impl ComparisonTable {
    pub fn cell(&self, model: &str, fold: usize) -> Option<&CvCell> {
        self.cells.iter().find(|c| c.model == model && c.fold == fold)
    }

    pub fn summaries(&self) -> Vec<ModelSummary> {
        self.models
            .iter()
            .map(|m| {
                let ok: Vec<&CvCell> = self.cells.iter().filter(|c| &c.model == m && c.error.is_none()).collect();
                let train: Vec<f64> = ok.iter().filter_map(|c| c.train_bits_per_fix).collect();
                let test: Vec<f64> = ok.iter().filter_map(|c| c.test_bits_per_fix).collect();
                let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
                let mt = mean(&test);
                let sd = if test.len() > 1 {
                    (test.iter().map(|x| (x - mt).powi(2)).sum::<f64>() / (test.len() - 1) as f64).sqrt()
                } else {
                    f64::NAN
                };
                ModelSummary {
                    model: m.clone(),
                    mean_train: mean(&train),
                    mean_test: mt,
                    sd_test: sd,
                    folds_ok: ok.len(),
                }
            })
            .collect()
    }

    pub fn mean_test(&self, model: &str) -> Option<f64> {
        self.summaries().into_iter().find(|s| s.model == model).map(|s| s.mean_test).filter(|v| v.is_finite())
    }

    /// Folds where a variant scored worse on its own training data than a
    /// variant it nests, by more than `tol` bits/fix. A non-empty result
    /// means an optimizer missed the maximum.
    pub fn nesting_violations(&self, tol: f64) -> Vec<(usize, String, String, f64)> {
        let variants: Vec<(String, ModelVariant)> =
            self.models.iter().filter_map(|m| m.parse::<ModelVariant>().ok().map(|v| (m.clone(), v))).collect();
        let mut out = Vec::new();
        for fold in 0..self.n_folds {
            for (na, a) in &variants {
                for (nb, b) in &variants {
                    if na == nb || !a.nests(b) {
                        continue;
                    }
                    let ta = self.cell(na, fold).and_then(|c| c.train_bits_per_fix);
                    let tb = self.cell(nb, fold).and_then(|c| c.train_bits_per_fix);
                    if let (Some(ta), Some(tb)) = (ta, tb) {
                        if ta < tb - tol {
                            out.push((fold, na.clone(), nb.clone(), tb - ta));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["model", "fold", "train_bits_per_fix", "test_bits_per_fix", "n_train", "n_test", "error"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            out.write_record([
                c.model.clone(),
                c.fold.to_string(),
                opt(c.train_bits_per_fix),
                opt(c.test_bits_per_fix),
                c.n_train.to_string(),
                c.n_test.to_string(),
                c.error.clone().unwrap_or_default(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<comparison table>", e))
    }

    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for s in self.summaries() {
            out.serialize(s)?;
        }
        out.flush().map_err(|e| Error::io("<comparison summary>", e))
    }
}

fn floored(m: Map, floor: f64) -> Result<Map> {
    let u = 1.0 / m.grid().n_cells() as f64;
    let v = m.values().iter().map(|p| (1.0 - floor) * p + floor * u).collect();
    Map::new(*m.grid(), v)
}

/// Per-image densities from the given subjects' fixations, over all images.
pub fn empirical_saliency(
    ds: &Dataset,
    subjects: &[String],
    grid: &GridSpec,
    bandwidth: f64,
    floor: f64,
) -> Result<BTreeMap<String, Map>> {
    let subjects: BTreeSet<&str> = subjects.iter().map(String::as_str).collect();
    let mut out = BTreeMap::new();
    for image in ds.images() {
        let paths = ds.select(|p| p.image == image && subjects.contains(p.subject.as_str()));
        let kde = kde_density(paths.iter().flat_map(|p| &p.fixations), bandwidth, grid)
            .map_err(|e| Error::InsufficientData(format!("image {image}: {e}")))?;
        out.insert(image, floored(kde, floor)?);
    }
    Ok(out)
}

/// Image-independent density of the given scanpaths.
pub fn central_bias(paths: &[Scanpath], grid: &GridSpec, bandwidth: f64, floor: f64) -> Result<Map> {
    floored(kde_density(paths.iter().flat_map(|p| &p.fixations), bandwidth, grid)?, floor)
}

fn by_condition(ds: &Dataset, trace: &LikelihoodTrace) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for e in trace.entries() {
        let c = ds.condition_of(&e.image).unwrap_or("").to_string();
        let slot = acc.entry(c).or_insert((0.0, 0));
        slot.0 += e.log2p;
        slot.1 += 1;
    }
    acc.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect()
}

fn dataset_fingerprint(ds: &Dataset) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    ds.to_csv(&mut buf)?;
    Ok(Sha256::digest(&buf).to_vec())
}

/// Hash identifying a cross-validation run: data, plan and configuration.
pub fn cv_hash(ds: &Dataset, plan: &CvPlan, config: &CvConfig) -> Result<String> {
    let mut h = Sha256::new();
    h.update(dataset_fingerprint(ds)?);
    h.update(serde_json::to_vec(plan)?);
    h.update(serde_json::to_vec(config)?);
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Fits every variant on each fold's training set and scores training and
/// test sets. Baselines are the uniform density, the central bias and the
/// empirical saliency of the training subjects. Dynamic variants use the
/// training subjects' empirical saliency as input. Per-cell failures are
/// recorded, not returned. With a cache directory, finished dynamic cells
/// are stored and reused on reruns with the same data, plan and config.
pub fn cross_validate(
    ds: &Dataset,
    variants: &[ModelVariant],
    plan: &CvPlan,
    config: &CvConfig,
    grid: &GridSpec,
    cache_dir: Option<&Path>,
) -> Result<ComparisonTable> {
    let hash = cv_hash(ds, plan, config)?;
    if let Some(dir) = cache_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut models: Vec<String> = Vec::new();
    if config.baselines {
        models.extend([UNIFORM, CENTRAL_BIAS, EMPIRICAL_SALIENCY].map(String::from));
    }
    models.extend(variants.iter().map(|v| v.to_string()));

    let mut cells = Vec::new();
    for fold in &plan.folds {
        let train = fold.train_paths(ds);
        let test = fold.test_paths(ds);
        if train.is_empty() || test.is_empty() {
            let e = Error::InsufficientData(format!("fold {} has an empty training or test set", fold.index));
            cells.extend(models.iter().map(|m| CvCell::failed(m, fold.index, &e)));
            continue;
        }
        let sal = match empirical_saliency(ds, &fold.train_subjects, grid, config.kde_bandwidth, config.density_floor) {
            Ok(s) => s,
            Err(e) => {
                cells.extend(models.iter().map(|m| CvCell::failed(m, fold.index, &e)));
                continue;
            }
        };

        if config.baselines {
            let uniform: BTreeMap<String, Map> = ds.images().into_iter().map(|i| (i, Map::uniform(*grid))).collect();
            let cb = central_bias(&train, grid, config.kde_bandwidth, config.density_floor)
                .map(|m| ds.images().into_iter().map(|i| (i, m.clone())).collect::<BTreeMap<_, _>>());
            let baselines: [(&str, Result<BTreeMap<String, Map>>); 3] =
                [(UNIFORM, Ok(uniform)), (CENTRAL_BIAS, cb), (EMPIRICAL_SALIENCY, Ok(sal.clone()))];
            for (name, dens) in baselines {
                let scored = dens.and_then(|d| {
                    let tr = static_dataset_loglik(&train, &d, name)?;
                    let te = static_dataset_loglik(&test, &d, name)?;
                    Ok((tr, te))
                });
                cells.push(match scored {
                    Ok((tr, te)) => CvCell {
                        model: name.to_string(),
                        fold: fold.index,
                        train_bits_per_fix: Some(tr.per_fix_avg()),
                        test_bits_per_fix: Some(te.per_fix_avg()),
                        test_by_condition: by_condition(ds, &te),
                        n_train: tr.n_scored(),
                        n_test: te.n_scored(),
                        theta: None,
                        local_maxima: 0,
                        error: None,
                        from_cache: false,
                    },
                    Err(e) => CvCell::failed(name, fold.index, &e),
                });
            }
        }

        for v in variants {
            let name = v.to_string();
            let cache_file = cache_dir.map(|d| d.join(format!("{}-fold{}-{name}.json", &hash[..16], fold.index)));
            if let Some(path) = cache_file.as_ref().filter(|p| p.exists()) {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let mut cell: CvCell = serde_json::from_str(&text)?;
                cell.from_cache = true;
                log::info!("{name}, fold {}: reusing cached result", fold.index);
                cells.push(cell);
                continue;
            }
            let mut fit_cfg = config.fit.clone();
            fit_cfg.seed = config.fit.seed.wrapping_add(fold.index as u64);
            let cell = mle_fit(&train, &sal, v, &fit_cfg).and_then(|fit| {
                let te = dataset_loglik(&test, &sal, &fit.theta_hat, v)?;
                Ok(CvCell {
                    model: name.clone(),
                    fold: fold.index,
                    train_bits_per_fix: Some(fit.per_fix_at_max),
                    test_bits_per_fix: Some(te.per_fix_avg()),
                    test_by_condition: by_condition(ds, &te),
                    n_train: fit.n_scored,
                    n_test: te.n_scored(),
                    theta: Some(fit.theta_hat),
                    local_maxima: fit.all_local_maxima.len(),
                    error: None,
                    from_cache: false,
                })
            });
            let cell = cell.unwrap_or_else(|e| CvCell::failed(&name, fold.index, &e));
            if let (Some(path), None) = (&cache_file, &cell.error) {
                let text = serde_json::to_string_pretty(&cell)?;
                std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
            }
            log::info!("{name}, fold {}: test {:?} bits/fix", fold.index, cell.test_bits_per_fix);
            cells.push(cell);
        }
    }
    Ok(ComparisonTable { n_folds: plan.n_folds, models, cells, config_hash: hash })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SynthConfig};
    use crate::optimize::genetic::GeneticConfig;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|k| format!("{prefix}{k:02}")).collect()
    }

    #[test]
    fn split_sizes_and_partition() {
        let subjects = names("s", 35);
        let mut images: Vec<(String, String)> = names("n", 15).into_iter().map(|i| (i, "natural".into())).collect();
        images.extend(names("t", 15).into_iter().map(|i| (i, "texture".into())));
        let plan = cv_split(&subjects, &images, 5, 9).unwrap();
        let mut seen_s = BTreeSet::new();
        let mut seen_i = BTreeSet::new();
        for f in &plan.folds {
            assert_eq!(f.test_subjects.len(), 7);
            assert_eq!(f.test_images.iter().filter(|i| i.starts_with('n')).count(), 3);
            assert_eq!(f.test_images.iter().filter(|i| i.starts_with('t')).count(), 3);
            assert_eq!(f.train_subjects.len(), 28);
            assert_eq!(f.train_images.len(), 24);
            for s in &f.test_subjects {
                assert!(seen_s.insert(s.clone()) && !f.train_subjects.contains(s));
            }
            for i in &f.test_images {
                assert!(seen_i.insert(i.clone()) && !f.train_images.contains(i));
            }
        }
        assert_eq!(seen_s.len(), 35);
        assert_eq!(seen_i.len(), 30);
        assert_eq!(plan, cv_split(&subjects, &images, 5, 9).unwrap());
        assert_ne!(plan, cv_split(&subjects, &images, 5, 10).unwrap());
    }

    #[test]
    fn split_needs_enough_units() {
        let images: Vec<(String, String)> = names("i", 10).into_iter().map(|i| (i, String::new())).collect();
        assert!(matches!(cv_split(&names("s", 4), &images, 5, 0), Err(Error::Configuration(_))));
        assert!(matches!(cv_split(&names("s", 10), &images[..4], 5, 0), Err(Error::Configuration(_))));
    }

    fn tiny() -> Dataset {
        generate_synthetic(&SynthConfig {
            grid_side: 16,
            degrees_per_cell: 2.0,
            n_subjects: 4,
            n_images: 4,
            fixations_per_trial: 12,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn fold_sets_never_share_subjects_or_images() {
        let ds = tiny();
        let plan = CvPlan::for_dataset(&ds, 2, 3).unwrap();
        for f in &plan.folds {
            let train = f.train_paths(&ds);
            let test = f.test_paths(&ds);
            assert!(!train.is_empty() && !test.is_empty());
            for t in &test {
                assert!(train.iter().all(|p| p.subject != t.subject && p.image != t.image));
            }
        }
    }

    #[test]
    fn small_run_with_cache() {
        let ds = tiny();
        let grid = *ds.saliency.values().next().unwrap().grid();
        let plan = CvPlan::for_dataset(&ds, 2, 3).unwrap();
        let mut config = CvConfig::default();
        config.fit.genetic = GeneticConfig { population: 10, generations: 2, ..Default::default() };
        config.fit.restarts = 0;
        config.fit.simplex.max_evals_per_dim = 10;
        let variants = [ModelVariant::no_inhibition().with_lambda(1.0)];
        let dir = tempfile::tempdir().unwrap();
        let t1 = cross_validate(&ds, &variants, &plan, &config, &grid, Some(dir.path())).unwrap();
        assert_eq!(t1.models.len(), 4);
        assert_eq!(t1.cells.len(), 8);
        for c in &t1.cells {
            assert!(c.error.is_none() && !c.from_cache, "{c:?}");
        }
        let u = t1.mean_test(UNIFORM).unwrap();
        assert!((u + 8.0).abs() < 1e-12);
        let t2 = cross_validate(&ds, &variants, &plan, &config, &grid, Some(dir.path())).unwrap();
        let cached: Vec<&CvCell> = t2.cells.iter().filter(|c| c.from_cache).collect();
        assert_eq!(cached.len(), 2);
        assert_eq!(t1.mean_test("none-lambda1"), t2.mean_test("none-lambda1"));
        let mut buf = Vec::new();
        t2.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 9);
    }

    #[test]
    fn nesting_check_flags_inverted_scores() {
        let cell = |model: &str, train: f64| CvCell {
            model: model.into(),
            fold: 0,
            train_bits_per_fix: Some(train),
            test_bits_per_fix: Some(train),
            test_by_condition: BTreeMap::new(),
            n_train: 1,
            n_test: 1,
            theta: None,
            local_maxima: 1,
            error: None,
            from_cache: false,
        };
        let t = ComparisonTable {
            n_folds: 1,
            models: vec!["subtractive".into(), "subtractive-gamma1".into()],
            cells: vec![cell("subtractive", -9.0), cell("subtractive-gamma1", -8.5)],
            config_hash: String::new(),
        };
        let v = t.nesting_violations(1e-6);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].1, "subtractive");
    }
}
