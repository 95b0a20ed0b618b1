//! Scanpath spatial statistics: saccade length distributions and the
//! inhomogeneous pair correlation function.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use rayon::prelude::*;

use crate::grid::{bin_fixation, kde_density, GridSpec, Map};
use crate::likelihood::Scanpath;

/// Density-normalized histogram of saccade lengths in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaccadeHistogram {
    pub bin_width: f64,
    pub centers: Vec<f64>,
    pub density: Vec<f64>,
    pub lengths: Vec<f64>,
}

impl SaccadeHistogram {
    pub fn n(&self) -> usize {
        self.lengths.len()
    }

    pub fn mean(&self) -> f64 {
        self.lengths.iter().sum::<f64>() / self.lengths.len() as f64
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut out = String::from("x,y\n");
        for (c, d) in self.centers.iter().zip(&self.density) {
            out.push_str(&format!("{c},{d}\n"));
        }
        w.write_all(out.as_bytes()).map_err(|e| Error::io("<saccade histogram>", e))
    }
}

/// Lengths of all saccades between consecutive fixations, binned from 0 with
/// the given width (0.5° is the usual choice).
pub fn saccade_length_distribution(paths: &[Scanpath], bin_width: f64) -> Result<SaccadeHistogram> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidArgument(format!("bin width must be positive, got {bin_width}")));
    }
    let lengths: Vec<f64> = paths.iter().flat_map(|p| p.saccade_lengths()).collect();
    if lengths.is_empty() {
        return Err(Error::InsufficientData("no saccades: every scanpath has a single fixation".into()));
    }
    let max = lengths.iter().copied().fold(0.0, f64::max);
    let bins = (max / bin_width).floor() as usize + 1;
    let mut counts = vec![0usize; bins];
    for l in &lengths {
        counts[((l / bin_width).floor() as usize).min(bins - 1)] += 1;
    }
    let n = lengths.len() as f64;
    Ok(SaccadeHistogram {
        bin_width,
        centers: (0..bins).map(|k| (k as f64 + 0.5) * bin_width).collect(),
        density: counts.iter().map(|c| *c as f64 / (n * bin_width)).collect(),
        lengths,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("KS statistic needs two non-empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcfPoint {
    pub r: f64,
    pub g: f64,
}

pub fn write_pcf_csv<W: Write>(points: &[PcfPoint], mut w: W) -> Result<()> {
    let mut out = String::from("x,y\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.r, p.g));
    }
    w.write_all(out.as_bytes()).map_err(|e| Error::io("<pcf>", e))
}

/// Pair correlation of fixations within scanpaths, all scanpaths sharing one
/// fixation density.
pub fn pair_correlation(paths: &[Scanpath], density: &Map, radii: &[f64], bandwidth: f64) -> Result<Vec<PcfPoint>> {
    pcf_impl(paths, |_, _| Ok(density), radii, bandwidth)
}

/// Pair correlation with a separate fixation density per image.
pub fn pair_correlation_by_image(
    paths: &[Scanpath],
    densities: &BTreeMap<String, Map>,
    radii: &[f64],
    bandwidth: f64,
) -> Result<Vec<PcfPoint>> {
    pcf_impl(
        paths,
        |_, p| densities.get(&p.image).ok_or_else(|| Error::Configuration(format!("no density for image {}", p.image))),
        radii,
        bandwidth,
    )
}

/// Pair correlation where each scanpath is weighed against the fixation
/// density of all *other* scanpaths on its image: a Gaussian KDE with
/// `kde_bandwidth`, mixed with `floor` of uniform mass. A density that
/// includes the scored path is inflated at its own fixations and biases `g`
/// downward at every radius.
pub fn pair_correlation_leave_one_out(
    paths: &[Scanpath],
    grid: &GridSpec,
    kde_bandwidth: f64,
    floor: f64,
    radii: &[f64],
    bandwidth: f64,
) -> Result<Vec<PcfPoint>> {
    if !(0.0..1.0).contains(&floor) {
        return Err(Error::InvalidArgument(format!("density floor must lie in [0, 1), got {floor}")));
    }
    let mut by_image: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (k, p) in paths.iter().enumerate() {
        by_image.entry(&p.image).or_default().push(k);
    }
    let u = 1.0 / grid.n_cells() as f64;
    let densities = paths
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let others = &by_image[p.image.as_str()];
            if others.len() < 2 {
                return Err(Error::InsufficientData(format!("image {} has a single scanpath", p.image)));
            }
            let kde = kde_density(
                others.iter().filter(|&&o| o != k).flat_map(|&o| &paths[o].fixations),
                kde_bandwidth,
                grid,
            )?;
            Map::new(*grid, kde.values().iter().map(|v| (1.0 - floor) * v + floor * u).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    pcf_impl(paths, |k, _| Ok(&densities[k]), radii, bandwidth)
}

/// Kernel estimate over ordered pairs `i ≠ j` of the same scanpath:
///
/// `g(r) = Σ k_h(r − d_ij) / (f(x_i) f(x_j) |W ∩ W_{x_i − x_j}|) / (2πr Σ_p n_p(n_p − 1))`
///
/// with `f` the fixation density per square degree, `k_h` the Epanechnikov
/// kernel and the translation-corrected window overlap in the denominator.
/// Independent draws from `f` give `g ≡ 1`.
fn pcf_impl<'a>(
    paths: &[Scanpath],
    density_for: impl Fn(usize, &Scanpath) -> Result<&'a Map>,
    radii: &[f64],
    bandwidth: f64,
) -> Result<Vec<PcfPoint>> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidArgument(format!("kernel bandwidth must be positive, got {bandwidth}")));
    }
    let Some(first) = paths.first() else {
        return Err(Error::InsufficientData("no scanpaths".into()));
    };
    let grid = *density_for(0, first)?.grid();
    let extent = grid.extent();
    let diagonal = extent * std::f64::consts::SQRT_2;
    let mut kept = Vec::new();
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("pcf radius must be positive, got {r}")));
        }
        if r >= diagonal {
            log::warn!("pcf radius {r}° exceeds the image diagonal {diagonal:.2}° and is skipped");
        } else {
            kept.push(r);
        }
    }
    let cell_area = grid.degrees_per_cell().powi(2);
    let mut sums = vec![0.0; kept.len()];
    let mut pairs = 0.0;
    let mut f = Vec::new();
    for (k, path) in paths.iter().enumerate() {
        let density = density_for(k, path)?;
        if *density.grid() != grid {
            return Err(Error::InvalidArgument("pcf densities must share one grid".into()));
        }
        f.clear();
        for fx in &path.fixations {
            let (i, j) = bin_fixation(fx.x, fx.y, &grid)?;
            let v = density.get(i, j);
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "fixation density is zero at fixated cell ({i}, {j}) of image {}",
                    path.image
                )));
            }
            f.push(v / cell_area);
        }
        let n = path.fixations.len() as f64;
        pairs += n * (n - 1.0);
        for a in 0..path.fixations.len() {
            for b in a + 1..path.fixations.len() {
                let (p, q) = (&path.fixations[a], &path.fixations[b]);
                let dx = (p.x - q.x).abs();
                let dy = (p.y - q.y).abs();
                let d = dx.hypot(dy);
                let overlap = (extent - dx) * (extent - dy);
                if overlap <= 0.0 {
                    continue;
                }
                let w = 2.0 / (f[a] * f[b] * overlap);
                for (s, &r) in sums.iter_mut().zip(&kept) {
                    let t = (r - d) / bandwidth;
                    if t.abs() < 1.0 {
                        *s += w * 0.75 * (1.0 - t * t) / bandwidth;
                    }
                }
            }
        }
    }
    if pairs == 0.0 {
        return Err(Error::InsufficientData("pcf needs scanpaths with at least two fixations".into()));
    }
    Ok(kept.iter().zip(&sums).map(|(&r, &s)| PcfPoint { r, g: s / (2.0 * std::f64::consts::PI * r * pairs) }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Fixation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn path(k: u32, pts: &[(f64, f64)]) -> Scanpath {
        Scanpath::new("s", "img", k, pts.iter().map(|&(x, y)| Fixation::new(x, y, 0.2).unwrap()).collect()).unwrap()
    }

    #[test]
    fn identical_fixations_are_a_point_mass_at_zero() {
        let h = saccade_length_distribution(&[path(0, &[(3.0, 3.0); 6])], 0.5).unwrap();
        assert_eq!(h.density, vec![2.0]);
        assert_eq!(h.n(), 5);
    }

    #[test]
    fn saccade_density_integrates_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<(f64, f64)> = (0..200).map(|_| (rng.gen_range(0.1..20.0), rng.gen_range(0.1..20.0))).collect();
        let h = saccade_length_distribution(&[path(0, &pts)], 0.5).unwrap();
        assert!((h.density.iter().sum::<f64>() * 0.5 - 1.0).abs() < 1e-12);
        assert!(saccade_length_distribution(&[path(0, &pts[..1])], 0.5).is_err());
    }

    #[test]
    fn ks_basics() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_statistic(&a, &[10.0, 11.0]).unwrap(), 1.0);
        assert!((ks_statistic(&[1.0, 2.0], &[1.5, 2.5]).unwrap() - 0.5).abs() < 1e-15);
    }

    fn uniform_paths(n_paths: usize, n_pts: usize, extent: f64, seed: u64) -> Vec<Scanpath> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n_paths)
            .map(|k| {
                let pts: Vec<(f64, f64)> =
                    (0..n_pts).map(|_| (rng.gen_range(1e-9..extent), rng.gen_range(1e-9..extent))).collect();
                path(k as u32, &pts)
            })
            .collect()
    }

    #[test]
    fn poisson_oracle() {
        let g = GridSpec::new(64, 0.5).unwrap();
        let paths = uniform_paths(250, 40, g.extent(), 7);
        let radii: Vec<f64> = (1..=10).map(f64::from).collect();
        for p in pair_correlation(&paths, &Map::uniform(g), &radii, 0.5).unwrap() {
            assert!((p.g - 1.0).abs() < 0.1, "r {}: g {}", p.r, p.g);
        }
    }

    #[test]
    fn pairs_at_fixed_distance_peak_there() {
        let g = GridSpec::new(64, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let paths: Vec<Scanpath> = (0..200)
            .map(|k| {
                let (x, y) = (rng.gen_range(2.0..26.0), rng.gen_range(2.0..26.0));
                path(k, &[(x, y), (x + 4.0, y)])
            })
            .collect();
        let radii: Vec<f64> = (1..=20).map(|k| k as f64 * 0.5).collect();
        let pcf = pair_correlation(&paths, &Map::uniform(g), &radii, 0.4).unwrap();
        let peak = pcf.iter().max_by(|a, b| a.g.total_cmp(&b.g)).unwrap();
        assert_eq!(peak.r, 4.0);
    }

    #[test]
    fn thinning_leaves_pcf_unchanged() {
        let g = GridSpec::new(64, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spread = Normal::new(0.0, 2.0).unwrap();
        let mut full = Vec::new();
        let mut thin = Vec::new();
        for k in 0..1500u32 {
            let (cx, cy) = (rng.gen_range(6.0..26.0), rng.gen_range(6.0..26.0));
            let mut pts = Vec::new();
            while pts.len() < 20 {
                let (x, y): (f64, f64) = (cx + spread.sample(&mut rng), cy + spread.sample(&mut rng));
                if x > 0.0 && y > 0.0 && x < 32.0 && y < 32.0 {
                    pts.push((x, y));
                }
            }
            let kept: Vec<(f64, f64)> = pts.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
            full.push(path(k, &pts));
            if kept.len() >= 2 {
                thin.push(path(k, &kept));
            }
        }
        let radii = [1.0, 2.0, 3.0, 4.0, 5.0];
        let a = pair_correlation(&full, &Map::uniform(g), &radii, 0.5).unwrap();
        let b = pair_correlation(&thin, &Map::uniform(g), &radii, 0.5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.g > 1.5, "clustered data should aggregate: {}", x.g);
            assert!((x.g - y.g).abs() / x.g < 0.1, "r {}: {} vs {}", x.r, x.g, y.g);
        }
    }

    #[test]
    fn leave_one_out_density_removes_self_inclusion_bias() {
        let g = GridSpec::new(32, 1.0).unwrap();
        let mut paths = uniform_paths(600, 20, g.extent(), 11);
        for (k, p) in paths.iter_mut().enumerate() {
            p.image = format!("img{}", k % 10);
        }
        let radii = [2.0, 4.0, 6.0, 8.0];
        let loo = pair_correlation_leave_one_out(&paths, &g, 2.0, 0.0, &radii, 0.5).unwrap();
        for p in &loo {
            assert!((p.g - 1.0).abs() < 0.1, "r {}: g {}", p.r, p.g);
        }
        let mut own = BTreeMap::new();
        for m in 0..10 {
            let img = format!("img{m}");
            let kde = kde_density(paths.iter().filter(|p| p.image == img).flat_map(|p| &p.fixations), 2.0, &g).unwrap();
            own.insert(img, kde);
        }
        let biased = pair_correlation_by_image(&paths, &own, &radii, 0.5).unwrap();
        for (a, b) in loo.iter().zip(&biased) {
            assert!(b.g < a.g, "r {}: {} vs {}", a.r, b.g, a.g);
        }
        assert!(pair_correlation_leave_one_out(&paths[..1], &g, 2.0, 0.0, &radii, 0.5).is_err());
    }

    #[test]
    fn radii_beyond_the_diagonal_are_dropped() {
        let g = GridSpec::new(16, 1.0).unwrap();
        let paths = uniform_paths(5, 5, 16.0, 1);
        let pcf = pair_correlation(&paths, &Map::uniform(g), &[2.0, 30.0], 0.5).unwrap();
        assert_eq!(pcf.len(), 1);
        assert!(pair_correlation(&paths, &Map::zeros(g), &[2.0], 0.5).is_err());
    }
}
