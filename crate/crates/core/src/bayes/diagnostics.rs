//! Convergence diagnostics and posterior summaries.

use std::io::Write;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::mh::Chain;
use crate::error::{Error, Result};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn check_chains(chains: &[&[f64]]) -> Result<usize> {
    if chains.len() < 2 {
        return Err(Error::InsufficientData("R-hat needs at least two chains".into()));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument("chains differ in length".into()));
    }
    if n < 10 {
        return Err(Error::InsufficientData("R-hat needs at least 10 draws per chain".into()));
    }
    Ok(n)
}

/// Potential scale reduction factor of one scalar quantity across chains
/// (no chain splitting).
pub fn rhat(chains: &[&[f64]]) -> Result<f64> {
    let n = check_chains(chains)? as f64;
    let m = chains.len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains.iter().map(|c| var(c)).sum::<f64>() / m;
    if !(w > 0.0) {
        return Err(Error::UndefinedStatistic("zero within-chain variance".into()));
    }
    let b = n * var(&means);
    let v_hat = (n - 1.0) / n * w + (m + 1.0) / (m * n) * b;
    Ok((v_hat / w).sqrt())
}

/// Multivariate scale reduction factor over the pooled covariance of
/// `d`-dimensional draws: `(n−1)/n + (m+1)/m · λ₁(W⁻¹ B/n)`.
pub fn rhat_multivariate(chains: &[&[Vec<f64>]]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::InsufficientData("R-hat needs at least two chains".into()));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) || n < 10 {
        return Err(Error::InvalidArgument("chains must share a length of at least 10".into()));
    }
    let d = chains[0][0].len();
    let m = chains.len();
    let chain_means: Vec<DMatrix<f64>> = chains
        .iter()
        .map(|c| {
            let mut s = DMatrix::zeros(d, 1);
            for x in c.iter() {
                s += DMatrix::from_column_slice(d, 1, x);
            }
            s / n as f64
        })
        .collect();
    let grand = chain_means.iter().fold(DMatrix::zeros(d, 1), |a, b| a + b) / m as f64;
    let mut w = DMatrix::zeros(d, d);
    for (c, cm) in chains.iter().zip(&chain_means) {
        for x in c.iter() {
            let e = DMatrix::from_column_slice(d, 1, x) - cm;
            w += &e * e.transpose();
        }
    }
    w /= (m * (n - 1)) as f64;
    let mut b_over_n = DMatrix::zeros(d, d);
    for cm in &chain_means {
        let e = cm - &grand;
        b_over_n += &e * e.transpose();
    }
    b_over_n /= (m - 1) as f64;
    let chol =
        w.clone().cholesky().ok_or_else(|| Error::UndefinedStatistic("within-chain covariance is singular".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::UndefinedStatistic("within-chain covariance is singular".into()))?;
    let sym = &l_inv * b_over_n * l_inv.transpose();
    let lambda = sym.symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (n, m) = (n as f64, m as f64);
    Ok((n - 1.0) / n + (m + 1.0) / m * lambda)
}

/// Normalized autocorrelations ρ₀..ρ_{n−1} via zero-padded FFT.
pub fn autocorrelation(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - m, 0.0)).collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    if c0 <= 0.0 {
        let mut r = vec![0.0; n];
        r[0] = 1.0;
        return r;
    }
    buf[..n].iter().map(|c| c.re / c0).collect()
}

/// Effective sample size with Geyer's initial positive (monotone) sequence.
pub fn ess(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 100 {
        return Err(Error::InsufficientData("ESS needs at least 100 draws".into()));
    }
    if var(x) == 0.0 {
        return Ok(n as f64);
    }
    let rho = autocorrelation(x);
    let mut sum_pairs = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while k + 1 < n {
        let mut pair = rho[k] + rho[k + 1];
        if pair <= 0.0 {
            break;
        }
        pair = pair.min(prev);
        sum_pairs += pair;
        prev = pair;
        k += 2;
    }
    // 1 + 2Σ_{k≥1} ρ_k = −1 + 2Σ_m (ρ_{2m} + ρ_{2m+1})
    let tau = (-1.0 + 2.0 * sum_pairs).max(1.0 / (n as f64).log10());
    Ok(n as f64 / tau)
}

/// Sum of per-chain effective sample sizes.
pub fn ess_chains(chains: &[&[f64]]) -> Result<f64> {
    chains.iter().map(|c| ess(c)).sum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub mc_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub rhat: Option<f64>,
    pub ess: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub params: Vec<ParamSummary>,
    pub correlations: Vec<Vec<f64>>,
    pub multivariate_rhat: Option<f64>,
    pub burn_in: usize,
    pub n_draws: usize,
    /// Whether summaries are of exponentiated (natural-scale) draws.
    pub natural_scale: bool,
}

impl PosteriorSummary {
    /// CSV with columns `parameter,mle,mean,mc_error,ci_low,ci_high,rhat,ess`.
    pub fn write_csv<W: Write>(&self, w: W, mle: Option<&[f64]>) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["parameter", "mle", "mean", "mc_error", "ci_low", "ci_high", "rhat", "ess"])?;
        for (k, p) in self.params.iter().enumerate() {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.write_record([
                p.name.clone(),
                opt(mle.and_then(|m| m.get(k).copied())),
                p.mean.to_string(),
                p.mc_error.to_string(),
                p.ci_low.to_string(),
                p.ci_high.to_string(),
                opt(p.rhat),
                p.ess.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<summary>", e))?;
        Ok(())
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Means, Monte Carlo errors, central 95% intervals, R̂, ESS and the
/// correlation matrix after discarding `burn_in` draws of every chain.
/// Log-space chains are summarized on the natural scale.
pub fn posterior_summaries(chains: &[Chain], burn_in: usize) -> Result<PosteriorSummary> {
    let first = chains.first().ok_or_else(|| Error::InsufficientData("no chains".into()))?;
    let kept: Vec<Chain> = chains.iter().map(|c| c.after(burn_in)).collect();
    let n = kept[0].len();
    if kept.iter().any(|c| c.len() < 100) {
        return Err(Error::InsufficientData("need at least 100 draws per chain after burn-in".into()));
    }
    let d = first.dim();
    let natural = first.log_space;
    let tf = |v: f64| if natural { v.exp() } else { v };
    let cols: Vec<Vec<Vec<f64>>> =
        (0..d).map(|k| kept.iter().map(|c| c.column(k).into_iter().map(tf).collect()).collect()).collect();
    let mut params = Vec::with_capacity(d);
    for (k, per_chain) in cols.iter().enumerate() {
        let pooled: Vec<f64> = per_chain.iter().flatten().copied().collect();
        let m = mean(&pooled);
        let sd = var(&pooled).max(0.0).sqrt();
        let refs: Vec<&[f64]> = per_chain.iter().map(Vec::as_slice).collect();
        let e = ess_chains(&refs)?;
        let r = if refs.len() >= 2 {
            match rhat(&refs) {
                Ok(v) => Some(v),
                Err(Error::UndefinedStatistic(_)) => None,
                Err(err) => return Err(err),
            }
        } else {
            None
        };
        let mut sorted = pooled.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        params.push(ParamSummary {
            name: first.names[k].clone(),
            mean: m,
            sd,
            mc_error: if sd == 0.0 { 0.0 } else { sd / e.sqrt() },
            ci_low: quantile(&sorted, 0.025),
            ci_high: quantile(&sorted, 0.975),
            rhat: r,
            ess: e,
        });
    }
    let mut correlations = vec![vec![0.0; d]; d];
    let pooled: Vec<Vec<f64>> = cols.iter().map(|pc| pc.iter().flatten().copied().collect()).collect();
    for i in 0..d {
        for j in 0..d {
            correlations[i][j] = if i == j { 1.0 } else { correlation(&pooled[i], &pooled[j]) };
        }
    }
    let multivariate_rhat = if kept.len() >= 2 && d > 1 {
        let refs: Vec<&[Vec<f64>]> = kept.iter().map(|c| c.draws.as_slice()).collect();
        rhat_multivariate(&refs).ok()
    } else {
        None
    };
    Ok(PosteriorSummary { params, correlations, multivariate_rhat, burn_in, n_draws: n, natural_scale: natural })
}

/// Pearson correlation; 0 when either input is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Histogram over `[lo, hi]` as `(bin centers, counts)`; values outside are dropped.
pub fn histogram_1d(x: &[f64], lo: f64, hi: f64, bins: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    if bins == 0 || !(lo < hi) {
        return Err(Error::InvalidArgument("need bins > 0 and lo < hi".into()));
    }
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in x {
        if (lo..=hi).contains(&v) {
            counts[(((v - lo) / w) as usize).min(bins - 1)] += 1;
        }
    }
    Ok(((0..bins).map(|k| lo + (k as f64 + 0.5) * w).collect(), counts))
}

/// Joint histogram; `counts[i][j]` counts `x` in bin i and `y` in bin j.
pub fn histogram_2d(x: &[f64], y: &[f64], xr: (f64, f64), yr: (f64, f64), bins: usize) -> Result<Vec<Vec<usize>>> {
    if bins == 0 || !(xr.0 < xr.1 && yr.0 < yr.1) {
        return Err(Error::InvalidArgument("need bins > 0 and increasing ranges".into()));
    }
    let wx = (xr.1 - xr.0) / bins as f64;
    let wy = (yr.1 - yr.0) / bins as f64;
    let mut counts = vec![vec![0usize; bins]; bins];
    for (&a, &b) in x.iter().zip(y) {
        if (xr.0..=xr.1).contains(&a) && (yr.0..=yr.1).contains(&b) {
            let i = (((a - xr.0) / wx) as usize).min(bins - 1);
            let j = (((b - yr.0) / wy) as usize).min(bins - 1);
            counts[i][j] += 1;
        }
    }
    Ok(counts)
}
