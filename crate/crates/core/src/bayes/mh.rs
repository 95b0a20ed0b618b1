//! Random-walk Metropolis-Hastings with a fixed Gaussian proposal.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LogDensity;
use crate::error::{Error, Result};

/// Serializable description of a Gaussian proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalSpec {
    pub sds: Vec<f64>,
    /// `(i, j, correlation)` for the non-zero off-diagonal terms.
    pub correlations: Vec<(usize, usize, f64)>,
    /// Global factor applied to every sd (pilot tuning adjusts this).
    pub scale: f64,
}

/// Symmetric Gaussian random-walk proposal.
#[derive(Debug, Clone)]
pub struct GaussianProposal {
    spec: ProposalSpec,
    chol: DMatrix<f64>,
}

impl GaussianProposal {
    pub fn diagonal(sds: &[f64]) -> Result<Self> {
        Self::from_spec(ProposalSpec { sds: sds.to_vec(), correlations: Vec::new(), scale: 1.0 })
    }

    /// Diagonal sds plus named correlated pairs.
    pub fn with_correlations(sds: &[f64], correlations: &[(usize, usize, f64)]) -> Result<Self> {
        Self::from_spec(ProposalSpec { sds: sds.to_vec(), correlations: correlations.to_vec(), scale: 1.0 })
    }

    pub fn from_spec(spec: ProposalSpec) -> Result<Self> {
        let d = spec.sds.len();
        if d == 0 || spec.sds.iter().any(|s| !(*s >= 0.0 && s.is_finite())) || !(spec.scale >= 0.0) {
            return Err(Error::InvalidArgument("proposal sds must be finite and non-negative".into()));
        }
        let mut cov = DMatrix::from_diagonal(&DVector::from_iterator(d, spec.sds.iter().map(|s| s * s)));
        for &(i, j, r) in &spec.correlations {
            if i >= d || j >= d || i == j || !(-1.0..=1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!("invalid proposal correlation ({i}, {j}, {r})")));
            }
            let c = r * spec.sds[i] * spec.sds[j];
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
        let chol = if spec.sds.iter().all(|s| *s > 0.0) {
            cov.cholesky()
                .ok_or_else(|| Error::InvalidArgument("proposal covariance is not positive definite".into()))?
                .l()
        } else if spec.correlations.is_empty() {
            // Zero-width coordinates stay put.
            DMatrix::from_diagonal(&DVector::from_iterator(d, spec.sds.iter().copied()))
        } else {
            return Err(Error::InvalidArgument("correlated proposal needs positive sds".into()));
        };
        Ok(Self { chol: chol * spec.scale, spec })
    }

    pub fn dim(&self) -> usize {
        self.spec.sds.len()
    }

    pub fn spec(&self) -> &ProposalSpec {
        &self.spec
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.scale *= factor;
        Self::from_spec(spec)
    }

    pub fn propose<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        let z = DVector::from_iterator(x.len(), (0..x.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let step = &self.chol * z;
        x.iter().zip(step.iter()).map(|(a, b)| a + b).collect()
    }
}

/// One accept/reject step. Returns whether the proposal was accepted.
pub(crate) fn mh_step<R: Rng + ?Sized>(
    mut log_density: impl FnMut(&[f64]) -> f64,
    proposal: &GaussianProposal,
    x: &mut Vec<f64>,
    lp: &mut f64,
    rng: &mut R,
) -> bool {
    let y = proposal.propose(x, rng);
    let ly = log_density(&y);
    let accept = !ly.is_nan() && (ly >= *lp || rng.gen::<f64>().ln() < ly - *lp);
    if accept {
        *x = y;
        *lp = ly;
    }
    accept
}

/// A recorded chain; draws are in the target's coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    #[serde(skip)]
    pub draws: Vec<Vec<f64>>,
    #[serde(skip)]
    pub log_posterior: Vec<f64>,
    pub names: Vec<String>,
    pub acceptance_rate: f64,
    pub proposal: ProposalSpec,
    pub seed: u64,
    pub start: Vec<f64>,
    pub log_space: bool,
    /// Draws discarded by the consumer; recorded for provenance.
    pub burn_in: usize,
    pub n_draws: usize,
}

impl Chain {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn all_rejected(&self) -> bool {
        self.acceptance_rate == 0.0
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[k]).collect()
    }

    /// Copy without the first `n` draws.
    pub fn after(&self, n: usize) -> Chain {
        let n = n.min(self.draws.len());
        Chain {
            draws: self.draws[n..].to_vec(),
            log_posterior: self.log_posterior[n..].to_vec(),
            burn_in: self.burn_in + n,
            ..self.clone()
        }
    }

    /// Writes `<stem>.draws.bin` (u64 LE rows, u64 LE columns, then f64 LE
    /// rows of draws followed by the log-posterior) and `<stem>.json`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let bin = dir.join(format!("{stem}.draws.bin"));
        let mut w = std::io::BufWriter::new(std::fs::File::create(&bin).map_err(|e| Error::io(&bin, e))?);
        let mut buf = Vec::with_capacity(16 + 8 * self.draws.len() * (self.dim() + 1));
        buf.extend_from_slice(&(self.draws.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.dim() as u64 + 1).to_le_bytes());
        for (d, lp) in self.draws.iter().zip(&self.log_posterior) {
            for v in d.iter().chain(std::iter::once(lp)) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&buf).and_then(|_| w.flush()).map_err(|e| Error::io(&bin, e))?;
        let meta = dir.join(format!("{stem}.json"));
        let f = std::fs::File::create(&meta).map_err(|e| Error::io(&meta, e))?;
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Chain> {
        let meta = dir.join(format!("{stem}.json"));
        let f = std::fs::File::open(&meta).map_err(|e| Error::io(&meta, e))?;
        let mut chain: Chain = serde_json::from_reader(f)?;
        let bin = dir.join(format!("{stem}.draws.bin"));
        let mut bytes = Vec::new();
        std::fs::File::open(&bin).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(&bin, e))?;
        let word = |k: usize| -> Option<[u8; 8]> { bytes.get(8 * k..8 * k + 8).and_then(|s| s.try_into().ok()) };
        let bad = || Error::Integrity(format!("{}: truncated or malformed draws file", bin.display()));
        let rows = u64::from_le_bytes(word(0).ok_or_else(bad)?) as usize;
        let cols = u64::from_le_bytes(word(1).ok_or_else(bad)?) as usize;
        if cols != chain.dim() + 1 || bytes.len() != 16 + 8 * rows * cols {
            return Err(bad());
        }
        let values: Vec<f64> =
            (0..rows * cols).map(|k| f64::from_le_bytes(word(2 + k).expect("length checked"))).collect();
        chain.draws = values.chunks_exact(cols).map(|r| r[..cols - 1].to_vec()).collect();
        chain.log_posterior = values.chunks_exact(cols).map(|r| r[cols - 1]).collect();
        Ok(chain)
    }
}

/// Runs a chain of `n_draws` states after `start`.
pub fn metropolis_hastings(
    target: &dyn LogDensity,
    proposal: &GaussianProposal,
    n_draws: usize,
    start: &[f64],
    seed: u64,
) -> Result<Chain> {
    if start.len() != target.dim() || proposal.dim() != target.dim() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: target {}, start {}, proposal {}",
            target.dim(),
            start.len(),
            proposal.dim()
        )));
    }
    let mut x = start.to_vec();
    let mut lp = target.log_density(&x);
    if !lp.is_finite() {
        return Err(Error::InvalidArgument("start point has non-finite log density".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(n_draws);
    let mut lps = Vec::with_capacity(n_draws);
    let mut accepted = 0usize;
    for _ in 0..n_draws {
        if mh_step(|y| target.log_density(y), proposal, &mut x, &mut lp, &mut rng) {
            accepted += 1;
        }
        draws.push(x.clone());
        lps.push(lp);
    }
    let acceptance_rate = if n_draws == 0 { 0.0 } else { accepted as f64 / n_draws as f64 };
    if accepted == 0 && n_draws > 0 {
        log::warn!("chain with seed {seed} rejected every proposal");
    }
    Ok(Chain {
        draws,
        log_posterior: lps,
        names: target.names(),
        acceptance_rate,
        proposal: proposal.spec().clone(),
        seed,
        start: start.to_vec(),
        log_space: target.log_space(),
        burn_in: 0,
        n_draws,
    })
}

/// Independent chains in parallel; chain `k` uses seed `seed + k`.
pub fn run_chains(
    target: &dyn LogDensity,
    proposal: &GaussianProposal,
    n_draws: usize,
    starts: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<Chain>> {
    starts
        .par_iter()
        .enumerate()
        .map(|(k, s)| metropolis_hastings(target, proposal, n_draws, s, seed.wrapping_add(k as u64)))
        .collect()
}

/// Pilot tuning record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningLog {
    /// `(scale, acceptance rate)` per pilot round.
    pub rounds: Vec<(f64, f64)>,
    pub target_rate: f64,
}

/// Rescales the proposal over pilot rounds until the acceptance rate is
/// near `target_rate`, then returns the frozen proposal, the last pilot
/// state and the log. Pilot draws are discarded.
pub fn tune_proposal(
    target: &dyn LogDensity,
    proposal: &GaussianProposal,
    start: &[f64],
    seed: u64,
    pilot_len: usize,
    rounds: usize,
    target_rate: f64,
) -> Result<(GaussianProposal, Vec<f64>, TuningLog)> {
    if !(0.0 < target_rate && target_rate < 1.0) || pilot_len == 0 {
        return Err(Error::InvalidArgument("need 0 < target rate < 1 and a non-empty pilot".into()));
    }
    let mut prop = proposal.clone();
    let mut x = start.to_vec();
    let mut log = TuningLog { rounds: Vec::new(), target_rate };
    for r in 0..rounds {
        let chain = metropolis_hastings(target, &prop, pilot_len, &x, seed ^ (0x9e37_79b9 + r as u64))?;
        let rate = chain.acceptance_rate;
        log.rounds.push((prop.spec().scale, rate));
        if let Some(last) = chain.draws.last() {
            x = last.clone();
        }
        if (rate - target_rate).abs() < 0.05 {
            break;
        }
        let factor = (rate.max(0.01) / target_rate).clamp(0.2, 3.0);
        prop = prop.scaled(factor)?;
    }
    Ok((prop, x, log))
}
