//! Nelder-Mead simplex search (maximizing).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplexConfig {
    /// Stop when the simplex spans at most this much per coordinate...
    pub x_tol: f64,
    /// ...and its values differ by at most this much.
    pub f_tol: f64,
    /// Maximum evaluations per unit of dimension.
    pub max_evals_per_dim: usize,
    /// Offset of the initial vertices from the start point.
    pub initial_step: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self { x_tol: 1e-4, f_tol: 1e-4, max_evals_per_dim: 200, initial_step: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Maximizes `objective` from `start`. NaN counts as −∞. Running out of
/// evaluations returns the best vertex with `converged = false`.
pub fn nelder_mead<F>(objective: &F, start: &[f64], config: &SimplexConfig) -> Result<SimplexResult>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let n = start.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty start point".into()));
    }
    if !(config.x_tol > 0.0 && config.f_tol > 0.0 && config.initial_step > 0.0) {
        return Err(Error::Configuration("simplex tolerances and step must be positive".into()));
    }
    let max_evals = config.max_evals_per_dim.max(1) * n;
    // Internally minimize g = −f.
    let g = |x: &[f64]| {
        let v = -objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut evals = 0usize;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), g(start)));
    evals += 1;
    for k in 0..n {
        let mut x = start.to_vec();
        x[k] += config.initial_step;
        let v = g(&x);
        evals += 1;
        simplex.push((x, v));
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let f_spread = simplex[1..].iter().map(|(_, v)| (v - best.1).abs()).fold(0.0, f64::max);
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        // An all-infinite simplex has NaN spreads; it never converges.
        if best.1.is_finite() && f_spread <= config.f_tol && x_spread <= config.x_tol {
            converged = true;
            break;
        }
        if evals >= max_evals {
            break;
        }

        let centroid: Vec<f64> =
            (0..n).map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(REFLECT);
        let fr = g(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(REFLECT * EXPAND);
            let fe = g(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(REFLECT * CONTRACT);
            let fc = g(&xc);
            (xc, fc)
        } else {
            let xc = along(-CONTRACT);
            let fc = g(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < worst.1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x0 = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = x0.iter().zip(&vertex.0).map(|(b, v)| b + SHRINK * (v - b)).collect();
            let v = g(&x);
            *vertex = (x, v);
        }
        evals += n;
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    Ok(SimplexResult { x, value: -v, evaluations: evals, converged })
}
