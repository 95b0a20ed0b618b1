//! Maximum-likelihood fit of the subtractive model to synthetic data, with a
//! held-out check against the generating parameters.
//!
//! cargo run --release --example fit_mle

use scenewalk::data::{generate_synthetic, SynthConfig};
use scenewalk::likelihood::dataset_loglik;
use scenewalk::optimize::{mle_fit, FitConfig, GeneticConfig, SimplexConfig};

fn main() -> scenewalk::Result<()> {
    let cfg = SynthConfig {
        grid_side: 32,
        degrees_per_cell: 1.0,
        n_subjects: 6,
        n_images: 6,
        fixations_per_trial: 30,
        ..Default::default()
    };
    let train = generate_synthetic(&cfg)?;
    let held_out = generate_synthetic(&SynthConfig { seed: cfg.seed + 1, ..cfg.clone() })?;
    let variant = cfg.variant.0;

    let config = FitConfig {
        genetic: GeneticConfig { population: 30, generations: 8, ..Default::default() },
        simplex: SimplexConfig { x_tol: 1e-2, f_tol: 1e-2, max_evals_per_dim: 80, ..Default::default() },
        restarts: 1,
        ..Default::default()
    };
    let fit = mle_fit(&train.trials, &train.saliency, &variant, &config)?;
    println!("{} evaluations in {:.1} s, {} fixations", fit.evaluations, fit.wall_seconds, fit.n_scored);
    println!("{:>14} {:>12} {:>12}", "parameter", "generator", "estimate");
    for &id in &fit.free_params {
        println!("{:>14} {:>12.4} {:>12.4}", id.to_string(), cfg.params.get(id), fit.theta_hat.get(id));
    }
    for (k, m) in fit.all_local_maxima.iter().enumerate() {
        println!("optimum {k}: {:.4} bits/fix, converged {}", m.loglik / fit.n_scored as f64, m.converged);
    }
    let truth = dataset_loglik(&held_out.trials, &held_out.saliency, &cfg.params, &variant)?.per_fix_avg();
    let fitted = dataset_loglik(&held_out.trials, &held_out.saliency, &fit.theta_hat, &variant)?.per_fix_avg();
    println!("held out: generator {truth:.4}, fit {fitted:.4} bits/fix");
    Ok(())
}
