//! Absolute checks of a model against data: saccade-length distributions,
//! KL divergence of fixation densities, pair correlation and the spread of
//! per-fixation likelihoods.
//!
//! cargo run --release --example goodness_of_fit

use scenewalk::data::{generate_synthetic, SynthConfig};
use scenewalk::eval::{
    kl_divergence, ks_statistic, likelihood_histogram, pair_correlation_leave_one_out, saccade_length_distribution,
};
use scenewalk::grid::kde_density;
use scenewalk::likelihood::{dataset_loglik, simulate_like};
use scenewalk::{GridSpec, Map};

fn main() -> scenewalk::Result<()> {
    let cfg = SynthConfig {
        grid_side: 32,
        degrees_per_cell: 1.0,
        n_subjects: 30,
        n_images: 5,
        fixations_per_trial: 25,
        ..Default::default()
    };
    let observed = generate_synthetic(&cfg)?;
    let variant = cfg.variant.0;
    let simulated = simulate_like(&observed.trials, &observed.saliency, &cfg.params, &variant, 99)?;

    let obs_sacc = saccade_length_distribution(&observed.trials, 1.0)?;
    let sim_sacc = saccade_length_distribution(&simulated, 1.0)?;
    println!(
        "saccade length: observed mean {:.2}, simulated mean {:.2}, KS {:.3}",
        obs_sacc.mean(),
        sim_sacc.mean(),
        ks_statistic(&obs_sacc.lengths, &sim_sacc.lengths)?
    );

    let grid = GridSpec::new(cfg.grid_side, cfg.degrees_per_cell)?;
    let floor = |m: Map| Map::new(grid, m.values().iter().map(|x| 0.99 * x + 0.01 / grid.n_cells() as f64).collect());
    for image in observed.images() {
        let obs = floor(kde_density(
            observed.trials.iter().filter(|p| p.image == image).flat_map(|p| &p.fixations),
            2.0,
            &grid,
        )?)?;
        let sim =
            floor(kde_density(simulated.iter().filter(|p| p.image == image).flat_map(|p| &p.fixations), 2.0, &grid)?)?;
        println!("{image}: KL(observed || simulated) = {:.4} bits", kl_divergence(&obs, &sim)?.bits);
    }

    let radii = [1.0, 2.0, 3.0, 4.0, 6.0, 8.0];
    // Each scanpath is weighed against the density of the other scanpaths on
    // its image.
    let g_obs = pair_correlation_leave_one_out(&observed.trials, &grid, 2.0, 0.05, &radii, 1.0)?;
    let g_sim = pair_correlation_leave_one_out(&simulated, &grid, 2.0, 0.05, &radii, 1.0)?;
    println!("pair correlation (observed / simulated):");
    for (a, b) in g_obs.iter().zip(&g_sim) {
        println!("  r = {:>4.1}: {:.3} / {:.3}", a.r, a.g, b.g);
    }

    let trace = dataset_loglik(&observed.trials, &observed.saliency, &cfg.params, &variant)?;
    let hist = likelihood_histogram(&trace, 12)?;
    println!("per-fixation log2 p histogram:");
    for (c, n) in hist.centers.iter().zip(&hist.counts) {
        println!("  {c:>7.2} {}", "#".repeat((*n as f64 / hist.total() as f64 * 120.0).round() as usize));
    }
    Ok(())
}
