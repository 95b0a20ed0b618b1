//! Posterior sampling of the model parameters with tuned random-walk
//! Metropolis-Hastings, followed by convergence diagnostics.
//!
//! cargo run --release --example sample_posterior

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenewalk::bayes::{posterior_summaries, run_chains, tune_proposal, GaussianProposal, PosteriorTarget, Prior};
use scenewalk::data::{generate_synthetic, SynthConfig};

fn main() -> scenewalk::Result<()> {
    let cfg = SynthConfig {
        grid_side: 16,
        degrees_per_cell: 2.0,
        n_subjects: 4,
        n_images: 4,
        fixations_per_trial: 25,
        ..Default::default()
    };
    let ds = generate_synthetic(&cfg)?;
    let variant = cfg.variant.0;
    let mut target = PosteriorTarget::new(&ds.trials, &ds.saliency, variant, Prior::default());
    target.base = cfg.params;

    let center = variant.to_log_free(&cfg.params);
    let initial = GaussianProposal::diagonal(&vec![0.05; center.len()])?;
    let (proposal, _, log) = tune_proposal(&target, &initial, &center, 1, 100, 6, 0.25)?;
    let (scale, rate) = log.rounds.last().copied().unwrap_or((1.0, f64::NAN));
    println!("tuned proposal: scale {scale:.3}, pilot acceptance {rate:.2}");

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let starts: Vec<Vec<f64>> =
        (0..3).map(|_| center.iter().map(|c| c + rng.gen_range(-0.05..0.05)).collect()).collect();
    let chains = run_chains(&target, &proposal, 1500, &starts, 10)?;
    for (k, c) in chains.iter().enumerate() {
        println!("chain {k}: acceptance {:.2}", c.acceptance_rate);
    }
    let summary = posterior_summaries(&chains, 300)?;
    println!("{:>14} {:>10} {:>10} {:>8} {:>8} {:>10}", "parameter", "mean", "sd", "rhat", "ess", "generator");
    for (p, id) in summary.params.iter().zip(variant.free_params()) {
        let rhat = p.rhat.map_or("-".into(), |r| format!("{r:.3}"));
        println!(
            "{:>14} {:>10.4} {:>10.4} {:>8} {:>8.0} {:>10.4}",
            p.name,
            p.mean,
            p.sd,
            rhat,
            p.ess,
            cfg.params.get(id)
        );
    }
    Ok(())
}
