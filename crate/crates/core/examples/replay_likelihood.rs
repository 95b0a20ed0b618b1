//! Scores synthetic scanpaths fixation by fixation and compares the dynamical
//! model with the uniform and saliency-only baselines.
//!
//! cargo run --release --example replay_likelihood

use scenewalk::data::{generate_synthetic, SynthConfig};
use scenewalk::likelihood::{
    dataset_loglik, loglik_ratio, scanpath_loglik, static_dataset_loglik, static_model_loglik,
};
use scenewalk::{GridSpec, Map};

fn main() -> scenewalk::Result<()> {
    let cfg = SynthConfig { grid_side: 32, degrees_per_cell: 1.0, n_subjects: 4, n_images: 4, ..Default::default() };
    let ds = generate_synthetic(&cfg)?;
    let variant = cfg.variant.0;

    // One scanpath in detail.
    let path = &ds.trials[0];
    let trace = scanpath_loglik(path, &ds.saliency[&path.image], &cfg.params, &variant)?;
    println!("subject {} image {} trial {}", path.subject, path.image, path.trial);
    for e in trace.entries() {
        println!("  fixation {:>2}  log2 p = {:8.3}", e.fix_index, e.log2p);
    }

    let model = dataset_loglik(&ds.trials, &ds.saliency, &cfg.params, &variant)?;
    let grid = GridSpec::new(cfg.grid_side, cfg.degrees_per_cell)?;
    let uniform = static_model_loglik(&ds.trials, &Map::uniform(grid))?;
    let saliency = static_dataset_loglik(&ds.trials, &ds.saliency, "saliency")?;
    println!("\n{} fixations scored", model.n_scored());
    for (name, t) in [("model", &model), ("saliency", &saliency), ("uniform", &uniform)] {
        println!("{name:>9}: {:8.4} bits/fix", t.per_fix_avg());
    }
    let gain = loglik_ratio(&model, &saliency)?;
    println!("gain over saliency: {:.4} bits/fix (x{:.3} per fixation)", gain.bits_per_fix, gain.per_fix_ratio());
    Ok(())
}
