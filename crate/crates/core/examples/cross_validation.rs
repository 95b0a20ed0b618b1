//! Five-fold subject-by-image cross-validation of two model variants against
//! the static baselines.
//!
//! cargo run --release --example cross_validation

use scenewalk::data::{generate_synthetic, SynthConfig};
use scenewalk::eval::{cross_validate, CvConfig, CvPlan};
use scenewalk::optimize::{GeneticConfig, SimplexConfig};
use scenewalk::{GridSpec, ModelVariant};

fn main() -> scenewalk::Result<()> {
    let cfg = SynthConfig {
        grid_side: 16,
        degrees_per_cell: 2.0,
        n_subjects: 10,
        n_images: 10,
        fixations_per_trial: 15,
        ..Default::default()
    };
    let ds = generate_synthetic(&cfg)?;
    let plan = CvPlan::for_dataset(&ds, 5, 7)?;
    for f in &plan.folds {
        println!("fold {}: test subjects {:?}, test images {:?}", f.index, f.test_subjects, f.test_images);
    }

    let mut config = CvConfig::default();
    config.fit.genetic = GeneticConfig { population: 16, generations: 4, ..Default::default() };
    config.fit.simplex = SimplexConfig { x_tol: 1e-2, f_tol: 1e-2, max_evals_per_dim: 40, ..Default::default() };
    let grid = GridSpec::new(cfg.grid_side, cfg.degrees_per_cell)?;
    let variants = [ModelVariant::subtractive(), ModelVariant::no_inhibition()];
    let table = cross_validate(&ds, &variants, &plan, &config, &grid, None)?;

    println!("\n{:>20} {:>10} {:>10} {:>8}", "model", "train", "test", "sd");
    for s in table.summaries() {
        println!("{:>20} {:>10.4} {:>10.4} {:>8.4}", s.model, s.mean_train, s.mean_test, s.sd_test);
    }
    Ok(())
}
