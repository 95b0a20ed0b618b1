//! Generates scanpaths from the model on random saliency maps and reports how
//! surprising each sampled fixation was.
//!
//! cargo run --release --example simulate_scanpaths

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenewalk::data::random_saliency;
use scenewalk::likelihood::{simulate_detailed, StartRule};
use scenewalk::{GridSpec, ModelParams, ModelVariant};

fn main() -> scenewalk::Result<()> {
    let grid = GridSpec::new(64, 0.5)?;
    let params = ModelParams::reference_fit();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    for (k, variant) in
        [ModelVariant::subtractive(), ModelVariant::divisive(), ModelVariant::no_inhibition()].iter().enumerate()
    {
        let saliency = random_saliency(&grid, 6, (1.5, 5.0), &mut rng)?;
        let durations: Vec<f64> = (0..15).map(|_| rng.gen_range(0.15..0.35)).collect();
        let sim = simulate_detailed(&saliency, &params, variant, 15, &durations, k as u64, &StartRule::Center)?;
        println!("{variant}:");
        for (i, f) in sim.path.fixations.iter().enumerate() {
            let surprise = match i {
                0 => String::from("   start"),
                _ => format!("{:8.3}", sim.realized_log2[i - 1]),
            };
            println!("  ({:5.2}, {:5.2}) {:3.0} ms  log2 p {surprise}", f.x, f.y, 1000.0 * f.duration);
        }
        let lengths: Vec<f64> = sim.path.saccade_lengths().collect();
        let realized: f64 = sim.realized_log2.iter().sum::<f64>() / sim.realized_log2.len() as f64;
        let expected: f64 = sim.expected_log2.iter().sum::<f64>() / sim.expected_log2.len() as f64;
        println!(
            "  mean saccade {:.2} deg, realized {realized:.3} vs expected {expected:.3} bits/fix\n",
            lengths.iter().sum::<f64>() / lengths.len() as f64
        );
    }
    Ok(())
}
