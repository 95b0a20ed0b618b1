//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary (no libtest harness) so the lines always reach the output.
//! `cargo test --test acceptance -- 3 7` runs only criteria 3 and 7.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use scenewalk::bayes::{
    ess, gibbs_hierarchical, metropolis_hastings, rhat, FnDensity, GaussianProposal, HierarchicalSpec,
};
use scenewalk::data::{generate_synthetic, random_saliency, SpanSpread, SynthConfig};
use scenewalk::dynamics::{evolve_maps, ModelState};
use scenewalk::eval::{
    aic_penalty, bic_penalty, cross_validate, kl_divergence, pair_correlation, pair_correlation_by_image,
    penalty_bits_per_fix, CvConfig, CvPlan,
};
use scenewalk::grid::kde_density;
use scenewalk::likelihood::{dataset_loglik, scanpath_loglik, simulate_detailed, static_model_loglik, StartRule};
use scenewalk::optimize::{mle_fit, FitConfig, GeneticConfig, SimplexConfig};
use scenewalk::params::{Inhibition, ParamId};
use scenewalk::pipeline::predicted_saccade_lengths;
use scenewalk::{Fixation, GridSpec, Map, ModelParams, ModelVariant, Scanpath};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn() -> Outcome); 10] = [
        (1, "uniform null model scores -14 bits/fix at L=128", c1_uniform),
        (2, "closed-form evolution matches Euler integration", c2_euler),
        (3, "forced replay obeys the chain rule", c3_chain_rule),
        (4, "probability floor zeta/L^2 holds on simulated data", c4_floor),
        (5, "AIC/BIC penalties in bits per fixation", c5_criteria),
        (6, "parameter recovery from 5000 synthetic fixations", c6_recovery),
        (7, "sampler calibration", c7_sampler),
        (8, "hierarchical shrinkage of predicted saccade lengths", c8_shrinkage),
        (9, "spatial statistics oracles", c9_spatial),
        (10, "cross-validated model ordering on divisive data", c10_ordering),
    ];
    let mut failed = 0;
    for (k, name, f) in criteria {
        if !only.is_empty() && !only.contains(&k) {
            continue;
        }
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {k:>2} PASS  {name}  [{d}] ({secs:.1}s)"),
            Err(d) => {
                failed += 1;
                println!("criterion {k:>2} FAIL  {name}  [{d}] ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn random_paths(grid: &GridSpec, n_paths: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<Scanpath> {
    let e = grid.extent();
    (0..n_paths)
        .map(|k| {
            let fx = (0..len)
                .map(|_| {
                    Fixation::new(rng.gen_range(1e-6..e), rng.gen_range(1e-6..e), rng.gen_range(0.05..0.4)).unwrap()
                })
                .collect();
            Scanpath::new("s", "img", k as u32, fx).unwrap()
        })
        .collect()
}

fn c1_uniform() -> Outcome {
    let t = Instant::now();
    let grid = GridSpec::new(128, 0.25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let paths = random_paths(&grid, 200, 12, &mut rng);
    let trace = static_model_loglik(&paths, &Map::uniform(grid)).map_err(|e| e.to_string())?;
    let v = trace.per_fix_avg();
    let secs = t.elapsed().as_secs_f64();
    check(
        (v + 14.0).abs() < 1e-9 && secs < 1.0,
        format!("{v:.12} bits/fix over {} fixations in {secs:.3}s", trace.n_scored()),
    )
}

fn random_map(grid: &GridSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..grid.n_cells()).map(|_| rng.gen_range(0.01..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Normalized Gaussian weights at cell centers, optionally multiplied by a map.
fn gauss_target(grid: &GridSpec, c: (f64, f64), sigma: f64, weight: Option<&[f64]>) -> Vec<f64> {
    let l = grid.side();
    let d = grid.degrees_per_cell();
    let mut v = vec![0.0; l * l];
    for j in 0..l {
        for i in 0..l {
            let (x, y) = ((i as f64 + 0.5) * d, (j as f64 + 0.5) * d);
            let g = (-((x - c.0).powi(2) + (y - c.1).powi(2)) / (2.0 * sigma * sigma)).exp();
            v[j * l + i] = g * weight.map_or(1.0, |w| w[j * l + i]);
        }
    }
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn c2_euler() -> Outcome {
    // Explicit Euler at dt = 1e-5 carries a relative error of about ω²·t·dt/2
    // on the decaying part, so rates and durations are drawn where that stays
    // well under the tolerance.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let l = [8, 12, 16][rng.gen_range(0..3)];
        let grid = GridSpec::new(l, rng.gen_range(0.5..2.0)).unwrap();
        let p = ModelParams {
            omega_a: rng.gen_range(0.5..6.0),
            omega_f: rng.gen_range(0.5..6.0),
            sigma_a_prime: rng.gen_range(0.5..4.0),
            sigma_f_prime: rng.gen_range(0.5..4.0),
            gamma: rng.gen_range(0.5..4.0),
            lambda: rng.gen_range(0.5..2.0),
            c_f: 0.3,
            zeta: 0.05,
        };
        let e = grid.extent();
        let fix = Fixation::new(rng.gen_range(0.0..e), rng.gen_range(0.0..e), 0.2).unwrap();
        let a0 = random_map(&grid, &mut rng);
        let f0 = random_map(&grid, &mut rng);
        let sal = random_map(&grid, &mut rng);
        let t = rng.gen_range(0.05..0.3);

        let state = ModelState {
            attention: Map::new(grid, a0.clone()).unwrap(),
            inhibition: Map::new(grid, f0.clone()).unwrap(),
            current: fix,
        };
        let closed = evolve_maps(&state, &Map::new(grid, sal.clone()).unwrap(), t, &p).map_err(|e| e.to_string())?;

        let a_hat = gauss_target(&grid, fix.pos(), p.sigma_a_prime * p.lambda.sqrt(), Some(&sal));
        let f_hat = gauss_target(&grid, fix.pos(), p.sigma_f_prime * p.gamma.sqrt(), None);
        let steps = (t / 1e-5).round() as usize;
        let dt = t / steps as f64;
        let (mut a, mut f) = (a0, f0);
        for _ in 0..steps {
            for k in 0..a.len() {
                a[k] += dt * p.omega_a * (a_hat[k] - a[k]);
                f[k] += dt * p.omega_f * (f_hat[k] - f[k]);
            }
        }
        for (mine, euler) in [(closed.attention.values(), &a), (closed.inhibition.values(), &f)] {
            for (x, y) in mine.iter().zip(euler.iter()) {
                worst = worst.max((x - y).abs() / y.abs());
            }
        }
    }
    check(worst < 1e-4, format!("max relative error {worst:.2e} over 20 states"))
}

fn cell_of(grid: &GridSpec, x: f64, y: f64) -> usize {
    let d = grid.degrees_per_cell();
    let l = grid.side();
    let i = ((x / d).ceil() as usize).saturating_sub(1).min(l - 1);
    let j = ((y / d).ceil() as usize).saturating_sub(1).min(l - 1);
    j * l + i
}

/// Independent single-step computation of the next-fixation distribution.
fn oracle_pi(a: &[f64], f: &[f64], p: &ModelParams, v: &ModelVariant) -> Vec<f64> {
    let n = a.len() as f64;
    let al: Vec<f64> = a.iter().map(|x| x.powf(p.lambda)).collect();
    let sa: f64 = al.iter().sum();
    let u: Vec<f64> = match v.inhibition {
        Inhibition::None => al.iter().map(|x| x / sa).collect(),
        Inhibition::Subtractive => {
            let fg: Vec<f64> = f.iter().map(|x| x.powf(p.gamma)).collect();
            let sf: f64 = fg.iter().sum();
            al.iter().zip(&fg).map(|(x, y)| x / sa - p.c_f * y / sf).collect()
        }
        Inhibition::Divisive => al.iter().zip(f).map(|(x, y)| x / (p.c_f.powf(p.gamma) + y.powf(p.gamma))).collect(),
    };
    let pos: f64 = u.iter().map(|x| x.max(0.0)).sum();
    if pos <= 0.0 {
        return vec![1.0 / n; a.len()];
    }
    u.iter().map(|x| (1.0 - p.zeta) * x.max(0.0) / pos + p.zeta / n).collect()
}

fn c3_chain_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let grid = GridSpec::new([8, 16, 24][k % 3], rng.gen_range(0.5..1.5)).unwrap();
        let mut v = [ModelVariant::subtractive(), ModelVariant::divisive(), ModelVariant::no_inhibition()][(k / 3) % 3];
        if rng.gen_bool(0.3) {
            v = v.with_lambda(1.0);
        }
        let mut p = ModelParams {
            omega_a: rng.gen_range(1.0..50.0),
            omega_f: rng.gen_range(0.5..10.0),
            sigma_a_prime: rng.gen_range(0.5..6.0),
            sigma_f_prime: rng.gen_range(0.5..6.0),
            gamma: rng.gen_range(0.3..6.0),
            lambda: rng.gen_range(0.3..3.0),
            c_f: rng.gen_range(0.05..1.0),
            zeta: rng.gen_range(0.01..0.2),
        };
        v.apply_fixed(&mut p);
        let sal = Map::new(grid, random_map(&grid, &mut rng)).unwrap();
        let path = random_paths(&grid, 1, 5, &mut rng).remove(0);
        let replay = scanpath_loglik(&path, &sal, &p, &v).map_err(|e| e.to_string())?.total_log2();

        let n = grid.n_cells();
        let mut a = vec![1.0 / n as f64; n];
        let mut f = vec![1.0 / n as f64; n];
        let mut total = 0.0;
        for w in path.fixations.windows(2) {
            let (cur, next) = (w[0], w[1]);
            let a_hat = gauss_target(&grid, cur.pos(), p.sigma_a_prime * p.lambda.sqrt(), Some(sal.values()));
            let f_hat = gauss_target(&grid, cur.pos(), p.sigma_f_prime * p.gamma.sqrt(), None);
            let (da, df) = ((-p.omega_a * cur.duration).exp(), (-p.omega_f * cur.duration).exp());
            for c in 0..n {
                a[c] = a_hat[c] + da * (a[c] - a_hat[c]);
                f[c] = f_hat[c] + df * (f[c] - f_hat[c]);
            }
            let pi = oracle_pi(&a, &f, &p, &v);
            total += pi[cell_of(&grid, next.x, next.y)].log2();
        }
        worst = worst.max((total - replay).abs());
    }
    check(worst < 1e-12, format!("max |replay - product of single steps| = {worst:.2e} bits over 100 scanpaths"))
}

fn c4_floor() -> Outcome {
    let grid = GridSpec::new(128, 0.25).unwrap();
    let p = ModelParams::reference_fit();
    let v = ModelVariant::subtractive();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let floor = (p.zeta / 16384.0).log2();
    let mut lowest = f64::INFINITY;
    let mut count = 0usize;
    let per_path = 100;
    let mut k = 0u64;
    while count < 100_000 {
        let sal = random_saliency(&grid, 5, (1.0, 5.0), &mut rng).map_err(|e| e.to_string())?;
        let durations: Vec<f64> = (0..=per_path).map(|_| rng.gen_range(0.05..0.6)).collect();
        let sim = simulate_detailed(&sal, &p, &v, per_path + 1, &durations, k, &StartRule::Center)
            .map_err(|e| e.to_string())?;
        lowest = sim.realized_log2.iter().copied().fold(lowest, f64::min);
        count += sim.realized_log2.len();
        k += 1;
    }
    check(lowest >= floor - 1e-12, format!("lowest log2 p {lowest:.4} vs floor {floor:.4} over {count} fixations"))
}

fn c5_criteria() -> Outcome {
    let a = penalty_bits_per_fix(aic_penalty(8), 13_908);
    let b = penalty_bits_per_fix(bic_penalty(8, 13_306), 13_306);
    check((a - 0.0008).abs() <= 5e-5 && (b - 0.0041).abs() <= 5e-5, format!("AIC {a:.6} bits/fix, BIC {b:.6} bits/fix"))
}

fn c6_recovery() -> Outcome {
    let cfg = SynthConfig {
        grid_side: 64,
        degrees_per_cell: 0.5,
        n_subjects: 10,
        n_images: 10,
        fixations_per_trial: 51,
        seed: 11,
        ..Default::default()
    };
    let train = generate_synthetic(&cfg).map_err(|e| e.to_string())?;
    let held = generate_synthetic(&SynthConfig { seed: 12, ..cfg.clone() }).map_err(|e| e.to_string())?;
    let v = cfg.variant.0;
    let fc = FitConfig {
        genetic: GeneticConfig { population: 40, generations: 8, ..Default::default() },
        simplex: SimplexConfig { x_tol: 1e-2, f_tol: 1e-2, max_evals_per_dim: 60, ..Default::default() },
        restarts: 0,
        ..Default::default()
    };
    let fit = mle_fit(&train.trials, &train.saliency, &v, &fc).map_err(|e| e.to_string())?;
    let truth_held =
        dataset_loglik(&held.trials, &held.saliency, &cfg.params, &v).map_err(|e| e.to_string())?.per_fix_avg();
    let fit_held =
        dataset_loglik(&held.trials, &held.saliency, &fit.theta_hat, &v).map_err(|e| e.to_string())?.per_fix_avg();
    let gap = truth_held - fit_held;
    let mut bad = Vec::new();
    let mut rel = Vec::new();
    for id in [ParamId::SigmaAPrime, ParamId::SigmaFPrime, ParamId::OmegaF, ParamId::CF, ParamId::Zeta] {
        let r = fit.theta_hat.get(id) / cfg.params.get(id) - 1.0;
        rel.push(format!("{id} {:+.1}%", 100.0 * r));
        if r.abs() > 0.15 {
            bad.push(id.to_string());
        }
    }
    check(
        gap.abs() <= 0.05 && bad.is_empty(),
        format!(
            "{} scored fixations, held-out {fit_held:.4} vs generator {truth_held:.4} bits/fix; {}; {} evaluations",
            fit.n_scored,
            rel.join(", "),
            fit.evaluations
        ),
    )
}

fn c7_sampler() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    let gauss = FnDensity::new(1, |x: &[f64]| -0.5 * x[0] * x[0]);
    let prop = GaussianProposal::diagonal(&[2.4]).unwrap();
    let c = metropolis_hastings(&gauss, &prop, 100_000, &[0.0], 7).map_err(|e| e.to_string())?;
    let x = c.column(0);
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
    ok &= m.abs() < 0.05 && (var - 1.0).abs() < 0.1;
    notes.push(format!("N(0,1): mean {m:+.4}, var {var:.4}"));

    let chains: Vec<Vec<f64>> =
        (0..4).map(|k| metropolis_hastings(&gauss, &prop, 10_000, &[0.0], 100 + k).unwrap().column(0)).collect();
    let refs: Vec<&[f64]> = chains.iter().map(Vec::as_slice).collect();
    let r_same = rhat(&refs).map_err(|e| e.to_string())?;
    ok &= (0.99..=1.01).contains(&r_same);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let sep: Vec<Vec<f64>> =
        [0.0, 10.0].iter().map(|mu| (0..10_000).map(|_| mu + noise.sample(&mut rng)).collect()).collect();
    let refs: Vec<&[f64]> = sep.iter().map(Vec::as_slice).collect();
    let r_sep = rhat(&refs).map_err(|e| e.to_string())?;
    ok &= r_sep > 3.0;
    notes.push(format!("R-hat same {r_same:.4}, separated {r_sep:.2}"));

    let phi = 0.9;
    let innov = Normal::new(0.0, (1.0f64 - phi * phi).sqrt()).unwrap();
    let mut ar = Vec::with_capacity(100_000);
    let mut s = noise.sample(&mut rng);
    for _ in 0..100_000 {
        s = phi * s + innov.sample(&mut rng);
        ar.push(s);
    }
    let analytic = 100_000.0 * (1.0 - phi) / (1.0 + phi);
    let e = ess(&ar).map_err(|e| e.to_string())?;
    ok &= ((e - analytic) / analytic).abs() < 0.15;
    notes.push(format!("AR(1) ESS {e:.0} vs {analytic:.0}"));
    check(ok, notes.join("; "))
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn c8_shrinkage() -> Outcome {
    let cfg = SynthConfig {
        grid_side: 32,
        degrees_per_cell: 1.0,
        n_subjects: 12,
        n_images: 6,
        fixations_per_trial: 25,
        span_spread: Some(SpanSpread { log_sd_a: 0.3, log_sd_f: 0.3, rho: 0.5 }),
        seed: 8,
        ..Default::default()
    };
    let ds = generate_synthetic(&cfg).map_err(|e| e.to_string())?;
    let spec = HierarchicalSpec {
        shared: cfg.params,
        variant: cfg.variant,
        subject_step: 0.1,
        hyper_updates: 5,
        ..Default::default()
    };
    let by = ds.by_subject();
    let chain = gibbs_hierarchical(&spec, &by, &ds.saliency, 600, 8).map_err(|e| e.to_string())?;
    let spans = chain.posterior_mean_spans(200).map_err(|e| e.to_string())?;
    let lengths = predicted_saccade_lengths(&by, &ds.saliency, &cfg.params, &cfg.variant.0, &spans, 3, 80)
        .map_err(|e| e.to_string())?;
    let observed: Vec<f64> = lengths.values().map(|v| v.0).collect();
    let predicted: Vec<f64> = lengths.values().map(|v| v.1).collect();
    let b = slope(&observed, &predicted);
    let lo = observed.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = observed.iter().copied().fold(0.0, f64::max);
    check(
        b > 0.0 && b < 1.0,
        format!("slope {b:.3} over {} subjects (observed mean saccade {lo:.2}-{hi:.2} deg)", observed.len()),
    )
}

fn c9_spatial() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let g2 = GridSpec::new(2, 1.0).unwrap();
    let p = Map::new(g2, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
    let q = Map::new(g2, vec![0.25, 0.25, 0.5, 0.0]).unwrap();
    let kl_pp = kl_divergence(&p, &p).map_err(|e| e.to_string())?.nats;
    let kl_pq = kl_divergence(&p, &q).map_err(|e| e.to_string())?.nats;
    ok &= kl_pp == 0.0 && (kl_pq - std::f64::consts::LN_2).abs() < 1e-12;
    notes.push(format!("KL(p,p) {kl_pp}, KL(p,q) - ln2 {:.1e}", kl_pq - std::f64::consts::LN_2));

    let grid = GridSpec::new(64, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let poisson = random_paths(&grid, 250, 40, &mut rng);
    let radii: Vec<f64> = (1..=10).map(f64::from).collect();
    let pcf = pair_correlation(&poisson, &Map::uniform(grid), &radii, 0.5).map_err(|e| e.to_string())?;
    let dev = pcf.iter().map(|p| (p.g - 1.0).abs()).fold(0.0, f64::max);
    ok &= dev <= 0.1;
    notes.push(format!("Poisson max |g-1| {dev:.3}"));

    // Fixation density per image comes from a separate, larger simulation on
    // the same images: a density estimated from the scored paths themselves
    // is inflated at every fixation and drags g down at all radii.
    let params = ModelParams::reference_fit();
    let v = ModelVariant::subtractive();
    let mut sal = BTreeMap::new();
    for m in 0..10 {
        sal.insert(format!("img{m}"), random_saliency(&grid, 10, (3.0, 8.0), &mut rng).map_err(|e| e.to_string())?);
    }
    let simulate = |per_image: u64, offset: u64, rng: &mut ChaCha8Rng| -> Result<Vec<Scanpath>, String> {
        let mut out = Vec::new();
        for (m, (image, s)) in sal.iter().enumerate() {
            for r in 0..per_image {
                let durations: Vec<f64> = (0..20).map(|_| rng.gen_range(0.1..0.4)).collect();
                let seed = offset + 1000 * m as u64 + r;
                let mut path = simulate_detailed(s, &params, &v, 20, &durations, seed, &StartRule::Center)
                    .map_err(|e| e.to_string())?
                    .path;
                path.image = image.clone();
                out.push(path);
            }
        }
        Ok(out)
    };
    let paths = simulate(30, 0, &mut rng)?;
    let reference = simulate(300, 1 << 32, &mut rng)?;
    let mut dens = BTreeMap::new();
    let u = 1.0 / grid.n_cells() as f64;
    for image in sal.keys() {
        let kde = kde_density(reference.iter().filter(|p| &p.image == image).flat_map(|p| &p.fixations), 1.0, &grid)
            .map_err(|e| e.to_string())?;
        // Every step puts at least zeta of its mass uniformly.
        let mixed = kde.values().iter().map(|x| (1.0 - params.zeta) * x + params.zeta * u).collect();
        dens.insert(image.clone(), Map::new(grid, mixed).map_err(|e| e.to_string())?);
    }
    let small = pair_correlation_by_image(&paths, &dens, &[1.0, 1.5, 2.0, 2.5], 0.5).map_err(|e| e.to_string())?;
    let min_g = small.iter().map(|p| p.g).fold(f64::INFINITY, f64::min);
    ok &= min_g > 1.0;
    notes.push(format!("simulated min g(r<3) {min_g:.2}"));
    check(ok, notes.join("; "))
}

fn c10_ordering() -> Outcome {
    // In the divisive form c_F^γ sets the inhibition threshold, so the
    // subtractive reference values (c_F^γ ≈ 1e-20) would switch inhibition off.
    // Here c_F is at the mean of F (1e-3), well under its peak (~0.02).
    let params = ModelParams {
        omega_a: 20.0,
        omega_f: 1.0,
        sigma_a_prime: 5.9,
        sigma_f_prime: 3.0,
        gamma: 1.0,
        lambda: 0.8,
        c_f: 0.001,
        zeta: 0.07,
    };
    let cfg = SynthConfig {
        grid_side: 32,
        degrees_per_cell: 1.0,
        n_subjects: 15,
        n_images: 10,
        fixations_per_trial: 25,
        params,
        variant: scenewalk::params::ModelVariantName(ModelVariant::divisive()),
        seed: 10,
        ..Default::default()
    };
    let ds = generate_synthetic(&cfg).map_err(|e| e.to_string())?;
    let grid = GridSpec::new(32, 1.0).unwrap();
    let plan = CvPlan::for_dataset(&ds, 5, 10).map_err(|e| e.to_string())?;
    let mut cv = CvConfig::default();
    cv.fit.genetic = GeneticConfig { population: 30, generations: 8, ..Default::default() };
    cv.fit.simplex = SimplexConfig { x_tol: 1e-2, f_tol: 1e-2, max_evals_per_dim: 150, ..Default::default() };
    cv.fit.restarts = 1;
    cv.fit.seed = 10;
    let variants = [ModelVariant::divisive(), ModelVariant::no_inhibition()];
    let table = cross_validate(&ds, &variants, &plan, &cv, &grid, None).map_err(|e| e.to_string())?;
    let errors: Vec<&str> = table.cells.iter().filter_map(|c| c.error.as_deref()).collect();
    if !errors.is_empty() {
        return Err(format!("cell failures: {}", errors.join("; ")));
    }
    let means: BTreeMap<String, f64> = table.summaries().into_iter().map(|s| (s.model, s.mean_test)).collect();
    let div = means["divisive"];
    let others = ["uniform", "central_bias", "empirical_saliency", "none"];
    let ok = others.iter().all(|m| div >= means[*m]);
    let listing: Vec<String> = means.iter().map(|(m, v)| format!("{m} {v:.4}")).collect();
    check(ok, format!("mean test bits/fix: {}", listing.join(", ")))
}
