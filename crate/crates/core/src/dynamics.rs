//! Activation-map dynamics: relaxation of the attention and inhibition maps
//! over a fixation, their combination into the selection potential, and the
//! next-target distribution.

use crate::error::{Error, Result};
use crate::grid::{Fixation, GridSpec, Map};
use crate::params::{Inhibition, ModelParams, ModelVariant};

/// Attention map, inhibition map, and the fixation the Gaussian inputs are
/// currently centred on.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub attention: Map,
    pub inhibition: Map,
    pub current: Fixation,
}

/// Both maps uniform with unit sum.
pub fn init_state(grid: &GridSpec, first: Fixation) -> ModelState {
    ModelState { attention: Map::uniform(*grid), inhibition: Map::uniform(*grid), current: first }
}

/// `σ = σ′·√exponent`.
pub fn reparam_sigma(sigma_prime: f64, exponent: f64) -> Result<f64> {
    if !(sigma_prime > 0.0 && exponent > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "span and exponent must be positive, got {sigma_prime} and {exponent}"
        )));
    }
    Ok(sigma_prime * exponent.sqrt())
}

/// Relaxes both maps towards their inputs over `duration` seconds with the
/// Gaussians centred on `state.current`:
/// `A(t) = Â + e^{−ω_A t}(A₀ − Â)`, `Â = G_A·S / Σ G_A·S`, and likewise for `F`
/// with `Ĝ_F = G_F / Σ G_F`.
pub fn evolve_maps(state: &ModelState, saliency: &Map, duration: f64, params: &ModelParams) -> Result<ModelState> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::InvalidArgument(format!("duration must be non-negative, got {duration}")));
    }
    let grid = *state.attention.grid();
    if saliency.grid().side() != grid.side() {
        return Err(Error::InvalidArgument("saliency map and state use different grids".into()));
    }
    params.validate()?;
    let mut next = state.clone();
    let mut stepper = Stepper::new(grid);
    let ModelState { attention, inhibition, current } = &mut next;
    stepper.evolve(
        attention.values_mut(),
        Some(inhibition.values_mut()),
        current.pos(),
        saliency.values(),
        duration,
        params,
    )?;
    Ok(next)
}

/// Selection potential from the current maps.
///
/// * subtractive: `u = A^λ/ΣA^λ − c_F·F^γ/ΣF^γ`
/// * divisive: `u = A^λ / (c_F^γ + F^γ)`
/// * none: `u = A^λ/ΣA^λ`
///
/// Powers are taken relative to the map maximum, so results stay finite for
/// large exponents. In the divisive form the exact values are returned when
/// they are representable; otherwise the map is rescaled by a positive
/// constant, which leaves the target distribution unchanged.
pub fn potential_u(state: &ModelState, params: &ModelParams, variant: &ModelVariant) -> Result<Map> {
    let grid = *state.attention.grid();
    let mut stepper = Stepper::new(grid);
    let mut out = vec![0.0; grid.n_cells()];
    stepper.potential(state.attention.values(), state.inhibition.values(), params, variant, &mut out)?;
    Ok(Map::from_raw(grid, out))
}

/// Next-target distribution with its degeneracy flag.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution {
    pub map: Map,
    /// The clipped potential had zero mass; the distribution is uniform.
    pub degenerate: bool,
}

/// `π = (1−ζ)·u*/Σu* + ζ/L²` with `u* = max(u, 0)`. A potential without any
/// positive mass yields the uniform distribution and sets `degenerate`.
pub fn target_distribution(u: &Map, zeta: f64) -> Result<TargetDistribution> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::InvalidParameter(format!("zeta must lie in (0, 1), got {zeta}")));
    }
    let n = u.values().len() as f64;
    let floor = zeta / n;
    let total = positive_mass(u.values());
    if !total.is_finite() {
        return Err(Error::NumericDomain { what: "target distribution", params: format!("zeta={zeta}") });
    }
    if total <= 0.0 {
        log::debug!("potential has no positive mass; using the uniform distribution");
        return Ok(TargetDistribution { map: Map::uniform(*u.grid()), degenerate: true });
    }
    let w = (1.0 - zeta) / total;
    let values = u.values().iter().map(|v| v.max(0.0) * w + floor).collect();
    Ok(TargetDistribution { map: Map::from_raw(*u.grid(), values), degenerate: false })
}

#[inline]
pub(crate) fn positive_mass(u: &[f64]) -> f64 {
    u.iter().map(|v| v.max(0.0)).sum()
}

/// Reusable buffers for stepping the maps of one grid.
pub(crate) struct Stepper {
    grid: GridSpec,
    gx: Vec<f64>,
    gy: Vec<f64>,
    tmp: Vec<f64>,
}

impl Stepper {
    pub(crate) fn new(grid: GridSpec) -> Self {
        let l = grid.side();
        Self { grid, gx: vec![0.0; l], gy: vec![0.0; l], tmp: vec![0.0; grid.n_cells()] }
    }

    /// In-place relaxation of `attn` (and `inhib` when given).
    pub(crate) fn evolve(
        &mut self,
        attn: &mut [f64],
        inhib: Option<&mut [f64]>,
        center: (f64, f64),
        saliency: &[f64],
        duration: f64,
        params: &ModelParams,
    ) -> Result<()> {
        let l = self.grid.side();
        let dpc = self.grid.degrees_per_cell();
        let (cx, cy) = (center.0 / dpc, center.1 / dpc);

        let decay_a = (-params.omega_a * duration).exp();
        if decay_a < 1.0 {
            shifted_profile(cx, params.sigma_a() / dpc, &mut self.gx);
            shifted_profile(cy, params.sigma_a() / dpc, &mut self.gy);
            let mut z = 0.0;
            for ((row, y), out) in saliency.chunks_exact(l).zip(&self.gy).zip(self.tmp.chunks_exact_mut(l)) {
                let mut acc = 0.0;
                for ((s, x), o) in row.iter().zip(&self.gx).zip(out.iter_mut()) {
                    let v = s * x;
                    *o = v;
                    acc += v;
                }
                z += acc * y;
            }
            let gain = 1.0 - decay_a;
            if z > 0.0 && z.is_finite() {
                let w = gain / z;
                for ((a_row, t_row), y) in attn.chunks_exact_mut(l).zip(self.tmp.chunks_exact(l)).zip(&self.gy) {
                    let wy = w * y;
                    for (a, t) in a_row.iter_mut().zip(t_row) {
                        *a = decay_a * *a + wy * t;
                    }
                }
            } else {
                // Saliency has no mass under the attention window: the input
                // reduces to the normalized Gaussian itself.
                let w = gain / (self.gx.iter().sum::<f64>() * self.gy.iter().sum::<f64>());
                relax_towards_separable(attn, decay_a, w, &self.gx, &self.gy);
            }
        }

        if let Some(inhib) = inhib {
            let decay_f = (-params.omega_f * duration).exp();
            if decay_f < 1.0 {
                shifted_profile(cx, params.sigma_f() / dpc, &mut self.gx);
                shifted_profile(cy, params.sigma_f() / dpc, &mut self.gy);
                let norm = self.gx.iter().sum::<f64>() * self.gy.iter().sum::<f64>();
                relax_towards_separable(inhib, decay_f, (1.0 - decay_f) / norm, &self.gx, &self.gy);
            }
        }
        Ok(())
    }

    /// Writes the potential into `out`.
    pub(crate) fn potential(
        &mut self,
        attn: &[f64],
        inhib: &[f64],
        params: &ModelParams,
        variant: &ModelVariant,
        out: &mut [f64],
    ) -> Result<()> {
        let lambda = params.lambda;
        let gamma = params.gamma;
        let c_f = params.c_f;
        if !(lambda > 0.0 && lambda.is_finite())
            || !(gamma > 0.0 && gamma.is_finite())
            || !(c_f >= 0.0 && c_f.is_finite())
        {
            return Err(numeric_error("potential", params));
        }
        match variant.inhibition {
            Inhibition::None => {
                power_normalized(attn, lambda, out);
            }
            Inhibition::Subtractive => {
                power_normalized(attn, lambda, out);
                if c_f > 0.0 {
                    power_normalized(inhib, gamma, &mut self.tmp);
                    for (o, f) in out.iter_mut().zip(&self.tmp) {
                        *o -= c_f * f;
                    }
                }
            }
            Inhibition::Divisive => divisive(attn, inhib, lambda, gamma, c_f, out),
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(numeric_error("potential", params));
        }
        Ok(())
    }
}

fn numeric_error(what: &'static str, params: &ModelParams) -> Error {
    Error::NumericDomain { what, params: params.to_string() }
}

/// `x ← d·x + w·gx[i]·gy[j]`.
fn relax_towards_separable(x: &mut [f64], decay: f64, w: f64, gx: &[f64], gy: &[f64]) {
    let l = gx.len();
    for (row, y) in x.chunks_exact_mut(l).zip(gy) {
        let wy = w * y;
        for (v, g) in row.iter_mut().zip(gx) {
            *v = decay * *v + wy * g;
        }
    }
}

/// Gaussian profile over cell centers scaled so that its largest entry is 1.
/// Normalized inputs do not depend on the scale, and the shift keeps very
/// narrow Gaussians from underflowing to all zeros.
pub(crate) fn shifted_profile(center: f64, sigma: f64, out: &mut [f64]) {
    let nearest = (center - 0.5).round().clamp(0.0, (out.len() - 1) as f64) + 0.5;
    let d0 = nearest - center;
    let inv = -0.5 / (sigma * sigma);
    for (k, o) in out.iter_mut().enumerate() {
        let d = k as f64 + 0.5 - center;
        *o = ((d * d - d0 * d0) * inv).exp();
    }
}

/// `out = x^e / Σ x^e`, with zeros mapped to zero.
pub(crate) fn power_normalized(x: &[f64], e: f64, out: &mut [f64]) {
    if e == 1.0 {
        let s: f64 = x.iter().sum();
        let inv = 1.0 / s;
        for (o, v) in out.iter_mut().zip(x) {
            *o = v * inv;
        }
        return;
    }
    let m = x.iter().copied().fold(0.0, f64::max);
    let inv_m = 1.0 / m;
    let mut s = 0.0;
    for (o, v) in out.iter_mut().zip(x) {
        let p = if *v > 0.0 { (v * inv_m).powf(e) } else { 0.0 };
        *o = p;
        s += p;
    }
    let inv = 1.0 / s;
    for o in out.iter_mut() {
        *o *= inv;
    }
}

fn divisive(attn: &[f64], inhib: &[f64], lambda: f64, gamma: f64, c_f: f64, out: &mut [f64]) {
    let a_max = attn.iter().copied().fold(0.0, f64::max);
    let f_max = inhib.iter().copied().fold(0.0, f64::max);
    // Scale s with max(c_F, F) = s, so the larger denominator term is ≤ 1.
    let s = c_f.max(f_max);
    let c_term = (c_f / s).powf(gamma);
    let mut ok = true;
    for ((o, a), f) in out.iter_mut().zip(attn).zip(inhib) {
        let num = if *a <= 0.0 {
            0.0
        } else if lambda == 1.0 {
            a / a_max
        } else {
            (a / a_max).powf(lambda)
        };
        let den = c_term + if gamma == 1.0 { f / s } else { (f / s).powf(gamma) };
        if den > 0.0 {
            *o = num / den;
        } else {
            ok = false;
            break;
        }
    }
    // log u of the exact value = log(out) + λ·ln(a_max) − γ·ln(s)
    let mut log_scale = lambda * a_max.ln() - gamma * s.ln();
    if !ok {
        divisive_log_domain(attn, inhib, lambda, gamma, c_f, out);
        log_scale = 0.0;
    }
    let max = out.iter().copied().fold(0.0, f64::max);
    if max > 0.0 && (max.ln() + log_scale).abs() < 700.0 {
        let k = log_scale.exp();
        for o in out.iter_mut() {
            *o *= k;
        }
    }
}

/// Per-cell log-sum-exp fallback for denominators that underflow.
fn divisive_log_domain(attn: &[f64], inhib: &[f64], lambda: f64, gamma: f64, c_f: f64, out: &mut [f64]) {
    let ln_c = gamma * c_f.ln();
    for ((o, a), f) in out.iter_mut().zip(attn).zip(inhib) {
        let ln_f = gamma * f.ln();
        let hi = ln_c.max(ln_f);
        let lo = ln_c.min(ln_f);
        let ln_den = if hi == f64::NEG_INFINITY { hi } else { hi + (lo - hi).exp().ln_1p() };
        *o = lambda * a.ln() - ln_den;
    }
    let m = out.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    for o in out.iter_mut() {
        *o = if o.is_nan() || *o == f64::NEG_INFINITY { 0.0 } else { (*o - m).exp() };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gaussian_map;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec {
        GridSpec::new(32, 0.5).unwrap()
    }

    fn fix(x: f64, y: f64) -> Fixation {
        Fixation::new(x, y, 0.25).unwrap()
    }

    fn random_prob_map(grid: GridSpec, rng: &mut ChaCha8Rng) -> Map {
        Map::new(grid, (0..grid.n_cells()).map(|_| rng.gen_range(0.05..1.0)).collect()).unwrap().normalized().unwrap()
    }

    fn params() -> ModelParams {
        ModelParams {
            omega_a: 3.0,
            omega_f: 1.5,
            sigma_a_prime: 2.0,
            sigma_f_prime: 1.5,
            gamma: 2.0,
            lambda: 0.8,
            c_f: 0.4,
            zeta: 0.05,
        }
    }

    #[test]
    fn init_is_uniform() {
        let g = GridSpec::new(128, 0.25).unwrap();
        let s = init_state(&g, fix(16.0, 16.0));
        assert!(s.attention.values().iter().all(|v| *v == 1.0 / 16384.0));
        assert!((s.attention.sum() - 1.0).abs() < 1e-12);
        assert!((s.inhibition.sum() - 1.0).abs() < 1e-12);
        assert_eq!(s, init_state(&g, fix(16.0, 16.0)));
    }

    #[test]
    fn zero_duration_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = grid();
        let sal = random_prob_map(g, &mut rng);
        let s = init_state(&g, fix(3.0, 4.0));
        let s2 = evolve_maps(&s, &sal, 0.0, &params()).unwrap();
        assert_eq!(s, s2);
        assert!(evolve_maps(&s, &sal, -1.0, &params()).is_err());
    }

    #[test]
    fn long_duration_reaches_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = grid();
        let sal = random_prob_map(g, &mut rng);
        let p = params();
        let s = init_state(&g, fix(5.0, 9.0));
        let s2 = evolve_maps(&s, &sal, 60.0 / p.omega_f.min(p.omega_a), &p).unwrap();
        let ga = gaussian_map((5.0, 9.0), p.sigma_a(), &g).unwrap();
        let prod: Vec<f64> = ga.values().iter().zip(sal.values()).map(|(a, b)| a * b).collect();
        let z: f64 = prod.iter().sum();
        for (a, t) in s2.attention.values().iter().zip(&prod) {
            assert!((a - t / z).abs() < 1e-15);
        }
    }

    #[test]
    fn sums_conserved_and_semigroup() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = grid();
        let sal = random_prob_map(g, &mut rng);
        let p = params();
        let s = init_state(&g, fix(7.0, 2.0));
        let a = evolve_maps(&s, &sal, 0.13, &p).unwrap();
        let ab = evolve_maps(&a, &sal, 0.29, &p).unwrap();
        let direct = evolve_maps(&s, &sal, 0.42, &p).unwrap();
        assert!((ab.attention.sum() - 1.0).abs() < 1e-9);
        assert!((ab.inhibition.sum() - 1.0).abs() < 1e-9);
        for (x, y) in ab.attention.values().iter().zip(direct.attention.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in ab.inhibition.values().iter().zip(direct.inhibition.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn potential_reduces_to_attention() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = grid();
        let sal = random_prob_map(g, &mut rng);
        let mut p = params();
        let s = evolve_maps(&init_state(&g, fix(2.0, 2.0)), &sal, 0.3, &p).unwrap();
        p.lambda = 1.0;
        p.c_f = 0.0;
        let u = potential_u(&s, &p, &ModelVariant::subtractive()).unwrap();
        for (x, y) in u.values().iter().zip(s.attention.values()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn potential_vanishes_for_matched_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = grid();
        let m = random_prob_map(g, &mut rng);
        let s = ModelState { attention: m.clone(), inhibition: m, current: fix(1.0, 1.0) };
        let p = ModelParams { c_f: 1.0, lambda: 1.7, gamma: 1.7, ..params() };
        let u = potential_u(&s, &p, &ModelVariant::subtractive()).unwrap();
        assert!(u.values().iter().all(|v| v.abs() < 1e-15));
        let t = target_distribution(&u, 0.1).unwrap();
        assert!(t.degenerate);
    }

    #[test]
    fn reference_fit_potential_changes_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = GridSpec::new(64, 0.5).unwrap();
        let sal = random_prob_map(g, &mut rng);
        let p = ModelParams::reference_fit();
        let mut s = init_state(&g, fix(10.0, 10.0));
        for &(x, y) in &[(10.0, 10.0), (20.0, 12.0), (14.0, 25.0)] {
            s.current = fix(x, y);
            s = evolve_maps(&s, &sal, 0.3, &p).unwrap();
        }
        let u = potential_u(&s, &p, &ModelVariant::subtractive()).unwrap();
        assert!(u.min() < 0.0 && u.max() > 0.0);
        assert!(positive_mass(u.values()) > 0.0);
    }

    #[test]
    fn divisive_and_none_are_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = grid();
        let sal = random_prob_map(g, &mut rng);
        let p = ModelParams { gamma: 45.0, c_f: 0.3, ..params() };
        let s = evolve_maps(&init_state(&g, fix(4.0, 4.0)), &sal, 0.3, &p).unwrap();
        for v in [ModelVariant::divisive(), ModelVariant::no_inhibition()] {
            let u = potential_u(&s, &p, &v).unwrap();
            assert!(u.min() >= 0.0);
            assert!(u.max() > 0.0);
        }
    }

    #[test]
    fn divisive_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = grid();
        let sal = random_prob_map(g, &mut rng);
        let p = ModelParams { gamma: 2.5, c_f: 0.01, lambda: 0.9, ..params() };
        let s = evolve_maps(&init_state(&g, fix(4.0, 4.0)), &sal, 0.3, &p).unwrap();
        let u = potential_u(&s, &p, &ModelVariant::divisive()).unwrap();
        for ((x, a), f) in u.values().iter().zip(s.attention.values()).zip(s.inhibition.values()) {
            let direct = a.powf(p.lambda) / (p.c_f.powf(p.gamma) + f.powf(p.gamma));
            assert!((x - direct).abs() <= 1e-10 * direct, "{x} vs {direct}");
        }
    }

    #[test]
    fn divisive_survives_underflowing_denominators() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = grid();
        let sal = random_prob_map(g, &mut rng);
        let p = ModelParams { gamma: 900.0, c_f: 1e-6, omega_f: 50.0, sigma_f_prime: 0.1, ..params() };
        let s = evolve_maps(&init_state(&g, fix(4.0, 4.0)), &sal, 2.0, &p).unwrap();
        let u = potential_u(&s, &p, &ModelVariant::divisive()).unwrap();
        assert!(u.values().iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!(u.max() > 0.0);
    }

    #[test]
    fn target_floor_and_uniform_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = grid();
        let u = Map::new(g, (0..g.n_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let t = target_distribution(&u, 0.0722).unwrap();
        assert!(!t.degenerate);
        assert!((t.map.sum() - 1.0).abs() < 1e-12);
        assert!(t.map.min() >= 0.0722 / g.n_cells() as f64);
        let t = target_distribution(&u, 1.0 - 1e-12).unwrap();
        for v in t.map.values() {
            assert!((v - 1.0 / g.n_cells() as f64).abs() < 1e-12);
        }
        assert!(target_distribution(&u, 0.0).is_err());
        assert!(target_distribution(&u, 1.0).is_err());
    }

    #[test]
    fn floor_value_at_reference_zeta() {
        let floor: f64 = 0.0722 / 16384.0;
        assert!((floor - 4.4067e-6).abs() < 1e-9);
    }

    #[test]
    fn target_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = grid();
        let u = Map::new(g, (0..g.n_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let scaled = Map::new(g, u.values().iter().map(|v| v * 37.5).collect()).unwrap();
        let a = target_distribution(&u, 0.2).unwrap();
        let b = target_distribution(&scaled, 0.2).unwrap();
        for (x, y) in a.map.values().iter().zip(b.map.values()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn reparam_examples() {
        assert_eq!(reparam_sigma(3.0, 1.0).unwrap(), 3.0);
        assert_eq!(reparam_sigma(2.0, 4.0).unwrap(), 4.0);
        assert!(reparam_sigma(0.0, 1.0).is_err());
    }

    #[test]
    fn powered_gaussian_has_primed_width() {
        // A Gaussian of width σ raised to power e is a Gaussian of width σ/√e.
        let g = GridSpec::new(96, 0.25).unwrap();
        let (sigma_prime, e) = (1.5, 3.0);
        let sigma = reparam_sigma(sigma_prime, e).unwrap();
        let wide = gaussian_map(g.center(), sigma, &g).unwrap();
        let mut powered = vec![0.0; g.n_cells()];
        power_normalized(wide.values(), e, &mut powered);
        let narrow = gaussian_map(g.center(), sigma_prime, &g).unwrap().normalized().unwrap();
        let (cx, cy) = g.center();
        for j in 0..g.side() {
            for i in 0..g.side() {
                let (x, y) = g.cell_center(i, j);
                if (x - cx).hypot(y - cy) > 4.0 * sigma_prime {
                    continue;
                }
                let (a, b) = (powered[g.index(i, j)], narrow.get(i, j));
                assert!((a - b).abs() <= 1e-10 * b, "({i},{j}) {a} vs {b}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn maps_keep_unit_sum_and_target_keeps_its_floor(
            seed in any::<u64>(),
            x in 0.0f64..16.0,
            y in 0.0f64..16.0,
            duration in 0.0f64..2.0,
            omega_a in 0.1f64..200.0,
            gamma in 0.1f64..60.0,
            lambda in 0.1f64..5.0,
            zeta in 1e-4f64..0.5,
            kind in 0usize..3,
        ) {
            let g = grid();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = ModelParams { omega_a, gamma, lambda, zeta, ..params() };
            let v = [ModelVariant::subtractive(), ModelVariant::divisive(), ModelVariant::no_inhibition()][kind];
            let state = ModelState { attention: random_prob_map(g, &mut rng), inhibition: random_prob_map(g, &mut rng), current: fix(x, y) };
            let next = evolve_maps(&state, &random_prob_map(g, &mut rng), duration, &p).unwrap();
            prop_assert!((next.attention.sum() - 1.0).abs() < 1e-9);
            prop_assert!((next.inhibition.sum() - 1.0).abs() < 1e-9);
            prop_assert!(next.attention.min() >= 0.0 && next.inhibition.min() >= 0.0);
            let u = potential_u(&next, &p, &v).unwrap();
            let pi = target_distribution(&u, zeta).unwrap();
            let floor = zeta / g.n_cells() as f64;
            prop_assert!((pi.map.sum() - 1.0).abs() < 1e-9);
            prop_assert!(pi.map.min() >= floor * (1.0 - 1e-12));
        }
    }
}
