//! Multi-restart projected subgradient ascent for `sup_θ Σ_i σ_i h_i(f_θ(x_i))`
//! over a convex parameter set. The result is a lower bound on the supremum.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::lipschitz::LipschitzLoss;
use crate::rng::draw_stream;

#[derive(Debug, Clone, PartialEq)]
pub struct AscentConfig {
    pub restarts: usize,
    pub steps: usize,
    /// Step size at iteration `t` is `step / √t` on the `1/n`-scaled objective.
    pub step: f64,
    /// Stop a restart once the objective moves by less than this.
    pub tolerance: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            restarts: 16,
            steps: 200,
            step: 0.1,
            tolerance: 1e-8,
        }
    }
}

/// A parametrized class `θ ↦ (f_θ(x_1), …, f_θ(x_n))` with outputs in `R^K`.
pub(crate) trait Parametric {
    fn n(&self) -> usize;
    fn k(&self) -> usize;
    fn param_len(&self) -> usize;
    fn project(&self, theta: &mut [f64]);
    fn random_start(&self, rng: &mut ChaCha8Rng, theta: &mut [f64]);
    /// `f_θ(x_i)` into `out`.
    fn output(&self, theta: &[f64], i: usize, out: &mut [f64]);
    /// `grad += J_i(θ)^T g`, with `J_i` the Jacobian of `θ ↦ f_θ(x_i)`.
    fn pullback(&self, theta: &[f64], i: usize, g: &[f64], grad: &mut [f64]);
}

pub(crate) struct Optimum {
    pub value: f64,
    pub theta: Vec<f64>,
}

pub(crate) fn maximize(
    model: &impl Parametric,
    signs: &[f64],
    losses: &[LipschitzLoss],
    seed: u64,
    config: &AscentConfig,
) -> Optimum {
    let p = model.param_len();
    let mut best = Optimum {
        value: f64::NEG_INFINITY,
        theta: vec![0.0; p],
    };
    let mut theta = vec![0.0; p];
    for restart in 0..config.restarts.max(1) {
        let mut rng = draw_stream(seed, restart as u64);
        model.random_start(&mut rng, &mut theta);
        climb(model, &mut theta, signs, losses, config.steps, config, &mut best);
    }
    best
}

/// One projected subgradient run from `theta`, updating `best` with every
/// iterate visited.
pub(crate) fn climb(
    model: &impl Parametric,
    theta: &mut [f64],
    signs: &[f64],
    losses: &[LipschitzLoss],
    steps: usize,
    config: &AscentConfig,
    best: &mut Optimum,
) {
    let n = model.n();
    let scale = 1.0 / n as f64;
    let mut u = vec![0.0; model.k()];
    let mut g = vec![0.0; model.k()];
    let mut grad = vec![0.0; theta.len()];
    model.project(theta);
    let mut previous = f64::NAN;
    for t in 1..=steps + 1 {
        grad.iter_mut().for_each(|x| *x = 0.0);
        let mut value = 0.0;
        for i in 0..n {
            model.output(theta, i, &mut u);
            value += signs[i] * losses[i].value(&u);
            losses[i].subgradient(&u, &mut g);
            g.iter_mut().for_each(|x| *x *= signs[i] * scale);
            model.pullback(theta, i, &g, &mut grad);
        }
        if value > best.value {
            best.value = value;
            best.theta.copy_from_slice(theta);
        }
        let scaled = value * scale;
        if t > steps || (scaled - previous).abs() < config.tolerance {
            break;
        }
        previous = scaled;
        let eta = config.step / (t as f64).sqrt();
        theta.iter_mut().zip(&grad).for_each(|(x, d)| *x += eta * d);
        model.project(theta);
    }
}

/// Uniform point of the unit ball in `R^m`, scaled by `radius`.
pub(crate) fn uniform_in_ball(rng: &mut ChaCha8Rng, radius: f64, out: &mut [f64]) {
    use rand_distr::{Distribution, StandardNormal};
    out.iter_mut().for_each(|x| *x = StandardNormal.sample(rng));
    let r = crate::numeric::norm(out);
    let target = radius * rng.random::<f64>().powf(1.0 / out.len().max(1) as f64);
    if r > 0.0 {
        out.iter_mut().for_each(|x| *x *= target / r);
    }
}

/// Radial projection onto the ball of the given radius.
pub(crate) fn project_ball(v: &mut [f64], radius: f64) {
    let r = crate::numeric::norm(v);
    if r > radius {
        v.iter_mut().for_each(|x| *x *= radius / r);
    }
}
