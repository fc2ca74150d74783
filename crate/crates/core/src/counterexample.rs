//! The orthonormal construction showing that
//! `E sup_T Σ_i ε_i ‖T x_i‖ ≤ K · E sup_T ‖Σ_i ε_i T x_i‖` fails for every
//! fixed `K`, with `T` ranging over contractions and `x_i = e_i`.
//!
//! The left side is `n/2`: for each sign pattern the best contraction is the
//! projection onto `span{e_i : ε_i = 1}`. The right side is `√n`: the identity
//! is optimal and `‖Σ ε_i e_i‖ = √n` for every pattern.

use crate::error::{Error, Result};
use crate::estimator::{ComplexityEstimate, EstimateMethod, ExpectationEngine};
use crate::subgaussian::SubgaussianDist;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleInstance {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

pub fn counterexample_instance(n: usize) -> Result<CounterexampleInstance> {
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    let lhs = n as f64 / 2.0;
    let rhs = (n as f64).sqrt();
    Ok(CounterexampleInstance {
        n,
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

/// Least `n ≤ n_max` with `n/2 > K·√n`, i.e. `n > 4K²`.
pub fn refute_conjecture(k: f64, n_max: usize) -> Result<Option<usize>> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Domain(format!("candidate constant must be > 0, got {k}")));
    }
    let exceeds = |n: usize| n as f64 / 2.0 > k * (n as f64).sqrt();
    let mut n = ((4.0 * k * k).floor() as usize).saturating_add(1).max(1);
    // correct for rounding in 4K² near integers
    while n > 1 && exceeds(n - 1) {
        n -= 1;
    }
    while !exceeds(n) {
        n += 1;
    }
    Ok((n <= n_max).then_some(n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck {
    pub instance: CounterexampleInstance,
    /// Average over sign patterns of `|{i : ε_i = 1}|`.
    pub lhs: ComplexityEstimate,
    /// Average over sign patterns of `‖Σ ε_i e_i‖`.
    pub rhs: ComplexityEstimate,
}

impl CrossCheck {
    /// Exact agreement to `1e-12`, or within 3 standard errors.
    pub fn agrees(&self) -> bool {
        let ok = |e: &ComplexityEstimate, target: f64| match e.method {
            EstimateMethod::Exact => (e.mean - target).abs() <= 1e-12,
            EstimateMethod::MonteCarlo => (e.mean - target).abs() <= 3.0 * e.std_error + 1e-12,
        };
        ok(&self.lhs, self.instance.lhs) && ok(&self.rhs, self.instance.rhs)
    }
}

/// Recompute both sides by averaging the per-pattern suprema over
/// enumerated or sampled sign patterns.
pub fn counterexample_mc_crosscheck(n: usize, engine: &ExpectationEngine) -> Result<CrossCheck> {
    let instance = counterexample_instance(n)?;
    let engine = engine.with_dist(SubgaussianDist::rademacher());
    let mut est = engine.expect_many(n, 2, |signs, _, out| {
        out[0] = signs.iter().filter(|&&s| s > 0.0).count() as f64;
        out[1] = signs.iter().map(|s| s * s).sum::<f64>().sqrt();
    })?;
    let rhs = est.pop().expect("two outputs");
    let lhs = est.pop().expect("two outputs");
    Ok(CrossCheck { instance, lhs, rhs })
}
