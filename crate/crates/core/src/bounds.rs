//! Closed-form bounds, each paired with the empirical quantity it dominates.

use std::f64::consts::SQRT_2;

use crate::classes::Sample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub value: f64,
    /// Short formula identifier, e.g. `kmeans`.
    pub formula: &'static str,
    pub inputs: Vec<(&'static str, f64)>,
    /// What the bound dominates.
    pub dominates: &'static str,
}

impl BoundResult {
    pub fn input(&self, name: &str) -> Option<f64> {
        self.inputs.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
    }
}

fn require(cond: bool, message: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(message()))
    }
}

/// `mean + (2/n)·R + √(9 ln(2/δ) / (2n))`: with probability `≥ 1 - δ` over
/// the sample, simultaneously for every `f` in a `[0,1]`-valued class.
pub fn theorem1_bound(empirical_mean: f64, complexity: f64, n: usize, delta: f64) -> Result<BoundResult> {
    require(n >= 1, || "n must be >= 1".into())?;
    require(delta > 0.0 && delta < 1.0, || format!("delta must lie in (0, 1), got {delta}"))?;
    require(complexity >= 0.0, || format!("complexity must be >= 0, got {complexity}"))?;
    let nf = n as f64;
    let value = empirical_mean + 2.0 * complexity / nf + (9.0 * (2.0 / delta).ln() / (2.0 * nf)).sqrt();
    Ok(BoundResult {
        value,
        formula: "theorem1",
        inputs: vec![("empirical_mean", empirical_mean), ("complexity", complexity), ("n", nf), ("delta", delta)],
        dominates: "true mean of every function in the class",
    })
}

/// `3√2·K·√n`, dominating the Rademacher complexity of the K-means loss
/// class for any sample in the unit ball.
pub fn kmeans_bound(k: usize, n: usize) -> Result<BoundResult> {
    require(k >= 1, || "K must be >= 1".into())?;
    require(n >= 1, || "n must be >= 1".into())?;
    let (kf, nf) = (k as f64, n as f64);
    Ok(BoundResult {
        value: 3.0 * SQRT_2 * kf * nf.sqrt(),
        formula: "kmeans",
        inputs: vec![("K", kf), ("n", nf)],
        dominates: "E sup_c sum_i eps_i min_k |x_i - c_k|^2",
    })
}

/// `B·√(K·Σ‖x_i‖²)`, dominating the vector complexity of the Frobenius ball
/// of radius `B` with `K` outputs.
pub fn frobenius_bound(radius: f64, sample: &Sample, k: usize) -> Result<BoundResult> {
    require(radius > 0.0, || format!("radius must be > 0, got {radius}"))?;
    let total = sample.sum_squared_norms();
    Ok(BoundResult {
        value: radius * (k as f64 * total).sqrt(),
        formula: "frobenius",
        inputs: vec![("B", radius), ("K", k as f64), ("sum_sq_norms", total)],
        dominates: "E sup_{|W|_F <= B} sum_ik eps_ik (W x_i)_k",
    })
}

/// `√2·L·B·(Σ_i tr κ(x_i, x_i))^{1/2}` for operator-valued kernels.
pub fn operator_kernel_bound(lipschitz: f64, radius: f64, traces: &[f64]) -> Result<BoundResult> {
    if let Some(i) = traces.iter().position(|t| t.is_nan() || *t < 0.0) {
        return Err(Error::Domain(format!("trace {i} is negative: {}", traces[i])));
    }
    require(lipschitz >= 0.0 && radius >= 0.0, || "L and B must be >= 0".into())?;
    let total: f64 = traces.iter().sum();
    Ok(BoundResult {
        value: SQRT_2 * lipschitz * radius * total.sqrt(),
        formula: "operator_kernel",
        inputs: vec![("L", lipschitz), ("B", radius), ("sum_traces", total)],
        dominates: "E sup_f sum_i eps_i h_i(f(x_i)) for the kernel ball",
    })
}

/// `√2·(L/√n)·meta`, dominating the learning-to-learn complexity given the
/// vector complexity `meta` of the feature maps over the meta-sample.
pub fn ltl_reduction_bound(lipschitz: f64, n: usize, meta_complexity: f64) -> Result<BoundResult> {
    require(n >= 1, || "n must be >= 1".into())?;
    require(meta_complexity >= 0.0, || format!("meta complexity must be >= 0, got {meta_complexity}"))?;
    require(lipschitz >= 0.0, || "L must be >= 0".into())?;
    let nf = n as f64;
    Ok(BoundResult {
        value: SQRT_2 * lipschitz / nf.sqrt() * meta_complexity,
        formula: "ltl_reduction",
        inputs: vec![("L", lipschitz), ("n", nf), ("meta_complexity", meta_complexity)],
        dominates: "E sup_h sum_t eps_t psi_t(h)",
    })
}
