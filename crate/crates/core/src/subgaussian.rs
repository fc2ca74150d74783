//! Symmetric sub-gaussian laws, their tail bounds and Khintchine-type
//! lower-bound constants.
//!
//! A real variable `X` is sub-gaussian with parameter `b` when
//! `E exp(λX) ≤ exp(λ²b²/2)` for every real `λ`. For iid copies `X_k` and a
//! unit vector `v` this gives the two-sided tail bound
//! `P(|Σ v_k X_k| > t) ≤ 2 exp(-t²/(2b²))`, and from the fourth-moment bound
//! a constant `C` with `‖v‖ ≤ C·E|Σ X_k v_k|`.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::contraction::VerificationReport;
use crate::error::{Error, Result};
use crate::estimator::{ComplexityEstimate, ExpectationEngine};
use crate::numeric::{norm, simpson};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistKind {
    Rademacher,
    StandardNormal,
    /// Uniform on `[-halfwidth, halfwidth]`.
    UniformSymmetric { halfwidth: f64 },
}

/// A symmetric sub-gaussian law together with its parameter `b` and second
/// moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgaussianDist {
    kind: DistKind,
    b: f64,
    second_moment: f64,
}

impl SubgaussianDist {
    pub fn rademacher() -> Self {
        SubgaussianDist {
            kind: DistKind::Rademacher,
            b: 1.0,
            second_moment: 1.0,
        }
    }

    pub fn standard_normal() -> Self {
        SubgaussianDist {
            kind: DistKind::StandardNormal,
            b: 1.0,
            second_moment: 1.0,
        }
    }

    /// Uniform on `[-a, a]`, with the Hoeffding parameter `b = a`.
    pub fn uniform_symmetric(halfwidth: f64) -> Result<Self> {
        if !halfwidth.is_finite() || halfwidth < 0.0 {
            return Err(Error::Domain(format!(
                "uniform halfwidth must be finite and non-negative, got {halfwidth}"
            )));
        }
        if halfwidth == 0.0 {
            return Err(Error::TrivialDistribution);
        }
        Ok(SubgaussianDist {
            kind: DistKind::UniformSymmetric { halfwidth },
            b: halfwidth,
            second_moment: halfwidth * halfwidth / 3.0,
        })
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    /// Sub-gaussian parameter `b`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// `E[X²]`.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn is_rademacher(&self) -> bool {
        matches!(self.kind, DistKind::Rademacher)
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DistKind::Rademacher => {
                if rng.next_u32() & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            DistKind::StandardNormal => rng.sample(StandardNormal),
            DistKind::UniformSymmetric { halfwidth } => {
                halfwidth * (2.0 * rng.random::<f64>() - 1.0)
            }
        }
    }

    /// Fill `out` with iid draws. Rademacher signs are taken 64 to a word.
    pub fn fill<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self.kind {
            DistKind::Rademacher => {
                for chunk in out.chunks_mut(64) {
                    let bits = rng.next_u64();
                    for (j, x) in chunk.iter_mut().enumerate() {
                        *x = if (bits >> j) & 1 == 0 { 1.0 } else { -1.0 };
                    }
                }
            }
            _ => {
                for x in out.iter_mut() {
                    *x = self.sample(rng);
                }
            }
        }
    }

    /// `E exp(λX)`, by enumeration (Rademacher) or Simpson quadrature.
    pub fn mgf(&self, lambda: f64) -> f64 {
        match self.kind {
            DistKind::Rademacher => 0.5 * (lambda.exp() + (-lambda).exp()),
            DistKind::StandardNormal => {
                let density = |x: f64| (lambda * x - 0.5 * x * x).exp() / (2.0 * PI).sqrt();
                simpson(density, lambda - 30.0, lambda + 30.0, 6000)
            }
            DistKind::UniformSymmetric { halfwidth } => {
                let a = halfwidth;
                simpson(|x| (lambda * x).exp() / (2.0 * a), -a, a, 2000)
            }
        }
    }

    /// Largest relative excess `E exp(λX) / exp(λ²b²/2) - 1` over the grid.
    /// Non-positive (up to quadrature error) when `b` is a valid parameter.
    pub fn mgf_excess(&self, lambdas: &[f64]) -> f64 {
        lambdas
            .iter()
            .map(|&l| self.mgf(l) / (0.5 * l * l * self.b * self.b).exp() - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Parse `rademacher`, `normal` / `gaussian`, or `uniform:<halfwidth>`.
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim();
        match name {
            "rademacher" => Ok(Self::rademacher()),
            "normal" | "gaussian" | "standard-normal" => Ok(Self::standard_normal()),
            _ => {
                if let Some(a) = name.strip_prefix("uniform:") {
                    let a: f64 = a
                        .parse()
                        .map_err(|_| Error::Config(format!("bad uniform halfwidth {a:?}")))?;
                    Self::uniform_symmetric(a)
                } else if name == "uniform" {
                    Self::uniform_symmetric(1.0)
                } else {
                    Err(Error::Config(format!("unknown distribution {name:?}")))
                }
            }
        }
    }
}

impl fmt::Display for SubgaussianDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DistKind::Rademacher => write!(f, "rademacher"),
            DistKind::StandardNormal => write!(f, "normal"),
            DistKind::UniformSymmetric { halfwidth } => write!(f, "uniform:{halfwidth}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantMode {
    BestKnown,
    GenericFormula,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KhintchineConstant {
    pub value: f64,
    pub provenance: ConstantMode,
}

/// Constant `C` with `‖v‖ ≤ C·E|Σ X_k v_k|` for every `v`.
///
/// `BestKnown` gives `√2` for signs and `√(π/2)` for Gaussians; other laws
/// fall back to the generic `4b²/E[X²]^{3/2}`, the closed form of
/// `(8∫₀^∞ t³ exp(-t²/(2b²)) dt)^{1/2} / E[X²]^{3/2}`.
pub fn khintchine_constant(dist: &SubgaussianDist, mode: ConstantMode) -> Result<KhintchineConstant> {
    if dist.second_moment <= 0.0 {
        return Err(Error::TrivialDistribution);
    }
    if mode == ConstantMode::BestKnown {
        match dist.kind {
            DistKind::Rademacher => {
                return Ok(KhintchineConstant {
                    value: 2f64.sqrt(),
                    provenance: ConstantMode::BestKnown,
                })
            }
            DistKind::StandardNormal => {
                return Ok(KhintchineConstant {
                    value: (PI / 2.0).sqrt(),
                    provenance: ConstantMode::BestKnown,
                })
            }
            DistKind::UniformSymmetric { .. } => {}
        }
    }
    Ok(KhintchineConstant {
        value: 4.0 * dist.b * dist.b / dist.second_moment.powf(1.5),
        provenance: ConstantMode::GenericFormula,
    })
}

/// `2·exp(-t²/(2b²))`, the bound on `P(|Σ v_k X_k| > t)` for unit `v`.
pub fn tail_bound(t: f64, b: f64) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("threshold must be >= 0, got {t}")));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Domain(format!("sub-gaussian parameter must be > 0, got {b}")));
    }
    Ok(2.0 * (-t * t / (2.0 * b * b)).exp())
}

/// Estimate `E|Σ X_k v_k|` with the engine's method.
pub fn expected_abs_sum(v: &[f64], dist: &SubgaussianDist, engine: &ExpectationEngine) -> Result<ComplexityEstimate> {
    engine
        .with_dist(*dist)
        .expect(v.len(), |x, _| x.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().abs())
}

/// Check `‖v‖ ≤ C·E|Σ X_k v_k|` with the best known constant for `dist`.
///
/// Signs in dimension ≤ 20 are enumerated exactly when the engine allows it;
/// otherwise the expectation is a Monte Carlo estimate and the verdict uses
/// ±3 standard errors.
pub fn khintchine_lower_check(
    v: &[f64],
    dist: &SubgaussianDist,
    engine: &ExpectationEngine,
) -> Result<VerificationReport> {
    let len = norm(v);
    if len == 0.0 {
        return Err(Error::ZeroVector);
    }
    let constant = khintchine_constant(dist, ConstantMode::BestKnown)?;
    let rhs = expected_abs_sum(v, dist, engine)?;
    Ok(VerificationReport::judge(
        ComplexityEstimate::exact(len),
        rhs,
        constant.value,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialSumRow {
    /// Truncation size `K`; the row covers indices `K < k ≤ 2K`.
    pub truncation: usize,
    /// Estimate of `E|Y_{2K} - Y_K|`.
    pub estimate: ComplexityEstimate,
    /// Jensen bound `√(E[X²]·Σ_{K<k≤2K} v_k²)`.
    pub jensen_bound: f64,
}

impl PartialSumRow {
    pub fn within_jensen(&self) -> bool {
        self.estimate.mean <= self.jensen_bound + 3.0 * self.estimate.std_error + 1e-12
    }
}

/// Tail increments `E|Σ_{K<k≤2K} X_k v_k|` of the series `Σ X_k v_k` for each
/// truncation size. `coefficient` is evaluated at 1-based indices.
pub fn partial_sum_convergence(
    coefficient: impl Fn(usize) -> f64,
    dims: &[usize],
    dist: &SubgaussianDist,
    engine: &ExpectationEngine,
) -> Result<Vec<PartialSumRow>> {
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("truncation sizes must be strictly increasing".into()));
    }
    dims.iter()
        .map(|&k| {
            let tail: Vec<f64> = (k + 1..=2 * k).map(&coefficient).collect();
            let jensen_bound = (dist.second_moment * tail.iter().map(|c| c * c).sum::<f64>()).sqrt();
            let estimate = if tail.iter().all(|&c| c == 0.0) {
                ComplexityEstimate::exact(0.0)
            } else {
                expected_abs_sum(&tail, dist, engine)?
            };
            Ok(PartialSumRow {
                truncation: k,
                estimate,
                jensen_bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::Verdict;
    use approx::assert_abs_diff_eq;

    #[test]
    fn best_known_constants() {
        let c = khintchine_constant(&SubgaussianDist::rademacher(), ConstantMode::BestKnown).unwrap();
        assert_abs_diff_eq!(c.value, std::f64::consts::SQRT_2, epsilon = 1e-12);
        let c = khintchine_constant(&SubgaussianDist::standard_normal(), ConstantMode::BestKnown).unwrap();
        assert_abs_diff_eq!(c.value, 1.25331, epsilon = 1e-5);
        let u = SubgaussianDist::uniform_symmetric(1.0).unwrap();
        let c = khintchine_constant(&u, ConstantMode::BestKnown).unwrap();
        assert_eq!(c.provenance, ConstantMode::GenericFormula);
    }

    #[test]
    fn generic_formula_matches_quadrature() {
        // (8∫₀^∞ t³ e^{-t²/(2b²)} dt)^{1/2} / E[X²]^{3/2}, integrated numerically
        for dist in [
            SubgaussianDist::rademacher(),
            SubgaussianDist::standard_normal(),
            SubgaussianDist::uniform_symmetric(0.7).unwrap(),
            SubgaussianDist::uniform_symmetric(2.5).unwrap(),
        ] {
            let b = dist.b();
            let integral = simpson(|t| t.powi(3) * (-t * t / (2.0 * b * b)).exp(), 0.0, 40.0 * b, 20_000);
            let quad = (8.0 * integral).sqrt() / dist.second_moment().powf(1.5);
            let closed = khintchine_constant(&dist, ConstantMode::GenericFormula).unwrap().value;
            assert_abs_diff_eq!(quad, closed, epsilon = 1e-9 * closed);
        }
        let c = khintchine_constant(&SubgaussianDist::rademacher(), ConstantMode::GenericFormula).unwrap();
        assert_abs_diff_eq!(c.value, 4.0, epsilon = 1e-15);
    }

    #[test]
    fn trivial_distribution_rejected() {
        assert!(matches!(
            SubgaussianDist::uniform_symmetric(0.0),
            Err(Error::TrivialDistribution)
        ));
        assert!(SubgaussianDist::uniform_symmetric(-1.0).is_err());
    }

    #[test]
    fn tail_bound_values() {
        assert_eq!(tail_bound(0.0, 1.0).unwrap(), 2.0);
        assert_abs_diff_eq!(tail_bound(2.0, 1.0).unwrap(), 0.27067, epsilon = 1e-5);
        assert_abs_diff_eq!(tail_bound(3.0, 2.0).unwrap(), 0.64930, epsilon = 1e-5);
        assert!(tail_bound(-1.0, 1.0).is_err());
        assert!(tail_bound(1.0, 0.0).is_err());
    }

    #[test]
    fn stored_parameters_are_subgaussian() {
        let grid: Vec<f64> = (-40..=40).map(|j| j as f64 * 0.125).collect();
        for dist in [
            SubgaussianDist::rademacher(),
            SubgaussianDist::standard_normal(),
            SubgaussianDist::uniform_symmetric(1.0).unwrap(),
            SubgaussianDist::uniform_symmetric(3.0).unwrap(),
        ] {
            assert!(dist.mgf_excess(&grid) <= 1e-9, "{dist}: {}", dist.mgf_excess(&grid));
        }
        // the Gaussian bound is an identity
        assert!(SubgaussianDist::standard_normal().mgf_excess(&grid) > -1e-9);
    }

    #[test]
    fn khintchine_examples() {
        let engine = ExpectationEngine::exact();
        let h = 0.5f64.sqrt();
        let r = khintchine_lower_check(&[h, h], &SubgaussianDist::rademacher(), &engine).unwrap();
        assert_abs_diff_eq!(r.rhs.mean, h, epsilon = 1e-15);
        assert_abs_diff_eq!(r.bound, 1.0, epsilon = 1e-12);
        assert_eq!(r.verdict, Verdict::Holds);

        let r = khintchine_lower_check(&[0.6, 0.8], &SubgaussianDist::rademacher(), &engine).unwrap();
        assert_abs_diff_eq!(r.rhs.mean, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(r.bound, 1.1314, epsilon = 1e-4);

        assert!(matches!(
            khintchine_lower_check(&[0.0, 0.0], &SubgaussianDist::rademacher(), &engine),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn gaussian_khintchine_is_equality() {
        let engine = ExpectationEngine::monte_carlo(SubgaussianDist::standard_normal(), 100_000, 11);
        let r = khintchine_lower_check(&[1.0], &SubgaussianDist::standard_normal(), &engine).unwrap();
        let target = (2.0 / PI).sqrt();
        assert!((r.rhs.mean - target).abs() <= 3.0 * r.rhs.std_error);
        assert_ne!(r.verdict, Verdict::Violated);
    }

    #[test]
    fn partial_sums() {
        let engine = ExpectationEngine::exact();
        let rows = partial_sum_convergence(|_| 0.0, &[1, 2, 4], &SubgaussianDist::rademacher(), &engine).unwrap();
        assert!(rows.iter().all(|r| r.estimate.mean == 0.0));
        let rows = partial_sum_convergence(|k| if k == 1 { 1.0 } else { 0.0 }, &[1], &SubgaussianDist::rademacher(), &engine)
            .unwrap();
        assert_eq!(rows[0].estimate.mean, 0.0);

        let mc = ExpectationEngine::monte_carlo(SubgaussianDist::rademacher(), 100_000, 3);
        let rows = partial_sum_convergence(|k| 1.0 / k as f64, &[4], &SubgaussianDist::rademacher(), &mc).unwrap();
        let tail: f64 = (5..=8).map(|k| 1.0 / (k * k) as f64).sum();
        assert_abs_diff_eq!(rows[0].jensen_bound, tail.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(rows[0].jensen_bound, 0.3222, epsilon = 1e-4);
        assert!(rows[0].within_jensen());

        let rows = partial_sum_convergence(|k| 1.0 / k as f64, &[2, 4, 8, 16, 32], &SubgaussianDist::rademacher(), &mc)
            .unwrap();
        assert!(rows.iter().all(|r| r.within_jensen()));
        assert!(rows.windows(2).all(|w| w[1].estimate.mean < w[0].estimate.mean));

        assert!(partial_sum_convergence(|_| 1.0, &[4, 2], &SubgaussianDist::rademacher(), &engine).is_err());
    }
}
