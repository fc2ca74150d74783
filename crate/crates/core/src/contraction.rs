//! Executable forms of the contraction inequalities: the vector contraction
//! `E sup Σ ε_i h_i(f(x_i)) ≤ C·L·E sup Σ X_ik f_k(x_i)`, its single-variable
//! step, the product-class identity, and a coverage experiment for the
//! Rademacher generalization bound.

use std::fmt;

use nalgebra::DMatrix;
use rand::distr::{weighted::WeightedIndex, Distribution};

use crate::bounds::theorem1_bound;
use crate::classes::{Exactness, FunctionClass};
use crate::error::{Error, Result};
use crate::estimator::{
    complexity_scalar, complexity_vector, expected_max_linear, ComplexityEstimate, EstimateMethod,
    ExpectationEngine,
};
use crate::lipschitz::LipschitzLoss;
use crate::rng::{derive_seed, draw_stream, label};
use crate::subgaussian::{khintchine_constant, ConstantMode, SubgaussianDist};

/// Tolerance for comparisons between exactly computed sides.
pub const EXACT_TOL: f64 = 1e-9;
/// Width, in standard errors, of statistical comparisons.
pub const SE_WIDTH: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    HoldsWithinTolerance,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "HOLDS",
            Verdict::HoldsWithinTolerance => "HOLDS_WITHIN_TOLERANCE",
            Verdict::Violated => "VIOLATED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerificationMode {
    Exact,
    Statistical,
}

/// Outcome of checking `lhs ≤ bound` where `bound = constant · rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationReport {
    pub lhs: ComplexityEstimate,
    pub rhs: ComplexityEstimate,
    pub constant: f64,
    pub bound: f64,
    pub bound_se: f64,
    /// `bound - lhs.mean`.
    pub margin: f64,
    pub verdict: Verdict,
    pub mode: VerificationMode,
}

impl VerificationReport {
    pub fn judge(lhs: ComplexityEstimate, rhs: ComplexityEstimate, constant: f64) -> Self {
        let bound = constant * rhs.mean;
        let bound_se = constant.abs() * rhs.std_error;
        Self::judge_parts(lhs, rhs, constant, bound, bound_se)
    }

    /// Check an estimate against a known number.
    pub fn against(lhs: ComplexityEstimate, bound: f64) -> Self {
        Self::judge(lhs, ComplexityEstimate::exact(bound), 1.0)
    }

    /// `bound` and `bound_se` given directly, for inequalities whose
    /// constant sits inside the supremum.
    pub fn judge_parts(lhs: ComplexityEstimate, rhs: ComplexityEstimate, constant: f64, bound: f64, bound_se: f64) -> Self {
        let exact = lhs.method == EstimateMethod::Exact && rhs.method == EstimateMethod::Exact;
        let (mode, holds, within) = if exact {
            (VerificationMode::Exact, lhs.mean <= bound + EXACT_TOL, false)
        } else {
            let hi = lhs.mean + SE_WIDTH * lhs.std_error;
            let lo = lhs.mean - SE_WIDTH * lhs.std_error;
            let strict = hi <= bound - SE_WIDTH * bound_se;
            let loose = lo <= bound + SE_WIDTH * bound_se;
            (VerificationMode::Statistical, strict, loose)
        };
        let mut verdict = match (holds, within) {
            (true, _) => Verdict::Holds,
            (false, true) => Verdict::HoldsWithinTolerance,
            (false, false) => Verdict::Violated,
        };
        // an under-estimated lhs cannot certify the inequality, and an
        // under-estimated bound cannot certify a violation
        if lhs.exactness == Exactness::LowerBound && verdict != Verdict::Violated {
            verdict = Verdict::Inconclusive;
        }
        if rhs.exactness == Exactness::LowerBound && verdict == Verdict::Violated {
            verdict = Verdict::Inconclusive;
        }
        VerificationReport {
            lhs,
            rhs,
            constant,
            bound,
            bound_se,
            margin: bound - lhs.mean,
            verdict,
            mode,
        }
    }

    pub fn is_violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }
}

fn max_lipschitz(losses: &[LipschitzLoss]) -> f64 {
    losses.iter().map(|h| h.lipschitz()).fold(0.0, f64::max)
}

/// Compare the scalar complexity of `h_i ∘ f` (Rademacher signs) with
/// `C·L` times the vector complexity of `f` under `dist` noise.
pub fn verify_vector_contraction(
    class: &FunctionClass,
    losses: &[LipschitzLoss],
    dist: &SubgaussianDist,
    engine: &ExpectationEngine,
) -> Result<VerificationReport> {
    let c = khintchine_constant(dist, ConstantMode::BestKnown)?.value;
    let lhs = complexity_scalar(class, losses, engine)?;
    let rhs = complexity_vector(class, &engine.with_dist(*dist))?;
    Ok(VerificationReport::judge(lhs, rhs, c * max_lipschitz(losses)))
}

/// Single-point step: `E sup_s (ε ψ(s) + f(s)) ≤ E sup_s (C·L Σ_k X_k φ_k(s) + f(s))`
/// with `ψ(s) = loss(φ(s))` over a finite class on one point.
pub fn verify_single_variable(
    class: &FunctionClass,
    loss: &LipschitzLoss,
    f_offset: &[f64],
    dist: &SubgaussianDist,
    engine: &ExpectationEngine,
) -> Result<VerificationReport> {
    let tables = class
        .finite_tables()
        .ok_or_else(|| Error::Unsupported("the single-variable check needs a finite class".into()))?;
    if class.sample().n() != 1 {
        return Err(Error::mismatch("single-variable sample size", 1, class.sample().n()));
    }
    if f_offset.len() != tables.len() {
        return Err(Error::mismatch("offset table", tables.len(), f_offset.len()));
    }
    class.check_losses(std::slice::from_ref(loss))?;
    let phi: Vec<Vec<f64>> = tables.iter().map(|t| t.row(0).iter().cloned().collect()).collect();
    let psi: Vec<f64> = phi.iter().map(|p| loss.value(p)).collect();
    let best = |sign: f64| {
        psi.iter()
            .zip(f_offset)
            .map(|(p, f)| sign * p + f)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let lhs = ComplexityEstimate {
        draws: 2,
        ..ComplexityEstimate::exact(0.5 * (best(1.0) + best(-1.0)))
    };

    let constant = khintchine_constant(dist, ConstantMode::BestKnown)?.value * loss.lipschitz();
    let k = class.output_dim();
    let rhs = engine.with_dist(*dist).expect(k, |x, _| {
        phi.iter()
            .zip(f_offset)
            .map(|(p, f)| constant * crate::numeric::dot(p, x) + f)
            .fold(f64::NEG_INFINITY, f64::max)
    })?;
    Ok(VerificationReport::judge_parts(lhs, rhs, constant, rhs.mean, rhs.std_error))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub product: ComplexityEstimate,
    pub components: Vec<ComplexityEstimate>,
    pub sum: f64,
    pub difference: f64,
    /// `EXACT_TOL` for exact estimates, otherwise 3 combined standard errors.
    pub tolerance: f64,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.difference.abs() <= self.tolerance
    }
}

/// The vector complexity of a product of scalar classes equals the sum of
/// the component complexities.
pub fn product_identity_check(components: &[FunctionClass], engine: &ExpectationEngine) -> Result<IdentityReport> {
    let product = FunctionClass::product(components.to_vec())?;
    let n = product.sample().n();
    let identity = vec![LipschitzLoss::identity(); n];
    let product_est = complexity_vector(&product, &engine.with_dist(SubgaussianDist::rademacher()))?;
    let parts = components
        .iter()
        .map(|c| complexity_scalar(c, &identity, engine))
        .collect::<Result<Vec<_>>>()?;
    let sum = parts.iter().map(|p| p.mean).sum::<f64>();
    let exact = product_est.method == EstimateMethod::Exact && parts.iter().all(|p| p.method == EstimateMethod::Exact);
    let tolerance = if exact {
        EXACT_TOL
    } else {
        let var = product_est.std_error.powi(2) + parts.iter().map(|p| p.std_error.powi(2)).sum::<f64>();
        SE_WIDTH * var.sqrt()
    };
    Ok(IdentityReport {
        difference: product_est.mean - sum,
        product: product_est,
        components: parts,
        sum,
        tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub repetitions: usize,
    pub violations: usize,
    pub rate: f64,
    pub delta: f64,
    /// `δ + 3√(δ(1-δ)/repetitions)`.
    pub allowed: f64,
}

impl CoverageReport {
    pub fn within_budget(&self) -> bool {
        self.rate <= self.allowed
    }
}

/// Repeatedly draw an iid sample of size `n` from `law` over a finite input
/// space and count the repetitions in which some function's true mean
/// exceeds its generalization bound. `tables[j][x]` is `f_j(x) ∈ [0, 1]`.
pub fn theorem1_coverage_experiment(
    tables: &[Vec<f64>],
    law: &[f64],
    n: usize,
    delta: f64,
    repetitions: usize,
    engine: &ExpectationEngine,
) -> Result<CoverageReport> {
    if tables.is_empty() {
        return Err(Error::EmptyClass);
    }
    if n == 0 {
        return Err(Error::Domain("sample size must be >= 1".into()));
    }
    if repetitions < 100 {
        return Err(Error::Domain(format!("need at least 100 repetitions, got {repetitions}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let space = law.len();
    if let Some(j) = tables.iter().position(|t| t.len() != space) {
        return Err(Error::mismatch("function table", space, format!("{} at table {j}", tables[j].len())));
    }
    if tables.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Domain("function values must lie in [0, 1]".into()));
    }
    if law.iter().any(|p| p.is_nan() || *p < 0.0) || (law.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain("law must be a probability vector".into()));
    }
    let sampler = WeightedIndex::new(law).map_err(|e| Error::Domain(format!("law: {e}")))?;
    let true_means: Vec<f64> = tables
        .iter()
        .map(|t| t.iter().zip(law).map(|(v, p)| v * p).sum())
        .collect();
    let engine = engine.with_dist(SubgaussianDist::rademacher());
    let exact = engine.resolve(n)? == EstimateMethod::Exact;
    let seed = derive_seed(engine.seed, label("coverage"));

    let mut violations = 0;
    for rep in 0..repetitions {
        let mut rng = draw_stream(seed, rep as u64);
        let xs: Vec<usize> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        let values: Vec<Vec<f64>> = tables.iter().map(|t| xs.iter().map(|&x| t[x]).collect()).collect();
        let r = if exact {
            expected_max_linear(&values)?
        } else {
            let finite = FunctionClass::from_tables(
                values.iter().map(|v| DMatrix::from_column_slice(n, 1, v)).collect(),
            )?;
            complexity_vector(&finite, &engine.with_seed(derive_seed(seed, rep as u64)))?.mean
        };
        let violated = values.iter().zip(&true_means).try_fold(false, |acc, (v, mu)| {
            let empirical = v.iter().sum::<f64>() / n as f64;
            Ok::<_, Error>(acc || *mu > theorem1_bound(empirical, r.max(0.0), n, delta)?.value)
        })?;
        violations += violated as usize;
    }
    let rate = violations as f64 / repetitions as f64;
    Ok(CoverageReport {
        repetitions,
        violations,
        rate,
        delta,
        allowed: delta + SE_WIDTH * (delta * (1.0 - delta) / repetitions as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn judge_rules() {
        let exact = ComplexityEstimate::exact;
        assert_eq!(VerificationReport::judge(exact(1.0), exact(1.0), 1.0).verdict, Verdict::Holds);
        assert_eq!(VerificationReport::judge(exact(1.0 + 1e-10), exact(1.0), 1.0).verdict, Verdict::Holds);
        assert_eq!(VerificationReport::judge(exact(1.1), exact(1.0), 1.0).verdict, Verdict::Violated);

        let mc = |mean, se| ComplexityEstimate {
            std_error: se,
            method: EstimateMethod::MonteCarlo,
            draws: 100,
            ..ComplexityEstimate::exact(mean)
        };
        assert_eq!(VerificationReport::judge(mc(1.0, 0.01), exact(2.0), 1.0).verdict, Verdict::Holds);
        assert_eq!(VerificationReport::judge(mc(1.0, 0.1), exact(1.1), 1.0).verdict, Verdict::HoldsWithinTolerance);
        assert_eq!(VerificationReport::judge(mc(1.5, 0.1), exact(1.1), 1.0).verdict, Verdict::Violated);

        let lower = mc(1.0, 0.01).with_exactness(Exactness::LowerBound);
        assert_eq!(VerificationReport::judge(lower, exact(2.0), 1.0).verdict, Verdict::Inconclusive);
        let lower_rhs = exact(0.5).with_exactness(Exactness::LowerBound);
        assert_eq!(VerificationReport::judge(exact(1.0), lower_rhs, 1.0).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn singleton_class_is_tight() {
        let c = FunctionClass::from_tables(vec![m(2, 2, &[0.3, -0.2, 0.5, 0.1])]).unwrap();
        let losses = vec![LipschitzLoss::euclidean_norm(); 2];
        let r = verify_vector_contraction(&c, &losses, &SubgaussianDist::rademacher(), &ExpectationEngine::exact()).unwrap();
        assert_eq!(r.lhs.mean, 0.0);
        assert_eq!(r.rhs.mean, 0.0);
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.mode, VerificationMode::Exact);
    }

    #[test]
    fn single_variable_example() {
        let c = FunctionClass::from_tables(vec![m(1, 2, &[1.0, 0.0]), m(1, 2, &[0.0, 1.0])]).unwrap();
        let r = verify_single_variable(
            &c,
            &LipschitzLoss::euclidean_norm(),
            &[0.0, 0.0],
            &SubgaussianDist::rademacher(),
            &ExpectationEngine::exact(),
        )
        .unwrap();
        assert_eq!(r.lhs.mean, 0.0);
        assert_abs_diff_eq!(r.bound, 0.5 * 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(r.verdict, Verdict::Holds);

        let singleton = FunctionClass::from_tables(vec![m(1, 2, &[0.4, 0.4])]).unwrap();
        let r = verify_single_variable(
            &singleton,
            &LipschitzLoss::euclidean_norm(),
            &[0.0],
            &SubgaussianDist::rademacher(),
            &ExpectationEngine::exact(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.lhs.mean, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.bound, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn product_identity_examples() {
        let pm = FunctionClass::from_tables(vec![m(1, 1, &[1.0]), m(1, 1, &[-1.0])]).unwrap();
        let r = product_identity_check(&[pm.clone(), pm], &ExpectationEngine::exact()).unwrap();
        assert_eq!(r.product.mean, 2.0);
        assert_eq!(r.sum, 2.0);
        assert!(r.holds());

        let single = FunctionClass::from_tables(vec![m(2, 1, &[0.5, -0.5])]).unwrap();
        let r = product_identity_check(&[single.clone(), single], &ExpectationEngine::exact()).unwrap();
        assert_eq!(r.product.mean, 0.0);
        assert!(r.holds());
    }

    #[test]
    fn coverage_trivial_cases() {
        let constants = vec![vec![0.3; 4], vec![0.9; 4]];
        let law = [0.25; 4];
        let e = ExpectationEngine::default();
        let r = theorem1_coverage_experiment(&constants, &law, 8, 0.1, 100, &e).unwrap();
        assert_eq!(r.violations, 0);

        let tables = vec![vec![0.0, 1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0, 0.0]];
        let r = theorem1_coverage_experiment(&tables, &law, 1, 0.5, 100, &e).unwrap();
        assert_eq!(r.violations, 0);

        assert!(theorem1_coverage_experiment(&tables, &law, 4, 1.0, 100, &e).is_err());
        assert!(theorem1_coverage_experiment(&[vec![1.5; 4]], &law, 4, 0.1, 100, &e).is_err());
        assert!(theorem1_coverage_experiment(&tables, &law, 4, 0.1, 10, &e).is_err());
    }
}
