//! Norm-ball linear classes `x ↦ W x`: exact dual-norm suprema, the
//! Frobenius bound and its tightness on orthonormal points, and the
//! operator-kernel bound.

use nalgebra::DMatrix;
use radcomplex::bounds::{frobenius_bound, operator_kernel_bound};
use radcomplex::estimator::{complexity_scalar, complexity_vector};
use radcomplex::{ExpectationEngine, FunctionClass, LipschitzLoss, MatrixNorm, Sample, SubgaussianDist};

fn main() -> radcomplex::Result<()> {
    let points = vec![vec![0.6, 0.8, 0.0], vec![0.0, 0.6, 0.8], vec![0.5, 0.5, 0.5], vec![-0.3, 0.1, 0.9]];
    let sample = Sample::from_rows(points)?;
    let a = DMatrix::from_row_slice(4, 2, &[1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0, -1.0]);
    for norm in [MatrixNorm::Frobenius, MatrixNorm::Spectral] {
        let class = FunctionClass::linear_norm_ball(sample.clone(), norm, 2.0, 2)?;
        let sup = class.weighted_sup(&a)?;
        let est = complexity_vector(&class, &ExpectationEngine::exact())?;
        println!("{norm:<10} sup at A = {:.4}; complexity {:.4}", sup.value, est.mean);
    }
    let bound = frobenius_bound(2.0, &sample, 2)?;
    println!("frobenius bound B·√(K Σ‖x‖²) = {:.4}", bound.value);

    let identity = Sample::new(DMatrix::identity(9, 9))?;
    let class = FunctionClass::linear_norm_ball(identity.clone(), MatrixNorm::Frobenius, 1.0, 1)?;
    let mc = ExpectationEngine::auto(SubgaussianDist::rademacher(), 10_000, 1);
    println!(
        "orthonormal sample: complexity {:.6} = bound {:.6}",
        complexity_vector(&class, &mc)?.mean,
        frobenius_bound(1.0, &identity, 1)?.value
    );

    // contractions T evaluated at e_1..e_n with h = ‖·‖
    let n = 6;
    let ops = FunctionClass::operator_projection(n)?;
    let r = complexity_scalar(&ops, &vec![LipschitzLoss::euclidean_norm(); n], &ExpectationEngine::exact())?;
    println!("\nE sup_T Σ ε_i ‖T e_i‖ = {} for n = {n}", r.mean);
    let traces = [1.0, 0.5, 0.25];
    println!("operator-kernel bound (L=1, B=1, traces {traces:?}) = {:.4}", operator_kernel_bound(1.0, 1.0, &traces)?.value);
    Ok(())
}
