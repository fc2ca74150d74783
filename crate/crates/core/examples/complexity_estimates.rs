//! Exact enumeration against Monte Carlo for a small finite class, and the
//! effect of the noise law on the vector complexity.

use nalgebra::DMatrix;
use radcomplex::estimator::{complexity_scalar, complexity_vector, rademacher_sum_norm};
use radcomplex::{ExpectationEngine, FunctionClass, LipschitzLoss, Sample, SubgaussianDist};

fn main() -> radcomplex::Result<()> {
    let class = FunctionClass::from_tables(vec![
        DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, -0.5, 0.0, 1.0]),
        DMatrix::from_row_slice(3, 2, &[0.0, 1.0, -0.5, 0.5, 1.0, 0.0]),
        DMatrix::from_row_slice(3, 2, &[0.7, 0.7, 0.0, 0.0, -0.7, 0.7]),
    ])?;
    let losses = vec![LipschitzLoss::euclidean_norm(); 3];

    let exact = complexity_scalar(&class, &losses, &ExpectationEngine::exact())?;
    println!("E sup Σ ε_i ‖f(x_i)‖, exact over {} patterns: {:.6}", exact.draws, exact.mean);
    for draws in [100, 1_000, 10_000, 100_000] {
        let mc = ExpectationEngine::monte_carlo(SubgaussianDist::rademacher(), draws, 42);
        let est = complexity_scalar(&class, &losses, &mc)?;
        println!("  {draws:>6} draws: {:.6} ± {:.6}", est.mean, est.std_error);
    }

    println!("\nE sup Σ X_ik f_k(x_i) by noise law:");
    for dist in [SubgaussianDist::rademacher(), SubgaussianDist::standard_normal(), SubgaussianDist::uniform_symmetric(1.0)?] {
        let est = complexity_vector(&class, &ExpectationEngine::auto(dist, 50_000, 7))?;
        println!("  {dist:<10} {:.4} ± {:.4} ({})", est.mean, est.std_error, est.method.as_str());
    }

    let sample = Sample::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]])?;
    let e = rademacher_sum_norm(&sample, &ExpectationEngine::exact())?;
    println!("\nE‖Σ ε_i x_i‖ = {:.6} ≤ √(Σ‖x_i‖²) = {:.6}", e.mean, sample.sum_squared_norms().sqrt());
    Ok(())
}
