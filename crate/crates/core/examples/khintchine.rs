//! Khintchine-type constants: `‖v‖ ≤ C·E|Σ X_k v_k|` for three noise laws,
//! the extremal vector for signs, and tail increments of a random series.

use radcomplex::estimator::ExpectationEngine;
use radcomplex::subgaussian::{khintchine_constant, khintchine_lower_check, partial_sum_convergence};
use radcomplex::{ConstantMode, SubgaussianDist};

fn main() -> radcomplex::Result<()> {
    let laws = [
        SubgaussianDist::rademacher(),
        SubgaussianDist::standard_normal(),
        SubgaussianDist::uniform_symmetric(1.0)?,
    ];
    for dist in &laws {
        let best = khintchine_constant(dist, ConstantMode::BestKnown)?;
        let generic = khintchine_constant(dist, ConstantMode::GenericFormula)?;
        println!("{dist:<12} best {:.6}  generic {:.6}", best.value, generic.value);
    }

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let report = khintchine_lower_check(&[s, s], &laws[0], &ExpectationEngine::exact())?;
    println!("\n(1/√2, 1/√2): ‖v‖ = {} vs √2·E|Σ εv| = {} [{}]", report.lhs.mean, report.bound, report.verdict);

    let v = [0.6, 0.0, 0.8];
    let engine = ExpectationEngine::monte_carlo(laws[1], 100_000, 1);
    let report = khintchine_lower_check(&v, &laws[1], &engine)?;
    println!(
        "gaussian, v = {v:?}: E|Σ gv| = {:.4} ± {:.4} (√(2/π) = {:.4}) [{}]",
        report.rhs.mean,
        report.rhs.std_error,
        (2.0 / std::f64::consts::PI).sqrt(),
        report.verdict
    );

    println!("\nE|Σ_(K<k≤2K) ε_k / k| against its Jensen bound:");
    for row in partial_sum_convergence(|k| 1.0 / k as f64, &[1, 2, 4, 8], &laws[0], &ExpectationEngine::exact())? {
        println!("  K = {:>2}: {:.5} ≤ {:.5}", row.truncation, row.estimate.mean, row.jensen_bound);
    }
    Ok(())
}
