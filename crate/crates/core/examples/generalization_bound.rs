//! Generalization bound `mean + (2/n)·R + √(9 ln(2/δ)/(2n))` on a finite
//! class, and how often it fails over repeated samples.

use radcomplex::bounds::theorem1_bound;
use radcomplex::contraction::theorem1_coverage_experiment;
use radcomplex::estimator::ExpectationEngine;

fn main() -> radcomplex::Result<()> {
    let b = theorem1_bound(0.25, 3.0, 16, 0.1)?;
    println!("mean 0.25, R = 3, n = 16, δ = 0.1 → {:.4}", b.value);
    for (name, v) in &b.inputs {
        println!("  {name} = {v}");
    }

    // 6 functions on a 4-point space under a skewed law
    let tables = vec![
        vec![0.0, 1.0, 0.5, 0.2],
        vec![1.0, 0.0, 0.5, 0.8],
        vec![0.3, 0.3, 0.3, 0.3],
        vec![0.9, 0.1, 0.0, 1.0],
        vec![0.2, 0.7, 0.9, 0.1],
        vec![0.5, 0.5, 1.0, 0.0],
    ];
    let law = [0.4, 0.3, 0.2, 0.1];
    for delta in [0.05, 0.1, 0.3] {
        let r = theorem1_coverage_experiment(&tables, &law, 12, delta, 300, &ExpectationEngine::default())?;
        println!("δ = {delta}: {} of {} samples violated (allowed rate {:.3})", r.violations, r.repetitions, r.allowed);
    }
    Ok(())
}
