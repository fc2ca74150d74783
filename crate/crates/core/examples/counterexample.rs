//! The orthonormal construction where `E sup Σ ε_i ‖T x_i‖` grows like `n/2`
//! while `E sup ‖Σ ε_i T x_i‖` stays at `√n`, so no fixed constant works.

use radcomplex::counterexample::{counterexample_instance, counterexample_mc_crosscheck, refute_conjecture};
use radcomplex::estimator::ExpectationEngine;
use radcomplex::SubgaussianDist;

fn main() -> radcomplex::Result<()> {
    println!("{:>5} {:>8} {:>8} {:>6}", "n", "lhs", "rhs", "ratio");
    for n in [1, 4, 16, 64, 256, 1024] {
        let c = counterexample_instance(n)?;
        println!("{n:>5} {:>8} {:>8.3} {:>6.2}", c.lhs, c.rhs, c.ratio);
    }

    let exact = counterexample_mc_crosscheck(12, &ExpectationEngine::exact())?;
    println!("\nn = 12 by enumeration: lhs {} rhs {:.6} (agrees: {})", exact.lhs.mean, exact.rhs.mean, exact.agrees());
    let mc = counterexample_mc_crosscheck(400, &ExpectationEngine::monte_carlo(SubgaussianDist::rademacher(), 20_000, 4))?;
    println!("n = 400 by sampling: lhs {:.2} ± {:.2} (agrees: {})", mc.lhs.mean, mc.lhs.std_error, mc.agrees());

    for k in [1.0, 2.5, 10.0] {
        let n = refute_conjecture(k, usize::MAX)?.expect("unbounded search");
        println!("constant {k}: first fails at n = {n}");
    }
    Ok(())
}
