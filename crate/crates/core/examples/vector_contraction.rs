//! `E sup Σ ε_i h_i(f(x_i)) ≤ √2·L·E sup Σ ε_ik f_k(x_i)` on a random finite
//! class, with several loss choices, plus the one-point step with an offset.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radcomplex::contraction::{verify_single_variable, verify_vector_contraction};
use radcomplex::{ExpectationEngine, FunctionClass, LipschitzLoss, SubgaussianDist};

fn main() -> radcomplex::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, k) = (4, 3);
    let tables = (0..6).map(|_| DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0))).collect();
    let class = FunctionClass::from_tables(tables)?;

    let catalog = [
        ("norm", LipschitzLoss::euclidean_norm()),
        ("max", LipschitzLoss::max_coordinate()),
        ("margin(y=0, γ=0.5)", LipschitzLoss::margin(0, 0.5)?),
        ("dist to (1,0,0)", LipschitzLoss::distance_to(vec![1.0, 0.0, 0.0])),
    ];
    let rad = SubgaussianDist::rademacher();
    for (name, loss) in catalog {
        let r = verify_vector_contraction(&class, &vec![loss; n], &rad, &ExpectationEngine::exact())?;
        println!(
            "{name:<20} lhs {:.4}  C·L = {:.4}  rhs {:.4}  margin {:.4}  {}",
            r.lhs.mean, r.constant, r.rhs.mean, r.margin, r.verdict
        );
    }

    // Gaussian noise on the right uses C = √(π/2)
    let gauss = SubgaussianDist::standard_normal();
    let engine = ExpectationEngine::auto(gauss, 100_000, 9);
    let r = verify_vector_contraction(&class, &vec![LipschitzLoss::euclidean_norm(); n], &gauss, &engine)?;
    println!("\ngaussian rhs: {:.4} ± {:.4}, C = {:.4}: {}", r.rhs.mean, r.rhs.std_error, r.constant, r.verdict);

    let one_point = FunctionClass::from_tables(vec![
        DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        DMatrix::from_row_slice(1, 2, &[0.0, -1.0]),
        DMatrix::from_row_slice(1, 2, &[0.6, 0.6]),
    ])?;
    let r = verify_single_variable(&one_point, &LipschitzLoss::euclidean_norm(), &[0.0, 0.3, -0.2], &rad, &ExpectationEngine::exact())?;
    println!("one point with offsets: {:.4} ≤ {:.4} [{}]", r.lhs.mean, r.bound, r.verdict);
    Ok(())
}
