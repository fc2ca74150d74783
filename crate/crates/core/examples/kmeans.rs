//! K-means distortion class: the per-point distortion `min_k ‖x - c_k‖²`,
//! its sign-weighted supremum, and the complexity against `3√2·K·√n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use radcomplex::bounds::kmeans_bound;
use radcomplex::classes::{kmeans_lipschitz_check, kmeans_psi};
use radcomplex::estimator::complexity_scalar;
use radcomplex::{ExpectationEngine, FunctionClass, LipschitzLoss, Sample, SubgaussianDist};

fn point_in_ball(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let r = rng.random::<f64>().powf(1.0 / d as f64) / g.iter().map(|x| x * x).sum::<f64>().sqrt();
    g.into_iter().map(|x| x * r).collect()
}

fn main() -> radcomplex::Result<()> {
    let centers = vec![vec![0.5, 0.0], vec![-0.5, 0.0]];
    println!("distortion of (0.4, 0.3): {:.4}", kmeans_psi(&centers, &[0.4, 0.3])?);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (n, d, k) = (30, 3, 2);
    let sample = Sample::from_rows((0..n).map(|_| point_in_ball(&mut rng, d)).collect())?;
    let other = vec![vec![0.0, 0.5, 0.0], vec![0.1, 0.1, 0.1]];
    let c3 = vec![vec![0.5, 0.0, 0.0], vec![-0.5, 0.0, 0.0]];
    let worst = kmeans_lipschitz_check(&c3, &other, &sample)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
    println!("largest Lipschitz margin over the sample: {worst:.4} (never positive)");

    let class = FunctionClass::kmeans(sample, k)?;
    let signs: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
    let losses = vec![LipschitzLoss::min_coordinate(); n];
    let sup = class.loss_weighted_sup(&signs, &losses, 0)?;
    println!("sup_c Σ σ_i min_k ‖x_i - c_k‖² ≥ {:.4} ({})", sup.value, sup.exactness.as_str());

    let engine = ExpectationEngine::monte_carlo(SubgaussianDist::rademacher(), 500, 11);
    let r = complexity_scalar(&class, &losses, &engine)?;
    let bound = kmeans_bound(k, n)?;
    println!("complexity ≥ {:.3} ± {:.3}, bound {:.3}", r.mean, r.std_error, bound.value);
    Ok(())
}
