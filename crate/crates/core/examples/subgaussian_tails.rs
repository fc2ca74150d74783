//! Empirical tail frequencies of `|Σ v_k X_k|` next to `2·exp(-t²/(2b²))`.

use radcomplex::estimator::ExpectationEngine;
use radcomplex::subgaussian::tail_bound;
use radcomplex::SubgaussianDist;

fn main() -> radcomplex::Result<()> {
    let v = [0.5, 0.5, 0.5, 0.5];
    let thresholds = [0.5, 1.0, 2.0, 3.0];
    for dist in [
        SubgaussianDist::rademacher(),
        SubgaussianDist::standard_normal(),
        SubgaussianDist::uniform_symmetric(1.0)?,
    ] {
        let engine = ExpectationEngine::monte_carlo(dist, 200_000, 3);
        let freq = engine.expect_many(v.len(), thresholds.len(), |x, _, out| {
            let s: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().abs();
            for (o, t) in out.iter_mut().zip(&thresholds) {
                *o = f64::from(u8::from(s > *t));
            }
        })?;
        println!("{dist} (b = {}):", dist.b());
        for (est, t) in freq.iter().zip(thresholds) {
            println!("  P(|S| > {t}) ≈ {:.5}   bound {:.5}", est.mean, tail_bound(t, dist.b())?);
        }
    }
    Ok(())
}
