//! Feature maps shared across tasks: the per-task best-loss functional `ψ_t`,
//! its Lipschitz property in the stacked outputs, and the reduction bound
//! `√2·(L/√n)·E sup Σ ε_tki h_k(x_ti)`.

use nalgebra::DMatrix;
use radcomplex::bounds::ltl_reduction_bound;
use radcomplex::classes::{ltl_lipschitz_margins, ltl_psi};
use radcomplex::estimator::{complexity_vector, ltl_complexity};
use radcomplex::{ExpectationEngine, FunctionClass, LipschitzLoss, MetaSample};

fn main() -> radcomplex::Result<()> {
    let (tasks, n, k) = (2, 2, 2);
    let meta = MetaSample::abstract_points(tasks, n)?;
    let maps = vec![
        DMatrix::from_row_slice(tasks * n, k, &[0.1, 0.9, 0.4, 0.2, 0.0, 0.5, 0.8, 0.3]),
        DMatrix::from_row_slice(tasks * n, k, &[0.7, 0.1, 0.2, 0.6, 0.3, 0.3, 0.9, 0.0]),
        DMatrix::from_row_slice(tasks * n, k, &[-0.4, 0.2, 0.5, -0.5, 0.6, 0.1, 0.0, 0.0]),
    ];
    let class = FunctionClass::from_feature_maps(meta, maps)?;
    let losses = vec![
        LipschitzLoss::euclidean_norm().clamped_unit(),
        LipschitzLoss::distance_to(vec![0.5, 0.5]).clamped_unit(),
        LipschitzLoss::max_coordinate().clamped_unit(),
    ];

    for h in 0..3 {
        let psi: Vec<String> = (0..tasks).map(|t| ltl_psi(&class, h, t, &losses).map(|v| format!("{v:.4}"))).collect::<Result<_, _>>()?;
        println!("map {h}: ψ per task = [{}]", psi.join(", "));
    }
    let worst = ltl_lipschitz_margins(&class, &losses)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
    println!("largest Lipschitz margin: {worst:.4}");

    let engine = ExpectationEngine::exact();
    let r = ltl_complexity(&class, &losses, &engine)?;
    let meta_c = complexity_vector(&class, &engine)?;
    let bound = ltl_reduction_bound(1.0, n, meta_c.mean)?;
    println!("R(H) = {:.4} ≤ {:.4} = √2·(1/√{n})·{:.4}", r.mean, bound.value, meta_c.mean);
    Ok(())
}
