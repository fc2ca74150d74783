//! Randomized invariants. Expected values come from brute-force oracles
//! written here, not from the library.

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;
use radcomplex::bounds::{frobenius_bound, kmeans_bound, ltl_reduction_bound, operator_kernel_bound};
use radcomplex::classes::{ltl_lipschitz_margins, MetaSample};
use radcomplex::contraction::verify_vector_contraction;
use radcomplex::counterexample::refute_conjecture;
use radcomplex::estimator::{complexity_scalar, complexity_vector, expected_max_linear};
use radcomplex::lipschitz::empirical_lipschitz;
use radcomplex::subgaussian::expected_abs_sum;
use radcomplex::{ExpectationEngine, FunctionClass, LipschitzLoss, MatrixNorm, Sample, SubgaussianDist, Verdict};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, rows * cols).prop_map(move |v| DMatrix::from_row_slice(rows, cols, &v))
}

fn tables(n: usize, k: usize) -> impl Strategy<Value = Vec<DMatrix<f64>>> {
    prop::collection::vec(matrix(n, k), 1..5)
}

fn shape_and_tables() -> impl Strategy<Value = (usize, usize, Vec<DMatrix<f64>>)> {
    (1..4usize, 1..4usize).prop_flat_map(|(n, k)| (Just(n), Just(k), tables(n, k)))
}

/// `E max_j Σ_{i,k} ε_ik T_j[i,k]` by looping over every sign pattern.
fn brute_vector_complexity(tables: &[DMatrix<f64>]) -> f64 {
    let cells = tables[0].len();
    let patterns = 1u64 << cells;
    let mut total = 0.0;
    for p in 0..patterns {
        let best = tables
            .iter()
            .map(|t| {
                t.iter()
                    .enumerate()
                    .map(|(c, x)| if p >> c & 1 == 1 { *x } else { -*x })
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        total += best;
    }
    total / patterns as f64
}

fn all_exact() -> ExpectationEngine {
    ExpectationEngine::exact()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn finite_complexity_matches_brute_force((_n, _k, tables) in shape_and_tables()) {
        let class = FunctionClass::from_tables(tables.clone()).unwrap();
        let est = complexity_vector(&class, &all_exact()).unwrap();
        assert_relative_eq!(est.mean, brute_vector_complexity(&tables), epsilon = 1e-12);
    }

    #[test]
    fn complexity_is_monotone_in_the_class((_n, _k, mut tables) in shape_and_tables(), extra in matrix(3, 3)) {
        let (n, k) = tables[0].shape();
        let small = complexity_vector(&FunctionClass::from_tables(tables.clone()).unwrap(), &all_exact()).unwrap();
        tables.push(extra.view((0, 0), (n, k)).into_owned());
        let big = complexity_vector(&FunctionClass::from_tables(tables).unwrap(), &all_exact()).unwrap();
        prop_assert!(small.mean <= big.mean + 1e-12);
    }

    #[test]
    fn singleton_has_zero_complexity(t in matrix(3, 2), seed in any::<u64>()) {
        let class = FunctionClass::from_tables(vec![t]).unwrap();
        prop_assert_eq!(complexity_vector(&class, &all_exact()).unwrap().mean, 0.0);
        let mc = ExpectationEngine::monte_carlo(SubgaussianDist::rademacher(), 2000, seed);
        let est = complexity_vector(&class, &mc).unwrap();
        prop_assert!(est.mean.abs() <= 4.0 * est.std_error + 1e-12);
    }

    #[test]
    fn weighted_sup_is_homogeneous_and_convex(
        (_n, _k, tables) in shape_and_tables(),
        a in matrix(3, 3), b in matrix(3, 3), c in 0.0..5.0f64, lambda in 0.0..1.0f64,
    ) {
        let (n, k) = tables[0].shape();
        let class = FunctionClass::from_tables(tables).unwrap();
        let a = a.view((0, 0), (n, k)).into_owned();
        let b = b.view((0, 0), (n, k)).into_owned();
        let ws = |m: &DMatrix<f64>| class.weighted_sup(m).unwrap().value;
        assert_relative_eq!(ws(&(&a * c)), c * ws(&a), epsilon = 1e-12);
        let mix = &a * lambda + &b * (1.0 - lambda);
        prop_assert!(ws(&mix) <= lambda * ws(&a) + (1.0 - lambda) * ws(&b) + 1e-12);
    }

    #[test]
    fn linear_ball_sup_is_sign_symmetric(
        pts in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 3), 1..5),
        a in matrix(5, 2), spectral in any::<bool>(),
    ) {
        let n = pts.len();
        let norm = if spectral { MatrixNorm::Spectral } else { MatrixNorm::Frobenius };
        let class = FunctionClass::linear_norm_ball(Sample::from_rows(pts).unwrap(), norm, 1.5, 2).unwrap();
        let a = a.rows(0, n).into_owned();
        let plus = class.weighted_sup(&a).unwrap().value;
        let minus = class.weighted_sup(&(-&a)).unwrap().value;
        assert_relative_eq!(plus, minus, epsilon = 1e-10, max_relative = 1e-12);
    }

    #[test]
    fn product_sup_separates(cols in prop::collection::vec(tables(2, 1), 1..4), a in matrix(2, 3)) {
        let k = cols.len();
        let components: Vec<FunctionClass> = cols.into_iter().map(|t| FunctionClass::from_tables(t).unwrap()).collect();
        let product = FunctionClass::product(components.clone()).unwrap();
        let a = a.columns(0, k).into_owned();
        let sum: f64 = components
            .iter()
            .enumerate()
            .map(|(j, c)| c.weighted_sup(&a.columns(j, 1).into_owned()).unwrap().value)
            .sum();
        assert_relative_eq!(product.weighted_sup(&a).unwrap().value, sum, epsilon = 1e-12);
    }

    #[test]
    fn abs_sum_is_homogeneous(v in prop::collection::vec(-1.0..1.0f64, 1..8), c in -4.0..4.0f64, seed in any::<u64>()) {
        let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        let rad = SubgaussianDist::rademacher();
        let e = expected_abs_sum(&v, &rad, &all_exact()).unwrap().mean;
        let es = expected_abs_sum(&scaled, &rad, &all_exact()).unwrap().mean;
        assert_relative_eq!(es, c.abs() * e, epsilon = 1e-12);
        let mc = ExpectationEngine::monte_carlo(SubgaussianDist::standard_normal(), 500, seed);
        let g = SubgaussianDist::standard_normal();
        let m = expected_abs_sum(&v, &g, &mc).unwrap().mean;
        let ms = expected_abs_sum(&scaled, &g, &mc).unwrap().mean;
        assert_relative_eq!(ms, c.abs() * m, epsilon = 1e-12, max_relative = 1e-12);
    }

    #[test]
    fn estimates_ignore_parallelism((_n, _k, tables) in shape_and_tables(), seed in any::<u64>()) {
        let class = FunctionClass::from_tables(tables).unwrap();
        let engine = ExpectationEngine::monte_carlo(SubgaussianDist::standard_normal(), 3000, seed);
        let par = complexity_vector(&class, &engine).unwrap();
        let ser = complexity_vector(&class, &engine.serial()).unwrap();
        prop_assert_eq!(par.mean.to_bits(), ser.mean.to_bits());
        prop_assert_eq!(par.std_error.to_bits(), ser.std_error.to_bits());
    }

    #[test]
    fn contraction_never_violated_exactly((n, _k, tables) in shape_and_tables(), scale in 0.1..3.0f64) {
        let class = FunctionClass::from_tables(tables).unwrap();
        let losses = vec![LipschitzLoss::euclidean_norm().scaled(scale); n];
        let r = verify_vector_contraction(&class, &losses, &SubgaussianDist::rademacher(), &all_exact()).unwrap();
        prop_assert_ne!(r.verdict, Verdict::Violated);
        let base = verify_vector_contraction(
            &class, &vec![LipschitzLoss::euclidean_norm(); n], &SubgaussianDist::rademacher(), &all_exact()).unwrap();
        assert_relative_eq!(r.lhs.mean, scale * base.lhs.mean, epsilon = 1e-12, max_relative = 1e-12);
        prop_assert_eq!(r.verdict, base.verdict);
    }

    #[test]
    fn catalog_losses_respect_their_constant(
        u in prop::collection::vec(-3.0..3.0f64, 3),
        v in prop::collection::vec(-3.0..3.0f64, 3),
        anchor in prop::collection::vec(-1.0..1.0f64, 3),
        gamma in 0.2..2.0f64, label in 0..3usize,
    ) {
        let losses = [
            LipschitzLoss::euclidean_norm(),
            LipschitzLoss::max_coordinate(),
            LipschitzLoss::min_coordinate(),
            LipschitzLoss::distance_to(anchor),
            LipschitzLoss::margin(label, gamma).unwrap(),
            LipschitzLoss::euclidean_norm().clamped_unit(),
        ];
        let dist = u.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        for h in &losses {
            let gap = (h.eval(&u).unwrap() - h.eval(&v).unwrap()).abs();
            prop_assert!(gap <= h.lipschitz() * dist + 1e-12, "{:?}: {} > {}", h.kind(), gap, h.lipschitz() * dist);
        }
    }

    #[test]
    fn empirical_lipschitz_scales(
        psi in prop::collection::vec(-1.0..1.0f64, 2..6),
        phi in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 2), 6),
        c in -3.0..3.0f64,
    ) {
        let phi = &phi[..psi.len()];
        let base = empirical_lipschitz(&psi, phi).unwrap();
        let scaled: Vec<f64> = psi.iter().map(|p| c * p).collect();
        assert_relative_eq!(empirical_lipschitz(&scaled, phi).unwrap(), c.abs() * base, epsilon = 1e-9, max_relative = 1e-9);
    }

    #[test]
    fn ltl_reduction_is_lipschitz(
        tasks in 1..3usize, n in 1..3usize, k in 1..3usize, maps in 1..4usize, seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let meta = MetaSample::abstract_points(tasks, n).unwrap();
        let tables = (0..maps)
            .map(|_| DMatrix::from_fn(tasks * n, k, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let class = FunctionClass::from_feature_maps(meta, tables).unwrap();
        let losses = vec![
            LipschitzLoss::euclidean_norm().clamped_unit(),
            LipschitzLoss::distance_to(vec![0.5; k]).scaled(1.5).clamped_unit(),
        ];
        for m in ltl_lipschitz_margins(&class, &losses).unwrap() {
            prop_assert!(m <= 1e-12, "margin {}", m);
        }
    }

    #[test]
    fn bounds_are_monotone(k in 1..6usize, n in 1..200usize, l in 0.0..3.0f64, b in 0.0..3.0f64, meta in 0.0..50.0f64,
                           traces in prop::collection::vec(0.0..2.0f64, 1..5)) {
        prop_assert!(kmeans_bound(k + 1, n).unwrap().value >= kmeans_bound(k, n).unwrap().value);
        prop_assert!(kmeans_bound(k, n + 1).unwrap().value >= kmeans_bound(k, n).unwrap().value);
        let op = |l: f64, b: f64, t: &[f64]| operator_kernel_bound(l, b, t).unwrap().value;
        let bigger: Vec<f64> = traces.iter().map(|t| t + 0.1).collect();
        prop_assert!(op(l + 0.1, b, &traces) >= op(l, b, &traces));
        prop_assert!(op(l, b + 0.1, &traces) >= op(l, b, &traces));
        prop_assert!(op(l, b, &bigger) >= op(l, b, &traces));
        prop_assert!(ltl_reduction_bound(l + 0.1, n, meta).unwrap().value >= ltl_reduction_bound(l, n, meta).unwrap().value);
        prop_assert!(ltl_reduction_bound(l, n, meta + 1.0).unwrap().value >= ltl_reduction_bound(l, n, meta).unwrap().value);
        let s = Sample::from_rows(vec![traces.clone()]).unwrap();
        prop_assert!(frobenius_bound(b + 0.1, &s, k).unwrap().value >= frobenius_bound(b, &s, k).unwrap().value);
        prop_assert!(frobenius_bound(b, &s, k + 1).unwrap().value >= frobenius_bound(b, &s, k).unwrap().value);
    }

    #[test]
    fn refutation_point_is_least(k in 0.05..20.0f64) {
        let n = refute_conjecture(k, usize::MAX).unwrap().unwrap();
        let nf = n as f64;
        prop_assert!(nf / 2.0 > k * nf.sqrt());
        let m = (n - 1) as f64;
        prop_assert!(m / 2.0 <= k * m.sqrt());
    }

    #[test]
    fn max_linear_matches_brute_force(rows in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 4), 1..5)) {
        let tables: Vec<DMatrix<f64>> = rows.iter().map(|r| DMatrix::from_row_slice(4, 1, r)).collect();
        assert_relative_eq!(expected_max_linear(&rows).unwrap(), brute_vector_complexity(&tables), epsilon = 1e-12);
    }
}

#[test]
fn mc_agrees_with_exact_across_seeds() {
    let tables = vec![
        DMatrix::from_row_slice(3, 2, &[0.3, -0.7, 0.9, 0.1, -0.4, 0.5]),
        DMatrix::from_row_slice(3, 2, &[-0.2, 0.6, 0.8, -0.9, 0.2, 0.0]),
        DMatrix::from_row_slice(3, 2, &[0.5, 0.5, -0.5, 0.5, 0.5, -0.5]),
    ];
    let class = FunctionClass::from_tables(tables).unwrap();
    let losses = vec![LipschitzLoss::euclidean_norm(); 3];
    let exact = complexity_scalar(&class, &losses, &all_exact()).unwrap().mean;
    let close = (0..100u64)
        .filter(|&seed| {
            let mc = ExpectationEngine::monte_carlo(SubgaussianDist::rademacher(), 1000, seed);
            let est = complexity_scalar(&class, &losses, &mc).unwrap();
            (est.mean - exact).abs() <= 4.0 * est.std_error
        })
        .count();
    assert!(close >= 99, "{close}/100 seeds within 4 se");
}

#[test]
fn gaussian_estimate_is_rotation_invariant() {
    let g = SubgaussianDist::standard_normal();
    let engine = ExpectationEngine::monte_carlo(g, 100_000, 11);
    let a = expected_abs_sum(&[1.0, 0.0, 0.0], &g, &engine).unwrap();
    let s = 3f64.sqrt().recip();
    let b = expected_abs_sum(&[s, s, s], &g, &engine.with_seed(12)).unwrap();
    assert!((a.mean - b.mean).abs() <= 3.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt());
}
