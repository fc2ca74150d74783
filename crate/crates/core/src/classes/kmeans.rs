//! K-means: centers `c_1, …, c_K` in the unit ball, per-point loss
//! `ψ_i(c) = min_k ‖x_i - c_k‖²` composed from `φ_i(c) = (‖x_i - c_k‖²)_k`.

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;

use super::ascent::{self, AscentConfig, Optimum, Parametric};
use super::{Exactness, Sample, SupValue, Witness, FEASIBILITY_TOL};
use crate::error::{Error, Result};
use crate::lipschitz::{LipschitzLoss, LossKind};
use crate::numeric::{norm, squared_distance};
use crate::rng::draw_stream;

fn check_unit(what: &str, index: usize, v: &[f64]) -> Result<()> {
    let r = norm(v);
    if r > 1.0 + FEASIBILITY_TOL || !r.is_finite() {
        return Err(Error::Infeasible(format!("{what} {index} has norm {r} > 1")));
    }
    Ok(())
}

fn check_centers(centers: &[Vec<f64>], dim: usize) -> Result<()> {
    if centers.is_empty() {
        return Err(Error::Domain("K-means needs K >= 1".into()));
    }
    for (k, c) in centers.iter().enumerate() {
        if c.len() != dim {
            return Err(Error::mismatch("center", dim, format!("{} at center {k}", c.len())));
        }
        check_unit("center", k, c)?;
    }
    Ok(())
}

/// `(‖x - c_1‖², …, ‖x - c_K‖²)`.
pub fn kmeans_phi(centers: &[Vec<f64>], x: &[f64]) -> Result<Vec<f64>> {
    check_centers(centers, x.len())?;
    check_unit("point", 0, x)?;
    Ok(centers.iter().map(|c| squared_distance(x, c)).collect())
}

/// `min_k ‖x - c_k‖²`.
pub fn kmeans_psi(centers: &[Vec<f64>], x: &[f64]) -> Result<f64> {
    Ok(kmeans_phi(centers, x)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// Per-point margins `ψ_i(c) - ψ_i(c') - ‖φ_i(c) - φ_i(c')‖`; never positive
/// beyond rounding.
pub fn kmeans_lipschitz_check(c: &[Vec<f64>], c_prime: &[Vec<f64>], sample: &Sample) -> Result<Vec<f64>> {
    if c.len() != c_prime.len() {
        return Err(Error::mismatch("center tuples", c.len(), c_prime.len()));
    }
    if let Some(i) = sample.first_outside_unit_ball() {
        check_unit("point", i, sample.point(i))?;
    }
    sample
        .points()
        .iter()
        .map(|x| {
            let a = kmeans_phi(c, x)?;
            let b = kmeans_phi(c_prime, x)?;
            let psi = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
            let gap: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
            Ok(psi(&a) - psi(&b) - norm(&gap))
        })
        .collect()
}

/// Best center for `Σ_i w_i ‖x_i - c‖²` over the unit ball, given
/// `mass = Σ_i w_i` and `g = Σ_i w_i x_i`: the center is `-r·g/‖g‖` and the
/// gain over `c = 0` is `mass·r² + 2r‖g‖`, maximized at some `r ∈ [0, 1]`.
fn best_center(mass: f64, g: &[f64], center: &mut [f64]) -> f64 {
    let gn = norm(g);
    let r = if mass >= 0.0 || gn >= -mass { 1.0 } else { gn / -mass };
    let gain = mass * r * r + 2.0 * r * gn;
    center.iter_mut().for_each(|c| *c = 0.0);
    if gain <= 0.0 {
        return 0.0;
    }
    if gn > 0.0 {
        center.iter_mut().zip(g).for_each(|(c, gj)| *c = -r * gj / gn);
    } else if let Some(c) = center.first_mut() {
        *c = r;
    }
    gain
}

/// Exact `sup_c Σ_{i,k} A_ik ‖x_i - c_k‖²`. The objective separates over
/// centers, and for each center it is the quadratic
/// `Σ_i A_ik‖x_i‖² - 2⟨c, g⟩ + a‖c‖²` with `g = Σ_i A_ik x_i`, `a = Σ_i A_ik`.
pub(super) fn weighted_sup(sample: &Sample, a: &DMatrix<f64>) -> SupValue {
    let (n, k, d) = (sample.n(), a.ncols(), sample.dim());
    let mut value = 0.0;
    let mut centers = vec![0.0; k * d];
    let mut g = vec![0.0; d];
    for kk in 0..k {
        g.iter_mut().for_each(|x| *x = 0.0);
        let mut mass = 0.0;
        for i in 0..n {
            let w = a[(i, kk)];
            let x = sample.point(i);
            mass += w;
            value += w * x.iter().map(|v| v * v).sum::<f64>();
            g.iter_mut().zip(x).for_each(|(gj, xj)| *gj += w * xj);
        }
        value += best_center(mass, &g, &mut centers[kk * d..(kk + 1) * d]);
    }
    SupValue {
        value,
        witness: Witness::Centers(DMatrix::from_row_slice(k, d, &centers)),
        exactness: Exactness::Exact,
    }
}

/// Alternation rounds without improvement before a restart gives up.
const STALE_LIMIT: usize = 3;

/// Subgradient steps spent polishing the best alternation result.
const POLISH_STEPS: usize = 50;

/// Index of the nearest center, lowest index on ties, and its squared distance.
fn nearest(x: &[f64], centers: &[f64], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.chunks(d.max(1)).enumerate() {
        let v = squared_distance(x, c);
        if v < best.1 {
            best = (k, v);
        }
    }
    best
}

/// Search for `sup_c Σ_i σ_i min_k ‖x_i - c_k‖²` by alternating between
/// assigning each point to its nearest center and moving every center to its
/// exact optimum for that fixed assignment. Restart 0 places all centers at
/// the single-center optimum; the others start uniformly in the ball. Each
/// restart stops when the assignment repeats or the value stalls.
fn alternating_search(sample: &Sample, k: usize, signs: &[f64], seed: u64, config: &AscentConfig, best: &mut Optimum) {
    let (n, d) = (sample.n(), sample.dim());
    let mut centers = vec![0.0; k * d];
    let mut assign = vec![usize::MAX; n];
    let mut mass = vec![0.0; k];
    let mut g = vec![0.0; k * d];
    for restart in 0..config.restarts.max(1) {
        if d > 0 {
            if restart == 0 {
                let total: f64 = signs.iter().sum();
                let mut gs = vec![0.0; d];
                for (s, x) in signs.iter().zip(sample.points()) {
                    gs.iter_mut().zip(x).for_each(|(gj, xj)| *gj += s * xj);
                }
                best_center(total, &gs, &mut centers[..d]);
                let (first, rest) = centers.split_at_mut(d);
                rest.chunks_mut(d).for_each(|c| c.copy_from_slice(first));
            } else {
                let mut rng = draw_stream(seed, restart as u64);
                centers.chunks_mut(d).for_each(|c| ascent::uniform_in_ball(&mut rng, 1.0, c));
            }
        }
        assign.iter_mut().for_each(|a| *a = usize::MAX);
        let mut local = f64::NEG_INFINITY;
        let mut stale = 0;
        for _ in 0..config.steps.max(1) {
            let mut value = 0.0;
            let mut changed = false;
            for i in 0..n {
                let (kk, dist) = nearest(sample.point(i), &centers, d);
                value += signs[i] * dist;
                changed |= assign[i] != kk;
                assign[i] = kk;
            }
            if value > best.value {
                best.value = value;
                best.theta.copy_from_slice(&centers);
            }
            // positive-weight points can make the assignment cycle
            if value > local + 1e-12 {
                local = value;
                stale = 0;
            } else {
                stale += 1;
            }
            if !changed || stale >= STALE_LIMIT {
                break;
            }
            mass.iter_mut().for_each(|m| *m = 0.0);
            g.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                let kk = assign[i];
                mass[kk] += signs[i];
                for (gj, xj) in g[kk * d..(kk + 1) * d].iter_mut().zip(sample.point(i)) {
                    *gj += signs[i] * xj;
                }
            }
            for kk in 0..k {
                // centers without points keep their position
                if assign.contains(&kk) {
                    best_center(mass[kk], &g[kk * d..(kk + 1) * d], &mut centers[kk * d..(kk + 1) * d]);
                }
            }
        }
    }
}

pub(super) struct KMeansModel<'a> {
    sample: &'a Sample,
    k: usize,
}

impl<'a> KMeansModel<'a> {
    pub(super) fn new(sample: &'a Sample, k: usize) -> Self {
        KMeansModel { sample, k }
    }

    pub(super) fn maximize(&self, signs: &[f64], losses: &[LipschitzLoss], seed: u64, config: &AscentConfig) -> SupValue {
        let best = if losses.iter().all(|h| matches!(h.kind(), LossKind::MinCoordinate)) {
            // alternation finds the basin cheaply; a subgradient run from the
            // best point found polishes it
            let mut best = Optimum {
                value: f64::NEG_INFINITY,
                theta: vec![0.0; self.param_len()],
            };
            alternating_search(self.sample, self.k, signs, seed, config, &mut best);
            let mut theta = best.theta.clone();
            let steps = config.steps.min(POLISH_STEPS);
            ascent::climb(self, &mut theta, signs, losses, steps, config, &mut best);
            best
        } else {
            ascent::maximize(self, signs, losses, seed, config)
        };
        SupValue {
            value: best.value,
            witness: Witness::Centers(DMatrix::from_row_slice(self.k, self.sample.dim(), &best.theta)),
            exactness: Exactness::LowerBound,
        }
    }
}

impl Parametric for KMeansModel<'_> {
    fn n(&self) -> usize {
        self.sample.n()
    }

    fn k(&self) -> usize {
        self.k
    }

    fn param_len(&self) -> usize {
        self.k * self.sample.dim()
    }

    fn project(&self, theta: &mut [f64]) {
        let d = self.sample.dim();
        if d > 0 {
            theta.chunks_mut(d).for_each(|c| ascent::project_ball(c, 1.0));
        }
    }

    fn random_start(&self, rng: &mut ChaCha8Rng, theta: &mut [f64]) {
        let d = self.sample.dim();
        if d > 0 {
            theta.chunks_mut(d).for_each(|c| ascent::uniform_in_ball(rng, 1.0, c));
        }
    }

    fn output(&self, theta: &[f64], i: usize, out: &mut [f64]) {
        let x = self.sample.point(i);
        let d = x.len();
        for (kk, o) in out.iter_mut().enumerate() {
            *o = squared_distance(x, &theta[kk * d..(kk + 1) * d]);
        }
    }

    fn pullback(&self, theta: &[f64], i: usize, g: &[f64], grad: &mut [f64]) {
        let x = self.sample.point(i);
        let d = x.len();
        for (kk, gk) in g.iter().enumerate() {
            if *gk != 0.0 {
                let c = &theta[kk * d..(kk + 1) * d];
                for ((gr, cj), xj) in grad[kk * d..(kk + 1) * d].iter_mut().zip(c).zip(x) {
                    *gr += 2.0 * gk * (cj - xj);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::FunctionClass;
    use approx::assert_abs_diff_eq;

    #[test]
    fn psi_examples() {
        let e = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(kmeans_psi(&e, &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(kmeans_psi(&e, &[0.0, 0.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(kmeans_psi(&e, &[0.5, 0.0]).unwrap(), 0.25, epsilon = 1e-15);
        assert!(kmeans_psi(&[vec![1.5, 0.0]], &[0.0, 0.0]).is_err());
        assert!(kmeans_psi(&e, &[0.9, 0.9]).is_err());
    }

    #[test]
    fn lipschitz_margins_never_positive() {
        let mut rng = draw_stream(11, 0);
        let mut random_unit = |m: usize| -> Vec<Vec<f64>> {
            (0..m)
                .map(|_| {
                    let mut v = vec![0.0; 3];
                    ascent::uniform_in_ball(&mut rng, 1.0, &mut v);
                    v
                })
                .collect()
        };
        let sample = Sample::from_rows(random_unit(10)).unwrap();
        for _ in 0..100 {
            let (c, cp) = (random_unit(3), random_unit(3));
            let margins = kmeans_lipschitz_check(&c, &cp, &sample).unwrap();
            assert!(margins.iter().all(|&m| m <= 1e-12));
            assert!(kmeans_lipschitz_check(&c, &c, &sample).unwrap().iter().all(|&m| m == 0.0));
        }
    }

    #[test]
    fn closed_form_matches_grid_search() {
        // d = 1, K = 1: brute force over a fine grid of centers in [-1, 1]
        let sample = Sample::from_rows(vec![vec![0.3], vec![-0.8], vec![0.9]]).unwrap();
        let grid = |a: &[f64]| {
            (0..=20_000)
                .map(|j| -1.0 + j as f64 / 10_000.0)
                .map(|c| a.iter().zip(sample.points()).map(|(w, x)| w * (x[0] - c).powi(2)).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max)
        };
        for a in [[1.0, -1.0, 1.0], [-1.0, -1.0, 1.0], [-1.0, -1.0, -1.0], [0.5, 2.0, -3.0]] {
            let exact = weighted_sup(&sample, &DMatrix::from_column_slice(3, 1, &a)).value;
            assert!((exact - grid(&a)).abs() < 1e-6, "{a:?}: {exact} vs {}", grid(&a));
        }
    }

    #[test]
    fn ascent_reaches_closed_form_for_single_center() {
        // with K = 1 the min loss is the identity, so both oracles agree
        let sample = Sample::from_rows(vec![vec![0.5, 0.1], vec![-0.2, 0.7], vec![0.0, -0.9], vec![0.3, 0.3]]).unwrap();
        let class = FunctionClass::kmeans(sample.clone(), 1).unwrap();
        let signs = [1.0, -1.0, -1.0, 1.0];
        let losses = vec![LipschitzLoss::min_coordinate(); 4];
        let lower = class.loss_weighted_sup(&signs, &losses, 5).unwrap();
        let exact = class.weighted_sup(&DMatrix::from_column_slice(4, 1, &signs)).unwrap();
        assert_eq!(lower.exactness, Exactness::LowerBound);
        assert!(lower.value <= exact.value + 1e-12);
        assert!(lower.value >= exact.value - 1e-3);
    }

    #[test]
    fn min_loss_sup_stays_below_grid_optimum() {
        // d = 1, K = 2: the exact sup over a grid of center pairs bounds the
        // alternating search from above up to the grid resolution
        let xs = [0.9, -0.4, 0.1, -1.0, 0.55, 0.3];
        let sample = Sample::from_rows(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let class = FunctionClass::kmeans(sample, 2).unwrap();
        let losses = vec![LipschitzLoss::min_coordinate(); xs.len()];
        let h = 1e-3;
        let grid: Vec<f64> = (0..=2000).map(|j| -1.0 + j as f64 * h).collect();
        for signs in [[1.0, -1.0, 1.0, -1.0, 1.0, -1.0], [-1.0, -1.0, 1.0, 1.0, -1.0, 1.0], [1.0; 6], [-1.0; 6]] {
            let objective = |a: f64, b: f64| -> f64 {
                xs.iter().zip(&signs).map(|(x, s)| s * (x - a).powi(2).min((x - b).powi(2))).sum()
            };
            let mut exact = f64::NEG_INFINITY;
            for &a in &grid {
                for &b in &grid {
                    exact = exact.max(objective(a, b));
                }
            }
            let found = class.loss_weighted_sup(&signs, &losses, 9).unwrap();
            // the objective moves by at most Σ|σ_i|·4·h per grid step
            let slack = 6.0 * 4.0 * h;
            assert!(found.value <= exact + slack, "{signs:?}: {} > {exact}", found.value);
            assert!(found.value >= exact - 1e-2, "{signs:?}: {} << {exact}", found.value);
            let Witness::Centers(c) = found.witness else { panic!() };
            assert!((objective(c[(0, 0)], c[(1, 0)]) - found.value).abs() < 1e-12);
        }
    }
}
