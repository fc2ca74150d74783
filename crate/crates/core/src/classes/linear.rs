//! Linear maps `x ↦ Wx` with `W` in a Frobenius or spectral norm ball.

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;

use super::ascent::{self, AscentConfig, Parametric};
use super::{Exactness, MatrixNorm, Sample, SupValue, Witness};
use crate::lipschitz::LipschitzLoss;

/// `D = Aᵀ X`, the `K×d` matrix with rows `D_k = Σ_i A_ik x_i`.
fn aggregate(sample: &Sample, a: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k, d) = (sample.n(), a.ncols(), sample.dim());
    let mut out = DMatrix::zeros(k, d);
    for i in 0..n {
        let x = sample.point(i);
        for kk in 0..k {
            let w = a[(i, kk)];
            if w != 0.0 {
                for (j, xj) in x.iter().enumerate() {
                    out[(kk, j)] += w * xj;
                }
            }
        }
    }
    out
}

/// `sup_{‖W‖ ≤ B} ⟨W, D⟩ = B ‖D‖_*` with the maximizer.
pub(super) fn dual_sup(sample: &Sample, norm: MatrixNorm, radius: f64, a: &DMatrix<f64>) -> SupValue {
    let d = aggregate(sample, a);
    let (value, witness) = match norm {
        MatrixNorm::Frobenius => {
            let f = d.norm();
            let w = if f > 0.0 { &d * (radius / f) } else { DMatrix::zeros(d.nrows(), d.ncols()) };
            (radius * f, w)
        }
        MatrixNorm::Spectral => {
            if d.is_empty() {
                (0.0, d.clone())
            } else {
                let svd = d.clone().svd(true, true);
                let nuclear: f64 = svd.singular_values.iter().sum();
                let u = svd.u.expect("requested U");
                let v_t = svd.v_t.expect("requested V^T");
                (radius * nuclear, (u * v_t) * radius)
            }
        }
    };
    SupValue {
        value,
        witness: Witness::Matrix(witness),
        exactness: Exactness::Exact,
    }
}

pub(super) struct LinearModel<'a> {
    sample: &'a Sample,
    norm: MatrixNorm,
    radius: f64,
    k: usize,
}

impl<'a> LinearModel<'a> {
    pub(super) fn new(sample: &'a Sample, norm: MatrixNorm, radius: f64, k: usize) -> Self {
        LinearModel { sample, norm, radius, k }
    }

    pub(super) fn maximize(&self, signs: &[f64], losses: &[LipschitzLoss], seed: u64, config: &AscentConfig) -> SupValue {
        let best = ascent::maximize(self, signs, losses, seed, config);
        SupValue {
            value: best.value,
            witness: Witness::Matrix(DMatrix::from_row_slice(self.k, self.sample.dim(), &best.theta)),
            exactness: Exactness::LowerBound,
        }
    }
}

impl Parametric for LinearModel<'_> {
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
        match self.norm {
            MatrixNorm::Frobenius => ascent::project_ball(theta, self.radius),
            MatrixNorm::Spectral => {
                let d = self.sample.dim();
                if d == 0 {
                    return;
                }
                let w = DMatrix::from_row_slice(self.k, d, theta);
                let mut svd = w.svd(true, true);
                if svd.singular_values.iter().all(|&s| s <= self.radius) {
                    return;
                }
                svd.singular_values.iter_mut().for_each(|s| *s = s.min(self.radius));
                let clipped = svd.recompose().expect("U and V^T were requested");
                for kk in 0..self.k {
                    for j in 0..d {
                        theta[kk * d + j] = clipped[(kk, j)];
                    }
                }
            }
        }
    }

    fn random_start(&self, rng: &mut ChaCha8Rng, theta: &mut [f64]) {
        ascent::uniform_in_ball(rng, self.radius, theta);
    }

    fn output(&self, theta: &[f64], i: usize, out: &mut [f64]) {
        let x = self.sample.point(i);
        let d = x.len();
        for (kk, o) in out.iter_mut().enumerate() {
            *o = crate::numeric::dot(&theta[kk * d..(kk + 1) * d], x);
        }
    }

    fn pullback(&self, _theta: &[f64], i: usize, g: &[f64], grad: &mut [f64]) {
        let x = self.sample.point(i);
        let d = x.len();
        for (kk, gk) in g.iter().enumerate() {
            if *gk != 0.0 {
                for (gr, xj) in grad[kk * d..(kk + 1) * d].iter_mut().zip(x) {
                    *gr += gk * xj;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spectral_dual_is_nuclear_norm() {
        let sample = Sample::new(DMatrix::identity(3, 3)).unwrap();
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.0, 3.0]);
        let s = dual_sup(&sample, MatrixNorm::Spectral, 2.0, &a);
        assert_abs_diff_eq!(s.value, 2.0 * crate::numeric::nuclear_norm(&a.transpose()), epsilon = 1e-12);
        let Witness::Matrix(w) = s.witness else { panic!() };
        assert!(crate::numeric::spectral_norm(&w) <= 2.0 + 1e-9);
        assert_abs_diff_eq!(w.dot(&a.transpose()), s.value, epsilon = 1e-9);
    }

    #[test]
    fn spectral_projection_clips_singular_values() {
        let sample = Sample::new(DMatrix::identity(2, 2)).unwrap();
        let model = LinearModel::new(&sample, MatrixNorm::Spectral, 1.0, 2);
        let mut theta = vec![3.0, 0.0, 0.0, 0.5];
        model.project(&mut theta);
        assert_abs_diff_eq!(theta.as_slice(), [1.0, 0.0, 0.0, 0.5].as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn ascent_recovers_linear_optimum() {
        // with the identity loss on K = 1 the loss sup equals the dual norm
        let sample = Sample::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]]).unwrap();
        let model = LinearModel::new(&sample, MatrixNorm::Frobenius, 1.0, 1);
        let signs = [1.0, -1.0, 1.0];
        let losses = vec![LipschitzLoss::identity(); 3];
        let s = model.maximize(&signs, &losses, 3, &AscentConfig::default());
        let exact = dual_sup(&sample, MatrixNorm::Frobenius, 1.0, &DMatrix::from_column_slice(3, 1, &signs)).value;
        assert!(s.value <= exact + 1e-12);
        assert!(s.value >= exact - 1e-3, "{} vs {exact}", s.value);
    }
}
