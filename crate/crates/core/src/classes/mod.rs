//! Vector-valued function classes on a fixed sample, exposed through two sup
//! oracles:
//!
//! - [`FunctionClass::weighted_sup`]: `sup_f Σ_{i,k} A_ik f_k(x_i)`, the inner
//!   supremum of the vector complexity. Exact for every class here.
//! - [`FunctionClass::loss_weighted_sup`]: `sup_f Σ_i σ_i h_i(f(x_i))`, the
//!   inner supremum of the loss-class complexity. Exact for finite classes,
//!   a multi-restart projected-gradient lower bound for continuous ones.

mod ascent;
mod kmeans;
mod linear;
mod ltl;

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lipschitz::LipschitzLoss;

pub use ascent::AscentConfig;
pub use kmeans::{kmeans_lipschitz_check, kmeans_phi, kmeans_psi};
pub use ltl::{ltl_lipschitz_margins, ltl_phi, ltl_psi};

/// Feasibility slack for norm constraints.
pub(crate) const FEASIBILITY_TOL: f64 = 1e-12;

const MAX_PRODUCT_COMBINATIONS: usize = 1 << 20;

/// `n` points in `R^d`. Points may be abstract (`d = 0`) for classes given by
/// value tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl Sample {
    pub fn from_rows(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::Domain("a sample needs at least one point".into()));
        };
        let dim = first.len();
        if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.len() != dim) {
            return Err(Error::mismatch("sample point", dim, format!("{} at point {i}", p.len())));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|x| !x.is_finite())) {
            return Err(Error::Domain(format!("point {i} is not finite")));
        }
        Ok(Sample { points, dim })
    }

    /// Rows of `points` are the sample points.
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        Self::from_rows(points.row_iter().map(|r| r.iter().cloned().collect()).collect())
    }

    /// `n` points without coordinates.
    pub fn abstract_points(n: usize) -> Result<Self> {
        Self::from_rows(vec![Vec::new(); n])
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn sum_squared_norms(&self) -> f64 {
        self.points.iter().map(|p| p.iter().map(|x| x * x).sum::<f64>()).sum()
    }

    /// Index of the first point outside the closed unit ball, if any.
    pub fn first_outside_unit_ball(&self) -> Option<usize> {
        self.points
            .iter()
            .position(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt() > 1.0 + FEASIBILITY_TOL)
    }
}

/// `T` tasks of `n` points each, stored task-major: point `i` of task `t` is
/// row `t*n + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaSample {
    tasks: usize,
    per_task: usize,
    sample: Sample,
}

impl MetaSample {
    pub fn new(tasks: usize, per_task: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if tasks == 0 || per_task == 0 {
            return Err(Error::Domain("a meta-sample needs T >= 1 and n >= 1".into()));
        }
        if points.len() != tasks * per_task {
            return Err(Error::mismatch("meta-sample points", tasks * per_task, points.len()));
        }
        Ok(MetaSample {
            tasks,
            per_task,
            sample: Sample::from_rows(points)?,
        })
    }

    pub fn abstract_points(tasks: usize, per_task: usize) -> Result<Self> {
        Self::new(tasks, per_task, vec![Vec::new(); tasks * per_task])
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    pub fn per_task(&self) -> usize {
        self.per_task
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixNorm {
    Frobenius,
    /// Operator norm; its dual is the nuclear norm.
    Spectral,
}

impl fmt::Display for MatrixNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixNorm::Frobenius => write!(f, "frobenius"),
            MatrixNorm::Spectral => write!(f, "spectral"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    LowerBound,
}

impl Exactness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Exactness::Exact => "EXACT",
            Exactness::LowerBound => "LOWER_BOUND",
        }
    }

    pub(crate) fn and(self, other: Exactness) -> Exactness {
        if self == Exactness::Exact && other == Exactness::Exact {
            Exactness::Exact
        } else {
            Exactness::LowerBound
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassKind {
    /// Explicit `n×K` value tables, one per function.
    Finite { tables: Vec<DMatrix<f64>> },
    /// `x ↦ Wx` with `‖W‖ ≤ radius`, `W` of shape `K×d`.
    LinearNormBall { norm: MatrixNorm, radius: f64 },
    /// `c ↦ (‖x_i - c_1‖², …, ‖x_i - c_K‖²)` over centers in the unit ball.
    KMeansCenters { centers: usize },
    /// Independent scalar components over the same sample.
    Product { components: Vec<FunctionClass> },
    /// Finite set of feature maps `h: X → R^K`, each a `(T·n)×K` table over
    /// the meta-sample.
    FeatureMapFinite { meta: MetaSample, maps: Vec<DMatrix<f64>> },
    /// `x ↦ Tx` for `‖T‖_∞ ≤ 1` on the canonical basis `e_1, …, e_n`.
    OperatorProjection,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Index of the maximizing table or map.
    Index(usize),
    /// Maximizing weight matrix, `K×d`.
    Matrix(DMatrix<f64>),
    /// Maximizing centers, one row per center.
    Centers(DMatrix<f64>),
    Components(Vec<Witness>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupValue {
    pub value: f64,
    pub witness: Witness,
    pub exactness: Exactness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionClass {
    kind: ClassKind,
    sample: Sample,
    output_dim: usize,
}

impl FunctionClass {
    pub fn finite(sample: Sample, tables: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = tables.first() else {
            return Err(Error::EmptyClass);
        };
        let k = first.ncols();
        check_tables(&tables, sample.n(), k)?;
        Ok(FunctionClass {
            kind: ClassKind::Finite { tables },
            sample,
            output_dim: k,
        })
    }

    /// Finite class on an abstract sample sized from the tables.
    pub fn from_tables(tables: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = tables.first().ok_or(Error::EmptyClass)?.nrows();
        Self::finite(Sample::abstract_points(n)?, tables)
    }

    pub fn linear_norm_ball(sample: Sample, norm: MatrixNorm, radius: f64, output_dim: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Domain(format!("radius must be > 0, got {radius}")));
        }
        if output_dim == 0 {
            return Err(Error::Domain("output dimension must be >= 1".into()));
        }
        Ok(FunctionClass {
            kind: ClassKind::LinearNormBall { norm, radius },
            sample,
            output_dim,
        })
    }

    /// K-means class; every sample point must lie in the unit ball.
    pub fn kmeans(sample: Sample, centers: usize) -> Result<Self> {
        if centers == 0 {
            return Err(Error::Domain("K-means needs K >= 1".into()));
        }
        if let Some(i) = sample.first_outside_unit_ball() {
            return Err(Error::Infeasible(format!(
                "sample point {i} has norm {} > 1",
                crate::numeric::norm(sample.point(i))
            )));
        }
        Ok(FunctionClass {
            kind: ClassKind::KMeansCenters { centers },
            sample,
            output_dim: centers,
        })
    }

    pub fn product(components: Vec<FunctionClass>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::EmptyClass);
        };
        let sample = first.sample.clone();
        for (k, c) in components.iter().enumerate() {
            if c.output_dim != 1 {
                return Err(Error::mismatch("product component output", 1, format!("{} at component {k}", c.output_dim)));
            }
            if c.sample != sample {
                return Err(Error::mismatch("product component sample", "shared sample", format!("component {k}")));
            }
        }
        let output_dim = components.len();
        Ok(FunctionClass {
            kind: ClassKind::Product { components },
            sample,
            output_dim,
        })
    }

    pub fn from_feature_maps(meta: MetaSample, maps: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = maps.first() else {
            return Err(Error::EmptyClass);
        };
        let k = first.ncols();
        check_tables(&maps, meta.tasks * meta.per_task, k)?;
        let sample = meta.sample.clone();
        Ok(FunctionClass {
            kind: ClassKind::FeatureMapFinite { meta, maps },
            sample,
            output_dim: k,
        })
    }

    /// Unit ball of operators on `R^n` evaluated at the canonical basis.
    pub fn operator_projection(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("operator class needs n >= 1".into()));
        }
        Ok(FunctionClass {
            kind: ClassKind::OperatorProjection,
            sample: Sample::new(DMatrix::identity(n, n))?,
            output_dim: n,
        })
    }

    pub fn kind(&self) -> &ClassKind {
        &self.kind
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            ClassKind::Finite { .. } => "finite",
            ClassKind::LinearNormBall { norm: MatrixNorm::Frobenius, .. } => "linear-frobenius",
            ClassKind::LinearNormBall { norm: MatrixNorm::Spectral, .. } => "linear-spectral",
            ClassKind::KMeansCenters { .. } => "kmeans",
            ClassKind::Product { .. } => "product",
            ClassKind::FeatureMapFinite { .. } => "feature-map",
            ClassKind::OperatorProjection => "operator-projection",
        }
    }

    /// Exactness of [`Self::weighted_sup`].
    pub fn exactness(&self) -> Exactness {
        match &self.kind {
            ClassKind::Product { components } => components
                .iter()
                .fold(Exactness::Exact, |acc, c| acc.and(c.exactness())),
            _ => Exactness::Exact,
        }
    }

    /// Value tables for classes that are explicit finite sets.
    pub fn finite_tables(&self) -> Option<&[DMatrix<f64>]> {
        match &self.kind {
            ClassKind::Finite { tables } => Some(tables),
            ClassKind::FeatureMapFinite { maps, .. } => Some(maps),
            _ => None,
        }
    }

    pub fn feature_maps(&self) -> Option<(&MetaSample, &[DMatrix<f64>])> {
        match &self.kind {
            ClassKind::FeatureMapFinite { meta, maps } => Some((meta, maps)),
            _ => None,
        }
    }

    /// Number of functions, for finite and product-of-finite classes.
    pub fn cardinality(&self) -> Option<usize> {
        match &self.kind {
            ClassKind::Finite { tables } => Some(tables.len()),
            ClassKind::FeatureMapFinite { maps, .. } => Some(maps.len()),
            ClassKind::Product { components } => components
                .iter()
                .try_fold(1usize, |acc, c| acc.checked_mul(c.cardinality()?)),
            _ => None,
        }
    }

    /// `sup_f Σ_{i,k} A_ik f_k(x_i)` for an `n×K` coefficient matrix.
    pub fn weighted_sup(&self, a: &DMatrix<f64>) -> Result<SupValue> {
        let (n, k) = (self.sample.n(), self.output_dim);
        if a.nrows() != n || a.ncols() != k {
            return Err(Error::mismatch("coefficient matrix", format!("{n}x{k}"), format!("{}x{}", a.nrows(), a.ncols())));
        }
        match &self.kind {
            ClassKind::Finite { tables } | ClassKind::FeatureMapFinite { maps: tables, .. } => {
                let (j, value) = tables
                    .iter()
                    .map(|t| t.dot(a))
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (j, v)| if v > best.1 { (j, v) } else { best });
                Ok(SupValue {
                    value,
                    witness: Witness::Index(j),
                    exactness: Exactness::Exact,
                })
            }
            ClassKind::LinearNormBall { norm, radius } => Ok(linear::dual_sup(&self.sample, *norm, *radius, a)),
            ClassKind::OperatorProjection => Ok(linear::dual_sup(&self.sample, MatrixNorm::Spectral, 1.0, a)),
            ClassKind::KMeansCenters { .. } => Ok(kmeans::weighted_sup(&self.sample, a)),
            ClassKind::Product { components } => {
                let mut value = 0.0;
                let mut witnesses = Vec::with_capacity(components.len());
                let mut exactness = Exactness::Exact;
                for (kk, c) in components.iter().enumerate() {
                    let column = DMatrix::from_iterator(n, 1, a.column(kk).iter().cloned());
                    let s = c.weighted_sup(&column)?;
                    value += s.value;
                    exactness = exactness.and(s.exactness);
                    witnesses.push(s.witness);
                }
                Ok(SupValue {
                    value,
                    witness: Witness::Components(witnesses),
                    exactness,
                })
            }
        }
    }

    pub(crate) fn check_losses(&self, losses: &[LipschitzLoss]) -> Result<()> {
        let n = self.sample.n();
        if losses.len() != n {
            return Err(Error::mismatch("losses", n, losses.len()));
        }
        if let Some(i) = losses.iter().position(|h| !h.accepts(self.output_dim)) {
            return Err(Error::mismatch("loss input", self.output_dim, format!("loss {i} ({})", losses[i])));
        }
        Ok(())
    }

    /// `sup_f Σ_i σ_i h_i(f(x_i))`. `seed` drives the restarts of the ascent
    /// used for continuous classes.
    pub fn loss_weighted_sup(&self, signs: &[f64], losses: &[LipschitzLoss], seed: u64) -> Result<SupValue> {
        self.loss_weighted_sup_with(signs, losses, seed, &AscentConfig::default())
    }

    pub fn loss_weighted_sup_with(
        &self,
        signs: &[f64],
        losses: &[LipschitzLoss],
        seed: u64,
        config: &AscentConfig,
    ) -> Result<SupValue> {
        let n = self.sample.n();
        if signs.len() != n {
            return Err(Error::mismatch("signs", n, signs.len()));
        }
        self.check_losses(losses)?;
        match &self.kind {
            ClassKind::Finite { tables } | ClassKind::FeatureMapFinite { maps: tables, .. } => {
                let mut best = (0, f64::NEG_INFINITY);
                let mut row = vec![0.0; self.output_dim];
                for (j, t) in tables.iter().enumerate() {
                    let mut v = 0.0;
                    for i in 0..n {
                        row.iter_mut().zip(t.row(i).iter()).for_each(|(r, x)| *r = *x);
                        v += signs[i] * losses[i].value(&row);
                    }
                    if v > best.1 {
                        best = (j, v);
                    }
                }
                Ok(SupValue {
                    value: best.1,
                    witness: Witness::Index(best.0),
                    exactness: Exactness::Exact,
                })
            }
            ClassKind::Product { components } => product_loss_sup(components, signs, losses),
            ClassKind::OperatorProjection if losses.iter().all(|h| h.is_euclidean_norm()) => {
                // ‖Te_i‖ ≤ 1, attained for every positive weight by the
                // projection onto span{e_i : σ_i > 0}
                let value = signs.iter().map(|s| s.max(0.0)).sum();
                let diag: Vec<f64> = signs.iter().map(|&s| if s > 0.0 { 1.0 } else { 0.0 }).collect();
                Ok(SupValue {
                    value,
                    witness: Witness::Matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))),
                    exactness: Exactness::Exact,
                })
            }
            ClassKind::OperatorProjection => {
                let model = linear::LinearModel::new(&self.sample, MatrixNorm::Spectral, 1.0, self.output_dim);
                Ok(model.maximize(signs, losses, seed, config))
            }
            ClassKind::LinearNormBall { norm, radius } => {
                let model = linear::LinearModel::new(&self.sample, *norm, *radius, self.output_dim);
                Ok(model.maximize(signs, losses, seed, config))
            }
            ClassKind::KMeansCenters { centers } => {
                let model = kmeans::KMeansModel::new(&self.sample, *centers);
                Ok(model.maximize(signs, losses, seed, config))
            }
        }
    }
}

fn check_tables(tables: &[DMatrix<f64>], n: usize, k: usize) -> Result<()> {
    for (j, t) in tables.iter().enumerate() {
        if t.nrows() != n || t.ncols() != k {
            return Err(Error::mismatch("value table", format!("{n}x{k}"), format!("{}x{} at table {j}", t.nrows(), t.ncols())));
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("table {j} has a non-finite entry")));
        }
    }
    if k == 0 {
        return Err(Error::Domain("output dimension must be >= 1".into()));
    }
    Ok(())
}

fn product_loss_sup(components: &[FunctionClass], signs: &[f64], losses: &[LipschitzLoss]) -> Result<SupValue> {
    let tables: Vec<&[DMatrix<f64>]> = components
        .iter()
        .map(|c| {
            c.finite_tables()
                .ok_or_else(|| Error::Unsupported("loss sup over a product needs finite components".into()))
        })
        .collect::<Result<_>>()?;
    let total = tables
        .iter()
        .try_fold(1usize, |acc, t| acc.checked_mul(t.len()))
        .filter(|&t| t <= MAX_PRODUCT_COMBINATIONS)
        .ok_or_else(|| Error::Unsupported("product class too large to enumerate".into()))?;
    let n = signs.len();
    let k = components.len();
    let mut choice = vec![0usize; k];
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    let mut u = vec![0.0; k];
    for mut code in 0..total {
        for (kk, t) in tables.iter().enumerate() {
            choice[kk] = code % t.len();
            code /= t.len();
        }
        let mut v = 0.0;
        for i in 0..n {
            for kk in 0..k {
                u[kk] = tables[kk][choice[kk]][(i, 0)];
            }
            v += signs[i] * losses[i].value(&u);
        }
        if v > best.1 {
            best = (choice.clone(), v);
        }
    }
    Ok(SupValue {
        value: best.1,
        witness: Witness::Components(best.0.into_iter().map(Witness::Index).collect()),
        exactness: Exactness::Exact,
    })
}
