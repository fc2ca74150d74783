//! Lipschitz functions `h: R^K -> R` with certified constants, and the
//! empirical Lipschitz constant of a finite `(ψ, φ)` family.

use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::{distance, norm};

#[derive(Debug, Clone, PartialEq)]
pub enum LossKind {
    EuclideanNorm,
    MaxCoordinate,
    MinCoordinate,
    /// `u ↦ u_k`.
    Coordinate(usize),
    DistanceToPoint(Vec<f64>),
    /// `clip(1 - (u_y - max_{k≠y} u_k)/γ, 0, 1)` with a 0-based label `y`.
    Margin { label: usize, margin: f64 },
    Constant(f64),
    Scaled { factor: f64, inner: Box<LipschitzLoss> },
    /// Inner loss clipped to `[0, 1]`.
    Clamped(Box<LipschitzLoss>),
    /// Table of `(point, value)` pairs, extended to all of `R^K` by the
    /// McShane formula `min_j v_j + L‖u - p_j‖`.
    Custom { points: Vec<Vec<f64>>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzLoss {
    kind: LossKind,
    lipschitz: f64,
}

impl LipschitzLoss {
    pub fn euclidean_norm() -> Self {
        Self::with_constant(LossKind::EuclideanNorm, 1.0)
    }

    pub fn max_coordinate() -> Self {
        Self::with_constant(LossKind::MaxCoordinate, 1.0)
    }

    pub fn min_coordinate() -> Self {
        Self::with_constant(LossKind::MinCoordinate, 1.0)
    }

    pub fn coordinate(k: usize) -> Self {
        Self::with_constant(LossKind::Coordinate(k), 1.0)
    }

    /// The identity on `R`.
    pub fn identity() -> Self {
        Self::coordinate(0)
    }

    pub fn distance_to(anchor: Vec<f64>) -> Self {
        Self::with_constant(LossKind::DistanceToPoint(anchor), 1.0)
    }

    /// Clipped margin hinge; the margin map has constant `√2`, so `L = √2/γ`.
    pub fn margin(label: usize, margin: f64) -> Result<Self> {
        if !(margin.is_finite() && margin > 0.0) {
            return Err(Error::Domain(format!("margin must be > 0, got {margin}")));
        }
        Ok(Self::with_constant(
            LossKind::Margin { label, margin },
            2f64.sqrt() / margin,
        ))
    }

    pub fn constant(c: f64) -> Self {
        Self::with_constant(LossKind::Constant(c), 0.0)
    }

    pub fn scaled(self, factor: f64) -> Self {
        let lipschitz = factor.abs() * self.lipschitz;
        Self::with_constant(
            LossKind::Scaled {
                factor,
                inner: Box::new(self),
            },
            lipschitz,
        )
    }

    pub fn clamped_unit(self) -> Self {
        let lipschitz = self.lipschitz;
        Self::with_constant(LossKind::Clamped(Box::new(self)), lipschitz)
    }

    /// A table-defined loss whose constant is certified from the table itself.
    pub fn custom(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != values.len() {
            return Err(Error::mismatch("custom loss table", points.len(), values.len()));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::mismatch("custom loss points", dim, "ragged points"));
        }
        let lipschitz = empirical_lipschitz(&values, &points)?;
        Ok(Self::with_constant(LossKind::Custom { points, values }, lipschitz))
    }

    fn with_constant(kind: LossKind, lipschitz: f64) -> Self {
        LipschitzLoss { kind, lipschitz }
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    /// Certified Lipschitz constant with respect to the Euclidean norm.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn is_euclidean_norm(&self) -> bool {
        matches!(self.kind, LossKind::EuclideanNorm)
    }

    /// Input dimension the loss requires, if it fixes one. Coordinate and
    /// margin losses only give a lower bound, checked in [`Self::accepts`].
    fn fixed_dim(&self) -> Option<usize> {
        match &self.kind {
            LossKind::DistanceToPoint(a) => Some(a.len()),
            LossKind::Custom { points, .. } => Some(points[0].len()),
            LossKind::Scaled { inner, .. } | LossKind::Clamped(inner) => inner.fixed_dim(),
            _ => None,
        }
    }

    fn min_dim(&self) -> usize {
        match &self.kind {
            LossKind::Coordinate(k) => k + 1,
            LossKind::Margin { label, .. } => (label + 1).max(2),
            LossKind::MaxCoordinate | LossKind::MinCoordinate => 1,
            LossKind::Scaled { inner, .. } | LossKind::Clamped(inner) => inner.min_dim(),
            _ => 0,
        }
    }

    /// Whether the loss is defined on `R^dim`.
    pub fn accepts(&self, dim: usize) -> bool {
        self.fixed_dim().is_none_or(|d| d == dim) && dim >= self.min_dim()
    }

    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        if !self.accepts(u.len()) {
            return Err(Error::mismatch(
                "loss input",
                self.fixed_dim().unwrap_or(self.min_dim()),
                u.len(),
            ));
        }
        Ok(self.value(u))
    }

    /// Evaluate without checking the dimension.
    pub(crate) fn value(&self, u: &[f64]) -> f64 {
        match &self.kind {
            LossKind::EuclideanNorm => norm(u),
            LossKind::MaxCoordinate => u.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            LossKind::MinCoordinate => u.iter().cloned().fold(f64::INFINITY, f64::min),
            LossKind::Coordinate(k) => u[*k],
            LossKind::DistanceToPoint(a) => distance(u, a),
            LossKind::Margin { label, margin } => {
                let (m, _) = margin_value(u, *label);
                (1.0 - m / margin).clamp(0.0, 1.0)
            }
            LossKind::Constant(c) => *c,
            LossKind::Scaled { factor, inner } => factor * inner.value(u),
            LossKind::Clamped(inner) => inner.value(u).clamp(0.0, 1.0),
            LossKind::Custom { points, values } => mcshane(points, values, self.lipschitz, u).0,
        }
    }

    /// A subgradient at `u`, written into `out`. Ties go to the lowest index.
    pub(crate) fn subgradient(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        match &self.kind {
            LossKind::EuclideanNorm => {
                let r = norm(u);
                if r > 0.0 {
                    out.iter_mut().zip(u).for_each(|(g, x)| *g = x / r);
                }
            }
            LossKind::MaxCoordinate => out[argbest(u, |a, b| a > b)] = 1.0,
            LossKind::MinCoordinate => out[argbest(u, |a, b| a < b)] = 1.0,
            LossKind::Coordinate(k) => out[*k] = 1.0,
            LossKind::DistanceToPoint(a) => unit_direction(u, a, 1.0, out),
            LossKind::Margin { label, margin } => {
                let (m, rival) = margin_value(u, *label);
                let raw = 1.0 - m / margin;
                if raw > 0.0 && raw < 1.0 {
                    out[*label] = -1.0 / margin;
                    out[rival] = 1.0 / margin;
                }
            }
            LossKind::Constant(_) => {}
            LossKind::Scaled { factor, inner } => {
                inner.subgradient(u, out);
                out.iter_mut().for_each(|g| *g *= factor);
            }
            LossKind::Clamped(inner) => {
                let v = inner.value(u);
                if v > 0.0 && v < 1.0 {
                    inner.subgradient(u, out);
                }
            }
            LossKind::Custom { points, values } => {
                let (_, j) = mcshane(points, values, self.lipschitz, u);
                unit_direction(u, &points[j], self.lipschitz, out);
            }
        }
    }

    /// Parse a catalog entry: `norm`, `max`, `min`, `coord:<k>`,
    /// `dist:<a1>,<a2>,..`, `margin:<label>:<gamma>`, `const:<c>`,
    /// `scale:<c>:<inner>` or `clamp:<inner>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = |what: &str| Error::Config(format!("bad loss {spec:?}: {what}"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("expected a number"));
        let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
        match head {
            "norm" => Ok(Self::euclidean_norm()),
            "max" => Ok(Self::max_coordinate()),
            "min" => Ok(Self::min_coordinate()),
            "coord" => Ok(Self::coordinate(rest.trim().parse().map_err(|_| bad("expected an index"))?)),
            "dist" => Ok(Self::distance_to(
                rest.split(',').map(num).collect::<Result<Vec<_>>>()?,
            )),
            "margin" => {
                let (label, gamma) = rest.split_once(':').ok_or_else(|| bad("expected margin:<label>:<gamma>"))?;
                Self::margin(label.trim().parse().map_err(|_| bad("expected a label"))?, num(gamma)?)
            }
            "const" => Ok(Self::constant(num(rest)?)),
            "scale" => {
                let (c, inner) = rest.split_once(':').ok_or_else(|| bad("expected scale:<c>:<inner>"))?;
                Ok(Self::parse(inner)?.scaled(num(c)?))
            }
            "clamp" => Ok(Self::parse(rest)?.clamped_unit()),
            _ => Err(bad("unknown loss")),
        }
    }
}

impl fmt::Display for LipschitzLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LossKind::EuclideanNorm => write!(f, "norm"),
            LossKind::MaxCoordinate => write!(f, "max"),
            LossKind::MinCoordinate => write!(f, "min"),
            LossKind::Coordinate(k) => write!(f, "coord:{k}"),
            LossKind::DistanceToPoint(a) => {
                let a: Vec<String> = a.iter().map(|x| x.to_string()).collect();
                write!(f, "dist:{}", a.join(","))
            }
            LossKind::Margin { label, margin } => write!(f, "margin:{label}:{margin}"),
            LossKind::Constant(c) => write!(f, "const:{c}"),
            LossKind::Scaled { factor, inner } => write!(f, "scale:{factor}:{inner}"),
            LossKind::Clamped(inner) => write!(f, "clamp:{inner}"),
            LossKind::Custom { values, .. } => write!(f, "custom[{}]", values.len()),
        }
    }
}

fn margin_value(u: &[f64], label: usize) -> (f64, usize) {
    let mut rival = usize::MAX;
    let mut best = f64::NEG_INFINITY;
    for (k, &x) in u.iter().enumerate() {
        if k != label && x > best {
            best = x;
            rival = k;
        }
    }
    (u[label] - best, rival)
}

fn argbest(u: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut j = 0;
    for (k, &x) in u.iter().enumerate().skip(1) {
        if better(x, u[j]) {
            j = k;
        }
    }
    j
}

fn unit_direction(u: &[f64], anchor: &[f64], scale: f64, out: &mut [f64]) {
    let r = distance(u, anchor);
    if r > 0.0 {
        for ((g, x), a) in out.iter_mut().zip(u).zip(anchor) {
            *g = scale * (x - a) / r;
        }
    }
}

fn mcshane(points: &[Vec<f64>], values: &[f64], l: f64, u: &[f64]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (j, (p, v)) in points.iter().zip(values).enumerate() {
        let cand = v + l * distance(u, p);
        if cand < best.0 {
            best = (cand, j);
        }
    }
    best
}

/// Smallest `L` with `ψ(s) - ψ(s') ≤ L‖φ(s) - φ(s')‖` over all ordered pairs.
///
/// Pairs with coinciding `φ` must have equal `ψ`, otherwise no finite
/// constant exists. A single element gives `0`.
pub fn empirical_lipschitz(psi: &[f64], phi: &[Vec<f64>]) -> Result<f64> {
    if psi.len() != phi.len() {
        return Err(Error::mismatch("empirical_lipschitz", psi.len(), phi.len()));
    }
    let mut best: f64 = 0.0;
    for s in 0..psi.len() {
        for t in 0..psi.len() {
            if s == t {
                continue;
            }
            let gap = distance(&phi[s], &phi[t]);
            let rise = psi[s] - psi[t];
            if gap == 0.0 {
                if rise != 0.0 {
                    return Err(Error::NoFiniteLipschitz(s.min(t), s.max(t)));
                }
                continue;
            }
            best = best.max(rise / gap);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn catalog() -> Vec<LipschitzLoss> {
        vec![
            LipschitzLoss::euclidean_norm(),
            LipschitzLoss::max_coordinate(),
            LipschitzLoss::min_coordinate(),
            LipschitzLoss::coordinate(2),
            LipschitzLoss::distance_to(vec![0.3, -0.2, 1.0]),
            LipschitzLoss::margin(1, 0.5).unwrap(),
            LipschitzLoss::margin(0, 2.0).unwrap(),
            LipschitzLoss::constant(0.7),
            LipschitzLoss::euclidean_norm().scaled(-2.5),
            LipschitzLoss::distance_to(vec![1.0, 1.0, 1.0]).scaled(3.0).clamped_unit(),
            LipschitzLoss::custom(
                vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 2.0, -1.0]],
                vec![0.0, 0.5, -1.0],
            )
            .unwrap(),
        ]
    }

    #[test]
    fn eval_examples() {
        assert_eq!(LipschitzLoss::euclidean_norm().eval(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(LipschitzLoss::max_coordinate().eval(&[-1.0, 2.0, 0.0]).unwrap(), 2.0);
        assert_eq!(LipschitzLoss::margin(0, 1.0).unwrap().eval(&[2.0, 0.0]).unwrap(), 0.0);
        assert_eq!(LipschitzLoss::margin(1, 1.0).unwrap().eval(&[2.0, 0.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(LipschitzLoss::margin(0, 2.0).unwrap().eval(&[1.0, 0.0]).unwrap(), 0.5);
        assert!(LipschitzLoss::distance_to(vec![0.0, 0.0]).eval(&[1.0]).is_err());
        assert!(LipschitzLoss::coordinate(3).eval(&[1.0, 2.0]).is_err());
        assert_abs_diff_eq!(LipschitzLoss::margin(0, 1.0).unwrap().lipschitz(), 2f64.sqrt());
    }

    #[test]
    fn catalog_constants_are_certified() {
        let mut rng = crate::rng::draw_stream(5, 0);
        for loss in catalog() {
            for _ in 0..10_000 {
                let u: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
                let lhs = (loss.value(&u) - loss.value(&v)).abs();
                assert!(lhs <= loss.lipschitz() * distance(&u, &v) + 1e-12, "{loss}");
            }
        }
    }

    #[test]
    fn subgradients_match_finite_differences() {
        let mut rng = crate::rng::draw_stream(6, 0);
        let h = 1e-6;
        for loss in catalog() {
            for _ in 0..200 {
                let u: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                let mut g = vec![0.0; 3];
                loss.subgradient(&u, &mut g);
                for k in 0..3 {
                    let mut up = u.clone();
                    up[k] += h;
                    let mut dn = u.clone();
                    dn[k] -= h;
                    let fd = (loss.value(&up) - loss.value(&dn)) / (2.0 * h);
                    // kinks are measure zero; skip pairs that straddle one
                    let right = (loss.value(&up) - loss.value(&u)) / h;
                    let left = (loss.value(&u) - loss.value(&dn)) / h;
                    if (right - left).abs() < 1e-4 {
                        assert!((fd - g[k]).abs() < 1e-4, "{loss} at {u:?}: {fd} vs {}", g[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn custom_reproduces_table() {
        let points = vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![1.0, 1.0]];
        let values = vec![1.0, 2.0, 0.5];
        let loss = LipschitzLoss::custom(points.clone(), values.clone()).unwrap();
        for (p, v) in points.iter().zip(&values) {
            assert_abs_diff_eq!(loss.eval(p).unwrap(), *v, epsilon = 1e-15);
        }
    }

    #[test]
    fn empirical_lipschitz_examples() {
        let phi = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
        assert_eq!(empirical_lipschitz(&[0.0, 5.0], &phi).unwrap(), 1.0);
        assert_eq!(empirical_lipschitz(&[0.0, 10.0], &phi).unwrap(), 2.0);
        assert_eq!(empirical_lipschitz(&[3.0], &phi[..1]).unwrap(), 0.0);
        let dup = vec![vec![1.0], vec![1.0]];
        assert!(matches!(empirical_lipschitz(&[0.0, 1.0], &dup), Err(Error::NoFiniteLipschitz(0, 1))));
        assert_eq!(empirical_lipschitz(&[1.0, 1.0], &dup).unwrap(), 0.0);
    }

    #[test]
    fn empirical_lipschitz_matches_pairwise_brute_force() {
        let mut rng = crate::rng::draw_stream(9, 0);
        for _ in 0..20 {
            let phi: Vec<Vec<f64>> = (0..8).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let psi: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            // unordered pairs with absolute differences: 28 of them
            let mut brute: f64 = 0.0;
            let mut pairs = 0;
            for s in 0..8 {
                for t in s + 1..8 {
                    let d = ((0..3).map(|k| (phi[s][k] - phi[t][k]).powi(2)).sum::<f64>()).sqrt();
                    brute = brute.max((psi[s] - psi[t]).abs() / d);
                    pairs += 1;
                }
            }
            assert_eq!(pairs, 28);
            assert_abs_diff_eq!(empirical_lipschitz(&psi, &phi).unwrap(), brute, epsilon = 1e-15);
        }
    }

    #[test]
    fn parse_round_trips_catalog_names() {
        for spec in ["norm", "max", "min", "coord:1", "dist:0.5,1", "margin:0:0.5", "const:0.3", "scale:2:norm", "clamp:dist:0,0"] {
            let loss = LipschitzLoss::parse(spec).unwrap();
            assert_eq!(LipschitzLoss::parse(&loss.to_string()).unwrap(), loss);
        }
        assert!(LipschitzLoss::parse("hinge").is_err());
    }
}
