//! Exact and Monte Carlo engines for expectations of suprema over random
//! sign or noise matrices.
//!
//! Noise cells are laid out row-major: cell `i*K + k` carries `X_ik`.
//! Exact enumeration walks all `2^cells` sign patterns; Monte Carlo draws
//! are keyed by `(seed, draw index)` so results do not depend on the thread
//! count. Per-draw values are collected in draw order and reduced serially.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::classes::{Exactness, FunctionClass, Sample};
use crate::error::{Error, Result};
use crate::lipschitz::LipschitzLoss;
use crate::numeric::norm;
use crate::rng::{derive_seed, draw_stream};
use crate::subgaussian::SubgaussianDist;

/// Largest number of signs enumerated exactly.
pub const EXACT_LIMIT: usize = 20;
pub const DEFAULT_DRAWS: usize = 10_000;
pub const MIN_DRAWS: usize = 100;
pub const DEFAULT_SEED: u64 = 0x5EED;

// Below this many evaluations rayon overhead dominates.
const PARALLEL_THRESHOLD: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Enumerate every sign pattern; Rademacher noise only.
    ExactEnum,
    MonteCarlo,
    /// Exact when the noise is Rademacher and the cell count allows it.
    Auto,
}

/// How an estimate was actually produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    Exact,
    MonteCarlo,
}

impl EstimateMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateMethod::Exact => "EXACT",
            EstimateMethod::MonteCarlo => "MONTE_CARLO",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityEstimate {
    pub mean: f64,
    /// Zero for exact estimates.
    pub std_error: f64,
    /// Sign patterns or Monte Carlo draws averaged.
    pub draws: usize,
    pub method: EstimateMethod,
    /// Whether the per-draw suprema were exact or lower bounds.
    pub exactness: Exactness,
}

impl ComplexityEstimate {
    /// A deterministic, exactly known value.
    pub fn exact(value: f64) -> Self {
        ComplexityEstimate {
            mean: value,
            std_error: 0.0,
            draws: 1,
            method: EstimateMethod::Exact,
            exactness: Exactness::Exact,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.method == EstimateMethod::Exact && self.exactness == Exactness::Exact
    }

    pub fn scaled(&self, c: f64) -> Self {
        ComplexityEstimate {
            mean: c * self.mean,
            std_error: c.abs() * self.std_error,
            ..*self
        }
    }

    pub(crate) fn with_exactness(mut self, exactness: Exactness) -> Self {
        self.exactness = exactness;
        self
    }

    fn from_values(values: &[f64], method: EstimateMethod) -> Self {
        let m = values.len();
        let mean = values.iter().sum::<f64>() / m as f64;
        let std_error = match method {
            EstimateMethod::Exact => 0.0,
            EstimateMethod::MonteCarlo if m > 1 => {
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
                (var / m as f64).sqrt()
            }
            EstimateMethod::MonteCarlo => 0.0,
        };
        ComplexityEstimate {
            mean,
            std_error,
            draws: m,
            method,
            exactness: Exactness::Exact,
        }
    }
}

/// Policy for computing expectations over iid noise cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationEngine {
    pub method: Method,
    pub draws: usize,
    pub seed: u64,
    pub dist: SubgaussianDist,
    /// Evaluate draws on the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl Default for ExpectationEngine {
    fn default() -> Self {
        ExpectationEngine::auto(SubgaussianDist::rademacher(), DEFAULT_DRAWS, DEFAULT_SEED)
    }
}

impl ExpectationEngine {
    /// Exhaustive enumeration of Rademacher signs.
    pub fn exact() -> Self {
        ExpectationEngine {
            method: Method::ExactEnum,
            draws: 0,
            seed: DEFAULT_SEED,
            dist: SubgaussianDist::rademacher(),
            parallel: true,
        }
    }

    pub fn monte_carlo(dist: SubgaussianDist, draws: usize, seed: u64) -> Self {
        ExpectationEngine {
            method: Method::MonteCarlo,
            draws,
            seed,
            dist,
            parallel: true,
        }
    }

    pub fn auto(dist: SubgaussianDist, draws: usize, seed: u64) -> Self {
        ExpectationEngine {
            method: Method::Auto,
            draws,
            seed,
            dist,
            parallel: true,
        }
    }

    pub fn with_dist(&self, dist: SubgaussianDist) -> Self {
        ExpectationEngine { dist, ..*self }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ExpectationEngine { seed, ..*self }
    }

    pub fn with_draws(&self, draws: usize) -> Self {
        ExpectationEngine { draws, ..*self }
    }

    pub fn serial(&self) -> Self {
        ExpectationEngine {
            parallel: false,
            ..*self
        }
    }

    /// Decide how an expectation over `cells` noise variables is computed.
    pub fn resolve(&self, cells: usize) -> Result<EstimateMethod> {
        let exact_ok = self.dist.is_rademacher() && cells <= EXACT_LIMIT;
        match self.method {
            Method::ExactEnum => {
                if !self.dist.is_rademacher() {
                    Err(Error::ExactRequiresRademacher(self.dist.to_string()))
                } else if cells > EXACT_LIMIT {
                    Err(Error::EnumerationTooLarge {
                        cells,
                        limit: EXACT_LIMIT,
                    })
                } else {
                    Ok(EstimateMethod::Exact)
                }
            }
            Method::Auto if exact_ok => Ok(EstimateMethod::Exact),
            Method::Auto | Method::MonteCarlo => {
                if self.draws < MIN_DRAWS {
                    Err(Error::Domain(format!(
                        "Monte Carlo needs at least {MIN_DRAWS} draws, got {}",
                        self.draws
                    )))
                } else {
                    Ok(EstimateMethod::MonteCarlo)
                }
            }
        }
    }

    /// `E f(X)` for `X` a vector of `cells` iid noise variables. The closure
    /// also receives the draw (or pattern) index, for seeding inner searches.
    pub fn expect<F>(&self, cells: usize, f: F) -> Result<ComplexityEstimate>
    where
        F: Fn(&[f64], u64) -> f64 + Sync,
    {
        let mut out = self.expect_many(cells, 1, |x, d, o| o[0] = f(x, d))?;
        Ok(out.remove(0))
    }

    /// Several expectations sharing the same noise draws.
    pub fn expect_many<F>(&self, cells: usize, outputs: usize, f: F) -> Result<Vec<ComplexityEstimate>>
    where
        F: Fn(&[f64], u64, &mut [f64]) + Sync,
    {
        let method = self.resolve(cells)?;
        let count = match method {
            EstimateMethod::Exact => 1usize << cells,
            EstimateMethod::MonteCarlo => self.draws,
        };
        let dist = self.dist;
        let seed = self.seed;
        let eval = |noise: &mut Vec<f64>, out: &mut Vec<f64>, j: usize| {
            match method {
                EstimateMethod::Exact => fill_pattern(j as u64, noise),
                EstimateMethod::MonteCarlo => dist.fill(&mut draw_stream(seed, j as u64), noise),
            }
            f(noise, j as u64, out);
            out.clone()
        };
        let init = || (vec![0.0; cells], vec![0.0; outputs]);
        let rows: Vec<Vec<f64>> = if self.parallel && count >= PARALLEL_THRESHOLD {
            (0..count)
                .into_par_iter()
                .map_init(init, |(noise, out), j| eval(noise, out, j))
                .collect()
        } else {
            let (mut noise, mut out) = init();
            (0..count).map(|j| eval(&mut noise, &mut out, j)).collect()
        };
        Ok((0..outputs)
            .map(|q| {
                let column: Vec<f64> = rows.iter().map(|r| r[q]).collect();
                ComplexityEstimate::from_values(&column, method)
            })
            .collect())
    }
}

/// Signs of pattern `p`: bit `c` set means cell `c` is `-1`.
pub(crate) fn fill_pattern(p: u64, out: &mut [f64]) {
    for (c, x) in out.iter_mut().enumerate() {
        *x = if (p >> c) & 1 == 1 { -1.0 } else { 1.0 };
    }
}

/// `E max_j Σ_c ε_c values[j][c]` over all sign patterns, walking the
/// patterns in Gray-code order so each step updates every candidate sum with
/// a single flip. Sums are recomputed from scratch every 256 steps to bound
/// rounding drift.
pub fn expected_max_linear(values: &[Vec<f64>]) -> Result<f64> {
    let Some(first) = values.first() else {
        return Err(Error::EmptyClass);
    };
    let cells = first.len();
    if values.iter().any(|v| v.len() != cells) {
        return Err(Error::mismatch("expected_max_linear", cells, "ragged rows"));
    }
    if cells > EXACT_LIMIT {
        return Err(Error::EnumerationTooLarge {
            cells,
            limit: EXACT_LIMIT,
        });
    }
    if values.len() == 1 {
        // a single linear function has mean zero under symmetric signs
        return Ok(0.0);
    }
    let total = 1u64 << cells;
    let mut signs = vec![1.0; cells];
    let recompute = |signs: &[f64], sums: &mut [f64]| {
        for (s, row) in sums.iter_mut().zip(values) {
            *s = row.iter().zip(signs).map(|(v, e)| v * e).sum();
        }
    };
    let mut sums = vec![0.0; values.len()];
    recompute(&signs, &mut sums);
    let max_of = |sums: &[f64]| sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = max_of(&sums);
    for step in 1..total {
        let c = step.trailing_zeros() as usize;
        signs[c] = -signs[c];
        if step % 256 == 0 {
            recompute(&signs, &mut sums);
        } else {
            let e = 2.0 * signs[c];
            for (s, row) in sums.iter_mut().zip(values) {
                *s += e * row[c];
            }
        }
        acc += max_of(&sums);
    }
    Ok(acc / total as f64)
}

/// Scalar Rademacher complexity of the loss class:
/// `E sup_f Σ_i ε_i h_i(f(x_i))`. Signs are always Rademacher, whatever the
/// engine's distribution.
pub fn complexity_scalar(
    class: &FunctionClass,
    losses: &[LipschitzLoss],
    engine: &ExpectationEngine,
) -> Result<ComplexityEstimate> {
    let n = class.sample().n();
    if losses.len() != n {
        return Err(Error::mismatch("complexity_scalar losses", n, losses.len()));
    }
    let engine = engine.with_dist(SubgaussianDist::rademacher());
    if let Some(tables) = class.finite_tables() {
        let values = loss_values(tables, losses)?;
        if engine.resolve(n)? == EstimateMethod::Exact {
            return Ok(ComplexityEstimate {
                draws: 1 << n,
                ..ComplexityEstimate::exact(expected_max_linear(&values)?)
            });
        }
        return engine.expect(n, |signs, _| max_linear(&values, signs));
    }
    class.check_losses(losses)?;
    let seed = derive_seed(engine.seed, crate::rng::label("loss-sup"));
    let exactness = std::sync::atomic::AtomicBool::new(true);
    let est = engine.expect(n, |signs, draw| {
        let sup = class
            .loss_weighted_sup(signs, losses, derive_seed(seed, draw))
            .expect("losses validated");
        if sup.exactness == Exactness::LowerBound {
            exactness.store(false, std::sync::atomic::Ordering::Relaxed);
        }
        sup.value
    })?;
    let exactness = if exactness.into_inner() {
        Exactness::Exact
    } else {
        Exactness::LowerBound
    };
    Ok(est.with_exactness(exactness))
}

/// Vector complexity `E sup_f Σ_{i,k} X_ik f_k(x_i)` with `X_ik` drawn from
/// the engine's distribution.
pub fn complexity_vector(class: &FunctionClass, engine: &ExpectationEngine) -> Result<ComplexityEstimate> {
    let n = class.sample().n();
    let k = class.output_dim();
    let cells = n * k;
    if let Some(tables) = class.finite_tables() {
        let values: Vec<Vec<f64>> = tables.iter().map(row_major).collect();
        if engine.resolve(cells)? == EstimateMethod::Exact {
            return Ok(ComplexityEstimate {
                draws: 1 << cells,
                ..ComplexityEstimate::exact(expected_max_linear(&values)?)
            });
        }
        return engine.expect(cells, |x, _| max_linear(&values, x));
    }
    let exactness = class.exactness();
    let est = engine.expect(cells, |x, _| {
        let a = DMatrix::from_row_slice(n, k, x);
        class.weighted_sup(&a).expect("shape checked").value
    })?;
    Ok(est.with_exactness(exactness))
}

/// `E‖Σ_i ε_i x_i‖` over Rademacher signs.
pub fn rademacher_sum_norm(sample: &Sample, engine: &ExpectationEngine) -> Result<ComplexityEstimate> {
    let n = sample.n();
    let d = sample.dim();
    let engine = engine.with_dist(SubgaussianDist::rademacher());
    engine.expect(n, |signs, _| {
        let mut acc = vec![0.0; d];
        for (i, e) in signs.iter().enumerate() {
            for (a, x) in acc.iter_mut().zip(sample.point(i)) {
                *a += e * x;
            }
        }
        norm(&acc)
    })
}

/// Learning-to-learn complexity `R(H, x̄) = E sup_h Σ_t ε_t ψ_t(h)` for a
/// finite feature-map class, with `ψ_t(h)` the best average loss on task `t`.
pub fn ltl_complexity(
    class: &FunctionClass,
    loss_class: &[LipschitzLoss],
    engine: &ExpectationEngine,
) -> Result<ComplexityEstimate> {
    let (meta, maps) = class
        .feature_maps()
        .ok_or_else(|| Error::Unsupported("ltl_complexity needs a feature-map class".into()))?;
    let tasks = meta.tasks();
    let values = (0..maps.len())
        .map(|h| (0..tasks).map(|t| crate::classes::ltl_psi(class, h, t, loss_class)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let engine = engine.with_dist(SubgaussianDist::rademacher());
    if engine.resolve(tasks)? == EstimateMethod::Exact {
        return Ok(ComplexityEstimate {
            draws: 1 << tasks,
            ..ComplexityEstimate::exact(expected_max_linear(&values)?)
        });
    }
    engine.expect(tasks, |signs, _| max_linear(&values, signs))
}

fn max_linear(values: &[Vec<f64>], x: &[f64]) -> f64 {
    values
        .iter()
        .map(|row| row.iter().zip(x).map(|(v, e)| v * e).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn row_major(t: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    for i in 0..t.nrows() {
        for k in 0..t.ncols() {
            out.push(t[(i, k)]);
        }
    }
    out
}

/// Per-table loss values `h_i(row_i)`, one row per table.
fn loss_values(tables: &[DMatrix<f64>], losses: &[LipschitzLoss]) -> Result<Vec<Vec<f64>>> {
    tables
        .iter()
        .map(|t| {
            (0..t.nrows())
                .map(|i| {
                    let row: Vec<f64> = t.row(i).iter().cloned().collect();
                    losses[i].eval(&row)
                })
                .collect()
        })
        .collect()
}
