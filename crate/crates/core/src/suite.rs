//! Reproducible verification suites. Each suite draws its random instances
//! from the run seed, checks one family of inequalities at a fixed tolerance,
//! and emits CSV rows plus a pass/fail outcome.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bounds::{frobenius_bound, kmeans_bound, ltl_reduction_bound};
use crate::classes::{FunctionClass, MatrixNorm, MetaSample, Sample};
use crate::contraction::{
    product_identity_check, theorem1_coverage_experiment, verify_vector_contraction, Verdict, VerificationReport,
};
use crate::counterexample::{counterexample_instance, counterexample_mc_crosscheck};
use crate::error::{Error, Result};
use crate::estimator::{
    complexity_scalar, complexity_vector, ltl_complexity, ComplexityEstimate, EstimateMethod, ExpectationEngine,
};
use crate::lipschitz::LipschitzLoss;
use crate::numeric::norm;
use crate::rng::{derive_seed, draw_stream, label};
use crate::subgaussian::{khintchine_lower_check, tail_bound, SubgaussianDist};

/// One CSV line: `instance_id,quantity,mean,std_error,method,bound,verdict,margin`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub instance_id: String,
    pub quantity: String,
    pub mean: f64,
    pub std_error: f64,
    pub method: String,
    pub bound: Option<f64>,
    pub verdict: String,
    pub margin: Option<f64>,
}

pub const CSV_HEADER: &str = "instance_id,quantity,mean,std_error,method,bound,verdict,margin";

impl CsvRow {
    pub fn new(instance_id: impl Into<String>, quantity: impl Into<String>, est: &ComplexityEstimate) -> Self {
        CsvRow {
            instance_id: instance_id.into(),
            quantity: quantity.into(),
            mean: est.mean,
            std_error: est.std_error,
            method: est.method.as_str().to_string(),
            bound: None,
            verdict: String::new(),
            margin: None,
        }
    }

    pub fn value(instance_id: impl Into<String>, quantity: impl Into<String>, value: f64) -> Self {
        Self::new(instance_id, quantity, &ComplexityEstimate::exact(value))
    }

    pub fn from_report(instance_id: impl Into<String>, quantity: impl Into<String>, r: &VerificationReport) -> Self {
        Self::new(instance_id, quantity, &r.lhs).judged(r.bound, r.verdict.as_str())
    }

    pub fn judged(mut self, bound: f64, verdict: &str) -> Self {
        self.margin = Some(bound - self.mean);
        self.bound = Some(bound);
        self.verdict = verdict.to_string();
        self
    }
}

impl CsvRow {
    /// Fields in column order. Floats use the shortest round-trip form.
    pub fn fields(&self) -> [String; 8] {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.instance_id.clone(),
            self.quantity.clone(),
            self.mean.to_string(),
            self.std_error.to_string(),
            self.method.clone(),
            opt(self.bound),
            self.verdict.clone(),
            opt(self.margin),
        ]
    }
}

pub fn write_csv(rows: &[CsvRow], out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub summary: String,
    pub rows: Vec<CsvRow>,
}

impl SuiteOutcome {
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!("[{status}] {:>2} {}: {}", self.id, self.name, self.summary)
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.verdict == Verdict::Violated.as_str()).count()
    }
}

/// Suite ids and names, in run order. Id 9 (byte-identical reruns) is a
/// property of the whole run and is checked from outside.
pub const SUITES: [(u8, &str); 9] = [
    (1, "counterexample"),
    (2, "vector-contraction"),
    (3, "khintchine"),
    (4, "product-identity"),
    (5, "subgaussian-tails"),
    (6, "kmeans-chain"),
    (7, "frobenius"),
    (8, "theorem1-coverage"),
    (10, "ltl"),
];

pub fn suite_name(id: u8) -> Option<&'static str> {
    SUITES.iter().find(|(i, _)| *i == id).map(|(_, n)| *n)
}

pub fn run_suite(id: u8, seed: u64) -> Result<SuiteOutcome> {
    let name = suite_name(id).ok_or_else(|| Error::Config(format!("unknown suite {id}")))?;
    let s = derive_seed(seed, label(name));
    let (passed, summary, rows) = match id {
        1 => counterexample_suite(s)?,
        2 => contraction_suite(s)?,
        3 => khintchine_suite(s)?,
        4 => product_suite(s)?,
        5 => tails_suite(s)?,
        6 => kmeans_suite(s)?,
        7 => frobenius_suite(s)?,
        8 => coverage_suite(s)?,
        10 => ltl_suite(s)?,
        _ => unreachable!("ids come from SUITES"),
    };
    Ok(SuiteOutcome {
        id,
        name,
        passed,
        summary,
        rows,
    })
}

pub fn run_all(seed: u64) -> Result<Vec<SuiteOutcome>> {
    SUITES.iter().map(|(id, _)| run_suite(*id, seed)).collect()
}

type Parts = (bool, String, Vec<CsvRow>);

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let r = norm(&v);
        if r > 1e-12 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

fn in_unit_ball(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let r = rng.random::<f64>().powf(1.0 / dim as f64);
    unit_vector(rng, dim).into_iter().map(|x| x * r).collect()
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..=hi))
}

fn counterexample_suite(seed: u64) -> Result<Parts> {
    let mut rows = Vec::new();
    let mut ok = true;
    for n in [1usize, 4, 16, 64, 256] {
        let c = counterexample_instance(n)?;
        let id = format!("ce-n{n}");
        ok &= c.lhs == n as f64 / 2.0 && c.rhs == (n as f64).sqrt();
        rows.push(CsvRow::value(&id, "lhs", c.lhs).judged(n as f64 / 2.0, "EXACT"));
        rows.push(CsvRow::value(&id, "rhs", c.rhs).judged((n as f64).sqrt(), "EXACT"));
        rows.push(CsvRow::value(&id, "ratio", c.ratio));
        if n <= 20 {
            let x = counterexample_mc_crosscheck(n, &ExpectationEngine::exact().with_seed(seed))?;
            let agree = x.agrees();
            ok &= agree;
            let v = if agree { "AGREES" } else { "DISAGREES" };
            rows.push(CsvRow::new(&id, "lhs_enumerated", &x.lhs).judged(c.lhs, v));
            rows.push(CsvRow::new(&id, "rhs_enumerated", &x.rhs).judged(c.rhs, v));
        }
    }
    let ratio = counterexample_instance(256)?.ratio;
    ok &= ratio == 8.0;
    Ok((ok, format!("closed forms exact for n in {{1,4,16,64,256}}; ratio at 256 = {ratio}"), rows))
}

fn random_custom_loss(rng: &mut ChaCha8Rng, k: usize) -> Result<LipschitzLoss> {
    let points: Vec<Vec<f64>> = (0..3).map(|_| (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect();
    let values: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect();
    LipschitzLoss::custom(points, values)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn contraction_suite(seed: u64) -> Result<Parts> {
    let engine = ExpectationEngine::exact();
    let rad = SubgaussianDist::rademacher();
    let mut rows = Vec::new();
    let mut margins = Vec::new();
    let mut violated = 0;
    for t in 0..200u64 {
        let mut rng = draw_stream(seed, t);
        let n = rng.random_range(1..=4);
        let k = rng.random_range(1..=3);
        let m = rng.random_range(1..=6);
        let class = FunctionClass::from_tables((0..m).map(|_| uniform_matrix(&mut rng, n, k, -1.0, 1.0)).collect())?;
        let custom = (0..n).map(|_| random_custom_loss(&mut rng, k)).collect::<Result<Vec<_>>>()?;
        for (tag, losses) in [("norm", vec![LipschitzLoss::euclidean_norm(); n]), ("custom", custom)] {
            let r = verify_vector_contraction(&class, &losses, &rad, &engine)?;
            violated += r.is_violated() as usize;
            margins.push(r.margin);
            rows.push(CsvRow::from_report(format!("vc-{t:03}-{tag}"), "vector_contraction", &r));
        }
    }
    let med = median(margins);
    Ok((
        violated == 0,
        format!("{} exact checks, {violated} violated, median margin {med:.6}", rows.len()),
        rows,
    ))
}

fn khintchine_suite(seed: u64) -> Result<Parts> {
    let rad = SubgaussianDist::rademacher();
    let gauss = SubgaussianDist::standard_normal();
    let exact = ExpectationEngine::exact();
    let mut rows = Vec::new();
    let mut violated = 0;
    for t in 0..100u64 {
        let mut rng = draw_stream(seed, t);
        let dim = rng.random_range(1..=12);
        let v = unit_vector(&mut rng, dim);
        let r = khintchine_lower_check(&v, &rad, &exact)?;
        violated += (r.lhs.mean > r.bound + 1e-9) as usize;
        rows.push(CsvRow::from_report(format!("kh-{t:03}-d{dim}"), "khintchine_rademacher", &r));
    }
    let r = khintchine_lower_check(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2], &rad, &exact)?;
    let gap = (r.bound - r.lhs.mean).abs();
    rows.push(CsvRow::from_report("kh-extremal", "khintchine_rademacher", &r));

    let target = (2.0 / PI).sqrt();
    let mut gaussian_misses = 0;
    for t in 0..10u64 {
        let mut rng = draw_stream(seed, 1000 + t);
        let dim = rng.random_range(1..=12);
        let v = unit_vector(&mut rng, dim);
        let engine = ExpectationEngine::monte_carlo(gauss, 100_000, derive_seed(seed, 1000 + t));
        let r = khintchine_lower_check(&v, &gauss, &engine)?;
        let miss = (r.rhs.mean - target).abs() > 3.0 * r.rhs.std_error;
        gaussian_misses += miss as usize;
        let verdict = if miss { "OUTSIDE_3SE" } else { "WITHIN_3SE" };
        let mut row = CsvRow::new(format!("kh-gauss-{t}-d{dim}"), "gaussian_abs_mean", &r.rhs).judged(target, verdict);
        row.margin = Some(target - r.rhs.mean);
        rows.push(row);
    }
    Ok((
        violated == 0 && gap <= 1e-12 && gaussian_misses == 0,
        format!(
            "100 vectors, {violated} violations; extremal gap {gap:.1e}; gaussian {}/10 within 3se of sqrt(2/pi)",
            10 - gaussian_misses
        ),
        rows,
    ))
}

fn product_suite(seed: u64) -> Result<Parts> {
    let engine = ExpectationEngine::exact();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for t in 0..50u64 {
        let mut rng = draw_stream(seed, t);
        let n = rng.random_range(1..=5);
        let components = (0..3)
            .map(|_| {
                let m = rng.random_range(1..=4);
                FunctionClass::from_tables((0..m).map(|_| uniform_matrix(&mut rng, n, 1, -1.0, 1.0)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let r = product_identity_check(&components, &engine)?;
        worst = worst.max(r.difference.abs());
        let verdict = if r.difference.abs() <= 1e-9 { "EQUAL" } else { "UNEQUAL" };
        rows.push(CsvRow::new(format!("pi-{t:02}-n{n}"), "product_complexity", &r.product).judged(r.sum, verdict));
    }
    Ok((worst <= 1e-9, format!("50 triples, max |product - sum| = {worst:.1e}"), rows))
}

fn tails_suite(seed: u64) -> Result<Parts> {
    let dists = [
        ("rademacher", SubgaussianDist::rademacher()),
        ("normal", SubgaussianDist::standard_normal()),
        ("uniform1", SubgaussianDist::uniform_symmetric(1.0)?),
    ];
    let thresholds = [1.0, 2.0, 3.0];
    let draws = 1_000_000;
    let mut rows = Vec::new();
    let mut exceed = 0;
    for (di, (name, dist)) in dists.iter().enumerate() {
        for j in 0..5u64 {
            let mut rng = draw_stream(seed, (di as u64) << 8 | j);
            let dim = rng.random_range(1..=8);
            let v = unit_vector(&mut rng, dim);
            let engine = ExpectationEngine::monte_carlo(*dist, draws, derive_seed(seed, (di as u64) << 8 | j));
            let freq = engine.expect_many(dim, thresholds.len(), |x, _, out| {
                let s: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().abs();
                for (o, t) in out.iter_mut().zip(&thresholds) {
                    *o = (s > *t) as u8 as f64;
                }
            })?;
            for (est, t) in freq.iter().zip(thresholds) {
                let bound = tail_bound(t, dist.b())?;
                let p = est.mean;
                let se = (p * (1.0 - p) / draws as f64).sqrt();
                let ok = p <= bound + 3.0 * se;
                exceed += (!ok) as usize;
                let verdict = if ok { Verdict::Holds } else { Verdict::Violated };
                rows.push(CsvRow::new(format!("tail-{name}-{j}-t{t}"), "exceedance", est).judged(bound, verdict.as_str()));
            }
        }
    }
    Ok((exceed == 0, format!("{} tail checks at 1e6 draws, {exceed} above bound + 3se", rows.len()), rows))
}

fn kmeans_suite(seed: u64) -> Result<Parts> {
    let (n, d) = (50usize, 5usize);
    let mut rows = Vec::new();
    let mut failures = 0;
    let within = |a: &ComplexityEstimate, b: &ComplexityEstimate| {
        a.mean - b.mean <= 3.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt()
    };
    for t in 0..20u64 {
        let k = if t % 2 == 0 { 2 } else { 3 };
        let mut rng = draw_stream(seed, t);
        let sample = Sample::from_rows((0..n).map(|_| in_unit_ball(&mut rng, d)).collect())?;
        let class = FunctionClass::kmeans(sample.clone(), k)?;
        let engine = ExpectationEngine::monte_carlo(SubgaussianDist::rademacher(), 10_000, derive_seed(seed, t));
        let id = format!("km-{t:02}-k{k}");

        let losses = vec![LipschitzLoss::min_coordinate(); n];
        let r = complexity_scalar(&class, &losses, &engine)?;
        let bound = kmeans_bound(k, n)?.value;
        let r_ok = r.mean - 3.0 * r.std_error <= bound;
        rows.push(CsvRow::from_report(&id, "kmeans_complexity", &VerificationReport::against(r, bound)));

        // chain terms on shared draws of the n×K sign matrix
        let kf = k as f64;
        let chain = engine.with_seed(derive_seed(seed, 100 + t)).expect_many(n * k, 3, |x, _, out| {
            let a = DMatrix::from_row_slice(n, k, x);
            out[0] = class.weighted_sup(&a).expect("shape matches").value;
            let mut linear = 0.0;
            let mut quadratic = 0.0;
            let mut first = 0.0;
            for kk in 0..k {
                let mut s = vec![0.0; d];
                let mut total = 0.0;
                for i in 0..n {
                    let e = a[(i, kk)];
                    total += e;
                    s.iter_mut().zip(sample.point(i)).for_each(|(sj, xj)| *sj += e * xj);
                }
                linear += 2.0 * norm(&s);
                quadratic += total.max(0.0);
                if kk == 0 {
                    first = kf * (2.0 * norm(&s) + total.abs());
                }
            }
            out[1] = linear + quadratic;
            out[2] = first;
        })?;
        let scaled = r.scaled(FRAC_1_SQRT_2);
        let closed = ComplexityEstimate::exact(3.0 * kf * (n as f64).sqrt());
        let links = [
            ("link_scaled_complexity", &scaled, &chain[0]),
            ("link_squared_distance", &chain[0], &chain[1]),
            ("link_separated", &chain[1], &chain[2]),
            ("link_jensen", &chain[2], &closed),
        ];
        let mut ok = r_ok;
        for (name, lhs, rhs) in links {
            let holds = within(lhs, rhs);
            ok &= holds;
            let verdict = if holds { "HOLDS_WITHIN_3SE" } else { "VIOLATED" };
            let mut row = CsvRow::new(&id, name, lhs).judged(rhs.mean, verdict);
            row.margin = Some(rhs.mean - lhs.mean);
            rows.push(row);
        }
        failures += (!ok) as usize;
    }
    Ok((
        failures == 0,
        format!("20 samples (d=5, n=50, K in {{2,3}}), {failures} with a failed bound or chain link"),
        rows,
    ))
}

fn frobenius_suite(seed: u64) -> Result<Parts> {
    let mut rows = Vec::new();
    let n = 8;
    let ortho = Sample::new(DMatrix::identity(n, n))?;
    let class = FunctionClass::linear_norm_ball(ortho.clone(), MatrixNorm::Frobenius, 1.0, 1)?;
    let exact = complexity_vector(&class, &ExpectationEngine::exact())?;
    let bound = frobenius_bound(1.0, &ortho, 1)?.value;
    let tight = (exact.mean - bound).abs() <= 1e-9;
    rows.push(CsvRow::new("fro-orthonormal", "frobenius_complexity", &exact).judged(bound, if tight { "EQUAL" } else { "UNEQUAL" }));

    let mut dominated = 0;
    for t in 0..20u64 {
        let mut rng = draw_stream(seed, t);
        let (n, d, k) = (rng.random_range(5..=15), rng.random_range(2..=6), rng.random_range(1..=3));
        let radius = rng.random_range(0.5..=2.0);
        let sample = Sample::from_rows((0..n).map(|_| in_unit_ball(&mut rng, d)).collect())?;
        let class = FunctionClass::linear_norm_ball(sample.clone(), MatrixNorm::Frobenius, radius, k)?;
        let engine = ExpectationEngine::monte_carlo(SubgaussianDist::rademacher(), 10_000, derive_seed(seed, t));
        let est = complexity_vector(&class, &engine)?;
        let b = frobenius_bound(radius, &sample, k)?.value;
        let r = VerificationReport::against(est, b);
        dominated += (est.mean - 3.0 * est.std_error <= b) as usize;
        rows.push(CsvRow::from_report(format!("fro-{t:02}-n{n}-d{d}-k{k}"), "frobenius_complexity", &r));
    }
    Ok((
        tight && dominated == 20,
        format!("orthonormal exact {} vs bound {bound}; {dominated}/20 random samples dominated", exact.mean),
        rows,
    ))
}

fn coverage_suite(seed: u64) -> Result<Parts> {
    let mut rng = draw_stream(seed, 0);
    let space = 8;
    let tables: Vec<Vec<f64>> = (0..20).map(|_| (0..space).map(|_| rng.random::<f64>()).collect()).collect();
    let weights: Vec<f64> = (0..space).map(|_| rng.random_range(0.5..=1.5)).collect();
    let total: f64 = weights.iter().sum();
    let law: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let engine = ExpectationEngine::default().with_seed(seed);
    let r = theorem1_coverage_experiment(&tables, &law, 16, 0.1, 500, &engine)?;
    let row = CsvRow::value("cov-d0.1-n16", "violation_rate", r.rate);
    let verdict = if r.within_budget() { "WITHIN_BUDGET" } else { "OVER_BUDGET" };
    Ok((
        r.within_budget(),
        format!("{} of {} repetitions violated, rate {} <= {:.4}", r.violations, r.repetitions, r.rate, r.allowed),
        vec![row.judged(r.allowed, verdict)],
    ))
}

fn random_unit_loss(rng: &mut ChaCha8Rng, k: usize) -> Result<LipschitzLoss> {
    Ok(match rng.random_range(0..4) {
        0 => LipschitzLoss::euclidean_norm().clamped_unit(),
        1 => LipschitzLoss::max_coordinate().clamped_unit(),
        2 => LipschitzLoss::distance_to((0..k).map(|_| rng.random_range(0.0..=1.0)).collect())
            .scaled(rng.random_range(0.5..=2.0))
            .clamped_unit(),
        _ => {
            let points: Vec<Vec<f64>> = (0..3).map(|_| (0..k).map(|_| rng.random_range(0.0..=1.0)).collect()).collect();
            let values = (0..3).map(|_| rng.random_range(0.0..=1.0)).collect();
            LipschitzLoss::custom(points, values)?.clamped_unit()
        }
    })
}

fn ltl_suite(seed: u64) -> Result<Parts> {
    let engine = ExpectationEngine::exact();
    let mut rows = Vec::new();
    let mut violated = 0;
    let mut count = 0u64;
    for tasks in 1..=2 {
        for n in 1..=2 {
            for k in 1..=2 {
                for maps in 1..=3 {
                    for losses in 1..=3 {
                        for rep in 0..3 {
                            let mut rng = draw_stream(seed, count);
                            count += 1;
                            let meta = MetaSample::abstract_points(tasks, n)?;
                            let tables = (0..maps).map(|_| uniform_matrix(&mut rng, tasks * n, k, -1.0, 1.0)).collect();
                            let class = FunctionClass::from_feature_maps(meta, tables)?;
                            let loss_class = (0..losses).map(|_| random_unit_loss(&mut rng, k)).collect::<Result<Vec<_>>>()?;
                            let l = loss_class.iter().map(|f| f.lipschitz()).fold(0.0, f64::max);
                            let r = ltl_complexity(&class, &loss_class, &engine)?;
                            let meta_c = complexity_vector(&class, &engine)?;
                            let bound = ltl_reduction_bound(l, n, meta_c.mean)?.value;
                            let report = VerificationReport::against(r, bound);
                            violated += report.is_violated() as usize;
                            let id = format!("ltl-T{tasks}-n{n}-K{k}-m{maps}-f{losses}-{rep}");
                            rows.push(CsvRow::from_report(id, "ltl_complexity", &report));
                        }
                    }
                }
            }
        }
    }
    debug_assert!(rows.iter().all(|r| r.method == EstimateMethod::Exact.as_str()));
    Ok((violated == 0, format!("{} exhaustive instances, {violated} violated at 1e-9", rows.len()), rows))
}
