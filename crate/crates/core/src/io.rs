//! Plain-text class files.
//!
//! A file starts with `key = value` header lines, followed by blocks of
//! whitespace-separated numbers. Blocks are separated by blank lines and `#`
//! starts a comment. Header keys:
//!
//! | key      | meaning                                              |
//! |----------|------------------------------------------------------|
//! | `kind`   | `finite`, `kmeans`, `linear`, `product`, `feature-map`, `operator` |
//! | `n`      | sample size (points per task for `feature-map`)      |
//! | `k`      | output dimension, or number of centers for `kmeans`  |
//! | `d`      | point dimension (`kmeans`, `linear`)                 |
//! | `tasks`  | number of tasks (`feature-map`)                      |
//! | `norm`   | `frobenius` or `spectral` (`linear`)                 |
//! | `radius` | norm-ball radius (`linear`, default 1)               |
//! | `points` | file holding the `n×d` point block, relative to this file |
//!
//! Data per kind:
//!
//! - `finite`: one `n×k` table per block.
//! - `feature-map`: one `(tasks·n)×k` table per block, task-major rows.
//! - `kmeans`, `linear`: one `n×d` block of points (unless `points` is set).
//! - `product`: `k` sections, each opened by a `[component]` line and holding
//!   `n×1` tables.
//! - `operator`: no data.
//!
//! ```text
//! kind = finite
//! n = 2
//! k = 2
//!
//! 1 0
//! 0 1
//!
//! 0 1
//! 1 0
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::classes::{ClassKind, FunctionClass, MatrixNorm, MetaSample, Sample};
use crate::error::{Error, Result};

const KEYS: [&str; 8] = ["kind", "n", "k", "d", "tasks", "norm", "radius", "points"];

struct Row {
    line: usize,
    values: Vec<f64>,
}

enum Item {
    Rows(Vec<Row>),
    Component(usize),
}

struct Parsed {
    header: BTreeMap<String, (String, usize)>,
    items: Vec<Item>,
    end_line: usize,
}

struct Ctx<'a> {
    path: &'a str,
}

impl Ctx<'_> {
    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line,
            column,
            message: message.into(),
        }
    }
}

fn parse_text(ctx: &Ctx, text: &str) -> Result<Parsed> {
    let mut header = BTreeMap::new();
    let mut items: Vec<Item> = Vec::new();
    let mut block: Vec<Row> = Vec::new();
    let mut in_data = false;
    let flush = |block: &mut Vec<Row>, items: &mut Vec<Item>| {
        if !block.is_empty() {
            items.push(Item::Rows(std::mem::take(block)));
        }
    };
    let mut end_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        end_line = line;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            // a comment-only line does not end a block
            if raw.trim().is_empty() {
                flush(&mut block, &mut items);
            }
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if trimmed == "[component]" {
            flush(&mut block, &mut items);
            items.push(Item::Component(line));
            in_data = true;
            continue;
        }
        if let Some((key, value)) = trimmed.split_once('=') {
            if in_data {
                return Err(ctx.err(line, indent + 1, "header line after data"));
            }
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ctx.err(line, indent + 1, format!("unknown key `{key}`")));
            }
            if header.insert(key.to_string(), (value.trim().to_string(), line)).is_some() {
                return Err(ctx.err(line, indent + 1, format!("duplicate key `{key}`")));
            }
            continue;
        }
        in_data = true;
        let mut values = Vec::new();
        for (start, token) in tokens(content) {
            let v: f64 = token
                .parse()
                .map_err(|_| ctx.err(line, start + 1, format!("not a number: `{token}`")))?;
            if !v.is_finite() {
                return Err(ctx.err(line, start + 1, format!("not a finite number: `{token}`")));
            }
            values.push(v);
        }
        block.push(Row { line, values });
    }
    flush(&mut block, &mut items);
    Ok(Parsed { header, items, end_line })
}

/// Whitespace-separated tokens with their byte offsets.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_whitespace()
        .map(move |t| (t.as_ptr() as usize - line.as_ptr() as usize, t))
}

impl Parsed {
    fn get(&self, key: &str) -> Option<&(String, usize)> {
        self.header.get(key)
    }

    fn usize(&self, ctx: &Ctx, key: &str) -> Result<usize> {
        let (v, line) = self
            .get(key)
            .ok_or_else(|| ctx.err(1, 1, format!("missing header key `{key}`")))?;
        v.parse()
            .map_err(|_| ctx.err(*line, 1, format!("`{key}` must be a non-negative integer, got `{v}`")))
    }

    fn f64_or(&self, ctx: &Ctx, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse()
                .map_err(|_| ctx.err(*line, 1, format!("`{key}` must be a number, got `{v}`"))),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.get(key).map(|(_, l)| *l).unwrap_or(1)
    }
}

fn check_block(ctx: &Ctx, rows: &[Row], n: usize, k: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n {
        let line = rows.last().map(|r| r.line).unwrap_or(1);
        return Err(ctx.err(line, 1, format!("{what} has {} rows, expected {n}", rows.len())));
    }
    for r in rows {
        if r.values.len() != k {
            return Err(ctx.err(r.line, 1, format!("{what} row has {} values, expected {k}", r.values.len())));
        }
    }
    Ok(DMatrix::from_row_iterator(n, k, rows.iter().flat_map(|r| r.values.iter().cloned())))
}

fn only_rows<'a>(ctx: &Ctx, items: &'a [Item]) -> Result<Vec<&'a [Row]>> {
    items
        .iter()
        .map(|it| match it {
            Item::Rows(r) => Ok(r.as_slice()),
            Item::Component(line) => Err(ctx.err(*line, 1, "`[component]` is only valid for product classes")),
        })
        .collect()
}

fn points_block(ctx: &Ctx, parsed: &Parsed, base: &Path, n: usize, d: usize) -> Result<Sample> {
    let m = if let Some((file, _)) = parsed.get("points") {
        let path = base.join(file);
        let text = std::fs::read_to_string(&path).map_err(|source| Error::Io { path: path.clone(), source })?;
        let display = path.display().to_string();
        let inner = Ctx { path: &display };
        let p = parse_text(&inner, &text)?;
        if let Some((key, (_, line))) = p.header.iter().next() {
            return Err(inner.err(*line, 1, format!("points file cannot set `{key}`")));
        }
        let blocks = only_rows(&inner, &p.items)?;
        if blocks.len() != 1 {
            return Err(inner.err(p.end_line.max(1), 1, format!("expected one point block, found {}", blocks.len())));
        }
        check_block(&inner, blocks[0], n, d, "point block")?
    } else {
        let blocks = only_rows(ctx, &parsed.items)?;
        if blocks.len() != 1 {
            return Err(ctx.err(parsed.end_line.max(1), 1, format!("expected one point block, found {}", blocks.len())));
        }
        check_block(ctx, blocks[0], n, d, "point block")?
    };
    Sample::new(m)
}

fn point_line(parsed: &Parsed, i: usize) -> Option<usize> {
    if parsed.get("points").is_some() {
        return None;
    }
    match parsed.items.first() {
        Some(Item::Rows(rows)) => rows.get(i).map(|r| r.line),
        _ => None,
    }
}

/// Parse a class file from text. `path` is used in error messages and to
/// resolve a `points` file.
pub fn parse_class(text: &str, path: &Path) -> Result<FunctionClass> {
    let display = path.display().to_string();
    let ctx = Ctx { path: &display };
    let parsed = parse_text(&ctx, text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let (kind, kind_line) = parsed
        .get("kind")
        .cloned()
        .ok_or_else(|| ctx.err(1, 1, "missing header key `kind`"))?;
    let wrap = |line: usize, e: Error| match e {
        Error::Parse { .. } | Error::Io { .. } => e,
        other => ctx.err(line, 1, other.to_string()),
    };
    match kind.as_str() {
        "finite" => {
            let (n, k) = (parsed.usize(&ctx, "n")?, parsed.usize(&ctx, "k")?);
            let tables = only_rows(&ctx, &parsed.items)?
                .into_iter()
                .map(|b| check_block(&ctx, b, n, k, "table"))
                .collect::<Result<Vec<_>>>()?;
            if tables.is_empty() {
                return Err(ctx.err(parsed.end_line.max(1), 1, "finite class has no tables"));
            }
            FunctionClass::from_tables(tables).map_err(|e| wrap(kind_line, e))
        }
        "feature-map" => {
            let (tasks, n, k) = (parsed.usize(&ctx, "tasks")?, parsed.usize(&ctx, "n")?, parsed.usize(&ctx, "k")?);
            let maps = only_rows(&ctx, &parsed.items)?
                .into_iter()
                .map(|b| check_block(&ctx, b, tasks * n, k, "feature map"))
                .collect::<Result<Vec<_>>>()?;
            let meta = MetaSample::abstract_points(tasks, n).map_err(|e| wrap(parsed.line_of("tasks"), e))?;
            FunctionClass::from_feature_maps(meta, maps).map_err(|e| wrap(kind_line, e))
        }
        "kmeans" => {
            let (n, k, d) = (parsed.usize(&ctx, "n")?, parsed.usize(&ctx, "k")?, parsed.usize(&ctx, "d")?);
            let sample = points_block(&ctx, &parsed, &base, n, d)?;
            if let Some(i) = sample.first_outside_unit_ball() {
                let norm = sample.point(i).iter().map(|x| x * x).sum::<f64>().sqrt();
                let line = point_line(&parsed, i).unwrap_or(parsed.line_of("points"));
                return Err(ctx.err(line, 1, format!("point {i} has norm {norm} > 1; K-means needs points in the unit ball")));
            }
            FunctionClass::kmeans(sample, k).map_err(|e| wrap(parsed.line_of("k"), e))
        }
        "linear" => {
            let (n, k, d) = (parsed.usize(&ctx, "n")?, parsed.usize(&ctx, "k")?, parsed.usize(&ctx, "d")?);
            let norm = match parsed.get("norm").map(|(v, l)| (v.as_str(), *l)) {
                None | Some(("frobenius", _)) => MatrixNorm::Frobenius,
                Some(("spectral", _)) => MatrixNorm::Spectral,
                Some((other, line)) => return Err(ctx.err(line, 1, format!("unknown norm `{other}`"))),
            };
            let radius = parsed.f64_or(&ctx, "radius", 1.0)?;
            let sample = points_block(&ctx, &parsed, &base, n, d)?;
            FunctionClass::linear_norm_ball(sample, norm, radius, k).map_err(|e| wrap(parsed.line_of("radius"), e))
        }
        "product" => {
            let (n, k) = (parsed.usize(&ctx, "n")?, parsed.usize(&ctx, "k")?);
            let mut components: Vec<(usize, Vec<DMatrix<f64>>)> = Vec::new();
            for item in &parsed.items {
                match item {
                    Item::Component(line) => components.push((*line, Vec::new())),
                    Item::Rows(rows) => {
                        let Some(last) = components.last_mut() else {
                            return Err(ctx.err(rows[0].line, 1, "table before the first `[component]`"));
                        };
                        last.1.push(check_block(&ctx, rows, n, 1, "component table")?);
                    }
                }
            }
            if components.len() != k {
                return Err(ctx.err(parsed.line_of("k"), 1, format!("expected {k} components, found {}", components.len())));
            }
            let classes = components
                .into_iter()
                .map(|(line, t)| FunctionClass::from_tables(t).map_err(|e| wrap(line, e)))
                .collect::<Result<Vec<_>>>()?;
            FunctionClass::product(classes).map_err(|e| wrap(kind_line, e))
        }
        "operator" => {
            if let Some(Item::Rows(rows)) = parsed.items.first() {
                return Err(ctx.err(rows[0].line, 1, "operator class takes no data"));
            }
            FunctionClass::operator_projection(parsed.usize(&ctx, "n")?).map_err(|e| wrap(parsed.line_of("n"), e))
        }
        other => Err(ctx.err(kind_line, 1, format!("unknown class kind `{other}`"))),
    }
}

pub fn load_class_file(path: impl AsRef<Path>) -> Result<FunctionClass> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_class(&text, path)
}

fn write_matrix(out: &mut String, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

fn write_points(out: &mut String, s: &Sample) {
    for p in s.points() {
        let row: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

/// Serialize with 17 significant digits, so loading reproduces every value
/// bit for bit. Point coordinates of finite classes are not stored.
pub fn format_class(class: &FunctionClass) -> String {
    let mut out = String::new();
    let n = class.sample().n();
    let k = class.output_dim();
    let d = class.sample().dim();
    match class.kind() {
        ClassKind::Finite { tables } => {
            let _ = writeln!(out, "kind = finite\nn = {n}\nk = {k}");
            for t in tables {
                out.push('\n');
                write_matrix(&mut out, t);
            }
        }
        ClassKind::FeatureMapFinite { meta, maps } => {
            let _ = writeln!(out, "kind = feature-map\ntasks = {}\nn = {}\nk = {k}", meta.tasks(), meta.per_task());
            for t in maps {
                out.push('\n');
                write_matrix(&mut out, t);
            }
        }
        ClassKind::KMeansCenters { centers } => {
            let _ = writeln!(out, "kind = kmeans\nn = {n}\nk = {centers}\nd = {d}\n");
            write_points(&mut out, class.sample());
        }
        ClassKind::LinearNormBall { norm, radius } => {
            let _ = writeln!(out, "kind = linear\nn = {n}\nk = {k}\nd = {d}\nnorm = {norm}\nradius = {radius:.16e}\n");
            write_points(&mut out, class.sample());
        }
        ClassKind::Product { components } => {
            let _ = writeln!(out, "kind = product\nn = {n}\nk = {k}");
            for c in components {
                out.push_str("\n[component]\n");
                for (j, t) in c.finite_tables().unwrap_or(&[]).iter().enumerate() {
                    if j > 0 {
                        out.push('\n');
                    }
                    write_matrix(&mut out, t);
                }
            }
        }
        ClassKind::OperatorProjection => {
            let _ = writeln!(out, "kind = operator\nn = {n}");
        }
    }
    out
}

pub fn save_class_file(class: &FunctionClass, path: impl AsRef<Path>) -> Result<()> {
    if let ClassKind::Product { components } = class.kind() {
        if components.iter().any(|c| c.finite_tables().is_none()) {
            return Err(Error::Unsupported("only products of finite classes can be saved".into()));
        }
    }
    let path = path.as_ref();
    std::fs::write(path, format_class(class)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<FunctionClass> {
        parse_class(text, Path::new("mem.class"))
    }

    #[test]
    fn single_zero_table() {
        let c = parse("kind = finite\nn = 2\nk = 1\n\n0\n0\n").unwrap();
        assert_eq!(c.cardinality(), Some(1));
        assert_eq!(c.finite_tables().unwrap()[0], DMatrix::zeros(2, 1));
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse("kind = finite\nn = 2\nk = 2\n\n1 0\n0 x1\n").unwrap_err();
        assert_eq!(e.to_string(), "mem.class:6:3: not a number: `x1`");
        let e = parse("kind = finite\nn = 2\nk = 2\n\n1 0\n0\n").unwrap_err();
        assert!(e.to_string().starts_with("mem.class:6:1:"), "{e}");
        let e = parse("kind = finite\nn = 2\nk = 2\nshape = 3\n").unwrap_err();
        assert!(e.to_string().contains("unknown key `shape`"), "{e}");
        let e = parse("kind = kmeans\nn = 2\nk = 3\nd = 2\n\n0.5 0\n1.2 0\n").unwrap_err();
        assert!(e.to_string().starts_with("mem.class:7:1: point 1 has norm 1.2"), "{e}");
    }

    #[test]
    fn comments_and_kinds() {
        let c = parse("# header\nkind = product\nn = 1\nk = 2\n[component]\n1 # f\n\n-1\n[component]\n0.5\n").unwrap();
        assert_eq!(c.output_dim(), 2);
        assert_eq!(c.cardinality(), Some(2));
        let c = parse("kind = linear\nn = 2\nk = 3\nd = 2\nnorm = spectral\nradius = 2\n\n1 0\n0 1\n").unwrap();
        assert_eq!(c.kind_name(), "linear-spectral");
        let c = parse("kind = operator\nn = 5\n").unwrap();
        assert_eq!(c.output_dim(), 5);
        let c = parse("kind = feature-map\ntasks = 2\nn = 1\nk = 1\n\n0.1\n0.2\n\n0.3\n0.4\n").unwrap();
        assert_eq!(c.cardinality(), Some(2));
        assert!(parse("kind = circle\n").is_err());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = DMatrix::from_row_slice(2, 2, &[0.1, 1.0 / 3.0, -2.5e-300, std::f64::consts::PI]);
        let c = FunctionClass::from_tables(vec![t.clone(), -t]).unwrap();
        let back = parse(&format_class(&c)).unwrap();
        assert_eq!(back.finite_tables(), c.finite_tables());

        let s = Sample::from_rows(vec![vec![0.1, 0.7], vec![-1.0 / 7.0, 0.2]]).unwrap();
        let k = FunctionClass::kmeans(s, 3).unwrap();
        assert_eq!(parse(&format_class(&k)).unwrap(), k);
    }

    #[test]
    fn points_file_is_resolved_relative() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("pts.txt"), "0.1 0.2\n0.3 0.4\n0.0 0.9\n").unwrap();
        let file = dir.path().join("km.class");
        std::fs::write(&file, "kind = kmeans\nn = 3\nk = 3\nd = 2\npoints = pts.txt\n").unwrap();
        let c = load_class_file(&file).unwrap();
        assert_eq!(c.sample().n(), 3);
        std::fs::write(dir.path().join("pts.txt"), "0.1 0.2\n1.2 0.0\n0.0 0.9\n").unwrap();
        let e = load_class_file(&file).unwrap_err();
        assert!(e.to_string().contains("point 1 has norm 1.2"), "{e}");
    }
}
