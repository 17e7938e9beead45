//! Metric DSL.
//!
//! ```text
//! dim 2;
//! coords x1, x2;
//! g[1][1] = 1;
//! g[2][2] = sin(x1)^2;
//! box x1 = [0.3, 2.8];      # optional sampling box, default [-1, 1]
//! vertical hessian;         # optional, default `vertical identity;`
//! h[1][1] = 2; h[2][2] = 2; # constant Hessian entries
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{parse_expr, Expr, ExprError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("line {line}, column {column} (offset {offset}): {message}")]
    Parse { offset: usize, line: usize, column: usize, message: String },
    #[error("singular metric: {0}")]
    Singular(String),
}

impl MetricError {
    fn at(src: &str, offset: usize, message: impl Into<String>) -> MetricError {
        let offset = offset.min(src.len());
        let before = &src[..offset];
        let line = before.matches('\n').count() + 1;
        let column = offset - before.rfind('\n').map_or(0, |p| p + 1) + 1;
        MetricError::Parse { offset, line, column, message: message.into() }
    }

    fn from_expr(src: &str, base: usize, e: ExprError) -> MetricError {
        let e = e.shifted(base);
        MetricError::at(src, e.offset(), e.to_string())
    }
}

/// How the vertical metric g̃ is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum VielbeinMode {
    /// g̃ = g.
    Identity,
    /// Constant symmetric matrix supplied by the caller.
    ConstantHessian(Vec<Vec<f64>>),
}

#[derive(Debug, Clone)]
pub struct MetricSpec {
    pub n: usize,
    pub coords: Vec<String>,
    /// Full symmetric matrix built from the upper triangle.
    pub g: Vec<Vec<Expr>>,
    pub vertical: VielbeinMode,
    /// Sampling box per base coordinate.
    pub sample_box: Vec<(f64, f64)>,
    /// Signs of the diagonal at the box centre.
    pub signature: Vec<i8>,
}

impl MetricSpec {
    pub fn new(coords: Vec<String>, upper: Vec<Vec<Expr>>) -> Result<MetricSpec, MetricError> {
        let n = coords.len();
        let mut g = vec![vec![Expr::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let e = upper[i][j].clone();
                g[i][j] = e.clone();
                g[j][i] = e;
            }
        }
        let mut spec = MetricSpec {
            n,
            coords,
            g,
            vertical: VielbeinMode::Identity,
            sample_box: vec![(-1.0, 1.0); n],
            signature: Vec::new(),
        };
        spec.refresh_signature();
        Ok(spec)
    }

    pub fn with_box(mut self, sample_box: Vec<(f64, f64)>) -> MetricSpec {
        self.sample_box = sample_box;
        self.refresh_signature();
        self
    }

    pub fn with_vertical(mut self, mode: VielbeinMode) -> MetricSpec {
        self.vertical = mode;
        self
    }

    fn refresh_signature(&mut self) {
        let centre: Vec<f64> = self.sample_box.iter().map(|(a, b)| 0.5 * (a + b)).collect();
        self.signature = (0..self.n)
            .map(|i| {
                let v = self.g[i][i]
                    .eval(&crate::expr::Point { names: &self.coords, values: &centre })
                    .unwrap_or(0.0);
                if v > 0.0 {
                    1
                } else if v < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect();
    }

    /// Names of the fibre coordinates y^1..y^n.
    pub fn fibre_coords(&self) -> Vec<String> {
        (1..=self.n).map(|i| format!("y{i}")).collect()
    }

    /// Uniform random base points in the sampling box.
    pub fn sample_x(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| self.sample_box.iter().map(|&(a, b)| rng.gen_range(a..b)).collect())
            .collect()
    }

    /// Random (x, y) points: x in the box, y in [-1, 1]^n.
    pub fn sample_xy(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let mut p: Vec<f64> = self.sample_box.iter().map(|&(a, b)| rng.gen_range(a..b)).collect();
                p.extend((0..self.n).map(|_| rng.gen_range(-1.0..1.0)));
                p
            })
            .collect()
    }

    /// Points at which regularity is certified: box centre plus 16 seeded random points.
    pub fn check_points(&self) -> Vec<Vec<f64>> {
        let mut pts = vec![self.sample_box.iter().map(|(a, b)| 0.5 * (a + b)).collect()];
        pts.extend(self.sample_x(16, 0x5eed));
        pts
    }

    /// Numeric g at a base point.
    pub fn g_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, crate::expr::EvalError> {
        let pt = crate::expr::Point { names: &self.coords, values: x };
        self.g.iter().map(|row| row.iter().map(|e| e.eval(&pt)).collect()).collect()
    }
}

struct Stmt {
    text: String,
    offset: usize,
}

fn statements(src: &str) -> Vec<Stmt> {
    let mut cleaned = String::with_capacity(src.len());
    for line in src.split_inclusive('\n') {
        match line.find('#') {
            Some(p) => {
                cleaned.push_str(&line[..p]);
                cleaned.extend(std::iter::repeat_n(' ', line.len() - p - usize::from(line.ends_with('\n'))));
                if line.ends_with('\n') {
                    cleaned.push('\n');
                }
            }
            None => cleaned.push_str(line),
        }
    }
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in cleaned.char_indices() {
        if c == ';' {
            out.push((start, i));
            start = i + 1;
        }
    }
    out.push((start, cleaned.len()));
    out.into_iter()
        .filter_map(|(a, b)| {
            let raw = &cleaned[a..b];
            let lead = raw.len() - raw.trim_start().len();
            let text = raw.trim();
            (!text.is_empty()).then(|| Stmt { text: text.to_string(), offset: a + lead })
        })
        .collect()
}

fn parse_br(s: &str) -> Option<(usize, &str)> {
    let s = s.strip_prefix('[')?;
    let close = s.find(']')?;
    let v = s[..close].trim().parse().ok()?;
    Some((v, &s[close + 1..]))
}

fn parse_index_pair(src: &str, st: &Stmt, head: char) -> Result<(usize, usize, usize), MetricError> {
    let t = st.text.as_str();
    let err = |m: &str| MetricError::at(src, st.offset, m.to_string());
    let rest = &t[1..];
    let rest = rest.trim_start();
    let (i, r) = parse_br(rest).ok_or_else(|| err(&format!("expected `{head}[i][j] = ...`")))?;
    let (j, r) = parse_br(r.trim_start()).ok_or_else(|| err(&format!("expected `{head}[i][j] = ...`")))?;
    let eq = r.find('=').ok_or_else(|| err("expected `=`"))?;
    if !r[..eq].trim().is_empty() {
        return Err(err("expected `=`"));
    }
    let expr_start = t.len() - r.len() + eq + 1;
    Ok((i, j, st.offset + expr_start))
}

/// Parses a metric file.
pub fn parse_metric(src: &str) -> Result<MetricSpec, MetricError> {
    let stmts = statements(src);
    let mut dim: Option<usize> = None;
    let mut coords: Option<Vec<String>> = None;
    let mut entries: Vec<(usize, usize, usize, &str, usize)> = Vec::new();
    let mut hess: Vec<(usize, usize, usize, &str, usize)> = Vec::new();
    let mut boxes: Vec<(String, f64, f64, usize)> = Vec::new();
    let mut vertical: Option<(&str, usize)> = None;

    for st in &stmts {
        let t = st.text.as_str();
        let word = t.split(|c: char| !c.is_ascii_alphanumeric() && c != '_').next().unwrap_or("");
        match word {
            "dim" => {
                let v = t[3..].trim();
                let n: usize = v.parse().map_err(|_| MetricError::at(src, st.offset, format!("bad dimension `{v}`")))?;
                if n < 2 {
                    return Err(MetricError::at(src, st.offset, "dimension must be at least 2"));
                }
                dim = Some(n);
            }
            "coords" => {
                let names: Vec<String> = t[6..].split(',').map(|s| s.trim().to_string()).collect();
                for nm in &names {
                    let ok = nm.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                        && nm.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                    if !ok {
                        return Err(MetricError::at(src, st.offset, format!("bad coordinate name `{nm}`")));
                    }
                }
                coords = Some(names);
            }
            "g" | "h" => {
                let (i, j, at) = parse_index_pair(src, st, word.chars().next().unwrap())?;
                let expr_text = &t[at - st.offset..];
                if word == "g" {
                    entries.push((i, j, at, expr_text, st.offset));
                } else {
                    hess.push((i, j, at, expr_text, st.offset));
                }
            }
            "box" => {
                let body = t[3..].trim();
                let (name, range) = body
                    .split_once('=')
                    .ok_or_else(|| MetricError::at(src, st.offset, "expected `box name = [lo, hi]`"))?;
                let range = range.trim().trim_start_matches('[').trim_end_matches(']');
                let (lo, hi) = range
                    .split_once(',')
                    .ok_or_else(|| MetricError::at(src, st.offset, "expected `[lo, hi]`"))?;
                let lo: f64 = lo.trim().parse().map_err(|_| MetricError::at(src, st.offset, "bad box bound"))?;
                let hi: f64 = hi.trim().parse().map_err(|_| MetricError::at(src, st.offset, "bad box bound"))?;
                if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
                    return Err(MetricError::at(src, st.offset, "box bounds must satisfy lo < hi"));
                }
                boxes.push((name.trim().to_string(), lo, hi, st.offset));
            }
            "vertical" => vertical = Some((t[8..].trim(), st.offset)),
            _ => return Err(MetricError::at(src, st.offset, format!("unknown statement `{word}`"))),
        }
    }

    let n = dim.ok_or_else(|| MetricError::at(src, 0, "missing `dim n;` header"))?;
    let coords = coords.ok_or_else(|| MetricError::at(src, 0, "missing `coords ...;` header"))?;
    if coords.len() != n {
        return Err(MetricError::at(src, 0, format!("`coords` lists {} names for dim {n}", coords.len())));
    }
    for (i, a) in coords.iter().enumerate() {
        if coords[..i].contains(a) {
            return Err(MetricError::at(src, 0, format!("duplicate coordinate `{a}`")));
        }
        if a.starts_with('y') && a[1..].parse::<usize>().is_ok() {
            return Err(MetricError::at(src, 0, format!("coordinate `{a}` clashes with fibre coordinates y1..yn")));
        }
    }

    let read_matrix = |list: &[(usize, usize, usize, &str, usize)],
                       vars: &[String]|
     -> Result<Vec<Vec<Expr>>, MetricError> {
        let mut upper = vec![vec![Expr::zero(); n]; n];
        let mut seen = vec![vec![false; n]; n];
        for &(i, j, at, text, st_off) in list {
            if i < 1 || j < 1 || i > n || j > n || i > j {
                return Err(MetricError::at(src, st_off, format!("index [{i}][{j}] must satisfy 1 <= i <= j <= {n}")));
            }
            if seen[i - 1][j - 1] {
                return Err(MetricError::at(src, st_off, format!("entry [{i}][{j}] given twice")));
            }
            seen[i - 1][j - 1] = true;
            upper[i - 1][j - 1] = parse_expr(text, vars).map_err(|e| MetricError::from_expr(src, at, e))?;
        }
        Ok(upper)
    };

    let upper = read_matrix(&entries, &coords)?;
    let mut spec = MetricSpec::new(coords.clone(), upper)?;

    let mut sample_box = vec![(-1.0, 1.0); n];
    for (name, lo, hi, off) in boxes {
        let k = coords
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| MetricError::at(src, off, format!("unknown coordinate `{name}` in box")))?;
        sample_box[k] = (lo, hi);
    }
    spec = spec.with_box(sample_box);

    match vertical {
        None | Some(("identity", _)) => {
            if let Some(&(_, _, _, _, off)) = hess.first() {
                return Err(MetricError::at(src, off, "`h[i][j]` entries require `vertical hessian;`"));
            }
        }
        Some(("hessian", off)) => {
            let upper = read_matrix(&hess, &[])?;
            let mut h = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i..n {
                    let v = upper[i][j]
                        .eval(&[][..])
                        .map_err(|e| MetricError::at(src, off, format!("hessian entry [{}][{}]: {e}", i + 1, j + 1)))?;
                    h[i][j] = v;
                    h[j][i] = v;
                }
            }
            spec = spec.with_vertical(VielbeinMode::ConstantHessian(h));
        }
        Some((other, off)) => {
            return Err(MetricError::at(src, off, format!("unknown vertical mode `{other}`")));
        }
    }
    Ok(spec)
}
