//! Output formats: %.12e numbers, field and diagnostics CSV, geometry JSON, run manifests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::ser::Serializer;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::expr::{EvalError, Expr};
use crate::pde::Diagnostics;
use crate::pipeline::GeometryTables;
use crate::spectral::VField;
use crate::tensor::Tensor;

/// C-style `%.12e`: one digit, twelve decimals, signed two-digit exponent.
pub fn fmt_e(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", e.abs())
}

/// A float written with [`fmt_e`] into JSON; non-finite values become null.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = serde_json::value::RawValue::from_string(fmt_e(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

fn nums(xs: &[f64]) -> Vec<Num> {
    xs.iter().copied().map(Num).collect()
}

pub fn field_to_csv(v: &VField) -> String {
    let mut out = String::from("l");
    for c in 1..=v.p {
        out.push_str(&format!(",v{c}"));
    }
    out.push('\n');
    for (j, l) in v.grid().iter().enumerate() {
        out.push_str(&fmt_e(*l));
        for x in v.at(j) {
            out.push(',');
            out.push_str(&fmt_e(*x));
        }
        out.push('\n');
    }
    out
}

/// Reads `l,v1..vp` rows; the l column must match the uniform grid of the given period.
pub fn field_from_csv(text: &str, period: f64) -> Result<VField, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    let p = headers.len().checked_sub(1).filter(|&p| p > 0).ok_or("expected columns l,v1..vp")?;
    if &headers[0] != "l" || (1..=p).any(|c| headers[c] != format!("v{c}")) {
        return Err(format!("expected header l,v1..v{p}"));
    }
    let mut ls = Vec::new();
    let mut comps = vec![Vec::new(); p];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| format!("row {}: {e}", row + 2)))
            .collect::<Result<_, _>>()?;
        ls.push(vals[0]);
        for c in 0..p {
            comps[c].push(vals[c + 1]);
        }
    }
    let n = ls.len();
    let h = period / n.max(1) as f64;
    if let Some(j) = ls.iter().enumerate().position(|(j, l)| (l - j as f64 * h).abs() > 1e-9 * period.max(1.0)) {
        return Err(format!("row {}: l = {} is off the uniform grid of period {period}", j + 2, ls[j]));
    }
    VField::from_components(n, period, &comps).map_err(|e| e.to_string())
}

pub fn diagnostics_csv(d: &[Diagnostics]) -> String {
    let with_defect = d.iter().any(|x| x.unit_defect.is_some());
    let mut out = String::from("tau,H0,H1,H2a,H2b,maxnorm");
    if with_defect {
        out.push_str(",unit_defect");
    }
    out.push('\n');
    for x in d {
        let mut cols = vec![x.tau, x.h0, x.h1, x.h2a, x.h2b, x.maxnorm];
        if with_defect {
            cols.push(x.unit_defect.unwrap_or(f64::NAN));
        }
        out.push_str(&cols.iter().map(|c| fmt_e(*c)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct TableJson {
    pub shape: Vec<usize>,
    pub symbolic: Vec<String>,
    pub samples: Vec<Vec<Num>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarJson {
    pub symbolic: String,
    pub samples: Vec<Num>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Node {
    Table(TableJson),
    Scalar(ScalarJson),
    Group(BTreeMap<String, Node>),
    Names(Vec<String>),
    Points(Vec<Vec<Num>>),
    Text(String),
    Int(usize),
}

fn table(t: &Tensor, vars: &[String], points: &[Vec<f64>]) -> Result<Node, EvalError> {
    let samples = t.sample(vars, points)?.iter().map(|row| nums(row)).collect();
    Ok(Node::Table(TableJson { shape: t.shape.clone(), symbolic: t.to_strings(), samples }))
}

fn scalar(e: &Expr, vars: &[String], points: &[Vec<f64>]) -> Result<Node, EvalError> {
    let t = Tensor::from_fn(&[1], |_| e.clone());
    let samples = t.sample(vars, points)?.iter().map(|row| Num(row[0])).collect();
    Ok(Node::Scalar(ScalarJson { symbolic: e.to_string(), samples }))
}

/// Deterministic JSON document of every table, symbolic and sampled at `points` (x then y).
pub fn geometry_json(t: &GeometryTables, points: &[Vec<f64>]) -> Result<String, EvalError> {
    let vars = t.vars();
    let mut root: BTreeMap<String, Node> = BTreeMap::new();
    let mut groups: BTreeMap<String, BTreeMap<String, Node>> = BTreeMap::new();
    for (name, tensor) in t.named() {
        let node = table(tensor, &vars, points)?;
        match name.split_once('.') {
            Some((g, k)) => {
                groups.entry(g.to_string()).or_default().insert(k.to_string(), node);
            }
            None => {
                root.insert(name.to_string(), node);
            }
        }
    }
    for (g, m) in groups {
        root.insert(g, Node::Group(m));
    }
    let mut sc = BTreeMap::new();
    sc.insert("R".to_string(), scalar(&t.ricci.r_arrow, &vars, points)?);
    sc.insert("S".to_string(), scalar(&t.ricci.s_arrow, &vars, points)?);
    root.insert("scalars".into(), Node::Group(sc));
    root.insert("n".into(), Node::Int(t.metric.coords.len()));
    root.insert("vars".into(), Node::Names(vars));
    root.insert("variant".into(), Node::Text("tm".into()));
    root.insert("points".into(), Node::Points(points.iter().map(|p| nums(p)).collect()));
    let mut s = serde_json::to_string_pretty(&root).expect("geometry document serializes");
    s.push('\n');
    Ok(s)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &Path, bytes: &[u8]) -> FileHash {
        FileHash { path: path.display().to_string(), sha256: sha256_hex(bytes) }
    }
}

/// Reproducibility record written next to every run's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub args: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub wall_seconds: f64,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
