//! JSON documents: metric spaces, relations, Cantor trees and sampled
//! manifold maps on input; any serializable result on output.
//!
//! Every document may carry `"schema": "dsmetric/1"`. A relation or manifold
//! document names its space either inline or as a path to a space document,
//! resolved against the directory of the referring file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::cantor::{CantorError, CantorTree, NestedCell, PointMetric};
use crate::metric::{FiniteMetricSpace, Geometry, MetricError};
use crate::pipelines::{ManifoldError, Modulus, SampledManifoldMap};
use crate::relation::{DynamicalRelation, RelationError};

pub const SCHEMA: &str = "dsmetric/1";
/// Significant digits kept for every emitted real.
pub const DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {error}")]
    Read { path: String, error: std::io::Error },
    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {error}")]
    Metric { path: String, error: MetricError },
    #[error("{path}: {error}")]
    Relation { path: String, error: RelationError },
    #[error("{path}: {error}")]
    Tree { path: String, error: CantorError },
    #[error("{path}: {error}")]
    Manifold { path: String, error: ManifoldError },
}

impl IoError {
    fn schema(path: &str, message: impl ToString) -> Self {
        IoError::Schema { path: path.to_string(), message: message.to_string() }
    }
}

/// Metric space document, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceDoc {
    Matrix {
        dist: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coords: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Euclidean {
        points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    /// Coordinates with per-axis periods (`null` for a non-periodic axis).
    Flat {
        points: Vec<Vec<f64>>,
        periods: Vec<Option<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
}

impl SpaceDoc {
    pub fn build(self) -> Result<FiniteMetricSpace, MetricError> {
        let (space, labels) = match self {
            SpaceDoc::Matrix { dist, coords, labels } => {
                (FiniteMetricSpace::validate_metric(&dist, coords.as_deref())?, labels)
            }
            SpaceDoc::Euclidean { points, labels } => (FiniteMetricSpace::euclidean(points)?, labels),
            SpaceDoc::Flat { points, periods, labels } => (FiniteMetricSpace::flat(points, periods)?, labels),
        };
        match labels {
            Some(l) => space.with_labels(l),
            None => Ok(space),
        }
    }

    pub fn from_space(s: &FiniteMetricSpace) -> Self {
        let labels = s.labels().map(|l| l.to_vec());
        match s.geometry() {
            Geometry::Matrix { .. } => SpaceDoc::Matrix { dist: s.to_matrix(), coords: None, labels },
            Geometry::Coordinates { periods, .. } => {
                let points = (0..s.len()).map(|i| s.coords(i).unwrap_or_default().to_vec()).collect();
                if periods.iter().all(Option::is_none) {
                    SpaceDoc::Euclidean { points, labels }
                } else {
                    SpaceDoc::Flat { points, periods: periods.clone(), labels }
                }
            }
        }
    }
}

/// A relation together with its ambient space, as emitted.
#[derive(Debug, Clone, Serialize)]
pub struct RelationDoc {
    pub space: SpaceDoc,
    pub pairs: Vec<(usize, usize)>,
}

impl RelationDoc {
    pub fn new(r: &DynamicalRelation) -> Self {
        RelationDoc { space: SpaceDoc::from_space(r.space()), pairs: r.pairs().to_vec() }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationIn {
    space: Value,
    pairs: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifoldIn {
    space: Value,
    map: Vec<usize>,
    modulus: Modulus,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeIn {
    root: NestedCell,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeSystemIn {
    tree: Value,
    map: Vec<usize>,
}

/// Where file references inside a document are resolved, if anywhere.
#[derive(Debug, Clone, Copy)]
pub struct Source<'a> {
    /// Name used in error messages.
    pub label: &'a str,
    pub base: Option<&'a Path>,
}

impl<'a> Source<'a> {
    /// Inline-only input: file references are rejected.
    pub fn inline(label: &'a str) -> Self {
        Source { label, base: None }
    }
}

/// Parses JSON, checks and strips the optional `schema` key.
fn document(text: &str, label: &str) -> Result<Value, IoError> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| IoError::schema(label, e))?;
    if let Value::Object(m) = &mut v {
        strip_schema(m, label)?;
    }
    Ok(v)
}

fn strip_schema(m: &mut Map<String, Value>, label: &str) -> Result<(), IoError> {
    match m.remove("schema") {
        None => Ok(()),
        Some(Value::String(s)) if s == SCHEMA => Ok(()),
        Some(other) => Err(IoError::schema(label, format!("unsupported schema {other}, expected \"{SCHEMA}\""))),
    }
}

fn from_value<T: serde::de::DeserializeOwned>(v: Value, label: &str) -> Result<T, IoError> {
    serde_json::from_value(v).map_err(|e| IoError::schema(label, e))
}

fn space_value(mut v: Value, src: Source) -> Result<FiniteMetricSpace, IoError> {
    if let Value::String(reference) = &v {
        let base = src
            .base
            .ok_or_else(|| IoError::schema(src.label, "space file references are not allowed here"))?;
        let path = base.join(reference);
        let label = path.display().to_string();
        let text = read(&path)?;
        return parse_space(&text, &label);
    }
    if let Value::Object(m) = &mut v {
        strip_schema(m, src.label)?;
    }
    let doc: SpaceDoc = from_value(v, src.label)?;
    doc.build().map_err(|error| IoError::Metric { path: src.label.to_string(), error })
}

pub fn parse_space(text: &str, label: &str) -> Result<FiniteMetricSpace, IoError> {
    space_value(document(text, label)?, Source::inline(label))
}

pub fn parse_relation(text: &str, src: Source) -> Result<DynamicalRelation, IoError> {
    let doc: RelationIn = from_value(document(text, src.label)?, src.label)?;
    let space = space_value(doc.space, src)?.into_arc();
    DynamicalRelation::new(space, doc.pairs).map_err(|error| IoError::Relation { path: src.label.to_string(), error })
}

/// A bare nested cell or `{"root": cell}`; representatives use the Euclidean metric.
pub fn parse_tree(text: &str, label: &str) -> Result<CantorTree, IoError> {
    tree_value(document(text, label)?, label)
}

fn tree_value(v: Value, label: &str) -> Result<CantorTree, IoError> {
    let root = if v.get("root").is_some() { from_value::<TreeIn>(v, label)?.root } else { from_value(v, label)? };
    CantorTree::from_nested(&root, PointMetric::Euclidean).map_err(|error| IoError::Tree { path: label.to_string(), error })
}

/// `{"tree": <tree>, "map": [...]}`: a bijection of the tree's leaves, as a
/// relation on the leaf space.
pub fn parse_tree_system(text: &str, label: &str) -> Result<(CantorTree, DynamicalRelation), IoError> {
    let doc: TreeSystemIn = from_value(document(text, label)?, label)?;
    let tree = tree_value(doc.tree, label)?;
    let space = Arc::new(tree.leaf_space());
    let pairs = doc.map.into_iter().enumerate().collect();
    let r = DynamicalRelation::new(space, pairs).map_err(|error| IoError::Relation { path: label.to_string(), error })?;
    Ok((tree, r))
}

/// `{"space": ..., "map": [...], "modulus": {"lipschitz": L} | {"table": [[ε, δ], ...]}}`.
pub fn parse_manifold(text: &str, src: Source) -> Result<SampledManifoldMap, IoError> {
    let doc: ManifoldIn = from_value(document(text, src.label)?, src.label)?;
    let space = space_value(doc.space, src)?.into_arc();
    SampledManifoldMap::new(space, doc.map, doc.modulus)
        .map_err(|error| IoError::Manifold { path: src.label.to_string(), error })
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|error| IoError::Read { path: path.display().to_string(), error })
}

fn base_of(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn load_space(path: &Path) -> Result<FiniteMetricSpace, IoError> {
    parse_space(&read(path)?, &path.display().to_string())
}

pub fn load_relation(path: &Path) -> Result<DynamicalRelation, IoError> {
    let (label, base) = (path.display().to_string(), base_of(path));
    parse_relation(&read(path)?, Source { label: &label, base: Some(&base) })
}

pub fn load_tree(path: &Path) -> Result<CantorTree, IoError> {
    parse_tree(&read(path)?, &path.display().to_string())
}

pub fn load_tree_system(path: &Path) -> Result<(CantorTree, DynamicalRelation), IoError> {
    parse_tree_system(&read(path)?, &path.display().to_string())
}

pub fn load_manifold(path: &Path) -> Result<SampledManifoldMap, IoError> {
    let (label, base) = (path.display().to_string(), base_of(path));
    parse_manifold(&read(path)?, Source { label: &label, base: Some(&base) })
}

/// Rounds to [`DIGITS`] significant digits; zero and non-finite values pass through.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", DIGITS - 1, v).parse().unwrap_or(v)
}

/// Human-readable real: rounded, always with a decimal point or exponent.
pub fn fmt_real(v: f64) -> String {
    format!("{:?}", round_sig(v))
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x))) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(m) => m.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with reals rounded and, for objects, `"schema"` added.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    if let Value::Object(m) = &mut v {
        m.insert("schema".into(), Value::String(SCHEMA.into()));
    }
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
