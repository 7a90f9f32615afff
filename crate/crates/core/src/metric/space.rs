use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::TAU_METRIC;

/// Upper bound on the number of violations collected by a single validation.
const MAX_VIOLATIONS: usize = 10_000;

/// One failed metric axiom, with the indices involved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    NonzeroDiagonal { i: usize },
    NegativeDistance { i: usize, j: usize },
    AsymmetricMatrix { i: usize, j: usize },
    TriangleViolation { i: usize, j: usize, k: usize },
    DuplicatePoint { i: usize, j: usize },
    CoordMismatch { i: usize, j: usize },
}

impl Violation {
    pub fn name(&self) -> &'static str {
        match self {
            Violation::NonzeroDiagonal { .. } => "NonzeroDiagonal",
            Violation::NegativeDistance { .. } => "NegativeDistance",
            Violation::AsymmetricMatrix { .. } => "AsymmetricMatrix",
            Violation::TriangleViolation { .. } => "TriangleViolation",
            Violation::DuplicatePoint { .. } => "DuplicatePoint",
            Violation::CoordMismatch { .. } => "CoordMismatch",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NonzeroDiagonal { i } => write!(f, "NonzeroDiagonal({i})"),
            Violation::NegativeDistance { i, j } => write!(f, "NegativeDistance({i},{j})"),
            Violation::AsymmetricMatrix { i, j } => write!(f, "AsymmetricMatrix({i},{j})"),
            Violation::TriangleViolation { i, j, k } => {
                write!(f, "TriangleViolation({i},{j},{k})")
            }
            Violation::DuplicatePoint { i, j } => write!(f, "DuplicatePoint({i},{j})"),
            Violation::CoordMismatch { i, j } => write!(f, "CoordMismatch({i},{j})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("metric space has no points")]
    Empty,
    #[error("row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("entry ({i},{j}) is not finite")]
    NonFinite { i: usize, j: usize },
    #[error("point {point} has dimension {found}, expected {expected}")]
    DimensionMismatch { point: usize, expected: usize, found: usize },
    #[error("period for coordinate {axis} must be finite and positive")]
    BadPeriod { axis: usize },
    #[error("invalid metric: {}", summarize(.violations))]
    Invalid { violations: Vec<Violation>, truncated: bool },
    #[error("subset is empty")]
    EmptySubset,
    #[error("subsets belong to different spaces")]
    SpaceMismatch,
    #[error("point index {index} out of range for a space of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("epsilon must be positive, got {0}")]
    NonpositiveEpsilon(f64),
    #[error("scale must be nonnegative, got {0}")]
    NegativeScale(f64),
}

fn summarize(v: &[Violation]) -> String {
    let mut s: Vec<String> = v.iter().take(8).map(|x| x.to_string()).collect();
    if v.len() > 8 {
        s.push(format!("... ({} total)", v.len()));
    }
    s.join(", ")
}

impl MetricError {
    /// The violations carried by an `Invalid` error, empty otherwise.
    pub fn violations(&self) -> &[Violation] {
        match self {
            MetricError::Invalid { violations, .. } => violations,
            _ => &[],
        }
    }
}

/// How distances are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Row-major `n × n` matrix, exactly symmetric.
    Matrix { dist: Vec<f64> },
    /// Flat coordinates, optionally periodic per axis (circle, torus). With no
    /// periods this is ordinary Euclidean space.
    Coordinates {
        dim: usize,
        coords: Vec<f64>,
        periods: Vec<Option<f64>>,
    },
}

/// A validated finite metric space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    geometry: Geometry,
    labels: Option<Vec<String>>,
}

impl FiniteMetricSpace {
    /// Validates a distance matrix, optionally against declared coordinates.
    ///
    /// With coordinates present the returned space computes distances from the
    /// coordinates (after checking they agree with the matrix within
    /// [`TAU_METRIC`]).
    pub fn validate_metric(
        matrix: &[Vec<f64>],
        coords: Option<&[Vec<f64>]>,
    ) -> Result<Self, MetricError> {
        let n = matrix.len();
        if n == 0 {
            return Err(MetricError::Empty);
        }
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(MetricError::NotSquare { row: i, len: row.len(), expected: n });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(MetricError::NonFinite { i, j });
                }
                dist.push(v);
            }
        }
        let mut violations = Vec::new();
        let mut truncated = false;
        let mut push = |v: Violation, out: &mut Vec<Violation>| {
            if out.len() < MAX_VIOLATIONS {
                out.push(v);
            } else {
                truncated = true;
            }
        };
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                push(Violation::NonzeroDiagonal { i }, &mut violations);
            }
            for j in 0..n {
                if dist[i * n + j] < 0.0 {
                    push(Violation::NegativeDistance { i, j }, &mut violations);
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (dist[i * n + j], dist[j * n + i]);
                if (a - b).abs() > TAU_METRIC {
                    push(Violation::AsymmetricMatrix { i, j }, &mut violations);
                }
                if a <= 0.0 && b <= 0.0 {
                    push(Violation::DuplicatePoint { i, j }, &mut violations);
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let dij = dist[i * n + j];
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    if dij > dist[i * n + k] + dist[k * n + j] + TAU_METRIC {
                        push(Violation::TriangleViolation { i, j, k }, &mut violations);
                    }
                }
            }
        }
        let coord_space = match coords {
            Some(points) => {
                if points.len() != n {
                    return Err(MetricError::DimensionMismatch {
                        point: points.len().min(n),
                        expected: n,
                        found: points.len(),
                    });
                }
                let space = Self::euclidean(points.to_vec())?;
                for i in 0..n {
                    for j in (i + 1)..n {
                        if (space.dist(i, j) - dist[i * n + j]).abs() > TAU_METRIC {
                            push(Violation::CoordMismatch { i, j }, &mut violations);
                        }
                    }
                }
                Some(space)
            }
            None => None,
        };
        if !violations.is_empty() {
            return Err(MetricError::Invalid { violations, truncated });
        }
        if let Some(space) = coord_space {
            return Ok(space);
        }
        // Symmetrize exactly so that downstream computations are order independent.
        for i in 0..n {
            for j in (i + 1)..n {
                dist[j * n + i] = dist[i * n + j];
            }
        }
        Ok(FiniteMetricSpace { n, geometry: Geometry::Matrix { dist }, labels: None })
    }

    /// Euclidean space spanned by the given points.
    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        Self::flat(points, vec![None; dim])
    }

    /// Points on the real line.
    pub fn line(xs: &[f64]) -> Result<Self, MetricError> {
        Self::euclidean(xs.iter().map(|&x| vec![x]).collect())
    }

    /// Flat coordinates with optional per-axis periods (a circle is one periodic
    /// axis, the flat torus two). Distances are intrinsic: each periodic axis
    /// contributes its wrapped difference.
    pub fn flat(points: Vec<Vec<f64>>, periods: Vec<Option<f64>>) -> Result<Self, MetricError> {
        let n = points.len();
        if n == 0 {
            return Err(MetricError::Empty);
        }
        let dim = periods.len();
        for (axis, p) in periods.iter().enumerate() {
            if let Some(p) = p {
                if !(p.is_finite() && *p > 0.0) {
                    return Err(MetricError::BadPeriod { axis });
                }
            }
        }
        let mut coords = Vec::with_capacity(n * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(MetricError::DimensionMismatch { point: i, expected: dim, found: p.len() });
            }
            for (j, &x) in p.iter().enumerate() {
                if !x.is_finite() {
                    return Err(MetricError::NonFinite { i, j });
                }
                coords.push(x);
            }
        }
        let space = FiniteMetricSpace {
            n,
            geometry: Geometry::Coordinates { dim, coords, periods },
            labels: None,
        };
        let dups = space.duplicate_points();
        if !dups.is_empty() {
            let truncated = dups.len() > MAX_VIOLATIONS;
            let violations = dups
                .into_iter()
                .take(MAX_VIOLATIONS)
                .map(|(i, j)| Violation::DuplicatePoint { i, j })
                .collect();
            return Err(MetricError::Invalid { violations, truncated });
        }
        Ok(space)
    }

    /// Attaches point labels; the label count must match the point count.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, MetricError> {
        if labels.len() != self.n {
            return Err(MetricError::DimensionMismatch {
                point: labels.len().min(self.n),
                expected: self.n,
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    fn duplicate_points(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        if self.n <= 4096 {
            for i in 0..self.n {
                for j in (i + 1)..self.n {
                    if self.dist(i, j) <= 0.0 {
                        out.push((i, j));
                    }
                }
            }
            return out;
        }
        // Large coordinate sets: sort normalized coordinates and compare
        // neighbours, then confirm with the metric itself.
        let mut order: Vec<usize> = (0..self.n).collect();
        let key = |i: usize| -> Vec<f64> { self.normalized_coords(i) };
        let keys: Vec<Vec<f64>> = (0..self.n).map(key).collect();
        order.sort_by(|&a, &b| {
            keys[a]
                .iter()
                .zip(&keys[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in order.windows(2) {
            if self.dist(w[0], w[1]) <= 0.0 {
                out.push((w[0].min(w[1]), w[0].max(w[1])));
            }
        }
        out
    }

    fn normalized_coords(&self, i: usize) -> Vec<f64> {
        match &self.geometry {
            Geometry::Coordinates { dim, coords, periods } => coords[i * dim..(i + 1) * dim]
                .iter()
                .zip(periods)
                .map(|(&x, p)| match p {
                    Some(p) => x.rem_euclid(*p),
                    None => x,
                })
                .collect(),
            Geometry::Matrix { .. } => Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Coordinates of point `i`, when the space is coordinate based.
    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        match &self.geometry {
            Geometry::Coordinates { dim, coords, .. } => Some(&coords[i * dim..(i + 1) * dim]),
            Geometry::Matrix { .. } => None,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.geometry {
            Geometry::Coordinates { dim, .. } => Some(*dim),
            Geometry::Matrix { .. } => None,
        }
    }

    pub fn periods(&self) -> Option<&[Option<f64>]> {
        match &self.geometry {
            Geometry::Coordinates { periods, .. } => Some(periods),
            Geometry::Matrix { .. } => None,
        }
    }

    /// True for coordinate spaces without periodic axes.
    pub fn is_euclidean(&self) -> bool {
        matches!(&self.geometry, Geometry::Coordinates { periods, .. } if periods.iter().all(Option::is_none))
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.geometry {
            Geometry::Matrix { dist } => dist[i * self.n + j],
            Geometry::Coordinates { dim, coords, periods } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                flat_distance(a, b, periods)
            }
        }
    }

    /// Distance between two arbitrary coordinate vectors under this space's
    /// flat metric. `None` for matrix spaces.
    pub fn coord_distance(&self, a: &[f64], b: &[f64]) -> Option<f64> {
        match &self.geometry {
            Geometry::Coordinates { periods, .. } => Some(flat_distance(a, b, periods)),
            Geometry::Matrix { .. } => None,
        }
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                d = d.max(self.dist(i, j));
            }
        }
        d
    }

    /// Full distance matrix (materialized for coordinate spaces).
    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.dist(i, j)).collect()).collect()
    }

    /// Subspace on the given points, in the given order.
    pub fn subspace(&self, members: &[usize]) -> Result<FiniteMetricSpace, MetricError> {
        for &m in members {
            if m >= self.n {
                return Err(MetricError::IndexOutOfRange { index: m, len: self.n });
            }
        }
        if members.is_empty() {
            return Err(MetricError::EmptySubset);
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| members.iter().map(|&m| l[m].clone()).collect());
        let geometry = match &self.geometry {
            Geometry::Matrix { dist } => {
                let k = members.len();
                let mut d = Vec::with_capacity(k * k);
                for &a in members {
                    for &b in members {
                        d.push(dist[a * self.n + b]);
                    }
                }
                Geometry::Matrix { dist: d }
            }
            Geometry::Coordinates { dim, coords, periods } => {
                let mut c = Vec::with_capacity(members.len() * dim);
                for &m in members {
                    c.extend_from_slice(&coords[m * dim..(m + 1) * dim]);
                }
                Geometry::Coordinates { dim: *dim, coords: c, periods: periods.clone() }
            }
        };
        let space = FiniteMetricSpace { n: members.len(), geometry, labels };
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            let (i, j) = first_repeat(members);
            return Err(MetricError::Invalid {
                violations: vec![Violation::DuplicatePoint { i, j }],
                truncated: false,
            });
        }
        Ok(space)
    }

    pub fn into_arc(self) -> Arc<Self> {
        Arc::new(self)
    }
}

fn first_repeat(members: &[usize]) -> (usize, usize) {
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            if members[i] == members[j] {
                return (i, j);
            }
        }
    }
    (0, 0)
}

#[inline]
fn flat_distance(a: &[f64], b: &[f64], periods: &[Option<f64>]) -> f64 {
    let mut s = 0.0;
    for ((x, y), p) in a.iter().zip(b).zip(periods) {
        let mut d = (x - y).abs();
        if let Some(p) = p {
            d = d.rem_euclid(*p);
            d = d.min(p - d);
        }
        s += d * d;
    }
    s.sqrt()
}

/// True when both handles describe the same space.
pub fn same_space(a: &Arc<FiniteMetricSpace>, b: &Arc<FiniteMetricSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}
