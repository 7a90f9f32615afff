use serde::Serialize;

use super::QuotientError;
use crate::metric::FiniteMetricSpace;
use crate::TAU_METRIC;

/// A relation between the points of two spaces, onto both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Correspondence {
    pairs: Vec<(usize, usize)>,
}

impl Correspondence {
    /// Validates surjectivity onto `0..x_len` and `0..y_len`.
    pub fn new(x_len: usize, y_len: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self, QuotientError> {
        pairs.sort_unstable();
        pairs.dedup();
        let mut hit_x = vec![false; x_len];
        let mut hit_y = vec![false; y_len];
        for &(a, b) in &pairs {
            if a >= x_len || b >= y_len {
                return Err(QuotientError::IndexOutOfRange);
            }
            hit_x[a] = true;
            hit_y[b] = true;
        }
        if hit_x.contains(&false) || hit_y.contains(&false) || pairs.is_empty() {
            return Err(QuotientError::NotACorrespondence);
        }
        Ok(Correspondence { pairs })
    }

    /// Graph of a bijection `i ↦ map[i]`.
    pub fn from_bijection(map: &[usize]) -> Self {
        let mut pairs: Vec<(usize, usize)> = map.iter().copied().enumerate().collect();
        pairs.sort_unstable();
        Correspondence { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn distortion(&self, x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> f64 {
        distortion_by(&self.pairs, |a, b| x.dist(a, b), |a, b| y.dist(a, b))
    }
}

/// `max |d_X(a, a') − d_Y(b, b')|` over pairs of pairs.
pub(crate) fn distortion_by<FX, FY>(pairs: &[(usize, usize)], dx: FX, dy: FY) -> f64
where
    FX: Fn(usize, usize) -> f64,
    FY: Fn(usize, usize) -> f64,
{
    let mut d: f64 = 0.0;
    for (k, &(a, b)) in pairs.iter().enumerate() {
        for &(a2, b2) in &pairs[k + 1..] {
            d = d.max((dx(a, a2) - dy(b, b2)).abs());
        }
    }
    d
}

/// Metric on the disjoint union of two spaces joined along a correspondence.
#[derive(Debug, Clone)]
pub struct GluedSpace {
    pub space: FiniteMetricSpace,
    pub x_len: usize,
    pub y_len: usize,
    pub eps: f64,
}

impl GluedSpace {
    /// Index of point `j` of the second space.
    pub fn y(&self, j: usize) -> usize {
        self.x_len + j
    }
}

/// Cross distance of the gluing: `min_R (d_X(x, a) + d_Y(b, y)) + ε`.
pub(crate) fn cross_distances<FX, FY>(
    x_len: usize,
    y_len: usize,
    pairs: &[(usize, usize)],
    eps: f64,
    dx: FX,
    dy: FY,
) -> Vec<f64>
where
    FX: Fn(usize, usize) -> f64,
    FY: Fn(usize, usize) -> f64,
{
    let mut cross = vec![f64::INFINITY; x_len * y_len];
    for x in 0..x_len {
        for y in 0..y_len {
            let mut best = f64::INFINITY;
            for &(a, b) in pairs {
                best = best.min(dx(x, a) + dy(b, y));
            }
            cross[x * y_len + y] = best + eps;
        }
    }
    cross
}

/// Glues `x` and `y` along `r` at width ε. Requires `ε ≥ dis(R)/2` and ε > 0;
/// the result is revalidated as a metric.
pub fn glue_by_correspondence(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    r: &Correspondence,
    eps: f64,
) -> Result<GluedSpace, QuotientError> {
    if !(eps > 0.0) {
        return Err(QuotientError::DegenerateIdentification);
    }
    let half = r.distortion(x, y) / 2.0;
    if eps < half - TAU_METRIC {
        return Err(QuotientError::EpsilonBelowHalfDistortion { eps, half });
    }
    let (m, n) = (x.len(), y.len());
    if r.pairs().iter().any(|&(a, b)| a >= m || b >= n) {
        return Err(QuotientError::IndexOutOfRange);
    }
    let cross = cross_distances(m, n, r.pairs(), eps, |a, b| x.dist(a, b), |a, b| y.dist(a, b));
    let total = m + n;
    let mut rows = vec![vec![0.0; total]; total];
    for i in 0..total {
        for j in 0..total {
            rows[i][j] = match (i < m, j < m) {
                (true, true) => x.dist(i, j),
                (false, false) => y.dist(i - m, j - m),
                (true, false) => cross[i * n + (j - m)],
                (false, true) => cross[j * n + (i - m)],
            };
        }
    }
    let space = FiniteMetricSpace::validate_metric(&rows, None).map_err(QuotientError::GluingInvalid)?;
    Ok(GluedSpace { space, x_len: m, y_len: n, eps })
}
