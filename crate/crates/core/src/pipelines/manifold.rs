use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretize::{finite_relation_approx, DiscretizeError};
use crate::metric::{hausdorff_distance, FiniteMetricSpace, SubsetIndex};
use crate::relation::{ds_distance, DynamicalRelation, RelationError};
use crate::sft::{embed_cylinders, SftError, DEFAULT_BUDGET};

/// Declared uniform-continuity modulus of a sampled map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulus {
    /// `d(f x, f y) ≤ L · d(x, y)`.
    Lipschitz(f64),
    /// Entries `(ε, δ)`: `d(x, y) < δ ⇒ d(f x, f y) < ε`.
    Table(Vec<(f64, f64)>),
}

impl Modulus {
    /// Largest δ this modulus guarantees for output precision `eta`, if any.
    pub fn inverse(&self, eta: f64) -> Option<f64> {
        match self {
            Modulus::Lipschitz(l) if *l > 0.0 => Some(eta / l),
            Modulus::Lipschitz(_) => Some(f64::INFINITY),
            Modulus::Table(rows) => rows.iter().filter(|r| r.0 <= eta).map(|r| r.1).fold(None, |a, d| Some(a.map_or(d, |a: f64| a.max(d)))),
        }
    }

    /// Bound on `d(f x, f y)` given `d(x, y) = t` (infinite when unknown).
    pub fn bound(&self, t: f64) -> f64 {
        match self {
            Modulus::Lipschitz(l) => l * t,
            Modulus::Table(rows) => rows.iter().filter(|r| t < r.1).map(|r| r.0).fold(f64::INFINITY, f64::min),
        }
    }
}

/// A self-map of a manifold sample: grid points with their intrinsic metric,
/// the image of each grid point, and a declared modulus.
#[derive(Debug, Clone)]
pub struct SampledManifoldMap {
    pub space: Arc<FiniteMetricSpace>,
    pub map: Vec<usize>,
    pub modulus: Modulus,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifoldError {
    #[error("map must send each of the {expected} grid points to a grid point")]
    PartialMap { expected: usize },
    #[error("declared modulus fails on grid points {i} and {j}")]
    ModulusInconsistent { i: usize, j: usize },
    #[error("modulus gives no δ for precision {0}")]
    ModulusTooCoarse(f64),
    #[error("ε = {eps} is not above the grid resolution {resolution}")]
    GridTooCoarse { eps: f64, resolution: f64 },
    #[error("sampled map is not a valid system: {0}")]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Sft(#[from] SftError),
    #[error("certificate failed: density {density}, closeness {closeness}, ε {eps}")]
    CertificateFailed { density: f64, closeness: f64, eps: f64 },
}

impl SampledManifoldMap {
    /// Checks totality and the modulus on every pair of grid points.
    pub fn new(space: Arc<FiniteMetricSpace>, map: Vec<usize>, modulus: Modulus) -> Result<Self, ManifoldError> {
        let n = space.len();
        if map.len() != n || map.iter().any(|&v| v >= n) {
            return Err(ManifoldError::PartialMap { expected: n });
        }
        for i in 0..n {
            for j in i + 1..n {
                let d = space.dist(i, j);
                let fd = space.dist(map[i], map[j]);
                let ok = match &modulus {
                    Modulus::Lipschitz(l) => fd <= l * d + crate::TAU_METRIC,
                    Modulus::Table(rows) => rows.iter().all(|&(e, del)| !(d < del) || fd < e),
                };
                if !ok {
                    return Err(ManifoldError::ModulusInconsistent { i, j });
                }
            }
        }
        Ok(SampledManifoldMap { space, map, modulus })
    }

    pub fn relation(&self) -> Result<DynamicalRelation, RelationError> {
        DynamicalRelation::new(self.space.clone(), self.map.iter().copied().enumerate().collect())
    }

    /// Largest distance from a grid point to its nearest other grid point.
    pub fn resolution(&self) -> f64 {
        let n = self.space.len();
        (0..n)
            .map(|i| (0..n).filter(|&j| j != i).map(|j| self.space.dist(i, j)).fold(f64::INFINITY, f64::min))
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CantorApproxCertificate {
    pub eps: f64,
    /// Working scale δ = min(ε/2, ω⁻¹(ε/2)), slightly shrunk.
    pub delta: f64,
    /// Hausdorff distance from the produced carrier to the grid.
    pub density: f64,
    /// Bound on `d(g(k), f(k))` over produced pairs `(k, g(k))`:
    /// `min` over grid points `x` of `d(g(k), f(x)) + ω(d(k, x))`.
    pub closeness: f64,
    /// Exact `D(g, f)` in the common space.
    pub distance: f64,
    pub points: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone)]
pub struct CantorApprox {
    pub space: Arc<FiniteMetricSpace>,
    /// Number of leading points of `space` that are the grid.
    pub grid_len: usize,
    pub relation: DynamicalRelation,
    pub certificate: CantorApproxCertificate,
}

/// Approximates a sampled manifold map by the shift on a finite-depth Cantor
/// sample: discretize at δ/2, lift to the shift on cylinders within δ/2, and
/// certify density and closeness (both below ε) on the samples.
pub fn manifold_cantor_approx(
    m: &SampledManifoldMap,
    eps: f64,
    depth: usize,
    bits: u32,
) -> Result<CantorApprox, ManifoldError> {
    let resolution = m.resolution();
    if !(eps > resolution) {
        return Err(ManifoldError::GridTooCoarse { eps, resolution });
    }
    let inv = m.modulus.inverse(eps / 2.0).ok_or(ManifoldError::ModulusTooCoarse(eps / 2.0))?;
    let delta = (eps / 2.0).min(inv) * (1.0 - 1e-6);
    let f = m.relation()?;
    let approx = finite_relation_approx(&f, delta / 2.0)?;
    let e = embed_cylinders(&approx.relation, depth, delta / 2.0, bits, DEFAULT_BUDGET)?;
    let space = e.space.clone();
    let grid_len = e.base_len;
    let lifted = DynamicalRelation::new(space.clone(), f.pairs().to_vec())?;
    let g = e.relation.clone();

    let grid = SubsetIndex::new(space.clone(), (0..grid_len).collect()).expect("grid indices are valid");
    let density = hausdorff_distance(&g.carrier_subset(), &grid).expect("same space").value;
    let closeness = closeness_bound(m, &space, grid_len, g.pairs());
    let distance = ds_distance(&g, &lifted).expect("same space").value;
    let certificate = CantorApproxCertificate {
        eps,
        delta,
        density,
        closeness,
        distance,
        points: g.carrier().len(),
        pairs: g.len(),
    };
    if !(density < eps && closeness < eps) {
        return Err(ManifoldError::CertificateFailed { density, closeness, eps });
    }
    Ok(CantorApprox { space, grid_len, relation: g, certificate })
}

/// `max` over pairs `(k, gk)` of `min` over grid `x` of `d(gk, f x) + ω(d(k, x))`.
/// The modulus bound is nondecreasing, so for each `k` the grid is scanned by
/// increasing `d(k, x)` and the scan stops once the bound alone reaches the
/// running minimum.
fn closeness_bound(m: &SampledManifoldMap, space: &FiniteMetricSpace, grid_len: usize, pairs: &[(usize, usize)]) -> f64 {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        if i == 0 || pairs[i - 1].0 != p.0 {
            runs.push((i, i + 1));
        } else {
            runs.last_mut().unwrap().1 = i + 1;
        }
    }
    runs.par_iter()
        .map(|&(start, end)| {
            let k = pairs[start].0;
            let mut near: Vec<(f64, usize)> = (0..grid_len).map(|x| (m.modulus.bound(space.dist(k, x)), x)).collect();
            let (w0, x0) = near.iter().copied().min_by(|a, b| a.0.total_cmp(&b.0)).expect("grid is nonempty");
            let cap = pairs[start..end].iter().map(|&(_, gk)| space.dist(gk, m.map[x0]) + w0).fold(0.0, f64::max);
            near.retain(|n| n.0 <= cap);
            near.sort_by(|a, b| a.0.total_cmp(&b.0));
            pairs[start..end]
                .iter()
                .map(|&(_, gk)| {
                    let mut min = f64::INFINITY;
                    for &(w, x) in &near {
                        if w >= min {
                            break;
                        }
                        min = min.min(space.dist(gk, m.map[x]) + w);
                    }
                    min
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}
