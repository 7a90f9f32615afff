//! Distances between systems on different spaces, modulo isometric conjugacy.
//!
//! Two systems on unrelated spaces are compared by placing both in a common
//! metric space and measuring the graph distance there. The placements
//! explored here are gluings along correspondences between the carriers
//! ([`glue_by_correspondence`]), the common ambient when both systems already
//! share one, and rigid motions for Euclidean point clouds ([`euclidean_dgh`]).
//! Upper bounds are realized by such a placement; lower bounds come from the
//! Gromov–Hausdorff distances of the carriers and of the graphs.

mod conjugacy;
mod correspondence;
mod rigid;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use conjugacy::{graph_isometry_check, isometric_conjugacy_check};
pub use correspondence::{glue_by_correspondence, Correspondence, GluedSpace};
pub use rigid::{euclidean_dgh, RigidMotion, RigidResult};

use crate::metric::{same_space, MetricError};
use crate::relation::{ds_distance, graph_hausdorff_by, Direction, DsWitness, DynamicalRelation, RelationError};
use crate::TAU_CMP;
use correspondence::{cross_distances, distortion_by};

/// Node budget for the correspondence and isometry searches.
pub const DEFAULT_SEARCH_BUDGET: u64 = 1 << 20;

/// Gluing width used when the correspondence has zero distortion; the gluing
/// needs ε > 0 to keep distinct points apart.
pub const GLUE_FLOOR: f64 = 1e-12;

/// Up to this many cells in `M(f) × M(g)`, every correspondence is evaluated.
const EXHAUSTIVE_CELLS: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuotientError {
    #[error("index out of range")]
    IndexOutOfRange,
    #[error("relation is not onto both spaces")]
    NotACorrespondence,
    #[error("gluing width {eps} is below half the distortion {half}")]
    EpsilonBelowHalfDistortion { eps: f64, half: f64 },
    #[error("gluing width must be positive")]
    DegenerateIdentification,
    #[error("glued space is not a metric: {0}")]
    GluingInvalid(MetricError),
    #[error("both systems must live in Euclidean spaces")]
    NotEuclidean,
    #[error("Euclidean dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("search budget of {0} nodes exhausted")]
    BudgetExceeded(u64),
    #[error(transparent)]
    Relation(#[from] RelationError),
}

/// A system re-indexed by carrier position with a dense distance table.
#[derive(Debug, Clone)]
pub(crate) struct Local {
    pub points: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
    dist: Vec<f64>,
}

impl Local {
    pub fn new(f: &DynamicalRelation) -> Self {
        let points = f.carrier().to_vec();
        let pos = |x: usize| points.binary_search(&x).expect("pair outside carrier");
        let pairs = f.pairs().iter().map(|&(a, b)| (pos(a), pos(b))).collect();
        let s = f.space();
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = s.dist(points[i], points[j]);
            }
        }
        Local { points, pairs, dist }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.points.len() + j]
    }

    /// `d₂` between two pairs of this system.
    #[inline]
    pub fn d2(&self, p: (usize, usize), q: (usize, usize)) -> f64 {
        self.d(p.0, q.0).max(self.d(p.1, q.1))
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }
}

/// How an upper bound was realized.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpperWitness {
    /// Both systems already live in one space; the bound is `D(f, g)` there.
    CommonAmbient { witness: DsWitness },
    /// Disjoint union glued along `correspondence` (ambient indices of the two
    /// spaces) at width `eps`. `witness` uses ambient indices of the space
    /// named first by its direction.
    Gluing {
        correspondence: Vec<(usize, usize)>,
        eps: f64,
        distortion: f64,
        /// Every pair of one graph has a partner pair in the other graph whose
        /// coordinates are both related by the correspondence.
        dynamic_cover: bool,
        witness: DsWitness,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBound {
    pub value: f64,
    pub witness: UpperWitness,
    /// Search nodes (or correspondences) evaluated.
    pub explored: u64,
    /// False when the budget ran out before the search finished.
    pub complete: bool,
    /// True when an isometric conjugacy was found.
    pub conjugate: bool,
}

impl UpperWitness {
    /// Rebuilds the placement from the witness alone and recomputes `D`.
    pub fn recompute(&self, f: &DynamicalRelation, g: &DynamicalRelation) -> Result<f64, QuotientError> {
        match self {
            UpperWitness::CommonAmbient { .. } => Ok(ds_distance(f, g)?.value),
            UpperWitness::Gluing { correspondence, eps, .. } => {
                let (lf, lg) = (Local::new(f), Local::new(g));
                let mut local = Vec::with_capacity(correspondence.len());
                for &(a, b) in correspondence {
                    let i = lf.points.binary_search(&a).map_err(|_| QuotientError::IndexOutOfRange)?;
                    let j = lg.points.binary_search(&b).map_err(|_| QuotientError::IndexOutOfRange)?;
                    local.push((i, j));
                }
                let x = f.space().subspace(&lf.points).map_err(QuotientError::GluingInvalid)?;
                let y = g.space().subspace(&lg.points).map_err(QuotientError::GluingInvalid)?;
                let r = Correspondence::new(x.len(), y.len(), local)?;
                let glued = glue_by_correspondence(&x, &y, &r, *eps)?;
                let space = std::sync::Arc::new(glued.space.clone());
                let m = glued.x_len;
                let fg = DynamicalRelation::new(space.clone(), lf.pairs.clone())?;
                let gg = DynamicalRelation::new(space, lg.pairs.iter().map(|&(a, b)| (a + m, b + m)).collect())?;
                Ok(ds_distance(&fg, &gg)?.value)
            }
        }
    }
}

struct Evaluated {
    value: f64,
    eps: f64,
    distortion: f64,
    witness: DsWitness,
}

/// Realized `D` of the gluing along `pairs` (local indices) at `ε = max(dis/2, floor)`.
fn evaluate(lf: &Local, lg: &Local, pairs: &[(usize, usize)]) -> Evaluated {
    let distortion = distortion_by(pairs, |a, b| lf.d(a, b), |a, b| lg.d(a, b));
    let eps = (distortion / 2.0).max(GLUE_FLOOR);
    let n = lg.len();
    let cross = cross_distances(lf.len(), n, pairs, eps, |a, b| lf.d(a, b), |a, b| lg.d(a, b));
    let witness = graph_hausdorff_by(&lf.pairs, &lg.pairs, |p, q| cross[p.0 * n + q.0].max(cross[p.1 * n + q.1]));
    Evaluated { value: witness.value, eps, distortion, witness }
}

fn dynamic_cover(lf: &Local, lg: &Local, pairs: &[(usize, usize)]) -> bool {
    let n = lg.len();
    let mut rel = vec![false; lf.len() * n];
    for &(a, b) in pairs {
        rel[a * n + b] = true;
    }
    let linked = |p: (usize, usize), q: (usize, usize)| rel[p.0 * n + q.0] && rel[p.1 * n + q.1];
    lf.pairs.iter().all(|&p| lg.pairs.iter().any(|&q| linked(p, q)))
        && lg.pairs.iter().all(|&q| lf.pairs.iter().any(|&p| linked(p, q)))
}

fn gluing_witness(lf: &Local, lg: &Local, pairs: &[(usize, usize)], e: Evaluated) -> UpperWitness {
    let lift = |p: (usize, usize), l: &Local| (l.points[p.0], l.points[p.1]);
    let (from, to) = match e.witness.direction {
        Direction::FToG => (lift(e.witness.from, lf), lift(e.witness.to, lg)),
        Direction::GToF => (lift(e.witness.from, lg), lift(e.witness.to, lf)),
    };
    UpperWitness::Gluing {
        correspondence: pairs.iter().map(|&(a, b)| (lf.points[a], lg.points[b])).collect(),
        eps: e.eps,
        distortion: e.distortion,
        dynamic_cover: dynamic_cover(lf, lg, pairs),
        witness: DsWitness { value: e.value, from, to, direction: e.witness.direction },
    }
}

fn covers(mask: u64, m: usize, n: usize) -> bool {
    let mut rows = 0u64;
    let mut cols = 0u64;
    for k in 0..m * n {
        if mask >> k & 1 == 1 {
            rows |= 1 << (k / n);
            cols |= 1 << (k % n);
        }
    }
    rows.count_ones() as usize == m && cols.count_ones() as usize == n
}

fn mask_pairs(mask: u64, n: usize, cells: usize) -> Vec<(usize, usize)> {
    (0..cells).filter(|k| mask >> k & 1 == 1).map(|k| (k / n, k % n)).collect()
}

struct Search<'a> {
    lf: &'a Local,
    lg: &'a Local,
    budget: u64,
    nodes: u64,
    best: f64,
    best_pairs: Option<Vec<(usize, usize)>>,
    row_hits: Vec<usize>,
    col_hits: Vec<usize>,
    pairs: Vec<(usize, usize)>,
}

impl Search<'_> {
    /// Decides cell `k` (row-major), exclusion first so that small
    /// correspondences are reached early. Returns false once out of budget.
    fn visit(&mut self, k: usize, dis: f64) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        // Realized D is at least ε ≥ dis/2.
        if dis / 2.0 >= self.best {
            return true;
        }
        let (m, n) = (self.lf.len(), self.lg.len());
        if k == m * n {
            let e = evaluate(self.lf, self.lg, &self.pairs);
            if e.value < self.best {
                self.best = e.value;
                self.best_pairs = Some(self.pairs.clone());
            }
            return true;
        }
        let (x, y) = (k / n, k % n);
        let must = (y == n - 1 && self.row_hits[x] == 0) || (x == m - 1 && self.col_hits[y] == 0);
        if !must && !self.visit(k + 1, dis) {
            return false;
        }
        let mut next = dis;
        for &(a, b) in &self.pairs {
            next = next.max((self.lf.d(a, x) - self.lg.d(b, y)).abs());
        }
        self.pairs.push((x, y));
        self.row_hits[x] += 1;
        self.col_hits[y] += 1;
        let ok = self.visit(k + 1, next);
        self.pairs.pop();
        self.row_hits[x] -= 1;
        self.col_hits[y] -= 1;
        ok
    }
}

/// Smallest realized `D` over placements of `f` and `g` in a common space.
///
/// Every correspondence between the carriers is explored (not only ones that
/// intertwine the dynamics), exhaustively for small carriers and by
/// branch-and-bound otherwise. An isometric conjugacy, when one exists, is
/// tried first and gives a bound of [`GLUE_FLOOR`]. When `budget` runs out the
/// best bound so far is returned with `complete = false`.
pub fn dgh_upper(f: &DynamicalRelation, g: &DynamicalRelation, budget: u64) -> Result<UpperBound, QuotientError> {
    let (lf, lg) = (Local::new(f), Local::new(g));
    let (m, n) = (lf.len(), lg.len());
    let cells = m * n;

    let mut best: Option<(f64, UpperWitness)> = None;
    let mut conjugate = false;
    if let Ok(Some(map)) = isometric_conjugacy_check(f, g, budget) {
        conjugate = true;
        let pairs: Vec<(usize, usize)> = map
            .iter()
            .map(|&(a, b)| (lf.points.binary_search(&a).unwrap(), lg.points.binary_search(&b).unwrap()))
            .collect();
        let e = evaluate(&lf, &lg, &pairs);
        best = Some((e.value, gluing_witness(&lf, &lg, &pairs, e)));
    }
    if same_space(f.space(), g.space()) {
        let w = ds_distance(f, g)?;
        if best.as_ref().is_none_or(|b| w.value < b.0) {
            best = Some((w.value, UpperWitness::CommonAmbient { witness: w }));
        }
    }

    let (explored, complete, found) = if cells <= EXHAUSTIVE_CELLS {
        let found = (1u64..1 << cells)
            .into_par_iter()
            .filter(|&mask| covers(mask, m, n))
            .map(|mask| (evaluate(&lf, &lg, &mask_pairs(mask, n, cells)).value, mask))
            .reduce(|| (f64::INFINITY, u64::MAX), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        (1u64 << cells, true, Some(mask_pairs(found.1, n, cells)))
    } else {
        let mut s = Search {
            lf: &lf,
            lg: &lg,
            budget,
            nodes: 0,
            best: best.as_ref().map_or(f64::INFINITY, |b| b.0),
            best_pairs: None,
            row_hits: vec![0; m],
            col_hits: vec![0; n],
            pairs: Vec::new(),
        };
        let complete = s.visit(0, 0.0);
        (s.nodes, complete, s.best_pairs)
    };
    if let Some(pairs) = found {
        let e = evaluate(&lf, &lg, &pairs);
        if best.as_ref().is_none_or(|b| e.value < b.0) {
            best = Some((e.value, gluing_witness(&lf, &lg, &pairs, e)));
        }
    }
    let (value, witness) = match best {
        Some(b) => b,
        None => {
            // Out of budget before any leaf: fall back to the full product.
            let pairs: Vec<(usize, usize)> = (0..cells).map(|k| (k / n, k % n)).collect();
            let e = evaluate(&lf, &lg, &pairs);
            (e.value, gluing_witness(&lf, &lg, &pairs, e))
        }
    };
    Ok(UpperBound { value, witness, explored, complete, conjugate })
}

/// Minimum distortion over correspondences between two finite metric spaces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinDistortion {
    pub value: f64,
    /// Attaining correspondence (local indices).
    pub pairs: Vec<(usize, usize)>,
    /// False when the search ran out of budget; `value` is then only the best
    /// distortion found, not the minimum.
    pub complete: bool,
}

struct DisSearch<'a, FA, FB> {
    na: usize,
    nb: usize,
    da: &'a FA,
    db: &'a FB,
    budget: u64,
    nodes: u64,
    best: f64,
    best_pairs: Vec<(usize, usize)>,
    pairs: Vec<(usize, usize)>,
    covered_b: Vec<usize>,
}

impl<FA, FB> DisSearch<'_, FA, FB>
where
    FA: Fn(usize, usize) -> f64,
    FB: Fn(usize, usize) -> f64,
{
    fn added(&self, a: usize, b: usize) -> f64 {
        self.pairs.iter().map(|&(a2, b2)| ((self.da)(a, a2) - (self.db)(b, b2)).abs()).fold(0.0, f64::max)
    }

    /// Steps `0..na` choose an image for each `a`; later steps give each still
    /// uncovered `b` a preimage. Every correspondence contains one built this
    /// way, and distortion only grows with inclusion.
    fn visit(&mut self, step: usize, dis: f64) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        if dis >= self.best {
            return true;
        }
        if step == self.na + self.nb {
            self.best = dis;
            self.best_pairs = self.pairs.clone();
            return true;
        }
        let mut options: Vec<(f64, usize, usize)> = if step < self.na {
            (0..self.nb).map(|b| (self.added(step, b), step, b)).collect()
        } else {
            let b = step - self.na;
            if self.covered_b[b] > 0 {
                return self.visit(step + 1, dis);
            }
            (0..self.na).map(|a| (self.added(a, b), a, b)).collect()
        };
        options.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (inc, a, b) in options {
            let next = dis.max(inc);
            if next >= self.best {
                break;
            }
            self.pairs.push((a, b));
            self.covered_b[b] += 1;
            let ok = self.visit(step + 1, next);
            self.pairs.pop();
            self.covered_b[b] -= 1;
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Branch-and-bound for the minimum distortion between `0..na` and `0..nb`.
pub(crate) fn min_distortion<FA, FB>(na: usize, nb: usize, da: FA, db: FB, budget: u64) -> MinDistortion
where
    FA: Fn(usize, usize) -> f64,
    FB: Fn(usize, usize) -> f64,
{
    let mut s = DisSearch {
        na,
        nb,
        da: &da,
        db: &db,
        budget,
        nodes: 0,
        best: f64::INFINITY,
        best_pairs: Vec::new(),
        pairs: Vec::new(),
        covered_b: vec![0; nb],
    };
    let complete = s.visit(0, 0.0);
    MinDistortion { value: s.best, pairs: s.best_pairs, complete }
}

/// One half of the lower bound: `½ min dis` when the search finished,
/// otherwise `½ |diam A − diam B|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerPart {
    pub value: f64,
    pub search: MinDistortion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBound {
    pub value: f64,
    /// Between the carriers.
    pub carriers: LowerPart,
    /// Between the graphs under the max product metric.
    pub graphs: LowerPart,
}

fn lower_part<FA, FB>(na: usize, nb: usize, da: FA, db: FB, diam: (f64, f64), budget: u64) -> LowerPart
where
    FA: Fn(usize, usize) -> f64,
    FB: Fn(usize, usize) -> f64,
{
    let search = min_distortion(na, nb, da, db, budget);
    let value = if search.complete { search.value / 2.0 } else { (diam.0 - diam.1).abs() / 2.0 };
    LowerPart { value, search }
}

/// Lower bound valid for every placement: in any common space, `D(f, g)`
/// dominates the Hausdorff distance of the carriers and of the graphs, and
/// those dominate half the minimum distortion.
pub fn dgh_lower(f: &DynamicalRelation, g: &DynamicalRelation, budget: u64) -> LowerBound {
    let (lf, lg) = (Local::new(f), Local::new(g));
    let carriers = lower_part(lf.len(), lg.len(), |a, b| lf.d(a, b), |a, b| lg.d(a, b), (lf.diameter(), lg.diameter()), budget);
    let gd = |l: &Local| {
        let mut d: f64 = 0.0;
        for &p in &l.pairs {
            for &q in &l.pairs {
                d = d.max(l.d2(p, q));
            }
        }
        d
    };
    let graphs = lower_part(
        lf.pairs.len(),
        lg.pairs.len(),
        |a, b| lf.d2(lf.pairs[a], lf.pairs[b]),
        |a, b| lg.d2(lg.pairs[a], lg.pairs[b]),
        (gd(&lf), gd(&lg)),
        budget,
    );
    LowerBound { value: carriers.value.max(graphs.value), carriers, graphs }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bracket {
    pub lower: LowerBound,
    pub upper: UpperBound,
    /// Lower and upper agree within the comparison tolerance.
    pub exact: bool,
}

pub fn dgh_bracket(f: &DynamicalRelation, g: &DynamicalRelation, budget: u64) -> Result<Bracket, QuotientError> {
    let upper = dgh_upper(f, g, budget)?;
    let lower = dgh_lower(f, g, budget);
    let exact = lower.value >= upper.value - TAU_CMP;
    Ok(Bracket { lower, upper, exact })
}
