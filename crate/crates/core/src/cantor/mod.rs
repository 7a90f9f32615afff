//! Leaf matchings between finite-depth Cantor partition trees and
//! conjugating pairs between leaf bijections.

pub(crate) mod bottleneck;
mod tree;

use serde::Serialize;
use thiserror::Error;

use crate::metric::hausdorff_by;
use crate::relation::{DynamicalRelation, RelationClass};

pub use tree::{dyadic_cantor, CantorTree, Cell, NestedCell, PointMetric};

use bottleneck::{bottleneck_matching, max_matching};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CantorError {
    #[error("Cantor construction needs depth ≥ 1 and scale > gap > 0")]
    BadGeometry,
    #[error("invalid tree at node {node}: {reason}")]
    InvalidTree { node: usize, reason: String },
    #[error("tree {tree} has no level with mesh below {delta} (finest mesh {finest})")]
    MeshTooCoarse { tree: char, delta: f64, finest: f64 },
    #[error("no cellwise bijection within the admissible cell pairs (ρ = {rho}, δ = {delta})")]
    RefinementImpossible { rho: f64, delta: f64 },
    #[error("leaf counts differ: {a} vs {b}")]
    LeafCountMismatch { a: usize, b: usize },
    #[error("trees use different point metrics or dimensions")]
    DimensionMismatch,
    #[error("delta must be positive, got {0}")]
    NonpositiveDelta(f64),
    #[error("relation is not a bijection of all leaves")]
    NotBijection,
    #[error("relation is not defined on the leaf space of its tree")]
    RelationNotOnLeaves,
    #[error("D(g, j) = {distance} is not below δ = {delta}")]
    DistanceNotBelowDelta { distance: f64, delta: f64 },
    #[error("best graph matching moves points by {best}, not below δ = {delta}")]
    NoMatchingBelowDelta { best: f64, delta: f64 },
}

/// Bijection from the leaves of one tree to the leaves of another.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafMatching {
    /// `map[i]` is the leaf of the second tree matched with leaf `i`.
    pub map: Vec<usize>,
    /// Largest distance between matched leaves.
    pub displacement: f64,
}

impl LeafMatching {
    fn new(a: &CantorTree, b: &CantorTree, map: Vec<usize>) -> Self {
        let displacement = displacement(a, b, &map);
        LeafMatching { map, displacement }
    }
}

/// `max_i d(leaf_i(A), leaf_map[i](B))`.
pub fn displacement(a: &CantorTree, b: &CantorTree, map: &[usize]) -> f64 {
    let m = a.metric();
    map.iter()
        .enumerate()
        .map(|(i, &j)| m.dist(a.leaf_rep(i), b.leaf_rep(j)))
        .fold(0.0, f64::max)
}

/// Leaves matched between one cell of each tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Piece {
    pub cell_a: usize,
    pub cell_b: usize,
    pub leaves: Vec<(usize, usize)>,
}

/// What the matching algorithm did, for inspection and testing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchTrace {
    pub rho: f64,
    pub delta: f64,
    pub level_a: usize,
    pub level_b: usize,
    /// Node ids of the cells used on each side.
    pub cells_a: Vec<usize>,
    pub cells_b: Vec<usize>,
    /// Injective assignment of A-cells to nearby B-cells (positions in `cells_b`).
    pub first_assignment: Vec<Option<usize>>,
    /// B-cells left uncovered, each sent to a nearby A-cell: `(b, a)` positions.
    pub leftover_assignment: Vec<(usize, usize)>,
    /// Whether the final matching keeps every B-cell inside its assigned A-cell.
    pub follows_assignment: bool,
    /// Set when no bijection fits the admissible cells and leaf pairs within
    /// `ρ + 3δ` were matched directly instead.
    pub widened: bool,
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub matching: LeafMatching,
    pub trace: MatchTrace,
}

fn check_compatible(a: &CantorTree, b: &CantorTree) -> Result<(), CantorError> {
    if a.metric() != b.metric() || a.leaf_rep(0).len() != b.leaf_rep(0).len() {
        return Err(CantorError::DimensionMismatch);
    }
    if a.leaf_count() != b.leaf_count() {
        return Err(CantorError::LeafCountMismatch { a: a.leaf_count(), b: b.leaf_count() });
    }
    Ok(())
}

fn leaf_distances(a: &CantorTree, b: &CantorTree) -> Vec<Vec<f64>> {
    let m = a.metric();
    (0..a.leaf_count())
        .map(|i| (0..b.leaf_count()).map(|j| m.dist(a.leaf_rep(i), b.leaf_rep(j))).collect())
        .collect()
}

/// Hausdorff distance between the leaf sets of two trees.
pub fn leaf_hausdorff(a: &CantorTree, b: &CantorTree) -> f64 {
    let m = a.metric();
    hausdorff_by(a.leaf_count(), b.leaf_count(), |i, j| m.dist(a.leaf_rep(i), b.leaf_rep(j))).value
}

/// Cell position (within `cells`) of every leaf.
fn leaf_owner(t: &CantorTree, cells: &[usize]) -> Vec<usize> {
    let mut owner = vec![0; t.leaf_count()];
    for (k, &c) in cells.iter().enumerate() {
        let (lo, hi) = t.nodes()[c].leaf_range;
        for slot in &mut owner[lo..hi] {
            *slot = k;
        }
    }
    owner
}

/// Clopen-partition matching at mesh `delta`.
///
/// Uses the coarsest level of each tree with mesh below δ. Cells `U`, `V` are
/// admissible when some leaves of them are closer than `ρ + δ`, with ρ the
/// Hausdorff distance between the leaf sets. An injective assignment of
/// A-cells into admissible B-cells is chosen, the remaining B-cells are sent
/// back to admissible A-cells, and the cells are then refined into a leaf
/// bijection that only pairs leaves of admissible cells. Any such bijection
/// moves points by less than `ρ + 3δ`; the one returned minimizes the largest
/// move, preferring one that respects the assignment when that costs nothing.
/// Finite trees carry equal mass per leaf, so the admissible cells may admit
/// no bijection; leaf pairs within `ρ + 3δ` are then matched directly, and
/// the error is returned only when no bijection meets that bound.
pub fn cantor_match(a: &CantorTree, b: &CantorTree, delta: f64) -> Result<MatchResult, CantorError> {
    if !(delta > 0.0) {
        return Err(CantorError::NonpositiveDelta(delta));
    }
    check_compatible(a, b)?;
    let level_a = a.level_below(delta).ok_or(CantorError::MeshTooCoarse {
        tree: 'A',
        delta,
        finest: a.mesh(a.height()),
    })?;
    let level_b = b.level_below(delta).ok_or(CantorError::MeshTooCoarse {
        tree: 'B',
        delta,
        finest: b.mesh(b.height()),
    })?;
    let n = a.leaf_count();
    let dist = leaf_distances(a, b);
    let rho = leaf_hausdorff(a, b);
    let reach = rho + delta;

    let cells_a = a.level(level_a);
    let cells_b = b.level(level_b);
    let own_a = leaf_owner(a, &cells_a);
    let own_b = leaf_owner(b, &cells_b);
    let mut gap = vec![vec![f64::INFINITY; cells_b.len()]; cells_a.len()];
    for i in 0..n {
        for j in 0..n {
            let g = &mut gap[own_a[i]][own_b[j]];
            *g = g.min(dist[i][j]);
        }
    }
    let admissible = |u: usize, v: usize| gap[u][v] < reach;

    // Injective assignment, nearest cells tried first.
    let adj: Vec<Vec<usize>> = (0..cells_a.len())
        .map(|u| {
            let mut vs: Vec<usize> = (0..cells_b.len()).filter(|&v| admissible(u, v)).collect();
            vs.sort_by(|&x, &y| gap[u][x].total_cmp(&gap[u][y]).then(x.cmp(&y)));
            vs
        })
        .collect();
    let first_assignment = max_matching(&adj, cells_b.len());
    let mut assigned: Vec<Option<usize>> = vec![None; cells_b.len()];
    for (u, v) in first_assignment.iter().enumerate() {
        if let Some(v) = *v {
            assigned[v] = Some(u);
        }
    }
    let mut leftover_assignment = Vec::new();
    for v in 0..cells_b.len() {
        if assigned[v].is_none() {
            let u = (0..cells_a.len())
                .filter(|&u| admissible(u, v))
                .min_by(|&x, &y| gap[x][v].total_cmp(&gap[y][v]).then(x.cmp(&y)))
                .expect("every B-cell has a leaf within ρ of some A-leaf");
            assigned[v] = Some(u);
            leftover_assignment.push((v, u));
        }
    }

    let general = bottleneck_matching(n, |i, j| admissible(own_a[i], own_b[j]).then(|| dist[i][j]));
    let faithful = bottleneck_matching(n, |i, j| (assigned[own_b[j]] == Some(own_a[i])).then(|| dist[i][j]));
    let (map, follows_assignment, widened) = match (faithful, general) {
        (Some((fv, fm)), Some((gv, _))) if fv <= gv => (fm, true, false),
        (_, Some((_, gm))) => (gm, false, false),
        (_, None) => {
            let bound = rho + 3.0 * delta;
            match bottleneck_matching(n, |i, j| (dist[i][j] <= bound).then(|| dist[i][j])) {
                Some((_, m)) => (m, false, true),
                None => return Err(CantorError::RefinementImpossible { rho, delta }),
            }
        }
    };

    let mut pieces: Vec<Piece> = Vec::new();
    let mut slots = std::collections::BTreeMap::new();
    for (i, &j) in map.iter().enumerate() {
        let key = (cells_a[own_a[i]], cells_b[own_b[j]]);
        let k = *slots.entry(key).or_insert_with(|| {
            pieces.push(Piece { cell_a: key.0, cell_b: key.1, leaves: Vec::new() });
            pieces.len() - 1
        });
        pieces[k].leaves.push((i, j));
    }
    let matching = LeafMatching::new(a, b, map);
    Ok(MatchResult {
        matching,
        trace: MatchTrace {
            rho,
            delta,
            level_a,
            level_b,
            cells_a,
            cells_b,
            first_assignment,
            leftover_assignment,
            follows_assignment,
            widened,
            pieces,
        },
    })
}

/// Smallest displacement over all leaf bijections, with a minimizer.
pub fn best_matching(a: &CantorTree, b: &CantorTree) -> Result<LeafMatching, CantorError> {
    check_compatible(a, b)?;
    let n = a.leaf_count();
    let dist = leaf_distances(a, b);
    if n <= 10 {
        let mut best = (f64::INFINITY, Vec::new());
        let mut used = vec![false; n];
        let mut cur = Vec::with_capacity(n);
        exhaustive(&dist, 0.0, &mut used, &mut cur, &mut best);
        return Ok(LeafMatching::new(a, b, best.1));
    }
    let (_, map) = bottleneck_matching(n, |i, j| Some(dist[i][j])).expect("complete bipartite graph");
    Ok(LeafMatching::new(a, b, map))
}

fn exhaustive(dist: &[Vec<f64>], worst: f64, used: &mut [bool], cur: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
    let i = cur.len();
    if i == dist.len() {
        if worst < best.0 {
            *best = (worst, cur.clone());
        }
        return;
    }
    for j in 0..dist.len() {
        if used[j] {
            continue;
        }
        let w = worst.max(dist[i][j]);
        if w >= best.0 {
            continue;
        }
        used[j] = true;
        cur.push(j);
        exhaustive(dist, w, used, cur, best);
        cur.pop();
        used[j] = false;
    }
}

/// `min_h ‖h‖` over leaf bijections; never below the leaf Hausdorff distance.
pub fn best_matching_lower_bound(a: &CantorTree, b: &CantorTree) -> Result<f64, CantorError> {
    Ok(best_matching(a, b)?.displacement)
}

/// Leaf maps `h₁, h₂` with `h₂ ∘ g = j ∘ h₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugatingPair {
    pub h1: Vec<usize>,
    pub h2: Vec<usize>,
    pub displacement_h1: f64,
    pub displacement_h2: f64,
    /// Displacement of the underlying graph matching.
    pub graph_displacement: f64,
    /// `D(g, j)` computed on the leaf graphs.
    pub distance: f64,
    /// `"cantor-match"` or `"bottleneck"`.
    pub method: &'static str,
}

fn bijection_on_leaves(t: &CantorTree, g: &DynamicalRelation) -> Result<Vec<usize>, CantorError> {
    if **g.space() != t.leaf_space() {
        return Err(CantorError::RelationNotOnLeaves);
    }
    if g.classify() != RelationClass::BijectionAnalog || g.carrier().len() != t.leaf_count() {
        return Err(CantorError::NotBijection);
    }
    Ok(g.pairs().iter().map(|p| p.1).collect())
}

/// Tree over the graph `{(x, g(x))}` with the cell structure of `t`.
fn graph_tree(t: &CantorTree, g: &[usize]) -> CantorTree {
    let point = |i: usize| -> Vec<f64> {
        let mut p = t.leaf_rep(i).to_vec();
        p.extend_from_slice(t.leaf_rep(g[i]));
        p
    };
    let block = t.leaf_rep(0).len();
    let metric = PointMetric::ProductMax { block };
    let pts: Vec<Vec<f64>> = (0..t.leaf_count()).map(point).collect();
    let nodes: Vec<Cell> = t
        .nodes()
        .iter()
        .map(|c| {
            let (lo, hi) = c.leaf_range;
            let mut diam: f64 = 0.0;
            for i in lo..hi {
                for j in (i + 1)..hi {
                    diam = diam.max(metric.dist(&pts[i], &pts[j]));
                }
            }
            Cell { rep: pts[lo].clone(), diam, children: c.children.clone(), depth: c.depth, leaf_range: c.leaf_range }
        })
        .collect();
    let leaves = (0..t.leaf_count()).map(|i| t.leaf_node(i)).collect();
    CantorTree::from_parts(nodes, leaves, metric)
}

/// Conjugating pair for leaf bijections `g` (on the leaves of `a`) and `j`
/// (on the leaves of `b`) with `D(g, j) < δ`.
///
/// The graphs of `g` and `j` are matched as Cantor trees at mesh
/// `(δ − D)/3`, so the graph matching moves points by less than δ; the two
/// projections of that matching are `h₁` and `h₂`. When the finite trees admit
/// no such cellwise matching, the optimal graph bijection is used instead and
/// the run fails if it does not beat δ.
pub fn conjugating_pair(
    a: &CantorTree,
    g: &DynamicalRelation,
    b: &CantorTree,
    j: &DynamicalRelation,
    delta: f64,
) -> Result<ConjugatingPair, CantorError> {
    if !(delta > 0.0) {
        return Err(CantorError::NonpositiveDelta(delta));
    }
    if a.metric() != PointMetric::Euclidean || a.metric() != b.metric() {
        return Err(CantorError::DimensionMismatch);
    }
    check_compatible(a, b)?;
    let gm = bijection_on_leaves(a, g)?;
    let jm = bijection_on_leaves(b, j)?;
    let ga = graph_tree(a, &gm);
    let gb = graph_tree(b, &jm);
    let distance = leaf_hausdorff(&ga, &gb);
    if !(distance < delta) {
        return Err(CantorError::DistanceNotBelowDelta { distance, delta });
    }
    let inner = (delta - distance) / 3.0 * (1.0 - 1e-9);
    let (matching, method) = match cantor_match(&ga, &gb, inner) {
        Ok(r) if r.matching.displacement < delta => (r.matching, "cantor-match"),
        _ => {
            let best = best_matching(&ga, &gb)?;
            if !(best.displacement < delta) {
                return Err(CantorError::NoMatchingBelowDelta { best: best.displacement, delta });
            }
            (best, "bottleneck")
        }
    };
    let n = a.leaf_count();
    let mut h1 = vec![0; n];
    let mut h2 = vec![0; n];
    for x in 0..n {
        let y = matching.map[x];
        h1[x] = y;
        h2[gm[x]] = jm[y];
    }
    let m = PointMetric::Euclidean;
    let disp = |h: &[usize]| (0..n).map(|x| m.dist(a.leaf_rep(x), b.leaf_rep(h[x]))).fold(0.0, f64::max);
    debug_assert!((0..n).all(|x| h2[gm[x]] == jm[h1[x]]));
    Ok(ConjugatingPair {
        displacement_h1: disp(&h1),
        displacement_h2: disp(&h2),
        h1,
        h2,
        graph_displacement: matching.displacement,
        distance,
        method,
    })
}
