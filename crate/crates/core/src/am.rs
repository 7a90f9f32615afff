//! ε-isometries and the C⁰ Gromov–Hausdorff distance between finite maps.
//!
//! For maps `f: X → X` and `g: Y → Y` the distance is the least ε admitting
//! maps `φ: X → Y` and `ψ: Y → X` that are ε-isometries (distortion and
//! covering defect at most ε) and ε-intertwine the dynamics in the sup norm.
//! The two directions do not interact, so each is minimized on its own and the
//! distance is the larger of the two minima.

use serde::Serialize;
use thiserror::Error;

use crate::metric::{same_space, FiniteMetricSpace};
use crate::quotient::{dgh_upper, Local, UpperWitness};
use crate::relation::{ds_distance, DynamicalRelation, RelationError};

/// Node budget per direction for the exact search.
pub const DEFAULT_AM_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmError {
    #[error("map is not total on its domain")]
    PartialMap,
    #[error("system is not a function")]
    NotAFunction,
    #[error("systems do not share a placement")]
    PlacementMissing,
    #[error("D(f, g) = {distance} is not below δ = {delta}")]
    DistanceNotBelowDelta { distance: f64, delta: f64 },
    #[error(transparent)]
    Relation(#[from] RelationError),
}

/// Quality of a map `φ: X → Y` as an approximate isometry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsIsometryReport {
    pub distortion: f64,
    /// Hausdorff distance from `φ(X)` to `Y`.
    pub covering: f64,
    /// Least ε for which `φ` is an ε-isometry.
    pub eps: f64,
}

/// `map[i]` is the image of point `i` of `x`, an index into `y`.
pub fn eps_isometry_report(
    map: &[usize],
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
) -> Result<EpsIsometryReport, AmError> {
    if map.len() != x.len() || map.iter().any(|&v| v >= y.len()) {
        return Err(AmError::PartialMap);
    }
    let (distortion, covering) = defects(map, |a, b| x.dist(a, b), y.len(), |a, b| y.dist(a, b));
    Ok(EpsIsometryReport { distortion, covering, eps: distortion.max(covering) })
}

fn defects<DX, DY>(map: &[usize], dx: DX, ny: usize, dy: DY) -> (f64, f64)
where
    DX: Fn(usize, usize) -> f64,
    DY: Fn(usize, usize) -> f64,
{
    let mut distortion: f64 = 0.0;
    for a in 0..map.len() {
        for b in a + 1..map.len() {
            distortion = distortion.max((dy(map[a], map[b]) - dx(a, b)).abs());
        }
    }
    let covering = (0..ny)
        .map(|y| map.iter().map(|&v| dy(y, v)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    (distortion, covering)
}

/// One direction `φ: M(f) → M(g)` of the distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionReport {
    /// `(x, φ(x))` in ambient indices.
    pub map: Vec<(usize, usize)>,
    pub isometry: EpsIsometryReport,
    /// `max_x d(g(φ(x)), φ(f(x)))`.
    pub c0_defect: f64,
    /// `max(isometry.eps, c0_defect)`.
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AmMode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmResult {
    pub value: f64,
    pub phi: DirectionReport,
    pub psi: DirectionReport,
    pub mode: AmMode,
    pub explored: u64,
}

impl AmResult {
    /// Recomputes the value from the two witness maps alone.
    pub fn recompute(&self, f: &DynamicalRelation, g: &DynamicalRelation) -> Result<f64, AmError> {
        let a = direction_from_pairs(f, g, &self.phi.map)?;
        let b = direction_from_pairs(g, f, &self.psi.map)?;
        Ok(a.value.max(b.value))
    }
}

/// A function system in carrier positions.
struct MapSystem {
    local: Local,
    map: Vec<usize>,
}

impl MapSystem {
    fn new(f: &DynamicalRelation) -> Result<Self, AmError> {
        if !f.is_function() {
            return Err(AmError::NotAFunction);
        }
        let local = Local::new(f);
        let mut map = vec![0; local.len()];
        for &(a, b) in &local.pairs {
            map[a] = b;
        }
        Ok(MapSystem { local, map })
    }
}

fn report(f: &MapSystem, g: &MapSystem, phi: &[usize]) -> DirectionReport {
    let (distortion, covering) = defects(phi, |a, b| f.local.d(a, b), g.local.len(), |a, b| g.local.d(a, b));
    let c0_defect = (0..phi.len()).map(|x| g.local.d(g.map[phi[x]], phi[f.map[x]])).fold(0.0, f64::max);
    let isometry = EpsIsometryReport { distortion, covering, eps: distortion.max(covering) };
    DirectionReport {
        map: phi.iter().enumerate().map(|(x, &y)| (f.local.points[x], g.local.points[y])).collect(),
        value: isometry.eps.max(c0_defect),
        isometry,
        c0_defect,
    }
}

fn direction_from_pairs(f: &DynamicalRelation, g: &DynamicalRelation, pairs: &[(usize, usize)]) -> Result<DirectionReport, AmError> {
    let (fs, gs) = (MapSystem::new(f)?, MapSystem::new(g)?);
    let mut phi = vec![usize::MAX; fs.local.len()];
    for &(a, b) in pairs {
        let i = fs.local.points.binary_search(&a).map_err(|_| AmError::PartialMap)?;
        let j = gs.local.points.binary_search(&b).map_err(|_| AmError::PartialMap)?;
        phi[i] = j;
    }
    if phi.contains(&usize::MAX) {
        return Err(AmError::PartialMap);
    }
    Ok(report(&fs, &gs, &phi))
}

struct Search<'a> {
    f: &'a MapSystem,
    g: &'a MapSystem,
    budget: u64,
    nodes: u64,
    best: f64,
    best_map: Option<Vec<usize>>,
    phi: Vec<usize>,
    /// Preimages under `f`, to find the intertwining terms closed by a new assignment.
    pre: Vec<Vec<usize>>,
}

impl Search<'_> {
    /// Cost of the terms that become determined when `x` is assigned last.
    fn added(&self, x: usize) -> f64 {
        let (f, g, phi) = (self.f, self.g, &self.phi);
        let mut c: f64 = 0.0;
        for x2 in 0..x {
            c = c.max((g.local.d(phi[x], phi[x2]) - f.local.d(x, x2)).abs());
        }
        let done = |v: usize| v <= x;
        if done(f.map[x]) {
            c = c.max(g.local.d(g.map[phi[x]], phi[f.map[x]]));
        }
        for &x2 in &self.pre[x] {
            if x2 < x {
                c = c.max(g.local.d(g.map[phi[x2]], phi[x]));
            }
        }
        c
    }

    fn visit(&mut self, x: usize, cost: f64) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        if cost >= self.best {
            return true;
        }
        let m = self.f.local.len();
        if x == m {
            let n = self.g.local.len();
            let covering = (0..n)
                .map(|y| self.phi.iter().map(|&v| self.g.local.d(y, v)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            let total = cost.max(covering);
            if total < self.best {
                self.best = total;
                self.best_map = Some(self.phi.clone());
            }
            return true;
        }
        for y in 0..self.g.local.len() {
            self.phi[x] = y;
            let next = cost.max(self.added(x));
            if !self.visit(x + 1, next) {
                return false;
            }
        }
        true
    }
}

struct Direction {
    phi: Vec<usize>,
    complete: bool,
    nodes: u64,
}

fn minimize(f: &MapSystem, g: &MapSystem, budget: u64, seed: Option<Vec<usize>>) -> Direction {
    let m = f.local.len();
    let mut pre = vec![Vec::new(); m];
    for x in 0..m {
        pre[f.map[x]].push(x);
    }
    let mut s = Search { f, g, budget, nodes: 0, best: f64::INFINITY, best_map: None, phi: vec![0; m], pre };
    let complete = s.visit(0, 0.0);
    if complete {
        return Direction { phi: s.best_map.expect("some map exists"), complete, nodes: s.nodes };
    }
    // Out of budget: improve the best of the partial search and the seed
    // by single-point moves.
    let mut candidates: Vec<Vec<usize>> = s.best_map.into_iter().collect();
    candidates.extend(seed);
    if candidates.is_empty() {
        candidates.push(vec![0; m]);
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mut phi in candidates {
        let mut value = report(f, g, &phi).value;
        let mut improved = true;
        while improved {
            improved = false;
            for x in 0..m {
                for y in 0..g.local.len() {
                    let old = phi[x];
                    if y == old {
                        continue;
                    }
                    phi[x] = y;
                    let v = report(f, g, &phi).value;
                    if v < value {
                        value = v;
                        improved = true;
                    } else {
                        phi[x] = old;
                    }
                }
            }
        }
        if best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, phi));
        }
    }
    Direction { phi: best.unwrap().1, complete: false, nodes: s.nodes }
}

/// Maps `M(f) → M(g)` read off an upper-bound placement: each point goes to
/// its first nearest partner in the placement.
fn seed_from_placement(f: &DynamicalRelation, g: &DynamicalRelation, budget: u64) -> Option<(Vec<usize>, Vec<usize>)> {
    let up = dgh_upper(f, g, budget).ok()?;
    let (lf, lg) = (Local::new(f), Local::new(g));
    match up.witness {
        UpperWitness::CommonAmbient { .. } => {
            let s = f.space();
            let near = |from: &Local, to: &Local| -> Vec<usize> {
                (0..from.len())
                    .map(|i| {
                        (0..to.len())
                            .min_by(|&a, &b| s.dist(from.points[i], to.points[a]).total_cmp(&s.dist(from.points[i], to.points[b])))
                            .unwrap()
                    })
                    .collect()
            };
            Some((near(&lf, &lg), near(&lg, &lf)))
        }
        UpperWitness::Gluing { correspondence, .. } => {
            let mut phi = vec![usize::MAX; lf.len()];
            let mut psi = vec![usize::MAX; lg.len()];
            for (a, b) in correspondence {
                let i = lf.points.binary_search(&a).ok()?;
                let j = lg.points.binary_search(&b).ok()?;
                if phi[i] == usize::MAX {
                    phi[i] = j;
                }
                if psi[j] == usize::MAX {
                    psi[j] = i;
                }
            }
            Some((phi, psi))
        }
    }
}

/// The C⁰ Gromov–Hausdorff distance between two function systems.
///
/// Exact when both directions finish within `budget` nodes (branch-and-bound
/// over all maps); otherwise the result is an upper bound obtained by local
/// improvement from the partial search and from a placement witness, and is
/// flagged heuristic.
pub fn am_distance(f: &DynamicalRelation, g: &DynamicalRelation, budget: u64) -> Result<AmResult, AmError> {
    let (fs, gs) = (MapSystem::new(f)?, MapSystem::new(g)?);
    let mut a = minimize(&fs, &gs, budget, None);
    let mut b = minimize(&gs, &fs, budget, None);
    if !(a.complete && b.complete) {
        if let Some((phi, psi)) = seed_from_placement(f, g, budget) {
            if !a.complete {
                a = minimize(&fs, &gs, budget, Some(phi));
            }
            if !b.complete {
                b = minimize(&gs, &fs, budget, Some(psi));
            }
        }
    }
    let phi = report(&fs, &gs, &a.phi);
    let psi = report(&gs, &fs, &b.phi);
    let mode = if a.complete && b.complete { AmMode::Exact } else { AmMode::Heuristic };
    Ok(AmResult { value: phi.value.max(psi.value), phi, psi, mode, explored: a.nodes + b.nodes })
}

/// Certificate for maps built from a common placement with `D(f, g) < δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosePairCertificate {
    pub delta: f64,
    pub distance: f64,
    pub phi: DirectionReport,
    pub psi: DirectionReport,
    /// Every defect of both maps is below `2δ`.
    pub certified: bool,
}

/// Builds `φ` and `ψ` from the graph distance in a shared space: `x` goes to
/// the first `y` whose graph point `(y, g(y))` is nearest to `(x, f(x))`.
pub fn am_from_close_pair(f: &DynamicalRelation, g: &DynamicalRelation, delta: f64) -> Result<ClosePairCertificate, AmError> {
    if !same_space(f.space(), g.space()) {
        return Err(AmError::PlacementMissing);
    }
    let (fs, gs) = (MapSystem::new(f)?, MapSystem::new(g)?);
    let distance = ds_distance(f, g)?.value;
    if !(distance < delta) {
        return Err(AmError::DistanceNotBelowDelta { distance, delta });
    }
    let s = f.space();
    let partner = |from: &MapSystem, to: &MapSystem| -> Vec<usize> {
        (0..from.local.len())
            .map(|x| {
                let (px, pfx) = (from.local.points[x], from.local.points[from.map[x]]);
                let d = |y: usize| s.dist(px, to.local.points[y]).max(s.dist(pfx, to.local.points[to.map[y]]));
                (0..to.local.len()).min_by(|&a, &b| d(a).total_cmp(&d(b))).unwrap()
            })
            .collect()
    };
    let phi = report(&fs, &gs, &partner(&fs, &gs));
    let psi = report(&gs, &fs, &partner(&gs, &fs));
    let bound = 2.0 * delta;
    let certified = [&phi, &psi]
        .iter()
        .all(|r| r.isometry.distortion < bound && r.isometry.covering < bound && r.c0_defect < bound);
    Ok(ClosePairCertificate { delta, distance, phi, psi, certified })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomsReport {
    pub systems: usize,
    pub triples: usize,
    /// `(i, j, |D(i,j) − D(j,i)|)` for every asymmetric pair.
    pub symmetry_defects: Vec<(usize, usize, f64)>,
    /// `(i, j, k, excess)` where `D(i,j) > 2(D(i,k) + D(k,j))`.
    pub triangle_defects: Vec<(usize, usize, usize, f64)>,
    /// True when every value came from the exact search.
    pub exact: bool,
}

/// Checks symmetry and the coefficient-2 triangle inequality on all pairs and
/// triples of `systems`.
pub fn am_axioms_suite(systems: &[DynamicalRelation], budget: u64) -> Result<AxiomsReport, AmError> {
    let n = systems.len();
    let mut table = vec![vec![0.0; n]; n];
    let mut exact = true;
    for i in 0..n {
        for j in 0..n {
            let r = am_distance(&systems[i], &systems[j], budget)?;
            exact &= r.mode == AmMode::Exact;
            table[i][j] = r.value;
        }
    }
    let mut symmetry_defects = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if table[i][j] != table[j][i] {
                symmetry_defects.push((i, j, (table[i][j] - table[j][i]).abs()));
            }
        }
    }
    let mut triangle_defects = Vec::new();
    let mut triples = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                triples += 1;
                let excess = table[i][j] - 2.0 * (table[i][k] + table[k][j]);
                if excess > crate::TAU_CMP {
                    triangle_defects.push((i, j, k, excess));
                }
            }
        }
    }
    Ok(AxiomsReport { systems: n, triples, symmetry_defects, triangle_defects, exact })
}
