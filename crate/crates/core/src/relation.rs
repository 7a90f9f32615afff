//! Surjective relations on a finite metric space, viewed as dynamical systems.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::metric::{hausdorff_by, same_space, Directed, FiniteMetricSpace, SubsetIndex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelationError {
    #[error("relation has no pairs")]
    Empty,
    #[error("point index {index} out of range for a space of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(
        "relation is not surjective: points without successor {missing_outgoing:?}, \
         points without predecessor {missing_incoming:?}"
    )]
    NotSurjective { missing_outgoing: Vec<usize>, missing_incoming: Vec<usize> },
    #[error("point {0} is not in the carrier")]
    PointNotInCarrier(usize),
    #[error("relations live in different spaces")]
    SpaceMismatch,
    #[error("point {point} has more than one image")]
    NotAFunction { point: usize },
    #[error("relations have different carriers")]
    CarrierMismatch,
    #[error(
        "composition is not surjective: points without successor {missing_outgoing:?}, \
         points without predecessor {missing_incoming:?}"
    )]
    CompositionNotSurjective {
        pairs: Vec<(usize, usize)>,
        missing_outgoing: Vec<usize>,
        missing_incoming: Vec<usize>,
    },
}

/// How multivalued a relation is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RelationClass {
    SetValued,
    ContinuousMapAnalog,
    BijectionAnalog,
}

/// A finite surjective relation `f ⊆ M × M`: every carrier point has at least
/// one successor and one predecessor.
#[derive(Debug, Clone)]
pub struct DynamicalRelation {
    space: Arc<FiniteMetricSpace>,
    pairs: Vec<(usize, usize)>,
    carrier: Vec<usize>,
}

impl PartialEq for DynamicalRelation {
    fn eq(&self, other: &Self) -> bool {
        self.pairs == other.pairs && same_space(&self.space, &other.space)
    }
}

fn projections(pairs: &[(usize, usize)]) -> (Vec<usize>, Vec<usize>) {
    let mut dom: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let mut cod: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    dom.sort_unstable();
    dom.dedup();
    cod.sort_unstable();
    cod.dedup();
    (dom, cod)
}

fn difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_err()).collect()
}

impl DynamicalRelation {
    /// Validates a pair list; pairs are sorted and deduplicated.
    pub fn new(space: Arc<FiniteMetricSpace>, mut pairs: Vec<(usize, usize)>) -> Result<Self, RelationError> {
        if pairs.is_empty() {
            return Err(RelationError::Empty);
        }
        let n = space.len();
        for &(a, b) in &pairs {
            for i in [a, b] {
                if i >= n {
                    return Err(RelationError::IndexOutOfRange { index: i, len: n });
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let (dom, cod) = projections(&pairs);
        if dom != cod {
            // A point of cod \ dom has no successor, one of dom \ cod no predecessor.
            return Err(RelationError::NotSurjective {
                missing_outgoing: difference(&cod, &dom),
                missing_incoming: difference(&dom, &cod),
            });
        }
        Ok(DynamicalRelation { space, pairs, carrier: dom })
    }

    /// The identity on the given points.
    pub fn identity(space: Arc<FiniteMetricSpace>, points: &[usize]) -> Result<Self, RelationError> {
        Self::new(space, points.iter().map(|&p| (p, p)).collect())
    }

    /// Graph of the subset's identity.
    pub fn identity_on(x: &SubsetIndex) -> Self {
        let pairs = x.members().iter().map(|&p| (p, p)).collect();
        DynamicalRelation { space: x.space().clone(), pairs, carrier: x.members().to_vec() }
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `M(f)`, the common projection.
    pub fn carrier(&self) -> &[usize] {
        &self.carrier
    }

    pub fn carrier_subset(&self) -> SubsetIndex {
        SubsetIndex::new(self.space.clone(), self.carrier.clone()).expect("carrier is nonempty and in range")
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn fiber(&self, x: usize) -> &[(usize, usize)] {
        let lo = self.pairs.partition_point(|p| p.0 < x);
        let hi = self.pairs.partition_point(|p| p.0 <= x);
        &self.pairs[lo..hi]
    }

    /// `f(x)`, the successors of `x`.
    pub fn image(&self, x: usize) -> Result<Vec<usize>, RelationError> {
        let f = self.fiber(x);
        if f.is_empty() {
            return Err(RelationError::PointNotInCarrier(x));
        }
        Ok(f.iter().map(|p| p.1).collect())
    }

    pub fn inverse(&self) -> Self {
        let mut pairs: Vec<(usize, usize)> = self.pairs.iter().map(|&(a, b)| (b, a)).collect();
        pairs.sort_unstable();
        DynamicalRelation { space: self.space.clone(), pairs, carrier: self.carrier.clone() }
    }

    /// True when every fiber is a singleton.
    pub fn is_function(&self) -> bool {
        self.pairs.windows(2).all(|w| w[0].0 != w[1].0)
    }

    pub fn classify(&self) -> RelationClass {
        if !self.is_function() {
            RelationClass::SetValued
        } else if self.inverse().is_function() {
            RelationClass::BijectionAnalog
        } else {
            RelationClass::ContinuousMapAnalog
        }
    }

    /// `(x, f(x))` for every carrier point, or the first point with two images.
    pub fn as_map(&self) -> Result<&[(usize, usize)], RelationError> {
        match self.pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            Some(w) => Err(RelationError::NotAFunction { point: w[0].0 }),
            None => Ok(&self.pairs),
        }
    }

    /// `f(x)` for a function.
    pub fn apply(&self, x: usize) -> Result<usize, RelationError> {
        match self.fiber(x) {
            [] => Err(RelationError::PointNotInCarrier(x)),
            [(_, y)] => Ok(*y),
            _ => Err(RelationError::NotAFunction { point: x }),
        }
    }

    /// Largest fiber diameter; zero exactly for functions.
    pub fn max_fiber_diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        let mut lo = 0;
        while lo < self.pairs.len() {
            let x = self.pairs[lo].0;
            let mut hi = lo;
            while hi < self.pairs.len() && self.pairs[hi].0 == x {
                hi += 1;
            }
            let fib = &self.pairs[lo..hi];
            for (k, a) in fib.iter().enumerate() {
                for b in &fib[k + 1..] {
                    best = best.max(self.space.dist(a.1, b.1));
                }
            }
            lo = hi;
        }
        best
    }

    /// `{(x, z) : (x, y) ∈ self, (y, z) ∈ next}`. When the result is not
    /// surjective it is returned inside the error for inspection.
    pub fn compose(&self, next: &DynamicalRelation) -> Result<DynamicalRelation, RelationError> {
        if !same_space(&self.space, &next.space) {
            return Err(RelationError::SpaceMismatch);
        }
        let mut pairs = Vec::new();
        for &(x, y) in &self.pairs {
            for &(_, z) in next.fiber(y) {
                pairs.push((x, z));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        if pairs.is_empty() {
            return Err(RelationError::CompositionNotSurjective {
                pairs,
                missing_outgoing: Vec::new(),
                missing_incoming: Vec::new(),
            });
        }
        match DynamicalRelation::new(self.space.clone(), pairs.clone()) {
            Ok(r) => Ok(r),
            Err(RelationError::NotSurjective { missing_outgoing, missing_incoming }) => {
                Err(RelationError::CompositionNotSurjective { pairs, missing_outgoing, missing_incoming })
            }
            Err(e) => Err(e),
        }
    }

    /// The same relation over another handle to an equal space.
    pub fn with_space(&self, space: Arc<FiniteMetricSpace>) -> Result<Self, RelationError> {
        if *space != *self.space {
            return Err(RelationError::SpaceMismatch);
        }
        Ok(DynamicalRelation { space, pairs: self.pairs.clone(), carrier: self.carrier.clone() })
    }
}

/// Which graph holds the point attaining a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    FToG,
    GToF,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::FToG => "f→g",
            Direction::GToF => "g→f",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Direction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// `D(f, g)` with the pair attaining it: `from` lies in the graph named first
/// by `direction` and `to` is its nearest partner in the other graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DsWitness {
    pub value: f64,
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub direction: Direction,
}

/// Hausdorff distance between two pair lists under an arbitrary pair metric.
/// Returns the value, the attaining pair and its partner, and the direction.
pub fn graph_hausdorff_by<F>(
    f: &[(usize, usize)],
    g: &[(usize, usize)],
    d: F,
) -> DsWitness
where
    F: Fn((usize, usize), (usize, usize)) -> f64 + Sync,
{
    let w = hausdorff_by(f.len(), g.len(), |i, j| d(f[i], g[j]));
    if w.forward {
        DsWitness { value: w.value, from: f[w.from], to: g[w.to], direction: Direction::FToG }
    } else {
        DsWitness { value: w.value, from: g[w.from], to: f[w.to], direction: Direction::GToF }
    }
}

/// Hausdorff distance between the graphs of `f` and `g` under the max
/// product metric.
pub fn ds_distance(f: &DynamicalRelation, g: &DynamicalRelation) -> Result<DsWitness, RelationError> {
    if !same_space(&f.space, &g.space) {
        return Err(RelationError::SpaceMismatch);
    }
    Ok(graph_hausdorff_in(&f.space, &f.pairs, &g.pairs))
}

/// Runs of equal first coordinate in a sorted pair list: `(first, start, end)`.
fn first_runs(pairs: &[(usize, usize)]) -> Vec<(usize, usize, usize)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=pairs.len() {
        if i == pairs.len() || pairs[i].0 != pairs[start].0 {
            runs.push((pairs[start].0, start, i));
            start = i;
        }
    }
    runs
}

/// Directed max-min from `p` to `q` (both sorted) under `d₂`. For each first
/// coordinate of `p`, the runs of `q` are visited by increasing distance of
/// their first coordinate, and the scan stops once that distance exceeds the
/// running minimum (`d₂` dominates it). Same value and tie-breaking as the
/// plain scan: first attaining point of `p`, first nearest partner in `q`.
fn directed_graph(s: &FiniteMetricSpace, p: &[(usize, usize)], q: &[(usize, usize)]) -> Directed {
    let q_runs = first_runs(q);
    let scan = |run: &(usize, usize, usize)| -> Directed {
        let (a, start, end) = *run;
        let mut order: Vec<(f64, usize)> = q_runs.iter().enumerate().map(|(r, qr)| (s.dist(a, qr.0), r)).collect();
        // Every pair's minimum is at most its value against the nearest run,
        // so farther runs never matter and need no sorting.
        let near = order.iter().copied().min_by(|x, y| x.0.total_cmp(&y.0)).expect("graphs are nonempty");
        let (_, ns, ne) = q_runs[near.1];
        let cap = p[start..end]
            .iter()
            .map(|&(_, b)| q[ns..ne].iter().map(|&(_, y)| near.0.max(s.dist(b, y))).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        order.retain(|o| o.0 <= cap);
        order.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut best = Directed { value: f64::NEG_INFINITY, from: start, to: 0 };
        for (pi, &(_, b)) in p.iter().enumerate().take(end).skip(start) {
            let mut min = (f64::INFINITY, usize::MAX);
            let mut pruned = false;
            'runs: for &(dax, r) in &order {
                if dax > min.0 {
                    break;
                }
                let (_, qs, qe) = q_runs[r];
                for (qi, &(_, y)) in q.iter().enumerate().take(qe).skip(qs) {
                    let v = dax.max(s.dist(b, y));
                    if v < min.0 || (v == min.0 && qi < min.1) {
                        min = (v, qi);
                        if min.0 <= best.value {
                            pruned = true;
                            break 'runs;
                        }
                    }
                }
            }
            if !pruned && min.0 > best.value {
                best = Directed { value: min.0, from: pi, to: min.1 };
            }
        }
        best
    };
    let runs = first_runs(p);
    let parts: Vec<Directed> = if p.len().saturating_mul(q.len()) < 1 << 16 {
        runs.iter().map(scan).collect()
    } else {
        runs.par_iter().map(scan).collect()
    };
    let mut best = parts[0];
    for d in &parts[1..] {
        if d.value > best.value {
            best = *d;
        }
    }
    best
}

/// `D` between two sorted pair lists of one space; the forward direction wins ties.
pub(crate) fn graph_hausdorff_in(s: &FiniteMetricSpace, f: &[(usize, usize)], g: &[(usize, usize)]) -> DsWitness {
    let fwd = directed_graph(s, f, g);
    let bwd = directed_graph(s, g, f);
    if fwd.value >= bwd.value {
        DsWitness { value: fwd.value, from: f[fwd.from], to: g[fwd.to], direction: Direction::FToG }
    } else {
        DsWitness { value: bwd.value, from: g[bwd.from], to: f[bwd.to], direction: Direction::GToF }
    }
}

/// `max_x d(f(x), g(x))` for two functions on the same carrier.
pub fn c0_distance(f: &DynamicalRelation, g: &DynamicalRelation) -> Result<f64, RelationError> {
    if !same_space(&f.space, &g.space) {
        return Err(RelationError::SpaceMismatch);
    }
    let fm = f.as_map()?;
    let gm = g.as_map()?;
    if f.carrier != g.carrier {
        return Err(RelationError::CarrierMismatch);
    }
    Ok(fm
        .iter()
        .zip(gm)
        .map(|(a, b)| f.space.dist(a.1, b.1))
        .fold(0.0, f64::max))
}
