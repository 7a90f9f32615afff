//! Finite-relation approximation of sampled systems on an ε-net.

use serde::Serialize;
use thiserror::Error;

use crate::metric::{epsilon_net, SubsetIndex};
use crate::relation::{ds_distance, DsWitness, DynamicalRelation, RelationError};

/// A finely sampled system: its graph points as a validated relation.
pub type SampledSystem = DynamicalRelation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscretizeError {
    #[error("epsilon must be positive, got {0}")]
    NonpositiveEpsilon(f64),
    #[error("epsilon list must be strictly decreasing (entry {index})")]
    NotDecreasing { index: usize },
    #[error("approximation lost surjectivity: {0}")]
    SurjectivityFailure(RelationError),
    #[error("certified distance {value} exceeds epsilon {eps}")]
    CertificateFailed { value: f64, eps: f64 },
}

/// A relation on an ε-net of the carrier together with its certificate.
#[derive(Debug, Clone)]
pub struct Approximation {
    pub eps: f64,
    pub net: SubsetIndex,
    pub relation: DynamicalRelation,
    /// Guaranteed upper bound on `D(f, g)`; always ε.
    pub bound: f64,
    /// The exact `D(f, g)` recomputed from the output.
    pub distance: DsWitness,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproximationSummary {
    pub eps: f64,
    pub bound: f64,
    pub distance: DsWitness,
    pub net: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
}

impl Approximation {
    pub fn summary(&self) -> ApproximationSummary {
        ApproximationSummary {
            eps: self.eps,
            bound: self.bound,
            distance: self.distance,
            net: self.net.members().to_vec(),
            pairs: self.relation.pairs().to_vec(),
        }
    }
}

/// Relation `g` on the greedy ε-net `Q` of `M(f)`: `(a, b) ∈ g` iff some
/// `(x, y) ∈ f` has `d(x, a) ≤ ε` and `d(y, b) ≤ ε`. Then `D(f, g) ≤ ε`,
/// which is rechecked exactly.
pub fn finite_relation_approx(f: &SampledSystem, eps: f64) -> Result<Approximation, DiscretizeError> {
    if !(eps > 0.0) {
        return Err(DiscretizeError::NonpositiveEpsilon(eps));
    }
    let space = f.space();
    let carrier = f.carrier_subset();
    let net = epsilon_net(&carrier, eps).expect("epsilon checked positive");
    let q = net.members();
    // Net points within ε of each carrier point, indexed by carrier position.
    let near: Vec<Vec<usize>> = carrier
        .members()
        .iter()
        .map(|&x| q.iter().copied().filter(|&a| space.dist(x, a) <= eps).collect())
        .collect();
    let slot = |x: usize| carrier.members().binary_search(&x).expect("pair point lies in carrier");
    let mut pairs = Vec::new();
    for &(x, y) in f.pairs() {
        for &a in &near[slot(x)] {
            for &b in &near[slot(y)] {
                pairs.push((a, b));
            }
        }
    }
    let relation =
        DynamicalRelation::new(space.clone(), pairs).map_err(DiscretizeError::SurjectivityFailure)?;
    let distance = ds_distance(f, &relation).expect("same space");
    if distance.value > eps {
        return Err(DiscretizeError::CertificateFailed { value: distance.value, eps });
    }
    Ok(Approximation { eps, net, relation, bound: eps, distance })
}

/// One approximation per ε of a strictly decreasing list.
pub fn coarsen_chain(f: &SampledSystem, eps_list: &[f64]) -> Result<Vec<Approximation>, DiscretizeError> {
    for (i, &e) in eps_list.iter().enumerate() {
        if !(e > 0.0) {
            return Err(DiscretizeError::NonpositiveEpsilon(e));
        }
        if i > 0 && !(e < eps_list[i - 1]) {
            return Err(DiscretizeError::NotDecreasing { index: i });
        }
    }
    eps_list.iter().map(|&e| finite_relation_approx(f, e)).collect()
}
