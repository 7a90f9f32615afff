//! Finite metric spaces and the set-level quantities built on them.

mod analysis;
mod hausdorff;
mod space;

use std::sync::Arc;

pub use analysis::{epsilon_net, frechet_embedding, isolated_points, scale_components, Components};
pub use hausdorff::{
    directed_hausdorff_by, hausdorff_by, hausdorff_distance, hausdorff_points, Directed,
    HausdorffWitness,
};
pub(crate) use hausdorff::euclid;
pub use space::{same_space, FiniteMetricSpace, Geometry, MetricError, Violation};

/// A nonempty, sorted, duplicate-free set of points of one space.
#[derive(Debug, Clone)]
pub struct SubsetIndex {
    space: Arc<FiniteMetricSpace>,
    members: Vec<usize>,
}

impl SubsetIndex {
    pub fn new(space: Arc<FiniteMetricSpace>, mut members: Vec<usize>) -> Result<Self, MetricError> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(MetricError::EmptySubset);
        }
        if let Some(&last) = members.last() {
            if last >= space.len() {
                return Err(MetricError::IndexOutOfRange { index: last, len: space.len() });
            }
        }
        Ok(SubsetIndex { space, members })
    }

    /// Every point of the space.
    pub fn full(space: Arc<FiniteMetricSpace>) -> Self {
        let members = (0..space.len()).collect();
        SubsetIndex { space, members }
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn same_space(&self, other: &SubsetIndex) -> bool {
        same_space(&self.space, &other.space)
    }

    pub fn diameter(&self) -> f64 {
        let m = &self.members;
        let mut d: f64 = 0.0;
        for (k, &a) in m.iter().enumerate() {
            for &b in &m[k + 1..] {
                d = d.max(self.space.dist(a, b));
            }
        }
        d
    }
}

impl PartialEq for SubsetIndex {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members && self.same_space(other)
    }
}

/// Max product metric on pairs of points: `d₂((a,b),(c,d)) = max(d(a,c), d(b,d))`.
#[derive(Debug, Clone)]
pub struct ProductMetric<'a> {
    pub base: &'a FiniteMetricSpace,
}

impl<'a> ProductMetric<'a> {
    pub fn new(base: &'a FiniteMetricSpace) -> Self {
        ProductMetric { base }
    }

    #[inline]
    pub fn dist(&self, p: (usize, usize), q: (usize, usize)) -> f64 {
        self.base.dist(p.0, q.0).max(self.base.dist(p.1, q.1))
    }
}
