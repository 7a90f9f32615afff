//! Distances between finite dynamical systems.
//!
//! A dynamical system here is a finite relation `f ⊆ M × M` on a finite metric
//! space whose two projections coincide. Systems living in one ambient space are
//! compared with the Hausdorff distance between their graphs under the max
//! product metric ([`relation::ds_distance`]). Systems living in different spaces
//! are compared modulo isometric conjugacy ([`quotient`]) or through
//! ε-isometries ([`am`]).
//!
//! The approximation procedures ([`discretize`], [`sft`], [`cantor`],
//! [`pipelines`]) all return certificates that are recomputed from the produced
//! objects, never from the construction's own bookkeeping.

pub mod am;
pub mod cantor;
pub mod discretize;
pub mod io;
pub mod metric;
pub mod pipelines;
pub mod quotient;
pub mod relation;
pub mod sft;

pub use metric::{FiniteMetricSpace, SubsetIndex};
pub use relation::DynamicalRelation;

/// Tolerance used when validating metric axioms.
pub const TAU_METRIC: f64 = 1e-9;
/// Tolerance used when comparing computed distances.
pub const TAU_CMP: f64 = 1e-9;
/// Tolerance for distance preservation in isometry searches.
pub const TAU_ISO: f64 = 1e-9;
