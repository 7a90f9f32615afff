//! End-to-end procedures built from the other modules.

mod diagnose;
pub mod fixtures;
mod manifold;
mod power;

pub use diagnose::{genericity_report, ComponentEntry, FiberEntry, GenericityReport, IsolatedEntry};
pub use manifold::{
    manifold_cantor_approx, CantorApprox, CantorApproxCertificate, ManifoldError, Modulus, SampledManifoldMap,
};
pub use power::{limit_graph, power_graph, power_map_regression, PowerRow, POWER_GRID};
