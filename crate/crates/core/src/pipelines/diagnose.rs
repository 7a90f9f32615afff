use serde::Serialize;

use crate::metric::{isolated_points, scale_components, MetricError};
use crate::relation::DynamicalRelation;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberEntry {
    pub eps: f64,
    /// Every fiber of `f` has diameter below ε.
    pub forward: bool,
    /// Every fiber of `f⁻¹` has diameter below ε.
    pub backward: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentEntry {
    pub scale: f64,
    pub components: usize,
    pub mesh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsolatedEntry {
    pub eps: f64,
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenericityReport {
    pub fiber_diameter: f64,
    pub inverse_fiber_diameter: f64,
    pub fibers: Vec<FiberEntry>,
    pub components: Vec<ComponentEntry>,
    pub isolated: Vec<IsolatedEntry>,
}

/// Fiber diameters against each ε, chain components of the carrier at each
/// scale r, and carrier points isolated at each ε.
pub fn genericity_report(f: &DynamicalRelation, eps_list: &[f64], r_list: &[f64]) -> Result<GenericityReport, MetricError> {
    let fiber_diameter = f.max_fiber_diameter();
    let inverse_fiber_diameter = f.inverse().max_fiber_diameter();
    let carrier = f.carrier_subset();
    let fibers = eps_list
        .iter()
        .map(|&eps| FiberEntry { eps, forward: fiber_diameter < eps, backward: inverse_fiber_diameter < eps })
        .collect();
    let components = r_list
        .iter()
        .map(|&r| {
            scale_components(&carrier, r).map(|c| ComponentEntry { scale: r, components: c.parts.len(), mesh: c.mesh })
        })
        .collect::<Result<_, _>>()?;
    let isolated = eps_list
        .iter()
        .map(|&eps| isolated_points(&carrier, eps).map(|points| IsolatedEntry { eps, points }))
        .collect::<Result<_, _>>()?;
    Ok(GenericityReport { fiber_diameter, inverse_fiber_diameter, fibers, components, isolated })
}
