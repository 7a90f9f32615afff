//! Sampled systems used by the pipelines, the CLI and the tests.

use std::f64::consts::TAU;
use std::sync::Arc;

use super::manifold::{Modulus, SampledManifoldMap};
use crate::metric::FiniteMetricSpace;
use crate::relation::DynamicalRelation;

/// Rotation of the circle of length 2π by `steps` grid steps, on an `n`-point
/// grid with arc-length metric.
pub fn circle_rotation(n: usize, steps: usize) -> SampledManifoldMap {
    let points: Vec<Vec<f64>> = (0..n).map(|i| vec![TAU * i as f64 / n as f64]).collect();
    let space = Arc::new(FiniteMetricSpace::flat(points, vec![Some(TAU)]).expect("distinct grid angles"));
    let map = (0..n).map(|i| (i + steps) % n).collect();
    SampledManifoldMap::new(space, map, Modulus::Lipschitz(1.0)).expect("rotations are isometries")
}

/// The map `(x, y) ↦ (2x + y, x + y) mod 1` on the `k × k` grid of the flat
/// unit torus. Its Lipschitz constant is the larger eigenvalue `(3 + √5)/2`.
pub fn torus_cat_map(k: usize) -> SampledManifoldMap {
    let points: Vec<Vec<f64>> =
        (0..k * k).map(|p| vec![(p / k) as f64 / k as f64, (p % k) as f64 / k as f64]).collect();
    let space = Arc::new(FiniteMetricSpace::flat(points, vec![Some(1.0), Some(1.0)]).expect("distinct grid points"));
    let map = (0..k * k)
        .map(|p| {
            let (i, j) = (p / k, p % k);
            ((2 * i + j) % k) * k + (i + j) % k
        })
        .collect();
    let lipschitz = (3.0 + 5f64.sqrt()) / 2.0;
    SampledManifoldMap::new(space, map, Modulus::Lipschitz(lipschitz)).expect("cat map is Lipschitz")
}

/// A five-point sample of an interval homeomorphism with three fixed points:
/// `f(x) = x − 0.9·sin(2πx)/(2π)` on `{0, ¼, ½, ¾, 1}`, as the relation
/// `{(xᵢ, xⱼ) : |f(xᵢ) − xⱼ| < ¼}`. Its graph is isometric to the graph of its
/// inverse, but no isometry of the carrier conjugates the two.
pub fn three_fixed_points() -> DynamicalRelation {
    let xs = [0.0, 0.25, 0.5, 0.75, 1.0];
    let space = FiniteMetricSpace::line(&xs).expect("distinct").into_arc();
    let f = |x: f64| x - 0.9 * (TAU * x).sin() / TAU;
    let mut pairs = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in xs.iter().enumerate() {
            if (f(x) - y).abs() < 0.25 {
                pairs.push((i, j));
            }
        }
    }
    DynamicalRelation::new(space, pairs).expect("every grid point relates to itself")
}
