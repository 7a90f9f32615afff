use serde::Serialize;

use crate::metric::hausdorff_by;

/// Grid points per unit interval used by [`power_map_regression`].
pub const POWER_GRID: usize = 1001;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub n: u32,
    pub distance: f64,
    /// Graph point of one system attaining the distance, and its nearest
    /// partner in the other.
    pub from: (f64, f64),
    pub to: (f64, f64),
}

/// Graph of `x ↦ xⁿ` sampled where either coordinate is a grid value, so
/// that the steep end near `x = 1` is as finely sampled as the flat part.
pub fn power_graph(n: u32, grid: usize) -> Vec<(f64, f64)> {
    let t = |i: usize| i as f64 / (grid - 1) as f64;
    let mut g: Vec<(f64, f64)> = (0..grid).map(|i| (t(i), t(i).powi(n as i32))).collect();
    g.extend((1..grid - 1).map(|j| (t(j).powf(1.0 / n as f64), t(j))));
    g.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    g.dedup();
    g
}

/// The limit relation `([0,1] × {0}) ∪ ({1} × [0,1])` sampled on the grid.
pub fn limit_graph(grid: usize) -> Vec<(f64, f64)> {
    let t = |i: usize| i as f64 / (grid - 1) as f64;
    let mut g: Vec<(f64, f64)> = (0..grid).map(|i| (t(i), 0.0)).collect();
    g.extend((1..grid).map(|i| (1.0, t(i))));
    g
}

/// `D(xⁿ, limit)` on the sampled graphs under the max product metric.
pub fn power_map_regression(ns: &[u32], grid: usize) -> Vec<PowerRow> {
    let limit = limit_graph(grid);
    ns.iter()
        .map(|&n| {
            let g = power_graph(n, grid);
            let d = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs().max((a.1 - b.1).abs());
            let w = hausdorff_by(g.len(), limit.len(), |i, j| d(g[i], limit[j]));
            let (from, to) = if w.forward { (g[w.from], limit[w.to]) } else { (limit[w.from], g[w.to]) };
            PowerRow { n, distance: w.value, from, to }
        })
        .collect()
}
