use serde::{Deserialize, Serialize};

use super::CantorError;
use crate::metric::euclid;
use crate::{FiniteMetricSpace, TAU_METRIC};

/// Metric on cell representatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PointMetric {
    Euclidean,
    /// Points are pairs `(x, y)` stored as one vector of length `2 * block`;
    /// the distance is the max of the two Euclidean distances.
    ProductMax { block: usize },
}

impl PointMetric {
    #[inline]
    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            PointMetric::Euclidean => euclid(a, b),
            PointMetric::ProductMax { block } => {
                euclid(&a[..block], &b[..block]).max(euclid(&a[block..], &b[block..]))
            }
        }
    }
}

/// One clopen piece: a representative point, a diameter bound and children.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub rep: Vec<f64>,
    pub diam: f64,
    pub children: Vec<usize>,
    pub depth: usize,
    /// Leaf ids (positions in [`CantorTree::leaves`]) below this cell.
    pub leaf_range: (usize, usize),
}

/// Nested form used for JSON input and output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NestedCell {
    pub rep: Vec<f64>,
    pub diam: f64,
    #[serde(default)]
    pub children: Vec<NestedCell>,
}

/// Finite-depth partition tree; leaves are numbered in depth-first order.
#[derive(Debug, Clone, PartialEq)]
pub struct CantorTree {
    nodes: Vec<Cell>,
    leaves: Vec<usize>,
    metric: PointMetric,
    height: usize,
}

impl CantorTree {
    /// Validates and flattens a nested tree.
    pub fn from_nested(root: &NestedCell, metric: PointMetric) -> Result<Self, CantorError> {
        let dim = root.rep.len();
        if dim == 0 {
            return Err(CantorError::InvalidTree { node: 0, reason: "empty representative".into() });
        }
        if let PointMetric::ProductMax { block } = metric {
            if 2 * block != dim {
                return Err(CantorError::InvalidTree { node: 0, reason: "pair dimension mismatch".into() });
            }
        }
        let mut tree = CantorTree { nodes: Vec::new(), leaves: Vec::new(), metric, height: 0 };
        // Explicit stack: inputs may be deeply nested.
        enum Step<'a> {
            Enter(&'a NestedCell, Option<usize>, usize),
            Exit(usize),
        }
        let mut stack = vec![Step::Enter(root, None, 0)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Enter(cell, parent, depth) => {
                    let id = tree.nodes.len();
                    if cell.rep.len() != dim || cell.rep.iter().any(|v| !v.is_finite()) {
                        return Err(CantorError::InvalidTree { node: id, reason: "bad representative".into() });
                    }
                    if !(cell.diam.is_finite() && cell.diam >= 0.0) {
                        return Err(CantorError::InvalidTree { node: id, reason: "bad diameter".into() });
                    }
                    if cell.children.len() == 1 {
                        return Err(CantorError::InvalidTree { node: id, reason: "single child".into() });
                    }
                    if let Some(p) = parent {
                        let pc = &tree.nodes[p];
                        if metric.dist(&pc.rep, &cell.rep) > pc.diam + TAU_METRIC {
                            return Err(CantorError::InvalidTree {
                                node: id,
                                reason: "representative outside parent".into(),
                            });
                        }
                        if cell.diam > pc.diam + TAU_METRIC {
                            return Err(CantorError::InvalidTree { node: id, reason: "child wider than parent".into() });
                        }
                        tree.nodes[p].children.push(id);
                    }
                    let start = tree.leaves.len();
                    tree.nodes.push(Cell {
                        rep: cell.rep.clone(),
                        diam: cell.diam,
                        children: Vec::new(),
                        depth,
                        leaf_range: (start, start),
                    });
                    tree.height = tree.height.max(depth);
                    if cell.children.is_empty() {
                        tree.leaves.push(id);
                        tree.nodes[id].leaf_range = (start, start + 1);
                    } else {
                        stack.push(Step::Exit(id));
                        for child in cell.children.iter().rev() {
                            stack.push(Step::Enter(child, Some(id), depth + 1));
                        }
                    }
                }
                Step::Exit(id) => {
                    let start = tree.nodes[id].leaf_range.0;
                    tree.nodes[id].leaf_range = (start, tree.leaves.len());
                }
            }
        }
        tree.check_leaf_geometry()?;
        Ok(tree)
    }

    fn check_leaf_geometry(&self) -> Result<(), CantorError> {
        let pts: Vec<&[f64]> = self.leaves.iter().map(|&l| self.nodes[l].rep.as_slice()).collect();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                if self.metric.dist(pts[i], pts[j]) <= 0.0 {
                    return Err(CantorError::InvalidTree {
                        node: self.leaves[j],
                        reason: format!("leaf coincides with leaf {i}"),
                    });
                }
            }
        }
        for (id, cell) in self.nodes.iter().enumerate() {
            if self.leaf_diameter(cell) > cell.diam + TAU_METRIC {
                return Err(CantorError::InvalidTree { node: id, reason: "leaves exceed diameter bound".into() });
            }
        }
        Ok(())
    }

    pub(crate) fn from_parts(nodes: Vec<Cell>, leaves: Vec<usize>, metric: PointMetric) -> Self {
        let height = nodes.iter().map(|c| c.depth).max().unwrap_or(0);
        CantorTree { nodes, leaves, metric, height }
    }

    pub fn to_nested(&self) -> NestedCell {
        fn build(t: &CantorTree, id: usize) -> NestedCell {
            let c = &t.nodes[id];
            NestedCell {
                rep: c.rep.clone(),
                diam: c.diam,
                children: c.children.iter().map(|&k| build(t, k)).collect(),
            }
        }
        build(self, 0)
    }

    pub fn metric(&self) -> PointMetric {
        self.metric
    }

    pub fn nodes(&self) -> &[Cell] {
        &self.nodes
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Node id of leaf `i`.
    pub fn leaf_node(&self, i: usize) -> usize {
        self.leaves[i]
    }

    pub fn leaf_rep(&self, i: usize) -> &[f64] {
        &self.nodes[self.leaves[i]].rep
    }

    pub fn leaf_points(&self) -> Vec<Vec<f64>> {
        self.leaves.iter().map(|&l| self.nodes[l].rep.clone()).collect()
    }

    /// Leaf representatives as a Euclidean metric space.
    pub fn leaf_space(&self) -> FiniteMetricSpace {
        FiniteMetricSpace::euclidean(self.leaf_points()).expect("validated leaves are distinct")
    }

    /// Largest distance between leaves of a cell.
    pub fn leaf_diameter(&self, cell: &Cell) -> f64 {
        let (a, b) = cell.leaf_range;
        let mut d: f64 = 0.0;
        for i in a..b {
            for j in (i + 1)..b {
                d = d.max(self.metric.dist(self.leaf_rep(i), self.leaf_rep(j)));
            }
        }
        d
    }

    /// Cells at depth `t` together with the leaves above depth `t`, in
    /// depth-first order.
    pub fn level(&self, t: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let c = &self.nodes[id];
            if c.depth == t || c.children.is_empty() {
                out.push(id);
            } else {
                stack.extend(c.children.iter().rev());
            }
        }
        out
    }

    /// Largest diameter bound at level `t`.
    pub fn mesh(&self, t: usize) -> f64 {
        self.level(t).iter().map(|&c| self.nodes[c].diam).fold(0.0, f64::max)
    }

    /// Shallowest level whose mesh is below `delta`.
    pub fn level_below(&self, delta: f64) -> Option<usize> {
        (0..=self.height).find(|&t| self.mesh(t) < delta)
    }
}

/// Middle-gap Cantor construction on the line: `[origin, origin + scale]` with
/// an open gap of width `gap` removed from the middle, recursively with the
/// same ratio, to `depth` levels. Representatives are interval midpoints and
/// diameter bounds interval lengths.
pub fn dyadic_cantor(depth: usize, origin: f64, scale: f64, gap: f64) -> Result<CantorTree, CantorError> {
    if depth < 1 || !(scale.is_finite() && gap.is_finite() && origin.is_finite()) || !(scale > gap && gap > 0.0) {
        return Err(CantorError::BadGeometry);
    }
    let ratio = (1.0 - gap / scale) / 2.0;
    fn build(lo: f64, len: f64, level: usize, depth: usize, ratio: f64) -> NestedCell {
        let children = if level == depth {
            Vec::new()
        } else {
            let child = len * ratio;
            vec![
                build(lo, child, level + 1, depth, ratio),
                build(lo + len - child, child, level + 1, depth, ratio),
            ]
        };
        NestedCell { rep: vec![lo + len / 2.0], diam: len, children }
    }
    CantorTree::from_nested(&build(origin, scale, 0, depth, ratio), PointMetric::Euclidean)
}
