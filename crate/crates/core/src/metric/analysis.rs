use serde::Serialize;

use super::{FiniteMetricSpace, MetricError, SubsetIndex};

/// Greedy farthest-point ε-net of `x`, started at its lowest index.
///
/// Picks are made in farthest-point order (ties to the lowest index) until
/// every point is within ε of a pick, so the pick sequence for a smaller ε
/// extends the one for a larger ε.
pub fn epsilon_net(x: &SubsetIndex, eps: f64) -> Result<SubsetIndex, MetricError> {
    if !(eps > 0.0) {
        return Err(MetricError::NonpositiveEpsilon(eps));
    }
    let space = x.space();
    let m = x.members();
    let mut picks = vec![m[0]];
    let mut gap: Vec<f64> = m.iter().map(|&p| space.dist(p, m[0])).collect();
    loop {
        let mut far = 0;
        for (k, &g) in gap.iter().enumerate() {
            if g > gap[far] {
                far = k;
            }
        }
        if gap[far] <= eps {
            break;
        }
        let q = m[far];
        picks.push(q);
        for (k, &p) in m.iter().enumerate() {
            gap[k] = gap[k].min(space.dist(p, q));
        }
    }
    SubsetIndex::new(space.clone(), picks)
}

/// Image of each point under `x ↦ (d(x, c_k) − d(c_k, c_0))_k`, an isometric
/// embedding into ℓ∞ with the points themselves as the reference list.
pub fn frechet_embedding(s: &FiniteMetricSpace) -> Vec<Vec<f64>> {
    let n = s.len();
    (0..n)
        .map(|x| (0..n).map(|k| s.dist(x, k) - s.dist(k, 0)).collect())
        .collect()
}

/// Partition of a subset into chain components at a fixed scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Components {
    pub scale: f64,
    /// Components as sorted point lists, ordered by their smallest point.
    pub parts: Vec<Vec<usize>>,
    /// Largest component diameter.
    pub mesh: f64,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups points joined by chains whose steps are at most `r`.
pub fn scale_components(x: &SubsetIndex, r: f64) -> Result<Components, MetricError> {
    if !(r >= 0.0) {
        return Err(MetricError::NegativeScale(r));
    }
    let space = x.space();
    let m = x.members();
    let mut uf = UnionFind::new(m.len());
    for i in 0..m.len() {
        for j in (i + 1)..m.len() {
            if space.dist(m[i], m[j]) <= r {
                uf.union(i, j);
            }
        }
    }
    let mut parts: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; m.len()];
    for i in 0..m.len() {
        let root = uf.find(i);
        if slot[root] == usize::MAX {
            slot[root] = parts.len();
            parts.push(Vec::new());
        }
        parts[slot[root]].push(m[i]);
    }
    let mut mesh: f64 = 0.0;
    for p in &parts {
        for (k, &a) in p.iter().enumerate() {
            for &b in &p[k + 1..] {
                mesh = mesh.max(space.dist(a, b));
            }
        }
    }
    Ok(Components { scale: r, parts, mesh })
}

/// Points of `x` with no other point of `x` strictly closer than ε.
pub fn isolated_points(x: &SubsetIndex, eps: f64) -> Result<Vec<usize>, MetricError> {
    if !(eps > 0.0) {
        return Err(MetricError::NonpositiveEpsilon(eps));
    }
    let space = x.space();
    let m = x.members();
    Ok(m.iter()
        .copied()
        .filter(|&p| m.iter().all(|&q| q == p || space.dist(p, q) >= eps))
        .collect())
}
