//! Bipartite matching helpers: maximum matching by augmenting paths and
//! bottleneck (min-max) perfect matching by threshold search.

/// Maximum matching of left vertices into right vertices. Adjacency lists are
/// tried in order, so the result is deterministic. Returns `match_left`.
pub(crate) fn max_matching(adj: &[Vec<usize>], right: usize) -> Vec<Option<usize>> {
    let mut match_right: Vec<Option<usize>> = vec![None; right];
    let mut match_left: Vec<Option<usize>> = vec![None; adj.len()];
    let mut seen = vec![usize::MAX; right];
    for u in 0..adj.len() {
        augment(u, u, adj, &mut seen, &mut match_right);
    }
    for (v, m) in match_right.iter().enumerate() {
        if let Some(u) = *m {
            match_left[u] = Some(v);
        }
    }
    match_left
}

fn augment(
    u: usize,
    stamp: usize,
    adj: &[Vec<usize>],
    seen: &mut [usize],
    match_right: &mut [Option<usize>],
) -> bool {
    for &v in &adj[u] {
        if seen[v] == stamp {
            continue;
        }
        seen[v] = stamp;
        let free = match match_right[v] {
            None => true,
            Some(w) => augment(w, stamp, adj, seen, match_right),
        };
        if free {
            match_right[v] = Some(u);
            return true;
        }
    }
    false
}

/// Perfect matching on `n × n` vertices minimizing the largest used cost.
/// `cost(i, j) = None` forbids the pair. Returns the bottleneck value and
/// `perm[i] = j`, or `None` when no perfect matching exists.
pub(crate) fn bottleneck_matching<F>(n: usize, cost: F) -> Option<(f64, Vec<usize>)>
where
    F: Fn(usize, usize) -> Option<f64>,
{
    if n == 0 {
        return Some((0.0, Vec::new()));
    }
    let table: Vec<Vec<Option<f64>>> = (0..n).map(|i| (0..n).map(|j| cost(i, j)).collect()).collect();
    let mut values: Vec<f64> = table.iter().flatten().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    // No perfect matching can beat the worst row or column minimum.
    let mut floor = f64::NEG_INFINITY;
    for i in 0..n {
        let row = table[i].iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let col = (0..n).filter_map(|k| table[k][i]).fold(f64::INFINITY, f64::min);
        floor = floor.max(row).max(col);
    }
    if !floor.is_finite() {
        return None;
    }
    let attempt = |limit: f64| -> Option<Vec<usize>> {
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| matches!(table[i][j], Some(c) if c <= limit)).collect())
            .collect();
        let m = max_matching(&adj, n);
        m.into_iter().collect()
    };
    let mut lo = values.partition_point(|&v| v < floor);
    let mut hi = values.len() - 1;
    let mut best = attempt(values[hi])?;
    let mut best_value = values[hi];
    while lo < hi {
        let mid = (lo + hi) / 2;
        match attempt(values[mid]) {
            Some(p) => {
                best = p;
                best_value = values[mid];
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    debug_assert_eq!(
        best_value,
        (0..n).map(|i| table[i][best[i]].unwrap()).fold(f64::NEG_INFINITY, f64::max)
    );
    Some((best_value, best))
}
