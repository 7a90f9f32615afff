use super::{Local, QuotientError};
use crate::relation::DynamicalRelation;
use crate::TAU_ISO;

/// Backtracking search for a bijection `0..n → 0..n` preserving `da`/`db`
/// within τ_iso. `unary(a, b)` filters candidates; `binary(a, a2, b, b2)` must
/// hold for every pair of assigned points. Returns `map[a] = b`.
fn find_isometry<DA, DB, U, B>(
    n: usize,
    da: DA,
    db: DB,
    unary: U,
    binary: B,
    budget: u64,
) -> Result<Option<Vec<usize>>, QuotientError>
where
    DA: Fn(usize, usize) -> f64,
    DB: Fn(usize, usize) -> f64,
    U: Fn(usize, usize) -> bool,
    B: Fn(usize, usize, usize, usize) -> bool,
{
    let profile = |d: &dyn Fn(usize, usize) -> f64, a: usize| {
        let mut p: Vec<f64> = (0..n).map(|b| d(a, b)).collect();
        p.sort_by(f64::total_cmp);
        p
    };
    let pa: Vec<Vec<f64>> = (0..n).map(|a| profile(&da, a)).collect();
    let pb: Vec<Vec<f64>> = (0..n).map(|b| profile(&db, b)).collect();
    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|a| {
            (0..n)
                .filter(|&b| unary(a, b) && pa[a].iter().zip(&pb[b]).all(|(x, y)| (x - y).abs() <= TAU_ISO))
                .collect()
        })
        .collect();
    if candidates.iter().any(|c| c.is_empty()) {
        return Ok(None);
    }
    // Most constrained points first.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&a| (candidates[a].len(), a));

    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut nodes = 0u64;
    let mut stack: Vec<usize> = vec![0];
    // Iterative DFS: stack[depth] is the next candidate index to try at that depth.
    while let Some(&next) = stack.last() {
        let depth = stack.len() - 1;
        if depth == n {
            return Ok(Some(map));
        }
        let a = order[depth];
        if map[a] != usize::MAX {
            used[map[a]] = false;
            map[a] = usize::MAX;
        }
        let mut k = next;
        let mut placed = false;
        while k < candidates[a].len() {
            let b = candidates[a][k];
            k += 1;
            nodes += 1;
            if nodes > budget {
                return Err(QuotientError::BudgetExceeded(budget));
            }
            if used[b] {
                continue;
            }
            let fits = order[..depth].iter().all(|&a2| {
                let b2 = map[a2];
                (da(a, a2) - db(b, b2)).abs() <= TAU_ISO && binary(a, a2, b, b2)
            });
            if fits {
                map[a] = b;
                used[b] = true;
                placed = true;
                break;
            }
        }
        *stack.last_mut().unwrap() = k;
        if placed {
            stack.push(0);
        } else {
            stack.pop();
        }
    }
    Ok(None)
}

fn adjacency(l: &Local) -> Vec<bool> {
    let n = l.len();
    let mut adj = vec![false; n * n];
    for &(a, b) in &l.pairs {
        adj[a * n + b] = true;
    }
    adj
}

/// A carrier isometry `φ: M(f) → M(g)` with `φ ∘ f = g ∘ φ`, as
/// `(x, φ(x))` pairs in ambient indices.
pub fn isometric_conjugacy_check(
    f: &DynamicalRelation,
    g: &DynamicalRelation,
    budget: u64,
) -> Result<Option<Vec<(usize, usize)>>, QuotientError> {
    let (lf, lg) = (Local::new(f), Local::new(g));
    let n = lf.len();
    if n != lg.len() || lf.pairs.len() != lg.pairs.len() {
        return Ok(None);
    }
    let (af, ag) = (adjacency(&lf), adjacency(&lg));
    let degrees = |adj: &[bool], a: usize| {
        let out = (0..n).filter(|&b| adj[a * n + b]).count();
        let inc = (0..n).filter(|&b| adj[b * n + a]).count();
        (out, inc, adj[a * n + a])
    };
    let found = find_isometry(
        n,
        |a, b| lf.d(a, b),
        |a, b| lg.d(a, b),
        |a, b| degrees(&af, a) == degrees(&ag, b),
        |a, a2, b, b2| af[a * n + a2] == ag[b * n + b2] && af[a2 * n + a] == ag[b2 * n + b],
        budget,
    )?;
    Ok(found.map(|map| map.iter().enumerate().map(|(a, &b)| (lf.points[a], lg.points[b])).collect()))
}

/// An isometry between the graphs of `f` and `g` under their max product
/// metrics, as `(pair of f, pair of g)` in ambient indices. It need not come
/// from a conjugacy.
pub fn graph_isometry_check(
    f: &DynamicalRelation,
    g: &DynamicalRelation,
    budget: u64,
) -> Result<Option<Vec<((usize, usize), (usize, usize))>>, QuotientError> {
    let (lf, lg) = (Local::new(f), Local::new(g));
    let n = lf.pairs.len();
    if n != lg.pairs.len() {
        return Ok(None);
    }
    let found = find_isometry(
        n,
        |a, b| lf.d2(lf.pairs[a], lf.pairs[b]),
        |a, b| lg.d2(lg.pairs[a], lg.pairs[b]),
        |_, _| true,
        |_, _, _, _| true,
        budget,
    )?;
    Ok(found.map(|map| map.iter().enumerate().map(|(a, &b)| (f.pairs()[a], g.pairs()[b])).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::FiniteMetricSpace;
    use crate::quotient::DEFAULT_SEARCH_BUDGET;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;
    use std::sync::Arc;

    /// Rebuilt from the fixture's sampled map rather than imported from it.
    fn fixture() -> DynamicalRelation {
        let xs = [0.0, 0.25, 0.5, 0.75, 1.0];
        let s = FiniteMetricSpace::line(&xs).unwrap().into_arc();
        let f = |x: f64| x - 0.9 * (2.0 * std::f64::consts::PI * x).sin() / (2.0 * std::f64::consts::PI);
        let mut pairs = Vec::new();
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in xs.iter().enumerate() {
                if (f(x) - y).abs() < 0.25 {
                    pairs.push((i, j));
                }
            }
        }
        DynamicalRelation::new(s, pairs).unwrap()
    }

    fn check_graph_isometry(f: &DynamicalRelation, g: &DynamicalRelation, map: &[((usize, usize), (usize, usize))]) {
        let (sf, sg) = (f.space(), g.space());
        let image: BTreeSet<(usize, usize)> = map.iter().map(|m| m.1).collect();
        assert_eq!(image.len(), g.len());
        for &(p, q) in map {
            for &(p2, q2) in map {
                let a = sf.dist(p.0, p2.0).max(sf.dist(p.1, p2.1));
                let b = sg.dist(q.0, q2.0).max(sg.dist(q.1, q2.1));
                assert!((a - b).abs() <= TAU_ISO);
            }
        }
    }

    #[test]
    fn inverse_graph_is_isometric_but_not_conjugate() {
        let f = fixture();
        assert_eq!(
            f.pairs(),
            &[(0, 0), (1, 0), (1, 1), (2, 2), (3, 3), (3, 4), (4, 4)]
        );
        let inv = f.inverse();
        assert_eq!(isometric_conjugacy_check(&f, &inv, DEFAULT_SEARCH_BUDGET).unwrap(), None);
        let map = graph_isometry_check(&f, &inv, DEFAULT_SEARCH_BUDGET).unwrap().unwrap();
        check_graph_isometry(&f, &inv, &map);
        // The coordinate swap is itself an isometry of the graphs.
        let swap: Vec<_> = f.pairs().iter().map(|&(a, b)| ((a, b), (b, a))).collect();
        check_graph_isometry(&f, &inv, &swap);
        // The reflection x ↦ 1 − x conjugates f to itself.
        let refl = isometric_conjugacy_check(&f, &f, DEFAULT_SEARCH_BUDGET).unwrap().unwrap();
        assert!(refl.iter().all(|&(a, b)| a == b) || refl.iter().all(|&(a, b)| a + b == 4));
    }

    #[test]
    fn cycle_orientation() {
        let s = FiniteMetricSpace::euclidean(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap()
            .into_arc();
        let fwd = DynamicalRelation::new(s.clone(), vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let back = fwd.inverse();
        // The reflection across the diagonal swaps points 1 and 2.
        let phi = isometric_conjugacy_check(&fwd, &back, DEFAULT_SEARCH_BUDGET).unwrap().unwrap();
        assert_eq!(phi, vec![(0, 0), (1, 2), (2, 1)]);
    }

    #[test]
    fn budget_is_reported() {
        let n = 8;
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let s = FiniteMetricSpace::line(&xs).unwrap().into_arc();
        let all: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
        let f = DynamicalRelation::new(s, all).unwrap();
        assert!(matches!(graph_isometry_check(&f, &f, 3), Err(QuotientError::BudgetExceeded(3))));
    }

    proptest! {
        #[test]
        fn relabeled_copy_is_conjugate(
            pts in prop::collection::vec((0i32..6, 0i32..6), 1..7),
            mask in any::<u64>(),
            seed in any::<u64>(),
        ) {
            let mut pts: Vec<Vec<f64>> = pts.into_iter().map(|(a, b)| vec![a as f64, b as f64]).collect();
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            pts.dedup();
            let n = pts.len();
            let mut pairs: Vec<(usize, usize)> = (0..n * n).filter(|k| mask >> (k % 64) & 1 == 1).map(|k| (k / n, k % n)).collect();
            pairs.extend((0..n).map(|i| (i, (i + 1) % n)));
            let f = DynamicalRelation::new(Arc::new(FiniteMetricSpace::euclidean(pts.clone()).unwrap()), pairs.clone()).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            // Point i of f becomes point perm[i] of g, placed at (y, x).
            let mut moved = vec![Vec::new(); n];
            for i in 0..n {
                moved[perm[i]] = vec![pts[i][1], pts[i][0]];
            }
            let g_pairs = pairs.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
            let g = DynamicalRelation::new(Arc::new(FiniteMetricSpace::euclidean(moved).unwrap()), g_pairs).unwrap();
            let phi = isometric_conjugacy_check(&f, &g, DEFAULT_SEARCH_BUDGET).unwrap().unwrap();
            let fwd: BTreeSet<(usize, usize)> = f.pairs().iter().map(|&(a, b)| (phi[a].1, phi[b].1)).collect();
            let target: BTreeSet<(usize, usize)> = g.pairs().iter().copied().collect();
            prop_assert_eq!(fwd, target);
            let map = graph_isometry_check(&f, &g, DEFAULT_SEARCH_BUDGET).unwrap().unwrap();
            check_graph_isometry(&f, &g, &map);
            let inv = f.inverse();
            let map = graph_isometry_check(&f, &inv, DEFAULT_SEARCH_BUDGET).unwrap().unwrap();
            check_graph_isometry(&f, &inv, &map);
        }
    }
}
