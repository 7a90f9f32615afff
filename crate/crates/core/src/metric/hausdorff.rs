use rayon::prelude::*;
use serde::Serialize;

use super::{MetricError, SubsetIndex};

/// Work size (pairs) above which the directed scan is split across threads.
const PARALLEL_THRESHOLD: usize = 1 << 16;
const CHUNK: usize = 256;

/// The attaining pair of a directed max-min scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Directed {
    pub value: f64,
    /// Index (into the source set) of the point farthest from the target set.
    pub from: usize,
    /// Index (into the target set) of its nearest partner.
    pub to: usize,
}

/// Hausdorff distance with the pair that attains it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HausdorffWitness {
    pub value: f64,
    pub from: usize,
    pub to: usize,
    /// True when the attaining point lies in the first set.
    pub forward: bool,
}

fn scan_range<F>(range: std::ops::Range<usize>, b_len: usize, d: &F) -> Directed
where
    F: Fn(usize, usize) -> f64,
{
    let mut best = Directed { value: f64::NEG_INFINITY, from: range.start, to: 0 };
    for a in range {
        let mut min = f64::INFINITY;
        let mut arg = 0;
        let mut pruned = false;
        for b in 0..b_len {
            let v = d(a, b);
            if v < min {
                min = v;
                arg = b;
                // This point can no longer beat the current maximum.
                if min <= best.value {
                    pruned = true;
                    break;
                }
            }
        }
        if !pruned && min > best.value {
            best = Directed { value: min, from: a, to: arg };
        }
    }
    best
}

/// `max_a min_b d(a, b)` over index ranges, with the first attaining `a` and
/// its first nearest `b`. Both lengths must be positive.
pub fn directed_hausdorff_by<F>(a_len: usize, b_len: usize, d: F) -> Directed
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    assert!(a_len > 0 && b_len > 0, "directed Hausdorff of an empty set");
    if a_len.saturating_mul(b_len) < PARALLEL_THRESHOLD || a_len < 2 * CHUNK {
        return scan_range(0..a_len, b_len, &d);
    }
    let chunks: Vec<Directed> = (0..a_len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| scan_range(c * CHUNK..((c + 1) * CHUNK).min(a_len), b_len, &d))
        .collect();
    let mut best = chunks[0];
    for c in &chunks[1..] {
        if c.value > best.value {
            best = *c;
        }
    }
    best
}

/// Symmetric Hausdorff distance between index sets `0..a_len` and `0..b_len`.
/// The forward direction wins ties.
pub fn hausdorff_by<F>(a_len: usize, b_len: usize, d: F) -> HausdorffWitness
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let fwd = directed_hausdorff_by(a_len, b_len, &d);
    let bwd = directed_hausdorff_by(b_len, a_len, |b, a| d(a, b));
    if fwd.value >= bwd.value {
        HausdorffWitness { value: fwd.value, from: fwd.from, to: fwd.to, forward: true }
    } else {
        HausdorffWitness { value: bwd.value, from: bwd.from, to: bwd.to, forward: false }
    }
}

/// Hausdorff distance between two subsets of one space. Witness indices are
/// point indices of the ambient space.
pub fn hausdorff_distance(x: &SubsetIndex, y: &SubsetIndex) -> Result<HausdorffWitness, MetricError> {
    if !x.same_space(y) {
        return Err(MetricError::SpaceMismatch);
    }
    let space = x.space();
    let (xm, ym) = (x.members(), y.members());
    let w = hausdorff_by(xm.len(), ym.len(), |i, j| space.dist(xm[i], ym[j]));
    let (from, to) = if w.forward { (xm[w.from], ym[w.to]) } else { (ym[w.from], xm[w.to]) };
    Ok(HausdorffWitness { from, to, ..w })
}

/// Hausdorff distance between two point clouds under the Euclidean metric.
pub fn hausdorff_points(a: &[Vec<f64>], b: &[Vec<f64>]) -> HausdorffWitness {
    hausdorff_by(a.len(), b.len(), |i, j| euclid(&a[i], &b[j]))
}

#[inline]
pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::FiniteMetricSpace;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn brute(a: &[f64], b: &[f64]) -> f64 {
        let dir = |p: &[f64], q: &[f64]| {
            p.iter()
                .map(|x| q.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        dir(a, b).max(dir(b, a))
    }

    fn line(xs: &[f64]) -> Arc<FiniteMetricSpace> {
        Arc::new(FiniteMetricSpace::line(xs).unwrap())
    }

    #[test]
    fn singleton_cases() {
        let s = line(&[0.0, 0.4, 1.0]);
        let a = SubsetIndex::new(s.clone(), vec![0]).unwrap();
        let b = SubsetIndex::new(s.clone(), vec![2]).unwrap();
        assert_eq!(hausdorff_distance(&a, &a).unwrap().value, 0.0);
        assert_eq!(hausdorff_distance(&a, &b).unwrap().value, 1.0);
    }

    #[test]
    fn extra_middle_point() {
        let s = line(&[0.0, 0.4, 1.0]);
        let x = SubsetIndex::new(s.clone(), vec![0, 2]).unwrap();
        let y = SubsetIndex::new(s.clone(), vec![0, 1, 2]).unwrap();
        let w = hausdorff_distance(&x, &y).unwrap();
        assert_eq!(w.value, brute(&[0.0, 1.0], &[0.0, 0.4, 1.0]));
        assert!((w.value - 0.4).abs() < 1e-15);
        assert!(!w.forward);
        assert_eq!((w.from, w.to), (1, 0));
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let s = line(&[0.0, 1.0]);
        let t = line(&[0.0, 2.0]);
        let x = SubsetIndex::new(s, vec![0]).unwrap();
        let y = SubsetIndex::new(t, vec![0]).unwrap();
        assert!(matches!(hausdorff_distance(&x, &y), Err(MetricError::SpaceMismatch)));
    }

    #[test]
    fn parallel_path_matches_sequential() {
        let a: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 2003) as f64 * 0.37).collect();
        let b: Vec<f64> = (0..900).map(|i| ((i * 104729) % 911) as f64 * 0.81 + 0.1).collect();
        let par = directed_hausdorff_by(a.len(), b.len(), |i, j| (a[i] - b[j]).abs());
        let seq = scan_range(0..a.len(), b.len(), &|i: usize, j: usize| (a[i] - b[j]).abs());
        assert_eq!(par, seq);
        let full = brute(&a, &b);
        assert_eq!(hausdorff_by(a.len(), b.len(), |i, j| (a[i] - b[j]).abs()).value, full);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            a in prop::collection::vec(-10.0f64..10.0, 1..12),
            b in prop::collection::vec(-10.0f64..10.0, 1..12),
        ) {
            let w = hausdorff_by(a.len(), b.len(), |i, j| (a[i] - b[j]).abs());
            prop_assert_eq!(w.value, brute(&a, &b));
            let (p, q) = if w.forward { (a[w.from], b[w.to]) } else { (b[w.from], a[w.to]) };
            prop_assert_eq!((p - q).abs(), w.value);
        }

        #[test]
        fn symmetric_and_triangle(
            a in prop::collection::vec(-5.0f64..5.0, 1..8),
            b in prop::collection::vec(-5.0f64..5.0, 1..8),
            c in prop::collection::vec(-5.0f64..5.0, 1..8),
        ) {
            let h = |x: &[f64], y: &[f64]| hausdorff_by(x.len(), y.len(), |i, j| (x[i] - y[j]).abs()).value;
            prop_assert_eq!(h(&a, &b), h(&b, &a));
            prop_assert_eq!(h(&a, &a), 0.0);
            prop_assert!(h(&a, &c) <= h(&a, &b) + h(&b, &c) + crate::TAU_CMP);
        }
    }
}
