//! Subshift-of-finite-type lift of a finite relation and its finite-depth
//! embeddings near the symbol points.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, Geometry, MetricError};
use crate::relation::{ds_distance, DsWitness, DynamicalRelation};

/// Default cap on the number of words or cylinder points materialized.
pub const DEFAULT_BUDGET: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SftError {
    #[error("{count} windows at this depth exceed the budget of {budget}")]
    DepthOverflow { count: u128, budget: u64 },
    #[error("{count} cylinder points exceed the budget of {budget}")]
    BudgetExceeded { count: u128, budget: u64 },
    #[error("embedding needs a coordinate space")]
    NotEuclideanAmbient,
    #[error("epsilon must be positive, got {0}")]
    NonpositiveEpsilon(f64),
    #[error("bit window of {0} is too long")]
    TooManyBits(u32),
    #[error("embedded points collide: {0}")]
    PlacementCollision(MetricError),
    #[error("certified distance {value} exceeds epsilon {eps}")]
    CertificateFailed { value: f64, eps: f64 },
}

/// Symbols (point indices) and the 0/1 transition matrix between them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionSystem {
    pub symbols: Vec<usize>,
    pub matrix: Vec<Vec<u8>>,
}

impl TransitionSystem {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    #[inline]
    pub fn allowed(&self, a: usize, b: usize) -> bool {
        self.matrix[a][b] == 1
    }

    /// Number of admissible windows with `letters` letters (sum of the entries
    /// of `A^(letters-1)`), saturating.
    pub fn window_count(&self, letters: usize) -> u128 {
        if letters == 0 {
            return 1;
        }
        let k = self.len();
        let mut ends = vec![1u128; k];
        for _ in 1..letters {
            let mut next = vec![0u128; k];
            for (a, &c) in ends.iter().enumerate() {
                for (b, slot) in next.iter_mut().enumerate() {
                    if self.allowed(a, b) {
                        *slot = slot.saturating_add(c);
                    }
                }
            }
            ends = next;
        }
        ends.into_iter().fold(0u128, |s, c| s.saturating_add(c))
    }
}

/// Transition matrix of `g` on its carrier: `A[i][j] = 1` iff `(q_i, q_j) ∈ g`.
pub fn sft_from_relation(g: &DynamicalRelation) -> TransitionSystem {
    let symbols = g.carrier().to_vec();
    let k = symbols.len();
    let mut matrix = vec![vec![0u8; k]; k];
    let pos = |x: usize| symbols.binary_search(&x).expect("pair point lies in carrier");
    for &(a, b) in g.pairs() {
        matrix[pos(a)][pos(b)] = 1;
    }
    debug_assert!(matrix.iter().all(|r| r.contains(&1)));
    debug_assert!((0..k).all(|j| matrix.iter().any(|r| r[j] == 1)));
    TransitionSystem { symbols, matrix }
}

/// Admissible windows of `2n + 1` letters (as symbol positions), in
/// lexicographic order.
pub fn enumerate_words(t: &TransitionSystem, n: usize, budget: u64) -> Result<Vec<Vec<usize>>, SftError> {
    let len = 2 * n + 1;
    let count = t.window_count(len);
    if count > budget as u128 {
        return Err(SftError::DepthOverflow { count, budget });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut word = Vec::with_capacity(len);
    fn walk(t: &TransitionSystem, len: usize, word: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if word.len() == len {
            out.push(word.clone());
            return;
        }
        for b in 0..t.len() {
            if word.last().is_none_or(|&a| t.allowed(a, b)) {
                word.push(b);
                walk(t, len, word, out);
                word.pop();
            }
        }
    }
    walk(t, len, &mut word, &mut out);
    Ok(out)
}

/// A cylinder `(word, bits)` of the product with the full 2-shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cylinder {
    pub word: usize,
    /// Bit window, first bit most significant.
    pub bits: u64,
}

/// Finite-depth embedding of the lifted shift next to the source relation.
#[derive(Debug, Clone)]
pub struct EmbeddedSft {
    pub depth: usize,
    pub bits: u32,
    pub eps: f64,
    /// Width of the offset interval used inside each symbol ball.
    pub spread: f64,
    pub transition: TransitionSystem,
    pub words: Vec<Vec<usize>>,
    pub cylinders: Vec<Cylinder>,
    /// Source points first, then one point per cylinder.
    pub space: Arc<FiniteMetricSpace>,
    pub base_len: usize,
    /// The source relation re-expressed in `space`.
    pub source: DynamicalRelation,
    /// The induced shift on cylinder points.
    pub relation: DynamicalRelation,
    pub certificate: DsWitness,
}

impl EmbeddedSft {
    /// Ambient index of a cylinder point.
    pub fn point(&self, cylinder: usize) -> usize {
        self.base_len + cylinder
    }
}

/// Mixed-radix digit list `(value, radix)`, most significant first.
fn mixed_radix(digits: &[(usize, usize)]) -> (f64, f64) {
    let mut v = 0.0;
    let mut r = 1.0;
    for &(d, base) in digits {
        v = v * base as f64 + d as f64;
        r *= base as f64;
    }
    (v, r)
}

/// Places each cylinder of depth `n` with a `bits`-long bit window at a
/// distinct point within ε of its center symbol and returns the induced shift
/// `(w, b) ↦ (w₁..w₂ₙ a, b₁..b_{B-1} β)`.
///
/// Cylinders of one symbol are spread along the first axis over an interval of
/// width `ε·2^-(n+bits)`. The letters and bits that change under the shift or
/// its inverse are the least significant offset digits, so fibers of the
/// induced relation stay inside that width once `n ≥ 1`.
pub fn embed_cylinders(
    g: &DynamicalRelation,
    n: usize,
    eps: f64,
    bits: u32,
    budget: u64,
) -> Result<EmbeddedSft, SftError> {
    if !(eps > 0.0) {
        return Err(SftError::NonpositiveEpsilon(eps));
    }
    if bits > 40 {
        return Err(SftError::TooManyBits(bits));
    }
    let base = g.space();
    let periods = match base.geometry() {
        Geometry::Coordinates { dim, periods, .. } if *dim > 0 => periods.clone(),
        _ => return Err(SftError::NotEuclideanAmbient),
    };
    let t = sft_from_relation(g);
    let k = t.len();
    let word_count = t.window_count(2 * n + 1);
    let total = word_count.saturating_mul(1u128 << bits);
    if total > budget as u128 {
        return Err(SftError::BudgetExceeded { count: total, budget });
    }
    let words = enumerate_words(&t, n, budget)?;
    let nbits = bits as usize;
    let spread = eps * 0.5f64.powi((n + nbits) as i32);

    let mut coords: Vec<Vec<f64>> = (0..base.len()).map(|i| base.coords(i).unwrap().to_vec()).collect();
    let mut cylinders = Vec::with_capacity(total as usize);
    for (wi, w) in words.iter().enumerate() {
        for b in 0..(1u64 << bits) {
            let bit = |i: usize| ((b >> (nbits - 1 - i)) & 1) as usize;
            let mut fine = Vec::new();
            let mut coarse = Vec::new();
            if n >= 1 {
                fine.push((w[0], k));
            }
            if nbits >= 1 {
                fine.push((bit(0), 2));
            }
            if nbits >= 2 {
                fine.push((bit(nbits - 1), 2));
            }
            if n >= 1 {
                fine.push((w[2 * n], k));
            }
            for (i, &letter) in w.iter().enumerate().take(2 * n).skip(1) {
                if i != n {
                    coarse.push((letter, k));
                }
            }
            for i in 1..nbits.saturating_sub(1) {
                coarse.push((bit(i), 2));
            }
            let (fv, fr) = mixed_radix(&fine);
            let (cv, cr) = mixed_radix(&coarse);
            let offset = spread * (fv + (cv + 0.5) / cr) / fr;
            let mut p = base.coords(t.symbols[w[n]]).unwrap().to_vec();
            p[0] += offset;
            coords.push(p);
            cylinders.push(Cylinder { word: wi, bits: b });
        }
    }
    let space = Arc::new(FiniteMetricSpace::flat(coords, periods).map_err(SftError::PlacementCollision)?);

    let index: HashMap<&[usize], usize> = words.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect();
    let base_len = base.len();
    let mask = if bits == 0 { 0 } else { (1u64 << bits) - 1 };
    let betas: &[u64] = if bits == 0 { &[0] } else { &[0, 1] };
    let mut pairs = Vec::with_capacity(cylinders.len() * k * betas.len());
    let mut next = vec![0usize; 2 * n + 1];
    for (ci, c) in cylinders.iter().enumerate() {
        let w = &words[c.word];
        next[..2 * n].copy_from_slice(&w[1..]);
        let last = w[2 * n];
        for a in 0..k {
            if !t.allowed(last, a) {
                continue;
            }
            next[2 * n] = a;
            let wj = index[next.as_slice()];
            for &beta in betas {
                let nb = ((c.bits << 1) & mask) | beta;
                let cj = wj * (1usize << bits) + nb as usize;
                pairs.push((base_len + ci, base_len + cj));
            }
        }
    }
    let relation = DynamicalRelation::new(space.clone(), pairs).expect("shift of an essential SFT is surjective");
    let source = DynamicalRelation::new(space.clone(), g.pairs().to_vec()).expect("source pairs are valid");
    let certificate = ds_distance(&relation, &source).expect("same space");
    if certificate.value > eps {
        return Err(SftError::CertificateFailed { value: certificate.value, eps });
    }
    Ok(EmbeddedSft {
        depth: n,
        bits,
        eps,
        spread,
        transition: t,
        words,
        cylinders,
        space,
        base_len,
        source,
        relation,
        certificate,
    })
}

/// Largest fiber diameters of the induced shift and of its inverse.
pub fn shift_fiber_profile(e: &EmbeddedSft) -> (f64, f64) {
    (e.relation.max_fiber_diameter(), e.relation.inverse().max_fiber_diameter())
}
