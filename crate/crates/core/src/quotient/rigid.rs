use nalgebra::DMatrix;
use serde::Serialize;

use super::{isometric_conjugacy_check, QuotientError};
use crate::metric::euclid;
use crate::relation::{graph_hausdorff_by, DsWitness, DynamicalRelation};

/// `y ↦ rotation · y + translation`, with `rotation` orthogonal (reflections allowed).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidMotion {
    pub rotation: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
}

impl RigidMotion {
    pub fn identity(dim: usize) -> Self {
        let rotation = (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        RigidMotion { rotation, translation: vec![0.0; dim] }
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.rotation
            .iter()
            .zip(&self.translation)
            .map(|(row, t)| row.iter().zip(y).map(|(r, v)| r * v).sum::<f64>() + t)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidResult {
    /// `D(f, ψ·g)` for the best motion ψ found.
    pub value: f64,
    pub motion: RigidMotion,
    pub witness: DsWitness,
    pub evaluations: u64,
    /// False when the evaluation budget ran out.
    pub complete: bool,
    /// True in dimension 1, where the candidate set provably contains an optimum.
    pub exact: bool,
}

/// Up to this many carrier points, every bijection is aligned by Procrustes.
const PROCRUSTES_POINTS: usize = 7;
const ANGLE_STEPS: usize = 360;
const GOLDEN_ITERS: usize = 60;

struct Clouds {
    f_pts: Vec<Vec<f64>>,
    g_pts: Vec<Vec<f64>>,
    f_pairs: Vec<(usize, usize)>,
    g_pairs: Vec<(usize, usize)>,
    f_ids: Vec<usize>,
    g_ids: Vec<usize>,
    dim: usize,
}

struct Explorer<'a> {
    c: &'a Clouds,
    budget: u64,
    evaluations: u64,
    best: Option<(f64, RigidMotion, DsWitness)>,
}

impl Explorer<'_> {
    /// Evaluates one motion and returns its value, or `None` once the budget
    /// is spent.
    fn eval(&mut self, motion: RigidMotion) -> Option<f64> {
        if self.evaluations >= self.budget {
            return None;
        }
        self.evaluations += 1;
        let w = motion_witness(self.c, &motion);
        let v = w.value;
        if self.best.as_ref().is_none_or(|b| v < b.0) {
            self.best = Some((v, motion, w));
        }
        Some(v)
    }

    /// Golden-section search of `D` along `angle ↦ motion(angle)` on `[lo, hi]`.
    fn golden<M>(&mut self, mut lo: f64, mut hi: f64, motion: M) -> Option<()>
    where
        M: Fn(f64) -> RigidMotion,
    {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut a = hi - r * (hi - lo);
        let mut b = lo + r * (hi - lo);
        let mut fa = self.eval(motion(a))?;
        let mut fb = self.eval(motion(b))?;
        for _ in 0..GOLDEN_ITERS {
            if fa <= fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - r * (hi - lo);
                fa = self.eval(motion(a))?;
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + r * (hi - lo);
                fb = self.eval(motion(b))?;
            }
        }
        Some(())
    }
}

fn motion_witness(c: &Clouds, motion: &RigidMotion) -> DsWitness {
    let moved: Vec<Vec<f64>> = c.g_pts.iter().map(|y| motion.apply(y)).collect();
    let n = moved.len();
    let cross: Vec<f64> = c.f_pts.iter().flat_map(|x| moved.iter().map(move |y| euclid(x, y))).collect();
    graph_hausdorff_by(&c.f_pairs, &c.g_pairs, |p, q| cross[p.0 * n + q.0].max(cross[p.1 * n + q.1]))
}

fn centroid(pts: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut c = vec![0.0; dim];
    for p in pts {
        for (ci, v) in c.iter_mut().zip(p) {
            *ci += v;
        }
    }
    c.iter().map(|v| v / pts.len() as f64).collect()
}

/// Orthogonal `R` and `t` minimizing `Σ |R·src_i + t − dst_i|²`.
pub(crate) fn procrustes(src: &[Vec<f64>], dst: &[Vec<f64>], dim: usize) -> RigidMotion {
    let cs = centroid(src, dim);
    let cd = centroid(dst, dim);
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (s, d) in src.iter().zip(dst) {
        for i in 0..dim {
            for j in 0..dim {
                h[(i, j)] += (s[i] - cs[i]) * (d[j] - cd[j]);
            }
        }
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let r = vt.transpose() * u.transpose();
    let rotation: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| r[(i, j)]).collect()).collect();
    let rc: Vec<f64> = (0..dim).map(|i| (0..dim).map(|j| r[(i, j)] * cs[j]).sum()).collect();
    let translation = cd.iter().zip(&rc).map(|(a, b)| a - b).collect();
    RigidMotion { rotation, translation }
}

/// Rotation about the unit `axis` by `angle`, optionally followed by `x ↦ −x`.
fn rotation_3d(axis: [f64; 3], angle: f64, reflect: bool) -> Vec<Vec<f64>> {
    let (s, c) = angle.sin_cos();
    let [x, y, z] = axis;
    let t = 1.0 - c;
    let sign = if reflect { -1.0 } else { 1.0 };
    vec![
        vec![sign * (t * x * x + c), sign * (t * x * y - s * z), sign * (t * x * z + s * y)],
        vec![t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        vec![t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn rotation_2d(angle: f64, reflect: bool) -> Vec<Vec<f64>> {
    let (s, c) = angle.sin_cos();
    let sign = if reflect { -1.0 } else { 1.0 };
    vec![vec![sign * c, -sign * s], vec![s, c]]
}

/// Motion `y ↦ R·(y − cg) + cf` aligning the centroids.
fn about_centroids(rotation: Vec<Vec<f64>>, cg: &[f64], cf: &[f64]) -> RigidMotion {
    let translation = rotation
        .iter()
        .zip(cf)
        .map(|(row, c)| c - row.iter().zip(cg).map(|(r, v)| r * v).sum::<f64>())
        .collect();
    RigidMotion { rotation, translation }
}

/// Smallest `D(f, ψ·g)` over explored rigid motions ψ of the second space.
///
/// Dimension 1 is exact: `D` is piecewise linear in the translation with
/// slopes ±1, so its minimum sits at a coordinate difference or a midpoint of
/// two of them (for each of the two orientations). Higher dimensions try the
/// identity, Procrustes alignment of any isometric conjugacy and of every
/// carrier bijection (small carriers), and a rotation grid about the
/// centroids refined by golden-section search (dimensions 2 and 3). Above
/// dimension 3 only translations and `−I` are tried.
pub fn euclidean_dgh(f: &DynamicalRelation, g: &DynamicalRelation, budget: u64) -> Result<RigidResult, QuotientError> {
    let (sf, sg) = (f.space(), g.space());
    if !sf.is_euclidean() || !sg.is_euclidean() {
        return Err(QuotientError::NotEuclidean);
    }
    let (df, dg) = (sf.dim().unwrap(), sg.dim().unwrap());
    if df != dg {
        return Err(QuotientError::DimensionMismatch(df, dg));
    }
    let dim = df;
    let local = |r: &DynamicalRelation| {
        let ids = r.carrier().to_vec();
        let pts: Vec<Vec<f64>> = ids.iter().map(|&i| r.space().coords(i).unwrap().to_vec()).collect();
        let pos = |x: usize| ids.binary_search(&x).unwrap();
        let pairs: Vec<(usize, usize)> = r.pairs().iter().map(|&(a, b)| (pos(a), pos(b))).collect();
        (ids, pts, pairs)
    };
    let (f_ids, f_pts, f_pairs) = local(f);
    let (g_ids, g_pts, g_pairs) = local(g);
    let c = Clouds { f_pts, g_pts, f_pairs, g_pairs, f_ids, g_ids, dim };
    let mut ex = Explorer { c: &c, budget, evaluations: 0, best: None };
    let complete = explore(&mut ex, f, g, budget).is_some();
    let exact = dim == 1 && complete;
    let Some((value, motion, w)) = ex.best.clone() else {
        return Err(QuotientError::BudgetExceeded(budget));
    };
    let lift = |p: (usize, usize), ids: &[usize]| (ids[p.0], ids[p.1]);
    let witness = match w.direction {
        crate::relation::Direction::FToG => DsWitness { from: lift(w.from, &c.f_ids), to: lift(w.to, &c.g_ids), ..w },
        crate::relation::Direction::GToF => DsWitness { from: lift(w.from, &c.g_ids), to: lift(w.to, &c.f_ids), ..w },
    };
    Ok(RigidResult { value, motion, witness, evaluations: ex.evaluations, complete, exact })
}

fn explore(ex: &mut Explorer, f: &DynamicalRelation, g: &DynamicalRelation, budget: u64) -> Option<()> {
    let c = ex.c;
    let dim = c.dim;
    ex.eval(RigidMotion::identity(dim))?;
    if dim == 1 {
        return explore_line(ex);
    }
    let (m, n) = (c.f_pts.len(), c.g_pts.len());
    if let Ok(Some(phi)) = isometric_conjugacy_check(f, g, budget) {
        let src: Vec<Vec<f64>> = phi.iter().map(|&(_, b)| g.space().coords(b).unwrap().to_vec()).collect();
        let dst: Vec<Vec<f64>> = phi.iter().map(|&(a, _)| f.space().coords(a).unwrap().to_vec()).collect();
        ex.eval(procrustes(&src, &dst, dim))?;
    }
    if m == n && m <= PROCRUSTES_POINTS {
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            let src: Vec<Vec<f64>> = perm.iter().map(|&j| c.g_pts[j].clone()).collect();
            ex.eval(procrustes(&src, &c.f_pts, dim))?;
            if !next_permutation(&mut perm) {
                break;
            }
        }
    }
    let cf = centroid(&c.f_pts, dim);
    let cg = centroid(&c.g_pts, dim);
    match dim {
        2 => {
            let step = std::f64::consts::TAU / ANGLE_STEPS as f64;
            for reflect in [false, true] {
                let motion = |th: f64| about_centroids(rotation_2d(th, reflect), &cg, &cf);
                let mut best = (f64::INFINITY, 0.0);
                for k in 0..ANGLE_STEPS {
                    let th = k as f64 * step;
                    let v = ex.eval(motion(th))?;
                    if v < best.0 {
                        best = (v, th);
                    }
                }
                ex.golden(best.1 - step, best.1 + step, motion)?;
            }
        }
        3 => {
            let steps = 72;
            let step = std::f64::consts::TAU / steps as f64;
            for reflect in [false, true] {
                let mut best = (f64::INFINITY, [0.0, 0.0, 1.0], 0.0);
                for axis in fibonacci_axes(48) {
                    for k in 0..steps {
                        let th = k as f64 * step;
                        let v = ex.eval(about_centroids(rotation_3d(axis, th, reflect), &cg, &cf))?;
                        if v < best.0 {
                            best = (v, axis, th);
                        }
                    }
                }
                let axis = best.1;
                ex.golden(best.2 - step, best.2 + step, |th| about_centroids(rotation_3d(axis, th, reflect), &cg, &cf))?;
            }
        }
        _ => {
            for sign in [1.0, -1.0] {
                let rotation: Vec<Vec<f64>> =
                    (0..dim).map(|i| (0..dim).map(|j| if i == j { sign } else { 0.0 }).collect()).collect();
                ex.eval(about_centroids(rotation.clone(), &cg, &cf))?;
                for x in &c.f_pts {
                    for y in &c.g_pts {
                        ex.eval(about_centroids(rotation.clone(), y, x))?;
                    }
                }
            }
        }
    }
    Some(())
}

fn fibonacci_axes(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            // Upper hemisphere only: (axis, θ) and (−axis, −θ) give the same rotation.
            let z = 1.0 - (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Candidate translations for one orientation on the line.
fn line_candidates(f: &[Vec<f64>], g: &[Vec<f64>], sign: f64) -> Vec<f64> {
    let mut diffs: Vec<f64> = f.iter().flat_map(|x| g.iter().map(move |y| x[0] - sign * y[0])).collect();
    diffs.sort_by(f64::total_cmp);
    diffs.dedup();
    let mut out = diffs.clone();
    for i in 0..diffs.len() {
        for j in i + 1..diffs.len() {
            out.push((diffs[i] + diffs[j]) / 2.0);
        }
    }
    out
}

fn explore_line(ex: &mut Explorer) -> Option<()> {
    let c = ex.c;
    for sign in [1.0, -1.0] {
        for t in line_candidates(&c.f_pts, &c.g_pts, sign) {
            ex.eval(RigidMotion { rotation: vec![vec![sign]], translation: vec![t] })?;
        }
    }
    Some(())
}
