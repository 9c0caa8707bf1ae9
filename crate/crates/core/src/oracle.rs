//! Brute-force ground truth from function values alone.
//!
//! Nothing here looks at branch structure beyond evaluating `u` (and, for the
//! grid scan, which branches attain the minimum at cell corners), so the
//! analytic routines in [`crate::subdiff`] and [`crate::tracer`] can be
//! checked against it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::model::SemiconcaveFn;
use crate::subdiff::GradientSet;

/// Seed used by [`sampled_reachable_gradients`] unless overridden.
pub const DEFAULT_SEED: u64 = 0x005e_ed2d;

/// Gradients closer than this are merged by the clustering.
pub const CLUSTER_LINKAGE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NumericGradient {
    Gradient(Vec2),
    Nondifferentiable,
}

impl NumericGradient {
    pub fn gradient(self) -> Option<Vec2> {
        match self {
            NumericGradient::Gradient(g) => Some(g),
            NumericGradient::Nondifferentiable => None,
        }
    }
}

/// Finite-difference gradient with the consistency tolerance `10h`.
pub fn numeric_gradient(f: &SemiconcaveFn, x: Vec2, h: f64) -> Result<NumericGradient> {
    numeric_gradient_with_tol(f, x, h, 10.0 * h)
}

/// Central differences at `h` and `h/2` must agree within `tol`, and so must
/// the forward and backward differences at `h/2`; the latter catches kinks
/// that a symmetric stencil straddles. Returns the Richardson extrapolation
/// of the two central differences.
pub fn numeric_gradient_with_tol(f: &SemiconcaveFn, x: Vec2, h: f64, tol: f64) -> Result<NumericGradient> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let d = f.domain();
    if x.x - h < d.xmin || x.x + h > d.xmax || x.y - h < d.ymin || x.y + h > d.ymax {
        return Err(Error::MarginViolation(x, h));
    }
    let u = |p: Vec2| f.value(p);
    let u0 = u(x);
    let mut g = [0.0; 2];
    for (axis, e) in [Vec2::E1, Vec2::E2].into_iter().enumerate() {
        let c1 = (u(x + h * e) - u(x - h * e)) / (2.0 * h);
        let half = 0.5 * h;
        let fwd = (u(x + half * e) - u0) / half;
        let bwd = (u0 - u(x - half * e)) / half;
        let c2 = 0.5 * (fwd + bwd);
        if (c1 - c2).abs() >= tol || (fwd - bwd).abs() >= tol {
            return Ok(NumericGradient::Nondifferentiable);
        }
        g[axis] = (4.0 * c2 - c1) / 3.0;
    }
    Ok(NumericGradient::Gradient(Vec2::new(g[0], g[1])))
}

/// Flagged cells of a uniform grid over the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub h: f64,
    pub threshold: f64,
    pub nx: usize,
    pub ny: usize,
    origin: Vec2,
    /// `(column, row)` of every flagged cell, in row-major order.
    pub flagged: Vec<(usize, usize)>,
}

impl ScanResult {
    pub fn center(&self, (a, b): (usize, usize)) -> Vec2 {
        self.origin + Vec2::new((a as f64 + 0.5) * self.h, (b as f64 + 0.5) * self.h)
    }

    pub fn centers(&self) -> Vec<Vec2> {
        self.flagged.iter().map(|&c| self.center(c)).collect()
    }

    pub fn cell_of(&self, p: Vec2) -> (usize, usize) {
        let rel = p - self.origin;
        let a = ((rel.x / self.h).floor().max(0.0) as usize).min(self.nx - 1);
        let b = ((rel.y / self.h).floor().max(0.0) as usize).min(self.ny - 1);
        (a, b)
    }

    pub fn is_flagged(&self, cell: (usize, usize)) -> bool {
        self.flagged.binary_search_by(|c| (c.1, c.0).cmp(&(cell.1, cell.0))).is_ok()
    }

    /// Whether `p` lies in a flagged cell or within `reach` cells of one.
    pub fn flags_near(&self, p: Vec2, reach: usize) -> bool {
        let (a, b) = self.cell_of(p);
        let r = reach as isize;
        (-r..=r).any(|da| {
            (-r..=r).any(|db| {
                let (ca, cb) = (a as isize + da, b as isize + db);
                ca >= 0
                    && cb >= 0
                    && (ca as usize) < self.nx
                    && (cb as usize) < self.ny
                    && self.is_flagged((ca as usize, cb as usize))
            })
        })
    }
}

/// Default detection threshold of [`grid_singularity_scan`].
pub const DEFAULT_SCAN_THRESHOLD: f64 = 1e-3;

/// [`scan_with_threshold`] at [`DEFAULT_SCAN_THRESHOLD`].
pub fn grid_singularity_scan(f: &SemiconcaveFn, h: f64) -> Result<ScanResult> {
    scan_with_threshold(f, h, DEFAULT_SCAN_THRESHOLD)
}

/// Flags a cell when its center fails [`numeric_gradient_with_tol`] at
/// tolerance `threshold`, or when the branches attaining the minimum at its
/// corners and center include two whose gradients differ by more than
/// `threshold`. Lowering `threshold` can only add cells.
pub fn scan_with_threshold(f: &SemiconcaveFn, h: f64, threshold: f64) -> Result<ScanResult> {
    let d = *f.domain();
    if !(h > 0.0) || h > d.width().min(d.height()) / 8.0 {
        return Err(Error::InvalidArgument(format!(
            "cell size {h} must be positive and at most an eighth of the domain extent"
        )));
    }
    let nx = (d.width() / h - 1e-9).ceil() as usize;
    let ny = (d.height() / h - 1e-9).ceil() as usize;
    let origin = Vec2::new(d.xmin, d.ymin);
    let fd_step = (h / 8.0).min(1e-4);
    let br = f.branches();
    let mut flagged = Vec::new();
    for b in 0..ny {
        for a in 0..nx {
            let lo = origin + Vec2::new(a as f64 * h, b as f64 * h);
            let center = d.clamp(lo + Vec2::new(0.5 * h, 0.5 * h));
            let probes = [
                center,
                d.clamp(lo),
                d.clamp(lo + Vec2::new(h, 0.0)),
                d.clamp(lo + Vec2::new(0.0, h)),
                d.clamp(lo + Vec2::new(h, h)),
            ];
            let mut involved: Vec<usize> =
                probes.iter().flat_map(|&p| f.active_unchecked(p, crate::model::DEFAULT_TOL_ACTIVE)).collect();
            involved.sort_unstable();
            involved.dedup();
            let grads: Vec<Vec2> = involved.iter().map(|&k| br[k].gradient(center)).collect();
            let distinct = grads.iter().enumerate().any(|(m, g)| grads[m + 1..].iter().any(|o| o.dist(*g) > threshold));
            let kink = !distinct
                && matches!(
                    numeric_gradient_with_tol(f, center, fd_step, threshold),
                    Ok(NumericGradient::Nondifferentiable)
                );
            if distinct || kink {
                flagged.push((a, b));
            }
        }
    }
    Ok(ScanResult { h, threshold, nx, ny, origin, flagged })
}

/// Reachable gradients recovered by sampling: numeric gradients at `n`
/// random points of the disk `B(x, radius)`, clustered by single linkage at
/// [`CLUSTER_LINKAGE`]; returns the cluster means.
pub fn sampled_reachable_gradients(
    f: &SemiconcaveFn,
    x: Vec2,
    radius: f64,
    n: usize,
    seed: u64,
) -> Result<GradientSet> {
    if n < 64 {
        return Err(Error::InvalidArgument(format!("need at least 64 samples, got {n}")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fd_step = radius * 1e-2;
    let mut grads = Vec::new();
    for _ in 0..n {
        let r = radius * rng.gen::<f64>().sqrt();
        let theta = std::f64::consts::TAU * rng.gen::<f64>();
        let p = x + Vec2::new(r * theta.cos(), r * theta.sin());
        if let Ok(NumericGradient::Gradient(g)) = numeric_gradient(f, p, fd_step) {
            grads.push(g);
        }
    }
    if grads.is_empty() {
        return Err(Error::SamplingFailed(n));
    }
    GradientSet::new(cluster_means(&grads, CLUSTER_LINKAGE))
}

/// Single-linkage clusters, returned as means in order of first member.
fn cluster_means(points: &[Vec2], linkage: f64) -> Vec<Vec2> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if points[i].dist(points[j]) <= linkage {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut order: Vec<usize> = Vec::new();
    let mut sums: Vec<(Vec2, usize)> = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        let r = find(&mut parent, i);
        let slot = match order.iter().position(|&o| o == r) {
            Some(s) => s,
            None => {
                order.push(r);
                sums.push((Vec2::ZERO, 0));
                order.len() - 1
            }
        };
        sums[slot].0 += p;
        sums[slot].1 += 1;
    }
    sums.into_iter().map(|(s, c)| (1.0 / c as f64) * s).collect()
}
