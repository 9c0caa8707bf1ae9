use crate::error::{Error, Result};

use super::{min_slope_increment, slope_variation, slopes};

/// `g = y₁ − y₂ + offset` on a grid, with `y₁`, `y₂` convex there.
#[derive(Clone, Debug, PartialEq)]
pub struct DcDecomposition {
    pub xs: Vec<f64>,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub offset: f64,
}

impl DcDecomposition {
    /// `max |y₁ − y₂ + offset − g|` over the grid.
    pub fn reconstruction_error(&self, g: &[f64]) -> f64 {
        self.y1.iter().zip(&self.y2).zip(g).map(|((a, b), g)| (a - b + self.offset - g).abs()).fold(0.0, f64::max)
    }

    /// Smallest slope increment over both components.
    pub fn min_convexity(&self) -> f64 {
        min_slope_increment(&self.xs, &self.y1).min(min_slope_increment(&self.xs, &self.y2))
    }

    /// Largest absolute slope over both components.
    pub fn max_slope(&self) -> f64 {
        slopes(&self.xs, &self.y1).into_iter().chain(slopes(&self.xs, &self.y2)).fold(0.0, |m, s| m.max(s.abs()))
    }
}

/// Splits `g` via the Jordan decomposition of its slope sequence.
///
/// With slopes `s_k`, let `p_k` and `n_k` be the accumulated positive and
/// negative slope increments. `y₁` has slopes `max(s₀, 0) + p_k`, is pinned
/// to `0` at the left end, and `y₂ = y₁ − (g − g(x₀))` has slopes
/// `max(−s₀, 0) + n_k`. Both slope sequences are nondecreasing.
pub fn jordan_dc(xs: &[f64], g: &[f64]) -> Result<DcDecomposition> {
    if xs.len() != g.len() {
        return Err(Error::InvalidArgument(format!("grid has {} points but {} values", xs.len(), g.len())));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 grid points, got {}", xs.len())));
    }
    if !xs.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    let s = slopes(xs, g);
    let mut y1 = Vec::with_capacity(xs.len());
    y1.push(0.0);
    let mut pos = 0.0;
    let base = s[0].max(0.0);
    for k in 0..s.len() {
        if k > 0 {
            pos += (s[k] - s[k - 1]).max(0.0);
        }
        let prev = y1[k];
        y1.push(prev + (base + pos) * (xs[k + 1] - xs[k]));
    }
    let offset = g[0];
    let y2 = y1.iter().zip(g).map(|(a, g)| a - (g - offset)).collect();
    Ok(DcDecomposition { xs: xs.to_vec(), y1, y2, offset })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixingResult {
    pub dc: DcDecomposition,
    /// For every grid point, the first candidate matching the selection.
    pub realized: Vec<usize>,
    /// Total slope variation of the selection.
    pub slope_variation: f64,
}

/// Tolerance for matching a selection value to a candidate.
pub const SELECTION_TOL: f64 = 1e-8;

/// DC decomposition of a continuous selection `h` among sampled candidates.
pub fn mixing_select(xs: &[f64], phis: &[Vec<f64>], h: &[f64]) -> Result<MixingResult> {
    if phis.is_empty() {
        return Err(Error::InvalidArgument("need at least one candidate".into()));
    }
    if phis.iter().any(|p| p.len() != xs.len()) || h.len() != xs.len() {
        return Err(Error::InvalidArgument("candidates and selection must match the grid".into()));
    }
    let mut realized = Vec::with_capacity(xs.len());
    for (k, &hk) in h.iter().enumerate() {
        let m = phis.iter().position(|p| (p[k] - hk).abs() <= SELECTION_TOL).ok_or(Error::SelectionViolation(k))?;
        realized.push(m);
    }
    // Continuity: a jump may not exceed what the steepest candidate allows
    // over one cell, plus its slope change across neighbouring cells.
    let lip = phis
        .iter()
        .map(|p| {
            let s = slopes(xs, p);
            let steep = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let bend = s.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs()));
            steep + bend
        })
        .fold(0.0, f64::max);
    for k in 0..xs.len() - 1 {
        let dx = xs[k + 1] - xs[k];
        if (h[k + 1] - h[k]).abs() > lip * dx * (1.0 + 1e-9) + 2.0 * SELECTION_TOL {
            return Err(Error::SelectionDiscontinuity(k, k + 1));
        }
    }
    let dc = jordan_dc(xs, h)?;
    Ok(MixingResult { dc, realized, slope_variation: slope_variation(xs, h) })
}
