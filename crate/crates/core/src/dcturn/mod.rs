//! From a traced arc to a difference-of-convex graph and a finite-turn
//! certificate.
//!
//! The pipeline is:
//!
//! 1. [`reparametrize`]: rotate so the arc leaves the origin along `e₁`, keep
//!    the initial stretch where the first coordinate grows at rate at least
//!    one half, and read the arc as a graph `x ↦ (x, g(x))`.
//! 2. [`step3_construct`]: partition the range of the vertical slices of
//!    `∂f` along the arc, classify every grid point by a pair of adjacent
//!    levels inside its slice, and on every class extend `g` by a ratio of
//!    two convex envelopes of support lines.
//! 3. [`mixing_select`] / [`jordan_dc`]: split the continuous selection `g`
//!    into `y₁ − y₂` with both parts convex on the grid.
//! 4. [`finite_turn_certificate`]: total turning of the arc at two step sizes.

mod jordan;
mod reparam;
mod step3;
mod turn;

pub use jordan::{jordan_dc, mixing_select, DcDecomposition, MixingResult};
pub use reparam::{reparametrize, GraphParam, MIN_FORWARD_SLOPE};
pub use step3::{step3_construct, DcPiece, PartitionClassification, Step3Result, SupportEnvelope};
pub use turn::{arc_turn, finite_turn_certificate, graph_turn_by_slopes, turn, turn_with_tangents, TurnCertificate};

/// Divided differences `(v[k+1] − v[k]) / (xs[k+1] − xs[k])`.
pub fn slopes(xs: &[f64], v: &[f64]) -> Vec<f64> {
    xs.windows(2).zip(v.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect()
}

/// Smallest increment between consecutive slopes; non-negative exactly when
/// the samples are convex on the grid. `+∞` when there are fewer than two
/// slopes.
pub fn min_slope_increment(xs: &[f64], v: &[f64]) -> f64 {
    slopes(xs, v).windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Sum of absolute slope increments.
pub fn slope_variation(xs: &[f64], v: &[f64]) -> f64 {
    slopes(xs, v).windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}
