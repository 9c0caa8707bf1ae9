use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::model::SemiconcaveFn;
use crate::tracer::{trace_arc, SingularArc, TraceOptions};

/// Sum of unsigned exterior angles at the interior vertices of a polyline.
pub fn turn(points: &[Vec2]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!("turn needs at least 3 points, got {}", points.len())));
    }
    let segs = segments(points)?;
    Ok(segs.windows(2).map(|w| w[0].angle_to(w[1])).sum())
}

fn segments(points: &[Vec2]) -> Result<Vec<Vec2>> {
    points
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let d = w[1] - w[0];
            if d == Vec2::ZERO {
                Err(Error::RepeatedPoint(k + 1))
            } else {
                Ok(d)
            }
        })
        .collect()
}

/// [`turn`] of a polyline with prescribed half-tangents at both ends,
/// counting the angles between each end tangent and its adjacent segment.
pub fn turn_with_tangents(points: &[Vec2], start: Vec2, end: Vec2) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 points".into()));
    }
    let segs = segments(points)?;
    let inner: f64 = segs.windows(2).map(|w| w[0].angle_to(w[1])).sum();
    Ok(start.angle_to(segs[0]) + inner + segs[segs.len() - 1].angle_to(end))
}

/// Turn of a traced arc, using the sample tangents at both ends.
pub fn arc_turn(arc: &SingularArc) -> Result<f64> {
    let smp = &arc.samples;
    turn_with_tangents(&arc.points(), smp[0].tangent, smp[smp.len() - 1].tangent)
}

/// `Σ |arctan s_{k+1} − arctan s_k|` over the slopes of a graph.
pub fn graph_turn_by_slopes(xs: &[f64], gs: &[f64]) -> f64 {
    super::slopes(xs, gs).windows(2).map(|w| (w[1].atan() - w[0].atan()).abs()).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TurnCertificate {
    pub turn_coarse: f64,
    pub turn_fine: f64,
    /// Plain polyline turns at the two resolutions.
    pub polyline_turn_coarse: f64,
    pub polyline_turn_fine: f64,
    pub samples_coarse: usize,
    pub samples_fine: usize,
    pub tol: f64,
    pub converged: bool,
}

/// Compares [`arc_turn`] of `arc` with that of the same arc retraced at half
/// the step.
pub fn finite_turn_certificate(f: &SemiconcaveFn, arc: &SingularArc, tol: f64) -> Result<TurnCertificate> {
    let fine_opts = TraceOptions { step: 0.5 * arc.options.step, ..arc.options };
    let fine = trace_arc(f, arc.seed, arc.pair, arc.q, &fine_opts)?;
    let polyline = |a: &SingularArc| if a.samples.len() >= 3 { turn(&a.points()) } else { Ok(0.0) };
    let turn_coarse = arc_turn(arc)?;
    let turn_fine = arc_turn(&fine)?;
    Ok(TurnCertificate {
        turn_coarse,
        turn_fine,
        polyline_turn_coarse: polyline(arc)?,
        polyline_turn_fine: polyline(&fine)?,
        samples_coarse: arc.samples.len(),
        samples_fine: fine.samples.len(),
        tol,
        converged: (turn_coarse - turn_fine).abs() <= tol,
    })
}
