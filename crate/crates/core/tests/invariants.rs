use std::f64::consts::TAU;

use proptest::prelude::*;

use singprop::dcturn::{
    graph_turn_by_slopes, jordan_dc, min_slope_increment, reparametrize, slope_variation, slopes, step3_construct, turn,
};
use singprop::fixtures;
use singprop::geom::{hausdorff, Vec2};
use singprop::model::{Branch, Domain, Frame, SemiconcaveFn};
use singprop::oracle;
use singprop::subdiff::{self, reachable_gradients, subdiff_f, superdifferential};
use singprop::tracer::{self, trace_arc, TraceOptions};

const TOL: f64 = 1e-9;

fn v(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

fn opts(step: f64) -> TraceOptions {
    TraceOptions { step, max_len: 10.0, tol_active: TOL }
}

fn cubic() -> impl Strategy<Value = Branch> {
    prop::collection::vec(-2.0f64..2.0, 10).prop_map(|c| {
        let exps = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];
        Branch::new(exps.iter().zip(c).map(|(&(i, j), c)| (i, j, c))).unwrap()
    })
}

fn unit_point() -> impl Strategy<Value = Vec2> {
    (-0.9f64..0.9, -0.9f64..0.9).prop_map(|(x, y)| v(x, y))
}

fn fixture() -> impl Strategy<Value = (&'static str, SemiconcaveFn)> {
    (0..fixtures::all().len()).prop_map(|k| fixtures::all().swap_remove(k))
}

proptest! {
    #[test]
    fn branch_derivatives_match_finite_differences(b in cubic(), p in unit_point()) {
        let h = 1e-5;
        let g = b.gradient(p);
        let dx = (b.value(p + v(h, 0.0)) - b.value(p - v(h, 0.0))) / (2.0 * h);
        let dy = (b.value(p + v(0.0, h)) - b.value(p - v(0.0, h))) / (2.0 * h);
        prop_assert!((g.x - dx).abs() < 1e-7 && (g.y - dy).abs() < 1e-7);
        let hs = b.hessian(p);
        let gx = (b.gradient(p + v(h, 0.0)) - b.gradient(p - v(h, 0.0))) * (0.5 / h);
        let gy = (b.gradient(p + v(0.0, h)) - b.gradient(p - v(0.0, h))) * (0.5 / h);
        prop_assert!((hs.xx - gx.x).abs() < 1e-6);
        prop_assert!((hs.xy - gx.y).abs() < 1e-6 && (hs.xy - gy.x).abs() < 1e-6);
        prop_assert!((hs.yy - gy.y).abs() < 1e-6);
    }

    #[test]
    fn transform_round_trip(b in cubic(), theta in 0.0..TAU, ox in -0.5f64..0.5, oy in -0.5f64..0.5, p in unit_point()) {
        let f = SemiconcaveFn::new(vec![b, Branch::zero()], Domain::new(-1.0, 1.0, -1.0, 1.0).unwrap()).unwrap();
        let frame = Frame::aligning(v(ox, oy), v(theta.cos(), theta.sin())).unwrap();
        let ft = f.transform(&frame).unwrap();
        let z = frame.apply(p);
        prop_assert!((ft.value(z) - f.value(p)).abs() < 1e-12 * (1.0 + f.value(p).abs()));
        prop_assert!(frame.apply_inverse(z).dist(p) < 1e-12);
        prop_assert!(frame.inverse().apply(z).dist(p) < 1e-12);
        // The gradient sets rotate with the frame.
        let back = ft.transform(&frame.inverse()).unwrap();
        prop_assert!((back.value(p) - f.value(p)).abs() < 1e-10 * (1.0 + f.value(p).abs()));
    }

    #[test]
    fn convex_part_is_midpoint_convex((_, f) in fixture(), a in unit_point(), b in unit_point()) {
        let m = 0.5 * (a + b);
        let lhs = f.convex_part(m);
        let rhs = 0.5 * (f.convex_part(a) + f.convex_part(b));
        prop_assert!(lhs <= rhs + 1e-12, "{} > {}", lhs, rhs);
    }

    #[test]
    fn slices_are_projections((_, f) in fixture(), p in unit_point(), theta in 0.0..TAU) {
        let q = v(theta.cos(), theta.sin());
        let poly = subdiff_f(&f, p, TOL).unwrap();
        let s = poly.slice(q).unwrap();
        let proj: Vec<f64> = poly.vertices().iter().map(|w| w.dot(q)).collect();
        let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((s.lo - lo).abs() < 1e-12 && (s.hi - hi).abs() < 1e-12);
        prop_assert!(s.len() <= poly.diam() + 1e-12);
        // ∂f is the reflected, shifted D⁺u: the same widths.
        let dplus = superdifferential(&reachable_gradients(&f, p, TOL).unwrap());
        prop_assert!((dplus.slice(q).unwrap().len() - s.len()).abs() < 1e-12);
    }

    #[test]
    fn criterion_matches_singularity((_, f) in fixture(), p in unit_point()) {
        let ds = reachable_gradients(&f, p, TOL).unwrap();
        let crit = subdiff::propagation_criterion(&ds);
        prop_assert_eq!(crit, ds.len() >= 2);
        prop_assert_eq!(crit, subdiff::is_singular(&f, p, TOL).unwrap());
        prop_assert_eq!(crit, superdifferential(&ds).diam() > 0.0);
    }

    #[test]
    fn jordan_split_is_exact_and_convex(g in prop::collection::vec(-5.0f64..5.0, 3..80), gaps in prop::collection::vec(0.01f64..1.0, 80)) {
        let mut xs = vec![0.0];
        for d in gaps.iter().take(g.len() - 1) {
            let last = xs[xs.len() - 1];
            xs.push(last + d);
        }
        let dc = jordan_dc(&xs, &g).unwrap();
        prop_assert!(dc.reconstruction_error(&g) <= 1e-12 * (1.0 + g.iter().fold(0.0f64, |m, v| m.max(v.abs()))) * g.len() as f64);
        let scale = slopes(&xs, &g).iter().fold(1.0f64, |m, s| m.max(s.abs())) * g.len() as f64;
        prop_assert!(min_slope_increment(&xs, &dc.y1) >= -1e-12 * scale);
        prop_assert!(min_slope_increment(&xs, &dc.y2) >= -1e-12 * scale);
        // Slopes of the parts are bounded by the slope bound plus the variation.
        let lip = slopes(&xs, &g).iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let bound = lip + slope_variation(&xs, &g);
        prop_assert!(dc.max_slope() <= bound * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn polyline_turn_equals_slope_formula(g in prop::collection::vec(-3.0f64..3.0, 3..60)) {
        let xs: Vec<f64> = (0..g.len()).map(|k| k as f64 * 0.1).collect();
        let pts: Vec<Vec2> = xs.iter().zip(&g).map(|(&x, &y)| v(x, y)).collect();
        prop_assert!((turn(&pts).unwrap() - graph_turn_by_slopes(&xs, &g)).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scan_is_monotone_in_threshold(k in 0usize..8, t1 in 1e-4f64..1e-1, t2 in 1e-4f64..1e-1) {
        let (_, f) = fixtures::all().swap_remove(k);
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let fine = oracle::scan_with_threshold(&f, 0.2, lo).unwrap();
        let coarse = oracle::scan_with_threshold(&f, 0.2, hi).unwrap();
        for c in &coarse.flagged {
            prop_assert!(fine.flagged.contains(c));
        }
    }
}

/// Points where no inactive branch can turn active within `r`.
fn isolated(f: &SemiconcaveFn, p: Vec2, r: f64) -> bool {
    let u = f.value(p);
    let active = f.active_set(p, TOL).unwrap();
    f.branches().iter().enumerate().all(|(i, b)| active.contains(&i) || b.value(p) - u > 4.0 * f.l().max(4.0) * r)
}

#[test]
fn oracle_agrees_with_analytic_gradients() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(oracle::DEFAULT_SEED);
    let r = 1e-4;
    let mut worst = 0.0f64;
    let mut tested = 0;
    let fx = fixtures::all();
    for k in 0..200 {
        let (_, f) = &fx[k % fx.len()];
        let p = v(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
        if !isolated(f, p, r) {
            continue;
        }
        let ds = reachable_gradients(f, p, TOL).unwrap();
        let sampled = oracle::sampled_reachable_gradients(f, p, r, 64, k as u64).unwrap();
        worst = worst.max(hausdorff(sampled.points(), ds.points()));
        tested += 1;
    }
    // And on singular points, where both sides must be seen.
    for (_, f, s) in fixtures::arc_seeds() {
        let arc = trace_arc(&f, s.x0, s.pair, s.q, &opts(0.05)).unwrap();
        for a in arc.samples.iter().skip(1).step_by(4) {
            if !f.domain().contains(a.x + v(2.0 * r, 2.0 * r)) || !f.domain().contains(a.x - v(2.0 * r, 2.0 * r)) {
                continue;
            }
            let ds = reachable_gradients(&f, a.x, TOL).unwrap();
            let sampled = oracle::sampled_reachable_gradients(&f, a.x, r, 256, 1).unwrap();
            worst = worst.max(hausdorff(sampled.points(), ds.points()));
            tested += 1;
        }
    }
    assert!(tested > 150, "{tested}");
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn scan_flags_every_traced_point() {
    for (name, f, s) in fixtures::arc_seeds() {
        let scan = oracle::grid_singularity_scan(&f, 0.05).unwrap();
        let arc = trace_arc(&f, s.x0, s.pair, s.q, &opts(0.02)).unwrap();
        for a in &arc.samples {
            assert!(scan.flags_near(a.x, 1), "{name}: {} not near a flagged cell", a.x);
        }
    }
    assert!(oracle::grid_singularity_scan(&fixtures::smooth(), 0.1).unwrap().flagged.is_empty());
}

#[test]
fn scan_of_parabola_is_close_to_the_curve() {
    let f = fixtures::parabola();
    let h = 0.05;
    let scan = oracle::grid_singularity_scan(&f, h).unwrap();
    let centers = scan.centers();
    let curve: Vec<Vec2> = (0..=2000).map(|k| -1.0 + k as f64 / 1000.0).map(|x| v(x, x * x)).collect();
    assert!(hausdorff(&centers, &curve) <= h * 2f64.sqrt());
}

#[test]
fn seed_directions_match_an_angular_search() {
    // Along a ray from the triple point, a pair is a seed direction when the
    // two branches tie and stay below the third.
    let f = fixtures::three_affine();
    let n = 36_000;
    let t = 0.1;
    let gap = |i: usize, j: usize, th: f64| {
        let q = v(th.cos(), th.sin());
        let b = f.branches();
        (b[i].value(t * q) - b[j].value(t * q), b[i].value(t * q) - b[3 - i - j].value(t * q))
    };
    let mut expected: Vec<(usize, usize, f64)> = Vec::new();
    for k in 0..n {
        let (a, b) = (TAU * k as f64 / n as f64, TAU * (k + 1) as f64 / n as f64);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let (ga, gb) = (gap(i, j, a).0, gap(i, j, b).0);
            if ga == 0.0 || ga * gb < 0.0 {
                let th = if ga == 0.0 { a } else { a + (b - a) * ga / (ga - gb) };
                if gap(i, j, th).1 < -1e-6 {
                    expected.push((i, j, th));
                }
            }
        }
    }
    let got = tracer::seed_directions(&f, Vec2::ZERO, TOL).unwrap();
    assert_eq!(got.len(), expected.len(), "{expected:?}");
    for (i, j, th) in expected {
        let d = got.iter().find(|d| d.pair == (i, j)).unwrap();
        assert!(d.q.angle_to(v(th.cos(), th.sin())) < 1e-3);
    }
}

#[test]
fn semismooth_sequences_vanish() {
    for (name, f) in fixtures::all() {
        for k in 0..8 {
            let th = TAU * k as f64 / 8.0;
            let q = v(th.cos(), th.sin());
            let seq = subdiff::slice_diam_sequence(&f, Vec2::ZERO, q, |_| q, 40, TOL).unwrap();
            assert!(seq[39] <= 1e-6, "{name} {th}: {}", seq[39]);
        }
    }
}

#[test]
fn arclength_converges_at_second_order() {
    let f = fixtures::parabola();
    let exact = fixtures::parabola_arclength();
    let err = |h: f64| (trace_arc(&f, Vec2::ZERO, (0, 1), Vec2::E1, &opts(h)).unwrap().length() - exact).abs();
    let (e1, e2, e3) = (err(0.08), err(0.04), err(0.02));
    assert!((e1 / e2).log2() >= 1.8 && (e2 / e3).log2() >= 1.8, "{e1} {e2} {e3}");
}

#[test]
fn step3_pieces_reproduce_the_graph() {
    for (name, f, s) in fixtures::arc_seeds() {
        let arc = trace_arc(&f, s.x0, s.pair, s.q, &opts(0.02)).unwrap();
        let gp = reparametrize(&arc).unwrap();
        let ft = f.transform(&gp.frame).unwrap();
        let r = step3_construct(&ft, &gp, TOL).unwrap();
        assert!(r.selection_residual <= 1e-6, "{name}: {}", r.selection_residual);
        assert!(r.domination_defect <= 1e-9, "{name}: {}", r.domination_defect);
        // The pieces, sampled, admit the graph as a continuous selection.
        let phis = r.sample_pieces(&gp.xs);
        let mix = singprop::dcturn::mixing_select(&gp.xs, &phis, &gp.gs).unwrap();
        assert_eq!(mix.dc, jordan_dc(&gp.xs, &gp.gs).unwrap());
    }
}

#[test]
fn left_slopes_settle_under_refinement() {
    // The graph of the parabola arc is x ↦ x²; its left difference quotient
    // at x = 1/2 must approach 1 as the step shrinks, and the slope variation
    // stays bounded by the variation of 2x on the kept range.
    let f = fixtures::parabola();
    for h in [0.04, 0.02, 0.01, 0.005] {
        let arc = trace_arc(&f, Vec2::ZERO, (0, 1), Vec2::E1, &opts(h)).unwrap();
        let gp = reparametrize(&arc).unwrap();
        let k = gp.xs.iter().position(|&x| x >= 0.5).unwrap();
        let dx = gp.xs[k] - gp.xs[k - 1];
        let left = (gp.gs[k] - gp.gs[k - 1]) / dx;
        assert!((left - (gp.xs[k] + gp.xs[k - 1])).abs() < 1e-6);
        assert!((left - 1.0).abs() <= 2.0 * dx + 1e-6, "h = {h}: {left}");
        let last = gp.xs[gp.xs.len() - 1];
        assert!(slope_variation(&gp.xs, &gp.gs) <= 2.0 * last + 1e-6);
    }
}
