mod common;

use common::*;

use realnorm::curve::build_curve;
use realnorm::differential::SingularPart;
use realnorm::flow::dual::dual_cycles;
use realnorm::flow::graph::build_graph;
use realnorm::flow::integral::{critical_values, CriticalValueOptions};
use realnorm::flow::ray::{trace_from, trace_ray, FlowContext, RayDirection, Terminal};
use realnorm::flow::zeros::find_zeros;
use realnorm::poly::C64;
use realnorm::rn::solve_rn;

#[test]
fn downward_trace_returns_to_its_zero() {
    let mut r = rng(5);
    for genus in 1..=2 {
        let rn = random_rn(&mut r, genus, 1);
        let zeros = find_zeros(&rn).unwrap();
        let values = critical_values(&rn, &zeros, &CriticalValueOptions::default()).unwrap();
        let ctx = FlowContext::new(&rn, values.clone()).unwrap();
        let up = RayDirection { upward: true, branch: 0 };
        let ray = trace_ray(&ctx, 0, up).unwrap();
        assert!(ray.reached_marked_point());
        let k = ray.points.len() / 3;
        let down = RayDirection { upward: false, branch: 0 };
        // Label the probe with an out-of-range zero so that zero 0 counts as a target.
        let back = trace_from(&ctx, usize::MAX, down, ray.points[k], ray.values[k]).unwrap();
        assert_eq!(back.terminal, Terminal::HitZero(0), "genus {genus}");
        let re = ray.values[0].re;
        assert!(back.values.iter().all(|v| (v.re - re).abs() < 1e-6 * (1.0 + re.abs())));
    }
}

#[test]
fn rays_keep_real_part_and_raise_phi() {
    let curve = build_curve(&[c(-1.0, 0.1), c(0.2, -0.3), c(1.1, 0.2)]).unwrap();
    let rn = solve_rn(&curve, &SingularPart::new(vec![c(1.0, 0.4)])).unwrap();
    let g = build_graph(&rn).unwrap();
    for ray in &g.rays {
        let re0 = ray.values[0].re;
        let sigma = if ray.direction.upward { 1.0 } else { -1.0 };
        for w in ray.values.windows(2) {
            assert!(sigma * (w[1].im - w[0].im) > 0.0);
        }
        assert!(ray.values.iter().all(|v| (v.re - re0).abs() < 1e-8 * (1.0 + re0.abs())));
        assert!(ray.im_mismatch < 1e-8);
        // The chart branch differs from the continued value by a period.
        let d = ray.asymptotic_real.unwrap() - re0;
        let mut best = f64::MAX;
        for a in -3i32..=3 {
            for b in -3i32..=3 {
                best = best.min((d - a as f64 * rn.periods[0] - b as f64 * rn.periods[1]).abs());
            }
        }
        assert!(best < 1e-7, "{d}");
    }
}

#[test]
fn dx_critical_values_are_branch_points() {
    let curve = build_curve(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let rn = solve_rn(&curve, &SingularPart::new(vec![c(0.0, 0.0), c(-2.0, 0.0)])).unwrap();
    let zeros = find_zeros(&rn).unwrap();
    assert_eq!(zeros.total(), 3);
    let values = critical_values(&rn, &zeros, &CriticalValueOptions::default()).unwrap();
    let sum: C64 = values.points.iter().map(|p| p.phi * p.multiplicity as f64).sum();
    assert!(sum.norm() < 1e-10);
    let mean: C64 = curve.branch_points().iter().sum::<C64>() / 3.0;
    for p in &values.points {
        assert!(p.branch_index.is_some());
        assert!((p.phi - (p.location.x - mean)).norm() < 1e-9, "{} at {}", p.phi, p.location.x);
    }
}

#[test]
fn genus_one_dual_periods_never_vanish() {
    let mut r = rng(21);
    for _ in 0..5 {
        let rn = random_rn(&mut r, 1, 1);
        let g = build_graph(&rn).unwrap();
        if !g.generic {
            continue;
        }
        let report = dual_cycles(&rn, &g).unwrap();
        assert_eq!(report.s_count(), 2);
        for cyc in &report.cycles {
            assert!(cyc.period.abs() > 1e-7);
            assert!((cyc.contour_period.re - cyc.period).abs() < 1e-7);
            assert!(cyc.contour_period.im.abs() < 1e-8);
        }
    }
}
