mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;

use realnorm::differential::SingularPart;
use realnorm::flow::integral::{abelian_integral, increment, LocalPrimitive};
use realnorm::flow::zeros::find_zeros;
use realnorm::homology::Cycle;
use realnorm::poly::C64;
use realnorm::rn::{solve_rn, solve_rn_with_basis, SolveOptions};

fn combination(rn: &realnorm::rn::RNDifferential, coeffs: &[i64]) -> Cycle {
    let curve = &rn.curve;
    let mut out: Option<Cycle> = None;
    for (c, &k) in rn.basis.iter().zip(coeffs) {
        if k == 0 {
            continue;
        }
        let part = c.scaled(curve, k);
        out = Some(match out {
            None => part,
            Some(acc) => acc.concat(&part),
        });
    }
    out.unwrap_or_else(|| rn.basis[0].concat(&rn.basis[0].reversed(curve)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn periods_are_real_on_integer_combinations(seed in any::<u64>(), genus in 1usize..=3, n in 1usize..=3) {
        let mut r = rng(seed);
        let rn = random_rn(&mut r, genus, n);
        let coeffs: Vec<i64> = (0..2 * genus).map(|_| r.gen_range(-2..=2)).collect();
        let cyc = combination(&rn, &coeffs);
        let p = rn.periods_over(std::slice::from_ref(&cyc)).unwrap()[0];
        let expect: f64 = coeffs.iter().zip(&rn.periods).map(|(&k, &v)| k as f64 * v).sum();
        let scale = 1.0 + max_abs(rn.periods.iter().copied());
        prop_assert!(p.im.abs() < 1e-9 * scale, "Im {}", p.im);
        prop_assert!((p.re - expect).abs() < 1e-8 * scale);
    }

    #[test]
    fn solution_is_real_linear(seed in any::<u64>(), genus in 1usize..=3, n in 1usize..=2, lambda in 0.1f64..10.0) {
        let mut r = rng(seed);
        let rn = random_rn(&mut r, genus, n);
        let other = random_singular(&mut r, n);
        let sum = SingularPart::new(rn.singular.r.iter().zip(&other.r).map(|(a, b)| a * lambda + b).collect());
        let opts = SolveOptions::default();
        let a = solve_rn_with_basis(&rn.curve, &sum, &rn.basis, opts).unwrap();
        let b = solve_rn_with_basis(&rn.curve, &other, &rn.basis, opts).unwrap();
        let expect = rn.expr.scale(C64::new(lambda, 0.0)).add(&b.expr);
        prop_assert!(a.expr.distance(&expect) < 1e-9 * (1.0 + expect.max_coeff()));
    }

    #[test]
    fn zero_count_is_two_g_minus_one_plus_n(seed in any::<u64>(), genus in 1usize..=3, n in 1usize..=3) {
        let mut r = rng(seed);
        let rn = random_rn(&mut r, genus, n);
        let zeros = find_zeros(&rn).unwrap();
        prop_assert_eq!(zeros.total(), 2 * genus - 1 + n);
        for z in &zeros.points {
            prop_assert!(rn.expr.psi(z.location.x, z.location.y).norm() < 1e-8 * (1.0 + rn.expr.max_coeff()));
        }
    }

    #[test]
    fn im_f_is_path_independent(seed in any::<u64>(), genus in 1usize..=2, n in 1usize..=2) {
        let mut r = rng(seed);
        let rn = random_rn(&mut r, genus, n);
        let prim = LocalPrimitive::new(&rn.curve, &rn.expr).unwrap();
        let far = 2.0 * rn.curve.infinity_radius();
        let t0 = C64::from_polar(far.powf(-0.5), r.gen_range(0.0..std::f64::consts::TAU));
        let x0 = t0.powi(-2);
        let target = C64::new(r.gen_range(-0.3..0.3), r.gen_range(-0.3..0.3)) + rn.curve.branch_points()[0] * 0.5;
        // Direct path, and a path that first runs twice around the far
        // circle (once around the marked point in the chart) and then
        // through a basis cycle's start point and around that cycle.
        let direct = abelian_integral(&rn, &prim, C64::new(0.0, 0.0), t0, &[target]).unwrap();
        let mut around: Vec<C64> = (1..=512).map(|k| x0 * C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 256.0)).collect();
        let cycle = &rn.basis[r.gen_range(0..rn.basis.len())];
        around.push(cycle.segments[0].start);
        around.extend(cycle.segments.iter().map(|s| s.end));
        around.push(x0);
        around.push(target);
        let looped = abelian_integral(&rn, &prim, C64::new(0.0, 0.0), t0, &around).unwrap();
        let start = rn.curve.from_chart(&realnorm::curve::InfinityChart { t: t0 });
        let (_, end_a) = increment(&rn, &start, &[target]).unwrap();
        let (_, end_b) = increment(&rn, &start, &around).unwrap();
        let scale = 1.0 + direct.norm();
        // Both detours enclose an even number of branch points.
        prop_assert!((end_a.y - end_b.y).norm() < 1e-8 * (1.0 + end_a.y.norm()));
        prop_assert!((direct - looped).im.abs() < 1e-9 * scale, "{} vs {}", direct, looped);
    }
}

#[test]
fn basis_change_keeps_solution() {
    let mut r = rng(11);
    for genus in 1..=3 {
        let rn = random_rn(&mut r, genus, 2);
        let curve = &rn.curve;
        let g = genus;
        assert_eq!(realnorm::homology::intersection(curve, &rn.basis[0].concat(&rn.basis[g]), &rn.basis[g]).unwrap(), 1);
        // (A_1, B_1) -> (A_1 + B_1, B_1) is symplectic.
        let mut basis = rn.basis.clone();
        basis[0] = rn.basis[0].concat(&rn.basis[g]);
        let other = solve_rn_with_basis(curve, &rn.singular, &basis, SolveOptions::default()).unwrap();
        assert!(other.expr.distance(&rn.expr) < 1e-8);
    }
}

#[test]
fn stratum_of_small_leading_coefficient() {
    let curve = realnorm::curve::build_curve(&[c(-1.0, 0.2), c(0.3, -0.5), c(1.2, 0.4)]).unwrap();
    let rn = solve_rn(&curve, &SingularPart::new(vec![c(1.0, 0.0), c(1e-6, 0.0)])).unwrap();
    let zeros = find_zeros(&rn).unwrap();
    assert_eq!(zeros.total(), 3);
    let report = realnorm::rn::stratum_report(&rn, &zeros, 1e-2);
    assert_eq!(report.effective_order, 1);
    let near: usize = report.near_marked_zeros.iter().map(|z| z.multiplicity).sum();
    assert_eq!(near, 1);
}
