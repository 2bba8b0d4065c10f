mod common;

use common::*;
use realnorm::curve::build_curve;
use realnorm::differential::{DifferentialExpr, SingularPart};
use realnorm::homology::standard_basis;
use realnorm::leaf::{period_jacobian, period_map, LeafState};
use realnorm::periods::{period, period_matrix};
use realnorm::rn::solve_rn;

#[test]
fn lemniscatic_a_period() {
    let curve = build_curve(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let basis = standard_basis(&curve).unwrap();
    let a = period(&curve, &DifferentialExpr::holomorphic_monomial(0), &basis[0]).unwrap().value;
    let w = lemniscate();
    assert!((a.norm() - 2.0 * w).abs() < 1e-8, "{a} vs {}", 2.0 * w);
    assert!((2.0 * w - 5.244115108584).abs() < 1e-9);
    let table = period_matrix(&curve).unwrap();
    assert!(table.tau[0][0].re.abs() < 1e-8);
    assert!((table.tau[0][0].im.abs() - 1.0).abs() < 1e-8);
}

#[test]
fn real_curve_periods_match_agm() {
    for (e1, e2, e3) in [(1.0, 0.0, -1.0), (2.5, 0.3, -0.7), (1.2, 1.0, -2.0)] {
        let curve = build_curve(&[c(e3, 0.0), c(e2, 0.0), c(e1, 0.0)]).unwrap();
        let basis = standard_basis(&curve).unwrap();
        let hol = DifferentialExpr::holomorphic_monomial(0);
        let a = period(&curve, &hol, &basis[0]).unwrap().value;
        let b = period(&curve, &hol, &basis[1]).unwrap().value;
        let o = elliptic_oracle(e1, e2, e3);
        assert!((a.norm() - 2.0 * o.real_half).abs() < 1e-8, "A {a} vs {}", 2.0 * o.real_half);
        assert!(a.im.abs() < 1e-10);
        // B winds once around (e2, e1), possibly also around the cut of A.
        assert!(((b.im.abs() - 2.0 * o.imag_half).abs()) < 1e-8, "B {b} vs {}", 2.0 * o.imag_half);
    }
}

#[test]
fn genus_one_rn_matches_legendre_oracle() {
    for (e1, e2, e3) in [(1.0, 0.0, -1.0), (2.5, 0.3, -0.7), (1.2, 1.0, -2.0), (0.9, -0.1, -0.4)] {
        let curve = build_curve(&[c(e3, 0.0), c(e2, 0.0), c(e1, 0.0)]).unwrap();
        let rn = solve_rn(&curve, &SingularPart::new(vec![c(1.0, 0.0)])).unwrap();
        let o = elliptic_oracle(e1, e2, e3);
        let coef = rn.holomorphic_coeffs[0];
        assert!((coef.re - o.rn_c).abs() < 1e-9 && coef.im.abs() < 1e-9, "{coef} vs {}", o.rn_c);
        assert!((rn.periods[0].abs() - o.rn_a_period).abs() < 1e-8);
        assert!(rn.periods[1].abs() < 1e-8);
        assert!(rn.certificate < 1e-9);
    }
    let w = lemniscate();
    let rn = solve_rn(
        &build_curve(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap(),
        &SingularPart::new(vec![c(1.0, 0.0)]),
    )
    .unwrap();
    assert!((rn.holomorphic_coeffs[0].re - std::f64::consts::PI / (2.0 * w * w)).abs() < 1e-10);
}

#[test]
fn complex_singular_part_scales_oracle() {
    // Psi(r) for complex r is Re r * Psi(1) + Im r * Psi(i), both real normalized.
    let curve = build_curve(&[c(-0.7, 0.0), c(0.3, 0.0), c(2.5, 0.0)]).unwrap();
    let o = elliptic_oracle(2.5, 0.3, -0.7);
    let r = c(0.6, -1.3);
    let rn = solve_rn(&curve, &SingularPart::new(vec![r])).unwrap();
    let rn_i = solve_rn(&curve, &SingularPart::new(vec![c(0.0, 1.0)])).unwrap();
    let expect = rn_i.holomorphic_coeffs[0] * r.im + o.rn_c * r.re;
    assert!((rn.holomorphic_coeffs[0] - expect).norm() < 1e-9);
}

/// Five-point stencil at a coarser step: an independent derivative
/// estimate for the genus-one period map.
#[test]
fn jacobian_matches_five_point_stencil() {
    let curve = build_curve(&[c(0.0, 0.0), c(1.0, 0.0), c(-0.4, 0.9)]).unwrap();
    let rn = solve_rn(&curve, &SingularPart::new(vec![c(0.8, -0.3)])).unwrap();
    let st = LeafState::new(&rn);
    let jac = period_jacobian(&st).unwrap();
    assert_eq!(jac.rank, 2);
    assert_eq!(jac.kernel.len(), 2);
    let h = 1e-3;
    let dim = st.chart.dim();
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        let p = |s: f64| period_map(&st.chart.moved(&e, s), &st.sheet_hints).unwrap();
        let (p2, p1, m1, m2) = (p(2.0 * h), p(h), p(-h), p(-2.0 * h));
        for i in 0..2 {
            let d = (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h);
            assert!((d - jac.matrix[i][k]).abs() < 1e-6 * (1.0 + d.abs()), "({i},{k}) {d} vs {}", jac.matrix[i][k]);
        }
    }
}

#[test]
fn series_oracle_for_dx() {
    // dx = -2 t^-3 dt: the singular part (0, -2) reproduces dx.
    for bp in [vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]] {
        let curve = build_curve(&bp).unwrap();
        let rn = solve_rn(&curve, &SingularPart::new(vec![c(0.0, 0.0), c(-2.0, 0.0)])).unwrap();
        assert!(rn.expr.distance(&DifferentialExpr::exact_monomial(0)) < 1e-10);
        assert!(max_abs(rn.periods.iter().copied()) < 1e-10);
    }
}
