//! Second-kind differentials `(A(x) + B(x) y) dx / y` and their expansion
//! at the marked point.

use serde::{Deserialize, Serialize};

use crate::curve::HyperellipticCurve;
use crate::error::{Error, Result};
use crate::poly::{self, C64};
use crate::series::{self, Laurent};

/// Largest power of `t` the expansion machinery will produce.
pub const MAX_SERIES_ORDER: usize = 400;

/// `omega = A(x) dx / y + B(x) dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialExpr {
    pub a_coeffs: Vec<C64>,
    pub b_coeffs: Vec<C64>,
}

/// Principal part `sum_{i=1..n} r_i t^{-i-1} dt` at the marked point. The
/// residue slot does not exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularPart {
    pub r: Vec<C64>,
}

impl SingularPart {
    pub fn new(r: Vec<C64>) -> Self {
        SingularPart { r }
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.r.iter().all(|c| c.norm() == 0.0)
    }

    pub fn max_modulus(&self) -> f64 {
        self.r.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> SingularPart {
        SingularPart { r: self.r.iter().map(|c| c * s).collect() }
    }
}

impl DifferentialExpr {
    pub fn zero() -> Self {
        DifferentialExpr { a_coeffs: Vec::new(), b_coeffs: Vec::new() }
    }

    /// `x^k dx / y`.
    pub fn holomorphic_monomial(k: usize) -> Self {
        let mut a = vec![C64::new(0.0, 0.0); k + 1];
        a[k] = C64::new(1.0, 0.0);
        DifferentialExpr { a_coeffs: a, b_coeffs: Vec::new() }
    }

    /// `x^k dx`.
    pub fn exact_monomial(k: usize) -> Self {
        let mut b = vec![C64::new(0.0, 0.0); k + 1];
        b[k] = C64::new(1.0, 0.0);
        DifferentialExpr { a_coeffs: Vec::new(), b_coeffs: b }
    }

    pub fn add(&self, other: &DifferentialExpr) -> DifferentialExpr {
        DifferentialExpr {
            a_coeffs: poly::add(&self.a_coeffs, &other.a_coeffs),
            b_coeffs: poly::add(&self.b_coeffs, &other.b_coeffs),
        }
    }

    pub fn scale(&self, s: C64) -> DifferentialExpr {
        DifferentialExpr { a_coeffs: poly::scale(&self.a_coeffs, s), b_coeffs: poly::scale(&self.b_coeffs, s) }
    }

    pub fn add_scaled(&self, other: &DifferentialExpr, s: C64) -> DifferentialExpr {
        self.add(&other.scale(s))
    }

    /// Coefficient of `dx` at a point: `A(x)/y + B(x)`.
    pub fn psi(&self, x: C64, y: C64) -> C64 {
        poly::eval(&self.a_coeffs, x) / y + poly::eval(&self.b_coeffs, x)
    }

    /// `d psi / dx` along the curve, using `dy/dx = f'(x) / (2y)`.
    pub fn psi_derivative(&self, curve: &HyperellipticCurve, x: C64, y: C64) -> C64 {
        let (a, da) = poly::eval_with_derivative(&self.a_coeffs, x);
        let (_, db) = poly::eval_with_derivative(&self.b_coeffs, x);
        let dy = curve.f_prime(x) / (y * 2.0);
        da / y - a * dy / (y * y) + db
    }

    /// Numerator `A(x) + B(x) y` whose zeros on the finite curve are the
    /// zeros of the differential.
    pub fn numerator(&self, x: C64, y: C64) -> C64 {
        poly::eval(&self.a_coeffs, x) + poly::eval(&self.b_coeffs, x) * y
    }

    pub fn max_coeff(&self) -> f64 {
        self.a_coeffs.iter().chain(&self.b_coeffs).map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Difference in the sup norm of coefficients.
    pub fn distance(&self, other: &DifferentialExpr) -> f64 {
        let da = poly::sub(&self.a_coeffs, &other.a_coeffs);
        let db = poly::sub(&self.b_coeffs, &other.b_coeffs);
        da.iter().chain(&db).map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn degree(coeffs: &[C64]) -> Option<usize> {
        coeffs.iter().rposition(|c| c.norm() != 0.0)
    }
}

/// `x^{j-1} dx / y`, `j = 1..g`.
pub fn holomorphic_basis(curve: &HyperellipticCurve) -> Vec<DifferentialExpr> {
    (0..curve.genus()).map(DifferentialExpr::holomorphic_monomial).collect()
}

/// Series `P(u)^{-1/2}` with `P(u) = prod (1 - lambda_i u)`, so that
/// `1/y = t^{2g+1} Q(t^2)`.
fn inverse_s_series(curve: &HyperellipticCurve, len: usize) -> Vec<C64> {
    let mut p = vec![C64::new(1.0, 0.0)];
    for &l in curve.branch_points() {
        p = poly::mul(&p, &[C64::new(1.0, 0.0), -l]);
    }
    series::pow(&p, -0.5, len)
}

/// Laurent coefficients of `diff = psi(t) dt` at the marked point, from the
/// lowest power up to and including `t^order`.
pub fn expand_at_infinity(curve: &HyperellipticCurve, diff: &DifferentialExpr, order: usize) -> Result<Laurent> {
    if order > MAX_SERIES_ORDER {
        return Err(Error::SeriesDivergence(order, MAX_SERIES_ORDER));
    }
    let g = curve.genus() as i32;
    let deg_a = DifferentialExpr::degree(&diff.a_coeffs);
    let deg_b = DifferentialExpr::degree(&diff.b_coeffs);
    let mut lowest = 0i32;
    if let Some(da) = deg_a {
        lowest = lowest.min(2 * g - 2 - 2 * da as i32);
    }
    if let Some(db) = deg_b {
        lowest = lowest.min(-2 * db as i32 - 3);
    }
    let len = (order as i32 - lowest + 1).max(0) as usize;
    let mut out = Laurent::zero(lowest, len);
    if let Some(da) = deg_a {
        // x^a dx / y = -2 t^{2g-2-2a} Q(t^2) dt
        let q = inverse_s_series(curve, len / 2 + 2);
        for (a, &coef) in diff.a_coeffs.iter().enumerate().take(da + 1) {
            if coef.norm() == 0.0 {
                continue;
            }
            let base = 2 * g - 2 - 2 * a as i32;
            for (m, &qm) in q.iter().enumerate() {
                let power = base + 2 * m as i32;
                if power > order as i32 {
                    break;
                }
                out.add_term(power, coef * qm * -2.0);
            }
        }
    }
    for (b, &coef) in diff.b_coeffs.iter().enumerate() {
        if coef.norm() == 0.0 {
            continue;
        }
        // x^b dx = -2 t^{-2b-3} dt
        out.add_term(-2 * b as i32 - 3, coef * -2.0);
    }
    Ok(out)
}

/// Differentials `eta_i`, `i = 1..n`, whose principal part at the marked
/// point is exactly `t^{-i-1} dt`. Odd pole orders come from `x^b dx`
/// (already a pure monomial in `t`); even pole orders from
/// `x^{g+k} dx / y` with sub-leading poles removed by earlier `eta`s.
pub fn second_kind_basis(curve: &HyperellipticCurve, n: usize) -> Vec<DifferentialExpr> {
    let g = curve.genus();
    let mut out: Vec<DifferentialExpr> = Vec::with_capacity(n);
    for i in 1..=n {
        let eta = if i % 2 == 0 {
            DifferentialExpr::exact_monomial((i - 2) / 2).scale(C64::new(-0.5, 0.0))
        } else {
            let k = (i - 1) / 2;
            let mut cand = DifferentialExpr::holomorphic_monomial(g + k).scale(C64::new(-0.5, 0.0));
            let lau = expand_at_infinity(curve, &cand, 0).expect("order 0 is within truncation");
            // Remove t^{-j-1} for j < i (only even powers appear).
            for j in (1..i).rev() {
                let c = lau.coeff(-(j as i32) - 1);
                if c.norm() != 0.0 {
                    cand = cand.add_scaled(&out[j - 1], -c);
                }
            }
            cand
        };
        out.push(eta);
    }
    out
}

/// `sum_i r_i eta_i`.
pub fn singular_combination(basis: &[DifferentialExpr], singular: &SingularPart) -> DifferentialExpr {
    basis
        .iter()
        .zip(&singular.r)
        .fold(DifferentialExpr::zero(), |acc, (eta, &r)| acc.add_scaled(eta, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::build_curve;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn holomorphic_basis_shapes() {
        let g1 = build_curve(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(holomorphic_basis(&g1), vec![DifferentialExpr::holomorphic_monomial(0)]);
        let g2 = build_curve(&[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        let b = holomorphic_basis(&g2);
        assert_eq!(b.len(), 2);
        assert_eq!(b[1], DifferentialExpr::holomorphic_monomial(1));
        for w in &b {
            let lau = expand_at_infinity(&g2, w, 6).unwrap();
            assert!(lau.lowest >= 0, "holomorphic differential has a pole");
        }
    }

    #[test]
    fn dx_has_leading_minus_two_t_cubed() {
        let curve = build_curve(&[c(-1.0, 0.3), c(0.5, 0.0), c(1.0, 0.0)]).unwrap();
        let lau = expand_at_infinity(&curve, &DifferentialExpr::exact_monomial(0), 4).unwrap();
        assert_eq!(lau.coeff(-3), c(-2.0, 0.0));
        assert_eq!(lau.order(0.0), Some(-3));
    }

    #[test]
    fn second_kind_principal_parts_are_exact() {
        let curve = build_curve(&[c(-1.0, 0.3), c(0.5, 0.0), c(1.0, 0.0), c(2.0, -1.0), c(-0.5, 1.5)]).unwrap();
        let n = 6;
        let basis = second_kind_basis(&curve, n);
        for (idx, eta) in basis.iter().enumerate() {
            let i = idx as i32 + 1;
            let lau = expand_at_infinity(&curve, eta, 4).unwrap();
            assert_eq!(lau.lowest, -i - 1);
            for p in -(n as i32) - 1..0 {
                let want = if p == -i - 1 { 1.0 } else { 0.0 };
                assert!((lau.coeff(p) - c(want, 0.0)).norm() < 1e-12, "eta_{i} coefficient of t^{p}");
            }
        }
    }

    #[test]
    fn truncation_limit() {
        let curve = build_curve(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let r = expand_at_infinity(&curve, &DifferentialExpr::holomorphic_monomial(0), MAX_SERIES_ORDER + 1);
        assert!(matches!(r, Err(Error::SeriesDivergence(..))));
    }
}
