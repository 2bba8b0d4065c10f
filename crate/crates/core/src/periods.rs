//! Contour integration of differentials over cycles and the period matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::HyperellipticCurve;
use crate::differential::{holomorphic_basis, DifferentialExpr};
use crate::error::{Error, Result};
use crate::homology::{standard_basis, Cycle, PathSegment};
use crate::poly::C64;
use crate::quad::{self, QuadTolerance};

/// A period together with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub value: C64,
    pub error: f64,
}

/// Integrals of several differentials along one straight, sheet-safe
/// segment, all sharing the same quadrature nodes.
pub fn segment_integrals(
    curve: &HyperellipticCurve,
    diffs: &[DifferentialExpr],
    seg: &PathSegment,
    tol: &QuadTolerance,
) -> Result<(Vec<C64>, f64)> {
    let dx = seg.end - seg.start;
    quad::integrate(
        |s, out| {
            let x = seg.start + dx * s;
            let y = curve.continue_y(seg.start, seg.y_start, x);
            for (o, d) in out.iter_mut().zip(diffs) {
                *o = d.psi(x, y) * dx;
            }
        },
        diffs.len(),
        tol,
    )
}

/// Integrals of each differential over a (not necessarily closed) path.
pub fn path_integrals(
    curve: &HyperellipticCurve,
    diffs: &[DifferentialExpr],
    segments: &[PathSegment],
    tol: &QuadTolerance,
) -> Result<Vec<Period>> {
    let mut total = vec![C64::new(0.0, 0.0); diffs.len()];
    let mut err = 0.0;
    for seg in segments {
        let (v, e) = segment_integrals(curve, diffs, seg, tol)?;
        for (t, vi) in total.iter_mut().zip(v) {
            *t += vi;
        }
        err += e;
    }
    Ok(total.into_iter().map(|value| Period { value, error: err }).collect())
}

pub fn period_vector(
    curve: &HyperellipticCurve,
    diffs: &[DifferentialExpr],
    cycle: &Cycle,
    tol: &QuadTolerance,
) -> Result<Vec<Period>> {
    path_integrals(curve, diffs, &cycle.segments, tol)
}

pub fn period(curve: &HyperellipticCurve, diff: &DifferentialExpr, cycle: &Cycle) -> Result<Period> {
    Ok(period_vector(curve, std::slice::from_ref(diff), cycle, &QuadTolerance::default())?[0])
}

/// Periods of every differential over every cycle, `out[cycle][diff]`.
/// Cycles are evaluated in parallel; assembly order is fixed.
pub fn period_grid(
    curve: &HyperellipticCurve,
    diffs: &[DifferentialExpr],
    cycles: &[Cycle],
    tol: &QuadTolerance,
) -> Result<Vec<Vec<Period>>> {
    cycles.par_iter().map(|c| period_vector(curve, diffs, c, tol)).collect()
}

/// Periods of the raw holomorphic basis over the standard cycles together
/// with the normalized Riemann matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodTable {
    /// `periods[k][j]`: differential `x^j dx/y` over cycle `k`
    /// (`A_1..A_g, B_1..B_g`).
    pub periods: Vec<Vec<Period>>,
    /// Normalized b-periods, `tau[i][j]`.
    pub tau: Vec<Vec<C64>>,
    /// Smallest eigenvalue of `Im tau`.
    pub im_tau_min_eigenvalue: f64,
    /// `max |tau - tau^T|`.
    pub symmetry_defect: f64,
}

impl PeriodTable {
    pub fn genus(&self) -> usize {
        self.tau.len()
    }

    /// Real `2g x 2g` matrix whose column `k` stacks `(Re, Im)` of the
    /// holomorphic periods over cycle `k`.
    pub fn real_lattice(&self) -> DMatrix<f64> {
        let g = self.genus();
        DMatrix::from_fn(2 * g, 2 * g, |row, col| {
            let p = self.periods[col][row / 2].value;
            if row % 2 == 0 { p.re } else { p.im }
        })
    }
}

fn complex_matrix(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, f)
}

pub fn period_matrix(curve: &HyperellipticCurve) -> Result<PeriodTable> {
    let basis = standard_basis(curve)?;
    period_matrix_with_basis(curve, &basis, &QuadTolerance::default())
}

pub fn period_matrix_with_basis(curve: &HyperellipticCurve, basis: &[Cycle], tol: &QuadTolerance) -> Result<PeriodTable> {
    let g = curve.genus();
    let hol = holomorphic_basis(curve);
    let periods = period_grid(curve, &hol, basis, tol)?;
    let wa = complex_matrix(g, g, |k, j| periods[k][j].value);
    let wb = complex_matrix(g, g, |k, j| periods[g + k][j].value);
    let wa_inv = wa.try_inverse().ok_or(Error::NotPositiveDefinite(f64::NAN))?;
    let tau = wb * wa_inv;
    let mut symmetry_defect: f64 = 0.0;
    for i in 0..g {
        for j in 0..g {
            symmetry_defect = symmetry_defect.max((tau[(i, j)] - tau[(j, i)]).norm());
        }
    }
    let im = DMatrix::from_fn(g, g, |i, j| 0.5 * (tau[(i, j)].im + tau[(j, i)].im));
    let min_eig = SymmetricEigen::new(im).eigenvalues.iter().copied().fold(f64::MAX, f64::min);
    if !(min_eig > 0.0) {
        return Err(Error::NotPositiveDefinite(min_eig));
    }
    Ok(PeriodTable {
        periods,
        tau: (0..g).map(|i| (0..g).map(|j| tau[(i, j)]).collect()).collect(),
        im_tau_min_eigenvalue: min_eig,
        symmetry_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::build_curve;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exact_differentials_have_zero_periods() {
        let curve = build_curve(&[c(-1.0, 0.2), c(0.1, 0.0), c(1.0, -0.3), c(2.2, 0.4), c(3.1, -0.2)]).unwrap();
        let basis = standard_basis(&curve).unwrap();
        let dx = DifferentialExpr::exact_monomial(0);
        let d_x2 = DifferentialExpr::exact_monomial(1).scale(c(2.0, 0.0));
        for cyc in &basis {
            assert!(period(&curve, &dx, cyc).unwrap().value.norm() < 1e-10);
            assert!(period(&curve, &d_x2, cyc).unwrap().value.norm() < 1e-10);
        }
    }

    #[test]
    fn riemann_matrix_is_symmetric_with_positive_imaginary_part() {
        let curve = build_curve(&[c(-1.5, 0.2), c(-0.4, -0.1), c(0.3, 0.3), c(1.2, -0.2), c(2.0, 0.1), c(2.9, 0.4), c(3.8, -0.3)])
            .unwrap();
        let table = period_matrix(&curve).unwrap();
        assert_eq!(table.genus(), 3);
        assert!(table.symmetry_defect < 1e-8, "{}", table.symmetry_defect);
        assert!(table.im_tau_min_eigenvalue > 0.0);
    }
}
