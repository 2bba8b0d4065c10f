//! The real-normalized differential with a prescribed singular part.
//!
//! `Psi = sum r_i eta_i + sum c_j omega_j`; writing `c = u + i v`, the
//! conditions `Im periods = 0` over the `2g` basis cycles form one real
//! linear system in `(u, v)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curve::HyperellipticCurve;
use crate::differential::{holomorphic_basis, second_kind_basis, singular_combination, DifferentialExpr, SingularPart};
use crate::error::{Error, Result};
use crate::flow::zeros::ZeroSet;
use crate::homology::{standard_basis, Cycle};
use crate::periods::{period_matrix_with_basis, period_vector, PeriodTable};
use crate::poly::{self, C64};
use crate::quad::QuadTolerance;

/// Largest accepted condition number of the normalization system.
pub const MAX_CONDITION: f64 = 1e12;
/// Largest accepted `|Im period|` of a solved differential.
pub const CERTIFICATE_LIMIT: f64 = 1e-9;
/// Periods below this are treated as zero by [`is_exact`].
pub const EXACT_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RNDifferential {
    pub curve: HyperellipticCurve,
    pub expr: DifferentialExpr,
    pub singular: SingularPart,
    /// Coefficients of the holomorphic basis `x^j dx / y`.
    pub holomorphic_coeffs: Vec<C64>,
    /// Real periods over `A_1..A_g, B_1..B_g`.
    pub periods: Vec<f64>,
    /// `max |Im period|` over the basis cycles.
    pub certificate: f64,
    pub condition_number: f64,
    pub basis: Vec<Cycle>,
    pub table: PeriodTable,
}

impl RNDifferential {
    pub fn genus(&self) -> usize {
        self.curve.genus()
    }

    pub fn n(&self) -> usize {
        self.singular.n()
    }

    /// Periods as complex numbers, recomputed over arbitrary cycles.
    pub fn periods_over(&self, cycles: &[Cycle]) -> Result<Vec<C64>> {
        cycles
            .iter()
            .map(|c| Ok(period_vector(&self.curve, std::slice::from_ref(&self.expr), c, &QuadTolerance::default())?[0].value))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Return the zero differential for a trivial singular part instead of
    /// failing.
    pub allow_zero: bool,
    pub quad: Option<QuadTolerance>,
}

pub fn solve_rn(curve: &HyperellipticCurve, singular: &SingularPart) -> Result<RNDifferential> {
    let basis = standard_basis(curve)?;
    solve_rn_with_basis(curve, singular, &basis, SolveOptions::default())
}

pub fn solve_rn_with_options(curve: &HyperellipticCurve, singular: &SingularPart, opts: SolveOptions) -> Result<RNDifferential> {
    let basis = standard_basis(curve)?;
    solve_rn_with_basis(curve, singular, &basis, opts)
}

pub fn solve_rn_with_basis(
    curve: &HyperellipticCurve,
    singular: &SingularPart,
    basis: &[Cycle],
    opts: SolveOptions,
) -> Result<RNDifferential> {
    if singular.is_trivial() && !opts.allow_zero {
        return Err(Error::TrivialSingularPart);
    }
    let g = curve.genus();
    let tol = opts.quad.unwrap_or_default();
    let table = period_matrix_with_basis(curve, basis, &tol)?;
    let hol = holomorphic_basis(curve);
    let eta = second_kind_basis(curve, singular.n());
    let fixed = singular_combination(&eta, singular);

    let p: Vec<C64> = basis
        .iter()
        .map(|c| Ok(period_vector(curve, std::slice::from_ref(&fixed), c, &tol)?[0].value))
        .collect::<Result<_>>()?;

    // Row k: Im(p_k + sum_j (u_j + i v_j) W_kj) = 0.
    let m = DMatrix::from_fn(2 * g, 2 * g, |k, col| {
        let w = table.periods[k][col % g].value;
        if col < g { w.im } else { w.re }
    });
    let rhs = DVector::from_fn(2 * g, |k, _| -p[k].im);
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition_number <= MAX_CONDITION) {
        return Err(Error::IllConditioned(condition_number));
    }
    let lu = m.clone().lu();
    let mut sol = lu.solve(&rhs).ok_or(Error::IllConditioned(f64::INFINITY))?;
    let resid = &rhs - &m * &sol;
    if let Some(corr) = lu.solve(&resid) {
        sol += corr;
    }
    let holomorphic_coeffs: Vec<C64> = (0..g).map(|j| C64::new(sol[j], sol[g + j])).collect();
    let mut expr = fixed;
    for (w, &c) in hol.iter().zip(&holomorphic_coeffs) {
        expr = expr.add_scaled(w, c);
    }

    let full: Vec<C64> = (0..2 * g)
        .map(|k| p[k] + (0..g).map(|j| holomorphic_coeffs[j] * table.periods[k][j].value).sum::<C64>())
        .collect();
    let certified: Vec<C64> = basis
        .iter()
        .map(|c| Ok(period_vector(curve, std::slice::from_ref(&expr), c, &tol)?[0].value))
        .collect::<Result<_>>()?;
    let scale = 1.0 + full.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let certificate = certified.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if !(certificate < CERTIFICATE_LIMIT * scale) {
        return Err(Error::NotCertified(certificate));
    }
    Ok(RNDifferential {
        curve: curve.clone(),
        expr,
        singular: singular.clone(),
        holomorphic_coeffs,
        periods: certified.iter().map(|z| z.re).collect(),
        certificate,
        condition_number,
        basis: basis.to_vec(),
        table,
    })
}

/// `F = P(x) + Q(x) y` with `dF = Psi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactWitness {
    pub p_coeffs: Vec<C64>,
    pub q_coeffs: Vec<C64>,
    /// Order of the pole of `F` at the marked point.
    pub pole_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub exact: bool,
    pub max_period: f64,
    pub witness: Option<ExactWitness>,
    /// Set when the periods vanish but no witness was found.
    pub witness_error: Option<String>,
}

fn significant_degree(coeffs: &[C64], tol: f64) -> Option<usize> {
    coeffs.iter().rposition(|c| c.norm() > tol)
}

/// Solve `A = Q' f + Q f' / 2` for a polynomial `Q` by top-down
/// elimination.
fn reconstruct(curve: &HyperellipticCurve, expr: &DifferentialExpr) -> Result<ExactWitness> {
    let f = curve.f_coeffs();
    let df = poly::derivative(&f);
    let d = f.len() - 1;
    let scale = 1.0 + expr.max_coeff();
    let tol = 1e-8 * scale;
    let mut rem = expr.a_coeffs.clone();
    let mut q = Vec::new();
    if let Some(da) = significant_degree(&rem, tol) {
        if da + 1 >= d {
            q = vec![C64::new(0.0, 0.0); da + 2 - d];
            for k in (0..=da + 1 - d).rev() {
                // Q = x^k gives (k + d/2) x^{k+d-1} + lower terms.
                let c = rem[k + d - 1] / (k as f64 + d as f64 / 2.0);
                q[k] = c;
                let mut mono = vec![C64::new(0.0, 0.0); k + 1];
                mono[k] = c;
                let term = poly::add(&poly::mul(&poly::derivative(&mono), &f), &poly::scale(&poly::mul(&mono, &df), C64::new(0.5, 0.0)));
                rem = poly::sub(&rem, &term);
            }
        }
    }
    let remainder = rem.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if remainder > tol {
        return Err(Error::WitnessReconstructionFailed(remainder));
    }
    let p = poly::antiderivative(&expr.b_coeffs);
    let deg_p = significant_degree(&p, tol).unwrap_or(0);
    let pole_p = 2 * deg_p;
    let pole_q = significant_degree(&q, tol).map(|k| 2 * k + d).unwrap_or(0);
    Ok(ExactWitness { p_coeffs: p, q_coeffs: q, pole_order: pole_p.max(pole_q) })
}

/// Whether all periods vanish, with `F` reconstructed when they do.
pub fn is_exact(rn: &RNDifferential) -> ExactReport {
    let max_period = rn.periods.iter().map(|p| p.abs()).fold(0.0, f64::max);
    let exact = max_period < EXACT_LIMIT;
    if !exact {
        return ExactReport { exact, max_period, witness: None, witness_error: None };
    }
    match reconstruct(&rn.curve, &rn.expr) {
        Ok(w) => ExactReport { exact, max_period, witness: Some(w), witness_error: None },
        Err(e) => ExactReport { exact, max_period, witness: None, witness_error: Some(e.to_string()) },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearMarkedZero {
    /// Index into the zero list, `None` for zeros sitting at the marked
    /// point itself.
    pub index: Option<usize>,
    /// Chart coordinate (`0` at the marked point).
    pub t: C64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    pub effective_order: usize,
    pub near_marked_zeros: Vec<NearMarkedZero>,
    pub epsilon: f64,
    /// Threshold on `|r_i|` defining the effective order.
    pub c: f64,
}

/// Default threshold: `1e-3 max |r_i|`.
pub fn default_c(singular: &SingularPart) -> f64 {
    1e-3 * singular.max_modulus()
}

pub fn stratum_report(rn: &RNDifferential, zeros: &ZeroSet, epsilon: f64) -> StratumReport {
    let c = default_c(&rn.singular);
    let effective_order = rn.singular.r.iter().rposition(|r| r.norm() > c).map(|k| k + 1).unwrap_or(0);
    let mut near = Vec::new();
    if zeros.at_marked_point > 0 {
        near.push(NearMarkedZero { index: None, t: C64::new(0.0, 0.0), multiplicity: zeros.at_marked_point });
    }
    for (k, z) in zeros.points.iter().enumerate() {
        if z.location.x.norm() <= rn.curve.max_modulus() {
            continue;
        }
        let t = rn.curve.chart_of(&z.location).t;
        if t.norm() < epsilon {
            near.push(NearMarkedZero { index: Some(k), t, multiplicity: z.multiplicity });
        }
    }
    StratumReport { effective_order, near_marked_zeros: near, epsilon, c }
}
