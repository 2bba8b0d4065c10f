//! Zeros of `Psi = (A + B y) dx / y` on the curve.
//!
//! Finite zeros project to roots of `N = A^2 - B^2 f`. A root of
//! multiplicity `m` at a regular `x` splits between the two sheets (counted
//! with the argument principle); at a branch point it is a single zero of
//! order `m` in the local parameter `u`.

use serde::{Deserialize, Serialize};

use crate::curve::{HyperellipticCurve, SurfacePoint};
use crate::differential::DifferentialExpr;
use crate::error::{Error, Result};
use crate::poly::{self, C64};
use crate::rn::RNDifferential;

/// Relative distance under which roots of `N` are merged.
const CLUSTER_TOLERANCE: f64 = 1e-6;
const WINDING_SAMPLES: usize = 96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: SurfacePoint,
    pub multiplicity: usize,
    /// Set when the zero sits on a branch point.
    pub branch_index: Option<usize>,
    /// Critical value; zero until [`crate::flow::integral::critical_values`]
    /// fills it in.
    pub phi: C64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub points: Vec<CriticalPoint>,
    /// Zeros absorbed by the marked point when trailing `r_i` vanish.
    pub at_marked_point: usize,
    pub expected: usize,
}

impl ZeroSet {
    pub fn total(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum::<usize>() + self.at_marked_point
    }

    pub fn all_simple(&self) -> bool {
        self.at_marked_point == 0 && self.points.iter().all(|p| p.multiplicity == 1)
    }

    /// Smallest [`surface_distance`] between two zeros.
    pub fn min_separation(&self, curve: &HyperellipticCurve) -> f64 {
        let mut best = f64::MAX;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                best = best.min(surface_distance(curve, &self.points[i].location, &self.points[j].location));
            }
        }
        best
    }
}

/// Whether `q` is reached from `p` by continuing `y` along the straight
/// segment. Branch points (`y = 0`) lie on both sheets.
pub fn same_sheet(curve: &HyperellipticCurve, p: &SurfacePoint, q: &SurfacePoint) -> bool {
    if p.y.norm() == 0.0 || q.y.norm() == 0.0 {
        return true;
    }
    if curve.arg_sweep(p.x, q.x) > crate::curve::SHEET_SAFE_SWEEP {
        return false;
    }
    let y = curve.continue_y(p.x, p.y, q.x);
    (y - q.y).norm() < (y + q.y).norm()
}

/// `|x_p - x_q|` on a common sheet, otherwise the length of the shortest
/// two-piece path through a branch point.
pub fn surface_distance(curve: &HyperellipticCurve, p: &SurfacePoint, q: &SurfacePoint) -> f64 {
    if same_sheet(curve, p, q) {
        return (p.x - q.x).norm();
    }
    curve
        .branch_points()
        .iter()
        .map(|&l| (p.x - l).norm() + (l - q.x).norm())
        .fold(f64::MAX, f64::min)
}

/// `A + B y`.
fn h(expr: &DifferentialExpr, x: C64, y: C64) -> C64 {
    expr.numerator(x, y)
}

fn h_prime(curve: &HyperellipticCurve, expr: &DifferentialExpr, x: C64, y: C64) -> C64 {
    let (_, da) = poly::eval_with_derivative(&expr.a_coeffs, x);
    let (b, db) = poly::eval_with_derivative(&expr.b_coeffs, x);
    da + db * y + b * curve.f_prime(x) / (y * 2.0)
}

fn polish(curve: &HyperellipticCurve, expr: &DifferentialExpr, mut p: SurfacePoint, multiplicity: usize) -> SurfacePoint {
    let mut val = h(expr, p.x, p.y).norm();
    for _ in 0..50 {
        let d = h_prime(curve, expr, p.x, p.y);
        if d.norm() == 0.0 {
            break;
        }
        let x1 = p.x - h(expr, p.x, p.y) / d * multiplicity as f64;
        let Ok(q) = curve.lift(x1, Some(curve.continue_y(p.x, p.y, x1))) else { break };
        let v = h(expr, q.x, q.y).norm();
        if !(v < val) {
            break;
        }
        p = q;
        val = v;
        if val == 0.0 {
            break;
        }
    }
    p
}

/// Winding number of `A + B y` around a small circle on the sheet through
/// `(x0 + rho, y0)`.
fn winding(curve: &HyperellipticCurve, expr: &DifferentialExpr, x0: C64, rho: f64, y_start: C64) -> i64 {
    let mut x = x0 + rho;
    let mut y = y_start;
    let mut prev = h(expr, x, y);
    let mut total = 0.0;
    for k in 1..=WINDING_SAMPLES {
        let th = std::f64::consts::TAU * k as f64 / WINDING_SAMPLES as f64;
        let xn = x0 + C64::from_polar(rho, th);
        y = curve.continue_y(x, y, xn);
        x = xn;
        let cur = h(expr, x, y);
        total += (cur / prev).arg();
        prev = cur;
    }
    (total / std::f64::consts::TAU).round() as i64
}

/// Highest index with `r_k != 0`.
fn pole_index(rn: &RNDifferential) -> usize {
    rn.singular.r.iter().rposition(|r| r.norm() != 0.0).map(|k| k + 1).unwrap_or(0)
}

pub fn find_zeros(rn: &RNDifferential) -> Result<ZeroSet> {
    find_zeros_of(&rn.curve, &rn.expr, rn.n(), pole_index(rn))
}

/// Zeros of a differential whose principal part has length `n` and whose
/// highest nonvanishing coefficient is `r_k`.
pub fn find_zeros_of(curve: &HyperellipticCurve, expr: &DifferentialExpr, n: usize, k: usize) -> Result<ZeroSet> {
    let g = curve.genus();
    let expected = 2 * g - 1 + n;
    if k == 0 {
        // The zero differential (or a holomorphic one): nothing to report.
        return Ok(ZeroSet { points: Vec::new(), at_marked_point: 0, expected });
    }
    let f = curve.f_coeffs();
    let a2 = poly::mul(&expr.a_coeffs, &expr.a_coeffs);
    let b2f = poly::mul(&poly::mul(&expr.b_coeffs, &expr.b_coeffs), &f);
    let big_n = poly::trim(poly::sub(&a2, &b2f));
    let finite_expected = 2 * g - 1 + k;
    if big_n.len().saturating_sub(1) != finite_expected {
        return Err(Error::CountMismatch { found: big_n.len().saturating_sub(1) + n - k, expected });
    }
    let mut roots = poly::roots(&big_n);
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    // Cluster.
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for r in roots {
        match clusters
            .iter_mut()
            .find(|c| (c[0] - r).norm() <= CLUSTER_TOLERANCE * (1.0 + r.norm()))
        {
            Some(c) => c.push(r),
            None => clusters.push(vec![r]),
        }
    }
    let centres: Vec<C64> = clusters.iter().map(|c| c.iter().sum::<C64>() / c.len() as f64).collect();
    let scale = 1.0 + curve.max_modulus();
    let mut points = Vec::new();
    for (ci, cluster) in clusters.iter().enumerate() {
        let x0 = centres[ci];
        let m = cluster.len();
        let (bi, bd) = curve.nearest_branch_point(x0);
        if bd <= CLUSTER_TOLERANCE * scale.max(x0.norm()) {
            points.push(CriticalPoint {
                location: SurfacePoint { x: curve.branch_points()[bi], y: C64::new(0.0, 0.0) },
                multiplicity: m,
                branch_index: Some(bi),
                phi: C64::new(0.0, 0.0),
                f: 0.0,
            });
            continue;
        }
        let y = curve.lift(x0, None)?.y;
        if m == 1 {
            let y = if h(expr, x0, y).norm() <= h(expr, x0, -y).norm() { y } else { -y };
            let p = polish(curve, expr, SurfacePoint { x: x0, y }, 1);
            points.push(CriticalPoint { location: p, multiplicity: 1, branch_index: None, phi: C64::new(0.0, 0.0), f: 0.0 });
            continue;
        }
        let mut rho = bd * 0.3;
        for (cj, &other) in centres.iter().enumerate() {
            if cj != ci {
                rho = rho.min(0.3 * (other - x0).norm());
            }
        }
        let mut found = 0usize;
        for sheet in [1.0, -1.0] {
            let ys = curve.lift(x0 + rho, Some(y * sheet))?.y;
            let w = winding(curve, expr, x0, rho, ys);
            if w < 0 {
                return Err(Error::CountMismatch { found: 0, expected });
            }
            if w > 0 {
                found += w as usize;
                let p = polish(curve, expr, SurfacePoint { x: x0, y: y * sheet }, w as usize);
                points.push(CriticalPoint {
                    location: p,
                    multiplicity: w as usize,
                    branch_index: None,
                    phi: C64::new(0.0, 0.0),
                    f: 0.0,
                });
            }
        }
        if found != m {
            return Err(Error::CountMismatch { found: found + (finite_expected - m), expected });
        }
    }
    let out = ZeroSet { points, at_marked_point: n - k, expected };
    if out.total() != expected {
        return Err(Error::CountMismatch { found: out.total(), expected });
    }
    Ok(out)
}
