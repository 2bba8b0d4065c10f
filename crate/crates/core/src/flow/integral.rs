//! The abelian integral `F = c + int Psi` and the critical values.
//!
//! Near the marked point `F` is represented by the Laurent antiderivative
//! of `Psi` in the chart `t` with zero constant term. Every other value of
//! `F` is obtained by integrating back from a point of the circle
//! `|x| = 2 R_inf` and finally shifting so that the critical values sum to
//! zero.

use serde::{Deserialize, Serialize};

use crate::curve::{HyperellipticCurve, SurfacePoint};
use crate::differential::{expand_at_infinity, DifferentialExpr};
use crate::error::Result;
use crate::flow::zeros::{CriticalPoint, ZeroSet};
use crate::homology::{point_segment_distance, push_sheet_safe, PathSegment};
use crate::periods::path_integrals;
use crate::poly::{self, C64};
use crate::quad::{self, QuadTolerance};
use crate::rn::RNDifferential;
use crate::series::Laurent;

/// Number of `t` powers kept in the local primitive.
pub const LOCAL_ORDER: usize = 120;
/// Candidate directions for integration paths.
const PATH_DIRECTIONS: usize = 72;
/// Relative tie window for ordering by `f`.
const F_TIE: f64 = 1e-12;

/// `F_loc` and `psi(t)` at the marked point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPrimitive {
    pub psi: Laurent,
    pub primitive: Laurent,
}

impl LocalPrimitive {
    pub fn new(curve: &HyperellipticCurve, expr: &DifferentialExpr) -> Result<Self> {
        let psi = expand_at_infinity(curve, expr, LOCAL_ORDER)?;
        let primitive = psi.antiderivative();
        Ok(LocalPrimitive { psi, primitive })
    }

    pub fn eval(&self, t: C64) -> C64 {
        self.primitive.eval(t)
    }

    /// Coefficient of `dt`.
    pub fn psi_t(&self, t: C64) -> C64 {
        self.psi.eval(t)
    }
}

/// Radius of the circle where paths hand over to the chart.
pub fn far_radius(curve: &HyperellipticCurve) -> f64 {
    2.0 * curve.infinity_radius()
}

/// Distance `s` along `x0 + s e^{i theta}` to the circle `|x| = r`
/// (`|x0| < r`).
fn exit_distance(x0: C64, dir: C64, r: f64) -> f64 {
    let b = (x0 * dir.conj()).re;
    -b + (b * b - x0.norm_sqr() + r * r).max(0.0).sqrt()
}

/// Direction (among a fixed fan) whose straight ray from `x0` to the far
/// circle stays furthest from the branch points, ignoring `skip`.
pub fn best_direction(curve: &HyperellipticCurve, x0: C64, skip: Option<usize>) -> f64 {
    let r = far_radius(curve);
    let mut best = (f64::MIN, 0.0);
    for k in 0..PATH_DIRECTIONS {
        let th = std::f64::consts::TAU * k as f64 / PATH_DIRECTIONS as f64;
        let dir = C64::from_polar(1.0, th);
        let end = x0 + dir * exit_distance(x0, dir, r);
        let clearance = curve
            .branch_points()
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, &l)| point_segment_distance(l, x0, end))
            .fold(f64::MAX, f64::min);
        if clearance > best.0 {
            best = (clearance, th);
        }
    }
    best.1
}

/// Integral of `Psi` on the `u`-chart of branch point `i` from `u = 0` to
/// `u1`; returns it with the surface point reached.
pub fn branch_piece(curve: &HyperellipticCurve, expr: &DifferentialExpr, i: usize, u1: C64) -> Result<(C64, SurfacePoint)> {
    let l = curve.branch_points()[i];
    let (v, _) = quad::integrate(
        |s, out| {
            let u = u1 * s;
            let x = l + u * u;
            let hx = curve.branch_h(i, x);
            let a = poly::eval(&expr.a_coeffs, x);
            let b = poly::eval(&expr.b_coeffs, x);
            out[0] = (a * 2.0 / hx + u * b * 2.0) * u1;
        },
        1,
        &QuadTolerance::default(),
    )?;
    let x1 = l + u1 * u1;
    Ok((v[0], SurfacePoint { x: x1, y: u1 * curve.branch_h(i, x1) }))
}

/// Radius of the `u`-chart piece at branch point `i`.
pub fn branch_chart_radius(curve: &HyperellipticCurve, i: usize) -> f64 {
    let l = curve.branch_points()[i];
    let d = curve
        .branch_points()
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != i)
        .map(|(_, &m)| (m - l).norm())
        .fold(f64::MAX, f64::min);
    0.25 * d
}

/// Path from a surface point (or a branch zero) along direction `theta`
/// to the far circle: the integral of `Psi` along it and the end point.
pub fn integral_to_far(
    rn: &RNDifferential,
    start: &SurfacePoint,
    branch_index: Option<usize>,
    theta: f64,
) -> Result<(C64, SurfacePoint)> {
    let curve = &rn.curve;
    let dir = C64::from_polar(1.0, theta);
    let (mut acc, p0) = match branch_index {
        Some(i) => {
            let rho = branch_chart_radius(curve, i);
            branch_piece(curve, &rn.expr, i, C64::from_polar(rho.sqrt(), theta / 2.0))?
        }
        None => (C64::new(0.0, 0.0), *start),
    };
    let end = p0.x + dir * exit_distance(p0.x, dir, far_radius(curve));
    let mut segs: Vec<PathSegment> = Vec::new();
    let y_end = push_sheet_safe(curve, p0.x, p0.y, end, &mut segs)?;
    acc += path_integrals(curve, std::slice::from_ref(&rn.expr), &segs, &QuadTolerance::default())?[0].value;
    Ok((acc, SurfacePoint { x: end, y: y_end }))
}

/// `F` at a point before the global shift, via the ray at `theta`.
pub fn raw_value(
    rn: &RNDifferential,
    prim: &LocalPrimitive,
    start: &SurfacePoint,
    branch_index: Option<usize>,
    theta: f64,
) -> Result<C64> {
    if branch_index.is_none() && start.x.norm() >= far_radius(&rn.curve) {
        return Ok(prim.eval(rn.curve.chart_of(start).t));
    }
    let (i, far) = integral_to_far(rn, start, branch_index, theta)?;
    Ok(prim.eval(rn.curve.chart_of(&far).t) - i)
}

/// Integral of `Psi` along a polyline starting at a surface point.
pub fn increment(rn: &RNDifferential, start: &SurfacePoint, xs: &[C64]) -> Result<(C64, SurfacePoint)> {
    let mut segs = Vec::new();
    let mut y = start.y;
    let mut x = start.x;
    for &next in xs {
        y = push_sheet_safe(&rn.curve, x, y, next, &mut segs)?;
        x = next;
    }
    let v = path_integrals(&rn.curve, std::slice::from_ref(&rn.expr), &segs, &QuadTolerance::default())?[0].value;
    Ok((v, SurfacePoint { x, y }))
}

/// `F` at the end of a polyline starting from the chart point `t0`
/// (`|x(t0)| >= 2 R_inf`), including the global `shift`.
pub fn abelian_integral(rn: &RNDifferential, prim: &LocalPrimitive, shift: C64, t0: C64, xs: &[C64]) -> Result<C64> {
    let start = rn.curve.from_chart(&crate::curve::InfinityChart { t: t0 });
    let (v, _) = increment(rn, &start, xs)?;
    Ok(prim.eval(t0) + v + shift)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CriticalValueOptions {
    /// Finite-value normalization: zeros with chart distance below this to
    /// the marked point are left out of the sum condition.
    pub exclude_within: Option<f64>,
    /// Path directions to reuse, one per zero.
    pub directions: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    /// Zeros with `phi` and `f` filled, in the input order.
    pub points: Vec<CriticalPoint>,
    /// Indices into `points` by decreasing `f`.
    pub order: Vec<usize>,
    /// Path direction used for each zero.
    pub directions: Vec<f64>,
    /// Whether each zero takes part in the sum condition.
    pub included: Vec<bool>,
    /// Constant added to every raw value.
    pub shift: C64,
    pub at_marked_point: usize,
}

impl CriticalValues {
    pub fn ordered(&self) -> Vec<&CriticalPoint> {
        self.order.iter().map(|&k| &self.points[k]).collect()
    }

    /// `f_0`, the largest imaginary part.
    pub fn f0(&self) -> f64 {
        self.points[self.order[0]].f
    }
}

/// Order indices by decreasing `f`, ties broken by `(Re phi, index)`.
pub fn order_by_f(points: &[CriticalPoint]) -> Vec<usize> {
    let scale = 1.0 + points.iter().map(|p| p.phi.norm()).fold(0.0, f64::max);
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        let (pa, pb) = (&points[a], &points[b]);
        if (pa.f - pb.f).abs() > F_TIE * scale {
            pb.f.total_cmp(&pa.f)
        } else {
            pa.phi.re.total_cmp(&pb.phi.re).then(a.cmp(&b))
        }
    });
    idx
}

pub fn critical_values(rn: &RNDifferential, zeros: &ZeroSet, opts: &CriticalValueOptions) -> Result<CriticalValues> {
    let prim = LocalPrimitive::new(&rn.curve, &rn.expr)?;
    let mut points = zeros.points.clone();
    let mut directions = Vec::with_capacity(points.len());
    let mut included = Vec::with_capacity(points.len());
    for (k, p) in points.iter_mut().enumerate() {
        let th = match &opts.directions {
            Some(d) => d[k],
            None => best_direction(&rn.curve, p.location.x, p.branch_index),
        };
        directions.push(th);
        p.phi = raw_value(rn, &prim, &p.location, p.branch_index, th)?;
        let near = match opts.exclude_within {
            Some(eps) if p.location.x.norm() > rn.curve.max_modulus() => rn.curve.chart_of(&p.location).t.norm() < eps,
            _ => false,
        };
        included.push(!near);
    }
    let weight: usize = points.iter().zip(&included).filter(|(_, &i)| i).map(|(p, _)| p.multiplicity).sum();
    let total: C64 = points
        .iter()
        .zip(&included)
        .filter(|(_, &i)| i)
        .map(|(p, _)| p.phi * p.multiplicity as f64)
        .sum();
    let shift = if weight > 0 { -total / weight as f64 } else { C64::new(0.0, 0.0) };
    for p in points.iter_mut() {
        p.phi += shift;
        p.f = p.phi.im;
    }
    let order = order_by_f(&points);
    Ok(CriticalValues { points, order, directions, included, shift, at_marked_point: zeros.at_marked_point })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::build_curve;
    use crate::differential::SingularPart;
    use crate::flow::zeros::find_zeros;
    use crate::rn::solve_rn;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dx_critical_values_are_branch_points() {
        let curve = build_curve(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let rn = solve_rn(&curve, &SingularPart::new(vec![c(0.0, 0.0), c(-2.0, 0.0)])).unwrap();
        let z = find_zeros(&rn).unwrap();
        let cv = critical_values(&rn, &z, &CriticalValueOptions::default()).unwrap();
        for p in &cv.points {
            // F = x, and the branch points already sum to zero.
            assert!((p.phi - p.location.x).norm() < 1e-10, "{} vs {}", p.phi, p.location.x);
        }
    }

    #[test]
    fn f_is_path_independent() {
        let curve = build_curve(&[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.3), c(3.0, -0.2), c(4.0, 0.1)]).unwrap();
        let rn = solve_rn(&curve, &SingularPart::new(vec![c(0.7, -0.4), c(0.2, 0.1)])).unwrap();
        let z = find_zeros(&rn).unwrap();
        let prim = LocalPrimitive::new(&rn.curve, &rn.expr).unwrap();
        for p in &z.points {
            let a = raw_value(&rn, &prim, &p.location, p.branch_index, 0.3).unwrap();
            let b = raw_value(&rn, &prim, &p.location, p.branch_index, 2.9).unwrap();
            let d = raw_value(&rn, &prim, &p.location, p.branch_index, -1.7).unwrap();
            assert!((a.im - b.im).abs() < 1e-8 && (a.im - d.im).abs() < 1e-8);
        }
    }

    #[test]
    fn values_sum_to_zero_and_are_ordered() {
        let curve = build_curve(&[c(-1.0, 0.1), c(0.0, -0.2), c(1.2, 0.0)]).unwrap();
        let rn = solve_rn(&curve, &SingularPart::new(vec![c(1.0, 0.3), c(0.5, 0.0)])).unwrap();
        let z = find_zeros(&rn).unwrap();
        let cv = critical_values(&rn, &z, &CriticalValueOptions::default()).unwrap();
        let s: C64 = cv.points.iter().map(|p| p.phi).sum();
        assert!(s.norm() < 1e-12);
        let o = cv.ordered();
        assert!(o.windows(2).all(|w| w[0].f >= w[1].f));
    }
}
