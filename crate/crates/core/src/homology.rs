//! Cycles as sheet-tagged polylines in the x-plane, the standard symplectic
//! basis, intersection numbers and integer homology classes.
//!
//! Basis convention: with branch points `lambda_1..lambda_{2g+1}` in the
//! order given, `A_j` is a counterclockwise loop around the chain
//! `lambda_{2j-1}, lambda_{2j}` and `B_j` a loop around the chain
//! `lambda_{2j}, ..., lambda_{2g+1}`, oriented so that `A_j . B_j = +1`.
//! Every loop starts on the principal sheet at its first vertex.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curve::{HyperellipticCurve, SurfacePoint, SHEET_SAFE_SWEEP};
use crate::differential::holomorphic_basis;
use crate::error::{Error, Result};
use crate::periods::{period_vector, PeriodTable};
use crate::poly::C64;
use crate::quad::QuadTolerance;

/// Rounding threshold for integer homology classes.
pub const LATTICE_RESIDUAL_LIMIT: f64 = 1e-6;

/// Relative tolerance when matching `y` values at shared vertices.
const SHEET_MATCH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub start: C64,
    pub end: C64,
    /// `y` at `start`; continued along the segment by continuity.
    pub y_start: C64,
}

impl PathSegment {
    pub fn y_end(&self, curve: &HyperellipticCurve) -> C64 {
        curve.continue_y(self.start, self.y_start, self.end)
    }
}

/// A formal sum of closed sheet-tagged polylines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub segments: Vec<PathSegment>,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomologyClass {
    /// Coordinates in `A_1..A_g, B_1..B_g`.
    pub coeffs: Vec<i64>,
}

impl HomologyClass {
    pub fn zero(genus: usize) -> Self {
        HomologyClass { coeffs: vec![0; 2 * genus] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &HomologyClass) -> HomologyClass {
        HomologyClass { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }
}

/// Append sheet-safe pieces covering `[x0, x1]`; returns `y` at `x1`.
pub(crate) fn push_sheet_safe(
    curve: &HyperellipticCurve,
    x0: C64,
    y0: C64,
    x1: C64,
    out: &mut Vec<PathSegment>,
) -> Result<C64> {
    fn rec(
        curve: &HyperellipticCurve,
        x0: C64,
        y0: C64,
        x1: C64,
        depth: usize,
        out: &mut Vec<PathSegment>,
    ) -> Result<C64> {
        if curve.arg_sweep(x0, x1) <= SHEET_SAFE_SWEEP {
            out.push(PathSegment { start: x0, end: x1, y_start: y0 });
            return Ok(curve.continue_y(x0, y0, x1));
        }
        if depth > 48 {
            return Err(Error::AtBranchPoint(format!("segment {x0} -> {x1}")));
        }
        let mid = (x0 + x1) * 0.5;
        let ym = rec(curve, x0, y0, mid, depth + 1, out)?;
        rec(curve, mid, ym, x1, depth + 1, out)
    }
    rec(curve, x0, y0, x1, 0, out)
}

fn y_matches(a: C64, b: C64) -> bool {
    (a - b).norm() <= SHEET_MATCH * (1.0 + a.norm().max(b.norm()))
}

impl Cycle {
    /// Closed polyline through `xs` (closing edge added), starting on the
    /// sheet `y0` at `xs[0]`. Fails if continuation does not return to `y0`.
    pub fn from_polyline(curve: &HyperellipticCurve, xs: &[C64], y0: C64, label: Option<String>) -> Result<Cycle> {
        let mut segments = Vec::new();
        let mut y = y0;
        for k in 0..xs.len() {
            let next = xs[(k + 1) % xs.len()];
            y = push_sheet_safe(curve, xs[k], y, next, &mut segments)?;
        }
        if !y_matches(y, y0) {
            return Err(Error::NotClosed(format!("polyline returns on the opposite sheet ({label:?})")));
        }
        Ok(Cycle { segments, label })
    }

    /// Closed path through surface points (closing edge added). The `y`
    /// carried by each vertex must agree with continuation from the
    /// previous one.
    pub fn from_vertices(curve: &HyperellipticCurve, vertices: &[SurfacePoint], label: Option<String>) -> Result<Cycle> {
        let mut segments = Vec::new();
        for k in 0..vertices.len() {
            let a = vertices[k];
            let b = vertices[(k + 1) % vertices.len()];
            if a.x == b.x {
                if !y_matches(a.y, b.y) {
                    return Err(Error::NotClosed(format!("sheet jump at vertex {k}")));
                }
                continue;
            }
            let y = push_sheet_safe(curve, a.x, a.y, b.x, &mut segments)?;
            if !y_matches(y, b.y) {
                return Err(Error::NotClosed(format!("sheet mismatch between vertices {k} and {}", k + 1)));
            }
        }
        Ok(Cycle { segments, label })
    }

    pub fn reversed(&self, curve: &HyperellipticCurve) -> Cycle {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| PathSegment { start: s.end, end: s.start, y_start: s.y_end(curve) })
            .collect();
        Cycle { segments, label: self.label.as_ref().map(|l| format!("-{l}")) }
    }

    /// Formal sum.
    pub fn concat(&self, other: &Cycle) -> Cycle {
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&other.segments);
        let label = match (&self.label, &other.label) {
            (Some(a), Some(b)) => Some(format!("{a}+{b}")),
            _ => None,
        };
        Cycle { segments, label }
    }

    pub fn scaled(&self, curve: &HyperellipticCurve, k: i64) -> Cycle {
        let unit = if k < 0 { self.reversed(curve) } else { self.clone() };
        let mut out = Cycle { segments: Vec::new(), label: None };
        for _ in 0..k.unsigned_abs() {
            out = out.concat(&unit);
        }
        out
    }

    /// Checks that the segments decompose into closed runs.
    pub fn check_closed(&self, curve: &HyperellipticCurve) -> Result<()> {
        let mut run_start: Option<(C64, C64)> = None;
        for (k, seg) in self.segments.iter().enumerate() {
            let start = *run_start.get_or_insert((seg.start, seg.y_start));
            let end_y = seg.y_end(curve);
            let closes = seg.end == start.0 && y_matches(end_y, start.1);
            if closes {
                run_start = None;
                continue;
            }
            match self.segments.get(k + 1) {
                Some(next) if next.start == seg.end && y_matches(next.y_start, end_y) => {}
                _ => return Err(Error::NotClosed(format!("segment {k} is not continued"))),
            }
        }
        if run_start.is_some() {
            return Err(Error::NotClosed("open run at end".into()));
        }
        Ok(())
    }

    /// The same polyline on a nearby curve, each run re-lifted at its start
    /// with the old `y` as sheet hint.
    pub fn transport(&self, from: &HyperellipticCurve, to: &HyperellipticCurve) -> Result<Cycle> {
        let mut runs: Vec<Vec<PathSegment>> = Vec::new();
        let mut current: Vec<PathSegment> = Vec::new();
        for seg in &self.segments {
            current.push(*seg);
            let first = current[0];
            if seg.end == first.start && y_matches(seg.y_end(from), first.y_start) {
                runs.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            return Err(Error::NotClosed("cannot transport an open run".into()));
        }
        let mut segments = Vec::new();
        for run in runs {
            let xs: Vec<C64> = run.iter().map(|s| s.start).collect();
            let y0 = to.lift(xs[0], Some(run[0].y_start))?.y;
            let c = Cycle::from_polyline(to, &xs, y0, None)?;
            segments.extend(c.segments);
        }
        Ok(Cycle { segments, label: self.label.clone() })
    }

    /// Smallest distance from the polyline to any branch point.
    pub fn clearance(&self, curve: &HyperellipticCurve) -> f64 {
        let mut best = f64::MAX;
        for s in &self.segments {
            for &l in curve.branch_points() {
                best = best.min(point_segment_distance(l, s.start, s.end));
            }
        }
        best
    }
}

pub(crate) fn point_segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * s)).norm()
}

fn segment_segment_distance(a0: C64, a1: C64, b0: C64, b1: C64) -> f64 {
    if crossing(a0, a1, b0, b1).is_some() {
        return 0.0;
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Parameters `(s, u)` in `[0,1) x [0,1)` where the segments cross.
fn crossing(p0: C64, p1: C64, q0: C64, q1: C64) -> Option<(f64, f64)> {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let den = cross(d1, d2);
    if den.abs() <= 1e-300 {
        return None;
    }
    let w = q0 - p0;
    let s = cross(w, d2) / den;
    let u = cross(w, d1) / den;
    if (0.0..1.0).contains(&s) && (0.0..1.0).contains(&u) {
        Some((s, u))
    } else {
        None
    }
}

/// Boundary of a tube of radius `r` around the polyline `chain`, traversed
/// counterclockwise. Joins at interior vertices are arcs about the vertex.
fn tube(chain: &[C64], r: f64) -> Vec<C64> {
    const STEP: f64 = std::f64::consts::PI / 16.0;
    fn arc(out: &mut Vec<C64>, centre: C64, r: f64, from: f64, sweep: f64) {
        let n = ((sweep.abs() / STEP).ceil() as usize).max(1);
        for k in 0..=n {
            let th = from + sweep * k as f64 / n as f64;
            out.push(centre + C64::from_polar(r, th));
        }
    }
    fn wrap(a: f64) -> f64 {
        let t = std::f64::consts::TAU;
        let mut a = a % t;
        if a > std::f64::consts::PI {
            a -= t;
        }
        if a <= -std::f64::consts::PI {
            a += t;
        }
        a
    }
    let m = chain.len() - 1;
    let normals: Vec<f64> = (0..m)
        .map(|k| (chain[k + 1] - chain[k]).arg() + std::f64::consts::FRAC_PI_2)
        .collect();
    let mut pts = Vec::new();
    // Left side, forward.
    for k in 0..m {
        if k > 0 {
            arc(&mut pts, chain[k], r, normals[k - 1], wrap(normals[k] - normals[k - 1]));
        } else {
            pts.push(chain[0] + C64::from_polar(r, normals[0]));
        }
        pts.push(chain[k + 1] + C64::from_polar(r, normals[k]));
    }
    // Far cap, clockwise.
    arc(&mut pts, chain[m], r, normals[m - 1], -std::f64::consts::PI);
    // Right side, backward.
    for k in (0..m).rev() {
        let right = normals[k] + std::f64::consts::PI;
        if k + 1 < m {
            let prev = normals[k + 1] + std::f64::consts::PI;
            arc(&mut pts, chain[k + 1], r, prev, wrap(right - prev));
        }
        pts.push(chain[k] + C64::from_polar(r, right));
    }
    // Near cap, clockwise, back to the start.
    arc(&mut pts, chain[0], r, normals[0] + std::f64::consts::PI, -std::f64::consts::PI);
    pts.dedup_by(|a, b| (*a - *b).norm() < 1e-14 * (1.0 + a.norm()));
    if let (Some(first), Some(last)) = (pts.first().copied(), pts.last().copied()) {
        if (first - last).norm() < 1e-12 * (1.0 + first.norm()) {
            pts.pop();
        }
    }
    pts.reverse();
    pts
}

/// Base tube radius for the chain `lambda_1 -> ... -> lambda_{2g+1}`.
fn chain_clearance(curve: &HyperellipticCurve) -> Result<f64> {
    let l = curve.branch_points();
    let n = l.len();
    let mut base = curve.min_branch_separation();
    for i in 0..n - 1 {
        for (k, &p) in l.iter().enumerate() {
            if k == i || k == i + 1 {
                continue;
            }
            let d = point_segment_distance(p, l[i], l[i + 1]);
            if d <= 1e-6 * (1.0 + curve.max_modulus()) {
                return Err(Error::DegenerateChain(k));
            }
            base = base.min(d);
        }
        for j in i + 2..n - 1 {
            let d = segment_segment_distance(l[i], l[i + 1], l[j], l[j + 1]);
            if d <= 1e-6 * (1.0 + curve.max_modulus()) {
                return Err(Error::DegenerateChain(j));
            }
            base = base.min(d);
        }
    }
    Ok(base)
}

/// Standard basis with the default tube radii.
pub fn standard_basis(curve: &HyperellipticCurve) -> Result<Vec<Cycle>> {
    standard_basis_scaled(curve, 1.0)
}

/// Standard basis with all tube radii multiplied by `radius_scale`
/// (`0 < radius_scale <= 1.2`). Different scales give homotopic cycles
/// along different routes.
pub fn standard_basis_scaled(curve: &HyperellipticCurve, radius_scale: f64) -> Result<Vec<Cycle>> {
    let g = curve.genus();
    let base = chain_clearance(curve)? * radius_scale;
    let l = curve.branch_points();
    let mut cycles = Vec::with_capacity(2 * g);
    for j in 0..g {
        let xs = tube(&l[2 * j..2 * j + 2], 0.2 * base);
        let y0 = curve.lift(xs[0], None)?.y;
        cycles.push(Cycle::from_polyline(curve, &xs, y0, Some(format!("A{}", j + 1)))?);
    }
    for j in 0..g {
        let r = (0.26 + 0.12 * j as f64 / g as f64) * base;
        let xs = tube(&l[2 * j + 1..], r);
        let y0 = curve.lift(xs[0], None)?.y;
        let mut b = Cycle::from_polyline(curve, &xs, y0, Some(format!("B{}", j + 1)))?;
        if intersection(curve, &cycles[j], &b)? < 0 {
            b = b.reversed(curve);
            b.label = Some(format!("B{}", j + 1));
        }
        cycles.push(b);
    }
    Ok(cycles)
}

/// Algebraic intersection number from signed crossings of the x-plane
/// projections, counting only crossings where both cycles sit on the same
/// sheet. Sign `+1` when the second cycle crosses from right to left of
/// the first.
pub fn intersection(curve: &HyperellipticCurve, c1: &Cycle, c2: &Cycle) -> Result<i64> {
    c1.check_closed(curve)?;
    c2.check_closed(curve)?;
    let mut total = 0i64;
    for s1 in &c1.segments {
        let (lo1, hi1) = bbox(s1);
        for s2 in &c2.segments {
            let (lo2, hi2) = bbox(s2);
            if lo1.re > hi2.re || lo2.re > hi1.re || lo1.im > hi2.im || lo2.im > hi1.im {
                continue;
            }
            if let Some((s, u)) = crossing(s1.start, s1.end, s2.start, s2.end) {
                let x1 = s1.start + (s1.end - s1.start) * s;
                let x2 = s2.start + (s2.end - s2.start) * u;
                let y1 = curve.continue_y(s1.start, s1.y_start, x1);
                let y2 = curve.continue_y(s2.start, s2.y_start, x2);
                if (y1 - y2).norm() < (y1 + y2).norm() {
                    total += cross(s1.end - s1.start, s2.end - s2.start).signum() as i64;
                }
            }
        }
    }
    Ok(total)
}

fn bbox(s: &PathSegment) -> (C64, C64) {
    (
        C64::new(s.start.re.min(s.end.re), s.start.im.min(s.end.im)),
        C64::new(s.start.re.max(s.end.re), s.start.im.max(s.end.im)),
    )
}

/// Full intersection matrix of a list of cycles.
pub fn intersection_matrix(curve: &HyperellipticCurve, cycles: &[Cycle]) -> Result<Vec<Vec<i64>>> {
    let mut m = vec![vec![0; cycles.len()]; cycles.len()];
    for i in 0..cycles.len() {
        for j in i + 1..cycles.len() {
            let v = intersection(curve, &cycles[i], &cycles[j])?;
            m[i][j] = v;
            m[j][i] = -v;
        }
    }
    Ok(m)
}

/// Integer class of a cycle from its holomorphic periods: the unique `m`
/// with `periods(cycle) = sum m_k periods(basis_k)`, solved over the reals
/// and rounded.
pub fn class_of(curve: &HyperellipticCurve, cycle: &Cycle, table: &PeriodTable) -> Result<HomologyClass> {
    let hol = holomorphic_basis(curve);
    let v = period_vector(curve, &hol, cycle, &QuadTolerance::default())?;
    class_from_periods(&v.iter().map(|p| p.value).collect::<Vec<_>>(), table)
}

pub fn class_from_periods(periods: &[C64], table: &PeriodTable) -> Result<HomologyClass> {
    let g = table.genus();
    let lattice: DMatrix<f64> = table.real_lattice();
    let rhs = DVector::from_fn(2 * g, |row, _| {
        let p = periods[row / 2];
        if row % 2 == 0 { p.re } else { p.im }
    });
    let sol = lattice.clone().lu().solve(&rhs).ok_or(Error::LatticeResidualTooLarge(f64::INFINITY))?;
    let rounded = sol.map(|v| v.round());
    let scale = 1.0 + lattice.amax();
    let residual = (&lattice * &rounded - &rhs).amax() / scale;
    if !(residual < LATTICE_RESIDUAL_LIMIT) {
        return Err(Error::LatticeResidualTooLarge(residual));
    }
    Ok(HomologyClass { coeffs: rounded.iter().map(|&v| v as i64).collect() })
}

/// Class from intersection numbers with the standard basis:
/// `(c . B_j, -c . A_j)`.
pub fn class_from_intersections(curve: &HyperellipticCurve, cycle: &Cycle, basis: &[Cycle]) -> Result<HomologyClass> {
    let g = curve.genus();
    let mut coeffs = vec![0; 2 * g];
    for j in 0..g {
        coeffs[j] = intersection(curve, cycle, &basis[g + j])?;
        coeffs[g + j] = -intersection(curve, cycle, &basis[j])?;
    }
    Ok(HomologyClass { coeffs })
}
