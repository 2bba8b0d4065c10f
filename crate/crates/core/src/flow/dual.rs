//! Dual cycles: the two upward rays from a zero, joined near the marked
//! point, form a closed loop whose period is the difference of their
//! asymptotic real parts.

use serde::{Deserialize, Serialize};

use crate::curve::{InfinityChart, SurfacePoint};
use crate::error::{Error, Result};
use crate::flow::graph::SeparatrixGraph;
use crate::flow::integral::CriticalValues;
use crate::flow::ray::{RayDirection, RayTrace};
use crate::homology::{class_of, push_sheet_safe, Cycle, HomologyClass, PathSegment};
use crate::periods::path_integrals;
use crate::poly::C64;
use crate::quad::QuadTolerance;
use crate::rn::RNDifferential;

/// Dual periods below this are treated as zero.
pub const DUAL_PERIOD_ZERO: f64 = 1e-7;
const ARC_STEP: f64 = std::f64::consts::PI / 64.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCycle {
    pub zero: usize,
    /// Ray pair `(i, j)`, `i < j`, indices among the upward rays.
    pub rays: (usize, usize),
    pub cycle: Cycle,
    pub class: HomologyClass,
    /// `r^i - r^j`.
    pub period: f64,
    /// Direct contour integral of `Psi` over `cycle`.
    pub contour_period: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    pub cycles: Vec<DualCycle>,
    /// Zeros with at least one dual period above [`DUAL_PERIOD_ZERO`].
    pub s: Vec<usize>,
}

impl DualReport {
    pub fn s_count(&self) -> usize {
        self.s.len()
    }
}

/// Polyline through the ray points, from the zero outward.
fn ray_segments(rn: &RNDifferential, ray: &RayTrace, skip_first: bool) -> Vec<PathSegment> {
    let pts = if skip_first { &ray.points[1..] } else { &ray.points[..] };
    let mut out = Vec::with_capacity(pts.len());
    for w in pts.windows(2) {
        let mut segs = Vec::new();
        // Ray chords are sheet-safe by construction; this only re-splits
        // them if a tolerance edge case demands it.
        push_sheet_safe(&rn.curve, w[0].x, w[0].y, w[1].x, &mut segs).expect("ray chord avoids branch points");
        out.extend(segs);
    }
    out
}

fn reversed(rn: &RNDifferential, segs: &[PathSegment]) -> Vec<PathSegment> {
    segs.iter()
        .rev()
        .map(|s| PathSegment { start: s.end, end: s.start, y_start: s.y_end(&rn.curve) })
        .collect()
}

/// Path in the chart from `t1` to `t2`: radial to the smaller radius, then
/// the shorter arc, then radial.
fn chart_connector(rn: &RNDifferential, from: &SurfacePoint, t1: C64, t2: C64) -> Result<Vec<PathSegment>> {
    let r = t1.norm().min(t2.norm());
    let a1 = t1.arg();
    let mut da = t2.arg() - a1;
    while da > std::f64::consts::PI {
        da -= std::f64::consts::TAU;
    }
    while da < -std::f64::consts::PI {
        da += std::f64::consts::TAU;
    }
    let mut ts = vec![t1, C64::from_polar(r, a1)];
    let n = ((da.abs() / ARC_STEP).ceil() as usize).max(1);
    for k in 1..=n {
        ts.push(C64::from_polar(r, a1 + da * k as f64 / n as f64));
    }
    ts.push(t2);
    let mut segs = Vec::new();
    let mut y = from.y;
    let mut x = from.x;
    for t in ts.into_iter().skip(1) {
        let p = rn.curve.from_chart(&InfinityChart { t });
        if (p.x - x).norm() == 0.0 {
            continue;
        }
        y = push_sheet_safe(&rn.curve, x, y, p.x, &mut segs)?;
        x = p.x;
    }
    Ok(segs)
}

/// Full circle about branch point `i` through `x0`, starting on `y0`.
fn branch_circle(rn: &RNDifferential, i: usize, x0: C64, y0: C64) -> Result<Vec<PathSegment>> {
    let l = rn.curve.branch_points()[i];
    let v = x0 - l;
    let mut segs = Vec::new();
    let mut x = x0;
    let mut y = y0;
    let n = 64;
    for k in 1..=n {
        let xn = l + v * C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64);
        let xn = if k == n { x0 } else { xn };
        y = push_sheet_safe(&rn.curve, x, y, xn, &mut segs)?;
        x = xn;
    }
    Ok(segs)
}

/// The loop `ray_j` out, chart connector, `ray_i` back, so that its
/// period is `r^i - r^j`.
pub fn dual_loop(rn: &RNDifferential, zero_branch: Option<usize>, ray_i: &RayTrace, ray_j: &RayTrace) -> Result<Cycle> {
    let skip = zero_branch.is_some();
    let out_j = ray_segments(rn, ray_j, skip);
    let back_i = reversed(rn, &ray_segments(rn, ray_i, skip));
    let tj = ray_j.end_t.ok_or_else(|| Error::NonGenericConfiguration("ray did not reach the marked point".into()))?;
    let ti = ray_i.end_t.ok_or_else(|| Error::NonGenericConfiguration("ray did not reach the marked point".into()))?;
    let connector = chart_connector(rn, ray_j.last(), tj, ti)?;
    let mut segments = out_j;
    segments.extend(connector);
    // Land exactly on the last point of ray i.
    if let (Some(last), Some(first)) = (segments.last_mut(), back_i.first()) {
        last.end = first.start;
    }
    segments.extend(back_i);
    if let Some(i) = zero_branch {
        let start = ray_i.points[1];
        let end = ray_j.points[1];
        // From ray i's launch point around the branch point to ray j's.
        let mut circle = branch_circle(rn, i, start.x, start.y)?;
        if let Some(last) = circle.last_mut() {
            last.end = end.x;
        }
        segments.extend(circle);
    }
    let cycle = Cycle { segments, label: None };
    cycle.check_closed(&rn.curve)?;
    Ok(cycle)
}

pub fn dual_cycles(rn: &RNDifferential, graph: &SeparatrixGraph) -> Result<DualReport> {
    graph.require_generic()?;
    let mut cycles = Vec::new();
    let mut s = Vec::new();
    for (z, point) in graph.values.points.iter().enumerate() {
        let up: Vec<&RayTrace> = [0u8, 1]
            .iter()
            .filter_map(|&b| graph.ray(z, RayDirection { upward: true, branch: b }))
            .collect();
        let mut nonzero = false;
        for i in 0..up.len() {
            for j in i + 1..up.len() {
                let (ri, rj) = (up[i], up[j]);
                let period = ri.asymptotic_real.unwrap() - rj.asymptotic_real.unwrap();
                let cycle = dual_loop(rn, point.branch_index, ri, rj)?;
                let contour = path_integrals(&rn.curve, std::slice::from_ref(&rn.expr), &cycle.segments, &QuadTolerance::default())?[0].value;
                let class = class_of(&rn.curve, &cycle, &rn.table)?;
                nonzero |= period.abs() > DUAL_PERIOD_ZERO;
                cycles.push(DualCycle { zero: z, rays: (i, j), cycle, class, period, contour_period: contour });
            }
        }
        if nonzero {
            s.push(z);
        }
    }
    Ok(DualReport { cycles, s })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanReport {
    pub rank: usize,
    pub genus: usize,
    pub spans: bool,
}

/// Rank of an integer matrix by fraction-free elimination.
pub fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev: i128 = 1;
    for col in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][col] != 0) else { continue };
        m.swap(rank, piv);
        for r in rank + 1..m.len() {
            for c in col + 1..cols {
                m[r][c] = (m[rank][col] * m[r][c] - m[r][col] * m[rank][c]) / prev;
            }
            m[r][col] = 0;
        }
        prev = m[rank][col];
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

pub fn span_check(report: &DualReport, genus: usize) -> SpanReport {
    let rows: Vec<Vec<i64>> = report.cycles.iter().map(|c| c.class.coeffs.clone()).collect();
    let rank = integer_rank(&rows);
    SpanReport { rank, genus, spans: rank == 2 * genus }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedValue {
    pub zero: usize,
    /// Critical value renormalized over `S`.
    pub phi: C64,
    /// Smallest nonzero `|pi|` at the zero.
    pub min_period: f64,
    pub w: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedValues {
    /// Sorted by decreasing `Im w`.
    pub values: Vec<WeightedValue>,
}

impl WeightedValues {
    /// `g_0 >= g_1 >= ...`.
    pub fn g(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.w.im).collect()
    }
}

pub fn weighted_values(values: &CriticalValues, report: &DualReport) -> Result<WeightedValues> {
    if report.s.is_empty() {
        return Err(Error::EmptyS);
    }
    let pts = &values.points;
    let weight: usize = report.s.iter().map(|&z| pts[z].multiplicity).sum();
    let sum: C64 = report.s.iter().map(|&z| pts[z].phi * pts[z].multiplicity as f64).sum();
    let shift = -sum / weight as f64;
    let mut out: Vec<WeightedValue> = report
        .s
        .iter()
        .map(|&z| {
            let min_period = report
                .cycles
                .iter()
                .filter(|c| c.zero == z && c.period.abs() > DUAL_PERIOD_ZERO)
                .map(|c| c.period.abs())
                .fold(f64::MAX, f64::min);
            let phi = pts[z].phi + shift;
            WeightedValue { zero: z, phi, min_period, w: phi / min_period }
        })
        .collect();
    out.sort_by(|a, b| b.w.im.total_cmp(&a.w.im).then(a.w.re.total_cmp(&b.w.re)).then(a.zero.cmp(&b.zero)));
    Ok(WeightedValues { values: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::build_curve;
    use crate::differential::SingularPart;
    use crate::flow::graph::build_graph;
    use crate::rn::solve_rn;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn integer_rank_cases() {
        assert_eq!(integer_rank(&[vec![1, 0], vec![0, 1]]), 2);
        assert_eq!(integer_rank(&[vec![2, 4], vec![1, 2]]), 1);
        assert_eq!(integer_rank(&[vec![0, 0, 0]]), 0);
        assert_eq!(integer_rank(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]), 2);
    }

    #[test]
    fn genus_one_dual_cycles_span() {
        let curve = build_curve(&[c(-1.0, 0.1), c(0.2, -0.3), c(1.1, 0.2)]).unwrap();
        let rn = solve_rn(&curve, &SingularPart::new(vec![c(1.0, 0.4)])).unwrap();
        let g = build_graph(&rn).unwrap();
        let rep = dual_cycles(&rn, &g).unwrap();
        assert_eq!(rep.cycles.len(), 2);
        assert_eq!(rep.s_count(), 2);
        for d in &rep.cycles {
            assert!((d.contour_period - C64::new(d.period, 0.0)).norm() < 1e-7, "{} vs {}", d.contour_period, d.period);
        }
        assert!(span_check(&rep, 1).spans);
        let w = weighted_values(&g.values, &rep).unwrap();
        assert_eq!(w.values.len(), 2);
    }

    #[test]
    fn exact_has_empty_s() {
        let curve = build_curve(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let rn = solve_rn(&curve, &SingularPart::new(vec![c(0.0, 0.0), c(-2.0, 0.0)])).unwrap();
        let g = build_graph(&rn).unwrap();
        let rep = dual_cycles(&rn, &g).unwrap();
        assert_eq!(rep.s_count(), 0);
        for d in &rep.cycles {
            assert!(d.period.abs() < 1e-10 && d.contour_period.norm() < 1e-10);
        }
        // Each loop runs from a branch point to the marked point and back on
        // the other sheet: zero period, nontrivial class.
        assert_eq!(span_check(&rep, 1).rank, 2);
        assert_eq!(weighted_values(&g.values, &rep), Err(Error::EmptyS));
    }
}
