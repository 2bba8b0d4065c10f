//! Imaginary rays: integral curves of `dF/dtau = i sigma` from a zero.
//!
//! Each step predicts `x` from `dx/dtau = i sigma / psi`, then corrects it
//! with Newton's method so that the integral of `Psi` over the chord equals
//! `i sigma dtau` exactly (up to quadrature error). `Re F` is therefore
//! held fixed, and `y` is re-projected onto the curve after every step.

use serde::{Deserialize, Serialize};

use crate::curve::{SurfacePoint, SHEET_SAFE_SWEEP};
use crate::error::{Error, Result};
use crate::flow::integral::{branch_piece, far_radius, LocalPrimitive};
use crate::flow::zeros::{same_sheet, surface_distance};
use crate::flow::integral::CriticalValues;
use crate::periods::segment_integrals;
use crate::homology::PathSegment;
use crate::poly::{self, C64};
use crate::quad::QuadTolerance;
use crate::rn::RNDifferential;

pub const STEP_BUDGET: usize = 20_000;
/// Target `|dx|` as a fraction of the local scale.
const STEP_FRACTION: f64 = 0.1;
/// Launch distance as a fraction of the local scale at the zero.
const LAUNCH_FRACTION: f64 = 1e-5;
/// Capture radius as a fraction of the smallest zero separation.
const CAPTURE_FRACTION: f64 = 1e-4;
/// `|Re F - Re phi|` below which a captured zero counts as hit.
const HIT_TOLERANCE: f64 = 1e-6;

/// Which of the four rays leaving a simple zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RayDirection {
    pub upward: bool,
    /// `0` or `1`, the two square roots of the local model.
    pub branch: u8,
}

impl RayDirection {
    pub const ALL: [RayDirection; 4] = [
        RayDirection { upward: true, branch: 0 },
        RayDirection { upward: true, branch: 1 },
        RayDirection { upward: false, branch: 0 },
        RayDirection { upward: false, branch: 1 },
    ];

    pub fn sigma(&self) -> f64 {
        if self.upward { 1.0 } else { -1.0 }
    }

    pub fn index(&self) -> usize {
        (if self.upward { 0 } else { 2 }) + self.branch as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Terminal {
    /// Reached the marked point in the given asymptotic sector (even
    /// sectors are upward).
    ReachedMarkedPoint(usize),
    HitZero(usize),
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayTrace {
    pub zero: usize,
    pub direction: RayDirection,
    pub points: Vec<SurfacePoint>,
    /// Tracked `F` at each point.
    pub values: Vec<C64>,
    pub terminal: Terminal,
    /// `Re` of the chart branch of `F` at the end of the ray.
    pub asymptotic_real: Option<f64>,
    /// Chart coordinate of the last point, when it reached the marked point.
    pub end_t: Option<C64>,
    /// Accumulated `|Re|` of the Newton residuals.
    pub drift: f64,
    /// `|Im F_chart - Im F_tracked|` at the end.
    pub im_mismatch: f64,
}

impl RayTrace {
    pub fn reached_marked_point(&self) -> bool {
        matches!(self.terminal, Terminal::ReachedMarkedPoint(_))
    }

    pub fn last(&self) -> &SurfacePoint {
        self.points.last().expect("ray has points")
    }
}

/// Everything ray tracing needs about one differential.
pub struct FlowContext<'a> {
    pub rn: &'a RNDifferential,
    pub prim: LocalPrimitive,
    pub values: CriticalValues,
    /// Rays toward the marked point stop once `|Im F|` exceeds this.
    pub phi_threshold: f64,
    pub term_radius: f64,
    pub capture_radius: f64,
    /// Highest index with `r_k != 0` and that coefficient.
    pub pole_index: usize,
    pub leading: C64,
    pub quad: QuadTolerance,
}

impl<'a> FlowContext<'a> {
    pub fn new(rn: &'a RNDifferential, values: CriticalValues) -> Result<Self> {
        let curve = &rn.curve;
        let prim = LocalPrimitive::new(curve, &rn.expr)?;
        let max_zero = values
            .points
            .iter()
            .map(|p| p.location.x.norm())
            .filter(|&r| r < far_radius(curve))
            .fold(0.0, f64::max);
        let term_radius = curve.infinity_radius().max(2.0 * max_zero);
        let delta = term_radius.powf(-0.5);
        let shift = values.shift;
        let mut m: f64 = 0.0;
        for k in 0..256 {
            let t = C64::from_polar(delta, std::f64::consts::TAU * k as f64 / 256.0);
            m = m.max((prim.eval(t) + shift).im.abs());
        }
        let phi_threshold = 1.25 * m + 1.0;
        let mut sep = f64::MAX;
        for i in 0..values.points.len() {
            for j in i + 1..values.points.len() {
                sep = sep.min(surface_distance(curve, &values.points[i].location, &values.points[j].location));
            }
        }
        if sep == f64::MAX {
            sep = curve.min_branch_separation();
        }
        let pole_index = rn.singular.r.iter().rposition(|r| r.norm() != 0.0).map(|k| k + 1).unwrap_or(0);
        let leading = if pole_index > 0 { rn.singular.r[pole_index - 1] } else { C64::new(0.0, 0.0) };
        Ok(FlowContext {
            rn,
            prim,
            values,
            phi_threshold,
            term_radius,
            capture_radius: CAPTURE_FRACTION * sep,
            pole_index,
            leading,
            quad: QuadTolerance::default(),
        })
    }

    pub fn psi(&self, p: &SurfacePoint) -> C64 {
        self.rn.expr.psi(p.x, p.y)
    }

    /// Distance to the nearest branch point or zero on the same sheet,
    /// skipping zero `skip`.
    pub fn local_scale(&self, p: &SurfacePoint, skip: Option<usize>) -> f64 {
        let curve = &self.rn.curve;
        let own = skip.and_then(|k| self.values.points[k].branch_index);
        let mut d = curve
            .branch_points()
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != own)
            .map(|(_, &l)| (p.x - l).norm())
            .fold(f64::MAX, f64::min);
        for (k, z) in self.values.points.iter().enumerate() {
            if Some(k) == skip || z.branch_index.is_some() {
                continue;
            }
            if same_sheet(curve, p, &z.location) {
                d = d.min((p.x - z.location.x).norm());
            }
        }
        d
    }

    fn chord(&self, p0: &SurfacePoint, x1: C64) -> Result<(C64, SurfacePoint)> {
        let seg = PathSegment { start: p0.x, end: x1, y_start: p0.y };
        let (v, _) = segment_integrals(&self.rn.curve, std::slice::from_ref(&self.rn.expr), &seg, &self.quad)?;
        let y = self.rn.curve.continue_y(p0.x, p0.y, x1);
        let y = self.rn.curve.lift(x1, Some(y))?.y;
        Ok((v[0], SurfacePoint { x: x1, y }))
    }

    /// Asymptotic sector of a chart coordinate.
    pub fn sector(&self, t: C64) -> usize {
        let n = self.pole_index as f64;
        let raw = (n * t.arg() - (C64::i() * self.leading).arg()) / std::f64::consts::PI;
        let m = 2 * self.pole_index as i64;
        (raw.round() as i64).rem_euclid(m.max(1)) as usize
    }
}

/// Start point a short distance out along the chosen ray, with `F - phi`.
fn launch(ctx: &FlowContext, zero: usize, dir: RayDirection) -> Result<(SurfacePoint, C64)> {
    let curve = &ctx.rn.curve;
    let q = &ctx.values.points[zero];
    let sigma = dir.sigma();
    let scale = ctx.local_scale(&q.location, Some(zero));
    let sign = if dir.branch == 0 { 1.0 } else { -1.0 };
    match q.branch_index {
        Some(i) => {
            // F - phi ~ B(lambda) u^2 in x = lambda + u^2.
            let a = poly::eval(&ctx.rn.expr.b_coeffs, curve.branch_points()[i]);
            let rho_u = (LAUNCH_FRACTION * scale).sqrt();
            let s = a.norm() * rho_u * rho_u;
            let target = C64::new(0.0, sigma * s);
            let mut u = (target / a).sqrt() * sign;
            for _ in 0..30 {
                let (v, _) = branch_piece(curve, &ctx.rn.expr, i, u)?;
                let x = curve.branch_points()[i] + u * u;
                let psi_u = poly::eval(&ctx.rn.expr.a_coeffs, x) * 2.0 / curve.branch_h(i, x)
                    + u * poly::eval(&ctx.rn.expr.b_coeffs, x) * 2.0;
                let step = (v - target) / psi_u;
                u -= step;
                if step.norm() <= 1e-15 * u.norm() {
                    break;
                }
            }
            let (v, p) = branch_piece(curve, &ctx.rn.expr, i, u)?;
            Ok((p, v))
        }
        None => {
            let psi_prime = ctx.rn.expr.psi_derivative(curve, q.location.x, q.location.y);
            let a = psi_prime * 0.5;
            let rho = LAUNCH_FRACTION * scale;
            let s = a.norm() * rho * rho;
            let target = C64::new(0.0, sigma * s);
            let mut w = (target / a).sqrt() * sign;
            for _ in 0..30 {
                let (v, pw) = ctx.chord(&q.location, q.location.x + w)?;
                let step = (v - target) / ctx.psi(&pw);
                w -= step;
                if step.norm() <= 1e-15 * w.norm() {
                    break;
                }
            }
            let (v, pw) = ctx.chord(&q.location, q.location.x + w)?;
            Ok((pw, v))
        }
    }
}

/// One corrected step of size `dtau`; returns the new point and residual.
fn corrected_step(ctx: &FlowContext, p0: &SurfacePoint, sigma: f64, dtau: f64) -> Option<(SurfacePoint, C64)> {
    let curve = &ctx.rn.curve;
    let target = C64::new(0.0, sigma * dtau);
    let k1 = C64::new(0.0, sigma) / ctx.psi(p0);
    let xm = p0.x + k1 * (0.5 * dtau);
    if curve.arg_sweep(p0.x, xm) > SHEET_SAFE_SWEEP {
        return None;
    }
    let pm = SurfacePoint { x: xm, y: curve.continue_y(p0.x, p0.y, xm) };
    let k2 = C64::new(0.0, sigma) / ctx.psi(&pm);
    let mut x = p0.x + k2 * dtau;
    let mut best: Option<(SurfacePoint, C64)> = None;
    for _ in 0..8 {
        if curve.arg_sweep(p0.x, x) > SHEET_SAFE_SWEEP || !x.re.is_finite() || !x.im.is_finite() {
            return None;
        }
        let (v, p) = ctx.chord(p0, x).ok()?;
        let g = v - target;
        let done = g.norm() <= 1e-14 * (1.0 + dtau);
        x = p.x - g / ctx.psi(&p);
        best = Some((p, g));
        if done {
            break;
        }
    }
    let (p, g) = best?;
    if g.norm() > 1e-9 * (1.0 + dtau) {
        return None;
    }
    Some((p, g))
}

/// Continue a ray from `(start, value)` with `dF/dtau = i sigma`.
pub fn trace_from(
    ctx: &FlowContext,
    zero: usize,
    dir: RayDirection,
    start: SurfacePoint,
    value: C64,
) -> Result<RayTrace> {
    let curve = &ctx.rn.curve;
    let sigma = dir.sigma();
    let mut points = vec![start];
    let mut values = vec![value];
    let mut drift = 0.0;
    let mut p = start;
    let mut f = value;
    for _ in 0..STEP_BUDGET {
        // Arrived near the marked point?
        if p.x.norm() >= ctx.term_radius && sigma * f.im > ctx.phi_threshold {
            let t = curve.chart_of(&p).t;
            let chart = ctx.prim.eval(t) + ctx.values.shift;
            return Ok(RayTrace {
                zero,
                direction: dir,
                points,
                values,
                terminal: Terminal::ReachedMarkedPoint(ctx.sector(t)),
                asymptotic_real: Some(chart.re),
                end_t: Some(t),
                drift,
                im_mismatch: (chart.im - f.im).abs(),
            });
        }
        // Captured by another zero?
        for (k, z) in ctx.values.points.iter().enumerate() {
            if k == zero && (p.x - z.location.x).norm() < ctx.capture_radius {
                continue;
            }
            if k != zero
                && (p.x - z.location.x).norm() < ctx.capture_radius
                && same_sheet(curve, &p, &z.location)
                && (f.re - z.phi.re).abs() < HIT_TOLERANCE * (1.0 + z.phi.norm())
            {
                return Ok(RayTrace {
                    zero,
                    direction: dir,
                    points,
                    values,
                    terminal: Terminal::HitZero(k),
                    asymptotic_real: None,
                    end_t: None,
                    drift,
                    im_mismatch: 0.0,
                });
            }
        }
        let scale = ctx.local_scale(&p, None);
        if !(scale > 0.0) {
            return Err(Error::StiffnessFailure(format!("{} sits on a singular point", p.x)));
        }
        let psi = ctx.psi(&p);
        let mut dtau = STEP_FRACTION * scale * psi.norm();
        let (q, g) = loop {
            if let Some(r) = corrected_step(ctx, &p, sigma, dtau) {
                break r;
            }
            dtau *= 0.5;
            if dtau / psi.norm().max(1e-300) < 1e-14 * (1.0 + p.x.norm()) {
                return Err(Error::StiffnessFailure(format!("{}", p.x)));
            }
        };
        drift += g.re.abs();
        f += C64::new(0.0, sigma * dtau);
        p = q;
        points.push(p);
        values.push(f);
    }
    Ok(RayTrace {
        zero,
        direction: dir,
        points,
        values,
        terminal: Terminal::Budget,
        asymptotic_real: None,
        end_t: None,
        drift,
        im_mismatch: 0.0,
    })
}

pub fn trace_ray(ctx: &FlowContext, zero: usize, dir: RayDirection) -> Result<RayTrace> {
    let q = &ctx.values.points[zero];
    if q.multiplicity != 1 {
        return Err(Error::NonGenericConfiguration(format!("zero {zero} has multiplicity {}", q.multiplicity)));
    }
    let (start, dv) = launch(ctx, zero, dir)?;
    let mut tr = trace_from(ctx, zero, dir, start, q.phi + dv)?;
    tr.points.insert(0, q.location);
    tr.values.insert(0, q.phi);
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::build_curve;
    use crate::differential::SingularPart;
    use crate::flow::integral::{critical_values, CriticalValueOptions};
    use crate::flow::zeros::find_zeros;
    use crate::rn::solve_rn;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn context(rn: &RNDifferential) -> FlowContext<'_> {
        let z = find_zeros(rn).unwrap();
        let cv = critical_values(rn, &z, &CriticalValueOptions::default()).unwrap();
        FlowContext::new(rn, cv).unwrap()
    }

    #[test]
    fn genus_one_upward_rays_reach_marked_point() {
        let curve = build_curve(&[c(-1.0, 0.1), c(0.2, -0.3), c(1.1, 0.2)]).unwrap();
        let rn = solve_rn(&curve, &SingularPart::new(vec![c(1.0, 0.4)])).unwrap();
        let ctx = context(&rn);
        for z in 0..ctx.values.points.len() {
            for dir in RayDirection::ALL {
                let tr = trace_ray(&ctx, z, dir).unwrap();
                assert!(tr.reached_marked_point(), "{z} {dir:?} {:?}", tr.terminal);
                assert!(tr.drift < 1e-7, "drift {}", tr.drift);
                assert!(tr.im_mismatch < 1e-7, "{}", tr.im_mismatch);
                if let Terminal::ReachedMarkedPoint(s) = tr.terminal {
                    assert_eq!(s % 2 == 0, dir.upward);
                }
                let re0 = tr.values[0].re;
                assert!(tr.values.iter().all(|v| (v.re - re0).abs() < 1e-7));
            }
        }
    }

    #[test]
    fn dx_rays_are_vertical_lines() {
        let curve = build_curve(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let rn = solve_rn(&curve, &SingularPart::new(vec![c(0.0, 0.0), c(-2.0, 0.0)])).unwrap();
        let ctx = context(&rn);
        for z in 0..3 {
            let tr = trace_ray(&ctx, z, RayDirection { upward: true, branch: 0 }).unwrap();
            assert!(tr.reached_marked_point());
            let x0 = ctx.values.points[z].location.x;
            for p in &tr.points {
                assert!((p.x.re - x0.re).abs() < 1e-7, "{} vs {}", p.x, x0);
            }
        }
    }
}
