//! Deterministic SVG plots: the `x`-plane on the left, the chart disk at
//! the marked point on the right.

use std::fmt::Write;

use crate::curve::HyperellipticCurve;
use crate::flow::graph::SeparatrixGraph;
use crate::flow::integral::LocalPrimitive;
use crate::poly::C64;

const WIDTH: f64 = 1000.0;
const HEIGHT: f64 = 500.0;
const PANEL: f64 = 460.0;
const MARGIN: f64 = 20.0;
const GRID: usize = 160;
const SHEET_COLORS: [&str; 2] = ["#1f5fbf", "#c0392b"];

/// Everything drawn in one plot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scene {
    pub branch_points: Vec<C64>,
    /// Zero location and its `f`.
    pub zeros: Vec<(C64, f64)>,
    /// Ray points with the sheet index of each point.
    pub rays: Vec<Vec<(C64, usize)>>,
    /// Rays in the chart coordinate `t`.
    pub chart_rays: Vec<Vec<C64>>,
    /// Level curves `Phi = h` in the chart disk, as line segments.
    pub contours: Vec<(f64, Vec<(C64, C64)>)>,
    /// Radius of the chart disk.
    pub chart_radius: f64,
}

/// 0 on the principal sheet, 1 on the other.
pub fn sheet_index(curve: &HyperellipticCurve, x: C64, y: C64) -> usize {
    let p = curve.f(x).sqrt();
    usize::from((y - p).norm() > (y + p).norm())
}

impl Scene {
    pub fn skeleton(curve: &HyperellipticCurve) -> Scene {
        Scene { branch_points: curve.branch_points().to_vec(), chart_radius: 1.0, ..Scene::default() }
    }

    pub fn from_graph(curve: &HyperellipticCurve, graph: &SeparatrixGraph, prim: &LocalPrimitive, contours: &[f64]) -> Scene {
        let mut scene = Scene::skeleton(curve);
        scene.zeros = graph.values.points.iter().map(|p| (p.location.x, p.f)).collect();
        let delta = curve.infinity_radius().powf(-0.5);
        scene.chart_radius = delta;
        for ray in &graph.rays {
            scene.rays.push(ray.points.iter().map(|p| (p.x, sheet_index(curve, p.x, p.y))).collect());
            let t: Vec<C64> = ray
                .points
                .iter()
                .filter(|p| p.x.norm() > 1.0 / (delta * delta))
                .map(|p| curve.chart_of(p).t)
                .collect();
            if t.len() > 1 {
                scene.chart_rays.push(t);
            }
        }
        let shift = graph.values.shift;
        for &h in contours {
            scene.contours.push((h, level_segments(|t| (prim.eval(t) + shift).im, delta, h)));
        }
        scene
    }
}

/// Marching squares for `phi = h` on a square grid over the disk `|t| < r`.
pub fn level_segments<F: Fn(C64) -> f64>(phi: F, r: f64, h: f64) -> Vec<(C64, C64)> {
    let step = 2.0 * r / GRID as f64;
    let at = |i: usize, j: usize| C64::new(-r + i as f64 * step, -r + j as f64 * step);
    let vals: Vec<Vec<f64>> = (0..=GRID)
        .map(|i| (0..=GRID).map(|j| if at(i, j).norm() < step { f64::NAN } else { phi(at(i, j)) - h }).collect())
        .collect();
    let mut out = Vec::new();
    for i in 0..GRID {
        for j in 0..GRID {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            if corners.iter().any(|&(a, b)| at(a, b).norm() > r || vals[a][b].is_nan()) {
                continue;
            }
            let mut cut = Vec::with_capacity(4);
            for k in 0..4 {
                let (a, b) = corners[k];
                let (c, d) = corners[(k + 1) % 4];
                let (va, vc) = (vals[a][b], vals[c][d]);
                if (va > 0.0) != (vc > 0.0) {
                    let s = va / (va - vc);
                    cut.push(at(a, b) + (at(c, d) - at(a, b)) * s);
                }
            }
            for pair in cut.chunks_exact(2) {
                out.push((pair[0], pair[1]));
            }
        }
    }
    out
}

/// Connected components of `{phi > h}` on a polar grid of the punctured
/// disk `0 < |t| < r`.
pub fn superlevel_components<F: Fn(C64) -> f64>(phi: F, r: f64, h: f64, radial: usize, angular: usize) -> usize {
    let inside: Vec<Vec<bool>> = (0..radial)
        .map(|a| {
            let rho = r * (a as f64 + 0.5) / radial as f64;
            (0..angular)
                .map(|b| phi(C64::from_polar(rho, std::f64::consts::TAU * b as f64 / angular as f64)) > h)
                .collect()
        })
        .collect();
    let mut seen = vec![vec![false; angular]; radial];
    let mut count = 0;
    for a0 in 0..radial {
        for b0 in 0..angular {
            if !inside[a0][b0] || seen[a0][b0] {
                continue;
            }
            count += 1;
            let mut stack = vec![(a0, b0)];
            seen[a0][b0] = true;
            while let Some((a, b)) = stack.pop() {
                let mut next = vec![(a, (b + 1) % angular), (a, (b + angular - 1) % angular)];
                if a > 0 {
                    next.push((a - 1, b));
                }
                if a + 1 < radial {
                    next.push((a + 1, b));
                }
                for (c, d) in next {
                    if inside[c][d] && !seen[c][d] {
                        seen[c][d] = true;
                        stack.push((c, d));
                    }
                }
            }
        }
    }
    count
}

struct View {
    center: C64,
    half: f64,
    left: f64,
}

impl View {
    fn map(&self, z: C64) -> (f64, f64) {
        let s = PANEL / (2.0 * self.half);
        let u = self.left + PANEL / 2.0 + (z.re - self.center.re) * s;
        let v = MARGIN + PANEL / 2.0 - (z.im - self.center.im) * s;
        (u, v)
    }

    fn contains(&self, z: C64) -> bool {
        (z.re - self.center.re).abs() <= self.half && (z.im - self.center.im).abs() <= self.half
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".into() } else { s }
}

fn polyline(out: &mut String, pts: &[(f64, f64)], color: &str, width: f64) {
    if pts.len() < 2 {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|&(u, v)| format!("{},{}", num(u), num(v))).collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
        coords.join(" ")
    );
}

fn x_view(scene: &Scene) -> View {
    let mut pts: Vec<C64> = scene.branch_points.clone();
    pts.extend(scene.zeros.iter().map(|z| z.0));
    let (mut lo, mut hi) = (C64::new(f64::MAX, f64::MAX), C64::new(f64::MIN, f64::MIN));
    for p in &pts {
        lo = C64::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = C64::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    let center = (lo + hi) * 0.5;
    let half = 0.5 * (hi.re - lo.re).max(hi.im - lo.im) * 1.6 + 0.5;
    View { center, half, left: MARGIN }
}

/// Identical scenes give byte-identical documents.
pub fn render_svg(scene: &Scene) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let xv = x_view(scene);
    let tv = View { center: C64::new(0.0, 0.0), half: scene.chart_radius, left: 2.0 * MARGIN + PANEL };
    for v in [&xv, &tv] {
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{MARGIN}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#999999"/>"##,
            v.left
        );
    }
    let (cu, cv) = tv.map(C64::new(0.0, 0.0));
    let rr = PANEL / 2.0;
    let _ = writeln!(out, r##"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="#cccccc"/>"##, num(cu), num(cv), num(rr));

    for ray in &scene.rays {
        let mut run: Vec<(f64, f64)> = Vec::new();
        let mut sheet = None;
        for &(x, s) in ray {
            if !xv.contains(x) || sheet.is_some_and(|k| k != s) {
                if let Some(k) = sheet {
                    polyline(&mut out, &run, SHEET_COLORS[k], 1.0);
                }
                run.clear();
                sheet = None;
                if !xv.contains(x) {
                    continue;
                }
            }
            sheet = Some(s);
            run.push(xv.map(x));
        }
        if let Some(k) = sheet {
            polyline(&mut out, &run, SHEET_COLORS[k], 1.0);
        }
    }
    for ray in &scene.chart_rays {
        let pts: Vec<(f64, f64)> = ray.iter().filter(|t| tv.contains(**t)).map(|&t| tv.map(t)).collect();
        polyline(&mut out, &pts, "#555555", 1.0);
    }
    for (h, segs) in &scene.contours {
        let _ = writeln!(out, r##"<g stroke="#2e8b57" stroke-width="0.8" data-h="{}">"##, num(*h));
        for (a, b) in segs {
            let (p, q) = (tv.map(*a), tv.map(*b));
            let _ = writeln!(out, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, num(p.0), num(p.1), num(q.0), num(q.1));
        }
        let _ = writeln!(out, "</g>");
    }
    for &b in &scene.branch_points {
        let (u, v) = xv.map(b);
        let _ = writeln!(
            out,
            r##"<path d="M{} {} L{} {} M{} {} L{} {}" stroke="#000000" stroke-width="1.5"/>"##,
            num(u - 5.0),
            num(v - 5.0),
            num(u + 5.0),
            num(v + 5.0),
            num(u - 5.0),
            num(v + 5.0),
            num(u + 5.0),
            num(v - 5.0)
        );
    }
    for &(z, f) in &scene.zeros {
        let (u, v) = xv.map(z);
        let _ = writeln!(out, r##"<circle cx="{}" cy="{}" r="3.5" fill="#e67e22"/>"##, num(u), num(v));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="10">f={}</text>"#,
            num(u + 6.0),
            num(v - 6.0),
            format!("{f:.4}")
        );
    }
    out.push_str("</svg>\n");
    out
}
