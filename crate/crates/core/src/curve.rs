//! Odd-model hyperelliptic curves `y^2 = prod (x - lambda_i)` with the
//! marked point at infinity.
//!
//! Sheets are never tracked with a global cut system. A point carries its
//! `y`, and every path continues `y` by continuity along short straight
//! pieces (see [`HyperellipticCurve::continue_y`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{self, C64};

/// Relative distance below which two branch points are considered equal.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;

/// Largest total argument sweep of `f` tolerated along one straight piece.
/// Keeps `sqrt(f(x)/f(x0))` on its principal branch.
pub const SHEET_SAFE_SWEEP: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperellipticCurve {
    branch_points: Vec<C64>,
    genus: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x: C64,
    pub y: C64,
}

/// Local coordinate `t` at the marked point: `x = t^-2`,
/// `y = t^-(2g+1) s(t)` with `s(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfinityChart {
    pub t: C64,
}

pub fn build_curve(branch_points: &[C64]) -> Result<HyperellipticCurve> {
    HyperellipticCurve::new(branch_points.to_vec())
}

impl HyperellipticCurve {
    pub fn new(branch_points: Vec<C64>) -> Result<Self> {
        let count = branch_points.len();
        if count < 3 || count % 2 == 0 {
            return Err(Error::EvenCount(count));
        }
        let scale = 1.0 + branch_points.iter().map(|l| l.norm()).fold(0.0, f64::max);
        for i in 0..count {
            for j in i + 1..count {
                if (branch_points[i] - branch_points[j]).norm() <= DUPLICATE_TOLERANCE * scale {
                    return Err(Error::DuplicateBranchPoint(i, j));
                }
            }
        }
        Ok(HyperellipticCurve { branch_points, genus: (count - 1) / 2 })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn branch_points(&self) -> &[C64] {
        &self.branch_points
    }

    /// Monic coefficients of `f`, lowest degree first.
    pub fn f_coeffs(&self) -> Vec<C64> {
        poly::from_roots(&self.branch_points)
    }

    pub fn f(&self, x: C64) -> C64 {
        self.branch_points.iter().map(|&l| x - l).product()
    }

    pub fn f_prime(&self, x: C64) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for i in 0..self.branch_points.len() {
            let mut term = C64::new(1.0, 0.0);
            for (j, &l) in self.branch_points.iter().enumerate() {
                if j != i {
                    term *= x - l;
                }
            }
            total += term;
        }
        total
    }

    pub fn max_modulus(&self) -> f64 {
        self.branch_points.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }

    /// Radius beyond which points are represented in the infinity chart.
    pub fn infinity_radius(&self) -> f64 {
        4.0 * self.max_modulus() + 4.0
    }

    pub fn nearest_branch_point(&self, x: C64) -> (usize, f64) {
        self.branch_points
            .iter()
            .enumerate()
            .map(|(i, &l)| (i, (x - l).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("curve has branch points")
    }

    pub fn min_branch_separation(&self) -> f64 {
        let mut best = f64::MAX;
        for i in 0..self.branch_points.len() {
            for j in i + 1..self.branch_points.len() {
                best = best.min((self.branch_points[i] - self.branch_points[j]).norm());
            }
        }
        best
    }

    /// Sum over branch points of the angle the segment `[x0, x1]` subtends.
    pub fn arg_sweep(&self, x0: C64, x1: C64) -> f64 {
        self.branch_points
            .iter()
            .map(|&l| ((x1 - l) / (x0 - l)).arg().abs())
            .sum()
    }

    /// `y` at `x1` continued from `(x0, y0)` along the straight segment.
    /// Valid when the segment is sheet-safe.
    pub fn continue_y(&self, x0: C64, y0: C64, x1: C64) -> C64 {
        let ratio: C64 = self.branch_points.iter().map(|&l| (x1 - l) / (x0 - l)).product();
        y0 * ratio.sqrt()
    }

    /// Lift `x` to the curve. With a hint the branch nearest the hint is
    /// returned; without one, the principal square root of `f(x)`
    /// (`Re y > 0`, or `Re y = 0` and `Im y >= 0`).
    pub fn lift(&self, x: C64, sheet_hint: Option<C64>) -> Result<SurfacePoint> {
        let (_, d) = self.nearest_branch_point(x);
        if d <= DUPLICATE_TOLERANCE * (1.0 + self.max_modulus()) {
            return Err(Error::AtBranchPoint(format!("{x}")));
        }
        let y = self.f(x).sqrt();
        let y = match sheet_hint {
            Some(h) if (y - h).norm() > (-y - h).norm() => -y,
            _ => y,
        };
        Ok(SurfacePoint { x, y })
    }

    /// `|y^2 - f(x)| / (1 + |f(x)|)`.
    pub fn residual(&self, p: &SurfacePoint) -> f64 {
        let fx = self.f(p.x);
        (p.y * p.y - fx).norm() / (1.0 + fx.norm())
    }

    /// `s(t) = prod sqrt(1 - lambda_i t^2)`, analytic for
    /// `|t|^2 max|lambda| < 1` with `s(0) = 1`.
    pub fn s_of_t(&self, t: C64) -> C64 {
        let t2 = t * t;
        self.branch_points
            .iter()
            .map(|&l| (C64::new(1.0, 0.0) - l * t2).sqrt())
            .product()
    }

    pub fn to_infinity_chart(&self, p: &SurfacePoint) -> Result<InfinityChart> {
        let r = self.infinity_radius();
        if p.x.norm() < r {
            return Err(Error::NotNearInfinity(p.x.norm(), r));
        }
        Ok(self.chart_of(p))
    }

    /// Chart coordinate without the radius check; the caller guarantees the
    /// series for `s(t)` converges (`|x| > max|lambda|`).
    pub fn chart_of(&self, p: &SurfacePoint) -> InfinityChart {
        let t0 = (C64::new(1.0, 0.0) / p.x).sqrt();
        let expected = self.s_of_t(t0);
        let got = p.y * t0.powi(2 * self.genus as i32 + 1);
        let t = if (got - expected).norm() <= (got + expected).norm() { t0 } else { -t0 };
        InfinityChart { t }
    }

    pub fn from_chart(&self, chart: &InfinityChart) -> SurfacePoint {
        let t = chart.t;
        let x = C64::new(1.0, 0.0) / (t * t);
        let y = self.s_of_t(t) / t.powi(2 * self.genus as i32 + 1);
        SurfacePoint { x, y }
    }

    /// `h(x) = sqrt(prod_{k != i} (x - lambda_k))` near branch point `i`,
    /// normalized so `h(lambda_i)` is the principal root. Then
    /// `y = u h(x)` with `x = lambda_i + u^2` is a local uniformization.
    pub fn branch_h(&self, i: usize, x: C64) -> C64 {
        let li = self.branch_points[i];
        let base: C64 = self
            .branch_points
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, &l)| li - l)
            .product();
        let ratio: C64 = self
            .branch_points
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, &l)| ((x - l) / (li - l)).sqrt())
            .product();
        base.sqrt() * ratio
    }
}
