//! Dense complex polynomials, coefficients stored lowest degree first.

use num_complex::Complex64;

pub type C64 = Complex64;

pub fn eval(coeffs: &[C64], x: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Value and first derivative in one Horner pass.
pub fn eval_with_derivative(coeffs: &[C64], x: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

pub fn derivative(coeffs: &[C64]) -> Vec<C64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// Antiderivative with zero constant term.
pub fn antiderivative(coeffs: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(coeffs.len() + 1);
    out.push(C64::new(0.0, 0.0));
    for (k, &c) in coeffs.iter().enumerate() {
        out.push(c / (k + 1) as f64);
    }
    out
}

pub fn mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

pub fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or_default() + b.get(k).copied().unwrap_or_default())
        .collect()
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or_default() - b.get(k).copied().unwrap_or_default())
        .collect()
}

pub fn scale(a: &[C64], s: C64) -> Vec<C64> {
    a.iter().map(|&c| c * s).collect()
}

/// Drop trailing exact zeros.
pub fn trim(mut a: Vec<C64>) -> Vec<C64> {
    while matches!(a.last(), Some(c) if *c == C64::new(0.0, 0.0)) {
        a.pop();
    }
    a
}

/// Monic polynomial with the given roots.
pub fn from_roots(roots: &[C64]) -> Vec<C64> {
    roots.iter().fold(vec![C64::new(1.0, 0.0)], |acc, &r| {
        mul(&acc, &[-r, C64::new(1.0, 0.0)])
    })
}

/// Initial approximations from the upper convex hull of (k, log|a_k|).
///
/// Each hull edge of horizontal length m contributes m points on a circle
/// whose radius is read off the slope. This places starting points on the
/// right scale even when root moduli differ by many orders of magnitude.
fn newton_polygon_start(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len() - 1;
    let pts: Vec<(f64, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| (k as f64, c.norm().ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // Keep only strictly concave turns.
            if (x2 - x1) * (p.1 - y1) - (y2 - y1) * (p.0 - x1) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(n);
    let sigma = 0.7;
    for w in hull.windows(2) {
        let (k0, y0) = w[0];
        let (k1, y1) = w[1];
        let m = (k1 - k0) as usize;
        let radius = ((y0 - y1) / (k1 - k0)).exp();
        for j in 0..m {
            let theta = std::f64::consts::TAU * (j as f64) / (m as f64)
                + std::f64::consts::TAU * (k0 / n as f64)
                + sigma;
            out.push(C64::from_polar(radius, theta));
        }
    }
    out
}

/// All complex roots of a polynomial with nonzero leading coefficient, by
/// simultaneous Aberth iteration followed by Newton polishing. Leading
/// coefficient zeros must be trimmed by the caller; zero roots (a_0 = 0)
/// are handled.
pub fn roots(coeffs: &[C64]) -> Vec<C64> {
    let coeffs = trim(coeffs.to_vec());
    if coeffs.len() <= 1 {
        return Vec::new();
    }
    // Factor out roots at zero exactly.
    let lead_zeros = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let core = &coeffs[lead_zeros..];
    let mut out = vec![C64::new(0.0, 0.0); lead_zeros];
    let n = core.len() - 1;
    if n == 0 {
        return out;
    }
    if n == 1 {
        out.push(-core[0] / core[1]);
        return out;
    }
    let mut z = newton_polygon_start(core);
    let dcore = derivative(core);
    let mut converged = vec![false; n];
    for _ in 0..500 {
        let mut all = true;
        for k in 0..n {
            if converged[k] {
                continue;
            }
            let (p, dp) = eval_with_derivative(core, z[k]);
            if p.norm() == 0.0 {
                converged[k] = true;
                continue;
            }
            let ratio = p / dp;
            let mut s = C64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    s += C64::new(1.0, 0.0) / (z[k] - z[j]);
                }
            }
            let w = ratio / (C64::new(1.0, 0.0) - ratio * s);
            z[k] -= w;
            if w.norm() <= 1e-15 * z[k].norm().max(f64::MIN_POSITIVE) {
                converged[k] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    // A couple of Newton polishing steps; harmless for clustered roots
    // because the step is rejected when it increases |p|.
    for zk in z.iter_mut() {
        for _ in 0..3 {
            let p = eval(core, *zk);
            let dp = eval(&dcore, *zk);
            if dp.norm() == 0.0 {
                break;
            }
            let cand = *zk - p / dp;
            if eval(core, cand).norm() < p.norm() {
                *zk = cand;
            } else {
                break;
            }
        }
    }
    out.extend(z);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn horner_matches_naive() {
        let p = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.25, -1.0)];
        let x = c(0.3, -0.7);
        let naive = p[0] + p[1] * x + p[2] * x * x;
        assert!((eval(&p, x) - naive).norm() < 1e-15);
        let (v, d) = eval_with_derivative(&p, x);
        assert!((v - naive).norm() < 1e-15);
        assert!((d - (p[1] + p[2] * x * 2.0)).norm() < 1e-15);
    }

    #[test]
    fn roots_of_known_polynomial() {
        let rs = vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.5, 2.0), c(-3.0, -1.0)];
        let p = from_roots(&rs);
        let got = sorted(roots(&p));
        let want = sorted(rs);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn roots_across_many_magnitudes() {
        let rs = vec![c(1e12, 0.0), c(1.0, 1.0), c(-2.0, 0.5), c(3e-3, 0.0)];
        let p = from_roots(&rs);
        let got = roots(&p);
        for w in &rs {
            let best = got.iter().map(|g| (g - w).norm() / w.norm()).fold(f64::MAX, f64::min);
            assert!(best < 1e-9, "missing root {w}: {got:?}");
        }
    }

    #[test]
    fn double_root_is_found_twice() {
        let p = from_roots(&[c(2.0, 1.0), c(2.0, 1.0), c(-1.0, 0.0)]);
        let got = roots(&p);
        let near = got.iter().filter(|g| (*g - c(2.0, 1.0)).norm() < 1e-6).count();
        assert_eq!(near, 2);
    }
}
