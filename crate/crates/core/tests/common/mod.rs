#![allow(dead_code)]

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use realnorm::curve::HyperellipticCurve;
use realnorm::differential::SingularPart;
use realnorm::rn::{solve_rn, RNDifferential};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Arithmetic-geometric mean of positive reals.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        let (na, nb) = (0.5 * (a + b), (a * b).sqrt());
        a = na;
        b = nb;
    }
    a
}

/// Complete elliptic integrals `(K(k), E(k))` by the AGM with the
/// Gauss correction sum for `E`.
pub fn elliptic_ke(k: f64) -> (f64, f64) {
    let (mut a, mut b) = (1.0f64, (1.0 - k * k).sqrt());
    let mut cn = k;
    let mut sum = 0.5 * cn * cn;
    let mut pow = 0.5;
    for _ in 0..64 {
        if cn.abs() < 1e-17 {
            break;
        }
        let (na, nb) = (0.5 * (a + b), (a * b).sqrt());
        cn = 0.5 * (a - b);
        a = na;
        b = nb;
        pow *= 2.0;
        sum += pow * cn * cn;
    }
    let kk = std::f64::consts::PI / (2.0 * a);
    (kk, kk * (1.0 - sum))
}

/// Lemniscate constant `pi / agm(1, sqrt 2)`.
pub fn lemniscate() -> f64 {
    std::f64::consts::PI / agm(1.0, 2f64.sqrt())
}

/// Closed forms for `y^2 = (x - e1)(x - e2)(x - e3)` with real
/// `e1 > e2 > e3`.
pub struct EllipticOracle {
    /// `int_{e3}^{e2} dx / |y|`.
    pub real_half: f64,
    /// `int_{e2}^{e1} dx / |y|`.
    pub imag_half: f64,
    /// RN coefficient `c` in `(-x/2 + c) dx / y`.
    pub rn_c: f64,
    /// `|period|` of the RN differential over the cycle around `[e3, e2]`.
    pub rn_a_period: f64,
}

pub fn elliptic_oracle(e1: f64, e2: f64, e3: f64) -> EllipticOracle {
    let s = (e1 + e2 + e3) / 3.0;
    let (e1, e2, e3) = (e1 - s, e2 - s, e3 - s);
    let m = e1 - e3;
    let k = ((e2 - e3) / m).sqrt();
    let kp = ((e1 - e2) / m).sqrt();
    let (kk, ek) = elliptic_ke(k);
    let (kkp, _) = elliptic_ke(kp);
    // Weierstrass half periods for 4x^3 - g2 x - g3 with the same roots.
    let w1 = kk / m.sqrt();
    let w2 = kkp / m.sqrt();
    let eta1 = m.sqrt() * ek - e1 * w1;
    // Legendre: eta1 w2 - eta2 w1 = pi i / 2 with w2 -> i w2.
    let c0 = -eta1 / (2.0 * w1) + std::f64::consts::PI / (4.0 * w1 * w2);
    let rn_c = c0 + s / 2.0;
    EllipticOracle { real_half: 2.0 * w1, imag_half: 2.0 * w2, rn_c, rn_a_period: (2.0 * eta1 + 4.0 * c0 * w1).abs() }
}

/// Branch points in angular order on a jittered circle, so the chain
/// used by the homology basis never folds back on itself.
pub fn random_branch_points(r: &mut ChaCha8Rng, genus: usize) -> Vec<C64> {
    let count = 2 * genus + 1;
    let radius: f64 = r.gen_range(0.8..1.6);
    let center = c(r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5));
    let phase: f64 = r.gen_range(0.0..std::f64::consts::TAU);
    (0..count)
        .map(|k| {
            let th = phase + std::f64::consts::TAU * (k as f64 + r.gen_range(-0.25..0.25)) / count as f64;
            center + C64::from_polar(radius * r.gen_range(0.75..1.25), th)
        })
        .collect()
}

pub fn random_singular(r: &mut ChaCha8Rng, n: usize) -> SingularPart {
    SingularPart::new(
        (0..n)
            .map(|k| {
                let z = C64::from_polar(r.gen_range(0.4..1.5), r.gen_range(0.0..std::f64::consts::TAU));
                if k + 1 == n { z } else { z * 0.7 }
            })
            .collect(),
    )
}

/// A solved sample; retries with fresh draws on a degenerate draw.
pub fn random_rn(r: &mut ChaCha8Rng, genus: usize, n: usize) -> RNDifferential {
    for _ in 0..50 {
        let bp = random_branch_points(r, genus);
        let sp = random_singular(r, n);
        let Ok(curve) = HyperellipticCurve::new(bp) else { continue };
        if curve.min_branch_separation() < 0.3 {
            continue;
        }
        if let Ok(rn) = solve_rn(&curve, &sp) {
            return rn;
        }
    }
    panic!("no admissible sample");
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(f64::abs).fold(0.0, f64::max)
}
