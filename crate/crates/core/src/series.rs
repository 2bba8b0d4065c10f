//! Truncated power series in one variable.

use crate::poly::C64;

/// `p^alpha` truncated to `len` coefficients, for a series with `p[0] = 1`.
///
/// Uses the recurrence obtained from `q' p = alpha p' q`:
/// `k q_k = sum_{j=1..k} ((alpha + 1) j - k) p_j q_{k-j}`.
pub fn pow(p: &[C64], alpha: f64, len: usize) -> Vec<C64> {
    assert!((p[0] - C64::new(1.0, 0.0)).norm() < 1e-14, "series must start with 1");
    let mut q = vec![C64::new(0.0, 0.0); len];
    if len == 0 {
        return q;
    }
    q[0] = C64::new(1.0, 0.0);
    for k in 1..len {
        let mut acc = C64::new(0.0, 0.0);
        for j in 1..=k.min(p.len() - 1) {
            acc += p[j] * q[k - j] * ((alpha + 1.0) * j as f64 - k as f64);
        }
        q[k] = acc / k as f64;
    }
    q
}

pub fn mul(a: &[C64], b: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// A Laurent series `sum_k coeffs[k] t^(lowest + k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laurent {
    pub lowest: i32,
    pub coeffs: Vec<C64>,
}

impl Laurent {
    pub fn zero(lowest: i32, len: usize) -> Self {
        Laurent { lowest, coeffs: vec![C64::new(0.0, 0.0); len] }
    }

    /// Coefficient of `t^power`, zero outside the stored range.
    pub fn coeff(&self, power: i32) -> C64 {
        let idx = power - self.lowest;
        if idx < 0 {
            return C64::new(0.0, 0.0);
        }
        self.coeffs.get(idx as usize).copied().unwrap_or_default()
    }

    pub fn highest(&self) -> i32 {
        self.lowest + self.coeffs.len() as i32 - 1
    }

    pub fn add_term(&mut self, power: i32, value: C64) {
        let idx = power - self.lowest;
        if idx >= 0 && (idx as usize) < self.coeffs.len() {
            self.coeffs[idx as usize] += value;
        }
    }

    pub fn eval(&self, t: C64) -> C64 {
        let body = self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * t + c);
        body * t.powi(self.lowest)
    }

    /// Lowest power carrying a coefficient larger than `tol` in modulus.
    pub fn order(&self, tol: f64) -> Option<i32> {
        self.coeffs
            .iter()
            .position(|c| c.norm() > tol)
            .map(|k| self.lowest + k as i32)
    }

    /// Term-by-term antiderivative with zero constant term. The `t^-1`
    /// coefficient must vanish.
    pub fn antiderivative(&self) -> Laurent {
        let mut out = Laurent::zero(self.lowest + 1, self.coeffs.len());
        for (k, &c) in self.coeffs.iter().enumerate() {
            let power = self.lowest + k as i32;
            if power == -1 {
                continue;
            }
            out.coeffs[k] = c / (power + 1) as f64;
        }
        out
    }
}
