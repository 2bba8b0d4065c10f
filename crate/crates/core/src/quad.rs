//! Globally adaptive Gauss-Kronrod (7/15) quadrature of vector-valued
//! complex integrands on the unit interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::C64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadTolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        QuadTolerance { abs: 1e-12, rel: 1e-13, max_intervals: 4000 }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<C64>,
    err: f64,
}

fn gk15<F: FnMut(f64, &mut [C64])>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [C64]) -> Panel {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = vec![C64::new(0.0, 0.0); dim];
    let mut gauss = vec![C64::new(0.0, 0.0); dim];
    f(centre, buf);
    for k in 0..dim {
        kron[k] += buf[k] * WGK[7];
        gauss[k] += buf[k] * WG[3];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        for sign in [-1.0, 1.0] {
            f(centre + sign * dx, buf);
            for k in 0..dim {
                kron[k] += buf[k] * WGK[j];
                if j % 2 == 1 {
                    gauss[k] += buf[k] * WG[j / 2];
                }
            }
        }
    }
    let mut err: f64 = 0.0;
    for k in 0..dim {
        kron[k] *= half;
        gauss[k] *= half;
        err = err.max((kron[k] - gauss[k]).norm());
    }
    Panel { a, b, value: kron, err }
}

/// Integrate `f` over `[0, 1]`. The closure writes the `dim` integrand
/// components at the given parameter into the output slice. Returns the
/// integral and the summed error estimate (max over components).
pub fn integrate<F: FnMut(f64, &mut [C64])>(mut f: F, dim: usize, tol: &QuadTolerance) -> Result<(Vec<C64>, f64)> {
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    let mut panels = vec![gk15(&mut f, 0.0, 1.0, dim, &mut buf)];
    loop {
        let mut total = vec![C64::new(0.0, 0.0); dim];
        let mut err = 0.0;
        for p in &panels {
            for k in 0..dim {
                total[k] += p.value[k];
            }
            err += p.err;
        }
        let scale = total.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if err <= tol.abs.max(tol.rel * scale) {
            return Ok((total, err));
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::QuadratureFailure(err));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::QuadratureFailure(err));
        }
        panels.push(gk15(&mut f, p.a, mid, dim, &mut buf));
        panels.push(gk15(&mut f, mid, p.b, dim, &mut buf));
    }
}
