//! Numerical probes of the isoperiodic foliation on the hyperelliptic
//! slice: the period Jacobian, walks along a leaf, the mean-value probe
//! for `f_0` and the action of positive scalars.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::HyperellipticCurve;
use crate::differential::SingularPart;
use crate::error::{Error, Result};
use crate::flow::integral::{critical_values, CriticalValueOptions, CriticalValues};
use crate::flow::zeros::{find_zeros, surface_distance, ZeroSet};
use crate::homology::{standard_basis, Cycle};
use crate::poly::C64;
use crate::rn::{solve_rn_with_basis, RNDifferential, SolveOptions};

/// Finite-difference step relative to the parameter scale.
pub const FD_STEP: f64 = 1e-6;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_THRESHOLD: f64 = 1e-6;
/// Largest period drift accepted after a correction.
pub const DRIFT_LIMIT: f64 = 1e-8;
/// Largest `|J t| / |t|` (relative to the Jacobian norm) for a kernel tangent.
pub const KERNEL_RESIDUAL: f64 = 1e-6;
/// Margin of the mean-value inequality.
pub const PROBE_MARGIN: f64 = 1e-6;

const MAX_CORRECTIONS: usize = 25;
/// Corrections continue below the drift limit until this is reached.
const CORRECTION_TARGET: f64 = 1e-11;

/// Real coordinates on the slice: movable branch points, then the
/// singular part. The first two branch points stay fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuliChart {
    pub genus: usize,
    pub n: usize,
    /// `(Re, Im)` of `lambda_3..`, then `(Re, Im)` of `r_1..r_n`.
    pub parameters: Vec<f64>,
    /// Values of the gauge-fixed branch points.
    pub frozen: [C64; 2],
}

impl ModuliChart {
    pub fn new(curve: &HyperellipticCurve, singular: &SingularPart) -> Self {
        let bp = curve.branch_points();
        let mut parameters = Vec::with_capacity(2 * (bp.len() - 2 + singular.n()));
        for z in bp[2..].iter().chain(&singular.r) {
            parameters.push(z.re);
            parameters.push(z.im);
        }
        ModuliChart { genus: curve.genus(), n: singular.n(), parameters, frozen: [bp[0], bp[1]] }
    }

    pub fn dim(&self) -> usize {
        self.parameters.len()
    }

    fn complex(&self, k: usize) -> C64 {
        C64::new(self.parameters[2 * k], self.parameters[2 * k + 1])
    }

    pub fn branch_points(&self) -> Vec<C64> {
        let movable = 2 * self.genus - 1;
        let mut bp = self.frozen.to_vec();
        bp.extend((0..movable).map(|k| self.complex(k)));
        bp
    }

    pub fn curve(&self) -> Result<HyperellipticCurve> {
        HyperellipticCurve::new(self.branch_points())
    }

    pub fn singular(&self) -> SingularPart {
        let movable = 2 * self.genus - 1;
        SingularPart::new((0..self.n).map(|j| self.complex(movable + j)).collect())
    }

    pub fn scale(&self) -> f64 {
        1.0 + self.parameters.iter().map(|p| p.abs()).fold(0.0, f64::max)
    }

    pub fn moved(&self, delta: &[f64], s: f64) -> ModuliChart {
        let mut out = self.clone();
        for (p, d) in out.parameters.iter_mut().zip(delta) {
            *p += s * d;
        }
        out
    }
}

/// Multiplication by `i` on every complex coordinate of the chart.
pub fn complex_structure(v: &[f64]) -> Vec<f64> {
    v.chunks(2).flat_map(|c| [-c[1], c[0]]).collect()
}

/// A point on a leaf together with its target periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafState {
    pub chart: ModuliChart,
    pub target_periods: Vec<f64>,
    pub drift: f64,
    /// Starting `y` of each basis cycle; keeps the sheets of the basis
    /// continuous while the branch points move.
    pub sheet_hints: Vec<C64>,
}

impl LeafState {
    pub fn new(rn: &RNDifferential) -> Self {
        LeafState {
            chart: ModuliChart::new(&rn.curve, &rn.singular),
            target_periods: rn.periods.clone(),
            drift: 0.0,
            sheet_hints: rn.basis.iter().map(|c| c.segments[0].y_start).collect(),
        }
    }

    pub fn genus(&self) -> usize {
        self.chart.genus
    }

    pub fn solve(&self) -> Result<RNDifferential> {
        evaluate(&self.chart, &self.sheet_hints)
    }
}

/// Standard basis of `curve` with each cycle started on the sheet closest
/// to the matching hint.
pub fn basis_near(curve: &HyperellipticCurve, hints: &[C64]) -> Result<Vec<Cycle>> {
    let basis = standard_basis(curve)?;
    if hints.is_empty() {
        return Ok(basis);
    }
    basis
        .iter()
        .zip(hints)
        .map(|(c, &h)| {
            let xs: Vec<C64> = c.segments.iter().map(|s| s.start).collect();
            let y0 = curve.lift(xs[0], Some(h))?.y;
            Cycle::from_polyline(curve, &xs, y0, c.label.clone())
        })
        .collect()
}

pub fn evaluate(chart: &ModuliChart, hints: &[C64]) -> Result<RNDifferential> {
    let curve = chart.curve()?;
    let basis = basis_near(&curve, hints)?;
    solve_rn_with_basis(&curve, &chart.singular(), &basis, SolveOptions::default())
}

pub fn period_map(chart: &ModuliChart, hints: &[C64]) -> Result<Vec<f64>> {
    Ok(evaluate(chart, hints)?.periods)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianReport {
    /// `2g` rows, one column per free parameter.
    pub matrix: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Orthonormal basis of the numerical kernel.
    pub kernel: Vec<Vec<f64>>,
    pub step: f64,
}

impl JacobianReport {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Minimum-norm solution of `J d = rhs` over the nonzero singular
    /// directions.
    pub fn min_norm_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = to_matrix(&self.matrix);
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let cut = RANK_THRESHOLD * self.sigma_max();
        let b = DVector::from_column_slice(rhs);
        let mut out = DVector::zeros(vt.ncols());
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > cut {
                let coef = u.column(k).dot(&b) / s;
                out += vt.row(k).transpose() * coef;
            }
        }
        out.iter().copied().collect()
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let ncols = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Numerical rank, sorted singular values and an orthonormal kernel basis.
pub fn numerical_rank(rows: &[Vec<f64>]) -> (usize, Vec<f64>, Vec<Vec<f64>>) {
    let m = to_matrix(rows);
    let (nr, nc) = m.shape();
    // Pad to square so that the full right singular basis is available.
    let size = nr.max(nc);
    let mut sq = DMatrix::zeros(size, nc);
    sq.view_mut((0, 0), (nr, nc)).copy_from(&m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = idx.iter().map(|&k| svd.singular_values[k]).collect();
    let cut = RANK_THRESHOLD * sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > cut).count();
    let kernel = idx[rank..].iter().map(|&k| vt.row(k).iter().copied().collect()).collect();
    (rank, sv[..nr.min(nc)].to_vec(), kernel)
}

/// Central-difference Jacobian of the `2g` real periods.
pub fn period_jacobian(state: &LeafState) -> Result<JacobianReport> {
    let chart = &state.chart;
    let h = FD_STEP * chart.scale();
    let dim = chart.dim();
    let columns: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            let plus = period_map(&chart.moved(&e, h), &state.sheet_hints)?;
            let minus = period_map(&chart.moved(&e, -h), &state.sheet_hints)?;
            Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        })
        .collect::<Result<_>>()?;
    let rows = 2 * chart.genus;
    let matrix: Vec<Vec<f64>> = (0..rows).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    let (rank, singular_values, kernel) = numerical_rank(&matrix);
    if chart.genus == 2 && rank < rows {
        return Err(Error::RankDeficient { rank, expected: rows });
    }
    Ok(JacobianReport { matrix, singular_values, rank, kernel, step: h })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gauss-Newton with a frozen Jacobian back onto the target periods.
pub fn correct(state: &LeafState, jac: &JacobianReport, chart: ModuliChart) -> Result<(LeafState, RNDifferential)> {
    let mut chart = chart;
    let mut last = f64::INFINITY;
    for _ in 0..MAX_CORRECTIONS {
        let rn = evaluate(&chart, &state.sheet_hints)?;
        let resid: Vec<f64> = rn.periods.iter().zip(&state.target_periods).map(|(p, t)| p - t).collect();
        let drift = resid.iter().map(|r| r.abs()).fold(0.0, f64::max);
        let stalled = !(drift < 0.5 * last);
        if drift < CORRECTION_TARGET || (stalled && drift < DRIFT_LIMIT) {
            let next = LeafState {
                chart,
                target_periods: state.target_periods.clone(),
                drift,
                sheet_hints: rn.basis.iter().map(|c| c.segments[0].y_start).collect(),
            };
            return Ok((next, rn));
        }
        if stalled && !(drift < last) {
            return Err(Error::CorrectionDiverged(drift));
        }
        last = drift;
        let d = jac.min_norm_solve(&resid);
        chart = chart.moved(&d, -1.0);
    }
    Err(Error::CorrectionDiverged(last))
}

/// Predictor along a kernel tangent, then correction to the target periods.
pub fn leaf_step(state: &LeafState, tangent: &[f64], step: f64) -> Result<LeafState> {
    if step == 0.0 {
        return Ok(state.clone());
    }
    let jac = period_jacobian(state)?;
    Ok(leaf_step_with(state, &jac, tangent, step)?.0)
}

pub fn leaf_step_with(
    state: &LeafState,
    jac: &JacobianReport,
    tangent: &[f64],
    step: f64,
) -> Result<(LeafState, RNDifferential)> {
    let tn = norm(tangent);
    let residual = norm(&jac.apply(tangent)) / (tn * jac.sigma_max().max(1.0));
    if !(residual < KERNEL_RESIDUAL) {
        return Err(Error::CorrectionDiverged(residual));
    }
    let predicted = state.chart.moved(tangent, step / tn);
    correct(state, jac, predicted)
}

/// Critical values of `rn`, with the zeros of `previous` matched to the
/// new ones so that paths and indices stay continuous.
pub fn matched_values(rn: &RNDifferential, previous: Option<&CriticalValues>) -> Result<CriticalValues> {
    let zeros = find_zeros(rn)?;
    let Some(prev) = previous else {
        return critical_values(rn, &zeros, &CriticalValueOptions::default());
    };
    let zeros = match_zeros(rn, prev, zeros)?;
    let opts = CriticalValueOptions { exclude_within: None, directions: Some(prev.directions.clone()) };
    critical_values(rn, &zeros, &opts)
}

fn match_zeros(rn: &RNDifferential, prev: &CriticalValues, zeros: ZeroSet) -> Result<ZeroSet> {
    if zeros.points.len() != prev.points.len() {
        return Err(Error::CountMismatch { found: zeros.points.len(), expected: prev.points.len() });
    }
    let mut taken = vec![false; zeros.points.len()];
    let mut points = Vec::with_capacity(zeros.points.len());
    for p in &prev.points {
        let best = (0..zeros.points.len())
            .filter(|&k| !taken[k])
            .min_by(|&a, &b| {
                let da = surface_distance(&rn.curve, &p.location, &zeros.points[a].location);
                let db = surface_distance(&rn.curve, &p.location, &zeros.points[b].location);
                da.total_cmp(&db)
            })
            .expect("counts agree");
        taken[best] = true;
        points.push(zeros.points[best].clone());
    }
    Ok(ZeroSet { points, ..zeros })
}

pub fn max_phi_change(a: &CriticalValues, b: &CriticalValues) -> f64 {
    a.points.iter().zip(&b.points).map(|(p, q)| (p.phi - q.phi).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub step: usize,
    pub state: LeafState,
    pub phi: Vec<C64>,
    pub directions: Vec<f64>,
    pub max_dphi: f64,
    pub tangent: Vec<f64>,
}

/// Walks `steps` times along the leaf. Each accepted step is passed to
/// `sink` (for checkpointing) before the next one starts.
pub fn leaf_walk<F>(start: &WalkStart, steps: usize, step_size: f64, mut sink: F) -> Result<Vec<WalkRecord>>
where
    F: FnMut(&WalkRecord) -> Result<()>,
{
    let mut state = start.state.clone();
    let rn = state.solve()?;
    let mut values = match &start.directions {
        Some(d) => {
            let zeros = find_zeros(&rn)?;
            critical_values(&rn, &zeros, &CriticalValueOptions { exclude_within: None, directions: Some(d.clone()) })?
        }
        None => matched_values(&rn, None)?,
    };
    let mut tangent = start.tangent.clone();
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let jac = period_jacobian(&state)?;
        let t = pick_tangent(&jac, tangent.as_deref())?;
        let (next, rn) = leaf_step_with(&state, &jac, &t, step_size * state.chart.scale())?;
        let new_values = matched_values(&rn, Some(&values))?;
        let rec = WalkRecord {
            step: start.step + k + 1,
            state: next.clone(),
            phi: new_values.points.iter().map(|p| p.phi).collect(),
            directions: new_values.directions.clone(),
            max_dphi: max_phi_change(&values, &new_values),
            tangent: t.clone(),
        };
        sink(&rec)?;
        out.push(rec);
        state = next;
        values = new_values;
        tangent = Some(t);
    }
    Ok(out)
}

/// Where a walk begins; built fresh or from the last checkpoint record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkStart {
    pub state: LeafState,
    pub step: usize,
    pub tangent: Option<Vec<f64>>,
    pub directions: Option<Vec<f64>>,
}

impl WalkStart {
    pub fn fresh(state: LeafState) -> Self {
        WalkStart { state, step: 0, tangent: None, directions: None }
    }

    pub fn resume(rec: &WalkRecord) -> Self {
        WalkStart {
            state: rec.state.clone(),
            step: rec.step,
            tangent: Some(rec.tangent.clone()),
            directions: Some(rec.directions.clone()),
        }
    }
}

/// Kernel vector closest to the previous tangent (or the first one).
fn pick_tangent(jac: &JacobianReport, previous: Option<&[f64]>) -> Result<Vec<f64>> {
    let Some(first) = jac.kernel.first() else {
        return Err(Error::RankDeficient { rank: jac.rank, expected: jac.rank });
    };
    let Some(prev) = previous else {
        return Ok(first.clone());
    };
    // Project the previous direction onto the new kernel.
    let mut t = vec![0.0; prev.len()];
    for k in &jac.kernel {
        let c: f64 = k.iter().zip(prev).map(|(a, b)| a * b).sum();
        for (ti, ki) in t.iter_mut().zip(k) {
            *ti += c * ki;
        }
    }
    let n = norm(&t);
    if n < 1e-3 {
        return Ok(first.clone());
    }
    Ok(t.iter().map(|x| x / n).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub radius: f64,
    pub center_f0: f64,
    pub circle_f0: Vec<f64>,
    pub mean_f0: f64,
    /// `mean - center`; the inequality holds when this is `>= -PROBE_MARGIN`.
    pub margin: f64,
    pub holds: bool,
    /// Whether the zero attaining `f_0` changes somewhere on the circle.
    pub reordered: bool,
    /// Distance of `J v` from the kernel, relative to `|v|`.
    pub complex_defect: f64,
    pub max_drift: f64,
}

/// Mean-value test of `f_0` over a circle in a complex line of the leaf.
pub fn subharmonic_probe(state: &LeafState, radius: f64, samples: usize) -> Result<ProbeReport> {
    let jac = period_jacobian(state)?;
    let Some(v) = jac.kernel.first().cloned() else {
        return Err(Error::NonGenericOnDisk("empty kernel".into()));
    };
    subharmonic_probe_along(state, &jac, &v, radius, samples)
}

/// Same as [`subharmonic_probe`] for a chosen kernel direction `v`.
pub fn subharmonic_probe_along(
    state: &LeafState,
    jac: &JacobianReport,
    v: &[f64],
    radius: f64,
    samples: usize,
) -> Result<ProbeReport> {
    let vn = norm(v);
    let v: Vec<f64> = v.iter().map(|x| x / vn).collect();
    let jv = complex_structure(&v);
    let mut w = vec![0.0; v.len()];
    for k in &jac.kernel {
        let c: f64 = k.iter().zip(&jv).map(|(a, b)| a * b).sum();
        for (wi, ki) in w.iter_mut().zip(k) {
            *wi += c * ki;
        }
    }
    let complex_defect = norm(&jv.iter().zip(&w).map(|(a, b)| a - b).collect::<Vec<_>>());
    let wn = norm(&w);
    let w: Vec<f64> = w.iter().map(|x| x / wn).collect();

    let rn = state.solve()?;
    let center = generic_values(&rn, None)?;
    let top = center.order[0];
    let rho = radius * state.chart.scale();
    let results: Vec<(f64, usize, f64)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / samples as f64;
            let dir: Vec<f64> = v.iter().zip(&w).map(|(a, b)| th.cos() * a + th.sin() * b).collect();
            let (s, rn) = correct(state, jac, state.chart.moved(&dir, rho))
                .map_err(|e| Error::NonGenericOnDisk(format!("sample {k}: {e}")))?;
            let vals = generic_values(&rn, Some(&center)).map_err(|e| Error::NonGenericOnDisk(format!("sample {k}: {e}")))?;
            Ok((vals.f0(), vals.order[0], s.drift))
        })
        .collect::<Result<_>>()?;
    let circle_f0: Vec<f64> = results.iter().map(|r| r.0).collect();
    let mean_f0 = circle_f0.iter().sum::<f64>() / samples as f64;
    let center_f0 = center.f0();
    let margin = mean_f0 - center_f0;
    Ok(ProbeReport {
        radius: rho,
        center_f0,
        circle_f0,
        mean_f0,
        margin,
        holds: margin >= -PROBE_MARGIN,
        reordered: results.iter().any(|r| r.1 != top),
        complex_defect,
        max_drift: results.iter().map(|r| r.2).fold(0.0, f64::max),
    })
}

fn generic_values(rn: &RNDifferential, previous: Option<&CriticalValues>) -> Result<CriticalValues> {
    let vals = matched_values(rn, previous)?;
    if vals.at_marked_point > 0 || vals.points.iter().any(|p| p.multiplicity > 1) {
        return Err(Error::NonGenericOnDisk("multiple zero or zero at the marked point".into()));
    }
    Ok(vals)
}

/// Mean-value statistics of an arbitrary function over a circle; used to
/// check the probe arithmetic on functions with known behaviour.
pub fn circle_mean<F: Fn(f64) -> f64>(f: F, samples: usize) -> f64 {
    (0..samples).map(|k| f(std::f64::consts::TAU * k as f64 / samples as f64)).sum::<f64>() / samples as f64
}

/// RN differential of `lambda` times the singular part, checked against
/// `lambda` times the original.
pub fn scale_action(rn: &RNDifferential, lambda: f64) -> Result<RNDifferential> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveLambda(lambda));
    }
    let scaled = solve_rn_with_basis(&rn.curve, &rn.singular.scaled(lambda), &rn.basis, SolveOptions::default())?;
    let expected = rn.expr.scale(C64::new(lambda, 0.0));
    let coeff_err = scaled.expr.distance(&expected) / (1.0 + expected.max_coeff());
    let target: Vec<f64> = rn.periods.iter().map(|p| lambda * p).collect();
    let period_scale = 1.0 + target.iter().map(|p| p.abs()).fold(0.0, f64::max);
    let period_err = max_abs_diff(&scaled.periods, &target) / period_scale;
    let err = coeff_err.max(period_err);
    if !(err < 1e-9) {
        return Err(Error::NotCertified(err));
    }
    Ok(scaled)
}
