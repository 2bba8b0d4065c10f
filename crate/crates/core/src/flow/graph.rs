//! The separatrix graph: downward rays from the zeros, read as edges
//! running from the marked point to the zeros, and the jump of the
//! single-valued branch of `F` across each edge.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::SurfacePoint;
use crate::error::{Error, Result};
use crate::flow::integral::{critical_values, CriticalValueOptions, CriticalValues};
use crate::flow::ray::{trace_from, trace_ray, FlowContext, RayDirection, RayTrace, Terminal};
use crate::flow::zeros::{find_zeros, ZeroSet};
use crate::poly::C64;
use crate::rn::RNDifferential;

/// Offset of the jump probes as a fraction of the local scale.
const JUMP_OFFSET: f64 = 1e-4;
/// Positions (as fractions of the point list) where jumps are sampled.
const JUMP_SAMPLES: [f64; 3] = [0.3, 0.5, 0.7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Index into [`SeparatrixGraph::rays`].
    pub ray: usize,
    pub zero: usize,
    /// `F+ - F-` at each sample point (`+` on the left of the ray).
    pub jump_samples: Vec<C64>,
    pub jump: C64,
    /// Spread of the samples.
    pub jump_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Saddle {
    pub zero: usize,
    pub direction: RayDirection,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixGraph {
    pub zeros: ZeroSet,
    pub values: CriticalValues,
    /// All traced rays, ordered by `(zero, direction index)`.
    pub rays: Vec<RayTrace>,
    pub edges: Vec<Edge>,
    /// Zero indices of each connected component of the graph with the
    /// marked point removed.
    pub components: Vec<Vec<usize>>,
    pub generic: bool,
    pub saddles: Vec<Saddle>,
    pub reason: Option<String>,
}

impl SeparatrixGraph {
    pub fn require_generic(&self) -> Result<&Self> {
        if self.generic {
            Ok(self)
        } else {
            Err(Error::NonGenericConfiguration(self.reason.clone().unwrap_or_default()))
        }
    }

    pub fn ray(&self, zero: usize, dir: RayDirection) -> Option<&RayTrace> {
        self.rays.iter().find(|r| r.zero == zero && r.direction == dir)
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, a: usize) -> usize {
        let mut r = a;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut a = a;
        while self.0[a] != r {
            let next = self.0[a];
            self.0[a] = r;
            a = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn jump_at(ctx: &FlowContext, ray: &RayTrace, k: usize) -> Result<C64> {
    let p = ray.points[k];
    let tangent = ray.points[k + 1].x - ray.points[k - 1].x;
    let normal = C64::i() * tangent / tangent.norm();
    let delta = JUMP_OFFSET * ctx.local_scale(&p, None);
    let mut sides = [C64::new(0.0, 0.0); 2];
    for (side, sign) in [1.0, -1.0].into_iter().enumerate() {
        let x = p.x + normal * (delta * sign);
        let (dv, q) = crate::flow::integral::increment(ctx.rn, &p, &[x])?;
        let up = RayDirection { upward: true, branch: 0 };
        let tr = trace_from(ctx, ray.zero, up, SurfacePoint { x: q.x, y: q.y }, ray.values[k] + dv)?;
        let r = match (tr.terminal, tr.asymptotic_real) {
            (Terminal::ReachedMarkedPoint(_), Some(r)) => r,
            (t, _) => {
                return Err(Error::NonGenericConfiguration(format!(
                    "jump probe beside the ray from zero {} ended with {t:?}",
                    ray.zero
                )))
            }
        };
        sides[side] = C64::new(r, (ray.values[k] + dv).im) - dv;
    }
    Ok(sides[0] - sides[1])
}

pub fn build_graph(rn: &RNDifferential) -> Result<SeparatrixGraph> {
    let zeros = find_zeros(rn)?;
    let values = critical_values(rn, &zeros, &CriticalValueOptions::default())?;
    build_graph_with(rn, zeros, values)
}

pub fn build_graph_with(rn: &RNDifferential, zeros: ZeroSet, values: CriticalValues) -> Result<SeparatrixGraph> {
    let ctx = FlowContext::new(rn, values.clone())?;
    let nz = values.points.len();
    let mut reason = None;
    if zeros.at_marked_point > 0 {
        reason = Some(format!("{} zeros sit at the marked point", zeros.at_marked_point));
    }
    let simple: Vec<usize> = (0..nz).filter(|&k| values.points[k].multiplicity == 1).collect();
    if simple.len() != nz {
        reason = Some("multiple zero".to_string());
    }
    let jobs: Vec<(usize, RayDirection)> =
        simple.iter().flat_map(|&z| RayDirection::ALL.into_iter().map(move |d| (z, d))).collect();
    let rays: Vec<RayTrace> = jobs.par_iter().map(|&(z, d)| trace_ray(&ctx, z, d)).collect::<Result<_>>()?;

    let mut uf = UnionFind((0..nz).collect());
    let mut saddles = Vec::new();
    for r in &rays {
        match r.terminal {
            Terminal::HitZero(t) => {
                uf.union(r.zero, t);
                saddles.push(Saddle { zero: r.zero, direction: r.direction, target: t });
            }
            Terminal::Budget => {
                reason.get_or_insert_with(|| format!("ray from zero {} exhausted its step budget", r.zero));
            }
            Terminal::ReachedMarkedPoint(_) => {}
        }
    }
    if !saddles.is_empty() {
        reason.get_or_insert_with(|| format!("{} saddle connections", saddles.len()));
    }
    let generic = reason.is_none();

    let edge_rays: Vec<usize> = (0..rays.len())
        .filter(|&i| !rays[i].direction.upward && rays[i].reached_marked_point())
        .collect();
    let edges: Vec<Edge> = if generic {
        edge_rays
            .par_iter()
            .map(|&i| {
                let ray = &rays[i];
                let len = ray.points.len();
                let mut samples = Vec::with_capacity(JUMP_SAMPLES.len());
                for frac in JUMP_SAMPLES {
                    let k = ((len as f64 * frac) as usize).clamp(1, len - 2);
                    samples.push(jump_at(&ctx, ray, k)?);
                }
                let jump = samples[samples.len() / 2];
                let spread = samples.iter().map(|s| (s - jump).norm()).fold(0.0, f64::max);
                Ok(Edge { ray: i, zero: ray.zero, jump_samples: samples, jump, jump_spread: spread })
            })
            .collect::<Result<_>>()?
    } else {
        edge_rays
            .iter()
            .map(|&i| Edge { ray: i, zero: rays[i].zero, jump_samples: Vec::new(), jump: C64::new(0.0, 0.0), jump_spread: 0.0 })
            .collect()
    };

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of = std::collections::BTreeMap::new();
    for z in 0..nz {
        let r = uf.find(z);
        let slot = *root_of.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(z);
    }
    Ok(SeparatrixGraph { zeros, values, rays, edges, components: groups, generic, saddles, reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::build_curve;
    use crate::differential::SingularPart;
    use crate::rn::solve_rn;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn genus_one_graph() {
        let curve = build_curve(&[c(-1.0, 0.1), c(0.2, -0.3), c(1.1, 0.2)]).unwrap();
        let rn = solve_rn(&curve, &SingularPart::new(vec![c(1.0, 0.4)])).unwrap();
        let g = build_graph(&rn).unwrap();
        assert!(g.generic, "{:?}", g.reason);
        assert_eq!(g.components.len(), 2);
        assert_eq!(g.edges.len(), 4);
        for e in &g.edges {
            assert!(e.jump_spread < 1e-7, "{}", e.jump_spread);
            assert!(e.jump.im.abs() < 1e-7);
        }
    }

    #[test]
    fn exact_graph_has_no_jumps() {
        let curve = build_curve(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let rn = solve_rn(&curve, &SingularPart::new(vec![c(0.0, 0.0), c(-2.0, 0.0)])).unwrap();
        let g = build_graph(&rn).unwrap();
        assert!(g.generic);
        for e in &g.edges {
            assert!(e.jump.norm() < 1e-8, "{}", e.jump);
        }
    }
}
