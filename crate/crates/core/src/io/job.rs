//! JSON job files, result documents and leaf-walk checkpoints.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::curve::HyperellipticCurve;
use crate::differential::SingularPart;
use crate::error::{Error, Result};
use crate::flow::dual::{dual_cycles, span_check, weighted_values};
use crate::flow::graph::{build_graph_with, SeparatrixGraph};
use crate::flow::integral::{critical_values, CriticalValueOptions, LocalPrimitive};
use crate::flow::zeros::find_zeros;
use crate::homology::standard_basis;
use crate::io::svg::{render_svg, Scene};
use crate::leaf::{leaf_walk, period_jacobian, subharmonic_probe_along, LeafState, WalkRecord, WalkStart};
use crate::periods::period_matrix_with_basis;
use crate::poly::C64;
use crate::quad::QuadTolerance;
use crate::rn::{is_exact, solve_rn_with_options, RNDifferential, SolveOptions};

pub const SCHEMA: &str = "realnorm/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Periods,
    Rn,
    Zeros,
    Rays,
    Graph,
    Dual,
    Span,
    Weighted,
    Leafwalk,
    Probe,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Periods => "periods",
            Command::Rn => "rn",
            Command::Zeros => "zeros",
            Command::Rays => "rays",
            Command::Graph => "graph",
            Command::Dual => "dual",
            Command::Span => "span",
            Command::Weighted => "weighted",
            Command::Leafwalk => "leafwalk",
            Command::Probe => "probe",
        }
    }

    pub fn draws(self) -> bool {
        matches!(self, Command::Zeros | Command::Rays | Command::Graph)
    }
}

/// A real number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexInput {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexInput {
    pub fn value(self) -> C64 {
        match self {
            ComplexInput::Real(r) => C64::new(r, 0.0),
            ComplexInput::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub quad_abs: Option<f64>,
    pub quad_rel: Option<f64>,
    /// Chart radius of the finite-value normalization.
    pub exclude_within: Option<f64>,
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("quad_abs", self.quad_abs), ("quad_rel", self.quad_rel), ("exclude_within", self.exclude_within)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::SchemaError(format!("tolerance {name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn quad(&self) -> QuadTolerance {
        let d = QuadTolerance::default();
        QuadTolerance { abs: self.quad_abs.unwrap_or(d.abs), rel: self.quad_rel.unwrap_or(d.rel), ..d }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkOptions {
    pub steps: usize,
    /// Step length relative to the parameter scale.
    pub step_size: f64,
}

impl Default for WalkOptions {
    fn default() -> Self {
        WalkOptions { steps: 10, step_size: 2e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeOptions {
    pub radius: f64,
    pub samples: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { radius: 1e-3, samples: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub schema: String,
    pub command: Command,
    /// Branch points.
    pub curve: Vec<ComplexInput>,
    #[serde(default)]
    pub singular: Vec<ComplexInput>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub walk: WalkOptions,
    #[serde(default)]
    pub probe: ProbeOptions,
    /// Levels `h` of `Phi` drawn in the chart disk.
    #[serde(default)]
    pub contours: Vec<f64>,
    /// Output directory; the command line takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl JobSpec {
    pub fn parse(text: &str) -> Result<JobSpec> {
        let job: JobSpec = serde_json::from_str(text).map_err(|e| Error::SchemaError(e.to_string()))?;
        job.validate()?;
        Ok(job)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::SchemaError(format!("unknown schema {:?}, expected {SCHEMA:?}", self.schema)));
        }
        self.tolerances.validate()?;
        if !(self.walk.step_size > 0.0 && self.walk.step_size.is_finite()) {
            return Err(Error::SchemaError("walk.step_size must be positive".into()));
        }
        if !(self.probe.radius > 0.0 && self.probe.radius.is_finite()) || self.probe.samples == 0 {
            return Err(Error::SchemaError("probe radius and samples must be positive".into()));
        }
        if self.command != Command::Periods && self.singular.is_empty() {
            return Err(Error::SchemaError("singular part is required".into()));
        }
        Ok(())
    }

    fn curve(&self) -> Result<HyperellipticCurve> {
        HyperellipticCurve::new(self.curve.iter().map(|c| c.value()).collect())
    }

    fn singular(&self) -> SingularPart {
        SingularPart::new(self.singular.iter().map(|c| c.value()).collect())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// What a run leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub json_path: PathBuf,
    pub svg_path: Option<PathBuf>,
    pub error: Option<(String, String)>,
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() { 2 } else { 1 }
}

struct Produced {
    result: Value,
    svg: Option<String>,
}

/// Runs one job read from `input` and writes `<command>.json` (always) and
/// `<command>.svg` (for drawing commands) into `out`.
pub fn run_file(input: &Path, out: Option<&Path>, tol: Option<f64>, seed: Option<u64>, svg: bool) -> Outcome {
    let bytes = fs::read(input);
    let (text, hash) = match &bytes {
        Ok(b) => (String::from_utf8_lossy(b).into_owned(), sha256_hex(b)),
        Err(_) => (String::new(), sha256_hex(b"")),
    };
    let parsed = match bytes {
        Ok(_) => JobSpec::parse(&text),
        Err(e) => Err(Error::Io(format!("{}: {e}", input.display()))),
    };
    let fallback = input.parent().map(Path::to_path_buf).unwrap_or_default();
    match parsed {
        Ok(mut job) => {
            if let Some(t) = tol {
                job.tolerances.quad_abs = Some(t);
                job.tolerances.quad_rel = Some(t);
            }
            if let Some(s) = seed {
                job.seed = s;
            }
            let dir = out.map(Path::to_path_buf).or_else(|| job.out.clone()).unwrap_or(fallback);
            run(&job, &hash, &dir, svg)
        }
        Err(e) => {
            let dir = out.map(Path::to_path_buf).unwrap_or(fallback);
            let doc = header("invalid", &hash, &Tolerances::default(), seed.unwrap_or(0));
            finish(doc, Err(e), &dir.join("invalid.json"), None)
        }
    }
}

fn header(command: &str, hash: &str, tol: &Tolerances, seed: u64) -> serde_json::Map<String, Value> {
    let mut doc = serde_json::Map::new();
    doc.insert("schema".into(), json!(SCHEMA));
    doc.insert("tool".into(), json!("realnorm"));
    doc.insert("version".into(), json!(VERSION));
    doc.insert("command".into(), json!(command));
    doc.insert("input_sha256".into(), json!(hash));
    doc.insert("tolerances".into(), json!(tol));
    doc.insert("seed".into(), json!(seed));
    doc
}

fn finish(mut doc: serde_json::Map<String, Value>, produced: Result<Produced>, json_path: &Path, svg_path: Option<PathBuf>) -> Outcome {
    let (code, error, svg_written) = match produced {
        Ok(p) => {
            doc.insert("status".into(), json!("ok"));
            doc.insert("result".into(), p.result);
            let written = match (svg_path, p.svg) {
                (Some(path), Some(text)) => fs::write(&path, text).ok().map(|_| path),
                _ => None,
            };
            (0, None, written)
        }
        Err(e) => {
            doc.insert("status".into(), json!("error"));
            doc.insert("error".into(), json!({ "name": e.name(), "message": e.to_string() }));
            (exit_code(&e), Some((e.name().to_string(), e.to_string())), None)
        }
    };
    if let Some(parent) = json_path.parent() {
        let _ = fs::create_dir_all(parent);
    }
    let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json values serialize");
    let code = match fs::write(json_path, text + "\n") {
        Ok(()) => code,
        Err(_) => 1,
    };
    Outcome { exit_code: code, json_path: json_path.to_path_buf(), svg_path: svg_written, error }
}

pub fn run(job: &JobSpec, input_hash: &str, out: &Path, svg: bool) -> Outcome {
    let name = job.command.name();
    let _ = fs::create_dir_all(out);
    let doc = header(name, input_hash, &job.tolerances, job.seed);
    let produced = produce(job, input_hash, out, svg && job.command.draws());
    let svg_path = (svg && job.command.draws()).then(|| out.join(format!("{name}.svg")));
    finish(doc, produced, &out.join(format!("{name}.json")), svg_path)
}

fn solve(job: &JobSpec, curve: &HyperellipticCurve) -> Result<RNDifferential> {
    let opts = SolveOptions { allow_zero: false, quad: Some(job.tolerances.quad()) };
    solve_rn_with_options(curve, &job.singular(), opts)
}

fn value_opts(job: &JobSpec) -> CriticalValueOptions {
    CriticalValueOptions { exclude_within: job.tolerances.exclude_within, directions: None }
}

fn graph_of(job: &JobSpec, rn: &RNDifferential) -> Result<SeparatrixGraph> {
    let zeros = find_zeros(rn)?;
    let values = critical_values(rn, &zeros, &value_opts(job))?;
    build_graph_with(rn, zeros, values)
}

fn produce(job: &JobSpec, hash: &str, out: &Path, draw: bool) -> Result<Produced> {
    let curve = job.curve()?;
    if job.command == Command::Periods {
        let basis = standard_basis(&curve)?;
        let table = period_matrix_with_basis(&curve, &basis, &job.tolerances.quad())?;
        let periods: Vec<Vec<C64>> = table.periods.iter().map(|row| row.iter().map(|p| p.value).collect()).collect();
        let result = json!({
            "genus": curve.genus(),
            "periods": periods,
            "tau": table.tau,
            "im_tau_min_eigenvalue": table.im_tau_min_eigenvalue,
            "symmetry_defect": table.symmetry_defect,
        });
        return Ok(Produced { result, svg: None });
    }
    let rn = solve(job, &curve)?;
    match job.command {
        Command::Periods => unreachable!(),
        Command::Rn => {
            let exact = is_exact(&rn);
            Ok(Produced {
                result: json!({
                    "genus": rn.genus(),
                    "n": rn.n(),
                    "a_coeffs": rn.expr.a_coeffs,
                    "b_coeffs": rn.expr.b_coeffs,
                    "holomorphic_coeffs": rn.holomorphic_coeffs,
                    "periods": rn.periods,
                    "certificate": rn.certificate,
                    "condition_number": rn.condition_number,
                    "exact": exact,
                }),
                svg: None,
            })
        }
        Command::Zeros => {
            let zeros = find_zeros(&rn)?;
            let values = critical_values(&rn, &zeros, &value_opts(job))?;
            let svg = draw.then(|| {
                let mut scene = Scene::skeleton(&curve);
                scene.zeros = values.points.iter().map(|p| (p.location.x, p.f)).collect();
                render_svg(&scene)
            });
            Ok(Produced {
                result: json!({
                    "zeros": values.points,
                    "order": values.order,
                    "shift": values.shift,
                    "total": zeros.total(),
                    "expected": zeros.expected,
                    "at_marked_point": zeros.at_marked_point,
                }),
                svg,
            })
        }
        Command::Rays | Command::Graph => {
            let graph = graph_of(job, &rn)?;
            let svg = if draw {
                let prim = LocalPrimitive::new(&curve, &rn.expr)?;
                Some(render_svg(&Scene::from_graph(&curve, &graph, &prim, &job.contours)))
            } else {
                None
            };
            let rays: Vec<Value> = graph
                .rays
                .iter()
                .map(|r| {
                    json!({
                        "zero": r.zero,
                        "direction": r.direction,
                        "terminal": r.terminal,
                        "asymptotic_real": r.asymptotic_real,
                        "end_t": r.end_t,
                        "points": r.points.len(),
                        "drift": r.drift,
                        "im_mismatch": r.im_mismatch,
                    })
                })
                .collect();
            let result = if job.command == Command::Rays {
                json!({ "rays": rays, "values": graph.values.points })
            } else {
                json!({
                    "rays": rays,
                    "edges": graph.edges,
                    "components": graph.components,
                    "generic": graph.generic,
                    "reason": graph.reason,
                    "saddles": graph.saddles,
                })
            };
            Ok(Produced { result, svg })
        }
        Command::Dual | Command::Span | Command::Weighted => {
            let graph = graph_of(job, &rn)?;
            graph.require_generic()?;
            let report = dual_cycles(&rn, &graph)?;
            let cycles: Vec<Value> = report
                .cycles
                .iter()
                .map(|c| {
                    json!({
                        "zero": c.zero,
                        "rays": c.rays,
                        "class": c.class.coeffs,
                        "period": c.period,
                        "contour_period": c.contour_period,
                    })
                })
                .collect();
            let result = match job.command {
                Command::Dual => json!({ "cycles": cycles, "s": report.s }),
                Command::Span => json!({ "span": span_check(&report, rn.genus()), "classes": cycles }),
                _ => {
                    let w = weighted_values(&graph.values, &report)?;
                    json!({ "values": w.values, "g": w.g() })
                }
            };
            Ok(Produced { result, svg: None })
        }
        Command::Leafwalk => leafwalk(job, hash, &rn, out),
        Command::Probe => {
            let state = LeafState::new(&rn);
            let jac = period_jacobian(&state)?;
            let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
            let mut v = vec![0.0; state.chart.dim()];
            for k in &jac.kernel {
                let c: f64 = rng.gen_range(-1.0..1.0);
                for (vi, ki) in v.iter_mut().zip(k) {
                    *vi += c * ki;
                }
            }
            let report = subharmonic_probe_along(&state, &jac, &v, job.probe.radius, job.probe.samples)?;
            Ok(Produced {
                result: json!({
                    "jacobian_rank": jac.rank,
                    "singular_values": jac.singular_values,
                    "probe": report,
                    "note": "evidence on the hyperelliptic slice",
                }),
                svg: None,
            })
        }
    }
}

/// One line of a walk checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointLine {
    pub schema: String,
    pub input_sha256: String,
    pub record: WalkRecord,
}

pub fn read_checkpoint(path: &Path, hash: &str) -> Result<Vec<WalkRecord>> {
    let Ok(file) = fs::File::open(path) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let Ok(cp) = serde_json::from_str::<CheckpointLine>(&line) else {
            // A torn last line from an interrupted write.
            break;
        };
        if cp.schema != SCHEMA || cp.input_sha256 != hash {
            return Err(Error::SchemaError(format!("checkpoint {} belongs to another job", path.display())));
        }
        out.push(cp.record);
    }
    Ok(out)
}

fn leafwalk(job: &JobSpec, hash: &str, rn: &RNDifferential, out: &Path) -> Result<Produced> {
    let path = out.join("leafwalk.jsonl");
    let mut records = read_checkpoint(&path, hash)?;
    // Rewrite so that a torn tail is dropped.
    let mut file = fs::File::create(&path).map_err(|e| Error::Io(e.to_string()))?;
    let mut write = |rec: &WalkRecord| -> Result<()> {
        let line = CheckpointLine { schema: SCHEMA.into(), input_sha256: hash.into(), record: rec.clone() };
        let text = serde_json::to_string(&line).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(file, "{text}").and_then(|_| file.flush()).map_err(|e| Error::Io(e.to_string()))
    };
    for rec in &records {
        write(rec)?;
    }
    let start = match records.last() {
        Some(rec) => WalkStart::resume(rec),
        None => WalkStart::fresh(LeafState::new(rn)),
    };
    let remaining = job.walk.steps.saturating_sub(records.len());
    let fresh = leaf_walk(&start, remaining, job.walk.step_size, &mut write)?;
    records.extend(fresh);
    let steps: Vec<Value> = records
        .iter()
        .map(|r| json!({ "step": r.step, "drift": r.state.drift, "max_dphi": r.max_dphi, "phi": r.phi }))
        .collect();
    let max_drift = records.iter().map(|r| r.state.drift).fold(0.0, f64::max);
    let min_ratio = records.iter().map(|r| r.max_dphi / r.state.drift.max(f64::MIN_POSITIVE)).fold(f64::INFINITY, f64::min);
    Ok(Produced {
        result: json!({
            "checkpoint": "leafwalk.jsonl",
            "target_periods": LeafState::new(rn).target_periods,
            "steps": steps,
            "max_drift": max_drift,
            "min_dphi_over_drift": if records.is_empty() { Value::Null } else { json!(min_ratio) },
            "final_state": records.last().map(|r| &r.state),
        }),
        svg: None,
    })
}
