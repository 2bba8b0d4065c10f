use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use realnorm::io::job::run_file;

/// Runs one JSON job and writes its result JSON (and SVG for zeros, rays
/// and graph) into the output directory.
#[derive(Debug, Parser)]
#[command(name = "realnorm", version)]
struct Args {
    /// Job file (schema "realnorm/1").
    #[arg(long)]
    input: PathBuf,
    /// Output directory; defaults to the job's `out` field, then the input's directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Quadrature tolerance override (absolute and relative).
    #[arg(long)]
    tol: Option<f64>,
    /// Seed recorded in the output and used by randomized commands.
    #[arg(long)]
    seed: Option<u64>,
    /// Write SVG plots (default).
    #[arg(long, overrides_with = "no_svg")]
    svg: bool,
    #[arg(long = "no-svg", overrides_with = "svg")]
    no_svg: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = run_file(&args.input, args.out.as_deref(), args.tol, args.seed, !args.no_svg);
    if let Some((name, message)) = &outcome.error {
        eprintln!("{}", serde_json::json!({ "error": name, "message": message }));
    }
    println!("{}", outcome.json_path.display());
    if let Some(svg) = &outcome.svg_path {
        println!("{}", svg.display());
    }
    ExitCode::from(outcome.exit_code as u8)
}
