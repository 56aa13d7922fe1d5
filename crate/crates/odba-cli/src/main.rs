use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use odba_cli::{execute, parse_config, write_outputs};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "odba", version, about = "Open XXX chain with unparallel boundary fields")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Operator identity catalog and vacuum relations.
    Verify(Flags),
    /// Exact transfer-matrix eigenvalues and their properties.
    Spectrum(Flags),
    /// Bethe equations, energies and spectrum matching.
    SolveBae(Flags),
    /// Eigenvalue functional relations.
    SolveFunctional(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "N")]
    n: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    xi: Option<f64>,
    /// Comma-separated list or `homogeneous`.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// `+`, `-` or `both`.
    #[arg(long, allow_hyphen_values = true)]
    branch: Option<String>,
    /// Integer, `default` or `sweep`.
    #[arg(long = "M")]
    m: Option<String>,
    /// `multistart` or `homotopy_xi`.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    rng_seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
    /// `json` or `csv`.
    #[arg(long)]
    format: Option<String>,
}

fn overrides(command: &str, f: &Flags) -> Result<Map<String, Value>, String> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            m.insert(k.into(), v);
        }
    };
    put("N", f.n.map(|x| json!(x)));
    put("p", f.p.map(|x| json!(x)));
    put("q", f.q.map(|x| json!(x)));
    put("xi", f.xi.map(|x| json!(x)));
    let theta = match f.theta.as_deref() {
        None => None,
        Some("homogeneous") => Some(json!("homogeneous")),
        Some(s) => {
            let v: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
            Some(json!(v.map_err(|e| format!("field `theta`: {e}"))?))
        }
    };
    put("theta", theta);
    put("branch", f.branch.as_ref().map(|x| json!(x)));
    let mv = f.m.as_ref().map(|s| match s.parse::<u64>() {
        Ok(k) => json!(k),
        Err(_) => json!(s),
    });
    put("M", mv);
    put("strategy", f.strategy.as_ref().map(|x| json!(x)));
    put("seed_count", f.seeds.map(|x| json!(x)));
    put("rng_seed", f.rng_seed.map(|x| json!(x)));
    put("output_path", f.out.as_ref().map(|x| json!(x)));
    put("format", f.format.as_ref().map(|x| json!(x)));
    Ok(m)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags) = match &cli.command {
        Cmd::Verify(f) => ("verify", f),
        Cmd::Spectrum(f) => ("spectrum", f),
        Cmd::SolveBae(f) => ("solve-bae", f),
        Cmd::SolveFunctional(f) => ("solve-functional", f),
    };
    let config = match overrides(name, flags).and_then(|o| parse_config(flags.config.as_deref(), o).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let done = match execute(&config) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match write_outputs(&config, &done) {
        Ok(Some(text)) => print!("{text}"),
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    for f in &done.report.failures {
        eprintln!("failed [{}]: {}", f.stage, f.message);
    }
    if done.report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
