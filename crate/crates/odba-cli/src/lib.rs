//! Command-line runner for the `odba` library: config parsing, job dispatch,
//! result caching and report export.

pub mod cache;
pub mod config;
pub mod error;
pub mod run;

use std::time::Instant;

pub use config::{parse_config, parse_config_str, Command, Format, RunConfig};
pub use error::{CliError, ConfigError};
pub use run::{run, Failure, Report, Table};

/// A finished run: the rendered output plus bookkeeping that stays out of the
/// report itself.
#[derive(Clone, Debug)]
pub struct Executed {
    pub report: Report,
    pub table: Table,
    pub rendered: String,
    pub cache_hit: bool,
    pub wall_seconds: f64,
}

pub fn render(report: &Report, table: &Table, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.headers)?;
            for r in &table.rows {
                w.write_record(r)?;
            }
            let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

/// Runs `config`, going through the cache when `ODBA_CACHE_DIR` is set.
pub fn execute(config: &RunConfig) -> Result<Executed, CliError> {
    let start = Instant::now();
    let dir = cache::cache_dir();
    let key = cache::cache_key(config);
    let cached = dir.as_deref().and_then(|d| cache::load(d, &key));
    let cache_hit = cached.is_some();
    let entry = match cached {
        Some(e) => e,
        None => {
            let (report, table) = run(config);
            let entry = cache::CacheEntry { report, table };
            if let Some(d) = &dir {
                cache::store(d, &key, &entry)?;
            }
            entry
        }
    };
    let rendered = render(&entry.report, &entry.table, config.format)?;
    Ok(Executed {
        report: entry.report,
        table: entry.table,
        rendered,
        cache_hit,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Writes the rendered report to `config.output_path` (or returns it for
/// stdout) plus the wall-time sidecar.
pub fn write_outputs(config: &RunConfig, done: &Executed) -> Result<Option<String>, CliError> {
    let Some(out) = &config.output_path else {
        return Ok(Some(done.rendered.clone()));
    };
    let io = |path: &str| {
        let path = path.to_string();
        move |source| CliError::Io { path, source }
    };
    std::fs::write(out, &done.rendered).map_err(io(out))?;
    let side = run::timing_path(out);
    let timing = serde_json::json!({
        "wall_seconds": done.wall_seconds,
        "cache_hit": done.cache_hit,
    });
    std::fs::write(&side, serde_json::to_string_pretty(&timing)?).map_err(io(&side))?;
    Ok(None)
}
