use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::{CliError, Config, Format};

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Dotted-path flattening of a JSON document into `(field, value)` rows.
pub fn flatten(value: &Value, prefix: &str, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(v, &join(k), out);
            }
        }
        Value::Array(items) => {
            for (k, v) in items.iter().enumerate() {
                flatten(v, &join(&k.to_string()), out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn render(format: Format, report: &Value) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| CliError::Solver(e.to_string()))?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => {
            let mut rows = Vec::new();
            flatten(report, "", &mut rows);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["field", "value"]).map_err(|e| CliError::Solver(e.to_string()))?;
            for (k, v) in rows {
                w.write_record([k, v]).map_err(|e| CliError::Solver(e.to_string()))?;
            }
            w.into_inner().map_err(|e| CliError::Solver(e.to_string()))
        }
    }
}

/// Report to `--out/<name>.<ext>` or stdout.
pub fn emit(cfg: &Config, name: &str, report: &Value) -> Result<(), CliError> {
    let bytes = render(cfg.format, report)?;
    match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            let ext = match cfg.format {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            write_atomic(&dir.join(format!("{name}.{ext}")), &bytes)
        }
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Solver(e.to_string())),
    }
}
