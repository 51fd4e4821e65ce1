//! CSV and manifest output. All writers are deterministic: rows arrive
//! pre-sorted from the experiment drivers and floats use Rust's shortest
//! round-trip formatting.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use losse_core::error::{LosseError, Result};
use serde::Serialize;

/// Writes a CSV with a header row; fields are joined with commas verbatim.
pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvWriter {
            out,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        debug_assert_eq!(fields.len(), self.columns);
        writeln!(self.out, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Minimal CSV reader for the plot command: header plus float-or-string
/// fields. Reports the 1-based line number on malformed input.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| LosseError::Parse {
        offset: 0,
        message: format!("{}: empty CSV", path.display()),
    })?;
    let header: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != header.len() {
            return Err(LosseError::Parse {
                offset: (idx + 1) as u64,
                message: format!(
                    "{}: line {} has {} fields, expected {}",
                    path.display(),
                    idx + 1,
                    fields.len(),
                    header.len()
                ),
            });
        }
        rows.push(fields);
    }
    Ok((header, rows))
}

/// Parses a required float column out of a CSV row.
pub fn field_f64(fields: &[String], idx: usize, line: usize) -> Result<f64> {
    fields[idx].parse().map_err(|_| LosseError::Parse {
        offset: line as u64,
        message: format!("field {idx} ({}) is not a number", fields[idx]),
    })
}

/// Run manifest: everything needed to reproduce a run byte for byte.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub experiment: &'a str,
    pub version: &'a str,
    pub config: &'a C,
    pub config_hash: String,
    pub seeds: &'a [u64],
}

pub fn write_manifest<C: Serialize>(
    dir: &Path,
    experiment: &str,
    config: &C,
    seeds: &[u64],
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let config_json = serde_json::to_string_pretty(config)
        .map_err(|e| LosseError::Config(format!("manifest serialization: {e}")))?;
    let hash = losse_core::util::fnv1a64(config_json.as_bytes());
    let manifest = Manifest {
        experiment,
        version: env!("CARGO_PKG_VERSION"),
        config,
        config_hash: format!("{hash:016x}"),
        seeds,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| LosseError::Config(format!("manifest serialization: {e}")))?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}
