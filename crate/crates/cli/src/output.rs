//! CSV/JSON writers and the run manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::commands::CliError;

/// Seventeen significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// `<base>.<suffix>`, keeping the full original file name.
pub fn sibling(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

pub fn write_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| CliError::io(p, e))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let fail = |e: csv::Error| CliError::Input(format!("writing CSV: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::Input(format!("writing CSV: {e}")))
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub wall_clock_seconds: f64,
    pub version: String,
}

impl RunManifest {
    /// Written next to the first output as `<output>.manifest.json`.
    pub fn write(&self) -> Result<Option<PathBuf>, CliError> {
        let Some(first) = self.outputs.first() else {
            return Ok(None);
        };
        let path = sibling(first, "manifest.json");
        write_json(Some(&path), self)?;
        Ok(Some(path))
    }
}
