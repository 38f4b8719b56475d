use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::{Common, Failure};

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::config(format!("{}: {e}", path.display()))
}

/// Writes the report to `--out`, or to stdout.
pub fn write_report(common: &Common, report: &Value) -> Result<(), Failure> {
    let mut text =
        serde_json::to_string_pretty(report).map_err(|e| Failure::config(e.to_string()))?;
    text.push('\n');
    match &common.out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_failure(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::config(e.to_string())),
    }
}

/// Row sink for `--csv`; a no-op when the flag is absent.
pub struct CsvSink {
    writer: Option<(csv::Writer<File>, std::path::PathBuf)>,
}

impl CsvSink {
    pub fn open(common: &Common, header: &[String]) -> Result<CsvSink, Failure> {
        let Some(path) = &common.csv else {
            return Ok(CsvSink { writer: None });
        };
        let mut w = csv::Writer::from_path(path).map_err(|e| io_failure(path, e))?;
        w.write_record(header).map_err(|e| io_failure(path, e))?;
        Ok(CsvSink {
            writer: Some((w, path.clone())),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), Failure> {
        if let Some((w, path)) = &mut self.writer {
            w.write_record(fields).map_err(|e| io_failure(path, e))?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<(), Failure> {
        if let Some((mut w, path)) = self.writer {
            w.flush().map_err(|e| io_failure(&path, e))?;
        }
        Ok(())
    }
}

/// Header names `prefix_0 .. prefix_{d-1}`.
pub fn indexed(prefix: &str, d: usize) -> Vec<String> {
    (0..d).map(|j| format!("{prefix}_{j}")).collect()
}
