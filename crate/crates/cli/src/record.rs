//! Run records and their JSON / JSONL / CSV emission.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::HarnessError;

/// Bumped whenever a record field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord<T, S> {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub generator: &'static str,
    pub trials: Vec<T>,
    pub summary: S,
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct TrialLine<'a, T> {
    schema_version: u32,
    #[serde(flatten)]
    trial: &'a T,
}

#[derive(Serialize)]
struct SummaryLine<'a, S> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    generator: &'static str,
    summary: &'a S,
    wall_time_s: f64,
}

/// Stdout, or a buffered file when `out` is set.
pub fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

impl<T: Serialize, S: Serialize> RunRecord<T, S> {
    /// `json`: the whole record. `jsonl`: one line per trial, then a summary line.
    pub fn emit(&self, w: &mut dyn Write) -> Result<(), HarnessError> {
        match self.config.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, self).map_err(|e| HarnessError::Io(e.to_string()))?;
                writeln!(w)?;
            }
            Format::Jsonl => {
                for t in &self.trials {
                    let line = TrialLine {
                        schema_version: self.schema_version,
                        trial: t,
                    };
                    serde_json::to_writer(&mut *w, &line).map_err(|e| HarnessError::Io(e.to_string()))?;
                    writeln!(w)?;
                }
                let line = SummaryLine {
                    schema_version: self.schema_version,
                    config: &self.config,
                    generator: self.generator,
                    summary: &self.summary,
                    wall_time_s: self.wall_time_s,
                };
                serde_json::to_writer(&mut *w, &line).map_err(|e| HarnessError::Io(e.to_string()))?;
                writeln!(w)?;
            }
            Format::Csv => {
                return Err(HarnessError::Usage(
                    "run records are JSON or JSONL; CSV is for curves (density, mean-var, probe-eta, constants)".into(),
                ))
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Rows as CSV (header from the field names) or as a JSON array.
pub fn emit_rows<R: Serialize>(rows: &[R], format: Format, w: &mut dyn Write) -> Result<(), HarnessError> {
    match format {
        Format::Csv => {
            let mut cw = csv::Writer::from_writer(&mut *w);
            for r in rows {
                cw.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
            }
            cw.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, rows).map_err(|e| HarnessError::Io(e.to_string()))?;
            writeln!(w)?;
        }
        Format::Jsonl => {
            for r in rows {
                serde_json::to_writer(&mut *w, r).map_err(|e| HarnessError::Io(e.to_string()))?;
                writeln!(w)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
