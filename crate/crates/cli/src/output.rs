//! Artifact writers: commented CSV, JSON documents, report lines.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Resolved;
use crate::error::CliError;

/// Provenance written at the top of every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Header<'a> {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: &'a Resolved,
}

impl<'a> Header<'a> {
    pub fn new(command: &'static str, config: &'a Resolved) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: config.run.seed,
            config,
        }
    }
}

/// A CSV or JSON destination: a file, or stdout when no path is given.
pub struct Sink {
    path: Option<PathBuf>,
    out: Box<dyn Write>,
}

impl Sink {
    pub fn open(path: Option<&Path>) -> Result<Self, CliError> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::io(p, e))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self {
            path: path.map(Path::to_owned),
            out,
        })
    }

    fn fail(&self, e: io::Error) -> CliError {
        CliError::io(self.path.as_deref().unwrap_or(Path::new("<stdout>")), e)
    }

    /// Starts a CSV artifact: comment header, then the column row.
    pub fn csv(path: Option<&Path>, header: &Header, columns: &[&str]) -> Result<Self, CliError> {
        let mut sink = Self::open(path)?;
        let config = serde_json::to_string(header.config).expect("config serializes");
        let text = format!(
            "# fpt {} {}\n# seed: {}\n# config: {config}\n{}\n",
            header.command,
            header.version,
            header.seed,
            columns.join(",")
        );
        sink.out
            .write_all(text.as_bytes())
            .map_err(|e| sink.fail(e))?;
        Ok(sink)
    }

    pub fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        let line: Vec<String> = values.iter().map(|&v| number(v)).collect();
        writeln!(self.out, "{}", line.join(",")).map_err(|e| self.fail(e))
    }

    /// Writes a whole JSON document (header first) and closes the sink.
    pub fn json<T: Serialize>(path: Option<&Path>, document: &T) -> Result<(), CliError> {
        let mut sink = Self::open(path)?;
        serde_json::to_writer(&mut sink.out, document).map_err(|e| sink.fail(e.into()))?;
        writeln!(sink.out).map_err(|e| sink.fail(e))?;
        sink.finish()
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| self.fail(e))
    }
}

/// Fixed-point for ordinary magnitudes, exponent form otherwise; both are
/// the shortest text that reads back to the same `f64`.
pub fn number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// One-line JSON summary records go to stderr so they never mix with data
/// written to stdout.
pub fn report<T: Serialize>(record: &T) {
    eprintln!(
        "{}",
        serde_json::to_string(record).expect("record serializes")
    );
}
