//! Command implementations behind the `qframe` binary.
//!
//! Every command is a function of the configuration, the seed and its input
//! files; it writes its outputs into one directory and returns a short
//! summary for standard output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use qframe::config::{ConfigError, RunConfig};

pub mod keyrate;
pub mod ldpc;
pub mod simulate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("decoding did not converge after {0} iterations")]
    NotConverged(u32),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::NotConverged(_) => EXIT_NOT_CONVERGED,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Table format for logs that have both renderings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

/// Options shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct Common {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub format: Format,
}

impl Common {
    /// The configuration file (or defaults) with the seed override applied.
    pub fn load_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                RunConfig::from_toml_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }

    pub fn prepare_out(&self) -> Result<&Path, CliError> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        Ok(&self.out)
    }
}

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

/// Writes rows as CSV or JSON lines.
pub(crate) fn write_rows<T: Serialize>(path: &Path, rows: &[T], format: Format) -> Result<(), CliError> {
    let mut f = create(path)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut f);
            for r in rows {
                w.serialize(r).map_err(|e| io_err(path, e))?;
            }
            w.flush().map_err(|e| io_err(path, e))?;
        }
        Format::Jsonl => {
            for r in rows {
                serde_json::to_writer(&mut f, r).map_err(|e| io_err(path, e))?;
                f.write_all(b"\n").map_err(|e| io_err(path, e))?;
            }
        }
    }
    f.flush().map_err(|e| io_err(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| io_err(path, e))?;
    f.write_all(b"\n").map_err(|e| io_err(path, e))?;
    f.flush().map_err(|e| io_err(path, e))
}

/// File extension for a table format.
pub(crate) fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Jsonl => "jsonl",
    }
}

/// Replaces the extension of a configured file name by the table format's.
pub(crate) fn with_format(name: &str, format: Format) -> String {
    let stem = Path::new(name).file_stem().and_then(|s| s.to_str()).unwrap_or(name);
    format!("{stem}.{}", ext(format))
}
