use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] roadpriv_core::Error),
    #[error("{0}")]
    Input(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub const INTERNAL: u8 = 1;
    pub const USAGE: u8 = 2;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Write { .. } => Self::INTERNAL,
            _ => Self::USAGE,
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

pub fn write(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

/// `<path><suffix>`, e.g. `range.txt` + `.meta.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Where the primary result of a command goes.
pub struct Sink<'a> {
    pub out: Option<&'a Path>,
    pub command: &'static str,
    pub seed: u64,
}

impl Sink<'_> {
    /// Writes `text` to `--out` plus a metadata sidecar, or to stdout.
    pub fn emit(&self, text: &str, params: Value) -> CliResult {
        match self.out {
            Some(path) => {
                write(path, text)?;
                let meta = json!({
                    "tool": "roadpriv",
                    "version": env!("CARGO_PKG_VERSION"),
                    "command": self.command,
                    "seed": self.seed,
                    "params": params,
                });
                let body = serde_json::to_string_pretty(&meta).expect("metadata is plain JSON");
                write(&sibling(path, ".meta.json"), &(body + "\n"))
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|source| CliError::Write { path: PathBuf::from("<stdout>"), source })
            }
        }
    }
}

/// Phase timer; prints `timing,<phase>,<seconds>` to stderr when enabled.
pub struct Timer {
    enabled: bool,
    start: Instant,
}

impl Timer {
    pub fn new(enabled: bool) -> Self {
        Timer { enabled, start: Instant::now() }
    }

    pub fn lap(&mut self, phase: &str) {
        if self.enabled {
            eprintln!("timing,{phase},{:.6}", self.start.elapsed().as_secs_f64());
        }
        self.start = Instant::now();
    }
}
