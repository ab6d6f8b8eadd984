//! Instance and schedule file formats.

mod native;
mod psplib;

pub use native::{parse_native, write_native, NativeError};
pub use psplib::{parse_psplib, PsplibError};

use std::path::Path;

use thiserror::Error;

use crate::model::{validate, Instance, Violation};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Psplib { path: String, source: PsplibError },
    #[error("{path}: {source}")]
    Native { path: String, source: NativeError },
    #[error("{path}: invalid instance: {}", list(.violations))]
    Invalid { path: String, violations: Vec<Violation> },
}

fn list(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Instance files this crate understands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Psplib,
    Native,
}

impl Format {
    /// `.sch` files are PSPLib; everything else is read as the native format.
    pub fn of(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("sch") => Format::Psplib,
            _ => Format::Native,
        }
    }
}

/// Reads, parses, and validates an instance file.
pub fn load_instance(path: &Path) -> Result<Instance, LoadError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: shown.clone(), source })?;
    let inst = match Format::of(path) {
        Format::Psplib => parse_psplib(&text).map_err(|source| LoadError::Psplib { path: shown.clone(), source })?,
        Format::Native => parse_native(&text).map_err(|source| LoadError::Native { path: shown.clone(), source })?,
    };
    let violations = validate(&inst);
    if violations.is_empty() {
        Ok(inst)
    } else {
        Err(LoadError::Invalid { path: shown, violations })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid start time '{0}'")]
pub struct ScheduleParseError(pub String);

/// Whitespace-separated start times in activity order.
pub fn parse_schedule(text: &str) -> Result<Vec<i64>, ScheduleParseError> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| ScheduleParseError(t.to_string())))
        .collect()
}

pub fn write_schedule(starts: &[i64]) -> String {
    let mut s = starts.iter().map(i64::to_string).collect::<Vec<_>>().join(" ");
    s.push('\n');
    s
}
