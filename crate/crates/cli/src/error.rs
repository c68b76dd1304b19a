use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use isexplore_core::spectral::SpectralError;
use isexplore_core::{SelectError, SynthError, TrackError, WindowError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Track { path: PathBuf, source: TrackError },
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn track(path: &Path) -> impl FnOnce(TrackError) -> Self + '_ {
        move |source| Self::Track {
            path: path.to_owned(),
            source,
        }
    }

    pub fn output(path: &Path) -> impl FnOnce(io::Error) -> Self + '_ {
        move |source| Self::Output {
            path: path.to_owned(),
            source,
        }
    }

    /// 2 for bad arguments, 3 for unreadable or invalid tracks, 4 when
    /// selection itself fails, 1 when an output cannot be written.
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Usage(_) => 2,
            Self::Track { .. } => 3,
            Self::Select(e) if is_config_error(e) => 2,
            Self::Select(_) => 4,
            Self::Output { .. } => 1,
        })
    }
}

fn is_config_error(e: &SelectError) -> bool {
    matches!(
        e,
        SelectError::BadConfig(_)
            | SelectError::Window(WindowError::BadConfig(_))
            | SelectError::Spectral(SpectralError::BadThreshold(_) | SpectralError::BadWeights { .. })
    )
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::BadSpec(msg) => Self::Usage(format!("bad synth spec: {msg}")),
            SynthError::Select(e) => Self::Select(e),
            other => Self::Usage(other.to_string()),
        }
    }
}
