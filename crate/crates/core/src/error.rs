use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = QuarkError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QuarkError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("cannot sample for class {class}: {message}")]
    Sampling { class: String, message: String },

    #[error("evaluation infeasible: {0}")]
    Evaluation(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<QuarkError>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },
}

impl QuarkError {
    pub fn contract(msg: impl Into<String>) -> Self {
        QuarkError::Contract(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        QuarkError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QuarkError::Io {
            path: path.into(),
            source,
        }
    }

    /// Wrap with the name of the pipeline stage that failed.
    pub fn in_stage(self, stage: &'static str) -> Self {
        QuarkError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by user input (bad config, missing files,
    /// malformed data) rather than internal faults.
    pub fn is_user_error(&self) -> bool {
        match self {
            QuarkError::Config(_)
            | QuarkError::Parse { .. }
            | QuarkError::Format(_)
            | QuarkError::Sampling { .. }
            | QuarkError::Evaluation(_)
            | QuarkError::Io { .. }
            | QuarkError::Image { .. } => true,
            QuarkError::Stage { source, .. } => source.is_user_error(),
            _ => false,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
