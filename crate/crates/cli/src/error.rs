use galaxy_core::Error as CoreError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("config: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Core(e) => match e {
                CoreError::MissingColumn(_) => "schema",
                CoreError::EmptyInput(_) => "empty_input",
                CoreError::DimensionMismatch { .. } => "dimension",
                CoreError::InvalidParameter(_) => "invalid_parameter",
                CoreError::LabelOutOfRange { .. } => "label",
                CoreError::NonFiniteLoss { .. } => "training_abort",
                CoreError::NonFinite(_) => "numeric",
                CoreError::DuplicateId(_) => "duplicate",
                CoreError::Io(_) => "io",
                CoreError::Csv(_) => "csv",
                CoreError::Json(_) => "json",
            },
        }
    }

    /// 2 for bad input or configuration, 3 for aborted training, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "io" | "csv" => 1,
            "training_abort" | "numeric" => 3,
            _ => 2,
        }
    }

    /// Single-line JSON for standard error.
    pub fn to_json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string(&Line {
            error: self.kind(),
            message: self.to_string(),
        })
        .expect("plain strings serialize")
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
