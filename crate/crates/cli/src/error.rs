use dislocation_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("audit failed: {bound} at {location}")]
    Audit { bound: String, location: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io { context: context.into(), source }
    }

    /// Process exit status: 2 configuration, 3 numerical, 4 audit, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Validation(_) => 2,
            Self::Audit { .. } => 4,
            Self::Io { .. } => 1,
            Self::Core(e) => match e {
                CoreError::InvalidParams(_) | CoreError::CflViolation(_) | CoreError::UnknownPreset(_) => 2,
                CoreError::Io(_) | CoreError::Format { .. } | CoreError::Sink(_) => 1,
                _ => 3,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "numerical",
            4 => "audit",
            _ => "io",
        }
    }

    /// Single-line rendering for stderr.
    pub fn report_line(&self) -> String {
        let msg = self.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
        format!("error kind={} code={} message=\"{msg}\"", self.kind(), self.exit_code())
    }
}
