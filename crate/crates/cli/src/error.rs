use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("bad data in {} at row {row}, column {column}: {reason}", .path.display())]
    BadData {
        path: PathBuf,
        row: usize,
        column: String,
        reason: String,
    },
    #[error("cannot write {}: {source}", .path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] protest::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// 2 for anything the user can fix in the inputs, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        use protest::Error as E;
        match self {
            CliError::Config { .. } | CliError::NotFound(_) | CliError::BadData { .. } => 2,
            CliError::Write { .. } => 2,
            CliError::Core(e) => match e {
                E::InvalidParameter { .. }
                | E::DrawFile { .. }
                | E::NonFiniteData { .. }
                | E::Empty(_)
                | E::Io(_) => 2,
                _ => 3,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
