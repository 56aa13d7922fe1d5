use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed config: {0}")]
    Json(String),

    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("{0}")]
    Params(String),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv export: {0}")]
    Csv(#[from] csv::Error),
}
