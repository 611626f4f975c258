use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid state: {what} = {value}")]
    InvalidState { what: String, value: f64 },

    #[error("positivity failure at t = {time}: element {element}: {source}")]
    Positivity {
        time: f64,
        element: usize,
        #[source]
        source: Box<CoreError>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file {path}: {detail}")]
    Format { path: String, detail: String },
}

impl CoreError {
    pub fn invalid(what: &str, value: f64) -> Self {
        CoreError::InvalidState { what: what.into(), value }
    }
}
