use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] bm3d_frames::Error),

    #[error("unknown scenario {0}; valid ids are 1..=6")]
    UnknownScenario(u8),

    #[error("test image {name}: {reason}")]
    TestImage { name: String, reason: String },

    #[error("results table needs at least one result")]
    EmptyResults,

    #[error("parameter file {path}: {reason}")]
    Params { path: String, reason: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<BenchError>,
    },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    pub fn context(self, context: impl Into<String>) -> Self {
        BenchError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
