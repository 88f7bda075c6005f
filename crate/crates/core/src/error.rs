use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty graph")]
    EmptyGraph,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range for layer of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate degree: {layer} node {index} has degree {degree}, linking every active node of the opposite layer")]
    DegenerateDegree {
        layer: &'static str,
        index: usize,
        degree: usize,
    },

    #[error("solver did not converge after {iterations} iterations (best residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("post {post} has {authors} authors; the authorship block requires exactly one")]
    MultipleAuthors { post: String, authors: usize },

    #[error("uncovered node {0}")]
    UncoveredNode(usize),

    #[error("unknown community {0}")]
    UnknownCommunity(usize),

    #[error("malformed url: {0}")]
    MalformedUrl(String),

    #[error("score {0} outside [0, 100]")]
    ScoreOutOfRange(f64),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
