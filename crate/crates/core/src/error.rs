use alloc::string::String;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty text")]
    EmptyText,

    #[error("review `{id}` has no text")]
    EmptyReview { id: String },

    #[error("embedding dimension must be at least {min}, got {got}")]
    InvalidDimension { min: usize, got: usize },

    #[error("embedding for `{text}` has zero norm")]
    DegenerateEmbedding { text: String },

    #[error("embedding for `{text}` has a non-finite component")]
    NonFiniteEmbedding { text: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no precomputed entry for `{text}`")]
    LookupMiss { text: String },

    #[error("segment of review `{review_id}` has no positive/negative polarity")]
    Unpolarized { review_id: String },

    #[error("candidate topic list is empty")]
    NoCandidates,

    #[error("{topics} topics but {scores} scores")]
    LengthMismatch { topics: usize, scores: usize },

    #[error("topic `{topic}` has no keywords")]
    NoKeywords { topic: String },

    #[error("classifier failed on segment {review_id}[{start}..{end}]: {message}")]
    Classifier {
        review_id: String,
        start: usize,
        end: usize,
        message: String,
    },

    #[error("template `{name}` must contain `{slot}` exactly once")]
    TemplateSlot { name: &'static str, slot: &'static str },

    #[error("prompt does not match any known template")]
    UnknownPrompt,

    #[error("model failure: {0}")]
    Model(String),

    #[error("review file: {0}")]
    ReviewFile(String),

    #[error("invalid taxonomy: {0}")]
    Taxonomy(String),

    #[error("invalid `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("evaluation: {0}")]
    Eval(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
