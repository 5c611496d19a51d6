//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Requested patch does not fit inside the image.
    #[error("image-too-small: {0}x{1} image cannot host a {2}x{3} patch")]
    ImageTooSmall(usize, usize, usize, usize),

    /// Patch and centroid dimensions disagree.
    #[error("shape-mismatch: patch is {0}x{1}, centroid is {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),

    /// Histogram contains a negative frequency.
    #[error("negative-bin: bin {0} holds {1}")]
    NegativeBin(usize, f64),

    /// Estimator was frozen before this sample arrived.
    #[error("learning-frozen: training set no longer accepts samples")]
    LearningFrozen,

    /// Prediction requested before any sample was added.
    #[error("untrained: training set is empty")]
    Untrained,

    /// Pose lies outside the room.
    #[error("out-of-bounds: pose ({0:.3}, {1:.3}) outside {2}x{3} room")]
    OutOfBounds(f64, f64, f64, f64),

    /// Paired slices must have equal nonzero length.
    #[error("length-mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    /// ROC is undefined when every sample carries the same label.
    #[error("degenerate-labels: all samples are {}", if *.0 { "positive" } else { "negative" })]
    DegenerateLabels(bool),

    /// A scalar argument violated its documented range.
    #[error("invalid-argument: {0}")]
    InvalidArgument(String),

    /// Configuration failed validation before any run started.
    #[error("invalid-config: {field}: {message}")]
    InvalidConfig { field: String, message: String },

    /// A dataset file on disk is malformed.
    #[error("malformed-dataset: {path}: {message}")]
    MalformedDataset { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_config(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
