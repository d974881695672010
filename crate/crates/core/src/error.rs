//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used by every fallible operation in the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the arithmetic, transform, model, and search layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Approximation level outside the supported `0..=11` range.
    #[error("approximation level {0} is out of range (expected 0..=11)")]
    InvalidLevel(u8),

    /// An operand that must be finite was NaN or infinite.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// An energy table failed validation.
    #[error("invalid energy table: {0}")]
    InvalidEnergyTable(String),

    /// A signal or buffer had an unusable length (empty, or not a power of
    /// two where the radix-2 transforms require one).
    #[error("{what} has unusable length {len}")]
    BadLength { what: &'static str, len: usize },

    /// A per-stage level schedule did not match the transform's stage count.
    #[error("schedule has {found} stage levels but the transform needs {expected}")]
    ScheduleMismatch { expected: usize, found: usize },

    /// Two buffers that must have equal lengths did not.
    #[error("{what}: lengths differ ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    /// A scalar argument was outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input collection that must be non-empty was empty.
    #[error("empty {0}")]
    EmptyInput(&'static str),

    /// Matrix/vector dimensions are inconsistent with what the operation
    /// requires (ragged rows, wrong layer input shape, and so on).
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A serialized model declared a schema version this build cannot read.
    #[error("unsupported model schema version {found} (expected 1)")]
    SchemaVersion { found: u64 },

    /// A serialized model could not be parsed at all.
    #[error("model parse error: {0}")]
    ModelParse(String),

    /// A parsed model violated a structural rule (non-finite weight, even
    /// kernel side, unsupported stride, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Requested output class does not exist in the model.
    #[error("class index {class} out of range for model with {outputs} outputs")]
    ClassIndex { class: usize, outputs: usize },

    /// Gaussian elimination met a pivot too small to invert reliably.
    #[error("matrix is numerically singular (pivot {pivot:.3e} in column {column})")]
    SingularMatrix { pivot: f64, column: usize },

    /// Interpolation nodes must be pairwise distinct.
    #[error("interpolation nodes {left} and {right} coincide")]
    DuplicateNodes { left: usize, right: usize },

    /// Exact Shapley enumeration was asked for more features than the
    /// subset-enumeration budget allows.
    #[error("{features} features exceed the exact-enumeration cap of {max}")]
    TooManyFeatures { features: usize, max: usize },

    /// A marginal contribution was requested for a feature already inside
    /// the coalition it is supposed to be added to.
    #[error("feature {0} is already in the coalition")]
    FeatureInSubset(usize),

    /// Input has no usable signal (for example an all-zero map whose
    /// spectrum cannot be deconvolved).
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    /// A flat index pointed outside its container.
    #[error("index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: usize, len: usize },

    /// No level schedule satisfies the requested quality/energy constraints.
    #[error("no feasible level schedule under the given constraints")]
    Infeasible,

    /// Exhaustive schedule search would enumerate more than the hard cap.
    #[error("exhaustive search over {stages} stages exceeds the 12^{max} enumeration cap")]
    ExhaustiveTooLarge { stages: usize, max: usize },

    /// Malformed text input (CSV cell, config file, group list, ...).
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
