use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),

    #[error("target id {target} out of range for {classes} classes")]
    TargetOutOfRange { target: usize, classes: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("loss must be a scalar, got shape {0:?}")]
    NotScalar(Vec<usize>),

    #[error("variable was not recorded on this tape")]
    ForeignVar,

    #[error("missing gradient for parameter `{0}`")]
    MissingGradient(String),

    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("function is not deterministic: {first} then {second} at unchanged parameters")]
    NonDeterministic { first: f64, second: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },

    #[error("token `{0}` is outside the base vocabulary")]
    UnknownToken(String),

    #[error("training diverged at epoch {epoch}, step {step}: {detail}")]
    Diverged {
        epoch: usize,
        step: usize,
        detail: String,
    },

    #[error("model emitted an empty translation")]
    EmptyTranslation,

    #[error("misaligned corpora: {0}")]
    Misaligned(String),

    #[error("bad model file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
