use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unrecognized volume format")]
    UnknownFormat,
    #[error("file truncated: expected {expected} bytes of voxel data, found {found}")]
    TruncatedFile { expected: usize, found: usize },
    #[error("unsupported element type: {0}")]
    UnsupportedElementType(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("value out of range: {0}")]
    ValueOutOfRange(String),
    #[error("index {index} out of range for extent {extent}")]
    IndexOutOfRange { index: usize, extent: usize },
    #[error("degenerate volume of interest")]
    DegenerateVoi,
    #[error("class {0} has no files")]
    EmptyClass(usize),
    #[error("crop {crop:?} larger than image {image:?}")]
    CropTooLarge {
        crop: (usize, usize),
        image: (usize, usize),
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("non-finite gradient in parameter {0}")]
    NonFiniteGradient(String),
    #[error("non-finite loss at iteration {iteration}: {detail}")]
    NonFiniteLoss { iteration: u64, detail: String },
    #[error("invalid network spec: {0}")]
    SpecInvalid(String),
    #[error("unknown preset: {0}")]
    UnknownPreset(String),
    #[error("bad checkpoint magic")]
    BadMagic,
    #[error("checkpoint version {found} not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint truncated")]
    Truncated,
    #[error("class id {0} out of range")]
    ClassOutOfRange(usize),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("split `{0}` is empty")]
    EmptySplit(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("every file of class {0} failed to load")]
    AllFilesFailed(String),
    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("png: {0}")]
    Png(String),
}

impl Error {
    /// Stable machine-readable code printed by the CLI before the message.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownFormat => "UnknownFormat",
            Error::TruncatedFile { .. } => "TruncatedFile",
            Error::UnsupportedElementType(_) => "UnsupportedElementType",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::ValueOutOfRange(_) => "ValueOutOfRange",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::DegenerateVoi => "DegenerateVoi",
            Error::EmptyClass(_) => "EmptyClass",
            Error::CropTooLarge { .. } => "CropTooLarge",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::LabelOutOfRange { .. } => "LabelOutOfRange",
            Error::NonFiniteGradient(_) => "NonFiniteGradient",
            Error::NonFiniteLoss { .. } => "NonFiniteLoss",
            Error::SpecInvalid(_) => "SpecInvalid",
            Error::UnknownPreset(_) => "UnknownPreset",
            Error::BadMagic => "BadMagic",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::Truncated => "Truncated",
            Error::ClassOutOfRange(_) => "ClassOutOfRange",
            Error::EmptyMatrix => "EmptyMatrix",
            Error::EmptySplit(_) => "EmptySplit",
            Error::BadInput(_) => "BadInput",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::AllFilesFailed(_) => "AllFilesFailed",
            Error::Path { source, .. } => source.code(),
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Png(_) => "Png",
        }
    }

    pub(crate) fn at(self, path: impl Into<PathBuf>) -> Error {
        Error::Path {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// Strips path context, returning the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Path { source, .. } => source.root(),
            other => other,
        }
    }
}
