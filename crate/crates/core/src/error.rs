use std::path::PathBuf;

use thiserror::Error;

use crate::image::Rect;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed image {path}: {reason}")]
    MalformedImage { path: PathBuf, reason: String },

    #[error("unsupported image {path}: {reason}")]
    UnsupportedImage { path: PathBuf, reason: String },

    #[error("image dimensions must be at least 1x1")]
    EmptyImage,

    #[error("pixel buffer length {got} does not match {width}x{height}")]
    PixelCountMismatch {
        width: usize,
        height: usize,
        got: usize,
    },

    #[error("intensity {value} at pixel {index} lies outside [0, 1]")]
    IntensityOutOfRange { index: usize, value: f64 },

    #[error("rect ({},{}) {}x{} out of bounds for {width}x{height} image", rect.x, rect.y, rect.w, rect.h)]
    RectOutOfBounds {
        rect: Rect,
        width: usize,
        height: usize,
    },

    #[error("image dimensions differ: {w1}x{h1} vs {w2}x{h2}")]
    DimensionMismatch {
        w1: usize,
        h1: usize,
        w2: usize,
        h2: usize,
    },

    #[error("descriptor {id} has kind {kind}, expected {expected}")]
    KindMismatch {
        id: u32,
        kind: &'static str,
        expected: &'static str,
    },

    #[error("window {window_w}x{window_h} is smaller than the minimum feature size {min_size}")]
    WindowTooSmall {
        window_w: usize,
        window_h: usize,
        min_size: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("feature vector has length {got}, bank expects {expected}")]
    FeatureCountMismatch { expected: usize, got: usize },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("training requires both labels, found only \"{0}\"")]
    SingleClass(&'static str),

    #[error("feature id {feature_id} out of range for {n_features} features")]
    FeatureIdOutOfRange { feature_id: usize, n_features: usize },

    #[error("unsupported model version {got} (expected {expected})")]
    ModelVersion { got: u32, expected: u32 },

    #[error("malformed model {path}: {reason}")]
    MalformedModel { path: PathBuf, reason: String },

    #[error("bank fingerprint mismatch: model was trained against {model}, active bank is {bank}")]
    BankFingerprintMismatch { model: String, bank: String },

    #[error("malformed manifest {path} line {line}: {reason}")]
    MalformedManifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("corpus cannot supply any positive pair")]
    NoPositivePairs,

    #[error("corpus cannot supply any negative pair")]
    NoNegativePairs,

    #[error("scores must contain at least one entry of each label")]
    SingleLabelScores,

    #[error("fold {fold} contains a single label")]
    FoldSingleLabel { fold: u32 },

    #[error("k must be at least 2, got {0}")]
    InvalidFoldCount(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
