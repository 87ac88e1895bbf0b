//! # crossfeat
//!
//! Pair verification with boosted cross-image rectangle features.
//!
//! Given two grayscale images canonicalized to a common analysis window,
//! the library evaluates a large quantized bank of cross-image filters —
//! Haar-like differences whose black regions sum over the first image and
//! white regions over the second, plus normalized cross-correlations of
//! co-located patches — all accelerated by five integral images per pair.
//! Discrete AdaBoost selects and weights the most discriminative filters
//! into a stump ensemble that decides whether a pair depicts the same
//! identity, and the evaluation layer reports ROC curves, the equal error
//! rate and accuracy at EER over pair manifests with k-fold splits.
//!
//! ```
//! use crossfeat::{FeatureBank, GrayImage, PairIntegrals, Quantization};
//!
//! let bank = FeatureBank::generate(16, 16, Quantization {
//!     min_size: 8,
//!     position_stride: 4,
//!     size_stride: 8,
//! })?;
//! let a = GrayImage::from_fn(16, 16, |x, y| ((x + y) % 7) as f64 / 6.0);
//! let b = GrayImage::from_fn(16, 16, |x, y| ((x * y) % 5) as f64 / 4.0);
//! let features = bank.extract(&PairIntegrals::new(&a, &b)?)?;
//! assert_eq!(features.len(), bank.len());
//! # Ok::<(), crossfeat::Error>(())
//! ```

pub mod boosting;
mod error;
pub mod eval;
pub mod features;
pub mod image;
pub mod naive;
pub mod pipeline;
pub mod synth;

pub use boosting::{
    adaboost_train, adaboost_train_with_log, train_stump, LabeledPair, PairLabel, Polarity,
    RoundLog, StrongClassifier, StumpFit, TrainingLog, WeakClassifier,
};
pub use error::{Error, Result};
pub use eval::{
    assign_folds, build_pairs, convert_lfw_pairs, error_rates_at, kfold_evaluate, roc,
    CorpusEntry, FoldReport, KfoldReport, ManifestEntry, PairManifest, RocCurve, RocPoint,
};
pub use features::{
    FeatureBank, FeatureDescriptor, FeatureKind, PairIntegrals, PatchStats, Quantization,
};
pub use image::{load_image, save_pgm, GrayImage, IntegralImage, Rect};
pub use pipeline::{ingest_pair, load_dataset, pair_features, TrainConfig};
pub use synth::{generate_corpus, SynthSpec};
