//! Discrete AdaBoost over decision stumps on the feature bank.
//!
//! Each round searches every feature for the threshold/polarity pair with
//! the lowest weighted error, then reweights the samples toward the
//! mistakes. Per-feature sorted value arrays are precomputed once before
//! round one, so every round is a weighted scan over each feature rather
//! than a re-sort; the scan parallelizes across features against a
//! read-only weight snapshot and reduces to the argmin serially, which
//! keeps training byte-deterministic at any thread count.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureBank;

/// Sentinel thresholds sit at the extreme finite values so that "accept
/// nothing" / "accept everything" stumps stay JSON-serializable.
const THRESHOLD_SENTINEL: f64 = f64::MAX;

const MODEL_VERSION: u32 = 1;
const EPSILON_CLAMP: f64 = 1e-10;

/// Pair label: same identity (+1) or different (-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairLabel {
    Same,
    Different,
}

impl PairLabel {
    #[inline]
    pub fn sign(&self) -> f64 {
        match self {
            PairLabel::Same => 1.0,
            PairLabel::Different => -1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PairLabel::Same => "same",
            PairLabel::Different => "different",
        }
    }
}

/// One training example: the extracted feature vector of a pair, its
/// label, and its share of the training distribution.
#[derive(Debug, Clone)]
pub struct LabeledPair {
    pub features: Vec<f64>,
    pub label: PairLabel,
    pub weight: f64,
}

impl LabeledPair {
    pub fn new(features: Vec<f64>, label: PairLabel) -> LabeledPair {
        LabeledPair {
            features,
            label,
            weight: 1.0,
        }
    }
}

/// Stump direction bit. `Plus` predicts "same" below the threshold,
/// `Minus` above it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Polarity {
    Plus,
    Minus,
}

impl Polarity {
    #[inline]
    pub fn sign(&self) -> f64 {
        match self {
            Polarity::Plus => 1.0,
            Polarity::Minus => -1.0,
        }
    }
}

impl From<Polarity> for i8 {
    fn from(p: Polarity) -> i8 {
        match p {
            Polarity::Plus => 1,
            Polarity::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Polarity {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Polarity, String> {
        match v {
            1 => Ok(Polarity::Plus),
            -1 => Ok(Polarity::Minus),
            other => Err(format!("polarity must be 1 or -1, got {other}")),
        }
    }
}

/// Best threshold/polarity for one feature, with its weighted 0/1 error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StumpFit {
    pub threshold: f64,
    pub polarity: Polarity,
    pub error: f64,
}

/// A thresholded single-feature classifier with its ensemble weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakClassifier {
    pub feature_id: u32,
    pub threshold: f64,
    pub polarity: Polarity,
    pub alpha: f64,
}

impl WeakClassifier {
    /// `+1` if `polarity * value < polarity * threshold`, else `-1`.
    #[inline]
    pub fn predict(&self, value: f64) -> f64 {
        let s = self.polarity.sign();
        if s * value < s * self.threshold {
            1.0
        } else {
            -1.0
        }
    }
}

/// AdaBoost-weighted stump ensemble bound to one feature bank.
///
/// The margin is `sum_t alpha_t * h_t(x)`; the decision is "same" when the
/// margin reaches `decision_threshold` (0 by default, the midpoint of the
/// +-1 ensemble vote, re-tunable from a validation ROC).
#[derive(Debug, Clone, PartialEq)]
pub struct StrongClassifier {
    weak: Vec<WeakClassifier>,
    bank_fingerprint: String,
    decision_threshold: f64,
}

impl StrongClassifier {
    pub fn from_parts(
        weak: Vec<WeakClassifier>,
        bank_fingerprint: String,
        decision_threshold: f64,
    ) -> StrongClassifier {
        StrongClassifier {
            weak,
            bank_fingerprint,
            decision_threshold,
        }
    }

    pub fn weak(&self) -> &[WeakClassifier] {
        &self.weak
    }

    pub fn bank_fingerprint(&self) -> &str {
        &self.bank_fingerprint
    }

    pub fn decision_threshold(&self) -> f64 {
        self.decision_threshold
    }

    pub fn set_decision_threshold(&mut self, threshold: f64) {
        self.decision_threshold = threshold;
    }

    /// Errors unless `bank` is the bank this model was trained against.
    pub fn check_bank(&self, bank: &FeatureBank) -> Result<()> {
        let fp = bank.fingerprint();
        if fp != self.bank_fingerprint {
            return Err(Error::BankFingerprintMismatch {
                model: self.bank_fingerprint.clone(),
                bank: fp,
            });
        }
        Ok(())
    }

    /// Ensemble margin for one extracted feature vector.
    pub fn score(&self, features: &[f64]) -> Result<f64> {
        let mut margin = 0.0;
        for stump in &self.weak {
            let value = *features.get(stump.feature_id as usize).ok_or(
                Error::FeatureIdOutOfRange {
                    feature_id: stump.feature_id as usize,
                    n_features: features.len(),
                },
            )?;
            margin += stump.alpha * stump.predict(value);
        }
        Ok(margin)
    }

    pub fn decide(&self, features: &[f64]) -> Result<PairLabel> {
        Ok(if self.score(features)? >= self.decision_threshold {
            PairLabel::Same
        } else {
            PairLabel::Different
        })
    }

    /// Writes the model as versioned JSON. The encoding is canonical
    /// (fixed field order, shortest lossless floats), so identical models
    /// serialize to identical bytes.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = ModelFile {
            version: MODEL_VERSION,
            bank_fingerprint: self.bank_fingerprint.clone(),
            decision_threshold: self.decision_threshold,
            stumps: self.weak.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("model serialization");
        text.push('\n');
        fs::write(path, text).map_err(|source| Error::Write {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<StrongClassifier> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| Error::MalformedModel {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?;
        if file.version != MODEL_VERSION {
            return Err(Error::ModelVersion {
                got: file.version,
                expected: MODEL_VERSION,
            });
        }
        for stump in &file.stumps {
            if stump.alpha.is_nan() || stump.alpha < 0.0 {
                return Err(Error::MalformedModel {
                    path: path.to_path_buf(),
                    reason: format!(
                        "stump for feature {} has negative alpha {}",
                        stump.feature_id, stump.alpha
                    ),
                });
            }
        }
        Ok(StrongClassifier {
            weak: file.stumps,
            bank_fingerprint: file.bank_fingerprint,
            decision_threshold: file.decision_threshold,
        })
    }
}

/// On-disk model schema, version 1.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    bank_fingerprint: String,
    decision_threshold: f64,
    stumps: Vec<WeakClassifier>,
}

/// Per-round training record.
#[derive(Debug, Clone)]
pub struct RoundLog {
    pub feature_id: u32,
    pub threshold: f64,
    pub polarity: Polarity,
    /// Weighted error of the selected stump, clamped away from 0 and 1.
    pub epsilon: f64,
    /// Unclamped weighted error.
    pub raw_error: f64,
    pub alpha: f64,
    /// Sum of sample weights right after this round's normalization.
    pub weight_sum: f64,
    /// Prefix product of `2*sqrt(eps*(1-eps))` up to this round.
    pub bound: f64,
    /// Weighted training error of the prefix ensemble under the initial
    /// class-balanced weights.
    pub ensemble_error: f64,
}

/// Full training trace; the CLI prints it and the verification suites
/// check the AdaBoost invariants against it.
#[derive(Debug, Clone, Default)]
pub struct TrainingLog {
    pub rounds: Vec<RoundLog>,
}

impl TrainingLog {
    pub fn final_bound(&self) -> f64 {
        self.rounds.last().map_or(1.0, |r| r.bound)
    }

    pub fn final_training_error(&self) -> f64 {
        self.rounds.last().map_or(1.0, |r| r.ensemble_error)
    }
}

/// Optimal decision stump for one feature under the samples' weights.
///
/// Candidate thresholds are the midpoints between consecutive distinct
/// feature values plus two sentinels beyond the data; both polarities are
/// tried at each. Ties break toward the smallest threshold, then polarity
/// `Plus`. The returned error never exceeds 0.5: flipping polarity turns
/// an error `e` stump into a `1 - e` one.
pub fn train_stump(samples: &[LabeledPair], feature_id: usize) -> Result<StumpFit> {
    if samples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    validate_two_classes(samples)?;
    let n_features = samples[0].features.len();
    if feature_id >= n_features {
        return Err(Error::FeatureIdOutOfRange {
            feature_id,
            n_features,
        });
    }
    let values: Vec<f64> = samples.iter().map(|s| s.features[feature_id]).collect();
    let weights: Vec<f64> = samples.iter().map(|s| s.weight).collect();
    let signs: Vec<f64> = samples.iter().map(|s| s.label.sign()).collect();
    let mut order: Vec<u32> = (0..samples.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        values[a as usize]
            .total_cmp(&values[b as usize])
            .then(a.cmp(&b))
    });
    Ok(scan_sorted_feature(&values, &order, &signs, &weights))
}

fn validate_two_classes(samples: &[LabeledPair]) -> Result<()> {
    let has_pos = samples.iter().any(|s| s.label == PairLabel::Same);
    let has_neg = samples.iter().any(|s| s.label == PairLabel::Different);
    match (has_pos, has_neg) {
        (true, true) => Ok(()),
        (true, false) => Err(Error::SingleClass("same")),
        (false, true) => Err(Error::SingleClass("different")),
        (false, false) => Err(Error::EmptyTrainingSet),
    }
}

/// Weighted scan over one feature in sorted order. `order` holds sample
/// indices ascending by value; equal values form one group, so every
/// candidate threshold realizes a distinct left/right split.
fn scan_sorted_feature(values: &[f64], order: &[u32], signs: &[f64], weights: &[f64]) -> StumpFit {
    let mut w_pos = 0.0;
    let mut w_neg = 0.0;
    for (i, &s) in signs.iter().enumerate() {
        if s > 0.0 {
            w_pos += weights[i];
        } else {
            w_neg += weights[i];
        }
    }

    let mut best = StumpFit {
        threshold: f64::NAN,
        polarity: Polarity::Plus,
        error: f64::INFINITY,
    };
    // below_*: weight mass strictly below the candidate threshold
    let consider = |threshold: f64, below_pos: f64, below_neg: f64, best: &mut StumpFit| {
        // Plus: predict "same" below the threshold
        let err_plus = below_neg + (w_pos - below_pos);
        if err_plus < best.error {
            *best = StumpFit {
                threshold,
                polarity: Polarity::Plus,
                error: err_plus,
            };
        }
        // Minus: predict "same" above the threshold
        let err_minus = below_pos + (w_neg - below_neg);
        if err_minus < best.error {
            *best = StumpFit {
                threshold,
                polarity: Polarity::Minus,
                error: err_minus,
            };
        }
    };

    consider(-THRESHOLD_SENTINEL, 0.0, 0.0, &mut best);
    let mut below_pos = 0.0;
    let mut below_neg = 0.0;
    let mut i = 0;
    let n = order.len();
    while i < n {
        let group_value = values[order[i] as usize];
        while i < n && values[order[i] as usize] == group_value {
            let idx = order[i] as usize;
            if signs[idx] > 0.0 {
                below_pos += weights[idx];
            } else {
                below_neg += weights[idx];
            }
            i += 1;
        }
        if i < n {
            let next_value = values[order[i] as usize];
            let mut mid = (group_value + next_value) / 2.0;
            if mid <= group_value {
                // adjacent floats: the upper value realizes the same split
                // under the strict-< rule
                mid = next_value;
            }
            consider(mid, below_pos, below_neg, &mut best);
        }
    }
    consider(THRESHOLD_SENTINEL, below_pos, below_neg, &mut best);
    best
}

/// Trains a discrete AdaBoost ensemble of `rounds` stumps.
pub fn adaboost_train(
    samples: &[LabeledPair],
    bank: &FeatureBank,
    rounds: usize,
) -> Result<StrongClassifier> {
    Ok(adaboost_train_with_log(samples, bank, rounds)?.0)
}

/// As [`adaboost_train`], also returning the per-round trace.
pub fn adaboost_train_with_log(
    samples: &[LabeledPair],
    bank: &FeatureBank,
    rounds: usize,
) -> Result<(StrongClassifier, TrainingLog)> {
    for s in samples {
        if s.features.len() != bank.len() {
            return Err(Error::FeatureCountMismatch {
                expected: bank.len(),
                got: s.features.len(),
            });
        }
    }
    let (weak, log) = train_core(samples, rounds)?;
    Ok((
        StrongClassifier {
            weak,
            bank_fingerprint: bank.fingerprint(),
            decision_threshold: 0.0,
        },
        log,
    ))
}

/// The boosting loop proper, independent of any bank bookkeeping.
fn train_core(
    samples: &[LabeledPair],
    rounds: usize,
) -> Result<(Vec<WeakClassifier>, TrainingLog)> {
    if rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be at least 1".into()));
    }
    if samples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    validate_two_classes(samples)?;
    let n_samples = samples.len();
    let n_features = samples[0].features.len();
    for s in samples {
        if s.features.len() != n_features {
            return Err(Error::FeatureCountMismatch {
                expected: n_features,
                got: s.features.len(),
            });
        }
    }

    // Feature-major layout: one contiguous row of sample values per
    // feature, argsorted once up front.
    let mut values = vec![0.0f64; n_features * n_samples];
    for (si, s) in samples.iter().enumerate() {
        for (fi, &v) in s.features.iter().enumerate() {
            values[fi * n_samples + si] = v;
        }
    }
    let mut order = vec![0u32; n_features * n_samples];
    order
        .par_chunks_mut(n_samples)
        .zip(values.par_chunks(n_samples))
        .for_each(|(ord, vals)| {
            for (i, o) in ord.iter_mut().enumerate() {
                *o = i as u32;
            }
            ord.sort_unstable_by(|&a, &b| {
                vals[a as usize].total_cmp(&vals[b as usize]).then(a.cmp(&b))
            });
        });

    let signs: Vec<f64> = samples.iter().map(|s| s.label.sign()).collect();
    let n_pos = signs.iter().filter(|&&s| s > 0.0).count();
    let n_neg = n_samples - n_pos;

    // Viola-Jones initialization: half the mass per class.
    let mut weights: Vec<f64> = signs
        .iter()
        .map(|&s| {
            if s > 0.0 {
                1.0 / (2.0 * n_pos as f64)
            } else {
                1.0 / (2.0 * n_neg as f64)
            }
        })
        .collect();
    let initial_weights = weights.clone();

    let mut weak = Vec::with_capacity(rounds);
    let mut log = TrainingLog::default();
    let mut margins = vec![0.0f64; n_samples];
    let mut bound = 1.0;

    for _ in 0..rounds {
        // (a) normalize
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let weight_sum: f64 = weights.iter().sum();
        assert!(
            (weight_sum - 1.0).abs() <= 1e-9,
            "weights renormalize to {weight_sum}"
        );

        // (b) best stump over every feature, against a read-only weight
        // snapshot; ties break toward the lowest feature id.
        let candidates: Vec<StumpFit> = (0..n_features)
            .into_par_iter()
            .map(|fi| {
                let vals = &values[fi * n_samples..(fi + 1) * n_samples];
                let ord = &order[fi * n_samples..(fi + 1) * n_samples];
                scan_sorted_feature(vals, ord, &signs, &weights)
            })
            .collect();
        let mut best_feature = 0usize;
        for (fi, c) in candidates.iter().enumerate() {
            if c.error < candidates[best_feature].error {
                best_feature = fi;
            }
        }
        let fit = candidates[best_feature];
        assert!(fit.error < 0.5, "selected stump error {} >= 0.5", fit.error);

        // (c) ensemble weight
        let epsilon = fit.error.clamp(EPSILON_CLAMP, 1.0 - EPSILON_CLAMP);
        let beta = epsilon / (1.0 - epsilon);
        let alpha = (1.0 / beta).ln();
        assert!(alpha > 0.0);

        let stump = WeakClassifier {
            feature_id: best_feature as u32,
            threshold: fit.threshold,
            polarity: fit.polarity,
            alpha,
        };

        // (d) shrink the weight of correctly classified samples
        let feature_values = &values[best_feature * n_samples..(best_feature + 1) * n_samples];
        for i in 0..n_samples {
            let h = stump.predict(feature_values[i]);
            if h == signs[i] {
                weights[i] *= beta;
            }
            margins[i] += alpha * h;
        }

        bound *= 2.0 * (epsilon * (1.0 - epsilon)).sqrt();
        let ensemble_error: f64 = (0..n_samples)
            .filter(|&i| {
                let predicted = if margins[i] >= 0.0 { 1.0 } else { -1.0 };
                predicted != signs[i]
            })
            .map(|i| initial_weights[i])
            .sum();

        log.rounds.push(RoundLog {
            feature_id: stump.feature_id,
            threshold: stump.threshold,
            polarity: stump.polarity,
            epsilon,
            raw_error: fit.error,
            alpha,
            weight_sum,
            bound,
            ensemble_error,
        });
        weak.push(stump);
    }

    Ok((weak, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Quantization;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(features: Vec<f64>, label: PairLabel, weight: f64) -> LabeledPair {
        LabeledPair {
            features,
            label,
            weight,
        }
    }

    /// Exhaustive stump search evaluating the literal prediction rule at
    /// every candidate threshold; independent of the scan implementation.
    fn exhaustive_stump(samples: &[LabeledPair], feature_id: usize) -> StumpFit {
        let mut values: Vec<f64> = samples.iter().map(|s| s.features[feature_id]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let mut candidates = vec![-THRESHOLD_SENTINEL];
        for w in values.windows(2) {
            let mut mid = (w[0] + w[1]) / 2.0;
            if mid <= w[0] {
                mid = w[1];
            }
            candidates.push(mid);
        }
        candidates.push(THRESHOLD_SENTINEL);
        let mut best = StumpFit {
            threshold: f64::NAN,
            polarity: Polarity::Plus,
            error: f64::INFINITY,
        };
        for &threshold in &candidates {
            for polarity in [Polarity::Plus, Polarity::Minus] {
                let probe = WeakClassifier {
                    feature_id: feature_id as u32,
                    threshold,
                    polarity,
                    alpha: 0.0,
                };
                let error: f64 = samples
                    .iter()
                    .filter(|s| probe.predict(s.features[feature_id]) != s.label.sign())
                    .map(|s| s.weight)
                    .sum();
                if error < best.error {
                    best = StumpFit {
                        threshold,
                        polarity,
                        error,
                    };
                }
            }
        }
        best
    }

    /// Random weights that are exact binary fractions summing to exactly 1,
    /// so both stump routes accumulate identical error values bitwise.
    fn dyadic_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        const DENOM: u64 = 1 << 20;
        let mut cuts: Vec<u64> = (0..n - 1).map(|_| rng.random_range(0..=DENOM)).collect();
        cuts.push(0);
        cuts.push(DENOM);
        cuts.sort_unstable();
        cuts.windows(2)
            .map(|w| (w[1] - w[0]) as f64 / DENOM as f64)
            .collect()
    }

    #[test]
    fn separable_singleton_threshold_at_midpoint() {
        let samples = vec![
            pair(vec![1.0], PairLabel::Same, 0.5),
            pair(vec![0.0], PairLabel::Different, 0.5),
        ];
        let fit = train_stump(&samples, 0).unwrap();
        assert_eq!(fit.error, 0.0);
        assert_eq!(fit.threshold, 0.5);
        // positives sit above the threshold
        assert_eq!(fit.polarity, Polarity::Minus);
    }

    #[test]
    fn uninformative_feature_hits_class_mass_floor() {
        let samples = vec![
            pair(vec![0.3], PairLabel::Same, 0.2),
            pair(vec![0.3], PairLabel::Same, 0.2),
            pair(vec![0.3], PairLabel::Different, 0.6),
        ];
        let fit = train_stump(&samples, 0).unwrap();
        assert!((fit.error - 0.4).abs() < 1e-15);
        assert_eq!(fit.threshold.abs(), THRESHOLD_SENTINEL);
    }

    #[test]
    fn stump_matches_exhaustive_search_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..30 {
            let n = 20;
            let weights = dyadic_weights(&mut rng, n);
            let samples: Vec<LabeledPair> = (0..n)
                .map(|i| {
                    let features: Vec<f64> =
                        (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
                    let label = if rng.random_range(0..2) == 0 {
                        PairLabel::Same
                    } else {
                        PairLabel::Different
                    };
                    pair(features, label, weights[i])
                })
                .collect();
            if samples.iter().all(|s| s.label == PairLabel::Same)
                || samples.iter().all(|s| s.label == PairLabel::Different)
            {
                continue;
            }
            for feature_id in 0..10 {
                let fast = train_stump(&samples, feature_id).unwrap();
                let slow = exhaustive_stump(&samples, feature_id);
                assert_eq!(fast.error, slow.error, "feature {feature_id}");
                assert_eq!(fast.threshold, slow.threshold, "feature {feature_id}");
                assert_eq!(fast.polarity, slow.polarity, "feature {feature_id}");
                assert!(fast.error <= 0.5 + 1e-12);
            }
        }
    }

    #[test]
    fn stump_rejects_degenerate_inputs() {
        assert!(matches!(train_stump(&[], 0), Err(Error::EmptyTrainingSet)));
        let one_class = vec![pair(vec![0.0], PairLabel::Same, 1.0)];
        assert!(matches!(
            train_stump(&one_class, 0),
            Err(Error::SingleClass("same"))
        ));
        let two = vec![
            pair(vec![0.0], PairLabel::Same, 0.5),
            pair(vec![1.0], PairLabel::Different, 0.5),
        ];
        assert!(matches!(
            train_stump(&two, 3),
            Err(Error::FeatureIdOutOfRange { .. })
        ));
    }

    fn tiny_bank() -> FeatureBank {
        // 4 descriptors: one frame, the kinds whose tiling divides 8x8
        FeatureBank::generate(
            8,
            8,
            Quantization {
                min_size: 8,
                position_stride: 8,
                size_stride: 8,
            },
        )
        .unwrap()
    }

    fn synthetic_samples(rng: &mut ChaCha8Rng, n: usize, n_features: usize) -> Vec<LabeledPair> {
        (0..n)
            .map(|i| {
                let label = if i % 2 == 0 {
                    PairLabel::Same
                } else {
                    PairLabel::Different
                };
                // feature 0 separates with margin, the rest are noise
                let mut features: Vec<f64> =
                    (0..n_features).map(|_| rng.random_range(-1.0..1.0)).collect();
                features[0] = label.sign() * rng.random_range(0.5..1.0);
                LabeledPair::new(features, label)
            })
            .collect()
    }

    #[test]
    fn perfect_feature_selected_in_round_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let samples = synthetic_samples(&mut rng, 20, 4);
        let bank = tiny_bank();
        let (model, log) = adaboost_train_with_log(&samples, &bank, 1).unwrap();
        assert_eq!(model.weak()[0].feature_id, 0);
        assert!(log.rounds[0].raw_error == 0.0);
        assert_eq!(log.rounds[0].epsilon, EPSILON_CLAMP);
        assert_eq!(log.final_training_error(), 0.0);
    }

    #[test]
    fn single_round_matches_best_stump_decision() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut samples = synthetic_samples(&mut rng, 30, 4);
        // make it non-separable so alpha stays finite and meaningful
        samples[0].features[0] = -samples[0].features[0];
        for s in &mut samples {
            s.weight = 1.0 / 30.0;
        }
        let bank = tiny_bank();
        let model = adaboost_train(&samples, &bank, 1).unwrap();
        let stump = &model.weak()[0];
        let mut refit = samples.clone();
        // the round trains on class-balanced weights
        let n_pos = refit.iter().filter(|s| s.label == PairLabel::Same).count();
        let n_neg = refit.len() - n_pos;
        for s in &mut refit {
            s.weight = if s.label == PairLabel::Same {
                1.0 / (2.0 * n_pos as f64)
            } else {
                1.0 / (2.0 * n_neg as f64)
            };
        }
        let fit = train_stump(&refit, stump.feature_id as usize).unwrap();
        assert_eq!(fit.threshold, stump.threshold);
        assert_eq!(fit.polarity, stump.polarity);
        for s in &samples {
            let margin = model.score(&s.features).unwrap();
            let expect = stump.alpha * stump.predict(s.features[stump.feature_id as usize]);
            assert_eq!(margin, expect);
        }
    }

    #[test]
    fn bound_is_nonincreasing_and_dominates_training_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let samples: Vec<LabeledPair> = (0..50)
            .map(|i| {
                let label = if i < 25 { PairLabel::Same } else { PairLabel::Different };
                let features: Vec<f64> = (0..4)
                    .map(|f| {
                        // weak, noisy class signal on every feature
                        label.sign() * 0.3 + rng.random_range(-1.0..1.0) + f as f64 * 0.01
                    })
                    .collect();
                LabeledPair::new(features, label)
            })
            .collect();
        let bank = tiny_bank();
        let (_, log) = adaboost_train_with_log(&samples, &bank, 5).unwrap();
        let mut prev = 1.0;
        for round in &log.rounds {
            assert!(round.epsilon < 0.5);
            assert!(round.alpha > 0.0);
            assert!((round.weight_sum - 1.0).abs() <= 1e-9);
            assert!(round.bound <= prev + 1e-15);
            assert!(round.ensemble_error <= round.bound + 1e-12);
            prev = round.bound;
        }
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let samples = synthetic_samples(&mut rng, 24, 4);
        let bank = tiny_bank();
        let a = adaboost_train(&samples, &bank, 3).unwrap();
        let b = adaboost_train(&samples, &bank, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn positive_rescaling_of_a_feature_preserves_selection_and_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let samples = synthetic_samples(&mut rng, 30, 4);
        let bank = tiny_bank();
        let (base, base_log) = adaboost_train_with_log(&samples, &bank, 3).unwrap();
        let mut scaled = samples.clone();
        for s in &mut scaled {
            s.features[0] *= 7.5;
        }
        let (rescaled, rescaled_log) = adaboost_train_with_log(&scaled, &bank, 3).unwrap();
        for (a, b) in base_log.rounds.iter().zip(&rescaled_log.rounds) {
            assert_eq!(a.feature_id, b.feature_id);
        }
        for (s, t) in samples.iter().zip(&scaled) {
            let da = base.decide(&s.features).unwrap();
            let db = rescaled.decide(&t.features).unwrap();
            assert_eq!(da, db);
        }
    }

    #[test]
    fn adaboost_validates_inputs() {
        let bank = tiny_bank();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let samples = synthetic_samples(&mut rng, 10, 4);
        assert!(matches!(
            adaboost_train(&samples, &bank, 0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            adaboost_train(&[], &bank, 1),
            Err(Error::EmptyTrainingSet)
        ));
        let one_class: Vec<LabeledPair> = samples
            .iter()
            .filter(|s| s.label == PairLabel::Same)
            .cloned()
            .collect();
        assert!(matches!(
            adaboost_train(&one_class, &bank, 1),
            Err(Error::SingleClass(_))
        ));
        let short = vec![
            pair(vec![0.0], PairLabel::Same, 1.0),
            pair(vec![1.0], PairLabel::Different, 1.0),
        ];
        assert!(matches!(
            adaboost_train(&short, &bank, 1),
            Err(Error::FeatureCountMismatch { .. })
        ));
    }

    #[test]
    fn score_all_zero_alpha_gives_zero_margin() {
        let model = StrongClassifier::from_parts(
            vec![WeakClassifier {
                feature_id: 0,
                threshold: 0.5,
                polarity: Polarity::Plus,
                alpha: 0.0,
            }],
            "fp".into(),
            0.0,
        );
        assert_eq!(model.score(&[0.1]).unwrap(), 0.0);
        assert_eq!(model.score(&[0.9]).unwrap(), 0.0);
    }

    #[test]
    fn score_single_stump_margins() {
        let model = StrongClassifier::from_parts(
            vec![WeakClassifier {
                feature_id: 0,
                threshold: 0.5,
                polarity: Polarity::Plus,
                alpha: 1.0,
            }],
            "fp".into(),
            0.0,
        );
        assert_eq!(model.score(&[0.2]).unwrap(), 1.0);
        assert_eq!(model.score(&[0.7]).unwrap(), -1.0);
        assert!(matches!(
            model.score(&[]),
            Err(Error::FeatureIdOutOfRange { .. })
        ));
    }

    #[test]
    fn margin_matches_hand_computed_sum_of_stumps() {
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let samples = synthetic_samples(&mut rng, 30, 4);
        let bank = tiny_bank();
        let model = adaboost_train(&samples, &bank, 5).unwrap();
        for s in samples.iter().take(3) {
            let mut expect = 0.0;
            for stump in model.weak() {
                expect += stump.alpha * stump.predict(s.features[stump.feature_id as usize]);
            }
            assert_eq!(model.score(&s.features).unwrap(), expect);
        }
    }

    #[test]
    fn save_load_round_trip_is_field_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let samples = synthetic_samples(&mut rng, 20, 4);
        let bank = tiny_bank();
        let model = adaboost_train(&samples, &bank, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let loaded = StrongClassifier::load(&path).unwrap();
        assert_eq!(model, loaded);
        // re-saving the loaded model reproduces the bytes
        let second = dir.path().join("model2.json");
        loaded.save(&second).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&second).unwrap()
        );
    }

    #[test]
    fn unsupported_model_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(
            &path,
            r#"{"version": 999, "bank_fingerprint": "x", "decision_threshold": 0.0, "stumps": []}"#,
        )
        .unwrap();
        match StrongClassifier::load(&path) {
            Err(Error::ModelVersion { got: 999, .. }) => {}
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_model_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(
            StrongClassifier::load(&path),
            Err(Error::MalformedModel { .. })
        ));
        // polarity outside {-1, 1}
        std::fs::write(
            &path,
            r#"{"version": 1, "bank_fingerprint": "x", "decision_threshold": 0.0,
                "stumps": [{"feature_id": 0, "threshold": 0.5, "polarity": 2, "alpha": 1.0}]}"#,
        )
        .unwrap();
        assert!(matches!(
            StrongClassifier::load(&path),
            Err(Error::MalformedModel { .. })
        ));
    }

    #[test]
    fn hand_written_minimal_model_loads_and_scores() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(
            &path,
            r#"{
  "version": 1,
  "bank_fingerprint": "abc123",
  "decision_threshold": 0.0,
  "stumps": [
    {"feature_id": 1, "threshold": 0.25, "polarity": -1, "alpha": 2.0}
  ]
}"#,
        )
        .unwrap();
        let model = StrongClassifier::load(&path).unwrap();
        // polarity -1 predicts "same" above the threshold
        assert_eq!(model.score(&[0.0, 0.5]).unwrap(), 2.0);
        assert_eq!(model.score(&[0.0, 0.1]).unwrap(), -2.0);
        assert_eq!(model.decide(&[0.0, 0.5]).unwrap(), PairLabel::Same);
    }
}
