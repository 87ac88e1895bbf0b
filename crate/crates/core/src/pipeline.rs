//! Plumbing from manifests to training-ready feature vectors: ingest each
//! pair, canonicalize to the analysis window, extract the full bank.

use rayon::prelude::*;

use crate::boosting::LabeledPair;
use crate::error::Result;
use crate::eval::ManifestEntry;
use crate::features::{FeatureBank, PairIntegrals, Quantization};
use crate::image::{load_image, GrayImage};

/// Everything that pins a training run: the analysis window and
/// quantization (which fix the bank), the boosting rounds, and the sampling
/// seed. Runs with equal configs are reproducible bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub window_w: usize,
    pub window_h: usize,
    pub quantization: Quantization,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            window_w: 64,
            window_h: 64,
            quantization: Quantization::default(),
            rounds: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn bank(&self) -> Result<FeatureBank> {
        FeatureBank::generate(self.window_w, self.window_h, self.quantization)
    }
}

/// Loads both images of a pair and resizes them to the analysis window.
pub fn ingest_pair(
    entry: &ManifestEntry,
    window_w: usize,
    window_h: usize,
) -> Result<(GrayImage, GrayImage)> {
    let img1 = load_image(&entry.path1)?.resize_bilinear(window_w, window_h)?;
    let img2 = load_image(&entry.path2)?.resize_bilinear(window_w, window_h)?;
    Ok((img1, img2))
}

/// Full-bank feature vector of one canonicalized pair.
pub fn pair_features(img1: &GrayImage, img2: &GrayImage, bank: &FeatureBank) -> Result<Vec<f64>> {
    let pi = PairIntegrals::new(img1, img2)?;
    bank.extract(&pi)
}

/// Ingests and extracts every manifest entry, in manifest order.
///
/// Entries are processed in parallel; the output is identical at any
/// thread count. The first failing entry (in manifest order) is reported.
pub fn load_dataset(entries: &[ManifestEntry], bank: &FeatureBank) -> Result<Vec<LabeledPair>> {
    let (window_w, window_h) = bank.window();
    let results: Vec<Result<LabeledPair>> = entries
        .par_iter()
        .map(|entry| {
            let (img1, img2) = ingest_pair(entry, window_w, window_h)?;
            let features = pair_features(&img1, &img2, bank)?;
            Ok(LabeledPair::new(features, entry.label))
        })
        .collect();
    let mut dataset = Vec::with_capacity(results.len());
    for r in results {
        dataset.push(r?);
    }
    Ok(dataset)
}
