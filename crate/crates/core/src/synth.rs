//! Synthetic verification corpora for desk-scale experiments and tests.
//!
//! Each identity is a distinct smooth pattern (a few random low-frequency
//! cosine waves); its variants add pixelwise Gaussian noise. Same-identity
//! pairs therefore correlate strongly while cross-identity pairs do not,
//! which is exactly the structure the cross-image features pick up.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::CorpusEntry;
use crate::image::{save_pgm, GrayImage};

#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub identities: usize,
    pub variants_per_identity: usize,
    pub width: usize,
    pub height: usize,
    /// Standard deviation of the pixelwise intensity noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            identities: 10,
            variants_per_identity: 20,
            width: 64,
            height: 64,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

struct Wave {
    amplitude: f64,
    fx: f64,
    fy: f64,
    phase: f64,
}

/// Smooth per-identity base pattern, kept inside [0.05, 0.95] so noise
/// rarely clamps.
fn base_pattern(rng: &mut ChaCha8Rng, width: usize, height: usize) -> GrayImage {
    let waves: Vec<Wave> = (0..3)
        .map(|_| Wave {
            amplitude: rng.random_range(0.08..0.15),
            fx: rng.random_range(0.5..2.5),
            fy: rng.random_range(0.5..2.5),
            phase: rng.random_range(0.0..TAU),
        })
        .collect();
    GrayImage::from_fn(width, height, |x, y| {
        let mut v = 0.5;
        for w in &waves {
            v += w.amplitude
                * (TAU * (w.fx * x as f64 / width as f64 + w.fy * y as f64 / height as f64)
                    + w.phase)
                    .cos();
        }
        v
    })
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let v: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u.ln()).sqrt() * (TAU * v).cos()
}

/// Writes the corpus under `dir` as `id<k>/v<j>.pgm`, one directory per
/// identity, and returns the entries in generation order. Deterministic
/// under the configured seed.
pub fn generate_corpus(dir: &Path, spec: &SynthSpec) -> Result<Vec<CorpusEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut entries = Vec::with_capacity(spec.identities * spec.variants_per_identity);
    for identity in 0..spec.identities {
        let base = base_pattern(&mut rng, spec.width, spec.height);
        let identity_name = format!("id{identity:02}");
        let identity_dir = dir.join(&identity_name);
        fs::create_dir_all(&identity_dir).map_err(|source| Error::Write {
            path: identity_dir.clone(),
            source,
        })?;
        for variant in 0..spec.variants_per_identity {
            let image = GrayImage::from_fn(spec.width, spec.height, |x, y| {
                base.get(x, y) + spec.noise_sigma * gaussian(&mut rng)
            });
            let path = identity_dir.join(format!("v{variant:02}.pgm"));
            save_pgm(&path, &image)?;
            entries.push(CorpusEntry {
                identity: identity_name.clone(),
                path,
            });
        }
    }
    Ok(entries)
}
