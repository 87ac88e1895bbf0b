//! Direct per-pixel evaluation of the cross-image filters.
//!
//! This is the slow reference route: every sum is an explicit loop over the
//! raw pixels, with no integral images anywhere. The benchmark command times
//! it against the fast path, and the oracle suites assert the two routes
//! agree numerically.

use crate::error::{Error, Result};
use crate::features::{FeatureDescriptor, FeatureKind, EPS_VAR};
use crate::image::{GrayImage, Rect};

fn pixel_sum(img: &GrayImage, r: &Rect) -> f64 {
    let mut sum = 0.0;
    for y in r.y..r.y + r.h {
        for x in r.x..r.x + r.w {
            sum += img.get(x, y);
        }
    }
    sum
}

fn check(img1: &GrayImage, img2: &GrayImage, d: &FeatureDescriptor) -> Result<()> {
    if img1.width() != img2.width() || img1.height() != img2.height() {
        return Err(Error::DimensionMismatch {
            w1: img1.width(),
            h1: img1.height(),
            w2: img2.width(),
            h2: img2.height(),
        });
    }
    if !d.frame.fits(img1.width(), img1.height()) {
        return Err(Error::RectOutOfBounds {
            rect: d.frame,
            width: img1.width(),
            height: img1.height(),
        });
    }
    Ok(())
}

/// Haar-like cross-image value by direct summation: black sub-rectangles
/// from `img1` minus white sub-rectangles from `img2`.
pub fn haar_value(img1: &GrayImage, img2: &GrayImage, d: &FeatureDescriptor) -> Result<f64> {
    if !d.kind.is_haar() {
        return Err(Error::KindMismatch {
            id: d.id,
            kind: d.kind.token(),
            expected: "a Haar kind",
        });
    }
    check(img1, img2, d)?;
    let f = d.frame;
    Ok(match d.kind {
        FeatureKind::HaarTwoH => {
            let half = f.w / 2;
            pixel_sum(img1, &Rect::new(f.x, f.y, half, f.h))
                - pixel_sum(img2, &Rect::new(f.x + half, f.y, half, f.h))
        }
        FeatureKind::HaarTwoV => {
            let half = f.h / 2;
            pixel_sum(img1, &Rect::new(f.x, f.y, f.w, half))
                - pixel_sum(img2, &Rect::new(f.x, f.y + half, f.w, half))
        }
        FeatureKind::HaarThree => {
            let third = f.w / 3;
            pixel_sum(img1, &Rect::new(f.x, f.y, third, f.h))
                + pixel_sum(img1, &Rect::new(f.x + 2 * third, f.y, third, f.h))
                - pixel_sum(img2, &Rect::new(f.x + third, f.y, third, f.h))
        }
        FeatureKind::HaarFour => {
            let hw = f.w / 2;
            let hh = f.h / 2;
            pixel_sum(img1, &Rect::new(f.x, f.y, hw, hh))
                + pixel_sum(img1, &Rect::new(f.x + hw, f.y + hh, hw, hh))
                - pixel_sum(img2, &Rect::new(f.x + hw, f.y, hw, hh))
                - pixel_sum(img2, &Rect::new(f.x, f.y + hh, hw, hh))
        }
        FeatureKind::Ncc => unreachable!(),
    })
}

/// NCC by explicit mean/deviation loops.
///
/// Means are computed first, then the centered cross term and the two sums
/// of squared deviations. The degenerate cutoff mirrors the fast path: a
/// patch counts as constant when `n * sum_sq_dev` drops below
/// [`EPS_VAR`](crate::features::EPS_VAR).
pub fn ncc_value(img1: &GrayImage, img2: &GrayImage, d: &FeatureDescriptor) -> Result<f64> {
    if d.kind != FeatureKind::Ncc {
        return Err(Error::KindMismatch {
            id: d.id,
            kind: d.kind.token(),
            expected: "ncc",
        });
    }
    check(img1, img2, d)?;
    let f = d.frame;
    let n = f.area() as f64;
    let mean1 = pixel_sum(img1, &f) / n;
    let mean2 = pixel_sum(img2, &f) / n;
    let mut cross = 0.0;
    let mut dev1 = 0.0;
    let mut dev2 = 0.0;
    for y in f.y..f.y + f.h {
        for x in f.x..f.x + f.w {
            let a = img1.get(x, y) - mean1;
            let b = img2.get(x, y) - mean2;
            cross += a * b;
            dev1 += a * a;
            dev2 += b * b;
        }
    }
    if n * dev1 < EPS_VAR || n * dev2 < EPS_VAR {
        return Ok(0.0);
    }
    Ok((cross / (dev1 * dev2).sqrt()).clamp(-1.0, 1.0))
}

/// Evaluates every descriptor of `bank`-like slice on the raw pair.
pub fn extract_all(
    img1: &GrayImage,
    img2: &GrayImage,
    descriptors: &[FeatureDescriptor],
) -> Result<Vec<f64>> {
    descriptors
        .iter()
        .map(|d| {
            if d.kind == FeatureKind::Ncc {
                ncc_value(img1, img2, d)
            } else {
                haar_value(img1, img2, d)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::PairIntegrals;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_three_agrees_with_fast_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let img1 = GrayImage::from_fn(12, 12, |_, _| rng.random_range(0.0..=1.0));
        let img2 = GrayImage::from_fn(12, 12, |_, _| rng.random_range(0.0..=1.0));
        let pi = PairIntegrals::new(&img1, &img2).unwrap();
        let d = FeatureDescriptor {
            id: 0,
            kind: FeatureKind::HaarThree,
            frame: Rect::new(1, 2, 9, 7),
        };
        let direct = haar_value(&img1, &img2, &d).unwrap();
        let fast = crate::features::haar_value(&pi, &d).unwrap();
        assert!((direct - fast).abs() < 1e-6);
    }

    #[test]
    fn ncc_degenerate_cutoff_matches_fast_path() {
        let flat = GrayImage::constant(6, 6, 0.25);
        let other = GrayImage::from_fn(6, 6, |x, y| ((x + y) % 2) as f64);
        let d = FeatureDescriptor {
            id: 0,
            kind: FeatureKind::Ncc,
            frame: Rect::new(0, 0, 6, 6),
        };
        assert_eq!(ncc_value(&flat, &other, &d).unwrap(), 0.0);
        let pi = PairIntegrals::new(&flat, &other).unwrap();
        assert_eq!(crate::features::ncc_value(&pi, &d).unwrap(), 0.0);
    }
}
