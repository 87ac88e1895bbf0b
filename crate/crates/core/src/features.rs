//! Cross-image rectangle features over an image pair.
//!
//! Two filter families are evaluated on a pair `(I1, I2)` canonicalized to a
//! fixed window:
//!
//! * Haar-like difference filters, where the "black" sub-rectangles are
//!   summed in the first image and the "white" sub-rectangles in the second,
//!   so the value measures how the two images differ over adjacent regions.
//! * A normalized cross-correlation (NCC) filter over the same rectangle in
//!   both images, invariant to affine intensity changes of either patch.
//!
//! Every sum is taken from one of five integral images (`I1`, `I2`,
//! `I1*I2`, `I1^2`, `I2^2`), so each feature costs a handful of table
//! lookups regardless of its area. The [`naive`](crate::naive) module holds
//! the direct per-pixel route used to cross-check this one.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::{GrayImage, IntegralImage, Rect};

/// Variance terms of the NCC below this are treated as a constant patch.
pub const EPS_VAR: f64 = 1e-10;

/// The five cross-image filter shapes.
///
/// The four Haar kinds split their frame into equal tiles; `Ncc` correlates
/// the whole frame at the same location in both images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    /// Two tiles side by side: left black, right white.
    HaarTwoH,
    /// Two tiles stacked: top black, bottom white.
    HaarTwoV,
    /// Three tiles in a row: outer thirds black, middle white.
    HaarThree,
    /// 2x2 checkerboard: top-left and bottom-right black.
    HaarFour,
    /// Normalized cross-correlation of the frame.
    Ncc,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::HaarTwoH,
        FeatureKind::HaarTwoV,
        FeatureKind::HaarThree,
        FeatureKind::HaarFour,
        FeatureKind::Ncc,
    ];

    /// Token used in the bank text export.
    pub fn token(&self) -> &'static str {
        match self {
            FeatureKind::HaarTwoH => "haar2h",
            FeatureKind::HaarTwoV => "haar2v",
            FeatureKind::HaarThree => "haar3",
            FeatureKind::HaarFour => "haar4",
            FeatureKind::Ncc => "ncc",
        }
    }

    pub fn from_token(s: &str) -> Option<FeatureKind> {
        FeatureKind::ALL.into_iter().find(|k| k.token() == s)
    }

    pub fn is_haar(&self) -> bool {
        !matches!(self, FeatureKind::Ncc)
    }

    /// Frame width must be divisible by this for the tiles to fit exactly.
    fn width_divisor(&self) -> usize {
        match self {
            FeatureKind::HaarTwoH | FeatureKind::HaarFour => 2,
            FeatureKind::HaarThree => 3,
            FeatureKind::HaarTwoV | FeatureKind::Ncc => 1,
        }
    }

    /// Frame height must be divisible by this.
    fn height_divisor(&self) -> usize {
        match self {
            FeatureKind::HaarTwoV | FeatureKind::HaarFour => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// One quantized rectangle filter: shape plus its frame in the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureDescriptor {
    pub id: u32,
    pub kind: FeatureKind,
    pub frame: Rect,
}

/// Grid that quantizes filter positions and sizes inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quantization {
    /// Smallest frame edge, in pixels.
    pub min_size: usize,
    /// Step between candidate frame origins.
    pub position_stride: usize,
    /// Step between candidate frame extents.
    pub size_stride: usize,
}

impl Default for Quantization {
    /// Default grid for the 64x64 window; enumerates to a bank in the
    /// mid-20k range (see `FeatureBank::generate`).
    fn default() -> Self {
        Quantization {
            min_size: 8,
            position_stride: 3,
            size_stride: 8,
        }
    }
}

impl Quantization {
    fn validate(&self) -> Result<()> {
        if self.min_size == 0 || self.position_stride == 0 || self.size_stride == 0 {
            return Err(Error::InvalidConfig(
                "quantization sizes and strides must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// The exhaustive, deterministically ordered enumeration of descriptors for
/// one window/quantization, shared by training and scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureBank {
    window_w: usize,
    window_h: usize,
    quantization: Quantization,
    descriptors: Vec<FeatureDescriptor>,
}

impl FeatureBank {
    /// Enumerates every frame on the position/size grid whose tiles divide
    /// evenly, kind-major, then by ascending `(y, x, h, w)`.
    ///
    /// Generation is deterministic: the same window and quantization always
    /// produce the identical descriptor list, and therefore the identical
    /// fingerprint.
    pub fn generate(window_w: usize, window_h: usize, q: Quantization) -> Result<FeatureBank> {
        q.validate()?;
        if window_w < q.min_size || window_h < q.min_size {
            return Err(Error::WindowTooSmall {
                window_w,
                window_h,
                min_size: q.min_size,
            });
        }
        let mut descriptors = Vec::new();
        for kind in FeatureKind::ALL {
            let wd = kind.width_divisor();
            let hd = kind.height_divisor();
            for y in (0..=window_h - q.min_size).step_by(q.position_stride) {
                for x in (0..=window_w - q.min_size).step_by(q.position_stride) {
                    for h in (q.min_size..=window_h - y).step_by(q.size_stride) {
                        if h % hd != 0 {
                            continue;
                        }
                        for w in (q.min_size..=window_w - x).step_by(q.size_stride) {
                            if w % wd != 0 {
                                continue;
                            }
                            descriptors.push(FeatureDescriptor {
                                id: descriptors.len() as u32,
                                kind,
                                frame: Rect::new(x, y, w, h),
                            });
                        }
                    }
                }
            }
        }
        Ok(FeatureBank {
            window_w,
            window_h,
            quantization: q,
            descriptors,
        })
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn window(&self) -> (usize, usize) {
        (self.window_w, self.window_h)
    }

    pub fn quantization(&self) -> Quantization {
        self.quantization
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.descriptors
    }

    pub fn descriptor(&self, id: usize) -> Option<&FeatureDescriptor> {
        self.descriptors.get(id)
    }

    /// Text export: header comments, then one `id kind x y w h` line per
    /// descriptor. This is the byte sequence the fingerprint hashes.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# window {} {}\n", self.window_w, self.window_h));
        out.push_str(&format!(
            "# quantization min_size={} position_stride={} size_stride={}\n",
            self.quantization.min_size, self.quantization.position_stride, self.quantization.size_stride
        ));
        for d in &self.descriptors {
            out.push_str(&format!(
                "{} {} {} {} {} {}\n",
                d.id, d.kind, d.frame.x, d.frame.y, d.frame.w, d.frame.h
            ));
        }
        out
    }

    /// SHA-256 of the text export, in hex; binds trained models to the
    /// exact bank they were trained against.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.export_text().as_bytes()))
    }

    /// Evaluates every descriptor on the pair, in bank order.
    pub fn extract(&self, pi: &PairIntegrals) -> Result<Vec<f64>> {
        if pi.width() != self.window_w || pi.height() != self.window_h {
            return Err(Error::DimensionMismatch {
                w1: pi.width(),
                h1: pi.height(),
                w2: self.window_w,
                h2: self.window_h,
            });
        }
        Ok(self
            .descriptors
            .iter()
            .map(|d| evaluate_unchecked(pi, d))
            .collect())
    }
}

/// The five integral images of a pair; everything NCC and Haar evaluation
/// needs, at any rectangle, in O(1).
#[derive(Debug, Clone)]
pub struct PairIntegrals {
    width: usize,
    height: usize,
    ii1: IntegralImage,
    ii2: IntegralImage,
    ii12: IntegralImage,
    ii1sq: IntegralImage,
    ii2sq: IntegralImage,
}

impl PairIntegrals {
    pub fn new(img1: &GrayImage, img2: &GrayImage) -> Result<PairIntegrals> {
        if img1.width() != img2.width() || img1.height() != img2.height() {
            return Err(Error::DimensionMismatch {
                w1: img1.width(),
                h1: img1.height(),
                w2: img2.width(),
                h2: img2.height(),
            });
        }
        let (w, h) = (img1.width(), img1.height());
        Ok(PairIntegrals {
            width: w,
            height: h,
            ii1: img1.integral(),
            ii2: img2.integral(),
            ii12: IntegralImage::from_fn(w, h, |x, y| img1.get(x, y) * img2.get(x, y)),
            ii1sq: IntegralImage::from_fn(w, h, |x, y| img1.get(x, y) * img1.get(x, y)),
            ii2sq: IntegralImage::from_fn(w, h, |x, y| img2.get(x, y) * img2.get(x, y)),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn first(&self) -> &IntegralImage {
        &self.ii1
    }

    pub fn second(&self) -> &IntegralImage {
        &self.ii2
    }

    pub fn product(&self) -> &IntegralImage {
        &self.ii12
    }

    pub fn first_squared(&self) -> &IntegralImage {
        &self.ii1sq
    }

    pub fn second_squared(&self) -> &IntegralImage {
        &self.ii2sq
    }

    fn check_frame(&self, d: &FeatureDescriptor) -> Result<()> {
        if !d.frame.fits(self.width, self.height) {
            return Err(Error::RectOutOfBounds {
                rect: d.frame,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }
}

/// Patch statistics over one rect of the pair, reconstructed from the five
/// integrals. Variances are population variances, clamped at zero when
/// round-off drives them slightly negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchStats {
    pub n: usize,
    pub sum1: f64,
    pub sum2: f64,
    pub mean1: f64,
    pub mean2: f64,
    pub var1: f64,
    pub var2: f64,
}

impl PatchStats {
    pub fn from_integrals(pi: &PairIntegrals, r: &Rect) -> Result<PatchStats> {
        if !r.fits(pi.width, pi.height) {
            return Err(Error::RectOutOfBounds {
                rect: *r,
                width: pi.width,
                height: pi.height,
            });
        }
        let n = r.area();
        let nf = n as f64;
        let sum1 = pi.ii1.box_sum_unchecked(r);
        let sum2 = pi.ii2.box_sum_unchecked(r);
        let sq1 = pi.ii1sq.box_sum_unchecked(r);
        let sq2 = pi.ii2sq.box_sum_unchecked(r);
        Ok(PatchStats {
            n,
            sum1,
            sum2,
            mean1: sum1 / nf,
            mean2: sum2 / nf,
            var1: (sq1 / nf - (sum1 / nf) * (sum1 / nf)).max(0.0),
            var2: (sq2 / nf - (sum2 / nf) * (sum2 / nf)).max(0.0),
        })
    }
}

/// Haar-like cross-image value: black sub-rectangles summed in the first
/// image minus white sub-rectangles summed in the second. Raw sums, no
/// area normalization.
pub fn haar_value(pi: &PairIntegrals, d: &FeatureDescriptor) -> Result<f64> {
    if !d.kind.is_haar() {
        return Err(Error::KindMismatch {
            id: d.id,
            kind: d.kind.token(),
            expected: "a Haar kind",
        });
    }
    pi.check_frame(d)?;
    Ok(haar_value_unchecked(pi, d))
}

fn haar_value_unchecked(pi: &PairIntegrals, d: &FeatureDescriptor) -> f64 {
    let f = d.frame;
    let black = |r: Rect| pi.ii1.box_sum_unchecked(&r);
    let white = |r: Rect| pi.ii2.box_sum_unchecked(&r);
    match d.kind {
        FeatureKind::HaarTwoH => {
            let half = f.w / 2;
            black(Rect::new(f.x, f.y, half, f.h)) - white(Rect::new(f.x + half, f.y, half, f.h))
        }
        FeatureKind::HaarTwoV => {
            let half = f.h / 2;
            black(Rect::new(f.x, f.y, f.w, half)) - white(Rect::new(f.x, f.y + half, f.w, half))
        }
        FeatureKind::HaarThree => {
            let third = f.w / 3;
            black(Rect::new(f.x, f.y, third, f.h))
                + black(Rect::new(f.x + 2 * third, f.y, third, f.h))
                - white(Rect::new(f.x + third, f.y, third, f.h))
        }
        FeatureKind::HaarFour => {
            let hw = f.w / 2;
            let hh = f.h / 2;
            black(Rect::new(f.x, f.y, hw, hh)) + black(Rect::new(f.x + hw, f.y + hh, hw, hh))
                - white(Rect::new(f.x + hw, f.y, hw, hh))
                - white(Rect::new(f.x, f.y + hh, hw, hh))
        }
        FeatureKind::Ncc => unreachable!("checked by caller"),
    }
}

/// Normalized cross-correlation of the frame between the two images,
/// computed from the five integrals:
///
/// ```text
///         n*S12 - S1*S2
/// -----------------------------------     Sk  = box sum of Ik,
/// sqrt((n*S11 - S1^2)(n*S22 - S2^2))      Skk = box sum of Ik^2
/// ```
///
/// If either variance term falls below [`EPS_VAR`] the patch is treated as
/// constant and the value is 0; otherwise the result is clamped to
/// `[-1, 1]` to absorb round-off.
pub fn ncc_value(pi: &PairIntegrals, d: &FeatureDescriptor) -> Result<f64> {
    if d.kind != FeatureKind::Ncc {
        return Err(Error::KindMismatch {
            id: d.id,
            kind: d.kind.token(),
            expected: "ncc",
        });
    }
    pi.check_frame(d)?;
    Ok(ncc_value_unchecked(pi, d))
}

fn ncc_value_unchecked(pi: &PairIntegrals, d: &FeatureDescriptor) -> f64 {
    let r = &d.frame;
    let n = r.area() as f64;
    let s1 = pi.ii1.box_sum_unchecked(r);
    let s2 = pi.ii2.box_sum_unchecked(r);
    let s12 = pi.ii12.box_sum_unchecked(r);
    let s11 = pi.ii1sq.box_sum_unchecked(r);
    let s22 = pi.ii2sq.box_sum_unchecked(r);
    let var1 = n * s11 - s1 * s1;
    let var2 = n * s22 - s2 * s2;
    if var1 < EPS_VAR || var2 < EPS_VAR {
        return 0.0;
    }
    let value = (n * s12 - s1 * s2) / (var1 * var2).sqrt();
    value.clamp(-1.0, 1.0)
}

/// Evaluates one descriptor of any kind; callers must have validated the
/// frame against the integrals (bank generation guarantees it).
pub(crate) fn evaluate_unchecked(pi: &PairIntegrals, d: &FeatureDescriptor) -> f64 {
    if d.kind == FeatureKind::Ncc {
        ncc_value_unchecked(pi, d)
    } else {
        haar_value_unchecked(pi, d)
    }
}

/// Checked single-descriptor evaluation.
pub fn feature_value(pi: &PairIntegrals, d: &FeatureDescriptor) -> Result<f64> {
    if d.kind == FeatureKind::Ncc {
        ncc_value(pi, d)
    } else {
        haar_value(pi, d)
    }
}
