//! Grayscale rasters, integral images and O(1) box sums.
//!
//! Intensities are stored as `f64` in `[0, 1]`. Integral tables use the
//! `(W+1) x (H+1)` exclusive-prefix layout: the first row and column are
//! zero, so a box sum needs four lookups and no boundary special-casing.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Canonicalized grayscale raster with row-major `[0, 1]` intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Builds an image from row-major pixels, validating the type invariants.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if pixels.len() != width * height {
            return Err(Error::PixelCountMismatch {
                width,
                height,
                got: pixels.len(),
            });
        }
        for (index, &value) in pixels.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::IntensityOutOfRange { index, value });
            }
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel, clamping to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        GrayImage {
            width,
            height,
            pixels,
        }
    }

    /// Constant-intensity image.
    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    /// Bilinear resample with pixel-center alignment.
    ///
    /// Source coordinates are `sx = (x + 0.5) * sw/tw - 0.5` (same for y);
    /// samples outside the grid clamp to the border pixel. Resizing to the
    /// source dimensions reproduces the input exactly, and outputs stay in
    /// `[0, 1]`.
    pub fn resize_bilinear(&self, target_w: usize, target_h: usize) -> Result<GrayImage> {
        if target_w == 0 || target_h == 0 {
            return Err(Error::EmptyImage);
        }
        let scale_x = self.width as f64 / target_w as f64;
        let scale_y = self.height as f64 / target_h as f64;
        // lerp as a + t*(b - a): exact for t = 0 and for a == b, so the
        // identity and constant cases hold bit-for-bit.
        let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
        let clamp_index = |i: isize, upper: usize| i.clamp(0, upper as isize - 1) as usize;
        let mut pixels = Vec::with_capacity(target_w * target_h);
        for y in 0..target_h {
            let sy = (y as f64 + 0.5) * scale_y - 0.5;
            let y0i = sy.floor() as isize;
            let ty = sy - y0i as f64;
            let y0 = clamp_index(y0i, self.height);
            let y1 = clamp_index(y0i + 1, self.height);
            for x in 0..target_w {
                let sx = (x as f64 + 0.5) * scale_x - 0.5;
                let x0i = sx.floor() as isize;
                let tx = sx - x0i as f64;
                let x0 = clamp_index(x0i, self.width);
                let x1 = clamp_index(x0i + 1, self.width);
                let top = lerp(self.get(x0, y0), self.get(x1, y0), tx);
                let bottom = lerp(self.get(x0, y1), self.get(x1, y1), tx);
                pixels.push(lerp(top, bottom, ty).clamp(0.0, 1.0));
            }
        }
        Ok(GrayImage {
            width: target_w,
            height: target_h,
            pixels,
        })
    }

    /// Summed-area table of this image.
    pub fn integral(&self) -> IntegralImage {
        IntegralImage::from_fn(self.width, self.height, |x, y| self.get(x, y))
    }
}

/// Axis-aligned rectangle: top-left corner plus positive extent, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Rect {
        assert!(w >= 1 && h >= 1, "rect extent must be positive");
        Rect { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    /// True when the rect lies fully inside a `width x height` image.
    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x + self.w <= width && self.y + self.h <= height
    }
}

/// Summed-area table with a zero first row and column.
///
/// `at(i, j)` is the sum of all source pixels with column `< i` and
/// row `< j`, so `at(width, height)` is the total intensity mass.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<f64>,
}

impl IntegralImage {
    /// Builds the table from a per-pixel map; used for the plain, squared
    /// and product integrals of a pair.
    pub(crate) fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let stride = width + 1;
        let mut table = vec![0.0; stride * (height + 1)];
        for y in 0..height {
            let mut row_sum = 0.0;
            for x in 0..width {
                row_sum += f(x, y);
                table[(y + 1) * stride + (x + 1)] = table[y * stride + (x + 1)] + row_sum;
            }
        }
        IntegralImage {
            width,
            height,
            table,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Table entry; valid for `ix <= width`, `iy <= height`.
    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        debug_assert!(ix <= self.width && iy <= self.height);
        self.table[iy * (self.width + 1) + ix]
    }

    /// Sum of the source pixels inside `r`, in four lookups.
    pub fn box_sum(&self, r: &Rect) -> Result<f64> {
        if !r.fits(self.width, self.height) {
            return Err(Error::RectOutOfBounds {
                rect: *r,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.box_sum_unchecked(r))
    }

    /// Box sum without the bounds check; callers must have validated that
    /// `r` fits (descriptor frames are checked once at bank construction).
    #[inline]
    pub(crate) fn box_sum_unchecked(&self, r: &Rect) -> f64 {
        debug_assert!(r.fits(self.width, self.height));
        let stride = self.width + 1;
        let top = r.y * stride;
        let bottom = (r.y + r.h) * stride;
        self.table[bottom + r.x + r.w] - self.table[bottom + r.x] - self.table[top + r.x + r.w]
            + self.table[top + r.x]
    }

    /// Total intensity mass of the source image.
    pub fn total(&self) -> f64 {
        self.at(self.width, self.height)
    }
}

/// Loads an 8-bit grayscale image (binary PGM or PNG) into `[0, 1]`.
///
/// RGB PNG inputs are converted with the usual luma weights
/// `0.299 R + 0.587 G + 0.114 B`; alpha channels are ignored.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes, path)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(&bytes, path)
    } else {
        Err(Error::UnsupportedImage {
            path: path.to_path_buf(),
            reason: "expected a binary PGM (P5) or PNG file".into(),
        })
    }
}

/// Writes `img` as a binary 8-bit PGM, rounding intensities to `0..=255`.
pub fn save_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    let mut data = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    data.extend(
        img.pixels()
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
    );
    fs::write(path, data).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedImage {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Binary PGM (P5): header tokens separated by whitespace/comments, then
/// one byte per pixel. Intensities are scaled by the declared maxval.
fn decode_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let mut pos = 2; // past the "P5" magic
    let next_token = |pos: &mut usize| -> Result<u64> {
        // skip whitespace and '#' comments
        loop {
            match bytes.get(*pos) {
                Some(b) if b.is_ascii_whitespace() => *pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(*pos) {
                        *pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(malformed(path, "truncated header")),
            }
        }
        let start = *pos;
        while bytes.get(*pos).is_some_and(|b| b.is_ascii_digit()) {
            *pos += 1;
        }
        if start == *pos {
            return Err(malformed(path, "expected an integer header field"));
        }
        std::str::from_utf8(&bytes[start..*pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(path, "unparseable header field"))
    };

    let width = next_token(&mut pos)? as usize;
    let height = next_token(&mut pos)? as usize;
    let maxval = next_token(&mut pos)?;
    if width == 0 || height == 0 {
        return Err(malformed(path, "zero-dimension image"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedImage {
            path: path.to_path_buf(),
            reason: format!("maxval {maxval} is not 8-bit"),
        });
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(malformed(path, "missing raster separator"));
    }
    pos += 1;
    let n = width * height;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| malformed(path, "truncated raster data"))?;
    let scale = 1.0 / maxval as f64;
    let pixels = raster.iter().map(|&b| b as f64 * scale).collect();
    GrayImage::from_pixels(width, height, pixels)
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    // expand palettes and sub-byte grayscale to 8 bits
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| malformed(path, e.to_string()))?;
    let (color, depth) = reader.output_color_type();
    if depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedImage {
            path: path.to_path_buf(),
            reason: format!("bit depth {depth:?} is not 8-bit"),
        });
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| malformed(path, "output size overflow"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| malformed(path, e.to_string()))?;
    let (width, height) = (info.width as usize, info.height as usize);
    if width == 0 || height == 0 {
        return Err(malformed(path, "zero-dimension image"));
    }
    let data = &buf[..info.buffer_size()];
    let luma = |r: u8, g: u8, b: u8| {
        (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
    };
    let pixels: Vec<f64> = match color {
        png::ColorType::Grayscale => data.iter().map(|&v| v as f64 / 255.0).collect(),
        png::ColorType::GrayscaleAlpha => data.chunks_exact(2).map(|p| p[0] as f64 / 255.0).collect(),
        png::ColorType::Rgb => data.chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect(),
        png::ColorType::Rgba => data.chunks_exact(4).map(|p| luma(p[0], p[1], p[2])).collect(),
        png::ColorType::Indexed => {
            return Err(Error::UnsupportedImage {
                path: path.to_path_buf(),
                reason: "unexpanded palette image".into(),
            })
        }
    };
    let pixels = pixels.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    GrayImage::from_pixels(width, height, pixels)
}
