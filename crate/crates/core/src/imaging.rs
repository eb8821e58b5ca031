//! Grayscale images: PGM I/O, bicubic resampling and conversion to mass
//! distributions.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::distributions::{Grid, MassDistribution};
use crate::error::{invalid, Error, Result};

/// Catmull-Rom parameter.
pub const CATMULL_ROM: f64 = -0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Row-major intensities in `[0, 1]`.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return invalid(format!("image dimensions must be positive, got {width}x{height}"));
        }
        if pixels.len() != width * height {
            return invalid(format!("{width}x{height} image needs {} pixels, got {}", width * height, pixels.len()));
        }
        if let Some(k) = pixels.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return invalid(format!("pixel {k} has intensity {}, expected a value in [0, 1]", pixels[k]));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
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

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&fs::read(path)?)
}

pub fn save_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}

/// Binary P5 with maxval 255, rounding half up.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.pixels.iter().map(|&v| (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8));
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Format { offset: self.pos, message: message.into() })
    }

    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            self.pos = start;
            return self.fail(format!("expected {what}"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        match text.parse() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.fail(format!("{what} is out of range"))
            }
        }
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut c = Cursor { bytes, pos: 0 };
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return c.fail("unsupported magic number, expected P2 or P5"),
    };
    c.pos = 2;
    let width = c.number("width")? as usize;
    let height = c.number("height")? as usize;
    c.skip_space();
    let maxval_at = c.pos;
    let maxval = c.number("maxval")?;
    if width == 0 || height == 0 {
        return c.fail("image dimensions must be positive");
    }
    if maxval == 0 || maxval > 65535 {
        c.pos = maxval_at;
        return c.fail(format!("maxval {maxval} outside 1..=65535"));
    }
    let count = width.checked_mul(height).filter(|&n| n <= bytes.len().saturating_mul(4) + 1);
    let Some(count) = count else { return c.fail("image dimensions exceed the file size") };
    let scale = maxval as f64;
    let mut pixels = Vec::with_capacity(count);
    if binary {
        match c.bytes.get(c.pos) {
            Some(b) if b.is_ascii_whitespace() => c.pos += 1,
            _ => return c.fail("expected a single whitespace byte before the raster"),
        }
        let depth = if maxval < 256 { 1 } else { 2 };
        let raster = &bytes[c.pos..];
        if raster.len() < count * depth {
            c.pos = bytes.len();
            return c.fail(format!("truncated raster: {} of {} bytes", raster.len(), count * depth));
        }
        for k in 0..count {
            let v = if depth == 1 {
                raster[k] as u64
            } else {
                u16::from_be_bytes([raster[2 * k], raster[2 * k + 1]]) as u64
            };
            if v > maxval {
                c.pos += k * depth;
                return c.fail(format!("sample {v} exceeds maxval {maxval}"));
            }
            pixels.push(v as f64 / scale);
        }
    } else {
        for _ in 0..count {
            c.skip_space();
            if c.pos >= bytes.len() {
                return c.fail(format!("truncated raster: {} of {count} samples", pixels.len()));
            }
            let at = c.pos;
            let v = c.number("sample")?;
            if v > maxval {
                c.pos = at;
                return c.fail(format!("sample {v} exceeds maxval {maxval}"));
            }
            pixels.push(v as f64 / scale);
        }
    }
    GrayImage::new(width, height, pixels)
}

/// Cubic convolution kernel with parameter `a`.
pub fn cubic_kernel(x: f64, a: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Taps `first..first + 4` (before clamping) and their weights for output
/// coordinate `out` when mapping `n_in` samples onto `n_out`.
pub fn bicubic_taps(out: usize, n_in: usize, n_out: usize, a: f64) -> (isize, [f64; 4]) {
    let s = (out as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5;
    let base = s.floor();
    let t = s - base;
    let w = [cubic_kernel(t + 1.0, a), cubic_kernel(t, a), cubic_kernel(1.0 - t, a), cubic_kernel(2.0 - t, a)];
    (base as isize - 1, w)
}

fn resample_line(src: impl Fn(usize) -> f64, n_in: usize, taps: &(isize, [f64; 4])) -> f64 {
    let (first, w) = taps;
    let at = |k: isize| src((first + k).clamp(0, n_in as isize - 1) as usize);
    // Expanded around the second tap so constant input reproduces exactly.
    let anchor = at(1);
    let mut acc = anchor;
    for (k, &wk) in w.iter().enumerate() {
        acc += wk * (at(k as isize) - anchor);
    }
    acc
}

pub fn downsample_bicubic(image: &GrayImage, width: usize, height: usize) -> Result<GrayImage> {
    downsample_bicubic_with(image, width, height, CATMULL_ROM)
}

/// Separable cubic resampling over the 4x4 neighbourhood with replicated
/// borders, clamped to `[0, 1]`. Works for enlargement as well.
pub fn downsample_bicubic_with(image: &GrayImage, width: usize, height: usize, a: f64) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return invalid(format!("target size must be positive, got {width}x{height}"));
    }
    if !a.is_finite() {
        return invalid("kernel parameter must be finite");
    }
    let (w_in, h_in) = (image.width, image.height);
    let col_taps: Vec<_> = (0..width).map(|x| bicubic_taps(x, w_in, width, a)).collect();
    let row_taps: Vec<_> = (0..height).map(|y| bicubic_taps(y, h_in, height, a)).collect();

    let mut horizontal = vec![0.0; width * h_in];
    for r in 0..h_in {
        let row = &image.pixels[r * w_in..(r + 1) * w_in];
        for (x, taps) in col_taps.iter().enumerate() {
            horizontal[r * width + x] = resample_line(|c| row[c], w_in, taps);
        }
    }
    let mut pixels = vec![0.0; width * height];
    for (y, taps) in row_taps.iter().enumerate() {
        for x in 0..width {
            let v = resample_line(|r| horizontal[r * width + x], h_in, taps);
            pixels[y * width + x] = v.clamp(0.0, 1.0);
        }
    }
    GrayImage::new(width, height, pixels)
}

pub fn downsample_all(images: &[GrayImage], width: usize, height: usize) -> Result<Vec<GrayImage>> {
    images.par_iter().map(|im| downsample_bicubic(im, width, height)).collect()
}

/// Pixel intensities as mass on a grid with the given spacing. With
/// `normalize`, a nonzero image is scaled to unit total mass.
pub fn to_distribution(image: &GrayImage, spacing: f64, normalize: bool) -> Result<MassDistribution> {
    let grid = Grid::with_spacing(image.width, image.height, spacing)?;
    let f = MassDistribution::new(grid, image.pixels.clone())?;
    if normalize && !f.is_zero() {
        let total = f.total_mass();
        let mass = f.mass().iter().map(|m| m / total).collect();
        return MassDistribution::new(grid, mass);
    }
    Ok(f)
}

pub fn l2_distance(f0: &MassDistribution, f1: &MassDistribution) -> Result<f64> {
    if f0.grid() != f1.grid() {
        return invalid("l2 distance needs both distributions on the same grid");
    }
    Ok(f0.mass().iter().zip(f1.mass()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}
