//! Full-reference image quality metrics on `[0, 1]` float images.

use crate::error::{Error, Result};

pub const SSIM_WINDOW: usize = 8;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Interleaved row-major image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "{}x{}x{} image needs {} values, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, v: f64) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![v; width * height * channels],
        }
    }

    pub fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    fn same_shape(&self, other: &Image) -> Result<()> {
        if (self.width, self.height, self.channels) != (other.width, other.height, other.channels) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )));
        }
        Ok(())
    }
}

/// PSNR in dB against a peak of 1.0, optionally restricted to a per-pixel
/// mask. Returns `f64::INFINITY` when the compared pixels are bit-identical.
pub fn psnr(a: &Image, b: &Image, region: Option<&[bool]>) -> Result<f64> {
    a.same_shape(b)?;
    if let Some(m) = region {
        if m.len() != a.width * a.height {
            return Err(Error::DimensionMismatch("mask size".into()));
        }
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut identical = true;
    for p in 0..a.width * a.height {
        if region.is_some_and(|m| !m[p]) {
            continue;
        }
        for c in 0..a.channels {
            let i = p * a.channels + c;
            let (x, y) = (a.data[i], b.data[i]);
            if x.to_bits() != y.to_bits() {
                identical = false;
            }
            let d = x - y;
            sum += d * d;
            n += 1;
        }
    }
    if identical || n == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sum / n as f64;
    if mse == 0.0 {
        // equal values with different bit patterns (e.g. -0.0)
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

struct Integral {
    w: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let stride = w + 1;
        let mut sums = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += f(x, y);
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { w, sums }
    }

    fn window(&self, x: usize, y: usize, n: usize) -> f64 {
        let s = self.w + 1;
        self.sums[(y + n) * s + x + n] - self.sums[y * s + x + n] - self.sums[(y + n) * s + x]
            + self.sums[y * s + x]
    }
}

/// Mean SSIM over all 8x8 windows (stride 1) and channels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    let n = SSIM_WINDOW;
    if a.width < n || a.height < n {
        return Err(Error::DimensionMismatch(format!(
            "SSIM needs at least {n}x{n} pixels"
        )));
    }
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let inv = 1.0 / (n * n) as f64;
    let (w, h) = (a.width, a.height);
    let mut total = 0.0;
    let mut count = 0usize;
    for c in 0..a.channels {
        let sa = Integral::new(w, h, |x, y| a.at(x, y, c));
        let sb = Integral::new(w, h, |x, y| b.at(x, y, c));
        let saa = Integral::new(w, h, |x, y| a.at(x, y, c).powi(2));
        let sbb = Integral::new(w, h, |x, y| b.at(x, y, c).powi(2));
        let sab = Integral::new(w, h, |x, y| a.at(x, y, c) * b.at(x, y, c));
        for y in 0..=h - n {
            for x in 0..=w - n {
                let mu_a = sa.window(x, y, n) * inv;
                let mu_b = sb.window(x, y, n) * inv;
                let var_a = (saa.window(x, y, n) * inv - mu_a * mu_a).max(0.0);
                let var_b = (sbb.window(x, y, n) * inv - mu_b * mu_b).max(0.0);
                let cov = sab.window(x, y, n) * inv - mu_a * mu_b;
                total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                    / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}
