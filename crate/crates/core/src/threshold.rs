//! Global and adaptive-mean binarization.
//!
//! Both operators use the same decision rule: a pixel maps to 0 when its
//! intensity is less than or equal to the threshold, and to 1 otherwise.
//! Dark marker pixels therefore land in the 0 class.

use core::fmt;

use crate::image::{BinaryImage, GrayImage};
use crate::integral::IntegralImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdError {
    /// Window side must be odd, at least 3, and at most `2 * min(w, h) + 1`.
    InvalidWindow { window: u32, max: u32 },
}

impl fmt::Display for ThresholdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdError::InvalidWindow { window, max } => write!(
                f,
                "adaptive threshold window {} invalid (must be odd, in 3..={})",
                window, max
            ),
        }
    }
}

impl core::error::Error for ThresholdError {}

/// Fixed-threshold binarization: 0 where `img(x, y) <= p`, 1 otherwise.
pub fn threshold_global(img: &GrayImage, p: u8) -> BinaryImage {
    let data = img.as_raw().iter().map(|&v| (v > p) as u8).collect();
    BinaryImage::from_raw(img.width(), img.height(), data)
}

/// Adaptive-mean binarization: 0 where `img(x, y) <= mean(window) - c`.
///
/// The window is a `window x window` box centered on the pixel; samples
/// falling outside the image replicate the nearest edge pixel, so the mean
/// always averages `window^2` values. The comparison is evaluated in exact
/// integer arithmetic (`v * n <= sum - c * n`), never in floats.
pub fn threshold_adaptive_mean(
    img: &GrayImage,
    window: u32,
    c: i32,
) -> Result<BinaryImage, ThresholdError> {
    let w = img.width();
    let h = img.height();
    let max_window = 2 * w.min(h) + 1;
    if window < 3 || window % 2 == 0 || window > max_window {
        return Err(ThresholdError::InvalidWindow {
            window,
            max: max_window,
        });
    }

    let r = window / 2;
    let table = IntegralImage::from_gray(img);
    let n = (window as i128) * (window as i128);
    let c_times_n = c as i128 * n;

    let mut out = BinaryImage::new(w, h);
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(h - 1);
        let top = (r as i64 - y as i64).max(0) as u64;
        let bottom = ((y + r) as i64 - (h - 1) as i64).max(0) as u64;
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r).min(w - 1);
            let left = (r as i64 - x as i64).max(0) as u64;
            let right = ((x + r) as i64 - (w - 1) as i64).max(0) as u64;

            let mut sum = table.rect_sum(x0, y0, x1, y1);
            if left > 0 {
                sum += left * table.col_sum(0, y0, y1);
            }
            if right > 0 {
                sum += right * table.col_sum(w - 1, y0, y1);
            }
            if top > 0 {
                sum += top * table.row_sum(x0, x1, 0);
            }
            if bottom > 0 {
                sum += bottom * table.row_sum(x0, x1, h - 1);
            }
            // Replicated corners fall outside both the row and column bands.
            sum += left * top * img.get(0, 0) as u64;
            sum += right * top * img.get(w - 1, 0) as u64;
            sum += left * bottom * img.get(0, h - 1) as u64;
            sum += right * bottom * img.get(w - 1, h - 1) as u64;

            let v = img.get(x, y) as i128;
            let dark = v * n <= sum as i128 - c_times_n;
            out.set(x, y, (!dark) as u8);
        }
    }
    Ok(out)
}
