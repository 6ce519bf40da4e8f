//! Summed-area tables over 8-bit images.
//!
//! The table has one extra row and column of zeros, so the sum over any
//! rectangle costs four lookups regardless of position.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::GrayImage;

/// Summed-area table with a 64-bit accumulator.
///
/// `at(x, y)` holds the sum of all source pixels in `[0, x) x [0, y)`;
/// row 0 and column 0 are therefore all zeros.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: u32,  // source width + 1
    height: u32, // source height + 1
    data: Vec<u64>,
}

impl IntegralImage {
    /// Table of plain pixel sums.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self::build(img, |v| v as u64)
    }

    /// Table of squared pixel sums, for windowed variance terms.
    pub fn from_gray_squared(img: &GrayImage) -> Self {
        Self::build(img, |v| v as u64 * v as u64)
    }

    fn build(img: &GrayImage, f: impl Fn(u8) -> u64) -> Self {
        let w = img.width() as usize;
        let h = img.height() as usize;
        let tw = w + 1;
        let mut data = vec![0u64; tw * (h + 1)];
        for y in 0..h {
            let row = img.row(y as u32);
            let mut run = 0u64;
            for x in 0..w {
                run += f(row[x]);
                data[(y + 1) * tw + (x + 1)] = data[y * tw + (x + 1)] + run;
            }
        }
        IntegralImage {
            width: tw as u32,
            height: (h + 1) as u32,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    fn at(&self, x: u32, y: u32) -> u64 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Sum of source pixels over the inclusive rectangle
    /// `[x0, x1] x [y0, y1]`.
    #[inline]
    pub fn rect_sum(&self, x0: u32, y0: u32, x1: u32, y1: u32) -> u64 {
        debug_assert!(x0 <= x1 && y0 <= y1);
        debug_assert!(x1 + 1 < self.width && y1 + 1 < self.height);
        self.at(x1 + 1, y1 + 1) + self.at(x0, y0) - self.at(x1 + 1, y0) - self.at(x0, y1 + 1)
    }

    /// Sum over a single row segment `[x0, x1]` of row `y`.
    #[inline]
    pub fn row_sum(&self, x0: u32, x1: u32, y: u32) -> u64 {
        self.rect_sum(x0, y, x1, y)
    }

    /// Sum over a single column segment `[y0, y1]` of column `x`.
    #[inline]
    pub fn col_sum(&self, x: u32, y0: u32, y1: u32) -> u64 {
        self.rect_sum(x, y0, x, y1)
    }
}

/// Convenience wrapper matching the table constructor.
pub fn integral_image(img: &GrayImage) -> IntegralImage {
    IntegralImage::from_gray(img)
}
