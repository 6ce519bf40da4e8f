//! Pixel containers and color-to-gray conversion.
//!
//! All rasters are row-major with the origin at the top-left corner, x
//! growing right and y growing down. Continuous image coordinates place the
//! center of pixel `(x, y)` at `(x + 0.5, y + 0.5)`.

use alloc::vec;
use alloc::vec::Vec;

/// 8-bit RGB image, interleaved `[r, g, b, r, g, b, ...]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl ColorImage {
    pub fn new(width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        ColorImage {
            width,
            height,
            data: vec![0; width as usize * height as usize * 3],
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        assert_eq!(
            data.len(),
            width as usize * height as usize * 3,
            "pixel buffer length must be width * height * 3"
        );
        ColorImage {
            width,
            height,
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
    pub fn get(&self, x: u32, y: u32) -> (u8, u8, u8) {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        (self.data[i], self.data[i + 1], self.data[i + 2])
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: (u8, u8, u8)) {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        self.data[i] = rgb.0;
        self.data[i + 1] = rgb.1;
        self.data[i + 2] = rgb.2;
    }

    #[inline]
    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }
}

/// 8-bit single-channel image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        GrayImage {
            width,
            height,
            data: vec![0; width as usize * height as usize],
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        assert_eq!(
            data.len(),
            width as usize * height as usize,
            "pixel buffer length must be width * height"
        );
        GrayImage {
            width,
            height,
            data,
        }
    }

    /// Constant-intensity image.
    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        GrayImage {
            width,
            height,
            data: vec![value; width as usize * height as usize],
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
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        self.data[y as usize * self.width as usize + x as usize] = value;
    }

    #[inline]
    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn as_raw_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let start = y as usize * self.width as usize;
        &self.data[start..start + self.width as usize]
    }
}

/// Binary mask; every stored value is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        BinaryImage {
            width,
            height,
            data: vec![0; width as usize * height as usize],
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        assert_eq!(
            data.len(),
            width as usize * height as usize,
            "pixel buffer length must be width * height"
        );
        assert!(
            data.iter().all(|&v| v <= 1),
            "binary image values must be 0 or 1"
        );
        BinaryImage {
            width,
            height,
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
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        debug_assert!(value <= 1);
        self.data[y as usize * self.width as usize + x as usize] = value;
    }

    #[inline]
    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    /// Number of 1-valued pixels.
    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    /// Expand the `{0, 1}` mask to `{0, 255}` for visualization export.
    pub fn to_gray(&self) -> GrayImage {
        let data = self.data.iter().map(|&v| v * 255).collect();
        GrayImage::from_raw(self.width, self.height, data)
    }
}

/// The color channel picked by [`GrayscaleMethod::SingleChannel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorChannel {
    R,
    G,
    B,
}

/// How an RGB image is reduced to one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrayscaleMethod {
    /// Weighted sum 0.299 R + 0.587 G + 0.114 B, rounded half up.
    Luminance,
    /// Copy one channel unchanged.
    SingleChannel(ColorChannel),
}

/// Convert an RGB image to grayscale.
pub fn to_grayscale(img: &ColorImage, method: GrayscaleMethod) -> GrayImage {
    let mut out = Vec::with_capacity(img.width() as usize * img.height() as usize);
    let raw = img.as_raw();
    match method {
        GrayscaleMethod::Luminance => {
            for px in raw.chunks_exact(3) {
                let y = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
                // y is non-negative, so truncating y + 0.5 rounds half up.
                out.push((y + 0.5) as u8);
            }
        }
        GrayscaleMethod::SingleChannel(ch) => {
            let offset = match ch {
                ColorChannel::R => 0,
                ColorChannel::G => 1,
                ColorChannel::B => 2,
            };
            for px in raw.chunks_exact(3) {
                out.push(px[offset]);
            }
        }
    }
    GrayImage::from_raw(img.width(), img.height(), out)
}
