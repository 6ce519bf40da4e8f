//! Binary PNM codec (P5 grayscale, P6 RGB) over in-memory byte buffers.
//!
//! Only `maxval = 255` is supported. The writer always emits the canonical
//! header `"P5\n<w> <h>\n255\n"` (or `P6`), so `save` followed by `load` is a
//! bit-exact round trip. The reader additionally accepts arbitrary
//! whitespace and `#` comments between header tokens, as produced by other
//! tools.

use alloc::vec::Vec;
use core::fmt;

use crate::image::{ColorImage, GrayImage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PnmError {
    /// First two bytes are not `P5` or `P6`.
    UnsupportedMagic([u8; 2]),
    /// Header tokens missing, non-numeric, zero, or oversized.
    MalformedHeader(&'static str),
    /// Any maxval other than 255.
    UnsupportedMaxval(u32),
    /// Payload shorter than `width * height * channels`.
    Truncated { expected: usize, actual: usize },
}

impl fmt::Display for PnmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PnmError::UnsupportedMagic(m) => {
                write!(f, "unsupported PNM magic {:?} (expected P5 or P6)", m)
            }
            PnmError::MalformedHeader(what) => write!(f, "malformed PNM header: {}", what),
            PnmError::UnsupportedMaxval(v) => write!(f, "unsupported PNM maxval {} (only 255)", v),
            PnmError::Truncated { expected, actual } => {
                write!(f, "truncated PNM payload: need {} bytes, got {}", expected, actual)
            }
        }
    }
}

impl core::error::Error for PnmError {}

/// Either flavor of image a PNM file can hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PnmImage {
    Gray(GrayImage),
    Color(ColorImage),
}

impl PnmImage {
    pub fn width(&self) -> u32 {
        match self {
            PnmImage::Gray(g) => g.width(),
            PnmImage::Color(c) => c.width(),
        }
    }

    pub fn height(&self) -> u32 {
        match self {
            PnmImage::Gray(g) => g.height(),
            PnmImage::Color(c) => c.height(),
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn read_number(&mut self) -> Result<u32, PnmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(PnmError::MalformedHeader("expected a decimal number"));
        }
        if self.pos - start > 9 {
            return Err(PnmError::MalformedHeader("header number too large"));
        }
        let mut value: u32 = 0;
        for &b in &self.bytes[start..self.pos] {
            value = value * 10 + (b - b'0') as u32;
        }
        Ok(value)
    }
}

/// Parse a binary PNM buffer into a gray (P5) or color (P6) image.
pub fn load_pnm(bytes: &[u8]) -> Result<PnmImage, PnmError> {
    if bytes.len() < 2 {
        return Err(PnmError::MalformedHeader("buffer shorter than magic"));
    }
    let magic = [bytes[0], bytes[1]];
    let channels: usize = match &magic {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(PnmError::UnsupportedMagic(magic)),
    };

    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.read_number()?;
    let height = cur.read_number()?;
    let maxval = cur.read_number()?;
    if width == 0 || height == 0 {
        return Err(PnmError::MalformedHeader("zero image dimension"));
    }
    if width > 1 << 16 || height > 1 << 16 {
        return Err(PnmError::MalformedHeader("image dimension too large"));
    }
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval(maxval));
    }

    // Exactly one whitespace byte separates the header from the payload;
    // consuming more could eat pixel data that happens to look like
    // whitespace.
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(PnmError::MalformedHeader("missing separator before payload"));
    }
    cur.pos += 1;

    let expected = width as usize * height as usize * channels;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(PnmError::Truncated {
            expected,
            actual: payload.len(),
        });
    }
    let data = payload[..expected].to_vec();
    Ok(match channels {
        1 => PnmImage::Gray(GrayImage::from_raw(width, height, data)),
        _ => PnmImage::Color(ColorImage::from_raw(width, height, data)),
    })
}

fn push_header(out: &mut Vec<u8>, magic: &[u8], width: u32, height: u32) {
    out.extend_from_slice(magic);
    out.push(b'\n');
    push_decimal(out, width);
    out.push(b' ');
    push_decimal(out, height);
    out.extend_from_slice(b"\n255\n");
}

fn push_decimal(out: &mut Vec<u8>, mut v: u32) {
    let mut digits = [0u8; 10];
    let mut n = 0;
    loop {
        digits[n] = b'0' + (v % 10) as u8;
        v /= 10;
        n += 1;
        if v == 0 {
            break;
        }
    }
    while n > 0 {
        n -= 1;
        out.push(digits[n]);
    }
}

/// Encode a grayscale image as binary P5 with the canonical header.
pub fn save_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.as_raw().len() + 20);
    push_header(&mut out, b"P5", img.width(), img.height());
    out.extend_from_slice(img.as_raw());
    out
}

/// Encode an RGB image as binary P6 with the canonical header.
pub fn save_ppm(img: &ColorImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.as_raw().len() + 20);
    push_header(&mut out, b"P6", img.width(), img.height());
    out.extend_from_slice(img.as_raw());
    out
}

/// Encode either image flavor.
pub fn save_pnm(img: &PnmImage) -> Vec<u8> {
    match img {
        PnmImage::Gray(g) => save_pgm(g),
        PnmImage::Color(c) => save_ppm(c),
    }
}
