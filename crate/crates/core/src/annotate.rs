//! Overlay detections on a frame for visual inspection: quad edges, corner
//! circles and id labels on an RGB copy of the grayscale input.

use alloc::vec::Vec;

use crate::geometry::Point2;
use crate::image::{ColorImage, GrayImage};
use crate::matching::MarkerDetection;

const EDGE_COLOR: (u8, u8, u8) = (0, 200, 0);
const CORNER_COLOR: (u8, u8, u8) = (230, 40, 40);
const LABEL_COLOR: (u8, u8, u8) = (250, 220, 40);
const CORNER_RADIUS: i32 = 4;

/// Render detections onto an RGB copy of the frame. With no detections the
/// output is the unmodified RGB expansion of the input.
pub fn annotate(img: &GrayImage, detections: &[MarkerDetection]) -> ColorImage {
    let mut out = gray_to_rgb(img);
    for det in detections {
        for i in 0..4 {
            let a = det.corners[i];
            let b = det.corners[(i + 1) % 4];
            draw_line(&mut out, a, b, EDGE_COLOR);
        }
        for &corner in &det.corners {
            draw_circle(&mut out, corner, CORNER_RADIUS, CORNER_COLOR);
        }
        let anchor = det.corners[0];
        draw_label(
            &mut out,
            &det.id,
            anchor.x as i64 + 6,
            anchor.y as i64 - 12,
        );
    }
    out
}

fn gray_to_rgb(img: &GrayImage) -> ColorImage {
    let mut data = Vec::with_capacity(img.as_raw().len() * 3);
    for &v in img.as_raw() {
        data.extend_from_slice(&[v, v, v]);
    }
    ColorImage::from_raw(img.width(), img.height(), data)
}

fn put(img: &mut ColorImage, x: i64, y: i64, color: (u8, u8, u8)) {
    if x >= 0 && y >= 0 && x < img.width() as i64 && y < img.height() as i64 {
        img.set(x as u32, y as u32, color);
    }
}

/// Pixel index containing a continuous coordinate.
fn to_px(p: Point2) -> (i64, i64) {
    (crate::math::floor(p.x) as i64, crate::math::floor(p.y) as i64)
}

fn draw_line(img: &mut ColorImage, a: Point2, b: Point2, color: (u8, u8, u8)) {
    let (x0, y0) = to_px(a);
    let (x1, y1) = to_px(b);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    loop {
        put(img, x, y, color);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn draw_circle(img: &mut ColorImage, center: Point2, radius: i32, color: (u8, u8, u8)) {
    let (cx, cy) = to_px(center);
    let mut x = radius as i64;
    let mut y = 0i64;
    let mut err = 1 - radius as i64;
    while x >= y {
        for (px, py) in [
            (cx + x, cy + y),
            (cx + y, cy + x),
            (cx - y, cy + x),
            (cx - x, cy + y),
            (cx - x, cy - y),
            (cx - y, cy - x),
            (cx + y, cy - x),
            (cx + x, cy - y),
        ] {
            put(img, px, py, color);
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
}

// 3x5 glyphs, rows top to bottom, three bits per row (left bit highest).
const FONT_SCALE: i64 = 2;

fn glyph(c: u8) -> u16 {
    match c.to_ascii_uppercase() {
        b'A' => 0b010_101_111_101_101,
        b'B' => 0b110_101_110_101_110,
        b'C' => 0b011_100_100_100_011,
        b'D' => 0b110_101_101_101_110,
        b'E' => 0b111_100_110_100_111,
        b'F' => 0b111_100_110_100_100,
        b'G' => 0b011_100_101_101_011,
        b'H' => 0b101_101_111_101_101,
        b'I' => 0b111_010_010_010_111,
        b'J' => 0b001_001_001_101_010,
        b'K' => 0b101_101_110_101_101,
        b'L' => 0b100_100_100_100_111,
        b'M' => 0b101_111_111_101_101,
        b'N' => 0b101_111_111_111_101,
        b'O' => 0b010_101_101_101_010,
        b'P' => 0b110_101_110_100_100,
        b'Q' => 0b010_101_101_011_001,
        b'R' => 0b110_101_110_101_101,
        b'S' => 0b011_100_010_001_110,
        b'T' => 0b111_010_010_010_010,
        b'U' => 0b101_101_101_101_111,
        b'V' => 0b101_101_101_101_010,
        b'W' => 0b101_101_111_111_101,
        b'X' => 0b101_101_010_101_101,
        b'Y' => 0b101_101_010_010_010,
        b'Z' => 0b111_001_010_100_111,
        b'0' => 0b111_101_101_101_111,
        b'1' => 0b010_110_010_010_111,
        b'2' => 0b111_001_111_100_111,
        b'3' => 0b111_001_111_001_111,
        b'4' => 0b101_101_111_001_001,
        b'5' => 0b111_100_111_001_111,
        b'6' => 0b111_100_111_101_111,
        b'7' => 0b111_001_001_010_010,
        b'8' => 0b111_101_111_101_111,
        b'9' => 0b111_101_111_001_111,
        b'-' => 0b000_000_111_000_000,
        b'_' => 0b000_000_000_000_111,
        _ => 0b111_111_111_111_111,
    }
}

fn draw_label(img: &mut ColorImage, text: &str, x: i64, y: i64) {
    let y = y.max(0);
    let mut cursor = x.max(0);
    for &c in text.as_bytes().iter().take(12) {
        let bits = glyph(c);
        for row in 0..5i64 {
            for col in 0..3i64 {
                if bits >> ((4 - row) * 3 + (2 - col)) & 1 == 1 {
                    for dy in 0..FONT_SCALE {
                        for dx in 0..FONT_SCALE {
                            put(
                                img,
                                cursor + col * FONT_SCALE + dx,
                                y + row * FONT_SCALE + dy,
                                LABEL_COLOR,
                            );
                        }
                    }
                }
            }
        }
        cursor += 4 * FONT_SCALE;
    }
}
