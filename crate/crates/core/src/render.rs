//! Synthetic scene rendering: the ground-truth oracle the detector is
//! tested against.
//!
//! A marker face is an analytic function over the unit square: a black
//! border band a quarter side wide, then a 6x6 cell grid over the inner
//! half whose outer cell ring stays white and whose inner 4x4 cells carry
//! the pattern bits. Faces are rasterized with 4x4 supersampling both for
//! registry pattern images and for scene placement under a homography, so
//! edges land with sub-pixel precision.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::geometry::{apply_homography, GeometryError, Homography, Point2};
use crate::image::GrayImage;
use crate::matching::{MatchError, PatternImage, PatternRegistry};
use crate::math;
use crate::polygon::order_corners;
use crate::pose::Pose;

/// Width of the white field around the black square, in marker side units.
pub const QUIET_ZONE: f64 = 0.25;

/// Marker model corners in canonical order (y-down counter-clockwise from
/// the origin).
pub const MODEL_CORNERS: [Point2; 4] = [
    Point2::new(0.0, 0.0),
    Point2::new(0.0, 1.0),
    Point2::new(1.0, 1.0),
    Point2::new(1.0, 0.0),
];

#[derive(Debug, Clone, PartialEq)]
pub enum RenderError {
    UnknownPattern(String),
    /// Marker footprint (including quiet zone) leaves the frame.
    OutOfFrame(String),
    /// Two placements overlap.
    Overlap(String, String),
    Geometry(GeometryError),
    Match(MatchError),
}

impl fmt::Display for RenderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RenderError::UnknownPattern(id) => write!(f, "pattern {:?} not in registry", id),
            RenderError::OutOfFrame(id) => write!(f, "placement {:?} leaves the frame", id),
            RenderError::Overlap(a, b) => write!(f, "placements {:?} and {:?} overlap", a, b),
            RenderError::Geometry(e) => write!(f, "{}", e),
            RenderError::Match(e) => write!(f, "{}", e),
        }
    }
}

impl core::error::Error for RenderError {}

impl From<GeometryError> for RenderError {
    fn from(e: GeometryError) -> Self {
        RenderError::Geometry(e)
    }
}

impl From<MatchError> for RenderError {
    fn from(e: MatchError) -> Self {
        RenderError::Match(e)
    }
}

/// 4x4 pattern cell grid, bit `y * 4 + x` set means the cell is dark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternBits(pub u16);

impl PatternBits {
    #[inline]
    pub fn cell(self, x: u32, y: u32) -> bool {
        debug_assert!(x < 4 && y < 4);
        self.0 >> (y * 4 + x) & 1 == 1
    }

    /// Grid rotated 90 degrees clockwise.
    pub fn rotate_cw(self) -> PatternBits {
        let mut out = 0u16;
        for y in 0..4 {
            for x in 0..4 {
                if self.cell(y, 3 - x) {
                    out |= 1 << (y * 4 + x);
                }
            }
        }
        PatternBits(out)
    }

    pub fn hamming(self, other: PatternBits) -> u32 {
        (self.0 ^ other.0).count_ones()
    }

    /// Smallest Hamming distance between `self` and any rotation of
    /// `other` (including, for `other == self`, its own non-identity
    /// rotations only).
    pub fn min_rotation_distance(self, other: PatternBits) -> u32 {
        let mut r = other;
        let mut best = u32::MAX;
        for i in 0..4 {
            if i > 0 || self != other {
                best = best.min(self.hamming(r));
            }
            r = r.rotate_cw();
        }
        best
    }

    /// True when every light cell connects (4-adjacently through light
    /// cells) to the grid boundary. Dark cells must not wall off a light
    /// pocket: such a pocket would add a second hole to the traced marker.
    pub fn light_cells_reach_margin(self) -> bool {
        let mut reached = [false; 16];
        let mut stack: Vec<usize> = Vec::new();
        for y in 0..4u32 {
            for x in 0..4u32 {
                let i = (y * 4 + x) as usize;
                let on_edge = x == 0 || x == 3 || y == 0 || y == 3;
                if on_edge && !self.cell(x, y) {
                    reached[i] = true;
                    stack.push(i);
                }
            }
        }
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % 4) as i32, (i / 4) as i32);
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (nx, ny) = (x + dx, y + dy);
                if (0..4).contains(&nx) && (0..4).contains(&ny) {
                    let j = (ny * 4 + nx) as usize;
                    if !reached[j] && !self.cell(nx as u32, ny as u32) {
                        reached[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        (0..16).all(|i| self.0 >> i & 1 == 1 || reached[i])
    }
}

/// Analytic marker face: 1.0 = light, 0.0 = dark, at marker-plane
/// coordinates. The quiet zone extends the light field out to
/// `[-QUIET_ZONE, 1 + QUIET_ZONE]`.
pub fn marker_face(bits: PatternBits, u: f64, v: f64) -> f64 {
    if !(0.0..1.0).contains(&u) || !(0.0..1.0).contains(&v) {
        return 1.0; // quiet zone
    }
    if !(0.25..0.75).contains(&u) || !(0.25..0.75).contains(&v) {
        return 0.0; // border band
    }
    // 6x6 cells over the inner half; the outer ring stays light.
    let cx = (((u - 0.25) * 12.0) as u32).min(5);
    let cy = (((v - 0.25) * 12.0) as u32).min(5);
    if cx == 0 || cx == 5 || cy == 0 || cy == 5 {
        return 1.0;
    }
    if bits.cell(cx - 1, cy - 1) {
        0.0
    } else {
        1.0
    }
}

const SUPERSAMPLE: u32 = 4;

/// Rasterize a marker face over the unit square into an `side x side`
/// pattern image (full intensity range, no quiet zone).
pub fn pattern_image(bits: PatternBits, side: u32) -> PatternImage {
    let mut img = GrayImage::new(side, side);
    let inv = 1.0 / side as f64;
    let step = 1.0 / SUPERSAMPLE as f64;
    for y in 0..side {
        for x in 0..side {
            let mut acc = 0.0;
            for sy in 0..SUPERSAMPLE {
                for sx in 0..SUPERSAMPLE {
                    let u = (x as f64 + (sx as f64 + 0.5) * step) * inv;
                    let v = (y as f64 + (sy as f64 + 0.5) * step) * inv;
                    acc += marker_face(bits, u, v);
                }
            }
            let value = acc / (SUPERSAMPLE * SUPERSAMPLE) as f64 * 255.0;
            img.set(x, y, (value + 0.5) as u8);
        }
    }
    PatternImage::new(img).expect("square by construction")
}

/// Draw `count` pattern bit sets that stay distinguishable under the
/// rotation search: every pattern keeps Hamming distance >= 5 from its own
/// rotations and from every rotation of every other pattern.
pub fn generate_pattern_bits(count: usize, rng: &mut ChaCha8Rng) -> Vec<PatternBits> {
    let mut out: Vec<PatternBits> = Vec::with_capacity(count);
    let mut guard = 0u32;
    while out.len() < count {
        guard += 1;
        assert!(guard < 1_000_000, "pattern generation failed to converge");
        let candidate = PatternBits((rng.next_u32() & 0xffff) as u16);
        let dark = candidate.0.count_ones();
        if !(4..=12).contains(&dark) {
            continue;
        }
        if !candidate.light_cells_reach_margin() {
            continue;
        }
        if candidate.min_rotation_distance(candidate) < 5 {
            continue;
        }
        if out
            .iter()
            .any(|&p| candidate.min_rotation_distance(p) < 5 || candidate == p)
        {
            continue;
        }
        out.push(candidate);
    }
    out
}

/// Build a registry of generated patterns named `id_prefix{index}`.
pub fn build_registry(
    id_prefix: &str,
    bits: &[PatternBits],
    side: u32,
    acceptance_threshold: f64,
) -> Result<PatternRegistry, MatchError> {
    let mut entries = Vec::with_capacity(bits.len());
    for (i, &b) in bits.iter().enumerate() {
        let mut id = String::from(id_prefix);
        id.push_str(itoa(i).as_str());
        entries.push((id, pattern_image(b, side)));
    }
    PatternRegistry::new(entries, acceptance_threshold)
}

fn itoa(mut v: usize) -> String {
    let mut digits = [0u8; 20];
    let mut n = 0;
    loop {
        digits[n] = b'0' + (v % 10) as u8;
        v /= 10;
        n += 1;
        if v == 0 {
            break;
        }
    }
    let mut s = String::with_capacity(n);
    while n > 0 {
        n -= 1;
        s.push(digits[n] as char);
    }
    s
}

/// One marker instance in a scene.
#[derive(Debug, Clone)]
pub struct Placement {
    pub id: String,
    /// Marker plane (unit square) to image plane.
    pub homography: Homography,
    /// Fraction of the full intensity range between dark and light cells.
    pub contrast: f64,
    /// Pose that produced `homography`, when the scene was posed through a
    /// camera model.
    pub pose: Option<Pose>,
}

/// Expected detector output for one placement.
#[derive(Debug, Clone)]
pub struct PlacementTruth {
    pub id: String,
    /// Canonically ordered outer corners of the black square.
    pub corners: [Point2; 4],
    /// Rotation label the identifier should report.
    pub rotation_deg: u16,
    pub pose: Option<Pose>,
}

/// A renderable scene with its precomputed ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub background: GrayImage,
    pub placements: Vec<Placement>,
    pub noise_seed: u64,
    pub ground_truth: Vec<PlacementTruth>,
}

fn footprint_bbox(h: &Homography) -> Result<(f64, f64, f64, f64), GeometryError> {
    let lo = -QUIET_ZONE;
    let hi = 1.0 + QUIET_ZONE;
    let corners = [
        Point2::new(lo, lo),
        Point2::new(lo, hi),
        Point2::new(hi, hi),
        Point2::new(hi, lo),
    ];
    let mut min_x = f64::INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for c in corners {
        let p = apply_homography(h, c)?;
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }
    Ok((min_x, min_y, max_x, max_y))
}

impl SyntheticScene {
    /// Validate placements (inside frame, pairwise disjoint including quiet
    /// zones) and precompute the ground truth.
    pub fn new(
        background: GrayImage,
        placements: Vec<Placement>,
        noise_seed: u64,
    ) -> Result<Self, RenderError> {
        let w = background.width() as f64;
        let h = background.height() as f64;
        let mut boxes = Vec::with_capacity(placements.len());
        for p in &placements {
            let bbox = footprint_bbox(&p.homography)?;
            if bbox.0 < 0.0 || bbox.1 < 0.0 || bbox.2 > w || bbox.3 > h {
                return Err(RenderError::OutOfFrame(p.id.clone()));
            }
            boxes.push(bbox);
        }
        for i in 0..boxes.len() {
            for j in (i + 1)..boxes.len() {
                let a = boxes[i];
                let b = boxes[j];
                let disjoint = a.2 < b.0 || b.2 < a.0 || a.3 < b.1 || b.3 < a.1;
                if !disjoint {
                    return Err(RenderError::Overlap(
                        placements[i].id.clone(),
                        placements[j].id.clone(),
                    ));
                }
            }
        }

        let mut ground_truth = Vec::with_capacity(placements.len());
        for p in &placements {
            let mut projected = [Point2::new(0.0, 0.0); 4];
            for (dst, model) in projected.iter_mut().zip(MODEL_CORNERS.iter()) {
                *dst = apply_homography(&p.homography, *model)?;
            }
            let corners = order_corners(&projected)
                .map_err(|_| RenderError::Geometry(GeometryError::DegenerateConfiguration))?;
            // The canonical list is a cyclic rotation of the projected
            // model corners; the offset of the model origin is the
            // clockwise rotation the identifier will need to undo.
            let j0 = corners
                .iter()
                .position(|c| c.distance(projected[0]) < 1e-9)
                .expect("canonical order is a rotation of the projected corners");
            ground_truth.push(PlacementTruth {
                id: p.id.clone(),
                corners,
                rotation_deg: (90 * j0) as u16,
                pose: p.pose,
            });
        }
        Ok(SyntheticScene {
            background,
            placements,
            noise_seed,
            ground_truth,
        })
    }
}

/// Gaussian blur of a grayscale image (zero-padded borders). Models the
/// optical point-spread a real capture always has; razor-sharp aliased
/// edges bias gradient-based sub-pixel estimators.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    let w = img.width() as usize;
    let h = img.height() as usize;
    let src: Vec<f64> = img.as_raw().iter().map(|&v| v as f64).collect();
    let kernel = crate::chessboard::gaussian_kernel(sigma);
    let blurred = crate::chessboard::blur_separable(&src, w, h, &kernel);
    let data: Vec<u8> = blurred.iter().map(|&v| (v + 0.5).clamp(0.0, 255.0) as u8).collect();
    GrayImage::from_raw(img.width(), img.height(), data)
}

/// Standard normal pair via Box–Muller.
fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let r = math::sqrt(-2.0 * math::ln(u1));
    let theta = core::f64::consts::TAU * u2;
    (r * math::cos(theta), r * math::sin(theta))
}

/// Add seeded Gaussian noise, rounding and clamping to the byte range.
pub fn add_gaussian_noise(img: &mut GrayImage, sigma: f64, seed: u64) {
    if sigma <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img.as_raw_mut();
    let mut i = 0;
    while i < data.len() {
        let (n0, n1) = gaussian_pair(&mut rng);
        data[i] = (data[i] as f64 + sigma * n0 + 0.5).clamp(0.0, 255.0) as u8;
        if i + 1 < data.len() {
            data[i + 1] = (data[i + 1] as f64 + sigma * n1 + 0.5).clamp(0.0, 255.0) as u8;
        }
        i += 2;
    }
}

/// Render the scene: each marker drawn through its homography with 4x4
/// supersampling over the background, then seeded Gaussian noise.
pub fn render_synthetic(
    scene: &SyntheticScene,
    registry: &PatternRegistry,
    noise_sigma: f64,
) -> Result<GrayImage, RenderError> {
    let mut frame = scene.background.clone();
    let w = frame.width();
    let h = frame.height();
    let step = 1.0 / SUPERSAMPLE as f64;
    let samples = (SUPERSAMPLE * SUPERSAMPLE) as f64;

    for placement in &scene.placements {
        let bits_pattern = registry
            .entries()
            .iter()
            .find(|(id, _)| *id == placement.id)
            .ok_or_else(|| RenderError::UnknownPattern(placement.id.clone()))?;
        let pattern = bits_pattern.1.image();
        let side = pattern.width() as f64;
        let inv = placement.homography.inverse()?;

        let c = placement.contrast.clamp(0.05, 1.0);
        let light = 255.0 * (0.5 + 0.5 * c);
        let dark = 255.0 * (0.5 - 0.5 * c);

        let (min_x, min_y, max_x, max_y) = footprint_bbox(&placement.homography)?;
        let x0 = (math::floor(min_x).max(0.0)) as u32;
        let y0 = (math::floor(min_y).max(0.0)) as u32;
        let x1 = (math::ceil(max_x) as u32).min(w);
        let y1 = (math::ceil(max_y) as u32).min(h);

        for y in y0..y1 {
            for x in x0..x1 {
                let bg = frame.get(x, y) as f64;
                let mut acc = 0.0;
                for sy in 0..SUPERSAMPLE {
                    for sx in 0..SUPERSAMPLE {
                        let px = x as f64 + (sx as f64 + 0.5) * step;
                        let py = y as f64 + (sy as f64 + 0.5) * step;
                        let m = match apply_homography(&inv, Point2::new(px, py)) {
                            Ok(m) => m,
                            Err(_) => {
                                acc += bg;
                                continue;
                            }
                        };
                        let in_quiet = m.x >= -QUIET_ZONE
                            && m.x <= 1.0 + QUIET_ZONE
                            && m.y >= -QUIET_ZONE
                            && m.y <= 1.0 + QUIET_ZONE;
                        if !in_quiet {
                            acc += bg;
                        } else if !(0.0..1.0).contains(&m.x) || !(0.0..1.0).contains(&m.y) {
                            acc += light; // quiet zone
                        } else {
                            // Nearest-texel read of the registry raster; the
                            // supersampling loop provides the anti-aliasing,
                            // and bilinear upscaling would smear cell edges
                            // over several pixels.
                            let px = ((m.x * side) as u32).min(pattern.width() - 1);
                            let py = ((m.y * side) as u32).min(pattern.height() - 1);
                            let face = pattern.get(px, py) as f64 / 255.0;
                            acc += dark + face * (light - dark);
                        }
                    }
                }
                frame.set(x, y, (acc / samples + 0.5) as u8);
            }
        }
    }

    add_gaussian_noise(&mut frame, noise_sigma, scene.noise_seed);
    Ok(frame)
}

/// Render a chessboard target under a homography from board units (one
/// square = one unit) to the image; the board has `(board_w + 1) x
/// (board_h + 1)` squares so the inner corner grid is `board_w x board_h`.
///
/// Returns the frame and the row-major ground-truth inner corners.
pub fn render_chessboard(
    width: u32,
    height: u32,
    board_w: u32,
    board_h: u32,
    h: &Homography,
    background: u8,
) -> Result<(GrayImage, Vec<Point2>), GeometryError> {
    let cols = board_w + 1;
    let rows = board_h + 1;
    let inv = h.inverse()?;
    let mut frame = GrayImage::filled(width, height, background);
    let step = 1.0 / SUPERSAMPLE as f64;
    let samples = (SUPERSAMPLE * SUPERSAMPLE) as f64;

    for y in 0..height {
        for x in 0..width {
            let bg = frame.get(x, y) as f64;
            let mut acc = 0.0;
            for sy in 0..SUPERSAMPLE {
                for sx in 0..SUPERSAMPLE {
                    let px = x as f64 + (sx as f64 + 0.5) * step;
                    let py = y as f64 + (sy as f64 + 0.5) * step;
                    let m = match apply_homography(&inv, Point2::new(px, py)) {
                        Ok(m) => m,
                        Err(_) => {
                            acc += bg;
                            continue;
                        }
                    };
                    if m.x < 0.0 || m.y < 0.0 || m.x >= cols as f64 || m.y >= rows as f64 {
                        acc += bg;
                    } else {
                        let dark = (m.x as u32 + m.y as u32) % 2 == 0;
                        acc += if dark { 20.0 } else { 235.0 };
                    }
                }
            }
            frame.set(x, y, (acc / samples + 0.5) as u8);
        }
    }

    let mut corners = Vec::with_capacity((board_w * board_h) as usize);
    for r in 0..board_h {
        for c in 0..board_w {
            corners.push(apply_homography(
                h,
                Point2::new((c + 1) as f64, (r + 1) as f64),
            )?);
        }
    }
    Ok((frame, corners))
}
