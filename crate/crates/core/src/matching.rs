//! Normalized cross-correlation, sliding template matching and marker
//! identification against a pattern registry.
//!
//! All correlation sums are accumulated in integers before a single float
//! evaluation, so scores are independent of pixel traversal order: rotating
//! both images by a right angle reproduces the same score bit for bit.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{Homography, Point2};
use crate::image::GrayImage;
use crate::integral::IntegralImage;
use crate::math;
use crate::pose::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchError {
    /// The two images must have identical dimensions.
    DimensionMismatch,
    /// Zero-variance image: correlation is undefined.
    ConstantInput,
    /// Template exceeds the searched image in some dimension.
    TemplateTooLarge,
    /// Zero-variance template: every window score would be undefined.
    ConstantTemplate,
    EmptyMatrix,
    /// Probe patch size differs from the registry pattern size.
    PatternSizeMismatch,
    DuplicateId,
    /// Acceptance threshold must lie in (0, 1].
    InvalidThreshold,
    /// Registry patterns must share one square size and be non-constant.
    InvalidPattern,
}

impl fmt::Display for MatchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            MatchError::DimensionMismatch => "images differ in size",
            MatchError::ConstantInput => "constant image has undefined correlation",
            MatchError::TemplateTooLarge => "template larger than image",
            MatchError::ConstantTemplate => "constant template",
            MatchError::EmptyMatrix => "empty result matrix",
            MatchError::PatternSizeMismatch => "patch size differs from registry patterns",
            MatchError::DuplicateId => "duplicate pattern id",
            MatchError::InvalidThreshold => "acceptance threshold must be in (0, 1]",
            MatchError::InvalidPattern => "registry pattern invalid",
        };
        write!(f, "{}", msg)
    }
}

impl core::error::Error for MatchError {}

/// Square grayscale pattern of fixed side length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternImage(GrayImage);

impl PatternImage {
    pub fn new(img: GrayImage) -> Result<Self, MatchError> {
        if img.width() != img.height() {
            return Err(MatchError::InvalidPattern);
        }
        Ok(PatternImage(img))
    }

    #[inline]
    pub fn side(&self) -> u32 {
        self.0.width()
    }

    #[inline]
    pub fn image(&self) -> &GrayImage {
        &self.0
    }
}

/// Named pattern set shared by all identification calls.
#[derive(Debug, Clone)]
pub struct PatternRegistry {
    entries: Vec<(String, PatternImage)>,
    acceptance_threshold: f64,
    side: u32,
}

impl PatternRegistry {
    /// Ids must be unique and patterns all of one size, at least 8 px and
    /// a multiple of 4 (so the central pattern region crops cleanly), with
    /// a non-constant central region.
    pub fn new(
        entries: Vec<(String, PatternImage)>,
        acceptance_threshold: f64,
    ) -> Result<Self, MatchError> {
        if !(acceptance_threshold > 0.0 && acceptance_threshold <= 1.0) {
            return Err(MatchError::InvalidThreshold);
        }
        let Some(side) = entries.first().map(|(_, p)| p.side()) else {
            return Err(MatchError::InvalidPattern);
        };
        if side < 8 || side % 4 != 0 {
            return Err(MatchError::InvalidPattern);
        }
        for (i, (id, p)) in entries.iter().enumerate() {
            if p.side() != side {
                return Err(MatchError::InvalidPattern);
            }
            if image_moments(&central_crop(p.image())).is_constant() {
                return Err(MatchError::InvalidPattern);
            }
            if entries[..i].iter().any(|(other, _)| other == id) {
                return Err(MatchError::DuplicateId);
            }
        }
        Ok(PatternRegistry {
            entries,
            acceptance_threshold,
            side,
        })
    }

    #[inline]
    pub fn side(&self) -> u32 {
        self.side
    }

    #[inline]
    pub fn acceptance_threshold(&self) -> f64 {
        self.acceptance_threshold
    }

    #[inline]
    pub fn entries(&self) -> &[(String, PatternImage)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Registry restricted to the first `n` entries (used by benchmarks).
    pub fn truncated(&self, n: usize) -> PatternRegistry {
        PatternRegistry {
            entries: self.entries[..n.min(self.entries.len())].to_vec(),
            acceptance_threshold: self.acceptance_threshold,
            side: self.side,
        }
    }
}

struct Moments {
    n: i128,
    sum: i128,
    sq_sum: i128,
}

impl Moments {
    /// `n * variance`, exact.
    fn variance_num(&self) -> i128 {
        self.n * self.sq_sum - self.sum * self.sum
    }

    fn is_constant(&self) -> bool {
        self.variance_num() == 0
    }
}

fn image_moments(img: &GrayImage) -> Moments {
    let mut sum = 0u64;
    let mut sq = 0u64;
    for &v in img.as_raw() {
        sum += v as u64;
        sq += v as u64 * v as u64;
    }
    Moments {
        n: img.as_raw().len() as i128,
        sum: sum as i128,
        sq_sum: sq as i128,
    }
}

/// Zero-mean normalized cross-correlation of two equal-sized images.
///
/// `sum((a - mean a)(b - mean b)) / sqrt(sum((a - mean a)^2) sum((b - mean b)^2))`,
/// evaluated from exact integer sums. Identical images score exactly 1 and
/// an inverted image exactly -1.
pub fn ncc_score(a: &GrayImage, b: &GrayImage) -> Result<f64, MatchError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(MatchError::DimensionMismatch);
    }
    let ma = image_moments(a);
    let mb = image_moments(b);
    let va = ma.variance_num();
    let vb = mb.variance_num();
    if va == 0 || vb == 0 {
        return Err(MatchError::ConstantInput);
    }
    let mut cross = 0u64;
    for (&x, &y) in a.as_raw().iter().zip(b.as_raw()) {
        cross += x as u64 * y as u64;
    }
    let num = ma.n * cross as i128 - ma.sum * mb.sum;
    Ok(num as f64 / math::sqrt(va as f64 * vb as f64))
}

/// Grid of per-offset correlation scores, `(W - w + 1) x (H - h + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultMatrix {
    width: u32,
    height: u32,
    data: Vec<f64>,
}

impl ResultMatrix {
    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Slide `tmpl` over `img` and score every offset with zero-mean NCC.
///
/// Patch means and squared sums come from integral images (constant cost
/// per window); the cross term is a direct loop. Windows with zero variance
/// score 0 by convention, since sliding over flat regions is routine.
pub fn match_template(img: &GrayImage, tmpl: &GrayImage) -> Result<ResultMatrix, MatchError> {
    if tmpl.width() > img.width() || tmpl.height() > img.height() {
        return Err(MatchError::TemplateTooLarge);
    }
    let mt = image_moments(tmpl);
    if mt.is_constant() {
        return Err(MatchError::ConstantTemplate);
    }
    let vt = mt.variance_num() as f64;

    let out_w = img.width() - tmpl.width() + 1;
    let out_h = img.height() - tmpl.height() + 1;
    let tw = tmpl.width() as usize;
    let th = tmpl.height() as usize;
    let n = (tw * th) as i128;

    let sums = IntegralImage::from_gray(img);
    let sq_sums = IntegralImage::from_gray_squared(img);

    let mut data = Vec::with_capacity(out_w as usize * out_h as usize);
    for y in 0..out_h {
        for x in 0..out_w {
            let sp = sums.rect_sum(x, y, x + tmpl.width() - 1, y + tmpl.height() - 1) as i128;
            let qp = sq_sums.rect_sum(x, y, x + tmpl.width() - 1, y + tmpl.height() - 1) as i128;
            let vp = n * qp - sp * sp;
            if vp == 0 {
                data.push(0.0);
                continue;
            }
            let mut cross = 0u64;
            for ty in 0..th {
                let img_row = img.row(y + ty as u32);
                let tmpl_row = tmpl.row(ty as u32);
                for tx in 0..tw {
                    cross += img_row[x as usize + tx] as u64 * tmpl_row[tx] as u64;
                }
            }
            let num = n * cross as i128 - sp * mt.sum;
            data.push(num as f64 / math::sqrt(vp as f64 * vt));
        }
    }
    Ok(ResultMatrix {
        width: out_w,
        height: out_h,
        data,
    })
}

/// Global extrema of a result matrix; ties resolve to the first occurrence
/// in row-major order.
pub fn min_max_loc(m: &ResultMatrix) -> Result<(f64, (u32, u32), f64, (u32, u32)), MatchError> {
    if m.data.is_empty() {
        return Err(MatchError::EmptyMatrix);
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut min_loc = (0, 0);
    let mut max_loc = (0, 0);
    for y in 0..m.height {
        for x in 0..m.width {
            let v = m.get(x, y);
            if v < min {
                min = v;
                min_loc = (x, y);
            }
            if v > max {
                max = v;
                max_loc = (x, y);
            }
        }
    }
    Ok((min, min_loc, max, max_loc))
}

/// Central half of a square image, the region carrying the pattern cells.
/// For sides divisible by 4 the crop is symmetric, so it commutes with
/// right-angle rotation.
fn central_crop(img: &GrayImage) -> GrayImage {
    let s = img.width();
    let off = s / 4;
    let half = s / 2;
    let mut out = GrayImage::new(half, half);
    for y in 0..half {
        for x in 0..half {
            out.set(x, y, img.get(off + x, off + y));
        }
    }
    out
}

/// Rotate a square image 90 degrees clockwise.
pub fn rotate90_cw(img: &GrayImage) -> GrayImage {
    let s = img.width();
    debug_assert_eq!(s, img.height());
    let mut out = GrayImage::new(s, s);
    for y in 0..s {
        for x in 0..s {
            out.set(x, y, img.get(y, s - 1 - x));
        }
    }
    out
}

/// Outcome of matching a rectified patch against the registry.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerIdentity {
    pub id: String,
    /// Clockwise rotation (degrees) that aligns the patch with the stored
    /// pattern.
    pub rotation_deg: u16,
    pub score: f64,
}

/// Match a rectified patch against every registry pattern at the four
/// right-angle rotations.
///
/// Scores are correlations over the central pattern region only: the black
/// border and its white margin are common to every marker of the family
/// and would otherwise dominate the correlation, making any marker face
/// pass the threshold against any pattern. Returns the best pairing when
/// its score reaches the registry acceptance threshold; ties resolve to
/// the earlier registry entry, then the smaller rotation. A patch with a
/// zero-variance center cannot correlate and yields `None`.
pub fn identify_marker(
    patch: &PatternImage,
    registry: &PatternRegistry,
) -> Result<Option<MarkerIdentity>, MatchError> {
    if patch.side() != registry.side() {
        return Err(MatchError::PatternSizeMismatch);
    }
    if image_moments(&central_crop(patch.image())).is_constant() {
        return Ok(None);
    }

    let mut rotations: Vec<GrayImage> = Vec::with_capacity(4);
    rotations.push(central_crop(patch.image()));
    for i in 0..3 {
        rotations.push(rotate90_cw(&rotations[i]));
    }

    let mut best: Option<(usize, u16, f64)> = None;
    for (entry_idx, (_, pattern)) in registry.entries.iter().enumerate() {
        let pattern_center = central_crop(pattern.image());
        for (rot_idx, rotated) in rotations.iter().enumerate() {
            let score = ncc_score(rotated, &pattern_center)?;
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((entry_idx, 90 * rot_idx as u16, score));
            }
        }
    }
    Ok(best.and_then(|(entry_idx, rotation_deg, score)| {
        (score >= registry.acceptance_threshold).then(|| MarkerIdentity {
            id: registry.entries[entry_idx].0.clone(),
            rotation_deg,
            score,
        })
    }))
}

/// Fully identified marker produced by the detection pipeline.
#[derive(Debug, Clone)]
pub struct MarkerDetection {
    pub id: String,
    /// Canonically ordered corners in continuous image coordinates.
    pub corners: [Point2; 4],
    /// Rotation label from [`identify_marker`].
    pub rotation_deg: u16,
    pub score: f64,
    /// Marker model square (pattern frame) to image plane.
    pub homography: Homography,
    /// Present when camera intrinsics were supplied.
    pub pose: Option<Pose>,
}
