//! End-to-end detection: frame in, identified markers out.
//!
//! The stages are exposed individually (binarize, candidate extraction,
//! rectification, identification) so callers can instrument them; `detect`
//! is their composition. All stages are pure, so identical inputs always
//! produce identical detections.

use alloc::vec::Vec;
use core::fmt;

use crate::contour::trace_contours;
use crate::geometry::{estimate_homography, warp_inverse, GeometryError, Homography, Point2};
use crate::image::{to_grayscale, BinaryImage, ColorImage, GrayImage, GrayscaleMethod};
use crate::matching::{
    identify_marker, MarkerDetection, MatchError, PatternImage, PatternRegistry,
};
use crate::math;
use crate::polygon::{find_quad_candidates, QuadCandidate};
use crate::pose::{pose_from_homography, CameraIntrinsics};
use crate::render::MODEL_CORNERS;
use crate::threshold::{threshold_adaptive_mean, threshold_global, ThresholdError};

/// Binarization stage selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Fixed threshold for controlled lighting.
    Global(u8),
    /// Windowed mean minus offset; the default for uneven lighting.
    AdaptiveMean { window: u32, c: i32 },
}

/// All tunables of the detection pipeline.
#[derive(Debug, Clone, Copy)]
pub struct DetectConfig {
    pub grayscale: GrayscaleMethod,
    pub threshold: ThresholdMode,
    /// Polygon approximation tolerance as a fraction of contour perimeter.
    pub epsilon_frac: f64,
    /// Minimum outer quad area in squared pixels.
    pub min_area: f64,
    /// Rectified patch side; must equal the registry pattern side.
    pub pattern_size: u32,
    /// Score a rectified patch must reach to count as identified; applied
    /// when building the registry.
    pub acceptance_threshold: f64,
    /// Enables pose recovery when present.
    pub intrinsics: Option<CameraIntrinsics>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            grayscale: GrayscaleMethod::Luminance,
            threshold: ThresholdMode::AdaptiveMean { window: 31, c: 7 },
            epsilon_frac: 0.05,
            min_area: 100.0,
            pattern_size: 32,
            acceptance_threshold: 0.75,
            intrinsics: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DetectError {
    Threshold(ThresholdError),
    Geometry(GeometryError),
    Match(MatchError),
}

impl fmt::Display for DetectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectError::Threshold(e) => write!(f, "{}", e),
            DetectError::Geometry(e) => write!(f, "{}", e),
            DetectError::Match(e) => write!(f, "{}", e),
        }
    }
}

impl core::error::Error for DetectError {}

impl From<ThresholdError> for DetectError {
    fn from(e: ThresholdError) -> Self {
        DetectError::Threshold(e)
    }
}

impl From<GeometryError> for DetectError {
    fn from(e: GeometryError) -> Self {
        DetectError::Geometry(e)
    }
}

impl From<MatchError> for DetectError {
    fn from(e: MatchError) -> Self {
        DetectError::Match(e)
    }
}

/// Stage 1: binarize a grayscale frame.
pub fn binarize(img: &GrayImage, cfg: &DetectConfig) -> Result<BinaryImage, DetectError> {
    Ok(match cfg.threshold {
        ThresholdMode::Global(p) => threshold_global(img, p),
        ThresholdMode::AdaptiveMean { window, c } => threshold_adaptive_mean(img, window, c)?,
    })
}

/// Stage 2: contours, square-candidate filtering, and grayscale corner
/// refinement. Markers are dark, so tracing runs with inverted polarity
/// (0 pixels are foreground). The binary boundary pins corners only to the
/// pixel grid; re-fitting each side against the intensity profile of the
/// original frame removes the quantization phase.
pub fn extract_candidates(
    img: &GrayImage,
    mask: &BinaryImage,
    cfg: &DetectConfig,
) -> Vec<QuadCandidate> {
    let contours = trace_contours(mask, true);
    find_quad_candidates(&contours, cfg.min_area, cfg.epsilon_frac)
        .iter()
        .map(|q| crate::polygon::refine_quad_grayscale(img, q))
        .collect()
}

/// Stage 3: cancel the perspective of one candidate into a `size x size`
/// patch. The homography maps the scaled model square onto the candidate's
/// outer corners; sampling runs through its inverse.
pub fn rectify_candidate(
    img: &GrayImage,
    quad: &QuadCandidate,
    size: u32,
) -> Result<PatternImage, DetectError> {
    let s = size as f64;
    let src = [
        Point2::new(0.0, 0.0),
        Point2::new(0.0, s),
        Point2::new(s, s),
        Point2::new(s, 0.0),
    ];
    let h = estimate_homography(&src, &quad.outer)?;
    let patch = warp_inverse(img, &h, size, size)?;
    Ok(PatternImage::new(patch)?)
}

/// Stage 4: identify candidates against the registry and assemble
/// detections, sorted by descending score.
pub fn identify_candidates(
    img: &GrayImage,
    quads: &[QuadCandidate],
    cfg: &DetectConfig,
    registry: &PatternRegistry,
) -> Result<Vec<MarkerDetection>, DetectError> {
    let mut out = Vec::new();
    let mut seen_outers: Vec<[Point2; 4]> = Vec::new();
    for quad in quads {
        // One physical marker can surface as several (outer, child) pairs
        // when rasterization splits its interior; the detection depends
        // only on the outer ring, so keep the first.
        let duplicate = seen_outers.iter().any(|prev| {
            quad.outer
                .iter()
                .zip(prev.iter())
                .all(|(a, b)| a.distance(*b) < 0.5)
        });
        if duplicate {
            continue;
        }
        seen_outers.push(quad.outer);

        let patch = match rectify_candidate(img, quad, registry.side()) {
            Ok(p) => p,
            // A candidate that degenerates under rectification is noise.
            Err(DetectError::Geometry(_)) => continue,
            Err(e) => return Err(e),
        };
        let Some(identity) = identify_marker(&patch, registry)? else {
            continue;
        };

        // The rotation label says which canonical corner corresponds to
        // the pattern origin (the canonical list is the projected model
        // ring rotated back by j0 steps); undo it so the homography and
        // pose live in the pattern's frame.
        let j0 = (identity.rotation_deg / 90) as usize;
        let dst: [Point2; 4] = core::array::from_fn(|k| quad.outer[(k + j0) % 4]);
        let h4 = estimate_homography(&MODEL_CORNERS, &dst)?;
        let homography = fit_marker_homography(&h4, quad, j0).unwrap_or(h4);
        // Pose decomposition can degenerate on extreme geometry; the
        // detection itself is still valid without it.
        let pose = cfg
            .intrinsics
            .as_ref()
            .and_then(|k| pose_from_homography(&homography, k).ok());

        out.push(MarkerDetection {
            id: identity.id,
            corners: quad.outer,
            rotation_deg: identity.rotation_deg,
            score: identity.score,
            homography,
            pose,
        });
    }
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.id.cmp(&b.id))
            .then_with(|| a.corners[0].y.total_cmp(&b.corners[0].y))
            .then_with(|| a.corners[0].x.total_cmp(&b.corners[0].x))
    });
    Ok(out)
}

/// Homography over all eight marker points: the outer corners plus the
/// border's inner edge at the model inset 0.25, when the traced hole
/// really is that edge. Eight correspondences average out the per-edge
/// sub-pixel bias that four alone would pass straight into the pose.
///
/// With a mean window narrower than the border band, the threshold
/// relights the band's middle and the traced hole is a window-governed
/// shell instead of the border's inner edge; its position in model space
/// then reveals the mismatch, and the fit falls back to four points.
fn fit_marker_homography(h4: &Homography, quad: &QuadCandidate, j0: usize) -> Option<Homography> {
    // Map inner corners into model space; a genuine border inner edge
    // lands at the unit square inset by 0.25 on each side.
    let h4_inv = h4.inverse().ok()?;
    let mut insets = [0.0f64; 4];
    for (k, corner) in quad.inner.iter().enumerate() {
        let m = crate::geometry::apply_homography(&h4_inv, *corner).ok()?;
        let inset_x = m.x.min(1.0 - m.x);
        let inset_y = m.y.min(1.0 - m.y);
        if !(0.0..=0.5).contains(&inset_x) || !(0.0..=0.5).contains(&inset_y) {
            return None;
        }
        insets[k] = 0.5 * (inset_x + inset_y);
    }
    let mean_inset = insets.iter().sum::<f64>() / 4.0;
    let spread = insets
        .iter()
        .fold(0.0f64, |acc, v| acc.max(math::abs(v - mean_inset)));
    if math::abs(mean_inset - 0.25) > 0.05 || spread > 0.03 {
        return None;
    }

    let cx = quad.outer.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = quad.outer.iter().map(|p| p.y).sum::<f64>() / 4.0;
    // Both rings are canonically ordered, but independently; pick the
    // cyclic shift pairing each inner corner with its outer corner.
    let mut best_shift = 0;
    let mut best_cost = f64::INFINITY;
    for s in 0..4 {
        let mut cost = 0.0;
        for k in 0..4 {
            let expected = Point2::new(
                cx + 0.5 * (quad.outer[k].x - cx),
                cy + 0.5 * (quad.outer[k].y - cy),
            );
            cost += quad.inner[(k + s) % 4].distance(expected);
        }
        if cost < best_cost {
            best_cost = cost;
            best_shift = s;
        }
    }

    let model_inner: [Point2; 4] = [
        Point2::new(0.25, 0.25),
        Point2::new(0.25, 0.75),
        Point2::new(0.75, 0.75),
        Point2::new(0.75, 0.25),
    ];
    let mut src = Vec::with_capacity(8);
    let mut dst = Vec::with_capacity(8);
    for k in 0..4 {
        src.push(MODEL_CORNERS[k]);
        dst.push(quad.outer[(k + j0) % 4]);
        src.push(model_inner[k]);
        dst.push(quad.inner[(k + j0 + best_shift) % 4]);
    }
    crate::geometry::fit_homography_lsq(&src, &dst)
}

/// Full pipeline over a grayscale frame.
pub fn detect(
    img: &GrayImage,
    cfg: &DetectConfig,
    registry: &PatternRegistry,
) -> Result<Vec<MarkerDetection>, DetectError> {
    let mask = binarize(img, cfg)?;
    let quads = extract_candidates(img, &mask, cfg);
    identify_candidates(img, &quads, cfg, registry)
}

/// Full pipeline over an RGB frame (grayscale conversion per config).
pub fn detect_color(
    img: &ColorImage,
    cfg: &DetectConfig,
    registry: &PatternRegistry,
) -> Result<Vec<MarkerDetection>, DetectError> {
    let gray = to_grayscale(img, cfg.grayscale);
    detect(&gray, cfg, registry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_homography, Homography};
    use crate::matching::ncc_score;
    use crate::math;
    use crate::pose::{homography_from_pose, rotation_axis_angle, Pose};
    use crate::render::{
        build_registry, generate_pattern_bits, render_synthetic, Placement, SyntheticScene,
    };
    use alloc::string::ToString;
    use alloc::vec;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    fn frontal_h(x: f64, y: f64, side: f64) -> Homography {
        Homography::from_matrix([[side, 0.0, x], [0.0, side, y], [0.0, 0.0, 1.0]]).unwrap()
    }

    fn registry(n: usize, seed: u64) -> PatternRegistry {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = generate_pattern_bits(n, &mut rng);
        build_registry("m", &bits, 32, 0.75).unwrap()
    }

    #[test]
    fn blank_frame_detects_nothing() {
        let reg = registry(2, 1);
        let img = GrayImage::filled(320, 240, 200);
        let cfg = DetectConfig::default();
        assert!(detect(&img, &cfg, &reg).unwrap().is_empty());
    }

    #[test]
    fn axis_aligned_rectification_is_a_crop() {
        let reg = registry(1, 2);
        let scene = SyntheticScene::new(
            GrayImage::filled(96, 96, 230),
            vec![Placement {
                id: "m0".to_string(),
                homography: frontal_h(32.0, 32.0, 32.0),
                contrast: 0.9,
                pose: None,
            }],
            0,
        )
        .unwrap();
        let img = render_synthetic(&scene, &reg, 0.0).unwrap();
        let quad = QuadCandidate {
            outer: [
                Point2::new(32.0, 32.0),
                Point2::new(32.0, 64.0),
                Point2::new(64.0, 64.0),
                Point2::new(64.0, 32.0),
            ],
            inner: [
                Point2::new(40.0, 40.0),
                Point2::new(40.0, 56.0),
                Point2::new(56.0, 56.0),
                Point2::new(56.0, 40.0),
            ],
            area: 1024.0,
        };
        let patch = rectify_candidate(&img, &quad, 32).unwrap();
        for y in 0..32u32 {
            for x in 0..32u32 {
                let direct = img.get(32 + x, 32 + y) as i32;
                let warped = patch.image().get(x, y) as i32;
                assert!((direct - warped).abs() <= 1, "({}, {})", x, y);
            }
        }
    }

    #[test]
    fn tilted_candidate_rectifies_close_to_the_pattern() {
        let reg = registry(1, 3);
        let k = CameraIntrinsics::new(400.0, 400.0, 120.0, 90.0, 0.0).unwrap();
        let tilt = rotation_axis_angle([0.0, 1.0, 0.0], 30f64.to_radians());
        let pose = Pose::new(tilt, [-0.5, -0.5, 5.0]);
        let h = homography_from_pose(&k, &pose).unwrap();
        let scene = SyntheticScene::new(
            GrayImage::filled(240, 180, 210),
            vec![Placement {
                id: "m0".to_string(),
                homography: h,
                contrast: 0.95,
                pose: Some(pose),
            }],
            0,
        )
        .unwrap();
        let img = render_synthetic(&scene, &reg, 0.0).unwrap();
        let cfg = DetectConfig::default();
        let mask = binarize(&img, &cfg).unwrap();
        let quads = extract_candidates(&img, &mask, &cfg);
        assert_eq!(quads.len(), 1);
        let patch = rectify_candidate(&img, &quads[0], 32).unwrap();
        // Align the patch with the stored pattern per the scene's truth.
        let mut aligned = patch.image().clone();
        for _ in 0..scene.ground_truth[0].rotation_deg / 90 {
            aligned = crate::matching::rotate90_cw(&aligned);
        }
        let score = ncc_score(&aligned, reg.entries()[0].1.image()).unwrap();
        assert!(score > 0.9, "score {}", score);
    }

    #[test]
    fn degenerate_quad_is_rejected() {
        let img = GrayImage::filled(64, 64, 128);
        let quad = QuadCandidate {
            outer: [
                Point2::new(10.0, 10.0),
                Point2::new(10.0, 10.0),
                Point2::new(40.0, 40.0),
                Point2::new(40.0, 10.0),
            ],
            inner: [
                Point2::new(20.0, 20.0),
                Point2::new(20.0, 30.0),
                Point2::new(30.0, 30.0),
                Point2::new(30.0, 20.0),
            ],
            area: 900.0,
        };
        assert!(matches!(
            rectify_candidate(&img, &quad, 32),
            Err(DetectError::Geometry(_))
        ));
    }

    fn draw_disc(img: &mut GrayImage, cx: f64, cy: f64, r: f64, value: u8) {
        for y in 0..img.height() {
            for x in 0..img.width() {
                if math::hypot(x as f64 + 0.5 - cx, y as f64 + 0.5 - cy) <= r {
                    img.set(x, y, value);
                }
            }
        }
    }

    #[test]
    fn scene_with_markers_and_distractors() {
        let reg = registry(3, 4);
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 0.0).unwrap();
        let tilt = rotation_axis_angle([0.0, 1.0, 0.0], 30f64.to_radians());
        // The roll pushes the rotation label off zero, exercising the
        // corner correspondence compensation.
        let roll = rotation_axis_angle([0.0, 0.0, 1.0], 100f64.to_radians());
        let pose_b = Pose::new(crate::geometry::mat3_mul(&tilt, &roll), [0.8, 0.3, 5.0]);
        // A slight roll keeps the canonical corner choice unambiguous; an
        // exactly axis-aligned square canonicalizes on sub-pixel noise.
        let c5 = math::cos(5f64.to_radians());
        let s5 = math::sin(5f64.to_radians());
        let roll5 = Homography::from_matrix([
            [c5, -s5, 0.5 - 0.5 * c5 + 0.5 * s5],
            [s5, c5, 0.5 - 0.5 * s5 - 0.5 * c5],
            [0.0, 0.0, 1.0],
        ])
        .unwrap();
        let placements = vec![
            Placement {
                id: "m0".to_string(),
                homography: frontal_h(60.0, 60.0, 80.0).compose(&roll5).unwrap(),
                contrast: 0.9,
                pose: None,
            },
            Placement {
                id: "m1".to_string(),
                homography: homography_from_pose(&k, &pose_b).unwrap(),
                contrast: 0.9,
                pose: Some(pose_b),
            },
        ];
        let scene =
            SyntheticScene::new(GrayImage::filled(640, 480, 215), placements, 5).unwrap();
        let mut img = render_synthetic(&scene, &reg, 2.0).unwrap();
        // Distractors well away from the markers.
        draw_disc(&mut img, 520.0, 100.0, 30.0, 25);
        draw_disc(&mut img, 520.0, 100.0, 15.0, 220);
        draw_disc(&mut img, 250.0, 400.0, 25.0, 30);
        for y in 300..420u32 {
            for x in 80..110u32 {
                img.set(x, y, 20);
            }
        }
        for y in 390..420u32 {
            for x in 110..200u32 {
                img.set(x, y, 20);
            }
        }

        let cfg = DetectConfig {
            intrinsics: Some(k),
            ..DetectConfig::default()
        };
        let detections = detect(&img, &cfg, &reg).unwrap();
        assert_eq!(detections.len(), 2);
        let mut ids: Vec<&str> = detections.iter().map(|d| d.id.as_str()).collect();
        ids.sort_unstable();
        assert_eq!(ids, ["m0", "m1"]);

        for det in &detections {
            let truth = scene
                .ground_truth
                .iter()
                .find(|t| t.id == det.id)
                .unwrap();
            assert_eq!(det.rotation_deg, truth.rotation_deg, "{}", det.id);
            for (got, want) in det.corners.iter().zip(truth.corners.iter()) {
                assert!(got.distance(*want) < 1.0, "{}: {:?} vs {:?}", det.id, got, want);
            }
            assert!(det.score >= 0.75);
            // The pattern-frame homography must reproduce the placement's
            // corner mapping (this pins the rotation compensation).
            let placement = scene
                .placements
                .iter()
                .find(|p| p.id == det.id)
                .unwrap();
            for model in MODEL_CORNERS {
                let want = apply_homography(&placement.homography, model).unwrap();
                let got = apply_homography(&det.homography, model).unwrap();
                assert!(got.distance(want) < 1.5, "{}: {:?} vs {:?}", det.id, got, want);
            }
        }

        // Pose sanity for the posed marker.
        let det_b = detections.iter().find(|d| d.id == "m1").unwrap();
        let rec = det_b.pose.expect("intrinsics were provided");
        let mut rot_err = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                rot_err += (rec.r[i][j] - pose_b.r[i][j]) * (rec.r[i][j] - pose_b.r[i][j]);
            }
        }
        assert!(math::sqrt(rot_err) < 0.05, "rotation error {}", math::sqrt(rot_err));
        for i in 0..3 {
            assert!((rec.t[i] - pose_b.t[i]).abs() / pose_b.t[2] < 0.02);
        }
    }

    #[test]
    fn unregistered_marker_is_not_identified() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bits = generate_pattern_bits(4, &mut rng);
        let render_reg = build_registry("other", &bits[3..], 32, 0.75).unwrap();
        let detect_reg = build_registry("known", &bits[..3], 32, 0.75).unwrap();
        let scene = SyntheticScene::new(
            GrayImage::filled(320, 240, 210),
            vec![Placement {
                id: "other0".to_string(),
                homography: frontal_h(100.0, 80.0, 80.0),
                contrast: 0.9,
                pose: None,
            }],
            9,
        )
        .unwrap();
        let img = render_synthetic(&scene, &render_reg, 0.0).unwrap();
        let cfg = DetectConfig::default();
        // The candidate is found, identification rejects it.
        let mask = binarize(&img, &cfg).unwrap();
        assert_eq!(extract_candidates(&img, &mask, &cfg).len(), 1);
        assert!(detect(&img, &cfg, &detect_reg).unwrap().is_empty());
    }

    #[test]
    fn steep_tilt_still_identifies() {
        let reg = registry(1, 8);
        let k = CameraIntrinsics::new(600.0, 600.0, 160.0, 120.0, 0.0).unwrap();
        let tilt = rotation_axis_angle([0.0, 1.0, 0.0], 60f64.to_radians());
        let pose = Pose::new(tilt, [-0.25, -0.5, 6.0]);
        let h = homography_from_pose(&k, &pose).unwrap();
        let scene = SyntheticScene::new(
            GrayImage::filled(320, 240, 215),
            vec![Placement {
                id: "m0".to_string(),
                homography: h,
                contrast: 1.0,
                pose: Some(pose),
            }],
            3,
        )
        .unwrap();
        let img = render_synthetic(&scene, &reg, 0.0).unwrap();
        let detections = detect(&img, &DetectConfig::default(), &reg).unwrap();
        assert_eq!(detections.len(), 1);
        assert_eq!(detections[0].id, "m0");
    }

    #[test]
    fn detection_is_deterministic() {
        let reg = registry(2, 7);
        let scene = SyntheticScene::new(
            GrayImage::filled(320, 240, 200),
            vec![Placement {
                id: "m1".to_string(),
                homography: frontal_h(90.0, 70.0, 90.0),
                contrast: 0.85,
                pose: None,
            }],
            11,
        )
        .unwrap();
        let img = render_synthetic(&scene, &reg, 5.0).unwrap();
        let cfg = DetectConfig::default();
        let a = detect(&img, &cfg, &reg).unwrap();
        let b = detect(&img, &cfg, &reg).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.score, y.score);
            assert_eq!(x.corners, y.corners);
            assert_eq!(x.homography.matrix(), y.homography.matrix());
        }
    }
}
