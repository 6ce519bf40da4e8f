//! Renderer-anchored round trips: what the synthetic oracle draws, the
//! pipeline must recover.

use markerfind_core::geometry::{warp_inverse, Homography};
use markerfind_core::image::GrayImage;
use markerfind_core::pipeline::{detect, DetectConfig};
use markerfind_core::pose::{homography_from_pose, rotation_axis_angle, CameraIntrinsics, Pose};
use markerfind_core::render::{
    build_registry, generate_pattern_bits, render_synthetic, Placement, SyntheticScene,
};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

fn registry(n: usize, seed: u64) -> markerfind_core::matching::PatternRegistry {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = generate_pattern_bits(n, &mut rng);
    build_registry("m", &bits, 32, 0.75).unwrap()
}

#[test]
fn warp_inverse_recovers_the_rendered_pattern() {
    let reg = registry(1, 100);
    let k = CameraIntrinsics::new(420.0, 420.0, 130.0, 110.0, 0.0).unwrap();
    let tilt = rotation_axis_angle([0.3, 1.0, 0.0], 25f64.to_radians());
    let pose = Pose::new(tilt, [-0.5, -0.5, 4.0]);
    let h = homography_from_pose(&k, &pose).unwrap();
    let scene = SyntheticScene::new(
        GrayImage::filled(260, 220, 200),
        vec![Placement {
            id: "m0".to_string(),
            homography: h,
            contrast: 1.0,
            pose: Some(pose),
        }],
        0,
    )
    .unwrap();
    let img = render_synthetic(&scene, &reg, 0.0).unwrap();

    // Warp back through the very homography used to draw, scaled to the
    // pattern raster.
    let side = 32.0;
    let to_unit = Homography::from_matrix([
        [1.0 / side, 0.0, 0.0],
        [0.0, 1.0 / side, 0.0],
        [0.0, 0.0, 1.0],
    ])
    .unwrap();
    let patch_h = h.compose(&to_unit).unwrap();
    let patch = warp_inverse(&img, &patch_h, 32, 32).unwrap();

    let pattern = reg.entries()[0].1.image();
    let mut total = 0u64;
    let mut count = 0u64;
    for y in 1..31u32 {
        for x in 1..31u32 {
            total += (patch.get(x, y) as i64 - pattern.get(x, y) as i64).unsigned_abs();
            count += 1;
        }
    }
    let mae = total as f64 / count as f64;
    assert!(mae < 3.0, "mean absolute error {}", mae);
}

#[test]
fn frontal_marker_corners_within_half_pixel() {
    let reg = registry(2, 101);
    // Fractional placement with a slight roll: frontal, sub-pixel corner
    // positions, and an unambiguous canonical start corner.
    let c = 4f64.to_radians().cos();
    let s = 4f64.to_radians().sin();
    let roll = Homography::from_matrix([
        [c, -s, 0.5 - 0.5 * c + 0.5 * s],
        [s, c, 0.5 - 0.5 * s - 0.5 * c],
        [0.0, 0.0, 1.0],
    ])
    .unwrap();
    let h = Homography::from_matrix([[90.0, 0.0, 75.5], [0.0, 90.0, 60.25], [0.0, 0.0, 1.0]])
        .unwrap()
        .compose(&roll)
        .unwrap();
    let scene = SyntheticScene::new(
        GrayImage::filled(320, 240, 205),
        vec![Placement {
            id: "m1".to_string(),
            homography: h,
            contrast: 0.9,
            pose: None,
        }],
        42,
    )
    .unwrap();
    let img = render_synthetic(&scene, &reg, 0.0).unwrap();
    let detections = detect(&img, &DetectConfig::default(), &reg).unwrap();
    assert_eq!(detections.len(), 1);
    let truth = &scene.ground_truth[0];
    assert_eq!(detections[0].id, truth.id);
    assert_eq!(detections[0].rotation_deg, truth.rotation_deg);
    for (got, want) in detections[0].corners.iter().zip(truth.corners.iter()) {
        assert!(
            got.distance(*want) < 0.5,
            "corner {:?} vs {:?}",
            got,
            want
        );
    }
}

#[test]
fn rendering_same_seed_twice_is_bit_identical() {
    let reg = registry(1, 102);
    let h = Homography::from_matrix([[80.0, 0.0, 50.0], [0.0, 80.0, 40.0], [0.0, 0.0, 1.0]])
        .unwrap();
    let scene = SyntheticScene::new(
        GrayImage::filled(240, 200, 210),
        vec![Placement {
            id: "m0".to_string(),
            homography: h,
            contrast: 0.8,
            pose: None,
        }],
        1234,
    )
    .unwrap();
    let a = render_synthetic(&scene, &reg, 6.0).unwrap();
    let b = render_synthetic(&scene, &reg, 6.0).unwrap();
    assert_eq!(a, b);
}
