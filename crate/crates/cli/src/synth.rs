//! Scene construction: pose-parameterized placements, random marker
//! scenes, and distractor-only frames. Every random draw flows through one
//! seeded generator, so a corpus is a pure function of its seed.

use markerfind_core::geometry::mat3_mul;
use markerfind_core::image::GrayImage;
use markerfind_core::matching::PatternRegistry;
use markerfind_core::pose::{homography_from_pose, rotation_axis_angle, CameraIntrinsics, Pose};
use markerfind_core::render::{Placement, SyntheticScene};
use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;

use crate::CliError;

/// Camera used for generated scenes; recorded in the ground truth file.
pub fn synth_camera(width: u32, height: u32) -> CameraIntrinsics {
    CameraIntrinsics::new(600.0, 600.0, width as f64 / 2.0, height as f64 / 2.0, 0.0)
        .expect("static intrinsics are valid")
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

/// Build a placement from pose parameters. `side` is the apparent side
/// length in pixels at the marker center depth.
pub fn make_placement(
    k: &CameraIntrinsics,
    id: &str,
    center: [f64; 2],
    side: f64,
    roll_deg: f64,
    tilt_deg: f64,
    tilt_axis_deg: f64,
    contrast: f64,
) -> Result<Placement, CliError> {
    if side < 8.0 {
        return Err(CliError::config(format!(
            "placement {:?}: side {} px too small",
            id, side
        )));
    }
    let roll = rotation_axis_angle([0.0, 0.0, 1.0], roll_deg.to_radians());
    let axis = [
        tilt_axis_deg.to_radians().cos(),
        tilt_axis_deg.to_radians().sin(),
        0.0,
    ];
    let tilt = rotation_axis_angle(axis, tilt_deg.to_radians());
    let r = mat3_mul(&tilt, &roll);

    let t3 = k.fx / side;
    let xc = (center[0] - k.cx) / k.fx * t3;
    let yc = (center[1] - k.cy) / k.fy * t3;
    // Translate so the marker center (0.5, 0.5) lands on the target ray.
    let rc = [
        0.5 * (r[0][0] + r[0][1]),
        0.5 * (r[1][0] + r[1][1]),
        0.5 * (r[2][0] + r[2][1]),
    ];
    let pose = Pose::new(r, [xc - rc[0], yc - rc[1], t3 - rc[2]]);
    let homography = homography_from_pose(k, &pose)
        .map_err(|e| CliError::config(format!("placement {:?}: {}", id, e)))?;
    Ok(Placement {
        id: id.to_string(),
        homography,
        contrast,
        pose: Some(pose),
    })
}

/// Nudge an in-plane rotation away from exact right angles, where the
/// canonical corner ordering of truth and detection could tie-break on
/// sub-pixel noise and disagree.
fn safe_roll_deg(rng: &mut ChaCha8Rng) -> f64 {
    let mut roll = range(rng, 0.0, 360.0);
    let rem = roll % 90.0;
    if rem < 2.0 {
        roll += 2.0;
    } else if rem > 88.0 {
        roll -= 2.0;
    }
    roll
}

/// One random marker scene: 1-3 placements, tilt up to 45 degrees,
/// apparent side at least 50 px, rejection-sampled against overlap.
/// Returns the scene and the noise sigma to render it with.
pub fn random_scene(
    rng: &mut ChaCha8Rng,
    registry: &PatternRegistry,
    width: u32,
    height: u32,
    noise_sigma: Option<f64>,
) -> Result<(SyntheticScene, f64), CliError> {
    let k = synth_camera(width, height);
    // Keep the scene darker than marker white: a quiet zone dimmer than
    // its surroundings reads as a printing defect and binarizes badly.
    let background = 150 + (rng.next_u32() % 40) as u8;
    let wanted = 1 + (rng.next_u32() % 3) as usize;
    let sigma = noise_sigma.unwrap_or_else(|| range(rng, 0.0, 8.0));
    let noise_seed = rng.next_u64();
    let bg = || GrayImage::filled(width, height, background);

    let mut accepted: Vec<Placement> = Vec::new();
    let mut attempts = 0;
    while accepted.len() < wanted && attempts < 80 {
        attempts += 1;
        let entry = (rng.next_u32() as usize) % registry.len();
        let id = registry.entries()[entry].0.clone();
        if accepted.iter().any(|p| p.id == id) {
            continue; // one instance per pattern keeps the truth pairing unique
        }
        // Smaller markers detect fine but carry too little perspective for
        // a tight pose: the tilt sensitivity of a corner scales with
        // side^2 / focal, so keep generated markers reasonably large.
        let side = range(rng, 80.0, 150.0);
        let margin = side * 1.1;
        if 2.0 * margin >= width as f64 || 2.0 * margin >= height as f64 {
            continue;
        }
        let center = [
            range(rng, margin, width as f64 - margin),
            range(rng, margin, height as f64 - margin),
        ];
        let placement = make_placement(
            &k,
            &id,
            center,
            side,
            safe_roll_deg(rng),
            range(rng, 0.0, 45.0),
            range(rng, 0.0, 360.0),
            range(rng, 0.75, 1.0),
        )?;
        let mut trial = accepted.clone();
        trial.push(placement.clone());
        match SyntheticScene::new(bg(), trial, noise_seed) {
            Ok(scene) => {
                // The canonical corner order starts at the lowest-y corner;
                // when two projected corners nearly tie, detection noise
                // could canonicalize differently than the truth. Reject
                // such ambiguous draws.
                let truth = scene.ground_truth.last().expect("just placed");
                let y0 = truth.corners[0].y;
                let ambiguous = truth.corners[1..].iter().any(|c| (c.y - y0).abs() < 0.75);
                if !ambiguous {
                    accepted.push(placement);
                }
            }
            Err(_) => {}
        }
    }
    if accepted.is_empty() {
        return Err(CliError::config(
            "failed to place any marker; frame too small for the size range",
        ));
    }
    let scene = SyntheticScene::new(bg(), accepted, noise_seed)
        .expect("accepted placements were validated incrementally");
    Ok((scene, sigma))
}

/// A frame of non-marker clutter: discs, rings, triangles, bars, L-shapes
/// and text-like strokes on a shaded background, plus noise.
pub fn distractor_frame(rng: &mut ChaCha8Rng, width: u32, height: u32) -> GrayImage {
    let base = 185 + (rng.next_u32() % 40) as u8;
    let mut img = GrayImage::filled(width, height, base);
    // Gentle horizontal shading so adaptive thresholding has work to do.
    let slope = range(rng, -20.0, 20.0);
    for y in 0..height {
        for x in 0..width {
            let v = img.get(x, y) as f64 + slope * (x as f64 / width as f64 - 0.5);
            img.set(x, y, v.clamp(0.0, 255.0) as u8);
        }
    }

    let shapes = 4 + (rng.next_u32() % 5) as usize;
    for _ in 0..shapes {
        let dark = 15 + (rng.next_u32() % 50) as u8;
        let cx = range(rng, 40.0, width as f64 - 40.0);
        let cy = range(rng, 40.0, height as f64 - 40.0);
        match rng.next_u32() % 6 {
            0 => draw_disc(&mut img, cx, cy, range(rng, 10.0, 35.0), 0.0, dark),
            1 => {
                let r = range(rng, 14.0, 38.0);
                draw_disc(&mut img, cx, cy, r, r * range(rng, 0.4, 0.6), dark);
            }
            2 => draw_triangle(&mut img, cx, cy, range(rng, 15.0, 40.0), dark),
            3 => {
                // Non-square hollow rectangle.
                let w = range(rng, 30.0, 70.0);
                let h = w * range(rng, 1.8, 2.6);
                draw_rect_ring(&mut img, cx, cy, w, h, range(rng, 4.0, 8.0), dark);
            }
            4 => {
                // Thin bar.
                let len = range(rng, 30.0, 90.0);
                draw_rect(&mut img, cx, cy, len, range(rng, 3.0, 7.0), dark);
            }
            _ => {
                // Text-like strokes: a row of short dashes.
                let mut x = cx - 25.0;
                for _ in 0..(3 + rng.next_u32() % 4) {
                    let w = range(rng, 4.0, 10.0);
                    draw_rect(&mut img, x, cy, w, range(rng, 6.0, 12.0), dark);
                    x += w + 4.0;
                }
            }
        }
    }
    markerfind_core::render::add_gaussian_noise(&mut img, range(rng, 0.0, 6.0), rng.next_u64());
    img
}

fn draw_disc(img: &mut GrayImage, cx: f64, cy: f64, r: f64, hole_r: f64, value: u8) {
    let x0 = (cx - r).max(0.0) as u32;
    let x1 = ((cx + r) as u32 + 1).min(img.width());
    let y0 = (cy - r).max(0.0) as u32;
    let y1 = ((cy + r) as u32 + 1).min(img.height());
    for y in y0..y1 {
        for x in x0..x1 {
            let d = ((x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2)).sqrt();
            if d <= r && d >= hole_r {
                img.set(x, y, value);
            }
        }
    }
}

fn draw_rect(img: &mut GrayImage, cx: f64, cy: f64, w: f64, h: f64, value: u8) {
    let x0 = (cx - w / 2.0).max(0.0) as u32;
    let x1 = ((cx + w / 2.0) as u32 + 1).min(img.width());
    let y0 = (cy - h / 2.0).max(0.0) as u32;
    let y1 = ((cy + h / 2.0) as u32 + 1).min(img.height());
    for y in y0..y1 {
        for x in x0..x1 {
            img.set(x, y, value);
        }
    }
}

fn draw_rect_ring(img: &mut GrayImage, cx: f64, cy: f64, w: f64, h: f64, band: f64, value: u8) {
    let x0 = (cx - w / 2.0).max(0.0) as u32;
    let x1 = ((cx + w / 2.0) as u32 + 1).min(img.width());
    let y0 = (cy - h / 2.0).max(0.0) as u32;
    let y1 = ((cy + h / 2.0) as u32 + 1).min(img.height());
    for y in y0..y1 {
        for x in x0..x1 {
            let dx = (x as f64 + 0.5 - cx).abs();
            let dy = (y as f64 + 0.5 - cy).abs();
            let in_outer = dx <= w / 2.0 && dy <= h / 2.0;
            let in_inner = dx <= w / 2.0 - band && dy <= h / 2.0 - band;
            if in_outer && !in_inner {
                img.set(x, y, value);
            }
        }
    }
}

fn draw_triangle(img: &mut GrayImage, cx: f64, cy: f64, r: f64, value: u8) {
    let x0 = (cx - r).max(0.0) as u32;
    let x1 = ((cx + r) as u32 + 1).min(img.width());
    let y0 = (cy - r).max(0.0) as u32;
    let y1 = ((cy + r) as u32 + 1).min(img.height());
    for y in y0..y1 {
        for x in x0..x1 {
            let px = x as f64 + 0.5 - cx;
            let py = y as f64 + 0.5 - cy;
            // Upright triangle: below the apex, inside the two slanted edges.
            if py >= -r / 2.0 && py <= r / 2.0 && px.abs() <= (py + r / 2.0) * 0.8 {
                img.set(x, y, value);
            }
        }
    }
}
