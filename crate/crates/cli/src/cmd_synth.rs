//! `markerfind synth`: generate registries, marker scenes and distractor
//! frames with exact ground truth; optionally verify the detector against
//! what was just rendered.

use std::fs;
use std::path::Path;

use markerfind_core::geometry::Point2;
use markerfind_core::matching::PatternRegistry;
use markerfind_core::pipeline::{detect, DetectConfig};
use markerfind_core::pnm::save_pgm;
use markerfind_core::render::{
    build_registry, generate_pattern_bits, pattern_image, render_synthetic, SyntheticScene,
};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::args::SynthArgs;
use crate::io::{load_registry, load_scene, write_file, CameraJson, ManifestEntry};
use crate::output::{to_json_bytes, FrameTruthOut, GroundTruthOut, MarkerTruthOut, PoseOut};
use crate::synth::{distractor_frame, make_placement, random_scene, synth_camera};
use crate::threads::{effective_threads, parallel_map};
use crate::CliError;

const PATTERN_SIDE: u32 = 32;

fn emit_registry(
    out_dir: &Path,
    count: usize,
    seed: u64,
) -> Result<PatternRegistry, CliError> {
    if count == 0 {
        return Err(CliError::config("--emit-registry needs at least 1 pattern"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7061747465726e73); // "patterns"
    let bits = generate_pattern_bits(count, &mut rng);
    let mut manifest = Vec::with_capacity(count);
    for (i, &b) in bits.iter().enumerate() {
        let file = format!("pattern_{:03}.pgm", i);
        let img = pattern_image(b, PATTERN_SIDE);
        write_file(&out_dir.join(&file), &save_pgm(img.image()))?;
        manifest.push(ManifestEntry {
            id: format!("m{}", i),
            file,
        });
    }
    write_file(&out_dir.join("registry.json"), &to_json_bytes(&manifest))?;
    build_registry("m", &bits, PATTERN_SIDE, 0.75)
        .map_err(|e| CliError::config(format!("generated registry invalid: {}", e)))
}

struct RenderedFrame {
    file: String,
    sigma: f64,
    scene: Option<SyntheticScene>,
}

pub fn run(args: SynthArgs) -> Result<(), CliError> {
    if args.scene.is_some() && (args.random.is_some() || args.distractors.is_some()) {
        return Err(CliError::config(
            "--scene cannot be combined with --random or --distractors",
        ));
    }
    if args.scene.is_none() && args.random.is_none() && args.distractors.is_none() {
        return Err(CliError::config(
            "nothing to generate: give --scene, --random N or --distractors N",
        ));
    }
    if args.registry.is_some() && args.emit_registry.is_some() {
        return Err(CliError::config(
            "--registry and --emit-registry are mutually exclusive",
        ));
    }

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::config(format!("cannot create {}: {}", args.out_dir.display(), e)))?;

    let needs_patterns = args.scene.is_some() || args.random.is_some() || args.verify;
    let registry = if let Some(n) = args.emit_registry {
        Some(emit_registry(&args.out_dir, n, args.seed)?)
    } else if let Some(path) = &args.registry {
        Some(load_registry(path, 0.75)?)
    } else if needs_patterns {
        return Err(CliError::config(
            "marker scenes need --registry or --emit-registry",
        ));
    } else {
        None
    };

    let camera = synth_camera(args.width, args.height);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut rendered: Vec<RenderedFrame> = Vec::new();
    let mut truth_frames: Vec<FrameTruthOut> = Vec::new();

    if let Some(path) = &args.scene {
        let file = load_scene(path)?;
        let k = synth_camera(file.width, file.height);
        let mut placements = Vec::with_capacity(file.placements.len());
        for p in &file.placements {
            placements.push(make_placement(
                &k,
                &p.id,
                p.center,
                p.side,
                p.roll_deg,
                p.tilt_deg,
                p.tilt_axis_deg,
                p.contrast,
            )?);
        }
        let background = markerfind_core::image::GrayImage::filled(
            file.width,
            file.height,
            file.background,
        );
        let scene = SyntheticScene::new(background, placements, file.seed)
            .map_err(|e| CliError::config(format!("{}: {}", path.display(), e)))?;
        let sigma = args.noise_sigma.unwrap_or(file.noise_sigma);
        rendered.push(RenderedFrame {
            file: "frame_000.pgm".to_string(),
            sigma,
            scene: Some(scene),
        });
    }

    if let Some(n) = args.random {
        let registry = registry.as_ref().expect("checked above");
        for i in 0..n {
            let (scene, sigma) =
                random_scene(&mut rng, registry, args.width, args.height, args.noise_sigma)?;
            rendered.push(RenderedFrame {
                file: format!("frame_{:03}.pgm", i),
                sigma,
                scene: Some(scene),
            });
        }
    }

    if let Some(n) = args.distractors {
        for i in 0..n {
            let img = distractor_frame(&mut rng, args.width, args.height);
            let file = format!("distract_{:03}.pgm", i);
            write_file(&args.out_dir.join(&file), &save_pgm(&img))?;
            rendered.push(RenderedFrame {
                file,
                sigma: 0.0,
                scene: None,
            });
        }
    }

    for frame in &rendered {
        let Some(scene) = &frame.scene else {
            truth_frames.push(FrameTruthOut {
                file: frame.file.clone(),
                noise_sigma: frame.sigma,
                markers: Vec::new(),
            });
            continue;
        };
        let registry = registry.as_ref().expect("scenes require a registry");
        let img = render_synthetic(scene, registry, frame.sigma)
            .map_err(|e| CliError::config(format!("{}: {}", frame.file, e)))?;
        write_file(&args.out_dir.join(&frame.file), &save_pgm(&img))?;
        truth_frames.push(FrameTruthOut {
            file: frame.file.clone(),
            noise_sigma: frame.sigma,
            markers: scene
                .ground_truth
                .iter()
                .map(|t| MarkerTruthOut {
                    id: t.id.clone(),
                    rotation_deg: t.rotation_deg,
                    corners: t.corners.map(|c| [c.x, c.y]),
                    pose: t.pose.as_ref().map(PoseOut::from_pose),
                })
                .collect(),
        });
    }

    let truth = GroundTruthOut {
        camera: CameraJson::from_intrinsics(&camera),
        frames: truth_frames,
    };
    write_file(&args.out_dir.join("ground_truth.json"), &to_json_bytes(&truth))?;

    if args.verify {
        verify_corpus(&args.out_dir, &truth, registry.as_ref().expect("checked"), &camera)?;
        eprintln!("verify: {} frames consistent", truth.frames.len());
    }
    Ok(())
}

/// Re-detect every generated frame and compare with its ground truth:
/// identical id sets, exact rotation labels, corners within 1 px, and no
/// detections at all on distractor frames.
pub fn verify_corpus(
    dir: &Path,
    truth: &GroundTruthOut,
    registry: &PatternRegistry,
    camera: &markerfind_core::pose::CameraIntrinsics,
) -> Result<(), CliError> {
    let cfg = DetectConfig {
        pattern_size: registry.side(),
        intrinsics: Some(*camera),
        ..DetectConfig::default()
    };
    let threads = effective_threads()?;
    let items: Vec<&FrameTruthOut> = truth.frames.iter().collect();
    let reports = parallel_map(items, threads, |frame| -> Result<(), String> {
        let path = dir.join(&frame.file);
        let bytes = fs::read(&path).map_err(|e| format!("{}: {}", frame.file, e))?;
        let img = match markerfind_core::pnm::load_pnm(&bytes) {
            Ok(markerfind_core::pnm::PnmImage::Gray(g)) => g,
            Ok(_) => return Err(format!("{}: expected grayscale frame", frame.file)),
            Err(e) => return Err(format!("{}: {}", frame.file, e)),
        };
        let detections =
            detect(&img, &cfg, registry).map_err(|e| format!("{}: {}", frame.file, e))?;
        if detections.len() != frame.markers.len() {
            return Err(format!(
                "{}: expected {} markers, detected {}",
                frame.file,
                frame.markers.len(),
                detections.len()
            ));
        }
        for truth_marker in &frame.markers {
            let Some(det) = detections.iter().find(|d| d.id == truth_marker.id) else {
                return Err(format!("{}: marker {} missed", frame.file, truth_marker.id));
            };
            if det.rotation_deg != truth_marker.rotation_deg {
                return Err(format!(
                    "{}: marker {} rotation {} != {}",
                    frame.file, truth_marker.id, det.rotation_deg, truth_marker.rotation_deg
                ));
            }
            for (got, want) in det.corners.iter().zip(truth_marker.corners.iter()) {
                let err = got.distance(Point2::new(want[0], want[1]));
                if err >= 1.0 {
                    return Err(format!(
                        "{}: marker {} corner error {:.3} px",
                        frame.file, truth_marker.id, err
                    ));
                }
            }
        }
        Ok(())
    });
    let failures: Vec<String> = reports.into_iter().filter_map(|r| r.err()).collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::NotFound(format!(
            "verification failed on {} frame(s): {}",
            failures.len(),
            failures.join("; ")
        )))
    }
}
