//! `markerfind detect`: one frame in, detection JSON out.

use std::io::Write;

use markerfind_core::annotate::annotate;
use markerfind_core::image::{to_grayscale, ColorChannel, GrayscaleMethod};
use markerfind_core::pipeline::{detect, DetectConfig, ThresholdMode};
use markerfind_core::pnm::{save_ppm, PnmImage};

use crate::args::DetectArgs;
use crate::io::{load_camera, load_image, load_registry, write_file};
use crate::output::{to_json_bytes, DetectionOut, FrameOut};
use crate::CliError;

pub fn parse_threshold(spec: &str) -> Result<ThresholdMode, CliError> {
    if let Some(p) = spec.strip_prefix("global:") {
        let p: u8 = p
            .parse()
            .map_err(|_| CliError::config(format!("--threshold: bad global level {:?}", p)))?;
        return Ok(ThresholdMode::Global(p));
    }
    if let Some(rest) = spec.strip_prefix("adaptive:") {
        let (w, c) = rest
            .split_once(',')
            .ok_or_else(|| CliError::config("--threshold: expected adaptive:W,C"))?;
        let window: u32 = w
            .parse()
            .map_err(|_| CliError::config(format!("--threshold: bad window {:?}", w)))?;
        let c: i32 = c
            .parse()
            .map_err(|_| CliError::config(format!("--threshold: bad offset {:?}", c)))?;
        return Ok(ThresholdMode::AdaptiveMean { window, c });
    }
    Err(CliError::config(format!(
        "--threshold: expected global:P or adaptive:W,C, got {:?}",
        spec
    )))
}

pub fn parse_grayscale(spec: &str) -> Result<GrayscaleMethod, CliError> {
    match spec {
        "luminance" => Ok(GrayscaleMethod::Luminance),
        "r" => Ok(GrayscaleMethod::SingleChannel(ColorChannel::R)),
        "g" => Ok(GrayscaleMethod::SingleChannel(ColorChannel::G)),
        "b" => Ok(GrayscaleMethod::SingleChannel(ColorChannel::B)),
        other => Err(CliError::config(format!(
            "--grayscale: expected luminance|r|g|b, got {:?}",
            other
        ))),
    }
}

pub fn build_config(args: &DetectArgs) -> Result<DetectConfig, CliError> {
    let mut cfg = DetectConfig::default();
    if let Some(spec) = &args.threshold {
        cfg.threshold = parse_threshold(spec)?;
    }
    if let Some(spec) = &args.grayscale {
        cfg.grayscale = parse_grayscale(spec)?;
    }
    if let Some(e) = args.epsilon_frac {
        if !(e > 0.0 && e < 0.5) {
            return Err(CliError::config("--epsilon-frac must lie in (0, 0.5)"));
        }
        cfg.epsilon_frac = e;
    }
    if let Some(a) = args.min_area {
        if !(a > 0.0) {
            return Err(CliError::config("--min-area must be positive"));
        }
        cfg.min_area = a;
    }
    if let Some(t) = args.accept_threshold {
        if !(t > 0.0 && t <= 1.0) {
            return Err(CliError::config("--accept-threshold must lie in (0, 1]"));
        }
        cfg.acceptance_threshold = t;
    }
    if let Some(cam) = &args.camera {
        cfg.intrinsics = Some(load_camera(cam)?);
    }
    Ok(cfg)
}

pub fn run(args: DetectArgs) -> Result<(), CliError> {
    let mut cfg = build_config(&args)?;
    let registry = load_registry(&args.registry, cfg.acceptance_threshold)?;
    if let Some(size) = args.pattern_size {
        if size != registry.side() {
            return Err(CliError::config(format!(
                "--pattern-size {} does not match the registry pattern side {}",
                size,
                registry.side()
            )));
        }
    }
    cfg.pattern_size = registry.side();

    let gray = match load_image(&args.image)? {
        PnmImage::Gray(g) => g,
        PnmImage::Color(c) => to_grayscale(&c, cfg.grayscale),
    };
    let detections = detect(&gray, &cfg, &registry)
        .map_err(|e| CliError::config(format!("detection failed: {}", e)))?;

    let out = FrameOut {
        frame: args.image.display().to_string(),
        detections: detections.iter().map(DetectionOut::from_detection).collect(),
    };
    let json = to_json_bytes(&out);
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => {
            std::io::stdout()
                .write_all(&json)
                .map_err(|e| CliError::config(format!("stdout: {}", e)))?;
        }
    }

    if let Some(path) = &args.annotate {
        let rgb = annotate(&gray, &detections);
        write_file(path, &save_ppm(&rgb))?;
    }
    Ok(())
}
