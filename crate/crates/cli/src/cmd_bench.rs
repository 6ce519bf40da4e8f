//! `markerfind bench`: per-stage timings over a corpus, swept across
//! registry sizes. Identification cost is expected to grow linearly with
//! the registry, which the emitted CSV makes checkable.

use std::io::Write;
use std::time::Instant;

use markerfind_core::image::{to_grayscale, GrayscaleMethod};
use markerfind_core::matching::identify_marker;
use markerfind_core::pipeline::{
    binarize, detect, extract_candidates, rectify_candidate, DetectConfig,
};
use markerfind_core::pnm::PnmImage;

use crate::args::BenchArgs;
use crate::io::{corpus_frames, load_image, load_registry, write_file};
use crate::CliError;

fn parse_sizes(spec: &str) -> Result<Vec<usize>, CliError> {
    let mut sizes = Vec::new();
    for part in spec.split(',') {
        let n: usize = part
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("--sizes: bad entry {:?}", part)))?;
        if n == 0 {
            return Err(CliError::config("--sizes: entries must be positive"));
        }
        sizes.push(n);
    }
    if sizes.is_empty() {
        return Err(CliError::config("--sizes: empty list"));
    }
    Ok(sizes)
}

fn median_ms(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

pub fn run(args: BenchArgs) -> Result<(), CliError> {
    let frames = corpus_frames(&args.corpus)?;
    if frames.is_empty() {
        return Err(CliError::config(format!(
            "{}: no PGM frames in corpus",
            args.corpus.display()
        )));
    }
    let sizes = parse_sizes(&args.sizes)?;
    let registry = load_registry(&args.registry, 0.75)?;
    let max_size = *sizes.iter().max().unwrap();
    if max_size > registry.len() {
        return Err(CliError::config(format!(
            "--sizes asks for {} patterns but the registry holds {}",
            max_size,
            registry.len()
        )));
    }
    let reps = args.reps.max(1);

    let mut csv = String::from(
        "frame,registry_size,candidates,threshold_ms,contours_ms,rectify_ms,match_ms,total_ms\n",
    );
    for frame_path in &frames {
        let gray = match load_image(frame_path)? {
            PnmImage::Gray(g) => g,
            PnmImage::Color(c) => to_grayscale(&c, GrayscaleMethod::Luminance),
        };
        let cfg = DetectConfig {
            pattern_size: registry.side(),
            ..DetectConfig::default()
        };
        for &size in &sizes {
            let sub = registry.truncated(size);
            let mut t_threshold = Vec::with_capacity(reps as usize);
            let mut t_contours = Vec::with_capacity(reps as usize);
            let mut t_rectify = Vec::with_capacity(reps as usize);
            let mut t_match = Vec::with_capacity(reps as usize);
            let mut t_total = Vec::with_capacity(reps as usize);
            let mut candidates = 0usize;
            for _ in 0..reps {
                let start = Instant::now();
                let mask = binarize(&gray, &cfg)
                    .map_err(|e| CliError::config(format!("{}", e)))?;
                t_threshold.push(start.elapsed().as_secs_f64() * 1e3);

                let start = Instant::now();
                let quads = extract_candidates(&gray, &mask, &cfg);
                t_contours.push(start.elapsed().as_secs_f64() * 1e3);
                candidates = quads.len();

                let start = Instant::now();
                let patches: Vec<_> = quads
                    .iter()
                    .filter_map(|q| rectify_candidate(&gray, q, sub.side()).ok())
                    .collect();
                t_rectify.push(start.elapsed().as_secs_f64() * 1e3);

                let start = Instant::now();
                for patch in &patches {
                    identify_marker(patch, &sub)
                        .map_err(|e| CliError::config(format!("{}", e)))?;
                }
                t_match.push(start.elapsed().as_secs_f64() * 1e3);

                let start = Instant::now();
                let _ = detect(&gray, &cfg, &sub)
                    .map_err(|e| CliError::config(format!("{}", e)))?;
                t_total.push(start.elapsed().as_secs_f64() * 1e3);
            }
            csv.push_str(&format!(
                "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
                frame_path.display(),
                size,
                candidates,
                median_ms(t_threshold),
                median_ms(t_contours),
                median_ms(t_rectify),
                median_ms(t_match),
                median_ms(t_total),
            ));
        }
    }

    match &args.out {
        Some(path) => write_file(path, csv.as_bytes())?,
        None => {
            std::io::stdout()
                .write_all(csv.as_bytes())
                .map_err(|e| CliError::config(format!("stdout: {}", e)))?;
        }
    }
    Ok(())
}
