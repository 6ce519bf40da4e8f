//! Flag definitions for every subcommand.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "markerfind",
    version,
    about = "Square fiducial marker and chessboard detection on PNM images"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Detect registered markers in one frame and emit detection JSON.
    Detect(DetectArgs),
    /// Locate all inner corners of a chessboard target.
    Chessboard(ChessboardArgs),
    /// Generate synthetic frames with ground truth (and optionally a
    /// fresh pattern registry).
    Synth(SynthArgs),
    /// Per-stage timing benchmark over a frame corpus.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    /// Input frame (binary PGM or PPM).
    #[arg(long)]
    pub image: PathBuf,
    /// Registry manifest: JSON array of {"id", "file"} entries.
    #[arg(long)]
    pub registry: PathBuf,
    /// Write detection JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write an annotated PPM copy of the frame.
    #[arg(long)]
    pub annotate: Option<PathBuf>,
    /// Binarization: "global:P" or "adaptive:W,C" (default adaptive:31,7).
    #[arg(long)]
    pub threshold: Option<String>,
    /// Grayscale conversion for color input: luminance | r | g | b.
    #[arg(long)]
    pub grayscale: Option<String>,
    /// Camera intrinsics JSON enabling pose recovery.
    #[arg(long)]
    pub camera: Option<PathBuf>,
    /// Polygon tolerance as a fraction of contour perimeter.
    #[arg(long)]
    pub epsilon_frac: Option<f64>,
    /// Minimum candidate area in squared pixels.
    #[arg(long)]
    pub min_area: Option<f64>,
    /// Expected pattern side; must match the registry.
    #[arg(long)]
    pub pattern_size: Option<u32>,
    /// Identification score threshold in (0, 1].
    #[arg(long)]
    pub accept_threshold: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ChessboardArgs {
    /// Input frame (binary PGM or PPM).
    #[arg(long)]
    pub image: PathBuf,
    /// Inner corner counts as WxH, e.g. 7x5.
    #[arg(long)]
    pub board: String,
    /// Write result JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory for frames, ground truth and emitted registries.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Existing registry manifest to draw patterns from.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Generate this many patterns plus a manifest in the output
    /// directory and use them for the scenes.
    #[arg(long)]
    pub emit_registry: Option<usize>,
    /// Scene description JSON (exclusive with --random / --distractors).
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Generate N random marker scenes.
    #[arg(long)]
    pub random: Option<u32>,
    /// Generate N frames containing only non-marker shapes.
    #[arg(long)]
    pub distractors: Option<u32>,
    /// Master seed for all generated randomness.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed noise sigma; random scenes draw one from [0, 8] per frame
    /// when absent.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Frame width for generated scenes.
    #[arg(long, default_value_t = 640)]
    pub width: u32,
    /// Frame height for generated scenes.
    #[arg(long, default_value_t = 480)]
    pub height: u32,
    /// Re-detect every generated frame and check it against the ground
    /// truth; exits 3 on any mismatch.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Directory of PGM frames.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Registry manifest; must hold at least max(sizes) patterns.
    #[arg(long)]
    pub registry: PathBuf,
    /// Registry sizes to sweep, comma separated.
    #[arg(long, default_value = "1,2,4,8,16")]
    pub sizes: String,
    /// Repetitions per measurement (median is reported).
    #[arg(long, default_value_t = 20)]
    pub reps: u32,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
