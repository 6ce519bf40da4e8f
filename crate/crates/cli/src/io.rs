//! File loading and the on-disk JSON schemata (registry manifest, camera
//! intrinsics, scene descriptions).

use std::fs;
use std::path::{Path, PathBuf};

use markerfind_core::matching::{PatternImage, PatternRegistry};
use markerfind_core::pnm::{load_pnm, PnmImage};
use markerfind_core::pose::CameraIntrinsics;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub fn load_image(path: &Path) -> Result<PnmImage, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {}", path.display(), e)))?;
    load_pnm(&bytes).map_err(|e| CliError::config(format!("{}: {}", path.display(), e)))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::config(format!("cannot write {}: {}", path.display(), e)))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    /// Path to a square binary PGM, relative to the manifest file.
    pub file: String,
}

/// Load a registry manifest plus all referenced pattern images.
pub fn load_registry(path: &Path, acceptance_threshold: f64) -> Result<PatternRegistry, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {}", path.display(), e)))?;
    let entries: Vec<ManifestEntry> = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: invalid manifest: {}", path.display(), e)))?;
    if entries.is_empty() {
        return Err(CliError::config(format!(
            "{}: manifest lists no patterns",
            path.display()
        )));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let mut patterns = Vec::with_capacity(entries.len());
    for entry in entries {
        let file = base.join(&entry.file);
        let img = match load_image(&file)? {
            PnmImage::Gray(g) => g,
            PnmImage::Color(_) => {
                return Err(CliError::config(format!(
                    "{}: pattern must be a grayscale P5 file",
                    file.display()
                )))
            }
        };
        let pattern = PatternImage::new(img).map_err(|e| {
            CliError::config(format!("{}: {}", file.display(), e))
        })?;
        patterns.push((entry.id, pattern));
    }
    PatternRegistry::new(patterns, acceptance_threshold)
        .map_err(|e| CliError::config(format!("{}: {}", path.display(), e)))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraJson {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub skew: f64,
}

impl CameraJson {
    pub fn to_intrinsics(self) -> Result<CameraIntrinsics, CliError> {
        CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy, self.skew)
            .map_err(|e| CliError::config(format!("invalid camera intrinsics: {}", e)))
    }

    pub fn from_intrinsics(k: &CameraIntrinsics) -> Self {
        CameraJson {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            skew: k.skew,
        }
    }
}

pub fn load_camera(path: &Path) -> Result<CameraIntrinsics, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {}", path.display(), e)))?;
    let json: CameraJson = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {}", path.display(), e)))?;
    json.to_intrinsics()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub width: u32,
    pub height: u32,
    #[serde(default = "default_background")]
    pub background: u8,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    pub placements: Vec<ScenePlacement>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenePlacement {
    pub id: String,
    /// Marker center in pixels.
    pub center: [f64; 2],
    /// Apparent side length in pixels (at the marker center depth).
    pub side: f64,
    #[serde(default)]
    pub roll_deg: f64,
    #[serde(default)]
    pub tilt_deg: f64,
    #[serde(default)]
    pub tilt_axis_deg: f64,
    #[serde(default = "default_contrast")]
    pub contrast: f64,
}

fn default_background() -> u8 {
    210
}

fn default_contrast() -> f64 {
    0.9
}

pub fn load_scene(path: &Path) -> Result<SceneFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {}", path.display(), e)))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {}", path.display(), e)))
}

/// Frames of a corpus directory, sorted by file name for determinism.
pub fn corpus_frames(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut frames: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::config(format!("cannot read {}: {}", dir.display(), e)))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map_or(false, |ext| ext == "pgm"))
        .collect();
    frames.sort();
    Ok(frames)
}
