//! JSON output records. Struct field order fixes the key order, so output
//! bytes are deterministic for identical inputs.

use markerfind_core::chessboard::{BoardSpec, CornerGrid};
use markerfind_core::matching::MarkerDetection;
use markerfind_core::pose::Pose;
use serde::{Deserialize, Serialize};

use crate::io::CameraJson;

#[derive(Debug, Serialize, Deserialize)]
pub struct PoseOut {
    #[serde(rename = "R")]
    pub r: [[f64; 3]; 3],
    #[serde(rename = "T")]
    pub t: [f64; 3],
}

impl PoseOut {
    pub fn from_pose(p: &Pose) -> Self {
        PoseOut { r: p.r, t: p.t }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DetectionOut {
    pub id: String,
    pub score: f64,
    pub rotation_deg: u16,
    pub corners: [[f64; 2]; 4],
    pub homography: [[f64; 3]; 3],
    pub pose: Option<PoseOut>,
}

impl DetectionOut {
    pub fn from_detection(d: &MarkerDetection) -> Self {
        DetectionOut {
            id: d.id.clone(),
            score: d.score,
            rotation_deg: d.rotation_deg,
            corners: d.corners.map(|c| [c.x, c.y]),
            homography: *d.homography.matrix(),
            pose: d.pose.as_ref().map(PoseOut::from_pose),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FrameOut {
    pub frame: String,
    pub detections: Vec<DetectionOut>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BoardOut {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChessboardOut {
    pub frame: String,
    pub board: BoardOut,
    pub corners: Vec<[f64; 2]>,
    pub outer_indices: [usize; 4],
    pub outer_corners: [[f64; 2]; 4],
}

impl ChessboardOut {
    pub fn from_grid(frame: String, spec: &BoardSpec, grid: &CornerGrid) -> Self {
        let outer = markerfind_core::chessboard::outer_corners(grid, spec);
        ChessboardOut {
            frame,
            board: BoardOut {
                width: spec.width,
                height: spec.height,
            },
            corners: grid.corners.iter().map(|c| [c.x, c.y]).collect(),
            outer_indices: markerfind_core::chessboard::outer_corner_indices(spec),
            outer_corners: outer.map(|c| [c.x, c.y]),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MarkerTruthOut {
    pub id: String,
    pub rotation_deg: u16,
    pub corners: [[f64; 2]; 4],
    pub pose: Option<PoseOut>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FrameTruthOut {
    pub file: String,
    pub noise_sigma: f64,
    pub markers: Vec<MarkerTruthOut>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GroundTruthOut {
    pub camera: CameraJson,
    pub frames: Vec<FrameTruthOut>,
}

/// Canonical serialization for all JSON the tool writes.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serialization cannot fail");
    out.push(b'\n');
    out
}
