//! Detection of square fiducial markers and chessboard targets in grayscale
//! images, built from scratch on a small set of composable stages:
//!
//! 1. **image** – pixel containers, grayscale conversion, PNM codec.
//! 2. **threshold** – global and adaptive-mean binarization (integral-image
//!    backed).
//! 3. **contour** – border tracing with a two-level outer/hole hierarchy.
//! 4. **polygon** – Ramer–Douglas–Peucker simplification, corner ordering and
//!    square-candidate filtering.
//! 5. **geometry** / **pose** – four-point homography estimation, inverse
//!    perspective warping, planar pose recovery from a homography.
//! 6. **matching** – normalized cross-correlation, sliding template matching
//!    and marker identification over the four right-angle rotations.
//! 7. **chessboard** – Harris-based inner-corner detection with sub-pixel
//!    refinement.
//! 8. **pipeline** / **render** – end-to-end detection and the synthetic
//!    scene renderer used as its test oracle.
//!
//! The crate is `no_std` (with `alloc`); file formats, JSON and the CLI live
//! in the companion `markerfind` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod annotate;
pub mod chessboard;
pub mod contour;
pub mod geometry;
pub mod image;
pub mod integral;
pub mod matching;
pub(crate) mod math;
pub mod pipeline;
pub mod pnm;
pub mod polygon;
pub mod pose;
pub mod render;
pub mod threshold;

pub use crate::geometry::{Homography, Point2, Point3};
pub use crate::image::{BinaryImage, ColorImage, GrayImage, GrayscaleMethod};
pub use crate::matching::{MarkerDetection, PatternImage, PatternRegistry};
pub use crate::pipeline::{DetectConfig, ThresholdMode};
pub use crate::pose::{CameraIntrinsics, Pose};
