//! Camera intrinsics and planar pose recovery from a homography.
//!
//! The marker model is the unit square `(0,0) (0,1) (1,1) (1,0)` in the
//! `z = 0` plane, so recovered translations are expressed in units of the
//! marker side length.

use core::fmt;

use crate::geometry::{mat3_det, mat3_inv, mat3_mul, GeometryError, Homography, Mat3, Point2, Point3};
use crate::math;

/// Pinhole calibration matrix
///
/// ```text
/// [ fx  skew  cx ]
/// [  0   fy   cy ]
/// [  0    0    1 ]
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub skew: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, skew: f64) -> Result<Self, PoseError> {
        if !(fx > 0.0 && fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(PoseError::InvalidIntrinsics);
        }
        Ok(CameraIntrinsics { fx, fy, cx, cy, skew })
    }

    pub fn matrix(&self) -> Mat3 {
        [
            [self.fx, self.skew, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ]
    }

    pub(crate) fn inverse_matrix(&self) -> Mat3 {
        // Closed form for the upper-triangular pinhole matrix.
        let fx = self.fx;
        let fy = self.fy;
        let s = self.skew;
        [
            [1.0 / fx, -s / (fx * fy), (s * self.cy - self.cx * fy) / (fx * fy)],
            [0.0, 1.0 / fy, -self.cy / fy],
            [0.0, 0.0, 1.0],
        ]
    }
}

/// Rigid transform from marker coordinates to camera coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    /// Row-major rotation matrix; orthonormal with determinant +1.
    pub r: Mat3,
    /// Translation in units of the marker side length; `t[2] > 0`.
    pub t: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoseError {
    /// Focal terms must be finite and positive.
    InvalidIntrinsics,
    /// Homography columns too short to carry a rotation, or the marker
    /// plane passes through the camera center.
    Degenerate,
    /// The point sits at or behind the camera plane.
    BehindCamera,
    Geometry(GeometryError),
}

impl fmt::Display for PoseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoseError::InvalidIntrinsics => write!(f, "invalid camera intrinsics"),
            PoseError::Degenerate => write!(f, "degenerate homography for pose decomposition"),
            PoseError::BehindCamera => write!(f, "point has non-positive depth"),
            PoseError::Geometry(e) => write!(f, "{}", e),
        }
    }
}

impl core::error::Error for PoseError {}

impl From<GeometryError> for PoseError {
    fn from(e: GeometryError) -> Self {
        PoseError::Geometry(e)
    }
}

fn mat3_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn transpose(m: &Mat3) -> Mat3 {
    [
        [m[0][0], m[1][0], m[2][0]],
        [m[0][1], m[1][1], m[2][1]],
        [m[0][2], m[1][2], m[2][2]],
    ]
}

/// Rotation matrix about `axis` by `angle` radians (Rodrigues).
pub fn rotation_axis_angle(axis: [f64; 3], angle: f64) -> Mat3 {
    let n = math::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    assert!(n > 0.0, "rotation axis must be nonzero");
    let (x, y, z) = (axis[0] / n, axis[1] / n, axis[2] / n);
    let c = math::cos(angle);
    let s = math::sin(angle);
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

/// Project a marker-plane point through pose then intrinsics, dividing by
/// the camera-frame depth.
pub fn project(k: &CameraIntrinsics, pose: &Pose, p: Point3) -> Result<Point2, PoseError> {
    let cam = [
        pose.r[0][0] * p.x + pose.r[0][1] * p.y + pose.r[0][2] * p.z + pose.t[0],
        pose.r[1][0] * p.x + pose.r[1][1] * p.y + pose.r[1][2] * p.z + pose.t[1],
        pose.r[2][0] * p.x + pose.r[2][1] * p.y + pose.r[2][2] * p.z + pose.t[2],
    ];
    if cam[2] <= 1e-12 {
        return Err(PoseError::BehindCamera);
    }
    Ok(Point2::new(
        (k.fx * cam[0] + k.skew * cam[1] + k.cx * cam[2]) / cam[2],
        (k.fy * cam[1] + k.cy * cam[2]) / cam[2],
    ))
}

/// Nearest rotation to `m`: Newton iteration `X <- (X + X^-T) / 2`, which
/// converges to the orthogonal polar factor.
fn polar_rotation(m: &Mat3) -> Result<Mat3, PoseError> {
    let mut x = *m;
    for _ in 0..40 {
        let inv_t = transpose(&mat3_inv(&x).map_err(|_| PoseError::Degenerate)?);
        let mut next = [[0.0; 3]; 3];
        let mut delta = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                next[i][j] = 0.5 * (x[i][j] + inv_t[i][j]);
                let d = next[i][j] - x[i][j];
                delta += d * d;
            }
        }
        x = next;
        if delta < 1e-26 {
            break;
        }
    }
    Ok(x)
}

/// Decompose a marker-plane homography into a rigid pose.
///
/// With `B = K^-1 H` and columns `b1 b2 b3`, the rotation columns are
/// `r1 = λ b1`, `r2 = λ b2`, `r3 = r1 × r2` with `λ = 2 / (|b1| + |b2|)`,
/// followed by a polar correction to the nearest rotation. The sign of the
/// decomposition is fixed so the marker sits in front of the camera
/// (`t[2] > 0`); any nonzero scaling of `H` yields the same pose.
pub fn pose_from_homography(h: &Homography, k: &CameraIntrinsics) -> Result<Pose, PoseError> {
    let b = mat3_mul(&k.inverse_matrix(), h.matrix());
    let b1 = [b[0][0], b[1][0], b[2][0]];
    let b2 = [b[0][1], b[1][1], b[2][1]];
    let b3 = [b[0][2], b[1][2], b[2][2]];

    let n1 = math::sqrt(b1[0] * b1[0] + b1[1] * b1[1] + b1[2] * b1[2]);
    let n2 = math::sqrt(b2[0] * b2[0] + b2[1] * b2[1] + b2[2] * b2[2]);
    if n1 < 1e-9 || n2 < 1e-9 {
        return Err(PoseError::Degenerate);
    }
    let lambda = 2.0 / (n1 + n2);

    let mut r1 = [lambda * b1[0], lambda * b1[1], lambda * b1[2]];
    let mut r2 = [lambda * b2[0], lambda * b2[1], lambda * b2[2]];
    let mut t = [lambda * b3[0], lambda * b3[1], lambda * b3[2]];
    if t[2] < 0.0 {
        for i in 0..3 {
            r1[i] = -r1[i];
            r2[i] = -r2[i];
            t[i] = -t[i];
        }
    }
    if t[2] < 1e-12 {
        return Err(PoseError::Degenerate);
    }

    let r3 = [
        r1[1] * r2[2] - r1[2] * r2[1],
        r1[2] * r2[0] - r1[0] * r2[2],
        r1[0] * r2[1] - r1[1] * r2[0],
    ];
    let m = [
        [r1[0], r2[0], r3[0]],
        [r1[1], r2[1], r3[1]],
        [r1[2], r2[2], r3[2]],
    ];
    if math::abs(mat3_det(&m)) < 1e-9 {
        return Err(PoseError::Degenerate);
    }
    let r = polar_rotation(&m)?;
    Ok(Pose { r, t })
}

/// Homography induced by a pose: `H = K [r1 r2 t]` (marker plane `z = 0`).
pub fn homography_from_pose(k: &CameraIntrinsics, pose: &Pose) -> Result<Homography, PoseError> {
    let km = k.matrix();
    let rt = [
        [pose.r[0][0], pose.r[0][1], pose.t[0]],
        [pose.r[1][0], pose.r[1][1], pose.t[1]],
        [pose.r[2][0], pose.r[2][1], pose.t[2]],
    ];
    Ok(Homography::from_matrix(mat3_mul(&km, &rt))?)
}

/// Frobenius norm of `R^T R - I`; zero for a perfect rotation.
pub fn orthonormality_error(r: &Mat3) -> f64 {
    let rtr = mat3_mul(&transpose(r), r);
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = rtr[i][j] - target;
            acc += d * d;
        }
    }
    math::sqrt(acc)
}

impl Pose {
    pub const IDENTITY_ROTATION: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    pub fn new(r: Mat3, t: [f64; 3]) -> Self {
        Pose { r, t }
    }

    /// Apply the rigid transform to a marker-plane point.
    pub fn transform(&self, p: Point3) -> [f64; 3] {
        let v = mat3_vec(&self.r, [p.x, p.y, p.z]);
        [v[0] + self.t[0], v[1] + self.t[1], v[2] + self.t[2]]
    }
}
