//! Planar projective geometry: points, 3x3 homographies, four-point
//! estimation and inverse perspective warping.
//!
//! A homography here always maps *source plane -> image plane*; detection
//! code estimates it from the marker model square to observed corners and
//! warps through it in the inverse direction to undo perspective.

use alloc::vec::Vec;
use core::fmt;

use crate::image::GrayImage;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryError {
    /// Three of the four correspondence points are (near-)collinear, or two
    /// coincide.
    DegenerateConfiguration,
    /// The linear system or matrix inversion lost all pivots.
    Singular,
    /// The mapped point lies on the line at infinity.
    AtInfinity,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::DegenerateConfiguration => {
                write!(f, "degenerate point configuration (collinear or duplicate points)")
            }
            GeometryError::Singular => write!(f, "singular matrix"),
            GeometryError::AtInfinity => write!(f, "point maps to the line at infinity"),
        }
    }
}

impl core::error::Error for GeometryError {}

// ── 3x3 matrix helpers ──

/// Row-major 3x3 matrix, the raw storage behind homographies,
/// rotations and intrinsics.
pub type Mat3 = [[f64; 3]; 3];

/// Matrix product `a * b`.
pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub(crate) fn mat3_det(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub(crate) fn mat3_inv(m: &Mat3) -> Result<Mat3, GeometryError> {
    let det = mat3_det(m);
    if math::abs(det) < 1e-12 {
        return Err(GeometryError::Singular);
    }
    let inv_det = 1.0 / det;
    let mut adj = [[0.0; 3]; 3];
    adj[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    adj[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
    adj[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
    adj[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    adj[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    adj[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
    adj[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    adj[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
    adj[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    for row in adj.iter_mut() {
        for v in row.iter_mut() {
            *v *= inv_det;
        }
    }
    Ok(adj)
}

/// Non-singular 3x3 projective map between two planes.
///
/// Stored normalized: scaled so `m[2][2] == 1` when that entry is nonzero,
/// otherwise to unit Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Mat3,
}

impl Homography {
    /// Normalize and validate an arbitrary matrix.
    pub fn from_matrix(m: Mat3) -> Result<Self, GeometryError> {
        let mut m = m;
        if math::abs(m[2][2]) > 1e-12 {
            let s = 1.0 / m[2][2];
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v *= s;
                }
            }
        } else {
            let mut norm_sq = 0.0;
            for row in &m {
                for v in row {
                    norm_sq += v * v;
                }
            }
            if norm_sq < 1e-24 {
                return Err(GeometryError::Singular);
            }
            let s = 1.0 / math::sqrt(norm_sq);
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v *= s;
                }
            }
        }
        if math::abs(mat3_det(&m)) < 1e-12 {
            return Err(GeometryError::Singular);
        }
        Ok(Homography { m })
    }

    pub fn identity() -> Self {
        Homography {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    #[inline]
    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    pub fn inverse(&self) -> Result<Homography, GeometryError> {
        Homography::from_matrix(mat3_inv(&self.m)?)
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Homography) -> Result<Homography, GeometryError> {
        Homography::from_matrix(mat3_mul(&self.m, &other.m))
    }
}

/// Apply the projective map with perspective division.
pub fn apply_homography(h: &Homography, p: Point2) -> Result<Point2, GeometryError> {
    let m = &h.m;
    let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
    if math::abs(w) < 1e-12 {
        return Err(GeometryError::AtInfinity);
    }
    Ok(Point2::new(
        (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
        (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
    ))
}

/// Twice the signed area of triangle `a b c`.
pub(crate) fn cross2(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Hartley conditioning transform: centroid to origin, mean distance sqrt(2).
/// Returns the transform and the transformed points.
fn normalize_points(pts: &[Point2; 4]) -> Result<(Mat3, [Point2; 4]), GeometryError> {
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mean_dist = pts
        .iter()
        .map(|p| math::hypot(p.x - cx, p.y - cy))
        .sum::<f64>()
        / 4.0;
    if mean_dist < 1e-12 {
        return Err(GeometryError::DegenerateConfiguration);
    }
    let s = core::f64::consts::SQRT_2 / mean_dist;
    let t = [[s, 0.0, -s * cx], [0.0, s, -s * cy], [0.0, 0.0, 1.0]];
    let mut out = *pts;
    for p in out.iter_mut() {
        *p = Point2::new(s * (p.x - cx), s * (p.y - cy));
    }
    Ok((t, out))
}

fn any_three_collinear(pts: &[Point2; 4], tol: f64) -> bool {
    for i in 0..4 {
        for j in (i + 1)..4 {
            for k in (j + 1)..4 {
                if math::abs(cross2(pts[i], pts[j], pts[k])) < tol {
                    return true;
                }
            }
        }
    }
    false
}

/// Gaussian elimination with partial pivoting on an `n x n` system.
/// `a` is row-major, `b` the right-hand side; both are consumed.
pub(crate) fn solve_linear(
    a: &mut [f64],
    b: &mut [f64],
    n: usize,
) -> Result<Vec<f64>, GeometryError> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = math::abs(a[col * n + col]);
        for row in (col + 1)..n {
            let v = math::abs(a[row * n + col]);
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = row;
            }
        }
        if pivot_abs < 1e-12 {
            return Err(GeometryError::Singular);
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in (col + 1)..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = alloc::vec![0.0; n];
    for col in (0..n).rev() {
        let mut v = b[col];
        for k in (col + 1)..n {
            v -= a[col * n + k] * x[k];
        }
        x[col] = v / a[col * n + col];
    }
    Ok(x)
}

/// Estimate the homography taking the four `src` points to the four `dst`
/// points.
///
/// Both quads are Hartley-normalized, the exactly determined 8x8 system is
/// solved with partial-pivot Gaussian elimination, and the result is
/// de-normalized. Each correspondence is reproduced to machine precision for
/// well-conditioned quads.
pub fn estimate_homography(
    src: &[Point2; 4],
    dst: &[Point2; 4],
) -> Result<Homography, GeometryError> {
    let (t_src, src_n) = normalize_points(src)?;
    let (t_dst, dst_n) = normalize_points(dst)?;
    // Normalized quads have O(1) extent, so an absolute tolerance works.
    if any_three_collinear(&src_n, 1e-10) || any_three_collinear(&dst_n, 1e-10) {
        return Err(GeometryError::DegenerateConfiguration);
    }

    // Unknowns h11..h32 with h33 fixed at 1 in the normalized frame.
    let mut a = [0.0f64; 64];
    let mut b = [0.0f64; 8];
    for i in 0..4 {
        let s = src_n[i];
        let d = dst_n[i];
        let r0 = 2 * i;
        let r1 = 2 * i + 1;
        a[r0 * 8] = s.x;
        a[r0 * 8 + 1] = s.y;
        a[r0 * 8 + 2] = 1.0;
        a[r0 * 8 + 6] = -d.x * s.x;
        a[r0 * 8 + 7] = -d.x * s.y;
        b[r0] = d.x;
        a[r1 * 8 + 3] = s.x;
        a[r1 * 8 + 4] = s.y;
        a[r1 * 8 + 5] = 1.0;
        a[r1 * 8 + 6] = -d.y * s.x;
        a[r1 * 8 + 7] = -d.y * s.y;
        b[r1] = d.y;
    }
    let h = solve_linear(&mut a, &mut b, 8)?;
    let h_n = [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]];

    let t_dst_inv = mat3_inv(&t_dst)?;
    let m = mat3_mul(&mat3_mul(&t_dst_inv, &h_n), &t_src);
    Homography::from_matrix(m)
}

/// Least-squares homography over `n >= 4` correspondences via the normal
/// equations of the inhomogeneous DLT system, with Hartley conditioning.
/// Used for grid fitting, where the system is overdetermined.
pub(crate) fn fit_homography_lsq(src: &[Point2], dst: &[Point2]) -> Option<Homography> {
    let n = src.len();
    if n < 4 || dst.len() != n {
        return None;
    }
    let cond = |pts: &[Point2]| -> Option<(Mat3, Vec<Point2>)> {
        let cx = pts.iter().map(|p| p.x).sum::<f64>() / n as f64;
        let cy = pts.iter().map(|p| p.y).sum::<f64>() / n as f64;
        let mean = pts
            .iter()
            .map(|p| math::hypot(p.x - cx, p.y - cy))
            .sum::<f64>()
            / n as f64;
        if mean < 1e-12 {
            return None;
        }
        let s = core::f64::consts::SQRT_2 / mean;
        let t = [[s, 0.0, -s * cx], [0.0, s, -s * cy], [0.0, 0.0, 1.0]];
        Some((
            t,
            pts.iter()
                .map(|p| Point2::new(s * (p.x - cx), s * (p.y - cy)))
                .collect(),
        ))
    };
    let (t_src, src_n) = cond(src)?;
    let (t_dst, dst_n) = cond(dst)?;

    // Accumulate A^T A and A^T b directly; rows come in pairs per point.
    let mut ata = [0.0f64; 64];
    let mut atb = [0.0f64; 8];
    let mut add_row = |row: [f64; 8], rhs: f64| {
        for i in 0..8 {
            if row[i] == 0.0 {
                continue;
            }
            for j in 0..8 {
                ata[i * 8 + j] += row[i] * row[j];
            }
            atb[i] += row[i] * rhs;
        }
    };
    for (s, d) in src_n.iter().zip(dst_n.iter()) {
        add_row([s.x, s.y, 1.0, 0.0, 0.0, 0.0, -d.x * s.x, -d.x * s.y], d.x);
        add_row([0.0, 0.0, 0.0, s.x, s.y, 1.0, -d.y * s.x, -d.y * s.y], d.y);
    }
    let h = solve_linear(&mut ata, &mut atb, 8).ok()?;
    let h_n = [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]];
    let t_dst_inv = mat3_inv(&t_dst).ok()?;
    Homography::from_matrix(mat3_mul(&mat3_mul(&t_dst_inv, &h_n), &t_src)).ok()
}

/// Resample `img` through `h` into an `out_w x out_h` image.
///
/// `h` maps rectified space to image space; output pixel `(x, y)` takes the
/// bilinear sample of `img` at `h(x + 0.5, y + 0.5)` using half-pixel
/// centers. Samples outside the image read as 0.
pub fn warp_inverse(
    img: &GrayImage,
    h: &Homography,
    out_w: u32,
    out_h: u32,
) -> Result<GrayImage, GeometryError> {
    assert!(out_w >= 1 && out_h >= 1, "output dimensions must be >= 1");
    let mut out = GrayImage::new(out_w, out_h);
    for y in 0..out_h {
        for x in 0..out_w {
            let rect = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
            let v = match apply_homography(h, rect) {
                Ok(p) => sample_bilinear(img, p.x, p.y),
                // A pixel on the line at infinity lies outside any image.
                Err(GeometryError::AtInfinity) => 0.0,
                Err(e) => return Err(e),
            };
            out.set(x, y, (v + 0.5) as u8);
        }
    }
    Ok(out)
}

/// Bilinear read at continuous position `(sx, sy)` (pixel centers at
/// half-integers); out-of-bounds texels contribute 0.
pub fn sample_bilinear(img: &GrayImage, sx: f64, sy: f64) -> f64 {
    let u = sx - 0.5;
    let v = sy - 0.5;
    let x0 = math::floor(u);
    let y0 = math::floor(v);
    let fx = u - x0;
    let fy = v - y0;
    let x0 = x0 as i64;
    let y0 = y0 as i64;

    let fetch = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= img.width() as i64 || y >= img.height() as i64 {
            0.0
        } else {
            img.get(x as u32, y as u32) as f64
        }
    };

    let top = fetch(x0, y0) * (1.0 - fx) + fetch(x0 + 1, y0) * fx;
    let bottom = fetch(x0, y0 + 1) * (1.0 - fx) + fetch(x0 + 1, y0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}
