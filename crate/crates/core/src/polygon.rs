//! Polygon approximation of traced contours and square-candidate filtering.
//!
//! Quad corners leaving this module are in continuous image coordinates
//! (pixel centers at half-integers): boundary pixels of a dark region sit
//! about half a pixel inside the true intensity edge, so candidate corners
//! are recovered by fitting a line to each quad side and pushing it half a
//! pixel toward the background before intersecting.

use alloc::vec::Vec;
use core::fmt;

use crate::contour::{Contour, ContourSet, PixelPoint};
use crate::geometry::{cross2, Point2};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolygonError {
    /// Everything collapsed onto a line (or fewer than three distinct
    /// vertices survived simplification).
    DegeneratePolygon,
    /// Corner set contains duplicates or three collinear points.
    DegenerateCorners,
}

impl fmt::Display for PolygonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolygonError::DegeneratePolygon => write!(f, "contour degenerates to a line"),
            PolygonError::DegenerateCorners => {
                write!(f, "corners are collinear or duplicated")
            }
        }
    }
}

impl core::error::Error for PolygonError {}

/// Simplified closed polygon; vertices are a subset of the source contour
/// points.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
}

impl Polygon {
    /// Vertex count (the line count of the closed polygon).
    pub fn total(&self) -> usize {
        self.vertices.len()
    }
}

/// Distance from `p` to the segment `a b`.
fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let vx = b.x - a.x;
    let vy = b.y - a.y;
    let len_sq = vx * vx + vy * vy;
    if len_sq <= 0.0 {
        return p.distance(a);
    }
    let t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / len_sq;
    let t = t.clamp(0.0, 1.0);
    p.distance(Point2::new(a.x + t * vx, a.y + t * vy))
}

fn rdp_keep(points: &[Point2], first: usize, last: usize, epsilon: f64, keep: &mut Vec<usize>) {
    if last <= first + 1 {
        return;
    }
    let a = points[first];
    let b = points[last];
    let mut max_dist = -1.0;
    let mut max_idx = first;
    for (i, p) in points.iter().enumerate().take(last).skip(first + 1) {
        let d = point_segment_distance(*p, a, b);
        if d > max_dist {
            max_dist = d;
            max_idx = i;
        }
    }
    if max_dist > epsilon {
        rdp_keep(points, first, max_idx, epsilon, keep);
        keep.push(max_idx);
        rdp_keep(points, max_idx, last, epsilon, keep);
    }
}

/// Ramer–Douglas–Peucker simplification of a closed contour.
///
/// The ring is split at its two mutually farthest anchor points and each
/// open chain is simplified. An anchor that lands mid-edge (hole traces
/// start wherever the scan found them) is dropped again afterwards when
/// its whole arc stays within `epsilon` of the merged segment, so the
/// guarantee holds: every contour point ends up within `epsilon` of the
/// returned polygon. Contours that collapse to fewer than three vertices
/// are reported as degenerate.
pub fn approx_polygon(contour: &Contour, epsilon: f64) -> Result<Polygon, PolygonError> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let raw: Vec<Point2> = contour
        .points
        .iter()
        .map(|p| Point2::new(p.x as f64, p.y as f64))
        .collect();
    let n = raw.len();
    if n < 3 {
        return Err(PolygonError::DegeneratePolygon);
    }

    // Anchor A: farthest point from the centroid, which for convex shapes
    // sits at a true corner. An arbitrary anchor (say, the trace start)
    // can land mid-edge next to a corner and absorb it, since epsilon
    // scales with the perimeter. The ring is rotated so A is index 0.
    let cx = raw.iter().map(|p| p.x).sum::<f64>() / n as f64;
    let cy = raw.iter().map(|p| p.y).sum::<f64>() / n as f64;
    let a_raw = (0..n)
        .max_by(|&i, &j| {
            let di = math::hypot(raw[i].x - cx, raw[i].y - cy);
            let dj = math::hypot(raw[j].x - cx, raw[j].y - cy);
            di.total_cmp(&dj)
        })
        .unwrap();
    let pts: Vec<Point2> = raw[a_raw..].iter().chain(raw[..a_raw].iter()).copied().collect();

    // Anchor B: farthest from A; splitting there keeps both chains well
    // conditioned.
    let a = 0usize;
    let mut b = 0usize;
    let mut best = -1.0;
    for (i, p) in pts.iter().enumerate() {
        let d = p.distance(pts[a]);
        if d > best {
            best = d;
            b = i;
        }
    }
    if b == a {
        return Err(PolygonError::DegeneratePolygon);
    }

    let mut keep: Vec<usize> = Vec::new();
    keep.push(a);
    rdp_keep(&pts, a, b, epsilon, &mut keep);
    keep.push(b);
    // Second chain: b .. end .. a, simplified over a rotated copy.
    let mut wrapped: Vec<Point2> = pts[b..].to_vec();
    wrapped.push(pts[a]);
    let mut keep_wrapped: Vec<usize> = Vec::new();
    rdp_keep(&wrapped, 0, wrapped.len() - 1, epsilon, &mut keep_wrapped);
    for i in keep_wrapped {
        keep.push(b + i);
    }

    // Try to remove the two anchors; only they can be superfluous, since
    // every other kept vertex exceeded epsilon during splitting. Removal
    // is allowed only when all source points of the joined arcs stay
    // within epsilon of the bridging segment.
    for anchor in [b, a] {
        if keep.len() < 4 {
            break;
        }
        let pos = keep.iter().position(|&i| i == anchor).unwrap();
        let prev = keep[(pos + keep.len() - 1) % keep.len()];
        let next = keep[(pos + 1) % keep.len()];
        let seg_a = pts[prev];
        let seg_b = pts[next];
        let mut i = prev;
        let mut ok = true;
        while i != next {
            if point_segment_distance(pts[i], seg_a, seg_b) > epsilon {
                ok = false;
                break;
            }
            i = (i + 1) % n;
        }
        if ok {
            keep.remove(pos);
        }
    }

    let vertices: Vec<Point2> = keep.iter().map(|&i| pts[i]).collect();
    if vertices.len() < 3 {
        return Err(PolygonError::DegeneratePolygon);
    }
    Ok(Polygon { vertices })
}

/// Signed polygon area that is positive for counter-clockwise order in
/// image coordinates (y pointing down).
pub fn signed_area_ydown(pts: &[Point2]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        acc += p.x * q.y - q.x * p.y;
    }
    -0.5 * acc
}

/// Canonicalize four corners: counter-clockwise in image coordinates,
/// starting from the corner with the smallest `(y, x)`.
///
/// The output is a reordering of the input point set; ordering an already
/// canonical quad is the identity.
pub fn order_corners(corners: &[Point2; 4]) -> Result<[Point2; 4], PolygonError> {
    for i in 0..4 {
        for j in (i + 1)..4 {
            if corners[i].distance(corners[j]) < 1e-12 {
                return Err(PolygonError::DegenerateCorners);
            }
        }
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            for k in (j + 1)..4 {
                if math::abs(cross2(corners[i], corners[j], corners[k])) < 1e-9 {
                    return Err(PolygonError::DegenerateCorners);
                }
            }
        }
    }

    let cx = corners.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = corners.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mut idx = [0usize, 1, 2, 3];
    // Descending mathematical angle runs counter-clockwise on a y-down
    // screen; radius breaks exact-angle ties deterministically.
    let key = |i: usize| -> (f64, f64) {
        let dx = corners[i].x - cx;
        let dy = corners[i].y - cy;
        (-math::atan2(dy, dx), math::hypot(dx, dy))
    };
    idx.sort_by(|&a, &b| {
        let (ka, ra) = key(a);
        let (kb, rb) = key(b);
        ka.total_cmp(&kb).then(ra.total_cmp(&rb))
    });

    let start = (0..4)
        .min_by(|&a, &b| {
            let pa = corners[idx[a]];
            let pb = corners[idx[b]];
            pa.y.total_cmp(&pb.y).then(pa.x.total_cmp(&pb.x))
        })
        .unwrap();
    Ok(core::array::from_fn(|k| corners[idx[(start + k) % 4]]))
}

/// Strictly-inside test against a canonical (CCW y-down) convex quad.
pub fn point_in_convex_quad(quad: &[Point2; 4], p: Point2) -> bool {
    for i in 0..4 {
        if cross2(quad[i], quad[(i + 1) % 4], p) >= 0.0 {
            return false;
        }
    }
    true
}

fn is_convex(quad: &[Point2; 4]) -> bool {
    // Canonical order makes all consecutive cross products negative.
    (0..4).all(|i| cross2(quad[i], quad[(i + 1) % 4], quad[(i + 2) % 4]) < 0.0)
}

/// Square marker candidate: outer boundary of the dark square and the
/// boundary of its light interior, both canonically ordered, corners in
/// continuous image coordinates.
#[derive(Debug, Clone)]
pub struct QuadCandidate {
    pub outer: [Point2; 4],
    pub inner: [Point2; 4],
    /// Area enclosed by the outer quad, in squared pixels.
    pub area: f64,
}

/// Fit a line to each quad side from the contour points backing it, push it
/// half a pixel toward the background, and intersect adjacent sides.
///
/// `corners` are pixel-center coordinates in canonical order; `outward`
/// selects the displacement direction relative to the quad centroid
/// (outward for outer boundaries, inward for hole boundaries). Returns
/// `None` when any side has too few supporting points or the intersection
/// drifts implausibly far, in which case the caller keeps the unrefined
/// corners.
fn refine_quad(points: &[PixelPoint], corners: &[Point2; 4], outward: bool) -> Option<[Point2; 4]> {
    let cx = corners.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = corners.iter().map(|p| p.y).sum::<f64>() / 4.0;

    // One fitted (point, direction) pair per side.
    let mut lines = [(Point2::new(0.0, 0.0), (0.0, 0.0)); 4];
    for side in 0..4 {
        let a = corners[side];
        let b = corners[(side + 1) % 4];
        let len = a.distance(b);
        let margin = (0.12 * len).max(2.0);
        if len <= 2.0 * margin {
            return None;
        }
        let dir = ((b.x - a.x) / len, (b.y - a.y) / len);

        let mut n = 0usize;
        let mut mx = 0.0;
        let mut my = 0.0;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        let mut syy = 0.0;
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for p in points {
            let px = p.x as f64 + 0.5;
            let py = p.y as f64 + 0.5;
            let t = (px - a.x) * dir.0 + (py - a.y) * dir.1;
            if t < margin || t > len - margin {
                continue;
            }
            let perp = (px - a.x) * (-dir.1) + (py - a.y) * dir.0;
            if math::abs(perp) > 2.0 {
                continue;
            }
            pts.push((px, py));
            n += 1;
            mx += px;
            my += py;
        }
        if n < 4 {
            return None;
        }
        mx /= n as f64;
        my /= n as f64;
        for (px, py) in &pts {
            let dx = px - mx;
            let dy = py - my;
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        // Principal axis of the scatter = orthogonal regression line.
        let theta = 0.5 * math::atan2(2.0 * sxy, sxx - syy);
        let d = (math::cos(theta), math::sin(theta));
        let mut normal = (-d.1, d.0);
        let to_mean = (mx - cx, my - cy);
        if normal.0 * to_mean.0 + normal.1 * to_mean.1 < 0.0 {
            normal = (-normal.0, -normal.1);
        }
        let shift = if outward { 0.5 } else { -0.5 };
        lines[side] = (
            Point2::new(mx + shift * normal.0, my + shift * normal.1),
            d,
        );
    }

    let mut refined = *corners;
    for k in 0..4 {
        // Corner k joins side k-1 and side k.
        let (p1, d1) = lines[(k + 3) % 4];
        let (p2, d2) = lines[k];
        let denom = d1.0 * d2.1 - d1.1 * d2.0;
        if math::abs(denom) < 1e-9 {
            return None;
        }
        let t = ((p2.x - p1.x) * d2.1 - (p2.y - p1.y) * d2.0) / denom;
        let corner = Point2::new(p1.x + t * d1.0, p1.y + t * d1.1);
        if corner.distance(corners[k]) > 3.0 {
            return None;
        }
        refined[k] = corner;
    }
    Some(refined)
}

/// Refine a four-corner ring against the grayscale frame.
///
/// The binary boundary pins each edge to the pixel grid: both its offset
/// (up to half a pixel of phase) and its direction (staircase wobble) are
/// quantized, and direction error alone displaces corners by about
/// `len/2 * angle`. For every side, intensity profiles are sampled along
/// the normal, the mid-level crossing of each profile becomes a sub-pixel
/// edge point, and an orthogonal-regression line through those points
/// replaces the side before corners are re-intersected. `light_inside`
/// selects the intensity direction: false for the outer ring (dark square
/// on a light field), true for hole rings. Returns `None` when a side
/// lacks contrast or the correction is implausibly large.
fn refine_ring_grayscale(
    img: &crate::image::GrayImage,
    corners: &[Point2; 4],
    light_inside: bool,
) -> Option<[Point2; 4]> {
    let cx = corners.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = corners.iter().map(|p| p.y).sum::<f64>() / 4.0;

    let mut lines = [(Point2::new(0.0, 0.0), (0.0, 0.0)); 4];
    for side in 0..4 {
        let a = corners[side];
        let b = corners[(side + 1) % 4];
        let len = a.distance(b);
        let margin = (0.15 * len).max(2.5);
        if len <= 2.0 * margin + 2.0 {
            return None;
        }
        let dir = ((b.x - a.x) / len, (b.y - a.y) / len);
        // Normal pointing from the dark side toward the light side.
        let mut normal = (-dir.1, dir.0);
        let mid = Point2::new((a.x + b.x) * 0.5, (a.y + b.y) * 0.5);
        let outwardness = normal.0 * (mid.x - cx) + normal.1 * (mid.y - cy);
        if (outwardness < 0.0) != light_inside {
            normal = (-normal.0, -normal.1);
        }

        let steps = ((len - 2.0 * margin) / 2.0) as usize + 1;
        let mut edge_points: Vec<(f64, f64)> = Vec::with_capacity(steps);
        for s in 0..steps {
            let t = margin + (len - 2.0 * margin) * s as f64 / steps.max(1) as f64;
            let base = Point2::new(a.x + t * dir.0, a.y + t * dir.1);
            // Profile from the dark side to the light side.
            let mut profile = [0.0f64; 9];
            for (i, p) in profile.iter_mut().enumerate() {
                let u = -2.0 + i as f64 * 0.5;
                *p = crate::geometry::sample_bilinear(
                    img,
                    base.x + u * normal.0,
                    base.y + u * normal.1,
                );
            }
            let dark = profile[0].min(profile[1]);
            let light = profile[7].max(profile[8]);
            if light - dark < 20.0 {
                continue;
            }
            let level = 0.5 * (dark + light);
            for i in 0..8 {
                if profile[i] <= level && profile[i + 1] > level {
                    let frac = (level - profile[i]) / (profile[i + 1] - profile[i]);
                    let u = -2.0 + (i as f64 + frac) * 0.5;
                    edge_points.push((base.x + u * normal.0, base.y + u * normal.1));
                    break;
                }
            }
        }
        if edge_points.len() < 4 {
            return None;
        }

        // Orthogonal regression through the crossing points.
        let n = edge_points.len() as f64;
        let mx = edge_points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = edge_points.iter().map(|p| p.1).sum::<f64>() / n;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        let mut syy = 0.0;
        for (px, py) in &edge_points {
            let dx = px - mx;
            let dy = py - my;
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        let theta = 0.5 * math::atan2(2.0 * sxy, sxx - syy);
        let mut fit_dir = (math::cos(theta), math::sin(theta));
        // Keep the original traversal sense for stable intersections.
        if fit_dir.0 * dir.0 + fit_dir.1 * dir.1 < 0.0 {
            fit_dir = (-fit_dir.0, -fit_dir.1);
        }
        if mid.distance(Point2::new(mx, my)) > 0.25 * len {
            return None;
        }
        lines[side] = (Point2::new(mx, my), fit_dir);
    }

    let mut refined = *corners;
    for k in 0..4 {
        let (p1, d1) = lines[(k + 3) % 4];
        let (p2, d2) = lines[k];
        let denom = d1.0 * d2.1 - d1.1 * d2.0;
        if math::abs(denom) < 1e-9 {
            return None;
        }
        let t = ((p2.x - p1.x) * d2.1 - (p2.y - p1.y) * d2.0) / denom;
        let corner = Point2::new(p1.x + t * d1.0, p1.y + t * d1.1);
        if corner.distance(corners[k]) > 2.0 {
            return None;
        }
        refined[k] = corner;
    }
    order_corners(&refined).ok().filter(is_convex)
}

/// Refine both rings of a candidate against the grayscale frame; each ring
/// keeps its binary-fit corners when grayscale refinement is not viable.
pub fn refine_quad_grayscale(img: &crate::image::GrayImage, quad: &QuadCandidate) -> QuadCandidate {
    let outer = refine_ring_grayscale(img, &quad.outer, false).unwrap_or(quad.outer);
    let inner = refine_ring_grayscale(img, &quad.inner, true).unwrap_or(quad.inner);
    QuadCandidate {
        outer,
        inner,
        area: signed_area_ydown(&outer),
    }
}

fn shoelace_abs(points: &[PixelPoint]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0f64;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        acc += p.x as f64 * q.y as f64 - q.x as f64 * p.y as f64;
    }
    math::abs(0.5 * acc)
}

fn quad_from_contour(contour: &Contour, epsilon_frac: f64) -> Option<[Point2; 4]> {
    let perimeter = contour.perimeter();
    if perimeter <= 0.0 {
        return None;
    }
    let poly = approx_polygon(contour, epsilon_frac * perimeter).ok()?;
    if poly.total() != 4 {
        return None;
    }
    let raw: [Point2; 4] = [
        poly.vertices[0],
        poly.vertices[1],
        poly.vertices[2],
        poly.vertices[3],
    ];
    // Shift vertices from pixel indices to pixel centers.
    let centered: [Point2; 4] = core::array::from_fn(|i| Point2::new(raw[i].x + 0.5, raw[i].y + 0.5));
    let ordered = order_corners(&centered).ok()?;
    if !is_convex(&ordered) {
        return None;
    }
    Some(ordered)
}

/// Filter the contour hierarchy down to square-in-square marker candidates.
///
/// A candidate is an outer contour and one of its hole contours where both
/// simplify to convex quads (epsilon scaled by each contour's perimeter),
/// the outer area is at least `min_area`, the outer quad actually covers
/// the traced region (rejects round blobs whose simplification happens to
/// have four vertices), and the hole corners lie strictly inside the outer
/// quad. Corners are refined by edge-line fitting and canonically ordered.
pub fn find_quad_candidates(
    set: &ContourSet,
    min_area: f64,
    epsilon_frac: f64,
) -> Vec<QuadCandidate> {
    assert!(
        epsilon_frac > 0.0 && epsilon_frac < 0.5,
        "epsilon_frac must be in (0, 0.5)"
    );
    assert!(min_area > 0.0, "min_area must be positive");

    let mut out = Vec::new();
    for (&outer_idx, kids) in &set.children {
        let oc = &set.contours[outer_idx];

        // Cheap size gate before any fitting.
        let (mut min_x, mut min_y, mut max_x, mut max_y) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
        for p in &oc.points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        let bbox_area = ((max_x - min_x + 1) as f64) * ((max_y - min_y + 1) as f64);
        if bbox_area < min_area {
            continue;
        }

        let Some(outer_raw) = quad_from_contour(oc, epsilon_frac) else {
            continue;
        };
        let outer = match refine_quad(&oc.points, &outer_raw, true) {
            Some(r) => order_corners(&r).ok().filter(|q| is_convex(q)).unwrap_or(outer_raw),
            None => outer_raw,
        };
        let area = signed_area_ydown(&outer);
        if area < min_area {
            continue;
        }
        // A square's boundary walk enclosure matches its quad; a circle's
        // inscribed quad covers only ~64% of the walk enclosure.
        let walk_area = shoelace_abs(&oc.points);
        if walk_area > 0.0 && area < 0.85 * walk_area {
            continue;
        }

        for &kid in kids {
            let ic = &set.contours[kid];
            let Some(inner_raw) = quad_from_contour(ic, epsilon_frac) else {
                continue;
            };
            let inner = match refine_quad(&ic.points, &inner_raw, false) {
                Some(r) => order_corners(&r).ok().filter(|q| is_convex(q)).unwrap_or(inner_raw),
                None => inner_raw,
            };
            if !inner.iter().all(|&p| point_in_convex_quad(&outer, p)) {
                continue;
            }
            // A marker hole sits concentric inside the border. The lower
            // bound drops pinprick holes from rasterization. The upper
            // bound drops thin halo rings from adaptive thresholding while
            // still admitting hollowed borders: a mean-window narrower
            // than the border band relights its middle, moving the traced
            // hole out to a window-governed inset.
            let inner_area = signed_area_ydown(&inner);
            if inner_area < 0.08 * area || inner_area > 0.82 * area {
                continue;
            }
            let centroid = |q: &[Point2; 4]| {
                Point2::new(
                    q.iter().map(|p| p.x).sum::<f64>() / 4.0,
                    q.iter().map(|p| p.y).sum::<f64>() / 4.0,
                )
            };
            if centroid(&outer).distance(centroid(&inner)) > 0.2 * math::sqrt(area) {
                continue;
            }
            out.push(QuadCandidate { outer, inner, area });
        }
    }
    out
}
