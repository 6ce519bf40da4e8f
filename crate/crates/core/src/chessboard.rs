//! Chessboard inner-corner detection: Harris saddle candidates, greedy
//! projective grid growth, and gradient-orthogonality sub-pixel refinement.
//!
//! The named OpenCV routine specifies a contract (all inner corners, row
//! major, sub-pixel) rather than an algorithm; here candidates are grown
//! into an integer lattice with a homography refitted as the lattice
//! expands, then the strongest fully-populated `width x height` window is
//! taken. Spurious candidates along the board's outside edge land one
//! lattice ring outside the true grid and lose the window selection.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{apply_homography, fit_homography_lsq, Homography, Point2};
use crate::image::GrayImage;
use crate::math;

/// Inner-corner counts of the target board; both at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoardSpec {
    pub width: u32,
    pub height: u32,
}

impl BoardSpec {
    pub fn new(width: u32, height: u32) -> Result<Self, ChessboardError> {
        if width < 2 || height < 2 {
            return Err(ChessboardError::InvalidBoard);
        }
        Ok(BoardSpec { width, height })
    }

    pub fn corner_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Row-major sub-pixel corners with their detection strength.
#[derive(Debug, Clone)]
pub struct CornerGrid {
    pub corners: Vec<Point2>,
    pub response: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChessboardError {
    InvalidBoard,
    /// Smoothing sigma outside `[0.5, 3]`.
    BadSigma,
    /// Response needs at least a 7x7 image.
    ImageTooSmall,
    /// Refinement window (plus gradient margin) leaves the image.
    WindowOutside,
    /// Flat or edge-only window cannot localize a corner.
    NoStructure,
    /// Too few mutually consistent corners for the requested board.
    NotFound,
}

impl fmt::Display for ChessboardError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            ChessboardError::InvalidBoard => "board spec needs at least 2x2 inner corners",
            ChessboardError::BadSigma => "sigma must lie in [0.5, 3]",
            ChessboardError::ImageTooSmall => "image too small for corner response",
            ChessboardError::WindowOutside => "refinement window leaves the image",
            ChessboardError::NoStructure => "window has no corner structure",
            ChessboardError::NotFound => "chessboard not found",
        };
        write!(f, "{}", msg)
    }
}

impl core::error::Error for ChessboardError {}

/// Real-valued response grid with the image's shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    width: u32,
    height: u32,
    data: Vec<f64>,
}

impl ResponseMap {
    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = math::ceil(3.0 * sigma) as i32;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| math::exp(-(i as f64 * i as f64) / (2.0 * sigma * sigma)))
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

pub(crate) fn blur_separable(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = kernel.len() / 2;
    let mut tmp = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let sx = x as i64 + k as i64 - r as i64;
                if sx >= 0 && (sx as usize) < w {
                    acc += kv * src[y * w + sx as usize];
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let sy = y as i64 + k as i64 - r as i64;
                if sy >= 0 && (sy as usize) < h {
                    acc += kv * tmp[sy as usize * w + x];
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Harris corner response `det(M) - 0.04 trace(M)^2` over the Gaussian
/// structure tensor of central-difference gradients. A border band of
/// width `ceil(3 sigma)` is zeroed.
pub fn corner_response(img: &GrayImage, sigma: f64) -> Result<ResponseMap, ChessboardError> {
    if !(0.5..=3.0).contains(&sigma) {
        return Err(ChessboardError::BadSigma);
    }
    let w = img.width() as usize;
    let h = img.height() as usize;
    if w < 7 || h < 7 {
        return Err(ChessboardError::ImageTooSmall);
    }

    let mut ixx = vec![0.0f64; w * h];
    let mut ixy = vec![0.0f64; w * h];
    let mut iyy = vec![0.0f64; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (img.get((x + 1) as u32, y as u32) as f64
                - img.get((x - 1) as u32, y as u32) as f64)
                * 0.5;
            let gy = (img.get(x as u32, (y + 1) as u32) as f64
                - img.get(x as u32, (y - 1) as u32) as f64)
                * 0.5;
            ixx[y * w + x] = gx * gx;
            ixy[y * w + x] = gx * gy;
            iyy[y * w + x] = gy * gy;
        }
    }
    let kernel = gaussian_kernel(sigma);
    let sxx = blur_separable(&ixx, w, h, &kernel);
    let sxy = blur_separable(&ixy, w, h, &kernel);
    let syy = blur_separable(&iyy, w, h, &kernel);

    let band = math::ceil(3.0 * sigma) as usize;
    let mut data = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            if x < band || y < band || x >= w - band || y >= h - band {
                continue;
            }
            let i = y * w + x;
            let det = sxx[i] * syy[i] - sxy[i] * sxy[i];
            let trace = sxx[i] + syy[i];
            data[i] = det - 0.04 * trace * trace;
        }
    }
    Ok(ResponseMap {
        width: w as u32,
        height: h as u32,
        data,
    })
}

/// Iterate the gradient orthogonality condition: for every window pixel q,
/// `gradient(q) . (q - corner) = 0` in (Gaussian-weighted) least squares.
///
/// Stops when the update drops below 0.01 px or after 20 iterations; the
/// total displacement from the starting point is clamped to `half_window`.
pub fn refine_subpixel(
    img: &GrayImage,
    p: Point2,
    half_window: u32,
) -> Result<Point2, ChessboardError> {
    let w = img.width() as i64;
    let h = img.height() as i64;
    let hw = half_window as i64;
    let sigma_sq = {
        let s = (half_window as f64 / 2.0).max(1.0);
        2.0 * s * s
    };

    let mut c = p;
    let start = p;
    for _ in 0..20 {
        // Pixel containing the current estimate; its center is the nearest
        // sample to c.
        let icx = math::floor(c.x) as i64;
        let icy = math::floor(c.y) as i64;
        if icx - hw < 1 || icy - hw < 1 || icx + hw > w - 2 || icy + hw > h - 2 {
            return Err(ChessboardError::WindowOutside);
        }
        let mut a00 = 0.0;
        let mut a01 = 0.0;
        let mut a11 = 0.0;
        let mut b0 = 0.0;
        let mut b1 = 0.0;
        for iy in (icy - hw)..=(icy + hw) {
            for ix in (icx - hw)..=(icx + hw) {
                let gx = (img.get((ix + 1) as u32, iy as u32) as f64
                    - img.get((ix - 1) as u32, iy as u32) as f64)
                    * 0.5;
                let gy = (img.get(ix as u32, (iy + 1) as u32) as f64
                    - img.get(ix as u32, (iy - 1) as u32) as f64)
                    * 0.5;
                let qx = ix as f64 + 0.5;
                let qy = iy as f64 + 0.5;
                let dxc = qx - c.x;
                let dyc = qy - c.y;
                let weight = math::exp(-(dxc * dxc + dyc * dyc) / sigma_sq);
                let gxx = weight * gx * gx;
                let gxy = weight * gx * gy;
                let gyy = weight * gy * gy;
                a00 += gxx;
                a01 += gxy;
                a11 += gyy;
                b0 += gxx * qx + gxy * qy;
                b1 += gxy * qx + gyy * qy;
            }
        }
        let trace = a00 + a11;
        let det = a00 * a11 - a01 * a01;
        if trace < 1e-9 || det < 1e-9 * trace * trace {
            return Err(ChessboardError::NoStructure);
        }
        let nx = (a11 * b0 - a01 * b1) / det;
        let ny = (a00 * b1 - a01 * b0) / det;
        let mut next = Point2::new(nx, ny);

        // Never wander more than the window radius from the start.
        let off = next.distance(start);
        if off > half_window as f64 {
            let scale = half_window as f64 / off;
            next = Point2::new(
                start.x + (next.x - start.x) * scale,
                start.y + (next.y - start.y) * scale,
            );
        }
        let shift = next.distance(c);
        c = next;
        if shift < 0.01 {
            break;
        }
    }
    Ok(c)
}

struct Candidate {
    pos: Point2,
    strength: f64,
}

/// Positive local response maxima, strongest first.
fn collect_candidates(map: &ResponseMap, limit: usize) -> Vec<Candidate> {
    let w = map.width();
    let h = map.height();
    let max = map.max_value();
    if !(max > 0.0) {
        return Vec::new();
    }
    let floor = 1e-3 * max;
    let mut out: Vec<Candidate> = Vec::new();
    for y in 2..h.saturating_sub(2) {
        for x in 2..w.saturating_sub(2) {
            let v = map.get(x, y);
            if v < floor {
                continue;
            }
            let mut is_max = true;
            'nms: for dy in -2i64..=2 {
                for dx in -2i64..=2 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nv = map.get((x as i64 + dx) as u32, (y as i64 + dy) as u32);
                    // Plateau ties go to the raster-earlier pixel.
                    if nv > v || (nv == v && (dy < 0 || (dy == 0 && dx < 0))) {
                        is_max = false;
                        break 'nms;
                    }
                }
            }
            if is_max {
                out.push(Candidate {
                    pos: Point2::new(x as f64 + 0.5, y as f64 + 0.5),
                    strength: v,
                });
            }
        }
    }
    out.sort_by(|a, b| b.strength.total_cmp(&a.strength));
    out.truncate(limit);
    out
}

fn fit_grid_homography(cells: &BTreeMap<(i32, i32), usize>, cands: &[Candidate]) -> Option<Homography> {
    let mut src = Vec::with_capacity(cells.len());
    let mut dst = Vec::with_capacity(cells.len());
    for (&(i, j), &c) in cells {
        src.push(Point2::new(i as f64, j as f64));
        dst.push(cands[c].pos);
    }
    fit_homography_lsq(&src, &dst)
}

/// Locate all inner corners of one chessboard of the given spec.
///
/// Harris candidates are grown greedily into an integer lattice starting
/// from the strongest one, re-fitting a lattice-to-image homography each
/// pass; the strongest fully-populated `width x height` window of the
/// lattice becomes the board, orientation is normalized so rows run along
/// +x and columns along +y, and every corner is sub-pixel refined.
pub fn find_chessboard_corners(
    img: &GrayImage,
    spec: &BoardSpec,
) -> Result<CornerGrid, ChessboardError> {
    if spec.width < 2 || spec.height < 2 {
        return Err(ChessboardError::InvalidBoard);
    }
    let needed = spec.corner_count();
    let map = corner_response(img, 1.0)?;
    let cands = collect_candidates(&map, 6 * needed + 64);
    if cands.len() < needed {
        return Err(ChessboardError::NotFound);
    }

    // Seed axes from the strongest candidate's nearest neighbors.
    let seed = 0usize;
    let mut by_dist: Vec<usize> = (1..cands.len()).collect();
    by_dist.sort_by(|&a, &b| {
        cands[a]
            .pos
            .distance(cands[seed].pos)
            .total_cmp(&cands[b].pos.distance(cands[seed].pos))
    });
    let u_idx = *by_dist.first().ok_or(ChessboardError::NotFound)?;
    let du = (
        cands[u_idx].pos.x - cands[seed].pos.x,
        cands[u_idx].pos.y - cands[seed].pos.y,
    );
    let pitch = math::hypot(du.0, du.1);
    if pitch < 3.0 {
        return Err(ChessboardError::NotFound);
    }
    let mut v_idx = None;
    for &i in by_dist.iter().skip(1) {
        let dv = (
            cands[i].pos.x - cands[seed].pos.x,
            cands[i].pos.y - cands[seed].pos.y,
        );
        let len = math::hypot(dv.0, dv.1);
        if len > 1.6 * pitch {
            break;
        }
        let cross = du.0 * dv.1 - du.1 * dv.0;
        if math::abs(cross) / (pitch * len) > 0.5 {
            v_idx = Some(i);
            break;
        }
    }
    let v_idx = v_idx.ok_or(ChessboardError::NotFound)?;

    let mut taken = vec![false; cands.len()];
    let mut cells: BTreeMap<(i32, i32), usize> = BTreeMap::new();
    cells.insert((0, 0), seed);
    cells.insert((1, 0), u_idx);
    cells.insert((0, 1), v_idx);
    taken[seed] = true;
    taken[u_idx] = true;
    taken[v_idx] = true;

    // The homography fit needs a fourth cell: complete the parallelogram.
    let dv = (
        cands[v_idx].pos.x - cands[seed].pos.x,
        cands[v_idx].pos.y - cands[seed].pos.y,
    );
    let diag = Point2::new(
        cands[seed].pos.x + du.0 + dv.0,
        cands[seed].pos.y + du.1 + dv.1,
    );
    let mut best_diag: Option<(usize, f64)> = None;
    for (ci, cand) in cands.iter().enumerate() {
        if taken[ci] {
            continue;
        }
        let d = cand.pos.distance(diag);
        if d < 0.35 * pitch && best_diag.map_or(true, |(_, bd)| d < bd) {
            best_diag = Some((ci, d));
        }
    }
    let Some((diag_idx, _)) = best_diag else {
        return Err(ChessboardError::NotFound);
    };
    cells.insert((1, 1), diag_idx);
    taken[diag_idx] = true;

    // Greedy ring growth with a homography refit per pass.
    for _pass in 0..64 {
        let h = match fit_grid_homography(&cells, &cands) {
            Some(h) => h,
            None => break,
        };
        let mut frontier: Vec<(i32, i32)> = Vec::new();
        for &(i, j) in cells.keys() {
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let cell = (i + di, j + dj);
                if !cells.contains_key(&cell) && !frontier.contains(&cell) {
                    frontier.push(cell);
                }
            }
        }
        let mut grew = false;
        for cell in frontier {
            let Ok(pred) = apply_homography(&h, Point2::new(cell.0 as f64, cell.1 as f64)) else {
                continue;
            };
            // Local pitch at this cell sets the acceptance radius.
            let Ok(next) =
                apply_homography(&h, Point2::new(cell.0 as f64 + 1.0, cell.1 as f64))
            else {
                continue;
            };
            let radius = (0.35 * pred.distance(next)).max(2.0);
            let mut best: Option<(usize, f64)> = None;
            for (ci, cand) in cands.iter().enumerate() {
                if taken[ci] {
                    continue;
                }
                let d = cand.pos.distance(pred);
                if d < radius && best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((ci, d));
                }
            }
            if let Some((ci, _)) = best {
                taken[ci] = true;
                cells.insert(cell, ci);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }

    // Pick the strongest fully-populated window, trying both orientations.
    let (mut min_i, mut max_i, mut min_j, mut max_j) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
    for &(i, j) in cells.keys() {
        min_i = min_i.min(i);
        max_i = max_i.max(i);
        min_j = min_j.min(j);
        max_j = max_j.max(j);
    }
    let mut best_window: Option<(f64, i32, i32, bool)> = None;
    for &transposed in &[false, true] {
        let (bw, bh) = if transposed {
            (spec.height as i32, spec.width as i32)
        } else {
            (spec.width as i32, spec.height as i32)
        };
        if spec.width == spec.height && transposed {
            continue;
        }
        for j0 in min_j..=(max_j - bh + 1).max(min_j) {
            for i0 in min_i..=(max_i - bw + 1).max(min_i) {
                let mut total = 0.0;
                let mut full = true;
                'win: for j in j0..j0 + bh {
                    for i in i0..i0 + bw {
                        match cells.get(&(i, j)) {
                            Some(&c) => total += cands[c].strength,
                            None => {
                                full = false;
                                break 'win;
                            }
                        }
                    }
                }
                if full && best_window.map_or(true, |(t, ..)| total > t) {
                    best_window = Some((total, i0, j0, transposed));
                }
            }
        }
    }
    let Some((_, i0, j0, transposed)) = best_window else {
        return Err(ChessboardError::NotFound);
    };

    // Lattice coordinates of the board, possibly transposed so that
    // `width` runs along the lattice u axis.
    let (bw, bh) = if transposed {
        (spec.height as i32, spec.width as i32)
    } else {
        (spec.width as i32, spec.height as i32)
    };
    let at = |r: i32, c: i32| -> usize {
        // Row r, column c of the *output* grid in lattice coordinates.
        let (i, j) = if transposed {
            (i0 + r, j0 + c)
        } else {
            (i0 + c, j0 + r)
        };
        cells[&(i, j)]
    };
    let rows = if transposed { bw } else { bh };
    let cols = if transposed { bh } else { bw };
    debug_assert_eq!(cols, spec.width as i32);
    debug_assert_eq!(rows, spec.height as i32);

    // Normalize direction: rows along +x, columns along +y in the image.
    let p00 = cands[at(0, 0)].pos;
    let p0c = cands[at(0, cols - 1)].pos;
    let pr0 = cands[at(rows - 1, 0)].pos;
    let flip_cols = p0c.x - p00.x < 0.0;
    let flip_rows = pr0.y - p00.y < 0.0;

    let mut corners = Vec::with_capacity(needed);
    let mut response = Vec::with_capacity(needed);
    for r in 0..rows {
        for c in 0..cols {
            let rr = if flip_rows { rows - 1 - r } else { r };
            let cc = if flip_cols { cols - 1 - c } else { c };
            let cand = &cands[at(rr, cc)];
            let refined = refine_and_clamp(img, cand.pos);
            corners.push(refined);
            response.push(cand.strength);
        }
    }
    Ok(CornerGrid { corners, response })
}

/// Sub-pixel refinement with a window that shrinks near the image border;
/// the raw candidate survives if no window fits or the solve degenerates.
fn refine_and_clamp(img: &GrayImage, p: Point2) -> Point2 {
    for hw in [5u32, 3, 2] {
        match refine_subpixel(img, p, hw) {
            Ok(r) => return r,
            Err(ChessboardError::WindowOutside) => continue,
            Err(_) => break,
        }
    }
    p
}

/// The four board-edge vertices by the row-major index formula:
/// `0`, `width - 1`, `(height - 1) * width`, `(height - 1) * width + width - 1`.
pub fn outer_corners(grid: &CornerGrid, spec: &BoardSpec) -> [Point2; 4] {
    let w = spec.width as usize;
    let h = spec.height as usize;
    debug_assert_eq!(grid.corners.len(), w * h);
    [
        grid.corners[0],
        grid.corners[w - 1],
        grid.corners[(h - 1) * w],
        grid.corners[(h - 1) * w + w - 1],
    ]
}

/// Indices picked by [`outer_corners`], exposed for reporting.
pub fn outer_corner_indices(spec: &BoardSpec) -> [usize; 4] {
    let w = spec.width as usize;
    let h = spec.height as usize;
    [0, w - 1, (h - 1) * w, (h - 1) * w + w - 1]
}
