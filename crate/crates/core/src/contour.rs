//! Border tracing on binary masks with a two-level outer/hole hierarchy.
//!
//! Foreground components are 8-connected and background holes 4-connected;
//! the opposite pairing would let a diagonal pixel chain both connect a
//! component and leak the background through it. Every component yields one
//! outer contour and every hole one inner contour whose parent is the
//! enclosing component. Components nested inside holes of other components
//! still appear as parentless outer contours (flat two-level hierarchy).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::image::BinaryImage;

/// Integer pixel coordinate on the traced boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelPoint {
    pub x: i32,
    pub y: i32,
}

impl PixelPoint {
    pub const fn new(x: i32, y: i32) -> Self {
        PixelPoint { x, y }
    }
}

/// Closed boundary walk over foreground pixels.
///
/// Consecutive points are 8-neighbors and the walk is closed (the last
/// point is adjacent to the first). Components of one or two pixels yield
/// correspondingly short walks.
#[derive(Debug, Clone)]
pub struct Contour {
    pub points: Vec<PixelPoint>,
    pub is_outer: bool,
    /// Index of the enclosing outer contour; `None` for outer contours.
    pub parent: Option<usize>,
}

impl Contour {
    /// Euclidean length of the closed walk.
    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        if n < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            let dx = (a.x - b.x) as f64;
            let dy = (a.y - b.y) as f64;
            total += crate::math::hypot(dx, dy);
        }
        total
    }
}

/// All contours of a mask plus the outer-to-inner hierarchy.
#[derive(Debug, Clone, Default)]
pub struct ContourSet {
    pub contours: Vec<Contour>,
    /// Outer contour index to the indices of its hole contours. Outers
    /// without holes are absent.
    pub children: BTreeMap<usize, Vec<usize>>,
}

impl ContourSet {
    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }

    pub fn len(&self) -> usize {
        self.contours.len()
    }
}

// Clockwise neighbor order on screen (y down), starting east.
const DIRS: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

const DIR_W: usize = 4;
const DIR_S: usize = 2;

struct Grid {
    w: i32,
    h: i32,
    fg: Vec<bool>,
}

impl Grid {
    #[inline]
    fn fg(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && x < self.w && y < self.h && self.fg[(y * self.w + x) as usize]
    }
}

fn dir_between(from: (i32, i32), to: (i32, i32)) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    DIRS.iter().position(|&v| v == d).expect("pixels must be 8-adjacent")
}

/// Border following from `start`, with `init_dir` pointing at a background
/// pixel of the region whose border is being traced (west of the start for
/// outer borders, into the hole for inner borders).
fn moore_trace(grid: &Grid, start: (i32, i32), init_dir: usize) -> Vec<PixelPoint> {
    // First move: scan clockwise from the background pixel.
    let mut first = None;
    for k in 1..=8 {
        let d = (init_dir + k) % 8;
        let n = (start.0 + DIRS[d].0, start.1 + DIRS[d].1);
        if grid.fg(n.0, n.1) {
            first = Some(n);
            break;
        }
    }
    let Some(first) = first else {
        return vec![PixelPoint::new(start.0, start.1)];
    };

    let mut points = Vec::new();
    let mut prev = first;
    let mut cur = start;
    let cap = 4 * (grid.w as usize * grid.h as usize) + 8;
    for _ in 0..cap {
        // Scan counter-clockwise around `cur`, starting just after `prev`.
        let d_prev = dir_between(cur, prev);
        let mut next = (0, 0);
        for k in 1..=8 {
            let d = (d_prev + 8 - k) % 8;
            let n = (cur.0 + DIRS[d].0, cur.1 + DIRS[d].1);
            if grid.fg(n.0, n.1) {
                next = n;
                break;
            }
        }
        points.push(PixelPoint::new(cur.0, cur.1));
        // Stopping rule: about to repeat the initial move.
        if next == start && cur == first {
            return points;
        }
        prev = cur;
        cur = next;
    }
    debug_assert!(false, "border following did not close");
    points
}

/// Trace all contours of the mask.
///
/// Foreground is the 1-valued pixels, or the 0-valued pixels when `invert`
/// is set (dark markers binarize to 0). An empty mask yields an empty set.
pub fn trace_contours(mask: &BinaryImage, invert: bool) -> ContourSet {
    let w = mask.width() as i32;
    let h = mask.height() as i32;
    let fg: Vec<bool> = mask.as_raw().iter().map(|&v| (v == 1) != invert).collect();
    let grid = Grid { w, h, fg };

    // Label 8-connected foreground components in raster discovery order.
    let mut comp = vec![0u32; (w * h) as usize];
    let mut comp_starts: Vec<(i32, i32)> = Vec::new();
    let mut stack: Vec<(i32, i32)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as usize;
            if !grid.fg[idx] || comp[idx] != 0 {
                continue;
            }
            let label = comp_starts.len() as u32 + 1;
            comp_starts.push((x, y));
            comp[idx] = label;
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                for (dx, dy) in DIRS {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if grid.fg(nx, ny) {
                        let nidx = (ny * w + nx) as usize;
                        if comp[nidx] == 0 {
                            comp[nidx] = label;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
        }
    }

    // Label 4-connected background regions; regions touching the image
    // border are outside, the rest are holes owned by the component just
    // above their first (topmost-leftmost) pixel.
    let mut bg_seen = vec![false; (w * h) as usize];
    let mut holes: Vec<(i32, i32)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as usize;
            if grid.fg[idx] || bg_seen[idx] {
                continue;
            }
            let start = (x, y);
            let mut touches_border = false;
            bg_seen[idx] = true;
            stack.push(start);
            while let Some((cx, cy)) = stack.pop() {
                if cx == 0 || cy == 0 || cx == w - 1 || cy == h - 1 {
                    touches_border = true;
                }
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let nidx = (ny * w + nx) as usize;
                    if !grid.fg[nidx] && !bg_seen[nidx] {
                        bg_seen[nidx] = true;
                        stack.push((nx, ny));
                    }
                }
            }
            if !touches_border {
                holes.push(start);
            }
        }
    }

    let mut set = ContourSet::default();
    let mut outer_of_comp = vec![usize::MAX; comp_starts.len()];
    for (c, &start) in comp_starts.iter().enumerate() {
        // The west neighbor of a topmost-leftmost pixel is background.
        let points = moore_trace(&grid, start, DIR_W);
        outer_of_comp[c] = set.contours.len();
        set.contours.push(Contour {
            points,
            is_outer: true,
            parent: None,
        });
    }
    for &(hx, hy) in &holes {
        // The pixel above a hole's topmost-leftmost pixel is foreground of
        // the enclosing component.
        let owner_label = comp[((hy - 1) * w + hx) as usize];
        debug_assert!(owner_label > 0);
        let parent = outer_of_comp[(owner_label - 1) as usize];
        let start = (hx, hy - 1);
        let points = moore_trace(&grid, start, DIR_S);
        let idx = set.contours.len();
        set.contours.push(Contour {
            points,
            is_outer: false,
            parent: Some(parent),
        });
        set.children.entry(parent).or_default().push(idx);
    }
    set
}
