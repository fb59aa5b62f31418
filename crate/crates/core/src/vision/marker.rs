use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::homography::{estimate_homography, Point};
use super::image::Image;
use super::threshold::binarize;

/// Cells per marker side: a one-cell dark border around 4×4 data bits.
pub const MARKER_CELLS: usize = 6;

/// Data bits of markers 0..=3, row-major from the top-left cell, most
/// significant bit first. A set bit is a white cell.
pub const DICTIONARY: [u16; 4] = [0xad4e, 0x33e2, 0xb575, 0xdcc5];

const MIN_COMPONENT_PIXELS: usize = 36;
const MIN_SIDE: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerDetection {
    pub id: usize,
    /// Clockwise quarter turns of the marker as seen in the image, in degrees.
    pub rotation: u16,
    /// Outer corners, clockwise starting from the marker's own top-left.
    pub corners: [Point; 4],
    /// Data bits that disagreed with the dictionary word.
    pub bit_errors: u32,
}

impl MarkerDetection {
    /// Intersection of the diagonals.
    pub fn center(&self) -> Point {
        line_intersection(
            (self.corners[0], sub(self.corners[2], self.corners[0])),
            (self.corners[1], sub(self.corners[3], self.corners[1])),
        )
        .unwrap_or_else(|| {
            let s = self.corners.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
            [s[0] / 4.0, s[1] / 4.0]
        })
    }
}

fn bit(code: u16, row: usize, col: usize) -> bool {
    (code >> (15 - (row * 4 + col))) & 1 == 1
}

/// The code word as it reads after turning the marker 90° clockwise.
pub fn rotate_code_cw(code: u16) -> u16 {
    let mut out = 0u16;
    for r in 0..4 {
        for c in 0..4 {
            if bit(code, 3 - c, r) {
                out |= 1 << (15 - (r * 4 + c));
            }
        }
    }
    out
}

/// Rendering contract for marker `id` at cell `(row, col)` of the 6×6 grid.
pub(crate) fn marker_cell_is_white(id: usize, row: usize, col: usize) -> bool {
    if row == 0 || col == 0 || row >= MARKER_CELLS - 1 || col >= MARKER_CELLS - 1 {
        return false;
    }
    bit(DICTIONARY[id], row - 1, col - 1)
}

/// Best dictionary match for observed data bits: `(id, quarter_turns, errors)`.
pub fn decode_marker(observed: u16) -> Option<(usize, usize, u32)> {
    let mut best: Option<(usize, usize, u32)> = None;
    for (id, &code) in DICTIONARY.iter().enumerate() {
        let mut rotated = code;
        for k in 0..4 {
            let d = (observed ^ rotated).count_ones();
            if best.map_or(true, |b| d < b.2) {
                best = Some((id, k, d));
            }
            rotated = rotate_code_cw(rotated);
        }
    }
    best.filter(|b| b.2 <= 1)
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Lines given as (point, direction).
fn line_intersection(l1: (Point, Point), l2: (Point, Point)) -> Option<Point> {
    let denom = cross(l1.1, l2.1);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = cross(sub(l2.0, l1.0), l2.1) / denom;
    Some([l1.0[0] + t * l1.1[0], l1.0[1] + t * l1.1[1]])
}

struct Component {
    pixels: Vec<(usize, usize)>,
    bbox: (usize, usize, usize, usize),
}

/// 4-connected foreground components.
fn components(mask: &[bool], w: usize, h: usize) -> Vec<Component> {
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        let mut bbox = (usize::MAX, usize::MAX, 0, 0);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            pixels.push((x, y));
            bbox = (bbox.0.min(x), bbox.1.min(y), bbox.2.max(x), bbox.3.max(y));
            let mut visit = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        out.push(Component { pixels, bbox });
    }
    out
}

/// Midpoints of pixel edges separating the component from the region
/// outside its outer contour (holes are ignored).
fn outer_boundary(c: &Component) -> Vec<Point> {
    let (bx0, by0, bx1, by1) = c.bbox;
    let w = bx1 - bx0 + 3;
    let h = by1 - by0 + 3;
    let mut inside = vec![false; w * h];
    for &(x, y) in &c.pixels {
        inside[(y - by0 + 1) * w + (x - bx0 + 1)] = true;
    }
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::from([0usize]);
    outside[0] = true;
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let mut visit = |j: usize| {
            if !inside[j] && !outside[j] {
                outside[j] = true;
                queue.push_back(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < h {
            visit(i + w);
        }
    }
    let mut pts = Vec::new();
    for &(x, y) in &c.pixels {
        let i = (y - by0 + 1) * w + (x - bx0 + 1);
        let (fx, fy) = (x as f64, y as f64);
        if outside[i - 1] {
            pts.push([fx, fy + 0.5]);
        }
        if outside[i + 1] {
            pts.push([fx + 1.0, fy + 0.5]);
        }
        if outside[i - w] {
            pts.push([fx + 0.5, fy]);
        }
        if outside[i + w] {
            pts.push([fx + 0.5, fy + 1.0]);
        }
    }
    pts
}

fn dist2(a: Point, b: Point) -> f64 {
    let d = sub(a, b);
    d[0] * d[0] + d[1] * d[1]
}

fn farthest(pts: &[Point], from: Point) -> Point {
    pts.iter()
        .copied()
        .max_by(|a, b| dist2(*a, from).total_cmp(&dist2(*b, from)))
        .expect("non-empty boundary")
}

/// Quadrilateral hull estimate, clockwise (in y-down coordinates) from the
/// corner nearest the image origin.
fn initial_quad(pts: &[Point]) -> Option<[Point; 4]> {
    let n = pts.len() as f64;
    let centroid = pts.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0] / n, a[1] + p[1] / n]);
    let a = farthest(pts, centroid);
    let b = farthest(pts, a);
    let dir = sub(b, a);
    let side = |p: &Point| cross(dir, sub(*p, a));
    let c = pts.iter().copied().max_by(|p, q| side(p).total_cmp(&side(q)))?;
    let d = pts.iter().copied().min_by(|p, q| side(p).total_cmp(&side(q)))?;
    let len = dir[0].hypot(dir[1]);
    if side(&c) / len < MIN_SIDE / 2.0 || -side(&d) / len < MIN_SIDE / 2.0 {
        return None;
    }
    let mut quad = [a, c, b, d];
    let m = quad.iter().fold([0.0, 0.0], |s, p| [s[0] + p[0] / 4.0, s[1] + p[1] / 4.0]);
    quad.sort_by(|p, q| {
        let ap = (p[1] - m[1]).atan2(p[0] - m[0]);
        let aq = (q[1] - m[1]).atan2(q[0] - m[0]);
        ap.total_cmp(&aq)
    });
    let start = (0..4)
        .min_by(|&i, &j| (quad[i][0] + quad[i][1]).total_cmp(&(quad[j][0] + quad[j][1])))
        .unwrap();
    quad.rotate_left(start);
    Some(quad)
}

fn distance_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2
    } else {
        0.0
    };
    let t = t.clamp(0.0, 1.0);
    dist2(p, [a[0] + t * ab[0], a[1] + t * ab[1]]).sqrt()
}

/// Total-least-squares line through points: (centroid, direction).
fn fit_line(pts: &[Point]) -> Option<(Point, Point)> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let m = pts.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0] / n, a[1] + p[1] / n]);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let d = sub(*p, m);
        sxx += d[0] * d[0];
        sxy += d[0] * d[1];
        syy += d[1] * d[1];
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some((m, [theta.cos(), theta.sin()]))
}

/// Refits each side to the boundary points along its middle portion and
/// intersects neighbouring sides.
fn refine_quad(quad: &[Point; 4], pts: &[Point]) -> Option<[Point; 4]> {
    let mut lines = [([0.0; 2], [0.0; 2]); 4];
    for i in 0..4 {
        let (a, b) = (quad[i], quad[(i + 1) % 4]);
        let ab = sub(b, a);
        let len = ab[0].hypot(ab[1]);
        let tol = (0.08 * len).max(1.5);
        let support: Vec<Point> = pts
            .iter()
            .copied()
            .filter(|p| {
                let ap = sub(*p, a);
                let t = (ap[0] * ab[0] + ap[1] * ab[1]) / (len * len);
                (0.15..=0.85).contains(&t) && cross(ab, ap).abs() / len <= tol
            })
            .collect();
        lines[i] = fit_line(&support).unwrap_or((a, ab));
    }
    let mut out = [[0.0; 2]; 4];
    for i in 0..4 {
        out[i] = line_intersection(lines[(i + 3) % 4], lines[i])?;
    }
    Some(out)
}

fn is_convex(q: &[Point; 4]) -> bool {
    (0..4).all(|i| {
        let e1 = sub(q[(i + 1) % 4], q[i]);
        let e2 = sub(q[(i + 2) % 4], q[(i + 1) % 4]);
        cross(e1, e2) > 0.0
    }) && (0..4).all(|i| dist2(q[i], q[(i + 1) % 4]).sqrt() >= MIN_SIDE)
}

fn quad_area(q: &[Point; 4]) -> f64 {
    0.5 * (0..4).map(|i| cross(q[i], q[(i + 1) % 4])).sum::<f64>()
}

/// Samples the 6×6 grid spanned by `quad`; returns data bits if the border
/// reads dark (one stray border cell tolerated).
fn read_grid(img: &Image, quad: &[Point; 4], threshold: f64) -> Option<u16> {
    let n = MARKER_CELLS as f64;
    let grid = [[0.0, 0.0], [n, 0.0], [n, n], [0.0, n]];
    let h = estimate_homography(&grid, quad).ok()?;
    let mut border_misses = 0;
    let mut code = 0u16;
    for row in 0..MARKER_CELLS {
        for col in 0..MARKER_CELLS {
            let mut sum = 0.0;
            let mut count = 0.0;
            for dy in [-0.25, 0.0, 0.25] {
                for dx in [-0.25, 0.0, 0.25] {
                    let p = h.apply([col as f64 + 0.5 + dx, row as f64 + 0.5 + dy])?;
                    if let Some(s) = img.sample_bilinear(p[0], p[1]) {
                        sum += (s[0] + s[1] + s[2]) / 3.0;
                        count += 1.0;
                    }
                }
            }
            if count == 0.0 {
                return None;
            }
            let white = sum / count > threshold;
            let border = row == 0 || col == 0 || row == MARKER_CELLS - 1 || col == MARKER_CELLS - 1;
            if border {
                border_misses += white as u32;
            } else if white {
                code |= 1 << (15 - ((row - 1) * 4 + (col - 1)));
            }
        }
    }
    (border_misses <= 1).then_some(code)
}

/// Finds dictionary markers in a photo; at most one detection per id.
pub fn detect_markers(img: &Image) -> Vec<MarkerDetection> {
    let bin = binarize(img);
    let Some(t) = bin.threshold else {
        return Vec::new();
    };
    let threshold = t as f64 + 0.5;
    let (w, h) = (img.width(), img.height());
    let mut best: [Option<(MarkerDetection, f64)>; 4] = Default::default();
    for comp in components(&bin.mask, w, h) {
        let (bx0, by0, bx1, by1) = comp.bbox;
        if comp.pixels.len() < MIN_COMPONENT_PIXELS
            || ((bx1 - bx0 + 1) as f64) < MIN_SIDE
            || ((by1 - by0 + 1) as f64) < MIN_SIDE
        {
            continue;
        }
        let boundary = outer_boundary(&comp);
        let Some(rough) = initial_quad(&boundary) else {
            continue;
        };
        let perimeter: f64 = (0..4).map(|i| dist2(rough[i], rough[(i + 1) % 4]).sqrt()).sum();
        let tol = 1.5 + 0.03 * perimeter / 4.0;
        let fits = boundary.iter().all(|p| {
            (0..4)
                .map(|i| distance_to_segment(*p, rough[i], rough[(i + 1) % 4]))
                .fold(f64::INFINITY, f64::min)
                <= tol
        });
        if !fits {
            continue;
        }
        let Some(quad) = refine_quad(&rough, &boundary).filter(is_convex) else {
            continue;
        };
        let Some(observed) = read_grid(img, &quad, threshold) else {
            continue;
        };
        let Some((id, turns, errors)) = decode_marker(observed) else {
            continue;
        };
        let mut corners = quad;
        corners.rotate_left(turns);
        let area = quad_area(&quad);
        let det = MarkerDetection {
            id,
            rotation: (turns * 90) as u16,
            corners,
            bit_errors: errors,
        };
        let better = match &best[id] {
            None => true,
            Some((prev, prev_area)) => (errors, -area) < (prev.bit_errors, -prev_area),
        };
        if better {
            best[id] = Some((det, area));
        }
    }
    best.into_iter().flatten().map(|(d, _)| d).collect()
}
