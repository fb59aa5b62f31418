use serde::{Deserialize, Serialize};

use super::VisionError;
use crate::linalg;

pub type Point = [f64; 2];

/// Projective map of the plane, `[a b c; d e f; g h 1]` row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub m: [f64; 9],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    };

    /// Scales so the bottom-right element is 1 and checks invertibility.
    pub fn from_matrix(m: [f64; 9]) -> Result<Self, VisionError> {
        if m[8].abs() < 1e-15 || m.iter().any(|v| !v.is_finite()) {
            return Err(VisionError::DegenerateHomography);
        }
        let h = Homography { m: m.map(|v| v / m[8]) };
        if h.determinant().abs() <= 1e-12 {
            return Err(VisionError::DegenerateHomography);
        }
        Ok(h)
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Homography {
            m: [1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0],
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
    }

    /// Maps a point; `None` if it lands on the line at infinity.
    pub fn apply(&self, p: Point) -> Option<Point> {
        let m = &self.m;
        let w = m[6] * p[0] + m[7] * p[1] + m[8];
        if w.abs() < 1e-12 {
            return None;
        }
        Some([
            (m[0] * p[0] + m[1] * p[1] + m[2]) / w,
            (m[3] * p[0] + m[4] * p[1] + m[5]) / w,
        ])
    }

    pub fn inverse(&self) -> Result<Self, VisionError> {
        let m = &self.m;
        let det = self.determinant();
        if det.abs() <= 1e-12 {
            return Err(VisionError::DegenerateHomography);
        }
        let adj = [
            m[4] * m[8] - m[5] * m[7],
            m[2] * m[7] - m[1] * m[8],
            m[1] * m[5] - m[2] * m[4],
            m[5] * m[6] - m[3] * m[8],
            m[0] * m[8] - m[2] * m[6],
            m[2] * m[3] - m[0] * m[5],
            m[3] * m[7] - m[4] * m[6],
            m[1] * m[6] - m[0] * m[7],
            m[0] * m[4] - m[1] * m[3],
        ];
        Homography::from_matrix(adj.map(|v| v / det))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Homography) -> Result<Self, VisionError> {
        let (a, b) = (&self.m, &other.m);
        let mut out = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                out[i * 3 + j] = (0..3).map(|k| a[i * 3 + k] * b[k * 3 + j]).sum();
            }
        }
        Homography::from_matrix(out)
    }
}

fn collinear(a: Point, b: Point, c: Point, scale: f64) -> bool {
    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    cross.abs() <= 1e-9 * scale * scale
}

fn check_general_position(pts: &[Point; 4]) -> Result<(), VisionError> {
    let scale = pts
        .iter()
        .flat_map(|p| pts.iter().map(move |q| (p[0] - q[0]).hypot(p[1] - q[1])))
        .fold(0.0, f64::max);
    if scale <= 0.0 || !scale.is_finite() {
        return Err(VisionError::DegenerateHomography);
    }
    for i in 0..4 {
        for j in i + 1..4 {
            for k in j + 1..4 {
                if collinear(pts[i], pts[j], pts[k], scale) {
                    return Err(VisionError::DegenerateHomography);
                }
            }
        }
    }
    Ok(())
}

/// Similarity taking the points to zero centroid and mean distance √2.
fn normalizer(pts: &[Point; 4]) -> Homography {
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / 4.0;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / 4.0;
    let mean = pts.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).sum::<f64>() / 4.0;
    let s = std::f64::consts::SQRT_2 / mean;
    Homography {
        m: [s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0],
    }
}

/// Exact four-point direct linear transform mapping each `src[i]` to `dst[i]`.
pub fn estimate_homography(src: &[Point; 4], dst: &[Point; 4]) -> Result<Homography, VisionError> {
    check_general_position(src)?;
    check_general_position(dst)?;
    let ns = normalizer(src);
    let nd = normalizer(dst);
    let s: Vec<Point> = src.iter().map(|p| ns.apply(*p).unwrap()).collect();
    let d: Vec<Point> = dst.iter().map(|p| nd.apply(*p).unwrap()).collect();

    let mut a = vec![0.0; 64];
    let mut b = vec![0.0; 8];
    for i in 0..4 {
        let ([x, y], [u, v]) = (s[i], d[i]);
        let r0 = 2 * i;
        let r1 = 2 * i + 1;
        a[r0 * 8..r0 * 8 + 8].copy_from_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]);
        a[r1 * 8..r1 * 8 + 8].copy_from_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]);
        b[r0] = u;
        b[r1] = v;
    }
    let h = linalg::solve_dense(&a, &b, 8, 1e-12).ok_or(VisionError::DegenerateHomography)?;
    let normalized = Homography::from_matrix([h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0])?;
    nd.inverse()?.compose(&normalized)?.compose(&ns)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: [Point; 4] = [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]];

    #[test]
    fn identity_pairs() {
        let h = estimate_homography(&SQUARE, &SQUARE).unwrap();
        for (a, b) in h.m.iter().zip(Homography::IDENTITY.m) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn translation_pairs() {
        let dst = SQUARE.map(|p| [p[0] + 3.5, p[1] - 7.0]);
        let h = estimate_homography(&SQUARE, &dst).unwrap();
        let t = Homography::translation(3.5, -7.0);
        for (a, b) in h.m.iter().zip(t.m) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_configurations() {
        let line = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.0, 5.0]];
        assert_eq!(
            estimate_homography(&line, &SQUARE),
            Err(VisionError::DegenerateHomography)
        );
        let repeated = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(estimate_homography(&SQUARE, &repeated).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let dst = [[3.0, 1.0], [40.0, 5.0], [38.0, 30.0], [1.0, 27.0]];
        let h = estimate_homography(&SQUARE, &dst).unwrap();
        let inv = h.inverse().unwrap();
        for p in SQUARE {
            let q = inv.apply(h.apply(p).unwrap()).unwrap();
            assert!((q[0] - p[0]).abs() < 1e-9 && (q[1] - p[1]).abs() < 1e-9);
        }
    }

    proptest::proptest! {
        #[test]
        fn maps_sources_onto_destinations(
            jitter in proptest::collection::vec(-30.0f64..30.0, 16),
        ) {
            let base = [[0.0, 0.0], [400.0, 0.0], [400.0, 600.0], [0.0, 600.0]];
            let mut src = base;
            let mut dst = base;
            for i in 0..4 {
                src[i] = [base[i][0] + jitter[4 * i], base[i][1] + jitter[4 * i + 1]];
                dst[i] = [base[i][0] * 0.8 + 50.0 + jitter[4 * i + 2], base[i][1] * 1.1 + jitter[4 * i + 3]];
            }
            let h = estimate_homography(&src, &dst).unwrap();
            for i in 0..4 {
                let p = h.apply(src[i]).unwrap();
                proptest::prop_assert!((p[0] - dst[i][0]).abs() < 1e-6);
                proptest::prop_assert!((p[1] - dst[i][1]).abs() < 1e-6);
            }
        }
    }
}
