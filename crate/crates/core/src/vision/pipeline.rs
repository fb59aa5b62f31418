use serde::{Deserialize, Serialize};

use super::homography::{estimate_homography, Homography};
use super::image::Image;
use super::marker::{detect_markers, MarkerDetection};
use super::template::{RoiRect, TemplateGeometry};
use super::VisionError;
use crate::color::ColorRgb;

/// Output of a perspective warp with the pixels that had no source.
#[derive(Debug, Clone, PartialEq)]
pub struct Warped {
    pub image: Image,
    /// Row-major, `true` where the inverse-mapped point fell outside the source.
    pub outside: Vec<bool>,
}

impl Warped {
    pub fn outside_count(&self) -> usize {
        self.outside.iter().filter(|&&o| o).count()
    }
}

/// Resamples `src` into a `width × height` image, where `h` maps source
/// coordinates to output coordinates. Each output pixel center is mapped back
/// through `h⁻¹` and sampled bilinearly; misses get `fill`.
pub fn warp_perspective(
    src: &Image,
    h: &Homography,
    width: usize,
    height: usize,
    fill: [u8; 3],
) -> Result<Warped, VisionError> {
    let inv = h.inverse()?;
    let mut image = Image::new(width, height, fill)?;
    let mut outside = vec![true; width * height];
    for y in 0..height {
        for x in 0..width {
            let sampled = inv
                .apply([x as f64 + 0.5, y as f64 + 0.5])
                .and_then(|p| src.sample_bilinear(p[0], p[1]));
            if let Some(s) = sampled {
                image.put(x, y, s.map(|v| v.round().clamp(0.0, 255.0) as u8));
                outside[y * width + x] = false;
            }
        }
    }
    Ok(Warped { image, outside })
}

/// Rectifies a photo onto the canonical template grid; `h` maps photo
/// coordinates to canonical ones.
pub fn warp_to_canonical(img: &Image, h: &Homography, g: &TemplateGeometry) -> Result<Warped, VisionError> {
    warp_perspective(img, h, g.width, g.height, [0, 0, 0])
}

fn roi_mean(img: &Image, roi: &RoiRect) -> Result<ColorRgb, VisionError> {
    let (xs, ys) = roi.pixel_ranges();
    let xs = xs.start..xs.end.min(img.width());
    let ys = ys.start..ys.end.min(img.height());
    let n = xs.len() * ys.len();
    if n == 0 {
        return Err(VisionError::EmptyRoi);
    }
    let mut sum = [0u64; 3];
    for y in ys {
        for x in xs.clone() {
            let p = img.get(x, y);
            for c in 0..3 {
                sum[c] += p[c] as u64;
            }
        }
    }
    let n = n as f64;
    Ok(ColorRgb::new(sum[0] as f64 / n, sum[1] as f64 / n, sum[2] as f64 / n))
}

/// Unrounded per-channel mean over the ROI of a canonical image.
pub fn extract_roi_mean(img: &Image, g: &TemplateGeometry) -> Result<ColorRgb, VisionError> {
    if (img.width(), img.height()) != (g.width, g.height) {
        return Err(VisionError::SizeMismatch {
            expected: (g.width, g.height),
            actual: (img.width(), img.height()),
        });
    }
    roi_mean(img, &g.roi())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub marker_count: usize,
    pub marker_ids: Vec<usize>,
    pub markers: Vec<MarkerDetection>,
    /// Photo to canonical.
    pub homography: Homography,
    /// RMS distance (canonical pixels) between the 16 detected marker corners
    /// mapped through the homography and their template positions.
    pub reprojection_rms: f64,
    pub out_of_source_pixels: usize,
    pub roi: RoiRect,
    pub roi_fraction: f64,
    pub roi_pixels: usize,
    /// Always `None`: no color correction is applied yet.
    pub color_correction: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub color: ColorRgb,
    pub diagnostics: Diagnostics,
}

/// Detects the four markers, rectifies by the homography between their
/// centers and the template's, and averages the ROI.
pub fn process_submission(photo: &Image, g: &TemplateGeometry) -> Result<Submission, VisionError> {
    g.validate()?;
    let mut markers = detect_markers(photo);
    markers.sort_by_key(|m| m.id);
    if markers.len() < 4 {
        return Err(VisionError::TooFewMarkers { found: markers.len() });
    }
    let src = [0, 1, 2, 3].map(|i| markers[i].center());
    let h = estimate_homography(&src, &g.marker_centers())?;

    let mut sq = 0.0;
    for m in &markers {
        for (got, want) in m.corners.iter().zip(g.marker_corners(m.id)) {
            let p = h.apply(*got).ok_or(VisionError::DegenerateHomography)?;
            sq += (p[0] - want[0]).powi(2) + (p[1] - want[1]).powi(2);
        }
    }
    let warped = warp_to_canonical(photo, &h, g)?;
    let color = extract_roi_mean(&warped.image, g)?;
    let roi = g.roi();
    Ok(Submission {
        color,
        diagnostics: Diagnostics {
            marker_count: markers.len(),
            marker_ids: markers.iter().map(|m| m.id).collect(),
            reprojection_rms: (sq / 16.0).sqrt(),
            out_of_source_pixels: warped.outside_count(),
            homography: h,
            roi,
            roi_fraction: g.roi_fraction,
            roi_pixels: roi.pixel_count(),
            color_correction: None,
            markers,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vision::template::render_sample;

    #[test]
    fn identity_warp_preserves_pixels() {
        let g = TemplateGeometry::default();
        let img = render_sample(&g, [4, 90, 152]).unwrap();
        let w = warp_to_canonical(&img, &Homography::IDENTITY, &g).unwrap();
        assert_eq!(w.image, img);
        assert_eq!(w.outside_count(), 0);
    }

    #[test]
    fn fully_outside_is_flagged() {
        let g = TemplateGeometry::default();
        let img = Image::new(50, 50, [200; 3]).unwrap();
        let w = warp_to_canonical(&img, &Homography::translation(5000.0, 0.0), &g).unwrap();
        assert_eq!(w.outside_count(), g.width * g.height);
        assert!(w.image.pixels().all(|p| p == [0, 0, 0]));
    }

    #[test]
    fn half_black_half_white_roi() {
        let g = TemplateGeometry::layout(480, 640, 60, 20, 0.5).unwrap();
        let mut img = Image::new(g.width, g.height, [255; 3]).unwrap();
        let (xs, ys) = g.roi().pixel_ranges();
        assert_eq!(xs.len() % 2, 0);
        img.fill_rect(xs.start, ys.start, xs.start + xs.len() / 2, ys.end, [0; 3]);
        let c = extract_roi_mean(&img, &g).unwrap();
        assert_eq!(c, ColorRgb::new(127.5, 127.5, 127.5));
    }

    #[test]
    fn wrong_size_rejected() {
        let g = TemplateGeometry::default();
        let img = Image::new(10, 10, [0; 3]).unwrap();
        assert!(matches!(extract_roi_mean(&img, &g), Err(VisionError::SizeMismatch { .. })));
    }
}
