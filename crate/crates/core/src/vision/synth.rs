use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::homography::{estimate_homography, Homography, Point};
use super::image::Image;
use super::pipeline::warp_perspective;
use super::VisionError;

/// A simulated camera view of a flat page.
#[derive(Debug, Clone, PartialEq)]
pub struct PerspectiveView {
    /// Page coordinates to photo coordinates.
    pub homography: Homography,
    pub width: usize,
    pub height: usize,
}

impl PerspectiveView {
    pub fn render(&self, page: &Image, background: [u8; 3]) -> Result<Image, VisionError> {
        Ok(warp_perspective(page, &self.homography, self.width, self.height, background)?.image)
    }
}

/// Pinhole view of a `width × height` page tilted by `yaw` (about the vertical
/// axis) then `pitch` (about the horizontal axis), both in degrees. The focal
/// length is 1.5× the longer page side and the photo is cropped to the
/// projected page plus `margin` pixels.
pub fn perspective_view(
    width: usize,
    height: usize,
    yaw_deg: f64,
    pitch_deg: f64,
    margin: usize,
) -> Result<PerspectiveView, VisionError> {
    let f = 1.5 * width.max(height) as f64;
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let (sy, cyaw) = yaw_deg.to_radians().sin_cos();
    let (sp, cp) = pitch_deg.to_radians().sin_cos();
    let project = |p: Point| -> Point {
        let (x, y) = (p[0] - cx, p[1] - cy);
        // Yaw then pitch applied to (x, y, 0).
        let (x1, y1, z1) = (cyaw * x, y, -sy * x);
        let (y2, z2) = (cp * y1 - sp * z1, sp * y1 + cp * z1);
        let z = z2 + f;
        [f * x1 / z, f * y2 / z]
    };
    let page = [
        [0.0, 0.0],
        [width as f64, 0.0],
        [width as f64, height as f64],
        [0.0, height as f64],
    ];
    let projected = page.map(project);
    let min_x = projected.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let min_y = projected.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let max_x = projected.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let max_y = projected.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
    let m = margin as f64;
    let shifted = projected.map(|p| [p[0] - min_x + m, p[1] - min_y + m]);
    Ok(PerspectiveView {
        homography: estimate_homography(&page, &shifted)?,
        width: (max_x - min_x + 2.0 * m).ceil() as usize,
        height: (max_y - min_y + 2.0 * m).ceil() as usize,
    })
}

/// Adds independent Gaussian noise to every sample, rounding and clamping.
pub fn add_gaussian_noise(img: &Image, sd: f64, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sd.max(0.0)).expect("finite standard deviation");
    let data = img
        .as_raw()
        .iter()
        .map(|&v| (v as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
        .collect();
    Image::from_raw(img.width(), img.height(), data).expect("same shape")
}
