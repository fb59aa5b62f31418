use serde::{Deserialize, Serialize};

use super::homography::{estimate_homography, Point};
use super::image::Image;
use super::marker::{marker_cell_is_white, MARKER_CELLS};
use super::VisionError;

const WHITE: [u8; 3] = [255; 3];
const BLACK: [u8; 3] = [0; 3];

/// Integer pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelRect {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        PixelRect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> usize {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> usize {
        self.y1.saturating_sub(self.y0)
    }

    /// Grows by `by` pixels on every side (saturating at zero).
    fn inflate(&self, by: usize) -> PixelRect {
        PixelRect {
            x0: self.x0.saturating_sub(by),
            y0: self.y0.saturating_sub(by),
            x1: self.x1 + by,
            y1: self.y1 + by,
        }
    }

    fn intersects(&self, o: &PixelRect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }

    fn contains_rect(&self, o: &PixelRect) -> bool {
        self.x0 <= o.x0 && self.y0 <= o.y0 && o.x1 <= self.x1 && o.y1 <= self.y1
    }
}

/// Continuous rectangle; a pixel belongs to it when its center does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiRect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl RoiRect {
    /// Column and row ranges of the pixels whose centers lie inside.
    pub fn pixel_ranges(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let span = |a: f64, b: f64| {
            let lo = (a - 0.5).ceil().max(0.0) as usize;
            let hi = (b - 0.5).ceil().max(0.0) as usize;
            lo..hi.max(lo)
        };
        (span(self.x0, self.x1), span(self.y0, self.y1))
    }

    pub fn pixel_count(&self) -> usize {
        let (xs, ys) = self.pixel_ranges();
        xs.len() * ys.len()
    }
}

/// Canonical layout of the printable template.
///
/// Markers are indexed by id: 0 top-left, 1 top-right, 2 bottom-right,
/// 3 bottom-left. Each entry is the top-left pixel of a square marker of
/// `marker_size` pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateGeometry {
    pub width: usize,
    pub height: usize,
    pub marker_size: usize,
    pub markers: [[usize; 2]; 4],
    pub container: PixelRect,
    /// Width of the dark frame drawn just outside the container.
    pub outline: usize,
    /// ROI side lengths as a fraction of the container's.
    pub roi_fraction: f64,
}

impl Default for TemplateGeometry {
    fn default() -> Self {
        TemplateGeometry::layout(480, 640, 60, 20, 0.25).expect("default geometry is valid")
    }
}

impl TemplateGeometry {
    /// Markers in the corners `margin` pixels from the edges and the container
    /// filling the space between them, half a marker away.
    pub fn layout(
        width: usize,
        height: usize,
        marker_size: usize,
        margin: usize,
        roi_fraction: f64,
    ) -> Result<Self, VisionError> {
        let inset = margin + marker_size + marker_size / 2;
        let far_x = width.checked_sub(margin + marker_size);
        let far_y = height.checked_sub(margin + marker_size);
        let (Some(far_x), Some(far_y)) = (far_x, far_y) else {
            return Err(VisionError::InvalidGeometry("markers do not fit".into()));
        };
        if 2 * inset >= width || 2 * inset >= height {
            return Err(VisionError::InvalidGeometry("no room for the container".into()));
        }
        let g = TemplateGeometry {
            width,
            height,
            marker_size,
            markers: [[margin, margin], [far_x, margin], [far_x, far_y], [margin, far_y]],
            container: PixelRect::new(inset, inset, width - inset, height - inset),
            outline: 2,
            roi_fraction,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_roi_fraction(mut self, roi_fraction: f64) -> Result<Self, VisionError> {
        self.roi_fraction = roi_fraction;
        self.validate()?;
        Ok(self)
    }

    fn cell(&self) -> usize {
        self.marker_size / MARKER_CELLS
    }

    pub fn marker_rect(&self, id: usize) -> PixelRect {
        let [x, y] = self.markers[id];
        PixelRect::new(x, y, x + self.marker_size, y + self.marker_size)
    }

    /// Outer corners of marker `id`, clockwise from its top-left.
    pub fn marker_corners(&self, id: usize) -> [Point; 4] {
        let r = self.marker_rect(id);
        let (x0, y0, x1, y1) = (r.x0 as f64, r.y0 as f64, r.x1 as f64, r.y1 as f64);
        [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
    }

    pub fn marker_center(&self, id: usize) -> Point {
        let [x, y] = self.markers[id];
        let half = self.marker_size as f64 / 2.0;
        [x as f64 + half, y as f64 + half]
    }

    pub fn marker_centers(&self) -> [Point; 4] {
        [0, 1, 2, 3].map(|id| self.marker_center(id))
    }

    pub fn roi(&self) -> RoiRect {
        let c = &self.container;
        let cx = (c.x0 + c.x1) as f64 / 2.0;
        let cy = (c.y0 + c.y1) as f64 / 2.0;
        let hw = c.width() as f64 * self.roi_fraction / 2.0;
        let hh = c.height() as f64 * self.roi_fraction / 2.0;
        RoiRect {
            x0: cx - hw,
            y0: cy - hh,
            x1: cx + hw,
            y1: cy + hh,
        }
    }

    /// Checks containment, separation and marker legibility.
    ///
    /// Every marker keeps a one-cell white quiet zone against the image edge,
    /// the other markers and the container frame.
    pub fn validate(&self) -> Result<(), VisionError> {
        let bad = |m: &str| Err(VisionError::InvalidGeometry(m.to_string()));
        if self.width == 0 || self.height == 0 {
            return bad("template size must be positive");
        }
        if self.marker_size < 2 * MARKER_CELLS {
            return bad("markers must be at least 12 pixels");
        }
        if !(self.roi_fraction > 0.0 && self.roi_fraction <= 1.0) {
            return bad("ROI fraction must be in (0, 1]");
        }
        let page = PixelRect::new(0, 0, self.width, self.height);
        let c = self.container;
        if c.width() == 0 || c.height() == 0 {
            return bad("container is empty");
        }
        let framed = c.inflate(self.outline);
        if c.x0 < self.outline || c.y0 < self.outline || !page.contains_rect(&framed) {
            return bad("container frame leaves the template");
        }
        let quiet = self.cell();
        let inner = PixelRect::new(quiet, quiet, self.width.saturating_sub(quiet), self.height.saturating_sub(quiet));
        for id in 0..4 {
            let m = self.marker_rect(id);
            if !inner.contains_rect(&m) {
                return bad("marker too close to the template edge");
            }
            let zone = m.inflate(quiet);
            if zone.intersects(&framed) {
                return bad("marker overlaps the container");
            }
            for other in id + 1..4 {
                if zone.intersects(&self.marker_rect(other)) {
                    return bad("markers overlap");
                }
            }
        }
        let centers = self.marker_centers();
        if estimate_homography(&centers, &centers).is_err() {
            return bad("marker centers are collinear");
        }
        if self.roi().pixel_count() == 0 {
            return Err(VisionError::EmptyRoi);
        }
        Ok(())
    }
}

/// White page, four markers and a dark frame around the empty container.
pub fn generate_template(g: &TemplateGeometry) -> Result<Image, VisionError> {
    g.validate()?;
    let mut img = Image::new(g.width, g.height, WHITE)?;
    let f = g.container.inflate(g.outline);
    let c = g.container;
    img.fill_rect(f.x0, f.y0, f.x1, c.y0, BLACK);
    img.fill_rect(f.x0, c.y1, f.x1, f.y1, BLACK);
    img.fill_rect(f.x0, c.y0, c.x0, c.y1, BLACK);
    img.fill_rect(c.x1, c.y0, f.x1, c.y1, BLACK);
    for id in 0..4 {
        let r = g.marker_rect(id);
        let cell = g.marker_size as f64 / MARKER_CELLS as f64;
        for y in r.y0..r.y1 {
            let row = (((y - r.y0) as f64 + 0.5) / cell) as usize;
            for x in r.x0..r.x1 {
                let col = (((x - r.x0) as f64 + 0.5) / cell) as usize;
                let px = if marker_cell_is_white(id, row, col) { WHITE } else { BLACK };
                img.put(x, y, px);
            }
        }
    }
    Ok(img)
}

/// Template with the container filled by a uniform sample color.
pub fn render_sample(g: &TemplateGeometry, fill: [u8; 3]) -> Result<Image, VisionError> {
    let mut img = generate_template(g)?;
    let c = g.container;
    img.fill_rect(c.x0, c.y0, c.x1, c.y1, fill);
    Ok(img)
}
