//! Image ingestion: printable template, fiducial marker detection, perspective
//! rectification and region-of-interest color extraction.

mod homography;
mod image;
mod marker;
mod pipeline;
mod synth;
mod template;
mod threshold;

pub use homography::{estimate_homography, Homography, Point};
pub use image::Image;
pub use marker::{
    decode_marker, detect_markers, rotate_code_cw, MarkerDetection, DICTIONARY, MARKER_CELLS,
};
pub use pipeline::{
    extract_roi_mean, process_submission, warp_perspective, warp_to_canonical, Diagnostics,
    Submission, Warped,
};
pub use synth::{add_gaussian_noise, perspective_view, PerspectiveView};
pub use template::{generate_template, render_sample, PixelRect, RoiRect, TemplateGeometry};
pub use threshold::{binarize, gray_histogram, otsu_threshold, Binarization};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VisionError {
    #[error("image has zero width or height")]
    EmptyImage,
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("cannot encode image: {0}")]
    Encode(String),
    #[error("invalid template geometry: {0}")]
    InvalidGeometry(String),
    #[error("degenerate homography")]
    DegenerateHomography,
    #[error("found {found} of 4 markers")]
    TooFewMarkers { found: usize },
    #[error("region of interest contains no pixels")]
    EmptyRoi,
    #[error("expected a {expected:?} canonical image, got {actual:?}")]
    SizeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
}
