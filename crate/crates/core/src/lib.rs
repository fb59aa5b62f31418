//! Collaborative dye-mixing self-driving lab.
//!
//! * [`recipe`]: the discrete four-dye design space.
//! * [`gpr`]: exact single-channel Gaussian-process regression.
//! * [`acquisition`]: optimal and expected-improvement recipe suggestions.
//! * [`vision`]: fiducial template, marker detection, rectification and ROI color.
//! * [`store`]: append-only experiment record log with CSV exchange.
//! * [`twin`]: synthetic dye oracle and solo/collaborative campaign harnesses.

pub mod acquisition;
pub mod color;
pub mod gpr;
mod linalg;
pub mod recipe;
pub mod store;
pub mod twin;
pub mod vision;

pub use acquisition::{suggest, ColorModel, ColorPrediction, ErrorMoments, SuggestionPair};
pub use color::{ColorRgb, TargetColor};
pub use gpr::{HyperPolicy, KernelParams};
pub use recipe::{DesignSpace, Recipe};
pub use store::{ExperimentRecord, NewRecord, RecordFilter, Source, Store};
pub use vision::{Image, TemplateGeometry};
