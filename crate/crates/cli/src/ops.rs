//! Operations shared by local commands and service handlers.

use chromatwin::acquisition::{self, AcquisitionError, SuggestionPair};
use chromatwin::gpr::HyperPolicy;
use chromatwin::recipe::DesignSpace;
use chromatwin::store::{image_digest, NewRecord, Source, Store, StoreError};
use chromatwin::vision::{process_submission, Image, TemplateGeometry, VisionError};
use chromatwin::TargetColor;
use thiserror::Error;

use crate::api::{IngestMeta, IngestResponse, RecordInput, SubmitResponse, SuggestRequest};

#[derive(Debug, Error)]
pub enum OpError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Vision(#[from] VisionError),
    #[error(transparent)]
    Model(#[from] AcquisitionError),
    #[error("{0}")]
    Invalid(String),
}

fn submit_new(store: &Store, rec: NewRecord) -> Result<SubmitResponse, OpError> {
    let recipe = rec.recipe;
    let id = store.submit(rec)?;
    let repeat_of = store
        .find_by_recipe(&recipe)
        .into_iter()
        .map(|r| r.id)
        .filter(|&other| other < id)
        .collect();
    Ok(SubmitResponse { id, repeat_of })
}

pub fn submit(store: &Store, input: RecordInput) -> Result<SubmitResponse, OpError> {
    submit_new(store, input.into_new_record())
}

/// Decodes the photo, measures the ROI color and stores the record.
pub fn ingest(
    store: &Store,
    geometry: &TemplateGeometry,
    image_bytes: &[u8],
    meta: IngestMeta,
) -> Result<IngestResponse, OpError> {
    let problems: Vec<String> = NewRecord::new(meta.recipe, chromatwin::ColorRgb::new(0.0, 0.0, 0.0), &meta.contributor, Source::Image)
        .validate(store.space())
        .iter()
        .map(ToString::to_string)
        .collect();
    if !problems.is_empty() {
        return Err(OpError::Invalid(problems.join("; ")));
    }
    let photo = Image::decode(image_bytes)?;
    let sub = process_submission(&photo, geometry)?;
    let mut rec = NewRecord::new(meta.recipe, sub.color, meta.contributor, Source::Image)
        .institution(meta.institution)
        .image_digest(image_digest(image_bytes));
    if let Some(tag) = meta.campaign_tag {
        rec = rec.campaign(tag);
    }
    let saved = submit_new(store, rec)?;
    Ok(IngestResponse {
        id: saved.id,
        measured_rgb: sub.color.channels(),
        diagnostics: sub.diagnostics,
        repeat_of: saved.repeat_of,
    })
}

pub fn suggest(store: &Store, req: &SuggestRequest, default_hyper: &HyperPolicy) -> Result<SuggestionPair, OpError> {
    let [r, g, b] = req.target_rgb;
    let target = TargetColor::new(r, g, b).map_err(|e| OpError::Invalid(e.to_string()))?;
    let space = req.max_drops.map_or_else(DesignSpace::default, DesignSpace::new);
    let hyper = req.hyper.as_ref().unwrap_or(default_hyper);
    let records = store.snapshot();
    Ok(acquisition::suggest(&records, &target, space, &req.filter, hyper)?)
}
