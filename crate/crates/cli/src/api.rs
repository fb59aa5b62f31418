//! JSON bodies exchanged with the service. Field names mirror the CSV header.

use chromatwin::acquisition::SuggestionPair;
use chromatwin::gpr::HyperPolicy;
use chromatwin::recipe::Recipe;
use chromatwin::store::{FieldError, NewRecord, RecordFilter, Source};
use chromatwin::vision::Diagnostics;
use chromatwin::ColorRgb;
use serde::{Deserialize, Serialize};

fn direct_rgb() -> Source {
    Source::DirectRgb
}

/// A record as submitted; the server assigns id and timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordInput {
    #[serde(flatten)]
    pub recipe: Recipe,
    #[serde(flatten)]
    pub measured: ColorRgb,
    pub contributor: String,
    #[serde(default)]
    pub institution: String,
    #[serde(default = "direct_rgb")]
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campaign_tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_digest: Option<String>,
}

impl RecordInput {
    pub fn into_new_record(self) -> NewRecord {
        let mut rec = NewRecord::new(self.recipe, self.measured, self.contributor, self.source)
            .institution(self.institution);
        if let Some(tag) = self.campaign_tag {
            rec = rec.campaign(tag);
        }
        if let Some(d) = self.image_digest {
            rec = rec.image_digest(d);
        }
        rec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub id: u64,
    /// Earlier records with the same recipe.
    pub repeat_of: Vec<u64>,
}

/// Metadata accompanying an uploaded photo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestMeta {
    pub recipe: Recipe,
    pub contributor: String,
    #[serde(default)]
    pub institution: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campaign_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestResponse {
    pub id: u64,
    pub measured_rgb: [f64; 3],
    pub diagnostics: Diagnostics,
    pub repeat_of: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestRequest {
    pub target_rgb: [f64; 3],
    #[serde(default)]
    pub filter: RecordFilter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_drops: Option<u32>,
    /// Overrides the server's hyperparameter policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper: Option<HyperPolicy>,
}

pub type SuggestResponse = SuggestionPair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportResponse {
    pub count: usize,
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    /// One of `validation`, `vision`, `storage`, `model`, `no_records`.
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<FieldError>>,
    /// Markers found, on vision rejections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub found: Option<usize>,
}
