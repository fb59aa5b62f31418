use serde::{Deserialize, Serialize};

use super::record::{ExperimentRecord, Source};

/// Conjunctive record filter; absent clauses match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contributor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub institution: Option<String>,
    #[serde(default, rename = "campaign", skip_serializing_if = "Option::is_none")]
    pub campaign_tag: Option<String>,
    /// Inclusive lower bound on the acceptance timestamp.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub since: Option<u64>,
    /// Inclusive upper bound on the acceptance timestamp.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
}

impl RecordFilter {
    pub fn all() -> Self {
        RecordFilter::default()
    }

    pub fn contributor(name: impl Into<String>) -> Self {
        RecordFilter {
            contributor: Some(name.into()),
            ..Default::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == RecordFilter::default()
    }

    pub fn matches(&self, r: &ExperimentRecord) -> bool {
        self.contributor.as_ref().map_or(true, |c| *c == r.contributor)
            && self.institution.as_ref().map_or(true, |i| *i == r.institution)
            && self
                .campaign_tag
                .as_ref()
                .map_or(true, |t| r.campaign_tag.as_ref() == Some(t))
            && self.since.map_or(true, |s| r.timestamp >= s)
            && self.until.map_or(true, |u| r.timestamp <= u)
            && self.source.map_or(true, |s| r.source == s)
    }
}
