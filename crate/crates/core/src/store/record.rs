use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::color::ColorRgb;
use crate::recipe::{validate_recipe, DesignSpace, Recipe};

/// How a measured color entered the store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "image")]
    Image,
    #[serde(rename = "direct-rgb")]
    DirectRgb,
    #[serde(rename = "simulated")]
    Simulated,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Image => "image",
            Source::DirectRgb => "direct-rgb",
            Source::Simulated => "simulated",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "image" => Ok(Source::Image),
            "direct-rgb" => Ok(Source::DirectRgb),
            "simulated" => Ok(Source::Simulated),
            other => Err(format!("unknown source {other:?}")),
        }
    }
}

/// An accepted, immutable experiment record.
///
/// Serialized flat, with field names matching the CSV export header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub id: u64,
    #[serde(flatten)]
    pub recipe: Recipe,
    #[serde(flatten)]
    pub measured: ColorRgb,
    pub contributor: String,
    pub institution: String,
    /// Seconds since the Unix epoch, assigned by the store.
    pub timestamp: u64,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campaign_tag: Option<String>,
}

/// A record as submitted, before the store assigns id and timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewRecord {
    #[serde(flatten)]
    pub recipe: Recipe,
    #[serde(flatten)]
    pub measured: ColorRgb,
    pub contributor: String,
    #[serde(default)]
    pub institution: String,
    #[serde(default = "default_source")]
    pub source: Source,
    #[serde(default)]
    pub image_digest: Option<String>,
    #[serde(default)]
    pub campaign_tag: Option<String>,
}

fn default_source() -> Source {
    Source::DirectRgb
}

impl NewRecord {
    pub fn new(recipe: Recipe, measured: ColorRgb, contributor: impl Into<String>, source: Source) -> Self {
        NewRecord {
            recipe,
            measured,
            contributor: contributor.into(),
            institution: String::new(),
            source,
            image_digest: None,
            campaign_tag: None,
        }
    }

    pub fn institution(mut self, institution: impl Into<String>) -> Self {
        self.institution = institution.into();
        self
    }

    pub fn campaign(mut self, tag: impl Into<String>) -> Self {
        self.campaign_tag = Some(tag.into());
        self
    }

    pub fn image_digest(mut self, digest: impl Into<String>) -> Self {
        self.image_digest = Some(digest.into());
        self
    }

    /// Every field problem at once, empty when the record is acceptable.
    pub fn validate(&self, space: DesignSpace) -> Vec<FieldError> {
        let mut errors = Vec::new();
        if let Err(e) = validate_recipe(&self.recipe, space) {
            let field = match e {
                crate::recipe::RecipeError::OutOfRange { dye, .. } => dye.name(),
                _ => "recipe",
            };
            errors.push(FieldError::new(field, e.to_string()));
        }
        for (name, v) in ["r", "g", "b"].iter().zip(self.measured.channels()) {
            if !v.is_finite() {
                errors.push(FieldError::new(*name, "measured channel must be finite"));
            }
        }
        if self.contributor.trim().is_empty() {
            errors.push(FieldError::new("contributor", "must not be empty"));
        }
        errors
    }

    pub(crate) fn normalized(mut self) -> Self {
        if self.campaign_tag.as_deref().is_some_and(str::is_empty) {
            self.campaign_tag = None;
        }
        if self.image_digest.as_deref().is_some_and(str::is_empty) {
            self.image_digest = None;
        }
        self
    }

    pub(crate) fn accept(self, id: u64, timestamp: u64) -> ExperimentRecord {
        ExperimentRecord {
            id,
            recipe: self.recipe,
            measured: self.measured,
            contributor: self.contributor,
            institution: self.institution,
            timestamp,
            source: self.source,
            image_digest: self.image_digest,
            campaign_tag: self.campaign_tag,
        }
    }
}

impl From<&ExperimentRecord> for NewRecord {
    fn from(r: &ExperimentRecord) -> Self {
        NewRecord {
            recipe: r.recipe,
            measured: r.measured,
            contributor: r.contributor.clone(),
            institution: r.institution.clone(),
            source: r.source,
            image_digest: r.image_digest.clone(),
            campaign_tag: r.campaign_tag.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Hex SHA-256 of raw image bytes.
pub fn image_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_is_flat() {
        let rec = NewRecord::new(Recipe::new(1, 2, 3, 4), ColorRgb::new(5.0, 6.0, 7.5), "ana", Source::DirectRgb)
            .accept(9, 100);
        let v: serde_json::Value = serde_json::to_value(&rec).unwrap();
        assert_eq!(v["red"], 1);
        assert_eq!(v["green"], 4);
        assert_eq!(v["b"], 7.5);
        assert_eq!(v["source"], "direct-rgb");
        let back: ExperimentRecord = serde_json::from_value(v).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn validation_lists_all_fields() {
        let bad = NewRecord::new(Recipe::new(21, 0, 0, 0), ColorRgb::new(f64::NAN, 0.0, 0.0), " ", Source::Image);
        let errs = bad.validate(DesignSpace::default());
        let fields: Vec<_> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, vec!["red", "r", "contributor"]);
    }

    #[test]
    fn digest_is_sha256_hex() {
        assert_eq!(
            image_digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
