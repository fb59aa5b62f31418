//! Blocking HTTP client for the service.

use chromatwin::store::{ExperimentRecord, RecordFilter, Source};
use serde::de::DeserializeOwned;
use ureq::http::Response;
use ureq::Body;

use crate::api::{
    ErrorBody, ImportResponse, IngestMeta, IngestResponse, RecordInput, SubmitResponse, SuggestRequest,
    SuggestResponse,
};
use crate::error::{CliError, ErrorKind};

pub struct Client {
    base: String,
    agent: ureq::Agent,
}

fn filter_pairs(f: &RecordFilter) -> Vec<(&'static str, String)> {
    let mut q = Vec::new();
    if let Some(v) = &f.contributor {
        q.push(("contributor", v.clone()));
    }
    if let Some(v) = &f.institution {
        q.push(("institution", v.clone()));
    }
    if let Some(v) = &f.campaign_tag {
        q.push(("campaign", v.clone()));
    }
    if let Some(v) = f.since {
        q.push(("since", v.to_string()));
    }
    if let Some(v) = f.until {
        q.push(("until", v.to_string()));
    }
    if let Some(v) = f.source {
        q.push(("source", Source::as_str(v).to_string()));
    }
    q
}

fn transport(e: ureq::Error) -> CliError {
    CliError::storage(format!("service unreachable: {e}"))
}

fn read_text(resp: &mut Response<Body>) -> Result<String, CliError> {
    resp.body_mut()
        .with_config()
        .limit(u64::MAX)
        .read_to_string()
        .map_err(transport)
}

/// Maps a non-2xx response onto the local error categories.
fn api_error(status: u16, text: &str) -> CliError {
    let Ok(body) = serde_json::from_str::<ErrorBody>(text) else {
        return CliError::storage(format!("service returned {status}: {text}"));
    };
    if body.error == "no_records" {
        return crate::error::no_records();
    }
    let kind = match body.error.as_str() {
        "vision" => ErrorKind::Vision,
        "model" => ErrorKind::Model,
        "validation" => ErrorKind::Usage,
        _ => ErrorKind::Storage,
    };
    CliError::new(kind, body.message)
}

fn finish<T: DeserializeOwned>(resp: Result<Response<Body>, ureq::Error>) -> Result<T, CliError> {
    let text = finish_text(resp)?;
    serde_json::from_str(&text).map_err(|e| CliError::storage(format!("malformed service response: {e}")))
}

fn finish_text(resp: Result<Response<Body>, ureq::Error>) -> Result<String, CliError> {
    let mut resp = resp.map_err(transport)?;
    let status = resp.status().as_u16();
    let text = read_text(&mut resp)?;
    if (200..300).contains(&status) {
        Ok(text)
    } else {
        Err(api_error(status, &text))
    }
}

impl Client {
    pub fn new(base: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            agent,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn post_json<B: serde::Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, CliError> {
        let bytes = serde_json::to_vec(body).map_err(|e| CliError::usage(e.to_string()))?;
        finish(
            self.agent
                .post(&self.url(path))
                .header("content-type", "application/json")
                .send(&bytes[..]),
        )
    }

    pub fn submit(&self, input: &RecordInput) -> Result<SubmitResponse, CliError> {
        self.post_json("/records", input)
    }

    pub fn suggest(&self, req: &SuggestRequest) -> Result<SuggestResponse, CliError> {
        self.post_json("/suggest", req)
    }

    pub fn query(&self, f: &RecordFilter) -> Result<Vec<ExperimentRecord>, CliError> {
        let mut req = self.agent.get(&self.url("/records"));
        for (k, v) in filter_pairs(f) {
            req = req.query(k, v);
        }
        finish(req.call())
    }

    pub fn export_csv(&self, f: &RecordFilter) -> Result<String, CliError> {
        let mut req = self.agent.get(&self.url("/export.csv"));
        for (k, v) in filter_pairs(f) {
            req = req.query(k, v);
        }
        finish_text(req.call())
    }

    pub fn import_csv(&self, text: &str) -> Result<usize, CliError> {
        let resp: ImportResponse = finish(
            self.agent
                .post(&self.url("/import"))
                .header("content-type", "text/csv")
                .send(text.as_bytes()),
        )?;
        Ok(resp.count)
    }

    pub fn ingest(&self, image: &[u8], meta: &IngestMeta) -> Result<IngestResponse, CliError> {
        let boundary = "chromatwin-form-boundary-7d4f1a2b";
        let mut body = Vec::with_capacity(image.len() + 1024);
        let mut text_part = |name: &str, value: &str| {
            body.extend_from_slice(
                format!("--{boundary}\r\nContent-Disposition: form-data; name=\"{name}\"\r\n\r\n{value}\r\n").as_bytes(),
            );
        };
        text_part("recipe", &meta.recipe.to_string());
        text_part("contributor", &meta.contributor);
        text_part("institution", &meta.institution);
        if let Some(tag) = &meta.campaign_tag {
            text_part("campaign_tag", tag);
        }
        body.extend_from_slice(
            format!(
                "--{boundary}\r\nContent-Disposition: form-data; name=\"image\"; filename=\"photo\"\r\n\
                 Content-Type: application/octet-stream\r\n\r\n"
            )
            .as_bytes(),
        );
        body.extend_from_slice(image);
        body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
        finish(
            self.agent
                .post(&self.url("/ingest"))
                .header("content-type", format!("multipart/form-data; boundary={boundary}"))
                .send(&body[..]),
        )
    }
}
