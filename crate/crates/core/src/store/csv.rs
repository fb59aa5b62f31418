//! RFC 4180 CSV export and import of experiment records.

use csv::{QuoteStyle, ReaderBuilder, Terminator, WriterBuilder};

use super::record::{ExperimentRecord, NewRecord, Source};
use super::StoreError;
use crate::color::ColorRgb;
use crate::recipe::{DesignSpace, Recipe};

pub const CSV_HEADER: &str =
    "id,red,yellow,blue,green,r,g,b,contributor,institution,timestamp,source,campaign_tag";

const COLUMNS: usize = 13;

/// Header plus one RFC 4180 row per record, in the given order.
pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut w = WriterBuilder::new()
        .quote_style(QuoteStyle::Necessary)
        .terminator(Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
    for r in records {
        w.write_record([
            r.id.to_string(),
            r.recipe.red.to_string(),
            r.recipe.yellow.to_string(),
            r.recipe.blue.to_string(),
            r.recipe.green.to_string(),
            r.measured.r.to_string(),
            r.measured.g.to_string(),
            r.measured.b.to_string(),
            r.contributor.clone(),
            r.institution.clone(),
            r.timestamp.to_string(),
            r.source.to_string(),
            r.campaign_tag.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Parses and validates every row. The `id` column is informational; the
/// store assigns fresh ids on import. Timestamps are kept.
pub(crate) fn parse(text: &str, space: DesignSpace) -> Result<Vec<(NewRecord, Option<u64>)>, StoreError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| StoreError::Csv {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(StoreError::Csv {
            line: 1,
            message: format!("expected header {CSV_HEADER:?}"),
        });
    }

    let mut rows = Vec::new();
    for result in reader.records() {
        let row = result.map_err(|e| StoreError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |message: String| StoreError::Csv { line, message };
        if row.len() != COLUMNS {
            return Err(fail(format!("expected {COLUMNS} fields, found {}", row.len())));
        }
        let int = |i: usize, name: &str| -> Result<u64, StoreError> {
            row[i]
                .trim()
                .parse::<u64>()
                .map_err(|_| fail(format!("{name} {:?} is not a non-negative integer", &row[i])))
        };
        let real = |i: usize, name: &str| -> Result<f64, StoreError> {
            row[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| fail(format!("{name} {:?} is not a number", &row[i])))
        };
        let drops = |i: usize, name: &str| -> Result<u32, StoreError> {
            u32::try_from(int(i, name)?).map_err(|_| fail(format!("{name} drop count too large")))
        };

        int(0, "id")?;
        let recipe = Recipe::new(
            drops(1, "red")?,
            drops(2, "yellow")?,
            drops(3, "blue")?,
            drops(4, "green")?,
        );
        let measured = ColorRgb::new(real(5, "r")?, real(6, "g")?, real(7, "b")?);
        let timestamp = int(10, "timestamp")?;
        let source: Source = row[11].parse().map_err(fail)?;
        let tag = &row[12];
        let record = NewRecord {
            recipe,
            measured,
            contributor: row[8].to_string(),
            institution: row[9].to_string(),
            source,
            image_digest: None,
            campaign_tag: (!tag.is_empty()).then(|| tag.to_string()),
        };
        let problems = record.validate(space);
        if !problems.is_empty() {
            let msg = problems.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            return Err(fail(msg));
        }
        rows.push((record, Some(timestamp)));
    }
    Ok(rows)
}
