//! Output formatting shared by local and remote commands.

use std::fmt::Write as _;

use chromatwin::acquisition::{RecipeSuggestion, SuggestionPair};
use chromatwin::store::ExperimentRecord;
use chromatwin::twin::{CampaignResult, OracleConfig};
use chromatwin::ColorRgb;
use serde::Serialize;

use crate::api::{IngestResponse, SubmitResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

pub fn json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

fn rgb(c: &ColorRgb) -> String {
    format!("{:.2} {:.2} {:.2}", c.r, c.g, c.b)
}

fn repeat_notice(recipe: &str, ids: &[u64]) -> String {
    let list: Vec<String> = ids.iter().map(u64::to_string).collect();
    format!("repeat: recipe {recipe} was already measured in record(s) {}\n", list.join(", "))
}

pub fn submit(r: &SubmitResponse, recipe: &str, format: Format) -> String {
    match format {
        Format::Json => json(r),
        Format::Csv => format!("id\n{}\n", r.id),
        Format::Text => {
            let mut s = format!("record {}\n", r.id);
            if !r.repeat_of.is_empty() {
                s.push_str(&repeat_notice(recipe, &r.repeat_of));
            }
            s
        }
    }
}

pub fn ingest(r: &IngestResponse, recipe: &str, format: Format) -> String {
    let [cr, cg, cb] = r.measured_rgb;
    match format {
        Format::Json => json(r),
        Format::Csv => format!("id,r,g,b\n{},{cr},{cg},{cb}\n", r.id),
        Format::Text => {
            let d = &r.diagnostics;
            let ids: Vec<String> = d.marker_ids.iter().map(usize::to_string).collect();
            let mut s = format!("record {} measured {cr:.2} {cg:.2} {cb:.2}\n", r.id);
            let _ = writeln!(
                s,
                "markers {} (ids {}), reprojection rms {:.3} px, roi {} px (fraction {}), {} pixels outside the photo",
                d.marker_count,
                ids.join(" "),
                d.reprojection_rms,
                d.roi_pixels,
                d.roi_fraction,
                d.out_of_source_pixels
            );
            if !r.repeat_of.is_empty() {
                s.push_str(&repeat_notice(recipe, &r.repeat_of));
            }
            s
        }
    }
}

const SUGGEST_HEADER: &str = "kind,red,yellow,blue,green,pred_r,pred_g,pred_b,sd_r,sd_g,sd_b,score,already_tested";

fn suggestion_row(kind: &str, s: &RecipeSuggestion) -> String {
    let r = &s.recipe;
    let m = &s.predicted.mean;
    let sd = &s.predicted.std_dev;
    format!(
        "{kind},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        r.red, r.yellow, r.blue, r.green, m.r, m.g, m.b, sd[0], sd[1], sd[2], s.score, s.already_tested
    )
}

fn suggestion_text(label: &str, score_name: &str, s: &RecipeSuggestion) -> String {
    let sd = &s.predicted.std_dev;
    let mut out = format!(
        "{label:<12} recipe {:<12} predicted {}  sd {:.2} {:.2} {:.2}  {score_name} {:.4}\n",
        s.recipe.to_string(),
        rgb(&s.predicted.mean),
        sd[0],
        sd[1],
        sd[2],
        s.score
    );
    if s.already_tested {
        let _ = writeln!(out, "{:<12} repeat: this recipe is already in the training records", "");
    }
    out
}

pub fn suggestion(p: &SuggestionPair, format: Format) -> String {
    match format {
        Format::Json => json(p),
        Format::Csv => {
            let mut s = format!("{SUGGEST_HEADER}\n");
            s.push_str(&suggestion_row("optimal", &p.optimal));
            s.push_str(&suggestion_row("exploration", &p.exploration));
            s
        }
        Format::Text => {
            let mut s = format!("target       {}\n", rgb(&p.target.color()));
            let _ = writeln!(
                s,
                "trained on   {} records (best #{}, predicted squared error {:.4}), max drops {}",
                p.training_records, p.best_record_id, p.best_predicted_error, p.max_drops
            );
            s.push_str(&suggestion_text("optimal", "sq-error", &p.optimal));
            s.push_str(&suggestion_text("exploration", "EI", &p.exploration));
            s
        }
    }
}

pub fn records(rs: &[ExperimentRecord], format: Format) -> String {
    match format {
        Format::Json => json(rs),
        Format::Csv => chromatwin::store::records_to_csv(rs),
        Format::Text => {
            let mut s = format!(
                "{:>6}  {:<12} {:<21} {:<16} {:<16} {:<11} {}\n",
                "id", "recipe", "measured", "contributor", "institution", "source", "campaign"
            );
            for r in rs {
                let _ = writeln!(
                    s,
                    "{:>6}  {:<12} {:<21} {:<16} {:<16} {:<11} {}",
                    r.id,
                    r.recipe.to_string(),
                    rgb(&r.measured),
                    r.contributor,
                    r.institution,
                    r.source.as_str(),
                    r.campaign_tag.as_deref().unwrap_or("-")
                );
            }
            let _ = writeln!(s, "{} record(s)", rs.len());
            s
        }
    }
}

pub fn simulated(c: &ColorRgb, recipe: &str, oracle: &OracleConfig, format: Format) -> String {
    match format {
        Format::Json => json(&serde_json::json!({
            "recipe": recipe,
            "rgb": c.channels(),
            "noise": oracle.noise,
            "seed": oracle.seed,
        })),
        Format::Csv => format!("r,g,b\n{},{},{}\n", c.r, c.g, c.b),
        Format::Text => format!("{}\n", rgb(c)),
    }
}

pub fn campaign_table(results: &[CampaignResult]) -> String {
    let mut s = chromatwin::twin::summary_table(results);
    for r in results {
        let _ = writeln!(
            s,
            "{}: target {}, final best error {:.3}",
            r.agent,
            rgb(&r.target.color()),
            r.final_best_error()
        );
    }
    s
}

/// Mean final best error per target over repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub target: String,
    pub solo_mean: f64,
    pub collab_mean: f64,
    pub delta: f64,
    pub runs: usize,
}

pub fn comparison(rows: &[ComparisonRow], format: Format) -> String {
    match format {
        Format::Json => json(rows),
        Format::Csv => {
            let mut s = String::from("target,solo_mean,collab_mean,delta,runs\n");
            for r in rows {
                let _ = writeln!(s, "\"{}\",{},{},{},{}", r.target, r.solo_mean, r.collab_mean, r.delta, r.runs);
            }
            s
        }
        Format::Text => {
            let mut s = format!("{:<20} {:>10} {:>12} {:>8} {:>5}\n", "target", "solo", "collab", "delta", "runs");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{:<20} {:>10.3} {:>12.3} {:>8.3} {:>5}",
                    r.target, r.solo_mean, r.collab_mean, r.delta, r.runs
                );
            }
            s
        }
    }
}
