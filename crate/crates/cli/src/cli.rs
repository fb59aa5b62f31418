//! Argument parsing and command dispatch.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chromatwin::color::default_targets;
use chromatwin::gpr::HyperPolicy;
use chromatwin::recipe::{DesignSpace, Recipe};
use chromatwin::store::{ExperimentRecord, RecordFilter, Source, Store};
use chromatwin::twin::{
    self, campaign_csv, CampaignConfig, CampaignResult, OracleConfig, Policy,
};
use chromatwin::vision::{generate_template, TemplateGeometry};
use chromatwin::{ColorRgb, TargetColor};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::api::{IngestMeta, RecordInput, SubmitResponse, SuggestRequest};
use crate::client::Client;
use crate::error::CliError;
use crate::ops;
use crate::render::{self, ComparisonRow, Format};
use crate::service::{self, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "chromatwin", version, about = "Collaborative dye-mixing lab: templates, records, suggestions, simulation")]
pub struct Cli {
    /// Directory holding the local record log.
    #[arg(long, global = true, env = "CHROMATWIN_DATA_DIR", default_value = "chromatwin-data")]
    pub data_dir: PathBuf,
    /// Talk to a running service instead of the local log.
    #[arg(long, global = true)]
    pub url: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed for every random choice (oracle noise).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the printable template (PNG if the path ends in .png, PPM otherwise).
    Template {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        geometry: GeometryArgs,
    },
    /// Measure a photographed sample and record it.
    Ingest {
        image: PathBuf,
        /// Drop counts as red,yellow,blue,green.
        #[arg(long)]
        recipe: Recipe,
        #[command(flatten)]
        meta: MetaArgs,
        #[command(flatten)]
        geometry: GeometryArgs,
    },
    /// Record a color measured by other means.
    Submit {
        #[arg(long)]
        recipe: Recipe,
        /// Measured color as R,G,B.
        #[arg(long)]
        rgb: ColorRgb,
        #[arg(long, default_value = "direct-rgb")]
        source: Source,
        #[command(flatten)]
        meta: MetaArgs,
    },
    /// List records.
    Query {
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Write records as CSV.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Load records from a CSV export ("-" reads stdin).
    Import { file: PathBuf },
    /// Suggest the next recipe for a target color.
    Suggest {
        /// Target as R,G,B.
        target: TargetColor,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long)]
        max_drops: Option<u32>,
        #[arg(long, value_enum)]
        hyper: Option<HyperChoice>,
    },
    /// Run a recipe through the synthetic dye oracle.
    Simulate {
        recipe: Recipe,
        #[arg(long)]
        no_noise: bool,
    },
    /// Run solo or collaborative campaigns against the oracle.
    Campaign {
        #[arg(long, value_enum, default_value_t = CampaignMode::Collab)]
        mode: CampaignMode,
        /// Target as R,G,B; repeat for several. Defaults to the four team colors.
        #[arg(long = "target")]
        targets: Vec<TargetColor>,
        #[arg(long, default_value_t = 10)]
        iterations: usize,
        #[arg(long, value_enum, default_value_t = PolicyChoice::Optimal)]
        policy: PolicyChoice,
        #[arg(long)]
        max_drops: Option<u32>,
        #[arg(long)]
        no_noise: bool,
        /// Runs with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        repeat: u64,
        /// Also write the per-step CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API over the local log.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[command(flatten)]
        geometry: GeometryArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    #[arg(long, default_value_t = 480)]
    pub width: usize,
    #[arg(long, default_value_t = 640)]
    pub height: usize,
    #[arg(long, default_value_t = 60)]
    pub marker_size: usize,
    #[arg(long, default_value_t = 20)]
    pub margin: usize,
    #[arg(long, default_value_t = 0.25)]
    pub roi_fraction: f64,
}

impl GeometryArgs {
    pub fn geometry(&self) -> Result<TemplateGeometry, CliError> {
        Ok(TemplateGeometry::layout(
            self.width,
            self.height,
            self.marker_size,
            self.margin,
            self.roi_fraction,
        )?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct MetaArgs {
    #[arg(long)]
    pub contributor: String,
    #[arg(long, default_value = "")]
    pub institution: String,
    #[arg(long = "campaign")]
    pub campaign_tag: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub contributor: Option<String>,
    #[arg(long)]
    pub institution: Option<String>,
    #[arg(long = "campaign")]
    pub campaign_tag: Option<String>,
    /// Earliest acceptance time, seconds since the epoch.
    #[arg(long)]
    pub since: Option<u64>,
    #[arg(long)]
    pub until: Option<u64>,
    #[arg(long)]
    pub source: Option<Source>,
}

impl FilterArgs {
    pub fn filter(&self) -> RecordFilter {
        RecordFilter {
            contributor: self.contributor.clone(),
            institution: self.institution.clone(),
            campaign_tag: self.campaign_tag.clone(),
            since: self.since,
            until: self.until,
            source: self.source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HyperChoice {
    /// Default kernel parameters for every channel.
    Fixed,
    /// Marginal-likelihood grid search per channel (the default).
    Grid,
}

impl HyperChoice {
    fn policy(self) -> HyperPolicy {
        match self {
            HyperChoice::Fixed => HyperPolicy::fixed_default(),
            HyperChoice::Grid => HyperPolicy::default_grid(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CampaignMode {
    Solo,
    Collab,
    /// Solo and collaborative runs side by side, averaged over --repeat seeds.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyChoice {
    Optimal,
    Exploration,
}

impl From<PolicyChoice> for Policy {
    fn from(p: PolicyChoice) -> Self {
        match p {
            PolicyChoice::Optimal => Policy::Optimal,
            PolicyChoice::Exploration => Policy::Exploration,
        }
    }
}

/// Where records live: a local log or a remote service.
pub enum Backend {
    Local(Store),
    Remote(Client),
}

impl Backend {
    pub fn open(cli: &Cli) -> Result<Backend, CliError> {
        match &cli.url {
            Some(url) => Ok(Backend::Remote(Client::new(url.clone()))),
            None => Ok(Backend::Local(Store::open(&cli.data_dir)?)),
        }
    }

    pub fn submit(&self, input: RecordInput) -> Result<SubmitResponse, CliError> {
        match self {
            Backend::Local(s) => Ok(ops::submit(s, input)?),
            Backend::Remote(c) => c.submit(&input),
        }
    }

    pub fn query(&self, f: &RecordFilter) -> Result<Vec<ExperimentRecord>, CliError> {
        match self {
            Backend::Local(s) => Ok(s.query(f)),
            Backend::Remote(c) => c.query(f),
        }
    }

    pub fn export_csv(&self, f: &RecordFilter) -> Result<String, CliError> {
        match self {
            Backend::Local(s) => Ok(s.export_csv(f)),
            Backend::Remote(c) => c.export_csv(f),
        }
    }

    pub fn import_csv(&self, text: &str) -> Result<usize, CliError> {
        match self {
            Backend::Local(s) => Ok(s.import_csv(text)?),
            Backend::Remote(c) => c.import_csv(text),
        }
    }

    pub fn suggest(&self, req: &SuggestRequest) -> Result<chromatwin::SuggestionPair, CliError> {
        match self {
            Backend::Local(s) => Ok(ops::suggest(s, req, &HyperPolicy::default())?),
            Backend::Remote(c) => c.suggest(req),
        }
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::storage(format!("cannot write {}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        return Ok(buf);
    }
    std::fs::read(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

fn oracle(seed: u64, no_noise: bool) -> OracleConfig {
    let base = if no_noise { OracleConfig::noise_free() } else { OracleConfig::default() };
    base.with_seed(seed)
}

/// Runs one parsed command, writing its output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let text = execute(cli)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    let format = cli.format;
    match &cli.command {
        Command::Template { out, geometry } => {
            let g = geometry.geometry()?;
            let img = generate_template(&g)?;
            let bytes = if is_png(out) { img.to_png()? } else { img.to_ppm() };
            write_bytes(out, &bytes)?;
            Ok(match format {
                Format::Json => render::json(&serde_json::json!({ "path": out, "geometry": g })),
                _ => format!(
                    "wrote {} ({}x{} px, markers {} px, ROI fraction {})\n",
                    out.display(),
                    g.width,
                    g.height,
                    g.marker_size,
                    g.roi_fraction
                ),
            })
        }
        Command::Ingest {
            image,
            recipe,
            meta,
            geometry,
        } => {
            let bytes = read_bytes(image)?;
            let meta = IngestMeta {
                recipe: *recipe,
                contributor: meta.contributor.clone(),
                institution: meta.institution.clone(),
                campaign_tag: meta.campaign_tag.clone(),
            };
            let resp = match Backend::open(cli)? {
                Backend::Local(store) => ops::ingest(&store, &geometry.geometry()?, &bytes, meta)?,
                Backend::Remote(c) => c.ingest(&bytes, &meta)?,
            };
            Ok(render::ingest(&resp, &recipe.to_string(), format))
        }
        Command::Submit {
            recipe,
            rgb,
            source,
            meta,
        } => {
            let input = RecordInput {
                recipe: *recipe,
                measured: *rgb,
                contributor: meta.contributor.clone(),
                institution: meta.institution.clone(),
                source: *source,
                campaign_tag: meta.campaign_tag.clone(),
                image_digest: None,
            };
            let resp = Backend::open(cli)?.submit(input)?;
            Ok(render::submit(&resp, &recipe.to_string(), format))
        }
        Command::Query { filter } => {
            let rs = Backend::open(cli)?.query(&filter.filter())?;
            Ok(render::records(&rs, format))
        }
        Command::Export { out, filter } => {
            let csv = Backend::open(cli)?.export_csv(&filter.filter())?;
            match out {
                Some(path) => {
                    write_bytes(path, csv.as_bytes())?;
                    Ok(String::new())
                }
                None => Ok(csv),
            }
        }
        Command::Import { file } => {
            let bytes = read_bytes(file)?;
            let text = String::from_utf8(bytes).map_err(|_| CliError::usage("CSV input is not UTF-8"))?;
            let count = Backend::open(cli)?.import_csv(&text)?;
            Ok(match format {
                Format::Json => render::json(&crate::api::ImportResponse { count }),
                _ => format!("imported {count} record(s)\n"),
            })
        }
        Command::Suggest {
            target,
            filter,
            max_drops,
            hyper,
        } => {
            let req = SuggestRequest {
                target_rgb: target.channels(),
                filter: filter.filter(),
                max_drops: *max_drops,
                hyper: hyper.map(HyperChoice::policy),
            };
            let pair = Backend::open(cli)?.suggest(&req)?;
            Ok(render::suggestion(&pair, format))
        }
        Command::Simulate { recipe, no_noise } => {
            let cfg = oracle(cli.seed, *no_noise);
            let c = twin::simulate_color(recipe, &cfg).map_err(|e| CliError::usage(e.to_string()))?;
            Ok(render::simulated(&c, &recipe.to_string(), &cfg, format))
        }
        Command::Campaign {
            mode,
            targets,
            iterations,
            policy,
            max_drops,
            no_noise,
            repeat,
            out,
        } => {
            let named: Vec<(String, TargetColor)> = if targets.is_empty() {
                default_targets().iter().map(|(n, t)| (n.to_string(), *t)).collect()
            } else {
                targets.iter().map(|t| (t.to_string(), *t)).collect()
            };
            let make = |seed: u64| {
                let mut c = CampaignConfig::new(*iterations, oracle(seed, *no_noise)).policy((*policy).into());
                if let Some(m) = max_drops {
                    c.space = DesignSpace::new(*m);
                }
                c
            };
            let seeds = cli.seed..cli.seed + (*repeat).max(1);
            match mode {
                CampaignMode::Compare => {
                    let rows = compare(&named, seeds, make)?;
                    Ok(render::comparison(&rows, format))
                }
                CampaignMode::Solo | CampaignMode::Collab => {
                    let mut all: Vec<CampaignResult> = Vec::new();
                    for seed in seeds {
                        let cfg = make(seed);
                        if *mode == CampaignMode::Collab {
                            let ts: Vec<TargetColor> = named.iter().map(|(_, t)| *t).collect();
                            all.extend(twin::run_collaborative_campaign(&ts, &cfg)?);
                        } else {
                            for (_, t) in &named {
                                all.push(twin::run_solo_campaign(*t, &cfg)?);
                            }
                        }
                    }
                    let csv = campaign_csv(&all);
                    if let Some(path) = out {
                        write_bytes(path, csv.as_bytes())?;
                    }
                    Ok(match format {
                        Format::Csv => csv,
                        Format::Json => render::json(&all),
                        Format::Text => render::campaign_table(&all),
                    })
                }
            }
        }
        Command::Serve { port, bind, geometry } => {
            serve(cli, bind, *port, geometry)?;
            Ok(String::new())
        }
    }
}

fn compare(
    named: &[(String, TargetColor)],
    seeds: std::ops::Range<u64>,
    make: impl Fn(u64) -> CampaignConfig,
) -> Result<Vec<ComparisonRow>, CliError> {
    let ts: Vec<TargetColor> = named.iter().map(|(_, t)| *t).collect();
    let mut solo = vec![0.0; named.len()];
    let mut collab = vec![0.0; named.len()];
    let runs = seeds.end - seeds.start;
    for seed in seeds {
        let cfg = make(seed);
        let group = twin::run_collaborative_campaign(&ts, &cfg)?;
        for (i, t) in ts.iter().enumerate() {
            solo[i] += twin::run_solo_campaign(*t, &cfg)?.final_best_error();
            collab[i] += group[i].final_best_error();
        }
    }
    let n = runs as f64;
    Ok(named
        .iter()
        .enumerate()
        .map(|(i, (name, _))| ComparisonRow {
            target: name.clone(),
            solo_mean: solo[i] / n,
            collab_mean: collab[i] / n,
            delta: (collab[i] - solo[i]) / n,
            runs: runs as usize,
        })
        .collect())
}

fn serve(cli: &Cli, bind: &str, port: u16, geometry: &GeometryArgs) -> Result<(), CliError> {
    let config = ServiceConfig {
        geometry: geometry.geometry()?,
        hyper: HyperPolicy::default(),
    };
    let store = Arc::new(Store::open(&cli.data_dir)?);
    let addr = format!("{bind}:{port}");
    let listener = service::bind(&addr).map_err(|e| CliError::usage(format!("cannot listen on {addr}: {e}")))?;
    let local = listener.local_addr()?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    eprintln!("listening on http://{local} (data in {})", cli.data_dir.display());
    rt.block_on(service::serve_until(listener, service::router(store, config), async {
        let _ = tokio::signal::ctrl_c().await;
    }))?;
    Ok(())
}
