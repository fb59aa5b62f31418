//! Solo and collaborative active-learning campaigns against the oracle.
//!
//! Every campaign starts by measuring the seven seed recipes (iteration 0).
//! Each later iteration retrains on the store, asks for a suggestion, runs
//! the chosen recipe through the oracle and appends the result.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::oracle::{error, Oracle, OracleConfig, OracleError};
use crate::acquisition::{self, AcquisitionError};
use crate::color::{ColorRgb, TargetColor};
use crate::gpr::HyperPolicy;
use crate::recipe::{seed_recipes, DesignSpace, Recipe};
use crate::store::{NewRecord, RecordFilter, Source, Store, StoreError};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("collaborative campaigns need exactly 4 targets, got {0}")]
    TargetCount(usize),
    #[error("cannot compare campaigns for different targets")]
    TargetMismatch,
}

/// Which suggestion gets executed each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    #[default]
    Optimal,
    Exploration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub iterations: usize,
    pub oracle: OracleConfig,
    pub policy: Policy,
    pub space: DesignSpace,
    pub hyper: HyperPolicy,
}

impl CampaignConfig {
    pub fn new(iterations: usize, oracle: OracleConfig) -> Self {
        CampaignConfig {
            iterations,
            oracle,
            policy: Policy::default(),
            space: DesignSpace::default(),
            hyper: HyperPolicy::default(),
        }
    }

    pub fn policy(mut self, policy: Policy) -> Self {
        self.policy = policy;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignStep {
    /// 0 for seed measurements, then 1, 2, ... per suggestion executed.
    pub iteration: usize,
    pub recipe: Recipe,
    pub measured: ColorRgb,
    pub error: f64,
    pub best_error: f64,
    /// Records the model was trained on; 0 for seeds.
    pub training_records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub agent: String,
    pub target: TargetColor,
    pub steps: Vec<CampaignStep>,
}

impl CampaignResult {
    fn new(agent: impl Into<String>, target: TargetColor) -> Self {
        CampaignResult {
            agent: agent.into(),
            target,
            steps: Vec::new(),
        }
    }

    fn push(&mut self, iteration: usize, recipe: Recipe, measured: ColorRgb, training_records: usize) {
        let e = error(&measured, &self.target);
        let best_error = self.steps.last().map_or(e, |s| s.best_error.min(e));
        self.steps.push(CampaignStep {
            iteration,
            recipe,
            measured,
            error: e,
            best_error,
            training_records,
        });
    }

    /// Best error after the last step.
    pub fn final_best_error(&self) -> f64 {
        self.steps.last().map_or(f64::INFINITY, |s| s.best_error)
    }

    /// Best-so-far error after each iteration, starting with the seed-only value at index 0.
    pub fn best_by_iteration(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for s in &self.steps {
            if s.iteration == out.len() {
                out.push(s.best_error);
            } else if let Some(last) = out.last_mut() {
                *last = s.best_error;
            }
        }
        out
    }

    pub fn iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iteration).max().unwrap_or(0)
    }
}

fn seed_store(store: &Store, oracle: &mut Oracle, tag: &str) -> Result<Vec<(Recipe, ColorRgb)>, CampaignError> {
    let mut seeds = Vec::new();
    for r in seed_recipes() {
        let c = oracle.measure(&r);
        store.submit(NewRecord::new(r, c, "seed", Source::Simulated).campaign(tag))?;
        seeds.push((r, c));
    }
    Ok(seeds)
}

fn step(
    store: &Store,
    oracle: &mut Oracle,
    agent: &str,
    target: &TargetColor,
    config: &CampaignConfig,
    tag: &str,
) -> Result<(Recipe, ColorRgb, usize), CampaignError> {
    let records = store.snapshot();
    let pair = acquisition::suggest(&records, target, config.space, &RecordFilter::all(), &config.hyper)?;
    let recipe = match config.policy {
        Policy::Optimal => pair.optimal.recipe,
        Policy::Exploration => pair.exploration.recipe,
    };
    let measured = oracle.measure(&recipe);
    store.submit(NewRecord::new(recipe, measured, agent, Source::Simulated).campaign(tag))?;
    Ok((recipe, measured, pair.training_records))
}

/// One researcher optimizing one target with a private store.
pub fn run_solo_campaign(target: TargetColor, config: &CampaignConfig) -> Result<CampaignResult, CampaignError> {
    let store = Store::in_memory();
    run_solo_campaign_in(&store, target, config)
}

/// As [`run_solo_campaign`], recording into the given (normally empty) store.
pub fn run_solo_campaign_in(
    store: &Store,
    target: TargetColor,
    config: &CampaignConfig,
) -> Result<CampaignResult, CampaignError> {
    let tag = "solo";
    let mut oracle = Oracle::new(config.oracle)?;
    let mut result = CampaignResult::new("solo", target);
    for (r, c) in seed_store(store, &mut oracle, tag)? {
        result.push(0, r, c, 0);
    }
    for it in 1..=config.iterations {
        let (r, c, n) = step(store, &mut oracle, "solo", &target, config, tag)?;
        result.push(it, r, c, n);
    }
    Ok(result)
}

/// Four researchers sharing one store, taking turns in order 1, 2, 3, 4, 1, ...
pub fn run_collaborative_campaign(
    targets: &[TargetColor],
    config: &CampaignConfig,
) -> Result<Vec<CampaignResult>, CampaignError> {
    let store = Store::in_memory();
    run_collaborative_campaign_in(&store, targets, config)
}

pub fn run_collaborative_campaign_in(
    store: &Store,
    targets: &[TargetColor],
    config: &CampaignConfig,
) -> Result<Vec<CampaignResult>, CampaignError> {
    if targets.len() != 4 {
        return Err(CampaignError::TargetCount(targets.len()));
    }
    let tag = "collab";
    let mut oracle = Oracle::new(config.oracle)?;
    let mut results: Vec<CampaignResult> = targets
        .iter()
        .enumerate()
        .map(|(i, t)| CampaignResult::new(format!("agent {}", i + 1), *t))
        .collect();
    for (r, c) in seed_store(store, &mut oracle, tag)? {
        for res in results.iter_mut() {
            res.push(0, r, c, 0);
        }
    }
    for it in 1..=config.iterations {
        for res in results.iter_mut() {
            let (r, c, n) = step(store, &mut oracle, &res.agent.clone(), &res.target, config, tag)?;
            res.push(it, r, c, n);
        }
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignComparison {
    pub target: TargetColor,
    /// `(iteration, solo best, collaborative best)`.
    pub series: Vec<(usize, f64, f64)>,
    /// Collaborative minus solo final best error, over the common iterations.
    /// Negative means collaboration did better.
    pub final_delta: f64,
}

pub fn compare_campaigns(solo: &CampaignResult, collab: &CampaignResult) -> Result<CampaignComparison, CampaignError> {
    if solo.target != collab.target {
        return Err(CampaignError::TargetMismatch);
    }
    let a = solo.best_by_iteration();
    let b = collab.best_by_iteration();
    let series: Vec<(usize, f64, f64)> = a
        .iter()
        .zip(b.iter())
        .enumerate()
        .map(|(i, (s, c))| (i, *s, *c))
        .collect();
    let final_delta = series.last().map_or(0.0, |(_, s, c)| c - s);
    Ok(CampaignComparison {
        target: solo.target,
        series,
        final_delta,
    })
}

pub const CAMPAIGN_CSV_HEADER: &str =
    "iteration,agent,target_r,target_g,target_b,red,yellow,blue,green,r,g,b,error,best_error";

/// One row per step of every campaign.
pub fn campaign_csv(results: &[CampaignResult]) -> String {
    let mut out = String::from(CAMPAIGN_CSV_HEADER);
    out.push('\n');
    for res in results {
        let t = res.target.channels();
        for s in &res.steps {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.iteration,
                res.agent,
                t[0],
                t[1],
                t[2],
                s.recipe.red,
                s.recipe.yellow,
                s.recipe.blue,
                s.recipe.green,
                s.measured.r,
                s.measured.g,
                s.measured.b,
                s.error,
                s.best_error
            );
        }
    }
    out
}

/// Fixed-width table of best-so-far error per iteration, one column per campaign.
pub fn summary_table(results: &[CampaignResult]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:>9}", "iteration");
    for r in results {
        let _ = write!(out, " {:>14}", r.agent);
    }
    out.push('\n');
    let series: Vec<Vec<f64>> = results.iter().map(CampaignResult::best_by_iteration).collect();
    let rows = series.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..rows {
        let _ = write!(out, "{i:>9}");
        for s in &series {
            match s.get(i) {
                Some(v) => {
                    let _ = write!(out, " {v:>14.2}");
                }
                None => {
                    let _ = write!(out, " {:>14}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}
