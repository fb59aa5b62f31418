//! Recipe suggestion over the full design space.
//!
//! Three independent channel GPs give a Gaussian prediction per RGB channel.
//! The optimal recipe minimizes the squared distance between the predicted
//! mean color and the target. The exploration recipe maximizes expected
//! improvement of the squared error `D = Σ (M_ch - t_ch)²`, using the exact
//! first two moments of `D` under channel independence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{ColorRgb, TargetColor};
use crate::gpr::{self, ChannelPrediction, GprError, HyperPolicy, KernelParams, TrainedChannelModel};
use crate::recipe::{DesignSpace, FeatureVector, Recipe};
use crate::store::{ExperimentRecord, RecordFilter};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AcquisitionError {
    #[error("no experiment records to train on; measure the seed recipes first")]
    EmptyRecords,
    #[error("expected improvement needs a non-negative scale, got {0}")]
    NegativeScale(f64),
    #[error(transparent)]
    Gpr(#[from] GprError),
}

/// Per-channel predictive means and standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorPrediction {
    pub mean: ColorRgb,
    pub std_dev: [f64; 3],
}

impl ColorPrediction {
    pub fn channel(&self, ch: usize) -> ChannelPrediction {
        ChannelPrediction {
            mean: self.mean.channels()[ch],
            std_dev: self.std_dev[ch],
        }
    }
}

/// Mean and standard deviation of the squared color error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMoments {
    pub mean: f64,
    pub std_dev: f64,
}

/// Three channel models trained on the same recipes.
#[derive(Debug, Clone)]
pub struct ColorModel {
    channels: [TrainedChannelModel; 3],
    space: DesignSpace,
    // All three channels share params and jitter, hence the same Cholesky factor.
    shared_factor: bool,
}

impl ColorModel {
    /// Fits R, G and B models on `(recipe, color)` pairs, resolving
    /// hyperparameters separately per channel.
    pub fn fit(
        samples: &[(Recipe, ColorRgb)],
        space: DesignSpace,
        policy: &HyperPolicy,
    ) -> Result<Self, AcquisitionError> {
        if samples.is_empty() {
            return Err(AcquisitionError::EmptyRecords);
        }
        let features: Vec<FeatureVector> = samples
            .iter()
            .map(|(r, _)| space.encode_unchecked(r))
            .collect();
        let fit_channel = |ch: usize| -> Result<TrainedChannelModel, GprError> {
            let y: Vec<f64> = samples.iter().map(|(_, c)| c.channels()[ch]).collect();
            let params = policy.resolve(&features, &y)?;
            gpr::fit(&features, &y, params)
        };
        let channels = [fit_channel(0)?, fit_channel(1)?, fit_channel(2)?];
        Ok(Self::from_channels(channels, space))
    }

    pub fn from_channels(channels: [TrainedChannelModel; 3], space: DesignSpace) -> Self {
        let shared_factor = channels.iter().all(|c| {
            c.params() == channels[0].params()
                && c.jitter() == channels[0].jitter()
                && c.features() == channels[0].features()
        });
        ColorModel {
            channels,
            space,
            shared_factor,
        }
    }

    pub fn channels(&self) -> &[TrainedChannelModel; 3] {
        &self.channels
    }

    pub fn space(&self) -> DesignSpace {
        self.space
    }

    pub fn training_size(&self) -> usize {
        self.channels[0].len()
    }

    pub fn channel_params(&self) -> [KernelParams; 3] {
        [
            *self.channels[0].params(),
            *self.channels[1].params(),
            *self.channels[2].params(),
        ]
    }

    fn predictor(&self) -> Predictor<'_> {
        Predictor {
            model: self,
            scratch: Vec::with_capacity(self.training_size()),
        }
    }
}

/// Reusable scratch space for repeated predictions.
struct Predictor<'a> {
    model: &'a ColorModel,
    scratch: Vec<f64>,
}

impl Predictor<'_> {
    fn mean(&mut self, r: &Recipe) -> ColorRgb {
        let x = self.model.space.encode_unchecked(r);
        let ch = &self.model.channels;
        let mut out = [0.0; 3];
        for (i, m) in ch.iter().enumerate() {
            if i == 0 || !self.model.shared_factor {
                m.cross_kernel(&x, &mut self.scratch);
            }
            out[i] = m.mean_from_cross(&self.scratch);
        }
        ColorRgb::from_channels(out)
    }

    fn predict(&mut self, r: &Recipe) -> ColorPrediction {
        let x = self.model.space.encode_unchecked(r);
        let ch = &self.model.channels;
        let mut mean = [0.0; 3];
        let mut std = [0.0; 3];
        if self.model.shared_factor {
            ch[0].cross_kernel(&x, &mut self.scratch);
            for (i, m) in ch.iter().enumerate() {
                mean[i] = m.mean_from_cross(&self.scratch);
            }
            let var = ch[0].variance_from_cross(&mut self.scratch);
            std = [var.max(0.0).sqrt(); 3];
        } else {
            for (i, m) in ch.iter().enumerate() {
                m.cross_kernel(&x, &mut self.scratch);
                mean[i] = m.mean_from_cross(&self.scratch);
                std[i] = m.variance_from_cross(&mut self.scratch).max(0.0).sqrt();
            }
        }
        ColorPrediction {
            mean: ColorRgb::from_channels(mean),
            std_dev: std,
        }
    }
}

/// Channel-wise prediction; means are not clamped to 0..=255.
pub fn predict_color(models: &ColorModel, r: &Recipe) -> ColorPrediction {
    models.predictor().predict(r)
}

/// Exact mean and standard deviation of `Σ (M_ch - t_ch)²` for independent
/// Gaussian channels `M_ch ~ N(μ_ch, σ_ch²)`.
pub fn error_moments(p: &ColorPrediction, t: &TargetColor) -> ErrorMoments {
    let mut mean = 0.0;
    let mut var = 0.0;
    for ((mu, s), tc) in p.mean.channels().iter().zip(p.std_dev).zip(t.channels()) {
        let d = mu - tc;
        let s2 = s * s;
        mean += d * d + s2;
        var += 4.0 * s2 * d * d + 2.0 * s2 * s2;
    }
    ErrorMoments {
        mean,
        std_dev: var.sqrt(),
    }
}

/// `‖μ - t‖²`, the mean-only objective of the optimal recipe.
pub fn squared_mean_error(p: &ColorPrediction, t: &TargetColor) -> f64 {
    p.mean.squared_distance(&t.color())
}

fn std_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn std_normal_cdf(u: f64) -> f64 {
    0.5 * libm::erfc(-u / std::f64::consts::SQRT_2)
}

/// Expected improvement `s φ(z/s) + z Φ(z/s)` for improvement `z` and scale
/// `s`; `max(z, 0)` when `s = 0`. Never negative.
pub fn expected_improvement(z: f64, s: f64) -> Result<f64, AcquisitionError> {
    if s < 0.0 || s.is_nan() {
        return Err(AcquisitionError::NegativeScale(s));
    }
    if s == 0.0 {
        return Ok(z.max(0.0));
    }
    let u = z / s;
    Ok((s * std_normal_pdf(u) + z * std_normal_cdf(u)).max(0.0))
}

/// Winner of an exhaustive scan, with the number of candidates visited.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanResult {
    pub recipe: Recipe,
    pub score: f64,
    pub evaluated: usize,
}

/// Lexicographically-first minimizer of the predicted squared error.
pub fn optimal_recipe(models: &ColorModel, t: &TargetColor, space: DesignSpace) -> ScanResult {
    let target = t.color();
    let mut predictor = models.predictor();
    let mut best: Option<(Recipe, f64)> = None;
    let mut evaluated = 0;
    for r in space.enumerate() {
        evaluated += 1;
        let score = predictor.mean(&r).squared_distance(&target);
        if best.map_or(true, |(_, b)| score < b) {
            best = Some((r, score));
        }
    }
    let (recipe, score) = best.expect("design space is never empty");
    ScanResult {
        recipe,
        score,
        evaluated,
    }
}

/// The record whose measured color is closest to the target; earliest wins ties.
pub fn best_record<'a>(records: &'a [ExperimentRecord], t: &TargetColor) -> Option<&'a ExperimentRecord> {
    let target = t.color();
    let mut best: Option<(&ExperimentRecord, f64)> = None;
    for rec in records {
        let e = rec.measured.squared_distance(&target);
        if best.map_or(true, |(_, b)| e < b) {
            best = Some((rec, e));
        }
    }
    best.map(|(r, _)| r)
}

/// Reference error for expected improvement: the model's expected squared
/// error at the best recorded recipe.
pub fn incumbent_error(models: &ColorModel, t: &TargetColor, records: &[ExperimentRecord]) -> Result<(u64, f64), AcquisitionError> {
    let best = best_record(records, t).ok_or(AcquisitionError::EmptyRecords)?;
    let d_best = error_moments(&predict_color(models, &best.recipe), t).mean;
    Ok((best.id, d_best))
}

/// Candidate maximizing expected improvement over the incumbent; the
/// lexicographically-first maximizer wins ties.
pub fn exploration_recipe(
    models: &ColorModel,
    t: &TargetColor,
    space: DesignSpace,
    records: &[ExperimentRecord],
) -> Result<ScanResult, AcquisitionError> {
    let (_, d_best) = incumbent_error(models, t, records)?;
    let mut predictor = models.predictor();
    let mut best: Option<(Recipe, f64)> = None;
    let mut evaluated = 0;
    for r in space.enumerate() {
        evaluated += 1;
        let m = error_moments(&predictor.predict(&r), t);
        let ei = expected_improvement(d_best - m.mean, m.std_dev)?;
        if best.map_or(true, |(_, b)| ei > b) {
            best = Some((r, ei));
        }
    }
    let (recipe, score) = best.expect("design space is never empty");
    Ok(ScanResult {
        recipe,
        score,
        evaluated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeSuggestion {
    pub recipe: Recipe,
    pub predicted: ColorPrediction,
    pub score: f64,
    /// The recipe already appears in the training records.
    pub already_tested: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionPair {
    pub target: TargetColor,
    pub max_drops: u32,
    pub training_records: usize,
    pub best_record_id: u64,
    pub best_predicted_error: f64,
    pub channel_params: [KernelParams; 3],
    /// Minimizes the predicted squared error; `score` is that error.
    pub optimal: RecipeSuggestion,
    /// Maximizes expected improvement; `score` is the EI value.
    pub exploration: RecipeSuggestion,
}

/// Trains fresh channel models on the filtered records and returns both the
/// optimal and the exploration recipe.
pub fn suggest(
    records: &[ExperimentRecord],
    t: &TargetColor,
    space: DesignSpace,
    filter: &RecordFilter,
    policy: &HyperPolicy,
) -> Result<SuggestionPair, AcquisitionError> {
    let selected: Vec<ExperimentRecord> = records
        .iter()
        .filter(|r| filter.matches(r))
        .cloned()
        .collect();
    if selected.is_empty() {
        return Err(AcquisitionError::EmptyRecords);
    }
    let samples: Vec<(Recipe, ColorRgb)> = selected.iter().map(|r| (r.recipe, r.measured)).collect();
    let models = ColorModel::fit(&samples, space, policy)?;
    let (best_record_id, d_best) = incumbent_error(&models, t, &selected)?;
    let target = t.color();

    // One fused pass; each candidate is predicted once and scored both ways.
    let mut predictor = models.predictor();
    let mut opt: Option<(Recipe, f64)> = None;
    let mut explore: Option<(Recipe, f64)> = None;
    for r in space.enumerate() {
        let p = predictor.predict(&r);
        let sq = p.mean.squared_distance(&target);
        if opt.map_or(true, |(_, b)| sq < b) {
            opt = Some((r, sq));
        }
        let m = error_moments(&p, t);
        let ei = expected_improvement(d_best - m.mean, m.std_dev)?;
        if explore.map_or(true, |(_, b)| ei > b) {
            explore = Some((r, ei));
        }
    }
    let (opt_recipe, opt_score) = opt.expect("design space is never empty");
    let (exp_recipe, exp_score) = explore.expect("design space is never empty");
    let tested = |r: &Recipe| selected.iter().any(|rec| rec.recipe == *r);

    Ok(SuggestionPair {
        target: *t,
        max_drops: space.max_drops,
        training_records: selected.len(),
        best_record_id,
        best_predicted_error: d_best,
        channel_params: models.channel_params(),
        optimal: RecipeSuggestion {
            recipe: opt_recipe,
            predicted: predict_color(&models, &opt_recipe),
            score: opt_score,
            already_tested: tested(&opt_recipe),
        },
        exploration: RecipeSuggestion {
            recipe: exp_recipe,
            predicted: predict_color(&models, &exp_recipe),
            score: exp_score,
            already_tested: tested(&exp_recipe),
        },
    })
}
