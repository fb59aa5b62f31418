//! Exact Gaussian-process regression for one scalar output channel.
//!
//! Squared-exponential kernel on normalized recipe features, zero prior mean
//! in centered target space (the training mean is subtracted before fitting
//! and added back on prediction), Cholesky factorization of `K + σ_n² I`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::recipe::FeatureVector;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GprError {
    #[error("cannot fit a GP to an empty dataset")]
    EmptyDataset,
    #[error("{features} feature rows but {targets} targets")]
    ShapeMismatch { features: usize, targets: usize },
    #[error("training target {index} is not finite")]
    NonFiniteTarget { index: usize },
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),
    #[error("covariance matrix is not positive definite even with jitter {jitter:e}")]
    Factorization { jitter: f64 },
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
}

/// Squared-exponential kernel hyperparameters plus observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// σ_f², in RGB units squared.
    pub signal_variance: f64,
    /// ℓ, in normalized feature units.
    pub length_scale: f64,
    /// σ_n², in RGB units squared.
    pub noise_variance: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            signal_variance: 100.0 * 100.0,
            length_scale: 0.25,
            noise_variance: 7.0 * 7.0,
        }
    }
}

impl KernelParams {
    pub fn new(
        signal_variance: f64,
        length_scale: f64,
        noise_variance: f64,
    ) -> Result<Self, GprError> {
        let p = KernelParams {
            signal_variance,
            length_scale,
            noise_variance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GprError> {
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(GprError::InvalidParams(format!(
                "signal variance must be > 0, got {}",
                self.signal_variance
            )));
        }
        if !(self.length_scale > 0.0 && self.length_scale.is_finite()) {
            return Err(GprError::InvalidParams(format!(
                "length scale must be > 0, got {}",
                self.length_scale
            )));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(GprError::InvalidParams(format!(
                "noise variance must be >= 0, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    /// A coarse grid around the defaults, used when hyperparameter selection is enabled.
    pub fn default_grid() -> Vec<KernelParams> {
        let mut grid = Vec::new();
        for &sf in &[50.0, 100.0, 150.0] {
            for &ls in &[0.1, 0.15, 0.25, 0.4, 0.6, 1.0] {
                for &sn in &[2.0, 7.0, 15.0] {
                    grid.push(KernelParams {
                        signal_variance: sf * sf,
                        length_scale: ls,
                        noise_variance: sn * sn,
                    });
                }
            }
        }
        grid
    }
}

/// `σ_f² exp(-‖a - b‖² / 2ℓ²)`.
pub fn kernel(a: &FeatureVector, b: &FeatureVector, p: &KernelParams) -> f64 {
    p.signal_variance * (-a.squared_distance(b) / (2.0 * p.length_scale * p.length_scale)).exp()
}

/// Posterior mean and standard deviation for one channel at one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPrediction {
    pub mean: f64,
    pub std_dev: f64,
}

/// A fitted GP posterior for one output channel.
#[derive(Debug, Clone)]
pub struct TrainedChannelModel {
    features: Vec<FeatureVector>,
    targets: Vec<f64>,
    target_mean: f64,
    params: KernelParams,
    jitter: f64,
    factor: Vec<f64>,
    alpha: Vec<f64>,
}

/// Fits a GP to `(features, targets)`.
///
/// If `K + σ_n² I` is not numerically positive definite, jitter of
/// `1e-8 σ_f²` is added to the diagonal and grown 10x up to three times.
pub fn fit(
    features: &[FeatureVector],
    targets: &[f64],
    params: KernelParams,
) -> Result<TrainedChannelModel, GprError> {
    params.validate()?;
    if features.is_empty() {
        return Err(GprError::EmptyDataset);
    }
    if features.len() != targets.len() {
        return Err(GprError::ShapeMismatch {
            features: features.len(),
            targets: targets.len(),
        });
    }
    if let Some(index) = targets.iter().position(|y| !y.is_finite()) {
        return Err(GprError::NonFiniteTarget { index });
    }
    let n = features.len();
    let target_mean = targets.iter().sum::<f64>() / n as f64;

    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let k = kernel(&features[i], &features[j], &params);
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }

    let mut jitter = 0.0;
    let mut retries = 0;
    let factor = loop {
        let mut a = gram.clone();
        for i in 0..n {
            a[i * n + i] += params.noise_variance + jitter;
        }
        if let Some(l) = linalg::cholesky(&a, n) {
            break l;
        }
        if retries == 3 {
            return Err(GprError::Factorization { jitter });
        }
        jitter = 1e-8 * params.signal_variance * 10f64.powi(retries);
        retries += 1;
    };

    let mut alpha: Vec<f64> = targets.iter().map(|y| y - target_mean).collect();
    linalg::solve_lower_in_place(&factor, n, &mut alpha);
    linalg::solve_upper_transposed_in_place(&factor, n, &mut alpha);

    Ok(TrainedChannelModel {
        features: features.to_vec(),
        targets: targets.to_vec(),
        target_mean,
        params,
        jitter,
        factor,
        alpha,
    })
}

impl TrainedChannelModel {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn features(&self) -> &[FeatureVector] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    /// Diagonal jitter that had to be added to factorize, zero in the common case.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Row-major lower-triangular factor of `K + (σ_n² + jitter) I`.
    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    /// `(K + σ_n² I)⁻¹ (y - ȳ)`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn predict(&self, x: &FeatureVector) -> ChannelPrediction {
        let mut k = Vec::with_capacity(self.len());
        self.cross_kernel(x, &mut k);
        let mean = self.mean_from_cross(&k);
        let var = self.variance_from_cross(&mut k);
        ChannelPrediction {
            mean,
            std_dev: var.max(0.0).sqrt(),
        }
    }

    /// Fills `out` with `k(x, x_i)` for every training row.
    pub(crate) fn cross_kernel(&self, x: &FeatureVector, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.features.iter().map(|f| kernel(x, f, &self.params)));
    }

    pub(crate) fn mean_from_cross(&self, k: &[f64]) -> f64 {
        self.target_mean + k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Posterior variance from the cross-kernel vector; overwrites `k` with `L⁻¹k`.
    pub(crate) fn variance_from_cross(&self, k: &mut [f64]) -> f64 {
        linalg::solve_lower_in_place(&self.factor, self.len(), k);
        self.params.signal_variance - k.iter().map(|v| v * v).sum::<f64>()
    }

    /// Log marginal likelihood of the centered targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len();
        let fit_term: f64 = self
            .targets
            .iter()
            .zip(&self.alpha)
            .map(|(y, a)| (y - self.target_mean) * a)
            .sum();
        let log_det_half: f64 = (0..n).map(|i| self.factor[i * n + i].ln()).sum();
        -0.5 * fit_term - log_det_half - 0.5 * n as f64 * LN_2PI
    }
}

/// Returns the grid element with the highest log marginal likelihood; the
/// earliest one wins ties. Grid points that fail to factorize are skipped.
pub fn select_hyperparameters(
    features: &[FeatureVector],
    targets: &[f64],
    grid: &[KernelParams],
) -> Result<KernelParams, GprError> {
    if grid.is_empty() {
        return Err(GprError::EmptyGrid);
    }
    let mut best: Option<(f64, KernelParams)> = None;
    let mut last_err = None;
    for p in grid {
        match fit(features, targets, *p) {
            Ok(m) => {
                let lml = m.log_marginal_likelihood();
                if best.map_or(true, |(b, _)| lml > b) {
                    best = Some((lml, *p));
                }
            }
            Err(e @ GprError::Factorization { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    best.map(|(_, p)| p)
        .ok_or_else(|| last_err.unwrap_or(GprError::EmptyGrid))
}

/// How channel hyperparameters are chosen on every fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HyperPolicy {
    Fixed { params: KernelParams },
    /// Maximize the marginal likelihood over a grid, separately per channel.
    Grid { grid: Vec<KernelParams> },
}

/// Per-channel grid selection; fixed parameters only when asked for.
impl Default for HyperPolicy {
    fn default() -> Self {
        HyperPolicy::default_grid()
    }
}

impl HyperPolicy {
    pub fn fixed_default() -> Self {
        HyperPolicy::Fixed {
            params: KernelParams::default(),
        }
    }

    pub fn default_grid() -> Self {
        HyperPolicy::Grid {
            grid: KernelParams::default_grid(),
        }
    }

    pub fn resolve(&self, features: &[FeatureVector], targets: &[f64]) -> Result<KernelParams, GprError> {
        match self {
            HyperPolicy::Fixed { params } => Ok(*params),
            HyperPolicy::Grid { grid } => select_hyperparameters(features, targets, grid),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(a: [f64; 4]) -> FeatureVector {
        FeatureVector(a)
    }

    fn unit(noise: f64) -> KernelParams {
        KernelParams::new(1.0, 1.0, noise).unwrap()
    }

    #[test]
    fn kernel_values() {
        let p = unit(0.0);
        let a = fv([0.0; 4]);
        assert_eq!(kernel(&a, &a, &p), 1.0);
        let b = fv([1.0, 0.0, 0.0, 0.0]);
        assert!((kernel(&a, &b, &p) - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert_eq!(kernel(&a, &b, &p), kernel(&b, &a, &p));
        assert!(kernel(&a, &fv([100.0; 4]), &p) < 1e-300);
    }

    #[test]
    fn params_validation() {
        assert!(KernelParams::new(0.0, 1.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, -1.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, 1.0, -1e-3).is_err());
        assert!(KernelParams::new(1.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn single_point_interpolates() {
        let m = fit(&[fv([0.0; 4])], &[200.0], unit(0.0)).unwrap();
        let p = m.predict(&fv([0.0; 4]));
        assert!((p.mean - 200.0).abs() < 1e-8);
        assert!(p.std_dev < 1e-8);
    }

    #[test]
    fn noisy_variance_bounded_by_prior() {
        let xs = [fv([0.0; 4]), fv([0.5; 4]), fv([1.0, 0.0, 0.0, 0.0])];
        let p = KernelParams::new(4.0, 0.3, 0.5).unwrap();
        let m = fit(&xs, &[1.0, 2.0, 3.0], p).unwrap();
        for x in &xs {
            let s2 = m.predict(x).std_dev.powi(2);
            assert!(s2 > 0.0 && s2 <= 4.0);
        }
    }

    #[test]
    fn far_point_reverts_to_training_mean() {
        let xs = [fv([0.0; 4]), fv([0.1, 0.0, 0.0, 0.0])];
        let p = KernelParams::new(9.0, 0.1, 0.0).unwrap();
        let m = fit(&xs, &[10.0, 20.0], p).unwrap();
        let far = m.predict(&fv([50.0; 4]));
        assert!((far.mean - 15.0).abs() < 1e-9);
        assert!((far.std_dev - 3.0).abs() < 1e-9);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert_eq!(fit(&[], &[], unit(0.0)).unwrap_err(), GprError::EmptyDataset);
        assert!(matches!(
            fit(&[fv([0.0; 4])], &[1.0, 2.0], unit(0.0)),
            Err(GprError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            fit(&[fv([0.0; 4])], &[f64::NAN], unit(0.0)),
            Err(GprError::NonFiniteTarget { index: 0 })
        ));
    }

    #[test]
    fn duplicate_rows_without_noise_use_jitter() {
        let xs = [fv([0.2; 4]), fv([0.2; 4])];
        let m = fit(&xs, &[5.0, 7.0], unit(0.0)).unwrap();
        assert!(m.jitter() > 0.0);
        assert!(m.jitter() <= 1e-6);
        assert!((m.predict(&xs[0]).mean - 6.0).abs() < 1e-6);
    }

    #[test]
    fn single_point_log_likelihood() {
        let m = fit(&[fv([0.0; 4])], &[0.0], unit(0.0)).unwrap();
        assert!((m.log_marginal_likelihood() + 0.918_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn grid_selection_edges() {
        let xs = [fv([0.0; 4]), fv([0.5; 4])];
        assert_eq!(
            select_hyperparameters(&xs, &[1.0, 2.0], &[]).unwrap_err(),
            GprError::EmptyGrid
        );
        let only = KernelParams::new(2.0, 0.3, 0.1).unwrap();
        assert_eq!(select_hyperparameters(&xs, &[1.0, 2.0], &[only]).unwrap(), only);
        // Constant zero targets with shared noise: every element ties on the
        // data-fit term, and with equal σ_f² and noise the determinant ties too.
        let grid = [
            KernelParams::new(1.0, 1e-3, 0.5).unwrap(),
            KernelParams::new(1.0, 2e-3, 0.5).unwrap(),
        ];
        let far = [fv([0.0; 4]), fv([1.0; 4])];
        assert_eq!(select_hyperparameters(&far, &[0.0, 0.0], &grid).unwrap(), grid[0]);
    }
}
