#![allow(dead_code)]

use chromatwin::gpr::{kernel, KernelParams};
use chromatwin::recipe::FeatureVector;
use rand::Rng;

/// Gauss-Jordan inverse with partial pivoting.
pub fn dense_inverse(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        for k in 0..n {
            m.swap(col * n + k, pivot * n + k);
            inv.swap(col * n + k, pivot * n + k);
        }
        let p = m[col * n + col];
        assert!(p.abs() > 1e-300, "singular matrix");
        for k in 0..n {
            m[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for row in 0..n {
            if row != col {
                let f = m[row * n + col];
                for k in 0..n {
                    m[row * n + k] -= f * m[col * n + k];
                    inv[row * n + k] -= f * inv[col * n + k];
                }
            }
        }
    }
    inv
}

/// Determinant by Gaussian elimination.
pub fn determinant(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det *= p;
        for row in col + 1..n {
            let f = m[row * n + col] / p;
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
        }
    }
    det
}

pub fn covariance(xs: &[FeatureVector], p: &KernelParams) -> Vec<f64> {
    let n = xs.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            k[i * n + j] = kernel(&xs[i], &xs[j], p);
        }
        k[i * n + i] += p.noise_variance;
    }
    k
}

/// Posterior mean and standard deviation from an explicit inverse.
pub fn oracle_predict(xs: &[FeatureVector], ys: &[f64], p: &KernelParams, x: &FeatureVector) -> (f64, f64) {
    let n = xs.len();
    let ybar = ys.iter().sum::<f64>() / n as f64;
    let inv = dense_inverse(&covariance(xs, p), n);
    let ks: Vec<f64> = xs.iter().map(|xi| kernel(x, xi, p)).collect();
    let mut mean = ybar;
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            mean += ks[i] * inv[i * n + j] * (ys[j] - ybar);
            quad += ks[i] * inv[i * n + j] * ks[j];
        }
    }
    (mean, (p.signal_variance - quad).max(0.0).sqrt())
}

/// Log density of the centered targets under N(0, K + σ_n² I).
pub fn oracle_log_density(xs: &[FeatureVector], ys: &[f64], p: &KernelParams) -> f64 {
    let n = xs.len();
    let ybar = ys.iter().sum::<f64>() / n as f64;
    let c = covariance(xs, p);
    let inv = dense_inverse(&c, n);
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += (ys[i] - ybar) * inv[i * n + j] * (ys[j] - ybar);
        }
    }
    -0.5 * quad - 0.5 * determinant(&c, n).ln() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

pub fn random_features(rng: &mut impl Rng, n: usize) -> Vec<FeatureVector> {
    (0..n)
        .map(|_| FeatureVector(std::array::from_fn(|_| rng.random_range(0..=20) as f64 / 20.0)))
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
