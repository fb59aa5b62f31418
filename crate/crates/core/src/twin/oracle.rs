use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{ColorRgb, TargetColor};
use crate::recipe::Recipe;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("absorbance for dye {dye} channel {channel} must be finite and >= 0")]
    Absorbance { dye: usize, channel: usize },
    #[error("base channel {0} must lie in (0, 255]")]
    Base(usize),
    #[error("noise standard deviation for channel {0} must be finite and >= 0")]
    Noise(usize),
}

/// Per-drop absorbance of each dye in each channel; rows red, yellow, blue, green.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyeProfile {
    pub absorbance: [[f64; 3]; 4],
}

impl Default for DyeProfile {
    fn default() -> Self {
        DyeProfile {
            absorbance: [
                [0.01, 0.20, 0.20],
                [0.01, 0.03, 0.25],
                [0.25, 0.10, 0.01],
                [0.20, 0.02, 0.15],
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub profile: DyeProfile,
    /// Transmitted color with no dye.
    pub base: ColorRgb,
    /// Per-channel measurement noise standard deviation.
    pub noise_sd: [f64; 3],
    pub seed: u64,
    pub noise: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            profile: DyeProfile::default(),
            base: ColorRgb::new(200.0, 200.0, 200.0),
            noise_sd: [4.0, 3.0, 2.0],
            seed: 0,
            noise: true,
        }
    }
}

impl OracleConfig {
    pub fn noise_free() -> Self {
        OracleConfig {
            noise: false,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        for (d, row) in self.profile.absorbance.iter().enumerate() {
            for (c, a) in row.iter().enumerate() {
                if !(a.is_finite() && *a >= 0.0) {
                    return Err(OracleError::Absorbance { dye: d, channel: c });
                }
            }
        }
        for (c, b) in self.base.channels().iter().enumerate() {
            if !(*b > 0.0 && *b <= 255.0) {
                return Err(OracleError::Base(c));
            }
        }
        for (c, s) in self.noise_sd.iter().enumerate() {
            if !(s.is_finite() && *s >= 0.0) {
                return Err(OracleError::Noise(c));
            }
        }
        Ok(())
    }

    /// Beer-Lambert attenuation of the base color, no noise.
    pub fn transmitted(&self, r: &Recipe) -> ColorRgb {
        let drops = r.counts();
        let base = self.base.channels();
        let mut out = [0.0; 3];
        for (ch, o) in out.iter_mut().enumerate() {
            let optical_depth: f64 = (0..4)
                .map(|d| self.profile.absorbance[d][ch] * drops[d] as f64)
                .sum();
            *o = base[ch] * (-optical_depth).exp();
        }
        ColorRgb::from_channels(out)
    }
}

/// A seeded synthetic dye experiment. Successive measurements draw fresh noise.
#[derive(Debug, Clone)]
pub struct Oracle {
    config: OracleConfig,
    rng: ChaCha8Rng,
}

impl Oracle {
    pub fn new(config: OracleConfig) -> Result<Self, OracleError> {
        config.validate()?;
        Ok(Oracle {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
        })
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    /// Mixes the recipe and "photographs" it, clamped to 0..=255.
    pub fn measure(&mut self, r: &Recipe) -> ColorRgb {
        let mut c = self.config.transmitted(r).channels();
        if self.config.noise {
            for (v, sd) in c.iter_mut().zip(self.config.noise_sd) {
                if sd > 0.0 {
                    *v += Normal::new(0.0, sd).expect("validated sd").sample(&mut self.rng);
                }
            }
        }
        ColorRgb::from_channels(c.map(|v| v.clamp(0.0, 255.0)))
    }
}

/// One measurement from a freshly seeded oracle.
pub fn simulate_color(r: &Recipe, config: &OracleConfig) -> Result<ColorRgb, OracleError> {
    Ok(Oracle::new(*config)?.measure(r))
}

/// Euclidean RGB distance between a measurement and the target.
pub fn error(c: &ColorRgb, t: &TargetColor) -> f64 {
    c.distance(&t.color())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recipe::DesignSpace;

    #[test]
    fn zero_dye_is_base() {
        let c = simulate_color(&Recipe::new(0, 0, 0, 0), &OracleConfig::noise_free()).unwrap();
        assert_eq!(c, ColorRgb::new(200.0, 200.0, 200.0));
    }

    #[test]
    fn never_brighter_than_base() {
        let cfg = OracleConfig::noise_free();
        for r in DesignSpace::default().enumerate() {
            let c = cfg.transmitted(&r);
            assert!(c.r <= 200.0 && c.g <= 200.0 && c.b <= 200.0, "{r}");
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let cfg = OracleConfig::default().with_seed(42);
        let r = Recipe::new(3, 4, 5, 6);
        let a = simulate_color(&r, &cfg).unwrap();
        assert_eq!(a, simulate_color(&r, &cfg).unwrap());
        assert_ne!(a, cfg.transmitted(&r));
        let mut o = Oracle::new(cfg).unwrap();
        assert_eq!(o.measure(&r), a);
        assert_ne!(o.measure(&r), a);
    }

    #[test]
    fn error_examples() {
        let t = TargetColor::new(255.0, 213.0, 32.0).unwrap();
        assert_eq!(error(&t.color(), &t), 0.0);
        let e = error(&ColorRgb::new(188.0, 165.0, 34.0), &t);
        assert!((e - 6797f64.sqrt()).abs() < 1e-12);
        assert!((e - 82.44).abs() < 0.005);
    }

    #[test]
    fn config_validation() {
        let mut c = OracleConfig::default();
        c.base = ColorRgb::new(0.0, 10.0, 10.0);
        assert_eq!(c.validate(), Err(OracleError::Base(0)));
        let mut c = OracleConfig::default();
        c.noise_sd[2] = -1.0;
        assert_eq!(c.validate(), Err(OracleError::Noise(2)));
        let mut c = OracleConfig::default();
        c.profile.absorbance[1][2] = f64::NAN;
        assert_eq!(c.validate(), Err(OracleError::Absorbance { dye: 1, channel: 2 }));
    }
}
