use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ColorError {
    #[error("color must have exactly 3 channels, got {0}")]
    Arity(usize),
    #[error("channel {channel} value {text:?} is not a number")]
    NotNumber { channel: char, text: String },
    #[error("channel {channel} value {value} outside 0..=255")]
    OutOfRange { channel: char, value: f64 },
    #[error("channel {channel} is not finite")]
    NotFinite { channel: char },
}

const CHANNELS: [char; 3] = ['R', 'G', 'B'];

/// A real-valued RGB triple, nominally on 0..=255. Predictions may leave that range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorRgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl ColorRgb {
    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        ColorRgb { r, g, b }
    }

    pub fn channels(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn from_channels(c: [f64; 3]) -> Self {
        ColorRgb::new(c[0], c[1], c[2])
    }

    pub fn squared_distance(&self, other: &ColorRgb) -> f64 {
        self.channels()
            .iter()
            .zip(other.channels().iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Euclidean RGB distance.
    pub fn distance(&self, other: &ColorRgb) -> f64 {
        self.squared_distance(other).sqrt()
    }

    pub fn check_finite(&self) -> Result<(), ColorError> {
        for (v, ch) in self.channels().iter().zip(CHANNELS) {
            if !v.is_finite() {
                return Err(ColorError::NotFinite { channel: ch });
            }
        }
        Ok(())
    }

    /// Clamped and rounded to bytes, for rendering only.
    pub fn to_display_bytes(&self) -> [u8; 3] {
        self.channels().map(|v| v.clamp(0.0, 255.0).round() as u8)
    }
}

impl fmt::Display for ColorRgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} {:.2} {:.2}", self.r, self.g, self.b)
    }
}

fn parse_triple(s: &str) -> Result<[f64; 3], ColorError> {
    let parts: Vec<&str> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect();
    if parts.len() != 3 {
        return Err(ColorError::Arity(parts.len()));
    }
    let mut out = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p.parse().map_err(|_| ColorError::NotNumber {
            channel: CHANNELS[i],
            text: p.to_string(),
        })?;
    }
    Ok(out)
}

impl FromStr for ColorRgb {
    type Err = ColorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let c = ColorRgb::from_channels(parse_triple(s)?);
        c.check_finite()?;
        Ok(c)
    }
}

/// A user-chosen target color; every channel within 0..=255.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ColorRgb", into = "ColorRgb")]
pub struct TargetColor(ColorRgb);

impl TargetColor {
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self, ColorError> {
        TargetColor::try_from(ColorRgb::new(r, g, b))
    }

    pub fn color(&self) -> ColorRgb {
        self.0
    }

    pub fn channels(&self) -> [f64; 3] {
        self.0.channels()
    }
}

impl TryFrom<ColorRgb> for TargetColor {
    type Error = ColorError;

    fn try_from(c: ColorRgb) -> Result<Self, Self::Error> {
        c.check_finite()?;
        for (v, ch) in c.channels().iter().zip(CHANNELS) {
            if !(0.0..=255.0).contains(v) {
                return Err(ColorError::OutOfRange {
                    channel: ch,
                    value: *v,
                });
            }
        }
        Ok(TargetColor(c))
    }
}

impl From<TargetColor> for ColorRgb {
    fn from(t: TargetColor) -> Self {
        t.0
    }
}

impl FromStr for TargetColor {
    type Err = ColorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TargetColor::try_from(ColorRgb::from_channels(parse_triple(s)?))
    }
}

impl fmt::Display for TargetColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The four sports-team targets used in the collaborative demonstration.
pub const FEVER_YELLOW: ColorRgb = ColorRgb::new(255.0, 213.0, 32.0);
pub const GIANTS_ORANGE: ColorRgb = ColorRgb::new(253.0, 90.0, 30.0);
pub const CAVALIERS_RED: ColorRgb = ColorRgb::new(134.0, 0.0, 56.0);
pub const DOLPHINS_BLUE: ColorRgb = ColorRgb::new(0.0, 142.0, 151.0);

pub fn default_targets() -> [(&'static str, TargetColor); 4] {
    [
        ("Fever Yellow", TargetColor(FEVER_YELLOW)),
        ("Giants Orange", TargetColor(GIANTS_ORANGE)),
        ("Cavaliers Red", TargetColor(CAVALIERS_RED)),
        ("Dolphins Blue", TargetColor(DOLPHINS_BLUE)),
    ]
}
