//! Dye recipes and the discrete design space they live in.
//!
//! A recipe is four integer drop counts (red, yellow, blue, green). The design
//! space is every recipe with `0..=max_drops` drops per dye, enumerated in
//! lexicographic order so that scans over it have a deterministic
//! "first minimizer wins" tie-break.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default per-dye saturation bound.
pub const DEFAULT_MAX_DROPS: u32 = 20;

/// The four dyes, in feature order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dye {
    Red,
    Yellow,
    Blue,
    Green,
}

impl Dye {
    pub const ALL: [Dye; 4] = [Dye::Red, Dye::Yellow, Dye::Blue, Dye::Green];

    pub fn name(self) -> &'static str {
        match self {
            Dye::Red => "red",
            Dye::Yellow => "yellow",
            Dye::Blue => "blue",
            Dye::Green => "green",
        }
    }
}

impl fmt::Display for Dye {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecipeError {
    #[error("{dye} drop count {value} out of range 0..={max}")]
    OutOfRange { dye: Dye, value: i64, max: u32 },
    #[error("{dye} drop count {text:?} is not an integer")]
    NotInteger { dye: Dye, text: String },
    #[error("recipe must have exactly 4 comma-separated counts, got {0}")]
    Arity(usize),
}

/// Drop counts for red, yellow, blue and green dye.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Recipe {
    pub red: u32,
    pub yellow: u32,
    pub blue: u32,
    pub green: u32,
}

impl Recipe {
    pub const fn new(red: u32, yellow: u32, blue: u32, green: u32) -> Self {
        Recipe {
            red,
            yellow,
            blue,
            green,
        }
    }

    pub fn counts(&self) -> [u32; 4] {
        [self.red, self.yellow, self.blue, self.green]
    }

    pub fn from_counts(c: [u32; 4]) -> Self {
        Recipe::new(c[0], c[1], c[2], c[3])
    }

    pub fn drops(&self, dye: Dye) -> u32 {
        self.counts()[dye as usize]
    }

    /// Builds a recipe from signed counts, rejecting anything outside the space.
    pub fn try_from_signed(c: [i64; 4], space: DesignSpace) -> Result<Self, RecipeError> {
        let mut out = [0u32; 4];
        for (i, dye) in Dye::ALL.iter().enumerate() {
            if c[i] < 0 || c[i] > space.max_drops as i64 {
                return Err(RecipeError::OutOfRange {
                    dye: *dye,
                    value: c[i],
                    max: space.max_drops,
                });
            }
            out[i] = c[i] as u32;
        }
        Ok(Recipe::from_counts(out))
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.red, self.yellow, self.blue, self.green)
    }
}

/// Parses the textual form `"r,y,b,g"`. Range checks against a design space
/// are left to [`validate_recipe`]; only integrality and sign are checked here.
impl FromStr for Recipe {
    type Err = RecipeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(RecipeError::Arity(parts.len()));
        }
        let mut out = [0u32; 4];
        for (i, part) in parts.iter().enumerate() {
            let dye = Dye::ALL[i];
            let v: i64 = part.parse().map_err(|_| RecipeError::NotInteger {
                dye,
                text: part.to_string(),
            })?;
            if v < 0 || v > u32::MAX as i64 {
                return Err(RecipeError::OutOfRange {
                    dye,
                    value: v,
                    max: u32::MAX,
                });
            }
            out[i] = v as u32;
        }
        Ok(Recipe::from_counts(out))
    }
}

/// All recipes with `0..=max_drops` drops of each dye.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DesignSpace {
    pub max_drops: u32,
}

impl Default for DesignSpace {
    fn default() -> Self {
        DesignSpace {
            max_drops: DEFAULT_MAX_DROPS,
        }
    }
}

impl DesignSpace {
    pub fn new(max_drops: u32) -> Self {
        DesignSpace { max_drops }
    }

    /// Number of recipes, `(max_drops + 1)^4`.
    pub fn len(&self) -> usize {
        (self.max_drops as usize + 1).pow(4)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The recipe at position `index` of the lexicographic enumeration.
    pub fn recipe_at(&self, index: usize) -> Recipe {
        let base = self.max_drops as usize + 1;
        let green = index % base;
        let blue = (index / base) % base;
        let yellow = (index / base / base) % base;
        let red = index / base / base / base;
        Recipe::new(red as u32, yellow as u32, blue as u32, green as u32)
    }

    /// Lexicographic enumeration by (red, yellow, blue, green).
    pub fn enumerate(&self) -> impl ExactSizeIterator<Item = Recipe> + '_ {
        (0..self.len()).map(move |i| self.recipe_at(i))
    }

    pub fn contains(&self, r: &Recipe) -> bool {
        r.counts().iter().all(|&c| c <= self.max_drops)
    }

    pub fn encode(&self, r: &Recipe) -> Result<FeatureVector, RecipeError> {
        validate_recipe(r, *self)?;
        Ok(self.encode_unchecked(r))
    }

    pub(crate) fn encode_unchecked(&self, r: &Recipe) -> FeatureVector {
        // A zero-width space has a single recipe; map it to the origin.
        if self.max_drops == 0 {
            return FeatureVector([0.0; 4]);
        }
        let m = self.max_drops as f64;
        let c = r.counts();
        FeatureVector([
            c[0] as f64 / m,
            c[1] as f64 / m,
            c[2] as f64 / m,
            c[3] as f64 / m,
        ])
    }

    /// Inverse of [`encode`](Self::encode); `None` unless every component lands on an integer count.
    pub fn decode(&self, f: &FeatureVector) -> Option<Recipe> {
        let m = self.max_drops as f64;
        let mut out = [0u32; 4];
        for (o, &v) in out.iter_mut().zip(f.0.iter()) {
            let drops = (v * m).round();
            if (v * m - drops).abs() > 1e-9 || drops < 0.0 || drops > m {
                return None;
            }
            *o = drops as u32;
        }
        Some(Recipe::from_counts(out))
    }
}

/// Accepts iff every count lies in `0..=space.max_drops`.
pub fn validate_recipe(r: &Recipe, space: DesignSpace) -> Result<(), RecipeError> {
    for dye in Dye::ALL {
        let v = r.drops(dye);
        if v > space.max_drops {
            return Err(RecipeError::OutOfRange {
                dye,
                value: v as i64,
                max: space.max_drops,
            });
        }
    }
    Ok(())
}

/// Recipe scaled into `[0, 1]^4` by dividing each count by `max_drops`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; 4]);

impl FeatureVector {
    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// The seven corner-point recipes that seed every campaign.
pub const SEED_RECIPES: [Recipe; 7] = [
    Recipe::new(0, 0, 0, 0),
    Recipe::new(20, 0, 0, 0),
    Recipe::new(0, 20, 0, 0),
    Recipe::new(0, 0, 20, 0),
    Recipe::new(0, 0, 0, 20),
    Recipe::new(10, 10, 10, 10),
    Recipe::new(20, 20, 20, 20),
];

pub fn seed_recipes() -> Vec<Recipe> {
    SEED_RECIPES.to_vec()
}
