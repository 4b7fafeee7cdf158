//! Environment configuration.
//!
//! A configuration is a flat TOML document with one `[[materials]]` table per
//! material type. Every key is optional; missing keys take the values of the
//! reference 6x6 setting (see [`WarehouseConfig::default`]). The schema is
//! documented in `docs/config.md`.
//!
//! ```toml
//! version = 1
//! rows = 6
//! cols = 6
//! entry_points = [[0, 1], [0, 4]]
//! delivery_points = [[5, 1], [5, 4]]
//!
//! [[materials]]
//! name = "A"
//! item_lambda = 5.0
//! order_lambda = 30.0
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Coord;

/// Current configuration schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Largest supported material count; names run `'A'..='Z'`.
pub const MAX_MATERIALS: usize = 26;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config document: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(#[from] Violation),
}

/// A named configuration invariant that a document broke.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    UnsupportedVersion(u32),
    #[error("grid {rows}x{cols} is too small: rows and cols must be >= 4")]
    GridTooSmall { rows: usize, cols: usize },
    #[error("{kind} point {at} is outside the {rows}x{cols} grid")]
    PointOutOfBounds {
        kind: PointKind,
        at: Coord,
        rows: usize,
        cols: usize,
    },
    #[error("{kind} point {at} is not on the outer crown")]
    PointNotOnCrown { kind: PointKind, at: Coord },
    #[error("point {0} is listed more than once")]
    DuplicatePoint(Coord),
    #[error("at least one {0} point is required")]
    MissingPoints(PointKind),
    #[error("at least one material is required")]
    NoMaterials,
    #[error("at most {MAX_MATERIALS} materials are supported, got {0}")]
    TooManyMaterials(usize),
    #[error("material #{index} must be named {expected:?}, found {found:?}")]
    MaterialName {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("{field} must be a positive finite number, got {value}")]
    NonPositiveLambda { field: String, value: f64 },
    #[error("order sizes must satisfy 1 <= min <= max, got min={min} max={max}")]
    OrderSizeRange { min: u32, max: u32 },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Entry,
    Delivery,
}

impl fmt::Display for PointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointKind::Entry => "entry",
            PointKind::Delivery => "delivery",
        })
    }
}

/// One material type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub name: String,
    /// Mean steps until a queued item of this type becomes ready.
    pub item_lambda: f64,
    /// Mean steps until an order of this type becomes collectible.
    pub order_lambda: f64,
}

/// Full environment parameterization. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WarehouseConfig {
    pub version: u32,
    /// Grid rows, crown included.
    pub rows: usize,
    /// Grid columns, crown included.
    pub cols: usize,
    pub entry_points: Vec<Coord>,
    pub delivery_points: Vec<Coord>,
    pub order_size_min: u32,
    pub order_size_max: u32,
    pub new_order_lambda: f64,
    pub max_steps_per_episode: u32,
    pub age_cap: u32,
    pub age_diff_cap: u32,
    pub seed: u64,
    pub materials: Vec<MaterialSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: Option<u32>,
    rows: Option<usize>,
    cols: Option<usize>,
    entry_points: Option<Vec<Coord>>,
    delivery_points: Option<Vec<Coord>>,
    order_size_min: Option<u32>,
    order_size_max: Option<u32>,
    new_order_lambda: Option<f64>,
    max_steps_per_episode: Option<u32>,
    age_cap: Option<u32>,
    age_diff_cap: Option<u32>,
    seed: Option<u64>,
    materials: Option<Vec<RawMaterial>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    name: Option<String>,
    item_lambda: f64,
    order_lambda: f64,
}

/// Letter name of the 0-based material index.
pub fn material_letter(index: usize) -> char {
    (b'A' + index as u8) as char
}

fn default_materials() -> Vec<MaterialSpec> {
    vec![
        MaterialSpec {
            name: "A".into(),
            item_lambda: 5.0,
            order_lambda: 30.0,
        },
        MaterialSpec {
            name: "B".into(),
            item_lambda: 10.0,
            order_lambda: 50.0,
        },
    ]
}

/// Entry points sit next to the two upper corners of the crown.
fn default_entry_points(_rows: usize, cols: usize) -> Vec<Coord> {
    vec![Coord::new(0, 1), Coord::new(0, cols - 2)]
}

/// Delivery points sit next to the two lower corners of the crown.
fn default_delivery_points(rows: usize, cols: usize) -> Vec<Coord> {
    vec![Coord::new(rows - 1, 1), Coord::new(rows - 1, cols - 2)]
}

impl Default for WarehouseConfig {
    /// The reference 6x6 setting: two materials, two entry and two delivery
    /// points, orders of 2 to 6 items every 25 steps on average, 1000-step
    /// episodes.
    fn default() -> Self {
        load_config("").expect("empty document yields the default config")
    }
}

/// Same as [`WarehouseConfig::default`].
pub fn default_config() -> WarehouseConfig {
    WarehouseConfig::default()
}

/// Parses, defaults and validates a configuration document.
pub fn load_config(text: &str) -> Result<WarehouseConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    Ok(WarehouseConfig::from_raw(raw)?)
}

impl WarehouseConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        load_config(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, Violation> {
        let rows = raw.rows.unwrap_or(6);
        let cols = raw.cols.unwrap_or(6);
        if rows < 4 || cols < 4 {
            return Err(Violation::GridTooSmall { rows, cols });
        }
        let materials = match raw.materials {
            None => default_materials(),
            Some(list) => list
                .into_iter()
                .enumerate()
                .map(|(i, m)| MaterialSpec {
                    name: m.name.unwrap_or_else(|| material_letter(i.min(25)).to_string()),
                    item_lambda: m.item_lambda,
                    order_lambda: m.order_lambda,
                })
                .collect(),
        };
        let cfg = WarehouseConfig {
            version: raw.version.unwrap_or(SCHEMA_VERSION),
            rows,
            cols,
            entry_points: raw
                .entry_points
                .unwrap_or_else(|| default_entry_points(rows, cols)),
            delivery_points: raw
                .delivery_points
                .unwrap_or_else(|| default_delivery_points(rows, cols)),
            order_size_min: raw.order_size_min.unwrap_or(2),
            order_size_max: raw.order_size_max.unwrap_or(6),
            new_order_lambda: raw.new_order_lambda.unwrap_or(25.0),
            max_steps_per_episode: raw.max_steps_per_episode.unwrap_or(1000),
            age_cap: raw.age_cap.unwrap_or(1000),
            age_diff_cap: raw.age_diff_cap.unwrap_or(100),
            seed: raw.seed.unwrap_or(0),
            materials,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every invariant, returning the first one violated.
    pub fn validate(&self) -> Result<(), Violation> {
        if self.version != SCHEMA_VERSION {
            return Err(Violation::UnsupportedVersion(self.version));
        }
        if self.rows < 4 || self.cols < 4 {
            return Err(Violation::GridTooSmall {
                rows: self.rows,
                cols: self.cols,
            });
        }
        for (kind, points) in [
            (PointKind::Entry, &self.entry_points),
            (PointKind::Delivery, &self.delivery_points),
        ] {
            if points.is_empty() {
                return Err(Violation::MissingPoints(kind));
            }
            for &at in points {
                if at.row >= self.rows || at.col >= self.cols {
                    return Err(Violation::PointOutOfBounds {
                        kind,
                        at,
                        rows: self.rows,
                        cols: self.cols,
                    });
                }
                if !self.is_crown(at) {
                    return Err(Violation::PointNotOnCrown { kind, at });
                }
            }
        }
        let mut all: Vec<Coord> = self
            .entry_points
            .iter()
            .chain(&self.delivery_points)
            .copied()
            .collect();
        all.sort();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(Violation::DuplicatePoint(w[0]));
        }

        if self.materials.is_empty() {
            return Err(Violation::NoMaterials);
        }
        if self.materials.len() > MAX_MATERIALS {
            return Err(Violation::TooManyMaterials(self.materials.len()));
        }
        for (i, m) in self.materials.iter().enumerate() {
            let expected = material_letter(i).to_string();
            if m.name != expected {
                return Err(Violation::MaterialName {
                    index: i + 1,
                    expected,
                    found: m.name.clone(),
                });
            }
            check_lambda(&format!("materials.{}.item_lambda", m.name), m.item_lambda)?;
            check_lambda(&format!("materials.{}.order_lambda", m.name), m.order_lambda)?;
        }
        check_lambda("new_order_lambda", self.new_order_lambda)?;

        if self.order_size_min == 0 || self.order_size_min > self.order_size_max {
            return Err(Violation::OrderSizeRange {
                min: self.order_size_min,
                max: self.order_size_max,
            });
        }
        if self.max_steps_per_episode == 0 {
            return Err(Violation::NonPositive("max_steps_per_episode"));
        }
        if self.age_cap == 0 {
            return Err(Violation::NonPositive("age_cap"));
        }
        if self.age_diff_cap == 0 {
            return Err(Violation::NonPositive("age_diff_cap"));
        }
        Ok(())
    }

    /// Serializes back to the TOML schema accepted by [`load_config`].
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// True for cells of the one-cell outer ring.
    pub fn is_crown(&self, at: Coord) -> bool {
        at.row == 0 || at.col == 0 || at.row == self.rows - 1 || at.col == self.cols - 1
    }

    pub fn in_bounds(&self, at: Coord) -> bool {
        at.row < self.rows && at.col < self.cols
    }

    pub fn material_count(&self) -> usize {
        self.materials.len()
    }

    /// Observation depth `6 + m`.
    pub fn depth(&self) -> usize {
        6 + self.materials.len()
    }

    /// Size of the discrete action space, `rows * cols`.
    pub fn action_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn entry_index(&self, at: Coord) -> Option<usize> {
        self.entry_points.iter().position(|&p| p == at)
    }

    pub fn delivery_index(&self, at: Coord) -> Option<usize> {
        self.delivery_points.iter().position(|&p| p == at)
    }

    /// Where agents start and where baseline policies wait: the first crown
    /// cell in row-major order that is neither an entry nor a delivery point.
    pub fn home_cell(&self) -> Coord {
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| Coord::new(r, c)))
            .find(|&at| {
                self.is_crown(at)
                    && self.entry_index(at).is_none()
                    && self.delivery_index(at).is_none()
            })
            .expect("a crown of a >=4x4 grid has more cells than configured points")
    }

    pub fn cells(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| Coord::new(r, c)))
    }
}

fn check_lambda(field: &str, value: f64) -> Result<(), Violation> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Violation::NonPositiveLambda {
            field: field.to_string(),
            value,
        })
    }
}
