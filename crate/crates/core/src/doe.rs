//! All-pairs (pairwise) hyperparameter suites.
//!
//! A suite covers every value pair of every two parameters at least once,
//! usually with far fewer rows than the full Cartesian product. Rows are
//! built greedily: each new row is the assignment covering the most
//! still-uncovered pairs. For product spaces up to [`EXHAUSTIVE_LIMIT`]
//! every assignment is scored; larger spaces use AETG-style randomized
//! candidate rows. Ties are broken by the seeded generator.
//!
//! [`verify_pairwise`] re-enumerates the pairs from scratch and is the
//! oracle for the generator; it never looks at the generator's
//! bookkeeping.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest Cartesian product scored exhaustively per row.
pub const EXHAUSTIVE_LIMIT: usize = 20_000;

const CANDIDATES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub parameters: Vec<Parameter>,
    /// Assignments (values in parameter order) every suite must contain.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required: Vec<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("failed to read parameter space: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed parameter space: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("a parameter space needs at least one parameter")]
    Empty,
    #[error("parameter {0:?} has no levels")]
    NoLevels(String),
    #[error("parameter {name:?} lists level {value} twice")]
    DuplicateLevel { name: String, value: f64 },
    #[error("parameter name {0:?} is used twice")]
    DuplicateName(String),
    #[error("required row {row} does not match the space: {reason}")]
    BadRequiredRow { row: usize, reason: String },
}

impl ParameterSpace {
    pub fn new(parameters: Vec<Parameter>) -> Result<Self, SpaceError> {
        let space = ParameterSpace {
            parameters,
            required: Vec::new(),
        };
        space.validate()?;
        Ok(space)
    }

    pub fn from_toml(text: &str) -> Result<Self, SpaceError> {
        let space: ParameterSpace = toml::from_str(text)?;
        space.validate()?;
        Ok(space)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, SpaceError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        if self.parameters.is_empty() {
            return Err(SpaceError::Empty);
        }
        let mut names = HashSet::new();
        for p in &self.parameters {
            if !names.insert(p.name.as_str()) {
                return Err(SpaceError::DuplicateName(p.name.clone()));
            }
            if p.levels.is_empty() {
                return Err(SpaceError::NoLevels(p.name.clone()));
            }
            for (i, v) in p.levels.iter().enumerate() {
                if p.levels[..i].contains(v) {
                    return Err(SpaceError::DuplicateLevel {
                        name: p.name.clone(),
                        value: *v,
                    });
                }
            }
        }
        for row in 0..self.required.len() {
            self.required_levels(row)?;
        }
        Ok(())
    }

    fn required_levels(&self, row: usize) -> Result<Vec<usize>, SpaceError> {
        let values = &self.required[row];
        if values.len() != self.parameters.len() {
            return Err(SpaceError::BadRequiredRow {
                row,
                reason: format!("{} values for {} parameters", values.len(), self.parameters.len()),
            });
        }
        values
            .iter()
            .zip(&self.parameters)
            .map(|(v, p)| {
                p.levels.iter().position(|l| l == v).ok_or_else(|| SpaceError::BadRequiredRow {
                    row,
                    reason: format!("{v} is not a level of {}", p.name),
                })
            })
            .collect()
    }

    pub fn level_counts(&self) -> Vec<usize> {
        self.parameters.iter().map(|p| p.levels.len()).collect()
    }

    /// Size of the full Cartesian product (saturating).
    pub fn product_size(&self) -> usize {
        self.level_counts().iter().fold(1usize, |acc, &n| acc.saturating_mul(n))
    }

    /// Product of the two largest level counts: a lower bound on any
    /// all-pairs suite.
    pub fn pairwise_lower_bound(&self) -> usize {
        let mut counts = self.level_counts();
        counts.sort_unstable_by(|a, b| b.cmp(a));
        counts.iter().take(2).product()
    }

    /// Number of distinct cross-parameter value pairs.
    pub fn pair_count(&self) -> usize {
        let counts = self.level_counts();
        let mut total = 0;
        for i in 0..counts.len() {
            for j in i + 1..counts.len() {
                total += counts[i] * counts[j];
            }
        }
        total
    }

    /// Values of a row of level indices.
    pub fn values(&self, row: &[usize]) -> Vec<f64> {
        row.iter().zip(&self.parameters).map(|(&l, p)| p.levels[l]).collect()
    }
}

/// `(param_i, level_i, param_j, level_j)` with `param_i < param_j`.
pub type Pair = (usize, usize, usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct CombinationSuite {
    /// Level indices, one row per assignment.
    pub rows: Vec<Vec<usize>>,
    /// Pairs the generator believes it covered.
    pub covered: BTreeSet<Pair>,
}

fn row_pairs(row: &[usize]) -> impl Iterator<Item = Pair> + '_ {
    (0..row.len()).flat_map(move |i| (i + 1..row.len()).map(move |j| (i, row[i], j, row[j])))
}

fn gain(row: &[usize], uncovered: &HashSet<Pair>) -> usize {
    row_pairs(row).filter(|p| uncovered.contains(p)).count()
}

fn decode(mut index: usize, counts: &[usize]) -> Vec<usize> {
    let mut row = vec![0; counts.len()];
    for k in (0..counts.len()).rev() {
        row[k] = index % counts[k];
        index /= counts[k];
    }
    row
}

pub fn generate_pairwise(space: &ParameterSpace, seed: u64) -> CombinationSuite {
    let counts = space.level_counts();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uncovered: HashSet<Pair> = HashSet::new();
    for i in 0..counts.len() {
        for j in i + 1..counts.len() {
            for a in 0..counts[i] {
                for b in 0..counts[j] {
                    uncovered.insert((i, a, j, b));
                }
            }
        }
    }
    let mut suite = CombinationSuite {
        rows: Vec::new(),
        covered: BTreeSet::new(),
    };
    let accept = |row: Vec<usize>, suite: &mut CombinationSuite, uncovered: &mut HashSet<Pair>| {
        for p in row_pairs(&row) {
            uncovered.remove(&p);
            suite.covered.insert(p);
        }
        suite.rows.push(row);
    };

    for r in 0..space.required.len() {
        let row = space.required_levels(r).expect("validated space");
        if !suite.rows.contains(&row) {
            accept(row, &mut suite, &mut uncovered);
        }
    }
    // A single parameter has no pairs; each level still gets a row.
    if counts.len() == 1 {
        for l in 0..counts[0] {
            if !suite.rows.contains(&vec![l]) {
                accept(vec![l], &mut suite, &mut uncovered);
            }
        }
        return suite;
    }

    let product = space.product_size();
    while !uncovered.is_empty() {
        let row = if product <= EXHAUSTIVE_LIMIT {
            best_exhaustive(&counts, &uncovered, &mut rng)
        } else {
            best_candidate(&counts, &uncovered, &mut rng)
        };
        accept(row, &mut suite, &mut uncovered);
    }
    suite
}

fn best_exhaustive(counts: &[usize], uncovered: &HashSet<Pair>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let product: usize = counts.iter().product();
    let mut best = Vec::new();
    let mut best_gain = 0;
    for index in 0..product {
        let row = decode(index, counts);
        let g = gain(&row, uncovered);
        if g > best_gain {
            best_gain = g;
            best = vec![row];
        } else if g == best_gain && g > 0 {
            best.push(row);
        }
    }
    best.swap_remove(rng.gen_range(0..best.len()))
}

/// AETG: start from the value appearing in most uncovered pairs, then fix
/// the remaining parameters one at a time in random order, each to the level
/// covering most new pairs with what is fixed so far.
fn best_candidate(counts: &[usize], uncovered: &HashSet<Pair>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let k = counts.len();
    let mut best: Option<(usize, Vec<usize>)> = None;
    for _ in 0..CANDIDATES {
        let mut tally = vec![Vec::new(); k];
        for (param, n) in counts.iter().enumerate() {
            tally[param] = vec![0usize; *n];
        }
        for &(i, a, j, b) in uncovered {
            tally[i][a] += 1;
            tally[j][b] += 1;
        }
        let top = tally.iter().flatten().copied().max().unwrap_or(0);
        let starts: Vec<(usize, usize)> = (0..k)
            .flat_map(|p| (0..counts[p]).map(move |l| (p, l)))
            .filter(|&(p, l)| tally[p][l] == top)
            .collect();
        let &(first, level) = starts.choose(rng).expect("some value is maximal");

        let mut row: Vec<Option<usize>> = vec![None; k];
        row[first] = Some(level);
        let mut order: Vec<usize> = (0..k).filter(|&p| p != first).collect();
        order.shuffle(rng);
        for p in order {
            let mut best_levels = Vec::new();
            let mut best_score = 0;
            for l in 0..counts[p] {
                let score = row
                    .iter()
                    .enumerate()
                    .filter_map(|(q, v)| v.map(|v| (q, v)))
                    .filter(|&(q, v)| {
                        let pair = if q < p { (q, v, p, l) } else { (p, l, q, v) };
                        uncovered.contains(&pair)
                    })
                    .count();
                if score > best_score || best_levels.is_empty() {
                    if score > best_score {
                        best_levels.clear();
                    }
                    best_score = score;
                    best_levels.push(l);
                } else if score == best_score {
                    best_levels.push(l);
                }
            }
            row[p] = Some(*best_levels.choose(rng).expect("at least one level"));
        }
        let row: Vec<usize> = row.into_iter().map(|v| v.expect("every parameter fixed")).collect();
        let g = gain(&row, uncovered);
        if best.as_ref().is_none_or(|(bg, _)| g > *bg) {
            best = Some((g, row));
        }
    }
    best.expect("at least one candidate").1
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub missing: Vec<Pair>,
}

impl CoverageReport {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Enumerates every cross-parameter value pair and reports those no row
/// covers.
pub fn verify_pairwise(space: &ParameterSpace, rows: &[Vec<usize>]) -> CoverageReport {
    let counts = space.level_counts();
    let mut missing = Vec::new();
    for i in 0..counts.len() {
        for j in i + 1..counts.len() {
            for a in 0..counts[i] {
                for b in 0..counts[j] {
                    let hit = rows
                        .iter()
                        .any(|row| row.len() == counts.len() && row[i] == a && row[j] == b);
                    if !hit {
                        missing.push((i, a, j, b));
                    }
                }
            }
        }
    }
    CoverageReport { missing }
}

/// One evaluated combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub combination: usize,
    pub values: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Set when the callback failed; such rows rank last.
    pub error: Option<String>,
}

/// Seed of combination `index` in a sweep seeded with `seed`.
pub fn combination_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Evaluates every suite row in parallel and ranks rows by the mean of their
/// final `window` scores, best first.
///
/// `evaluate(values, seed)` returns one score per episode.
pub fn run_sweep<F>(
    space: &ParameterSpace,
    suite: &CombinationSuite,
    window: usize,
    seed: u64,
    evaluate: F,
) -> Vec<SweepRow>
where
    F: Fn(&[f64], u64) -> Result<Vec<f64>, String> + Sync,
{
    let mut rows: Vec<SweepRow> = suite
        .rows
        .par_iter()
        .enumerate()
        .map(|(i, levels)| {
            let values = space.values(levels);
            let outcome = evaluate(&values, combination_seed(seed, i)).and_then(|scores| {
                let tail = &scores[scores.len().saturating_sub(window.max(1))..];
                crate::metrics::Stat::of(tail.iter().copied())
                    .ok_or_else(|| "no episodes were evaluated".to_string())
            });
            match outcome {
                Ok(s) => SweepRow {
                    combination: i,
                    values,
                    mean: s.mean,
                    min: s.min,
                    max: s.max,
                    error: None,
                },
                Err(e) => SweepRow {
                    combination: i,
                    values,
                    mean: f64::NAN,
                    min: f64::NAN,
                    max: f64::NAN,
                    error: Some(e),
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| match (a.error.is_some(), b.error.is_some()) {
        (false, true) => std::cmp::Ordering::Less,
        (true, false) => std::cmp::Ordering::Greater,
        _ => b.mean.total_cmp(&a.mean).then(a.combination.cmp(&b.combination)),
    });
    rows
}

pub fn sweep_csv(space: &ParameterSpace, rows: &[SweepRow]) -> String {
    let mut out = String::from("rank,combination");
    for p in &space.parameters {
        write!(out, ",{}", p.name).unwrap();
    }
    out.push_str(",mean_score,min_score,max_score,error\n");
    for (rank, r) in rows.iter().enumerate() {
        write!(out, "{},{}", rank + 1, r.combination).unwrap();
        for v in &r.values {
            write!(out, ",{v}").unwrap();
        }
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        writeln!(out, ",{},{},{},{}", r.mean, r.min, r.max, err).unwrap();
    }
    out
}

/// The A2C hyperparameter levels studied for external runs.
pub fn a2c_space() -> ParameterSpace {
    ParameterSpace::new(vec![
        param("alpha", &[1.5625e-06, 0.0001, 0.8192]),
        param("gamma", &[0.2302, 0.99]),
        param("vf_coef", &[0.1, 0.5, 0.9]),
    ])
    .expect("valid space")
}

/// The PPO hyperparameter levels studied for external runs.
pub fn ppo_space() -> ParameterSpace {
    ParameterSpace::new(vec![
        param("alpha", &[1.5625e-06, 0.0001, 0.8192]),
        param("gamma", &[0.2302, 0.99]),
        param("vf_coef", &[0.1, 0.5, 0.9]),
        param("clip_range", &[0.08, 0.2, 0.6]),
    ])
    .expect("valid space")
}

fn param(name: &str, levels: &[f64]) -> Parameter {
    Parameter {
        name: name.to_string(),
        levels: levels.to_vec(),
    }
}
