//! Per-episode evaluation metrics and trailing-window aggregation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{mean_box_age, ActionClass, StepResult};
use crate::sim::{MoveEffect, Warehouse};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// Undiscounted return.
    pub score: f64,
    pub delivered_boxes: u32,
    /// Average over steps of the mean age of boxes in the warehouse; steps
    /// with an empty warehouse are skipped.
    pub mean_box_age: f64,
    pub fifo_violations: u32,
    pub fifo_violation_rate: f64,
    pub invalid_action_count: u32,
    /// Steps after which at least one restricted cell existed.
    pub restricted_steps: u32,
    /// Steps after which the oldest box of some material was restricted.
    pub restricted_oldest_steps: u32,
    pub steps: u32,
}

impl EpisodeMetrics {
    /// Counts one delivery; it violates FIFO when an older box was in stock.
    pub fn record_delivery(&mut self, delivered_age: u32, oldest_age: u32) {
        self.delivered_boxes += 1;
        if delivered_age < oldest_age {
            self.fifo_violations += 1;
        }
        self.fifo_violation_rate = f64::from(self.fifo_violations) / f64::from(self.delivered_boxes);
    }
}

/// Accumulates [`EpisodeMetrics`] step by step.
#[derive(Debug, Clone, Default)]
pub struct MetricsRecorder {
    metrics: EpisodeMetrics,
    age_sum: f64,
    age_steps: u32,
}

impl MetricsRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a finished step; `after` is the state the step produced.
    pub fn observe(&mut self, result: &StepResult, after: &Warehouse) {
        let m = &mut self.metrics;
        m.steps += 1;
        m.score += result.reward;
        if result.info.action_class == ActionClass::Invalid {
            m.invalid_action_count += 1;
        }
        if let Some(MoveEffect::Deliver(rec)) = result.effect {
            m.record_delivery(rec.age, rec.oldest_in_stock.unwrap_or(0));
        }
        if after.reach().any_restricted() {
            m.restricted_steps += 1;
            if after.oldest_is_restricted() {
                m.restricted_oldest_steps += 1;
            }
        }
        if let Some(age) = mean_box_age(after) {
            self.age_sum += age;
            self.age_steps += 1;
        }
    }

    pub fn finish(mut self) -> EpisodeMetrics {
        if self.age_steps > 0 {
            self.metrics.mean_box_age = self.age_sum / f64::from(self.age_steps);
        }
        self.metrics
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Stat> {
        let mut n = 0usize;
        let (mut sum, mut min, mut max) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        (n > 0).then(|| Stat {
            mean: sum / n as f64,
            min,
            max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub episodes: usize,
    pub score: Stat,
    pub delivered_boxes: Stat,
    pub mean_box_age: Stat,
    pub fifo_violation_rate: Stat,
    pub invalid_action_count: Stat,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("cannot aggregate an empty metrics list")]
    Empty,
    #[error("window must be positive")]
    ZeroWindow,
}

/// Statistics over the last `window` episodes (all of them if fewer).
pub fn aggregate(list: &[EpisodeMetrics], window: usize) -> Result<Summary, AggregateError> {
    if list.is_empty() {
        return Err(AggregateError::Empty);
    }
    if window == 0 {
        return Err(AggregateError::ZeroWindow);
    }
    let tail = &list[list.len().saturating_sub(window)..];
    let stat = |f: fn(&EpisodeMetrics) -> f64| Stat::of(tail.iter().map(f)).expect("non-empty");
    Ok(Summary {
        episodes: tail.len(),
        score: stat(|m| m.score),
        delivered_boxes: stat(|m| f64::from(m.delivered_boxes)),
        mean_box_age: stat(|m| m.mean_box_age),
        fifo_violation_rate: stat(|m| m.fifo_violation_rate),
        invalid_action_count: stat(|m| f64::from(m.invalid_action_count)),
    })
}

/// Frozen column order of the per-episode CSV.
pub const EPISODE_CSV_HEADER: &str =
    "episode,policy,seed,score,delivered_boxes,mean_box_age,fifo_violation_rate,invalid_action_count";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub policy: String,
    pub seed: u64,
    pub metrics: EpisodeMetrics,
}

/// Renders episode rows as CSV. Floats use Rust's shortest round-trip
/// formatting, so identical runs give byte-identical files.
pub fn episodes_csv(rows: &[EpisodeRow]) -> String {
    let mut out = String::from(EPISODE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let m = &r.metrics;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.episode,
            r.policy,
            r.seed,
            m.score,
            m.delivered_boxes,
            m.mean_box_age,
            m.fifo_violation_rate,
            m.invalid_action_count
        )
        .unwrap();
    }
    out
}
