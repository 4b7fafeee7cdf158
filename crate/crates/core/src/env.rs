//! The reinforcement-learning facade over [`Warehouse`].
//!
//! # Observation layout
//!
//! A [`StateTensor`] has shape `rows x cols x (6 + m)`, stored row-major
//! with the plane index fastest (`[row][col][plane]`). Values are `u8`:
//!
//! | plane | content |
//! |-------|---------|
//! | 0 | stored box material, `round(255 * k / m)` |
//! | 1 | stored box age, `round(255 * min(age, age_cap) / age_cap)` |
//! | 2 | 255 on restricted cells |
//! | 3 | agent cell: 255 empty-handed, 128 carrying |
//! | 4 | carried material at the agent cell, `round(255 * k / m)` |
//! | 5 | 255 on entry points whose queue head is ready |
//! | 6 + k - 1 | 255 on delivery points with an open, ready order for material `k` |
//!
//! This layout is the wire contract of the protocol server.
//!
//! # Actions
//!
//! An action is a target cell. Flat index `row * cols + col`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::WarehouseConfig;
use crate::grid::Coord;
use crate::sim::{Material, MoveEffect, Package, PlannedMove, SimError, Warehouse};

/// Reward for an invalid action.
pub const INVALID_REWARD: f64 = -1.0;
/// Reward for neglecting useful work.
pub const IDLE_REWARD: f64 = -0.9;
/// Reward for the least FIFO-compliant delivery.
pub const WORST_DELIVERY_REWARD: f64 = -0.5;

pub const AGENT_EMPTY: u8 = 255;
pub const AGENT_CARRYING: u8 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action(pub Coord);

impl Action {
    pub fn new(row: usize, col: usize) -> Self {
        Action(Coord::new(row, col))
    }

    pub fn from_index(index: usize, cols: usize) -> Self {
        Action(Coord::new(index / cols, index % cols))
    }

    pub fn index(self, cols: usize) -> usize {
        self.0.row * cols + self.0.col
    }

    pub fn target(self) -> Coord {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionClass {
    Invalid,
    Idle,
    Delivery,
    Neutral,
}

impl ActionClass {
    pub fn is_valid(self) -> bool {
        self != ActionClass::Invalid
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateTensor {
    rows: usize,
    cols: usize,
    depth: usize,
    data: Vec<u8>,
}

impl StateTensor {
    pub fn zeros(rows: usize, cols: usize, depth: usize) -> Self {
        StateTensor {
            rows,
            cols,
            depth,
            data: vec![0; rows * cols * depth],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.depth)
    }

    pub fn get(&self, at: Coord, plane: usize) -> u8 {
        self.data[self.offset(at, plane)]
    }

    pub fn set(&mut self, at: Coord, plane: usize, value: u8) {
        let i = self.offset(at, plane);
        self.data[i] = value;
    }

    fn offset(&self, at: Coord, plane: usize) -> usize {
        debug_assert!(at.row < self.rows && at.col < self.cols && plane < self.depth);
        (at.row * self.cols + at.col) * self.depth + plane
    }

    /// Raw values in `[row][col][plane]` order.
    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    /// One plane as a `rows x cols` row-major vector.
    pub fn plane(&self, plane: usize) -> Vec<u8> {
        self.data.iter().skip(plane).step_by(self.depth).copied().collect()
    }

    /// Nested `[row][col][plane]` arrays.
    pub fn to_nested(&self) -> Vec<Vec<Vec<u8>>> {
        self.data
            .chunks(self.cols * self.depth)
            .map(|row| row.chunks(self.depth).map(<[u8]>::to_vec).collect())
            .collect()
    }

    pub fn from_nested(nested: &[Vec<Vec<u8>>]) -> Option<Self> {
        let rows = nested.len();
        let cols = nested.first()?.len();
        let depth = nested.first()?.first()?.len();
        let mut data = Vec::with_capacity(rows * cols * depth);
        for row in nested {
            if row.len() != cols {
                return None;
            }
            for cell in row {
                if cell.len() != depth {
                    return None;
                }
                data.extend_from_slice(cell);
            }
        }
        Some(StateTensor {
            rows,
            cols,
            depth,
            data,
        })
    }
}

/// `round(255 * value / max)`.
fn scale(value: u32, max: u32) -> u8 {
    (255.0 * f64::from(value) / f64::from(max)).round() as u8
}

pub fn encode_material(material: Material, m: usize) -> u8 {
    scale(material.index() as u32, m as u32)
}

/// Builds the observation tensor for a state.
pub fn encode_state(w: &Warehouse) -> StateTensor {
    let cfg = w.config();
    let m = cfg.material_count();
    let mut t = StateTensor::zeros(cfg.rows, cfg.cols, cfg.depth());
    for (at, p) in w.stored() {
        t.set(at, 0, encode_material(p.material, m));
        t.set(at, 1, scale(p.age.min(cfg.age_cap), cfg.age_cap));
    }
    for at in cfg.cells() {
        if w.reach().is_restricted(at) {
            t.set(at, 2, 255);
        }
    }
    match w.carried() {
        Some(p) => {
            t.set(w.agent(), 3, AGENT_CARRYING);
            t.set(w.agent(), 4, encode_material(p.material, m));
        }
        None => t.set(w.agent(), 3, AGENT_EMPTY),
    }
    for (e, &at) in cfg.entry_points.iter().enumerate() {
        if w.ready_head(e).is_some() {
            t.set(at, 5, 255);
        }
    }
    for (d, &at) in cfg.delivery_points.iter().enumerate() {
        if let Some(order) = w.ready_order_at(d) {
            t.set(at, 5 + order.material.index(), 255);
        }
    }
    t
}

/// Whether a delivery could be made or set up right now: the carried box,
/// a pickable stored box or a ready entry head matches an open ready order.
pub fn delivery_pending(w: &Warehouse) -> bool {
    if let Some(p) = w.carried() {
        if w.is_deliverable(p.material) {
            return true;
        }
    }
    w.available().iter().any(|(_, p)| w.is_deliverable(p.material))
}

/// Whether an empty-handed agent could collect a ready entry item.
pub fn entry_pending(w: &Warehouse) -> bool {
    w.carried().is_none() && (0..w.queues().len()).any(|e| w.ready_head(e).is_some())
}

/// Classifies moving to `target`.
///
/// A valid move is `Idle` when it neglects useful work:
/// - while a delivery is pending, any move that neither delivers, picks a
///   deliverable box, nor puts down a box whose delivery would not be
///   first-in-first-out (nobody wants it, or an older one is available);
/// - otherwise, while entry items wait, any move that picks nothing up.
pub fn classify_action(w: &Warehouse, target: Coord) -> ActionClass {
    let Some(plan) = w.plan_move(target) else {
        return ActionClass::Invalid;
    };
    if let PlannedMove::Deliver(_) = plan {
        return ActionClass::Delivery;
    }
    let idle = if delivery_pending(w) {
        match plan {
            PlannedMove::PickFromGrid => {
                let p = w.package_at(target).expect("pickable cell holds a box");
                !w.is_deliverable(p.material)
            }
            PlannedMove::PickFromEntry(e) => {
                let head = w.ready_head(e).expect("ready head exists");
                !w.is_deliverable(head.material)
            }
            PlannedMove::DropToStorage => w.carried().is_some_and(|p| {
                w.is_deliverable(p.material)
                    && w.oldest_available_age_of(p.material).is_none_or(|o| o <= p.age)
            }),
            PlannedMove::Neutral => true,
            PlannedMove::Deliver(_) => unreachable!(),
        }
    } else {
        plan == PlannedMove::Neutral && entry_pending(w)
    };
    if idle {
        ActionClass::Idle
    } else {
        ActionClass::Neutral
    }
}

/// Valid-action mask over flat action indices.
pub fn valid_action_mask(w: &Warehouse) -> Vec<bool> {
    w.config()
        .cells()
        .map(|at| w.plan_move(at).is_some())
        .collect()
}

/// Reward of a delivery given the age gap to the oldest available box of
/// the same material: 0 when the gap is 0, falling linearly to −0.5 at
/// `age_diff_cap`.
pub fn delivery_reward(delivered_age: u32, oldest_available: Option<u32>, age_diff_cap: u32) -> f64 {
    let gap = oldest_available.map_or(0, |o| i64::from(o) - i64::from(delivered_age));
    let gap = gap.clamp(0, i64::from(age_diff_cap));
    WORST_DELIVERY_REWARD * gap as f64 / f64::from(age_diff_cap)
}

/// Reward of taking `target` in state `w`, computed before the move.
pub fn reward(w: &Warehouse, target: Coord) -> f64 {
    match classify_action(w, target) {
        ActionClass::Invalid => INVALID_REWARD,
        ActionClass::Idle => IDLE_REWARD,
        ActionClass::Neutral => 0.0,
        ActionClass::Delivery => {
            let p = w.carried().expect("delivery requires a carried box");
            delivery_reward(p.age, w.oldest_available_age_of(p.material), w.config().age_diff_cap)
        }
    }
}

/// Discounted sum `sum_t gamma^t r_t`. With `gamma = 1` this is the episode
/// score.
pub fn episode_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards
        .iter()
        .rev()
        .fold(0.0, |acc, &r| r + gamma * acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub action_class: ActionClass,
    pub delivered_box_age: Option<u32>,
    /// Oldest available box of the delivered material, before the move.
    pub oldest_available_age: Option<u32>,
    pub valid_action_mask: Vec<bool>,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: StateTensor,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
    /// Physical effect of the move; `None` for invalid actions.
    pub effect: Option<MoveEffect>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("episode finished after {0} steps; call reset")]
    EpisodeFinished(u64),
    #[error("action {0} is outside the grid")]
    OutOfBounds(Coord),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One episode stream over a fixed configuration.
#[derive(Debug, Clone)]
pub struct Env {
    config: Arc<WarehouseConfig>,
    sim: Warehouse,
}

impl Env {
    pub fn new(config: Arc<WarehouseConfig>, seed: u64) -> Self {
        let sim = Warehouse::new(Arc::clone(&config), seed);
        Env { config, sim }
    }

    /// Starts a fresh episode and returns its first observation.
    pub fn reset(&mut self, seed: u64) -> StateTensor {
        self.sim = Warehouse::new(Arc::clone(&self.config), seed);
        self.observe()
    }

    pub fn config(&self) -> &Arc<WarehouseConfig> {
        &self.config
    }

    pub fn sim(&self) -> &Warehouse {
        &self.sim
    }

    /// Mutable access for constructing scenarios.
    pub fn sim_mut(&mut self) -> &mut Warehouse {
        &mut self.sim
    }

    pub fn observe(&self) -> StateTensor {
        encode_state(&self.sim)
    }

    pub fn mask(&self) -> Vec<bool> {
        valid_action_mask(&self.sim)
    }

    pub fn is_done(&self) -> bool {
        self.sim.step() >= u64::from(self.config.max_steps_per_episode)
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        if self.is_done() {
            return Err(EnvError::EpisodeFinished(self.sim.step()));
        }
        let target = action.target();
        if !self.config.in_bounds(target) {
            return Err(EnvError::OutOfBounds(target));
        }
        let class = classify_action(&self.sim, target);
        let reward = reward(&self.sim, target);
        let effect = if class.is_valid() {
            Some(self.sim.apply_move(target)?)
        } else {
            None
        };
        self.sim.tick();

        let (delivered_box_age, oldest_available_age) = match effect {
            Some(MoveEffect::Deliver(rec)) => (Some(rec.age), rec.oldest_available),
            _ => (None, None),
        };
        Ok(StepResult {
            observation: self.observe(),
            reward,
            done: self.is_done(),
            info: StepInfo {
                action_class: class,
                delivered_box_age,
                oldest_available_age,
                valid_action_mask: self.mask(),
                step: self.sim.step(),
            },
            effect,
        })
    }
}

/// Mean age of boxes inside the warehouse (stored and carried), or `None`
/// when it is empty.
pub fn mean_box_age(w: &Warehouse) -> Option<f64> {
    let ages: Vec<u32> = w
        .stored()
        .map(|(_, p)| p.age)
        .chain(w.carried().map(|p: Package| p.age))
        .collect();
    if ages.is_empty() {
        None
    } else {
        Some(ages.iter().map(|&a| f64::from(a)).sum::<f64>() / ages.len() as f64)
    }
}
