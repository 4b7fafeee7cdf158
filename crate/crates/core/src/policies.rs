//! Baseline controllers: uniform random, the Initial Human Policy (IHP) and
//! the Enhanced Human Policy (EHP).
//!
//! IHP keeps the entry queues empty first and only delivers, oldest box
//! first, once nothing is waiting. EHP delivers whenever it can, always
//! taking the oldest available box of a wanted material (straight from the
//! entry queue when that head is the oldest), and stores incoming items only
//! when nothing can be delivered. A carried box that became wanted while
//! older boxes of its material wait in storage is put away, not delivered.
//!
//! Both human policies are pure functions of the state. Ties between
//! equally old boxes go to the lowest `(row, col)`; boxes are stored in the
//! placeable cell closest (Manhattan) to an entry point, again lowest
//! `(row, col)` on ties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{Action, StateTensor};
use crate::grid::Coord;
use crate::sim::{Package, Warehouse};

/// What a policy sees each step.
#[derive(Debug, Clone, Copy)]
pub struct PolicyInput<'a> {
    pub sim: &'a Warehouse,
    pub observation: &'a StateTensor,
    pub mask: &'a [bool],
}

pub trait Policy {
    fn name(&self) -> &str;

    fn act(&mut self, input: PolicyInput<'_>) -> Action;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rationale {
    StoreFromEntry,
    DeliverFromEntry,
    DeliverFromStorage,
    PickOldest,
    IdleHome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyDecision {
    pub action: Action,
    pub rationale: Rationale,
}

impl PolicyDecision {
    fn new(target: Coord, rationale: Rationale) -> Self {
        PolicyDecision {
            action: Action(target),
            rationale,
        }
    }
}

/// Picks uniformly among all `rows * cols` actions, valid or not.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self, rows: usize, cols: usize) -> Action {
        Action::from_index(self.rng.gen_range(0..rows * cols), cols)
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn act(&mut self, input: PolicyInput<'_>) -> Action {
        let cfg = input.sim.config();
        self.sample(cfg.rows, cfg.cols)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Ihp;

impl Policy for Ihp {
    fn name(&self) -> &str {
        "ihp"
    }

    fn act(&mut self, input: PolicyInput<'_>) -> Action {
        ihp_policy(input.sim).action
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Ehp;

impl Policy for Ehp {
    fn name(&self) -> &str {
        "ehp"
    }

    fn act(&mut self, input: PolicyInput<'_>) -> Action {
        ehp_policy(input.sim).action
    }
}

/// Oldest first, then lowest cell.
fn older(a: &(Coord, Package), b: &(Coord, Package)) -> std::cmp::Ordering {
    b.1.age.cmp(&a.1.age).then(a.0.cmp(&b.0))
}

/// Placeable cell nearest to any entry point.
pub fn storage_cell(w: &Warehouse) -> Option<Coord> {
    let cfg = w.config();
    cfg.cells()
        .filter(|&at| w.reach().is_placeable(at))
        .min_by_key(|&at| {
            let d = cfg.entry_points.iter().map(|&e| at.manhattan(e)).min().unwrap_or(0);
            (d, at)
        })
}

/// First delivery point accepting the carried box.
fn delivery_target(w: &Warehouse) -> Option<Coord> {
    let p = w.carried()?;
    let cfg = w.config();
    (0..cfg.delivery_points.len())
        .find(|&d| w.ready_order_at(d).is_some_and(|o| o.material == p.material))
        .map(|d| cfg.delivery_points[d])
}

/// Oldest ready entry head.
fn oldest_entry_head(w: &Warehouse) -> Option<Coord> {
    let cfg = w.config();
    (0..cfg.entry_points.len())
        .filter_map(|e| w.ready_head(e).map(|q| (cfg.entry_points[e], q.age)))
        .min_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)))
        .map(|(at, _)| at)
}

/// Oldest available box that some ready order wants.
fn oldest_deliverable(w: &Warehouse, include_entry: bool) -> Option<(Coord, Package)> {
    let cfg = w.config();
    w.available()
        .into_iter()
        .filter(|(at, p)| w.is_deliverable(p.material) && (include_entry || !cfg.is_crown(*at)))
        .min_by(older)
}

fn home(w: &Warehouse) -> PolicyDecision {
    PolicyDecision::new(w.config().home_cell(), Rationale::IdleHome)
}

/// Stores the carried box, or falls back to delivering it when storage is
/// full. With neither possible every action is invalid and the policy waits
/// at home.
fn store_carried(w: &Warehouse) -> PolicyDecision {
    if let Some(at) = storage_cell(w) {
        PolicyDecision::new(at, Rationale::StoreFromEntry)
    } else if let Some(d) = delivery_target(w) {
        PolicyDecision::new(d, Rationale::DeliverFromStorage)
    } else {
        home(w)
    }
}

pub fn ihp_policy(w: &Warehouse) -> PolicyDecision {
    let cfg = w.config();
    if w.carried().is_some() {
        // Standing inside storage means the box was fetched for delivery.
        let fetched = !cfg.is_crown(w.agent());
        if fetched {
            if let Some(d) = delivery_target(w) {
                return PolicyDecision::new(d, Rationale::DeliverFromStorage);
            }
        }
        return store_carried(w);
    }
    if let Some(entry) = oldest_entry_head(w) {
        return PolicyDecision::new(entry, Rationale::StoreFromEntry);
    }
    if let Some((at, _)) = oldest_deliverable(w, false) {
        return PolicyDecision::new(at, Rationale::PickOldest);
    }
    home(w)
}

pub fn ehp_policy(w: &Warehouse) -> PolicyDecision {
    let cfg = w.config();
    if let Some(p) = w.carried() {
        let oldest = w.oldest_available_age_of(p.material).is_none_or(|o| o <= p.age);
        if let Some(d) = delivery_target(w).filter(|_| oldest) {
            let rationale = if cfg.entry_index(w.agent()).is_some() {
                Rationale::DeliverFromEntry
            } else {
                Rationale::DeliverFromStorage
            };
            return PolicyDecision::new(d, rationale);
        }
        return store_carried(w);
    }
    if let Some((at, _)) = oldest_deliverable(w, true) {
        let rationale = if cfg.is_crown(at) {
            Rationale::DeliverFromEntry
        } else {
            Rationale::PickOldest
        };
        return PolicyDecision::new(at, rationale);
    }
    if let Some(entry) = oldest_entry_head(w) {
        return PolicyDecision::new(entry, Rationale::StoreFromEntry);
    }
    home(w)
}
