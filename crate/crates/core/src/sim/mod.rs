//! Ground-truth warehouse dynamics.
//!
//! A [`Warehouse`] owns the grid, the agent, the entry queues and the open
//! orders. It knows which moves are physically possible ([`Warehouse::plan_move`])
//! and how to carry them out ([`Warehouse::apply_move`]); deciding what a
//! move is *worth* lives in [`crate::env`].
//!
//! Time advances in [`Warehouse::tick`]. Each tick draws from the seeded
//! generator in a fixed order, so a seed plus an action sequence fully
//! determines a trajectory:
//!
//! 1. all stored and carried boxes, and every ready queue head, age by one
//!    step;
//! 2. the new-order timer counts down; when it expires and a delivery point
//!    is free, an order is created, drawing in turn its material (uniform),
//!    its size (uniform in `[order_size_min, order_size_max]`), its
//!    readiness delay `Poisson(order_lambda)`, one `Poisson(item_lambda)`
//!    readiness delay per item, and finally the next timer
//!    `Poisson(new_order_lambda)`.

mod poisson;
pub mod reach;

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{material_letter, WarehouseConfig};
use crate::grid::Coord;

pub use poisson::sample_poisson;
pub use reach::{CellAccess, ReachabilityMap};

/// Material type, 1-based (`A` is 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Material(u8);

impl Material {
    /// # Panics
    /// If `index` is 0.
    pub fn new(index: u8) -> Self {
        assert!(index >= 1, "materials are 1-based");
        Material(index)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn letter(self) -> char {
        material_letter(self.index() - 1)
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// One unit of material. Ages from the step it could first be picked up:
/// its readiness timer has elapsed and it is at the head of its entry queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Package {
    pub id: u64,
    pub material: Material,
    pub age: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Order {
    pub id: u64,
    pub material: Material,
    pub quantity: u32,
    pub remaining: u32,
    /// Index into the configured delivery points.
    pub delivery_point: usize,
    pub created_at: u64,
    /// First step at which the delivery point accepts this order's boxes.
    pub ready_at: u64,
}

impl Order {
    pub fn is_ready(&self, step: u64) -> bool {
        step >= self.ready_at
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueuedItem {
    pub id: u64,
    pub material: Material,
    pub ready_at: u64,
    pub sequence: u64,
    /// Steps since the item became a ready queue head; zero before that.
    pub age: u32,
}

impl QueuedItem {
    pub fn is_ready(&self, step: u64) -> bool {
        step >= self.ready_at
    }
}

/// Bookkeeping for one delivered box, captured before the move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeliveryRecord {
    pub step: u64,
    pub material: Material,
    pub age: u32,
    /// Oldest same-material box that could have been picked instead.
    pub oldest_available: Option<u32>,
    /// Oldest same-material box in stock, restricted cells included.
    pub oldest_in_stock: Option<u32>,
}

/// What a valid move would do, without doing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannedMove {
    PickFromGrid,
    /// Index of the entry point whose queue head is taken.
    PickFromEntry(usize),
    DropToStorage,
    /// Index of the delivery point that consumes the carried box.
    Deliver(usize),
    Neutral,
}

/// What a move did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveEffect {
    PickFromGrid(Package),
    PickFromEntry { entry: usize, package: Package },
    DropToStorage(Package),
    Deliver(DeliveryRecord),
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("move to {0} is invalid in the current state")]
    InvalidMove(Coord),
}

/// The complete world state of one episode.
#[derive(Debug, Clone)]
pub struct Warehouse {
    config: Arc<WarehouseConfig>,
    step: u64,
    grid: Vec<Option<Package>>,
    reach: ReachabilityMap,
    agent: Coord,
    carried: Option<Package>,
    queues: Vec<VecDeque<QueuedItem>>,
    /// One slot per delivery point.
    orders: Vec<Option<Order>>,
    order_timer: u32,
    next_delivery_point: usize,
    next_entry_point: usize,
    next_id: u64,
    next_sequence: u64,
    rng: ChaCha8Rng,
    delivered: Vec<DeliveryRecord>,
}

impl Warehouse {
    pub fn new(config: Arc<WarehouseConfig>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order_timer = sample_poisson(config.new_order_lambda, &mut rng);
        let cells = config.rows * config.cols;
        Warehouse {
            step: 0,
            grid: vec![None; cells],
            reach: ReachabilityMap::compute(config.rows, config.cols, &vec![false; cells]),
            agent: config.home_cell(),
            carried: None,
            queues: vec![VecDeque::new(); config.entry_points.len()],
            orders: vec![None; config.delivery_points.len()],
            order_timer,
            next_delivery_point: 0,
            next_entry_point: 0,
            next_id: 0,
            next_sequence: 0,
            rng,
            delivered: Vec::new(),
            config,
        }
    }

    pub fn config(&self) -> &WarehouseConfig {
        &self.config
    }

    pub fn shared_config(&self) -> &Arc<WarehouseConfig> {
        &self.config
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn agent(&self) -> Coord {
        self.agent
    }

    pub fn carried(&self) -> Option<Package> {
        self.carried
    }

    pub fn reach(&self) -> &ReachabilityMap {
        &self.reach
    }

    pub fn package_at(&self, at: Coord) -> Option<Package> {
        self.grid[self.idx(at)]
    }

    pub fn queues(&self) -> &[VecDeque<QueuedItem>] {
        &self.queues
    }

    pub fn order_timer(&self) -> u32 {
        self.order_timer
    }

    pub fn delivered_log(&self) -> &[DeliveryRecord] {
        &self.delivered
    }

    pub fn open_orders(&self) -> impl Iterator<Item = &Order> {
        self.orders.iter().flatten()
    }

    pub fn order_at(&self, point: usize) -> Option<&Order> {
        self.orders[point].as_ref()
    }

    /// The open order at `point` if the point currently accepts boxes.
    pub fn ready_order_at(&self, point: usize) -> Option<&Order> {
        self.orders[point].as_ref().filter(|o| o.is_ready(self.step))
    }

    /// Whether some open, ready order expects `material`.
    pub fn is_deliverable(&self, material: Material) -> bool {
        (0..self.orders.len()).any(|p| self.ready_order_at(p).is_some_and(|o| o.material == material))
    }

    /// Head of an entry queue, if it is ready to be picked up.
    pub fn ready_head(&self, entry: usize) -> Option<&QueuedItem> {
        self.queues[entry].front().filter(|q| q.is_ready(self.step))
    }

    /// Stored boxes with their cells, row-major.
    pub fn stored(&self) -> impl Iterator<Item = (Coord, Package)> + '_ {
        self.grid.iter().enumerate().filter_map(|(i, p)| {
            p.map(|p| (Coord::new(i / self.config.cols, i % self.config.cols), p))
        })
    }

    pub fn stored_count(&self) -> usize {
        self.grid.iter().flatten().count()
    }

    /// Boxes the agent could pick right now: pickable stored boxes and ready
    /// entry-queue heads, with the cell the agent would move to.
    pub fn available(&self) -> Vec<(Coord, Package)> {
        let mut out: Vec<(Coord, Package)> = self
            .stored()
            .filter(|&(at, _)| self.reach.is_pickable(at))
            .collect();
        for (entry, &at) in self.config.entry_points.iter().enumerate() {
            if let Some(item) = self.ready_head(entry) {
                out.push((at, self.materialize(item)));
            }
        }
        out
    }

    /// Maximum age over every available box, of any material.
    pub fn oldest_available_age(&self) -> Option<u32> {
        self.available().into_iter().map(|(_, p)| p.age).max()
    }

    /// Maximum age over available boxes of one material.
    pub fn oldest_available_age_of(&self, material: Material) -> Option<u32> {
        self.available()
            .into_iter()
            .filter(|(_, p)| p.material == material)
            .map(|(_, p)| p.age)
            .max()
    }

    /// Maximum age over stored boxes (restricted ones included) and ready
    /// entry heads of one material.
    pub fn oldest_in_stock_age_of(&self, material: Material) -> Option<u32> {
        let stored = self.stored().filter(|(_, p)| p.material == material).map(|(_, p)| p.age);
        let heads = (0..self.queues.len())
            .filter_map(|e| self.ready_head(e))
            .filter(|q| q.material == material)
            .map(|q| q.age);
        stored.chain(heads).max()
    }

    /// Whether, for some material, the oldest box in stock sits on a
    /// restricted cell.
    pub fn oldest_is_restricted(&self) -> bool {
        (1..=self.config.material_count()).any(|k| {
            let m = Material::new(k as u8);
            match (self.oldest_in_stock_age_of(m), self.oldest_available_age_of(m)) {
                (Some(stock), Some(avail)) => stock > avail,
                (Some(_), None) => true,
                _ => false,
            }
        })
    }

    fn materialize(&self, item: &QueuedItem) -> Package {
        Package {
            id: item.id,
            material: item.material,
            age: item.age,
        }
    }

    fn idx(&self, at: Coord) -> usize {
        at.row * self.config.cols + at.col
    }

    fn refresh_reach(&mut self) {
        let occupied: Vec<bool> = self.grid.iter().map(Option::is_some).collect();
        self.reach = ReachabilityMap::compute(self.config.rows, self.config.cols, &occupied);
    }

    /// The physical outcome of moving to `target`, or `None` if the move is
    /// invalid.
    pub fn plan_move(&self, target: Coord) -> Option<PlannedMove> {
        if !self.config.in_bounds(target) {
            return None;
        }
        let access = self.reach.get(target);
        match (self.carried, access) {
            (_, CellAccess::Restricted) => None,
            (Some(p), CellAccess::Crown) => self
                .config
                .delivery_index(target)
                .filter(|&d| self.ready_order_at(d).is_some_and(|o| o.material == p.material))
                .map(PlannedMove::Deliver),
            (Some(_), CellAccess::Placeable) => Some(PlannedMove::DropToStorage),
            (Some(_), CellAccess::Pickable) => None,
            (None, CellAccess::Crown) => {
                if let Some(e) = self.config.entry_index(target) {
                    self.ready_head(e).map(|_| PlannedMove::PickFromEntry(e))
                } else if self.config.delivery_index(target).is_some() {
                    None
                } else {
                    Some(PlannedMove::Neutral)
                }
            }
            (None, CellAccess::Pickable) => Some(PlannedMove::PickFromGrid),
            (None, CellAccess::Placeable) => Some(PlannedMove::Neutral),
        }
    }

    /// Moves the agent to `target` and performs the resulting pick, drop or
    /// delivery. The clock does not advance; see [`Warehouse::tick`].
    pub fn apply_move(&mut self, target: Coord) -> Result<MoveEffect, SimError> {
        let plan = self.plan_move(target).ok_or(SimError::InvalidMove(target))?;
        let effect = match plan {
            PlannedMove::PickFromGrid => {
                let i = self.idx(target);
                let p = self.grid[i].take().expect("pickable cell holds a box");
                self.carried = Some(p);
                self.refresh_reach();
                MoveEffect::PickFromGrid(p)
            }
            PlannedMove::PickFromEntry(entry) => {
                let item = self.queues[entry].pop_front().expect("ready head exists");
                let p = self.materialize(&item);
                self.carried = Some(p);
                MoveEffect::PickFromEntry { entry, package: p }
            }
            PlannedMove::DropToStorage => {
                let p = self.carried.take().expect("dropping requires a carried box");
                let i = self.idx(target);
                self.grid[i] = Some(p);
                self.refresh_reach();
                MoveEffect::DropToStorage(p)
            }
            PlannedMove::Deliver(point) => {
                let p = self.carried.take().expect("delivering requires a carried box");
                let record = DeliveryRecord {
                    step: self.step,
                    material: p.material,
                    age: p.age,
                    oldest_available: self.oldest_available_age_of(p.material),
                    oldest_in_stock: self.oldest_in_stock_age_of(p.material),
                };
                let slot = &mut self.orders[point];
                let order = slot.as_mut().expect("deliver targets an open order");
                order.remaining -= 1;
                if order.remaining == 0 {
                    *slot = None;
                }
                self.delivered.push(record);
                MoveEffect::Deliver(record)
            }
            PlannedMove::Neutral => MoveEffect::Neutral,
        };
        self.agent = target;
        Ok(effect)
    }

    /// Advances the clock by one step: ages boxes and runs order/item
    /// generation.
    pub fn tick(&mut self) {
        self.step += 1;
        for p in self.grid.iter_mut().flatten().chain(self.carried.as_mut()) {
            p.age += 1;
        }
        let step = self.step;
        for head in self.queues.iter_mut().filter_map(VecDeque::front_mut) {
            if head.ready_at < step {
                head.age += 1;
            }
        }
        if self.order_timer <= 1 {
            if let Some(point) = self.free_delivery_point() {
                self.create_order(point);
                self.order_timer = sample_poisson(self.config.new_order_lambda, &mut self.rng);
            } else {
                // Held until a delivery point frees up.
                self.order_timer = 0;
            }
        } else {
            self.order_timer -= 1;
        }
    }

    fn free_delivery_point(&self) -> Option<usize> {
        let n = self.orders.len();
        (0..n)
            .map(|k| (self.next_delivery_point + k) % n)
            .find(|&p| self.orders[p].is_none())
    }

    fn create_order(&mut self, point: usize) {
        let cfg = Arc::clone(&self.config);
        let m = cfg.materials.len();
        let material_ix = self.rng.gen_range(0..m);
        let quantity = self.rng.gen_range(cfg.order_size_min..=cfg.order_size_max);
        let spec = &cfg.materials[material_ix];
        let material = Material::new(material_ix as u8 + 1);
        let delay = sample_poisson(spec.order_lambda, &mut self.rng) as u64;

        let id = self.fresh_id();
        self.orders[point] = Some(Order {
            id,
            material,
            quantity,
            remaining: quantity,
            delivery_point: point,
            created_at: self.step,
            ready_at: self.step + delay,
        });
        self.next_delivery_point = (point + 1) % self.orders.len();

        for _ in 0..quantity {
            let delay = sample_poisson(spec.item_lambda, &mut self.rng) as u64;
            let entry = self.next_entry_point;
            self.next_entry_point = (entry + 1) % self.queues.len();
            let item = QueuedItem {
                id: self.fresh_id(),
                material,
                ready_at: self.step + delay,
                sequence: self.next_sequence,
                age: 0,
            };
            self.next_sequence += 1;
            self.queues[entry].push_back(item);
        }
    }

    fn fresh_id(&mut self) -> u64 {
        self.next_id += 1;
        self.next_id
    }

    /// Boxes ever enqueued at entry points.
    pub fn created_count(&self) -> u64 {
        self.next_sequence
    }

    /// Enqueued = queued + stored + carried + delivered.
    pub fn conserves_boxes(&self) -> bool {
        let queued: usize = self.queues.iter().map(VecDeque::len).sum();
        let held = queued + self.stored_count() + usize::from(self.carried.is_some());
        held as u64 + self.delivered.len() as u64 == self.created_count()
    }

    // Scenario construction. These bypass generation but keep every state
    // invariant; they exist for tests and tooling that need a specific
    // situation.

    /// Stores a box of `material` and `age` at an empty interior cell.
    ///
    /// # Panics
    /// If `at` is a crown cell or already occupied.
    pub fn place_package(&mut self, at: Coord, material: Material, age: u32) -> Package {
        assert!(!self.config.is_crown(at), "boxes cannot be stored on the crown");
        let i = self.idx(at);
        assert!(self.grid[i].is_none(), "cell {at} already holds a box");
        let p = Package {
            id: self.fresh_id(),
            material,
            age,
        };
        self.grid[i] = Some(p);
        self.next_sequence += 1;
        self.refresh_reach();
        p
    }

    /// Puts a box in the agent's hands.
    pub fn give_agent(&mut self, material: Material, age: u32) -> Package {
        assert!(self.carried.is_none(), "agent already carries a box");
        let p = Package {
            id: self.fresh_id(),
            material,
            age,
        };
        self.carried = Some(p);
        self.next_sequence += 1;
        p
    }

    /// Appends a queue item that has already been ready for `age` steps.
    pub fn enqueue_ready(&mut self, entry: usize, material: Material, age: u32) {
        let id = self.fresh_id();
        let item = QueuedItem {
            id,
            material,
            ready_at: self.step,
            sequence: self.next_sequence,
            age,
        };
        self.next_sequence += 1;
        self.queues[entry].push_back(item);
    }

    /// Opens an order at a delivery point, ready now or `ready_in` steps
    /// from now. Items are not generated for it.
    pub fn open_order(&mut self, point: usize, material: Material, quantity: u32, ready_in: u64) {
        assert!(self.orders[point].is_none(), "delivery point {point} already has an order");
        let id = self.fresh_id();
        self.orders[point] = Some(Order {
            id,
            material,
            quantity,
            remaining: quantity,
            delivery_point: point,
            created_at: self.step,
            ready_at: self.step + ready_in,
        });
    }

    pub fn set_agent(&mut self, at: Coord) {
        assert!(self.config.in_bounds(at));
        self.agent = at;
    }

    pub fn set_order_timer(&mut self, steps: u32) {
        self.order_timer = steps;
    }
}
