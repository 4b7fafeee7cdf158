//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Every check compares the library
//! against an oracle written here from the rules, not against itself.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use storehouse_core::config::{default_config, load_config};
use storehouse_core::doe::{a2c_space, generate_pairwise, ppo_space, ParameterSpace};
use storehouse_core::env::{ActionClass, AGENT_CARRYING, AGENT_EMPTY};
use storehouse_core::episode::{baseline, episode_seed, run_episode, run_episode_with, run_seeds};
use storehouse_core::metrics::{episodes_csv, EpisodeRow};
use storehouse_core::sim::reach::{CellAccess, ReachabilityMap};
use storehouse_core::sim::Material;
use storehouse_core::{Action, Coord, Env, Warehouse, WarehouseConfig};
use storehouse_rl::dqn::td_loss_and_grad;
use storehouse_rl::train::curve_csv;
use storehouse_rl::{evaluate, train, Hyperparameters, Mlp, Transition, Variant};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Oracles

fn is_crown(rows: usize, cols: usize, r: usize, c: usize) -> bool {
    r == 0 || c == 0 || r == rows - 1 || c == cols - 1
}

/// Whether a path of free cells leads from `start` to the crown.
fn path_to_crown(rows: usize, cols: usize, occupied: &[bool], start: (usize, usize)) -> bool {
    let mut seen = vec![false; rows * cols];
    let mut stack = vec![start];
    while let Some((r, c)) = stack.pop() {
        if is_crown(rows, cols, r, c) {
            return true;
        }
        if seen[r * cols + c] || occupied[r * cols + c] {
            continue;
        }
        seen[r * cols + c] = true;
        stack.extend([(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]);
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Access {
    Crown,
    Placeable,
    Pickable,
    Restricted,
}

fn access(rows: usize, cols: usize, occupied: &[bool], r: usize, c: usize) -> Access {
    if is_crown(rows, cols, r, c) {
        return Access::Crown;
    }
    if !occupied[r * cols + c] {
        return if path_to_crown(rows, cols, occupied, (r, c)) {
            Access::Placeable
        } else {
            Access::Restricted
        };
    }
    let exit = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)].into_iter().any(|(nr, nc)| {
        (is_crown(rows, cols, nr, nc) || !occupied[nr * cols + nc]) && path_to_crown(rows, cols, occupied, (nr, nc))
    });
    if exit {
        Access::Pickable
    } else {
        Access::Restricted
    }
}

fn occupancy(w: &Warehouse) -> Vec<bool> {
    let cfg = w.config();
    cfg.cells().map(|at| w.package_at(at).is_some()).collect()
}

/// Validity straight from the rules: restricted targets are invalid; a
/// carrying agent may only drop on placeable cells or deliver to a ready
/// matching delivery point; an empty-handed agent may not enter a delivery
/// point or an entry point without a ready item.
fn oracle_valid(w: &Warehouse, occupied: &[bool], at: Coord) -> bool {
    let cfg = w.config();
    let a = access(cfg.rows, cfg.cols, occupied, at.row, at.col);
    if a == Access::Restricted {
        return false;
    }
    let delivery = cfg.delivery_points.iter().position(|&p| p == at);
    let entry = cfg.entry_points.iter().position(|&p| p == at);
    match w.carried() {
        Some(p) => match a {
            Access::Crown => delivery
                .and_then(|d| w.ready_order_at(d))
                .is_some_and(|o| o.material == p.material),
            Access::Placeable => true,
            _ => false,
        },
        None => {
            if delivery.is_some() {
                false
            } else if let Some(e) = entry {
                w.ready_head(e).is_some()
            } else {
                true
            }
        }
    }
}

/// States visited by a mix of policies, every `stride` steps.
fn sample_states(count: usize, stride: u64) -> Vec<Warehouse> {
    let cfg = Arc::new(default_config());
    let mut states = Vec::new();
    let mut episode = 0u64;
    while states.len() < count {
        let name = ["random", "ihp", "ehp"][(episode % 3) as usize];
        let mut policy = baseline(name, episode).unwrap();
        run_episode_with(cfg.clone(), policy.as_mut(), episode_seed(1234, episode), |before, _, _| {
            if before.step() % stride == 0 {
                states.push(before.clone());
            }
        });
        episode += 1;
    }
    states
}

fn stats(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, var.sqrt(), min, max)
}

// ---------------------------------------------------------------------------
// Criteria

fn reward_branches() -> Outcome {
    let cfg = Arc::new(default_config());
    let a = Material::new(1);
    let step = |setup: &dyn Fn(&mut Warehouse), target: Coord| {
        let mut env = Env::new(cfg.clone(), 0);
        let w = env.sim_mut();
        w.set_order_timer(u32::MAX);
        setup(w);
        env.step(Action(target)).unwrap()
    };
    let deliver = |carried: u32, stored: Option<u32>| {
        step(
            &|w: &mut Warehouse| {
                w.open_order(0, a, 1, 0);
                w.set_agent(Coord::new(2, 2));
                w.give_agent(a, carried);
                if let Some(age) = stored {
                    w.place_package(Coord::new(1, 3), a, age);
                }
            },
            cfg.delivery_points[0],
        )
    };
    let mut cases = Vec::new();
    let invalid = step(
        &|w: &mut Warehouse| {
            w.place_package(Coord::new(2, 2), a, 3);
            w.give_agent(a, 1);
        },
        Coord::new(2, 2),
    );
    cases.push(("invalid (stacking)", invalid.reward, -1.0, invalid.info.action_class, ActionClass::Invalid));
    let idle = step(&|w: &mut Warehouse| w.enqueue_ready(0, a, 0), Coord::new(3, 3));
    cases.push(("idle (entry item waiting)", idle.reward, -0.9, idle.info.action_class, ActionClass::Idle));
    let neutral = step(&|_: &mut Warehouse| {}, Coord::new(3, 3));
    cases.push(("neutral (nothing to do)", neutral.reward, 0.0, neutral.info.action_class, ActionClass::Neutral));
    for (label, carried, stored, expected) in [
        ("delivery gap 0", 40, Some(40), 0.0),
        ("delivery gap 0, alone", 40, None, 0.0),
        ("delivery gap 100", 10, Some(110), -0.5),
        ("delivery gap 250", 10, Some(260), -0.5),
        ("delivery gap 50", 10, Some(60), -0.25),
    ] {
        let r = deliver(carried, stored);
        cases.push((label, r.reward, expected, r.info.action_class, ActionClass::Delivery));
    }
    for (label, got, want, class, want_class) in &cases {
        ensure(got == want && class == want_class, || {
            format!("{label}: reward {got} ({class:?}), expected {want} ({want_class:?})")
        })?;
    }
    Ok(format!("{} constructed cases, exact rewards", cases.len()))
}

fn mask_oracle() -> Outcome {
    let states = sample_states(1500, 7);
    let mut mismatches = 0;
    let mut valid_total = 0;
    for w in &states {
        let occupied = occupancy(w);
        let mut env_mask = Vec::new();
        for at in w.config().cells() {
            let want = oracle_valid(w, &occupied, at);
            let class = storehouse_core::env::classify_action(w, at);
            env_mask.push(class.is_valid());
            valid_total += usize::from(want);
            if class.is_valid() != want {
                mismatches += 1;
            }
        }
        if storehouse_core::env::valid_action_mask(w) != env_mask {
            mismatches += 1;
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatches over {} states", states.len()))?;
    Ok(format!("{} states x 36 actions, {valid_total} valid, 0 mismatches", states.len()))
}

fn reachability_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0;
    let (mut grids, mut restricted) = (0, 0);
    while grids < 2000 {
        let (rows, cols) = (rng.gen_range(4..9), rng.gen_range(4..9));
        let density = rng.gen_range(0.2..0.9);
        let occupied: Vec<bool> = (0..rows * cols).map(|_| rng.gen_bool(density)).collect();
        let map = ReachabilityMap::compute(rows, cols, &occupied);
        for r in 0..rows {
            for c in 0..cols {
                let want = access(rows, cols, &occupied, r, c);
                let got = match map.get(Coord::new(r, c)) {
                    CellAccess::Crown => Access::Crown,
                    CellAccess::Placeable => Access::Placeable,
                    CellAccess::Pickable => Access::Pickable,
                    CellAccess::Restricted => Access::Restricted,
                };
                restricted += usize::from(want == Access::Restricted);
                mismatches += usize::from(got != want);
            }
        }
        grids += 1;
    }
    ensure(mismatches == 0, || format!("{mismatches} cell mismatches"))?;
    Ok(format!("{grids} grids (4..8 x 4..8), {restricted} restricted cells, 0 mismatches"))
}

fn tensor_contract() -> Outcome {
    let cfg = Arc::new(default_config());
    let m = cfg.material_count();
    let enc = |k: usize| (255.0 * k as f64 / m as f64).round() as u8;
    let mut steps = 0usize;
    let mut problems = Vec::new();
    let mut episode = 0;
    while steps < 12_000 {
        let name = ["random", "ihp", "ehp"][episode % 3];
        let mut policy = baseline(name, episode as u64).unwrap();
        run_episode_with(cfg.clone(), policy.as_mut(), episode_seed(9, episode as u64), |_, r, w| {
            steps += 1;
            let t = &r.observation;
            if t.shape() != (cfg.rows, cfg.cols, 6 + m) || t.as_slice().len() != cfg.rows * cfg.cols * (6 + m) {
                problems.push(format!("shape {:?}", t.shape()));
            }
            let occupied = occupancy(w);
            for at in cfg.cells() {
                let agent_here = at == w.agent();
                let d4 = t.get(at, 3);
                let want_d4 = match (agent_here, w.carried()) {
                    (false, _) => 0,
                    (true, None) => AGENT_EMPTY,
                    (true, Some(_)) => AGENT_CARRYING,
                };
                let want_d5 = match (agent_here, w.carried()) {
                    (true, Some(p)) => enc(p.material.index()),
                    _ => 0,
                };
                let want_d1 = w.package_at(at).map_or(0, |p| enc(p.material.index()));
                let restricted = access(cfg.rows, cfg.cols, &occupied, at.row, at.col) == Access::Restricted;
                let entry_ready = cfg.entry_points.iter().position(|&p| p == at).is_some_and(|e| w.ready_head(e).is_some());
                if d4 != want_d4 || t.get(at, 4) != want_d5 || t.get(at, 0) != want_d1 {
                    problems.push(format!("step {}: agent/material planes at {at}", w.step()));
                }
                if (t.get(at, 2) == 255) != restricted || (t.get(at, 2) != 0 && t.get(at, 2) != 255) {
                    problems.push(format!("step {}: restricted plane at {at}", w.step()));
                }
                if (t.get(at, 5) == 255) != entry_ready || (t.get(at, 5) != 0 && t.get(at, 5) != 255) {
                    problems.push(format!("step {}: entry plane at {at}", w.step()));
                }
                for k in 1..=m {
                    let want = cfg
                        .delivery_points
                        .iter()
                        .position(|&p| p == at)
                        .and_then(|d| w.ready_order_at(d))
                        .is_some_and(|o| o.material.index() == k);
                    if (t.get(at, 5 + k) == 255) != want || (t.get(at, 5 + k) != 0 && t.get(at, 5 + k) != 255) {
                        problems.push(format!("step {}: delivery plane {k} at {at}", w.step()));
                    }
                }
            }
            if t.plane(3).iter().filter(|&&v| v != 0).count() != 1 {
                problems.push(format!("step {}: agent plane not single-cell", w.step()));
            }
        });
        episode += 1;
    }
    ensure(problems.is_empty(), || format!("{} problems, first: {}", problems.len(), problems[0]))?;
    Ok(format!("{steps} steps over {episode} episodes, every plane matches"))
}

struct PolicyRuns {
    rows: Vec<Vec<EpisodeRow>>,
}

fn policy_runs() -> PolicyRuns {
    let cfg = Arc::new(default_config());
    let rows = ["random", "ihp", "ehp"]
        .iter()
        .map(|&name| {
            [101u64, 202, 303]
                .iter()
                .flat_map(|&s| run_seeds(cfg.clone(), &[s], 100, move |seed| baseline(name, seed).unwrap()))
                .collect()
        })
        .collect();
    PolicyRuns { rows }
}

fn policy_ordering(runs: &PolicyRuns) -> Outcome {
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for seed in [101u64, 202, 303] {
        let band = |i: usize| {
            let scores: Vec<f64> = runs.rows[i].iter().filter(|r| r.seed == seed).map(|r| r.metrics.score).collect();
            stats(&scores)
        };
        let (random, ihp, ehp) = (band(0), band(1), band(2));
        notes.push(format!(
            "seed set {seed}: ehp {:.2} [{:.2},{:.2}] > ihp {:.2} [{:.2},{:.2}] > random {:.2} [{:.2},{:.2}]",
            ehp.0, ehp.2, ehp.3, ihp.0, ihp.2, ihp.3, random.0, random.2, random.3
        ));
        if !(ehp.0 > ihp.0 && ihp.0 > random.0 && ehp.2 > ihp.3 && ihp.2 > random.3) {
            failures.push(format!("ordering or bands broken for seed set {seed}"));
        }
    }
    let delivered: Vec<f64> = runs.rows[0].iter().map(|r| f64::from(r.metrics.delivered_boxes)).collect();
    let mean_delivered = stats(&delivered).0;
    notes.push(format!("random delivered_boxes mean {mean_delivered:.2} per episode (criterion < 1)"));
    if mean_delivered >= 1.0 {
        failures.push(format!("random policy delivers {mean_delivered:.2} boxes per episode, not < 1"));
    }
    let detail = notes.join("; ");
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{} | {detail}", failures.join("; ")))
    }
}

/// Per-episode FIFO bookkeeping recomputed from raw states.
#[derive(Default)]
struct FifoTrace {
    deliveries: u32,
    violations: u32,
    restricted_ever: bool,
    oldest_restricted_ever: bool,
}

fn oldest_in_stock(w: &Warehouse, material: Material) -> Option<u32> {
    let stored = w.stored().filter(|(_, p)| p.material == material).map(|(_, p)| p.age);
    let heads = (0..w.config().entry_points.len())
        .filter_map(|e| w.ready_head(e))
        .filter(|q| q.material == material)
        .map(|q| q.age);
    stored.chain(heads).max()
}

fn fifo_trace(name: &str, seed: u64) -> (FifoTrace, u32) {
    let cfg = Arc::new(default_config());
    let mut policy = baseline(name, seed).unwrap();
    let mut trace = FifoTrace::default();
    let out = run_episode_with(cfg.clone(), policy.as_mut(), seed, |before, r, after| {
        if r.info.action_class == ActionClass::Delivery {
            let p = before.carried().expect("delivery while carrying");
            trace.deliveries += 1;
            if oldest_in_stock(before, p.material).is_some_and(|o| p.age < o) {
                trace.violations += 1;
            }
        }
        let occupied = occupancy(after);
        let restricted: Vec<Coord> = cfg
            .cells()
            .filter(|at| access(cfg.rows, cfg.cols, &occupied, at.row, at.col) == Access::Restricted)
            .collect();
        trace.restricted_ever |= !restricted.is_empty();
        for k in 1..=cfg.material_count() {
            let mat = Material::new(k as u8);
            let hidden = restricted.iter().filter_map(|&at| after.package_at(at)).filter(|p| p.material == mat).map(|p| p.age).max();
            let open = after
                .stored()
                .filter(|(at, p)| p.material == mat && !restricted.contains(at))
                .map(|(_, p)| p.age)
                .chain((0..cfg.entry_points.len()).filter_map(|e| after.ready_head(e)).filter(|q| q.material == mat).map(|q| q.age))
                .max();
            if hidden.is_some_and(|h| open.is_none_or(|o| h > o)) {
                trace.oldest_restricted_ever = true;
            }
        }
    });
    (trace, out.metrics.fifo_violations)
}

fn fifo_behaviour() -> Outcome {
    let mut problems = Vec::new();
    let (mut ehp_clean, mut ihp_violating, mut ihp_total_violations) = (0, 0, 0);
    for set in [101u64, 202, 303] {
        for e in 0..100 {
            let seed = episode_seed(set, e);
            let (ehp, ehp_lib) = fifo_trace("ehp", seed);
            let (ihp, ihp_lib) = fifo_trace("ihp", seed);
            if ehp.violations != ehp_lib || ihp.violations != ihp_lib {
                problems.push(format!("seed {seed}: metric disagrees with recomputed violations"));
            }
            if !ehp.restricted_ever {
                ehp_clean += 1;
                if ehp.violations > 0 {
                    problems.push(format!("seed {seed}: EHP violated FIFO with no restricted cell"));
                }
            }
            if ihp.violations > 0 {
                ihp_violating += 1;
                ihp_total_violations += ihp.violations;
                if !ihp.oldest_restricted_ever {
                    problems.push(format!("seed {seed}: IHP violated FIFO without a restricted oldest box"));
                }
            }
        }
    }
    ensure(problems.is_empty(), || format!("{} problems, first: {}", problems.len(), problems[0]))?;
    Ok(format!(
        "EHP: 0 violations over {ehp_clean} unrestricted episodes; IHP: {ihp_total_violations} violations in {ihp_violating} episodes, all with a restricted oldest box"
    ))
}

fn desk_config() -> Arc<WarehouseConfig> {
    let text = include_str!("../../../configs/desk.toml");
    Arc::new(load_config(text).expect("desk config parses"))
}

fn learning_sanity() -> Outcome {
    let cfg = desk_config();
    ensure(cfg.rows == 6 && cfg.cols == 6 && cfg.material_count() == 1, || "desk config is not 6x6 with m=1".into())?;
    let mut hp = Hyperparameters::preset("desk").unwrap();
    hp.max_training_steps = 200 * cfg.max_steps_per_episode as usize;
    let out = train(cfg.clone(), &hp, Variant::Vam, 0).map_err(|e| e.to_string())?;
    ensure(out.curve.len() <= 200, || format!("trained {} episodes", out.curve.len()))?;
    let last: Vec<f64> = out.curve.iter().rev().take(20).map(|c| c.score).collect();
    let random: Vec<f64> = (0..20)
        .map(|e| {
            let mut p = baseline("random", e).unwrap();
            run_episode(cfg.clone(), p.as_mut(), episode_seed(555, e)).metrics.score
        })
        .collect();
    let (vm, vs, _, _) = stats(&last);
    let (rm, rs, _, _) = stats(&random);
    let pooled = ((vs * vs + rs * rs) / 2.0).sqrt();
    let evals = evaluate(cfg, &out.network, Variant::Vam, 31, 20);
    let invalid: u32 = evals.iter().map(|m| m.invalid_action_count).sum();
    let margin = (vm - rm) / pooled;
    let detail = format!(
        "{} episodes; VAM final-20 {vm:.2} (sd {vs:.2}) vs random {rm:.2} (sd {rs:.2}): {margin:.1} pooled SDs; greedy invalid actions {invalid}",
        out.curve.len()
    );
    ensure(margin >= 3.0 && invalid == 0, || detail.clone())?;
    Ok(detail)
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for _ in 0..100 {
        let sizes = [rng.gen_range(2..7), rng.gen_range(2..6), rng.gen_range(2..6), rng.gen_range(2..5)];
        let mut net = Mlp::new(&sizes, &mut rng);
        for p in net.params_mut() {
            *p += rng.gen_range(-0.1..0.1);
        }
        let batch: Vec<Transition> = (0..5)
            .map(|_| Transition {
                observation: (0..sizes[0]).map(|_| rng.gen()).collect(),
                action: rng.gen_range(0..sizes[3]),
                reward: 0.0,
                next_observation: vec![0; sizes[0]],
                done: true,
                next_mask: vec![true; sizes[3]],
            })
            .collect();
        let targets: Vec<f64> = (0..batch.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        // Loss written out independently: 0.5 * mean squared error of Q(s, a).
        let loss = |net: &Mlp| {
            batch
                .iter()
                .zip(&targets)
                .map(|(t, y)| {
                    let x: Vec<f64> = t.observation.iter().map(|&v| f64::from(v) / 255.0).collect();
                    0.5 * (net.forward(&x)[t.action] - y).powi(2)
                })
                .sum::<f64>()
                / batch.len() as f64
        };
        let refs: Vec<&Transition> = batch.iter().collect();
        let (_, grad) = td_loss_and_grad(&net, &refs, &targets);
        for (i, &g) in grad.iter().enumerate() {
            let orig = net.params()[i];
            net.params_mut()[i] = orig + h;
            let up = loss(&net);
            net.params_mut()[i] = orig - h;
            let down = loss(&net);
            net.params_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let scale = g.abs().max(numeric.abs());
            if scale > 1e-7 {
                worst = worst.max((g - numeric).abs() / scale);
            }
            checked += 1;
        }
    }
    ensure(worst < 1e-4, || format!("worst relative error {worst:e}"))?;
    Ok(format!("100 networks, {checked} parameters, worst relative error {worst:.2e}"))
}

/// Every cross-parameter value pair, enumerated from scratch.
fn missing_pairs(space: &ParameterSpace, rows: &[Vec<f64>]) -> Vec<(usize, f64, usize, f64)> {
    let mut seen = BTreeSet::new();
    for row in rows {
        for i in 0..row.len() {
            for j in i + 1..row.len() {
                seen.insert((i, row[i].to_bits(), j, row[j].to_bits()));
            }
        }
    }
    let p = &space.parameters;
    let mut missing = Vec::new();
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            for &a in &p[i].levels {
                for &b in &p[j].levels {
                    if !seen.contains(&(i, a.to_bits(), j, b.to_bits())) {
                        missing.push((i, a, j, b));
                    }
                }
            }
        }
    }
    missing
}

fn pairwise_suites() -> Outcome {
    let mut notes = Vec::new();
    for (name, space, lo, hi) in [("A2C", a2c_space(), 9, 18), ("PPO", ppo_space(), 9, 54)] {
        let suite = generate_pairwise(&space, 0);
        let rows: Vec<Vec<f64>> = suite.rows.iter().map(|r| space.values(r)).collect();
        let missing = missing_pairs(&space, &rows);
        ensure(missing.is_empty(), || format!("{name}: {} pairs uncovered, e.g. {:?}", missing.len(), missing[0]))?;
        ensure((lo..=hi).contains(&rows.len()), || format!("{name}: {} rows outside [{lo}, {hi}]", rows.len()))?;
        // The oracle must notice a dropped row of a minimal suite.
        if rows.len() == lo {
            ensure(!missing_pairs(&space, &rows[1..]).is_empty(), || format!("{name}: oracle blind to a deleted row"))?;
        }
        notes.push(format!("{name} {} rows", rows.len()));
    }
    Ok(format!("{}; all pairs covered", notes.join(", ")))
}

fn determinism() -> Outcome {
    let cfg = Arc::new(default_config());
    let csv = || {
        ["random", "ihp", "ehp"]
            .iter()
            .map(|&name| episodes_csv(&run_seeds(cfg.clone(), &[7, 8], 5, move |s| baseline(name, s).unwrap())))
            .collect::<String>()
    };
    ensure(csv() == csv(), || "episode CSVs differ between runs".into())?;
    let desk = desk_config();
    let mut hp = Hyperparameters::preset("desk").unwrap();
    hp.max_training_steps = 10 * desk.max_steps_per_episode as usize;
    let curve = || train(desk.clone(), &hp, Variant::Vam, 3).map(|o| (curve_csv(&o.curve), o.network));
    let (a, b) = (curve().map_err(|e| e.to_string())?, curve().map_err(|e| e.to_string())?);
    ensure(a == b, || "training curves or weights differ between runs".into())?;
    Ok("episode CSVs (3 policies x 2 seeds x 5 episodes) and a 10-episode training curve are bit-identical".into())
}

fn main() {
    let mut failed = 0;
    let mut report = |id: &str, name: &str, f: &mut dyn FnMut() -> Outcome, budget: Duration| {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(d) if took > budget => Err(format!("over time budget {budget:?}: {d}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {id} {name} ({took:.2?}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id} {name} ({took:.2?}): {detail}");
            }
        }
    };
    let minute = Duration::from_secs(60);
    report("C1", "reward piecewise correctness", &mut reward_branches, Duration::from_secs(1));
    report("C2", "mask oracle", &mut mask_oracle, minute);
    report("C3", "reachability oracle", &mut reachability_oracle, minute);
    report("C4", "state-tensor contract", &mut tensor_contract, minute);
    let mut runs = None;
    report(
        "C5",
        "policy ordering",
        &mut || {
            let r = runs.insert(policy_runs());
            policy_ordering(r)
        },
        10 * minute,
    );
    report("C6", "FIFO metric behaviour", &mut fifo_behaviour, 10 * minute);
    report("C7", "learning sanity", &mut learning_sanity, 30 * minute);
    report("C8", "gradient check", &mut gradient_check, minute);
    report("C9", "pairwise suite validity", &mut pairwise_suites, minute);
    report("C10", "determinism", &mut determinism, 10 * minute);
    println!("{failed} of 10 criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
