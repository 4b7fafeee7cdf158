use std::sync::Arc;

use proptest::prelude::*;
use storehouse_core::config::default_config;
use storehouse_core::env::{classify_action, encode_state, valid_action_mask};
use storehouse_core::policies::RandomPolicy;
use storehouse_core::sim::reach::{CellAccess, ReachabilityMap};
use storehouse_core::{Coord, Warehouse};

fn crown(rows: usize, cols: usize, r: usize, c: usize) -> bool {
    r == 0 || c == 0 || r == rows - 1 || c == cols - 1
}

/// Depth-first search from one cell to the crown over free cells.
fn escapes(rows: usize, cols: usize, occ: &[bool], start: (usize, usize)) -> bool {
    let mut seen = vec![false; rows * cols];
    let mut stack = vec![start];
    while let Some((r, c)) = stack.pop() {
        if crown(rows, cols, r, c) {
            return true;
        }
        if std::mem::replace(&mut seen[r * cols + c], true) {
            continue;
        }
        let steps = [(r.wrapping_sub(1), c), (r + 1, c), (r, c.wrapping_sub(1)), (r, c + 1)];
        for (nr, nc) in steps {
            if nr < rows && nc < cols && (crown(rows, cols, nr, nc) || !occ[nr * cols + nc]) {
                stack.push((nr, nc));
            }
        }
    }
    false
}

fn oracle(rows: usize, cols: usize, occ: &[bool], r: usize, c: usize) -> CellAccess {
    if crown(rows, cols, r, c) {
        return CellAccess::Crown;
    }
    if !occ[r * cols + c] {
        return if escapes(rows, cols, occ, (r, c)) {
            CellAccess::Placeable
        } else {
            CellAccess::Restricted
        };
    }
    let free_exit = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
        .into_iter()
        .any(|(nr, nc)| (crown(rows, cols, nr, nc) || !occ[nr * cols + nc]) && escapes(rows, cols, occ, (nr, nc)));
    if free_exit {
        CellAccess::Pickable
    } else {
        CellAccess::Restricted
    }
}

fn grid() -> impl Strategy<Value = (usize, usize, Vec<bool>)> {
    (3usize..9, 3usize..9).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(prop::bool::weighted(0.55), r * c)))
}

proptest! {
    #[test]
    fn reachability_matches_path_search((rows, cols, occ) in grid()) {
        let map = ReachabilityMap::compute(rows, cols, &occ);
        for r in 0..rows {
            for c in 0..cols {
                prop_assert_eq!(map.get(Coord::new(r, c)), oracle(rows, cols, &occ, r, c), "cell ({}, {})", r, c);
            }
        }
    }

    #[test]
    fn random_walks_keep_the_invariants(seed in any::<u64>(), steps in 1usize..400) {
        let cfg = Arc::new(default_config());
        let mut w = Warehouse::new(cfg.clone(), seed);
        let mut pol = RandomPolicy::new(seed ^ 1);
        for _ in 0..steps {
            let mask = valid_action_mask(&w);
            for (i, &valid) in mask.iter().enumerate() {
                let at = Coord::new(i / cfg.cols, i % cfg.cols);
                prop_assert_eq!(valid, classify_action(&w, at).is_valid());
                prop_assert_eq!(valid, w.plan_move(at).is_some());
            }
            let t = encode_state(&w);
            prop_assert_eq!(t.shape(), (cfg.rows, cfg.cols, cfg.depth()));
            prop_assert_eq!(t.plane(3).iter().filter(|&&v| v != 0).count(), 1);
            let a = pol.sample(cfg.rows, cfg.cols).target();
            if w.plan_move(a).is_some() {
                w.apply_move(a).unwrap();
            }
            w.tick();
            prop_assert!(w.conserves_boxes());
        }
    }
}
