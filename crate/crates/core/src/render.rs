//! Plain-text rendering of a warehouse, one cell per 3-character column.
//!
//! ```text
//!  #  E  .  .  E  #     E  entry point (e when its head is ready)
//!  #  A3 .  .  .  #     D  delivery point (d while it accepts boxes)
//!  #  .  xB9 . .  #     A3 stored box: material + age bucket (age*9/cap)
//!  ...                  x  prefix on restricted cells
//!                       @  agent empty-handed, * agent carrying
//! ```

use std::fmt::Write as _;

use crate::sim::{Package, Warehouse};

fn bucket(p: Package, cap: u32) -> u32 {
    (p.age.min(cap) * 9) / cap
}

pub fn render(w: &Warehouse) -> String {
    let cfg = w.config();
    let mut out = String::new();
    for r in 0..cfg.rows {
        for c in 0..cfg.cols {
            let at = crate::Coord::new(r, c);
            let mut cell = String::new();
            if w.reach().is_restricted(at) {
                cell.push('x');
            }
            if let Some(e) = cfg.entry_index(at) {
                cell.push(if w.ready_head(e).is_some() { 'e' } else { 'E' });
            } else if let Some(d) = cfg.delivery_index(at) {
                cell.push(if w.ready_order_at(d).is_some() { 'd' } else { 'D' });
            } else if let Some(p) = w.package_at(at) {
                write!(cell, "{}{}", p.material.letter(), bucket(p, cfg.age_cap)).unwrap();
            } else if cfg.is_crown(at) {
                cell.push('#');
            } else if cell.is_empty() {
                cell.push('.');
            }
            if w.agent() == at {
                cell.push(if w.carried().is_some() { '*' } else { '@' });
            }
            write!(out, "{cell:<4}").unwrap();
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    }
    let carried = w
        .carried()
        .map_or_else(|| "-".to_string(), |p| format!("{}{}", p.material.letter(), p.age));
    let orders: Vec<String> = w
        .open_orders()
        .map(|o| {
            let state = if o.is_ready(w.step()) { "ready" } else { "pending" };
            format!("D{}:{}x{} {state}", o.delivery_point, o.material, o.remaining)
        })
        .collect();
    writeln!(
        out,
        "step {}  carrying {}  orders [{}]",
        w.step(),
        carried,
        orders.join(", ")
    )
    .unwrap();
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::config::default_config;
    use crate::sim::Material;
    use crate::Coord;

    #[test]
    fn fresh_frame_layout() {
        let w = Warehouse::new(Arc::new(default_config()), 0);
        let frame = render(&w);
        let rows: Vec<&str> = frame.lines().collect();
        assert_eq!(rows.len(), 7);
        assert_eq!(rows[0].split_whitespace().collect::<Vec<_>>(), ["#@", "E", "#", "#", "E", "#"]);
        assert_eq!(rows[5].split_whitespace().collect::<Vec<_>>(), ["#", "D", "#", "#", "D", "#"]);
        assert!(rows[6].starts_with("step 0"));
    }

    #[test]
    fn restricted_and_carrying_glyphs() {
        let mut w = Warehouse::new(Arc::new(default_config()), 0);
        let a = Material::new(1);
        w.place_package(Coord::new(2, 2), a, 500);
        for (r, c) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            w.place_package(Coord::new(r, c), a, 0);
        }
        w.give_agent(a, 0);
        let frame = render(&w);
        assert!(frame.lines().nth(2).unwrap().contains("xA4"), "{frame}");
        assert!(frame.lines().next().unwrap().starts_with("#*"));
    }
}
