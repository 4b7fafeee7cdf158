//! Which interior cells can be used for storage.
//!
//! The agent reaches a cell through 4-adjacent free cells starting from the
//! crown. Empty interior cells it can reach are placeable; a box can be
//! picked when it is 4-adjacent to a reached free cell; everything else in
//! the interior is restricted.

use std::collections::VecDeque;

use crate::grid::Coord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellAccess {
    /// Outer ring; never holds stored boxes.
    Crown,
    /// Empty interior cell reachable from the crown.
    Placeable,
    /// Occupied interior cell next to a reachable free cell.
    Pickable,
    /// Interior cell that can neither receive nor yield a box.
    Restricted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityMap {
    rows: usize,
    cols: usize,
    cells: Vec<CellAccess>,
}

impl ReachabilityMap {
    /// Flood-fills free cells from every crown cell.
    ///
    /// `occupied` is row-major, `rows * cols` long. Crown cells are treated
    /// as free regardless of their flag.
    pub fn compute(rows: usize, cols: usize, occupied: &[bool]) -> Self {
        assert_eq!(occupied.len(), rows * cols);
        let idx = |c: Coord| c.row * cols + c.col;
        let is_crown = |c: Coord| c.row == 0 || c.col == 0 || c.row == rows - 1 || c.col == cols - 1;

        let mut reached = vec![false; rows * cols];
        let mut queue = VecDeque::new();
        for r in 0..rows {
            for c in 0..cols {
                let at = Coord::new(r, c);
                if is_crown(at) {
                    reached[idx(at)] = true;
                    queue.push_back(at);
                }
            }
        }
        while let Some(at) = queue.pop_front() {
            for n in at.neighbours(rows, cols) {
                let i = idx(n);
                if !reached[i] && !occupied[i] {
                    reached[i] = true;
                    queue.push_back(n);
                }
            }
        }

        let cells = (0..rows * cols)
            .map(|i| {
                let at = Coord::new(i / cols, i % cols);
                if is_crown(at) {
                    CellAccess::Crown
                } else if !occupied[i] {
                    if reached[i] {
                        CellAccess::Placeable
                    } else {
                        CellAccess::Restricted
                    }
                } else if at.neighbours(rows, cols).any(|n| reached[idx(n)]) {
                    CellAccess::Pickable
                } else {
                    CellAccess::Restricted
                }
            })
            .collect();
        ReachabilityMap { rows, cols, cells }
    }

    pub fn get(&self, at: Coord) -> CellAccess {
        self.cells[at.row * self.cols + at.col]
    }

    pub fn is_placeable(&self, at: Coord) -> bool {
        self.get(at) == CellAccess::Placeable
    }

    pub fn is_pickable(&self, at: Coord) -> bool {
        self.get(at) == CellAccess::Pickable
    }

    pub fn is_restricted(&self, at: Coord) -> bool {
        self.get(at) == CellAccess::Restricted
    }

    pub fn any_restricted(&self) -> bool {
        self.cells.contains(&CellAccess::Restricted)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize, boxes: &[(usize, usize)]) -> Vec<bool> {
        let mut g = vec![false; rows * cols];
        for &(r, c) in boxes {
            g[r * cols + c] = true;
        }
        g
    }

    #[test]
    fn empty_grid_is_all_placeable() {
        let map = ReachabilityMap::compute(6, 6, &grid(6, 6, &[]));
        let interior: Vec<_> = (1..5)
            .flat_map(|r| (1..5).map(move |c| Coord::new(r, c)))
            .collect();
        assert_eq!(interior.len(), 16);
        assert!(interior.iter().all(|&c| map.is_placeable(c)));
        assert!(!map.any_restricted());
        assert_eq!(map.get(Coord::new(0, 3)), CellAccess::Crown);
    }

    #[test]
    fn enclosed_box_is_restricted() {
        let boxes = [(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)];
        let map = ReachabilityMap::compute(6, 6, &grid(6, 6, &boxes));
        assert!(map.is_restricted(Coord::new(2, 2)));
        assert!(map.is_pickable(Coord::new(1, 2)));
        assert!(map.is_pickable(Coord::new(2, 3)));
    }

    #[test]
    fn enclosed_empty_cell_is_restricted() {
        let boxes = [(1, 2), (3, 2), (2, 1), (2, 3)];
        let map = ReachabilityMap::compute(6, 6, &grid(6, 6, &boxes));
        assert!(map.is_restricted(Coord::new(2, 2)));
        assert!(map.is_placeable(Coord::new(3, 3)));
    }
}
