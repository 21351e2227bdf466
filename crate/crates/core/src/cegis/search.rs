//! Lazy-binding depth-first search over control assignments with
//! conflict-directed backjumping.

use crate::evaluator::{ControlAssignment, ControlSource};
use crate::expander::ControlKind;
use crate::surface::ControlId;

const UNSET: usize = usize::MAX;

/// Partial assignment that binds a point to the first value of its domain the
/// first time evaluation reads it. Each binding is a decision level.
pub struct LazyControl {
    kinds: Vec<ControlKind>,
    values: Vec<i64>,
    /// Decision level of each point, or `UNSET`.
    level: Vec<usize>,
    trail: Vec<ControlId>,
    /// Points whose values explain the failures seen at each level so far.
    conflicts: Vec<Vec<ControlId>>,
    read_stamp: Vec<u32>,
    epoch: u32,
    read: Vec<ControlId>,
}

impl LazyControl {
    pub fn new(kinds: Vec<ControlKind>) -> Self {
        let n = kinds.len();
        LazyControl {
            values: kinds.iter().map(|k| k.first()).collect(),
            kinds,
            level: vec![UNSET; n],
            trail: Vec::new(),
            conflicts: Vec::new(),
            read_stamp: vec![0; n],
            epoch: 1,
            read: Vec::new(),
        }
    }

    /// Starts a run; the points it reads form its conflict set on failure.
    pub fn begin_run(&mut self) {
        self.epoch += 1;
        self.read.clear();
    }

    pub fn read_in_run(&self) -> &[ControlId] {
        &self.read
    }

    pub fn is_bound(&self, id: ControlId) -> bool {
        self.level[id] != UNSET
    }

    /// Bound points with their values, in binding order.
    pub fn bindings(&self) -> Vec<(ControlId, i64)> {
        self.trail.iter().map(|&id| (id, self.values[id])).collect()
    }

    /// Total assignment; unbound points take the first value of their domain.
    pub fn complete(&self) -> ControlAssignment {
        ControlAssignment(
            (0..self.kinds.len())
                .map(|id| if self.is_bound(id) { self.values[id] } else { self.kinds[id].first() })
                .collect(),
        )
    }

    fn unbind_top(&mut self) -> Vec<ControlId> {
        let id = self.trail.pop().expect("non-empty trail");
        self.level[id] = UNSET;
        self.values[id] = self.kinds[id].first();
        self.conflicts.pop().unwrap_or_default()
    }

    /// Moves to the next candidate after a run failed because of the points
    /// in `conflict`. Returns `false` when no candidate remains.
    pub fn backjump(&mut self, conflict: &[ControlId]) -> bool {
        let mut conflict: Vec<ControlId> = conflict.to_vec();
        loop {
            let Some(h) = conflict.iter().map(|&id| self.level[id]).filter(|&l| l != UNSET).max() else {
                return false;
            };
            while self.trail.len() > h + 1 {
                self.unbind_top();
            }
            let id = self.trail[h];
            let set = &mut self.conflicts[h];
            for c in conflict.drain(..) {
                if c != id && !set.contains(&c) {
                    set.push(c);
                }
            }
            if self.values[id] < self.kinds[id].last() {
                self.values[id] += 1;
                return true;
            }
            conflict = self.unbind_top();
        }
    }
}

impl ControlSource for LazyControl {
    fn read(&mut self, id: ControlId) -> Option<i64> {
        if id >= self.kinds.len() {
            return None;
        }
        if self.level[id] == UNSET {
            self.level[id] = self.trail.len();
            self.trail.push(id);
            self.conflicts.push(Vec::new());
        }
        if self.read_stamp[id] != self.epoch {
            self.read_stamp[id] = self.epoch;
            self.read.push(id);
        }
        Some(self.values[id])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Finds `x, y, z` in 0..=3 with `x + y == 3` and `z == 2`, evaluating
    /// constraints in order and reading lazily.
    #[test]
    fn backjumps_over_irrelevant_points() {
        let kinds = vec![ControlKind::Hole { lo: 0, hi: 3 }; 3];
        let mut c = LazyControl::new(kinds);
        let mut runs = 0;
        loop {
            runs += 1;
            c.begin_run();
            let z = c.read(2).unwrap();
            if z != 2 {
                let r = c.read_in_run().to_vec();
                assert!(c.backjump(&r));
                continue;
            }
            c.begin_run();
            let x = c.read(0).unwrap();
            let y = c.read(1).unwrap();
            if x + y != 3 {
                let r = c.read_in_run().to_vec();
                assert!(c.backjump(&r));
                continue;
            }
            break;
        }
        assert_eq!(c.complete(), ControlAssignment(vec![0, 3, 2]));
        // Two rejected values of z, then four of y; x is never revisited.
        assert_eq!(runs, 2 + 4);
    }

    #[test]
    fn exhaustion_is_unsatisfiable() {
        let mut c = LazyControl::new(vec![ControlKind::Flag, ControlKind::Choice { arity: 2 }]);
        let mut seen = Vec::new();
        loop {
            c.begin_run();
            let a = c.read(0).unwrap();
            let b = c.read(1).unwrap();
            seen.push((a, b));
            let r = c.read_in_run().to_vec();
            if !c.backjump(&r) {
                break;
            }
        }
        assert_eq!(seen, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }
}
