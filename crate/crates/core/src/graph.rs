//! Sparse co-firing count graph.
//!
//! Only off-diagonal counts live here; the diagonal `Count(i, i)` is the
//! engram's own `fire_count`. Rows are adjacency lists keyed by source, and
//! each row also remembers its in-neighbours so a node can be dropped without
//! scanning the whole graph.

use std::collections::{HashMap, HashSet};

use crate::engram::EngramId;

#[derive(Debug, Clone, Default, PartialEq)]
struct Row {
    out: HashMap<EngramId, u64>,
    incoming: HashSet<EngramId>,
}

impl Row {
    fn is_empty(&self) -> bool {
        self.out.is_empty() && self.incoming.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoFireGraph {
    rows: HashMap<EngramId, Row>,
}

impl CoFireGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// `Count(from, to)` for `from != to`; zero when the pair never co-fired.
    pub fn count(&self, from: EngramId, to: EngramId) -> u64 {
        self.rows
            .get(&from)
            .and_then(|row| row.out.get(&to))
            .copied()
            .unwrap_or(0)
    }

    /// Adds `by` to the directed count `from -> to`.
    pub fn add(&mut self, from: EngramId, to: EngramId, by: u64) {
        debug_assert_ne!(from, to, "diagonal counts live on the engram");
        if by == 0 {
            return;
        }
        let row = self.rows.entry(from).or_default();
        let slot = row.out.entry(to).or_insert(0);
        let fresh = *slot == 0;
        *slot += by;
        if fresh {
            self.rows.entry(to).or_default().incoming.insert(from);
        }
    }

    /// Increments both directions of an unordered pair.
    pub fn increment_pair(&mut self, a: EngramId, b: EngramId) {
        self.add(a, b, 1);
        self.add(b, a, 1);
    }

    /// Outgoing edges of `from` in arbitrary order.
    pub fn out_edges(&self, from: EngramId) -> impl Iterator<Item = (EngramId, u64)> + '_ {
        self.rows
            .get(&from)
            .into_iter()
            .flat_map(|row| row.out.iter().map(|(&to, &c)| (to, c)))
    }

    pub fn out_degree(&self, from: EngramId) -> usize {
        self.rows.get(&from).map_or(0, |row| row.out.len())
    }

    /// Drops every count touching `id`.
    pub fn remove_node(&mut self, id: EngramId) {
        let Some(row) = self.rows.remove(&id) else {
            return;
        };
        for to in row.out.keys() {
            if let Some(other) = self.rows.get_mut(to) {
                other.incoming.remove(&id);
                if other.is_empty() {
                    self.rows.remove(to);
                }
            }
        }
        for from in &row.incoming {
            if let Some(other) = self.rows.get_mut(from) {
                other.out.remove(&id);
                if other.is_empty() {
                    self.rows.remove(from);
                }
            }
        }
    }

    pub fn clear(&mut self) {
        self.rows.clear();
    }

    /// Number of stored directed entries.
    pub fn edge_count(&self) -> usize {
        self.rows.values().map(|row| row.out.len()).sum()
    }

    /// Every stored directed entry `(from, to, count)`, sorted.
    pub fn entries(&self) -> Vec<(EngramId, EngramId, u64)> {
        let mut all: Vec<_> = self
            .rows
            .iter()
            .flat_map(|(&from, row)| row.out.iter().map(move |(&to, &c)| (from, to, c)))
            .collect();
        all.sort_unstable();
        all
    }

    /// Ids that appear in at least one stored entry.
    pub fn nodes(&self) -> impl Iterator<Item = EngramId> + '_ {
        self.rows.keys().copied()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows.iter().all(|(&from, row)| {
            row.out
                .iter()
                .all(|(&to, &c)| self.count(to, from) == c)
        })
    }
}
