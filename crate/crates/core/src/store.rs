use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::config::Config;
use crate::engram::{Engram, EngramId, Tier};
use crate::error::{EngineError, Result};
use crate::graph::CoFireGraph;

/// The three memory tiers plus the co-firing graph.
///
/// Mutation requires `&mut self`; the type is `Send + Sync`, so a frozen
/// state can be shared for concurrent reads.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryState {
    pub(crate) config: Config,
    pub(crate) engrams: BTreeMap<EngramId, Engram>,
    pub(crate) wm: Vec<EngramId>,
    pub(crate) stm: VecDeque<EngramId>,
    pub(crate) ltm: BTreeSet<EngramId>,
    pub(crate) graph: CoFireGraph,
    pub(crate) step: u64,
    pub(crate) next_id: u64,
    pub(crate) reset_pending: bool,
}

/// One engram as handed to [`MemoryState::restore`].
#[derive(Debug, Clone, PartialEq)]
pub struct EngramRecord {
    pub id: EngramId,
    pub tier: Tier,
    pub creation_step: u64,
    pub fire_count: u64,
    pub lifespan: f64,
    pub vector: Vec<f64>,
}

impl MemoryState {
    pub fn new(config: Config) -> Result<Self> {
        config.validate()?;
        Ok(MemoryState {
            config,
            engrams: BTreeMap::new(),
            wm: Vec::new(),
            stm: VecDeque::new(),
            ltm: BTreeSet::new(),
            graph: CoFireGraph::new(),
            step: 0,
            next_id: 0,
            reset_pending: false,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// Index of the step that will run next.
    pub fn step_index(&self) -> u64 {
        self.step
    }

    /// The id the next created engram will receive.
    pub fn next_id(&self) -> EngramId {
        EngramId(self.next_id)
    }

    pub fn engram(&self, id: EngramId) -> Option<&Engram> {
        self.engrams.get(&id)
    }

    /// All stored engrams in id order.
    pub fn engrams(&self) -> impl Iterator<Item = &Engram> {
        self.engrams.values()
    }

    pub fn len(&self) -> usize {
        self.engrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.engrams.is_empty()
    }

    pub fn wm(&self) -> &[EngramId] {
        &self.wm
    }

    /// Short-term memory, oldest first.
    pub fn stm(&self) -> &VecDeque<EngramId> {
        &self.stm
    }

    pub fn ltm(&self) -> &BTreeSet<EngramId> {
        &self.ltm
    }

    pub fn graph(&self) -> &CoFireGraph {
        &self.graph
    }

    pub fn reset_pending(&self) -> bool {
        self.reset_pending
    }

    pub fn tier_of(&self, id: EngramId) -> Option<Tier> {
        self.engrams.get(&id).map(|e| e.tier)
    }

    pub(crate) fn vector(&self, id: EngramId) -> &[f64] {
        &self.engrams[&id].vector
    }

    /// `Count(i, j)`; the diagonal is the fire count.
    pub fn count(&self, i: EngramId, j: EngramId) -> u64 {
        if i == j {
            self.engrams.get(&i).map_or(0, |e| e.fire_count)
        } else {
            self.graph.count(i, j)
        }
    }

    /// Edge weight `Count(i, j) / Count(i, i)`, defined as zero when `i` has
    /// never fired.
    pub fn edge_weight(&self, i: EngramId, j: EngramId) -> Result<f64> {
        let source = self.engrams.get(&i).ok_or(EngineError::Lookup(i))?;
        if !self.engrams.contains_key(&j) {
            return Err(EngineError::Lookup(j));
        }
        if source.fire_count == 0 {
            return Ok(0.0);
        }
        Ok(self.count(i, j) as f64 / source.fire_count as f64)
    }

    /// Sum of all remaining lifespans, accumulated in id order.
    pub fn total_lifespan(&self) -> f64 {
        self.engrams.values().map(|e| e.lifespan).sum()
    }

    /// Full count table including the diagonal, without zero entries.
    pub fn count_table(&self) -> BTreeMap<(EngramId, EngramId), u64> {
        let mut table: BTreeMap<_, _> = self
            .graph
            .entries()
            .into_iter()
            .map(|(i, j, c)| ((i, j), c))
            .collect();
        for e in self.engrams.values().filter(|e| e.fire_count > 0) {
            table.insert((e.id, e.id), e.fire_count);
        }
        table
    }

    /// Creates one working-memory engram per vector. Working memory must be
    /// empty, i.e. the previous step's engrams were already moved on.
    pub fn add_working_memory(&mut self, vectors: &[Vec<f64>]) -> Result<Vec<EngramId>> {
        if !self.wm.is_empty() {
            return Err(EngineError::Sequencing(
                "working memory still holds the previous step's engrams".into(),
            ));
        }
        if vectors.len() > self.config.n_wm {
            return Err(EngineError::Contract(format!(
                "{} vectors exceed n_wm = {}",
                vectors.len(),
                self.config.n_wm
            )));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != self.config.dim) {
            return Err(EngineError::Shape {
                expected: self.config.dim,
                got: v.len(),
            });
        }
        let mut ids = Vec::with_capacity(vectors.len());
        for vector in vectors {
            let id = EngramId(self.next_id);
            self.next_id += 1;
            self.engrams.insert(
                id,
                Engram {
                    id,
                    vector: vector.clone(),
                    tier: Tier::WorkingMemory,
                    lifespan: self.config.initial_lifespan,
                    creation_step: self.step,
                    fire_count: 0,
                },
            );
            self.wm.push(id);
            ids.push(id);
        }
        Ok(ids)
    }

    /// Forgets everything. The step counter and the id counter survive so ids
    /// stay unique across resets.
    pub fn reset(&mut self) {
        self.engrams.clear();
        self.wm.clear();
        self.stm.clear();
        self.ltm.clear();
        self.graph.clear();
        self.reset_pending = true;
    }

    pub(crate) fn remove(&mut self, id: EngramId) {
        if let Some(e) = self.engrams.remove(&id) {
            match e.tier {
                Tier::WorkingMemory => self.wm.retain(|&x| x != id),
                Tier::ShortTermMemory => self.stm.retain(|&x| x != id),
                Tier::LongTermMemory => {
                    self.ltm.remove(&id);
                }
            }
            self.graph.remove_node(id);
        }
    }

    /// Rebuilds a state from its parts, checking every structural invariant.
    ///
    /// `engrams` must list working memory in order, then short-term memory
    /// oldest first, then long-term memory; `counts` holds off-diagonal
    /// directed entries.
    pub fn restore(
        config: Config,
        step: u64,
        next_id: u64,
        reset_pending: bool,
        engrams: Vec<EngramRecord>,
        counts: Vec<(EngramId, EngramId, u64)>,
    ) -> Result<Self> {
        let mut state = MemoryState::new(config)?;
        state.step = step;
        state.next_id = next_id;
        state.reset_pending = reset_pending;
        let contract = |msg: String| Err(EngineError::Contract(msg));
        for rec in engrams {
            if rec.id.0 >= next_id {
                return contract(format!("engram {} is not below next_id {next_id}", rec.id));
            }
            if rec.vector.len() != state.config.dim {
                return Err(EngineError::Shape {
                    expected: state.config.dim,
                    got: rec.vector.len(),
                });
            }
            if !(rec.lifespan > 0.0) {
                return contract(format!("engram {} has non-positive lifespan", rec.id));
            }
            if state.engrams.contains_key(&rec.id) {
                return contract(format!("engram {} listed twice", rec.id));
            }
            match rec.tier {
                Tier::WorkingMemory => state.wm.push(rec.id),
                Tier::ShortTermMemory => state.stm.push_back(rec.id),
                Tier::LongTermMemory => {
                    state.ltm.insert(rec.id);
                }
            }
            state.engrams.insert(
                rec.id,
                Engram {
                    id: rec.id,
                    vector: rec.vector,
                    tier: rec.tier,
                    lifespan: rec.lifespan,
                    creation_step: rec.creation_step,
                    fire_count: rec.fire_count,
                },
            );
        }
        if state.wm.len() > state.config.n_wm {
            return contract("working memory exceeds n_wm".into());
        }
        if state.stm.len() > state.config.stm_capacity {
            return contract("short-term memory exceeds its capacity".into());
        }
        for (i, j, c) in counts {
            if i == j {
                return contract(format!("diagonal count for {i} belongs on the engram"));
            }
            for id in [i, j] {
                if !state.engrams.contains_key(&id) {
                    return Err(EngineError::Lookup(id));
                }
            }
            state.graph.add(i, j, c);
        }
        Ok(state)
    }

    /// Checks structural invariants; returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut seen = 0usize;
        let tiers = [
            (Tier::WorkingMemory, self.wm.to_vec()),
            (Tier::ShortTermMemory, self.stm.iter().copied().collect()),
            (Tier::LongTermMemory, self.ltm.iter().copied().collect()),
        ];
        for (tier, ids) in &tiers {
            for id in ids {
                match self.engrams.get(id) {
                    Some(e) if e.tier == *tier => {}
                    Some(e) => return Err(format!("{id} listed in {tier} but tagged {}", e.tier)),
                    None => return Err(format!("{id} listed in {tier} but not stored")),
                }
            }
            seen += ids.len();
        }
        if seen != self.engrams.len() {
            return Err("tiers do not partition the stored engrams".into());
        }
        if self.wm.len() > self.config.n_wm {
            return Err("working memory over n_wm".into());
        }
        if self.stm.len() > self.config.stm_capacity {
            return Err("short-term memory over capacity".into());
        }
        if self.stm.iter().zip(self.stm.iter().skip(1)).any(|(a, b)| a >= b) {
            return Err("short-term memory is not in creation order".into());
        }
        for e in self.engrams.values() {
            if !(e.lifespan > 0.0) {
                return Err(format!("{} stored with lifespan {}", e.id, e.lifespan));
            }
            if e.vector.len() != self.config.dim {
                return Err(format!("{} has dimension {}", e.id, e.vector.len()));
            }
            if e.id.0 >= self.next_id {
                return Err(format!("{} not below next_id", e.id));
            }
        }
        for (i, j, c) in self.graph.entries() {
            let (Some(a), Some(b)) = (self.engrams.get(&i), self.engrams.get(&j)) else {
                return Err(format!("count ({i}, {j}) touches a dead engram"));
            };
            if c > a.fire_count.min(b.fire_count) {
                return Err(format!("count ({i}, {j}) = {c} exceeds a fire count"));
            }
        }
        Ok(())
    }
}
