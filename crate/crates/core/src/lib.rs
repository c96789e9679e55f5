//! Three-tier engram memory: working, short-term and long-term memory joined
//! by a Hebbian co-firing graph, with cue-based retrieval bounded by search
//! depth and contribution-weighted lifespans that decay every step.
//!
//! A step adds the new inputs to working memory, retrieves related engrams,
//! asks a [`ContributionSource`] how much each retrieved engram helped, then
//! records co-firing, extends lifespans, decays, prunes and moves engrams
//! down the tiers.
//!
//! ```
//! use engram_core::{Config, ContributionWeights, MemoryState, RetrievalResult};
//!
//! let config = Config { dim: 2, n_wm: 2, stm_capacity: 4, n_stm_rem: 2, ..Config::default() };
//! let mut state = MemoryState::new(config).unwrap();
//! let mut uniform = |r: &RetrievalResult, _: &MemoryState| ContributionWeights::uniform(&r.rem());
//! state.step(&[vec![0.0, 1.0], vec![1.0, 0.0]], &mut uniform).unwrap();
//! let report = state.step(&[vec![0.0, 1.0]], &mut uniform).unwrap();
//! assert_eq!(report.retrieved.stm_rem.len(), 2);
//! ```

pub mod analysis;
pub mod config;
pub mod engram;
pub mod error;
pub mod graph;
pub mod lifecycle;
pub mod oracle;
pub mod retrieval;
pub mod session;
pub mod sim;
pub mod snapshot;
pub mod store;
pub mod testkit;
pub mod trace;
pub mod verify;

pub use config::Config;
pub use engram::{Engram, EngramId, Tier};
pub use error::{EngineError, FormatError, Result};
pub use graph::CoFireGraph;
pub use lifecycle::{ContributionSource, ContributionWeights, StepReport, Wiring};
pub use retrieval::{correlation, retrieve, RetrievalResult, TieBreak};
pub use session::Session;
pub use sim::{run_manifest, simulate, RunManifest, SimOptions, SimOutput, WiringMode};
pub use store::{EngramRecord, MemoryState};
pub use trace::TraceLog;
