use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Identifier of an engram. Allocated from a per-engine counter that is never
/// rewound, so ids order engrams by creation even across resets.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EngramId(pub u64);

impl fmt::Display for EngramId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for EngramId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(EngramId)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tier {
    WorkingMemory,
    ShortTermMemory,
    LongTermMemory,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::WorkingMemory => "wm",
            Tier::ShortTermMemory => "stm",
            Tier::LongTermMemory => "ltm",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wm" => Ok(Tier::WorkingMemory),
            "stm" => Ok(Tier::ShortTermMemory),
            "ltm" => Ok(Tier::LongTermMemory),
            other => Err(format!("unknown tier `{other}`")),
        }
    }
}

/// The smallest unit of stored memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Engram {
    pub id: EngramId,
    pub vector: Vec<f64>,
    pub tier: Tier,
    /// Remaining time steps to live. Fractional because lifespan increments
    /// are contribution-weighted.
    pub lifespan: f64,
    pub creation_step: u64,
    /// Number of steps in which this engram was activated (the diagonal of the
    /// co-firing count table).
    pub fire_count: u64,
}

impl Engram {
    /// Age in steps at time `step`.
    pub fn age_at(&self, step: u64) -> u64 {
        step.saturating_sub(self.creation_step)
    }
}
