use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

/// Engine hyperparameters.
///
/// Defaults follow the Wikitext-103 setup: 50 working-memory engrams per step,
/// 50 retrieved from each of short- and long-term memory, a short-term
/// capacity of 400, search depth 10, initial lifespan 9 and extend scale 8.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub dim: usize,
    pub n_wm: usize,
    pub stm_capacity: usize,
    pub n_stm_rem: usize,
    pub n_ltm_rem: usize,
    pub n_depth: usize,
    /// Lifespan given to every new working-memory engram. Working-memory
    /// engrams decay in their creation step, so values `<= 1` mean nothing
    /// survives into short-term memory.
    pub initial_lifespan: f64,
    /// Lifespan extend scale: each step hands out `alpha * |retrieved|` lifespan.
    pub alpha: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            dim: 16,
            n_wm: 50,
            stm_capacity: 400,
            n_stm_rem: 50,
            n_ltm_rem: 50,
            n_depth: 10,
            initial_lifespan: 9.0,
            alpha: 8.0,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(EngineError::Config(msg));
        if self.dim == 0 {
            return fail("dim must be positive".into());
        }
        for (name, value) in [
            ("n_wm", self.n_wm),
            ("stm_capacity", self.stm_capacity),
            ("n_stm_rem", self.n_stm_rem),
            ("n_ltm_rem", self.n_ltm_rem),
        ] {
            if value == 0 {
                return fail(format!("{name} must be positive"));
            }
        }
        if self.n_stm_rem > self.stm_capacity {
            return fail(format!(
                "n_stm_rem ({}) exceeds stm_capacity ({})",
                self.n_stm_rem, self.stm_capacity
            ));
        }
        if !(self.initial_lifespan.is_finite() && self.initial_lifespan > 0.0) {
            return fail(format!(
                "initial_lifespan must be positive, got {}",
                self.initial_lifespan
            ));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return fail(format!("alpha must be positive, got {}", self.alpha));
        }
        Ok(())
    }

    /// Steps an engram spends in short-term memory when every step adds
    /// exactly `n_wm` engrams and nothing is pruned.
    pub fn stm_residency(&self) -> usize {
        self.stm_capacity.div_ceil(self.n_wm)
    }

    /// Limit of the long-term memory size under sustained load.
    pub fn ltm_asymptote(&self) -> f64 {
        self.alpha * (self.n_stm_rem + self.n_ltm_rem) as f64
    }

    /// Renders the config as space separated `key=value` pairs, the form used
    /// in trace headers and snapshots.
    pub fn to_kv(&self) -> String {
        format!(
            "dim={} n_wm={} stm_capacity={} n_stm_rem={} n_ltm_rem={} n_depth={} initial_lifespan={} alpha={}",
            self.dim,
            self.n_wm,
            self.stm_capacity,
            self.n_stm_rem,
            self.n_ltm_rem,
            self.n_depth,
            self.initial_lifespan,
            self.alpha
        )
    }

    /// Parses the output of [`Config::to_kv`]. Missing keys take defaults.
    pub fn from_kv(text: &str) -> std::result::Result<Self, String> {
        let mut config = Config::default();
        for token in text.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{token}`"))?;
            let bad = |e: &dyn std::fmt::Display| format!("bad value for {key}: {e}");
            match key {
                "dim" => config.dim = value.parse().map_err(|e| bad(&e))?,
                "n_wm" => config.n_wm = value.parse().map_err(|e| bad(&e))?,
                "stm_capacity" => config.stm_capacity = value.parse().map_err(|e| bad(&e))?,
                "n_stm_rem" => config.n_stm_rem = value.parse().map_err(|e| bad(&e))?,
                "n_ltm_rem" => config.n_ltm_rem = value.parse().map_err(|e| bad(&e))?,
                "n_depth" => config.n_depth = value.parse().map_err(|e| bad(&e))?,
                "initial_lifespan" => {
                    config.initial_lifespan = value.parse().map_err(|e| bad(&e))?
                }
                "alpha" => config.alpha = value.parse().map_err(|e| bad(&e))?,
                other => return Err(format!("unknown config key `{other}`")),
            }
        }
        Ok(config)
    }
}
