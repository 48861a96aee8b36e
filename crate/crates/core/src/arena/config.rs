use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::rating::RatingParams;
use super::spec::{BackendFactory, BackendRegistry};
use super::{AgentSpec, ArenaError};
use crate::agent::backend::{FailingBackend, FaultInjecting, OfflineBackend};
use crate::agent::{AgentConfig, Backend, BackendError};
use crate::game::GameConfig;

/// Named engine setups.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 2 Mafia, Doctor, Detective, 2 Villagers.
    #[default]
    Classic6,
    /// 2 Mafia, Doctor, Detective, 3 Villagers.
    Classic7,
    /// 2 Mafia, Doctor, Detective, 4 Villagers.
    Classic8,
}

impl Preset {
    pub fn game_config(self) -> GameConfig {
        match self {
            Preset::Classic6 => GameConfig::with_counts(2, 1, 1, 2),
            Preset::Classic7 => GameConfig::with_counts(2, 1, 1, 3),
            Preset::Classic8 => GameConfig::with_counts(2, 1, 1, 4),
        }
    }
}

/// A backend endpoint. Credentials never live here; HTTP backends read
/// theirs from the environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    Offline,
    /// The offline backend behind seeded failures at `rate`.
    Faulty { rate: f64 },
    Failing,
    /// An OpenAI-compatible chat completions endpoint.
    Http {
        base_url: String,
        model: String,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

fn default_timeout() -> u64 {
    60
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArenaConfig {
    pub seed: u64,
    pub preset: Preset,
    pub discussion_rounds: Option<usize>,
    pub max_days: Option<u32>,
    /// Seat assignments for a single match.
    pub seats: Vec<AgentSpec>,
    /// Entrants for a tournament.
    pub agents: Vec<AgentSpec>,
    pub games: Option<usize>,
    pub workers: Option<usize>,
    pub rating: RatingParams,
    pub agent: AgentConfig,
    pub backends: BTreeMap<String, BackendConfig>,
}

impl ArenaConfig {
    pub fn parse(text: &str) -> Result<ArenaConfig, ArenaError> {
        toml::from_str(text).map_err(|e| ArenaError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ArenaConfig, ArenaError> {
        let text = fs::read_to_string(path).map_err(|e| ArenaError::io(path, e))?;
        Self::parse(&text).map_err(|e| ArenaError::Config(format!("{}: {e}", path.display())))
    }

    pub fn game_config(&self) -> GameConfig {
        let mut g = self.preset.game_config();
        if let Some(r) = self.discussion_rounds {
            g.discussion_rounds_per_day = r;
        }
        if let Some(d) = self.max_days {
            g.max_days = d;
        }
        g
    }

    /// Built-in backends plus the configured ones. `http` builds HTTP
    /// backends; without it an HTTP entry is an error.
    pub fn registry(
        &self,
        http: Option<&dyn Fn(&str, &BackendConfig) -> Result<BackendFactory, ArenaError>>,
    ) -> Result<BackendRegistry, ArenaError> {
        let mut r = BackendRegistry::default();
        for (name, cfg) in &self.backends {
            let factory: BackendFactory = match cfg {
                BackendConfig::Offline => Arc::new(|_| Arc::new(OfflineBackend) as Arc<dyn Backend>),
                BackendConfig::Faulty { rate } => {
                    if !(0.0..=1.0).contains(rate) {
                        return Err(ArenaError::Config(format!("backend `{name}`: rate {rate} outside [0, 1]")));
                    }
                    let rate = *rate;
                    Arc::new(move |seed| Arc::new(FaultInjecting::new(OfflineBackend, rate, seed)) as Arc<dyn Backend>)
                }
                BackendConfig::Failing => Arc::new(|_| {
                    Arc::new(FailingBackend(BackendError::Unavailable("always fails".into()))) as Arc<dyn Backend>
                }),
                BackendConfig::Http { .. } => match http {
                    Some(build) => build(name, cfg)?,
                    None => return Err(ArenaError::Config(format!("backend `{name}`: HTTP backends are not available here"))),
                },
            };
            r.register(name.clone(), factory);
        }
        Ok(r)
    }
}
