use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ArenaError;
use crate::agent::backend::{FailingBackend, FaultInjecting, OfflineBackend};
use crate::agent::{Backend, BackendError, ScriptedPolicy, Variant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Pipeline(Variant),
    Scripted(ScriptedPolicy),
}

/// Who plays a seat. Written as `[name=]kind[@backend]`, where `kind` is a
/// pipeline variant (`revac`, `revac2_1`, `revac8`) or `scripted:<policy>`.
/// The name keys the rating table and defaults to the rest of the spec.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AgentSpec {
    pub name: Option<String>,
    pub kind: AgentKind,
    pub backend: Option<String>,
}

impl AgentSpec {
    pub fn pipeline(variant: Variant) -> Self {
        AgentSpec { name: None, kind: AgentKind::Pipeline(variant), backend: None }
    }

    pub fn scripted(policy: ScriptedPolicy) -> Self {
        AgentSpec { name: None, kind: AgentKind::Scripted(policy), backend: None }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_backend(mut self, backend: impl Into<String>) -> Self {
        self.backend = Some(backend.into());
        self
    }

    fn body(&self) -> String {
        let kind = match self.kind {
            AgentKind::Pipeline(v) => v.name().to_string(),
            AgentKind::Scripted(p) => format!("scripted:{}", p.name()),
        };
        match &self.backend {
            Some(b) => format!("{kind}@{b}"),
            None => kind,
        }
    }

    /// The rating key.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.body())
    }
}

fn parse_policy(s: &str) -> Option<ScriptedPolicy> {
    [ScriptedPolicy::Random, ScriptedPolicy::PassOnly, ScriptedPolicy::AlwaysKill, ScriptedPolicy::Strong]
        .into_iter()
        .find(|p| p.name() == s.replace('_', "-"))
}

impl FromStr for AgentSpec {
    type Err = ArenaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| ArenaError::Spec(format!("`{s}`: {msg}"));
        let s = s.trim();
        let (name, rest) = match s.split_once('=') {
            Some((n, r)) if !n.trim().is_empty() => (Some(n.trim().to_string()), r.trim()),
            Some(_) => return Err(bad("empty name")),
            None => (None, s),
        };
        let (kind, backend) = match rest.split_once('@') {
            Some((k, b)) if !b.trim().is_empty() => (k.trim(), Some(b.trim().to_string())),
            Some(_) => return Err(bad("empty backend")),
            None => (rest, None),
        };
        let kind = if let Some(p) = kind.strip_prefix("scripted:") {
            AgentKind::Scripted(parse_policy(p).ok_or_else(|| bad("unknown scripted policy"))?)
        } else {
            AgentKind::Pipeline(Variant::parse(kind).ok_or_else(|| bad("unknown agent kind"))?)
        };
        if matches!(kind, AgentKind::Scripted(_)) && backend.is_some() {
            return Err(bad("scripted policies take no backend"));
        }
        Ok(AgentSpec { name, kind, backend })
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.name {
            Some(n) => write!(f, "{n}={}", self.body()),
            None => f.write_str(&self.body()),
        }
    }
}

impl TryFrom<String> for AgentSpec {
    type Error = ArenaError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<AgentSpec> for String {
    fn from(s: AgentSpec) -> String {
        s.to_string()
    }
}

/// Builds a fresh backend for one seat of one match from a derived seed.
pub type BackendFactory = Arc<dyn Fn(u64) -> Arc<dyn Backend> + Send + Sync>;

/// Named backends an [`AgentSpec`] can select.
#[derive(Clone)]
pub struct BackendRegistry {
    factories: BTreeMap<String, BackendFactory>,
}

impl Default for BackendRegistry {
    /// `offline`, `faulty` (half of all calls fail) and `failing`.
    fn default() -> Self {
        let mut r = BackendRegistry { factories: BTreeMap::new() };
        r.register("offline", Arc::new(|_| Arc::new(OfflineBackend) as Arc<dyn Backend>));
        r.register("faulty", Arc::new(|seed| Arc::new(FaultInjecting::new(OfflineBackend, 0.5, seed)) as Arc<dyn Backend>));
        r.register(
            "failing",
            Arc::new(|_| Arc::new(FailingBackend(BackendError::Unavailable("always fails".into()))) as Arc<dyn Backend>),
        );
        r
    }
}

impl BackendRegistry {
    pub fn empty() -> Self {
        BackendRegistry { factories: BTreeMap::new() }
    }

    pub fn register(&mut self, name: impl Into<String>, factory: BackendFactory) {
        self.factories.insert(name.into(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn build(&self, name: &str, seed: u64) -> Result<Arc<dyn Backend>, ArenaError> {
        self.factories
            .get(name)
            .map(|f| f(seed))
            .ok_or_else(|| ArenaError::Spec(format!("unknown backend `{name}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trip() {
        for s in ["revac8", "a=revac2_1@offline", "scripted:pass-only", "strong=scripted:strong"] {
            let spec: AgentSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            let json = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<AgentSpec>(&json).unwrap(), spec);
        }
        assert_eq!("x=revac".parse::<AgentSpec>().unwrap().label(), "x");
        assert_eq!("revac@faulty".parse::<AgentSpec>().unwrap().label(), "revac@faulty");
    }

    #[test]
    fn spec_rejects_garbage() {
        for s in ["", "gpt", "scripted:smart", "scripted:random@offline", "=revac", "revac@"] {
            assert!(s.parse::<AgentSpec>().is_err(), "{s}");
        }
    }
}
