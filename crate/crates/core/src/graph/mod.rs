//! Social Alignment Graph: a directed, weighted multigraph of accusations,
//! defenses and votes between players, plus role claims kept on the nodes.
//!
//! Edges are append-only. Analyses read a per-pair aggregate that is kept in
//! step with the edge list, so each query is independent of game length.

mod analysis;

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{PlayerId, Role};

pub use analysis::Pressure;

pub const ACCUSATION_WEIGHT: f64 = -1.0;
pub const DEFENSE_WEIGHT: f64 = 1.0;
pub const VOTE_WEIGHT: f64 = -2.0;

/// Pairs with mutual support at or above this are reported as collusion.
pub const DEFAULT_COLLUSION_THRESHOLD: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("player {0} is not on the roster")]
    UnknownPlayer(PlayerId),
    #[error("{0} cannot accuse, defend or vote for themself")]
    SelfReference(PlayerId),
    #[error("act at day {day} turn {turn} precedes the last recorded edge")]
    OutOfOrder { day: u32, turn: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "act", rename_all = "snake_case")]
pub enum ActKind {
    Accuse { src: PlayerId, dst: PlayerId },
    Defend { src: PlayerId, dst: PlayerId },
    ClaimRole { src: PlayerId, role: Role },
    Vote { src: PlayerId, dst: PlayerId },
}

impl ActKind {
    pub fn source(self) -> PlayerId {
        match self {
            ActKind::Accuse { src, .. }
            | ActKind::Defend { src, .. }
            | ActKind::ClaimRole { src, .. }
            | ActKind::Vote { src, .. } => src,
        }
    }

    pub fn target(self) -> Option<PlayerId> {
        match self {
            ActKind::Accuse { dst, .. } | ActKind::Defend { dst, .. } | ActKind::Vote { dst, .. } => {
                Some(dst)
            }
            ActKind::ClaimRole { .. } => None,
        }
    }

    pub fn edge_kind(self) -> Option<EdgeKind> {
        match self {
            ActKind::Accuse { .. } => Some(EdgeKind::Accusation),
            ActKind::Defend { .. } => Some(EdgeKind::Defense),
            ActKind::Vote { .. } => Some(EdgeKind::VoteAlignment),
            ActKind::ClaimRole { .. } => None,
        }
    }
}

/// A structured social interaction extracted from the day's discussion or votes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialAct {
    pub day: u32,
    pub turn: u32,
    #[serde(flatten)]
    pub kind: ActKind,
}

impl SocialAct {
    pub fn new(kind: ActKind) -> Self {
        SocialAct { day: 0, turn: 0, kind }
    }

    pub fn at(kind: ActKind, day: u32, turn: u32) -> Self {
        SocialAct { day, turn, kind }
    }

    pub fn stamped(self, day: u32, turn: u32) -> Self {
        SocialAct { day, turn, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Accusation,
    Defense,
    VoteAlignment,
}

impl EdgeKind {
    pub fn weight(self) -> f64 {
        match self {
            EdgeKind::Accusation => ACCUSATION_WEIGHT,
            EdgeKind::Defense => DEFENSE_WEIGHT,
            EdgeKind::VoteAlignment => VOTE_WEIGHT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SagEdge {
    pub src: PlayerId,
    pub dst: PlayerId,
    pub kind: EdgeKind,
    pub weight: f64,
    pub day: u32,
    pub turn: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub alive: bool,
    pub claimed_roles: Vec<(Role, u32)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct PairTotals {
    pub negative: f64,
    pub positive: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphSnapshot {
    nodes: BTreeMap<PlayerId, NodeInfo>,
    edges: Vec<SagEdge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "GraphSnapshot", into = "GraphSnapshot")]
pub struct SocialAlignmentGraph {
    nodes: BTreeMap<PlayerId, NodeInfo>,
    edges: Vec<SagEdge>,
    pairs: BTreeMap<(PlayerId, PlayerId), PairTotals>,
}

impl From<GraphSnapshot> for SocialAlignmentGraph {
    fn from(snap: GraphSnapshot) -> Self {
        let mut g = SocialAlignmentGraph {
            nodes: snap.nodes,
            edges: Vec::with_capacity(snap.edges.len()),
            pairs: BTreeMap::new(),
        };
        for e in snap.edges {
            g.index_edge(&e);
            g.edges.push(e);
        }
        g
    }
}

impl From<SocialAlignmentGraph> for GraphSnapshot {
    fn from(g: SocialAlignmentGraph) -> Self {
        GraphSnapshot { nodes: g.nodes, edges: g.edges }
    }
}

impl SocialAlignmentGraph {
    pub fn new(roster: impl IntoIterator<Item = PlayerId>) -> Self {
        let nodes = roster
            .into_iter()
            .map(|p| (p, NodeInfo { alive: true, claimed_roles: Vec::new() }))
            .collect();
        SocialAlignmentGraph { nodes, edges: Vec::new(), pairs: BTreeMap::new() }
    }

    pub fn roster(&self) -> impl Iterator<Item = PlayerId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes(&self) -> &BTreeMap<PlayerId, NodeInfo> {
        &self.nodes
    }

    pub fn node(&self, id: PlayerId) -> Option<&NodeInfo> {
        self.nodes.get(&id)
    }

    pub fn edges(&self) -> &[SagEdge] {
        &self.edges
    }

    pub fn is_alive(&self, id: PlayerId) -> bool {
        self.nodes.get(&id).is_some_and(|n| n.alive)
    }

    pub fn mark_dead(&mut self, id: PlayerId) -> Result<(), GraphError> {
        let node = self.nodes.get_mut(&id).ok_or(GraphError::UnknownPlayer(id))?;
        node.alive = false;
        Ok(())
    }

    fn check(&self, id: PlayerId) -> Result<(), GraphError> {
        if self.nodes.contains_key(&id) {
            Ok(())
        } else {
            Err(GraphError::UnknownPlayer(id))
        }
    }

    /// Appends the edge (or node claim) for one act.
    pub fn record_act(&mut self, act: SocialAct) -> Result<(), GraphError> {
        let src = act.kind.source();
        self.check(src)?;
        if let ActKind::ClaimRole { role, .. } = act.kind {
            self.nodes.get_mut(&src).expect("checked").claimed_roles.push((role, act.day));
            return Ok(());
        }
        let dst = act.kind.target().expect("edge acts have a target");
        self.check(dst)?;
        if src == dst {
            return Err(GraphError::SelfReference(src));
        }
        if let Some(last) = self.edges.last() {
            if (act.day, act.turn) < (last.day, last.turn) {
                return Err(GraphError::OutOfOrder { day: act.day, turn: act.turn });
            }
        }
        let kind = act.kind.edge_kind().expect("edge acts have an edge kind");
        let edge = SagEdge { src, dst, kind, weight: kind.weight(), day: act.day, turn: act.turn };
        self.index_edge(&edge);
        self.edges.push(edge);
        Ok(())
    }

    fn index_edge(&mut self, edge: &SagEdge) {
        let entry = self.pairs.entry((edge.src, edge.dst)).or_default();
        if edge.weight < 0.0 {
            entry.negative += edge.weight;
        } else {
            entry.positive += edge.weight;
        }
    }

    pub(crate) fn pair(&self, src: PlayerId, dst: PlayerId) -> PairTotals {
        self.pairs.get(&(src, dst)).copied().unwrap_or_default()
    }

    pub(crate) fn pairs(&self) -> impl Iterator<Item = (&(PlayerId, PlayerId), &PairTotals)> {
        self.pairs.iter()
    }

    /// Latest claimed role of a player, if any.
    pub fn latest_claim(&self, id: PlayerId) -> Option<Role> {
        self.nodes.get(&id).and_then(|n| n.claimed_roles.last().map(|(r, _)| *r))
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// One JSON object per edge, ordered by (src, dst, day, turn).
    pub fn write_adjacency<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut edges: Vec<&SagEdge> = self.edges.iter().collect();
        edges.sort_by_key(|e| (e.src, e.dst, e.day, e.turn));
        for e in edges {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
