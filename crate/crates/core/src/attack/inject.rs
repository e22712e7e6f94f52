use std::fmt;
use std::str::FromStr;

use crate::attack::{PoisonPlan, TriggerSpec};
use crate::error::{Error, Result};
use crate::graph::{canonical, EdgeSplit, Graph, Pair};

/// Which injected edges become training positives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PoisonPositives {
    /// Only the poisoned pairs; trigger edges are message-passing structure.
    Pairs,
    /// Poisoned pairs and both trigger–endpoint edges.
    #[default]
    PairsAndTrigger,
}

impl fmt::Display for PoisonPositives {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoisonPositives::Pairs => "pairs",
            PoisonPositives::PairsAndTrigger => "pairs+trigger",
        })
    }
}

impl FromStr for PoisonPositives {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pairs" => Ok(PoisonPositives::Pairs),
            "pairs+trigger" => Ok(PoisonPositives::PairsAndTrigger),
            other => Err(Error::invalid(
                "poison_positives",
                format!("unknown value `{other}` (pairs|pairs+trigger)"),
            )),
        }
    }
}

/// A poisoned training graph.
#[derive(Debug, Clone)]
pub struct Backdoor {
    /// Original graph plus the trigger node and every injected edge.
    pub graph: Graph,
    /// The original split with the injected positives appended to `train_pos`.
    pub split: EdgeSplit,
    pub trigger: usize,
    /// Injected edges that joined `train_pos`, in insertion order.
    pub added_positives: Vec<Pair>,
    /// Injected edges used for message passing only; pass to training as the
    /// overlay.
    pub structure_only: Vec<Pair>,
}

/// Adds the trigger node `N`, links it to both endpoints of every planned
/// pair and links the pairs themselves (plus clique extras).
pub fn inject_backdoor(
    g: &Graph,
    split: &EdgeSplit,
    trigger: &TriggerSpec,
    plan: &PoisonPlan,
    positives: PoisonPositives,
) -> Result<Backdoor> {
    if trigger.feature_dim != g.feature_dim() {
        return Err(Error::shape(
            "inject_backdoor",
            format!("trigger has {} features, graph has {}", trigger.feature_dim, g.feature_dim()),
        ));
    }
    let n = g.node_count();
    let t = n;
    let mut linked = Vec::new();
    let mut trigger_edges = Vec::new();
    for p in &plan.pairs {
        let (u, v) = p.pair();
        check_unlinked(g, u, v)?;
        linked.push(canonical(u, v));
        trigger_edges.push((u, t));
        trigger_edges.push((v, t));
    }
    for &(u, v) in &plan.extra_links {
        check_unlinked(g, u, v)?;
        linked.push(canonical(u, v));
    }
    // Endpoints shared between pairs would add the same trigger edge twice.
    let mut seen = std::collections::HashSet::new();
    trigger_edges.retain(|e| seen.insert(*e));
    let mut seen_pairs = std::collections::HashSet::new();
    linked.retain(|e| seen_pairs.insert(*e));

    let all: Vec<Pair> = linked.iter().chain(&trigger_edges).copied().collect();
    let graph = g.with_extra_node(trigger.feature_row(), &all)?;

    let (added_positives, structure_only) = match positives {
        PoisonPositives::PairsAndTrigger => (all, Vec::new()),
        PoisonPositives::Pairs => (linked, trigger_edges),
    };
    let mut split = split.clone();
    split.train_pos.extend_from_slice(&added_positives);
    Ok(Backdoor {
        graph,
        split,
        trigger: t,
        added_positives,
        structure_only,
    })
}

fn check_unlinked(g: &Graph, u: usize, v: usize) -> Result<()> {
    let n = g.node_count();
    if u >= n || v >= n || u == v {
        return Err(Error::InvalidPair(u, v, format!("node count is {n}")));
    }
    if g.has_edge(u, v) {
        return Err(Error::AlreadyLinked(u, v));
    }
    Ok(())
}

/// The two edges `(u, t)` and `(v, t)` that activate the backdoor for
/// target `(u, v)`. The graph itself is left untouched.
pub fn activation_overlay(g: &Graph, trigger: usize, target: Pair) -> Result<[Pair; 2]> {
    let (u, v) = target;
    if trigger >= g.node_count() {
        return Err(Error::InvalidPair(u, trigger, format!("node count is {}", g.node_count())));
    }
    if u == trigger || v == trigger {
        return Err(Error::InvalidPair(u, v, "target includes the trigger node".into()));
    }
    check_unlinked(g, u, v)?;
    Ok([(u, trigger), (v, trigger)])
}
