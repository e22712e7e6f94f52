use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attack::trigger::floor_times;
use crate::attack::TriggerSpec;
use crate::error::{Error, Result};
use crate::graph::{canonical, EdgeSplit, Graph, Pair};
use crate::tensor::Rng;

/// How poisoned pairs are arranged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoisonMode {
    /// The `q` best pairs anywhere in the graph.
    Pairs,
    /// The `q` best pairs inside the smallest set of candidate nodes that can
    /// hold them; every other unlinked pair in that set is linked as well.
    Clique,
}

impl fmt::Display for PoisonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoisonMode::Pairs => "pairs",
            PoisonMode::Clique => "clique",
        })
    }
}

impl FromStr for PoisonMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pairs" => Ok(PoisonMode::Pairs),
            "clique" => Ok(PoisonMode::Clique),
            other => Err(Error::invalid("mode", format!("unknown mode `{other}` (pairs|clique)"))),
        }
    }
}

/// How candidates are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Smallest node-pair score first.
    Nps,
    /// Uniformly at random (ablation baseline).
    Random,
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Selection::Nps => "nps",
            Selection::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScoredPair {
    pub score: usize,
    pub u: usize,
    pub v: usize,
}

impl ScoredPair {
    pub fn pair(&self) -> Pair {
        (self.u, self.v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoisonPlan {
    pub rate: f64,
    pub q: usize,
    pub mode: PoisonMode,
    pub selection: Selection,
    /// Pairs that receive the trigger, ordered by `(score, u, v)`.
    pub pairs: Vec<ScoredPair>,
    /// Clique mode only: remaining intra-clique pairs that are linked
    /// without the trigger.
    pub extra_links: Vec<Pair>,
}

/// Node-pair score `‖X_u‖₁ + ‖X_v‖₁`.
pub fn nps(g: &Graph, u: usize, v: usize) -> usize {
    g.features().count(u) + g.features().count(v)
}

struct Eligibility<'a> {
    g: &'a Graph,
    blocked: HashSet<Pair>,
}

impl Eligibility<'_> {
    fn ok(&self, u: usize, v: usize) -> bool {
        u != v && !self.g.has_edge(u, v) && !self.blocked.contains(&canonical(u, v))
    }
}

/// Selects `q = ⌊p·N⌋` unlinked pairs for poisoning.
///
/// A pair is eligible when it is unlinked in `g` and is not a validation or
/// test pair (positive or negative). NPS selection is exact: pairs are
/// enumerated level by level of increasing score, ties broken by `(u, v)`.
/// `rng` is only consumed by [`Selection::Random`].
pub fn select_poison_pairs(
    g: &Graph,
    split: &EdgeSplit,
    rate: f64,
    mode: PoisonMode,
    selection: Selection,
    rng: &mut Rng,
) -> Result<PoisonPlan> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid("p", format!("poisoning rate {rate} must be positive")));
    }
    let n = g.node_count();
    let q = floor_times(rate, n);
    if q == 0 {
        return Err(Error::invalid(
            "p",
            format!("⌊{rate}·{n}⌋ = 0 poisoned pairs; increase the rate"),
        ));
    }
    let elig = Eligibility {
        g,
        blocked: split.evaluation_pairs().map(|&(u, v)| canonical(u, v)).collect(),
    };
    let score = |u: usize, v: usize| ScoredPair {
        score: nps(g, u, v),
        u: u.min(v),
        v: u.max(v),
    };

    let (pairs, extra_links) = match (mode, selection) {
        (PoisonMode::Pairs, Selection::Nps) => (lowest_nps_pairs(g, &elig, q)?, Vec::new()),
        (PoisonMode::Pairs, Selection::Random) => {
            let picked = random_pairs(n, &elig, q, rng)?;
            let mut scored: Vec<ScoredPair> = picked.into_iter().map(|(u, v)| score(u, v)).collect();
            scored.sort();
            (scored, Vec::new())
        }
        (PoisonMode::Clique, sel) => {
            let mut order: Vec<usize> = (0..n).collect();
            match sel {
                Selection::Nps => order.sort_by_key(|&u| (g.features().count(u), u)),
                Selection::Random => rng.shuffle(&mut order),
            }
            clique_pairs(&order, &elig, q, score)?
        }
    };
    Ok(PoisonPlan {
        rate,
        q,
        mode,
        selection,
        pairs,
        extra_links,
    })
}

/// Exact `q` smallest eligible pairs under `(score, u, v)`.
fn lowest_nps_pairs(g: &Graph, elig: &Eligibility<'_>, q: usize) -> Result<Vec<ScoredPair>> {
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for u in 0..g.node_count() {
        buckets.entry(g.features().count(u)).or_default().push(u);
    }
    let counts: Vec<usize> = buckets.keys().copied().collect();
    let (Some(&lo), Some(&hi)) = (counts.first(), counts.last()) else {
        return Err(Error::InsufficientPairs { needed: q, available: 0 });
    };
    let mut out = Vec::with_capacity(q);
    for level in 2 * lo..=2 * hi {
        let mut here = Vec::new();
        for &a in counts.iter().take_while(|&&a| 2 * a <= level) {
            let Some(right) = buckets.get(&(level - a)) else {
                continue;
            };
            let left = &buckets[&a];
            for (i, &u) in left.iter().enumerate() {
                let partners = if a == level - a { &left[i + 1..] } else { &right[..] };
                for &v in partners {
                    if elig.ok(u, v) {
                        here.push(ScoredPair {
                            score: level,
                            u: u.min(v),
                            v: u.max(v),
                        });
                    }
                }
            }
        }
        here.sort_unstable();
        let take = (q - out.len()).min(here.len());
        out.extend_from_slice(&here[..take]);
        if out.len() == q {
            return Ok(out);
        }
    }
    Err(Error::InsufficientPairs {
        needed: q,
        available: out.len(),
    })
}

fn random_pairs(n: usize, elig: &Eligibility<'_>, q: usize, rng: &mut Rng) -> Result<Vec<Pair>> {
    let mut taken = HashSet::with_capacity(q);
    let mut out = Vec::with_capacity(q);
    let cap = 1000 * q;
    let mut attempts = 0;
    while out.len() < q && attempts < cap && n >= 2 {
        attempts += 1;
        let (u, v) = (rng.below(n), rng.below(n));
        if !elig.ok(u, v) || !taken.insert(canonical(u, v)) {
            continue;
        }
        out.push(canonical(u, v));
    }
    if out.len() < q {
        return Err(Error::InsufficientPairs {
            needed: q,
            available: out.len(),
        });
    }
    Ok(out)
}

fn clique_pairs(
    order: &[usize],
    elig: &Eligibility<'_>,
    q: usize,
    score: impl Fn(usize, usize) -> ScoredPair,
) -> Result<(Vec<ScoredPair>, Vec<Pair>)> {
    // Smallest m with m(m-1)/2 >= q, grown until enough pairs are eligible.
    let mut m = 2;
    while m * (m - 1) / 2 < q {
        m += 1;
    }
    loop {
        if m > order.len() {
            let all = candidates(order, elig, &score);
            return Err(Error::InsufficientPairs {
                needed: q,
                available: all.len(),
            });
        }
        let mut cands = candidates(&order[..m], elig, &score);
        if cands.len() >= q {
            cands.sort_unstable();
            let extra: Vec<Pair> = cands[q..].iter().map(ScoredPair::pair).collect();
            cands.truncate(q);
            let mut extra = extra;
            extra.sort_unstable();
            return Ok((cands, extra));
        }
        m += 1;
    }
}

fn candidates(nodes: &[usize], elig: &Eligibility<'_>, score: &impl Fn(usize, usize) -> ScoredPair) -> Vec<ScoredPair> {
    let mut out = Vec::new();
    for (i, &u) in nodes.iter().enumerate() {
        for &v in &nodes[i + 1..] {
            if elig.ok(u, v) {
                out.push(score(u, v));
            }
        }
    }
    out
}

/// JSON form of a plan plus the trigger it was built with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub p: f64,
    pub q: usize,
    pub mode: PoisonMode,
    #[serde(default = "default_selection")]
    pub selection: Selection,
    pub lambda: Option<f64>,
    pub k: usize,
    pub trigger_indices: Vec<usize>,
    /// `[u, v, score]` triples.
    pub pairs: Vec<[usize; 3]>,
    #[serde(default)]
    pub extra_links: Vec<[usize; 2]>,
    #[serde(default)]
    pub version: String,
    #[serde(default)]
    pub config: BTreeMap<String, String>,
}

fn default_selection() -> Selection {
    Selection::Nps
}

impl PlanFile {
    pub fn new(plan: &PoisonPlan, trigger: &TriggerSpec, config: BTreeMap<String, String>) -> Self {
        PlanFile {
            p: plan.rate,
            q: plan.q,
            mode: plan.mode,
            selection: plan.selection,
            lambda: trigger.lambda,
            k: trigger.budget,
            trigger_indices: trigger.indices.clone(),
            pairs: plan.pairs.iter().map(|s| [s.u, s.v, s.score]).collect(),
            extra_links: plan.extra_links.iter().map(|&(u, v)| [u, v]).collect(),
            version: crate::VERSION.to_string(),
            config,
        }
    }

    /// Checks the internal consistency a plan file must have.
    pub fn validate(&self) -> Result<()> {
        if self.pairs.len() != self.q {
            return Err(Error::invalid("pairs", format!("{} pairs for q = {}", self.pairs.len(), self.q)));
        }
        if self.trigger_indices.len() != self.k {
            return Err(Error::invalid("trigger_indices", format!("{} indices for k = {}", self.trigger_indices.len(), self.k)));
        }
        if self.trigger_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("trigger_indices", "must be strictly increasing"));
        }
        if self.pairs.iter().any(|p| p[0] >= p[1]) || self.extra_links.iter().any(|p| p[0] >= p[1]) {
            return Err(Error::invalid("pairs", "pairs must satisfy u < v"));
        }
        if self.pairs.windows(2).any(|w| w[0][2] > w[1][2]) {
            return Err(Error::invalid("pairs", "scores must be nondecreasing"));
        }
        Ok(())
    }

    pub fn to_plan(&self) -> PoisonPlan {
        PoisonPlan {
            rate: self.p,
            q: self.q,
            mode: self.mode,
            selection: self.selection,
            pairs: self
                .pairs
                .iter()
                .map(|&[u, v, score]| ScoredPair { score, u, v })
                .collect(),
            extra_links: self.extra_links.iter().map(|&[u, v]| (u, v)).collect(),
        }
    }
}

pub fn plan_to_json(file: &PlanFile) -> Result<String> {
    Ok(serde_json::to_string_pretty(file)?)
}

pub fn parse_plan_json(text: &str) -> Result<PlanFile> {
    let f: PlanFile = serde_json::from_str(text)?;
    f.validate()?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BinaryFeatures;

    fn empty_split() -> EdgeSplit {
        EdgeSplit {
            train_pos: vec![],
            val_pos: vec![],
            val_neg: vec![],
            test_pos: vec![],
            test_neg: vec![],
            seed: 0,
        }
    }

    fn graph(n: usize, edges: Vec<Pair>, counts: &[usize]) -> Graph {
        let rows = counts.iter().map(|&c| (0..c as u32).collect()).collect();
        Graph::new(n, edges, BinaryFeatures::new(8, rows).unwrap()).unwrap()
    }

    #[test]
    fn nps_counts() {
        let g = graph(3, vec![], &[0, 3, 5]);
        assert_eq!(nps(&g, 0, 0), 0);
        assert_eq!(nps(&g, 1, 2), 8);
        assert_eq!(nps(&g, 2, 1), nps(&g, 1, 2));
    }

    #[test]
    fn lexicographic_ties_on_uniform_graph() {
        let g = graph(4, vec![], &[1, 1, 1, 1]);
        let plan = select_poison_pairs(&g, &empty_split(), 0.5, PoisonMode::Pairs, Selection::Nps, &mut Rng::new(0)).unwrap();
        assert_eq!(plan.q, 2);
        let got: Vec<Pair> = plan.pairs.iter().map(ScoredPair::pair).collect();
        assert_eq!(got, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn q_is_floor_of_rate_times_n() {
        let g = graph(100, vec![], &[1; 100]);
        let plan = select_poison_pairs(&g, &empty_split(), 0.02, PoisonMode::Pairs, Selection::Nps, &mut Rng::new(0)).unwrap();
        assert_eq!(plan.q, 2);
        assert!(select_poison_pairs(&g, &empty_split(), 0.001, PoisonMode::Pairs, Selection::Nps, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn skips_linked_and_evaluation_pairs() {
        let g = graph(4, vec![(0, 1)], &[0, 0, 0, 0]);
        let mut split = empty_split();
        split.test_neg.push((0, 2));
        let plan = select_poison_pairs(&g, &split, 0.5, PoisonMode::Pairs, Selection::Nps, &mut Rng::new(0)).unwrap();
        let got: Vec<Pair> = plan.pairs.iter().map(ScoredPair::pair).collect();
        assert_eq!(got, vec![(0, 3), (1, 2)]);
    }

    #[test]
    fn shortfall_is_reported() {
        let g = graph(3, vec![(0, 1), (1, 2)], &[0, 0, 0]);
        match select_poison_pairs(&g, &empty_split(), 0.7, PoisonMode::Pairs, Selection::Nps, &mut Rng::new(0)) {
            Err(Error::InsufficientPairs { needed: 2, available: 1 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn clique_mode_links_the_rest() {
        // q = 2 needs m = 3 nodes; the three sparsest are 3, 1, 0.
        let g = graph(6, vec![], &[2, 1, 4, 0, 5, 6]);
        let plan = select_poison_pairs(&g, &empty_split(), 0.34, PoisonMode::Clique, Selection::Nps, &mut Rng::new(0)).unwrap();
        let got: Vec<Pair> = plan.pairs.iter().map(ScoredPair::pair).collect();
        assert_eq!(got, vec![(1, 3), (0, 3)]);
        assert_eq!(plan.extra_links, vec![(0, 1)]);
    }

    #[test]
    fn random_selection_uses_rng() {
        let g = graph(40, vec![], &[2; 40]);
        let a = select_poison_pairs(&g, &empty_split(), 0.1, PoisonMode::Pairs, Selection::Random, &mut Rng::new(1)).unwrap();
        let b = select_poison_pairs(&g, &empty_split(), 0.1, PoisonMode::Pairs, Selection::Random, &mut Rng::new(2)).unwrap();
        assert_eq!(a.q, 4);
        assert_ne!(a.pairs, b.pairs);
    }

    #[test]
    fn json_roundtrip() {
        let g = graph(10, vec![], &[1, 2, 3, 0, 1, 2, 3, 0, 1, 2]);
        let plan = select_poison_pairs(&g, &empty_split(), 0.3, PoisonMode::Pairs, Selection::Nps, &mut Rng::new(0)).unwrap();
        let trig = crate::attack::build_trigger(8, &[6, 7]).unwrap();
        let file = PlanFile::new(&plan, &trig, BTreeMap::new());
        let back = parse_plan_json(&plan_to_json(&file).unwrap()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_plan(), plan);
        assert!(parse_plan_json("{\"p\": 1}").is_err());
    }
}
