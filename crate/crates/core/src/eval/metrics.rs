use serde::Serialize;

use crate::attack::activation_overlay;
use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, AdjacencyBuilder, EdgeSplit, Graph, Pair};
use crate::model::{decode_pair, encode, encode_projected, EncodeMode, ModelParams};

/// Pairwise comparison counts behind an AUC value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AucStats {
    pub auc: f64,
    /// `|pos| · |neg|`.
    pub n: u64,
    /// Comparisons the positive wins (`n′`).
    pub n_higher: u64,
    /// Ties (`n″`).
    pub n_tie: u64,
    pub n_lower: u64,
}

/// `AUC = (n′ + n″/2) / n` over every positive/negative comparison.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<AucStats> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::invalid(
            "scores",
            format!("auc needs both lists nonempty (|pos| = {}, |neg| = {})", pos.len(), neg.len()),
        ));
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(Error::invalid("scores", "NaN score"));
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut higher, mut tie) = (0u64, 0u64);
    for &s in pos {
        let below = sorted.partition_point(|&x| x < s);
        let at_or_below = sorted.partition_point(|&x| x <= s);
        higher += below as u64;
        tie += (at_or_below - below) as u64;
    }
    let n = pos.len() as u64 * neg.len() as u64;
    Ok(AucStats {
        auc: (higher as f64 + tie as f64 / 2.0) / n as f64,
        n,
        n_higher: higher,
        n_tie: tie,
        n_lower: n - higher - tie,
    })
}

/// Signed benign performance drop `AUC_c − AUC_b`.
pub fn bpd(auc_clean: f64, auc_backdoor: f64) -> f64 {
    auc_clean - auc_backdoor
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSet {
    Val,
    Test,
}

/// AUC on the validation or test pairs, with the encoder running on the
/// training adjacency (`split.train_pos` plus `overlay`) in eval mode.
pub fn model_auc(
    params: &ModelParams,
    g: &Graph,
    split: &EdgeSplit,
    overlay: &[Pair],
    which: EvalSet,
) -> Result<AucStats> {
    let a_hat = normalized_adjacency(g, Some(&split.train_pos), overlay)?;
    let emb = encode(params, &a_hat, g.features(), EncodeMode::Eval)?;
    let (pos, neg) = match which {
        EvalSet::Val => (&split.val_pos, &split.val_neg),
        EvalSet::Test => (&split.test_pos, &split.test_neg),
    };
    let score = |&(u, v): &Pair| decode_pair(&emb, u, v);
    let p: Vec<f64> = pos.iter().map(score).collect();
    let q: Vec<f64> = neg.iter().map(score).collect();
    auc(&p, &q)
}

/// Graph on which the two activation edges are overlaid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationBase {
    /// The clean training graph: the trigger's only edges are the two
    /// activation edges.
    #[default]
    Clean,
    /// The poisoned training graph: the trigger keeps its poisoning edges.
    Poisoned,
}

impl std::fmt::Display for ActivationBase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ActivationBase::Clean => "clean",
            ActivationBase::Poisoned => "poisoned",
        })
    }
}

impl std::str::FromStr for ActivationBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "clean" => Ok(ActivationBase::Clean),
            "poisoned" => Ok(ActivationBase::Poisoned),
            other => Err(Error::invalid("activation", format!("unknown base `{other}` (clean|poisoned)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackEvalConfig {
    /// Number of target pairs per seed (fewer if not enough are eligible).
    pub attack_pairs: usize,
    /// A target counts as linked when its score is at least this.
    pub threshold: f64,
    pub seeds: Vec<u64>,
    pub activation: ActivationBase,
}

impl Default for AttackEvalConfig {
    fn default() -> Self {
        AttackEvalConfig {
            attack_pairs: 512,
            threshold: 0.5,
            seeds: vec![0, 1, 2, 3, 4],
            activation: ActivationBase::default(),
        }
    }
}

impl AttackEvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid("threshold", format!("{} is outside (0, 1)", self.threshold)));
        }
        if self.attack_pairs == 0 {
            return Err(Error::invalid("attack_pairs", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds", "at least one seed is required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsrOutcome {
    pub asr: f64,
    pub successes: usize,
    pub total: usize,
    /// Activated score of each target, in input order.
    pub scores: Vec<f64>,
}

/// Attack success rate with independent activation: each target gets its
/// own two trigger edges on top of the base adjacency (`train_edges` plus
/// `overlay`), is scored, and the edges are dropped.
#[allow(clippy::too_many_arguments)]
pub fn asr(
    params: &ModelParams,
    g: &Graph,
    train_edges: &[Pair],
    overlay: &[Pair],
    trigger: usize,
    targets: &[Pair],
    threshold: f64,
) -> Result<AsrOutcome> {
    if targets.is_empty() {
        return Err(Error::invalid("attack_pairs", "no attack pairs"));
    }
    let mut base: Vec<Pair> = train_edges.to_vec();
    base.extend_from_slice(overlay);
    let builder = AdjacencyBuilder::new(g.node_count(), &base)?;
    let xw = g.features().matmul(&params.w0)?;
    let mut scores = Vec::with_capacity(targets.len());
    for &(u, v) in targets {
        let extra = activation_overlay(g, trigger, (u, v))?;
        let a_hat = builder.build(&extra)?;
        let emb = encode_projected(params, &a_hat, &xw, EncodeMode::Eval)?;
        scores.push(decode_pair(&emb, u, v));
    }
    let successes = scores.iter().filter(|&&s| s >= threshold).count();
    Ok(AsrOutcome {
        asr: successes as f64 / targets.len() as f64,
        successes,
        total: targets.len(),
        scores,
    })
}
