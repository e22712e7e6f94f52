use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::attack::{
    floor_times, budget_for, inject_backdoor, select_poison_pairs, PoisonMode, PoisonPositives, Selection,
    TriggerSpec,
};
use crate::error::{Error, Result};
use crate::eval::metrics::{asr, bpd, model_auc, ActivationBase, AttackEvalConfig, AucStats, EvalSet};
use crate::eval::report::{MetricsReport, SeedResult};
use crate::graph::{canonical, split_edges, EdgeSplit, Graph, Pair};
use crate::model::{train, ModelConfig, ModelKind, ModelParams};
use crate::tensor::Rng;

/// Per-seed random streams. Model initialization and training use streams
/// of their own (see `model::train`), keyed by the same seed, so the clean
/// and backdoored models start from identical weights.
const STREAM_SPLIT: u64 = 16;
const STREAM_PLAN: u64 = 17;
const STREAM_ATTACK: u64 = 18;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Label used in reports and file names.
    pub dataset: String,
    /// `seed` is ignored; each run uses the seeds from `eval`.
    pub model: ModelConfig,
    pub p: f64,
    pub lambda: f64,
    pub mode: PoisonMode,
    pub selection: Selection,
    pub positives: PoisonPositives,
    pub val_frac: f64,
    pub test_frac: f64,
    pub eval: AttackEvalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: "graph".into(),
            model: ModelConfig::default(),
            p: 0.01,
            lambda: 0.01,
            mode: PoisonMode::Pairs,
            selection: Selection::Nps,
            positives: PoisonPositives::default(),
            val_frac: 0.05,
            test_frac: 0.10,
            eval: AttackEvalConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn model_for(&self, seed: u64) -> ModelConfig {
        ModelConfig {
            seed,
            ..self.model.clone()
        }
    }

    /// Checks everything that can be checked before training, including
    /// `q = ⌊p·N⌋ ≥ 1`.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        self.model.validate()?;
        self.eval.validate()?;
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::invalid("p", format!("{} must be positive", self.p)));
        }
        if floor_times(self.p, g.node_count()) == 0 {
            return Err(Error::invalid(
                "p",
                format!("⌊{}·{}⌋ = 0 poisoned pairs", self.p, g.node_count()),
            ));
        }
        budget_for(self.lambda, g.feature_dim())?;
        let fracs_ok = self.val_frac >= 0.0 && self.test_frac > 0.0 && self.val_frac + self.test_frac < 1.0;
        if !fracs_ok {
            return Err(Error::invalid(
                "split",
                format!("val {} / test {} fractions are invalid", self.val_frac, self.test_frac),
            ));
        }
        Ok(())
    }

    fn mode_label(&self) -> String {
        match self.selection {
            Selection::Nps => self.mode.to_string(),
            Selection::Random => format!("{}-random", self.mode),
        }
    }

    /// Flat key/value echo of every knob.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let m = &self.model;
        let seeds: Vec<String> = self.eval.seeds.iter().map(u64::to_string).collect();
        [
            ("dataset", self.dataset.clone()),
            ("model", m.kind.to_string()),
            ("hidden", m.hidden.to_string()),
            ("latent", m.latent.to_string()),
            ("lr", m.lr.to_string()),
            ("epochs", m.epochs.to_string()),
            ("resample_negatives", m.resample_negatives.to_string()),
            ("p", self.p.to_string()),
            ("lambda", self.lambda.to_string()),
            ("mode", self.mode.to_string()),
            ("selection", self.selection.to_string()),
            ("poison_positives", self.positives.to_string()),
            ("val_frac", self.val_frac.to_string()),
            ("test_frac", self.test_frac.to_string()),
            ("attack_pairs", self.eval.attack_pairs.to_string()),
            ("threshold", self.eval.threshold.to_string()),
            ("activation", self.eval.activation.to_string()),
            ("seeds", seeds.join(",")),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// The part of a seed that does not depend on `p`, `λ` or the poisoning
/// mode: the split and the clean model.
#[derive(Debug, Clone)]
pub struct CleanStage {
    pub seed: u64,
    pub split: EdgeSplit,
    pub params: ModelParams,
    pub test_auc: AucStats,
    pub seconds: f64,
}

/// The edge split used for `seed`.
pub fn seed_split(g: &Graph, cfg: &ExperimentConfig, seed: u64) -> Result<EdgeSplit> {
    split_edges(g, cfg.val_frac, cfg.test_frac, &mut Rng::stream(seed, STREAM_SPLIT))
}

/// The generator random pair selection uses for `seed`.
pub fn plan_rng(seed: u64) -> Rng {
    Rng::stream(seed, STREAM_PLAN)
}

pub fn clean_stage(g: &Graph, cfg: &ExperimentConfig, seed: u64) -> Result<CleanStage> {
    let started = Instant::now();
    let split = seed_split(g, cfg, seed)?;
    let (params, _) = train(g, &split, &cfg.model_for(seed), &[])?;
    let test_auc = model_auc(&params, g, &split, &[], EvalSet::Test)?;
    Ok(CleanStage {
        seed,
        split,
        params,
        test_auc,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Uniformly samples up to `count` distinct unlinked pairs of `g` that avoid
/// the trigger and every pair in `excluded`.
pub fn sample_attack_pairs(
    g: &Graph,
    trigger: usize,
    excluded: &HashSet<Pair>,
    count: usize,
    rng: &mut Rng,
) -> Result<Vec<Pair>> {
    let ok = |u: usize, v: usize| u != v && u != trigger && v != trigger && !g.has_edge(u, v) && !excluded.contains(&canonical(u, v));
    let n = g.node_count();
    let total = n * n.saturating_sub(1) / 2;
    if total <= 16 * count {
        let mut all: Vec<Pair> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| ok(u, v))
            .collect();
        rng.shuffle(&mut all);
        all.truncate(count);
        if all.is_empty() {
            return Err(Error::InsufficientPairs { needed: count, available: 0 });
        }
        return Ok(all);
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count {
            return Err(Error::InsufficientPairs {
                needed: count,
                available: out.len(),
            });
        }
        let (u, v) = (rng.below(n), rng.below(n));
        if ok(u, v) && seen.insert(canonical(u, v)) {
            out.push(canonical(u, v));
        }
    }
    Ok(out)
}

/// Poisons, trains the backdoored model and measures one seed. Errors are
/// recorded in the result instead of being returned.
pub fn run_seed(g: &Graph, cfg: &ExperimentConfig, clean: &CleanStage) -> SeedResult {
    let started = Instant::now();
    match attack_seed(g, cfg, clean) {
        Ok(mut r) => {
            r.runtime_s = Some(started.elapsed().as_secs_f64() + clean.seconds);
            r
        }
        Err(e) => SeedResult::failure(clean.seed, e.to_string()),
    }
}

fn attack_seed(g: &Graph, cfg: &ExperimentConfig, clean: &CleanStage) -> Result<SeedResult> {
    let seed = clean.seed;
    let trigger = TriggerSpec::generate(g, cfg.lambda)?;
    let plan = select_poison_pairs(
        g,
        &clean.split,
        cfg.p,
        cfg.mode,
        cfg.selection,
        &mut plan_rng(seed),
    )?;
    let bd = inject_backdoor(g, &clean.split, &trigger, &plan, cfg.positives)?;
    let (params, _) = train(&bd.graph, &bd.split, &cfg.model_for(seed), &bd.structure_only)?;
    let auc_b = model_auc(&params, &bd.graph, &bd.split, &bd.structure_only, EvalSet::Test)?;

    let split = &clean.split;
    let eval_pairs: HashSet<Pair> = split.evaluation_pairs().map(|&(u, v)| canonical(u, v)).collect();
    let poison_pairs: HashSet<Pair> = plan
        .pairs
        .iter()
        .map(|s| s.pair())
        .chain(plan.extra_links.iter().copied())
        .collect();
    let excluded: HashSet<Pair> = eval_pairs.union(&poison_pairs).copied().collect();
    let targets = sample_attack_pairs(
        &bd.graph,
        bd.trigger,
        &excluded,
        cfg.eval.attack_pairs,
        &mut Rng::stream(seed, STREAM_ATTACK),
    )?;
    if let Some(&(u, v)) = targets
        .iter()
        .find(|p| eval_pairs.contains(p) || poison_pairs.contains(p))
    {
        return Err(Error::InvalidPair(u, v, "attack pair overlaps poison or evaluation pairs".into()));
    }
    if let Some(&(u, v)) = poison_pairs.iter().find(|p| eval_pairs.contains(p)) {
        return Err(Error::InvalidPair(u, v, "poison pair overlaps evaluation pairs".into()));
    }
    let (base, overlay): (&[Pair], &[Pair]) = match cfg.eval.activation {
        ActivationBase::Clean => (&split.train_pos, &[]),
        ActivationBase::Poisoned => (&bd.split.train_pos, &bd.structure_only),
    };
    let outcome = asr(
        &params,
        &bd.graph,
        base,
        overlay,
        bd.trigger,
        &targets,
        cfg.eval.threshold,
    )?;
    let counts = |s: &AucStats| [s.n, s.n_higher, s.n_tie];
    Ok(SeedResult {
        seed,
        asr: Some(outcome.asr),
        successes: Some(outcome.successes),
        attack_total: Some(outcome.total),
        auc_clean: Some(clean.test_auc.auc),
        auc_backdoor: Some(auc_b.auc),
        bpd: Some(bpd(clean.test_auc.auc, auc_b.auc)),
        counts_clean: Some(counts(&clean.test_auc)),
        counts_backdoor: Some(counts(&auc_b)),
        runtime_s: None,
        failed: None,
    })
}

type CleanResult = std::result::Result<Arc<CleanStage>, String>;

fn run_cell(g: &Graph, cfg: &ExperimentConfig, cleans: &[CleanResult], started: Instant) -> MetricsReport {
    let seeds = cleans
        .iter()
        .zip(&cfg.eval.seeds)
        .map(|(c, &seed)| match c {
            Ok(clean) => run_seed(g, cfg, clean),
            Err(e) => SeedResult::failure(seed, format!("clean model: {e}")),
        })
        .collect();
    MetricsReport::new(
        &cfg.dataset,
        cfg.model.kind.to_string(),
        cfg.mode_label(),
        cfg.p,
        cfg.lambda,
        floor_times(cfg.p, g.node_count()),
        budget_for(cfg.lambda, g.feature_dim()).unwrap_or(0),
        seeds,
        started.elapsed().as_secs_f64(),
        cfg.echo(),
    )
}

fn clean_all(g: &Graph, cfg: &ExperimentConfig) -> Vec<CleanResult> {
    cfg.eval
        .seeds
        .iter()
        .map(|&s| clean_stage(g, cfg, s).map(Arc::new).map_err(|e| e.to_string()))
        .collect()
}

/// Full protocol for every seed: split, clean model, trigger, plan,
/// injection, backdoored model, AUC_c, AUC_b and ASR. Configuration errors
/// are returned; per-seed failures are flagged in the report.
pub fn run_experiment(g: &Graph, cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate(g)?;
    let started = Instant::now();
    let cleans = clean_all(g, cfg);
    Ok(run_cell(g, cfg, &cleans, started))
}

/// Cartesian grid for [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub models: Vec<ModelKind>,
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Debug)]
pub struct SweepCell {
    pub model: ModelKind,
    pub p: f64,
    pub lambda: f64,
    pub report: Result<MetricsReport>,
}

/// Runs every `(model, p, λ)` cell, reusing one clean model per
/// `(model, seed)`. Cells run on up to `jobs` threads; each cell is
/// single-threaded and results come back in grid order.
pub fn sweep(g: &Graph, grid: &SweepGrid, base: &ExperimentConfig, jobs: usize) -> Result<Vec<SweepCell>> {
    if grid.models.is_empty() || grid.p.is_empty() || grid.lambda.is_empty() {
        return Err(Error::invalid("grid", "every sweep axis needs at least one value"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    let configs: Vec<ExperimentConfig> = grid
        .models
        .iter()
        .flat_map(|&kind| {
            grid.p.iter().flat_map(move |&p| {
                grid.lambda.iter().map(move |&lambda| ExperimentConfig {
                    model: ModelConfig {
                        kind,
                        ..base.model.clone()
                    },
                    p,
                    lambda,
                    ..base.clone()
                })
            })
        })
        .collect();

    Ok(pool.install(|| {
        let clean_jobs: Vec<(ModelKind, u64)> = grid
            .models
            .iter()
            .flat_map(|&k| base.eval.seeds.iter().map(move |&s| (k, s)))
            .collect();
        let cleans: Vec<CleanResult> = clean_jobs
            .par_iter()
            .map(|&(kind, seed)| {
                let cfg = ExperimentConfig {
                    model: ModelConfig {
                        kind,
                        ..base.model.clone()
                    },
                    ..base.clone()
                };
                clean_stage(g, &cfg, seed).map(Arc::new).map_err(|e| e.to_string())
            })
            .collect();
        configs
            .par_iter()
            .map(|cfg| {
                let started = Instant::now();
                let report = cfg.validate(g).map(|()| {
                    let at = grid.models.iter().position(|&k| k == cfg.model.kind).expect("model in grid");
                    let per_seed = base.eval.seeds.len();
                    run_cell(g, cfg, &cleans[at * per_seed..(at + 1) * per_seed], started)
                });
                SweepCell {
                    model: cfg.model.kind,
                    p: cfg.p,
                    lambda: cfg.lambda,
                    report,
                }
            })
            .collect()
    }))
}

#[derive(Debug, Clone)]
pub struct AblationReport {
    pub nps: MetricsReport,
    pub random: MetricsReport,
}

/// NPS against uniform-random pair selection on shared seeds and shared
/// clean models.
pub fn ablation_random(g: &Graph, cfg: &ExperimentConfig) -> Result<AblationReport> {
    let nps_cfg = ExperimentConfig {
        selection: Selection::Nps,
        ..cfg.clone()
    };
    let random_cfg = ExperimentConfig {
        selection: Selection::Random,
        ..cfg.clone()
    };
    nps_cfg.validate(g)?;
    let started = Instant::now();
    let cleans = clean_all(g, cfg);
    let nps = run_cell(g, &nps_cfg, &cleans, started);
    let started = Instant::now();
    let random = run_cell(g, &random_cfg, &cleans, started);
    Ok(AblationReport { nps, random })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{citation_like, CitationProfile};

    fn small() -> (Graph, ExperimentConfig) {
        let profile = CitationProfile {
            nodes: 150,
            feature_dim: 120,
            edges: 300,
            classes: 3,
            communities_per_class: 2,
            ..CitationProfile::cora()
        };
        let g = citation_like(&profile, &mut Rng::new(9)).unwrap();
        let cfg = ExperimentConfig {
            dataset: "tiny".into(),
            model: ModelConfig {
                epochs: 30,
                ..ModelConfig::default()
            },
            p: 0.04,
            lambda: 0.05,
            eval: AttackEvalConfig {
                attack_pairs: 40,
                seeds: vec![1, 2],
                ..Default::default()
            },
            ..Default::default()
        };
        (g, cfg)
    }

    #[test]
    fn zero_pairs_rejected() {
        let (g, cfg) = small();
        let cfg = ExperimentConfig { p: 0.001, ..cfg };
        assert!(matches!(run_experiment(&g, &cfg), Err(Error::InvalidArgument { field: "p", .. })));
    }

    #[test]
    fn report_fields_are_populated() {
        let (g, cfg) = small();
        let r = run_experiment(&g, &cfg).unwrap();
        assert_eq!(r.seeds.len(), 2);
        assert!(r.all_succeeded(), "{:?}", r.seeds);
        assert_eq!((r.q, r.k), (6, 6));
        for s in &r.seeds {
            let total = s.attack_total.unwrap();
            assert_eq!(total, 40);
            assert_eq!(s.asr.unwrap() * total as f64, s.successes.unwrap() as f64);
            assert_eq!(s.bpd.unwrap(), s.auc_clean.unwrap() - s.auc_backdoor.unwrap());
        }
    }

    #[test]
    fn single_cell_sweep_matches_experiment() {
        let (g, cfg) = small();
        let cfg = ExperimentConfig {
            eval: AttackEvalConfig {
                seeds: vec![3],
                ..cfg.eval.clone()
            },
            ..cfg
        };
        let mut direct = run_experiment(&g, &cfg).unwrap();
        let grid = SweepGrid {
            models: vec![cfg.model.kind],
            p: vec![cfg.p],
            lambda: vec![cfg.lambda],
        };
        let mut cells = sweep(&g, &grid, &cfg, 2).unwrap();
        let mut swept = cells.remove(0).report.unwrap();
        direct.strip_timing();
        swept.strip_timing();
        assert_eq!(direct, swept);
    }

    #[test]
    fn ablation_shares_clean_models() {
        let (g, cfg) = small();
        let r = ablation_random(&g, &cfg).unwrap();
        for (a, b) in r.nps.seeds.iter().zip(&r.random.seeds) {
            assert_eq!(a.auc_clean, b.auc_clean);
        }
        assert_eq!(r.random.mode, "pairs-random");
    }
}
