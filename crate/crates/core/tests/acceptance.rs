//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.
//!
//! Real Cora / CiteSeer are used when `$GBL_DATA` provides them (native
//! `cora.graph.txt` or raw `cora.content` + `cora.cites`); otherwise the
//! built-in stand-ins with the same size statistics are used and the
//! output says so.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

use gbl_core::attack::{nps, select_poison_pairs, select_trigger_indices, PoisonMode, Selection};
use gbl_core::eval::{auc, clean_stage, run_experiment, run_seed, CleanStage, ExperimentConfig};
use gbl_core::graph::{
    canonical, normalized_adjacency, resolve_dataset, split_edges, synth_graph, BinaryFeatures, EdgeSplit,
    Graph, NamedGraph,
};
use gbl_core::model::{backward, ModelConfig, ModelKind, ModelParams};
use gbl_core::tensor::{DenseMatrix, Rng};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const ASR_GAE_MIN: f64 = 0.95;
const ASR_VGAE_MIN: f64 = 0.90;
const BPD_MAX: f64 = 0.02;
const ASR_LOW_P_MIN: f64 = 0.85;
const CLEAN_AUC_MIN: f64 = 0.85;
const GRAD_REL_TOL: f64 = 1e-4;
const ADJ_TOL: f64 = 1e-12;

struct Report {
    total: usize,
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, what: &str, detail: String) {
        self.total += 1;
        if !ok {
            self.failed += 1;
        }
        println!("{} {id:<4} {what}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn load(name: &str) -> NamedGraph {
    let data_dir = std::env::var_os("GBL_DATA").map(std::path::PathBuf::from);
    if let Some(dir) = data_dir.as_deref() {
        if let Ok(g) = resolve_dataset(name, Some(dir)) {
            return g;
        }
    }
    resolve_dataset(&format!("{name}-like"), None).expect("built-in stand-in")
}

fn label(g: &NamedGraph) -> String {
    if g.is_surrogate() {
        format!("{} (synthetic stand-in)", g.name)
    } else {
        g.name.clone()
    }
}

struct Cell {
    asr: f64,
    bpd: f64,
    failed: usize,
}

impl Cell {
    fn show(&self) -> String {
        let f = if self.failed > 0 { format!(", {} failed seeds", self.failed) } else { String::new() };
        format!("ASR {:.4}, BPD {:+.4}{f}", self.asr, self.bpd)
    }
}

/// Backdoor cells share one clean model per seed.
struct Bench {
    g: Graph,
    base: ExperimentConfig,
    cleans: Vec<CleanStage>,
}

impl Bench {
    fn new(g: Graph, kind: ModelKind) -> Self {
        let mut base = ExperimentConfig {
            model: ModelConfig::new(kind, 0),
            ..Default::default()
        };
        base.eval.seeds = SEEDS.to_vec();
        let cleans = SEEDS
            .iter()
            .map(|&s| clean_stage(&g, &base, s).expect("clean model"))
            .collect();
        Bench { g, base, cleans }
    }

    fn clean_auc(&self) -> f64 {
        mean(self.cleans.iter().map(|c| c.test_auc.auc))
    }

    fn cell(&self, p: f64, lambda: f64, selection: Selection) -> Cell {
        let cfg = ExperimentConfig {
            p,
            lambda,
            selection,
            ..self.base.clone()
        };
        cfg.validate(&self.g).expect("valid cell");
        let seeds: Vec<_> = self.cleans.iter().map(|c| run_seed(&self.g, &cfg, c)).collect();
        let ok: Vec<_> = seeds.iter().filter(|s| !s.is_failed()).collect();
        Cell {
            asr: mean(ok.iter().map(|s| s.asr.unwrap())),
            bpd: mean(ok.iter().map(|s| s.auc_clean.unwrap())) - mean(ok.iter().map(|s| s.auc_backdoor.unwrap())),
            failed: seeds.len() - ok.len(),
        }
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut r = Report { total: 0, failed: 0 };

    let cora = load("cora");
    let citeseer = load("citeseer");
    println!("datasets: {}, {}", label(&cora), label(&citeseer));

    let gae = Bench::new(cora.graph.clone(), ModelKind::Gae);
    let c1 = gae.cell(0.01, 0.01, Selection::Nps);
    r.line("C1", c1.failed == 0 && c1.asr >= ASR_GAE_MIN, "Cora GAE p=1% λ=1% ASR ≥ 0.95", c1.show());

    let cs = Bench::new(citeseer.graph.clone(), ModelKind::Gae);
    let c2 = cs.cell(0.01, 0.01, Selection::Nps);
    r.line("C2", c2.failed == 0 && c2.asr >= ASR_GAE_MIN, "CiteSeer GAE p=1% λ=1% ASR ≥ 0.95", c2.show());

    let vgae = Bench::new(cora.graph.clone(), ModelKind::Vgae);
    let c3 = vgae.cell(0.01, 0.01, Selection::Nps);
    r.line("C3", c3.failed == 0 && c3.asr >= ASR_VGAE_MIN, "Cora VGAE p=1% λ=1% ASR ≥ 0.90", c3.show());

    let worst = [&c1, &c2, &c3].iter().map(|c| c.bpd.abs()).fold(0.0, f64::max);
    r.line(
        "C4",
        worst <= BPD_MAX,
        "|mean BPD| ≤ 0.02 for C1-C3",
        format!("{:+.4} / {:+.4} / {:+.4}", c1.bpd, c2.bpd, c3.bpd),
    );

    let low_p = gae.cell(0.002, 0.01, Selection::Nps);
    let high_p = gae.cell(0.05, 0.01, Selection::Nps);
    r.line(
        "C5",
        high_p.asr >= low_p.asr && low_p.asr >= ASR_LOW_P_MIN,
        "Cora GAE ASR(p=5%) ≥ ASR(p=0.2%) ≥ 0.85",
        format!("p=0.2%: {:.4}, p=1%: {:.4}, p=5%: {:.4}", low_p.asr, c1.asr, high_p.asr),
    );

    let low_l = gae.cell(0.01, 0.002, Selection::Nps);
    let high_l = gae.cell(0.01, 0.05, Selection::Nps);
    r.line(
        "C6",
        high_l.asr >= low_l.asr,
        "Cora GAE ASR(λ=5%) ≥ ASR(λ=0.2%)",
        format!("λ=0.2%: {:.4}, λ=1%: {:.4}, λ=5%: {:.4}", low_l.asr, c1.asr, high_l.asr),
    );

    let random = gae.cell(0.01, 0.01, Selection::Random);
    r.line(
        "C7",
        c1.asr >= random.asr,
        "Cora GAE p=1% ASR(NPS) ≥ ASR(random)",
        format!("NPS {:.4}, random {:.4}", c1.asr, random.asr),
    );

    property_suite(&mut r);

    let c9 = gae.clean_auc();
    r.line("C9", c9 >= CLEAN_AUC_MIN, "Cora GAE clean test AUC ≥ 0.85", format!("{c9:.4}"));

    println!(
        "{} of {} criteria failed ({:.0} s)",
        r.failed,
        r.total,
        started.elapsed().as_secs_f64()
    );
    if r.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn property_suite(r: &mut Report) {
    let (ok, worst) = gradient_check();
    r.line("C8a", ok, "gradient check, 12-node graph", format!("max relative error {worst:.2e}"));

    let mut rng = Rng::new(2024);
    let mut mismatches = 0;
    for _ in 0..200 {
        let draw = |rng: &mut Rng| -> Vec<f64> {
            let len = 1 + rng.below(100);
            (0..len).map(|_| rng.below(7) as f64 / 6.0).collect()
        };
        let (p, q) = (draw(&mut rng), draw(&mut rng));
        let (mut hi, mut tie) = (0u64, 0u64);
        for a in &p {
            for b in &q {
                if a > b {
                    hi += 1;
                } else if a == b {
                    tie += 1;
                }
            }
        }
        let n = (p.len() * q.len()) as u64;
        let s = auc(&p, &q).unwrap();
        if s.auc != (hi as f64 + tie as f64 / 2.0) / n as f64 || s.n_higher != hi || s.n_tie != tie {
            mismatches += 1;
        }
    }
    r.line("C8b", mismatches == 0, "AUC vs pairwise oracle", format!("{mismatches} of 200 mismatched"));

    let mut bad = 0;
    for case in 0..200 {
        let mut rng = Rng::new(case);
        let d = 1 + rng.below(60);
        let alpha: Vec<usize> = (0..d).map(|_| rng.below(6)).collect();
        let k = 1 + rng.below(d);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by_key(|&j| (alpha[j], j));
        let mut want = order[..k].to_vec();
        want.sort();
        if select_trigger_indices(&alpha, k).ok() != Some(want) {
            bad += 1;
        }
    }
    r.line("C8c", bad == 0, "trigger indices vs sort oracle", format!("{bad} of 200 mismatched"));

    let mut bad = 0;
    for case in 0..40 {
        let mut rng = Rng::new(100 + case);
        let n = 5 + rng.below(46);
        let g = synth_graph(n, 0.15, 6, 0.3, &mut rng).unwrap();
        let split = split_edges(&g, 0.1, 0.1, &mut rng).unwrap_or_else(|_| empty_split());
        let blocked: HashSet<_> = split.evaluation_pairs().map(|&(u, v)| canonical(u, v)).collect();
        let mut all: Vec<(usize, usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !g.has_edge(u, v) && !blocked.contains(&(u, v)))
            .map(|(u, v)| (nps(&g, u, v), u, v))
            .collect();
        all.sort();
        let rate = 0.1 + 0.4 * rng.next_f64();
        let q = (rate * n as f64 + 1e-9).floor() as usize;
        let got = select_poison_pairs(&g, &split, rate, PoisonMode::Pairs, Selection::Nps, &mut rng);
        let agree = match got {
            Ok(plan) => {
                let got: Vec<_> = plan.pairs.iter().map(|s| (s.score, s.u, s.v)).collect();
                q <= all.len() && got[..] == all[..q]
            }
            Err(_) => q == 0 || q > all.len(),
        };
        if !agree {
            bad += 1;
        }
    }
    r.line("C8d", bad == 0, "NPS selection vs enumeration, N ≤ 50", format!("{bad} of 40 mismatched"));

    let mut worst = 0.0f64;
    let mut symmetric = true;
    for case in 0..30 {
        let mut rng = Rng::new(500 + case);
        let n = 2 + rng.below(20);
        let g = synth_graph(n, 0.3, 3, 0.5, &mut rng).unwrap();
        let a = normalized_adjacency(&g, None, &[]).unwrap();
        symmetric &= a.is_symmetric(0.0);
        let deg: Vec<f64> = (0..n).map(|i| g.degree(i) as f64 + 1.0).collect();
        let dense = a.to_dense();
        for i in 0..n {
            for j in 0..n {
                let edge = if i == j || g.has_edge(i, j) { 1.0 } else { 0.0 };
                worst = worst.max((dense.get(i, j) - edge / (deg[i] * deg[j]).sqrt()).abs());
            }
        }
    }
    r.line(
        "C8e",
        symmetric && worst <= ADJ_TOL,
        "normalized adjacency vs entrywise oracle",
        format!("max error {worst:.1e}, symmetric {symmetric}"),
    );

    let g = synth_graph(120, 0.06, 10, 0.2, &mut Rng::new(9)).unwrap();
    let mut bad = 0;
    for seed in 0..100 {
        let s = split_edges(&g, 0.05, 0.1, &mut Rng::new(seed)).unwrap();
        let pos: Vec<_> = s.train_pos.iter().chain(&s.val_pos).chain(&s.test_pos).copied().collect();
        let unique: HashSet<_> = pos.iter().copied().collect();
        let negs: Vec<_> = s.val_neg.iter().chain(&s.test_neg).copied().collect();
        let neg_unique: HashSet<_> = negs.iter().map(|&(u, v)| canonical(u, v)).collect();
        let valid = unique.len() == pos.len()
            && pos.len() == g.edge_count()
            && pos.iter().all(|&(u, v)| g.has_edge(u, v))
            && negs.iter().all(|&(u, v)| u != v && !g.has_edge(u, v))
            && neg_unique.len() == negs.len()
            && s.val_neg.len() == s.val_pos.len()
            && s.test_neg.len() == s.test_pos.len();
        if !valid {
            bad += 1;
        }
    }
    r.line("C8f", bad == 0, "split invariants over 100 seeds", format!("{bad} violations"));

    let g = synth_graph(200, 0.04, 40, 0.08, &mut Rng::new(12)).unwrap();
    let mut cfg = ExperimentConfig {
        p: 0.03,
        lambda: 0.05,
        ..Default::default()
    };
    cfg.model = ModelConfig {
        epochs: 60,
        ..ModelConfig::new(ModelKind::Vgae, 0)
    };
    cfg.eval.seeds = vec![3, 4];
    cfg.eval.attack_pairs = 128;
    let run = || {
        let mut rep = run_experiment(&g, &cfg).unwrap();
        rep.strip_timing();
        serde_json::to_string(&rep).unwrap()
    };
    let same = run() == run();
    r.line("C8g", same, "full experiment bit-reproducible", format!("identical reports: {same}"));
}

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

fn gradient_check() -> (bool, f64) {
    let g = synth_graph(12, 0.3, 6, 0.4, &mut Rng::new(11)).unwrap();
    let pos: Vec<_> = g.edges().iter().copied().take(8).collect();
    let neg: Vec<_> = (0..12)
        .flat_map(|u| (u + 1..12).map(move |v| (u, v)))
        .filter(|&(u, v)| !g.has_edge(u, v))
        .take(pos.len())
        .collect();
    let a = normalized_adjacency(&g, None, &[]).unwrap();
    let x: &BinaryFeatures = g.features();
    let h = 1e-4;
    let mut worst = 0.0f64;
    for kind in [ModelKind::Gae, ModelKind::Vgae] {
        let cfg = ModelConfig {
            hidden: 5,
            latent: 3,
            ..ModelConfig::new(kind, 0)
        };
        let params = ModelParams::init(g.feature_dim(), &cfg, &mut Rng::new(8)).unwrap();
        let noise = (kind == ModelKind::Vgae).then(|| {
            let mut rng = Rng::new(3);
            DenseMatrix::from_vec(12, 3, (0..36).map(|_| rng.normal()).collect()).unwrap()
        });
        let f = |p: &ModelParams| backward(p, &a, x, &pos, &neg, noise.as_ref()).unwrap();
        let (_, grads) = f(&params);
        let analytic: Vec<&DenseMatrix> = [Some(&grads.w0), Some(&grads.w1), grads.w_logstd.as_ref()]
            .into_iter()
            .flatten()
            .collect();
        for (which, grad) in analytic.into_iter().enumerate() {
            for idx in 0..grad.data().len() {
                let nudge = |delta: f64| {
                    let mut p = params.clone();
                    let w = match which {
                        0 => &mut p.w0,
                        1 => &mut p.w1,
                        _ => p.w_logstd.as_mut().unwrap(),
                    };
                    w.data_mut()[idx] += delta;
                    f(&p).0
                };
                let numeric = (nudge(h) - nudge(-h)) / (2.0 * h);
                let exact = grad.data()[idx];
                worst = worst.max((numeric - exact).abs() / numeric.abs().max(exact.abs()).max(1e-3));
            }
        }
    }
    (worst <= GRAD_REL_TOL, worst)
}
