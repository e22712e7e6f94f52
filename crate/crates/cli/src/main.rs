//! `gbl`: command-line driver for backdoor experiments on GAE/VGAE link
//! prediction.
//!
//! Exit codes: 0 success, 1 runtime or experiment failure, 2 usage or
//! configuration error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gbl_core::attack::{inject_backdoor, plan_to_json, select_poison_pairs, PlanFile, TriggerSpec};
use gbl_core::config::RunConfig;
use gbl_core::eval::{
    ablation_random, model_auc, plan_rng, run_experiment, seed_split, sweep, write_csv,
    write_seed_records, EvalSet, MetricsReport, SweepGrid,
};
use gbl_core::graph::{
    load_content_cites, resolve_dataset, synth_graph, write_native, write_split, Graph,
    SURROGATE_SEED,
};
use gbl_core::model::{train, write_params};
use gbl_core::tensor::Rng;
use gbl_core::{Error, Result, VERSION};

#[derive(Parser)]
#[command(name = "gbl", version, about = "Single-node trigger backdoor attacks on GAE/VGAE link prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert `<stem>.content` + `<stem>.cites` into a native graph file.
    Ingest(IngestArgs),
    /// Split edges into train/val/test with sampled negatives.
    Split(RunArgs),
    /// Train clean models and report test AUC.
    Train(RunArgs),
    /// Build the trigger and poisoning plan, and write the poisoned graph.
    Attack(RunArgs),
    /// Full clean-vs-backdoor protocol for one (model, p, lambda) cell.
    Experiment(RunArgs),
    /// Every combination of the comma-separated model, p and lambda lists.
    Sweep(RunArgs),
    /// NPS against random pair selection on shared seeds.
    Ablate(RunArgs),
}

#[derive(Args)]
struct IngestArgs {
    content: PathBuf,
    cites: PathBuf,
    /// Output file (default `<out>/<stem>.graph.txt`).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, env = "GBL_OUT", default_value = "out")]
    out: PathBuf,
}

/// Flags shared by the pipeline commands. Each one overrides the value
/// from `--config`, which overrides the built-in default.
#[derive(Args, Default)]
struct RunArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Native graph file, raw stem, name under $GBL_DATA, or cora-like / citeseer-like.
    #[arg(long)]
    dataset: Option<String>,
    /// Random graph `n:edge_prob:dim:feature_prob`.
    #[arg(long)]
    synthetic: Option<String>,
    /// gae | vgae (comma-separated for sweeps).
    #[arg(long)]
    model: Option<String>,
    /// Poisoning rate(s).
    #[arg(long)]
    p: Option<String>,
    /// Trigger budget fraction(s).
    #[arg(long)]
    lambda: Option<String>,
    /// pairs | clique
    #[arg(long)]
    mode: Option<String>,
    /// nps | random
    #[arg(long)]
    selection: Option<String>,
    /// pairs | pairs+trigger
    #[arg(long)]
    poison_positives: Option<String>,
    /// train:val:test fractions.
    #[arg(long)]
    split: Option<String>,
    /// Use seeds 0..N.
    #[arg(long, conflicts_with = "seed_list")]
    seeds: Option<String>,
    #[arg(long)]
    seed_list: Option<String>,
    #[arg(long)]
    attack_pairs: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    /// clean | poisoned
    #[arg(long)]
    activation: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long, env = "GBL_OUT")]
    out: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    latent: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    /// Record wall-clock times in reports (reruns then differ).
    #[arg(long)]
    timing: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            cfg.apply_text(&text)?;
        }
        let flags = [
            ("dataset", &self.dataset),
            ("synthetic", &self.synthetic),
            ("model", &self.model),
            ("p", &self.p),
            ("lambda", &self.lambda),
            ("mode", &self.mode),
            ("selection", &self.selection),
            ("poison_positives", &self.poison_positives),
            ("split", &self.split),
            ("seeds", &self.seeds),
            ("seed_list", &self.seed_list),
            ("attack_pairs", &self.attack_pairs),
            ("threshold", &self.threshold),
            ("activation", &self.activation),
            ("jobs", &self.jobs),
            ("out", &self.out),
            ("epochs", &self.epochs),
            ("hidden", &self.hidden),
            ("latent", &self.latent),
            ("lr", &self.lr),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.timing {
            cfg.timing = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: e,
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Writes `<artifact>.config.txt` next to artifacts whose format has no
/// room for metadata.
fn write_sidecar(artifact: &Path, cfg: &RunConfig) -> Result<()> {
    let mut path = artifact.as_os_str().to_owned();
    path.push(".config.txt");
    write_file(Path::new(&path), &format!("# {VERSION}\n{}", cfg.to_text()))
}

fn load_graph(cfg: &RunConfig) -> Result<(String, Graph)> {
    if let Some(s) = cfg.synthetic {
        let g = synth_graph(s.nodes, s.edge_prob, s.feature_dim, s.feature_prob, &mut Rng::new(SURROGATE_SEED))?;
        return Ok((format!("synthetic{}", s.nodes), g));
    }
    let Some(spec) = &cfg.dataset else {
        return Err(Error::InvalidArgument {
            field: "dataset",
            msg: "set --dataset or --synthetic".into(),
        });
    };
    let data_dir = std::env::var_os("GBL_DATA").map(PathBuf::from);
    let named = resolve_dataset(spec, data_dir.as_deref())?;
    if named.is_surrogate() {
        eprintln!("note: {} is a synthetic stand-in with the real dataset's size statistics", named.name);
    }
    Ok((named.name, named.graph))
}

fn cmd_ingest(args: &IngestArgs) -> Result<()> {
    let loaded = load_content_cites(&args.content, &args.cites)?;
    let g = &loaded.graph;
    let stem = args
        .content
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "graph".into());
    let path = args.output.clone().unwrap_or_else(|| args.out.join(format!("{stem}.graph.txt")));
    write_file(&path, &write_native(g))?;
    let s = &loaded.stats;
    println!("N={} d={}", g.node_count(), g.feature_dim());
    println!(
        "citations={} self={} unknown={} duplicate={} edges={}",
        s.citation_rows, s.self_citations, s.unknown_references, s.duplicate_citations, s.unique_edges
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_split(cfg: &RunConfig) -> Result<()> {
    let (name, g) = load_graph(cfg)?;
    let exp = cfg.experiment(&name);
    for &seed in &cfg.seeds {
        let split = seed_split(&g, &exp, seed)?;
        let path = cfg.out.join(format!("{name}_s{seed}.split.txt"));
        write_file(&path, &write_split(&split))?;
        write_sidecar(&path, cfg)?;
        println!(
            "seed {seed}: train={} val={} test={} -> {}",
            split.train_pos.len(),
            split.val_pos.len(),
            split.test_pos.len(),
            path.display()
        );
    }
    Ok(())
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let (name, g) = load_graph(cfg)?;
    let exp = cfg.experiment(&name);
    for &kind in &cfg.models {
        for &seed in &cfg.seeds {
            let split = seed_split(&g, &exp, seed)?;
            let mcfg = gbl_core::model::ModelConfig {
                seed,
                ..cfg.model_config(kind)
            };
            let (params, report) = train(&g, &split, &mcfg, &[])?;
            let auc = model_auc(&params, &g, &split, &[], EvalSet::Test)?;
            let path = cfg.out.join(format!("{name}_{kind}_s{seed}.params.txt"));
            write_file(&path, &write_params(&params))?;
            write_sidecar(&path, cfg)?;
            println!(
                "{kind} seed {seed}: final loss {:.4}, test AUC {:.4} -> {}",
                report.final_loss.unwrap_or(f64::NAN),
                auc.auc,
                path.display()
            );
        }
    }
    Ok(())
}

fn cmd_attack(cfg: &RunConfig) -> Result<()> {
    let (name, g) = load_graph(cfg)?;
    let exp = cfg.experiment(&name);
    let trigger = TriggerSpec::generate(&g, exp.lambda)?;
    for &seed in &cfg.seeds {
        let split = seed_split(&g, &exp, seed)?;
        let plan = select_poison_pairs(&g, &split, exp.p, exp.mode, exp.selection, &mut plan_rng(seed))?;
        let bd = inject_backdoor(&g, &split, &trigger, &plan, exp.positives)?;
        let stem = format!("{name}_p{}_l{}_s{seed}", exp.p, exp.lambda);
        let file = PlanFile::new(&plan, &trigger, cfg.echo());
        let plan_path = cfg.out.join(format!("{stem}.plan.json"));
        write_file(&plan_path, &(plan_to_json(&file)? + "\n"))?;
        let graph_path = cfg.out.join(format!("{stem}.graph.txt"));
        write_file(&graph_path, &write_native(&bd.graph))?;
        write_sidecar(&graph_path, cfg)?;
        println!(
            "seed {seed}: q={} k={} trigger={} added_positives={} -> {}",
            plan.q,
            trigger.budget,
            bd.trigger,
            bd.added_positives.len(),
            plan_path.display()
        );
    }
    Ok(())
}

fn print_summary(reports: &[&MetricsReport]) {
    println!(
        "{:<16} {:<6} {:<13} {:>7} {:>7} {:>8} {:>8} {:>8} {:>9} {:>6}",
        "dataset", "model", "mode", "p", "lambda", "ASR", "AUC_c", "AUC_b", "BPD", "failed"
    );
    for r in reports {
        let (asr, c, b, d) = r
            .mean
            .map(|m| (m.asr, m.auc_clean, m.auc_backdoor, m.bpd))
            .unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN));
        println!(
            "{:<16} {:<6} {:<13} {:>7} {:>7} {:>8.4} {:>8.4} {:>8.4} {:>+9.4} {:>6}",
            r.dataset, r.model, r.mode, r.p, r.lambda, asr, c, b, d, r.failed_seeds
        );
    }
}

/// Writes JSON records and the CSV, prints the summary, and returns whether
/// every seed succeeded.
fn finish(cfg: &RunConfig, mut reports: Vec<MetricsReport>, csv_name: &str) -> Result<bool> {
    if !cfg.timing {
        reports.iter_mut().for_each(MetricsReport::strip_timing);
    }
    for r in &reports {
        write_seed_records(r, &cfg.out)?;
    }
    let echo: BTreeMap<String, String> = cfg.echo();
    let csv_path = cfg.out.join(csv_name);
    write_file(&csv_path, &write_csv(&reports, &echo)?)?;
    print_summary(&reports.iter().collect::<Vec<_>>());
    println!("wrote {}", csv_path.display());
    Ok(reports.iter().all(MetricsReport::all_succeeded))
}

fn cmd_experiment(cfg: &RunConfig) -> Result<bool> {
    let (name, g) = load_graph(cfg)?;
    let exp = cfg.experiment(&name);
    let report = run_experiment(&g, &exp)?;
    let csv = format!("{name}_{}_p{}_l{}.csv", exp.model.kind, exp.p, exp.lambda);
    finish(cfg, vec![report], &csv)
}

fn cmd_sweep(cfg: &RunConfig) -> Result<bool> {
    let (name, g) = load_graph(cfg)?;
    let grid = SweepGrid {
        models: cfg.models.clone(),
        p: cfg.p.clone(),
        lambda: cfg.lambda.clone(),
    };
    let cells = sweep(&g, &grid, &cfg.experiment(&name), cfg.jobs)?;
    let mut reports = Vec::new();
    let mut ok = true;
    for cell in cells {
        match cell.report {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("gbl: cell {} p={} lambda={}: {e}", cell.model, cell.p, cell.lambda);
                ok = false;
            }
        }
    }
    Ok(finish(cfg, reports, &format!("{name}_sweep.csv"))? && ok)
}

fn cmd_ablate(cfg: &RunConfig) -> Result<bool> {
    let (name, g) = load_graph(cfg)?;
    let exp = cfg.experiment(&name);
    let r = ablation_random(&g, &exp)?;
    let csv = format!("{name}_{}_p{}_l{}_ablation.csv", exp.model.kind, exp.p, exp.lambda);
    finish(cfg, vec![r.nps, r.random], &csv)
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a).map(|()| true),
        Command::Split(a) => cmd_split(&a.resolve()?).map(|()| true),
        Command::Train(a) => cmd_train(&a.resolve()?).map(|()| true),
        Command::Attack(a) => cmd_attack(&a.resolve()?).map(|()| true),
        Command::Experiment(a) => cmd_experiment(&a.resolve()?),
        Command::Sweep(a) => cmd_sweep(&a.resolve()?),
        Command::Ablate(a) => cmd_ablate(&a.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("gbl: some seeds failed; see the `failed` column");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("gbl: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
