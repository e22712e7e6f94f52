//! Metrics (AUC, ASR, BPD) and the experiment drivers built on them.

mod experiment;
mod metrics;
mod report;

pub use experiment::{
    ablation_random, clean_stage, plan_rng, run_experiment, run_seed, sample_attack_pairs, seed_split,
    sweep,
    AblationReport, CleanStage, ExperimentConfig, SweepCell, SweepGrid,
};
pub use metrics::{
    asr, auc, bpd, model_auc, ActivationBase, AsrOutcome, AttackEvalConfig, AucStats, EvalSet,
};
pub use report::{
    csv_header, record_file_name, write_csv, write_seed_records, MetricsReport, SeedResult,
};
