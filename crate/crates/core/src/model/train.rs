use std::collections::HashSet;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::eval::auc;
use crate::graph::{canonical, normalized_adjacency, sample_non_edges, EdgeSplit, Graph, Pair};
use crate::model::forward::{backward_from, decode_pair, run};
use crate::model::{ModelKind, ModelParams, ModelConfig};
use crate::tensor::{Adam, AdamConfig, DenseMatrix, Rng};

/// Random streams of one training run, all keyed by the config seed.
const STREAM_INIT: u64 = 1;
const STREAM_TRAIN: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Training loss per epoch.
    pub losses: Vec<f64>,
    pub final_loss: Option<f64>,
    /// Validation AUC (eval-mode embeddings) per epoch; empty when the split
    /// has no validation pairs.
    pub val_auc: Vec<f64>,
    pub seconds: f64,
}

/// Full-batch training.
///
/// Message passing uses `split.train_pos` plus `overlay` (extra structural
/// edges that are not loss positives); the loss uses `split.train_pos` as
/// positives and an equal number of sampled non-edges of that training
/// graph as negatives.
pub fn train(g: &Graph, split: &EdgeSplit, cfg: &ModelConfig, overlay: &[Pair]) -> Result<(ModelParams, TrainReport)> {
    let started = Instant::now();
    cfg.validate()?;
    let mut init_rng = Rng::stream(cfg.seed, STREAM_INIT);
    let mut params = ModelParams::init(g.feature_dim(), cfg, &mut init_rng)?;
    let mut report = TrainReport {
        losses: Vec::with_capacity(cfg.epochs),
        final_loss: None,
        val_auc: Vec::new(),
        seconds: 0.0,
    };
    if cfg.epochs == 0 {
        return Ok((params, report));
    }
    let pos = &split.train_pos;
    if pos.is_empty() {
        return Err(Error::invalid("split", "no training edges"));
    }
    let a_hat = normalized_adjacency(g, Some(pos), overlay)?;
    let known: HashSet<Pair> = pos
        .iter()
        .chain(overlay)
        .map(|&(u, v)| canonical(u, v))
        .collect();
    let x = g.features();
    let n = g.node_count();
    let mut rng = Rng::stream(cfg.seed, STREAM_TRAIN);
    let mut adam = Adam::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        &match &params.w_logstd {
            None => vec![&params.w0, &params.w1],
            Some(ls) => vec![&params.w0, &params.w1, ls],
        },
    );

    let mut neg = Vec::new();
    for epoch in 0..cfg.epochs {
        if epoch == 0 || cfg.resample_negatives {
            neg = sample_non_edges(n, pos.len(), &mut rng, |p| known.contains(&p))?;
        }
        let xw = x.matmul(&params.w0)?;
        let noise = (cfg.kind == ModelKind::Vgae).then(|| {
            let data = (0..n * cfg.latent).map(|_| rng.normal()).collect();
            DenseMatrix::from_vec(n, cfg.latent, data).expect("noise shape")
        });
        let pass = run(&params, &a_hat, &xw, noise.as_ref())?;
        let (value, grads) = backward_from(&params, &a_hat, x, &pass, pos, &neg)?;
        if !value.is_finite() {
            return Err(Error::Diverged { epoch, loss: value });
        }
        report.losses.push(value);

        if !split.val_pos.is_empty() && !split.val_neg.is_empty() {
            let mut eval = pass.emb;
            if let Some(mu) = eval.mu.take() {
                eval.z = mu;
            }
            let score = |&(u, v): &Pair| decode_pair(&eval, u, v);
            let p: Vec<f64> = split.val_pos.iter().map(score).collect();
            let q: Vec<f64> = split.val_neg.iter().map(score).collect();
            report.val_auc.push(auc(&p, &q)?.auc);
        }

        let ModelParams {
            w0, w1, w_logstd, ..
        } = &mut params;
        match (w_logstd, &grads.w_logstd) {
            (None, _) => adam.step(&mut [w0, w1], &[&grads.w0, &grads.w1])?,
            (Some(ls), Some(g_ls)) => adam.step(&mut [w0, w1, ls], &[&grads.w0, &grads.w1, g_ls])?,
            (Some(_), None) => unreachable!("vgae gradients carry a logstd head"),
        }
        if !(params.w0.is_finite() && params.w1.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                loss: f64::NAN,
            });
        }
    }
    report.final_loss = report.losses.last().copied();
    report.seconds = started.elapsed().as_secs_f64();
    Ok((params, report))
}
