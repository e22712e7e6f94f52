//! GAE and VGAE link predictors: a two-layer GCN encoder, the inner-product
//! decoder, the binary cross-entropy objective (plus KL for VGAE), manual
//! gradients and a full-batch Adam training loop.

mod checkpoint;
mod forward;
mod train;

pub use checkpoint::{parse_params, write_params};
pub use forward::{
    backward, decode_pair, encode, encode_projected, loss, EncodeMode, Embeddings, Gradients,
};
pub use train::{train, TrainReport};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::{glorot_init, DenseMatrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Gae,
    Vgae,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Gae => "gae",
            ModelKind::Vgae => "vgae",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gae" => Ok(ModelKind::Gae),
            "vgae" => Ok(ModelKind::Vgae),
            other => Err(Error::invalid("model", format!("unknown model `{other}` (gae|vgae)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub hidden: usize,
    pub latent: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Draw fresh negative samples every epoch instead of once.
    pub resample_negatives: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::Gae,
            hidden: 32,
            latent: 16,
            lr: 0.01,
            epochs: 200,
            seed: 0,
            resample_negatives: true,
        }
    }
}

impl ModelConfig {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        ModelConfig {
            kind,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::invalid("hidden", "must be positive"));
        }
        if self.latent == 0 {
            return Err(Error::invalid("latent", "must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("lr", format!("{} must be positive", self.lr)));
        }
        Ok(())
    }
}

/// Trained or freshly initialized weights.
///
/// For VGAE `w1` is the mean head and `w_logstd` the log standard deviation
/// head; for GAE `w_logstd` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub w0: DenseMatrix,
    pub w1: DenseMatrix,
    pub w_logstd: Option<DenseMatrix>,
}

impl ModelParams {
    pub fn init(feature_dim: usize, config: &ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        if feature_dim == 0 {
            return Err(Error::invalid("feature_dim", "must be positive"));
        }
        let w0 = glorot_init(feature_dim, config.hidden, rng);
        let w1 = glorot_init(config.hidden, config.latent, rng);
        let w_logstd = match config.kind {
            ModelKind::Gae => None,
            ModelKind::Vgae => Some(glorot_init(config.hidden, config.latent, rng)),
        };
        Ok(ModelParams {
            config: config.clone(),
            w0,
            w1,
            w_logstd,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn feature_dim(&self) -> usize {
        self.w0.rows()
    }

    /// Named weight matrices in checkpoint order.
    pub fn named(&self) -> Vec<(&'static str, &DenseMatrix)> {
        match &self.w_logstd {
            None => vec![("W0", &self.w0), ("W1", &self.w1)],
            Some(ls) => vec![("W0", &self.w0), ("Wmu", &self.w1), ("Wlogstd", ls)],
        }
    }

    pub(crate) fn check_shapes(&self) -> Result<()> {
        let (h, l) = (self.config.hidden, self.config.latent);
        let ok = self.w0.cols() == h
            && self.w1.shape() == (h, l)
            && self.w_logstd.as_ref().is_none_or(|m| m.shape() == (h, l))
            && (self.w_logstd.is_some() == (self.config.kind == ModelKind::Vgae));
        if ok {
            Ok(())
        } else {
            Err(Error::shape("model_params", "weights disagree with config"))
        }
    }
}
