//! Run configuration: defaults, a line-oriented `key = value` file format
//! with `#` comments, and per-key overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::attack::{PoisonMode, PoisonPositives, Selection};
use crate::error::{Error, Result};
use crate::eval::{ActivationBase, AttackEvalConfig, ExperimentConfig};
use crate::model::{ModelConfig, ModelKind};

/// Every key accepted in config files (flags use the same names with `-`).
pub const KEYS: &[&str] = &[
    "dataset",
    "synthetic",
    "model",
    "p",
    "lambda",
    "mode",
    "selection",
    "poison_positives",
    "split",
    "seeds",
    "seed_list",
    "attack_pairs",
    "threshold",
    "activation",
    "jobs",
    "out",
    "hidden",
    "latent",
    "lr",
    "epochs",
    "resample_negatives",
    "timing",
];

/// Synthetic Erdős–Rényi graph with Bernoulli features, `n:ep:d:fd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub nodes: usize,
    pub edge_prob: f64,
    pub feature_dim: usize,
    pub feature_prob: f64,
}

impl std::str::FromStr for SyntheticSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [n, ep, d, fd] = parts.as_slice() else {
            return Err(format!("expected n:ep:d:fd, got `{s}`"));
        };
        let spec = SyntheticSpec {
            nodes: n.parse().map_err(|e| format!("n: {e}"))?,
            edge_prob: ep.parse().map_err(|e| format!("ep: {e}"))?,
            feature_dim: d.parse().map_err(|e| format!("d: {e}"))?,
            feature_prob: fd.parse().map_err(|e| format!("fd: {e}"))?,
        };
        if spec.nodes < 2 || spec.feature_dim == 0 {
            return Err("need n ≥ 2 and d ≥ 1".into());
        }
        for (name, v) in [("ep", spec.edge_prob), ("fd", spec.feature_prob)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} = {v} is not a probability"));
            }
        }
        Ok(spec)
    }
}

impl std::fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}:{}", self.nodes, self.edge_prob, self.feature_dim, self.feature_prob)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Native graph file, raw `.content` stem, or a built-in name.
    pub dataset: Option<String>,
    pub synthetic: Option<SyntheticSpec>,
    pub models: Vec<ModelKind>,
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mode: PoisonMode,
    pub selection: Selection,
    pub poison_positives: PoisonPositives,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub seeds: Vec<u64>,
    pub attack_pairs: usize,
    pub threshold: f64,
    pub activation: ActivationBase,
    pub jobs: usize,
    pub out: PathBuf,
    pub hidden: usize,
    pub latent: usize,
    pub lr: f64,
    pub epochs: usize,
    pub resample_negatives: bool,
    /// Record wall-clock times in reports (makes them non-reproducible).
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        let e = AttackEvalConfig::default();
        RunConfig {
            dataset: None,
            synthetic: None,
            models: vec![m.kind],
            p: vec![0.01],
            lambda: vec![0.01],
            mode: PoisonMode::Pairs,
            selection: Selection::Nps,
            poison_positives: PoisonPositives::default(),
            split: [0.85, 0.05, 0.10],
            seeds: e.seeds,
            attack_pairs: e.attack_pairs,
            threshold: e.threshold,
            activation: e.activation,
            jobs: 1,
            out: PathBuf::from("out"),
            hidden: m.hidden,
            latent: m.latent,
            lr: m.lr,
            epochs: m.epochs,
            resample_negatives: m.resample_negatives,
            timing: false,
        }
    }
}

fn static_key(key: &str) -> Option<&'static str> {
    let key = key.replace('-', "_");
    KEYS.iter().copied().find(|k| *k == key)
}

fn list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = value
        .split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", s.trim())))
        .collect::<std::result::Result<_, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

fn one<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", value.trim()))
}

impl RunConfig {
    /// Applies one `key = value` setting. Keys may use `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let field = static_key(key).ok_or_else(|| Error::invalid("config", format!("unknown key `{key}`")))?;
        self.apply(field, value).map_err(|msg| Error::invalid(field, msg))
    }

    fn apply(&mut self, field: &'static str, v: &str) -> std::result::Result<(), String> {
        let text = |e: Error| e.to_string();
        match field {
            "dataset" => self.dataset = Some(v.trim().to_string()).filter(|s| !s.is_empty()),
            "synthetic" => self.synthetic = Some(one(v)?),
            "model" => self.models = list(v)?,
            "p" => self.p = list(v)?,
            "lambda" => self.lambda = list(v)?,
            "mode" => self.mode = v.parse().map_err(text)?,
            "selection" => {
                self.selection = match v.trim() {
                    "nps" => Selection::Nps,
                    "random" => Selection::Random,
                    other => return Err(format!("unknown selection `{other}` (nps|random)")),
                }
            }
            "poison_positives" => self.poison_positives = v.parse().map_err(text)?,
            "split" => {
                let parts: Vec<f64> = v.split(':').map(one).collect::<std::result::Result<_, _>>()?;
                let [a, b, c] = parts[..] else {
                    return Err(format!("expected train:val:test, got `{}`", v.trim()));
                };
                if [a, b, c].iter().any(|x| !(0.0..=1.0).contains(x)) || ((a + b + c) - 1.0).abs() > 1e-6 || c == 0.0 {
                    return Err(format!("fractions {a}:{b}:{c} must be in [0, 1], sum to 1 and leave a test set"));
                }
                self.split = [a, b, c];
            }
            "seeds" => {
                let n: u64 = one(v)?;
                if n == 0 {
                    return Err("at least one seed".into());
                }
                self.seeds = (0..n).collect();
            }
            "seed_list" => self.seeds = list(v)?,
            "attack_pairs" => self.attack_pairs = one(v)?,
            "threshold" => self.threshold = one(v)?,
            "activation" => self.activation = v.parse().map_err(text)?,
            "jobs" => self.jobs = one(v)?,
            "out" => self.out = PathBuf::from(v.trim()),
            "hidden" => self.hidden = one(v)?,
            "latent" => self.latent = one(v)?,
            "lr" => self.lr = one(v)?,
            "epochs" => self.epochs = one(v)?,
            "resample_negatives" => self.resample_negatives = one(v)?,
            "timing" => self.timing = one(v)?,
            _ => unreachable!("key list and match arms agree"),
        }
        Ok(())
    }

    /// Applies a config file's settings on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    line: i + 1,
                    field: line.to_string(),
                    msg: "expected `key = value`".into(),
                });
            };
            self.set(key.trim(), value).map_err(|e| match e {
                Error::InvalidArgument { field, msg } => Error::Config {
                    line: i + 1,
                    field: field.to_string(),
                    msg,
                },
                other => other,
            })?;
        }
        self.validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::invalid("p", "rates must be in (0, 1]"));
        }
        if self.lambda.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
            return Err(Error::invalid("lambda", "fractions must be in (0, 1]"));
        }
        if self.jobs == 0 {
            return Err(Error::invalid("jobs", "must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs", "must be at least 1"));
        }
        self.model_config(self.models[0]).validate()?;
        self.eval_config().validate()
    }

    pub fn model_config(&self, kind: ModelKind) -> ModelConfig {
        ModelConfig {
            kind,
            hidden: self.hidden,
            latent: self.latent,
            lr: self.lr,
            epochs: self.epochs,
            seed: 0,
            resample_negatives: self.resample_negatives,
        }
    }

    pub fn eval_config(&self) -> AttackEvalConfig {
        AttackEvalConfig {
            attack_pairs: self.attack_pairs,
            threshold: self.threshold,
            seeds: self.seeds.clone(),
            activation: self.activation,
        }
    }

    /// Experiment settings for the first model, rate and budget.
    pub fn experiment(&self, dataset: &str) -> ExperimentConfig {
        ExperimentConfig {
            dataset: dataset.to_string(),
            model: self.model_config(self.models[0]),
            p: self.p[0],
            lambda: self.lambda[0],
            mode: self.mode,
            selection: self.selection,
            positives: self.poison_positives,
            val_frac: self.split[1],
            test_frac: self.split[2],
            eval: self.eval_config(),
        }
    }

    /// Effective configuration, in the file format's key names.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let join = |xs: Vec<String>| xs.join(",");
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("dataset", self.dataset.clone().unwrap_or_default());
        put("synthetic", self.synthetic.map(|s| s.to_string()).unwrap_or_default());
        put("model", join(self.models.iter().map(|k| k.to_string()).collect()));
        put("p", join(self.p.iter().map(|x| x.to_string()).collect()));
        put("lambda", join(self.lambda.iter().map(|x| x.to_string()).collect()));
        put("mode", self.mode.to_string());
        put("selection", self.selection.to_string());
        put("poison_positives", self.poison_positives.to_string());
        put("split", format!("{}:{}:{}", self.split[0], self.split[1], self.split[2]));
        put("seed_list", join(self.seeds.iter().map(|x| x.to_string()).collect()));
        put("attack_pairs", self.attack_pairs.to_string());
        put("threshold", self.threshold.to_string());
        put("activation", self.activation.to_string());
        put("hidden", self.hidden.to_string());
        put("latent", self.latent.to_string());
        put("lr", self.lr.to_string());
        put("epochs", self.epochs.to_string());
        put("resample_negatives", self.resample_negatives.to_string());
        m
    }

    /// The echo in config-file syntax; parsing it reproduces the settings.
    pub fn to_text(&self) -> String {
        self.echo()
            .into_iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.split, [0.85, 0.05, 0.10]);
        assert_eq!(c.seeds.len(), 5);
        assert_eq!((c.attack_pairs, c.threshold, c.jobs), (512, 0.5, 1));
        assert_eq!((c.hidden, c.latent, c.epochs, c.lr), (32, 16, 200, 0.01));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn file_with_comments() {
        let c = RunConfig::parse("# sweep\nmodel = gae,vgae\np = 0.002, 0.05  # two rates\n\nseeds = 3\nsplit=0.8:0.1:0.1\n").unwrap();
        assert_eq!(c.models, vec![ModelKind::Gae, ModelKind::Vgae]);
        assert_eq!(c.p, vec![0.002, 0.05]);
        assert_eq!(c.seeds, vec![0, 1, 2]);
        assert_eq!(c.split, [0.8, 0.1, 0.1]);
    }

    #[test]
    fn errors_name_the_field() {
        match RunConfig::parse("epochs = 10\nthreshold = high\n") {
            Err(Error::Config { line: 2, field, .. }) => assert_eq!(field, "threshold"),
            other => panic!("{other:?}"),
        }
        match RunConfig::parse("frobnicate = 1") {
            Err(Error::Config { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        let mut c = RunConfig::default();
        assert!(matches!(c.set("attack-pairs", "-3"), Err(Error::InvalidArgument { field: "attack_pairs", .. })));
        assert!(matches!(RunConfig::parse("threshold = 1.5"), Err(Error::InvalidArgument { field: "threshold", .. })));
        assert!(RunConfig::parse("split = 0.5:0.5:0.5").is_err());
    }

    #[test]
    fn later_settings_override() {
        let mut c = RunConfig::parse("p = 0.05\n").unwrap();
        c.set("p", "0.02").unwrap();
        assert_eq!(c.p, vec![0.02]);
    }

    #[test]
    fn echo_roundtrips() {
        let mut c = RunConfig::parse("model = vgae\nlambda = 0.002,0.05\nseed_list = 7,9\nsynthetic = 100:0.05:40:0.1\n").unwrap();
        c.dataset = None;
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn synthetic_spec() {
        let s: SyntheticSpec = "300:0.02:64:0.1".parse().unwrap();
        assert_eq!((s.nodes, s.feature_dim), (300, 64));
        assert!("300:2:64:0.1".parse::<SyntheticSpec>().is_err());
        assert!("300:0.1".parse::<SyntheticSpec>().is_err());
    }
}
