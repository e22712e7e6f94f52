//! `<run>.params.txt` checkpoints: a small header followed by each weight
//! matrix as `name rows cols` and one line of values per row. Values use
//! Rust's shortest round-trip formatting, so reloading is exact.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelKind, ModelParams};
use crate::tensor::DenseMatrix;

pub fn write_params(params: &ModelParams) -> String {
    let c = &params.config;
    let mut s = String::new();
    let _ = writeln!(s, "PARAMS v1");
    let _ = writeln!(s, "version {}", crate::VERSION);
    let _ = writeln!(s, "kind {}", c.kind);
    let _ = writeln!(s, "dims {} {} {}", params.feature_dim(), c.hidden, c.latent);
    let _ = writeln!(s, "seed {}", c.seed);
    let _ = writeln!(s, "lr {}", c.lr);
    let _ = writeln!(s, "epochs {}", c.epochs);
    let _ = writeln!(s, "resample_negatives {}", c.resample_negatives);
    for (name, m) in params.named() {
        let _ = writeln!(s, "{name} {} {}", m.rows(), m.cols());
        for r in 0..m.rows() {
            let row = m.row(r);
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{v:?}");
            }
            s.push('\n');
        }
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l)
            }
            None => Err(Error::parse(self.last + 1, format!("missing {what}"))),
        }
    }

    /// Reads `key value…` and returns the value tokens.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.next(key)?;
        let mut t = line.split_whitespace();
        if t.next() != Some(key) {
            return Err(Error::parse(self.last, format!("expected `{key} …`")));
        }
        Ok(t.collect())
    }

    fn value<T: std::str::FromStr>(&self, tok: &str, what: &str) -> Result<T> {
        tok.parse()
            .map_err(|_| Error::parse(self.last, format!("bad {what} `{tok}`")))
    }

    fn single<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key)?;
        if v.len() != 1 {
            return Err(Error::parse(self.last, format!("`{key}` takes one value")));
        }
        self.value(v[0], key)
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<DenseMatrix> {
        let dims = self.keyed(name)?;
        if dims.len() != 2
            || self.value::<usize>(dims[0], "rows")? != rows
            || self.value::<usize>(dims[1], "cols")? != cols
        {
            return Err(Error::parse(
                self.last,
                format!("expected `{name} {rows} {cols}`"),
            ));
        }
        let mut data = Vec::new();
        for _ in 0..rows {
            let line = self.next("matrix row")?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: f64 = self.value(tok, "value")?;
                if !v.is_finite() {
                    return Err(Error::Validation {
                        line: self.last,
                        msg: format!("non-finite weight `{tok}`"),
                    });
                }
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(Error::parse(
                    self.last,
                    format!("row has {} values, expected {cols}", data.len() - before),
                ));
            }
        }
        DenseMatrix::from_vec(rows, cols, data)
    }
}

pub fn parse_params(text: &str) -> Result<ModelParams> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    if lines.next("header")?.trim() != "PARAMS v1" {
        return Err(Error::parse(1, "expected `PARAMS v1`"));
    }
    lines.keyed("version")?;
    let kind: ModelKind = lines
        .single::<String>("kind")?
        .parse()
        .map_err(|_| Error::parse(lines.last, "unknown model kind"))?;
    let dims = lines.keyed("dims")?;
    if dims.len() != 3 {
        return Err(Error::parse(lines.last, "`dims` takes d, hidden, latent"));
    }
    let d: usize = lines.value(dims[0], "feature dimension")?;
    let hidden: usize = lines.value(dims[1], "hidden dimension")?;
    let latent: usize = lines.value(dims[2], "latent dimension")?;
    // Dimensions are untrusted; refuse sizes the text cannot possibly hold.
    let budget = text.len() / 2 + 1;
    if d.saturating_mul(hidden) > budget || hidden.saturating_mul(latent) > budget {
        return Err(Error::parse(lines.last, "dimensions exceed file contents"));
    }
    let config = ModelConfig {
        kind,
        hidden,
        latent,
        seed: lines.single("seed")?,
        lr: lines.single("lr")?,
        epochs: lines.single("epochs")?,
        resample_negatives: lines.single("resample_negatives")?,
    };
    config
        .validate()
        .map_err(|e| Error::parse(lines.last, e.to_string()))?;
    let (w0, w1, w_logstd) = match kind {
        ModelKind::Gae => (
            lines.matrix("W0", d, hidden)?,
            lines.matrix("W1", hidden, latent)?,
            None,
        ),
        ModelKind::Vgae => (
            lines.matrix("W0", d, hidden)?,
            lines.matrix("Wmu", hidden, latent)?,
            Some(lines.matrix("Wlogstd", hidden, latent)?),
        ),
    };
    if let Some((i, _)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(i + 1, "unexpected trailing content"));
    }
    Ok(ModelParams {
        config,
        w0,
        w1,
        w_logstd,
    })
}
