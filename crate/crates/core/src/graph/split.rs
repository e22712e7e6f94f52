use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{canonical, Graph, Pair};
use crate::tensor::Rng;

/// Transductive link-prediction split: positive edges partitioned into
/// train / val / test, plus equally many sampled non-edges for val and test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSplit {
    pub train_pos: Vec<Pair>,
    pub val_pos: Vec<Pair>,
    pub val_neg: Vec<Pair>,
    pub test_pos: Vec<Pair>,
    pub test_neg: Vec<Pair>,
    pub seed: u64,
}

impl EdgeSplit {
    /// Every evaluation pair (val/test, positive and negative).
    pub fn evaluation_pairs(&self) -> impl Iterator<Item = &Pair> {
        self.val_pos
            .iter()
            .chain(&self.val_neg)
            .chain(&self.test_pos)
            .chain(&self.test_neg)
    }
}

/// Draws `count` distinct canonical pairs `(u, v)`, `u != v`, for which
/// `excluded` is false, by rejection with at most `100 * count` attempts.
pub fn sample_non_edges(
    node_count: usize,
    count: usize,
    rng: &mut Rng,
    mut excluded: impl FnMut(Pair) -> bool,
) -> Result<Vec<Pair>> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    let mut taken = HashSet::with_capacity(count);
    let cap = 100 * count;
    let mut attempts = 0;
    if node_count >= 2 {
        while out.len() < count && attempts < cap {
            attempts += 1;
            let u = rng.below(node_count);
            let v = rng.below(node_count);
            if u == v {
                continue;
            }
            let p = canonical(u, v);
            if excluded(p) || !taken.insert(p) {
                continue;
            }
            out.push(p);
        }
    }
    if out.len() < count {
        return Err(Error::NegativeSampling {
            needed: count,
            found: out.len(),
            attempts,
        });
    }
    Ok(out)
}

/// Uniformly random partition of `g`'s edges; `⌊test_frac·E⌋` go to test
/// and `⌊val_frac·E⌋` to validation, the rest to training.
pub fn split_edges(g: &Graph, val_frac: f64, test_frac: f64, rng: &mut Rng) -> Result<EdgeSplit> {
    if !(0.0..1.0).contains(&val_frac) {
        return Err(Error::invalid("val_frac", format!("{val_frac} not in [0, 1)")));
    }
    if !(0.0..1.0).contains(&test_frac) {
        return Err(Error::invalid("test_frac", format!("{test_frac} not in [0, 1)")));
    }
    if val_frac + test_frac >= 1.0 {
        return Err(Error::invalid(
            "split",
            format!("val {val_frac} + test {test_frac} must be < 1"),
        ));
    }
    let mut edges = g.edges().to_vec();
    rng.shuffle(&mut edges);
    let e = edges.len();
    let n_test = (test_frac * e as f64).floor() as usize;
    let n_val = (val_frac * e as f64).floor() as usize;
    let test_pos = edges[..n_test].to_vec();
    let val_pos = edges[n_test..n_test + n_val].to_vec();
    let train_pos = edges[n_test + n_val..].to_vec();

    let negatives = sample_non_edges(g.node_count(), n_val + n_test, rng, |(u, v)| g.has_edge(u, v))?;
    let val_neg = negatives[..n_val].to_vec();
    let test_neg = negatives[n_val..].to_vec();
    Ok(EdgeSplit {
        train_pos,
        val_pos,
        val_neg,
        test_pos,
        test_neg,
        seed: rng.seed(),
    })
}

const SECTIONS: [&str; 5] = ["train+", "val+", "val-", "test+", "test-"];

/// Text form: `SPLIT v1 <seed> <train> <val+> <val-> <test+> <test->`,
/// then one `<section> u v` line per pair in section order.
pub fn write_split(split: &EdgeSplit) -> String {
    let lists = [
        &split.train_pos,
        &split.val_pos,
        &split.val_neg,
        &split.test_pos,
        &split.test_neg,
    ];
    let mut s = format!("SPLIT v1 {}", split.seed);
    for l in lists {
        let _ = write!(s, " {}", l.len());
    }
    s.push('\n');
    for (name, l) in SECTIONS.iter().zip(lists) {
        for &(u, v) in l.iter() {
            let _ = writeln!(s, "{name} {u} {v}");
        }
    }
    s
}

pub fn parse_split(text: &str) -> Result<EdgeSplit> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 8 || h[0] != "SPLIT" || h[1] != "v1" {
        return Err(Error::parse(1, "expected `SPLIT v1 seed n1 n2 n3 n4 n5` header"));
    }
    let seed: u64 = h[2]
        .parse()
        .map_err(|_| Error::parse(1, format!("bad seed `{}`", h[2])))?;
    let mut counts = [0usize; 5];
    for (c, tok) in counts.iter_mut().zip(&h[3..]) {
        *c = tok
            .parse()
            .map_err(|_| Error::parse(1, format!("bad count `{tok}`")))?;
    }
    let mut lists: [Vec<Pair>; 5] = Default::default();
    for (section, (name, &count)) in SECTIONS.iter().zip(&counts).enumerate() {
        for _ in 0..count {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("section {name} truncated")))?;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 3 || t[0] != *name {
                return Err(Error::parse(ln, format!("expected `{name} u v`")));
            }
            let u: usize = t[1].parse().map_err(|_| Error::parse(ln, "bad node id"))?;
            let v: usize = t[2].parse().map_err(|_| Error::parse(ln, "bad node id"))?;
            if u >= v {
                return Err(Error::parse(ln, "pairs must satisfy u < v"));
            }
            lists[section].push((u, v));
        }
    }
    if let Some((ln, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(ln, "unexpected trailing content"));
    }
    let [train_pos, val_pos, val_neg, test_pos, test_neg] = lists;
    Ok(EdgeSplit {
        train_pos,
        val_pos,
        val_neg,
        test_pos,
        test_neg,
        seed,
    })
}
