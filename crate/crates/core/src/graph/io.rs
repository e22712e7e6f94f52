//! Raw citation-network files (`.content` / `.cites`) and the native
//! `GRAPH v1` text format.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{canonical, BinaryFeatures, Graph, Pair};

/// Bookkeeping from a raw citation load.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadStats {
    /// Non-blank rows in the cites file.
    pub citation_rows: usize,
    pub self_citations: usize,
    /// Rows whose ids are not in the content file (dropped).
    pub unknown_references: usize,
    /// Rows that repeat an already seen undirected edge (either direction).
    pub duplicate_citations: usize,
    pub unique_edges: usize,
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub graph: Graph,
    /// Original document ids, indexed by node.
    pub node_ids: Vec<String>,
    /// Class labels; unused by link prediction.
    pub labels: Vec<String>,
    pub stats: LoadStats,
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

pub fn load_content_cites(content_path: impl AsRef<Path>, cites_path: impl AsRef<Path>) -> Result<LoadedDataset> {
    let content = open(content_path.as_ref())?;
    let cites = open(cites_path.as_ref())?;
    parse_content_cites(BufReader::new(content), BufReader::new(cites))
}

/// Parses the `<id> <d binary features> <label>` and `<id> <id>` row formats.
pub fn parse_content_cites(content: impl BufRead, cites: impl BufRead) -> Result<LoadedDataset> {
    let mut node_ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut dim: Option<usize> = None;

    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < 2 {
            return Err(Error::parse(lineno, "content row needs an id and a label"));
        }
        let d = tokens.len() - 2;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::parse(
                    lineno,
                    format!("{d} feature columns, previous rows had {expected}"),
                ))
            }
            _ => {}
        }
        let mut ones = Vec::new();
        for (j, tok) in tokens[1..tokens.len() - 1].iter().enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("feature {j}: `{tok}` is not a number")))?;
            if v == 1.0 {
                ones.push(j as u32);
            } else if v != 0.0 {
                return Err(Error::Validation {
                    line: lineno,
                    msg: format!("feature {j}: `{tok}` is not binary"),
                });
            }
        }
        let id = tokens[0].to_string();
        if index.insert(id.clone(), node_ids.len()).is_some() {
            return Err(Error::Validation {
                line: lineno,
                msg: format!("duplicate node id `{id}`"),
            });
        }
        node_ids.push(id);
        labels.push(tokens[tokens.len() - 1].to_string());
        rows.push(ones);
    }

    let mut stats = LoadStats::default();
    let mut seen: BTreeSet<Pair> = BTreeSet::new();
    for (lineno, line) in cites.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 2 {
            return Err(Error::parse(
                lineno,
                format!("cites row has {} fields, expected 2", tokens.len()),
            ));
        }
        stats.citation_rows += 1;
        let (Some(&a), Some(&b)) = (index.get(tokens[0]), index.get(tokens[1])) else {
            stats.unknown_references += 1;
            continue;
        };
        if a == b {
            stats.self_citations += 1;
            continue;
        }
        if !seen.insert(canonical(a, b)) {
            stats.duplicate_citations += 1;
        }
    }
    stats.unique_edges = seen.len();

    let features = BinaryFeatures::new(dim.unwrap_or(0), rows)?;
    let graph = Graph::new(node_ids.len(), seen, features)?;
    Ok(LoadedDataset {
        graph,
        node_ids,
        labels,
        stats,
    })
}

/// Serializes to the native format: `GRAPH v1 N d E`, then `E` lines `u v`
/// (u < v, sorted), then `N` lines `u k i1 … ik`.
pub fn write_native(g: &Graph) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "GRAPH v1 {} {} {}",
        g.node_count(),
        g.feature_dim(),
        g.edge_count()
    );
    for &(u, v) in g.edges() {
        let _ = writeln!(s, "{u} {v}");
    }
    for u in 0..g.node_count() {
        let f = g.features().row(u);
        let _ = write!(s, "{u} {}", f.len());
        for j in f {
            let _ = write!(s, " {j}");
        }
        s.push('\n');
    }
    s
}

pub fn read_native(path: impl AsRef<Path>) -> Result<Graph> {
    let mut text = String::new();
    open(path.as_ref())?
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path.as_ref(), e))?;
    parse_native(&text)
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("bad {what} `{tok}`")))
}

/// Strict parser for the native format; anything out of order is rejected.
pub fn parse_native(text: &str) -> Result<Graph> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let mut h = header.split_whitespace();
    if h.next() != Some("GRAPH") || h.next() != Some("v1") {
        return Err(Error::parse(1, "expected `GRAPH v1 N d E` header"));
    }
    let n: usize = field(h.next(), 1, "node count")?;
    let d: usize = field(h.next(), 1, "feature dimension")?;
    let e: usize = field(h.next(), 1, "edge count")?;
    if h.next().is_some() {
        return Err(Error::parse(1, "trailing tokens in header"));
    }
    // Counts come from untrusted input; cap preallocation by the text size.
    let mut edges = Vec::with_capacity(e.min(text.len() / 4));
    for k in 0..e {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::parse(k + 2, format!("expected {e} edge lines")))?;
        let mut t = line.split_whitespace();
        let u: usize = field(t.next(), ln, "edge source")?;
        let v: usize = field(t.next(), ln, "edge target")?;
        if t.next().is_some() {
            return Err(Error::parse(ln, "trailing tokens in edge line"));
        }
        if u >= v || v >= n {
            return Err(Error::parse(ln, format!("edge ({u}, {v}) must satisfy u < v < {n}")));
        }
        if edges.last().is_some_and(|&last| last >= (u, v)) {
            return Err(Error::parse(ln, "edges must be sorted and unique"));
        }
        edges.push((u, v));
    }
    let mut rows = Vec::with_capacity(n.min(text.len() / 4));
    for u in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::parse(e + u + 2, format!("expected {n} feature lines")))?;
        let mut t = line.split_whitespace();
        let id: usize = field(t.next(), ln, "node id")?;
        if id != u {
            return Err(Error::parse(ln, format!("expected node {u}, found {id}")));
        }
        let k: usize = field(t.next(), ln, "feature count")?;
        let idx: Vec<u32> = t
            .map(|tok| field::<u32>(Some(tok), ln, "feature index"))
            .collect::<Result<_>>()?;
        if idx.len() != k {
            return Err(Error::parse(ln, format!("declared {k} features, found {}", idx.len())));
        }
        if idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parse(ln, "feature indices must be strictly increasing"));
        }
        if idx.last().is_some_and(|&j| j as usize >= d) {
            return Err(Error::Validation {
                line: ln,
                msg: format!("feature index >= dimension {d}"),
            });
        }
        rows.push(idx);
    }
    if let Some((ln, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(ln, format!("unexpected trailing content `{line}`")));
    }
    Graph::new(n, edges, BinaryFeatures::new(d, rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONTENT: &str = "a 1 0 0 x\nb 0 1 1 y\nc 0 0 0 x\n";

    fn load(content: &str, cites: &str) -> Result<LoadedDataset> {
        parse_content_cites(content.as_bytes(), cites.as_bytes())
    }

    #[test]
    fn toy_files() {
        let ds = load(CONTENT, "a b\nc b\n").unwrap();
        assert_eq!(ds.graph.node_count(), 3);
        assert_eq!(ds.graph.feature_dim(), 3);
        assert_eq!(ds.graph.edge_count(), 2);
        assert_eq!(ds.graph.features().row(1), &[1, 2]);
        assert_eq!(ds.labels, vec!["x", "y", "x"]);
    }

    #[test]
    fn unknown_ids_are_dropped_and_counted() {
        let ds = load(CONTENT, "a b\na zz\n").unwrap();
        assert_eq!(ds.graph.edge_count(), 1);
        assert_eq!(ds.stats.unknown_references, 1);
        assert_eq!(ds.stats.citation_rows, 2);
    }

    #[test]
    fn duplicates_and_self_citations() {
        let ds = load(CONTENT, "a b\nb a\na b\nc c\n").unwrap();
        assert_eq!(ds.graph.edge_count(), 1);
        assert_eq!(ds.stats.duplicate_citations, 2);
        assert_eq!(ds.stats.self_citations, 1);
        assert_eq!(ds.stats.unique_edges, 1);
    }

    #[test]
    fn tab_separated_rows() {
        let ds = load("p1\t0\t1\tL\np2\t1\t1\tM\n", "p1\tp2\n").unwrap();
        assert_eq!(ds.graph.edge_count(), 1);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        match load("a 1 0 x\nb 1 x\n", "") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match load("a 1 0 x\nb 1 2 y\n", "") {
            Err(Error::Validation { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match load(CONTENT, "a b\na b c\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(load("a 1 0 x\na 0 0 x\n", ""), Err(Error::Validation { line: 2, .. })));
    }

    #[test]
    fn native_roundtrip() {
        let ds = load(CONTENT, "a b\nc b\n").unwrap();
        let text = write_native(&ds.graph);
        assert_eq!(text, "GRAPH v1 3 3 2\n0 1\n1 2\n0 1 0\n1 2 1 2\n2 0\n");
        assert_eq!(parse_native(&text).unwrap(), ds.graph);
    }

    #[test]
    fn native_rejects_garbage() {
        for bad in [
            "",
            "GRAPH v2 1 1 0\n0 0\n",
            "GRAPH v1 2 1 1\n1 0\n0 0\n1 0\n",
            "GRAPH v1 2 1 0\n0 1 1\n1 0\n",
            "GRAPH v1 1 1 0\n0 2 0 0\n",
            "GRAPH v1 1 1 0\n0 0\nextra\n",
            "GRAPH v1 18446744073709551615 1 0\n",
        ] {
            assert!(parse_native(bad).is_err(), "{bad:?}");
        }
    }
}
