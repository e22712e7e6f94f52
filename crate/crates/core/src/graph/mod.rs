//! Undirected attributed graphs with binary node features, their loaders,
//! transductive edge splits and the symmetric-normalized GCN operator.

mod adjacency;
mod dataset;
mod io;
mod split;
mod synth;

pub use adjacency::{normalized_adjacency, AdjacencyBuilder};
pub use dataset::{resolve_dataset, NamedGraph, Source, SURROGATE_SEED};
pub use io::{
    load_content_cites, parse_content_cites, parse_native, read_native, write_native, LoadStats,
    LoadedDataset,
};
pub use split::{parse_split, sample_non_edges, split_edges, write_split, EdgeSplit};
pub use synth::{citation_like, synth_graph, CitationProfile};

use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

/// Undirected node pair, stored with the smaller id first.
pub type Pair = (usize, usize);

#[inline]
pub fn canonical(u: usize, v: usize) -> Pair {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Binary node-feature matrix stored as sorted per-node lists of set columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryFeatures {
    dim: usize,
    rows: Vec<Vec<u32>>,
}

impl BinaryFeatures {
    pub fn new(dim: usize, mut rows: Vec<Vec<u32>>) -> Result<Self> {
        for (i, r) in rows.iter_mut().enumerate() {
            r.sort_unstable();
            r.dedup();
            if let Some(&j) = r.last() {
                if j as usize >= dim {
                    return Err(Error::invalid(
                        "features",
                        format!("node {i} has feature {j} >= dimension {dim}"),
                    ));
                }
            }
        }
        Ok(BinaryFeatures { dim, rows })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    /// Number of ones in row `i`, i.e. `‖X_i‖₁`.
    pub fn count(&self, i: usize) -> usize {
        self.rows[i].len()
    }

    pub fn total_ones(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `X · W` for `W` with `dim` rows.
    pub fn matmul(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        if w.rows() != self.dim {
            return Err(Error::shape(
                "features_matmul",
                format!("{}x{} features x {:?}", self.rows.len(), self.dim, w.shape()),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows.len(), w.cols());
        for (i, r) in self.rows.iter().enumerate() {
            let o = out.row_mut(i);
            for &j in r {
                for (a, &b) in o.iter_mut().zip(w.row(j as usize)) {
                    *a += b;
                }
            }
        }
        Ok(out)
    }

    /// `Xᵀ · G` for `G` with one row per node.
    pub fn t_matmul(&self, g: &DenseMatrix) -> Result<DenseMatrix> {
        if g.rows() != self.rows.len() {
            return Err(Error::shape(
                "features_t_matmul",
                format!("{}x{} featuresᵀ x {:?}", self.rows.len(), self.dim, g.shape()),
            ));
        }
        let mut out = DenseMatrix::zeros(self.dim, g.cols());
        for (i, r) in self.rows.iter().enumerate() {
            let src = g.row(i);
            for &j in r {
                for (a, &b) in out.row_mut(j as usize).iter_mut().zip(src) {
                    *a += b;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows.len(), self.dim);
        for (i, r) in self.rows.iter().enumerate() {
            for &j in r {
                m.set(i, j as usize, 1.0);
            }
        }
        m
    }

    pub(crate) fn push(&mut self, row: Vec<u32>) -> Result<()> {
        let mut f = BinaryFeatures::new(self.dim, vec![row])?;
        self.rows.append(&mut f.rows);
        Ok(())
    }
}

/// Undirected, unweighted attributed graph without self-loops.
///
/// Edges are kept both as a sorted list of canonical pairs and as a CSR
/// neighbor structure with both directions materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<Pair>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    features: BinaryFeatures,
}

impl Graph {
    /// Builds a graph; duplicate and reversed edges collapse to one.
    /// Self-loops and out-of-range endpoints are rejected.
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = Pair>,
        features: BinaryFeatures,
    ) -> Result<Self> {
        if features.len() != node_count {
            return Err(Error::invalid(
                "features",
                format!("{} feature rows for {node_count} nodes", features.len()),
            ));
        }
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidPair(u, v, format!("node count is {node_count}")));
            }
            if u == v {
                return Err(Error::InvalidPair(u, v, "self-loop".into()));
            }
            list.push(canonical(u, v));
        }
        list.sort_unstable();
        list.dedup();

        let mut degree = vec![0usize; node_count];
        for &(u, v) in &list {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = vec![0usize; node_count + 1];
        for i in 0..node_count {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets[..node_count].to_vec();
        let mut neighbors = vec![0usize; offsets[node_count]];
        for &(u, v) in &list {
            neighbors[fill[u]] = v;
            fill[u] += 1;
            neighbors[fill[v]] = u;
            fill[v] += 1;
        }
        for i in 0..node_count {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok(Graph {
            node_count,
            edges: list,
            offsets,
            neighbors,
            features,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn feature_dim(&self) -> usize {
        self.features.dim()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted canonical edge list.
    pub fn edges(&self) -> &[Pair] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count && v < self.node_count && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn features(&self) -> &BinaryFeatures {
        &self.features
    }

    /// Returns a new graph with one extra node carrying `features` and the
    /// given additional edges.
    pub fn with_extra_node(&self, features: Vec<u32>, extra_edges: &[Pair]) -> Result<Graph> {
        let mut feats = self.features.clone();
        feats.push(features)?;
        Graph::new(
            self.node_count + 1,
            self.edges.iter().copied().chain(extra_edges.iter().copied()),
            feats,
        )
    }
}
