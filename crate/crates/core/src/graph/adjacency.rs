use crate::error::{Error, Result};
use crate::graph::{Graph, Pair};
use crate::tensor::SparseMatrix;

/// Precomputed neighbor lists from which `D̃^{-1/2}(A+I)D̃^{-1/2}` can be
/// built repeatedly with different overlay edges.
#[derive(Debug, Clone)]
pub struct AdjacencyBuilder {
    adj: Vec<Vec<usize>>,
}

impl AdjacencyBuilder {
    pub fn new(node_count: usize, edges: &[Pair]) -> Result<Self> {
        let mut b = AdjacencyBuilder {
            adj: vec![Vec::new(); node_count],
        };
        b.insert(edges)?;
        for list in &mut b.adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(b)
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    fn insert(&mut self, edges: &[Pair]) -> Result<()> {
        let n = self.adj.len();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidPair(u, v, format!("node count is {n}")));
            }
            if u == v {
                continue;
            }
            self.adj[u].push(v);
            self.adj[v].push(u);
        }
        Ok(())
    }

    /// Normalized operator over the base edges plus `extra` (self-loops in
    /// `extra` are ignored; the identity is always added).
    pub fn build(&self, extra: &[Pair]) -> Result<SparseMatrix> {
        let n = self.adj.len();
        let mut touched: Vec<(usize, Vec<usize>)> = Vec::new();
        if !extra.is_empty() {
            let mut overlay = AdjacencyBuilder {
                adj: vec![Vec::new(); n],
            };
            overlay.insert(extra)?;
            for (u, add) in overlay.adj.into_iter().enumerate() {
                if add.is_empty() {
                    continue;
                }
                let mut merged = self.adj[u].clone();
                merged.extend(add);
                merged.sort_unstable();
                merged.dedup();
                touched.push((u, merged));
            }
        }
        // Degrees of Ã = A + I come from the merged rows.
        let mut rows: Vec<&[usize]> = self.adj.iter().map(Vec::as_slice).collect();
        for (u, merged) in &touched {
            rows[*u] = merged;
        }
        let inv_sqrt: Vec<f64> = rows
            .iter()
            .map(|r| 1.0 / ((r.len() + 1) as f64).sqrt())
            .collect();

        let nnz = rows.iter().map(|r| r.len() + 1).sum();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for (u, r) in rows.iter().enumerate() {
            let mut self_done = false;
            for &v in r.iter() {
                if !self_done && v > u {
                    indices.push(u);
                    values.push(inv_sqrt[u] * inv_sqrt[u]);
                    self_done = true;
                }
                indices.push(v);
                values.push(inv_sqrt[u] * inv_sqrt[v]);
            }
            if !self_done {
                indices.push(u);
                values.push(inv_sqrt[u] * inv_sqrt[u]);
            }
            indptr.push(indices.len());
        }
        SparseMatrix::new(n, n, indptr, indices, values)
    }
}

/// `D̃^{-1/2}(A+I)D̃^{-1/2}` over `edge_subset` (or all of `g`'s edges when
/// `None`) united with `extra`. `g` itself is never modified.
pub fn normalized_adjacency(g: &Graph, edge_subset: Option<&[Pair]>, extra: &[Pair]) -> Result<SparseMatrix> {
    let base = edge_subset.unwrap_or(g.edges());
    AdjacencyBuilder::new(g.node_count(), base)?.build(extra)
}
