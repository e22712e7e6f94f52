use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

/// Compressed sparse row matrix with strictly increasing column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Validates the CSR layout before wrapping it.
    pub fn new(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::shape("csr", msg));
        if indptr.len() != rows + 1 {
            return bad(format!("indptr has {} entries, expected {}", indptr.len(), rows + 1));
        }
        if indptr[0] != 0 || *indptr.last().unwrap() != indices.len() {
            return bad("indptr must start at 0 and end at nnz".into());
        }
        if indices.len() != values.len() {
            return bad(format!("{} indices vs {} values", indices.len(), values.len()));
        }
        for r in 0..rows {
            let (s, e) = (indptr[r], indptr[r + 1]);
            if s > e {
                return bad(format!("indptr decreases at row {r}"));
            }
            let row = &indices[s..e];
            if row.iter().any(|&c| c >= cols) {
                return bad(format!("column out of range in row {r}"));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("columns not strictly increasing in row {r}"));
            }
        }
        Ok(SparseMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::shape(
                "from_triplets",
                format!("({r}, {c}) outside {rows}x{cols}"),
            ));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(SparseMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values stored in row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out.set(r, c, v);
            }
        }
        out
    }

    /// Sparse × dense product.
    pub fn spmm(&self, d: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != d.rows() {
            return Err(Error::shape(
                "spmm",
                format!("{}x{} sparse x {:?} dense", self.rows, self.cols, d.shape()),
            ));
        }
        let k = d.cols();
        let mut out = DenseMatrix::zeros(self.rows, k);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let out_row = out.row_mut(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, &x) in out_row.iter_mut().zip(d.row(c)) {
                    *o += v * x;
                }
            }
        }
        Ok(out)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| {
                let (cols, vals) = self.row(r);
                cols.iter()
                    .zip(vals)
                    .all(|(&c, &v)| (self.get(c, r) - v).abs() <= tol)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{glorot_init, Rng};

    #[test]
    fn identity_spmm() {
        let m = glorot_init(4, 3, &mut Rng::new(1));
        assert_eq!(SparseMatrix::identity(4).spmm(&m).unwrap(), m);
    }

    #[test]
    fn zero_spmm() {
        let m = glorot_init(4, 3, &mut Rng::new(1));
        assert_eq!(SparseMatrix::zeros(2, 4).spmm(&m).unwrap(), DenseMatrix::zeros(2, 3));
    }

    #[test]
    fn spmm_shape_error() {
        let m = DenseMatrix::zeros(3, 3);
        assert!(SparseMatrix::identity(4).spmm(&m).is_err());
    }

    #[test]
    fn rejects_malformed_layouts() {
        assert!(SparseMatrix::new(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(SparseMatrix::new(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::new(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        assert!(SparseMatrix::new(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::new(2, 2, vec![0, 1, 2], vec![1, 0], vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn triplets_sum_duplicates() {
        let s = SparseMatrix::from_triplets(2, 2, vec![(1, 0, 1.0), (0, 1, 2.0), (1, 0, 0.5)]).unwrap();
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.get(1, 0), 1.5);
        assert_eq!(s.get(0, 0), 0.0);
    }
}
