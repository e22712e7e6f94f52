use crate::error::{Error, Result};
use crate::graph::Graph;

/// Trigger node features and the statistics they were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerSpec {
    pub feature_dim: usize,
    /// Number of ones, `k`.
    pub budget: usize,
    /// Budget fraction `λ` when the budget came from one.
    pub lambda: Option<f64>,
    /// Per-column frequency `α_j` (empty when built from indices alone).
    pub frequencies: Vec<usize>,
    /// Sorted set columns `M_k`.
    pub indices: Vec<usize>,
    /// Binary feature vector `x_t`, length `feature_dim`.
    pub features: Vec<u8>,
}

impl TriggerSpec {
    /// Derives the trigger for `g` with budget `k = max(1, ⌊λ·d⌋)`.
    pub fn generate(g: &Graph, lambda: f64) -> Result<Self> {
        let d = g.feature_dim();
        let k = budget_for(lambda, d)?;
        let alpha = feature_frequencies(g);
        let indices = select_trigger_indices(&alpha, k)?;
        let mut t = build_trigger(d, &indices)?;
        t.lambda = Some(lambda);
        t.frequencies = alpha;
        Ok(t)
    }

    /// Set columns as a feature row for [`Graph`].
    pub fn feature_row(&self) -> Vec<u32> {
        self.indices.iter().map(|&j| j as u32).collect()
    }
}

/// `k = max(1, ⌊λ·d⌋)`.
pub fn budget_for(lambda: f64, feature_dim: usize) -> Result<usize> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::invalid("lambda", format!("{lambda} not in (0, 1]")));
    }
    if feature_dim == 0 {
        return Err(Error::invalid("feature_dim", "graph has no features"));
    }
    Ok(floor_times(lambda, feature_dim).clamp(1, feature_dim))
}

/// `⌊frac·n⌋`, tolerant of products such as `0.29·100 = 28.999…`.
pub(crate) fn floor_times(frac: f64, n: usize) -> usize {
    let raw = frac * n as f64;
    (raw + 1e-9 * raw.max(1.0)).floor() as usize
}

/// `α_j = ‖X_{:,j}‖₁`.
pub fn feature_frequencies(g: &Graph) -> Vec<usize> {
    let mut alpha = vec![0usize; g.feature_dim()];
    for row in g.features().rows() {
        for &j in row {
            alpha[j as usize] += 1;
        }
    }
    alpha
}

/// The `k` columns with the smallest frequency, ties to the lower index,
/// returned sorted.
pub fn select_trigger_indices(alpha: &[usize], k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::invalid("k", "trigger budget must be at least 1"));
    }
    if k > alpha.len() {
        return Err(Error::invalid(
            "k",
            format!("budget {k} exceeds feature dimension {}", alpha.len()),
        ));
    }
    let mut order: Vec<usize> = (0..alpha.len()).collect();
    order.sort_by_key(|&j| (alpha[j], j));
    let mut picked = order[..k].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// `x_t[i] = 1` iff `i ∈ indices`.
pub fn build_trigger(feature_dim: usize, indices: &[usize]) -> Result<TriggerSpec> {
    if indices.is_empty() {
        return Err(Error::invalid("indices", "trigger needs at least one feature"));
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != indices.len() {
        return Err(Error::invalid("indices", "duplicate trigger index"));
    }
    if let Some(&j) = sorted.last().filter(|&&j| j >= feature_dim) {
        return Err(Error::invalid(
            "indices",
            format!("index {j} outside dimension {feature_dim}"),
        ));
    }
    let mut features = vec![0u8; feature_dim];
    for &j in &sorted {
        features[j] = 1;
    }
    Ok(TriggerSpec {
        feature_dim,
        budget: sorted.len(),
        lambda: None,
        frequencies: Vec::new(),
        indices: sorted,
        features,
    })
}
