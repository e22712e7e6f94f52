//! Synthetic graph generators used as test fixtures and as stand-ins for
//! citation datasets when the raw files are not available.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::graph::{canonical, BinaryFeatures, Graph, Pair};
use crate::tensor::Rng;

/// Erdős–Rényi topology with i.i.d. Bernoulli feature bits.
pub fn synth_graph(
    n: usize,
    edge_prob: f64,
    feature_dim: usize,
    feature_density: f64,
    rng: &mut Rng,
) -> Result<Graph> {
    if !(edge_prob > 0.0 && edge_prob < 1.0) {
        return Err(Error::invalid("edge_prob", format!("{edge_prob} not in (0, 1)")));
    }
    if !(feature_density > 0.0 && feature_density < 1.0) {
        return Err(Error::invalid(
            "feature_density",
            format!("{feature_density} not in (0, 1)"),
        ));
    }
    if feature_dim == 0 {
        return Err(Error::invalid("feature_dim", "must be positive"));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.bernoulli(edge_prob) {
                edges.push((u, v));
            }
        }
    }
    let rows = (0..n)
        .map(|_| {
            (0..feature_dim as u32)
                .filter(|_| rng.bernoulli(feature_density))
                .collect()
        })
        .collect();
    Graph::new(n, edges, BinaryFeatures::new(feature_dim, rows)?)
}

/// Shape parameters of a citation-network-like graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CitationProfile {
    pub name: &'static str,
    pub nodes: usize,
    pub feature_dim: usize,
    pub edges: usize,
    pub classes: usize,
    /// Topical communities per class.
    pub communities_per_class: usize,
    /// Mean number of ones per feature row.
    pub mean_features: f64,
    /// Spread of the row sizes (normal, clipped to `[1, max_features]`).
    pub feature_sd: f64,
    pub max_features: usize,
    /// Every feature column is set in at least this many rows.
    pub min_feature_frequency: usize,
    /// Fraction of edges inside one community.
    pub community_edge_frac: f64,
    /// Fraction of edges between different communities of the same class.
    pub class_edge_frac: f64,
    /// Fraction of edges into the community's related community, which
    /// belongs to another class and shares part of its vocabulary.
    pub related_edge_frac: f64,
    /// Pareto tail exponent of the degree propensities.
    pub degree_exponent: f64,
}

impl CitationProfile {
    /// Cora-sized: 2708 nodes, 1433 binary features, 5278 undirected edges,
    /// 7 classes, about 18 words per document.
    pub fn cora() -> Self {
        CitationProfile {
            name: "cora-like",
            nodes: 2708,
            feature_dim: 1433,
            edges: 5278,
            classes: 7,
            communities_per_class: 12,
            mean_features: 18.0,
            feature_sd: 5.5,
            max_features: 30,
            min_feature_frequency: 10,
            community_edge_frac: 0.7,
            class_edge_frac: 0.1,
            related_edge_frac: 0.15,
            degree_exponent: 2.5,
        }
    }

    /// CiteSeer-sized: 3327 nodes, 3703 binary features, 4552 undirected
    /// edges, 6 classes, about 32 words per document.
    pub fn citeseer() -> Self {
        CitationProfile {
            name: "citeseer-like",
            nodes: 3327,
            feature_dim: 3703,
            edges: 4552,
            classes: 6,
            communities_per_class: 12,
            mean_features: 32.0,
            feature_sd: 9.5,
            max_features: 54,
            min_feature_frequency: 10,
            community_edge_frac: 0.66,
            class_edge_frac: 0.06,
            related_edge_frac: 0.2,
            degree_exponent: 2.5,
        }
    }
}

/// Draws an index with probability proportional to `cumulative` increments.
fn draw(cumulative: &[f64], rng: &mut Rng) -> usize {
    let total = *cumulative.last().unwrap();
    let x = rng.next_f64() * total;
    cumulative.partition_point(|&c| c <= x).min(cumulative.len() - 1)
}

fn cumsum(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Degree-corrected planted-partition graph with topic-correlated sparse
/// binary features, sized after a real citation network.
///
/// Nodes belong to communities nested in classes. Edge endpoints are drawn
/// proportionally to heavy-tailed degree propensities, the second endpoint
/// restricted to the first one's community or class with the configured
/// probabilities, or to a fixed related community of another class. Each
/// feature column is owned by one community; a node draws most of its words
/// from its own community's vocabulary and the rest from the related
/// community, its class and the whole vocabulary, with Zipf popularity.
pub fn citation_like(profile: &CitationProfile, rng: &mut Rng) -> Result<Graph> {
    let p = profile;
    let n = p.nodes;
    let communities = p.classes * p.communities_per_class;
    if n < 2 || communities == 0 || p.feature_dim < communities {
        return Err(Error::invalid("profile", "too few nodes, communities or features"));
    }
    let fracs = [p.community_edge_frac, p.class_edge_frac, p.related_edge_frac];
    if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) || fracs.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(Error::invalid("profile", "edge fractions must be probabilities summing to at most 1"));
    }
    if p.edges > n * (n - 1) / 4 {
        return Err(Error::invalid("profile", "edge target too dense for rejection sampling"));
    }

    let community: Vec<usize> = (0..n).map(|_| rng.below(communities)).collect();
    let class_of = |c: usize| c / p.communities_per_class;
    // Related community: same slot in the next class (itself with one class).
    let related = |c: usize| (c + p.communities_per_class) % communities;
    let propensity: Vec<f64> = (0..n)
        .map(|_| (1.0 - rng.next_f64()).powf(-1.0 / (p.degree_exponent - 1.0)))
        .collect();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); communities];
    for (i, &c) in community.iter().enumerate() {
        members[c].push(i);
    }
    let mut class_members: Vec<Vec<usize>> = vec![Vec::new(); p.classes];
    for (i, &c) in community.iter().enumerate() {
        class_members[class_of(c)].push(i);
    }
    let cum_of = |nodes: &[usize]| cumsum(nodes.iter().map(|&i| propensity[i]));
    let all: Vec<usize> = (0..n).collect();
    let cum_all = cum_of(&all);
    let cum_comm: Vec<Vec<f64>> = members.iter().map(|m| cum_of(m)).collect();
    let cum_class: Vec<Vec<f64>> = class_members.iter().map(|m| cum_of(m)).collect();

    let mut seen: HashSet<Pair> = HashSet::with_capacity(p.edges);
    let mut edges = Vec::with_capacity(p.edges);
    let mut attempts = 0usize;
    while edges.len() < p.edges {
        attempts += 1;
        if attempts > 1000 * p.edges {
            return Err(Error::invalid("profile", "could not place the requested edges"));
        }
        let u = draw(&cum_all, rng);
        let c = community[u];
        let r = rng.next_f64();
        let v = if r < p.community_edge_frac && members[c].len() > 1 {
            members[c][draw(&cum_comm[c], rng)]
        } else if r < p.community_edge_frac + p.class_edge_frac {
            let k = class_of(c);
            class_members[k][draw(&cum_class[k], rng)]
        } else if r < fracs.iter().sum::<f64>() && !members[related(c)].is_empty() {
            let rc = related(c);
            members[rc][draw(&cum_comm[rc], rng)]
        } else {
            draw(&cum_all, rng)
        };
        if u == v || !seen.insert(canonical(u, v)) {
            continue;
        }
        edges.push(canonical(u, v));
    }

    // Vocabulary: each column owned by a community, Zipf popularity.
    let d = p.feature_dim;
    let mut order: Vec<usize> = (0..d).collect();
    rng.shuffle(&mut order);
    let popularity: Vec<f64> = {
        let mut w = vec![0.0; d];
        for (rank, &j) in order.iter().enumerate() {
            w[j] = 1.0 / (rank as f64 + 10.0);
        }
        w
    };
    let owner: Vec<usize> = (0..d).map(|j| j % communities).collect();
    let mut vocab: Vec<Vec<usize>> = vec![Vec::new(); communities];
    for j in 0..d {
        vocab[owner[j]].push(j);
    }
    let mut class_vocab: Vec<Vec<usize>> = vec![Vec::new(); p.classes];
    for j in 0..d {
        class_vocab[class_of(owner[j])].push(j);
    }
    let cum_pop = |cols: &[usize]| cumsum(cols.iter().map(|&j| popularity[j]));
    let all_cols: Vec<usize> = (0..d).collect();
    let cum_vocab_all = cum_pop(&all_cols);
    let cum_vocab: Vec<Vec<f64>> = vocab.iter().map(|v| cum_pop(v)).collect();
    let cum_class_vocab: Vec<Vec<f64>> = class_vocab.iter().map(|v| cum_pop(v)).collect();

    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(n);
    for &c in community.iter() {
        let size = (p.mean_features + p.feature_sd * rng.normal()).round();
        let target = (size.max(1.0) as usize).min(p.max_features.max(1)).min(d);
        let mut row: HashSet<u32> = HashSet::with_capacity(target);
        let mut guard = 0;
        while row.len() < target && guard < 50 * target {
            guard += 1;
            let r = rng.next_f64();
            let j = if r < 0.5 {
                vocab[c][draw(&cum_vocab[c], rng)]
            } else if r < 0.62 {
                let rc = related(c);
                vocab[rc][draw(&cum_vocab[rc], rng)]
            } else if r < 0.82 {
                let k = class_of(c);
                class_vocab[k][draw(&cum_class_vocab[k], rng)]
            } else {
                draw(&cum_vocab_all, rng)
            };
            row.insert(j as u32);
        }
        let mut row: Vec<u32> = row.into_iter().collect();
        row.sort_unstable();
        rows.push(row);
    }

    // Top up rare columns inside their owning community.
    let mut freq = vec![0usize; d];
    for r in &rows {
        for &j in r {
            freq[j as usize] += 1;
        }
    }
    for j in 0..d {
        let pool = &members[owner[j]];
        let want = p.min_feature_frequency.min(pool.len());
        let mut guard = 0;
        while freq[j] < want && guard < 100 * want {
            guard += 1;
            let i = pool[rng.below(pool.len())];
            if let Err(pos) = rows[i].binary_search(&(j as u32)) {
                rows[i].insert(pos, j as u32);
                freq[j] += 1;
            }
        }
    }

    Graph::new(n, edges, BinaryFeatures::new(d, rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_graph() {
        let a = synth_graph(50, 0.1, 8, 0.3, &mut Rng::new(7)).unwrap();
        let b = synth_graph(50, 0.1, 8, 0.3, &mut Rng::new(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tiny_edge_probability_still_valid() {
        let g = synth_graph(50, 1e-9, 4, 0.5, &mut Rng::new(3)).unwrap();
        assert!(g.edge_count() <= 1);
        assert_eq!(g.node_count(), 50);
    }

    #[test]
    fn rejects_out_of_range_probabilities() {
        assert!(synth_graph(5, 0.0, 2, 0.5, &mut Rng::new(0)).is_err());
        assert!(synth_graph(5, 0.5, 2, 1.0, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn edge_count_matches_binomial() {
        // Binomial(19900, 0.05): mean 995, sd sqrt(19900·0.05·0.95) ≈ 30.74.
        let g = synth_graph(200, 0.05, 4, 0.5, &mut Rng::new(12)).unwrap();
        let mean = 19900.0 * 0.05;
        let sd = (19900.0f64 * 0.05 * 0.95).sqrt();
        assert!((g.edge_count() as f64 - mean).abs() < 4.0 * sd, "{}", g.edge_count());
    }

    #[test]
    fn citation_profile_shape() {
        let p = CitationProfile::cora();
        let g = citation_like(&p, &mut Rng::new(1)).unwrap();
        assert_eq!(g.node_count(), 2708);
        assert_eq!(g.feature_dim(), 1433);
        assert_eq!(g.edge_count(), 5278);
        let mean = g.features().total_ones() as f64 / 2708.0;
        assert!((12.0..30.0).contains(&mean), "{mean}");
        let mut freq = vec![0usize; g.feature_dim()];
        for r in g.features().rows() {
            for &j in r {
                freq[j as usize] += 1;
            }
        }
        assert!(freq.iter().all(|&f| f >= p.min_feature_frequency));
    }
}
