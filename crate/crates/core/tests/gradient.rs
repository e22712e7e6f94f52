//! Analytic gradients against central finite differences.

use gbl_core::graph::{normalized_adjacency, synth_graph, Graph, Pair};
use gbl_core::model::{backward, ModelConfig, ModelKind, ModelParams};
use gbl_core::tensor::{DenseMatrix, Rng};

const H: f64 = 1e-4;
const TOL: f64 = 1e-4;

fn fixture() -> (Graph, Vec<Pair>, Vec<Pair>) {
    let g = synth_graph(12, 0.3, 6, 0.4, &mut Rng::new(11)).unwrap();
    let pos: Vec<Pair> = g.edges().iter().copied().take(8).collect();
    let mut neg = Vec::new();
    'outer: for u in 0..12 {
        for v in u + 1..12 {
            if !g.has_edge(u, v) {
                neg.push((u, v));
                if neg.len() == pos.len() {
                    break 'outer;
                }
            }
        }
    }
    (g, pos, neg)
}

fn weight_mut(p: &mut ModelParams, which: usize) -> &mut DenseMatrix {
    match which {
        0 => &mut p.w0,
        1 => &mut p.w1,
        _ => p.w_logstd.as_mut().unwrap(),
    }
}

fn check(kind: ModelKind) {
    let (g, pos, neg) = fixture();
    assert!(!pos.is_empty() && pos.len() == neg.len());
    let cfg = ModelConfig {
        hidden: 5,
        latent: 3,
        ..ModelConfig::new(kind, 4)
    };
    let params = ModelParams::init(g.feature_dim(), &cfg, &mut Rng::new(8)).unwrap();
    let a_hat = normalized_adjacency(&g, None, &[]).unwrap();
    let x = g.features();
    let noise = (kind == ModelKind::Vgae).then(|| {
        let mut rng = Rng::new(3);
        let data = (0..12 * 3).map(|_| rng.normal()).collect();
        DenseMatrix::from_vec(12, 3, data).unwrap()
    });
    let (_, grads) = backward(&params, &a_hat, x, &pos, &neg, noise.as_ref()).unwrap();
    let analytic = match &grads.w_logstd {
        None => vec![&grads.w0, &grads.w1],
        Some(ls) => vec![&grads.w0, &grads.w1, ls],
    };
    let f = |p: &ModelParams| backward(p, &a_hat, x, &pos, &neg, noise.as_ref()).unwrap().0;

    for (which, grad) in analytic.iter().enumerate() {
        let mut worst = 0.0f64;
        for idx in 0..grad.data().len() {
            let mut plus = params.clone();
            weight_mut(&mut plus, which).data_mut()[idx] += H;
            let mut minus = params.clone();
            weight_mut(&mut minus, which).data_mut()[idx] -= H;
            let numeric = (f(&plus) - f(&minus)) / (2.0 * H);
            let exact = grad.data()[idx];
            let rel = (numeric - exact).abs() / numeric.abs().max(exact.abs()).max(1e-3);
            worst = worst.max(rel);
        }
        assert!(worst <= TOL, "{kind} weight {which}: relative error {worst}");
    }
}

#[test]
fn gae_gradients() {
    check(ModelKind::Gae);
}

#[test]
fn vgae_gradients_through_reparameterization() {
    check(ModelKind::Vgae);
}

#[test]
fn zero_weights_give_finite_matching_w1_gradient() {
    let (g, pos, neg) = fixture();
    let cfg = ModelConfig {
        hidden: 4,
        latent: 2,
        ..ModelConfig::new(ModelKind::Gae, 0)
    };
    let mut params = ModelParams::init(g.feature_dim(), &cfg, &mut Rng::new(1)).unwrap();
    params.w0 = DenseMatrix::zeros(g.feature_dim(), 4);
    params.w1 = DenseMatrix::zeros(4, 2);
    let a_hat = normalized_adjacency(&g, None, &[]).unwrap();
    let (value, grads) = backward(&params, &a_hat, g.features(), &pos, &neg, None).unwrap();
    assert!((value - std::f64::consts::LN_2).abs() < 1e-12);
    assert!(grads.w1.is_finite());
    assert!(grads.w1.max_abs() < 1e-12);
}

#[test]
fn duplicating_samples_keeps_mean_gradient() {
    let (g, pos, neg) = fixture();
    let cfg = ModelConfig {
        hidden: 4,
        latent: 2,
        ..ModelConfig::new(ModelKind::Gae, 0)
    };
    let params = ModelParams::init(g.feature_dim(), &cfg, &mut Rng::new(1)).unwrap();
    let a_hat = normalized_adjacency(&g, None, &[]).unwrap();
    let twice = |v: &[Pair]| v.iter().chain(v).copied().collect::<Vec<_>>();
    let (l1, g1) = backward(&params, &a_hat, g.features(), &pos, &neg, None).unwrap();
    let (l2, g2) = backward(&params, &a_hat, g.features(), &twice(&pos), &twice(&neg), None).unwrap();
    assert!((l1 - l2).abs() < 1e-12);
    for (a, b) in [(&g1.w0, &g2.w0), (&g1.w1, &g2.w1)] {
        let diff = a.zip_map(b, |x, y| x - y).unwrap().max_abs();
        assert!(diff < 1e-12, "{diff}");
    }
}
