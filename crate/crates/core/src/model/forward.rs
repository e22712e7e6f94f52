use crate::error::{Error, Result};
use crate::graph::{BinaryFeatures, Pair};
use crate::model::{ModelKind, ModelParams};
use crate::tensor::dense::{dot, sigmoid_scalar};
use crate::tensor::{DenseMatrix, Rng, SparseMatrix};

/// Node embeddings; row `i` of `z` is the embedding of node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub z: DenseMatrix,
    /// VGAE only.
    pub mu: Option<DenseMatrix>,
    /// VGAE only.
    pub logstd: Option<DenseMatrix>,
    /// The standard-normal sample used for `z` (training-mode VGAE only).
    pub noise: Option<DenseMatrix>,
}

pub enum EncodeMode<'a> {
    /// Deterministic: VGAE uses `z = μ`. Consumes no randomness.
    Eval,
    /// VGAE draws `z = μ + exp(logσ) ⊙ ε`; GAE ignores the generator.
    Train(&'a mut Rng),
}

/// Cached intermediate values of one encoder pass.
pub(crate) struct Pass {
    pub p1: DenseMatrix,
    pub h: DenseMatrix,
    pub emb: Embeddings,
}

pub(crate) fn run(
    params: &ModelParams,
    a_hat: &SparseMatrix,
    xw: &DenseMatrix,
    noise: Option<&DenseMatrix>,
) -> Result<Pass> {
    params.check_shapes()?;
    if a_hat.rows() != a_hat.cols() || a_hat.cols() != xw.rows() {
        return Err(Error::shape(
            "encode",
            format!("a_hat {}x{} vs {} feature rows", a_hat.rows(), a_hat.cols(), xw.rows()),
        ));
    }
    let p1 = a_hat.spmm(xw)?;
    let h = p1.map(|v| v.max(0.0));
    let mu = a_hat.spmm(&h.matmul(&params.w1)?)?;
    let emb = match &params.w_logstd {
        None => Embeddings {
            z: mu,
            mu: None,
            logstd: None,
            noise: None,
        },
        Some(w_ls) => {
            let logstd = a_hat.spmm(&h.matmul(w_ls)?)?;
            let z = match noise {
                None => mu.clone(),
                Some(eps) => {
                    if eps.shape() != mu.shape() {
                        return Err(Error::shape(
                            "encode",
                            format!("noise {:?} vs embeddings {:?}", eps.shape(), mu.shape()),
                        ));
                    }
                    let spread = logstd.zip_map(eps, |ls, e| ls.exp() * e)?;
                    mu.add(&spread)?
                }
            };
            Embeddings {
                z,
                mu: Some(mu),
                logstd: Some(logstd),
                noise: noise.cloned(),
            }
        }
    };
    Ok(Pass { p1, h, emb })
}

fn sample_noise(params: &ModelParams, rows: usize, mode: EncodeMode<'_>) -> Option<DenseMatrix> {
    match (mode, params.kind()) {
        (EncodeMode::Train(rng), ModelKind::Vgae) => {
            let l = params.config.latent;
            let data = (0..rows * l).map(|_| rng.normal()).collect();
            Some(DenseMatrix::from_vec(rows, l, data).expect("noise shape"))
        }
        _ => None,
    }
}

/// Encoder pass from precomputed `X · W0` (graph-independent, so it can be
/// reused across adjacency overlays).
pub fn encode_projected(
    params: &ModelParams,
    a_hat: &SparseMatrix,
    xw: &DenseMatrix,
    mode: EncodeMode<'_>,
) -> Result<Embeddings> {
    let noise = sample_noise(params, xw.rows(), mode);
    Ok(run(params, a_hat, xw, noise.as_ref())?.emb)
}

/// Two-layer GCN encoder: `Â · relu(Â · X · W0) · W1` (VGAE: two heads).
pub fn encode(
    params: &ModelParams,
    a_hat: &SparseMatrix,
    x: &BinaryFeatures,
    mode: EncodeMode<'_>,
) -> Result<Embeddings> {
    let xw = x.matmul(&params.w0)?;
    encode_projected(params, a_hat, &xw, mode)
}

/// Link probability `sigmoid(z_iᵀ z_j)`.
pub fn decode_pair(emb: &Embeddings, i: usize, j: usize) -> f64 {
    sigmoid_scalar(dot(emb.z.row(i), emb.z.row(j)))
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn check_pairs(pos: &[Pair], neg: &[Pair], n: usize) -> Result<()> {
    if pos.is_empty() {
        return Err(Error::invalid("pos", "no positive pairs"));
    }
    if pos.len() != neg.len() {
        return Err(Error::invalid(
            "neg",
            format!("{} negatives for {} positives", neg.len(), pos.len()),
        ));
    }
    if let Some(&(u, v)) = pos.iter().chain(neg).find(|&&(u, v)| u >= n || v >= n) {
        return Err(Error::InvalidPair(u, v, format!("only {n} embedded nodes")));
    }
    Ok(())
}

/// Weight of the KL term: the per-node mean KL scaled by `1/N`.
fn kl_weight(n: usize) -> f64 {
    1.0 / (n as f64 * n as f64)
}

/// Mean binary cross-entropy over all positive and negative pairs; VGAE adds
/// `(1/N) · mean_i KL(q(z_i) ‖ N(0, I))` with
/// `KL_i = -½ Σ_k (1 + 2 logσ_ik − μ_ik² − exp(2 logσ_ik))`.
pub fn loss(emb: &Embeddings, pos: &[Pair], neg: &[Pair], kind: ModelKind) -> Result<f64> {
    let n = emb.z.rows();
    check_pairs(pos, neg, n)?;
    let m = (pos.len() + neg.len()) as f64;
    let score = |&(i, j): &Pair| dot(emb.z.row(i), emb.z.row(j));
    let bce = (pos.iter().map(|p| softplus(-score(p))).sum::<f64>()
        + neg.iter().map(|p| softplus(score(p))).sum::<f64>())
        / m;
    match kind {
        ModelKind::Gae => Ok(bce),
        ModelKind::Vgae => {
            let (Some(mu), Some(ls)) = (&emb.mu, &emb.logstd) else {
                return Err(Error::invalid("kind", "VGAE loss needs mu and logstd"));
            };
            let kl: f64 = mu
                .data()
                .iter()
                .zip(ls.data())
                .map(|(&m, &l)| -0.5 * (1.0 + 2.0 * l - m * m - (2.0 * l).exp()))
                .sum();
            Ok(bce + kl_weight(n) * kl)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w0: DenseMatrix,
    pub w1: DenseMatrix,
    pub w_logstd: Option<DenseMatrix>,
}

/// Loss and its gradient with respect to every weight matrix.
///
/// `noise` is the VGAE sample to differentiate through (`None` means
/// `z = μ`). `a_hat` must be symmetric, which the normalized adjacency is,
/// so `Âᵀ` is applied as `Â`.
pub fn backward(
    params: &ModelParams,
    a_hat: &SparseMatrix,
    x: &BinaryFeatures,
    pos: &[Pair],
    neg: &[Pair],
    noise: Option<&DenseMatrix>,
) -> Result<(f64, Gradients)> {
    let xw = x.matmul(&params.w0)?;
    let pass = run(params, a_hat, &xw, noise)?;
    backward_from(params, a_hat, x, &pass, pos, neg)
}

pub(crate) fn backward_from(
    params: &ModelParams,
    a_hat: &SparseMatrix,
    x: &BinaryFeatures,
    pass: &Pass,
    pos: &[Pair],
    neg: &[Pair],
) -> Result<(f64, Gradients)> {
    let emb = &pass.emb;
    let z = &emb.z;
    let n = z.rows();
    let value = loss(emb, pos, neg, params.kind())?;
    let m = (pos.len() + neg.len()) as f64;

    // dL/dZ from the decoder: (σ(z_iᵀz_j) − y) / M times the partner row.
    let mut dz = DenseMatrix::zeros(n, z.cols());
    let mut accumulate = |&(i, j): &Pair, label: f64| {
        let g = (sigmoid_scalar(dot(z.row(i), z.row(j))) - label) / m;
        for k in 0..z.cols() {
            let (zi, zj) = (z.get(i, k), z.get(j, k));
            dz.row_mut(i)[k] += g * zj;
            dz.row_mut(j)[k] += g * zi;
        }
    };
    pos.iter().for_each(|p| accumulate(p, 1.0));
    neg.iter().for_each(|p| accumulate(p, 0.0));

    let (d_hw1, dh, d_ls) = match &params.w_logstd {
        None => {
            let d_hw1 = a_hat.spmm(&dz)?;
            let dh = d_hw1.matmul_t(&params.w1)?;
            (d_hw1, dh, None)
        }
        Some(w_ls) => {
            let mu = emb.mu.as_ref().expect("vgae pass has mu");
            let ls = emb.logstd.as_ref().expect("vgae pass has logstd");
            let c = kl_weight(n);
            let dmu = dz.zip_map(mu, |g, m| g + c * m)?;
            let mut dls = ls.map(|l| c * ((2.0 * l).exp() - 1.0));
            if let Some(eps) = &emb.noise {
                let through = dz
                    .zip_map(eps, |g, e| g * e)?
                    .zip_map(ls, |ge, l| ge * l.exp())?;
                dls.add_assign(&through)?;
            }
            let d_hw1 = a_hat.spmm(&dmu)?;
            let d_hwls = a_hat.spmm(&dls)?;
            let mut dh = d_hw1.matmul_t(&params.w1)?;
            dh.add_assign(&d_hwls.matmul_t(w_ls)?)?;
            let g_ls = pass.h.t_matmul(&d_hwls)?;
            (d_hw1, dh, Some(g_ls))
        }
    };
    let g_w1 = pass.h.t_matmul(&d_hw1)?;
    let dp1 = dh.zip_map(&pass.p1, |g, p| if p > 0.0 { g } else { 0.0 })?;
    let dxw = a_hat.spmm(&dp1)?;
    let g_w0 = x.t_matmul(&dxw)?;
    Ok((
        value,
        Gradients {
            w0: g_w0,
            w1: g_w1,
            w_logstd: d_ls,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn single_node_params(kind: ModelKind) -> ModelParams {
        let cfg = ModelConfig {
            kind,
            hidden: 2,
            latent: 2,
            ..Default::default()
        };
        ModelParams {
            w0: DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 0.5, -1.0]).unwrap(),
            w1: DenseMatrix::from_vec(2, 2, vec![1.0, 0.0, 3.0, 1.0]).unwrap(),
            w_logstd: (kind == ModelKind::Vgae).then(|| DenseMatrix::zeros(2, 2)),
            config: cfg,
        }
    }

    #[test]
    fn zero_weights_zero_embeddings() {
        let mut p = single_node_params(ModelKind::Gae);
        p.w0 = DenseMatrix::zeros(2, 2);
        p.w1 = DenseMatrix::zeros(2, 2);
        let x = BinaryFeatures::new(2, vec![vec![0, 1], vec![1]]).unwrap();
        let a = SparseMatrix::identity(2);
        let e = encode(&p, &a, &x, EncodeMode::Eval).unwrap();
        assert_eq!(e.z, DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn single_node_hand_computation() {
        // X = [1, 0]; X·W0 = [1, 2]; relu keeps it; [1, 2]·W1 = [7, 2].
        let p = single_node_params(ModelKind::Gae);
        let x = BinaryFeatures::new(2, vec![vec![0]]).unwrap();
        let e = encode(&p, &SparseMatrix::identity(1), &x, EncodeMode::Eval).unwrap();
        assert_eq!(e.z.data(), &[7.0, 2.0]);
    }

    #[test]
    fn vgae_eval_is_deterministic_and_uses_mu() {
        let p = single_node_params(ModelKind::Vgae);
        let x = BinaryFeatures::new(2, vec![vec![0], vec![1]]).unwrap();
        let a = SparseMatrix::identity(2);
        let a1 = encode(&p, &a, &x, EncodeMode::Eval).unwrap();
        let a2 = encode(&p, &a, &x, EncodeMode::Eval).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(Some(&a1.z), a1.mu.as_ref());
        let mut rng = Rng::new(1);
        let t = encode(&p, &a, &x, EncodeMode::Train(&mut rng)).unwrap();
        assert_ne!(t.z, a1.z);
        assert!(t.noise.is_some());
    }

    fn emb_from(z: DenseMatrix) -> Embeddings {
        Embeddings {
            z,
            mu: None,
            logstd: None,
            noise: None,
        }
    }

    #[test]
    fn decoder_values() {
        let zero = emb_from(DenseMatrix::zeros(2, 3));
        assert_eq!(decode_pair(&zero, 0, 1), 0.5);
        let r = 3f64.ln().sqrt();
        let e = emb_from(DenseMatrix::from_vec(2, 3, vec![r, 0.0, 0.0, r, 0.0, 0.0]).unwrap());
        assert!((decode_pair(&e, 0, 1) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn loss_limits() {
        let zero = emb_from(DenseMatrix::zeros(3, 2));
        let l = loss(&zero, &[(0, 1)], &[(1, 2)], ModelKind::Gae).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
        // Large aligned / opposed embeddings approach a perfect fit.
        let z = DenseMatrix::from_vec(3, 1, vec![12.0, 12.0, -12.0]).unwrap();
        let l = loss(&emb_from(z), &[(0, 1)], &[(1, 2)], ModelKind::Gae).unwrap();
        assert!(l > 0.0 && l < 1e-60);
    }

    #[test]
    fn loss_contract_errors() {
        let zero = emb_from(DenseMatrix::zeros(3, 2));
        assert!(loss(&zero, &[], &[], ModelKind::Gae).is_err());
        assert!(loss(&zero, &[(0, 1)], &[], ModelKind::Gae).is_err());
        assert!(loss(&zero, &[(0, 5)], &[(0, 1)], ModelKind::Gae).is_err());
        assert!(loss(&zero, &[(0, 1)], &[(0, 2)], ModelKind::Vgae).is_err());
    }

    #[test]
    fn kl_vanishes_at_prior() {
        let e = Embeddings {
            z: DenseMatrix::zeros(3, 2),
            mu: Some(DenseMatrix::zeros(3, 2)),
            logstd: Some(DenseMatrix::zeros(3, 2)),
            noise: None,
        };
        let l = loss(&e, &[(0, 1)], &[(1, 2)], ModelKind::Vgae).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
    }
}
