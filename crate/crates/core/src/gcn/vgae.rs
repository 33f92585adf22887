//! Variational graph auto-encoder: forward pass, loss and gradients.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::params::VgaeParams;
use super::Activation;
use crate::error::{Error, Result};
use crate::latent::Graph;

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct VgaeForwardState {
    pub mu: DMatrix<f64>,
    pub log_sigma: DMatrix<f64>,
    pub epsilon: DMatrix<f64>,
    /// `mu + epsilon ⊙ exp(log_sigma)`.
    pub latent: DMatrix<f64>,
    /// `Ã·W0` before the activation.
    pub hidden_pre: DMatrix<f64>,
    /// `Ã·act(Ã·W0)`, the input of both second layers.
    pub(crate) hidden_out: DMatrix<f64>,
}

/// Loss decomposition; `total = recon + kl`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

/// Class-balancing constants of the reconstruction loss, with targets
/// `A + I` (self-pairs count as edges).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconWeights {
    /// `(n² − Σ(A+I)) / Σ(A+I)`.
    pub pos_weight: f64,
    /// `n² / (2 (n² − Σ(A+I)))`.
    pub norm: f64,
}

impl ReconWeights {
    pub fn new(graph: &Graph) -> Result<Self> {
        let n = graph.n() as f64;
        let pairs = n * n;
        let positives = 2.0 * graph.edge_count() as f64 + n;
        let negatives = pairs - positives;
        if graph.n() == 0 || negatives <= 0.0 {
            return Err(Error::Parameter(format!(
                "reconstruction loss needs at least one non-edge, graph has {} nodes and {} edges",
                graph.n(),
                graph.edge_count()
            )));
        }
        Ok(Self {
            pos_weight: negatives / positives,
            norm: pairs / (2.0 * negatives),
        })
    }
}

fn check_inputs(params: &VgaeParams, a_norm: &DMatrix<f64>) -> Result<usize> {
    let n = a_norm.nrows();
    if !a_norm.is_square() {
        return Err(Error::Contract(format!(
            "normalised adjacency must be square, got {:?}",
            a_norm.shape()
        )));
    }
    params.check_shapes(n)?;
    Ok(n)
}

/// Standard normal `n × d` draws.
pub(crate) fn draw_noise<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
}

/// Training-mode forward pass with fresh reparameterisation noise.
pub fn vgae_forward<R: Rng + ?Sized>(
    params: &VgaeParams,
    a_norm: &DMatrix<f64>,
    activation: Activation,
    rng: &mut R,
) -> Result<VgaeForwardState> {
    let n = check_inputs(params, a_norm)?;
    let epsilon = draw_noise(n, params.out_dim(), rng);
    vgae_forward_with_noise(params, a_norm, activation, epsilon)
}

/// Evaluation-mode forward pass (`epsilon = 0`, so `latent = mu`).
pub fn vgae_forward_eval(
    params: &VgaeParams,
    a_norm: &DMatrix<f64>,
    activation: Activation,
) -> Result<VgaeForwardState> {
    let n = check_inputs(params, a_norm)?;
    vgae_forward_with_noise(params, a_norm, activation, DMatrix::zeros(n, params.out_dim()))
}

/// Forward pass with caller-supplied noise.
pub fn vgae_forward_with_noise(
    params: &VgaeParams,
    a_norm: &DMatrix<f64>,
    activation: Activation,
    epsilon: DMatrix<f64>,
) -> Result<VgaeForwardState> {
    let n = check_inputs(params, a_norm)?;
    if epsilon.shape() != (n, params.out_dim()) {
        return Err(Error::Contract(format!(
            "noise shape {:?} does not match ({n}, {})",
            epsilon.shape(),
            params.out_dim()
        )));
    }
    let hidden_pre = a_norm * &params.w0;
    let hidden_out = a_norm * hidden_pre.map(|v| activation.apply(v));
    let mu = &hidden_out * &params.w1_mu;
    let log_sigma = &hidden_out * &params.w1_sigma;
    let latent = &mu + epsilon.component_mul(&log_sigma.map(f64::exp));
    Ok(VgaeForwardState {
        mu,
        log_sigma,
        epsilon,
        latent,
        hidden_pre,
        hidden_out,
    })
}

/// Loss of one ordered pair with logit `s` and its derivative in `s`.
#[cfg(test)]
fn pair_loss(s: f64, is_edge: bool, pos_weight: f64) -> (f64, f64) {
    let e = (-s.abs()).exp();
    // softplus(s) = ln(1 + e^s), evaluated without overflow
    let softplus = s.max(0.0) + e.ln_1p();
    let sigmoid = if s >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
    if is_edge {
        (pos_weight * (softplus - s), pos_weight * (sigmoid - 1.0))
    } else {
        (softplus, sigmoid)
    }
}

/// Running sum of `ln(f)` for factors `f` in `[1, 2]`, kept as a product so
/// the logarithm is taken once per block instead of once per term.
struct LogProduct {
    sum: f64,
    product: f64,
}

impl LogProduct {
    /// Factors per block; `2^512` stays far below the largest finite `f64`.
    const BLOCK: usize = 512;

    fn new() -> Self {
        Self { sum: 0.0, product: 1.0 }
    }

    fn flush(&mut self) {
        self.sum += self.product.ln();
        self.product = 1.0;
    }
}

/// `1/(1 + e^{-s})` given `e = e^{-|s|}`.
#[inline]
fn sigmoid_from(s: f64, e: f64) -> f64 {
    let numerator = if s >= 0.0 { 1.0 } else { e };
    numerator / (1.0 + e)
}

/// Weighted cross-entropy reconstruction loss of `sigmoid(Z Zᵀ)` against
/// `A + I`, and optionally its gradient with respect to `Z`.
///
/// Per ordered pair the loss is `softplus(s)` for non-edges and
/// `w_p · softplus(−s)` for edges; both split into a piecewise-linear part
/// and `ln(1 + e^{−|s|})`. `Z Zᵀ` is symmetric, so only the upper triangle
/// is visited and off-diagonal pairs count twice. The inner loop is written
/// without data-dependent branches because edges are not predictable.
fn reconstruction(
    z: &DMatrix<f64>,
    graph: &Graph,
    weights: &ReconWeights,
    with_grad: bool,
) -> (f64, Option<DMatrix<f64>>) {
    // Monomorphised for the common small widths so the inner products unroll.
    match z.ncols() {
        1 => reconstruction_kernel::<1>(z, graph, weights, with_grad),
        2 => reconstruction_kernel::<2>(z, graph, weights, with_grad),
        3 => reconstruction_kernel::<3>(z, graph, weights, with_grad),
        4 => reconstruction_kernel::<4>(z, graph, weights, with_grad),
        _ => reconstruction_kernel::<0>(z, graph, weights, with_grad),
    }
}

/// `WIDTH = 0` reads the width from `z` at run time.
fn reconstruction_kernel<const WIDTH: usize>(
    z: &DMatrix<f64>,
    graph: &Graph,
    weights: &ReconWeights,
    with_grad: bool,
) -> (f64, Option<DMatrix<f64>>) {
    let n = z.nrows();
    let d = if WIDTH == 0 { z.ncols() } else { WIDTH };
    let pos_weight = weights.pos_weight;
    let rows: Vec<f64> = (0..n).flat_map(|i| (0..d).map(move |k| z[(i, k)])).collect();
    let scale = weights.norm / (n * n) as f64;
    let mut grad = if with_grad { vec![0.0; n * d] } else { Vec::new() };

    // Self-pairs: always positive targets, counted once.
    let mut diagonal_linear = 0.0;
    let mut diagonal_log = LogProduct::new();
    for i in 0..n {
        let zi = &rows[i * d..(i + 1) * d];
        let s: f64 = zi.iter().map(|v| v * v).sum();
        let e = (-s.abs()).exp();
        diagonal_linear += (-s).max(0.0);
        diagonal_log.product *= 1.0 + e;
        if (i + 1) % LogProduct::BLOCK == 0 {
            diagonal_log.flush();
        }
        if with_grad {
            let c = 2.0 * scale * pos_weight * (sigmoid_from(s, e) - 1.0);
            for k in 0..d {
                grad[i * d + k] += c * zi[k];
            }
        }
    }
    diagonal_log.flush();

    let mut edge_linear = 0.0;
    let mut non_edge_linear = 0.0;
    let mut edge_log = LogProduct::new();
    let mut non_edge_log = LogProduct::new();
    let mut pending = 0;
    let mut gi = vec![0.0; d];
    for i in 0..n {
        let adjacency = graph.row(i);
        let zi = &rows[i * d..(i + 1) * d];
        gi.iter_mut().for_each(|v| *v = 0.0);
        for j in (i + 1)..n {
            let zj = &rows[j * d..(j + 1) * d];
            let s: f64 = zi.iter().zip(zj).map(|(a, b)| a * b).sum();
            let edge = f64::from(adjacency[j]);
            let e = (-s.abs()).exp();
            edge_linear += edge * (-s).max(0.0);
            non_edge_linear += (1.0 - edge) * s.max(0.0);
            let edge_e = edge * e;
            edge_log.product *= 1.0 + edge_e;
            non_edge_log.product *= 1.0 + (e - edge_e);
            pending += 1;
            if pending == LogProduct::BLOCK {
                edge_log.flush();
                non_edge_log.flush();
                pending = 0;
            }
            if with_grad {
                let sigmoid = sigmoid_from(s, e);
                let g = sigmoid + edge * (pos_weight * (sigmoid - 1.0) - sigmoid);
                let c = 2.0 * scale * g;
                let gj = &mut grad[j * d..(j + 1) * d];
                for k in 0..d {
                    gi[k] += c * zj[k];
                    gj[k] += c * zi[k];
                }
            }
        }
        if with_grad {
            for k in 0..d {
                grad[i * d + k] += gi[k];
            }
        }
    }
    edge_log.flush();
    non_edge_log.flush();
    let diagonal = pos_weight * (diagonal_linear + diagonal_log.sum);
    let off_diagonal = 2.0 * (pos_weight * (edge_linear + edge_log.sum) + non_edge_linear + non_edge_log.sum);
    let grad = with_grad.then(|| DMatrix::from_row_slice(n, d, &grad));
    (scale * (diagonal + off_diagonal), grad)
}

/// KL divergence from the standard normal prior, averaged as
/// `-(1/(2n²)) Σ (1 + 2 log σ − μ² − σ²)`.
fn kl_divergence(mu: &DMatrix<f64>, log_sigma: &DMatrix<f64>) -> f64 {
    let n = mu.nrows() as f64;
    let sum: f64 = mu
        .iter()
        .zip(log_sigma.iter())
        .map(|(m, l)| 1.0 + 2.0 * l - m * m - (2.0 * l).exp())
        .sum();
    -sum / (2.0 * n * n)
}

pub(crate) fn loss_with_weights(state: &VgaeForwardState, graph: &Graph, weights: &ReconWeights) -> LossParts {
    let (recon, _) = reconstruction(&state.latent, graph, weights, false);
    let kl = kl_divergence(&state.mu, &state.log_sigma);
    LossParts {
        total: recon + kl,
        recon,
        kl,
    }
}

/// Negative evidence lower bound of a forward state.
pub fn vgae_loss(state: &VgaeForwardState, graph: &Graph) -> Result<LossParts> {
    if state.latent.nrows() != graph.n() {
        return Err(Error::Contract(format!(
            "state has {} nodes, graph has {}",
            state.latent.nrows(),
            graph.n()
        )));
    }
    Ok(loss_with_weights(state, graph, &ReconWeights::new(graph)?))
}

pub(crate) fn gradients_with_weights(
    params: &VgaeParams,
    state: &VgaeForwardState,
    graph: &Graph,
    a_norm: &DMatrix<f64>,
    activation: Activation,
    weights: &ReconWeights,
) -> (LossParts, VgaeParams) {
    let n = state.mu.nrows() as f64;
    let inv_n2 = 1.0 / (n * n);
    let (recon, grad_latent) = reconstruction(&state.latent, graph, weights, true);
    let grad_latent = grad_latent.expect("gradient requested");
    let kl = kl_divergence(&state.mu, &state.log_sigma);

    let sigma = state.log_sigma.map(f64::exp);
    let grad_mu = &grad_latent + &state.mu * inv_n2;
    let grad_log_sigma =
        grad_latent.component_mul(&state.epsilon).component_mul(&sigma) + sigma.map(|s| (s * s - 1.0) * inv_n2);

    let hidden_out = &state.hidden_out;
    let grad_w1_mu = hidden_out.tr_mul(&grad_mu);
    let grad_w1_sigma = hidden_out.tr_mul(&grad_log_sigma);
    let grad_hidden_out = &grad_mu * params.w1_mu.transpose() + &grad_log_sigma * params.w1_sigma.transpose();
    let grad_hidden_pre = a_norm
        .tr_mul(&grad_hidden_out)
        .component_mul(&state.hidden_pre.map(|v| activation.derivative(v)));
    let grad_w0 = a_norm.tr_mul(&grad_hidden_pre);

    (
        LossParts {
            total: recon + kl,
            recon,
            kl,
        },
        VgaeParams {
            w0: grad_w0,
            w1_mu: grad_w1_mu,
            w1_sigma: grad_w1_sigma,
        },
    )
}

/// Loss and pathwise gradients for fixed noise `epsilon`.
pub fn vgae_gradients(
    params: &VgaeParams,
    graph: &Graph,
    a_norm: &DMatrix<f64>,
    activation: Activation,
    epsilon: &DMatrix<f64>,
) -> Result<(LossParts, VgaeParams)> {
    if a_norm.nrows() != graph.n() {
        return Err(Error::Contract(format!(
            "normalised adjacency has {} rows, graph has {} nodes",
            a_norm.nrows(),
            graph.n()
        )));
    }
    let weights = ReconWeights::new(graph)?;
    let state = vgae_forward_with_noise(params, a_norm, activation, epsilon.clone())?;
    Ok(gradients_with_weights(
        params, &state, graph, a_norm, activation, &weights,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcn::ParamSet;
    use crate::latent::sample_erdos_renyi;
    use crate::rng::{stream_rng, Stream};
    use crate::spectral::normalized_adjacency;
    use proptest::prelude::*;

    fn fixture(n: usize, h: usize, d: usize, seed: u64) -> (Graph, DMatrix<f64>, VgaeParams, DMatrix<f64>) {
        let graph = sample_erdos_renyi(n, 0.4, &mut stream_rng(seed, Stream::Fixture)).unwrap();
        let a_norm = normalized_adjacency(&graph);
        let mut rng = stream_rng(seed, Stream::WeightInit);
        let params = VgaeParams::glorot(n, h, d, &mut rng);
        let eps = draw_noise(n, d, &mut stream_rng(seed, Stream::Noise));
        (graph, a_norm, params, eps)
    }

    fn naive_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(a.nrows(), b.ncols());
        for i in 0..a.nrows() {
            for j in 0..b.ncols() {
                let mut s = 0.0;
                for k in 0..a.ncols() {
                    s += a[(i, k)] * b[(k, j)];
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    #[test]
    fn zero_weights_give_prior_noise() {
        let (_, a_norm, params, eps) = fixture(6, 3, 2, 1);
        let zero = params.zeros_like();
        let state = vgae_forward_with_noise(&zero, &a_norm, Activation::Relu, eps.clone()).unwrap();
        assert!(state.mu.iter().all(|&v| v == 0.0));
        assert!(state.log_sigma.iter().all(|&v| v == 0.0));
        assert_eq!(state.latent, eps);
        assert_eq!(kl_divergence(&state.mu, &state.log_sigma), 0.0);
    }

    #[test]
    fn evaluation_mode_returns_mean() {
        let (_, a_norm, params, _) = fixture(8, 3, 2, 2);
        let state = vgae_forward_eval(&params, &a_norm, Activation::Relu).unwrap();
        assert_eq!(state.latent, state.mu);
    }

    #[test]
    fn forward_matches_explicit_products() {
        let (_, a_norm, params, eps) = fixture(8, 3, 2, 3);
        let state = vgae_forward_with_noise(&params, &a_norm, Activation::Relu, eps.clone()).unwrap();
        let pre = naive_product(&a_norm, &params.w0);
        let hidden = naive_product(&a_norm, &pre.map(|v| v.max(0.0)));
        let mu = naive_product(&hidden, &params.w1_mu);
        let ls = naive_product(&hidden, &params.w1_sigma);
        for i in 0..8 {
            for k in 0..2 {
                assert!((state.mu[(i, k)] - mu[(i, k)]).abs() <= 1e-12);
                assert!((state.log_sigma[(i, k)] - ls[(i, k)]).abs() <= 1e-12);
                let z = mu[(i, k)] + eps[(i, k)] * ls[(i, k)].exp();
                assert!((state.latent[(i, k)] - z).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn zero_logit_costs_log_two() {
        let (l, _) = pair_loss(0.0, false, 3.0);
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        let (l, _) = pair_loss(0.0, true, 3.0);
        assert!((l - 3.0 * std::f64::consts::LN_2).abs() < 1e-15);
        // extreme logits stay finite
        assert!(pair_loss(800.0, false, 1.0).0.is_finite());
        assert!(pair_loss(-800.0, true, 1.0).0.is_finite());
    }

    #[test]
    fn reconstruction_matches_per_pair_sum() {
        let (graph, a_norm, params, eps) = fixture(6, 3, 2, 4);
        let state = vgae_forward_with_noise(&params, &a_norm, Activation::Relu, eps).unwrap();
        let loss = vgae_loss(&state, &graph).unwrap();

        let n = 6usize;
        let mut positives = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j || graph.has_edge(i, j) {
                    positives += 1.0;
                }
            }
        }
        let total = (n * n) as f64;
        let pos_weight = (total - positives) / positives;
        let norm = total / (2.0 * (total - positives));
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..2).map(|k| state.latent[(i, k)] * state.latent[(j, k)]).sum();
                let p = 1.0 / (1.0 + (-s).exp());
                let target = i == j || graph.has_edge(i, j);
                sum += if target { -pos_weight * p.ln() } else { -(1.0 - p).ln() };
            }
        }
        let oracle = norm * sum / total;
        assert!((loss.recon - oracle).abs() <= 1e-12, "{} vs {oracle}", loss.recon);
        assert_eq!(loss.total, loss.recon + loss.kl);
    }

    #[test]
    fn blocked_logarithms_match_termwise_sum_on_long_rows() {
        // rows longer than the logarithm block, logits near zero (largest factors)
        let n = 700;
        let graph = sample_erdos_renyi(n, 0.3, &mut stream_rng(9, Stream::Fixture)).unwrap();
        let z = DMatrix::from_fn(n, 2, |i, k| 1e-3 * ((i * 7 + k * 3) % 11) as f64 - 5e-3);
        let weights = ReconWeights::new(&graph).unwrap();
        let (fast, _) = reconstruction(&z, &graph, &weights, false);
        // Neumaier-compensated, so the oracle's own rounding stays far below the tolerance
        let (mut sum, mut carry) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                let s = z[(i, 0)] * z[(j, 0)] + z[(i, 1)] * z[(j, 1)];
                let term = pair_loss(s, i == j || graph.has_edge(i, j), weights.pos_weight).0;
                let next = sum + term;
                carry += if sum.abs() >= term.abs() { (sum - next) + term } else { (term - next) + sum };
                sum = next;
            }
        }
        let sum = sum + carry;
        let oracle = weights.norm * sum / (n * n) as f64;
        assert!(((fast - oracle) / oracle).abs() <= 1e-12, "{fast} vs {oracle}");
    }

    #[test]
    fn complete_graph_has_no_reconstruction_weights() {
        assert!(ReconWeights::new(&Graph::complete(4)).is_err());
    }

    #[test]
    fn zero_weights_identity_kl_gradient_vanishes() {
        let (graph, a_norm, params, eps) = fixture(8, 3, 2, 5);
        let zero = params.zeros_like();
        let (_, grads) = vgae_gradients(&zero, &graph, &a_norm, Activation::Identity, &eps).unwrap();
        assert!(grads.w1_mu.iter().all(|&v| v == 0.0));
    }

    /// Linear model written out as plain matrix calculus, with the
    /// reconstruction gradient formed from an explicit dense `G`.
    #[test]
    fn linear_gradients_match_closed_form() {
        let n = 8;
        let (graph, a_norm, params, eps) = fixture(n, 3, 2, 6);
        let (_, grads) = vgae_gradients(&params, &graph, &a_norm, Activation::Identity, &eps).unwrap();

        let w = ReconWeights::new(&graph).unwrap();
        let propagate = &a_norm * &a_norm;
        let features = &propagate * &params.w0;
        let mu = &features * &params.w1_mu;
        let log_sigma = &features * &params.w1_sigma;
        let sigma = log_sigma.map(f64::exp);
        let z = &mu + eps.component_mul(&sigma);
        let s = &z * z.transpose();
        let nn = (n * n) as f64;
        let g = DMatrix::from_fn(n, n, |i, j| {
            let p = 1.0 / (1.0 + (-s[(i, j)]).exp());
            let coeff = w.norm / nn;
            if i == j || graph.has_edge(i, j) {
                coeff * w.pos_weight * (p - 1.0)
            } else {
                coeff * p
            }
        });
        let grad_z = (&g + g.transpose()) * &z;
        let grad_mu = &grad_z + &mu / nn;
        let grad_ls = grad_z.component_mul(&eps).component_mul(&sigma) + sigma.map(|v| (v * v - 1.0) / nn);
        let d_w1_mu = features.transpose() * &grad_mu;
        let d_w1_sigma = features.transpose() * &grad_ls;
        let d_w0 =
            propagate.transpose() * (&grad_mu * params.w1_mu.transpose() + &grad_ls * params.w1_sigma.transpose());

        for (a, b) in [
            (&grads.w0, &d_w0),
            (&grads.w1_mu, &d_w1_mu),
            (&grads.w1_sigma, &d_w1_sigma),
        ] {
            let err = (a - b).amax();
            assert!(err <= 1e-10 * b.amax().max(1.0), "closed form mismatch {err}");
        }
    }

    #[test]
    fn shape_mismatch_is_a_contract_violation() {
        let (_, a_norm, _, _) = fixture(6, 3, 2, 7);
        let wrong = VgaeParams::zeros(5, 3, 2);
        assert!(matches!(
            vgae_forward_eval(&wrong, &a_norm, Activation::Relu),
            Err(Error::Contract(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kl_is_non_negative(
            mu in prop::collection::vec(-5.0f64..5.0, 6),
            ls in prop::collection::vec(-4.0f64..4.0, 6),
        ) {
            let mu = DMatrix::from_vec(3, 2, mu);
            let ls = DMatrix::from_vec(3, 2, ls);
            prop_assert!(kl_divergence(&mu, &ls) >= 0.0);
        }
    }
}
