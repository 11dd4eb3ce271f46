//! The three-term detector objective and its analytic gradient.
//!
//! For a batch `B` of training rows:
//!
//! ```text
//! L = Σ_B ‖x − x̂‖₂                                    reconstruction
//!   + λ1 Σ_B ‖z − Aᵀẑ‖₂ + λ2 ‖AAᵀ − I‖_F                RSR
//!   + λ3 Σ_{i∈B} Σ_{j∈N(i)} w_ij ‖ẑ_i − ẑ_j‖₂²          local neighbourhood
//! ```
//!
//! Neighbours outside the batch are pushed through the encoder as well, so the
//! neighbourhood term and its gradient are exact for every batch.

use std::collections::HashMap;

use ndarray::{s, Array2, ArrayView2};

use super::network::{backprop_stack, forward_partial, ForwardTrace, Gradients, NetworkParams};
use super::RlaeConfig;
use crate::error::Result;
use crate::linalg::{knn_search, lle_weights, DenseMatrix, LocalWeights};

/// Neighbours and reconstruction weights of every training row, computed once
/// on the raw inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGraph {
    pub rows: Vec<LocalWeights>,
}

impl LocalGraph {
    pub fn build(data: &DenseMatrix, k: usize, reg: f64) -> Result<Self> {
        let rows = (0..data.rows())
            .map(|i| {
                let nb = knn_search(data, i, k)?;
                lle_weights(data, &nb, reg)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Rows needed to evaluate the objective on a batch: the batch itself first,
/// followed by any out-of-batch neighbours.
#[derive(Debug, Clone)]
pub struct Batch {
    /// Dataset row of each batch position.
    pub rows: Vec<usize>,
    pub batch_len: usize,
    pub inputs: Array2<f64>,
    /// `(batch position, [(position, weight)])` for the neighbourhood term.
    pub neighbours: Vec<Vec<(usize, f64)>>,
}

impl Batch {
    pub fn new(data: &DenseMatrix, batch: &[usize], graph: Option<&LocalGraph>) -> Self {
        let mut rows = batch.to_vec();
        let mut pos: HashMap<usize, usize> =
            batch.iter().enumerate().map(|(p, &r)| (r, p)).collect();
        let mut neighbours = Vec::new();
        if let Some(graph) = graph {
            for &r in batch {
                let lw = &graph.rows[r];
                let entry = lw
                    .neighbour_indices
                    .iter()
                    .zip(&lw.weights)
                    .map(|(&j, &w)| {
                        let p = *pos.entry(j).or_insert_with(|| {
                            rows.push(j);
                            rows.len() - 1
                        });
                        (p, w)
                    })
                    .collect();
                neighbours.push(entry);
            }
        }
        let cols = data.cols();
        let mut inputs = Array2::zeros((rows.len(), cols));
        for (p, &r) in rows.iter().enumerate() {
            inputs
                .row_mut(p)
                .as_slice_mut()
                .expect("standard layout")
                .copy_from_slice(data.row(r));
        }
        Self {
            rows,
            batch_len: batch.len(),
            inputs,
            neighbours,
        }
    }

    pub fn batch_inputs(&self) -> ArrayView2<'_, f64> {
        self.inputs.slice(s![..self.batch_len, ..])
    }
}

/// Values of the individual objective terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub reconstruction: f64,
    /// `λ1 Σ ‖z − Aᵀẑ‖`
    pub projection: f64,
    /// `λ2 ‖AAᵀ − I‖_F`
    pub orthogonality: f64,
    /// Unweighted neighbourhood cost; enters the total multiplied by λ3.
    pub neighbourhood: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn rsr(&self) -> f64 {
        self.projection + self.orthogonality
    }
}

fn row_norms(m: &Array2<f64>) -> Vec<f64> {
    m.outer_iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

/// `Σ ‖x − x̂‖₂` over the decoded rows.
pub fn loss_ae(inputs: ArrayView2<'_, f64>, trace: &ForwardTrace) -> f64 {
    let n = trace.x_hat.nrows();
    row_norms(&(&trace.x_hat - &inputs.slice(s![..n, ..])))
        .iter()
        .sum()
}

/// `λ1 Σ ‖z − Aᵀẑ‖₂ + λ2 ‖AAᵀ − I_d‖_F`, the projection sum running over the
/// first `rows` samples of the trace.
pub fn loss_rsr(
    params: &NetworkParams,
    trace: &ForwardTrace,
    rows: usize,
    cfg: &RlaeConfig,
) -> f64 {
    let (p, o) = rsr_terms(params, trace, rows, cfg);
    p + o
}

fn rsr_terms(
    params: &NetworkParams,
    trace: &ForwardTrace,
    rows: usize,
    cfg: &RlaeConfig,
) -> (f64, f64) {
    let a = &params.rsr;
    let z = trace.z.slice(s![..rows, ..]);
    let z_hat = trace.z_hat.slice(s![..rows, ..]);
    let resid = &z - &z_hat.dot(a);
    let projection = cfg.lambda1 * row_norms(&resid).iter().sum::<f64>();
    let gram = a.dot(&a.t()) - Array2::<f64>::eye(a.nrows());
    let orthogonality = cfg.lambda2 * gram.iter().map(|v| v * v).sum::<f64>().sqrt();
    (projection, orthogonality)
}

/// `Σ_i Σ_j w_ij ‖ẑ_i − ẑ_j‖₂²` over the batch neighbourhoods.
pub fn loss_lne(trace: &ForwardTrace, batch: &Batch) -> f64 {
    let mut total = 0.0;
    for (i, nbrs) in batch.neighbours.iter().enumerate() {
        let zi = trace.z_hat.row(i);
        for &(j, w) in nbrs {
            let zj = trace.z_hat.row(j);
            let d2: f64 = zi
                .iter()
                .zip(zj.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            total += w * d2;
        }
    }
    total
}

fn uses_neighbourhood(cfg: &RlaeConfig) -> bool {
    cfg.lambda3 != 0.0
}

pub(crate) fn forward_for(params: &NetworkParams, batch: &Batch) -> ForwardTrace {
    forward_partial(params, batch.inputs.view(), batch.batch_len)
}

/// Objective value on a batch.
pub fn loss_total(params: &NetworkParams, batch: &Batch, cfg: &RlaeConfig) -> LossBreakdown {
    let trace = forward_for(params, batch);
    breakdown(params, batch, &trace, cfg)
}

fn breakdown(
    params: &NetworkParams,
    batch: &Batch,
    trace: &ForwardTrace,
    cfg: &RlaeConfig,
) -> LossBreakdown {
    let reconstruction = loss_ae(batch.inputs.view(), trace);
    let (projection, orthogonality) = rsr_terms(params, trace, batch.batch_len, cfg);
    let neighbourhood = if uses_neighbourhood(cfg) {
        loss_lne(trace, batch)
    } else {
        0.0
    };
    LossBreakdown {
        reconstruction,
        projection,
        orthogonality,
        neighbourhood,
        total: reconstruction + projection + orthogonality + cfg.lambda3 * neighbourhood,
    }
}

/// Objective value and its analytic gradient on a batch. Pruned weights get a
/// gradient of exactly zero; at a norm kink (zero residual) the subgradient 0
/// is used.
pub fn backward(
    params: &NetworkParams,
    batch: &Batch,
    cfg: &RlaeConfig,
) -> (LossBreakdown, Gradients) {
    let trace = forward_for(params, batch);
    let loss = breakdown(params, batch, &trace, cfg);
    let mut grads = Gradients::zeros_like(params);
    let nb = batch.batch_len;
    let a = &params.rsr;

    // reconstruction: d‖r‖/dx̂ = r / ‖r‖
    let mut d_xhat = &trace.x_hat - &batch.batch_inputs();
    for mut row in d_xhat.outer_iter_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        } else {
            row.fill(0.0);
        }
    }
    let d_zhat_dec = backprop_stack(
        &params.decoder,
        &trace.decoder_inputs,
        &trace.decoder_pre,
        d_xhat,
        &mut grads.decoder,
        true,
    )
    .expect("input gradient requested");

    let mut d_zhat = Array2::<f64>::zeros(trace.z_hat.dim());
    d_zhat.slice_mut(s![..nb, ..]).assign(&d_zhat_dec);

    if uses_neighbourhood(cfg) {
        let scale = 2.0 * cfg.lambda3;
        for (i, nbrs) in batch.neighbours.iter().enumerate() {
            for &(j, w) in nbrs {
                let diff = (&trace.z_hat.row(i) - &trace.z_hat.row(j)) * (scale * w);
                {
                    let mut gi = d_zhat.row_mut(i);
                    gi += &diff;
                }
                let mut gj = d_zhat.row_mut(j);
                gj -= &diff;
            }
        }
    }

    // ẑ = z Aᵀ
    grads.rsr += &d_zhat.t().dot(&trace.z);
    let mut d_z = d_zhat.dot(a);

    if cfg.lambda1 != 0.0 {
        let z_b = trace.z.slice(s![..nb, ..]);
        let zh_b = trace.z_hat.slice(s![..nb, ..]);
        let mut g = &z_b - &zh_b.dot(a);
        for mut row in g.outer_iter_mut() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|v| cfg.lambda1 * v / norm);
            } else {
                row.fill(0.0);
            }
        }
        // r = (I − AᵀA) z:  dr/dz = I − AᵀA,  dL/dA = −(ẑ gᵀ + (A g) zᵀ)
        let ag = g.dot(&a.t());
        let dz_proj = &g - &ag.dot(a);
        {
            let mut head = d_z.slice_mut(s![..nb, ..]);
            head += &dz_proj;
        }
        grads.rsr -= &zh_b.t().dot(&g);
        grads.rsr -= &ag.t().dot(&z_b);
    }

    if cfg.lambda2 != 0.0 {
        let m = a.dot(&a.t()) - Array2::<f64>::eye(a.nrows());
        let f = m.iter().map(|v| v * v).sum::<f64>().sqrt();
        if f > 0.0 {
            grads.rsr += &(m.dot(a) * (2.0 * cfg.lambda2 / f));
        }
    }

    backprop_stack(
        &params.encoder,
        &trace.encoder_inputs,
        &trace.encoder_pre,
        d_z,
        &mut grads.encoder,
        false,
    );
    (loss, grads)
}

/// Per-row reconstruction error `‖x − x̂‖₂`.
pub fn reconstruction_errors(params: &NetworkParams, x: ArrayView2<'_, f64>) -> Vec<f64> {
    let trace = forward_partial(params, x, x.nrows());
    row_norms(&(&trace.x_hat - &x))
}
