use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::RlaeConfig;

pub const LEAKY_SLOPE: f64 = 0.01;

/// Affine layer `y = x Wᵀ + b` with a binary connection mask on `W`.
///
/// Pruned entries of `weight` are exactly zero and never receive gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out × in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    /// 1.0 for a live connection, 0.0 for a pruned one.
    pub mask: Array2<f64>,
}

impl Layer {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
            mask: Array2::ones((output, input)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn pruned_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 0.0).count()
    }

    fn init<R: Rng>(input: usize, output: usize, prune_rate: f64, rng: &mut R) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let mut layer = Self::zeros(input, output);
        for (w, m) in layer.weight.iter_mut().zip(layer.mask.iter_mut()) {
            *w = rng.random_range(-bound..=bound);
            if rng.random::<f64>() < prune_rate {
                *m = 0.0;
                *w = 0.0;
            }
        }
        layer
            .bias
            .iter_mut()
            .for_each(|b| *b = rng.random_range(-bound..=bound));
        layer
    }
}

/// Encoder, RSR matrix and decoder of one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub encoder: Vec<Layer>,
    pub decoder: Vec<Layer>,
    /// RSR projection, `d × e`.
    pub rsr: Array2<f64>,
    /// Disconnection probability drawn for this network.
    pub prune_rate: f64,
}

pub(crate) fn layer_widths(cfg: &RlaeConfig) -> (Vec<usize>, Vec<usize>) {
    let mut enc = vec![cfg.input_dim];
    enc.extend(&cfg.encoder_hidden);
    enc.push(cfg.enc_out_dim);
    let mut dec = vec![cfg.rsr_dim];
    dec.extend(cfg.encoder_hidden.iter().rev());
    dec.push(cfg.input_dim);
    (enc, dec)
}

/// Fan-in scaled uniform weights; one disconnection rate is drawn from
/// `cfg.prune_prob_range` and applied independently to every weight entry.
pub fn init_network<R: Rng>(cfg: &RlaeConfig, rng: &mut R) -> NetworkParams {
    let [lo, hi] = cfg.prune_prob_range;
    let prune_rate = if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    };
    let (enc, dec) = layer_widths(cfg);
    let encoder = enc
        .windows(2)
        .map(|w| Layer::init(w[0], w[1], prune_rate, rng))
        .collect();
    let bound = 1.0 / (cfg.enc_out_dim as f64).sqrt();
    let rsr = Array2::from_shape_fn((cfg.rsr_dim, cfg.enc_out_dim), |_| {
        rng.random_range(-bound..=bound)
    });
    let decoder = dec
        .windows(2)
        .map(|w| Layer::init(w[0], w[1], prune_rate, rng))
        .collect();
    NetworkParams {
        encoder,
        decoder,
        rsr,
        prune_rate,
    }
}

impl NetworkParams {
    pub fn input_dim(&self) -> usize {
        self.encoder[0].input_dim()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers()
            .map(|l| l.weight.len() + l.bias.len())
            .sum::<usize>()
            + self.rsr.len()
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.encoder.iter().chain(self.decoder.iter())
    }

    /// Every trainable tensor as a flat slice: per layer weight then bias
    /// (encoder, then decoder), then the RSR matrix.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in self.encoder.iter_mut().chain(self.decoder.iter_mut()) {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.rsr.as_slice_mut().expect("standard layout"));
        out
    }

    /// Masks aligned with [`tensors_mut`](Self::tensors_mut); `None` for
    /// unmasked tensors.
    pub fn tensor_masks(&self) -> Vec<Option<&[f64]>> {
        let mut out = Vec::new();
        for l in self.layers() {
            out.push(Some(l.mask.as_slice().expect("standard layout")));
            out.push(None);
        }
        out.push(None);
        out
    }
}

/// Intermediate values of a forward pass over a batch (one row per sample).
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Layer inputs: `encoder_inputs[0]` is the batch itself.
    pub encoder_inputs: Vec<Array2<f64>>,
    pub encoder_pre: Vec<Array2<f64>>,
    /// Encoder output, `n × e`.
    pub z: Array2<f64>,
    /// RSR output `ẑ = A z`, `n × d`.
    pub z_hat: Array2<f64>,
    pub decoder_inputs: Vec<Array2<f64>>,
    pub decoder_pre: Vec<Array2<f64>>,
    /// Reconstruction of the first `x_hat.nrows()` rows.
    pub x_hat: Array2<f64>,
}

fn leaky(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        LEAKY_SLOPE * v
    }
}

pub(crate) fn leaky_grad(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

fn run_stack(
    layers: &[Layer],
    input: Array2<f64>,
    inputs: &mut Vec<Array2<f64>>,
    pres: &mut Vec<Array2<f64>>,
) -> Array2<f64> {
    let last = layers.len() - 1;
    let mut h = input;
    for (i, layer) in layers.iter().enumerate() {
        let pre = h.dot(&layer.weight.t()) + &layer.bias;
        inputs.push(h);
        h = if i == last {
            pre.clone()
        } else {
            pre.mapv(leaky)
        };
        pres.push(pre);
    }
    h
}

/// Forward pass over all rows; only the first `decode_rows` rows go through
/// the decoder.
pub fn forward_partial(
    params: &NetworkParams,
    x: ArrayView2<'_, f64>,
    decode_rows: usize,
) -> ForwardTrace {
    let mut encoder_inputs = Vec::with_capacity(params.encoder.len());
    let mut encoder_pre = Vec::with_capacity(params.encoder.len());
    let z = run_stack(
        &params.encoder,
        x.to_owned(),
        &mut encoder_inputs,
        &mut encoder_pre,
    );
    let z_hat = z.dot(&params.rsr.t());
    let mut decoder_inputs = Vec::with_capacity(params.decoder.len());
    let mut decoder_pre = Vec::with_capacity(params.decoder.len());
    let x_hat = run_stack(
        &params.decoder,
        z_hat.slice(s![..decode_rows, ..]).to_owned(),
        &mut decoder_inputs,
        &mut decoder_pre,
    );
    ForwardTrace {
        encoder_inputs,
        encoder_pre,
        z,
        z_hat,
        decoder_inputs,
        decoder_pre,
        x_hat,
    }
}

pub fn forward_batch(params: &NetworkParams, x: ArrayView2<'_, f64>) -> ForwardTrace {
    forward_partial(params, x, x.nrows())
}

/// Forward pass of a single sample.
pub fn forward(params: &NetworkParams, x: &[f64]) -> ForwardTrace {
    let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
    forward_batch(params, view)
}

/// Gradient accumulation for a stack of layers, returning the gradient with
/// respect to the stack input when `need_input_grad` is set.
pub(crate) fn backprop_stack(
    layers: &[Layer],
    inputs: &[Array2<f64>],
    pres: &[Array2<f64>],
    grad_out: Array2<f64>,
    grads: &mut [LayerGrad],
    need_input_grad: bool,
) -> Option<Array2<f64>> {
    let last = layers.len() - 1;
    let mut upstream = grad_out;
    for i in (0..layers.len()).rev() {
        let d_pre = if i == last {
            upstream
        } else {
            let mut d = upstream;
            d.zip_mut_with(&pres[i], |g, &p| *g *= leaky_grad(p));
            d
        };
        let mut dw = d_pre.t().dot(&inputs[i]);
        dw *= &layers[i].mask;
        grads[i].weight += &dw;
        grads[i].bias += &d_pre.sum_axis(Axis(0));
        if i == 0 && !need_input_grad {
            return None;
        }
        upstream = d_pre.dot(&layers[i].weight);
    }
    Some(upstream)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Gradients with the same layout as [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub encoder: Vec<LayerGrad>,
    pub decoder: Vec<LayerGrad>,
    pub rsr: Array2<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        let g = |l: &Layer| LayerGrad {
            weight: Array2::zeros(l.weight.dim()),
            bias: Array1::zeros(l.bias.len()),
        };
        Self {
            encoder: params.encoder.iter().map(g).collect(),
            decoder: params.decoder.iter().map(g).collect(),
            rsr: Array2::zeros(params.rsr.dim()),
        }
    }

    /// Flat slices aligned with [`NetworkParams::tensors_mut`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in self.encoder.iter().chain(self.decoder.iter()) {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out.push(self.rsr.as_slice().expect("standard layout"));
        out
    }
}
