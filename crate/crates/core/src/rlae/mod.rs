//! Robust subspace local recovery autoencoder: a randomly pruned autoencoder
//! whose latent code passes through a linear RSR projection, trained with a
//! reconstruction + robust-subspace + local-neighbourhood objective.

mod loss;
mod network;
mod optim;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DEFAULT_LLE_REG};
use crate::seed::rng_from_seed;

pub use loss::{
    backward, loss_ae, loss_lne, loss_rsr, loss_total, reconstruction_errors, Batch, LocalGraph,
    LossBreakdown,
};
pub use network::{
    forward, forward_batch, forward_partial, init_network, ForwardTrace, Gradients, Layer,
    LayerGrad, NetworkParams, LEAKY_SLOPE,
};
pub use optim::Adam;

/// Hyperparameters of one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlaeConfig {
    pub input_dim: usize,
    /// Encoder hidden widths; the decoder mirrors them.
    pub encoder_hidden: Vec<usize>,
    /// Encoder output dimension `e`.
    pub enc_out_dim: usize,
    /// RSR dimension `d` (rows of `A`).
    pub rsr_dim: usize,
    pub k_neighbours: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub epochs: usize,
    /// `None` means `min(128, N)`.
    pub batch_size: Option<usize>,
    pub learning_rate: f64,
    pub prune_prob_range: [f64; 2],
    /// Relative Tikhonov term for the neighbourhood weights.
    pub lle_reg: f64,
    pub seed: u64,
}

impl RlaeConfig {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            encoder_hidden: vec![128, 64],
            enc_out_dim: 64,
            rsr_dim: 32,
            k_neighbours: 5,
            lambda1: 0.1,
            lambda2: 0.1,
            lambda3: 0.05,
            epochs: 50,
            batch_size: None,
            learning_rate: 1e-3,
            prune_prob_range: [0.2, 0.5],
            lle_reg: DEFAULT_LLE_REG,
            seed: 0,
        }
    }

    /// Power on the reconstruction norm; fixed.
    pub fn p(&self) -> u32 {
        1
    }

    /// Power on the RSR norms; fixed.
    pub fn q(&self) -> u32 {
        1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.input_dim == 0 || self.enc_out_dim == 0 || self.rsr_dim == 0 {
            return bad("layer dimensions must be positive".into());
        }
        if self.encoder_hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        if self.rsr_dim > self.enc_out_dim {
            return bad(format!(
                "rsr_dim ({}) must not exceed enc_out_dim ({})",
                self.rsr_dim, self.enc_out_dim
            ));
        }
        if self.k_neighbours == 0 {
            return bad("k_neighbours must be positive".into());
        }
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("lle_reg", self.lle_reg),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive".into());
        }
        if self.batch_size == Some(0) {
            return bad("batch_size must be positive".into());
        }
        let [lo, hi] = self.prune_prob_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return bad(format!(
                "prune range [{lo}, {hi}] must satisfy 0 <= low <= high <= 1"
            ));
        }
        if self.lambda3 >= self.lambda1 && self.lambda3 > 0.0 {
            log::debug!(
                "lambda3 ({}) >= lambda1 ({}); a smaller lambda3 is recommended",
                self.lambda3,
                self.lambda1
            );
        }
        Ok(())
    }

    pub fn effective_batch_size(&self, n: usize) -> usize {
        self.batch_size.unwrap_or(128).min(n).max(1)
    }
}

/// A trained detector.
#[derive(Debug, Clone, PartialEq)]
pub struct RlaeModel {
    pub config: RlaeConfig,
    pub params: NetworkParams,
    pub training_rows: usize,
    /// Sum of the mini-batch objectives over each epoch.
    pub loss_history: Vec<f64>,
}

/// Fit one detector on the rows of `data` (unsupervised).
pub fn train(data: &DenseMatrix, cfg: &RlaeConfig) -> Result<RlaeModel> {
    train_with(data, cfg, |_, _| {})
}

/// [`train`] with a callback invoked after every optimizer step with the
/// epoch index and the current parameters.
pub fn train_with<F>(data: &DenseMatrix, cfg: &RlaeConfig, mut on_step: F) -> Result<RlaeModel>
where
    F: FnMut(usize, &NetworkParams),
{
    cfg.validate()?;
    if data.cols() != cfg.input_dim {
        return Err(Error::InvalidArgument(format!(
            "data has {} columns, model expects {}",
            data.cols(),
            cfg.input_dim
        )));
    }
    let n = data.rows();
    if n <= cfg.k_neighbours {
        return Err(Error::InvalidArgument(format!(
            "need more than k = {} rows, got {n}",
            cfg.k_neighbours
        )));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut params = init_network(cfg, &mut rng);
    let graph = if cfg.lambda3 != 0.0 {
        Some(LocalGraph::build(data, cfg.k_neighbours, cfg.lle_reg)?)
    } else {
        None
    };
    let mut adam = Adam::new(
        cfg.learning_rate,
        params
            .tensors_mut()
            .iter()
            .map(|t| t.len())
            .collect::<Vec<_>>(),
    );
    let batch_size = cfg.effective_batch_size(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch_size) {
            let batch = Batch::new(data, chunk, graph.as_ref());
            let (loss, grads) = backward(&params, &batch, cfg);
            if !loss.total.is_finite() {
                return Err(Error::NumericFailure(format!(
                    "objective diverged in epoch {epoch}"
                )));
            }
            epoch_loss += loss.total;
            adam.step(params.tensors_mut(), grads.tensors());
            on_step(epoch, &params);
        }
        loss_history.push(epoch_loss);
    }
    Ok(RlaeModel {
        config: cfg.clone(),
        params,
        training_rows: n,
        loss_history,
    })
}

impl RlaeModel {
    /// Reconstruction error `‖x − x̂‖₂` of every row; higher is more anomalous.
    pub fn score(&self, data: &DenseMatrix) -> Result<Vec<f64>> {
        score(self, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), &ModelFile::from(self))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mf: ModelFile = serde_json::from_reader(BufReader::new(file))?;
        mf.into_model()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<ModelFile>(s)?.into_model()
    }
}

pub fn score(model: &RlaeModel, data: &DenseMatrix) -> Result<Vec<f64>> {
    let d = model.params.input_dim();
    if data.cols() != d {
        return Err(Error::InvalidArgument(format!(
            "data has {} columns, model expects {d}",
            data.cols()
        )));
    }
    const CHUNK: usize = 1024;
    let view = data.view();
    let mut out = Vec::with_capacity(data.rows());
    let mut start = 0;
    while start < data.rows() {
        let end = (start + CHUNK).min(data.rows());
        out.extend(reconstruction_errors(
            &model.params,
            view.slice(ndarray::s![start..end, ..]),
        ));
        start = end;
    }
    Ok(out)
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerFile {
    rows: usize,
    cols: usize,
    weight: Vec<f64>,
    bias: Vec<f64>,
    mask: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    config: RlaeConfig,
    prune_rate: f64,
    encoder: Vec<LayerFile>,
    decoder: Vec<LayerFile>,
    rsr: MatrixFile,
    training_rows: usize,
    loss_history: Vec<f64>,
}

impl From<&Layer> for LayerFile {
    fn from(l: &Layer) -> Self {
        Self {
            rows: l.weight.nrows(),
            cols: l.weight.ncols(),
            weight: l.weight.iter().copied().collect(),
            bias: l.bias.to_vec(),
            mask: l.mask.iter().map(|&m| u8::from(m != 0.0)).collect(),
        }
    }
}

impl LayerFile {
    fn into_layer(self) -> Result<Layer> {
        let shape_err = || Error::InvalidData("layer arrays do not match declared shape".into());
        if self.bias.len() != self.rows || self.mask.len() != self.rows * self.cols {
            return Err(shape_err());
        }
        let weight =
            Array2::from_shape_vec((self.rows, self.cols), self.weight).map_err(|_| shape_err())?;
        let mask = Array2::from_shape_vec(
            (self.rows, self.cols),
            self.mask.iter().map(|&m| f64::from(m.min(1))).collect(),
        )
        .map_err(|_| shape_err())?;
        if weight
            .iter()
            .zip(mask.iter())
            .any(|(&w, &m)| m == 0.0 && w != 0.0)
        {
            return Err(Error::InvalidData("pruned weight is non-zero".into()));
        }
        Ok(Layer {
            weight,
            bias: Array1::from(self.bias),
            mask,
        })
    }
}

impl From<&RlaeModel> for ModelFile {
    fn from(m: &RlaeModel) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            config: m.config.clone(),
            prune_rate: m.params.prune_rate,
            encoder: m.params.encoder.iter().map(LayerFile::from).collect(),
            decoder: m.params.decoder.iter().map(LayerFile::from).collect(),
            rsr: MatrixFile {
                rows: m.params.rsr.nrows(),
                cols: m.params.rsr.ncols(),
                values: m.params.rsr.iter().copied().collect(),
            },
            training_rows: m.training_rows,
            loss_history: m.loss_history.clone(),
        }
    }
}

impl ModelFile {
    fn into_model(self) -> Result<RlaeModel> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidData(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        self.config.validate()?;
        let encoder = self
            .encoder
            .into_iter()
            .map(LayerFile::into_layer)
            .collect::<Result<Vec<_>>>()?;
        let decoder = self
            .decoder
            .into_iter()
            .map(LayerFile::into_layer)
            .collect::<Result<Vec<_>>>()?;
        let rsr = Array2::from_shape_vec((self.rsr.rows, self.rsr.cols), self.rsr.values)
            .map_err(|_| Error::InvalidData("RSR matrix does not match its shape".into()))?;
        let (enc_w, dec_w) = network::layer_widths(&self.config);
        let chain_ok = |layers: &[Layer], widths: &[usize]| {
            layers.len() + 1 == widths.len()
                && layers
                    .iter()
                    .zip(widths.windows(2))
                    .all(|(l, w)| l.input_dim() == w[0] && l.output_dim() == w[1])
        };
        if !chain_ok(&encoder, &enc_w)
            || !chain_ok(&decoder, &dec_w)
            || rsr.dim() != (self.config.rsr_dim, self.config.enc_out_dim)
        {
            return Err(Error::InvalidData(
                "layer shapes do not match the stored configuration".into(),
            ));
        }
        Ok(RlaeModel {
            config: self.config,
            params: NetworkParams {
                encoder,
                decoder,
                rsr,
                prune_rate: self.prune_rate,
            },
            training_rows: self.training_rows,
            loss_history: self.loss_history,
        })
    }
}
