use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::activation::GeneralizedTanh;
use crate::basis::{gen_elementwise, BasisSet};
use crate::error::{Result, SrmError};
use crate::srm::ActivationSet;

/// Nonlinearity applied after a layer's affine map.
#[derive(Debug, Clone)]
pub enum Activation {
    None,
    ElementwiseTanh,
    GTanh(GeneralizedTanh),
}

impl Activation {
    pub fn gtanh(basis: Arc<BasisSet>) -> Result<Self> {
        Ok(Activation::GTanh(GeneralizedTanh::from_shared(basis, true)?))
    }

    fn forward_rows(&self, pre: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Activation::None => pre.clone(),
            Activation::ElementwiseTanh => pre.map(f64::tanh),
            Activation::GTanh(act) => {
                let mut out = DMatrix::zeros(pre.nrows(), pre.ncols());
                let mut row_in = vec![0.0; pre.ncols()];
                let mut row_out = vec![0.0; pre.ncols()];
                let mut proj = Vec::new();
                for r in 0..pre.nrows() {
                    for (c, v) in row_in.iter_mut().enumerate() {
                        *v = pre[(r, c)];
                    }
                    act.apply_into(&row_in, &mut row_out, &mut proj);
                    for (c, v) in row_out.iter().enumerate() {
                        out[(r, c)] = *v;
                    }
                }
                out
            }
        }
    }

    /// Gradient with respect to the pre-activation, given the gradient with
    /// respect to the post-activation.
    fn backward_rows(
        &self,
        pre: &DMatrix<f64>,
        post: &DMatrix<f64>,
        upstream: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        match self {
            Activation::None => upstream.clone(),
            Activation::ElementwiseTanh => upstream.zip_map(post, |g, t| g * (1.0 - t * t)),
            Activation::GTanh(act) => {
                let n = pre.ncols();
                let mut out = DMatrix::zeros(pre.nrows(), n);
                let (mut x, mut g, mut dx) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
                let mut scratch = (Vec::new(), Vec::new());
                for r in 0..pre.nrows() {
                    for c in 0..n {
                        x[c] = pre[(r, c)];
                        g[c] = upstream[(r, c)];
                    }
                    act.backward_into(&x, &g, &mut dx, &mut scratch);
                    for (c, v) in dx.iter().enumerate() {
                        out[(r, c)] = *v;
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    /// `out × in`.
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            weight: DMatrix::zeros(out_dim, in_dim),
            bias: DVector::zeros(out_dim),
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }
}

/// Shape of the two reference autoencoders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    /// `input → n → input`; the latent is the encoder's affine output and the
    /// generalised tanh is applied only after it.
    Small,
    /// `input → hidden → n → hidden → input` with generalised tanh after every
    /// hidden layer, so the latent sits behind a bounded activation.
    Large { hidden: usize },
}

/// Feed-forward stack of affine layers. The analysed latent is the
/// pre-activation output of layer `latent_index`.
#[derive(Debug, Clone)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub latent_index: usize,
}

/// Every intermediate of a forward pass over a batch (one sample per row).
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: DMatrix<f64>,
    /// Affine outputs, one per layer.
    pub pre: Vec<DMatrix<f64>>,
    /// Activation outputs, one per layer.
    pub post: Vec<DMatrix<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &DMatrix<f64> {
        self.post.last().expect("model has at least one layer")
    }
}

/// Parameter gradients, laid out like the model's layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weight: Vec<DMatrix<f64>>,
    pub bias: Vec<DVector<f64>>,
    pub input: DMatrix<f64>,
}

/// Seed offset for the hidden-layer basis of the large model.
const HIDDEN_BASIS_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

impl MlpModel {
    pub fn new(layers: Vec<Layer>, latent_index: usize) -> Result<Self> {
        if layers.is_empty() {
            return Err(SrmError::InvalidInput("model needs at least one layer".into()));
        }
        if latent_index >= layers.len() {
            return Err(SrmError::InvalidInput(format!(
                "latent index {latent_index} out of range for {} layers",
                layers.len()
            )));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(SrmError::InvalidInput(format!(
                    "layer {k} outputs {} but layer {} expects {}",
                    pair[0].out_dim(),
                    k + 1,
                    pair[1].in_dim()
                )));
            }
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.in_dim() == 0 || layer.out_dim() == 0 || layer.bias.len() != layer.out_dim() {
                return Err(SrmError::InvalidInput(format!("layer {k} has invalid dimensions")));
            }
            if let Activation::GTanh(act) = &layer.activation {
                if act.dim() != layer.out_dim() {
                    return Err(SrmError::DimensionMismatch {
                        expected: layer.out_dim(),
                        got: act.dim(),
                    });
                }
            }
        }
        Ok(Self {
            layers,
            latent_index,
        })
    }

    /// Zero-initialised autoencoder whose latent activation uses `basis`.
    /// For the large variant the hidden layers use a randomly rotated `±`
    /// basis derived from `seed`.
    pub fn autoencoder(
        arch: Architecture,
        input: usize,
        basis: Arc<BasisSet>,
        seed: u64,
    ) -> Result<Self> {
        let n = basis.dim();
        let latent_act = Activation::gtanh(basis)?;
        match arch {
            Architecture::Small => Self::new(
                vec![
                    Layer::zeros(input, n, latent_act),
                    Layer::zeros(n, input, Activation::None),
                ],
                0,
            ),
            Architecture::Large { hidden } => {
                let hidden_basis = Arc::new(gen_elementwise(hidden, Some(seed ^ HIDDEN_BASIS_STREAM))?);
                let h = || Activation::gtanh(Arc::clone(&hidden_basis));
                Self::new(
                    vec![
                        Layer::zeros(input, hidden, h()?),
                        Layer::zeros(hidden, n, latent_act),
                        Layer::zeros(n, hidden, h()?),
                        Layer::zeros(hidden, input, Activation::None),
                    ],
                    1,
                )
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.layers[self.latent_index].out_dim()
    }

    /// Basis of the activation applied to the latent, if it is a generalised
    /// tanh.
    pub fn latent_basis(&self) -> Option<&BasisSet> {
        match &self.layers[self.latent_index].activation {
            Activation::GTanh(act) => Some(act.basis()),
            _ => None,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, batch: &DMatrix<f64>) -> Result<ForwardTrace> {
        if batch.ncols() != self.input_dim() {
            return Err(SrmError::DimensionMismatch {
                expected: self.input_dim(),
                got: batch.ncols(),
            });
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<DMatrix<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = post.last().unwrap_or(batch);
            let mut z = x * layer.weight.transpose();
            for mut row in z.row_iter_mut() {
                row += layer.bias.transpose();
            }
            post.push(layer.activation.forward_rows(&z));
            pre.push(z);
        }
        Ok(ForwardTrace {
            input: batch.clone(),
            pre,
            post,
        })
    }

    /// Backpropagates `d_output` (gradient of the loss with respect to the
    /// network output) through a recorded forward pass.
    pub fn backward(&self, trace: &ForwardTrace, d_output: &DMatrix<f64>) -> Gradients {
        let k = self.layers.len();
        let mut weight = Vec::with_capacity(k);
        let mut bias = Vec::with_capacity(k);
        let mut upstream = d_output.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let dz = layer
                .activation
                .backward_rows(&trace.pre[i], &trace.post[i], &upstream);
            let x = if i == 0 { &trace.input } else { &trace.post[i - 1] };
            weight.push(dz.transpose() * x);
            bias.push(dz.row_sum().transpose());
            upstream = dz * &layer.weight;
        }
        weight.reverse();
        bias.reverse();
        Gradients {
            weight,
            bias,
            input: upstream,
        }
    }

    /// Latent-layer outputs for every row of `data`.
    pub fn latents(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut trace = self.forward_until(data, self.latent_index)?;
        Ok(trace.pop().expect("at least one layer evaluated"))
    }

    fn forward_until(&self, data: &DMatrix<f64>, last: usize) -> Result<Vec<DMatrix<f64>>> {
        if data.ncols() != self.input_dim() {
            return Err(SrmError::DimensionMismatch {
                expected: self.input_dim(),
                got: data.ncols(),
            });
        }
        let mut x = data.clone();
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate().take(last + 1) {
            let mut z = &x * layer.weight.transpose();
            for mut row in z.row_iter_mut() {
                row += layer.bias.transpose();
            }
            if i == last {
                out.push(z);
                break;
            }
            x = layer.activation.forward_rows(&z);
        }
        Ok(out)
    }
}

/// Samples every weight from `N(0, 2/(fan_in + fan_out))` and zeroes every
/// bias. Layers are filled in order from a single seeded stream.
pub fn xavier_normal_init(model: &mut MlpModel, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut model.layers {
        let std = xavier_std(layer.in_dim(), layer.out_dim());
        let normal = Normal::new(0.0, std).expect("std is positive and finite");
        for w in layer.weight.iter_mut() {
            *w = normal.sample(&mut rng);
        }
        layer.bias.fill(0.0);
    }
}

pub fn xavier_std(fan_in: usize, fan_out: usize) -> f64 {
    (2.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Normalised latents of `model` over `data`, ready for the SRM engine.
pub fn extract_latents(model: &MlpModel, data: &DMatrix<f64>) -> Result<ActivationSet> {
    ActivationSet::from_raw(&model.latents(data)?)
}
