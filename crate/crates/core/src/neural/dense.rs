//! Fully connected layers with hand-written backward passes.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, RngSeed};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu(a) => {
                if z > 0.0 {
                    z
                } else {
                    a * z
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative at pre-activation `z` with output `y`.
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => f64::from(u8::from(z > 0.0)),
            Activation::LeakyRelu(a) => {
                if z > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "LayerRecord", try_from = "LayerRecord")]
pub struct DenseLayer {
    /// `[in, out]`
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub activation: Activation,
}

/// Checkpoint form of a layer: dims plus row-major buffers.
#[derive(Serialize, Deserialize)]
struct LayerRecord {
    input_dim: usize,
    output_dim: usize,
    activation: Activation,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl From<DenseLayer> for LayerRecord {
    fn from(l: DenseLayer) -> Self {
        let (input_dim, output_dim) = l.weights.dim();
        LayerRecord {
            input_dim,
            output_dim,
            activation: l.activation,
            weights: l.weights.iter().copied().collect(),
            biases: l.biases.to_vec(),
        }
    }
}

impl TryFrom<LayerRecord> for DenseLayer {
    type Error = Error;

    fn try_from(r: LayerRecord) -> Result<Self> {
        if r.biases.len() != r.output_dim {
            return Err(Error::Dimension(format!("{} biases for {} outputs", r.biases.len(), r.output_dim)));
        }
        let weights = Array2::from_shape_vec((r.input_dim, r.output_dim), r.weights)
            .map_err(|e| Error::Dimension(format!("layer weights: {e}")))?;
        Ok(DenseLayer { weights, biases: Array1::from(r.biases), activation: r.activation })
    }
}

/// Per-layer `(dW, db)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrads {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl DenseGrads {
    /// Same order as [`DenseNet::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

/// Activations kept for the backward pass; `values[0]` is the input and
/// `values[l + 1]` the output of layer `l`.
#[derive(Clone, Debug)]
pub struct Trace {
    values: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

impl Trace {
    pub fn output(&self) -> &Array2<f64> {
        self.values.last().expect("trace holds the input")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetRecord")]
pub struct DenseNet {
    layers: Vec<DenseLayer>,
}

#[derive(Deserialize)]
struct NetRecord {
    layers: Vec<DenseLayer>,
}

impl TryFrom<NetRecord> for DenseNet {
    type Error = Error;

    fn try_from(r: NetRecord) -> Result<Self> {
        DenseNet::new(r.layers)
    }
}

impl DenseNet {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("network has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.ncols() != l.biases.len() {
                return Err(Error::Dimension(format!("layer {i}: {} outputs, {} biases", l.weights.ncols(), l.biases.len())));
            }
            if l.weights.iter().chain(l.biases.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("layer {i} has non-finite parameters")));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].weights.ncols() != pair[1].weights.nrows() {
                return Err(Error::Dimension(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    pair[0].weights.ncols(),
                    i + 1,
                    pair[1].weights.nrows()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// `dims = [in, h1, ..., out]`, weights `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, zero biases.
    pub fn mlp(dims: &[usize], hidden: Activation, output: Activation, seed: RngSeed) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Precondition(format!("bad layer sizes {dims:?}")));
        }
        let mut rng = seed.rng();
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let bound = 1.0 / (dims[i] as f64).sqrt();
                DenseLayer {
                    weights: Array2::from_shape_simple_fn((dims[i], dims[i + 1]), || rng.random_range(-bound..=bound)),
                    biases: Array1::zeros(dims[i + 1]),
                    activation: if i + 1 == n { output } else { hidden },
                }
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weights.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Weights row-major then biases, layer by layer.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.biases.iter());
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::Dimension(format!("{} values for {} parameters", flat.len(), self.n_params())));
        }
        let mut pos = 0;
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = flat[pos];
                pos += 1;
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension(format!("input has {} columns, network takes {}", x.ncols(), self.input_dim())));
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut h = x.to_owned();
        for l in &self.layers {
            let mut z = h.dot(&l.weights) + &l.biases;
            z.mapv_inplace(|v| l.activation.apply(v));
            h = z;
        }
        Ok(h)
    }

    pub fn forward_trace(&self, x: ArrayView2<'_, f64>) -> Result<Trace> {
        self.check_input(&x)?;
        let mut values = vec![x.to_owned()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let z = values.last().expect("non-empty").dot(&l.weights) + &l.biases;
            values.push(z.mapv(|v| l.activation.apply(v)));
            pre.push(z);
        }
        Ok(Trace { values, pre })
    }

    /// Gradients of `sum(upstream * forward(x))` w.r.t. parameters and input.
    pub fn backward(&self, x: ArrayView2<'_, f64>, upstream: ArrayView2<'_, f64>) -> Result<(DenseGrads, Array2<f64>)> {
        let trace = self.forward_trace(x)?;
        self.backward_trace(&trace, upstream)
    }

    pub fn backward_trace(&self, trace: &Trace, upstream: ArrayView2<'_, f64>) -> Result<(DenseGrads, Array2<f64>)> {
        if upstream.dim() != trace.output().dim() {
            return Err(Error::Dimension(format!(
                "upstream gradient {:?} does not match output {:?}",
                upstream.dim(),
                trace.output().dim()
            )));
        }
        let mut g = upstream.to_owned();
        let mut grads = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate().rev() {
            let z = &trace.pre[i];
            let y = &trace.values[i + 1];
            ndarray::Zip::from(&mut g).and(z).and(y).for_each(|g, &z, &y| *g *= l.activation.derivative(z, y));
            let dw = trace.values[i].t().dot(&g);
            let db = g.sum_axis(Axis(0));
            g = g.dot(&l.weights.t());
            grads.push((dw, db));
        }
        grads.reverse();
        Ok((DenseGrads { layers: grads }, g))
    }
}
