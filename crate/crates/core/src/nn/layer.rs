//! Layer specification, storage, and Xavier initialization.

use crate::error::{Error, Result};
use crate::rng::SeedRng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Linear,
    Softmax,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Linear => 1,
            Activation::Softmax => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Sigmoid),
            1 => Some(Activation::Linear),
            2 => Some(Activation::Softmax),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
            Activation::Softmax => "softmax",
        }
    }
}

/// Shape and activation of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_dim: usize, output_dim: usize, activation: Activation) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::parameter("layer dims must be positive"));
        }
        Ok(LayerSpec { input_dim, output_dim, activation })
    }

    pub fn weight_count(&self) -> usize {
        self.input_dim * self.output_dim
    }
}

/// One dense layer: row-major weights with shape `(output_dim, input_dim)`
/// plus a bias vector of length `output_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<F: Scalar> {
    pub spec: LayerSpec,
    pub weights: Vec<F>,
    pub biases: Vec<F>,
}

impl<F: Scalar> DenseLayer<F> {
    pub fn new(spec: LayerSpec, weights: Vec<F>, biases: Vec<F>) -> Result<Self> {
        if weights.len() != spec.weight_count() || biases.len() != spec.output_dim {
            return Err(Error::shape(format!(
                "layer {}x{} expects {} weights and {} biases, got {} and {}",
                spec.output_dim,
                spec.input_dim,
                spec.weight_count(),
                spec.output_dim,
                weights.len(),
                biases.len()
            )));
        }
        if weights.iter().chain(biases.iter()).any(|v| !v.is_finite()) {
            return Err(Error::data("layer parameters must be finite"));
        }
        Ok(DenseLayer { spec, weights, biases })
    }

    /// All-zero parameters; used for the decision layer before fine-tuning.
    pub fn zeros(spec: LayerSpec) -> Self {
        DenseLayer {
            spec,
            weights: vec![F::zero(); spec.weight_count()],
            biases: vec![F::zero(); spec.output_dim],
        }
    }

    #[inline]
    pub fn weight_row(&self, o: usize) -> &[F] {
        let start = o * self.spec.input_dim;
        &self.weights[start..start + self.spec.input_dim]
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

/// Uniform Xavier/Glorot initialization.
///
/// Weights are drawn uniformly from `[-b, b]` with
/// `b = sqrt(6 / (fan_in + fan_out))`; biases start at zero.
pub fn xavier_init<F: Scalar>(spec: LayerSpec, rng: &mut SeedRng) -> DenseLayer<F> {
    let bound = (6.0 / (spec.input_dim + spec.output_dim) as f64).sqrt();
    let weights = (0..spec.weight_count())
        .map(|_| F::from_f64(rng.range(-bound, bound)))
        .collect();
    DenseLayer { spec, weights, biases: vec![F::zero(); spec.output_dim] }
}
