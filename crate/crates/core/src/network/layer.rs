use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// `max{0, z}`; the derivative at exactly zero is taken as zero.
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Dense layer `a = act(W x + b)` with `W` stored row-major as `rows x cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(
        rows: usize,
        cols: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Layer> {
        if rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch(format!("layer of shape {rows}x{cols}")));
        }
        if weights.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} layer given {} weights",
                weights.len()
            )));
        }
        if bias.len() != rows {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} layer given {} biases",
                bias.len()
            )));
        }
        Ok(Layer {
            rows,
            cols,
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(rows: usize, cols: usize, activation: Activation) -> Layer {
        Layer {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
            activation,
        }
    }

    /// He-normal weights, `N(0, 2 / cols)`, and zero biases.
    pub fn he_normal<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Layer {
        let normal = Normal::new(0.0, (2.0 / cols as f64).sqrt()).expect("positive std");
        let weights = (0..rows * cols).map(|_| normal.sample(rng)).collect();
        Layer {
            rows,
            cols,
            weights,
            bias: vec![0.0; rows],
            activation,
        }
    }

    pub fn identity(dim: usize, activation: Activation) -> Layer {
        let mut layer = Layer::zeros(dim, dim, activation);
        for i in 0..dim {
            layer.weights[i * dim + i] = 1.0;
        }
        layer
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.cols..(i + 1) * self.cols]
    }

    /// Writes pre-activations into `z` and activations into `a`.
    #[inline]
    pub fn forward_into(&self, input: &[f64], z: &mut [f64], a: &mut [f64]) {
        debug_assert_eq!(input.len(), self.cols);
        let input = &input[..self.cols];
        let rows = self.weights.chunks_exact(self.cols).zip(&self.bias);
        for ((w, b), (zi, ai)) in rows.zip(z.iter_mut().zip(a.iter_mut())) {
            let mut dot = 0.0;
            for (wj, xj) in w.iter().zip(input) {
                dot += wj * xj;
            }
            *zi = dot + b;
            *ai = self.activation.apply(*zi);
        }
    }

    /// Given `da = dL/da`, accumulates parameter gradients into `grad` and, when
    /// requested, writes `dL/dinput` into `dinput`.
    pub(crate) fn backward_into(
        &self,
        input: &[f64],
        z: &[f64],
        da: &[f64],
        grad: &mut LayerGrad,
        dinput: Option<&mut [f64]>,
    ) {
        let cols = self.cols;
        let input = &input[..cols];
        let mut dinput = dinput.map(|d| {
            d.iter_mut().for_each(|v| *v = 0.0);
            &mut d[..cols]
        });
        let rows = self.weights.chunks_exact(cols).zip(grad.weights.chunks_exact_mut(cols));
        for (((w, gw), gb), (&dai, &zi)) in rows.zip(grad.bias.iter_mut()).zip(da.iter().zip(z)) {
            let dz = dai * self.activation.derivative(zi);
            if dz == 0.0 {
                continue;
            }
            *gb += dz;
            for (g, x) in gw.iter_mut().zip(input) {
                *g += dz * x;
            }
            if let Some(d) = dinput.as_deref_mut() {
                for (dv, wj) in d.iter_mut().zip(w) {
                    *dv += dz * wj;
                }
            }
        }
    }
}

/// Gradient with the shape of one [`Layer`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &Layer) -> LayerGrad {
        LayerGrad {
            weights: vec![0.0; layer.weights.len()],
            bias: vec![0.0; layer.bias.len()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_derivative_at_zero_is_zero() {
        assert_eq!(Activation::Relu.derivative(0.0), 0.0);
        assert_eq!(Activation::Relu.derivative(1e-300), 1.0);
        assert_eq!(Activation::Relu.apply(-2.0), 0.0);
        assert_eq!(Activation::Linear.derivative(0.0), 1.0);
    }

    #[test]
    fn forward_small_layer() {
        let l = Layer::new(2, 2, vec![1.0, 2.0, -1.0, 0.5], vec![0.5, 0.0], Activation::Relu).unwrap();
        let mut z = [0.0; 2];
        let mut a = [0.0; 2];
        l.forward_into(&[1.0, 1.0], &mut z, &mut a);
        assert_eq!(z, [3.5, -0.5]);
        assert_eq!(a, [3.5, 0.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Layer::new(2, 2, vec![0.0; 3], vec![0.0; 2], Activation::Relu).is_err());
        assert!(Layer::new(2, 2, vec![0.0; 4], vec![0.0; 1], Activation::Relu).is_err());
        assert!(Layer::new(0, 2, vec![], vec![], Activation::Relu).is_err());
    }
}
