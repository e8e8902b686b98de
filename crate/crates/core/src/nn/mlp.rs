//! Fully connected ReLU networks with exact reverse-mode gradients.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Width of both hidden layers used by every actor and critic.
pub const HIDDEN_WIDTH: usize = 256;

/// Interpretation of the last layer's output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputHead {
    Identity,
    /// Bounded deterministic actor output.
    Tanh,
    /// Output holds `[mean | log_std]`, each half the output width.
    Gaussian,
}

impl OutputHead {
    pub fn code(self) -> u32 {
        match self {
            OutputHead::Identity => 0,
            OutputHead::Tanh => 1,
            OutputHead::Gaussian => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(OutputHead::Identity),
            1 => Some(OutputHead::Tanh),
            2 => Some(OutputHead::Gaussian),
            _ => None,
        }
    }
}

/// One affine layer. `weight` is laid out `inputs x outputs` so a batch
/// forward pass is `x.dot(weight) + bias`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }
}

/// Parameters of a multilayer perceptron with ReLU hidden activations.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
    head: OutputHead,
}

/// Parameter gradients, shaped like the network they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<Dense>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    /// Input to each layer (post-ReLU output of the previous one).
    inputs: Vec<Array2<f64>>,
    /// Final output after the head activation.
    output: Array2<f64>,
}

impl Tape {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

impl Mlp {
    /// Network with layer widths `sizes[0] -> sizes[1] -> ... -> sizes[n]`,
    /// weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], head: OutputHead, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes, head)?;
        net.reinitialize(rng);
        Ok(net)
    }

    pub fn zeros(sizes: &[usize], head: OutputHead) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::config(format!("invalid layer sizes {sizes:?}")));
        }
        if head == OutputHead::Gaussian && sizes[sizes.len() - 1] % 2 != 0 {
            return Err(Error::config("gaussian head needs an even output width"));
        }
        let layers = sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(Self { layers, head })
    }

    pub fn from_layers(layers: Vec<Dense>, head: OutputHead) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::config("layer shapes do not chain"));
            }
        }
        for l in &layers {
            if l.bias.len() != l.outputs() {
                return Err(Error::config("bias length does not match layer width"));
            }
        }
        Ok(Self { layers, head })
    }

    pub fn reinitialize<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for layer in &mut self.layers {
            let bound = 1.0 / (layer.inputs() as f64).sqrt();
            layer
                .weight
                .mapv_inplace(|_| rng.random_range(-bound..=bound));
            layer.bias.mapv_inplace(|_| rng.random_range(-bound..=bound));
        }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn head(&self) -> OutputHead {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(Dense::outputs));
        sizes
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.head == other.head && self.sizes() == other.sizes()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weight.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite())
        })
    }

    /// Parameter storage as contiguous slices in layer order (weight, bias).
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out
    }

    /// Forward pass for a single input vector.
    pub fn forward_one(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, input.len()), input)
            .map_err(|e| Error::config(e.to_string()))?;
        Ok(self.forward(x)?.into_raw_vec_and_offset().0)
    }

    /// Batch forward pass, one sample per row.
    pub fn forward(&self, input: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(input.ncols())?;
        let last = self.layers.len() - 1;
        let mut x = self.affine(0, input);
        if last > 0 {
            relu_inplace(&mut x);
        }
        for i in 1..=last {
            x = self.affine(i, x.view());
            if i < last {
                relu_inplace(&mut x);
            }
        }
        self.apply_head(&mut x);
        Ok(x)
    }

    /// Batch forward pass that records activations for [`Mlp::backward`].
    pub fn forward_tape(&self, input: ArrayView2<f64>) -> Result<Tape> {
        self.check_input(input.ncols())?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        inputs.push(input.to_owned());
        for i in 0..=last {
            let mut z = self.affine(i, inputs[i].view());
            if i < last {
                relu_inplace(&mut z);
                inputs.push(z);
            } else {
                self.apply_head(&mut z);
                return Ok(Tape { inputs, output: z });
            }
        }
        unreachable!()
    }

    /// Reverse-mode pass. `grad_output` is dL/d(output) for every row of the
    /// taped batch; returns dL/d(params) summed over the batch together with
    /// dL/d(input).
    pub fn backward(&self, tape: &Tape, grad_output: &Array2<f64>) -> Result<(MlpGrads, Array2<f64>)> {
        self.backward_impl(tape, grad_output, true)
            .map(|(g, x)| (g.expect("weights requested"), x))
    }

    /// Like [`Mlp::backward`] but only propagates to the input.
    pub fn backward_input(&self, tape: &Tape, grad_output: &Array2<f64>) -> Result<Array2<f64>> {
        self.backward_impl(tape, grad_output, false).map(|(_, x)| x)
    }

    fn backward_impl(
        &self,
        tape: &Tape,
        grad_output: &Array2<f64>,
        want_weights: bool,
    ) -> Result<(Option<MlpGrads>, Array2<f64>)> {
        if grad_output.dim() != tape.output.dim() {
            return Err(Error::config(format!(
                "upstream gradient shape {:?} does not match output {:?}",
                grad_output.dim(),
                tape.output.dim()
            )));
        }
        if grad_output.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite upstream gradient"));
        }
        let mut g = grad_output.clone();
        if self.head == OutputHead::Tanh {
            g.zip_mut_with(&tape.output, |gi, &y| *gi *= 1.0 - y * y);
        }
        let mut grads: Vec<Dense> = Vec::new();
        for i in (0..self.layers.len()).rev() {
            let x = &tape.inputs[i];
            if want_weights {
                grads.push(Dense {
                    weight: x.t().dot(&g).as_standard_layout().into_owned(),
                    bias: g.sum_axis(Axis(0)),
                });
            }
            let mut gin = g.dot(&self.layers[i].weight.t());
            if i > 0 {
                gin.zip_mut_with(x, |gi, &xi| {
                    if xi <= 0.0 {
                        *gi = 0.0;
                    }
                });
            }
            g = gin;
        }
        let grads = want_weights.then(|| {
            grads.reverse();
            MlpGrads { layers: grads }
        });
        Ok((grads, g))
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::config(format!(
                "input width {cols} does not match network input {}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn affine(&self, i: usize, x: ArrayView2<f64>) -> Array2<f64> {
        let layer = &self.layers[i];
        let mut z = x.dot(&layer.weight);
        z += &layer.bias;
        z
    }

    fn apply_head(&self, z: &mut Array2<f64>) {
        if self.head == OutputHead::Tanh {
            z.mapv_inplace(f64::tanh);
        }
    }
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn add_assign(&mut self, other: &MlpGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

fn relu_inplace(x: &mut Array2<f64>) {
    x.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RunRng;
    use ndarray::array;

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[4, 8, 8, 3], OutputHead::Identity).unwrap();
        let out = net.forward_one(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(out, vec![0.0; 3]);
    }

    #[test]
    fn unit_chain_passes_positive_input() {
        let mut net = Mlp::zeros(&[1, 1, 1], OutputHead::Identity).unwrap();
        net.layers_mut()[0].weight[[0, 0]] = 1.0;
        net.layers_mut()[1].weight[[0, 0]] = 1.0;
        assert_eq!(net.forward_one(&[3.0]).unwrap(), vec![3.0]);
        assert_eq!(net.forward_one(&[-3.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn chain_rule_on_unit_chain() {
        let mut net = Mlp::zeros(&[1, 1, 1], OutputHead::Identity).unwrap();
        net.layers_mut()[0].weight[[0, 0]] = 1.0;
        net.layers_mut()[1].weight[[0, 0]] = 1.0;
        let tape = net.forward_tape(array![[3.0]].view()).unwrap();
        let (g, gin) = net.backward(&tape, &array![[1.0]]).unwrap();
        assert_eq!(g.layers[0].weight[[0, 0]], 3.0);
        assert_eq!(g.layers[0].bias[0], 1.0);
        assert_eq!(g.layers[1].weight[[0, 0]], 3.0);
        assert_eq!(g.layers[1].bias[0], 1.0);
        assert_eq!(gin[[0, 0]], 1.0);
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let mut rng = RunRng::new(0, 0);
        let net = Mlp::new(&[3, 5, 5, 2], OutputHead::Identity, &mut rng).unwrap();
        let x = array![[0.1, 0.2, 0.3], [-1.0, 0.5, 2.0]];
        let tape = net.forward_tape(x.view()).unwrap();
        let (g, gin) = net.backward(&tape, &Array2::zeros((2, 2))).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert!(gin.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let net = Mlp::zeros(&[3, 4, 1], OutputHead::Identity).unwrap();
        assert!(matches!(net.forward_one(&[1.0, 2.0]), Err(Error::Config(_))));
    }

    #[test]
    fn non_finite_upstream_rejected() {
        let net = Mlp::zeros(&[1, 2, 1], OutputHead::Identity).unwrap();
        let tape = net.forward_tape(array![[1.0]].view()).unwrap();
        assert!(matches!(
            net.backward(&tape, &array![[f64::NAN]]),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn gaussian_head_needs_even_width() {
        assert!(Mlp::zeros(&[2, 4, 3], OutputHead::Gaussian).is_err());
    }

    #[test]
    fn same_seed_same_weights() {
        let a = Mlp::new(&[4, 16, 16, 2], OutputHead::Tanh, &mut RunRng::new(5, 0)).unwrap();
        let b = Mlp::new(&[4, 16, 16, 2], OutputHead::Tanh, &mut RunRng::new(5, 0)).unwrap();
        assert_eq!(a, b);
    }
}
