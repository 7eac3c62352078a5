//! A small fully-connected network with hand-derived forward/backward passes
//! and first-order optimizers.
//!
//! The network maps `[action ; context]` (or any fixed-length input) to one
//! scalar. Loss modules hand `backward` a vector of dL/dprediction values;
//! nothing here knows which loss is being trained.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::data::{BinaryAction, Context};
use crate::regret::stable_logistic;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Logistic,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Logistic => stable_logistic(z),
        }
    }

    /// Derivative at pre-activation `z`. Rectifier derivative at exactly 0
    /// is taken as 0.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Logistic => {
                let s = stable_logistic(z);
                s * (1.0 - s)
            }
        }
    }
}

/// Architecture of an [`MlpModel`]: input width, hidden widths, activations.
/// The output layer always has width 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpSpec {
    /// Two rectifier hidden layers of width 64, identity head.
    pub fn default_for_input(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: vec![64, 64],
            hidden_activation: Activation::Relu,
            output_activation: Activation::Identity,
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.input_dim == 0 || self.hidden.iter().any(|&w| w == 0) {
            return Err(NetError::InvalidSpec);
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every layer, output layer last.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input_dim;
        for &h in &self.hidden {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, 1));
        dims
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer == self.hidden.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }
}

/// Weights (row-major, `fan_out x fan_in`) and biases of one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LayerParams {
    fn zeroed(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    spec: MlpSpec,
    layers: Vec<LayerParams>,
}

/// Parameter-shaped buffer: gradients, or optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
}

impl Gradients {
    pub fn zeroed(spec: &MlpSpec) -> Self {
        Self {
            layers: spec
                .layer_dims()
                .iter()
                .map(|&(fi, fo)| LayerParams::zeroed(fi, fo))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, c: f64) {
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w *= c;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetError {
    InvalidSpec,
    DimensionMismatch { expected: usize, found: usize },
    /// dL/dprediction length differs from the batch length.
    BatchShapeMismatch,
    NonFiniteGradient,
}

impl fmt::Display for NetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetError::InvalidSpec => write!(f, "invalid network spec: widths must be >= 1"),
            NetError::DimensionMismatch { expected, found } => {
                write!(f, "input dimension mismatch: expected {expected}, found {found}")
            }
            NetError::BatchShapeMismatch => write!(f, "dL/dpred length must equal batch length"),
            NetError::NonFiniteGradient => write!(f, "non-finite gradient entry; training aborted"),
        }
    }
}

impl core::error::Error for NetError {}

impl MlpModel {
    /// Initialize with weights `~ Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))`
    /// (variance `1/(3 fan_in)`) and zero biases. Weights are drawn layer by
    /// layer in row-major order.
    pub fn init(spec: MlpSpec, rng: &mut SeededRng) -> Result<Self, NetError> {
        spec.validate()?;
        let layers = spec
            .layer_dims()
            .iter()
            .map(|&(fan_in, fan_out)| {
                let bound = 1.0 / libm::sqrt(fan_in as f64);
                LayerParams {
                    weights: (0..fan_in * fan_out)
                        .map(|_| rng.uniform(-bound, bound))
                        .collect(),
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Self { spec, layers })
    }

    pub fn from_parts(spec: MlpSpec, layers: Vec<LayerParams>) -> Result<Self, NetError> {
        spec.validate()?;
        let dims = spec.layer_dims();
        if layers.len() != dims.len()
            || layers
                .iter()
                .zip(&dims)
                .any(|(l, &(fi, fo))| l.weights.len() != fi * fo || l.biases.len() != fo)
        {
            return Err(NetError::InvalidSpec);
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    /// `[action ; context]` as a model input.
    pub fn joint_input(action: BinaryAction, context: &Context) -> Vec<f64> {
        let mut input = Vec::with_capacity(context.len() + 1);
        input.push(action.as_f64());
        input.extend_from_slice(context.as_slice());
        input
    }

    /// Prediction for `(action, context)` through a `d + 1`-input model.
    pub fn forward(&self, action: BinaryAction, context: &Context) -> Result<f64, NetError> {
        if context.len() + 1 != self.spec.input_dim {
            return Err(NetError::DimensionMismatch {
                expected: self.spec.input_dim,
                found: context.len() + 1,
            });
        }
        Ok(self.forward_input(&Self::joint_input(action, context)))
    }

    /// Prediction for a context alone through a `d`-input model.
    pub fn forward_context(&self, context: &Context) -> Result<f64, NetError> {
        if context.len() != self.spec.input_dim {
            return Err(NetError::DimensionMismatch {
                expected: self.spec.input_dim,
                found: context.len(),
            });
        }
        Ok(self.forward_input(context.as_slice()))
    }

    pub fn forward_input(&self, input: &[f64]) -> f64 {
        debug_assert_eq!(input.len(), self.spec.input_dim);
        let mut a = input.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            a = self.layer_forward(l, layer, &a).1;
        }
        a[0]
    }

    /// `(pre_activations, outputs)` of one layer.
    fn layer_forward(&self, l: usize, layer: &LayerParams, input: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let fan_in = input.len();
        let act = self.spec.activation_of(l);
        let mut pre = Vec::with_capacity(layer.biases.len());
        let mut out = Vec::with_capacity(layer.biases.len());
        for (row, &b) in layer.biases.iter().enumerate() {
            let w = &layer.weights[row * fan_in..(row + 1) * fan_in];
            let z = b + w.iter().zip(input).map(|(wi, xi)| wi * xi).sum::<f64>();
            pre.push(z);
            out.push(act.apply(z));
        }
        (pre, out)
    }

    /// Exact reverse-mode gradient of `sum_j dl_dpred[j] * f(inputs[j])`
    /// with respect to every parameter.
    pub fn backward(&self, inputs: &[Vec<f64>], dl_dpred: &[f64]) -> Result<Gradients, NetError> {
        if inputs.len() != dl_dpred.len() {
            return Err(NetError::BatchShapeMismatch);
        }
        let mut grads = Gradients::zeroed(&self.spec);
        for (input, &dl) in inputs.iter().zip(dl_dpred) {
            if dl == 0.0 {
                continue;
            }
            self.backward_one(input, dl, &mut grads);
        }
        Ok(grads)
    }

    fn backward_one(&self, input: &[f64], dl: f64, grads: &mut Gradients) {
        debug_assert_eq!(input.len(), self.spec.input_dim);
        let n_layers = self.layers.len();
        // forward pass keeping every layer's pre-activations and outputs
        let mut pres: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
        let mut outs: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
        let mut a = input.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let (pre, out) = self.layer_forward(l, layer, &a);
            a = out.clone();
            pres.push(pre);
            outs.push(out);
        }
        // backward pass
        let out_act = self.spec.activation_of(n_layers - 1);
        let mut delta = vec![dl * out_act.derivative(pres[n_layers - 1][0])];
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let layer_input: &[f64] = if l == 0 { input } else { &outs[l - 1] };
            let fan_in = layer_input.len();
            let g = &mut grads.layers[l];
            for (row, &d) in delta.iter().enumerate() {
                g.biases[row] += d;
                for (col, &x) in layer_input.iter().enumerate() {
                    g.weights[row * fan_in + col] += d * x;
                }
            }
            if l > 0 {
                let act = self.spec.activation_of(l - 1);
                let mut prev = vec![0.0; fan_in];
                for (row, &d) in delta.iter().enumerate() {
                    let w = &layer.weights[row * fan_in..(row + 1) * fan_in];
                    for (col, &wi) in w.iter().enumerate() {
                        prev[col] += d * wi;
                    }
                }
                for (col, p) in prev.iter_mut().enumerate() {
                    *p *= act.derivative(pres[l - 1][col]);
                }
                delta = prev;
            }
        }
    }

    /// Apply one optimizer update in place.
    pub fn step(&mut self, grads: &Gradients, opt: &mut OptimizerState) -> Result<(), NetError> {
        if !grads.is_finite() {
            return Err(NetError::NonFiniteGradient);
        }
        opt.t += 1;
        match opt.method {
            OptimMethod::Sgd { lr } => {
                for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
                    for (p, gv) in layer
                        .weights
                        .iter_mut()
                        .chain(layer.biases.iter_mut())
                        .zip(g.weights.iter().chain(&g.biases))
                    {
                        *p -= lr * gv;
                    }
                }
            }
            OptimMethod::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                let t = opt.t as f64;
                let bc1 = 1.0 - libm::pow(beta1, t);
                let bc2 = 1.0 - libm::pow(beta2, t);
                for ((layer, g), (m, v)) in self
                    .layers
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(opt.moment1.layers.iter_mut().zip(&mut opt.moment2.layers))
                {
                    let params = layer.weights.iter_mut().chain(layer.biases.iter_mut());
                    let gs = g.weights.iter().chain(&g.biases);
                    let ms = m.weights.iter_mut().chain(m.biases.iter_mut());
                    let vs = v.weights.iter_mut().chain(v.biases.iter_mut());
                    for (((p, &gv), mv), vv) in params.zip(gs).zip(ms).zip(vs) {
                        *mv = beta1 * *mv + (1.0 - beta1) * gv;
                        *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                        let mhat = *mv / bc1;
                        let vhat = *vv / bc2;
                        *p -= lr * mhat / (libm::sqrt(vhat) + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimMethod {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimMethod {
    /// Adaptive-moment defaults: beta1 0.9, beta2 0.999, eps 1e-8.
    pub fn adam(lr: f64) -> Self {
        OptimMethod::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer method plus its per-parameter moment buffers and step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub method: OptimMethod,
    pub t: u64,
    moment1: Gradients,
    moment2: Gradients,
}

impl OptimizerState {
    pub fn new(method: OptimMethod, spec: &MlpSpec) -> Self {
        Self {
            method,
            t: 0,
            moment1: Gradients::zeroed(spec),
            moment2: Gradients::zeroed(spec),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn spec(input: usize, hidden: Vec<usize>, out: Activation) -> MlpSpec {
        MlpSpec {
            input_dim: input,
            hidden,
            hidden_activation: Activation::Relu,
            output_activation: out,
        }
    }

    #[test]
    fn init_is_deterministic() {
        let s = spec(3, vec![4, 4], Activation::Identity);
        let a = MlpModel::init(s.clone(), &mut SeededRng::new(8)).unwrap();
        let b = MlpModel::init(s, &mut SeededRng::new(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_biases_are_zero() {
        let m = MlpModel::init(spec(3, vec![4], Activation::Identity), &mut SeededRng::new(1))
            .unwrap();
        for l in m.layers() {
            assert!(l.biases.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn init_weight_variance_matches_fan_in_scaling() {
        let width = 10_000;
        let m = MlpModel::init(spec(3, vec![width], Activation::Identity), &mut SeededRng::new(2))
            .unwrap();
        let ws = &m.layers()[0].weights;
        let mean = ws.iter().sum::<f64>() / ws.len() as f64;
        let var = ws.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / ws.len() as f64;
        let expected = 1.0 / (3.0 * 3.0); // 1/(3 * fan_in)
        assert!((var - expected).abs() <= 0.2 * expected, "var {var}");
    }

    #[test]
    fn zero_model_outputs_zero_or_half() {
        let zero = |out| {
            let s = spec(3, vec![4], out);
            MlpModel::from_parts(
                s.clone(),
                s.layer_dims()
                    .iter()
                    .map(|&(fi, fo)| LayerParams::zeroed(fi, fo))
                    .collect(),
            )
            .unwrap()
        };
        let w = Context::new(vec![1.0, -2.0]);
        let m = zero(Activation::Identity);
        assert_eq!(m.forward(BinaryAction::One, &w).unwrap(), 0.0);
        let m = zero(Activation::Logistic);
        assert_eq!(m.forward(BinaryAction::Zero, &w).unwrap(), 0.5);
    }

    #[test]
    fn forward_matches_straight_line_arithmetic() {
        // independent flat reimplementation of the same arithmetic
        fn straight(m: &MlpModel, input: &[f64]) -> f64 {
            let mut a: Vec<f64> = input.to_vec();
            for (l, layer) in m.layers().iter().enumerate() {
                let fan_in = a.len();
                let mut next = Vec::new();
                for row in 0..layer.biases.len() {
                    let mut z = layer.biases[row];
                    for col in 0..fan_in {
                        z += layer.weights[row * fan_in + col] * a[col];
                    }
                    let last = l == m.layers().len() - 1;
                    let v = match if last {
                        m.spec().output_activation
                    } else {
                        m.spec().hidden_activation
                    } {
                        Activation::Identity => z,
                        Activation::Relu => z.max(0.0),
                        Activation::Logistic => 1.0 / (1.0 + (-z).exp()),
                    };
                    next.push(v);
                }
                a = next;
            }
            a[0]
        }
        let mut rng = SeededRng::new(3);
        for trial in 0..20 {
            let s = spec(
                4,
                vec![5, 3],
                if trial % 2 == 0 {
                    Activation::Identity
                } else {
                    Activation::Logistic
                },
            );
            let m = MlpModel::init(s, &mut rng).unwrap();
            let input: Vec<f64> = (0..4).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let got = m.forward_input(&input);
            let want = straight(&m, &input);
            assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn backward_zero_dl_gives_zero_gradient() {
        let mut rng = SeededRng::new(4);
        let m = MlpModel::init(spec(3, vec![4], Activation::Identity), &mut rng).unwrap();
        let inputs = vec![vec![1.0, 2.0, 3.0], vec![0.0, -1.0, 0.5]];
        let g = m.backward(&inputs, &[0.0, 0.0]).unwrap();
        assert_eq!(g, Gradients::zeroed(m.spec()));
    }

    #[test]
    fn output_layer_gradient_is_hidden_activation() {
        // single example, dl=1, identity head: dL/dW_out = hidden activations
        let mut rng = SeededRng::new(6);
        let m = MlpModel::init(spec(3, vec![5], Activation::Identity), &mut rng).unwrap();
        let input = vec![0.3, -0.7, 1.1];
        let (_, hidden) = m.layer_forward(0, &m.layers()[0], &input);
        let g = m.backward(&[input], &[1.0]).unwrap();
        for (got, want) in g.layers[1].weights.iter().zip(&hidden) {
            assert!((got - want).abs() <= 1e-14);
        }
        assert_eq!(g.layers[1].biases[0], 1.0);
    }

    #[test]
    fn sgd_step_moves_against_gradient() {
        let s = spec(1, vec![1], Activation::Identity);
        let mut m = MlpModel::from_parts(
            s.clone(),
            vec![
                LayerParams {
                    weights: vec![1.0],
                    biases: vec![0.0],
                },
                LayerParams {
                    weights: vec![1.0],
                    biases: vec![0.0],
                },
            ],
        )
        .unwrap();
        let mut g = Gradients::zeroed(&s);
        g.layers[0].weights[0] = 1.0;
        let mut opt = OptimizerState::new(OptimMethod::Sgd { lr: 0.1 }, &s);
        m.step(&g, &mut opt).unwrap();
        assert!((m.layers()[0].weights[0] - 0.9).abs() <= 1e-15);
        assert_eq!(opt.t, 1);
        // zero gradient leaves parameters unchanged
        let before = m.clone();
        m.step(&Gradients::zeroed(&s), &mut opt).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn adam_first_step_magnitude_is_lr() {
        let s = spec(1, vec![1], Activation::Identity);
        for c in [0.01, 1.0, 250.0] {
            let mut m = MlpModel::init(s.clone(), &mut SeededRng::new(1)).unwrap();
            let p0 = m.layers()[0].weights[0];
            let mut g = Gradients::zeroed(&s);
            g.layers[0].weights[0] = c;
            let mut opt = OptimizerState::new(OptimMethod::adam(1e-3), &s);
            m.step(&g, &mut opt).unwrap();
            let update = p0 - m.layers()[0].weights[0];
            assert!((update - 1e-3).abs() <= 1e-8, "c={c} update={update}");
        }
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let s = spec(1, vec![1], Activation::Identity);
        let mut m = MlpModel::init(s.clone(), &mut SeededRng::new(1)).unwrap();
        let mut g = Gradients::zeroed(&s);
        g.layers[0].weights[0] = f64::NAN;
        let mut opt = OptimizerState::new(OptimMethod::Sgd { lr: 0.1 }, &s);
        assert_eq!(m.step(&g, &mut opt), Err(NetError::NonFiniteGradient));
    }

    #[test]
    fn logistic_head_output_in_open_unit_interval() {
        let mut rng = SeededRng::new(12);
        let m = MlpModel::init(spec(2, vec![8], Activation::Logistic), &mut rng).unwrap();
        for _ in 0..200 {
            let input = vec![rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)];
            let y = m.forward_input(&input);
            assert!(y > 0.0 && y < 1.0);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = MlpModel::init(spec(3, vec![4], Activation::Identity), &mut SeededRng::new(0))
            .unwrap();
        let w = Context::new(vec![1.0, 2.0, 3.0]); // d+1 = 4 != 3
        assert!(matches!(
            m.forward(BinaryAction::Zero, &w),
            Err(NetError::DimensionMismatch { .. })
        ));
    }
}
