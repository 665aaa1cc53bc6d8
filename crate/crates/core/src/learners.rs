//! Dense feed-forward networks trained by plain minibatch SGD.
//!
//! Hidden layers use ReLU; the output layer is identity or sigmoid. Training
//! is single-threaded and bit-reproducible for a fixed seed.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Coalition;
use crate::error::{Error, Result};
use crate::field::{FieldKind, ScalarField};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardNet<T = f64> {
    widths: Vec<usize>,
    /// Per layer, `out × in` row-major.
    weights: Vec<Vec<T>>,
    biases: Vec<Vec<T>>,
    output: OutputActivation,
}

/// Parameter-shaped gradient (or update) buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T = f64> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
}

/// Small random weights (Glorot-uniform), zero biases, identity output.
pub fn net_init<T: Scalar>(widths: &[usize], seed_value: u64) -> Result<FeedForwardNet<T>> {
    if widths.len() < 2 {
        return Err(Error::invalid("a network needs at least an input and an output width"));
    }
    if widths.contains(&0) {
        return Err(Error::invalid("layer widths must be positive"));
    }
    let mut rng = seed::rng(seed_value);
    let mut weights = Vec::with_capacity(widths.len() - 1);
    let mut biases = Vec::with_capacity(widths.len() - 1);
    for pair in widths.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        weights.push(
            (0..fan_in * fan_out)
                .map(|_| T::lit(rng.random_range(-bound..bound)))
                .collect(),
        );
        biases.push(vec![T::zero(); fan_out]);
    }
    Ok(FeedForwardNet {
        widths: widths.to_vec(),
        weights,
        biases,
        output: OutputActivation::Identity,
    })
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> FeedForwardNet<T> {
    pub fn with_output(mut self, output: OutputActivation) -> Self {
        self.output = output;
        self
    }

    /// A net whose parameters are all zero.
    pub fn zeros(widths: &[usize]) -> Result<Self> {
        let mut net = net_init::<T>(widths, 0)?;
        net.weights.iter_mut().flatten().for_each(|w| *w = T::zero());
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().expect("at least two widths")
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn parameter_count(&self) -> usize {
        self.widths.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }

    pub fn weights(&self) -> &[Vec<T>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<T>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.biases
    }

    /// All parameters, layer by layer (weights then biases).
    pub fn flat_parameters(&self) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }

    pub fn set_flat_parameters(&mut self, params: &[T]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::invalid(format!(
                "{} parameters supplied for a net with {}",
                params.len(),
                self.parameter_count()
            )));
        }
        let mut it = params.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().chain(b.iter_mut()).for_each(|p| *p = it.next().unwrap());
        }
        Ok(())
    }

    fn layer(&self, l: usize, input: &[T], out: &mut Vec<T>) {
        let n_in = self.widths[l];
        out.clear();
        out.extend(self.biases[l].iter().enumerate().map(|(o, &b)| {
            let row = &self.weights[l][o * n_in..(o + 1) * n_in];
            row.iter().zip(input).fold(b, |acc, (&w, &a)| acc + w * a)
        }));
    }

    /// Pre-activation output of the last layer.
    pub fn logits(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.input_width());
        let mut a = x.to_vec();
        let mut z = Vec::new();
        let last = self.weights.len() - 1;
        for l in 0..=last {
            self.layer(l, &a, &mut z);
            if l < last {
                z.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            std::mem::swap(&mut a, &mut z);
        }
        a
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let mut out = self.logits(x);
        if self.output == OutputActivation::Sigmoid {
            out.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        out
    }

    /// First output unit.
    pub fn predict(&self, x: &[T]) -> T {
        self.forward(x)[0]
    }

    /// Gradient of `Σ_i c_i ℓ(net(x_i), y_i)` where `c_i` is the sample
    /// coefficient produced by the loss normalization.
    fn accumulate_gradient(&self, x: &[T], dloss_dlogit: T, grad: &mut Gradient<T>, acts: &mut Vec<Vec<T>>) {
        let last = self.weights.len() - 1;
        acts.clear();
        acts.push(x.to_vec());
        for l in 0..=last {
            let mut z = Vec::new();
            self.layer(l, &acts[l], &mut z);
            if l < last {
                z.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            acts.push(z);
        }
        let mut delta = vec![T::zero(); self.output_width()];
        delta[0] = dloss_dlogit;
        for l in (0..=last).rev() {
            let n_in = self.widths[l];
            let input = &acts[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == T::zero() {
                    continue;
                }
                grad.biases[l][o] = grad.biases[l][o] + d;
                let g_row = &mut grad.weights[l][o * n_in..(o + 1) * n_in];
                for (g, &a) in g_row.iter_mut().zip(input) {
                    *g = *g + d * a;
                }
            }
            if l > 0 {
                let mut prev = vec![T::zero(); n_in];
                for (o, &d) in delta.iter().enumerate() {
                    if d == T::zero() {
                        continue;
                    }
                    let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p = *p + w * d;
                    }
                }
                // ReLU derivative: the stored activation is positive iff the unit was active.
                for (p, &a) in prev.iter_mut().zip(&acts[l]) {
                    if a <= T::zero() {
                        *p = T::zero();
                    }
                }
                delta = prev;
            }
        }
    }

    fn zero_gradient(&self) -> Gradient<T> {
        Gradient {
            weights: self.weights.iter().map(|w| vec![T::zero(); w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![T::zero(); b.len()]).collect(),
        }
    }

    /// Loss and its backpropagated gradient over `batch`.
    pub fn loss_and_gradient(&self, batch: &[&Sample<T>], loss: LossKind) -> Result<(T, Gradient<T>)> {
        let coeffs = loss.coefficients(batch);
        let mut grad = self.zero_gradient();
        let mut acts = Vec::new();
        let mut total = T::zero();
        for (sample, &c) in batch.iter().zip(&coeffs) {
            if c == T::zero() {
                continue;
            }
            let z = self.logits(&sample.input)[0];
            let (l, dl) = loss.pointwise(self.output, z, sample.target)?;
            total = total + c * l;
            self.accumulate_gradient(&sample.input, c * dl, &mut grad, &mut acts);
        }
        Ok((total, grad))
    }

    /// Loss over `samples` without a gradient, plus the two composite components.
    pub fn loss(&self, samples: &[Sample<T>], loss: LossKind) -> Result<LossBreakdown> {
        let refs: Vec<&Sample<T>> = samples.iter().collect();
        let coeffs = loss.coefficients(&refs);
        let mut total = T::zero();
        let mut parts = [T::zero(); 2];
        let mut weights = [T::zero(); 2];
        for (sample, &c) in samples.iter().zip(&coeffs) {
            let z = self.logits(&sample.input)[0];
            let (l, _) = loss.pointwise(self.output, z, sample.target)?;
            total = total + c * l;
            let k = sample.component as usize;
            parts[k] = parts[k] + sample.weight * l;
            weights[k] = weights[k] + sample.weight;
        }
        let mean = |k: usize| {
            if weights[k] > T::zero() {
                (parts[k] / weights[k]).as_f64()
            } else {
                0.0
            }
        };
        Ok(LossBreakdown {
            total: total.as_f64(),
            first: mean(0),
            second: mean(1),
        })
    }

    fn apply(&mut self, grad: &Gradient<T>, lr: T) {
        for (w, g) in self.weights.iter_mut().zip(&grad.weights) {
            w.iter_mut().zip(g).for_each(|(p, &d)| *p = *p - lr * d);
        }
        for (b, g) in self.biases.iter_mut().zip(&grad.biases) {
            b.iter_mut().zip(g).for_each(|(p, &d)| *p = *p - lr * d);
        }
    }

    pub fn to_doc(&self) -> NetworkDoc {
        NetworkDoc {
            widths: self.widths.clone(),
            weights: self
                .weights
                .iter()
                .map(|w| w.iter().map(|v| v.as_f64()).collect())
                .collect(),
            biases: self
                .biases
                .iter()
                .map(|b| b.iter().map(|v| v.as_f64()).collect())
                .collect(),
            output: self.output,
        }
    }

    pub fn from_doc(doc: &NetworkDoc) -> Result<Self> {
        let mut net = Self::zeros(&doc.widths)?.with_output(doc.output);
        if doc.weights.len() != net.weights.len() || doc.biases.len() != net.biases.len() {
            return Err(Error::invalid("network document has the wrong number of layers"));
        }
        for (l, (w, b)) in doc.weights.iter().zip(&doc.biases).enumerate() {
            if w.len() != net.weights[l].len() || b.len() != net.biases[l].len() {
                return Err(Error::invalid(format!("layer {l} parameter shape mismatch")));
            }
            if w.iter().chain(b).any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("layer {l} has non-finite parameters")));
            }
            net.weights[l] = w.iter().map(|&v| T::lit(v)).collect();
            net.biases[l] = b.iter().map(|&v| T::lit(v)).collect();
        }
        Ok(net)
    }
}

impl<T: Scalar> ScalarField<T> for FeedForwardNet<T> {
    fn evaluate(&self, x: &[T]) -> T {
        self.predict(x)
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Feedforward
    }
}

/// JSON form of a network: layer widths and row-major weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub widths: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub output: OutputActivation,
}

/// Which term of a composite loss a sample feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    #[default]
    First = 0,
    Second = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T = f64> {
    pub input: Vec<T>,
    pub target: T,
    pub weight: T,
    pub component: Component,
}

impl<T: Scalar> Sample<T> {
    pub fn new(input: Vec<T>, target: T) -> Self {
        Self {
            input,
            target,
            weight: T::one(),
            component: Component::First,
        }
    }

    pub fn weighted(mut self, weight: T) -> Self {
        self.weight = weight;
        self
    }

    pub fn in_component(mut self, component: Component) -> Self {
        self.component = component;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Weighted mean squared error.
    Mse,
    /// Binary cross-entropy on a sigmoid output.
    Bce,
    /// `first · mse(component A) + second · mse(component B)`, each term a weighted mean.
    Composite { first: f64, second: f64 },
}

impl LossKind {
    fn coefficients<T: Scalar>(self, batch: &[&Sample<T>]) -> Vec<T> {
        match self {
            LossKind::Mse | LossKind::Bce => {
                let total: T = batch.iter().map(|s| s.weight).sum();
                if total <= T::zero() {
                    return vec![T::zero(); batch.len()];
                }
                batch.iter().map(|s| s.weight / total).collect()
            }
            LossKind::Composite { first, second } => {
                let mut totals = [T::zero(); 2];
                for s in batch {
                    totals[s.component as usize] = totals[s.component as usize] + s.weight;
                }
                let scale = [T::lit(first), T::lit(second)];
                batch
                    .iter()
                    .map(|s| {
                        let k = s.component as usize;
                        if totals[k] > T::zero() {
                            scale[k] * s.weight / totals[k]
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            }
        }
    }

    /// `(ℓ, dℓ/dz)` for one sample given the output logit `z`.
    fn pointwise<T: Scalar>(self, output: OutputActivation, z: T, y: T) -> Result<(T, T)> {
        let two = T::lit(2.0);
        match (self, output) {
            (LossKind::Bce, OutputActivation::Sigmoid) => {
                // log(1 + e^z) - y z, computed stably.
                let softplus = z.max(T::zero()) + (-z.abs()).exp().ln_1p();
                Ok((softplus - y * z, sigmoid(z) - y))
            }
            (LossKind::Bce, OutputActivation::Identity) => {
                Err(Error::config("binary cross-entropy requires a sigmoid output layer"))
            }
            (_, OutputActivation::Identity) => {
                let r = z - y;
                Ok((r * r, two * r))
            }
            (_, OutputActivation::Sigmoid) => {
                let s = sigmoid(z);
                let r = s - y;
                Ok((r * r, two * r * s * (T::one() - s)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    /// Weighted mean pointwise loss over component-A samples.
    pub first: f64,
    /// Weighted mean pointwise loss over component-B samples.
    pub second: f64,
}

/// Update rule applied to each minibatch gradient.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub loss: LossKind,
    #[serde(default)]
    pub optimizer: Optimizer,
}

impl TrainerConfig {
    pub fn new(learning_rate: f64, batch_size: usize, epochs: usize, seed: u64, loss: LossKind) -> Self {
        Self {
            learning_rate,
            batch_size,
            epochs,
            seed,
            loss,
            optimizer: Optimizer::Sgd,
        }
    }

    pub fn with_optimizer(mut self, optimizer: Optimizer) -> Self {
        self.optimizer = optimizer;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning rate must be positive and finite"));
        }
        if self.epochs == 0 {
            return Err(Error::config("at least one epoch is required"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) {
                return Err(Error::config("Adam needs betas in [0, 1) and a positive epsilon"));
            }
        }
        if let LossKind::Composite { first, second } = self.loss {
            if !(first >= 0.0 && second >= 0.0 && first.is_finite() && second.is_finite()) {
                return Err(Error::config("composite loss weights must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial: LossBreakdown,
    pub last: LossBreakdown,
    pub epochs: usize,
    pub steps: usize,
}

/// Minibatch SGD with a fixed learning rate. Samples are reshuffled every
/// epoch from a stream seeded by `cfg.seed`.
pub fn sgd_train<T: Scalar>(
    mut net: FeedForwardNet<T>,
    samples: &[Sample<T>],
    cfg: &TrainerConfig,
) -> Result<(FeedForwardNet<T>, TrainReport)> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("no training samples"));
    }
    if let Some(i) = samples.iter().position(|s| s.input.len() != net.input_width()) {
        return Err(Error::invalid(format!(
            "sample {i} has width {} but the net expects {}",
            samples[i].input.len(),
            net.input_width()
        )));
    }
    let initial = net.loss(samples, cfg.loss)?;
    let lr = T::lit(cfg.learning_rate);
    let mut rng = seed::rng(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut steps = 0usize;
    let mut moments = match cfg.optimizer {
        Optimizer::Sgd => None,
        Optimizer::Adam { .. } => {
            let zero = net.zero_gradient();
            Some((zero.clone(), zero))
        }
    };
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Sample<T>> = chunk.iter().map(|&i| &samples[i]).collect();
            let (l, grad) = net.loss_and_gradient(&batch, cfg.loss)?;
            if !l.is_finite() {
                return Err(Error::TrainingFailure {
                    iteration: steps,
                    reason: format!("loss became {l}"),
                });
            }
            steps += 1;
            match (cfg.optimizer, moments.as_mut()) {
                (Optimizer::Adam { beta1, beta2, eps }, Some((m, v))) => {
                    let (b1, b2) = (T::lit(beta1), T::lit(beta2));
                    let c1 = T::one() - T::lit(beta1.powi(steps as i32));
                    let c2 = T::one() - T::lit(beta2.powi(steps as i32));
                    let e = T::lit(eps);
                    let mut update = grad;
                    let layers = m.weights.iter_mut().chain(m.biases.iter_mut());
                    let second = v.weights.iter_mut().chain(v.biases.iter_mut());
                    let grads = update.weights.iter_mut().chain(update.biases.iter_mut());
                    for ((ml, vl), gl) in layers.zip(second).zip(grads) {
                        for ((mi, vi), gi) in ml.iter_mut().zip(vl.iter_mut()).zip(gl.iter_mut()) {
                            *mi = b1 * *mi + (T::one() - b1) * *gi;
                            *vi = b2 * *vi + (T::one() - b2) * *gi * *gi;
                            *gi = (*mi / c1) / ((*vi / c2).sqrt() + e);
                        }
                    }
                    net.apply(&update, lr);
                }
                _ => net.apply(&grad, lr),
            }
        }
    }
    let last = net.loss(samples, cfg.loss)?;
    if !last.total.is_finite() {
        return Err(Error::TrainingFailure {
            iteration: steps,
            reason: format!("final loss is {}", last.total),
        });
    }
    Ok((
        net,
        TrainReport {
            initial,
            last,
            epochs: cfg.epochs,
            steps,
        },
    ))
}

/// Masked-input encoding: `x` with slots outside `s` zeroed, followed by the
/// 0/1 membership indicator of `s`.
pub fn encode_masked<T: Scalar>(x: &[T], s: &Coalition) -> Vec<T> {
    let d = x.len();
    let mut out = Vec::with_capacity(2 * d);
    out.extend(x.iter().enumerate().map(|(i, &v)| if s.contains(i) { v } else { T::zero() }));
    out.extend((0..d).map(|i| if s.contains(i) { T::one() } else { T::zero() }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic() {
        let a = net_init::<f64>(&[2, 1], 7).unwrap();
        let b = net_init::<f64>(&[2, 1], 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, net_init::<f64>(&[2, 1], 8).unwrap());
    }

    #[test]
    fn parameter_count_matches_shapes() {
        let net = net_init::<f64>(&[3, 4, 1], 0).unwrap();
        assert_eq!(net.parameter_count(), 21);
        assert_eq!(net.flat_parameters().len(), 21);
    }

    #[test]
    fn init_rejects_bad_widths() {
        assert!(net_init::<f64>(&[], 0).is_err());
        assert!(net_init::<f64>(&[3], 0).is_err());
        assert!(net_init::<f64>(&[3, 0, 1], 0).is_err());
    }

    #[test]
    fn zero_weight_net_outputs_bias() {
        let mut net = FeedForwardNet::<f64>::zeros(&[3, 4, 1]).unwrap();
        net.biases_mut()[0].iter_mut().for_each(|b| *b = 0.7);
        net.biases_mut()[1][0] = -1.25;
        assert_eq!(net.predict(&[5.0, -2.0, 1.0]), -1.25);
    }

    #[test]
    fn zero_epochs_rejected_one_epoch_runs_one_pass() {
        let net = net_init::<f64>(&[1, 1], 1).unwrap();
        let samples: Vec<_> = (0..10).map(|i| Sample::new(vec![i as f64], 2.0 * i as f64)).collect();
        let bad = TrainerConfig::new(0.01, 4, 0, 0, LossKind::Mse);
        assert!(matches!(sgd_train(net.clone(), &samples, &bad), Err(Error::Config(_))));
        let one = TrainerConfig::new(0.001, 4, 1, 0, LossKind::Mse);
        let (_, report) = sgd_train(net, &samples, &one).unwrap();
        assert_eq!(report.epochs, 1);
        assert_eq!(report.steps, 3);
    }

    #[test]
    fn divergence_reports_iteration() {
        let net = net_init::<f64>(&[1, 1], 1).unwrap();
        let samples: Vec<_> = (0..8).map(|i| Sample::new(vec![100.0 * i as f64], 1.0)).collect();
        let cfg = TrainerConfig::new(10.0, 8, 50, 0, LossKind::Mse);
        match sgd_train(net, &samples, &cfg) {
            Err(Error::TrainingFailure { iteration, .. }) => assert!(iteration < 50),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn bce_requires_sigmoid() {
        let net = net_init::<f64>(&[1, 1], 1).unwrap();
        let samples = vec![Sample::new(vec![1.0], 1.0)];
        let cfg = TrainerConfig::new(0.1, 1, 1, 0, LossKind::Bce);
        assert!(matches!(sgd_train(net, &samples, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn doc_round_trip() {
        let net = net_init::<f64>(&[3, 5, 1], 3).unwrap().with_output(OutputActivation::Sigmoid);
        let json = serde_json::to_string(&net.to_doc()).unwrap();
        let doc: NetworkDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(FeedForwardNet::<f64>::from_doc(&doc).unwrap(), net);
    }

    #[test]
    fn masked_encoding_ignores_free_slots() {
        let s = Coalition::new(vec![1], 3).unwrap();
        assert_eq!(encode_masked(&[4.0, 5.0, 6.0], &s), vec![0.0, 5.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn f32_nets_work() {
        let net = net_init::<f32>(&[2, 3, 1], 5).unwrap();
        assert!(net.predict(&[0.5, -0.5]).is_finite());
    }
}
