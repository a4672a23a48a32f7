//! Plain fully-connected network with ReLU hidden layers, used both as the
//! synthetic generative process and as the trained agents' function class.

use rand::RngExt;

use crate::error::{CoreError, Result};
use crate::math::dot;
use crate::rng::StreamRng;

#[derive(Debug, Clone)]
struct Layer {
    /// Row-major `[outputs x inputs]`.
    w: Vec<f64>,
    b: Vec<f64>,
    inputs: usize,
    outputs: usize,
}

impl Layer {
    fn xavier(inputs: usize, outputs: usize, rng: &mut StreamRng) -> Self {
        // Xavier-uniform bound sqrt(6 / (fan_in + fan_out)); zero biases.
        let bound = (6.0 / (inputs + outputs) as f64).sqrt();
        let w = (0..inputs * outputs)
            .map(|_| rng.random::<f64>() * 2.0 * bound - bound)
            .collect();
        Layer {
            w,
            b: vec![0.0; outputs],
            inputs,
            outputs,
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.w[o * self.inputs..(o + 1) * self.inputs];
            out.push(dot(row, x) + self.b[o]);
        }
    }
}

/// Feed-forward network: ReLU after every layer except the last, which emits
/// raw logits.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    /// `sizes` lists the layer widths from input to output,
    /// e.g. `[d, 50, 50, c]` for two hidden layers of width 50.
    pub fn xavier(sizes: &[usize], rng: &mut StreamRng) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output widths");
        let layers = sizes
            .windows(2)
            .map(|w| Layer::xavier(w[0], w[1], rng))
            .collect();
        Network { layers }
    }

    /// All-zero network of the same shape (logits identically zero).
    pub fn zeros(sizes: &[usize]) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| Layer {
                w: vec![0.0; w[0] * w[1]],
                b: vec![0.0; w[1]],
                inputs: w[0],
                outputs: w[1],
            })
            .collect();
        Network { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if i < last {
                for v in &mut next {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Sum of squares over all parameters.
    pub fn squared_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| dot(&l.w, &l.w) + dot(&l.b, &l.b))
            .sum()
    }

    /// Forward pass keeping post-activation values per layer for backprop.
    /// `acts[0]` is the input; `acts.last()` are the raw output logits.
    fn forward_cached(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::new();
            layer.apply(acts.last().unwrap(), &mut out);
            if i < last {
                for v in &mut out {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            acts.push(out);
        }
        acts
    }
}

/// Mini-batch SGD settings for cross-entropy training.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// Coefficient of the `l2 * ||params||^2` penalty added to the mean
    /// cross-entropy.
    pub l2_decay: f64,
    pub steps: usize,
    /// Mini-batch size cap; the effective size is `min(T, batch_cap)`.
    pub batch_cap: usize,
}

impl TrainConfig {
    pub const DEFAULT_MOMENTUM: f64 = 0.9;
    pub const DEFAULT_BATCH_CAP: usize = 100;
}

struct Grads {
    w: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl Grads {
    fn zeros(net: &Network) -> Self {
        Grads {
            w: net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        }
    }

    fn clear(&mut self) {
        for v in self.w.iter_mut().chain(self.b.iter_mut()) {
            v.iter_mut().for_each(|g| *g = 0.0);
        }
    }
}

/// Trains `net` in place by mini-batch SGD with momentum on
/// `mean cross-entropy + l2 * ||params||^2`.
///
/// `prior` is an optional fixed network whose logits, scaled by the given
/// factor, are added to the trained logits before the loss; gradients do not
/// flow into it. Mini-batches are drawn with replacement from `examples`.
/// With no examples the network is left at its initialization.
pub fn train_cross_entropy(
    net: &mut Network,
    examples: &[(&[f64], usize)],
    prior: Option<(&Network, f64)>,
    cfg: &TrainConfig,
    rng: &mut StreamRng,
) -> Result<()> {
    if examples.is_empty() || cfg.steps == 0 {
        return Ok(());
    }
    let batch = cfg.batch_cap.min(examples.len()).max(1);
    let classes = net.output_dim();
    if let Some((_, y)) = examples.iter().find(|(_, y)| *y >= classes) {
        return Err(CoreError::LabelOutOfRange { label: *y, classes });
    }
    let mut grads = Grads::zeros(net);
    let mut vel = Grads::zeros(net);

    for step in 0..cfg.steps {
        grads.clear();
        let mut batch_ce = 0.0;
        for _ in 0..batch {
            let (x, y) = examples[rng.random_range(0..examples.len())];
            let acts = net.forward_cached(x);
            let mut logits = acts.last().unwrap().clone();
            if let Some((p, scale)) = prior {
                for (l, pl) in logits.iter_mut().zip(p.forward(x)?) {
                    *l += scale * pl;
                }
            }
            // Log-softmax cross-entropy; exact in log space.
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max
                + logits
                    .iter()
                    .map(|l| (l - max).exp())
                    .sum::<f64>()
                    .ln();
            batch_ce += lse - logits[y];

            // dCE/dlogit = softmax - onehot; backprop through the trained
            // net only.
            let mut delta: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
            delta[y] -= 1.0;
            for (i, layer) in net.layers.iter().enumerate().rev() {
                let input = &acts[i];
                let gw = &mut grads.w[i];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    for (g, &a) in row.iter_mut().zip(input.iter()) {
                        *g += d * a;
                    }
                    grads.b[i][o] += d;
                }
                if i > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for o in 0..layer.outputs {
                        let d = delta[o];
                        let row = &layer.w[o * layer.inputs..(o + 1) * layer.inputs];
                        for (p, &w) in prev.iter_mut().zip(row.iter()) {
                            *p += w * d;
                        }
                    }
                    // ReLU mask from the stored post-activations.
                    for (p, &a) in prev.iter_mut().zip(input.iter()) {
                        if a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }

        let loss = batch_ce / batch as f64 + cfg.l2_decay * net.squared_norm();
        if !loss.is_finite() {
            return Err(CoreError::NonFinite(format!("training loss at step {step}")));
        }

        let scale = 1.0 / batch as f64;
        for (i, layer) in net.layers.iter_mut().enumerate() {
            for (idx, w) in layer.w.iter_mut().enumerate() {
                let g = grads.w[i][idx] * scale + 2.0 * cfg.l2_decay * *w;
                vel.w[i][idx] = cfg.momentum * vel.w[i][idx] - cfg.learning_rate * g;
                *w += vel.w[i][idx];
            }
            for (idx, b) in layer.b.iter_mut().enumerate() {
                let g = grads.b[i][idx] * scale + 2.0 * cfg.l2_decay * *b;
                vel.b[i][idx] = cfg.momentum * vel.b[i][idx] - cfg.learning_rate * g;
                *b += vel.b[i][idx];
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn zero_network_emits_zero_logits() {
        let net = Network::zeros(&[3, 5, 5, 2]);
        assert_eq!(net.forward(&[1.0, -2.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn xavier_bounds_hold() {
        let mut rng = stream_rng(0, &[]);
        let net = Network::xavier(&[10, 50, 50, 2], &mut rng);
        for layer in &net.layers {
            let bound = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            assert!(layer.w.iter().all(|w| w.abs() <= bound));
            assert!(layer.b.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn forward_checks_dimension() {
        let net = Network::zeros(&[3, 2]);
        assert!(net.forward(&[0.0; 4]).is_err());
    }

    #[test]
    fn fits_two_separable_points() {
        let mut rng = stream_rng(1, &[]);
        let mut net = Network::xavier(&[2, 50, 50, 2], &mut rng);
        let a = [1.0, 0.5];
        let b = [-1.0, -0.5];
        let examples: Vec<(&[f64], usize)> = vec![(&a, 1), (&b, 0)];
        let cfg = TrainConfig {
            learning_rate: 0.05,
            momentum: TrainConfig::DEFAULT_MOMENTUM,
            l2_decay: 0.0,
            steps: 200,
            batch_cap: TrainConfig::DEFAULT_BATCH_CAP,
        };
        train_cross_entropy(&mut net, &examples, None, &cfg, &mut rng).unwrap();
        for (x, y) in &examples {
            let logits = net.forward(x).unwrap();
            let pred = if logits[1] > logits[0] { 1 } else { 0 };
            assert_eq!(pred, *y);
        }
    }

    #[test]
    fn heavy_decay_shrinks_to_uniform() {
        // The decay term dominates the cross-entropy gradient, so parameters
        // settle near zero and predictions approach 1/C.
        let mut rng = stream_rng(2, &[]);
        let mut net = Network::xavier(&[2, 20, 20, 3], &mut rng);
        let a = [0.2, -0.3];
        let examples: Vec<(&[f64], usize)> = vec![(&a, 0), (&a, 2)];
        let cfg = TrainConfig {
            learning_rate: 0.002,
            momentum: TrainConfig::DEFAULT_MOMENTUM,
            l2_decay: 100.0,
            steps: 2000,
            batch_cap: TrainConfig::DEFAULT_BATCH_CAP,
        };
        train_cross_entropy(&mut net, &examples, None, &cfg, &mut rng).unwrap();
        assert!(net.squared_norm() < 1e-4, "norm = {}", net.squared_norm());
        let probs = crate::math::softmax(&net.forward(&a).unwrap());
        for p in probs {
            assert!((p - 1.0 / 3.0).abs() < 2e-3, "p = {p}");
        }
    }

    #[test]
    fn empty_data_leaves_initialization() {
        let mut rng = stream_rng(3, &[]);
        let mut net = Network::xavier(&[2, 10, 10, 2], &mut rng);
        let before = net.clone();
        let cfg = TrainConfig {
            learning_rate: 0.1,
            momentum: 0.9,
            l2_decay: 0.0,
            steps: 100,
            batch_cap: 100,
        };
        train_cross_entropy(&mut net, &[], None, &cfg, &mut rng).unwrap();
        let x = [0.3, 0.7];
        assert_eq!(net.forward(&x).unwrap(), before.forward(&x).unwrap());
    }

    #[test]
    fn prior_offsets_logits_without_being_trained() {
        let mut rng = stream_rng(4, &[]);
        let prior = Network::xavier(&[2, 10, 10, 2], &mut rng);
        let prior_before = prior.clone();
        let mut net = Network::zeros(&[2, 10, 10, 2]);
        let a = [0.5, -0.5];
        let examples: Vec<(&[f64], usize)> = vec![(&a, 1)];
        let cfg = TrainConfig {
            learning_rate: 0.05,
            momentum: 0.9,
            l2_decay: 0.0,
            steps: 50,
            batch_cap: 10,
        };
        train_cross_entropy(&mut net, &examples, Some((&prior, 2.0)), &cfg, &mut rng).unwrap();
        // The prior is untouched; the trained net moved.
        assert_eq!(prior.forward(&a).unwrap(), prior_before.forward(&a).unwrap());
        assert_ne!(net.forward(&a).unwrap(), vec![0.0, 0.0]);
    }
}
