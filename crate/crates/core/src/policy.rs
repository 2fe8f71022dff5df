//! Deterministic MLP policy trained by weighted behavior cloning.
//!
//! The network maps a state to an action through `tanh` hidden layers and a
//! linear output layer. Training minimizes the self-normalized weighted
//! squared error between the network output and the demonstrator's
//! pre-disturbance actions:
//!
//! ```text
//! L(θ) = Σ_e w_e Σ_t ‖π_θ(s_t) − a_t^D‖² / Σ_e w_e T_e
//! ```
//!
//! Gradients are computed by hand-written backpropagation.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::trajectory::{Action, EpisodeBatch, State, Trajectory};

const CHECKPOINT_MAGIC: &str = "tawdi-policy 1";

/// Dense layer, `weights` stored row-major with shape `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    #[inline]
    fn affine(&self, input: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.in_dim).zip(&self.bias))
        {
            *o = b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNetwork {
    layers: Vec<Layer>,
}

/// Parameter-shaped gradient: one `Layer` of partial derivatives per network layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Layer>,
}

impl Gradient {
    fn zeros_like(policy: &PolicyNetwork) -> Self {
        Self {
            layers: policy
                .layers
                .iter()
                .map(|l| Layer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    /// Flattened in the same order as [`PolicyNetwork::params`].
    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn max_abs(&self) -> f64 {
        self.flat().iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Samples (state/action pairs) per gradient step. Values at least as
    /// large as the dataset give full-batch descent.
    pub minibatch_size: usize,
    pub init_scale: f64,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 500,
            minibatch_size: 64,
            init_scale: 1.0,
            hidden: vec![64, 64],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("training.learning_rate", "must be a positive number"));
        }
        if self.epochs == 0 {
            return Err(Error::config("training.epochs", "must be positive"));
        }
        if self.minibatch_size == 0 {
            return Err(Error::config("training.minibatch_size", "must be positive"));
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return Err(Error::config("training.init_scale", "must be a positive number"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("training.hidden", "hidden widths must be positive"));
        }
        Ok(())
    }
}

fn flatten(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::with_capacity(layers.iter().map(Layer::num_params).sum());
    for l in layers {
        out.extend_from_slice(&l.weights);
        out.extend_from_slice(&l.bias);
    }
    out
}

impl PolicyNetwork {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Input("policy needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::dim("layer chain", pair[0].out_dim, pair[1].in_dim));
            }
        }
        for l in &layers {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(Error::Input("layer dimensions must be positive".into()));
            }
            if l.weights.len() != l.in_dim * l.out_dim {
                return Err(Error::dim("layer weights", l.in_dim * l.out_dim, l.weights.len()));
            }
            if l.bias.len() != l.out_dim {
                return Err(Error::dim("layer bias", l.out_dim, l.bias.len()));
            }
            if !l.weights.iter().chain(&l.bias).all(|v| v.is_finite()) {
                return Err(Error::Input("policy parameters must be finite".into()));
            }
        }
        Ok(Self { layers })
    }

    /// All-zero network with layer sizes `[state_dim, hidden.., action_dim]`.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Input("need at least input and output sizes".into()));
        }
        Self::from_layers(sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect())
    }

    /// Weights uniform in `[-s, s]` with `s = init_scale / sqrt(fan_in)`, zero biases.
    pub fn random(sizes: &[usize], init_scale: f64, rng: &mut RngStream) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for layer in &mut net.layers {
            let s = init_scale / (layer.in_dim as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.symmetric_uniform(s);
            }
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].in_dim)
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn state_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn action_dim(&self) -> usize {
        self.layers.last().map(|l| l.out_dim).unwrap_or(0)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::dim("parameter vector", self.num_params(), params.len()));
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|p| *p = it.next().unwrap());
        }
        Ok(())
    }

    pub fn forward(&self, s: &State) -> Result<Action> {
        if s.dim() != self.state_dim() {
            return Err(Error::dim("policy input", self.state_dim(), s.dim()));
        }
        Ok(Action::new(self.forward_slice(s.as_slice())))
    }

    pub(crate) fn forward_slice(&self, x: &[f64]) -> Vec<f64> {
        let mut current = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.out_dim];
            layer.affine(&current, &mut next);
            if i != last {
                next.iter_mut().for_each(|v| *v = v.tanh());
            }
            current = next;
        }
        current
    }

    /// Forward pass retaining each layer's post-activation output; `acts[0]` is the input.
    fn forward_trace(&self, x: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.clear();
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.out_dim];
            layer.affine(&acts[i], &mut next);
            if i != last {
                next.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(next);
        }
    }

    /// Accumulates `scale * ∇_θ ‖π(x) − y‖²` into `grad` and returns `‖π(x) − y‖²`.
    fn accumulate_gradient(
        &self,
        x: &[f64],
        y: &[f64],
        scale: f64,
        acts: &mut Vec<Vec<f64>>,
        grad: &mut Gradient,
    ) -> f64 {
        self.forward_trace(x, acts);
        let out = acts.last().unwrap();
        let mut sq = 0.0;
        let mut delta: Vec<f64> = out
            .iter()
            .zip(y)
            .map(|(o, t)| {
                let r = o - t;
                sq += r * r;
                2.0 * scale * r
            })
            .collect();

        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &acts[li];
            let g = &mut grad.layers[li];
            for (o, d) in delta.iter().enumerate() {
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (gw, xi) in row.iter_mut().zip(input) {
                    *gw += d * xi;
                }
            }
            if li > 0 {
                let mut prev = vec![0.0; layer.in_dim];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    *p *= 1.0 - a * a;
                }
                delta = prev;
            }
        }
        sq
    }

    fn apply_step(&mut self, grad: &Gradient, learning_rate: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (w, gw) in l.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * gw;
            }
            for (b, gb) in l.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * gb;
            }
        }
    }

    fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Text checkpoint: a header line, the layer sizes, then every parameter
    /// on its own line (per layer: weights row-major, then biases). Values use
    /// the shortest round-trip representation, so save/load is bit-exact.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CHECKPOINT_MAGIC}")?;
        let sizes: Vec<String> = self.layer_sizes().iter().map(|s| s.to_string()).collect();
        writeln!(w, "layers {}", sizes.join(" "))?;
        for p in self.params() {
            writeln!(w, "{p:?}")?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next_line = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Checkpoint("unexpected end of file".into()))?
                .map_err(Error::from)
        };
        if next_line()?.trim() != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("missing header".into()));
        }
        let sizes_line = next_line()?;
        let sizes = sizes_line
            .trim()
            .strip_prefix("layers")
            .ok_or_else(|| Error::Checkpoint("expected `layers` line".into()))?
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::Checkpoint(format!("layer size `{t}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut net = Self::zeros(&sizes)?;
        let mut params = Vec::with_capacity(net.num_params());
        for _ in 0..net.num_params() {
            let line = next_line()?;
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|e| Error::Checkpoint(format!("parameter `{}`: {e}", line.trim())))?;
            params.push(v);
        }
        net.set_params(&params)?;
        if !net.all_finite() {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_checkpoint(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_checkpoint(std::io::BufReader::new(f))
    }
}

/// One regression example: state, demonstrator target and its trajectory weight.
#[derive(Debug, Clone, Copy)]
struct Sample<'a> {
    state: &'a [f64],
    target: &'a [f64],
    weight: f64,
}

fn collect_samples<'a, I>(policy: &PolicyNetwork, trajectories: I, weights: &[f64]) -> Result<Vec<Sample<'a>>>
where
    I: IntoIterator<Item = &'a Trajectory>,
{
    let mut samples = Vec::new();
    let mut count = 0;
    for (traj, &w) in trajectories.into_iter().zip(weights.iter().chain(std::iter::repeat(&f64::NAN))) {
        count += 1;
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::Input(format!("trajectory weights must be finite and >= 0, got {w}")));
        }
        let demo = traj.demonstrator_actions()?;
        for (s, a) in traj.states.iter().zip(demo) {
            if s.dim() != policy.state_dim() {
                return Err(Error::dim("policy input", policy.state_dim(), s.dim()));
            }
            if a.dim() != policy.action_dim() {
                return Err(Error::dim("policy output", policy.action_dim(), a.dim()));
            }
            samples.push(Sample {
                state: s.as_slice(),
                target: a.as_slice(),
                weight: w,
            });
        }
    }
    if count != weights.len() {
        return Err(Error::dim("trajectory weights", count, weights.len()));
    }
    Ok(samples)
}

fn total_weight(samples: &[Sample<'_>]) -> Result<f64> {
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    if total > 0.0 {
        Ok(total)
    } else {
        Err(Error::DegenerateWeights)
    }
}

fn sample_loss(policy: &PolicyNetwork, samples: &[Sample<'_>]) -> Result<f64> {
    let total = total_weight(samples)?;
    let sum: f64 = samples
        .iter()
        .filter(|s| s.weight > 0.0)
        .map(|s| {
            let out = policy.forward_slice(s.state);
            s.weight * out.iter().zip(s.target).map(|(o, t)| (o - t) * (o - t)).sum::<f64>()
        })
        .sum();
    Ok(sum / total)
}

/// Self-normalized weighted behavior-cloning loss over one batch.
pub fn weighted_bc_loss(policy: &PolicyNetwork, batch: &EpisodeBatch, weights: &[f64]) -> Result<f64> {
    sample_loss(policy, &collect_samples(policy, batch.iter(), weights)?)
}

/// As [`weighted_bc_loss`], over several batches with weights aligned to the
/// flattened trajectory list.
pub fn weighted_bc_loss_all(policy: &PolicyNetwork, data: &[EpisodeBatch], weights: &[f64]) -> Result<f64> {
    sample_loss(policy, &collect_samples(policy, data.iter().flat_map(|b| b.iter()), weights)?)
}

/// Exact gradient of [`weighted_bc_loss`] with respect to every parameter.
pub fn gradient(policy: &PolicyNetwork, batch: &EpisodeBatch, weights: &[f64]) -> Result<Gradient> {
    let samples = collect_samples(policy, batch.iter(), weights)?;
    let total = total_weight(&samples)?;
    let mut grad = Gradient::zeros_like(policy);
    let mut acts = Vec::new();
    for s in samples.iter().filter(|s| s.weight > 0.0) {
        policy.accumulate_gradient(s.state, s.target, s.weight / total, &mut acts, &mut grad);
    }
    Ok(grad)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: PolicyNetwork,
    /// Weighted loss on the full dataset before the first update.
    pub initial_loss: f64,
    /// Weighted loss on the full dataset after the last update.
    pub final_loss: f64,
    /// Sum of pre-update minibatch losses, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Minibatch gradient descent on the weighted loss over all of `data`.
///
/// Zero-weight trajectories are dropped before batching, so they influence
/// neither the gradients nor the minibatch composition. Each minibatch
/// gradient is scaled to be an unbiased estimate of the full-dataset gradient.
pub fn train(
    policy: PolicyNetwork,
    data: &[EpisodeBatch],
    weights: &[f64],
    cfg: &TrainConfig,
    rng: &mut RngStream,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut policy = policy;
    let samples: Vec<Sample<'_>> = collect_samples(&policy, data.iter().flat_map(|b| b.iter()), weights)?
        .into_iter()
        .filter(|s| s.weight > 0.0)
        .collect();
    if samples.is_empty() {
        return Err(Error::DegenerateWeights);
    }
    let total = total_weight(&samples)?;
    let initial_loss = sample_loss(&policy, &samples)?;
    let n = samples.len();
    let mb = cfg.minibatch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = Gradient::zeros_like(&policy);
    let mut acts = Vec::new();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        if mb < n {
            order.shuffle(rng);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(mb) {
            grad.layers.iter_mut().for_each(|l| {
                l.weights.iter_mut().for_each(|g| *g = 0.0);
                l.bias.iter_mut().for_each(|g| *g = 0.0);
            });
            let scale = n as f64 / (chunk.len() as f64 * total);
            for &i in chunk {
                let s = samples[i];
                let sq = policy.accumulate_gradient(s.state, s.target, s.weight * scale, &mut acts, &mut grad);
                epoch_loss += s.weight * sq / total;
            }
            policy.apply_step(&grad, cfg.learning_rate);
        }
        if !epoch_loss.is_finite() || !policy.all_finite() {
            return Err(Error::Divergence {
                epoch,
                learning_rate: cfg.learning_rate,
            });
        }
        epoch_losses.push(epoch_loss);
    }
    let final_loss = sample_loss(&policy, &samples)?;
    if !final_loss.is_finite() {
        return Err(Error::Divergence {
            epoch: cfg.epochs,
            learning_rate: cfg.learning_rate,
        });
    }
    Ok(TrainOutcome {
        policy,
        initial_loss,
        final_loss,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::TrajectoryMeta;

    fn traj_from(states: Vec<Vec<f64>>, demo: Vec<Vec<f64>>) -> Trajectory {
        let actions: Vec<Action> = demo.iter().cloned().map(Action::new).collect();
        Trajectory::new(
            states.into_iter().map(State::new).collect(),
            actions.clone(),
            Some(actions),
            TrajectoryMeta::default(),
        )
        .unwrap()
    }

    /// Naive oracle: explicit matrix-vector products, independent of `Layer::affine`.
    fn naive_forward(net: &PolicyNetwork, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let n = net.layers().len();
        for (li, l) in net.layers().iter().enumerate() {
            let mut z = Vec::new();
            for o in 0..l.out_dim {
                let mut acc = l.bias[o];
                for i in 0..l.in_dim {
                    acc += l.weights[o * l.in_dim + i] * a[i];
                }
                z.push(if li + 1 < n { acc.tanh() } else { acc });
            }
            a = z;
        }
        a
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = PolicyNetwork::zeros(&[3, 8, 8, 2]).unwrap();
        let out = net.forward(&State::new(vec![1.0, -2.0, 5.0])).unwrap();
        assert_eq!(out.0, vec![0.0, 0.0]);
    }

    #[test]
    fn unit_weight_chain_at_origin_is_zero() {
        let mut layers = Vec::new();
        for _ in 0..3 {
            let mut l = Layer::zeros(1, 1);
            l.weights[0] = 1.0;
            layers.push(l);
        }
        let net = PolicyNetwork::from_layers(layers).unwrap();
        assert_eq!(net.forward(&State::new(vec![0.0])).unwrap().0, vec![0.0]);
        let x: f64 = 0.7;
        assert_eq!(net.forward(&State::new(vec![x])).unwrap().0, vec![x.tanh().tanh()]);
    }

    #[test]
    fn forward_matches_naive_oracle() {
        let mut rng = RngStream::from_seed(11);
        for _ in 0..10 {
            let net = PolicyNetwork::random(&[4, 7, 5, 3], 1.0, &mut rng).unwrap();
            let x: Vec<f64> = (0..4).map(|_| rng.symmetric_uniform(2.0)).collect();
            let got = net.forward(&State::new(x.clone())).unwrap();
            let want = naive_forward(&net, &x);
            for (g, w) in got.0.iter().zip(&want) {
                assert!((g - w).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let net = PolicyNetwork::zeros(&[2, 4, 1]).unwrap();
        assert!(matches!(net.forward(&State::zeros(3)), Err(Error::Dimension { .. })));
    }

    #[test]
    fn loss_examples() {
        let net = PolicyNetwork::zeros(&[1, 2, 2]).unwrap();
        let one = EpisodeBatch::new(0, vec![traj_from(vec![vec![0.0], vec![0.0]], vec![vec![1.0, 0.0]])]).unwrap();
        assert_eq!(weighted_bc_loss(&net, &one, &[1.0]).unwrap(), 1.0);

        // squared residual norms 1 and 4, weights 1 and 3, T = 1
        let two = EpisodeBatch::new(
            0,
            vec![
                traj_from(vec![vec![0.0], vec![0.0]], vec![vec![1.0, 0.0]]),
                traj_from(vec![vec![0.0], vec![0.0]], vec![vec![0.0, 2.0]]),
            ],
        )
        .unwrap();
        let got = weighted_bc_loss(&net, &two, &[1.0, 3.0]).unwrap();
        assert!((got - 3.25).abs() < 1e-15);
        assert!((weighted_bc_loss(&net, &two, &[10.0, 30.0]).unwrap() - 3.25).abs() < 1e-15);
    }

    #[test]
    fn loss_requires_demonstrator_actions_and_aligned_weights() {
        let net = PolicyNetwork::zeros(&[1, 2, 1]).unwrap();
        let t = Trajectory::new(
            vec![State::zeros(1); 2],
            vec![Action::zeros(1)],
            None,
            TrajectoryMeta::default(),
        )
        .unwrap();
        let batch = EpisodeBatch::new(0, vec![t]).unwrap();
        assert!(matches!(weighted_bc_loss(&net, &batch, &[1.0]), Err(Error::Input(_))));
        let ok = EpisodeBatch::new(0, vec![traj_from(vec![vec![0.0], vec![0.0]], vec![vec![1.0]])]).unwrap();
        assert!(matches!(weighted_bc_loss(&net, &ok, &[1.0, 1.0]), Err(Error::Dimension { .. })));
        assert!(matches!(weighted_bc_loss(&net, &ok, &[0.0]), Err(Error::DegenerateWeights)));
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let mut rng = RngStream::from_seed(5);
        let net = PolicyNetwork::random(&[2, 6, 6, 1], 1.0, &mut rng).unwrap();
        let states = vec![vec![0.3, -0.1], vec![1.0, 0.5], vec![0.0, 0.0]];
        let demo = states[..2].iter().map(|s| net.forward_slice(s)).collect();
        let batch = EpisodeBatch::new(0, vec![traj_from(states, demo)]).unwrap();
        assert_eq!(weighted_bc_loss(&net, &batch, &[1.0]).unwrap(), 0.0);
        assert_eq!(gradient(&net, &batch, &[1.0]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn gradient_invariant_to_weight_scaling() {
        let mut rng = RngStream::from_seed(9);
        let net = PolicyNetwork::random(&[2, 5, 5, 2], 1.0, &mut rng).unwrap();
        let batch = EpisodeBatch::new(
            0,
            vec![
                traj_from(vec![vec![0.1, 0.2], vec![0.3, 0.4]], vec![vec![1.0, -1.0]]),
                traj_from(vec![vec![-0.5, 0.9], vec![0.0, 0.0]], vec![vec![0.2, 0.7]]),
            ],
        )
        .unwrap();
        let g1 = gradient(&net, &batch, &[1.0, 0.5]).unwrap().flat();
        let g3 = gradient(&net, &batch, &[3.0, 1.5]).unwrap().flat();
        for (a, b) in g1.iter().zip(&g3) {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }

    #[test]
    fn training_fits_linear_map() {
        let mut rng = RngStream::from_seed(21);
        let mut trajs = Vec::new();
        for _ in 0..8 {
            let states: Vec<Vec<f64>> = (0..6)
                .map(|_| vec![rng.symmetric_uniform(1.0), rng.symmetric_uniform(1.0)])
                .collect();
            let demo = states[..5].iter().map(|s| vec![0.5 * s[0] - 0.3 * s[1]]).collect();
            trajs.push(traj_from(states, demo));
        }
        let data = vec![EpisodeBatch::new(0, trajs).unwrap()];
        let cfg = TrainConfig {
            learning_rate: 0.05,
            epochs: 500,
            minibatch_size: 16,
            hidden: vec![8, 8],
            ..TrainConfig::default()
        };
        let init = PolicyNetwork::random(&[2, 8, 8, 1], 1.0, &mut rng.split(0)).unwrap();
        let out = train(init, &data, &[1.0; 8], &cfg, &mut rng.split(1)).unwrap();
        assert!(out.final_loss < 0.01 * out.initial_loss, "{} vs {}", out.final_loss, out.initial_loss);
    }

    #[test]
    fn training_is_deterministic_and_ignores_zero_weight_trajectories() {
        let a = traj_from(vec![vec![0.1], vec![0.2], vec![0.3]], vec![vec![1.0], vec![0.5]]);
        let b = traj_from(vec![vec![-0.4], vec![0.9], vec![0.0]], vec![vec![-1.0], vec![2.0]]);
        let cfg = TrainConfig {
            learning_rate: 0.05,
            epochs: 50,
            minibatch_size: 1,
            hidden: vec![4, 4],
            ..TrainConfig::default()
        };
        let init = PolicyNetwork::random(&[1, 4, 4, 1], 1.0, &mut RngStream::new(1, 0)).unwrap();
        let run = |data: Vec<Trajectory>, w: &[f64]| {
            let data = vec![EpisodeBatch::new(0, data).unwrap()];
            train(init.clone(), &data, w, &cfg, &mut RngStream::new(2, 0)).unwrap().policy
        };
        let both = run(vec![a.clone(), b.clone()], &[0.0, 1.0]);
        let alone = run(vec![b.clone()], &[1.0]);
        assert_eq!(both, alone);
        assert_eq!(run(vec![b.clone(), a.clone()], &[2.0, 0.0]), alone);
        assert_eq!(run(vec![a.clone(), b.clone()], &[1.0, 1.0]), run(vec![a, b], &[1.0, 1.0]));
    }

    #[test]
    fn divergence_is_reported() {
        let t = traj_from(vec![vec![10.0], vec![10.0]], vec![vec![1e3]]);
        let data = vec![EpisodeBatch::new(0, vec![t]).unwrap()];
        let cfg = TrainConfig {
            learning_rate: 1e6,
            epochs: 100,
            minibatch_size: 1,
            hidden: vec![4],
            ..TrainConfig::default()
        };
        let init = PolicyNetwork::random(&[1, 4, 1], 1.0, &mut RngStream::new(3, 0)).unwrap();
        let err = train(init, &data, &[1.0], &cfg, &mut RngStream::new(3, 1)).unwrap_err();
        assert!(matches!(err, Error::Divergence { learning_rate, .. } if learning_rate == 1e6));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut rng = RngStream::from_seed(77);
        let net = PolicyNetwork::random(&[3, 5, 4, 2], 1.3, &mut rng).unwrap();
        let mut buf = Vec::new();
        net.write_checkpoint(&mut buf).unwrap();
        let back = PolicyNetwork::read_checkpoint(&buf[..]).unwrap();
        let bits = |n: &PolicyNetwork| n.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&net), bits(&back));
        assert_eq!(back.layer_sizes(), vec![3, 5, 4, 2]);
    }

    #[test]
    fn checkpoint_rejects_truncation() {
        let net = PolicyNetwork::zeros(&[2, 3, 1]).unwrap();
        let mut buf = Vec::new();
        net.write_checkpoint(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(PolicyNetwork::read_checkpoint(cut.as_bytes()).is_err());
    }
}
