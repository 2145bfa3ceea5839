//! One-hidden-layer binary classifier stored as a flat genome, with
//! mini-batch SGD on cross entropy or on the generalized entropy indices.
//!
//! Genome layout for `input_dim = d`, `hidden = h`:
//!
//! | range                  | content                          |
//! |------------------------|----------------------------------|
//! | `0 .. h*d`             | input→hidden weights, row `k` = unit `k` |
//! | `h*d .. h*d+h`         | hidden biases                    |
//! | `h*d+h .. h*d+2h`      | hidden→output weights            |
//! | `h*d+2h`               | output bias                      |

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroupPartition};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricId, PROB_EPS};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, a: f64) -> f64 {
        match self {
            Activation::Relu => a.max(0.0),
            Activation::Tanh => a.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation and output.
    fn derivative(self, a: f64, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - out * out,
        }
    }
}

/// Network shape: `input_dim → hidden (activation) → 1 (sigmoid)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input_dim: usize,
    pub hidden: usize,
    #[serde(default)]
    pub activation: Activation,
}

impl NetSpec {
    pub fn new(input_dim: usize, hidden: usize) -> Result<Self> {
        let spec = Self {
            input_dim,
            hidden,
            activation: Activation::Relu,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 {
            return Err(Error::config("network needs input_dim >= 1 and hidden >= 1"));
        }
        Ok(())
    }

    pub fn genome_len(&self) -> usize {
        self.hidden * (self.input_dim + 1) + self.hidden + 1
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden * self.input_dim;
        (w1, w1 + self.hidden, w1 + 2 * self.hidden)
    }
}

/// Flat weights and biases of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome(pub Vec<f64>);

impl Genome {
    pub fn zeros(spec: &NetSpec) -> Self {
        Genome(vec![0.0; spec.genome_len()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn check(&self, spec: &NetSpec) -> Result<()> {
        if self.0.len() != spec.genome_len() {
            return Err(Error::data(format!(
                "genome length {} does not match network ({})",
                self.0.len(),
                spec.genome_len()
            )));
        }
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("genome contains non-finite weights"));
        }
        Ok(())
    }
}

/// Glorot-uniform weights per layer, zero biases.
pub fn init_genome(spec: &NetSpec, seed: u64) -> Genome {
    let mut rng = seed::rng(seed);
    let mut g = Genome::zeros(spec);
    let (b1, w2, _) = spec.offsets();
    let hidden_bound = (6.0 / (spec.input_dim + spec.hidden) as f64).sqrt();
    for w in &mut g.0[..b1] {
        *w = rng.random_range(-hidden_bound..=hidden_bound);
    }
    let out_bound = (6.0 / (spec.hidden + 1) as f64).sqrt();
    for w in &mut g.0[w2..w2 + spec.hidden] {
        *w = rng.random_range(-out_bound..=out_bound);
    }
    g
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Hidden pre-activations, activations, output logit and clamped probability.
struct Pass {
    pre: Vec<f64>,
    act: Vec<f64>,
    prob: f64,
    clamped: bool,
}

fn pass(spec: &NetSpec, w: &[f64], x: &[f64]) -> Pass {
    let (b1, w2, b2) = spec.offsets();
    let d = spec.input_dim;
    let mut pre = Vec::with_capacity(spec.hidden);
    let mut act = Vec::with_capacity(spec.hidden);
    let mut z = w[b2];
    for k in 0..spec.hidden {
        let row = &w[k * d..(k + 1) * d];
        let a = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[b1 + k];
        let h = spec.activation.apply(a);
        z += w[w2 + k] * h;
        pre.push(a);
        act.push(h);
    }
    let raw = sigmoid(z);
    let prob = raw.clamp(PROB_EPS, 1.0 - PROB_EPS);
    Pass {
        pre,
        act,
        prob,
        clamped: prob != raw,
    }
}

/// Positive-class probability, clamped to `[1e-12, 1 - 1e-12]`.
pub fn forward(spec: &NetSpec, g: &Genome, x: &[f64]) -> Result<f64> {
    if x.len() != spec.input_dim {
        return Err(Error::data(format!(
            "feature row has width {}, network expects {}",
            x.len(),
            spec.input_dim
        )));
    }
    if g.len() != spec.genome_len() {
        return Err(Error::data("genome length does not match network"));
    }
    Ok(pass(spec, &g.0, x).prob)
}

pub fn predict_all(spec: &NetSpec, g: &Genome, ds: &Dataset) -> Result<Vec<f64>> {
    if ds.width() != spec.input_dim {
        return Err(Error::data(format!(
            "dataset has width {}, network expects {}",
            ds.width(),
            spec.input_dim
        )));
    }
    if g.len() != spec.genome_len() {
        return Err(Error::data("genome length does not match network"));
    }
    Ok(ds.rows().map(|x| pass(spec, &g.0, x).prob).collect())
}

/// Differentiable training losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Loss {
    CrossEntropy,
    IndividualEntropy,
    GroupEntropy,
}

impl Loss {
    pub fn metric(self) -> MetricId {
        match self {
            Loss::CrossEntropy => MetricId::Ce,
            Loss::IndividualEntropy => MetricId::Fi,
            Loss::GroupEntropy => MetricId::Fg,
        }
    }

    pub fn from_metric(m: MetricId) -> Result<Self> {
        match m {
            MetricId::Ce => Ok(Loss::CrossEntropy),
            MetricId::Fi => Ok(Loss::IndividualEntropy),
            MetricId::Fg => Ok(Loss::GroupEntropy),
            other => Err(Error::config(format!("{other} cannot be used as a training loss"))),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.metric().fmt(f)
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Loss::from_metric(s.parse()?)
    }
}

impl TryFrom<String> for Loss {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Loss> for String {
    fn from(l: Loss) -> String {
        l.to_string()
    }
}

/// Loss value on `batch`.
pub fn loss_value(
    spec: &NetSpec,
    g: &Genome,
    batch: &Dataset,
    part: &GroupPartition,
    loss: Loss,
    alpha: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::data("loss over an empty batch"));
    }
    let probs = predict_all(spec, g, batch)?;
    match loss {
        Loss::CrossEntropy => metrics::cross_entropy(&probs, batch.labels()),
        Loss::IndividualEntropy => {
            metrics::generalized_entropy(&metrics::benefit_vector(&probs, batch.labels())?, alpha)
        }
        Loss::GroupEntropy => metrics::group_entropy_by_ids(
            &metrics::benefit_vector(&probs, batch.labels())?,
            part.group_of(),
            part.n_groups(),
            alpha,
        ),
    }
}

/// Loss value and gradient over the rows `idx` of `ds`.
fn batch_gradient(
    spec: &NetSpec,
    w: &[f64],
    ds: &Dataset,
    part: &GroupPartition,
    idx: &[usize],
    loss: Loss,
    alpha: f64,
    grad: &mut [f64],
) -> Result<f64> {
    let passes: Vec<Pass> = idx.iter().map(|&i| pass(spec, w, ds.row(i))).collect();
    let labels: Vec<u8> = idx.iter().map(|&i| ds.labels()[i]).collect();
    let probs: Vec<f64> = passes.iter().map(|p| p.prob).collect();
    let n = idx.len() as f64;

    // dL/dz for each row, z being the output logit.
    let (value, dz): (f64, Vec<f64>) = match loss {
        Loss::CrossEntropy => {
            let v = metrics::cross_entropy(&probs, &labels)?;
            let dz = passes
                .iter()
                .zip(&labels)
                .map(|(p, &y)| if p.clamped { 0.0 } else { (p.prob - f64::from(y)) / n })
                .collect();
            (v, dz)
        }
        Loss::IndividualEntropy | Loss::GroupEntropy => {
            let b = metrics::benefit_vector(&probs, &labels)?;
            let (v, db) = if loss == Loss::IndividualEntropy {
                (
                    metrics::generalized_entropy(&b, alpha)?,
                    metrics::generalized_entropy_grad(&b, alpha)?,
                )
            } else {
                let groups: Vec<usize> = idx.iter().map(|&i| part.group_of()[i]).collect();
                (
                    metrics::group_entropy_by_ids(&b, &groups, part.n_groups(), alpha)?,
                    metrics::group_entropy_grad(&b, &groups, part.n_groups(), alpha)?,
                )
            };
            let dz = passes
                .iter()
                .zip(db)
                .map(|(p, g)| if p.clamped { 0.0 } else { g * p.prob * (1.0 - p.prob) })
                .collect();
            (v, dz)
        }
    };

    let (b1, w2, b2) = spec.offsets();
    let d = spec.input_dim;
    for ((&i, p), dz) in idx.iter().zip(&passes).zip(dz) {
        if dz == 0.0 {
            continue;
        }
        let x = ds.row(i);
        grad[b2] += dz;
        for k in 0..spec.hidden {
            grad[w2 + k] += dz * p.act[k];
            let dh = dz * w[w2 + k] * spec.activation.derivative(p.pre[k], p.act[k]);
            if dh != 0.0 {
                grad[b1 + k] += dh;
                for (gw, xj) in grad[k * d..(k + 1) * d].iter_mut().zip(x) {
                    *gw += dh * xj;
                }
            }
        }
    }
    Ok(value)
}

/// Loss and its gradient with respect to the genome over all of `ds`.
pub fn loss_gradient(
    spec: &NetSpec,
    g: &Genome,
    ds: &Dataset,
    part: &GroupPartition,
    loss: Loss,
    alpha: f64,
) -> Result<(f64, Vec<f64>)> {
    g.check(spec)?;
    if ds.is_empty() {
        return Err(Error::data("loss over an empty batch"));
    }
    if ds.width() != spec.input_dim || part.len() != ds.len() {
        return Err(Error::data("dataset does not match network or partition"));
    }
    let idx: Vec<usize> = (0..ds.len()).collect();
    let mut grad = vec![0.0; g.len()];
    let v = batch_gradient(spec, &g.0, ds, part, &idx, loss, alpha, &mut grad)?;
    Ok((v, grad))
}

/// Settings for one partial-training call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs_per_partial: usize,
    pub loss: Loss,
    pub alpha: f64,
    pub seed: u64,
}

impl TrainSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("learning_rate must be finite and non-negative"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        Ok(())
    }
}

/// Runs `epochs_per_partial` shuffled passes of mini-batch SGD and returns
/// the updated genome; the input is left untouched.
pub fn partial_train(
    spec: &NetSpec,
    g: &Genome,
    train: &Dataset,
    part: &GroupPartition,
    ts: &TrainSpec,
) -> Result<Genome> {
    ts.validate()?;
    g.check(spec)?;
    if train.is_empty() || train.width() != spec.input_dim || part.len() != train.len() {
        return Err(Error::data("training data does not match network or partition"));
    }
    let mut w = g.0.clone();
    let mut rng = seed::rng(ts.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grad = vec![0.0; w.len()];
    for epoch in 0..ts.epochs_per_partial {
        order.shuffle(&mut rng);
        for (step, batch) in order.chunks(ts.batch_size).enumerate() {
            grad.iter_mut().for_each(|v| *v = 0.0);
            batch_gradient(spec, &w, train, part, batch, ts.loss, ts.alpha, &mut grad)?;
            if let Some(j) = grad.iter().position(|v| !v.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite {} gradient at weight {j} (epoch {epoch}, step {step})",
                    ts.loss
                )));
            }
            for (wi, gi) in w.iter_mut().zip(&grad) {
                *wi -= ts.learning_rate * gi;
            }
        }
    }
    Ok(Genome(w))
}
