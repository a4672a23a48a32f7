//! Domain types shared by all modules.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::{Rng, RngExt};

use crate::error::{CoreError, Result};
use crate::math::softmax;
use crate::rng::StreamRng;

/// A test or training input: either a coin index into a finite input space or
/// a real feature vector.
///
/// Equality and hashing are representation-exact (bitwise on feature entries),
/// which is what batch deduplication under anchor resampling relies on:
/// repeated inputs in a batch are clones and therefore compare equal.
#[derive(Debug, Clone)]
pub enum Input {
    Coin(usize),
    Features(Arc<[f64]>),
}

impl Input {
    pub fn features(values: Vec<f64>) -> Self {
        Input::Features(values.into())
    }

    /// Feature dimension, if this is a feature vector.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Input::Coin(_) => None,
            Input::Features(v) => Some(v.len()),
        }
    }

    pub fn as_features(&self) -> Result<&[f64]> {
        match self {
            Input::Features(v) => Ok(v),
            Input::Coin(i) => Err(CoreError::Domain(format!(
                "expected feature vector, got coin index {i}"
            ))),
        }
    }

    pub fn as_coin(&self) -> Result<usize> {
        match self {
            Input::Coin(i) => Ok(*i),
            Input::Features(_) => Err(CoreError::Domain(
                "expected coin index, got feature vector".into(),
            )),
        }
    }
}

impl PartialEq for Input {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Input::Coin(a), Input::Coin(b)) => a == b,
            (Input::Features(a), Input::Features(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b.iter())
                        .all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

impl Eq for Input {}

impl Hash for Input {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Input::Coin(i) => {
                state.write_u8(0);
                state.write_usize(*i);
            }
            Input::Features(v) => {
                state.write_u8(1);
                state.write_usize(v.len());
                for x in v.iter() {
                    state.write_u64(x.to_bits());
                }
            }
        }
    }
}

/// A probability distribution over `C >= 2` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbs(Vec<f64>);

impl ClassProbs {
    const SUM_TOL: f64 = 1e-9;

    /// Validates entries in `[0, 1]` summing to 1 within `1e-9`, `C >= 2`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(CoreError::InvalidProbs(format!(
                "need at least 2 classes, got {}",
                probs.len()
            )));
        }
        let mut sum = 0.0;
        for &p in &probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(CoreError::InvalidProbs(format!("entry {p} outside [0, 1]")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(CoreError::InvalidProbs(format!("entries sum to {sum}")));
        }
        Ok(ClassProbs(probs))
    }

    /// Two-class distribution with `p` on class 1.
    pub fn bernoulli(p: f64) -> Result<Self> {
        ClassProbs::new(vec![1.0 - p, p])
    }

    pub fn uniform(classes: usize) -> Result<Self> {
        ClassProbs::new(vec![1.0 / classes as f64; classes])
    }

    /// Softmax over logits.
    pub fn from_logits(logits: &[f64]) -> Result<Self> {
        ClassProbs::new(softmax(logits))
    }

    /// Point mass on `label` (used by deterministic-label environments).
    pub fn certain(label: usize, classes: usize) -> Result<Self> {
        if label >= classes {
            return Err(CoreError::LabelOutOfRange { label, classes });
        }
        let mut v = vec![0.0; classes];
        v[label] = 1.0;
        ClassProbs::new(v)
    }

    pub fn class_count(&self) -> usize {
        self.0.len()
    }

    pub fn prob(&self, label: usize) -> Result<f64> {
        self.0
            .get(label)
            .copied()
            .ok_or(CoreError::LabelOutOfRange {
                label,
                classes: self.0.len(),
            })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Draws a class label by inverse CDF.
    pub fn sample_label<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.0.len() - 1
    }
}

/// A conditional class-probability function over inputs.
///
/// The conditional is deterministic given the instance; all label randomness
/// lives in sampling. The same type serves as a true environment and as one
/// imagined-environment draw from an agent's belief, which are the same kind
/// of object.
#[derive(Clone)]
pub struct Environment {
    class_count: usize,
    conditional: Arc<dyn Fn(&Input) -> Result<ClassProbs> + Send + Sync>,
}

impl Environment {
    pub fn new<F>(class_count: usize, conditional: F) -> Self
    where
        F: Fn(&Input) -> Result<ClassProbs> + Send + Sync + 'static,
    {
        Environment {
            class_count,
            conditional: Arc::new(conditional),
        }
    }

    pub fn class_probs(&self, input: &Input) -> Result<ClassProbs> {
        (self.conditional)(input)
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }
}

impl fmt::Debug for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Environment")
            .field("class_count", &self.class_count)
            .finish_non_exhaustive()
    }
}

/// Labelled training pairs.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pairs: Vec<(Input, usize)>,
    class_count: usize,
}

impl TrainingData {
    pub fn new(pairs: Vec<(Input, usize)>, class_count: usize) -> Result<Self> {
        if class_count < 2 {
            return Err(CoreError::InvalidArgument(format!(
                "need at least 2 classes, got {class_count}"
            )));
        }
        for (_, label) in &pairs {
            if *label >= class_count {
                return Err(CoreError::LabelOutOfRange {
                    label: *label,
                    classes: class_count,
                });
            }
        }
        Ok(TrainingData { pairs, class_count })
    }

    pub fn empty(class_count: usize) -> Result<Self> {
        TrainingData::new(Vec::new(), class_count)
    }

    pub fn pairs(&self) -> &[(Input, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }
}

/// `tau` test inputs with their realized labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TestBatch {
    inputs: Vec<Input>,
    labels: Vec<usize>,
}

impl TestBatch {
    pub fn new(inputs: Vec<Input>, labels: Vec<usize>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(CoreError::InvalidArgument("empty test batch".into()));
        }
        if inputs.len() != labels.len() {
            return Err(CoreError::InvalidArgument(format!(
                "{} inputs but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        Ok(TestBatch { inputs, labels })
    }

    pub fn inputs(&self) -> &[Input] {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// The batch order `tau`.
    pub fn order(&self) -> usize {
        self.inputs.len()
    }
}

/// A trained (or analytic) agent: a sampler of imagined environments.
///
/// Successive calls with independent rng states are conditionally i.i.d.
/// draws from the agent's belief; each returned environment is internally
/// deterministic.
pub trait Agent: Send + Sync {
    fn name(&self) -> &str;

    fn class_count(&self) -> usize;

    fn sample_imagined(&self, rng: &mut StreamRng) -> Environment;
}

/// A Monte-Carlo estimate of an expected log-likelihood ratio, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_terms: usize,
}
