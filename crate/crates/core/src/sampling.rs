//! Test-input sampling schemes: i.i.d. draws from the input distribution and
//! polyadic anchor resampling (monadic and dyadic as named special cases).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::rng::{child_rng, stream_rng, StreamRng};
use crate::types::{Environment, Input, TestBatch};

/// The distribution test inputs (and polyadic anchors) are drawn from.
#[derive(Debug, Clone)]
pub enum InputDistribution {
    /// Uniform over coin indices `0..M`, `M >= 1`.
    UniformCoins(usize),
    /// I.i.d. standard normal feature vectors of dimension `D >= 1`.
    StandardGaussian(usize),
    /// Uniform (with replacement) over a nonempty stored pool.
    EmpiricalPool(Arc<[Input]>),
}

impl InputDistribution {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Input {
        match self {
            InputDistribution::UniformCoins(m) => {
                assert!(*m >= 1, "coin count must be at least 1");
                Input::Coin(rng.random_range(0..*m))
            }
            InputDistribution::StandardGaussian(d) => {
                assert!(*d >= 1, "dimension must be at least 1");
                let v: Vec<f64> = (0..*d).map(|_| StandardNormal.sample(rng)).collect();
                Input::features(v)
            }
            InputDistribution::EmpiricalPool(pool) => {
                assert!(!pool.is_empty(), "empirical pool must be nonempty");
                pool[rng.random_range(0..pool.len())].clone()
            }
        }
    }
}

/// How the `tau` test inputs of a batch are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SamplerSpec(Kind);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Iid,
    Polyadic(usize),
}

impl SamplerSpec {
    /// Every input drawn independently from the input distribution.
    pub fn iid() -> Self {
        SamplerSpec(Kind::Iid)
    }

    /// Draw `kappa >= 1` anchors i.i.d., then resample the batch uniformly
    /// from the anchors.
    pub fn polyadic(kappa: usize) -> Result<Self> {
        if kappa == 0 {
            return Err(CoreError::InvalidArgument(
                "polyadic order must be at least 1".into(),
            ));
        }
        Ok(SamplerSpec(Kind::Polyadic(kappa)))
    }

    pub fn monadic() -> Self {
        SamplerSpec(Kind::Polyadic(1))
    }

    pub fn dyadic() -> Self {
        SamplerSpec(Kind::Polyadic(2))
    }

    /// Anchor count for polyadic sampling, `None` for i.i.d.
    pub fn anchor_count(&self) -> Option<usize> {
        match self.0 {
            Kind::Iid => None,
            Kind::Polyadic(k) => Some(k),
        }
    }

    /// Column value used in result files: `iid` or the anchor count.
    pub fn kappa_label(&self) -> String {
        match self.0 {
            Kind::Iid => "iid".to_string(),
            Kind::Polyadic(k) => k.to_string(),
        }
    }
}

impl fmt::Display for SamplerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Kind::Iid => write!(f, "iid"),
            Kind::Polyadic(1) => write!(f, "monadic"),
            Kind::Polyadic(2) => write!(f, "dyadic"),
            Kind::Polyadic(k) => write!(f, "polyadic:{k}"),
        }
    }
}

impl FromStr for SamplerSpec {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "iid" => Ok(SamplerSpec::iid()),
            "monadic" => Ok(SamplerSpec::monadic()),
            "dyadic" => Ok(SamplerSpec::dyadic()),
            other => {
                if let Some(k) = other
                    .strip_prefix("polyadic:")
                    .or_else(|| other.strip_prefix("poly:"))
                {
                    let kappa: usize = k.parse().map_err(|_| {
                        CoreError::InvalidArgument(format!("bad polyadic order `{k}`"))
                    })?;
                    SamplerSpec::polyadic(kappa)
                } else {
                    Err(CoreError::InvalidArgument(format!(
                        "unknown sampler `{other}` (expected iid, monadic, dyadic or polyadic:<k>)"
                    )))
                }
            }
        }
    }
}

/// Draws the `tau` test inputs of one batch.
///
/// Polyadic sampling keeps the anchor set and the resampling pattern on
/// disjoint substreams, so the anchors are independent of which anchor each
/// position picks. Anchors are materialized lazily per index, which also
/// keeps very large anchor counts cheap. Anchor picks use exact integer
/// draws.
pub fn sample_test_inputs<R: Rng>(
    spec: SamplerSpec,
    dist: &InputDistribution,
    tau: usize,
    rng: &mut R,
) -> Result<Vec<Input>> {
    if tau == 0 {
        return Err(CoreError::InvalidArgument("tau must be at least 1".into()));
    }
    match spec.0 {
        Kind::Iid => Ok((0..tau).map(|_| dist.sample(rng)).collect()),
        Kind::Polyadic(kappa) => {
            let anchor_seed = rng.next_u64();
            let mut pick_rng = child_rng(rng);
            let mut anchors: HashMap<usize, Input> = HashMap::new();
            let inputs = (0..tau)
                .map(|_| {
                    let pick = pick_rng.random_range(0..kappa);
                    anchors
                        .entry(pick)
                        .or_insert_with(|| {
                            let mut anchor_rng = stream_rng(anchor_seed, &[pick as u64]);
                            dist.sample(&mut anchor_rng)
                        })
                        .clone()
                })
                .collect();
            Ok(inputs)
        }
    }
}

/// Samples one label per input from the environment's conditional, returning
/// the paired batch. Labels are independent across positions given the
/// environment.
pub fn sample_labels(
    env: &Environment,
    inputs: &[Input],
    rng: &mut StreamRng,
) -> Result<TestBatch> {
    if inputs.is_empty() {
        return Err(CoreError::InvalidArgument(
            "need at least one input to label".into(),
        ));
    }
    let mut labels = Vec::with_capacity(inputs.len());
    for input in inputs {
        labels.push(env.class_probs(input)?.sample_label(rng));
    }
    TestBatch::new(inputs.to_vec(), labels)
}
