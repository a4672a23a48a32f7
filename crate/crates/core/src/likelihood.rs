//! Exact and Monte-Carlo joint log-likelihoods.
//!
//! All math runs in log space; the agent likelihood aggregates per-sample
//! joint likelihoods with a log-sum-exp so that large batch orders cannot
//! underflow in probability space.

use std::collections::HashMap;

use crate::error::{CoreError, Result};
use crate::rng::StreamRng;
use crate::types::{Agent, Environment, Input, TestBatch};

/// Floor applied to every per-term probability before taking the log.
///
/// Flooring (rather than clamping both ends) keeps scores finite when an
/// imagined environment assigns zero probability to a realized label, while a
/// probability of exactly 1 still contributes exactly 0 nats; deterministic
/// environments and well-behaved agents are unaffected.
pub const PROB_FLOOR: f64 = 1e-9;

#[inline]
fn floored_ln(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}

/// Batch inputs deduplicated in first-occurrence order.
///
/// Under anchor resampling most of a batch is repeats, so conditionals are
/// evaluated once per distinct input and shared across the repeats.
struct BatchGroups {
    distinct: Vec<Input>,
    group_of: Vec<usize>,
}

fn group_inputs(batch: &TestBatch) -> BatchGroups {
    let mut index: HashMap<&Input, usize> = HashMap::new();
    let mut distinct = Vec::new();
    let mut group_of = Vec::with_capacity(batch.order());
    for input in batch.inputs() {
        let g = *index.entry(input).or_insert_with(|| {
            distinct.push(input.clone());
            distinct.len() - 1
        });
        group_of.push(g);
    }
    BatchGroups { distinct, group_of }
}

/// Sum of floored log-probabilities of the batch labels under one conditional.
fn joint_log_likelihood(env: &Environment, batch: &TestBatch, groups: &BatchGroups) -> Result<f64> {
    let mut probs = Vec::with_capacity(groups.distinct.len());
    for input in &groups.distinct {
        probs.push(env.class_probs(input)?);
    }
    let mut total = 0.0;
    for (t, &label) in batch.labels().iter().enumerate() {
        total += floored_ln(probs[groups.group_of[t]].prob(label)?);
    }
    Ok(total)
}

/// Joint log-likelihood of the batch labels under the true environment:
/// `sum_t ln E(y_t | x_t)` in nats.
pub fn environment_log_likelihood(env: &Environment, batch: &TestBatch) -> Result<f64> {
    let groups = group_inputs(batch);
    joint_log_likelihood(env, batch, &groups)
}

/// Log of the arithmetic mean of `exp(values)`, max-shifted.
///
/// When every entry equals `c` the result is exactly `c`; the agent and
/// environment likelihoods of a perfect agent therefore cancel exactly.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + (sum / values.len() as f64).ln()
}

/// Monte-Carlo joint log-likelihood of the batch under the agent's predictive:
/// draws `m_enn` imagined environments and returns
/// `ln( mean_m prod_t e_m(y_t | x_t) )` computed in log space.
pub fn agent_log_likelihood(
    agent: &dyn Agent,
    batch: &TestBatch,
    m_enn: usize,
    rng: &mut StreamRng,
) -> Result<f64> {
    if m_enn == 0 {
        return Err(CoreError::InvalidArgument("m_enn must be at least 1".into()));
    }
    let groups = group_inputs(batch);
    let mut lls = Vec::with_capacity(m_enn);
    for _ in 0..m_enn {
        let imagined = agent.sample_imagined(rng);
        lls.push(joint_log_likelihood(&imagined, batch, &groups)?);
    }
    Ok(log_mean_exp(&lls))
}

/// Same as [`agent_log_likelihood`] but over a fixed set of already-sampled
/// imagined environments, for callers that share one set of samples across
/// several batches.
pub fn agent_log_likelihood_with(imagined: &[Environment], batch: &TestBatch) -> Result<f64> {
    if imagined.is_empty() {
        return Err(CoreError::InvalidArgument(
            "need at least one imagined environment".into(),
        ));
    }
    let groups = group_inputs(batch);
    let mut lls = Vec::with_capacity(imagined.len());
    for env in imagined {
        lls.push(joint_log_likelihood(env, batch, &groups)?);
    }
    Ok(log_mean_exp(&lls))
}
