//! Scoring engine for joint predictive distributions of classification agents.
//!
//! An *environment* maps an input to class probabilities; an *agent* holds a
//! belief over environments and exposes it by sampling imagined environments.
//! The estimator draws environments from a prior, trains an agent on sampled
//! training data, and Monte-Carlo-estimates the expected log-likelihood gap
//! between the true environment and the agent's joint predictive over batches
//! of test inputs. Batches can be drawn i.i.d. from the input distribution or
//! by polyadic anchor resampling (monadic and dyadic as the named special
//! cases).
//!
//! All log-likelihoods and scores are in nats. Every operation that consumes
//! randomness takes an explicit [`rng::StreamRng`]; results are reproducible
//! from a single seed and independent of thread scheduling.

pub mod agents;
pub mod environments;
pub mod error;
pub mod estimator;
pub mod likelihood;
pub mod math;
pub mod nn;
pub mod rng;
pub mod sampling;
pub mod types;

pub use error::{CoreError, Result};
pub use estimator::{
    estimate_kl, kl_ratio, AgentFactory, EnvironmentPrior, EstimateReport, EstimatorConfig,
    KlRatio,
};
pub use likelihood::{
    agent_log_likelihood, agent_log_likelihood_with, environment_log_likelihood, log_mean_exp,
    PROB_FLOOR,
};
pub use rng::{child_rng, stream_rng, StreamRng};
pub use sampling::{sample_labels, sample_test_inputs, InputDistribution, SamplerSpec};
pub use types::{Agent, ClassProbs, Environment, Input, KlEstimate, TestBatch, TrainingData};
