//! The agent zoo: analytic reference agents with closed-form predictives and
//! SGD-trained neural agents (point MLP, deep ensemble, ensemble with fixed
//! additive prior networks).

use std::sync::Arc;

use rand::{Rng, RngExt, SeedableRng};
use rand_distr::{Beta, Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::estimator::AgentFactory;
use crate::math::{l2_norm, sigmoid, softmax};
use crate::nn::{train_cross_entropy, Network, TrainConfig};
use crate::rng::{stream_rng, StreamRng};
use crate::types::{Agent, ClassProbs, Environment, Input, TrainingData};

/// An agent defined by a closure that draws one imagined environment.
struct SamplerAgent {
    name: String,
    classes: usize,
    draw: Arc<dyn Fn(&mut StreamRng) -> Environment + Send + Sync>,
}

impl Agent for SamplerAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn class_count(&self) -> usize {
        self.classes
    }

    fn sample_imagined(&self, rng: &mut StreamRng) -> Environment {
        (self.draw)(rng)
    }
}

/// Closed-form reference agents.
#[derive(Clone)]
pub enum AnalyticAgentSpec {
    /// Constant 1/C prediction at every input.
    Uniform { classes: usize },
    /// Draws a scalar `lambda ~ N(0, 1)` and predicts
    /// `sigmoid(temperature * lambda * ||x||)`: correct marginals at any
    /// single input, spurious correlation across distinct inputs.
    LogisticMarginal { temperature: f64 },
    /// Draws fresh coefficients from the logistic prior itself, so it is
    /// exchangeable with the true environment draw.
    LogisticPrior { temperature: f64, dim: usize },
    /// Per-coin Beta posteriors from observed (heads, tails) counts.
    CoinsBetaPosterior { counts: Vec<(u64, u64)> },
    /// One shared `p ~ Unif(0, 1)` used at every input.
    SharedP,
    /// Every imagined environment is the true environment.
    Perfect { env: Environment },
}

/// Builds an agent from an analytic spec.
pub fn make_analytic(spec: AnalyticAgentSpec) -> Result<Box<dyn Agent>> {
    let agent = match spec {
        AnalyticAgentSpec::Uniform { classes } => {
            let probs = ClassProbs::uniform(classes)?;
            SamplerAgent {
                name: "uniform".into(),
                classes,
                draw: Arc::new(move |_| {
                    let probs = probs.clone();
                    Environment::new(probs.class_count(), move |_| Ok(probs.clone()))
                }),
            }
        }
        AnalyticAgentSpec::LogisticMarginal { temperature } => SamplerAgent {
            name: "marginal".into(),
            classes: 2,
            draw: Arc::new(move |rng| {
                let lambda: f64 = StandardNormal.sample(rng);
                Environment::new(2, move |input: &Input| {
                    let x = input.as_features()?;
                    ClassProbs::bernoulli(sigmoid(temperature * lambda * l2_norm(x)))
                })
            }),
        },
        AnalyticAgentSpec::LogisticPrior { temperature, dim } => SamplerAgent {
            name: "prior".into(),
            classes: 2,
            draw: Arc::new(move |rng| {
                // High-dimensional coefficient draws dominate the evaluation
                // cost; a fast generator seeded off the stream keeps the draw
                // deterministic in the stream state.
                let mut fast = Xoshiro256PlusPlus::seed_from_u64(rng.next_u64());
                let phi: Arc<[f64]> = (0..dim)
                    .map(|_| -> f64 { StandardNormal.sample(&mut fast) })
                    .collect();
                crate::environments::LogisticPrior::conditional(phi, temperature)
            }),
        },
        AnalyticAgentSpec::CoinsBetaPosterior { counts } => {
            let counts: Arc<[(u64, u64)]> = counts.into();
            SamplerAgent {
                name: "beta-posterior".into(),
                classes: 2,
                draw: Arc::new(move |rng| {
                    // Per-coin heads probabilities are materialized lazily:
                    // coin x's draw is a fixed function of (draw seed, x), so
                    // an imagined environment stays deterministic while only
                    // the coins a batch actually touches cost a Beta sample.
                    let draw_seed = rng.next_u64();
                    let counts = counts.clone();
                    Environment::new(2, move |input: &Input| {
                        let x = input.as_coin()?;
                        let Some(&(heads, tails)) = counts.get(x) else {
                            return Err(CoreError::Domain(format!(
                                "coin {x} out of range for {} coins",
                                counts.len()
                            )));
                        };
                        let mut coin_rng = stream_rng(draw_seed, &[x as u64]);
                        let beta = Beta::new(1.0 + heads as f64, 1.0 + tails as f64)
                            .expect("shape parameters are >= 1");
                        ClassProbs::bernoulli(beta.sample(&mut coin_rng))
                    })
                }),
            }
        }
        AnalyticAgentSpec::SharedP => SamplerAgent {
            name: "shared-p".into(),
            classes: 2,
            draw: Arc::new(|rng| {
                let p: f64 = rng.random();
                Environment::new(2, move |_| ClassProbs::bernoulli(p))
            }),
        },
        AnalyticAgentSpec::Perfect { env } => SamplerAgent {
            name: "perfect".into(),
            classes: env.class_count(),
            draw: Arc::new(move |_| env.clone()),
        },
    };
    Ok(Box::new(agent))
}

/// Tallies per-coin (heads, tails) counts from training data.
pub fn coin_counts(data: &TrainingData, coins: usize) -> Result<Vec<(u64, u64)>> {
    let mut counts = vec![(0u64, 0u64); coins];
    for (input, label) in data.pairs() {
        let x = input.as_coin()?;
        let Some(c) = counts.get_mut(x) else {
            return Err(CoreError::Domain(format!(
                "coin {x} out of range for {coins} coins"
            )));
        };
        if *label == 1 {
            c.0 += 1;
        } else {
            c.1 += 1;
        }
    }
    Ok(counts)
}

// ---------------------------------------------------------------------------
// Factories for the analytic agents.
// ---------------------------------------------------------------------------

pub struct UniformFactory;

impl AgentFactory for UniformFactory {
    fn name(&self) -> &str {
        "uniform"
    }

    fn train(
        &self,
        _env: &Environment,
        data: &TrainingData,
        _rng: &mut StreamRng,
    ) -> Result<Box<dyn Agent>> {
        make_analytic(AnalyticAgentSpec::Uniform {
            classes: data.class_count(),
        })
    }
}

pub struct SharedPFactory;

impl AgentFactory for SharedPFactory {
    fn name(&self) -> &str {
        "shared-p"
    }

    fn train(
        &self,
        _env: &Environment,
        _data: &TrainingData,
        _rng: &mut StreamRng,
    ) -> Result<Box<dyn Agent>> {
        make_analytic(AnalyticAgentSpec::SharedP)
    }
}

pub struct BetaPosteriorFactory {
    pub coins: usize,
}

impl AgentFactory for BetaPosteriorFactory {
    fn name(&self) -> &str {
        "beta-posterior"
    }

    fn train(
        &self,
        _env: &Environment,
        data: &TrainingData,
        _rng: &mut StreamRng,
    ) -> Result<Box<dyn Agent>> {
        make_analytic(AnalyticAgentSpec::CoinsBetaPosterior {
            counts: coin_counts(data, self.coins)?,
        })
    }
}

pub struct LogisticMarginalFactory {
    pub temperature: f64,
}

impl AgentFactory for LogisticMarginalFactory {
    fn name(&self) -> &str {
        "marginal"
    }

    fn train(
        &self,
        _env: &Environment,
        _data: &TrainingData,
        _rng: &mut StreamRng,
    ) -> Result<Box<dyn Agent>> {
        make_analytic(AnalyticAgentSpec::LogisticMarginal {
            temperature: self.temperature,
        })
    }
}

pub struct LogisticPriorFactory {
    pub temperature: f64,
    pub dim: usize,
}

impl AgentFactory for LogisticPriorFactory {
    fn name(&self) -> &str {
        "prior"
    }

    fn train(
        &self,
        _env: &Environment,
        _data: &TrainingData,
        _rng: &mut StreamRng,
    ) -> Result<Box<dyn Agent>> {
        make_analytic(AnalyticAgentSpec::LogisticPrior {
            temperature: self.temperature,
            dim: self.dim,
        })
    }
}

/// Oracle reference: wraps the realized true environment, scoring exactly
/// zero through the whole pipeline.
pub struct PerfectFactory;

impl AgentFactory for PerfectFactory {
    fn name(&self) -> &str {
        "perfect"
    }

    fn train(
        &self,
        env: &Environment,
        _data: &TrainingData,
        _rng: &mut StreamRng,
    ) -> Result<Box<dyn Agent>> {
        make_analytic(AnalyticAgentSpec::Perfect { env: env.clone() })
    }
}

// ---------------------------------------------------------------------------
// Trained neural agents.
// ---------------------------------------------------------------------------

/// Hyperparameters of one trained network.
#[derive(Debug, Clone)]
pub struct MlpSpec {
    pub hidden: (usize, usize),
    pub l2_decay: f64,
    pub steps: usize,
    pub learning_rate: f64,
}

impl Default for MlpSpec {
    fn default() -> Self {
        MlpSpec {
            hidden: (50, 50),
            l2_decay: 1e-4,
            steps: 400,
            learning_rate: 0.05,
        }
    }
}

/// Deep ensemble: `size` networks from independent initializations, all
/// trained on the full data.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub size: usize,
    pub member: MlpSpec,
}

/// Ensemble with randomized fixed prior networks: member `k` predicts
/// `softmax(h_k(x) + prior_scale * g_k(x))` where only `h_k` is trained, and
/// optionally trains on a with-replacement bootstrap resample of the data.
#[derive(Debug, Clone)]
pub struct EnsemblePlusSpec {
    pub size: usize,
    pub member: MlpSpec,
    pub prior_scale: f64,
    pub bootstrap: bool,
}

struct Member {
    trained: Network,
    prior: Option<(Network, f64)>,
}

impl Member {
    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut logits = self.trained.forward(x)?;
        if let Some((prior, scale)) = &self.prior {
            for (l, p) in logits.iter_mut().zip(prior.forward(x)?) {
                *l += scale * p;
            }
        }
        Ok(logits)
    }
}

struct EnsembleAgent {
    name: String,
    classes: usize,
    members: Arc<Vec<Arc<Member>>>,
}

impl Agent for EnsembleAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn class_count(&self) -> usize {
        self.classes
    }

    fn sample_imagined(&self, rng: &mut StreamRng) -> Environment {
        let member = if self.members.len() == 1 {
            self.members[0].clone()
        } else {
            self.members[rng.random_range(0..self.members.len())].clone()
        };
        let classes = self.classes;
        Environment::new(classes, move |input: &Input| {
            let logits = member.logits(input.as_features()?)?;
            ClassProbs::new(softmax(&logits))
        })
    }
}

fn feature_pairs(data: &TrainingData) -> Result<Vec<(Arc<[f64]>, usize)>> {
    data.pairs()
        .iter()
        .map(|(input, y)| match input {
            Input::Features(v) => Ok((v.clone(), *y)),
            Input::Coin(_) => Err(CoreError::Domain(
                "neural agents need feature-vector inputs".into(),
            )),
        })
        .collect()
}

// Per-member stream channels. Fixed channel ids keep the initialization and
// batch streams identical whether or not bootstrapping or prior networks are
// enabled, so `prior_scale = 0` reproduces the plain ensemble bit for bit.
const CH_BOOTSTRAP: u64 = 0;
const CH_PRIOR: u64 = 1;
const CH_INIT: u64 = 2;
const CH_BATCHES: u64 = 3;

fn train_members(
    agent_name: &str,
    size: usize,
    member_cfg: &MlpSpec,
    prior_scale: Option<f64>,
    bootstrap: bool,
    data: &TrainingData,
    rng: &mut StreamRng,
) -> Result<Vec<Arc<Member>>> {
    if size == 0 {
        return Err(CoreError::InvalidArgument(
            "ensemble size must be at least 1".into(),
        ));
    }
    if member_cfg.learning_rate <= 0.0 {
        return Err(CoreError::InvalidArgument(
            "learning rate must be positive".into(),
        ));
    }
    if let Some(scale) = prior_scale {
        if scale < 0.0 {
            return Err(CoreError::InvalidArgument(
                "prior scale must be nonnegative".into(),
            ));
        }
    }
    let examples = feature_pairs(data)?;
    let dim = examples
        .first()
        .map(|(x, _)| x.len())
        .unwrap_or_else(|| member_cfg.hidden.0);
    let classes = data.class_count();
    let sizes = [dim, member_cfg.hidden.0, member_cfg.hidden.1, classes];
    let base_seed = rng.next_u64();

    let train_cfg = TrainConfig {
        learning_rate: member_cfg.learning_rate,
        momentum: TrainConfig::DEFAULT_MOMENTUM,
        l2_decay: member_cfg.l2_decay,
        steps: member_cfg.steps,
        batch_cap: TrainConfig::DEFAULT_BATCH_CAP,
    };

    (0..size)
        .into_par_iter()
        .map(|k| {
            let k = k as u64;
            let member_examples: Vec<(Arc<[f64]>, usize)> = if bootstrap && !examples.is_empty() {
                let mut boot_rng = stream_rng(base_seed, &[k, CH_BOOTSTRAP]);
                (0..examples.len())
                    .map(|_| examples[boot_rng.random_range(0..examples.len())].clone())
                    .collect()
            } else {
                examples.clone()
            };
            let prior = prior_scale.map(|scale| {
                let mut prior_rng = stream_rng(base_seed, &[k, CH_PRIOR]);
                (Network::xavier(&sizes, &mut prior_rng), scale)
            });
            let mut init_rng = stream_rng(base_seed, &[k, CH_INIT]);
            let mut net = Network::xavier(&sizes, &mut init_rng);
            let refs: Vec<(&[f64], usize)> = member_examples
                .iter()
                .map(|(x, y)| (x.as_ref(), *y))
                .collect();
            let mut batch_rng = stream_rng(base_seed, &[k, CH_BATCHES]);
            train_cross_entropy(
                &mut net,
                &refs,
                prior.as_ref().map(|(p, s)| (p, *s)),
                &train_cfg,
                &mut batch_rng,
            )
            .map_err(|e| CoreError::Training {
                agent: agent_name.to_string(),
                message: format!("member {k}: {e}"),
            })?;
            Ok(Arc::new(Member {
                trained: net,
                prior,
            }))
        })
        .collect()
}

/// Trains a single network; its predictive is a point estimate (every
/// imagined environment is the same fitted network).
pub fn train_mlp(spec: &MlpSpec, data: &TrainingData, rng: &mut StreamRng) -> Result<Box<dyn Agent>> {
    let members = train_members("mlp", 1, spec, None, false, data, rng)?;
    Ok(Box::new(EnsembleAgent {
        name: "mlp".into(),
        classes: data.class_count(),
        members: Arc::new(members),
    }))
}

/// Trains a deep ensemble; imagined environments are uniformly drawn members.
pub fn train_ensemble(
    spec: &EnsembleSpec,
    data: &TrainingData,
    rng: &mut StreamRng,
) -> Result<Box<dyn Agent>> {
    let members = train_members("ensemble", spec.size, &spec.member, None, false, data, rng)?;
    Ok(Box::new(EnsembleAgent {
        name: "ensemble".into(),
        classes: data.class_count(),
        members: Arc::new(members),
    }))
}

/// Trains an ensemble with fixed additive prior networks (and optional
/// bootstrap resampling).
pub fn train_ensemble_plus(
    spec: &EnsemblePlusSpec,
    data: &TrainingData,
    rng: &mut StreamRng,
) -> Result<Box<dyn Agent>> {
    let members = train_members(
        "ensemble+",
        spec.size,
        &spec.member,
        Some(spec.prior_scale),
        spec.bootstrap,
        data,
        rng,
    )?;
    Ok(Box::new(EnsembleAgent {
        name: "ensemble+".into(),
        classes: data.class_count(),
        members: Arc::new(members),
    }))
}

pub struct MlpFactory(pub MlpSpec);

impl AgentFactory for MlpFactory {
    fn name(&self) -> &str {
        "mlp"
    }

    fn train(
        &self,
        _env: &Environment,
        data: &TrainingData,
        rng: &mut StreamRng,
    ) -> Result<Box<dyn Agent>> {
        train_mlp(&self.0, data, rng)
    }
}

pub struct EnsembleFactory(pub EnsembleSpec);

impl AgentFactory for EnsembleFactory {
    fn name(&self) -> &str {
        "ensemble"
    }

    fn train(
        &self,
        _env: &Environment,
        data: &TrainingData,
        rng: &mut StreamRng,
    ) -> Result<Box<dyn Agent>> {
        train_ensemble(&self.0, data, rng)
    }
}

pub struct EnsemblePlusFactory(pub EnsemblePlusSpec);

impl AgentFactory for EnsemblePlusFactory {
    fn name(&self) -> &str {
        "ensemble+"
    }

    fn train(
        &self,
        _env: &Environment,
        data: &TrainingData,
        rng: &mut StreamRng,
    ) -> Result<Box<dyn Agent>> {
        train_ensemble_plus(&self.0, data, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::agent_log_likelihood;
    use crate::types::TestBatch;

    fn probe_probs(agent: &dyn Agent, input: &Input, draws: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, &[]);
        (0..draws)
            .map(|_| {
                agent
                    .sample_imagined(&mut rng)
                    .class_probs(input)
                    .unwrap()
                    .prob(1)
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn uniform_agent_is_exact() {
        let agent = make_analytic(AnalyticAgentSpec::Uniform { classes: 2 }).unwrap();
        let batch = TestBatch::new(
            vec![Input::Coin(0), Input::Coin(3), Input::Coin(0)],
            vec![0, 1, 1],
        )
        .unwrap();
        let mut rng = stream_rng(0, &[]);
        let ll = agent_log_likelihood(agent.as_ref(), &batch, 64, &mut rng).unwrap();
        assert_eq!(ll, 3.0 * 0.5f64.ln());
    }

    #[test]
    fn logistic_prior_at_origin_is_half() {
        let agent = make_analytic(AnalyticAgentSpec::LogisticPrior {
            temperature: 1.3,
            dim: 4,
        })
        .unwrap();
        let x = Input::features(vec![0.0; 4]);
        for p in probe_probs(agent.as_ref(), &x, 32, 1) {
            assert_eq!(p, 0.5);
        }
    }

    #[test]
    fn beta_posterior_with_no_data_is_uniform_prior() {
        let agent = make_analytic(AnalyticAgentSpec::CoinsBetaPosterior {
            counts: vec![(0, 0); 3],
        })
        .unwrap();
        let ps = probe_probs(agent.as_ref(), &Input::Coin(1), 40_000, 2);
        let mean: f64 = ps.iter().sum::<f64>() / ps.len() as f64;
        let var: f64 = ps.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / ps.len() as f64;
        // Unif(0,1): mean 1/2, variance 1/12.
        assert!((mean - 0.5).abs() < 0.01, "mean = {mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.005, "var = {var}");
    }

    #[test]
    fn beta_posterior_after_two_heads() {
        // Beta(3, 1) mean is 3/4.
        let agent = make_analytic(AnalyticAgentSpec::CoinsBetaPosterior {
            counts: vec![(2, 0)],
        })
        .unwrap();
        let ps = probe_probs(agent.as_ref(), &Input::Coin(0), 40_000, 3);
        let mean: f64 = ps.iter().sum::<f64>() / ps.len() as f64;
        assert!((mean - 0.75).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn beta_posterior_draws_are_consistent_within_an_imagined_environment() {
        let agent = make_analytic(AnalyticAgentSpec::CoinsBetaPosterior {
            counts: vec![(1, 2), (0, 0)],
        })
        .unwrap();
        let mut rng = stream_rng(5, &[]);
        let imagined = agent.sample_imagined(&mut rng);
        let a = imagined.class_probs(&Input::Coin(0)).unwrap();
        let b = imagined.class_probs(&Input::Coin(0)).unwrap();
        assert_eq!(a, b);
        // Distinct coins have independent draws; overwhelmingly different.
        let c = imagined.class_probs(&Input::Coin(1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn shared_p_ignores_the_input() {
        let agent = make_analytic(AnalyticAgentSpec::SharedP).unwrap();
        let mut rng = stream_rng(6, &[]);
        let imagined = agent.sample_imagined(&mut rng);
        let a = imagined.class_probs(&Input::Coin(0)).unwrap();
        let b = imagined.class_probs(&Input::Coin(7)).unwrap();
        let c = imagined
            .class_probs(&Input::features(vec![1.0, 2.0]))
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn coin_counts_tally() {
        let data = TrainingData::new(
            vec![
                (Input::Coin(0), 1),
                (Input::Coin(0), 0),
                (Input::Coin(2), 1),
                (Input::Coin(0), 1),
            ],
            2,
        )
        .unwrap();
        let counts = coin_counts(&data, 3).unwrap();
        assert_eq!(counts, vec![(2, 1), (0, 0), (1, 0)]);
        assert!(coin_counts(&data, 2).is_err());
    }

    #[test]
    fn marginal_and_prior_agree_in_distribution_at_a_single_input() {
        // At fixed x, phi . x ~ N(0, ||x||^2), so the predicted probability
        // under the prior agent matches the marginal agent's in distribution.
        // Two-sample Kolmogorov-Smirnov at the 1% level.
        let temperature = 0.7;
        let marginal = make_analytic(AnalyticAgentSpec::LogisticMarginal { temperature }).unwrap();
        let prior = make_analytic(AnalyticAgentSpec::LogisticPrior {
            temperature,
            dim: 6,
        })
        .unwrap();
        let x = Input::features(vec![0.5, -1.0, 0.25, 2.0, -0.5, 1.5]);
        let n = 10_000;
        let mut a = probe_probs(marginal.as_ref(), &x, n, 7);
        let mut b = probe_probs(prior.as_ref(), &x, n, 8);
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let mut d: f64 = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < n && j < n {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 - j as f64).abs() / n as f64);
        }
        // c(0.01) * sqrt((n + m) / (n m)) with c(0.01) = 1.628.
        let critical = 1.628 * ((2 * n) as f64 / (n * n) as f64).sqrt();
        assert!(d < critical, "ks statistic {d} >= {critical}");
    }

    fn toy_training(t: usize, dim: usize, seed: u64) -> TrainingData {
        let mut rng = stream_rng(seed, &[100]);
        let pairs: Vec<(Input, usize)> = (0..t)
            .map(|_| {
                let x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let y = usize::from(x[0] + 0.3 * x[dim - 1] > 0.0);
                (Input::features(x), y)
            })
            .collect();
        TrainingData::new(pairs, 2).unwrap()
    }

    fn member_probs(agent: &dyn Agent, x: &Input, draws: usize, seed: u64) -> Vec<f64> {
        probe_probs(agent, x, draws, seed)
    }

    #[test]
    fn single_member_ensemble_equals_mlp() {
        let data = toy_training(30, 3, 1);
        let spec = MlpSpec::default();
        let mut rng_a = stream_rng(9, &[]);
        let mlp = train_mlp(&spec, &data, &mut rng_a).unwrap();
        let mut rng_b = stream_rng(9, &[]);
        let ens = train_ensemble(
            &EnsembleSpec {
                size: 1,
                member: spec,
            },
            &data,
            &mut rng_b,
        )
        .unwrap();
        let x = Input::features(vec![0.2, -0.4, 1.0]);
        let pa = member_probs(mlp.as_ref(), &x, 3, 0);
        let pb = member_probs(ens.as_ref(), &x, 3, 0);
        assert_eq!(pa, pb);
    }

    #[test]
    fn zero_prior_scale_reproduces_plain_ensemble() {
        let data = toy_training(25, 2, 2);
        let member = MlpSpec {
            steps: 60,
            ..MlpSpec::default()
        };
        let mut rng_a = stream_rng(12, &[]);
        let plain = train_ensemble(
            &EnsembleSpec {
                size: 3,
                member: member.clone(),
            },
            &data,
            &mut rng_a,
        )
        .unwrap();
        let mut rng_b = stream_rng(12, &[]);
        let plus = train_ensemble_plus(
            &EnsemblePlusSpec {
                size: 3,
                member,
                prior_scale: 0.0,
                bootstrap: false,
            },
            &data,
            &mut rng_b,
        )
        .unwrap();
        let x = Input::features(vec![0.7, -0.1]);
        for (draws, seed) in [(16usize, 4u64), (16, 5)] {
            assert_eq!(
                member_probs(plain.as_ref(), &x, draws, seed),
                member_probs(plus.as_ref(), &x, draws, seed)
            );
        }
    }

    #[test]
    fn prior_networks_disagree_without_data() {
        let data = TrainingData::empty(2).unwrap();
        let member = MlpSpec {
            hidden: (20, 20),
            ..MlpSpec::default()
        };
        let x = Input::features(vec![0.5; 20]);

        let logit_variance = |agent: &dyn Agent| {
            let mut rng = stream_rng(31, &[]);
            let ps: Vec<f64> = (0..64)
                .map(|_| {
                    agent
                        .sample_imagined(&mut rng)
                        .class_probs(&x)
                        .unwrap()
                        .prob(1)
                        .unwrap()
                })
                .collect();
            let mean = ps.iter().sum::<f64>() / ps.len() as f64;
            ps.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / ps.len() as f64
        };

        let mut rng = stream_rng(30, &[]);
        let plus = train_ensemble_plus(
            &EnsemblePlusSpec {
                size: 10,
                member: member.clone(),
                prior_scale: 3.0,
                bootstrap: true,
            },
            &data,
            &mut rng,
        )
        .unwrap();
        let mut rng = stream_rng(30, &[]);
        let plain = train_ensemble(
            &EnsembleSpec {
                size: 10,
                member,
            },
            &data,
            &mut rng,
        )
        .unwrap();

        let v_plus = logit_variance(plus.as_ref());
        let v_plain = logit_variance(plain.as_ref());
        assert!(v_plus > 0.0);
        assert!(v_plain > 0.0, "members still differ via initialization");
        assert!(
            v_plus > v_plain,
            "prior networks should add diversity: {v_plus} vs {v_plain}"
        );
    }

    #[test]
    fn mlp_fits_separable_data() {
        let data = toy_training(60, 2, 3);
        let mut rng = stream_rng(14, &[]);
        let agent = train_mlp(
            &MlpSpec {
                steps: 300,
                l2_decay: 1e-6,
                ..MlpSpec::default()
            },
            &data,
            &mut rng,
        )
        .unwrap();
        let mut correct = 0;
        let imagined = agent.sample_imagined(&mut stream_rng(0, &[]));
        for (x, y) in data.pairs() {
            let p = imagined.class_probs(x).unwrap();
            let pred = usize::from(p.prob(1).unwrap() > 0.5);
            correct += usize::from(pred == *y);
        }
        let acc = correct as f64 / data.len() as f64;
        assert!(acc > 0.95, "training accuracy {acc}");
    }

    #[test]
    fn neural_agents_reject_coin_inputs() {
        let data = TrainingData::new(vec![(Input::Coin(0), 1)], 2).unwrap();
        let mut rng = stream_rng(0, &[]);
        assert!(train_mlp(&MlpSpec::default(), &data, &mut rng).is_err());
    }
}
