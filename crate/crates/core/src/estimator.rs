//! Monte-Carlo estimation of the expected joint log-likelihood gap between
//! the true environment and an agent's predictive distribution.
//!
//! For each of `J` environment draws the estimator samples an environment and
//! training data from the prior, trains an agent, and scores `N` test batches;
//! the per-batch term is `log p - log p_hat` in nats. Every unit of work owns
//! an rng stream derived from `(seed, stream tag, j, n)`, and the reduction is
//! a fixed-order compensated sum over the `(j, n)` grid, so reports are
//! bit-identical regardless of how the grid is scheduled across threads.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::likelihood::{
    agent_log_likelihood, agent_log_likelihood_with, environment_log_likelihood,
};
use crate::math::neumaier_sum;
use crate::rng::{stream_rng, StreamRng};
use crate::sampling::{sample_labels, sample_test_inputs, InputDistribution, SamplerSpec};
use crate::types::{Agent, Environment, KlEstimate, TrainingData};

const STREAM_ENV: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_AGENT: u64 = 3;
const STREAM_SHARED_ENN: u64 = 4;

/// A generator of environments paired with training data drawn from them.
pub trait EnvironmentPrior: Send + Sync {
    fn name(&self) -> &str;

    fn class_count(&self) -> usize;

    /// Distribution that test inputs (and polyadic anchors) are drawn from.
    fn input_distribution(&self) -> InputDistribution;

    /// Draws one environment and its training data. Deterministic given the
    /// rng state.
    fn sample(&self, rng: &mut StreamRng) -> (Environment, TrainingData);
}

/// Builds a trained agent for one environment draw.
///
/// `env` is the realized true environment; it exists so oracle reference
/// agents (the perfect agent) can be evaluated through the same pipeline.
/// Learning agents must depend only on `data` and `rng`.
pub trait AgentFactory: Send + Sync {
    fn name(&self) -> &str;

    fn train(
        &self,
        env: &Environment,
        data: &TrainingData,
        rng: &mut StreamRng,
    ) -> Result<Box<dyn Agent>>;
}

/// Sampling budget and scheme for one estimate.
#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    /// Environment draws `J`.
    pub env_draws: usize,
    /// Test batches `N` per environment draw.
    pub batches_per_env: usize,
    /// Batch order `tau`.
    pub tau: usize,
    /// Imagined-environment samples per agent likelihood.
    pub m_enn: usize,
    pub sampler: SamplerSpec,
    pub seed: u64,
    /// Share one set of imagined-environment samples across the `N` batches
    /// of each environment draw instead of drawing fresh samples per batch.
    pub share_enn_samples: bool,
}

impl EstimatorConfig {
    /// Default imagined-environment sample count for full-scale runs;
    /// desk-scale configs usually pass something smaller.
    pub const DEFAULT_M_ENN: usize = 10_000;

    pub fn new(
        env_draws: usize,
        batches_per_env: usize,
        tau: usize,
        m_enn: usize,
        sampler: SamplerSpec,
        seed: u64,
    ) -> Result<Self> {
        let cfg = EstimatorConfig {
            env_draws,
            batches_per_env,
            tau,
            m_enn,
            sampler,
            seed,
            share_enn_samples: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("env_draws", self.env_draws),
            ("batches_per_env", self.batches_per_env),
            ("tau", self.tau),
            ("m_enn", self.m_enn),
        ] {
            if v == 0 {
                return Err(CoreError::InvalidArgument(format!(
                    "{name} must be at least 1"
                )));
            }
        }
        Ok(())
    }

    /// Total number of `(j, n)` terms.
    pub fn n_terms(&self) -> usize {
        self.env_draws * self.batches_per_env
    }
}

/// The result of one estimate: the grand mean over all `(j, n)` terms plus
/// per-environment means, with the configuration echoed back.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub overall: KlEstimate,
    pub per_environment: Vec<KlEstimate>,
    pub config: EstimatorConfig,
}

fn estimate_from(values: &[f64]) -> KlEstimate {
    let n = values.len();
    let mean = neumaier_sum(values.iter().copied()) / n as f64;
    let stderr = if n > 1 {
        let ss = neumaier_sum(values.iter().map(|v| {
            let d = v - mean;
            d * d
        }));
        (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    } else {
        0.0
    };
    KlEstimate {
        mean,
        stderr,
        n_terms: n,
    }
}

/// Runs the full Monte-Carlo loop for one (prior, agent) pair.
pub fn estimate_kl(
    prior: &dyn EnvironmentPrior,
    factory: &dyn AgentFactory,
    cfg: &EstimatorConfig,
) -> Result<EstimateReport> {
    cfg.validate()?;
    let seed = cfg.seed;
    let n = cfg.batches_per_env;

    // Environment draws and agent training, one stream pair per j.
    let cells: Vec<(Environment, Box<dyn Agent>)> = (0..cfg.env_draws)
        .into_par_iter()
        .map(|j| {
            let mut env_rng = stream_rng(seed, &[STREAM_ENV, j as u64]);
            let (env, data) = prior.sample(&mut env_rng);
            let mut train_rng = stream_rng(seed, &[STREAM_TRAIN, j as u64]);
            let agent = factory.train(&env, &data, &mut train_rng).map_err(|e| {
                CoreError::Estimation {
                    env_index: j,
                    agent: factory.name().to_string(),
                    message: e.to_string(),
                }
            })?;
            Ok((env, agent))
        })
        .collect::<Result<_>>()?;

    let shared_imagined: Vec<Vec<Environment>> = if cfg.share_enn_samples {
        cells
            .par_iter()
            .enumerate()
            .map(|(j, (_, agent))| {
                let mut rng = stream_rng(seed, &[STREAM_SHARED_ENN, j as u64]);
                (0..cfg.m_enn)
                    .map(|_| agent.sample_imagined(&mut rng))
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };

    let dist = prior.input_distribution();
    let terms: Vec<f64> = (0..cfg.n_terms())
        .into_par_iter()
        .map(|i| {
            let (j, b) = (i / n, i % n);
            let (env, agent) = &cells[j];
            let mut data_rng = stream_rng(seed, &[STREAM_TEST, j as u64, b as u64]);
            let inputs = sample_test_inputs(cfg.sampler, &dist, cfg.tau, &mut data_rng)?;
            let batch = sample_labels(env, &inputs, &mut data_rng)?;
            let log_p = environment_log_likelihood(env, &batch)?;
            let log_q = if cfg.share_enn_samples {
                agent_log_likelihood_with(&shared_imagined[j], &batch)?
            } else {
                let mut agent_rng = stream_rng(seed, &[STREAM_AGENT, j as u64, b as u64]);
                agent_log_likelihood(agent.as_ref(), &batch, cfg.m_enn, &mut agent_rng)?
            };
            let term = log_p - log_q;
            if !term.is_finite() {
                return Err(CoreError::NonFinite(format!(
                    "log-likelihood term at environment {j}, batch {b}"
                )));
            }
            Ok(term)
        })
        .collect::<Result<_>>()?;

    let per_environment = (0..cfg.env_draws)
        .map(|j| estimate_from(&terms[j * n..(j + 1) * n]))
        .collect();

    Ok(EstimateReport {
        overall: estimate_from(&terms),
        per_environment,
        config: cfg.clone(),
    })
}

/// A ratio of two estimates with first-order propagated standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlRatio {
    pub value: f64,
    pub stderr: f64,
}

/// Ratio of two scores taken under the same batch order and sampler, used for
/// separation checks between agents.
pub fn kl_ratio(numerator: &EstimateReport, denominator: &EstimateReport) -> Result<KlRatio> {
    if numerator.config.tau != denominator.config.tau
        || numerator.config.sampler != denominator.config.sampler
    {
        return Err(CoreError::InvalidArgument(format!(
            "reports are not comparable: tau {} vs {}, sampler {} vs {}",
            numerator.config.tau,
            denominator.config.tau,
            numerator.config.sampler,
            denominator.config.sampler
        )));
    }
    let a = numerator.overall;
    let b = denominator.overall;
    if b.mean <= 0.0 || b.mean.abs() < 3.0 * b.stderr {
        return Err(CoreError::InvalidArgument(format!(
            "ratio denominator indistinguishable from zero: mean {} with stderr {}",
            b.mean, b.stderr
        )));
    }
    let value = a.mean / b.mean;
    let from_a = a.stderr / b.mean;
    let from_b = a.mean * b.stderr / (b.mean * b.mean);
    Ok(KlRatio {
        value,
        stderr: (from_a * from_a + from_b * from_b).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ClassProbs, Input};

    /// Minimal coin prior: one coin, heads probability uniform on [0, 1].
    struct OneCoin;

    impl EnvironmentPrior for OneCoin {
        fn name(&self) -> &str {
            "one-coin"
        }
        fn class_count(&self) -> usize {
            2
        }
        fn input_distribution(&self) -> InputDistribution {
            InputDistribution::UniformCoins(1)
        }
        fn sample(&self, rng: &mut StreamRng) -> (Environment, TrainingData) {
            use rand::RngExt;
            let p: f64 = rng.random();
            let env = Environment::new(2, move |_: &Input| ClassProbs::bernoulli(p));
            (env, TrainingData::empty(2).unwrap())
        }
    }

    struct PerfectFactory;

    struct PerfectAgent(Environment);

    impl Agent for PerfectAgent {
        fn name(&self) -> &str {
            "perfect"
        }
        fn class_count(&self) -> usize {
            self.0.class_count()
        }
        fn sample_imagined(&self, _rng: &mut StreamRng) -> Environment {
            self.0.clone()
        }
    }

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
            Ok(Box::new(PerfectAgent(env.clone())))
        }
    }

    struct UniformFactory;

    struct UniformAgent;

    impl Agent for UniformAgent {
        fn name(&self) -> &str {
            "uniform"
        }
        fn class_count(&self) -> usize {
            2
        }
        fn sample_imagined(&self, _rng: &mut StreamRng) -> Environment {
            Environment::new(2, |_| ClassProbs::uniform(2))
        }
    }

    impl AgentFactory for UniformFactory {
        fn name(&self) -> &str {
            "uniform"
        }
        fn train(
            &self,
            _env: &Environment,
            _data: &TrainingData,
            _rng: &mut StreamRng,
        ) -> Result<Box<dyn Agent>> {
            Ok(Box::new(UniformAgent))
        }
    }

    fn cfg(j: usize, n: usize, tau: usize, m_enn: usize, seed: u64) -> EstimatorConfig {
        EstimatorConfig::new(j, n, tau, m_enn, SamplerSpec::iid(), seed).unwrap()
    }

    #[test]
    fn perfect_agent_scores_exactly_zero() {
        let report = estimate_kl(&OneCoin, &PerfectFactory, &cfg(3, 5, 4, 6, 2)).unwrap();
        assert_eq!(report.overall.mean, 0.0);
        assert_eq!(report.overall.stderr, 0.0);
        assert_eq!(report.overall.n_terms, 15);
        for e in &report.per_environment {
            assert_eq!(e.mean, 0.0);
            assert_eq!(e.stderr, 0.0);
        }
    }

    #[test]
    fn uniform_agent_on_one_coin_matches_quadrature() {
        // E_p KL(Ber(p) || Ber(1/2)) = ln 2 - 1/2, oracle by Simpson's rule.
        let oracle = {
            let f = |p: f64| {
                if p <= 0.0 || p >= 1.0 {
                    2f64.ln()
                } else {
                    p * (2.0 * p).ln() + (1.0 - p) * (2.0 * (1.0 - p)).ln()
                }
            };
            let n = 65536;
            let h = 1.0 / n as f64;
            let mut s = f(0.0) + f(1.0);
            for i in 1..n {
                s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        assert!((oracle - (2f64.ln() - 0.5)).abs() < 1e-9);

        // One batch per environment draw: terms are i.i.d., so the reported
        // standard error is a valid basis for the 3-sigma band.
        let report = estimate_kl(&OneCoin, &UniformFactory, &cfg(20_000, 1, 1, 4, 11)).unwrap();
        let diff = (report.overall.mean - oracle).abs();
        assert!(
            diff <= 3.0 * report.overall.stderr,
            "mean {} vs oracle {oracle}, stderr {}",
            report.overall.mean,
            report.overall.stderr
        );
    }

    #[test]
    fn same_seed_is_bit_identical_across_thread_counts() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| estimate_kl(&OneCoin, &UniformFactory, &cfg(8, 16, 3, 20, 99)))
                .unwrap()
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.overall.mean.to_bits(), b.overall.mean.to_bits());
        assert_eq!(a.overall.stderr.to_bits(), b.overall.stderr.to_bits());
        for (x, y) in a.per_environment.iter().zip(&b.per_environment) {
            assert_eq!(x.mean.to_bits(), y.mean.to_bits());
        }
    }

    #[test]
    fn shared_enn_samples_are_deterministic_too() {
        let mut c = cfg(4, 8, 2, 16, 5);
        c.share_enn_samples = true;
        let a = estimate_kl(&OneCoin, &UniformFactory, &c).unwrap();
        let b = estimate_kl(&OneCoin, &UniformFactory, &c).unwrap();
        assert_eq!(a.overall.mean.to_bits(), b.overall.mean.to_bits());
        // The uniform agent's predictive is sample-independent, so sharing
        // cannot move the estimate.
        let fresh = estimate_kl(&OneCoin, &UniformFactory, &cfg(4, 8, 2, 16, 5)).unwrap();
        assert!((a.overall.mean - fresh.overall.mean).abs() < 1e-12);
    }

    #[test]
    fn overall_mean_is_mean_of_terms() {
        let report = estimate_kl(&OneCoin, &UniformFactory, &cfg(6, 10, 2, 8, 3)).unwrap();
        let from_envs: f64 = report
            .per_environment
            .iter()
            .map(|e| e.mean * e.n_terms as f64)
            .sum::<f64>()
            / report.overall.n_terms as f64;
        assert!((report.overall.mean - from_envs).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(EstimatorConfig::new(0, 1, 1, 1, SamplerSpec::iid(), 0).is_err());
        assert!(EstimatorConfig::new(1, 0, 1, 1, SamplerSpec::iid(), 0).is_err());
        assert!(EstimatorConfig::new(1, 1, 0, 1, SamplerSpec::iid(), 0).is_err());
        assert!(EstimatorConfig::new(1, 1, 1, 0, SamplerSpec::iid(), 0).is_err());
    }

    #[test]
    fn estimate_from_permutation_stability() {
        let mut values: Vec<f64> = (0..1000)
            .map(|i| ((i * 2654435761u64 as usize) % 997) as f64 * 1e-3 - 0.5)
            .collect();
        let a = estimate_from(&values);
        values.reverse();
        let b = estimate_from(&values);
        assert!((a.mean - b.mean).abs() < 1e-9);
        assert!((a.stderr - b.stderr).abs() < 1e-9);
    }

    #[test]
    fn ratio_of_identical_reports_is_one() {
        let report = estimate_kl(&OneCoin, &UniformFactory, &cfg(10, 100, 1, 4, 7)).unwrap();
        let r = kl_ratio(&report, &report).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn ratio_with_perfect_numerator_is_zero() {
        let den = estimate_kl(&OneCoin, &UniformFactory, &cfg(10, 100, 2, 4, 7)).unwrap();
        let num = estimate_kl(&OneCoin, &PerfectFactory, &cfg(10, 100, 2, 4, 7)).unwrap();
        let r = kl_ratio(&num, &den).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn ratio_rejects_zero_denominator_and_mismatched_configs() {
        let den = estimate_kl(&OneCoin, &PerfectFactory, &cfg(4, 4, 2, 4, 7)).unwrap();
        let num = estimate_kl(&OneCoin, &UniformFactory, &cfg(4, 4, 2, 4, 7)).unwrap();
        assert!(kl_ratio(&num, &den).is_err());

        let other_tau = estimate_kl(&OneCoin, &UniformFactory, &cfg(4, 4, 3, 4, 7)).unwrap();
        assert!(kl_ratio(&other_tau, &num).is_err());
    }
}
