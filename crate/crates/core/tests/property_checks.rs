//! Property-based checks for the stochastic estimator building blocks.

use proptest::prelude::*;

use jpeval_core::agents::{make_analytic, AnalyticAgentSpec};
use jpeval_core::likelihood::{
    agent_log_likelihood, agent_log_likelihood_with, environment_log_likelihood, log_mean_exp,
};
use jpeval_core::rng::stream_rng;
use jpeval_core::sampling::{sample_test_inputs, InputDistribution, SamplerSpec};
use jpeval_core::types::{Agent, ClassProbs, Environment, Input, TestBatch};

/// Agent whose imagined environments emit a bounded random binary predictive
/// at every input: probabilities stay in [0.1, 0.9] so probability-space
/// products never underflow.
fn bounded_agent() -> Box<dyn Agent> {
    struct Bounded;
    impl Agent for Bounded {
        fn name(&self) -> &str {
            "bounded"
        }
        fn class_count(&self) -> usize {
            2
        }
        fn sample_imagined(&self, rng: &mut jpeval_core::StreamRng) -> Environment {
            use rand::RngExt;
            let p = 0.1 + 0.8 * rng.random::<f64>();
            Environment::new(2, move |_| ClassProbs::bernoulli(p))
        }
    }
    Box::new(Bounded)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Log-space aggregation agrees with the naive probability-space mean to
    /// a relative 1e-10 whenever the naive computation cannot underflow.
    #[test]
    fn logsumexp_matches_naive_mean(
        seed in 0u64..1_000,
        tau in 1usize..=5,
        m_enn in 1usize..=32,
    ) {
        let agent = bounded_agent();
        let inputs: Vec<Input> = (0..tau).map(Input::Coin).collect();
        let labels: Vec<usize> = (0..tau).map(|t| (seed as usize + t) % 2).collect();
        let batch = TestBatch::new(inputs, labels.clone()).unwrap();

        // Fix the imagined draws so both routes see the same samples.
        let mut draw_rng = stream_rng(seed, &[2]);
        let imagined: Vec<Environment> =
            (0..m_enn).map(|_| agent.sample_imagined(&mut draw_rng)).collect();

        let log_space = agent_log_likelihood_with(&imagined, &batch).unwrap();
        let naive = {
            let mut total = 0.0;
            for env in &imagined {
                let mut product = 1.0;
                for (input, &label) in batch.inputs().iter().zip(batch.labels()) {
                    product *= env.class_probs(input).unwrap().prob(label).unwrap();
                }
                total += product;
            }
            (total / m_enn as f64).ln()
        };
        let rel = ((log_space - naive) / naive).abs();
        prop_assert!(rel < 1e-10, "log-space {log_space} vs naive {naive}");
    }

    /// The Monte-Carlo agent likelihood does not depend on sample order.
    #[test]
    fn agent_likelihood_is_sample_order_invariant(
        seed in 0u64..1_000,
        m_enn in 2usize..=24,
    ) {
        let agent = bounded_agent();
        let mut draw_rng = stream_rng(seed, &[3]);
        let mut imagined: Vec<Environment> =
            (0..m_enn).map(|_| agent.sample_imagined(&mut draw_rng)).collect();
        let batch = TestBatch::new(vec![Input::Coin(0), Input::Coin(1)], vec![1, 0]).unwrap();
        let forward = agent_log_likelihood_with(&imagined, &batch).unwrap();
        imagined.reverse();
        let reversed = agent_log_likelihood_with(&imagined, &batch).unwrap();
        prop_assert!((forward - reversed).abs() < 1e-12);
    }

    /// A polyadic batch has at most min(kappa, tau) distinct inputs.
    #[test]
    fn polyadic_distinct_bound(
        seed in 0u64..10_000,
        kappa in 1usize..=8,
        tau in 1usize..=16,
        coins in 1usize..=40,
    ) {
        let dist = InputDistribution::UniformCoins(coins);
        let spec = SamplerSpec::polyadic(kappa).unwrap();
        let mut rng = stream_rng(seed, &[4]);
        let inputs = sample_test_inputs(spec, &dist, tau, &mut rng).unwrap();
        let distinct: std::collections::HashSet<_> = inputs.iter().collect();
        prop_assert!(distinct.len() <= kappa.min(tau));
    }

    /// log_mean_exp of shuffled values is stable and of constants exact.
    #[test]
    fn log_mean_exp_permutation_and_constants(
        mut values in prop::collection::vec(-50.0f64..0.0, 1..64),
        c in -100.0f64..0.0,
    ) {
        let forward = log_mean_exp(&values);
        values.reverse();
        let reversed = log_mean_exp(&values);
        prop_assert!((forward - reversed).abs() < 1e-12);
        let constants = vec![c; values.len()];
        prop_assert_eq!(log_mean_exp(&constants), c);
    }

    /// The perfect agent's likelihood gap is identically zero for any batch
    /// shape and sample count.
    #[test]
    fn perfect_agent_gap_is_zero(
        seed in 0u64..1_000,
        tau in 1usize..=12,
        m_enn in 1usize..=16,
    ) {
        let heads = 0.1 + 0.8 * (seed as f64 / 1_000.0);
        let env = Environment::new(2, move |input: &Input| {
            let x = input.as_coin()?;
            ClassProbs::bernoulli(((x as f64 * 0.37).sin() * 0.4 + 0.5) * heads.max(0.2))
        });
        let agent = make_analytic(AnalyticAgentSpec::Perfect { env: env.clone() }).unwrap();
        let dist = InputDistribution::UniformCoins(6);
        let mut rng = stream_rng(seed, &[5]);
        let inputs = sample_test_inputs(SamplerSpec::dyadic(), &dist, tau, &mut rng).unwrap();
        let batch = jpeval_core::sampling::sample_labels(&env, &inputs, &mut rng).unwrap();
        let log_p = environment_log_likelihood(&env, &batch).unwrap();
        let log_q = agent_log_likelihood(agent.as_ref(), &batch, m_enn, &mut rng).unwrap();
        prop_assert_eq!(log_p - log_q, 0.0);
    }
}
