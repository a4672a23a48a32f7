//! Environment priors: bag of coins, logistic regression, a random-MLP
//! generative process, and empirical CSV datasets with deterministic labels.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::estimator::EnvironmentPrior;
use crate::math::{dot, sigmoid};
use crate::nn::Network;
use crate::rng::StreamRng;
use crate::sampling::InputDistribution;
use crate::types::{ClassProbs, Environment, Input, TrainingData};

fn gaussian_vec(dim: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn gaussian_training(
    env: &Environment,
    dim: usize,
    pairs: usize,
    rng: &mut StreamRng,
) -> Result<TrainingData> {
    let mut out = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let x = Input::features(gaussian_vec(dim, rng));
        let y = env.class_probs(&x)?.sample_label(rng);
        out.push((x, y));
    }
    TrainingData::new(out, env.class_count())
}

/// Bag of coins: `M` coins with heads probabilities drawn i.i.d. Unif(0, 1);
/// training data is `train_tosses` uniformly chosen coins, each tossed once.
#[derive(Debug, Clone)]
pub struct CoinsPrior {
    pub coins: usize,
    pub train_tosses: usize,
}

impl CoinsPrior {
    pub fn new(coins: usize, train_tosses: usize) -> Result<Self> {
        if coins == 0 {
            return Err(CoreError::InvalidArgument(
                "need at least one coin".into(),
            ));
        }
        Ok(CoinsPrior { coins, train_tosses })
    }
}

impl EnvironmentPrior for CoinsPrior {
    fn name(&self) -> &str {
        "coins"
    }

    fn class_count(&self) -> usize {
        2
    }

    fn input_distribution(&self) -> InputDistribution {
        InputDistribution::UniformCoins(self.coins)
    }

    fn sample(&self, rng: &mut StreamRng) -> (Environment, TrainingData) {
        let heads: Arc<[f64]> = (0..self.coins).map(|_| rng.random::<f64>()).collect();
        let coins = self.coins;
        let probs = heads.clone();
        let env = Environment::new(2, move |input: &Input| {
            let x = input.as_coin()?;
            if x >= coins {
                return Err(CoreError::Domain(format!(
                    "coin {x} out of range for {coins} coins"
                )));
            }
            ClassProbs::bernoulli(probs[x])
        });
        let mut pairs = Vec::with_capacity(self.train_tosses);
        for _ in 0..self.train_tosses {
            let x = rng.random_range(0..coins);
            let y = usize::from(rng.random::<f64>() < heads[x]);
            pairs.push((Input::Coin(x), y));
        }
        let data = TrainingData::new(pairs, 2).expect("labels are binary");
        (env, data)
    }
}

/// Logistic regression: coefficients drawn from a standard normal, labels
/// from `sigmoid(temperature * phi . x)`; inputs i.i.d. standard normal.
#[derive(Debug, Clone)]
pub struct LogisticPrior {
    pub dim: usize,
    pub temperature: f64,
    pub train_pairs: usize,
}

impl LogisticPrior {
    pub fn new(dim: usize, temperature: f64, train_pairs: usize) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::InvalidArgument("dim must be at least 1".into()));
        }
        if !(temperature > 0.0) {
            return Err(CoreError::InvalidArgument(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(LogisticPrior {
            dim,
            temperature,
            train_pairs,
        })
    }

    /// The conditional for fixed coefficients, exposed for the reference
    /// agents that share this functional form.
    pub fn conditional(coefficients: Arc<[f64]>, temperature: f64) -> Environment {
        Environment::new(2, move |input: &Input| {
            let x = input.as_features()?;
            if x.len() != coefficients.len() {
                return Err(CoreError::DimensionMismatch {
                    expected: coefficients.len(),
                    got: x.len(),
                });
            }
            ClassProbs::bernoulli(sigmoid(temperature * dot(&coefficients, x)))
        })
    }
}

impl EnvironmentPrior for LogisticPrior {
    fn name(&self) -> &str {
        "logistic"
    }

    fn class_count(&self) -> usize {
        2
    }

    fn input_distribution(&self) -> InputDistribution {
        InputDistribution::StandardGaussian(self.dim)
    }

    fn sample(&self, rng: &mut StreamRng) -> (Environment, TrainingData) {
        let phi: Arc<[f64]> = gaussian_vec(self.dim, rng).into();
        let env = LogisticPrior::conditional(phi, self.temperature);
        let data = gaussian_training(&env, self.dim, self.train_pairs, rng)
            .expect("gaussian inputs are in-domain");
        (env, data)
    }
}

/// Random-MLP generative process: a Xavier-initialized two-hidden-layer ReLU
/// network; class probabilities are `softmax(logits / temperature)`, so lower
/// temperature means higher signal-to-noise. Inputs i.i.d. standard normal.
#[derive(Debug, Clone)]
pub struct MlpTestbedPrior {
    pub dim: usize,
    pub hidden: (usize, usize),
    pub classes: usize,
    pub temperature: f64,
    pub train_pairs: usize,
}

impl MlpTestbedPrior {
    pub const DEFAULT_HIDDEN: (usize, usize) = (50, 50);
    pub const DEFAULT_CLASSES: usize = 2;

    pub fn new(
        dim: usize,
        hidden: (usize, usize),
        classes: usize,
        temperature: f64,
        train_pairs: usize,
    ) -> Result<Self> {
        if dim == 0 || hidden.0 == 0 || hidden.1 == 0 {
            return Err(CoreError::InvalidArgument(
                "dim and hidden widths must be at least 1".into(),
            ));
        }
        if classes < 2 {
            return Err(CoreError::InvalidArgument(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        if !(temperature > 0.0) {
            return Err(CoreError::InvalidArgument(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(MlpTestbedPrior {
            dim,
            hidden,
            classes,
            temperature,
            train_pairs,
        })
    }

    /// Wraps a generative network into an environment.
    pub fn conditional(net: Arc<Network>, temperature: f64, classes: usize) -> Environment {
        Environment::new(classes, move |input: &Input| {
            let x = input.as_features()?;
            let logits = net.forward(x)?;
            let scaled: Vec<f64> = logits.iter().map(|l| l / temperature).collect();
            ClassProbs::from_logits(&scaled)
        })
    }
}

impl EnvironmentPrior for MlpTestbedPrior {
    fn name(&self) -> &str {
        "mlp-testbed"
    }

    fn class_count(&self) -> usize {
        self.classes
    }

    fn input_distribution(&self) -> InputDistribution {
        InputDistribution::StandardGaussian(self.dim)
    }

    fn sample(&self, rng: &mut StreamRng) -> (Environment, TrainingData) {
        let sizes = [self.dim, self.hidden.0, self.hidden.1, self.classes];
        let net = Arc::new(Network::xavier(&sizes, rng));
        let env = MlpTestbedPrior::conditional(net, self.temperature, self.classes);
        let data = gaussian_training(&env, self.dim, self.train_pairs, rng)
            .expect("gaussian inputs are in-domain");
        (env, data)
    }
}

/// Which pool test inputs and anchors are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorPool {
    Test,
    Train,
}

/// A fixed dataset treated as a deterministic environment: every stored input
/// maps to its stored label with probability one, so the score of an agent
/// reduces to its negative log-likelihood. Features are standardized to mean
/// zero and unit variance using train-pool statistics.
#[derive(Debug, Clone)]
pub struct EmpiricalDatasetPrior {
    train: Arc<[(Input, usize)]>,
    test: Arc<[(Input, usize)]>,
    labels: Arc<HashMap<Input, usize>>,
    subsample: usize,
    classes: usize,
    anchor_pool: AnchorPool,
}

impl EmpiricalDatasetPrior {
    pub fn new(
        train_pool: Vec<(Vec<f64>, usize)>,
        test_pool: Vec<(Vec<f64>, usize)>,
        subsample: usize,
        classes: Option<usize>,
        anchor_pool: AnchorPool,
    ) -> Result<Self> {
        if train_pool.is_empty() || test_pool.is_empty() {
            return Err(CoreError::InvalidArgument(
                "train and test pools must be nonempty".into(),
            ));
        }
        if subsample > train_pool.len() {
            return Err(CoreError::InvalidArgument(format!(
                "subsample {subsample} exceeds train pool of {}",
                train_pool.len()
            )));
        }
        let dim = train_pool[0].0.len();
        for (x, _) in train_pool.iter().chain(test_pool.iter()) {
            if x.len() != dim {
                return Err(CoreError::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::NonFinite("dataset feature".into()));
            }
        }
        let max_label = train_pool
            .iter()
            .chain(test_pool.iter())
            .map(|(_, y)| *y)
            .max()
            .unwrap();
        let classes = classes.unwrap_or(max_label + 1).max(2);
        if max_label >= classes {
            return Err(CoreError::LabelOutOfRange {
                label: max_label,
                classes,
            });
        }

        let (shift, scale) = standardization_params(&train_pool, dim);
        let standardize = |pool: Vec<(Vec<f64>, usize)>| -> Vec<(Input, usize)> {
            pool.into_iter()
                .map(|(x, y)| {
                    let z: Vec<f64> = x
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v - shift[i]) / scale[i])
                        .collect();
                    (Input::features(z), y)
                })
                .collect()
        };
        let train: Arc<[(Input, usize)]> = standardize(train_pool).into();
        let test: Arc<[(Input, usize)]> = standardize(test_pool).into();

        let mut labels = HashMap::with_capacity(train.len() + test.len());
        for (x, y) in train.iter().chain(test.iter()) {
            labels.insert(x.clone(), *y);
        }

        Ok(EmpiricalDatasetPrior {
            train,
            test,
            labels: Arc::new(labels),
            subsample,
            classes,
            anchor_pool,
        })
    }

    /// Loads a single CSV and holds out `holdout` rows (chosen by a seeded
    /// shuffle) as the test pool.
    pub fn from_csv_split(
        path: &Path,
        holdout: usize,
        split_seed: u64,
        subsample: usize,
        classes: Option<usize>,
        anchor_pool: AnchorPool,
    ) -> Result<Self> {
        let mut rows = load_csv(path)?;
        if holdout == 0 || holdout >= rows.len() {
            return Err(CoreError::InvalidArgument(format!(
                "holdout {holdout} must be in 1..{}",
                rows.len()
            )));
        }
        let mut rng = crate::rng::stream_rng(split_seed, &[0x5917]);
        // Fisher-Yates, then the tail is the held-out test pool.
        for i in (1..rows.len()).rev() {
            rows.swap(i, rng.random_range(0..=i));
        }
        let test = rows.split_off(rows.len() - holdout);
        EmpiricalDatasetPrior::new(rows, test, subsample, classes, anchor_pool)
    }

    /// Loads separate train and test CSVs.
    pub fn from_csv_pair(
        train_path: &Path,
        test_path: &Path,
        subsample: usize,
        classes: Option<usize>,
        anchor_pool: AnchorPool,
    ) -> Result<Self> {
        EmpiricalDatasetPrior::new(
            load_csv(train_path)?,
            load_csv(test_path)?,
            subsample,
            classes,
            anchor_pool,
        )
    }

    pub fn feature_dim(&self) -> usize {
        self.train[0].0.dim().unwrap_or(0)
    }

    pub fn train_pool(&self) -> &[(Input, usize)] {
        &self.train
    }

    pub fn test_pool(&self) -> &[(Input, usize)] {
        &self.test
    }

    pub fn subsample(&self) -> usize {
        self.subsample
    }
}

impl EnvironmentPrior for EmpiricalDatasetPrior {
    fn name(&self) -> &str {
        "empirical"
    }

    fn class_count(&self) -> usize {
        self.classes
    }

    fn input_distribution(&self) -> InputDistribution {
        let pool = match self.anchor_pool {
            AnchorPool::Test => &self.test,
            AnchorPool::Train => &self.train,
        };
        let inputs: Arc<[Input]> = pool.iter().map(|(x, _)| x.clone()).collect();
        InputDistribution::EmpiricalPool(inputs)
    }

    fn sample(&self, rng: &mut StreamRng) -> (Environment, TrainingData) {
        let labels = self.labels.clone();
        let classes = self.classes;
        let env = Environment::new(classes, move |input: &Input| {
            match labels.get(input) {
                Some(&y) => ClassProbs::certain(y, classes),
                None => Err(CoreError::Domain(
                    "input is not in the stored dataset pool".into(),
                )),
            }
        });
        // Uniform subsample without replacement: partial Fisher-Yates over
        // index positions.
        let mut idx: Vec<usize> = (0..self.train.len()).collect();
        for i in 0..self.subsample {
            let j = rng.random_range(i..idx.len());
            idx.swap(i, j);
        }
        let pairs: Vec<(Input, usize)> = idx[..self.subsample]
            .iter()
            .map(|&i| self.train[i].clone())
            .collect();
        let data = TrainingData::new(pairs, classes).expect("pool labels validated");
        (env, data)
    }
}

fn standardization_params(pool: &[(Vec<f64>, usize)], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = pool.len() as f64;
    let mut mean = vec![0.0; dim];
    for (x, _) in pool {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for (x, _) in pool {
        for (s, (v, m)) in var.iter_mut().zip(x.iter().zip(&mean)) {
            let d = v - m;
            *s += d * d;
        }
    }
    let scale = var
        .iter()
        .map(|s| {
            let v = s / n;
            if v < 1e-12 {
                1.0
            } else {
                v.sqrt()
            }
        })
        .collect();
    (mean, scale)
}

/// Loads a dataset CSV: one row per example, numeric features, integer label
/// in the last column. A header row is auto-detected and skipped.
pub fn load_csv(path: &Path) -> Result<Vec<(Vec<f64>, usize)>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CoreError::InvalidArgument(format!("cannot read {}: {e}", path.display()))
    })?;
    let mut rows = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(CoreError::InvalidArgument(format!(
                "{}:{}: need at least one feature and a label",
                path.display(),
                lineno + 1
            )));
        }
        let parsed: Option<Vec<f64>> = fields
            .iter()
            .map(|f| f.parse::<f64>().ok())
            .collect();
        let Some(values) = parsed else {
            if rows.is_empty() && lineno == 0 {
                continue; // header
            }
            return Err(CoreError::InvalidArgument(format!(
                "{}:{}: non-numeric field",
                path.display(),
                lineno + 1
            )));
        };
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(CoreError::DimensionMismatch {
                    expected: w,
                    got: values.len(),
                });
            }
            _ => {}
        }
        let label_f = values[values.len() - 1];
        if label_f < 0.0 || label_f.fract() != 0.0 {
            return Err(CoreError::InvalidArgument(format!(
                "{}:{}: label column must hold nonnegative integers, got {label_f}",
                path.display(),
                lineno + 1
            )));
        }
        let features = values[..values.len() - 1].to_vec();
        rows.push((features, label_f as usize));
    }
    if rows.is_empty() {
        return Err(CoreError::InvalidArgument(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn coins_heads_probabilities_are_uniform() {
        let prior = CoinsPrior::new(1, 0).unwrap();
        let mut rng = stream_rng(0, &[]);
        let mut sum = 0.0;
        let draws = 10_000;
        for _ in 0..draws {
            let (env, _) = prior.sample(&mut rng);
            let p = env.class_probs(&Input::Coin(0)).unwrap().prob(1).unwrap();
            assert!((0.0..=1.0).contains(&p));
            sum += p;
        }
        let mean = sum / draws as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean = {mean}");
    }

    #[test]
    fn coins_empty_training_is_fine() {
        let prior = CoinsPrior::new(5, 0).unwrap();
        let mut rng = stream_rng(1, &[]);
        let (_, data) = prior.sample(&mut rng);
        assert!(data.is_empty());
    }

    #[test]
    fn coins_out_of_range_is_domain_error() {
        let prior = CoinsPrior::new(3, 0).unwrap();
        let mut rng = stream_rng(1, &[]);
        let (env, _) = prior.sample(&mut rng);
        assert!(env.class_probs(&Input::Coin(3)).is_err());
        assert!(env.class_probs(&Input::features(vec![0.0])).is_err());
    }

    #[test]
    fn logistic_sigmoid_evaluation() {
        // temperature 0.01, phi = 1, x = 100: sigmoid(1).
        let env = LogisticPrior::conditional(vec![1.0].into(), 0.01);
        let p = env
            .class_probs(&Input::features(vec![100.0]))
            .unwrap()
            .prob(1)
            .unwrap();
        assert!((p - sigmoid(1.0)).abs() < 1e-12);
        assert!((p - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn logistic_orthogonal_input_is_even_money() {
        let env = LogisticPrior::conditional(vec![1.0, 0.0].into(), 0.7);
        let p = env
            .class_probs(&Input::features(vec![0.0, 3.0]))
            .unwrap()
            .prob(1)
            .unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn logistic_marginal_over_coefficients_is_half() {
        // Sign symmetry of the coefficient prior at a fixed input.
        let prior = LogisticPrior::new(3, 0.8, 0).unwrap();
        let x = Input::features(vec![0.4, -1.0, 2.0]);
        let mut rng = stream_rng(5, &[]);
        let mut sum = 0.0;
        let draws = 100_000;
        for _ in 0..draws {
            let (env, _) = prior.sample(&mut rng);
            sum += env.class_probs(&x).unwrap().prob(1).unwrap();
        }
        let mean = sum / draws as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean = {mean}");
    }

    #[test]
    fn logistic_dimension_mismatch() {
        let env = LogisticPrior::conditional(vec![1.0, 2.0].into(), 1.0);
        assert!(env.class_probs(&Input::features(vec![1.0])).is_err());
    }

    #[test]
    fn zero_weight_mlp_is_uniform() {
        let net = Arc::new(Network::zeros(&[2, 50, 50, 4]));
        let env = MlpTestbedPrior::conditional(net, 0.1, 4);
        let probs = env.class_probs(&Input::features(vec![0.3, -0.7])).unwrap();
        for c in 0..4 {
            assert_eq!(probs.prob(c).unwrap(), 0.25);
        }
    }

    #[test]
    fn vanishing_temperature_approaches_argmax_one_hot() {
        let mut rng = stream_rng(21, &[]);
        let net = Arc::new(Network::xavier(&[3, 20, 20, 4], &mut rng));
        let x = Input::features(vec![0.8, -0.3, 1.1]);
        let logits = net.forward(x.as_features().unwrap()).unwrap();
        let argmax = logits
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let env = MlpTestbedPrior::conditional(net.clone(), 1e-4, 4);
        let probs = env.class_probs(&x).unwrap();
        assert!(probs.prob(argmax).unwrap() > 0.9999);
    }

    #[test]
    fn lower_temperature_sharpens_class_probabilities() {
        // Shared weights across temperatures: the max-class probability is
        // monotone as the temperature drops through {0.5, 0.1, 0.01}.
        let prior = MlpTestbedPrior::new(2, (50, 50), 2, 1.0, 0).unwrap();
        let mut rng = stream_rng(3, &[]);
        let mut means = [0.0f64; 3];
        let temps = [0.5, 0.1, 0.01];
        let envs = 1000;
        for _ in 0..envs {
            let sizes = [prior.dim, prior.hidden.0, prior.hidden.1, prior.classes];
            let net = Arc::new(Network::xavier(&sizes, &mut rng));
            let x = Input::features(gaussian_vec(2, &mut rng));
            for (k, &t) in temps.iter().enumerate() {
                let env = MlpTestbedPrior::conditional(net.clone(), t, 2);
                let probs = env.class_probs(&x).unwrap();
                means[k] += probs.as_slice().iter().cloned().fold(0.0, f64::max);
            }
        }
        for m in &mut means {
            *m /= envs as f64;
        }
        assert!(
            means[2] > means[1] && means[1] > means[0],
            "means = {means:?}"
        );
    }

    #[test]
    fn training_inputs_look_standard_normal() {
        let prior = LogisticPrior::new(4, 1.0, 400).unwrap();
        let mut rng = stream_rng(8, &[]);
        let (_, data) = prior.sample(&mut rng);
        let t = data.len() as f64;
        for d in 0..4 {
            let mean: f64 = data
                .pairs()
                .iter()
                .map(|(x, _)| x.as_features().unwrap()[d])
                .sum::<f64>()
                / t;
            assert!(mean.abs() < 4.0 / t.sqrt(), "dim {d}: mean = {mean}");
        }
    }

    fn toy_pool() -> Vec<(Vec<f64>, usize)> {
        vec![
            (vec![1.0, 10.0], 0),
            (vec![2.0, 20.0], 1),
            (vec![3.0, 30.0], 2),
            (vec![4.0, 40.0], 0),
            (vec![5.0, 50.0], 1),
            (vec![6.0, 60.0], 2),
        ]
    }

    #[test]
    fn standardization_is_exact_on_train_pool() {
        let prior = EmpiricalDatasetPrior::new(
            toy_pool(),
            vec![(vec![2.5, 25.0], 1)],
            4,
            None,
            AnchorPool::Test,
        )
        .unwrap();
        let dim = prior.feature_dim();
        let n = prior.train_pool().len() as f64;
        for d in 0..dim {
            let vals: Vec<f64> = prior
                .train_pool()
                .iter()
                .map(|(x, _)| x.as_features().unwrap()[d])
                .collect();
            let mean: f64 = vals.iter().sum::<f64>() / n;
            let var: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-9, "dim {d} mean = {mean}");
            assert!((var - 1.0).abs() < 1e-6, "dim {d} var = {var}");
        }
    }

    #[test]
    fn empirical_environment_is_deterministic_and_total_on_pools() {
        let prior = EmpiricalDatasetPrior::new(
            toy_pool(),
            vec![(vec![7.0, 70.0], 2)],
            6,
            None,
            AnchorPool::Test,
        )
        .unwrap();
        let mut rng = stream_rng(0, &[]);
        let (env, data) = prior.sample(&mut rng);
        assert_eq!(data.len(), 6);
        for (x, y) in prior.train_pool().iter().chain(prior.test_pool()) {
            let probs = env.class_probs(x).unwrap();
            assert_eq!(probs.prob(*y).unwrap(), 1.0);
        }
        // Off-pool input is a domain error.
        assert!(env
            .class_probs(&Input::features(vec![123.0, 456.0]))
            .is_err());
    }

    #[test]
    fn empirical_subsample_bounds() {
        assert!(EmpiricalDatasetPrior::new(
            toy_pool(),
            vec![(vec![0.0, 0.0], 0)],
            7,
            None,
            AnchorPool::Test
        )
        .is_err());
    }

    #[test]
    fn empirical_subsample_is_without_replacement() {
        let prior = EmpiricalDatasetPrior::new(
            toy_pool(),
            vec![(vec![0.0, 0.0], 0)],
            6,
            None,
            AnchorPool::Test,
        )
        .unwrap();
        let mut rng = stream_rng(4, &[]);
        let (_, data) = prior.sample(&mut rng);
        let distinct: std::collections::HashSet<_> = data.pairs().iter().map(|(x, _)| x).collect();
        assert_eq!(distinct.len(), 6);
    }

    #[test]
    fn csv_loading_and_header_detection() {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("jpeval-csv-test-{}.csv", std::process::id()));
        std::fs::write(&path, "a,b,label\n1.0,2.0,0\n3.0,4.0,1\n").unwrap();
        let rows = load_csv(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1], (vec![3.0, 4.0], 1));

        std::fs::write(&path, "1.0,2.0,0\n3.0,4.0,2\n").unwrap();
        let rows = load_csv(&path).unwrap();
        assert_eq!(rows.len(), 2);

        std::fs::write(&path, "1.0,2.0,0\n3.0,oops,1\n").unwrap();
        assert!(load_csv(&path).is_err());

        std::fs::write(&path, "1.0,2.0,0.5\n").unwrap();
        assert!(load_csv(&path).is_err());

        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn prior_samples_replay_identically() {
        let prior = MlpTestbedPrior::new(3, (10, 10), 3, 0.5, 5).unwrap();
        let probe = Input::features(vec![0.1, -0.2, 0.3]);
        let run = || {
            let mut rng = stream_rng(77, &[4]);
            let (env, data) = prior.sample(&mut rng);
            (
                env.class_probs(&probe).unwrap(),
                data.pairs().to_vec(),
            )
        };
        let (p1, d1) = run();
        let (p2, d2) = run();
        assert_eq!(p1, p2);
        assert_eq!(d1, d2);
    }
}
