//! Experiment configuration: a line-oriented `key = value` format with
//! `[section]` headers, expanded into a concrete grid of settings, agents and
//! metrics.
//!
//! Sections: `[experiment]`, `[environment]`, `[estimator]`, and one
//! `[agent <name>]` per agent. Grid-valued keys take comma-separated lists
//! and expand to a cross product. Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use jpeval_core::agents::{
    BetaPosteriorFactory, EnsembleFactory, EnsemblePlusFactory, EnsemblePlusSpec, EnsembleSpec,
    LogisticMarginalFactory, LogisticPriorFactory, MlpFactory, MlpSpec, PerfectFactory,
    SharedPFactory, UniformFactory,
};
use jpeval_core::environments::{
    AnchorPool, CoinsPrior, EmpiricalDatasetPrior, LogisticPrior, MlpTestbedPrior,
};
use jpeval_core::estimator::{AgentFactory, EnvironmentPrior};
use jpeval_core::sampling::SamplerSpec;

use crate::error::{HarnessError, Result};

fn cfg_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

/// One `(tau, sampler)` evaluation metric, with optional per-metric override
/// of the sampling budget. Syntax: `tau:sampler[:JxN]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetricSpec {
    pub tau: usize,
    pub sampler: SamplerSpec,
    pub budget: Option<(usize, usize)>,
}

impl MetricSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(cfg_err(format!(
                "metric `{s}` should be tau:sampler or tau:sampler:JxN"
            )));
        }
        let tau: usize = parts[0]
            .parse()
            .map_err(|_| cfg_err(format!("bad tau in metric `{s}`")))?;
        let sampler: SamplerSpec = parts[1].parse().map_err(|e| cfg_err(format!("{e}")))?;
        let budget = if parts.len() == 3 {
            let (j, n) = parts[2]
                .split_once('x')
                .ok_or_else(|| cfg_err(format!("budget in `{s}` should be JxN")))?;
            Some((
                j.parse().map_err(|_| cfg_err(format!("bad J in `{s}`")))?,
                n.parse().map_err(|_| cfg_err(format!("bad N in `{s}`")))?,
            ))
        } else {
            None
        };
        Ok(MetricSpec {
            tau,
            sampler,
            budget,
        })
    }

    /// Stable label used in reports: `tau=10|kappa=2` or `tau=1|iid`.
    pub fn label(&self) -> String {
        match self.sampler.anchor_count() {
            None => format!("tau={}|iid", self.tau),
            Some(k) => format!("tau={}|kappa={k}", self.tau),
        }
    }

    pub fn matches(&self, tau: usize, kappa: &str) -> bool {
        self.tau == tau && self.sampler.kappa_label() == kappa
    }
}

/// One concrete environment setting (a cell of the environment grid).
#[derive(Debug, Clone)]
pub enum EnvSettingSpec {
    Coins {
        coins: usize,
        train: usize,
    },
    Logistic {
        dim: usize,
        temperature: f64,
        train: usize,
    },
    Testbed {
        dim: usize,
        hidden: (usize, usize),
        classes: usize,
        temperature: f64,
        lambda: usize,
    },
    Empirical {
        csv: PathBuf,
        holdout: usize,
        split_seed: u64,
        subsample: usize,
        classes: Option<usize>,
        anchors_from_train: bool,
    },
}

/// Row metadata for one setting, fixed once the prior is built.
#[derive(Debug, Clone, Copy)]
pub struct SettingMeta {
    pub dim: usize,
    pub train: usize,
    pub rho: Option<f64>,
}

impl EnvSettingSpec {
    pub fn train_size(&self) -> usize {
        match self {
            EnvSettingSpec::Coins { train, .. } => *train,
            EnvSettingSpec::Logistic { train, .. } => *train,
            EnvSettingSpec::Testbed { dim, lambda, .. } => dim * lambda,
            EnvSettingSpec::Empirical { subsample, .. } => *subsample,
        }
    }

    /// Builds the prior, returning it with the metadata recorded in rows.
    pub fn build(&self) -> Result<(Arc<dyn EnvironmentPrior>, SettingMeta)> {
        match self {
            EnvSettingSpec::Coins { coins, train } => {
                let prior = CoinsPrior::new(*coins, *train)?;
                Ok((
                    Arc::new(prior),
                    SettingMeta {
                        dim: *coins,
                        train: *train,
                        rho: None,
                    },
                ))
            }
            EnvSettingSpec::Logistic {
                dim,
                temperature,
                train,
            } => {
                let prior = LogisticPrior::new(*dim, *temperature, *train)?;
                Ok((
                    Arc::new(prior),
                    SettingMeta {
                        dim: *dim,
                        train: *train,
                        rho: Some(*temperature),
                    },
                ))
            }
            EnvSettingSpec::Testbed {
                dim,
                hidden,
                classes,
                temperature,
                lambda,
            } => {
                let prior =
                    MlpTestbedPrior::new(*dim, *hidden, *classes, *temperature, dim * lambda)?;
                Ok((
                    Arc::new(prior),
                    SettingMeta {
                        dim: *dim,
                        train: dim * lambda,
                        rho: Some(*temperature),
                    },
                ))
            }
            EnvSettingSpec::Empirical {
                csv,
                holdout,
                split_seed,
                subsample,
                classes,
                anchors_from_train,
            } => {
                let pool = if *anchors_from_train {
                    AnchorPool::Train
                } else {
                    AnchorPool::Test
                };
                let prior = EmpiricalDatasetPrior::from_csv_split(
                    csv, *holdout, *split_seed, *subsample, *classes, pool,
                )?;
                let dim = prior.feature_dim();
                Ok((
                    Arc::new(prior),
                    SettingMeta {
                        dim,
                        train: *subsample,
                        rho: None,
                    },
                ))
            }
        }
    }
}

/// Agent kind plus concrete hyperparameters (one grid cell).
#[derive(Debug, Clone)]
pub enum AgentSpec {
    Uniform,
    SharedP,
    BetaPosterior,
    LogisticMarginal,
    LogisticPrior,
    Perfect,
    Mlp(MlpSpec),
    Ensemble(EnsembleSpec),
    EnsemblePlus(EnsemblePlusSpec),
}

impl AgentSpec {
    pub fn agent_name(&self) -> &'static str {
        match self {
            AgentSpec::Uniform => "uniform",
            AgentSpec::SharedP => "shared-p",
            AgentSpec::BetaPosterior => "beta-posterior",
            AgentSpec::LogisticMarginal => "marginal",
            AgentSpec::LogisticPrior => "prior",
            AgentSpec::Perfect => "perfect",
            AgentSpec::Mlp(_) => "mlp",
            AgentSpec::Ensemble(_) => "ensemble",
            AgentSpec::EnsemblePlus(_) => "ensemble+",
        }
    }

    fn compatible_with(&self, env: &EnvSettingSpec) -> bool {
        match self {
            AgentSpec::Uniform | AgentSpec::SharedP | AgentSpec::Perfect => true,
            AgentSpec::BetaPosterior => matches!(env, EnvSettingSpec::Coins { .. }),
            AgentSpec::LogisticMarginal | AgentSpec::LogisticPrior => {
                matches!(env, EnvSettingSpec::Logistic { .. })
            }
            AgentSpec::Mlp(_) | AgentSpec::Ensemble(_) | AgentSpec::EnsemblePlus(_) => {
                !matches!(env, EnvSettingSpec::Coins { .. })
            }
        }
    }

    /// Training-step multiplier for the synthetic-MLP grid: agents get 5x
    /// the budget in the highest data regime and a fifth of it in the lowest.
    fn scaled_steps(steps: usize, env: &EnvSettingSpec) -> usize {
        match env {
            EnvSettingSpec::Testbed { lambda, .. } => {
                if *lambda >= 1000 {
                    steps * 5
                } else if *lambda <= 1 {
                    (steps / 5).max(1)
                } else {
                    steps
                }
            }
            _ => steps,
        }
    }

    /// Builds the factory for this agent under one environment setting.
    pub fn factory(&self, env: &EnvSettingSpec) -> Result<Box<dyn AgentFactory>> {
        if !self.compatible_with(env) {
            return Err(cfg_err(format!(
                "agent `{}` is not applicable to this environment",
                self.agent_name()
            )));
        }
        Ok(match self {
            AgentSpec::Uniform => Box::new(UniformFactory),
            AgentSpec::SharedP => Box::new(SharedPFactory),
            AgentSpec::Perfect => Box::new(PerfectFactory),
            AgentSpec::BetaPosterior => {
                let EnvSettingSpec::Coins { coins, .. } = env else {
                    unreachable!()
                };
                Box::new(BetaPosteriorFactory { coins: *coins })
            }
            AgentSpec::LogisticMarginal => {
                let EnvSettingSpec::Logistic { temperature, .. } = env else {
                    unreachable!()
                };
                Box::new(LogisticMarginalFactory {
                    temperature: *temperature,
                })
            }
            AgentSpec::LogisticPrior => {
                let EnvSettingSpec::Logistic {
                    dim, temperature, ..
                } = env
                else {
                    unreachable!()
                };
                Box::new(LogisticPriorFactory {
                    temperature: *temperature,
                    dim: *dim,
                })
            }
            AgentSpec::Mlp(spec) => {
                let mut spec = spec.clone();
                spec.steps = Self::scaled_steps(spec.steps, env);
                Box::new(MlpFactory(spec))
            }
            AgentSpec::Ensemble(spec) => {
                let mut spec = spec.clone();
                spec.member.steps = Self::scaled_steps(spec.member.steps, env);
                Box::new(EnsembleFactory(spec))
            }
            AgentSpec::EnsemblePlus(spec) => {
                let mut spec = spec.clone();
                spec.member.steps = Self::scaled_steps(spec.member.steps, env);
                Box::new(EnsemblePlusFactory(spec))
            }
        })
    }
}

/// One agent grid cell with its identifying hyperparameter string.
#[derive(Debug, Clone)]
pub struct AgentCell {
    pub agent: String,
    pub hyper_id: String,
    pub spec: AgentSpec,
    /// When set, the agent is evaluated only under these metrics.
    pub metrics: Option<Vec<MetricSpec>>,
}

/// Sampling budget shared by all metrics unless overridden per metric.
#[derive(Debug, Clone, Copy)]
pub struct BudgetSpec {
    pub env_draws: usize,
    pub batches_per_env: usize,
    pub m_enn: usize,
    /// Share one set of imagined-environment samples across the batches of
    /// each environment draw (default: fresh samples per batch).
    pub share_enn: bool,
}

/// A fully expanded experiment: the cross product of settings, agent cells,
/// metrics and seeds.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub out: PathBuf,
    pub seeds: Vec<u64>,
    pub settings: Vec<EnvSettingSpec>,
    pub agents: Vec<AgentCell>,
    pub metrics: Vec<MetricSpec>,
    pub budget: BudgetSpec,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(cfg_err("experiment name must be nonempty"));
        }
        if self.seeds.is_empty() {
            return Err(cfg_err("need at least one seed"));
        }
        if self.settings.is_empty() {
            return Err(cfg_err("environment grid is empty"));
        }
        if self.agents.is_empty() {
            return Err(cfg_err("agent grid is empty"));
        }
        if self.metrics.is_empty() {
            return Err(cfg_err("need at least one metric"));
        }
        if self.budget.env_draws == 0 || self.budget.batches_per_env == 0 || self.budget.m_enn == 0
        {
            return Err(cfg_err("j, n and m_enn must be at least 1"));
        }
        for m in &self.metrics {
            if m.tau == 0 {
                return Err(cfg_err("tau must be at least 1"));
            }
            if let Some((j, n)) = m.budget {
                if j == 0 || n == 0 {
                    return Err(cfg_err("metric budget must be at least 1x1"));
                }
            }
        }
        let mut keys = std::collections::HashSet::new();
        for cell in &self.agents {
            if !keys.insert((cell.agent.clone(), cell.hyper_id.clone())) {
                return Err(cfg_err(format!(
                    "duplicate agent cell {}[{}]",
                    cell.agent, cell.hyper_id
                )));
            }
            if let Some(ms) = &cell.metrics {
                for m in ms {
                    if !self.metrics.contains(m) {
                        return Err(cfg_err(format!(
                            "agent `{}` filters on metric {} that is not in the estimator metrics",
                            cell.agent,
                            m.label()
                        )));
                    }
                }
            }
            for setting in &self.settings {
                if !cell.spec.compatible_with(setting) {
                    return Err(cfg_err(format!(
                        "agent `{}` is not applicable to environment setting {:?}",
                        cell.agent, setting
                    )));
                }
            }
        }
        Ok(())
    }

    /// Stable hash of the expanded config, recorded in the output manifest.
    pub fn config_hash(&self) -> u64 {
        let repr = format!(
            "{} {:?} {:?} {:?} {:?} {:?}",
            self.name, self.seeds, self.settings, self.agents_repr(), self.metrics, self.budget
        );
        fnv1a(repr.as_bytes())
    }

    fn agents_repr(&self) -> Vec<(String, String)> {
        self.agents
            .iter()
            .map(|c| (c.agent.clone(), c.hyper_id.clone()))
            .collect()
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

// ---------------------------------------------------------------------------
// File parsing.
// ---------------------------------------------------------------------------

#[derive(Debug, Default)]
struct Section {
    header: String,
    entries: BTreeMap<String, String>,
    order: Vec<String>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| cfg_err(format!("[{}] is missing `{key}`", self.header)))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| cfg_err(format!("[{}] `{key} = {raw}` is not valid", self.header)))
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| cfg_err(format!("[{}] `{key} = {raw}` is not valid", self.header))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self.require(key)?;
        raw.split(',')
            .map(|part| {
                part.trim().parse().map_err(|_| {
                    cfg_err(format!(
                        "[{}] `{key}` entry `{}` is not valid",
                        self.header,
                        part.trim()
                    ))
                })
            })
            .collect()
    }

    fn list_or<T: std::str::FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        if self.get(key).is_none() {
            return Ok(default);
        }
        self.list(key)
    }
}

fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| cfg_err(format!("line {}: unterminated section", lineno + 1)))?;
            sections.push(Section {
                header: header.trim().to_string(),
                ..Default::default()
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| cfg_err(format!("line {}: expected `key = value`", lineno + 1)))?;
        let section = sections
            .last_mut()
            .ok_or_else(|| cfg_err(format!("line {}: entry before any [section]", lineno + 1)))?;
        let key = key.trim().to_string();
        if section.entries.contains_key(&key) {
            return Err(cfg_err(format!(
                "line {}: duplicate key `{key}` in [{}]",
                lineno + 1,
                section.header
            )));
        }
        section.order.push(key.clone());
        section.entries.insert(key, value.trim().to_string());
    }
    if sections.is_empty() {
        return Err(cfg_err("empty config"));
    }
    Ok(sections)
}

fn parse_seeds(raw: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = raw.split_once("..") {
        let start: u64 = a
            .trim()
            .parse()
            .map_err(|_| cfg_err(format!("bad seed range start `{a}`")))?;
        let end: u64 = b
            .trim()
            .parse()
            .map_err(|_| cfg_err(format!("bad seed range end `{b}`")))?;
        if end <= start {
            return Err(cfg_err(format!("empty seed range `{raw}`")));
        }
        return Ok((start..end).collect());
    }
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| cfg_err(format!("bad seed `{}`", s.trim())))
        })
        .collect()
}

fn parse_hidden(raw: &str) -> Result<(usize, usize)> {
    let (a, b) = raw
        .split_once('x')
        .ok_or_else(|| cfg_err(format!("hidden widths `{raw}` should be WxW, e.g. 50x50")))?;
    Ok((
        a.trim()
            .parse()
            .map_err(|_| cfg_err(format!("bad hidden width `{a}`")))?,
        b.trim()
            .parse()
            .map_err(|_| cfg_err(format!("bad hidden width `{b}`")))?,
    ))
}

fn expand_environment(section: &Section) -> Result<Vec<EnvSettingSpec>> {
    let kind = section.require("kind")?;
    let mut settings = Vec::new();
    match kind {
        "coins" => {
            for &coins in &section.list::<usize>("coins")? {
                for &train in &section.list_or::<usize>("train", vec![0])? {
                    settings.push(EnvSettingSpec::Coins { coins, train });
                }
            }
        }
        "logistic" => {
            for &dim in &section.list::<usize>("d")? {
                for &temperature in &section.list::<f64>("rho")? {
                    for &train in &section.list_or::<usize>("train", vec![0])? {
                        settings.push(EnvSettingSpec::Logistic {
                            dim,
                            temperature,
                            train,
                        });
                    }
                }
            }
        }
        "testbed" => {
            let hidden = parse_hidden(section.get("hidden").unwrap_or("50x50"))?;
            let classes: usize = section.parse_or("c", 2)?;
            for &dim in &section.list::<usize>("d")? {
                for &temperature in &section.list::<f64>("rho")? {
                    for &lambda in &section.list::<usize>("lambda")? {
                        settings.push(EnvSettingSpec::Testbed {
                            dim,
                            hidden,
                            classes,
                            temperature,
                            lambda,
                        });
                    }
                }
            }
        }
        "empirical" => {
            let csv = PathBuf::from(section.require("csv")?);
            let holdout: usize = section.parse("holdout")?;
            let split_seed: u64 = section.parse_or("split_seed", 0)?;
            let classes: Option<usize> = match section.get("classes") {
                None => None,
                Some(raw) => Some(raw.parse().map_err(|_| {
                    cfg_err(format!("[environment] `classes = {raw}` is not valid"))
                })?),
            };
            let anchors_from_train = match section.get("anchors").unwrap_or("test") {
                "test" => false,
                "train" => true,
                other => return Err(cfg_err(format!("anchors must be test or train, got {other}"))),
            };
            for &subsample in &section.list::<usize>("subsample")? {
                settings.push(EnvSettingSpec::Empirical {
                    csv: csv.clone(),
                    holdout,
                    split_seed,
                    subsample,
                    classes,
                    anchors_from_train,
                });
            }
        }
        other => {
            return Err(cfg_err(format!(
                "unknown environment kind `{other}` (coins, logistic, testbed, empirical)"
            )))
        }
    }
    Ok(settings)
}

fn expand_agent(section: &Section) -> Result<Vec<AgentCell>> {
    let name = section
        .header
        .strip_prefix("agent")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| cfg_err(format!("bad agent section `[{}]`", section.header)))?;

    let metrics = match section.get("metrics") {
        None => None,
        Some(raw) => Some(
            raw.split(',')
                .map(MetricSpec::parse)
                .collect::<Result<Vec<_>>>()?,
        ),
    };

    let analytic = |spec: AgentSpec| -> Vec<AgentCell> {
        vec![AgentCell {
            agent: spec.agent_name().to_string(),
            hyper_id: "-".to_string(),
            spec,
            metrics: metrics.clone(),
        }]
    };

    let defaults = MlpSpec::default();
    let hidden = parse_hidden(
        section
            .get("hidden")
            .unwrap_or(&format!("{}x{}", defaults.hidden.0, defaults.hidden.1)),
    )?;
    let lr: f64 = section.parse_or("lr", defaults.learning_rate)?;
    let steps: usize = section.parse_or("steps", defaults.steps)?;

    let cells = match name {
        "uniform" => analytic(AgentSpec::Uniform),
        "shared-p" => analytic(AgentSpec::SharedP),
        "beta-posterior" => analytic(AgentSpec::BetaPosterior),
        "marginal" => analytic(AgentSpec::LogisticMarginal),
        "prior" => analytic(AgentSpec::LogisticPrior),
        "perfect" => analytic(AgentSpec::Perfect),
        "mlp" => {
            let mut cells = Vec::new();
            for &l2 in &section.list_or::<f64>("l2", vec![defaults.l2_decay])? {
                cells.push(AgentCell {
                    agent: "mlp".into(),
                    hyper_id: format!("l2={l2}"),
                    spec: AgentSpec::Mlp(MlpSpec {
                        hidden,
                        l2_decay: l2,
                        steps,
                        learning_rate: lr,
                    }),
                    metrics: metrics.clone(),
                });
            }
            cells
        }
        "ensemble" => {
            let size: usize = section.parse_or("size", 10)?;
            let mut cells = Vec::new();
            for &l2 in &section.list_or::<f64>("l2", vec![defaults.l2_decay])? {
                cells.push(AgentCell {
                    agent: "ensemble".into(),
                    hyper_id: format!("size={size},l2={l2}"),
                    spec: AgentSpec::Ensemble(EnsembleSpec {
                        size,
                        member: MlpSpec {
                            hidden,
                            l2_decay: l2,
                            steps,
                            learning_rate: lr,
                        },
                    }),
                    metrics: metrics.clone(),
                });
            }
            cells
        }
        "ensemble+" => {
            let size: usize = section.parse_or("size", 10)?;
            let bootstrap: bool = section.parse_or("bootstrap", true)?;
            let mut cells = Vec::new();
            for &l2 in &section.list_or::<f64>("l2", vec![defaults.l2_decay])? {
                for &beta in &section.list_or::<f64>("beta", vec![1.0])? {
                    cells.push(AgentCell {
                        agent: "ensemble+".into(),
                        hyper_id: format!("size={size},l2={l2},beta={beta},boot={bootstrap}"),
                        spec: AgentSpec::EnsemblePlus(EnsemblePlusSpec {
                            size,
                            member: MlpSpec {
                                hidden,
                                l2_decay: l2,
                                steps,
                                learning_rate: lr,
                            },
                            prior_scale: beta,
                            bootstrap,
                        }),
                        metrics: metrics.clone(),
                    });
                }
            }
            cells
        }
        other => {
            return Err(cfg_err(format!(
                "unknown agent `{other}` (uniform, shared-p, beta-posterior, marginal, prior, \
                 perfect, mlp, ensemble, ensemble+)"
            )))
        }
    };
    Ok(cells)
}

/// Parses a config file into a fully expanded experiment.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let sections = parse_sections(text)?;
    let mut experiment = None;
    let mut environment = None;
    let mut estimator = None;
    let mut agents: Vec<AgentCell> = Vec::new();

    for section in &sections {
        match section.header.as_str() {
            "experiment" => experiment = Some(section),
            "environment" => environment = Some(section),
            "estimator" => estimator = Some(section),
            h if h.starts_with("agent") => agents.extend(expand_agent(section)?),
            other => return Err(cfg_err(format!("unknown section `[{other}]`"))),
        }
    }

    let experiment = experiment.ok_or_else(|| cfg_err("missing [experiment] section"))?;
    let environment = environment.ok_or_else(|| cfg_err("missing [environment] section"))?;
    let estimator = estimator.ok_or_else(|| cfg_err("missing [estimator] section"))?;

    let name = experiment.require("name")?.to_string();
    let out = PathBuf::from(
        experiment
            .get("out")
            .map(str::to_string)
            .unwrap_or_else(|| format!("results/{name}.csv")),
    );
    let seeds = parse_seeds(experiment.require("seeds")?)?;

    let metrics: Vec<MetricSpec> = estimator
        .require("metrics")?
        .split(',')
        .map(MetricSpec::parse)
        .collect::<Result<_>>()?;
    let budget = BudgetSpec {
        env_draws: estimator.parse("j")?,
        batches_per_env: estimator.parse("n")?,
        m_enn: estimator.parse("m_enn")?,
        share_enn: estimator.parse_or("share_enn", false)?,
    };

    let cfg = ExperimentConfig {
        name,
        out,
        seeds,
        settings: expand_environment(environment)?,
        agents,
        metrics,
        budget,
    };
    cfg.validate()?;
    Ok(cfg)
}
