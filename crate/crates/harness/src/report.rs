//! Normalized reports: per-agent aggregates of best-tuned scores, divided by
//! a baseline agent, with bootstrap bands over seeds.
//!
//! Tuning and reporting use disjoint seeds (even seeds tune, odd seeds
//! report) so hyperparameter selection does not bias the reported score; when
//! a run has only one parity, all seeds serve both roles.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{RngExt, SeedableRng};

use crate::error::{HarnessError, Result};
use crate::rows::ResultRow;

const BOOTSTRAP_RESAMPLES: usize = 1000;
const BOOTSTRAP_SEED: u64 = 0xB007;

/// A setting is one environment grid cell.
type Setting = (usize, usize, String); // (d, t, rho as string)

fn setting_of(row: &ResultRow) -> Setting {
    (
        row.d,
        row.t,
        row.rho.map(|x| format!("{x}")).unwrap_or_default(),
    )
}

fn metric_of(row: &ResultRow) -> (usize, String) {
    (row.tau, row.kappa.clone())
}

pub fn metric_label(metric: &(usize, String)) -> String {
    if metric.1 == "iid" {
        format!("tau={}|iid", metric.0)
    } else {
        format!("tau={}|kappa={}", metric.0, metric.1)
    }
}

/// Per-seed best-tuned scores of one agent under one metric, averaged over
/// settings. Returned seeds are the report seeds in ascending order.
pub fn tuned_seed_scores(
    rows: &[ResultRow],
    agent: &str,
    metric: &(usize, String),
) -> Result<Vec<(u64, f64)>> {
    let relevant: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.agent == agent && metric_of(r) == *metric)
        .collect();
    if relevant.is_empty() {
        return Err(HarnessError::Report(format!(
            "no rows for agent `{agent}` under {}",
            metric_label(metric)
        )));
    }

    let seeds: BTreeSet<u64> = relevant.iter().map(|r| r.seed).collect();
    let mut tune_seeds: Vec<u64> = seeds.iter().copied().filter(|s| s % 2 == 0).collect();
    let mut report_seeds: Vec<u64> = seeds.iter().copied().filter(|s| s % 2 == 1).collect();
    if tune_seeds.is_empty() || report_seeds.is_empty() {
        tune_seeds = seeds.iter().copied().collect();
        report_seeds = seeds.iter().copied().collect();
    }

    // value[(setting, hyper, seed)] -> mean
    let mut value: BTreeMap<(Setting, &str, u64), f64> = BTreeMap::new();
    let mut settings: BTreeSet<Setting> = BTreeSet::new();
    let mut hypers: BTreeSet<&str> = BTreeSet::new();
    for r in &relevant {
        settings.insert(setting_of(r));
        hypers.insert(&r.hyper_id);
        value.insert((setting_of(r), r.hyper_id.as_str(), r.seed), r.kl_mean);
    }

    // Per setting: the hyperparameter cell minimizing the tune-seed mean
    // (ties broken towards the lexicographically smallest id).
    let mut best: BTreeMap<Setting, &str> = BTreeMap::new();
    for setting in &settings {
        let mut chosen: Option<(&str, f64)> = None;
        for &hyper in &hypers {
            let scores: Vec<f64> = tune_seeds
                .iter()
                .filter_map(|s| value.get(&(setting.clone(), hyper, *s)).copied())
                .collect();
            if scores.is_empty() {
                continue;
            }
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            let better = match chosen {
                None => true,
                Some((_, cur)) => mean < cur,
            };
            if better {
                chosen = Some((hyper, mean));
            }
        }
        let (hyper, _) = chosen.ok_or_else(|| {
            HarnessError::Report(format!(
                "agent `{agent}` has no tuning rows for setting {setting:?}"
            ))
        })?;
        best.insert(setting.clone(), hyper);
    }

    // Report-seed score: mean over settings of the tuned cell's value.
    let mut out = Vec::new();
    for &seed in &report_seeds {
        let mut scores = Vec::new();
        for setting in &settings {
            if let Some(v) = value.get(&(setting.clone(), best[setting], seed)) {
                scores.push(*v);
            }
        }
        if scores.is_empty() {
            continue;
        }
        out.push((seed, scores.iter().sum::<f64>() / scores.len() as f64));
    }
    if out.is_empty() {
        return Err(HarnessError::Report(format!(
            "agent `{agent}` has no report-seed rows under {}",
            metric_label(metric)
        )));
    }
    Ok(out)
}

/// One line of the normalized report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub agent: String,
    pub metric: String,
    /// Aggregate tuned score (mean over settings and report seeds), nats.
    pub raw_mean: f64,
    /// `raw_mean / baseline raw_mean` (normalization after aggregation).
    pub normalized: f64,
    /// Mean over settings of the per-setting agent/baseline ratio
    /// (normalization before aggregation, recorded alongside).
    pub normalized_per_setting: f64,
    /// Paired bootstrap 95% band over report seeds for `normalized`.
    pub lo95: f64,
    pub hi95: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn per_setting_ratio(
    rows: &[ResultRow],
    agent: &str,
    baseline: &str,
    metric: &(usize, String),
) -> Result<f64> {
    // Seed-averaged tuned values per setting, agent over baseline.
    let mut ratios = Vec::new();
    let settings: BTreeSet<Setting> = rows
        .iter()
        .filter(|r| metric_of(r) == *metric)
        .map(setting_of)
        .collect();
    for setting in settings {
        let filter = |name: &str| -> Result<Vec<ResultRow>> {
            Ok(rows
                .iter()
                .filter(|r| {
                    r.agent == name && metric_of(r) == *metric && setting_of(r) == setting
                })
                .cloned()
                .collect())
        };
        let a = tuned_seed_scores(&filter(agent)?, agent, metric)?;
        let b = tuned_seed_scores(&filter(baseline)?, baseline, metric)?;
        let b_mean = mean(&b.iter().map(|(_, v)| *v).collect::<Vec<_>>());
        if b_mean == 0.0 {
            return Err(HarnessError::Report(format!(
                "baseline `{baseline}` aggregates to zero on setting {setting:?}"
            )));
        }
        ratios.push(mean(&a.iter().map(|(_, v)| *v).collect::<Vec<_>>()) / b_mean);
    }
    Ok(mean(&ratios))
}

/// Builds the normalized report for every agent and metric present in `rows`.
pub fn make_report(rows: &[ResultRow], baseline: &str) -> Result<Vec<ReportRow>> {
    if !rows.iter().any(|r| r.agent == baseline) {
        return Err(HarnessError::MissingBaseline(baseline.to_string()));
    }
    let metrics: BTreeSet<(usize, String)> = rows.iter().map(metric_of).collect();
    let agents: BTreeSet<&str> = rows.iter().map(|r| r.agent.as_str()).collect();

    let mut out = Vec::new();
    for metric in &metrics {
        let base_scores = tuned_seed_scores(rows, baseline, metric)?;
        let base_by_seed: BTreeMap<u64, f64> = base_scores.iter().copied().collect();
        let base_mean = mean(&base_scores.iter().map(|(_, v)| *v).collect::<Vec<_>>());
        if base_mean == 0.0 {
            return Err(HarnessError::Report(format!(
                "baseline `{baseline}` aggregates to zero under {}",
                metric_label(metric)
            )));
        }

        for agent in &agents {
            let scores = match tuned_seed_scores(rows, agent, metric) {
                Ok(s) => s,
                // Agents restricted to other metrics simply have no rows here.
                Err(_) => continue,
            };
            let raw_mean = mean(&scores.iter().map(|(_, v)| *v).collect::<Vec<_>>());
            let normalized = raw_mean / base_mean;

            // Paired bootstrap over the seeds both agents share.
            let paired: Vec<(f64, f64)> = scores
                .iter()
                .filter_map(|(s, v)| base_by_seed.get(s).map(|b| (*v, *b)))
                .collect();
            let (lo95, hi95) = if paired.len() < 2 {
                (normalized, normalized)
            } else {
                let mut rng =
                    jpeval_core::StreamRng::seed_from_u64(BOOTSTRAP_SEED);
                let mut stats = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
                for _ in 0..BOOTSTRAP_RESAMPLES {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for _ in 0..paired.len() {
                        let (a, b) = paired[rng.random_range(0..paired.len())];
                        num += a;
                        den += b;
                    }
                    if den != 0.0 {
                        stats.push(num / den);
                    }
                }
                stats.sort_by(f64::total_cmp);
                let lo = stats[(0.025 * stats.len() as f64) as usize];
                let hi = stats[((0.975 * stats.len() as f64) as usize).min(stats.len() - 1)];
                (lo, hi)
            };

            out.push(ReportRow {
                agent: agent.to_string(),
                metric: metric_label(metric),
                raw_mean,
                normalized,
                normalized_per_setting: per_setting_ratio(rows, agent, baseline, metric)?,
                lo95,
                hi95,
            });
        }
    }
    Ok(out)
}

/// Writes the plot-ready report CSV.
pub fn write_report_csv(path: &Path, report: &[ReportRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(HarnessError::Csv)?;
    writer.write_record([
        "agent",
        "metric",
        "raw_mean",
        "normalized",
        "normalized_per_setting",
        "lo95",
        "hi95",
    ])?;
    for row in report {
        writer.write_record([
            row.agent.clone(),
            row.metric.clone(),
            format!("{}", row.raw_mean),
            format!("{}", row.normalized),
            format!("{}", row.normalized_per_setting),
            format!("{}", row.lo95),
            format!("{}", row.hi95),
        ])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}
