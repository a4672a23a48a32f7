//! Grid execution: one estimate per (setting, agent cell, metric, seed),
//! written incrementally to the results CSV in deterministic order.

use std::collections::{BTreeMap, HashSet};
use std::fs::OpenOptions;
use std::path::Path;
use std::sync::mpsc;
use std::time::Instant;

use jpeval_core::estimator::{estimate_kl, EstimatorConfig};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, MetricSpec};
use crate::error::{HarnessError, Result};
use crate::rows::{manifest_line, read_results, ResultRow, ResultWriter, RowKey};

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Worker threads; 0 uses the default pool size.
    pub jobs: usize,
    /// Record measured per-row seconds in the CSV. Off by default: timings
    /// vary run to run, and result files are byte-reproducible without them.
    pub timing_in_csv: bool,
    /// Per-row progress on stderr. `Auto` prints only when stderr is a
    /// terminal.
    pub progress: Progress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    Auto,
    Always,
    Never,
}

impl Progress {
    fn enabled(self) -> bool {
        use std::io::IsTerminal;
        match self {
            Progress::Auto => std::io::stderr().is_terminal(),
            Progress::Always => true,
            Progress::Never => false,
        }
    }
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            jobs: 0,
            timing_in_csv: false,
            progress: Progress::Auto,
        }
    }
}

#[derive(Debug)]
pub struct CellFailure {
    pub description: String,
    pub message: String,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    pub skipped: usize,
    pub failures: Vec<CellFailure>,
}

struct Cell<'a> {
    setting_ix: usize,
    agent_ix: usize,
    metric: &'a MetricSpec,
    seed: u64,
}

/// Runs every pending grid cell of the experiment and appends the resulting
/// rows to `cfg.out`.
///
/// Rows are written in a fixed grid order regardless of scheduling, flushed
/// one at a time; re-runs skip rows already present in the file (keyed by the
/// full row identity), so a finished experiment is a no-op. Failed cells are
/// reported and left out of the file; a later run retries them.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;

    // Build priors up front: validates dataset paths and fixes row metadata.
    let built: Vec<_> = cfg
        .settings
        .iter()
        .map(|s| s.build())
        .collect::<Result<Vec<_>>>()?;

    let existing: HashSet<RowKey> = if cfg.out.exists() {
        let (manifest, rows) = read_results(&cfg.out)?;
        let expected = manifest_line(&cfg.name, cfg.config_hash(), &cfg.seeds);
        match manifest {
            Some(found) if found == expected => {}
            Some(_) => {
                return Err(HarnessError::Config(format!(
                    "{} was produced by a different configuration; move it aside or change `out`",
                    cfg.out.display()
                )))
            }
            None => {
                return Err(HarnessError::Config(format!(
                    "{} has no manifest line; refusing to append",
                    cfg.out.display()
                )))
            }
        }
        rows.iter().map(ResultRow::key).collect()
    } else {
        HashSet::new()
    };

    // Deterministic cell order: settings, then agents, then metrics, then
    // seeds.
    let mut cells = Vec::new();
    for (setting_ix, _) in cfg.settings.iter().enumerate() {
        for (agent_ix, agent) in cfg.agents.iter().enumerate() {
            for metric in &cfg.metrics {
                if let Some(filter) = &agent.metrics {
                    if !filter.contains(metric) {
                        continue;
                    }
                }
                for &seed in &cfg.seeds {
                    cells.push(Cell {
                        setting_ix,
                        agent_ix,
                        metric,
                        seed,
                    });
                }
            }
        }
    }

    let key_of = |cell: &Cell| -> RowKey {
        let meta = built[cell.setting_ix].1;
        let agent = &cfg.agents[cell.agent_ix];
        (
            cfg.name.clone(),
            agent.agent.clone(),
            agent.hyper_id.clone(),
            meta.dim,
            meta.train,
            meta.rho.map(|x| format!("{x}")).unwrap_or_default(),
            cell.metric.tau,
            cell.metric.sampler.kappa_label(),
            cell.seed,
        )
    };

    let pending: Vec<Cell> = cells
        .into_iter()
        .filter(|c| !existing.contains(&key_of(c)))
        .collect();
    let skipped = existing.len();

    if pending.is_empty() {
        return Ok(RunOutcome {
            rows: Vec::new(),
            skipped,
            failures: Vec::new(),
        });
    }

    if let Some(dir) = cfg.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
    }
    let fresh = !cfg.out.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&cfg.out)
        .map_err(|source| HarnessError::Io {
            path: cfg.out.clone(),
            source,
        })?;
    let mut writer = if fresh {
        ResultWriter::create(file, &manifest_line(&cfg.name, cfg.config_hash(), &cfg.seeds))?
    } else {
        ResultWriter::append(file)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| HarnessError::Report(e.to_string()))?;

    let compute = |cell: &Cell| -> std::result::Result<ResultRow, String> {
        let (prior, meta) = &built[cell.setting_ix];
        let agent = &cfg.agents[cell.agent_ix];
        let setting = &cfg.settings[cell.setting_ix];
        let factory = agent.spec.factory(setting).map_err(|e| e.to_string())?;
        let (j, n) = cell
            .metric
            .budget
            .unwrap_or((cfg.budget.env_draws, cfg.budget.batches_per_env));
        let est_cfg = EstimatorConfig {
            env_draws: j,
            batches_per_env: n,
            tau: cell.metric.tau,
            m_enn: cfg.budget.m_enn,
            sampler: cell.metric.sampler,
            seed: cell.seed,
            share_enn_samples: cfg.budget.share_enn,
        };
        let started = Instant::now();
        let report =
            estimate_kl(prior.as_ref(), factory.as_ref(), &est_cfg).map_err(|e| e.to_string())?;
        let elapsed = started.elapsed().as_secs_f64();
        Ok(ResultRow {
            experiment: cfg.name.clone(),
            agent: agent.agent.clone(),
            hyper_id: agent.hyper_id.clone(),
            d: meta.dim,
            t: meta.train,
            rho: meta.rho,
            tau: cell.metric.tau,
            kappa: cell.metric.sampler.kappa_label(),
            seed: cell.seed,
            kl_mean: report.overall.mean,
            kl_stderr: report.overall.stderr,
            n_terms: report.overall.n_terms,
            wall_time: if opts.timing_in_csv { elapsed } else { 0.0 },
        })
    };

    let describe = |cell: &Cell| {
        let agent = &cfg.agents[cell.agent_ix];
        format!(
            "setting {} agent {}[{}] metric {} seed {}",
            cell.setting_ix,
            agent.agent,
            agent.hyper_id,
            cell.metric.label(),
            cell.seed
        )
    };

    // Workers stream (index, result) to the writer, which restores grid
    // order with a hold-back buffer and flushes row by row.
    let (tx, rx) = mpsc::channel::<(usize, std::result::Result<ResultRow, String>)>();
    let total = pending.len();
    let mut rows = Vec::new();
    let mut failures = Vec::new();

    std::thread::scope(|scope| -> Result<()> {
        let worker = scope.spawn(|| {
            pool.install(|| {
                pending.par_iter().enumerate().for_each_with(
                    tx,
                    |tx, (i, cell)| {
                        let result = compute(cell);
                        // Receiver outlives all senders; ignore send errors on
                        // early writer exit.
                        let _ = tx.send((i, result));
                    },
                );
            });
        });

        let progress = opts.progress.enabled();
        let mut buffer: BTreeMap<usize, std::result::Result<ResultRow, String>> = BTreeMap::new();
        let mut next = 0usize;
        let mut done = 0usize;
        while done < total {
            let (i, result) = rx.recv().expect("workers hold the sender");
            buffer.insert(i, result);
            done += 1;
            while let Some(result) = buffer.remove(&next) {
                match result {
                    Ok(row) => {
                        writer.write(&row)?;
                        if progress {
                            eprintln!(
                                "[{}/{}] {} kl={:.6} (stderr {:.2e})",
                                next + 1,
                                total,
                                describe(&pending[next]),
                                row.kl_mean,
                                row.kl_stderr
                            );
                        }
                        rows.push(row);
                    }
                    Err(message) => {
                        // Failures always reach the log.
                        eprintln!(
                            "[{}/{}] FAILED {}: {message}",
                            next + 1,
                            total,
                            describe(&pending[next])
                        );
                        failures.push(CellFailure {
                            description: describe(&pending[next]),
                            message,
                        });
                    }
                }
                next += 1;
            }
        }
        worker.join().expect("worker pool panicked");
        Ok(())
    })?;

    Ok(RunOutcome {
        rows,
        skipped,
        failures,
    })
}

/// Convenience wrapper: runs the experiment and returns all rows on disk
/// (previous and new).
pub fn run_and_collect(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<ResultRow>> {
    let outcome = run_experiment(cfg, opts)?;
    if !outcome.failures.is_empty() {
        return Err(HarnessError::Report(format!(
            "{} cell(s) failed; see log",
            outcome.failures.len()
        )));
    }
    let (_, rows) = read_results(&cfg.out)?;
    Ok(rows)
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}
