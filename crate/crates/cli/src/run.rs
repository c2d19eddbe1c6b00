//! Executing an experiment config: one worker pool across independent runs,
//! one writer that keeps `results.csv` ordered by (run, cycle).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use disco_core::data::{align, generate_synthetic, load_descriptor_table, load_outcome_table};
use disco_core::{run_active_learning_with, AlignedDataset, CycleRecord};
use serde_json::json;

use crate::config::{load_config, DataSource, ExperimentConfig, Job};
use crate::error::{CliError, Result};
use crate::report::{cmd_report, ReportOutcome};
use crate::results::{ResultRow, RESULTS_FILE};

pub const ERRORS_FILE: &str = "errors.log";
pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub results: PathBuf,
    pub rows: usize,
    pub runs: usize,
    pub failed: usize,
    pub report: Option<ReportOutcome>,
}

fn load_dataset(cfg: &ExperimentConfig) -> Result<(AlignedDataset, serde_json::Value)> {
    let (mut data, meta) = match &cfg.data {
        DataSource::Files { descriptors, outcomes } => {
            let (desc, dr) = load_descriptor_table(descriptors).map_err(to_data_error)?;
            let (out, or) = load_outcome_table(outcomes).map_err(to_data_error)?;
            let (data, ar) = align(&desc, &out).map_err(to_data_error)?;
            let meta = json!({
                "descriptors": descriptors,
                "outcomes": outcomes,
                "descriptor_rows_dropped": dr.dropped(),
                "outcome_rows_dropped": or.dropped(),
                "units_without_outcome": ar.dropped_descriptors,
                "units_without_descriptor": ar.dropped_outcomes,
            });
            (data, meta)
        }
        DataSource::Synthetic(spec) => {
            let data = generate_synthetic(spec)?.dataset;
            let meta = json!({ "synthetic": format!("{spec:?}") });
            (data, meta)
        }
    };
    if cfg.standardize_outcomes {
        data.standardize_outcomes();
    }
    Ok((data, meta))
}

fn to_data_error(e: disco_core::Error) -> CliError {
    CliError::Data(e.to_string())
}

fn row(job: &Job, r: &CycleRecord) -> ResultRow {
    ResultRow {
        experiment_id: job.experiment_id.clone(),
        acquisition: job.spec.acquisition.to_string(),
        model: job.spec.model.to_string(),
        batch_size: job.spec.batch_size,
        seed: job.spec.seed,
        cycle: r.cycle,
        n_acquired: r.n_acquired_total,
        test_mse: r.test_mse,
        hit_ratio: r.hit_ratio,
        wall_time_s: r.wall_time_s,
    }
}

enum Msg {
    Row(usize, ResultRow),
    Done(usize, std::result::Result<(), disco_core::Error>),
}

/// Buffers out-of-order rows and writes each run's rows once every earlier
/// run has finished.
struct OrderedWriter<W: std::io::Write> {
    csv: csv::Writer<W>,
    next: usize,
    pending: BTreeMap<usize, Vec<ResultRow>>,
    finished: BTreeMap<usize, bool>,
    rows: usize,
}

impl<W: std::io::Write> OrderedWriter<W> {
    fn push(&mut self, run: usize, row: ResultRow) -> csv::Result<()> {
        if run == self.next {
            self.write(row)
        } else {
            self.pending.entry(run).or_default().push(row);
            Ok(())
        }
    }

    fn finish(&mut self, run: usize) -> csv::Result<()> {
        self.finished.insert(run, true);
        while self.finished.remove(&self.next).is_some() {
            self.next += 1;
            for row in self.pending.remove(&self.next).unwrap_or_default() {
                self.write(row)?;
            }
        }
        self.csv.flush()?;
        Ok(())
    }

    fn write(&mut self, row: ResultRow) -> csv::Result<()> {
        self.rows += 1;
        self.csv.serialize(row)
    }
}

pub fn execute(cfg: &ExperimentConfig, jobs: usize) -> Result<RunOutcome> {
    let (data, data_meta) = load_dataset(cfg)?;
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    let io_err = |e: &dyn std::fmt::Display| CliError::Runtime(format!("writing results: {e}"));

    let meta = json!({
        "dataset": data_meta,
        "units": data.len(),
        "features": data.dim(),
        "standardize_outcomes": cfg.standardize_outcomes,
        "runs": cfg.jobs.len(),
    });
    fs::write(
        cfg.output_dir.join(METADATA_FILE),
        serde_json::to_string_pretty(&meta).expect("plain json"),
    )
    .map_err(|e| io_err(&e))?;
    let errors_path = cfg.output_dir.join(ERRORS_FILE);
    if errors_path.exists() {
        fs::remove_file(&errors_path).map_err(|e| io_err(&e))?;
    }

    let results = cfg.output_dir.join(RESULTS_FILE);
    let file = fs::File::create(&results).map_err(|e| io_err(&e))?;
    let mut writer = OrderedWriter {
        csv: csv::Writer::from_writer(file),
        next: 0,
        pending: BTreeMap::new(),
        finished: BTreeMap::new(),
        rows: 0,
    };
    let mut failures = Vec::new();
    let workers = jobs.clamp(1, cfg.jobs.len().max(1));
    log::info!("{} run(s) on {workers} worker(s)", cfg.jobs.len());

    let next_job = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<Msg>();
    thread::scope(|s| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next_job, data) = (&next_job, &data);
            s.spawn(move || loop {
                let i = next_job.fetch_add(1, Ordering::Relaxed);
                let Some(job) = cfg.jobs.get(i) else { break };
                let result = run_active_learning_with(data, &job.spec, |r| {
                    let _ = tx.send(Msg::Row(i, row(job, r)));
                });
                let _ = tx.send(Msg::Done(i, result));
            });
        }
        drop(tx);
        for msg in rx {
            match msg {
                Msg::Row(i, r) => writer.push(i, r).map_err(|e| io_err(&e))?,
                Msg::Done(i, result) => {
                    if let Err(e) = result {
                        let job = &cfg.jobs[i];
                        log::error!("{} seed {}: {e}", job.experiment_id, job.spec.seed);
                        failures.push(format!("{}\tseed={}\t{e}", job.experiment_id, job.spec.seed));
                    }
                    writer.finish(i).map_err(|e| io_err(&e))?;
                }
            }
        }
        Ok(())
    })?;
    writer.csv.flush().map_err(|e| io_err(&e))?;

    if !failures.is_empty() {
        let mut f = fs::File::create(&errors_path).map_err(|e| io_err(&e))?;
        for line in &failures {
            writeln!(f, "{line}").map_err(|e| io_err(&e))?;
        }
    }
    Ok(RunOutcome {
        results,
        rows: writer.rows,
        runs: cfg.jobs.len(),
        failed: failures.len(),
        report: None,
    })
}

/// `disco run`: execute every job, then summarize (and plot if configured).
/// Any failed run turns into a runtime error after all runs finish.
pub fn cmd_run(config: &Path, jobs: usize, output: Option<&Path>) -> Result<RunOutcome> {
    let mut cfg = load_config(config)?;
    if let Some(dir) = output {
        cfg.output_dir = dir.to_path_buf();
    }
    let mut outcome = execute(&cfg, jobs)?;
    if outcome.failed > 0 {
        return Err(CliError::Runtime(format!(
            "{} of {} run(s) failed; details in {}",
            outcome.failed,
            outcome.runs,
            cfg.output_dir.join(ERRORS_FILE).display()
        )));
    }
    outcome.report = Some(cmd_report(&outcome.results, cfg.plots, None)?);
    Ok(outcome)
}
