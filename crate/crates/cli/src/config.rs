//! Experiment configuration files.
//!
//! ```text
//! # dataset: either two TSV files or a synthetic generator
//! descriptors = string.tsv
//! outcomes = assay.tsv
//! output = results
//! seeds = 0, 1, 2, 3, 4
//!
//! [run.1]
//! model = ensemble_mlp
//! acquisitions = random, topuncertain
//! batch_sizes = 16, 64
//! ```
//!
//! Run keys given before the first section are defaults for every section.
//! Without any `[run.N]` section the top level describes a single run.
//! Relative paths resolve against the directory holding the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use disco_core::data::{SyntheticKind, SyntheticSpec};
use disco_core::{AcquisitionKind, ModelKind, RunSpec};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Files { descriptors: PathBuf, outcomes: PathBuf },
    Synthetic(SyntheticSpec),
}

/// One (run section, acquisition, batch size, seed) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub experiment_id: String,
    pub spec: RunSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub output_dir: PathBuf,
    pub plots: bool,
    pub standardize_outcomes: bool,
    pub jobs: Vec<Job>,
}

const GLOBAL_KEYS: &[&str] = &[
    "descriptors",
    "outcomes",
    "synthetic",
    "n",
    "q",
    "noise_sd",
    "data_seed",
    "n_clusters",
    "hit_cluster_fraction",
    "output",
    "plots",
    "standardize_outcomes",
];

const RUN_KEYS: &[&str] = &[
    "model",
    "acquisitions",
    "batch_sizes",
    "seeds",
    "cycles",
    "temperature",
    "gamma",
    "adv_steps",
    "hit_quantile",
    "test_fraction",
    "ensemble_size",
    "hidden_grid",
    "max_epochs",
    "patience",
    "learning_rate",
    "momentum",
    "mlp_batch_size",
    "validation_fraction",
    "n_trees",
    "max_features",
];

fn canonical_key(key: &str) -> &str {
    match key {
        "acquisition" => "acquisitions",
        "batch_size" => "batch_sizes",
        "seed" => "seeds",
        "num_cycles" => "cycles",
        other => other,
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

type Section = BTreeMap<String, Entry>;

struct Raw {
    top: Section,
    runs: BTreeMap<u32, Section>,
}

fn syntax(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::ConfigSyntax {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_raw(text: &str, path: &Path) -> Result<Raw> {
    let mut raw = Raw {
        top: Section::new(),
        runs: BTreeMap::new(),
    };
    let mut current: Option<u32> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let name = header
                .strip_suffix(']')
                .ok_or_else(|| syntax(path, lineno, "unterminated section header"))?
                .trim();
            let id = name
                .strip_prefix("run.")
                .and_then(|n| n.parse::<u32>().ok())
                .ok_or_else(|| syntax(path, lineno, format!("unknown section [{name}], expected [run.N]")))?;
            if raw.runs.insert(id, Section::new()).is_some() {
                return Err(syntax(path, lineno, format!("section [run.{id}] appears twice")));
            }
            current = Some(id);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| syntax(path, lineno, "expected `key = value`"))?;
        let key = canonical_key(key.trim());
        let value = value.trim();
        if value.is_empty() {
            return Err(syntax(path, lineno, format!("missing value for `{key}`")));
        }
        let section = match current {
            None => {
                if !GLOBAL_KEYS.contains(&key) && !RUN_KEYS.contains(&key) {
                    return Err(syntax(path, lineno, format!("unknown key `{key}`")));
                }
                &mut raw.top
            }
            Some(id) => {
                if !RUN_KEYS.contains(&key) {
                    let hint = if GLOBAL_KEYS.contains(&key) {
                        " (dataset and output keys belong before the first section)"
                    } else {
                        ""
                    };
                    return Err(syntax(path, lineno, format!("unknown run key `{key}`{hint}")));
                }
                raw.runs.get_mut(&id).expect("section inserted on header")
            }
        };
        let entry = Entry {
            value: value.to_string(),
            line: lineno,
        };
        if section.insert(key.to_string(), entry).is_some() {
            return Err(syntax(
                path,
                lineno,
                format!("key `{key}` set twice in the same section"),
            ));
        }
    }
    Ok(raw)
}

/// Typed access to one section with fallback to the top-level defaults.
struct Lookup<'a> {
    path: &'a Path,
    section: Option<&'a Section>,
    top: &'a Section,
}

impl Lookup<'_> {
    fn entry(&self, key: &str) -> Option<&Entry> {
        self.section.and_then(|s| s.get(key)).or_else(|| self.top.get(key))
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.entry(key)
            .map(|e| {
                e.value
                    .parse::<T>()
                    .map_err(|err| syntax(self.path, e.line, format!("bad value for `{key}`: {err}")))
            })
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.entry(key) else {
            return Ok(None);
        };
        let items = e
            .value
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|err| syntax(self.path, e.line, format!("bad item {s:?} in `{key}`: {err}")))
            })
            .collect::<Result<Vec<T>>>()?;
        if items.is_empty() {
            return Err(syntax(self.path, e.line, format!("`{key}` lists nothing")));
        }
        Ok(Some(items))
    }

    fn set<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.parse(key)? {
            *slot = v;
        }
        Ok(())
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn data_source(top: &Lookup, base: &Path) -> Result<DataSource> {
    let files = (top.entry("descriptors"), top.entry("outcomes"));
    match (top.entry("synthetic"), files) {
        (Some(_), (Some(_), _) | (_, Some(_))) => Err(CliError::Config(
            "give either `synthetic` or `descriptors`/`outcomes`, not both".into(),
        )),
        (None, (Some(d), Some(o))) => Ok(DataSource::Files {
            descriptors: resolve(base, &d.value),
            outcomes: resolve(base, &o.value),
        }),
        (None, _) => Err(CliError::Config(
            "no dataset: set `descriptors` and `outcomes`, or `synthetic`".into(),
        )),
        (Some(kind), _) => {
            let n = top.parse("n")?.unwrap_or(2000);
            let q = top.parse("q")?.unwrap_or(20);
            let noise = top.parse("noise_sd")?.unwrap_or(0.1);
            let seed = top.parse("data_seed")?.unwrap_or(0);
            let mut spec = match kind.value.as_str() {
                "linear" => SyntheticSpec::linear(n, q, noise, seed),
                "cluster_hits" => SyntheticSpec::cluster_hits(n, q, noise, seed),
                other => {
                    return Err(syntax(
                        top.path,
                        kind.line,
                        format!("unknown synthetic kind {other:?} (linear or cluster_hits)"),
                    ))
                }
            };
            if let SyntheticKind::ClusterHits {
                n_clusters,
                hit_cluster_fraction,
            } = &mut spec.kind
            {
                top.set("n_clusters", n_clusters)?;
                top.set("hit_cluster_fraction", hit_cluster_fraction)?;
            } else if top.entry("n_clusters").is_some() || top.entry("hit_cluster_fraction").is_some() {
                return Err(CliError::Config(
                    "cluster settings need `synthetic = cluster_hits`".into(),
                ));
            }
            Ok(DataSource::Synthetic(spec))
        }
    }
}

fn run_jobs(id: u32, lookup: &Lookup) -> Result<Vec<Job>> {
    let model: ModelKind = lookup.parse("model")?.unwrap_or(ModelKind::EnsembleMlp);
    let acquisitions: Vec<AcquisitionKind> = lookup
        .list("acquisitions")?
        .ok_or_else(|| CliError::Config(format!("[run.{id}] has no `acquisitions`")))?;
    let batch_sizes: Vec<usize> = lookup
        .list("batch_sizes")?
        .ok_or_else(|| CliError::Config(format!("[run.{id}] has no `batch_sizes`")))?;
    let seeds: Vec<u64> = lookup.list("seeds")?.unwrap_or_else(|| vec![0]);

    let mut template = RunSpec::new(model, acquisitions[0], batch_sizes[0], seeds[0]);
    template.num_cycles = lookup.parse("cycles")?;
    lookup.set("temperature", &mut template.temperature)?;
    lookup.set("gamma", &mut template.gamma)?;
    lookup.set("adv_steps", &mut template.adv_steps)?;
    lookup.set("hit_quantile", &mut template.hit_quantile)?;
    lookup.set("test_fraction", &mut template.test_fraction)?;
    let mlp = &mut template.mlp;
    lookup.set("ensemble_size", &mut mlp.ensemble_size)?;
    if let Some(grid) = lookup.list("hidden_grid")? {
        mlp.hidden_grid = grid;
    }
    lookup.set("max_epochs", &mut mlp.max_epochs)?;
    lookup.set("patience", &mut mlp.patience)?;
    lookup.set("learning_rate", &mut mlp.learning_rate)?;
    lookup.set("momentum", &mut mlp.momentum)?;
    lookup.set("mlp_batch_size", &mut mlp.batch_size)?;
    lookup.set("validation_fraction", &mut mlp.validation_fraction)?;
    lookup.set("n_trees", &mut template.forest.n_trees)?;
    if let Some(m) = lookup.parse("max_features")? {
        template.forest.max_features = Some(m);
    }

    let mut jobs = Vec::new();
    for &acquisition in &acquisitions {
        for &batch_size in &batch_sizes {
            let mut spec = RunSpec {
                acquisition,
                batch_size,
                ..template.clone()
            };
            spec.validate().map_err(|e| {
                CliError::Config(format!(
                    "[run.{id}] {}",
                    e.to_string().trim_start_matches("configuration error: ")
                ))
            })?;
            for &seed in &seeds {
                spec.seed = seed;
                jobs.push(Job {
                    experiment_id: format!("run{id}-{acquisition}-{model}-b{batch_size}"),
                    spec: spec.clone(),
                });
            }
        }
    }
    Ok(jobs)
}

pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    let raw = parse_raw(text, path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let top = Lookup {
        path,
        section: None,
        top: &raw.top,
    };
    let data = data_source(&top, base)?;
    let output_dir = resolve(
        base,
        &top.entry("output").map_or("results".to_string(), |e| e.value.clone()),
    );
    let plots = top.parse("plots")?.unwrap_or(false);
    let standardize_outcomes = top.parse("standardize_outcomes")?.unwrap_or(false);

    let mut jobs = Vec::new();
    if raw.runs.is_empty() {
        jobs = run_jobs(1, &top)?;
    }
    for (&id, section) in &raw.runs {
        let lookup = Lookup {
            path,
            section: Some(section),
            top: &raw.top,
        };
        jobs.extend(run_jobs(id, &lookup)?);
    }
    Ok(ExperimentConfig {
        data,
        output_dir,
        plots,
        standardize_outcomes,
        jobs,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, path)
}
