use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use disco_cli::{list, report, run, synth, CliError};
use disco_core::data::{SyntheticKind, SyntheticSpec};

#[derive(Parser)]
#[command(name = "disco", version, about = "Batch active learning over intervention pools")]
struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (run, acquisition, batch size, seed) combination of a config.
    Run {
        config: PathBuf,
        /// Worker threads across runs.
        #[arg(long, env = "DISCO_JOBS")]
        jobs: Option<usize>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a results.csv across seeds.
    Report {
        results: PathBuf,
        /// Also write SVG learning curves.
        #[arg(long)]
        plots: bool,
        /// Output directory (defaults to the results file's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic dataset as descriptor, outcome and truth TSV files.
    Synth {
        #[arg(long, value_enum, default_value_t = Kind::Linear)]
        kind: Kind,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        q: usize,
        #[arg(long, default_value_t = 0.1)]
        noise_sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Blob count (cluster_hits only).
        #[arg(long)]
        clusters: Option<usize>,
        /// Share of units in the hit blob (cluster_hits only).
        #[arg(long)]
        hit_fraction: Option<f64>,
        #[arg(long, default_value = "synthetic")]
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// List acquisition functions, models and their compatibility.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Linear,
    ClusterHits,
}

fn synth_spec(
    kind: Kind,
    n: usize,
    q: usize,
    noise_sd: f64,
    seed: u64,
    clusters: Option<usize>,
    hit_fraction: Option<f64>,
) -> Result<SyntheticSpec, CliError> {
    match kind {
        Kind::Linear if clusters.is_some() || hit_fraction.is_some() => Err(CliError::Config(
            "--clusters and --hit-fraction need --kind cluster-hits".into(),
        )),
        Kind::Linear => Ok(SyntheticSpec::linear(n, q, noise_sd, seed)),
        Kind::ClusterHits => {
            let mut spec = SyntheticSpec::cluster_hits(n, q, noise_sd, seed);
            if let SyntheticKind::ClusterHits {
                n_clusters,
                hit_cluster_fraction,
            } = &mut spec.kind
            {
                *n_clusters = clusters.unwrap_or(*n_clusters);
                *hit_cluster_fraction = hit_fraction.unwrap_or(*hit_cluster_fraction);
            }
            Ok(spec)
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, jobs, out } => {
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let outcome = run::cmd_run(&config, jobs, out.as_deref())?;
            println!(
                "{} run(s), {} row(s) -> {}",
                outcome.runs,
                outcome.rows,
                outcome.results.display()
            );
            if let Some(r) = outcome.report {
                println!("summary -> {}", r.summary.display());
                for p in r.plots {
                    println!("plot -> {}", p.display());
                }
            }
        }
        Command::Report { results, plots, out } => {
            let r = report::cmd_report(&results, plots, out.as_deref())?;
            println!("summary -> {}", r.summary.display());
            for p in r.plots {
                println!("plot -> {}", p.display());
            }
        }
        Command::Synth {
            kind,
            n,
            q,
            noise_sd,
            seed,
            clusters,
            hit_fraction,
            name,
            out,
        } => {
            let spec = synth_spec(kind, n, q, noise_sd, seed, clusters, hit_fraction)?;
            let files = synth::cmd_synth(&spec, &name, &out)?;
            for p in [files.descriptors, files.outcomes, files.truth] {
                println!("{}", p.display());
            }
        }
        Command::List => print!("{}", list::cmd_list()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
