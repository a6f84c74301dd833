//! Command-line pipeline driver: explore, learn, exploit, eval, equiv, and
//! run-all over a flat key/value config file.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use asglearn::asg::AnnotatedGrammar;
use asglearn::pipeline::{self, equivalence_check, render_report, ProviderSpec, RunConfig};

#[derive(Parser)]
#[command(
    name = "asglearn",
    version,
    about = "Learn and enforce answer-set-grammar constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Run configuration file (flat key = value text).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of enforcement samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the equivalence-check length bound.
    #[arg(long)]
    lmax: Option<usize>,
    /// Override the logit provider (uniform, ngram, or remote).
    #[arg(long)]
    provider: Option<String>,
    /// Drop all constraints during enforcement (qualitative baseline).
    #[arg(long)]
    unconstrained: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Phase 1: sample under the CFG mask and label with the oracle.
    Explore(RunFlags),
    /// Learn an annotated grammar from a labeled dataset.
    Learn {
        #[command(flatten)]
        flags: RunFlags,
        /// Dataset file (defaults to `<out>/dataset.tsv`).
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Phase 2: decode under a learned grammar and score adherence.
    Exploit {
        #[command(flatten)]
        flags: RunFlags,
        /// Annotated grammar file (defaults to `<out>/learned.asg`).
        #[arg(long)]
        asg: Option<PathBuf>,
    },
    /// Score an existing dataset or samples file against the oracle.
    Eval {
        #[command(flatten)]
        flags: RunFlags,
        /// File to score (dataset.tsv / samples.tsv format).
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Compare two annotated grammars on all strings up to a length bound.
    Equiv {
        /// First annotated grammar file.
        a: PathBuf,
        /// Second annotated grammar file.
        b: PathBuf,
        /// Length bound for the exhaustive comparison.
        #[arg(long, default_value_t = 12)]
        lmax: usize,
    },
    /// The whole pipeline: explore, learn, exploit, equivalence, report.
    RunAll(RunFlags),
}

fn load_config(flags: &RunFlags) -> Result<RunConfig> {
    let mut config = RunConfig::load(&flags.config)
        .with_context(|| format!("loading config {:?}", flags.config))?;
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    if let Some(out) = &flags.out {
        config.out_dir = out.clone();
    }
    if let Some(samples) = flags.samples {
        config.eval_samples = samples;
    }
    if let Some(lmax) = flags.lmax {
        config.lmax = lmax;
    }
    if flags.unconstrained {
        config.unconstrained = true;
    }
    if let Some(provider) = &flags.provider {
        config.provider = match provider.as_str() {
            "uniform" => ProviderSpec::Uniform,
            "ngram" => match config.provider {
                ProviderSpec::Ngram { .. } => config.provider,
                _ => ProviderSpec::Ngram {
                    order: 3,
                    exemplars: Vec::new(),
                },
            },
            "remote" => match config.provider {
                ProviderSpec::Remote { .. } => config.provider,
                _ => bail!("--provider remote needs remote_url in the config file"),
            },
            other => bail!("unknown provider {other:?} (expected uniform, ngram, or remote)"),
        };
    }
    Ok(config)
}

fn load_asg(path: &PathBuf) -> Result<AnnotatedGrammar> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading grammar {path:?}"))?;
    AnnotatedGrammar::parse(&text).with_context(|| format!("parsing grammar {path:?}"))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Explore(flags) => {
            let config = load_config(&flags)?;
            let outcome = pipeline::run_explore(&config)?;
            println!(
                "explored {} sequences: {} labeled, {} dropped unterminated",
                outcome.attempted, outcome.labeled, outcome.dropped
            );
            println!("dataset written to {}", outcome.dataset_path.display());
        }
        Command::Learn { flags, dataset } => {
            let config = load_config(&flags)?;
            let dataset = dataset.unwrap_or_else(|| config.out_dir.join("dataset.tsv"));
            let outcome = pipeline::run_learn(&config, &dataset)?;
            println!(
                "learned {} constraint(s) (cost {}) from {} candidates",
                outcome.hypothesis.selected.len(),
                outcome.summary.cost,
                outcome.summary.candidate_count
            );
            for rule in &outcome.summary.selected {
                println!("  {rule}");
            }
            for warning in &outcome.summary.warnings {
                println!("warning: {warning}");
            }
            println!("grammar written to {}", outcome.asg_path.display());
        }
        Command::Exploit { flags, asg } => {
            let config = load_config(&flags)?;
            let asg_path = asg.unwrap_or_else(|| config.out_dir.join("learned.asg"));
            let outcome = pipeline::run_exploit(&config, &asg_path, config.eval_samples)?;
            let stats = &outcome.stats;
            match stats.accuracy {
                Some(accuracy) => println!(
                    "{} samples, {} terminated, {} oracle-passing, accuracy {:.4}{}",
                    stats.samples,
                    stats.terminated,
                    stats.oracle_passing,
                    accuracy,
                    if stats.unconstrained {
                        " (unconstrained baseline; provider-dependent)"
                    } else {
                        ""
                    }
                ),
                None => println!("no samples requested; accuracy n/a"),
            }
            println!("samples written to {}", outcome.samples_path.display());
        }
        Command::Eval { flags, dataset } => {
            let config = load_config(&flags)?;
            let stats = pipeline::score_file(&config, &dataset)?;
            match stats.accuracy {
                Some(accuracy) => println!(
                    "{} rows, {} oracle-passing, accuracy {:.4}",
                    stats.samples, stats.oracle_passing, accuracy
                ),
                None => println!("empty file; accuracy n/a"),
            }
        }
        Command::Equiv { a, b, lmax } => {
            let asg_a = load_asg(&a)?;
            let asg_b = load_asg(&b)?;
            let report = equivalence_check(&asg_a, &asg_b, lmax);
            if report.equivalent {
                println!("equivalent on all strings up to length {lmax}");
            } else {
                println!("NOT equivalent (strings up to length {lmax}):");
                for ce in &report.counterexamples {
                    println!(
                        "  {:?}: {}={}, {} = {}",
                        ce.text,
                        a.display(),
                        ce.in_a,
                        b.display(),
                        ce.in_b
                    );
                }
                for text in &report.undecided {
                    println!("  {text:?}: undecided (ambiguity cap)");
                }
                std::process::exit(1);
            }
        }
        Command::RunAll(flags) => {
            let config = load_config(&flags)?;
            let report = pipeline::run_all(&config)?;
            print!("{}", render_report(&report));
            println!("artifacts in {}", config.out_dir.display());
        }
    }
    Ok(())
}
