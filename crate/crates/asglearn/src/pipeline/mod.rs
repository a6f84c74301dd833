//! End-to-end orchestration: explore → learn → exploit → evaluate.
//!
//! Each phase reads and writes plain-text artifacts in the run's output
//! directory so runs are diffable: `dataset.tsv` (labeled samples),
//! `learned.asg` (the induced grammar), `samples.tsv` (enforcement samples),
//! `report.txt` / `report.jsonl` (human table and line-delimited records).
//! Reports are deterministic for a fixed config and seed except wall-clock
//! fields.

mod config;
pub mod dataset;
mod equiv;

pub use config::{ConfigFileError, OracleSpec, ProviderSpec, RunConfig};
pub use equiv::{equivalence_check, Counterexample, EquivReport};

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::asg::AnnotatedGrammar;
use crate::grammar::{Grammar, ParseError, Vocabulary};
use crate::learner::{self, LearnError, TemplateConfig};
use crate::lm::{
    explore, sample_sequence, AsgMask, GeneratorConfig, LogitProvider, MaskFn, NgramProvider,
    ProblemInstance, RemoteProvider, SampleError, SampledSequence, SplitMix64, UnconstrainedMask,
    UniformProvider,
};
use crate::oracle::{
    label, split_dedup, CommandOracle, EqualAbOracle, EqualCountsOracle, ExampleSet, Oracle,
    OracleError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(#[from] ConfigFileError),
    #[error("grammar error: {0}")]
    Grammar(#[from] ParseError),
    #[error("vocabulary error: {0}")]
    Vocabulary(#[from] crate::grammar::VocabularyError),
    #[error("sampling error: {0}")]
    Sample(#[from] SampleError),
    #[error("oracle error: {0}")]
    Oracle(#[from] OracleError),
    #[error("learning error: {0}")]
    Learn(#[from] LearnError),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DatasetStats {
    pub attempted: usize,
    pub labeled: usize,
    pub dropped_unterminated: usize,
    pub positives: usize,
    pub negatives: usize,
    pub deduplicated_away: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HypothesisSummary {
    pub selected: Vec<String>,
    pub cost: usize,
    pub candidate_count: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExploitStats {
    pub samples: usize,
    pub terminated: usize,
    pub oracle_passing: usize,
    /// None when no samples were requested.
    pub accuracy: Option<f64>,
    pub unconstrained: bool,
    pub temperature: f64,
}

#[derive(Debug, Clone, Serialize, Default, PartialEq)]
pub struct PhaseMillis {
    pub explore: u128,
    pub learn: u128,
    pub exploit: u128,
    pub equivalence: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub task: String,
    pub seed: u64,
    pub dataset: DatasetStats,
    pub hypothesis: HypothesisSummary,
    pub exploit: ExploitStats,
    pub equivalence: Option<EquivReport>,
    pub wall_clock_ms: PhaseMillis,
}

pub fn build_provider(config: &RunConfig) -> Box<dyn LogitProvider> {
    match &config.provider {
        ProviderSpec::Uniform => Box::new(UniformProvider),
        ProviderSpec::Ngram { order, exemplars } => {
            let refs: Vec<&str> = exemplars.iter().map(String::as_str).collect();
            Box::new(NgramProvider::fit(*order, &refs))
        }
        ProviderSpec::Remote {
            url,
            vocabulary_id,
            timeout_ms,
            retries,
        } => Box::new(RemoteProvider::with_options(
            url.clone(),
            vocabulary_id.clone(),
            std::time::Duration::from_millis(*timeout_ms),
            *retries,
        )),
    }
}

pub fn build_oracle(config: &RunConfig) -> Box<dyn Oracle> {
    match &config.oracle {
        OracleSpec::EqualCounts => Box::new(EqualCountsOracle),
        OracleSpec::EqualAb => Box::new(EqualAbOracle),
        OracleSpec::Command { program, args } => Box::new(
            CommandOracle::new(program)
                .with_args(args.clone())
                .with_timeout(std::time::Duration::from_millis(config.oracle_timeout_ms)),
        ),
    }
}

fn load_grammar(config: &RunConfig) -> Result<Grammar, PipelineError> {
    let text = std::fs::read_to_string(&config.cfg_path)
        .map_err(|e| PipelineError::Io(format!("read grammar {:?}: {e}", config.cfg_path)))?;
    Ok(Grammar::parse(&text)?)
}

fn load_asg(path: &Path) -> Result<AnnotatedGrammar, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Io(format!("read annotated grammar {path:?}: {e}")))?;
    Ok(AnnotatedGrammar::parse(&text)?)
}

/// The run's vocabulary: configured token list, or one single-character
/// token per grammar terminal.
fn build_vocabulary(config: &RunConfig, grammar: &Grammar) -> Result<Vocabulary, PipelineError> {
    let vocabulary = match &config.vocabulary {
        Some(tokens) => Vocabulary::new(tokens.clone())?,
        None => Vocabulary::new(grammar.terminals().iter().map(|c| c.to_string()))?,
    };
    vocabulary.check_alphabet(grammar)?;
    Ok(vocabulary)
}

fn instances(config: &RunConfig) -> Vec<ProblemInstance> {
    (1..=config.instances)
        .map(|i| {
            let mut instance = ProblemInstance::new(
                format!("{}-{i}", config.task),
                "generate one word of the target language",
            );
            instance
                .metadata
                .push(("max_tokens".to_string(), config.max_tokens.to_string()));
            instance
        })
        .collect()
}

fn ensure_out_dir(config: &RunConfig) -> Result<(), PipelineError> {
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| PipelineError::Io(format!("create {:?}: {e}", config.out_dir)))
}

#[derive(Debug)]
pub struct ExploreOutcome {
    pub dataset_path: PathBuf,
    pub rows: Vec<dataset::DatasetRow>,
    pub attempted: usize,
    pub labeled: usize,
    pub dropped: usize,
}

/// Phase 1: sample under the CFG mask, label with the oracle, persist.
pub fn run_explore(config: &RunConfig) -> Result<ExploreOutcome, PipelineError> {
    ensure_out_dir(config)?;
    let grammar = load_grammar(config)?;
    let vocabulary = build_vocabulary(config, &grammar)?;
    let provider = build_provider(config);
    let oracle = build_oracle(config);
    let generator = GeneratorConfig {
        temperatures: config.temperatures.clone(),
        samples_per_temperature: config.samples_per_temperature,
        max_tokens: config.max_tokens,
        seed: config.seed,
    };
    let samples = explore(
        provider.as_ref(),
        &grammar,
        &vocabulary,
        &instances(config),
        &generator,
    )?;
    let (labeled, dropped) = label(oracle.as_ref(), &samples)?;
    let rows = dataset::rows_from_run(&samples, &labeled);
    let dataset_path = config.out_dir.join("dataset.tsv");
    dataset::write(&dataset_path, &rows)?;
    Ok(ExploreOutcome {
        dataset_path,
        attempted: samples.len(),
        labeled: labeled.len(),
        dropped,
        rows,
    })
}

#[derive(Debug)]
pub struct LearnOutcome {
    pub asg_path: PathBuf,
    pub hypothesis: learner::Hypothesis,
    pub examples: ExampleSet,
    pub summary: HypothesisSummary,
    pub labeled: usize,
}

/// Phase 1, step 3: dedup, split, search for a minimal covering hypothesis,
/// audit coverage, and write the learned grammar.
pub fn run_learn(config: &RunConfig, dataset_path: &Path) -> Result<LearnOutcome, PipelineError> {
    ensure_out_dir(config)?;
    let grammar = load_grammar(config)?;
    let rows = dataset::read(dataset_path)?;
    let labeled = dataset::labeled_rows(&rows);
    let examples = split_dedup(&labeled)?;

    let mut warnings = Vec::new();
    if examples.positives.is_empty() {
        warnings.push("no positive examples: the learner only sees what to exclude".to_string());
    }
    if examples.negatives.is_empty() {
        warnings.push(
            "insufficient negative coverage: no negative examples, learning the empty hypothesis"
                .to_string(),
        );
    }

    let templates = TemplateConfig {
        inequality_constraints: config.inequality_templates,
    };
    let space = learner::generate_space(&grammar, &templates);
    let hypothesis = learner::learn(&grammar, &space, &examples)?;

    // Coverage audit: a candidate outside the hypothesis whose addition
    // still covers the examples but changes the language means the negatives
    // never pinned it down — report it rather than silently keep the weaker
    // grammar.
    for candidate in &space.candidates {
        if hypothesis.selected.contains(&candidate.id) {
            continue;
        }
        let mut extended = hypothesis.selected.clone();
        extended.push(candidate.id);
        let extended_asg = learner::induce(&grammar, &space, &extended);
        if !learner::covers(&extended_asg, &examples).pass {
            continue;
        }
        let contrast = equivalence_check(&hypothesis.asg, &extended_asg, config.lmax);
        if !contrast.equivalent {
            let rules: Vec<String> = candidate.rules.iter().map(|r| r.to_string()).collect();
            warnings.push(format!(
                "insufficient negative coverage: candidate {} ({}) on production {} is \
                 undetermined by the examples",
                candidate.id,
                rules.join(" "),
                candidate.production,
            ));
        }
    }

    let asg_path = config.out_dir.join("learned.asg");
    std::fs::write(&asg_path, hypothesis.asg.to_string())
        .map_err(|e| PipelineError::Io(format!("write {asg_path:?}: {e}")))?;
    if config.export_task {
        let task_path = config.out_dir.join("task.ilasp");
        std::fs::write(
            &task_path,
            learner::export_task(&grammar, &space, &examples),
        )
        .map_err(|e| PipelineError::Io(format!("write {task_path:?}: {e}")))?;
    }

    let selected: Vec<String> = hypothesis
        .selected
        .iter()
        .flat_map(|&id| {
            let candidate = &space.candidates[id];
            candidate
                .rules
                .iter()
                .map(move |r| format!("production {}: {}", candidate.production, r))
        })
        .collect();
    let summary = HypothesisSummary {
        selected,
        cost: hypothesis
            .selected
            .iter()
            .map(|&id| space.candidates[id].cost)
            .sum(),
        candidate_count: space.candidates.len(),
        warnings,
    };
    Ok(LearnOutcome {
        asg_path,
        hypothesis,
        examples,
        summary,
        labeled: labeled.len(),
    })
}

#[derive(Debug)]
pub struct ExploitOutcome {
    pub samples_path: PathBuf,
    pub stats: ExploitStats,
    pub samples: Vec<SampledSequence>,
}

/// Phase 2: decode `count` sequences under the annotated grammar's mask
/// (or unconstrained, for the qualitative baseline) and score against the
/// ground-truth oracle. The oracle is used for scoring only.
pub fn run_exploit(
    config: &RunConfig,
    asg_path: &Path,
    count: usize,
) -> Result<ExploitOutcome, PipelineError> {
    ensure_out_dir(config)?;
    let asg = load_asg(asg_path)?.with_forest_cap(config.forest_cap);
    let vocabulary = build_vocabulary(config, asg.grammar())?;
    let provider = build_provider(config);
    let oracle = build_oracle(config);
    let temperature = config.exploit_temperature;

    let constrained_mask;
    let unconstrained_mask;
    let mask: &dyn MaskFn = if config.unconstrained {
        unconstrained_mask = UnconstrainedMask {
            vocabulary: &vocabulary,
        };
        &unconstrained_mask
    } else {
        constrained_mask = AsgMask::new(&asg, &vocabulary, config.mask_budget)
            .with_token_capacity(config.max_tokens);
        &constrained_mask
    };

    let instance = ProblemInstance::new(format!("{}-eval", config.task), "enforcement run");
    let mut samples = Vec::with_capacity(count);
    for j in 0..count {
        let mut rng = SplitMix64::for_cell(config.seed, usize::MAX, j, 0);
        let mut sequence = sample_sequence(
            provider.as_ref(),
            &instance,
            mask,
            &vocabulary,
            temperature,
            config.max_tokens,
            &mut rng,
        )?;
        sequence.sample_index = j;
        samples.push(sequence);
    }

    let texts: Vec<String> = samples.iter().map(|s| s.text.clone()).collect();
    let verdicts = oracle.label_batch(&texts)?;
    let oracle_passing = verdicts.iter().filter(|&&v| v).count();
    let terminated = samples.iter().filter(|s| s.terminated).count();
    let stats = ExploitStats {
        samples: count,
        terminated,
        oracle_passing,
        accuracy: if count == 0 {
            None
        } else {
            Some(oracle_passing as f64 / count as f64)
        },
        unconstrained: config.unconstrained,
        temperature,
    };

    let samples_path = config.out_dir.join("samples.tsv");
    let mut out = String::new();
    for (sequence, verdict) in samples.iter().zip(&verdicts) {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            sequence.text,
            u8::from(*verdict),
            sequence.instance_id,
            sequence.temperature,
            sequence.sample_index,
            u8::from(sequence.terminated),
        ));
    }
    std::fs::write(&samples_path, out)
        .map_err(|e| PipelineError::Io(format!("write {samples_path:?}: {e}")))?;
    Ok(ExploitOutcome {
        samples_path,
        stats,
        samples,
    })
}

/// Scores an existing dataset or samples file against the configured oracle.
pub fn score_file(config: &RunConfig, path: &Path) -> Result<ExploitStats, PipelineError> {
    let rows = dataset::read(path)?;
    let oracle = build_oracle(config);
    let texts: Vec<String> = rows.iter().map(|r| r.text.clone()).collect();
    let verdicts = oracle.label_batch(&texts)?;
    let oracle_passing = verdicts.iter().filter(|&&v| v).count();
    Ok(ExploitStats {
        samples: rows.len(),
        terminated: rows.iter().filter(|r| r.terminated).count(),
        oracle_passing,
        accuracy: if rows.is_empty() {
            None
        } else {
            Some(oracle_passing as f64 / rows.len() as f64)
        },
        unconstrained: config.unconstrained,
        temperature: config.exploit_temperature,
    })
}

/// The whole pipeline: explore, learn, exploit, and (when a ground-truth
/// grammar is configured) the bounded equivalence check.
pub fn run_all(config: &RunConfig) -> Result<RunReport, PipelineError> {
    let mut clock = PhaseMillis::default();

    let started = Instant::now();
    let explored = run_explore(config)?;
    clock.explore = started.elapsed().as_millis();

    let started = Instant::now();
    let learned = run_learn(config, &explored.dataset_path)?;
    clock.learn = started.elapsed().as_millis();

    let started = Instant::now();
    let exploited = run_exploit(config, &learned.asg_path, config.eval_samples)?;
    clock.exploit = started.elapsed().as_millis();

    let started = Instant::now();
    let equivalence = match &config.truth_asg_path {
        Some(path) => {
            let truth = load_asg(path)?.with_forest_cap(config.forest_cap);
            Some(equivalence_check(
                &learned.hypothesis.asg,
                &truth,
                config.lmax,
            ))
        }
        None => None,
    };
    clock.equivalence = started.elapsed().as_millis();

    let report = RunReport {
        task: config.task.clone(),
        seed: config.seed,
        dataset: DatasetStats {
            attempted: explored.attempted,
            labeled: explored.labeled,
            dropped_unterminated: explored.dropped,
            positives: learned.examples.positives.len(),
            negatives: learned.examples.negatives.len(),
            deduplicated_away: learned.labeled - learned.examples.len(),
        },
        hypothesis: learned.summary,
        exploit: exploited.stats,
        equivalence,
        wall_clock_ms: clock,
    };
    write_report(config, &report)?;
    Ok(report)
}

/// Renders the human-readable table and the line-delimited record stream.
pub fn write_report(config: &RunConfig, report: &RunReport) -> Result<(), PipelineError> {
    ensure_out_dir(config)?;
    let text_path = config.out_dir.join("report.txt");
    std::fs::write(&text_path, render_report(report))
        .map_err(|e| PipelineError::Io(format!("write {text_path:?}: {e}")))?;
    let json_path = config.out_dir.join("report.jsonl");
    let mut out = String::new();
    let mut record = |kind: &str, value: serde_json::Value| {
        let mut object = serde_json::Map::new();
        object.insert(
            "record".to_string(),
            serde_json::Value::String(kind.to_string()),
        );
        object.insert(
            "task".to_string(),
            serde_json::Value::String(report.task.clone()),
        );
        object.insert("seed".to_string(), serde_json::json!(report.seed));
        object.insert("value".to_string(), value);
        out.push_str(&serde_json::Value::Object(object).to_string());
        out.push('\n');
    };
    record(
        "dataset",
        serde_json::to_value(&report.dataset).expect("serializable"),
    );
    record(
        "hypothesis",
        serde_json::to_value(&report.hypothesis).expect("serializable"),
    );
    record(
        "exploit",
        serde_json::to_value(&report.exploit).expect("serializable"),
    );
    if let Some(equivalence) = &report.equivalence {
        record(
            "equivalence",
            serde_json::to_value(equivalence).expect("serializable"),
        );
    }
    record(
        "wall_clock_ms",
        serde_json::to_value(&report.wall_clock_ms).expect("serializable"),
    );
    std::fs::write(&json_path, out)
        .map_err(|e| PipelineError::Io(format!("write {json_path:?}: {e}")))?;
    Ok(())
}

/// The report as a plain-text table.
pub fn render_report(report: &RunReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "task: {}    seed: {}", report.task, report.seed);
    let _ = writeln!(out, "--- dataset");
    let d = &report.dataset;
    let _ = writeln!(out, "  attempted            {:>8}", d.attempted);
    let _ = writeln!(out, "  labeled              {:>8}", d.labeled);
    let _ = writeln!(out, "  dropped unterminated {:>8}", d.dropped_unterminated);
    let _ = writeln!(out, "  positives (dedup)    {:>8}", d.positives);
    let _ = writeln!(out, "  negatives (dedup)    {:>8}", d.negatives);
    let _ = writeln!(out, "  deduplicated away    {:>8}", d.deduplicated_away);
    let _ = writeln!(
        out,
        "--- hypothesis ({} candidates searched)",
        report.hypothesis.candidate_count
    );
    if report.hypothesis.selected.is_empty() {
        let _ = writeln!(out, "  (empty hypothesis)");
    }
    for rule in &report.hypothesis.selected {
        let _ = writeln!(out, "  {rule}");
    }
    let _ = writeln!(out, "  cost {:>8}", report.hypothesis.cost);
    for warning in &report.hypothesis.warnings {
        let _ = writeln!(out, "  warning: {warning}");
    }
    let e = &report.exploit;
    let _ = writeln!(
        out,
        "--- enforcement ({}, temperature {})",
        if e.unconstrained {
            "unconstrained baseline; accuracy is provider-dependent"
        } else {
            "constrained"
        },
        e.temperature,
    );
    let _ = writeln!(out, "  samples              {:>8}", e.samples);
    let _ = writeln!(out, "  terminated           {:>8}", e.terminated);
    let _ = writeln!(out, "  oracle passing       {:>8}", e.oracle_passing);
    match e.accuracy {
        Some(a) => {
            let _ = writeln!(out, "  accuracy             {:>8.4}", a);
        }
        None => {
            let _ = writeln!(out, "  accuracy                  n/a");
        }
    }
    match &report.equivalence {
        None => {
            let _ = writeln!(
                out,
                "--- equivalence: not checked (no ground-truth grammar)"
            );
        }
        Some(eq) => {
            let _ = writeln!(
                out,
                "--- equivalence vs ground truth (all strings to length {})",
                eq.lmax
            );
            if eq.equivalent {
                let _ = writeln!(out, "  equivalent: yes");
            } else {
                let _ = writeln!(out, "  equivalent: NO");
                for ce in &eq.counterexamples {
                    let _ = writeln!(
                        out,
                        "  counterexample {:?}: learned={} truth={}",
                        ce.text, ce.in_a, ce.in_b
                    );
                }
                for text in &eq.undecided {
                    let _ = writeln!(out, "  undecided {text:?}");
                }
            }
        }
    }
    let w = &report.wall_clock_ms;
    let _ = writeln!(
        out,
        "--- wall clock: explore {}ms, learn {}ms, exploit {}ms, equivalence {}ms",
        w.explore, w.learn, w.exploit, w.equivalence
    );
    out
}
