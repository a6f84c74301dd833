//! Ground-truth labeling and dataset assembly.
//!
//! An oracle is a deterministic total validator over strings. Labeling keeps
//! only terminated samples (a truncated string is neither positive nor
//! negative evidence) and reports the dropped count; deduplication then
//! splits the texts into disjoint positive and negative sets, failing loudly
//! if the same text ever received both labels.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use thiserror::Error;

use crate::lm::SampledSequence;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle failure: {0}")]
    Failure(String),
    #[error("inconsistent oracle: text {text:?} labeled both positive and negative")]
    Inconsistent { text: String },
}

/// A deterministic validator V : Σ* → {0, 1}. Labeling is batched; built-in
/// oracles are pure functions, the command oracle spawns one process per
/// batch.
pub trait Oracle: Send + Sync {
    fn label_batch(&self, texts: &[String]) -> Result<Vec<bool>, OracleError>;

    fn check(&self, text: &str) -> Result<bool, OracleError> {
        Ok(self.label_batch(&[text.to_string()])?[0])
    }
}

/// Ordered blocks with equal counts: a^n b^n c^n, n ≥ 1.
#[derive(Debug, Clone, Default)]
pub struct EqualCountsOracle;

/// Ordered blocks with equal a/b counts and any positive c count:
/// a^n b^n c^m, n, m ≥ 1.
#[derive(Debug, Clone, Default)]
pub struct EqualAbOracle;

/// Splits `text` into (a-run, b-run, c-run) counts when it has exactly that
/// block shape.
fn block_counts(text: &str) -> Option<(usize, usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let a = chars.iter().take_while(|&&c| c == 'a').count();
    let b = chars[a..].iter().take_while(|&&c| c == 'b').count();
    let c = chars[a + b..].iter().take_while(|&&c| c == 'c').count();
    if a + b + c == chars.len() {
        Some((a, b, c))
    } else {
        None
    }
}

impl Oracle for EqualCountsOracle {
    fn label_batch(&self, texts: &[String]) -> Result<Vec<bool>, OracleError> {
        Ok(texts
            .iter()
            .map(|t| matches!(block_counts(t), Some((a, b, c)) if a >= 1 && a == b && b == c))
            .collect())
    }
}

impl Oracle for EqualAbOracle {
    fn label_batch(&self, texts: &[String]) -> Result<Vec<bool>, OracleError> {
        Ok(texts
            .iter()
            .map(|t| matches!(block_counts(t), Some((a, b, c)) if a >= 1 && a == b && c >= 1))
            .collect())
    }
}

/// External oracle: spawns the configured program once per batch, writes one
/// string per line to its stdin, and reads one `0`/`1` line per input back.
/// A nonzero exit status, malformed output, or a timeout is an oracle
/// failure — the run aborts rather than use a partial dataset.
pub struct CommandOracle {
    program: PathBuf,
    args: Vec<String>,
    timeout: Duration,
}

impl CommandOracle {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        CommandOracle {
            program: program.into(),
            args: Vec::new(),
            timeout: Duration::from_secs(30),
        }
    }

    pub fn with_args(mut self, args: Vec<String>) -> Self {
        self.args = args;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

impl Oracle for CommandOracle {
    fn label_batch(&self, texts: &[String]) -> Result<Vec<bool>, OracleError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| OracleError::Failure(format!("spawn {:?}: {e}", self.program)))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut payload = String::new();
        for text in texts {
            payload.push_str(text);
            payload.push('\n');
        }
        stdin
            .write_all(payload.as_bytes())
            .map_err(|e| OracleError::Failure(format!("write to oracle: {e}")))?;
        drop(stdin);

        // Collect output on a helper thread so a hung oracle can time out.
        let stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            use std::io::Read;
            let mut out = String::new();
            let mut stdout = stdout;
            stdout.read_to_string(&mut out).map(|_| out)
        });
        let deadline = std::time::Instant::now() + self.timeout;
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) => {
                    if std::time::Instant::now() >= deadline {
                        let _ = child.kill();
                        let _ = child.wait();
                        return Err(OracleError::Failure(format!(
                            "oracle timed out after {:?}",
                            self.timeout
                        )));
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(e) => return Err(OracleError::Failure(format!("wait for oracle: {e}"))),
            }
        };
        if !status.success() {
            return Err(OracleError::Failure(format!(
                "oracle exited with status {status}"
            )));
        }
        let output = reader
            .join()
            .map_err(|_| OracleError::Failure("oracle reader thread panicked".to_string()))?
            .map_err(|e| OracleError::Failure(format!("read oracle output: {e}")))?;
        let lines: Vec<&str> = output.lines().collect();
        if lines.len() != texts.len() {
            return Err(OracleError::Failure(format!(
                "oracle answered {} lines for {} inputs",
                lines.len(),
                texts.len()
            )));
        }
        lines
            .iter()
            .map(|line| match line.trim() {
                "1" => Ok(true),
                "0" => Ok(false),
                other => Err(OracleError::Failure(format!(
                    "oracle line {other:?} is not 0 or 1"
                ))),
            })
            .collect()
    }
}

/// One oracle-labeled string with the cell that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub text: String,
    pub positive: bool,
    pub instance_id: String,
    pub temperature: f64,
    pub sample_index: usize,
}

/// Labels every terminated sample; non-terminated samples are dropped and
/// counted. The whole batch fails if the oracle does.
pub fn label(
    oracle: &dyn Oracle,
    samples: &[SampledSequence],
) -> Result<(Vec<LabeledExample>, usize), OracleError> {
    let kept: Vec<&SampledSequence> = samples.iter().filter(|s| s.terminated).collect();
    let dropped = samples.len() - kept.len();
    let texts: Vec<String> = kept.iter().map(|s| s.text.clone()).collect();
    let verdicts = oracle.label_batch(&texts)?;
    let labeled = kept
        .into_iter()
        .zip(verdicts)
        .map(|(s, positive)| LabeledExample {
            text: s.text.clone(),
            positive,
            instance_id: s.instance_id.clone(),
            temperature: s.temperature,
            sample_index: s.sample_index,
        })
        .collect();
    Ok((labeled, dropped))
}

/// Deduplicated example sets: disjoint positives and negatives.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExampleSet {
    pub positives: BTreeSet<String>,
    pub negatives: BTreeSet<String>,
}

impl ExampleSet {
    pub fn new<P, N, SP, SN>(positives: P, negatives: N) -> Self
    where
        P: IntoIterator<Item = SP>,
        SP: Into<String>,
        N: IntoIterator<Item = SN>,
        SN: Into<String>,
    {
        ExampleSet {
            positives: positives.into_iter().map(Into::into).collect(),
            negatives: negatives.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty() && self.negatives.is_empty()
    }
}

/// Removes duplicate texts and splits by label. Identical texts with
/// conflicting labels mean the oracle is not deterministic: hard error.
pub fn split_dedup(examples: &[LabeledExample]) -> Result<ExampleSet, OracleError> {
    let mut seen: BTreeMap<&str, bool> = BTreeMap::new();
    for example in examples {
        match seen.get(example.text.as_str()) {
            Some(&label) if label != example.positive => {
                return Err(OracleError::Inconsistent {
                    text: example.text.clone(),
                })
            }
            Some(_) => {}
            None => {
                seen.insert(&example.text, example.positive);
            }
        }
    }
    let mut set = ExampleSet::default();
    for (text, positive) in seen {
        if positive {
            set.positives.insert(text.to_string());
        } else {
            set.negatives.insert(text.to_string());
        }
    }
    Ok(set)
}
