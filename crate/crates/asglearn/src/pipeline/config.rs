//! Run configuration: a flat `key = value` text file plus programmatic
//! construction. Relative paths are resolved against the config file's
//! directory.

use std::path::{Path, PathBuf};

use thiserror::Error;

use super::PipelineError;

/// Which scoring function backs the sampler.
#[derive(Debug, Clone, PartialEq)]
pub enum ProviderSpec {
    Uniform,
    Ngram {
        order: usize,
        exemplars: Vec<String>,
    },
    Remote {
        url: String,
        vocabulary_id: String,
        timeout_ms: u64,
        retries: usize,
    },
}

/// Which ground-truth validator labels samples and scores reports.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleSpec {
    EqualCounts,
    EqualAb,
    Command { program: PathBuf, args: Vec<String> },
}

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("config line {line}: expected `key = value`, got {text:?}")]
    BadLine { line: usize, text: String },
    #[error("config key `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("unknown config key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("config: {0}")]
    Invalid(String),
}

/// Everything one end-to-end run needs. Defaults are desk-scale: three
/// instances, eleven temperatures, ten samples each.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: String,
    pub cfg_path: PathBuf,
    pub truth_asg_path: Option<PathBuf>,
    pub provider: ProviderSpec,
    pub oracle: OracleSpec,
    pub oracle_timeout_ms: u64,
    pub temperatures: Vec<f64>,
    pub samples_per_temperature: usize,
    pub max_tokens: usize,
    pub instances: usize,
    pub seed: u64,
    pub eval_samples: usize,
    pub exploit_temperature: f64,
    pub mask_budget: usize,
    pub lmax: usize,
    pub out_dir: PathBuf,
    pub vocabulary: Option<Vec<String>>,
    pub unconstrained: bool,
    pub export_task: bool,
    pub inequality_templates: bool,
    pub forest_cap: usize,
}

impl RunConfig {
    pub fn new(task: impl Into<String>, cfg_path: impl Into<PathBuf>) -> Self {
        let task = task.into();
        RunConfig {
            out_dir: PathBuf::from("out").join(&task),
            task,
            cfg_path: cfg_path.into(),
            truth_asg_path: None,
            provider: ProviderSpec::Ngram {
                order: 3,
                exemplars: Vec::new(),
            },
            oracle: OracleSpec::EqualCounts,
            oracle_timeout_ms: 30_000,
            temperatures: (0..=10).map(|k| k as f64 / 10.0).collect(),
            samples_per_temperature: 10,
            max_tokens: 12,
            instances: 3,
            seed: 0,
            eval_samples: 500,
            exploit_temperature: 1.0,
            mask_budget: 16,
            lmax: 12,
            vocabulary: None,
            unconstrained: false,
            export_task: false,
            inequality_templates: false,
            forest_cap: 64,
        }
    }

    /// Reads a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Io(format!("read config {path:?}: {e}")))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Ok(Self::parse(&text, base)?)
    }

    /// Parses config text; `base` anchors relative paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigFileError> {
        let mut config = RunConfig::new("task", "");
        let mut cfg_set = false;
        let mut out_set = false;
        let mut ngram_order = 3usize;
        let mut ngram_exemplars: Vec<String> = Vec::new();
        let mut remote_url: Option<String> = None;
        let mut remote_vocab_id: Option<String> = None;
        let mut remote_timeout_ms = 10_000u64;
        let mut remote_retries = 2usize;
        let mut provider_kind = String::from("ngram");

        let resolve = |base: &Path, value: &str| -> PathBuf {
            let p = PathBuf::from(value);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };

        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            if stripped.trim().is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(ConfigFileError::BadLine {
                    line,
                    text: raw.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let bad = |message: &str| ConfigFileError::BadValue {
                key: key.to_string(),
                message: message.to_string(),
            };
            match key {
                "task" => config.task = value.to_string(),
                "cfg" => {
                    config.cfg_path = resolve(base, value);
                    cfg_set = true;
                }
                "truth_asg" => config.truth_asg_path = Some(resolve(base, value)),
                "provider" => provider_kind = value.to_string(),
                "ngram_order" => {
                    ngram_order = value.parse().map_err(|_| bad("expected an integer"))?
                }
                "ngram_exemplars" => {
                    ngram_exemplars = value
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect()
                }
                "remote_url" => remote_url = Some(value.to_string()),
                "remote_vocab_id" => remote_vocab_id = Some(value.to_string()),
                "remote_timeout_ms" => {
                    remote_timeout_ms = value.parse().map_err(|_| bad("expected an integer"))?
                }
                "remote_retries" => {
                    remote_retries = value.parse().map_err(|_| bad("expected an integer"))?
                }
                "oracle" => {
                    config.oracle = match value {
                        "anbncn" => OracleSpec::EqualCounts,
                        "anbncm" => OracleSpec::EqualAb,
                        other => match other.strip_prefix("command:") {
                            Some(rest) => {
                                let mut parts = rest.split_whitespace();
                                let program = parts
                                    .next()
                                    .ok_or_else(|| bad("command oracle needs a program path"))?;
                                OracleSpec::Command {
                                    program: resolve(base, program),
                                    args: parts.map(str::to_string).collect(),
                                }
                            }
                            None => return Err(bad("expected anbncn, anbncm, or command:<path>")),
                        },
                    }
                }
                "oracle_timeout_ms" => {
                    config.oracle_timeout_ms =
                        value.parse().map_err(|_| bad("expected an integer"))?
                }
                "temperatures" => {
                    config.temperatures = value
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad("expected comma-separated numbers"))?
                }
                "samples_per_temperature" => {
                    config.samples_per_temperature =
                        value.parse().map_err(|_| bad("expected an integer"))?
                }
                "max_tokens" => {
                    config.max_tokens = value.parse().map_err(|_| bad("expected an integer"))?
                }
                "instances" => {
                    config.instances = value.parse().map_err(|_| bad("expected an integer"))?
                }
                "seed" => config.seed = value.parse().map_err(|_| bad("expected an integer"))?,
                "eval_samples" => {
                    config.eval_samples = value.parse().map_err(|_| bad("expected an integer"))?
                }
                "exploit_temperature" => {
                    config.exploit_temperature =
                        value.parse().map_err(|_| bad("expected a number"))?
                }
                "mask_budget" => {
                    config.mask_budget = value.parse().map_err(|_| bad("expected an integer"))?
                }
                "lmax" => config.lmax = value.parse().map_err(|_| bad("expected an integer"))?,
                "out" => {
                    config.out_dir = resolve(base, value);
                    out_set = true;
                }
                "vocabulary" => {
                    config.vocabulary = Some(
                        value
                            .split(',')
                            .map(|s| s.trim().to_string())
                            .filter(|s| !s.is_empty())
                            .collect(),
                    )
                }
                "unconstrained" => {
                    config.unconstrained = value.parse().map_err(|_| bad("expected true/false"))?
                }
                "export_ilasp" => {
                    config.export_task = value.parse().map_err(|_| bad("expected true/false"))?
                }
                "inequality_templates" => {
                    config.inequality_templates =
                        value.parse().map_err(|_| bad("expected true/false"))?
                }
                "forest_cap" => {
                    config.forest_cap = value.parse().map_err(|_| bad("expected an integer"))?
                }
                other => {
                    return Err(ConfigFileError::UnknownKey {
                        key: other.to_string(),
                        line,
                    })
                }
            }
        }
        if !cfg_set {
            return Err(ConfigFileError::Invalid(
                "missing required key `cfg` (grammar path)".to_string(),
            ));
        }
        if !out_set {
            config.out_dir = PathBuf::from("out").join(&config.task);
        }
        config.provider = match provider_kind.as_str() {
            "uniform" => ProviderSpec::Uniform,
            "ngram" => ProviderSpec::Ngram {
                order: ngram_order,
                exemplars: ngram_exemplars,
            },
            "remote" => ProviderSpec::Remote {
                url: remote_url.ok_or_else(|| {
                    ConfigFileError::Invalid("provider remote needs remote_url".to_string())
                })?,
                vocabulary_id: remote_vocab_id.unwrap_or_else(|| config.task.clone()),
                timeout_ms: remote_timeout_ms,
                retries: remote_retries,
            },
            other => {
                return Err(ConfigFileError::Invalid(format!(
                    "unknown provider `{other}` (expected uniform, ngram, or remote)"
                )))
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigFileError> {
        if self.temperatures.is_empty() {
            return Err(ConfigFileError::Invalid(
                "temperature schedule is empty".to_string(),
            ));
        }
        if self.samples_per_temperature == 0 || self.max_tokens == 0 || self.instances == 0 {
            return Err(ConfigFileError::Invalid(
                "samples_per_temperature, max_tokens and instances must be positive".to_string(),
            ));
        }
        let max_token_chars = self
            .vocabulary
            .as_ref()
            .map(|v| v.iter().map(|t| t.chars().count()).max().unwrap_or(1))
            .unwrap_or(1);
        if self.lmax < self.max_tokens * max_token_chars {
            return Err(ConfigFileError::Invalid(format!(
                "lmax ({}) must cover the longest generable string ({} tokens × {} chars)",
                self.lmax, self.max_tokens, max_token_chars
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "\
# comment
task = demo
cfg = demo.cfg
truth_asg = demo.asg
provider = ngram
ngram_order = 2
ngram_exemplars = abc, aabbcc
oracle = anbncm
temperatures = 0, 0.5, 1.0
samples_per_temperature = 4
max_tokens = 10
instances = 2
seed = 7
eval_samples = 50
lmax = 10
out = results
";
        let config = RunConfig::parse(text, Path::new("/tasks")).unwrap();
        assert_eq!(config.task, "demo");
        assert_eq!(config.cfg_path, PathBuf::from("/tasks/demo.cfg"));
        assert_eq!(
            config.truth_asg_path,
            Some(PathBuf::from("/tasks/demo.asg"))
        );
        assert_eq!(config.out_dir, PathBuf::from("/tasks/results"));
        assert_eq!(config.temperatures, vec![0.0, 0.5, 1.0]);
        assert_eq!(config.oracle, OracleSpec::EqualAb);
        match &config.provider {
            ProviderSpec::Ngram { order, exemplars } => {
                assert_eq!(*order, 2);
                assert_eq!(exemplars, &["abc", "aabbcc"]);
            }
            other => panic!("unexpected provider {other:?}"),
        }
        assert_eq!(config.seed, 7);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(matches!(
            RunConfig::parse("cfg = x\nnonsense = 1\n", Path::new(".")),
            Err(ConfigFileError::UnknownKey { .. })
        ));
        assert!(matches!(
            RunConfig::parse("just some text\n", Path::new(".")),
            Err(ConfigFileError::BadLine { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse("task = t\n", Path::new(".")),
            Err(ConfigFileError::Invalid(_))
        ));
    }

    #[test]
    fn command_oracle_spec_splits_args() {
        let config = RunConfig::parse(
            "cfg = g.cfg\noracle = command:check.sh --strict\n",
            Path::new("/t"),
        )
        .unwrap();
        match config.oracle {
            OracleSpec::Command { program, args } => {
                assert_eq!(program, PathBuf::from("/t/check.sh"));
                assert_eq!(args, vec!["--strict"]);
            }
            other => panic!("unexpected oracle {other:?}"),
        }
    }

    #[test]
    fn lmax_must_cover_generable_strings() {
        let err = RunConfig::parse("cfg = g.cfg\nmax_tokens = 20\nlmax = 12\n", Path::new("."))
            .unwrap_err();
        assert!(matches!(err, ConfigFileError::Invalid(_)));
    }
}
