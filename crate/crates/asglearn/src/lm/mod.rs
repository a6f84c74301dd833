//! Logit providers, the masked temperature sampler, and the exploration
//! generator that produces the labeled-example corpus.

mod explore;
mod provider;
mod rng;
mod sampler;

pub use explore::explore;
pub use provider::{LogitProvider, NgramProvider, ProviderError, RemoteProvider, UniformProvider};
pub use rng::SplitMix64;
pub use sampler::{
    masked_distribution, masked_step, sample_sequence, AsgMask, CfgMask, Entry, MaskFn,
    SampleError, UnconstrainedMask,
};

use thiserror::Error;

/// One generation task handed to a provider; the instruction text is opaque
/// to the pipeline and only meaningful to remote providers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    pub id: String,
    pub instruction: String,
    pub metadata: Vec<(String, String)>,
}

impl ProblemInstance {
    pub fn new(id: impl Into<String>, instruction: impl Into<String>) -> Self {
        ProblemInstance {
            id: id.into(),
            instruction: instruction.into(),
            metadata: Vec::new(),
        }
    }
}

/// Exploration parameters: the temperature schedule, samples per
/// temperature, the per-sequence token limit, and the base seed.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub temperatures: Vec<f64>,
    pub samples_per_temperature: usize,
    pub max_tokens: usize,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("temperature schedule must be nonempty")]
    NoTemperatures,
    #[error("temperatures must be distinct, finite and nonnegative")]
    BadTemperature,
    #[error("samples_per_temperature must be positive")]
    NoSamples,
    #[error("max_tokens must be positive")]
    NoTokenBudget,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.temperatures.is_empty() {
            return Err(ConfigError::NoTemperatures);
        }
        for (i, &t) in self.temperatures.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(ConfigError::BadTemperature);
            }
            if self.temperatures[..i].contains(&t) {
                return Err(ConfigError::BadTemperature);
            }
        }
        if self.samples_per_temperature == 0 {
            return Err(ConfigError::NoSamples);
        }
        if self.max_tokens == 0 {
            return Err(ConfigError::NoTokenBudget);
        }
        Ok(())
    }
}

/// One generated sequence with its provenance cell. `terminated` records
/// whether the end marker was emitted before the token limit; only
/// terminated sequences are complete strings of the constrained language.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSequence {
    pub instance_id: String,
    pub temperature: f64,
    pub sample_index: usize,
    pub tokens: Vec<crate::grammar::TokenId>,
    pub text: String,
    pub terminated: bool,
}
