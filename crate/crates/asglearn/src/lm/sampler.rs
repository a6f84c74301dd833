//! Masked temperature sampling.
//!
//! One decoding step renormalizes `exp(score/τ)` over the allowed entries
//! only — disallowed entries get probability exactly zero — with
//! max-subtraction for numerical stability. τ = 0 is the greedy limit:
//! argmax over allowed entries, ties broken by entry order (tokens in
//! vocabulary order, end marker last).

use std::collections::HashMap;
use std::sync::Mutex;

use thiserror::Error;

use crate::asg::{asg_valid_next_tokens, AnnotatedGrammar, MaskError};
use crate::grammar::{Grammar, NonViablePrefix, TokenId, TokenMask, Vocabulary};

use super::provider::ProviderError;
use super::rng::SplitMix64;
use super::{ConfigError, ProblemInstance, SampledSequence};

/// One sampleable entry: a vocabulary token or the end marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entry {
    Token(TokenId),
    End,
}

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("mask allows no entries")]
    EmptyMask,
    #[error(transparent)]
    NonViablePrefix(#[from] NonViablePrefix),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// The masked distribution as (entry, probability) pairs in entry order.
/// `scores` carries one value per vocabulary entry with the end marker last.
pub fn masked_distribution(
    scores: &[f64],
    mask: &TokenMask,
    temperature: f64,
) -> Result<Vec<(Entry, f64)>, SampleError> {
    assert!(
        temperature >= 0.0 && temperature.is_finite(),
        "temperature must be finite and nonnegative"
    );
    let end_score = *scores.last().expect("scores include the end marker");
    let mut entries: Vec<(Entry, f64)> = mask
        .tokens()
        .map(|id| {
            debug_assert!(id + 1 < scores.len(), "token id outside score vector");
            (Entry::Token(id), scores[id])
        })
        .collect();
    if mask.allows_end() {
        entries.push((Entry::End, end_score));
    }
    if entries.is_empty() {
        return Err(SampleError::EmptyMask);
    }
    if temperature == 0.0 {
        // Greedy limit: point mass on the best-scoring entry, first wins ties.
        let best = entries
            .iter()
            .enumerate()
            .max_by(|(ia, (_, a)), (ib, (_, b))| {
                a.partial_cmp(b).expect("finite scores").then(ib.cmp(ia))
            })
            .map(|(i, _)| i)
            .expect("nonempty");
        return Ok(entries
            .into_iter()
            .enumerate()
            .map(|(i, (e, _))| (e, if i == best { 1.0 } else { 0.0 }))
            .collect());
    }
    let max = entries
        .iter()
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let mut weights: Vec<(Entry, f64)> = entries
        .into_iter()
        .map(|(e, s)| {
            let w = ((s - max) / temperature).exp();
            total += w;
            (e, w)
        })
        .collect();
    for (_, w) in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Draws one entry from the masked temperature distribution.
pub fn masked_step(
    scores: &[f64],
    mask: &TokenMask,
    temperature: f64,
    rng: &mut SplitMix64,
) -> Result<Entry, SampleError> {
    let distribution = masked_distribution(scores, mask, temperature)?;
    let draw = rng.next_f64();
    let mut cumulative = 0.0;
    for (entry, p) in &distribution {
        cumulative += p;
        if draw < cumulative {
            return Ok(*entry);
        }
    }
    // Rounding can leave the cumulative a hair below 1.0.
    Ok(distribution.last().expect("nonempty").0)
}

/// A constraint function: the allowed entries after `text`, at decode step
/// `step` (the number of tokens already emitted).
pub trait MaskFn {
    fn allowed(&self, text: &str, step: usize) -> Result<TokenMask, SampleError>;
}

/// CFG masking: tokens that keep the prefix viable; end only on members.
pub struct CfgMask<'a> {
    pub grammar: &'a Grammar,
    pub vocabulary: &'a Vocabulary,
}

impl MaskFn for CfgMask<'_> {
    fn allowed(&self, text: &str, _step: usize) -> Result<TokenMask, SampleError> {
        Ok(self.grammar.valid_next_tokens(text, self.vocabulary)?)
    }
}

/// No constraint: every token plus the end marker, at every step.
pub struct UnconstrainedMask<'a> {
    pub vocabulary: &'a Vocabulary,
}

impl MaskFn for UnconstrainedMask<'_> {
    fn allowed(&self, _text: &str, _step: usize) -> Result<TokenMask, SampleError> {
        let mut mask = TokenMask::default();
        for id in 0..self.vocabulary.len() {
            mask.allow(id);
        }
        mask.set_allow_end(true);
        Ok(mask)
    }
}

/// Masking under an annotated grammar with a completion budget.
///
/// With a token capacity set, the budget is additionally clamped so that any
/// allowed token still leaves room to finish and emit the end marker within
/// the capacity; provided the vocabulary contains every single-character
/// token of the alphabet, a sampler driven by this mask always terminates.
/// Verdicts are cached per (text, effective budget) — the mask is a pure
/// function of those, so the cache never changes results.
pub struct AsgMask<'a> {
    asg: &'a AnnotatedGrammar,
    vocabulary: &'a Vocabulary,
    budget: usize,
    token_capacity: Option<usize>,
    cache: Mutex<HashMap<(String, usize), TokenMask>>,
}

impl<'a> AsgMask<'a> {
    pub fn new(asg: &'a AnnotatedGrammar, vocabulary: &'a Vocabulary, budget: usize) -> Self {
        AsgMask {
            asg,
            vocabulary,
            budget,
            token_capacity: None,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Clamp lookahead so decoding finishes within `max_tokens` steps.
    pub fn with_token_capacity(mut self, max_tokens: usize) -> Self {
        self.token_capacity = Some(max_tokens);
        self
    }
}

impl MaskFn for AsgMask<'_> {
    fn allowed(&self, text: &str, step: usize) -> Result<TokenMask, SampleError> {
        let budget = match self.token_capacity {
            None => self.budget,
            Some(capacity) => {
                if step + 2 > capacity {
                    // No room for a token plus the end marker: end or nothing.
                    let mut mask = TokenMask::default();
                    mask.set_allow_end(self.asg.member(text).map_err(MaskError::Asg)?);
                    if mask.is_empty() {
                        return Err(SampleError::Mask(MaskError::DeadEnd {
                            prefix: text.to_string(),
                            budget: 0,
                        }));
                    }
                    return Ok(mask);
                }
                self.budget.min(capacity - step - 2)
            }
        };
        if let Some(found) = self
            .cache
            .lock()
            .expect("mask cache lock")
            .get(&(text.to_string(), budget))
        {
            return Ok(found.clone());
        }
        let mask = asg_valid_next_tokens(self.asg, text, self.vocabulary, budget)?;
        self.cache
            .lock()
            .expect("mask cache lock")
            .insert((text.to_string(), budget), mask.clone());
        Ok(mask)
    }
}

/// Generates one sequence by repeated masked sampling: apply the mask, score
/// with the provider, draw an entry; stop at the end marker (terminated) or
/// after `max_tokens` tokens (non-terminated).
pub fn sample_sequence(
    provider: &dyn super::LogitProvider,
    instance: &ProblemInstance,
    mask_fn: &dyn MaskFn,
    vocabulary: &Vocabulary,
    temperature: f64,
    max_tokens: usize,
    rng: &mut SplitMix64,
) -> Result<SampledSequence, SampleError> {
    let mut tokens: Vec<TokenId> = Vec::new();
    let mut text = String::new();
    let mut terminated = false;
    while tokens.len() < max_tokens {
        let mask = mask_fn.allowed(&text, tokens.len())?;
        let scores = provider.score(instance, &tokens, vocabulary)?;
        match masked_step(&scores, &mask, temperature, rng)? {
            Entry::End => {
                terminated = true;
                break;
            }
            Entry::Token(id) => {
                text.push_str(vocabulary.token_text(id));
                tokens.push(id);
            }
        }
    }
    Ok(SampledSequence {
        instance_id: instance.id.clone(),
        temperature,
        sample_index: 0,
        tokens,
        text,
        terminated,
    })
}
