//! Next-token masking under an annotated grammar.
//!
//! A token is allowed when the extended prefix can still be completed to a
//! member within a bounded number of extra characters, so masking is exact
//! relative to the budget. The search walks CFG-viable extensions only, using
//! the live Earley chart to prune and to detect complete strings cheaply,
//! and memoizes per-call verdicts keyed by the extension text (the same
//! extension can be reached through different tokens).

use std::collections::HashMap;

use thiserror::Error;

use crate::grammar::{Chart, TokenMask, Vocabulary};

use super::{AnnotatedGrammar, AsgError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaskError {
    #[error("prefix {0:?} is not viable under the grammar's CFG")]
    NonViablePrefix(String),
    #[error(
        "dead end: prefix {prefix:?} admits no token and no end marker within budget {budget}"
    )]
    DeadEnd { prefix: String, budget: usize },
    #[error(transparent)]
    Asg(#[from] AsgError),
}

/// Computes the allowed next entries for prefix `p`: token `t` is allowed iff
/// some completion of `p ∘ t` within `budget` extra characters is a member,
/// and the end marker is allowed iff `p` itself is a member. Errors with
/// [`MaskError::DeadEnd`] when nothing is allowed — a correctly driven
/// decoder never reaches such a state.
pub fn asg_valid_next_tokens(
    asg: &AnnotatedGrammar,
    p: &str,
    vocabulary: &Vocabulary,
    budget: usize,
) -> Result<TokenMask, MaskError> {
    let mut chart = Chart::new(asg.grammar());
    for c in p.chars() {
        if !chart.advance(c) {
            return Err(MaskError::NonViablePrefix(p.to_string()));
        }
    }
    if !chart.live() {
        return Err(MaskError::NonViablePrefix(p.to_string()));
    }

    let mut search = CompletionSearch {
        asg,
        text: p.to_string(),
        base_len: p.len(),
        known_true: HashMap::new(),
        known_false: HashMap::new(),
    };

    let mut mask = TokenMask::default();
    if chart.accepts() {
        mask.set_allow_end(asg.member(p)?);
    }
    let base = chart.columns();
    for (id, token) in vocabulary.tokens().iter().enumerate() {
        let mut alive = true;
        for c in token.text().chars() {
            if !chart.advance(c) {
                alive = false;
                break;
            }
        }
        if alive {
            search.text.push_str(token.text());
            let found = search.completable(&mut chart, budget);
            search.text.truncate(search.base_len);
            if found? {
                mask.allow(id);
            }
        }
        chart.truncate(base);
    }
    if mask.is_empty() {
        return Err(MaskError::DeadEnd {
            prefix: p.to_string(),
            budget,
        });
    }
    Ok(mask)
}

struct CompletionSearch<'a> {
    asg: &'a AnnotatedGrammar,
    /// Full text so far: the fixed prefix plus the extension under test.
    text: String,
    base_len: usize,
    /// extension -> smallest budget already shown sufficient.
    known_true: HashMap<String, usize>,
    /// extension -> largest budget already shown insufficient.
    known_false: HashMap<String, usize>,
}

impl CompletionSearch<'_> {
    /// Depth-first search for a member reachable from the current text within
    /// `budget` more characters. The chart must mirror `self.text`.
    fn completable(&mut self, chart: &mut Chart, budget: usize) -> Result<bool, MaskError> {
        let ext = &self.text[self.base_len..];
        if let Some(&b) = self.known_true.get(ext) {
            if budget >= b {
                return Ok(true);
            }
        }
        if let Some(&b) = self.known_false.get(ext) {
            if budget <= b {
                return Ok(false);
            }
        }
        if chart.accepts() && self.asg.member(&self.text)? {
            self.record_true(0);
            return Ok(true);
        }
        if budget > 0 {
            let columns = chart.columns();
            for c in chart.next_chars() {
                if !chart.advance(c) {
                    continue;
                }
                self.text.push(c);
                let found = self.completable(chart, budget - 1);
                self.text.pop();
                chart.truncate(columns);
                if found? {
                    self.record_true(budget);
                    return Ok(true);
                }
            }
        }
        let ext = self.text[self.base_len..].to_string();
        let entry = self.known_false.entry(ext).or_insert(budget);
        *entry = (*entry).max(budget);
        Ok(false)
    }

    fn record_true(&mut self, budget: usize) {
        let ext = self.text[self.base_len..].to_string();
        let entry = self.known_true.entry(ext).or_insert(budget);
        *entry = (*entry).min(budget);
    }
}
