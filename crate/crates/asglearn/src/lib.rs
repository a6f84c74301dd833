//! Learn context-sensitive grammar constraints from sampled strings, then
//! enforce them during constrained generation.
//!
//! The toolkit runs in two phases. Exploration samples syntactically valid
//! strings from a CFG-masked temperature sampler, labels them with a
//! ground-truth oracle, and hands the labeled sets to a learner that selects
//! a minimal set of annotation rules over the CFG. Exploitation then decodes
//! under the learned annotated grammar, so every emitted sequence satisfies
//! the learned constraints.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`grammar`] — CFGs, Earley recognition, prefix viability, parse forests,
//!   and valid-next-token masks over a token vocabulary.
//! - [`asg`] — annotated grammars: rule evaluation, membership, and
//!   completion-bounded next-token masking.
//! - [`lm`] — logit providers, the masked temperature sampler, and the
//!   exploration generator.
//! - [`oracle`] — ground-truth labeling, deduplication, and the
//!   positive/negative split.
//! - [`learner`] — hypothesis-space generation and minimal-cost search.
//! - [`pipeline`] — end-to-end orchestration, config, persistence, reports.

pub mod asg;
pub mod grammar;
pub mod learner;
pub mod lm;
pub mod oracle;
pub mod pipeline;
