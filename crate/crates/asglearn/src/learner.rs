//! Constraint learning: build a hypothesis space of candidate annotations
//! over a CFG, then find a minimal-cost subset that accepts every positive
//! example and rejects every negative one.
//!
//! The space has two layers. Counting scaffolding is always on and free:
//! right-recursive list productions get a size-increment rule and ε
//! alternatives get a `size(0).` base, so list subtrees expose their length
//! as an atom. Candidates are integrity constraints between counted child
//! positions of the same production — pairwise equality in both directions,
//! plus optional strict-inequality templates. Scaffolding only adds atoms and
//! candidates only reject trees, so adding a candidate never grows the
//! language; the search exploits that monotonicity.

use thiserror::Error;

use crate::asg::{
    AffineTerm, AnnotatedGrammar, AnnotationRule, AtomTemplate, BodyLiteral, CompareOp, Scope,
};
use crate::grammar::{Grammar, ProductionId, Symbol};
use crate::oracle::ExampleSet;

/// Template families to include when generating the hypothesis space.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TemplateConfig {
    /// Also emit `:- size(X)@i, size(Y)@j, X < Y.` candidates.
    pub inequality_constraints: bool,
}

/// One selectable annotation: a constraint attached to a production, with
/// its literal-count cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateAnnotation {
    pub id: usize,
    pub production: ProductionId,
    pub rules: Vec<AnnotationRule>,
    pub cost: usize,
}

/// The search space: free measurement scaffolding plus costed candidates.
/// Candidate ids are stable and deterministic given (grammar, config).
#[derive(Debug, Clone, Default)]
pub struct HypothesisSpace {
    pub scaffolding: Vec<(ProductionId, AnnotationRule)>,
    pub candidates: Vec<CandidateAnnotation>,
}

/// A selected hypothesis and the annotated grammar it induces
/// (scaffolding plus the selected candidates over the base CFG).
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub selected: Vec<usize>,
    pub asg: AnnotatedGrammar,
}

/// Per-example coverage verdicts for a hypothesis. Membership queries that
/// exhaust the parse-forest cap are undecided and count as failures.
#[derive(Debug, Clone, Default)]
pub struct CoverageReport {
    pub positive_failures: Vec<String>,
    pub negative_failures: Vec<String>,
    pub undecided: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("example sets overlap: {text:?} is both positive and negative")]
    OverlappingExamples { text: String },
    #[error("no hypothesis in the space covers the examples")]
    Unsatisfiable {
        /// Closest-coverage hypothesis found, for diagnostics.
        best: Box<Hypothesis>,
        report: CoverageReport,
    },
}

fn size_atom(term: AffineTerm) -> AtomTemplate {
    AtomTemplate {
        predicate: "size".to_string(),
        args: vec![term],
    }
}

fn size_literal(var: &str, child: usize, negated: bool) -> BodyLiteral {
    BodyLiteral::Atom {
        negated,
        atom: size_atom(AffineTerm::variable(var, 0)),
        scope: Scope::Child(child),
    }
}

/// `:- size(X)@i, not size(X)@j.` — child i's count must appear at child j.
fn equality_constraint(i: usize, j: usize) -> AnnotationRule {
    AnnotationRule::constraint(vec![
        size_literal("X", i, false),
        size_literal("X", j, true),
    ])
}

/// `:- size(X)@i, size(Y)@j, X < Y.` — child j must not outgrow child i.
fn inequality_constraint(i: usize, j: usize) -> AnnotationRule {
    AnnotationRule::constraint(vec![
        size_literal("X", i, false),
        size_literal("Y", j, false),
        BodyLiteral::Compare {
            left: AffineTerm::variable("X", 0),
            op: CompareOp::Lt,
            right: AffineTerm::variable("Y", 0),
        },
    ])
}

/// Emits the hypothesis space for a grammar.
///
/// Scaffolding: every right-recursive alternative `A -> t… A` gets
/// `size(X+1) :- size(X)@k.` (k = the recursive child position) and every
/// ε alternative gets `size(0).`. Candidates: for every production and every
/// pair of counted child positions i < j, the equality constraint in both
/// directions; inequality templates are gated by the config.
pub fn generate_space(grammar: &Grammar, config: &TemplateConfig) -> HypothesisSpace {
    let mut scaffolding = Vec::new();
    let mut counted = vec![false; grammar.nonterminal_count()];
    for (id, production) in grammar.productions().iter().enumerate() {
        if production.body.is_empty() {
            scaffolding.push((id, AnnotationRule::fact(size_atom(AffineTerm::constant(0)))));
            counted[production.head] = true;
            continue;
        }
        let recursive_tail = production.body.last() == Some(&Symbol::Nonterminal(production.head));
        let terminal_init = production.body[..production.body.len() - 1]
            .iter()
            .all(|s| matches!(s, Symbol::Terminal(_)));
        if recursive_tail && terminal_init {
            let position = production.body.len();
            scaffolding.push((
                id,
                AnnotationRule::rule(
                    size_atom(AffineTerm::variable("X", 1)),
                    vec![size_literal("X", position, false)],
                ),
            ));
        }
    }

    let counted_positions = |production: &crate::grammar::Production| -> Vec<usize> {
        production
            .body
            .iter()
            .enumerate()
            .filter_map(|(index, symbol)| match symbol {
                Symbol::Nonterminal(n) if counted[*n] => Some(index + 1),
                _ => None,
            })
            .collect()
    };

    let mut candidates = Vec::new();
    let mut push = |production: ProductionId, rule: AnnotationRule| {
        let cost = rule.literal_count();
        candidates.push(CandidateAnnotation {
            id: candidates.len(),
            production,
            rules: vec![rule],
            cost,
        });
    };
    for (id, production) in grammar.productions().iter().enumerate() {
        let positions = counted_positions(production);
        for (a, &i) in positions.iter().enumerate() {
            for &j in &positions[a + 1..] {
                push(id, equality_constraint(i, j));
                push(id, equality_constraint(j, i));
            }
        }
    }
    if config.inequality_constraints {
        for (id, production) in grammar.productions().iter().enumerate() {
            let positions = counted_positions(production);
            for (a, &i) in positions.iter().enumerate() {
                for &j in &positions[a + 1..] {
                    push(id, inequality_constraint(i, j));
                    push(id, inequality_constraint(j, i));
                }
            }
        }
    }
    HypothesisSpace {
        scaffolding,
        candidates,
    }
}

/// The annotated grammar induced by the scaffolding plus `selected`
/// candidate ids.
pub fn induce(grammar: &Grammar, space: &HypothesisSpace, selected: &[usize]) -> AnnotatedGrammar {
    let mut annotations: Vec<Vec<AnnotationRule>> = vec![Vec::new(); grammar.productions().len()];
    for (production, rule) in &space.scaffolding {
        annotations[*production].push(rule.clone());
    }
    let mut ids: Vec<usize> = selected.to_vec();
    ids.sort_unstable();
    ids.dedup();
    for id in ids {
        let candidate = &space.candidates[id];
        annotations[candidate.production].extend(candidate.rules.iter().cloned());
    }
    AnnotatedGrammar::new(grammar.clone(), annotations)
        .expect("template-generated annotations are well-formed")
}

/// Checks a hypothesis against the example sets via full membership queries.
pub fn covers(asg: &AnnotatedGrammar, examples: &ExampleSet) -> CoverageReport {
    let mut report = CoverageReport::default();
    for text in &examples.positives {
        match asg.member(text) {
            Ok(true) => {}
            Ok(false) => report.positive_failures.push(text.clone()),
            Err(_) => report.undecided.push(text.clone()),
        }
    }
    for text in &examples.negatives {
        match asg.member(text) {
            Ok(false) => {}
            Ok(true) => report.negative_failures.push(text.clone()),
            Err(_) => report.undecided.push(text.clone()),
        }
    }
    report.pass = report.positive_failures.is_empty()
        && report.negative_failures.is_empty()
        && report.undecided.is_empty();
    report
}

/// Precomputed per-example parse trees and per-candidate violation flags:
/// a constraint fires per tree independently of the other constraints, so
/// subset checks reduce to bit tests over the enumerated forest.
struct PreparedExample {
    positive: bool,
    complete: bool,
    tree_count: usize,
    /// fires[candidate][tree]: candidate's constraint violates that tree.
    fires: Vec<Vec<bool>>,
}

impl PreparedExample {
    /// Mirrors `member` over the prepared forest: does a tree satisfying
    /// every candidate in `selected` exist?
    fn has_satisfying_tree(&self, selected: &[usize]) -> bool {
        (0..self.tree_count).any(|t| selected.iter().all(|&c| !self.fires[c][t]))
    }

    /// Same pass/fail semantics as [`covers`]: positives need a satisfying
    /// tree; negatives need a provably empty satisfying set.
    fn passes(&self, selected: &[usize]) -> bool {
        let satisfying = self.has_satisfying_tree(selected);
        if self.positive {
            satisfying
        } else {
            !satisfying && self.complete
        }
    }
}

/// Learns a minimal-cost covering hypothesis.
///
/// Candidates individually rejecting a positive example are excluded up
/// front (rejection is monotone in the selected set, so they can never be
/// repaired). Subsets of the remaining candidates are then enumerated in
/// nondecreasing total cost with lexicographic id order breaking ties; the
/// first covering subset is returned and re-verified with full membership
/// queries.
pub fn learn(
    grammar: &Grammar,
    space: &HypothesisSpace,
    examples: &ExampleSet,
) -> Result<Hypothesis, LearnError> {
    if let Some(text) = examples.positives.intersection(&examples.negatives).next() {
        return Err(LearnError::OverlappingExamples { text: text.clone() });
    }

    let prepared = prepare(grammar, space, examples);
    let candidate_count = space.candidates.len();

    // A positive a candidate rejects on its own stays rejected under every
    // superset; such candidates leave the search space entirely.
    let viable: Vec<usize> = (0..candidate_count)
        .filter(|&c| {
            prepared
                .iter()
                .filter(|e| e.positive)
                .all(|e| e.passes(&[c]))
        })
        .collect();

    let max_cost: usize = viable.iter().map(|&c| space.candidates[c].cost).sum();
    let mut best: Option<(usize, Vec<usize>)> = None;
    let score =
        |selected: &[usize]| -> usize { prepared.iter().filter(|e| e.passes(selected)).count() };

    for budget in 0..=max_cost {
        let mut stack: Vec<usize> = Vec::new();
        if let Some(found) = search(
            space,
            &prepared,
            &viable,
            0,
            budget,
            &mut stack,
            &mut |sel| {
                let passed = score(sel);
                match &best {
                    Some((best_passed, _)) if *best_passed >= passed => {}
                    _ => best = Some((passed, sel.to_vec())),
                }
                passed == prepared.len()
            },
        ) {
            let hypothesis = Hypothesis {
                asg: induce(grammar, space, &found),
                selected: found,
            };
            let report = covers(&hypothesis.asg, examples);
            assert!(
                report.pass,
                "search accepted a hypothesis the membership check rejects"
            );
            return Ok(hypothesis);
        }
    }

    let selected = best.map(|(_, sel)| sel).unwrap_or_default();
    let hypothesis = Hypothesis {
        asg: induce(grammar, space, &selected),
        selected,
    };
    let report = covers(&hypothesis.asg, examples);
    Err(LearnError::Unsatisfiable {
        best: Box::new(hypothesis),
        report,
    })
}

fn prepare(
    grammar: &Grammar,
    space: &HypothesisSpace,
    examples: &ExampleSet,
) -> Vec<PreparedExample> {
    let singles: Vec<AnnotatedGrammar> = (0..space.candidates.len())
        .map(|c| induce(grammar, space, &[c]))
        .collect();
    let cap = crate::asg::DEFAULT_FOREST_CAP;
    let mut prepared = Vec::new();
    for (texts, positive) in [(&examples.positives, true), (&examples.negatives, false)] {
        for text in texts {
            let forest = grammar.parse_forest(text, cap).ok();
            let (trees, complete) = match &forest {
                Some(f) => (f.trees.as_slice(), f.complete),
                None => (&[][..], true),
            };
            let fires = singles
                .iter()
                .map(|asg| {
                    trees
                        .iter()
                        .map(|t| {
                            asg.evaluate_tree(t)
                                .expect("forest trees match the grammar")
                                .violated
                        })
                        .collect()
                })
                .collect();
            prepared.push(PreparedExample {
                positive,
                complete,
                tree_count: trees.len(),
                fires,
            });
        }
    }
    prepared
}

/// Depth-first enumeration of subsets of `viable` with total cost exactly
/// `budget`, in lexicographic id order. `check` returns true to accept.
fn search(
    space: &HypothesisSpace,
    prepared: &[PreparedExample],
    viable: &[usize],
    from: usize,
    budget: usize,
    stack: &mut Vec<usize>,
    check: &mut dyn FnMut(&[usize]) -> bool,
) -> Option<Vec<usize>> {
    if budget == 0 {
        if check(stack) {
            return Some(stack.clone());
        }
        return None;
    }
    for index in from..viable.len() {
        let candidate = viable[index];
        let cost = space.candidates[candidate].cost;
        if cost > budget {
            continue;
        }
        stack.push(candidate);
        // Monotone prune: a positive already rejected by the partial set
        // stays rejected in every superset.
        let positives_ok = prepared
            .iter()
            .filter(|e| e.positive)
            .all(|e| e.has_satisfying_tree(stack));
        let found = if positives_ok {
            search(
                space,
                prepared,
                viable,
                index + 1,
                budget - cost,
                stack,
                check,
            )
        } else {
            None
        };
        stack.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Renders the learning task as text for offline cross-validation with an
/// external ILP solver: the scaffolding-annotated grammar, the candidate
/// pool, and the labeled examples.
pub fn export_task(grammar: &Grammar, space: &HypothesisSpace, examples: &ExampleSet) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    out.push_str("% annotated base grammar (measurement scaffolding only)\n");
    let scaffold_asg = induce(grammar, space, &[]);
    for line in scaffold_asg.to_string().lines() {
        let _ = writeln!(out, "% {line}");
    }
    out.push_str("%% search space\n");
    for candidate in &space.candidates {
        let rules: Vec<String> = candidate.rules.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(
            out,
            "%% candidate {} cost {} production {} : {}",
            candidate.id,
            candidate.cost,
            candidate.production,
            rules.join(" ")
        );
    }
    for text in &examples.positives {
        let _ = writeln!(out, "#pos(\"{text}\").");
    }
    for text in &examples.negatives {
        let _ = writeln!(out, "#neg(\"{text}\").");
    }
    out
}
