//! Bounded language-equivalence between two annotated grammars.
//!
//! Walks every string over the shared alphabet up to the length bound,
//! pruning branches that are CFG-viable in neither grammar, and compares
//! membership. Returns at most ten counterexamples; membership queries that
//! exhaust the forest cap are reported separately as undecided.

use serde::Serialize;

use crate::asg::AnnotatedGrammar;
use crate::grammar::Chart;

/// One string the two grammars disagree on.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Counterexample {
    pub text: String,
    pub in_a: bool,
    pub in_b: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct EquivReport {
    pub lmax: usize,
    pub equivalent: bool,
    pub counterexamples: Vec<Counterexample>,
    pub undecided: Vec<String>,
}

const MAX_COUNTEREXAMPLES: usize = 10;

/// Compares `a` and `b` on every string of length ≤ `lmax`.
pub fn equivalence_check(a: &AnnotatedGrammar, b: &AnnotatedGrammar, lmax: usize) -> EquivReport {
    let mut alphabet: Vec<char> = a
        .grammar()
        .terminals()
        .union(b.grammar().terminals())
        .copied()
        .collect();
    alphabet.sort_unstable();

    let mut report = EquivReport {
        lmax,
        equivalent: true,
        counterexamples: Vec::new(),
        undecided: Vec::new(),
    };
    let mut chart_a = Chart::new(a.grammar());
    let mut chart_b = Chart::new(b.grammar());
    let mut text = String::new();
    walk(
        a,
        b,
        &alphabet,
        lmax,
        &mut chart_a,
        true,
        &mut chart_b,
        true,
        &mut text,
        &mut report,
    );
    report.equivalent = report.counterexamples.is_empty() && report.undecided.is_empty();
    report
}

#[allow(clippy::too_many_arguments)]
fn walk(
    a: &AnnotatedGrammar,
    b: &AnnotatedGrammar,
    alphabet: &[char],
    remaining: usize,
    chart_a: &mut Chart,
    live_a: bool,
    chart_b: &mut Chart,
    live_b: bool,
    text: &mut String,
    report: &mut EquivReport,
) {
    if report.counterexamples.len() >= MAX_COUNTEREXAMPLES {
        return;
    }
    let member_a = if live_a && chart_a.accepts() {
        a.member(text)
    } else {
        Ok(false)
    };
    let member_b = if live_b && chart_b.accepts() {
        b.member(text)
    } else {
        Ok(false)
    };
    match (member_a, member_b) {
        (Ok(in_a), Ok(in_b)) => {
            if in_a != in_b {
                report.counterexamples.push(Counterexample {
                    text: text.clone(),
                    in_a,
                    in_b,
                });
            }
        }
        _ => report.undecided.push(text.clone()),
    }
    if remaining == 0 {
        return;
    }
    for &c in alphabet {
        let save_a = chart_a.columns();
        let save_b = chart_b.columns();
        let next_a = live_a && chart_a.advance(c);
        let next_b = live_b && chart_b.advance(c);
        if next_a || next_b {
            text.push(c);
            walk(
                a,
                b,
                alphabet,
                remaining - 1,
                chart_a,
                next_a,
                chart_b,
                next_b,
                text,
                report,
            );
            text.pop();
        }
        chart_a.truncate(save_a);
        chart_b.truncate(save_b);
    }
}
