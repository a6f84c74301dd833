//! Shared brute-force oracles for the integration and acceptance suites.
//!
//! Everything here is deliberately independent of the library's recognizer:
//! words are enumerated by a set-valued fixpoint over productions, and
//! viable prefixes by a breadth-first walk over leftmost sentential forms.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use asglearn::grammar::{Grammar, Production, Symbol};

/// Deterministic test RNG (xorshift-free, mirrors splitmix64).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }
}

/// All words of L(g) with length ≤ `maxlen`, by fixpoint over per-nonterminal
/// word sets. Word sets are indexed by length so concatenation only visits
/// feasible combinations, and a production is only re-evaluated when one of
/// its body sets changed.
pub fn words_up_to(g: &Grammar, maxlen: usize) -> BTreeSet<String> {
    let n = g.nonterminal_count();
    // by_len[nt][len] = words of that exact length.
    let mut by_len: Vec<Vec<BTreeSet<String>>> = vec![vec![BTreeSet::new(); maxlen + 1]; n];
    let mut dirty = vec![true; n];
    let mut first_pass = true;
    loop {
        let mut grew = vec![false; n];
        for production in g.productions() {
            let depends_on_dirty = first_pass
                || production.body.iter().any(|s| match s {
                    Symbol::Terminal(_) => false,
                    Symbol::Nonterminal(b) => dirty[*b],
                });
            if !depends_on_dirty {
                continue;
            }
            let mut partials: HashSet<String> = HashSet::new();
            partials.insert(String::new());
            for symbol in &production.body {
                let mut next = HashSet::new();
                match symbol {
                    Symbol::Terminal(c) => {
                        for p in &partials {
                            if p.len() < maxlen {
                                let mut q = p.clone();
                                q.push(*c);
                                next.insert(q);
                            }
                        }
                    }
                    Symbol::Nonterminal(b) => {
                        for p in &partials {
                            for bucket in &by_len[*b][..=maxlen - p.len()] {
                                for w in bucket {
                                    next.insert(format!("{p}{w}"));
                                }
                            }
                        }
                    }
                }
                partials = next;
                if partials.is_empty() {
                    break;
                }
            }
            for w in partials {
                let len = w.len();
                if by_len[production.head][len].insert(w) {
                    grew[production.head] = true;
                }
            }
        }
        if grew.iter().all(|&g| !g) {
            let mut out = BTreeSet::new();
            for bucket in &by_len[g.start()] {
                out.extend(bucket.iter().cloned());
            }
            return out;
        }
        dirty = grew;
        first_pass = false;
    }
}

/// Exact set of viable prefixes of L(g) with length ≤ `maxlen`, by BFS over
/// leftmost sentential forms. Forms are truncated once their leading symbols
/// already guarantee `maxlen` characters, and only productive symbols are
/// ever kept, so every reached state witnesses a full word. Returns `None`
/// if the walk exceeds `state_budget` states (pathological grammar).
pub fn viable_prefixes_up_to(
    g: &Grammar,
    maxlen: usize,
    state_budget: usize,
) -> Option<BTreeSet<String>> {
    let n = g.nonterminal_count();
    // Independent productivity and min-yield computation.
    let mut min_yield = vec![usize::MAX; n];
    loop {
        let mut changed = false;
        for p in g.productions() {
            let mut total = 0usize;
            let mut ok = true;
            for s in &p.body {
                match s {
                    Symbol::Terminal(_) => total += 1,
                    Symbol::Nonterminal(b) => {
                        if min_yield[*b] == usize::MAX {
                            ok = false;
                            break;
                        }
                        total += min_yield[*b];
                    }
                }
            }
            if ok && total < min_yield[p.head] {
                min_yield[p.head] = total;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let productive = |s: &Symbol| match s {
        Symbol::Terminal(_) => true,
        Symbol::Nonterminal(b) => min_yield[*b] != usize::MAX,
    };

    let mut out = BTreeSet::new();
    if min_yield[g.start()] == usize::MAX {
        return Some(out); // empty language, no viable prefixes
    }
    let truncate_form = |emitted_len: usize, form: &[Symbol]| -> Vec<Symbol> {
        let allowance = maxlen - emitted_len;
        let mut kept = Vec::new();
        let mut guaranteed = 0usize;
        for s in form {
            kept.push(*s);
            guaranteed += match s {
                Symbol::Terminal(_) => 1,
                Symbol::Nonterminal(b) => min_yield[*b],
            };
            if guaranteed >= allowance {
                break;
            }
        }
        kept
    };

    // Nullable-heavy grammars can grow sentential forms without bound (a
    // chain of zero-min-yield symbols is never truncated); treat those as
    // pathological rather than letting memory grow quadratically.
    let max_form_len = 4 * (maxlen + 2);
    let start_form = vec![Symbol::Nonterminal(g.start())];
    let mut queue: VecDeque<(String, Vec<Symbol>)> = VecDeque::new();
    let mut visited: HashSet<(String, Vec<Symbol>)> = HashSet::new();
    let initial = (String::new(), truncate_form(0, &start_form));
    visited.insert(initial.clone());
    queue.push_back(initial);
    while let Some((emitted, form)) = queue.pop_front() {
        if visited.len() > state_budget || form.len() > max_form_len {
            return None;
        }
        out.insert(emitted.clone());
        if emitted.len() >= maxlen {
            continue;
        }
        match form.first() {
            None => {}
            Some(Symbol::Terminal(c)) => {
                let mut next_emitted = emitted.clone();
                next_emitted.push(*c);
                let rest = truncate_form(next_emitted.len(), &form[1..]);
                let state = (next_emitted, rest);
                if visited.insert(state.clone()) {
                    queue.push_back(state);
                }
            }
            Some(Symbol::Nonterminal(b)) => {
                for &pid in g.productions_of(*b) {
                    let body = &g.production(pid).body;
                    if !body.iter().all(productive) {
                        continue;
                    }
                    let mut next_form: Vec<Symbol> = Vec::with_capacity(body.len() + form.len());
                    next_form.extend_from_slice(body);
                    next_form.extend_from_slice(&form[1..]);
                    let state = (emitted.clone(), truncate_form(emitted.len(), &next_form));
                    if visited.insert(state.clone()) {
                        queue.push_back(state);
                    }
                }
            }
        }
    }
    Some(out)
}

/// A random small grammar: up to 4 nonterminals, up to 8 productions,
/// bodies of length ≤ 3 over `alphabet`. Production 0 always belongs to the
/// start symbol.
pub fn random_grammar(rng: &mut TestRng, alphabet: &[char]) -> Grammar {
    let nonterminals = 1 + rng.below(4);
    let production_count = 1 + rng.below(8);
    let names: Vec<String> = (0..nonterminals).map(|i| format!("n{i}")).collect();
    let mut productions = Vec::new();
    for index in 0..production_count {
        let head = if index == 0 {
            0
        } else {
            rng.below(nonterminals)
        };
        let body_len = rng.below(4);
        let mut body = Vec::new();
        for _ in 0..body_len {
            if rng.below(2) == 0 {
                body.push(Symbol::Terminal(alphabet[rng.below(alphabet.len())]));
            } else {
                body.push(Symbol::Nonterminal(rng.below(nonterminals)));
            }
        }
        productions.push(Production { head, body });
    }
    Grammar::from_parts(names, productions, 0).expect("generated grammar is nonempty")
}
