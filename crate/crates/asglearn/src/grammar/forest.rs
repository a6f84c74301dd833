//! Parse-forest extraction by recursive span splitting.
//!
//! Enumeration order is deterministic: at each node, productions are tried in
//! index order and span splits in ascending child-length order, with the
//! leftmost child varying slowest. Sub-span forests are memoized and capped
//! at one past the requested limit, which bounds the work on ambiguous
//! grammars while still detecting truncation exactly. An expansion that
//! re-enters a (nonterminal, span) pair still being expanded is pruned, so
//! grammars with unit or ε cycles produce finitely many trees.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use super::{Forest, Grammar, NonterminalId, ParseTree, Symbol, TreeNode};

type SpanKey = (NonterminalId, usize, usize);

struct Enumerator<'g> {
    g: &'g Grammar,
    chars: Vec<char>,
    limit: usize,
    memo: HashMap<SpanKey, Rc<Vec<ParseTree>>>,
    in_progress: HashSet<SpanKey>,
}

pub(super) fn enumerate(g: &Grammar, w: &str, cap: usize) -> Forest {
    let mut e = Enumerator {
        g,
        chars: w.chars().collect(),
        limit: cap.saturating_add(1),
        memo: HashMap::new(),
        in_progress: HashSet::new(),
    };
    let len = e.chars.len();
    let mut trees = (*e.span_forest(g.start(), 0, len)).clone();
    let complete = trees.len() <= cap;
    trees.truncate(cap);
    Forest { trees, complete }
}

impl Enumerator<'_> {
    /// The first `limit` parses of `chars[from..to]` rooted at `nt`.
    fn span_forest(&mut self, nt: NonterminalId, from: usize, to: usize) -> Rc<Vec<ParseTree>> {
        let key = (nt, from, to);
        if let Some(found) = self.memo.get(&key) {
            return found.clone();
        }
        if !self.in_progress.insert(key) {
            // Cycle: this span is already being expanded higher up the stack.
            return Rc::new(Vec::new());
        }
        let mut trees = Vec::new();
        for pi in 0..self.g.productions_of(nt).len() {
            if trees.len() >= self.limit {
                break;
            }
            let prod = self.g.productions_of(nt)[pi];
            if !self.g.is_predictable(prod) {
                continue;
            }
            let mut children = Vec::new();
            self.expand_body(prod, 0, from, to, &mut children, &mut trees);
        }
        trees.truncate(self.limit);
        self.in_progress.remove(&key);
        let rc = Rc::new(trees);
        self.memo.insert(key, rc.clone());
        rc
    }

    /// Matches body symbols `pos..` of `prod` against `chars[from..to]`,
    /// extending `children` in place (restored on backtrack).
    fn expand_body(
        &mut self,
        prod: usize,
        pos: usize,
        from: usize,
        to: usize,
        children: &mut Vec<TreeNode>,
        out: &mut Vec<ParseTree>,
    ) {
        if out.len() >= self.limit {
            return;
        }
        let body = &self.g.production(prod).body;
        if pos == body.len() {
            if from == to {
                out.push(ParseTree {
                    production: prod,
                    children: children.clone(),
                });
            }
            return;
        }
        match body[pos] {
            Symbol::Terminal(t) => {
                if from < to && self.chars[from] == t {
                    children.push(TreeNode::Leaf(t));
                    self.expand_body(prod, pos + 1, from + 1, to, children, out);
                    children.pop();
                }
            }
            Symbol::Nonterminal(b) => {
                let rest_min: usize = self.g.production(prod).body[pos + 1..]
                    .iter()
                    .map(|s| match *s {
                        Symbol::Terminal(_) => 1,
                        Symbol::Nonterminal(n) => self.g.min_len_of(n),
                    })
                    .sum();
                let child_min = self.g.min_len_of(b);
                if child_min == usize::MAX || rest_min > to - from {
                    return;
                }
                let max_take = (to - from) - rest_min;
                for take in child_min..=max_take {
                    if out.len() >= self.limit {
                        return;
                    }
                    let mid = from + take;
                    let sub = self.span_forest(b, from, mid);
                    for tree in sub.iter() {
                        if out.len() >= self.limit {
                            return;
                        }
                        children.push(TreeNode::Node(tree.clone()));
                        self.expand_body(prod, pos + 1, mid, to, children, out);
                        children.pop();
                    }
                }
            }
        }
    }
}
