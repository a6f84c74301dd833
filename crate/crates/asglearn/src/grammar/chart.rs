//! Earley chart with incremental extension and rollback.
//!
//! Columns are append-only: predicting and completing only ever add items to
//! the column being processed, so a caller can extend the chart by a few
//! characters (to probe a candidate token) and then truncate back to the
//! saved column count. Only productions whose body symbols are all productive
//! are predicted; with that pruning, every chart item can be extended to a
//! full word, which makes "last column nonempty" exactly prefix viability.

use std::collections::HashSet;

use super::{Grammar, ProductionId, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Item {
    prod: ProductionId,
    dot: usize,
    origin: usize,
}

/// Per-call recognizer state for one prefix; not shared between threads.
pub struct Chart<'g> {
    g: &'g Grammar,
    columns: Vec<Vec<Item>>,
}

impl<'g> Chart<'g> {
    /// Seeds column 0 with the start productions and closes it.
    pub fn new(g: &'g Grammar) -> Self {
        let mut chart = Chart {
            g,
            columns: Vec::new(),
        };
        let mut col = Vec::new();
        let mut seen = HashSet::new();
        for &p in g.productions_of(g.start()) {
            if g.is_predictable(p) {
                let item = Item {
                    prod: p,
                    dot: 0,
                    origin: 0,
                };
                if seen.insert(item) {
                    col.push(item);
                }
            }
        }
        chart.close(&mut col, &mut seen, 0);
        chart.columns.push(col);
        chart
    }

    /// Number of characters consumed so far (also: index of the last column).
    pub fn consumed(&self) -> usize {
        self.columns.len() - 1
    }

    /// Opaque save point for [`Chart::truncate`].
    pub fn columns(&self) -> usize {
        self.columns.len()
    }

    /// Rolls the chart back to a prior save point.
    pub fn truncate(&mut self, columns: usize) {
        debug_assert!(columns >= 1 && columns <= self.columns.len());
        self.columns.truncate(columns);
    }

    /// Scans one character. Returns false (and appends nothing) if the
    /// resulting column is empty, i.e. the extended prefix is not viable.
    pub fn advance(&mut self, c: char) -> bool {
        let idx = self.columns.len();
        let prev = &self.columns[idx - 1];
        let mut col = Vec::new();
        let mut seen = HashSet::new();
        for item in prev {
            let body = &self.g.production(item.prod).body;
            if item.dot < body.len() {
                if let Symbol::Terminal(t) = body[item.dot] {
                    if t == c {
                        let next = Item {
                            prod: item.prod,
                            dot: item.dot + 1,
                            origin: item.origin,
                        };
                        if seen.insert(next) {
                            col.push(next);
                        }
                    }
                }
            }
        }
        if col.is_empty() {
            return false;
        }
        self.close(&mut col, &mut seen, idx);
        self.columns.push(col);
        true
    }

    /// True iff the consumed prefix is viable (some word extends it).
    pub fn live(&self) -> bool {
        !self.columns.last().expect("chart has a column").is_empty()
    }

    /// True iff the consumed prefix is itself a member of the language.
    pub fn accepts(&self) -> bool {
        let g = self.g;
        self.columns
            .last()
            .expect("chart has a column")
            .iter()
            .any(|item| {
                item.origin == 0
                    && g.production(item.prod).head == g.start()
                    && item.dot == g.production(item.prod).body.len()
            })
    }

    /// The set of terminal characters scannable from the last column.
    pub fn next_chars(&self) -> Vec<char> {
        let mut out: Vec<char> = Vec::new();
        for item in self.columns.last().expect("chart has a column") {
            let body = &self.g.production(item.prod).body;
            if item.dot < body.len() {
                if let Symbol::Terminal(t) = body[item.dot] {
                    if !out.contains(&t) {
                        out.push(t);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Prediction / completion closure of `col` at column index `idx`.
    /// Nullable prediction uses the Aycock–Horspool fix: predicting a
    /// nullable nonterminal also advances the predicting item directly.
    fn close(&self, col: &mut Vec<Item>, seen: &mut HashSet<Item>, idx: usize) {
        let g = self.g;
        let mut cursor = 0;
        while cursor < col.len() {
            let item = col[cursor];
            cursor += 1;
            let body = &g.production(item.prod).body;
            if item.dot == body.len() {
                // Complete: advance items in the origin column waiting on this
                // head. A completion with origin == idx derived ε, which the
                // nullable-prediction fix below already accounts for.
                if item.origin == idx {
                    continue;
                }
                let head = g.production(item.prod).head;
                for parent_ix in 0..self.columns[item.origin].len() {
                    let parent = self.columns[item.origin][parent_ix];
                    let pbody = &g.production(parent.prod).body;
                    if parent.dot < pbody.len() && pbody[parent.dot] == Symbol::Nonterminal(head) {
                        let next = Item {
                            prod: parent.prod,
                            dot: parent.dot + 1,
                            origin: parent.origin,
                        };
                        if seen.insert(next) {
                            col.push(next);
                        }
                    }
                }
            } else if let Symbol::Nonterminal(b) = body[item.dot] {
                for &p in g.productions_of(b) {
                    if g.is_predictable(p) {
                        let predicted = Item {
                            prod: p,
                            dot: 0,
                            origin: idx,
                        };
                        if seen.insert(predicted) {
                            col.push(predicted);
                        }
                    }
                }
                if g.is_nullable(b) {
                    let advanced = Item {
                        prod: item.prod,
                        dot: item.dot + 1,
                        origin: item.origin,
                    };
                    if seen.insert(advanced) {
                        col.push(advanced);
                    }
                }
            }
        }
    }
}
