//! Context-free grammar representation and chart-based recognition.
//!
//! Grammars are character-level: terminals are single characters, and the
//! decoder vocabulary on top of them is a separate set of (possibly
//! multi-character) token strings. Recognition, prefix viability and
//! next-token masking all run on an Earley chart so that ambiguous and
//! ε-rich grammars work without any grammar transformation.

mod chart;
mod forest;
pub(crate) mod parse;

pub use chart::Chart;
pub use parse::strip_annotations;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Index of a nonterminal in [`Grammar::nonterminals`].
pub type NonterminalId = usize;
/// Index of a production in [`Grammar::productions`]. Stable across the
/// grammar's lifetime: annotation `@k` references and parse-tree nodes
/// depend on it.
pub type ProductionId = usize;
/// Index of a token in a [`Vocabulary`].
pub type TokenId = usize;

/// One symbol in a production body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Nonterminal(NonterminalId),
    Terminal(char),
}

/// A production `head -> body`. An empty body is an ε-production.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub head: NonterminalId,
    pub body: Vec<Symbol>,
}

/// Errors raised while reading a grammar (or annotated grammar) source file.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undefined nonterminal `{name}` at line {line}")]
    UndefinedNonterminal { name: String, line: usize },
    #[error("grammar has no productions")]
    EmptyGrammar,
    #[error("annotation at line {line} references child @{child} but production `{head}` has {arity} body symbols")]
    ChildOutOfRange {
        line: usize,
        child: usize,
        head: String,
        arity: usize,
    },
    #[error("unsafe variable `{variable}` at line {line}: every variable must occur in a positive body literal")]
    UnsafeVariable { variable: String, line: usize },
    #[error("negated literal without a child scope at line {line}: negation is only defined over child atoms")]
    LocalNegation { line: usize },
    #[error("predicate `{predicate}` used with arities {first} and {second}")]
    ArityMismatch {
        predicate: String,
        first: usize,
        second: usize,
    },
}

/// The prefix handed to [`Grammar::valid_next_tokens`] was not viable.
/// During decoding this means the caller's state is corrupt: a constrained
/// sampler only ever extends viable prefixes.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("prefix {0:?} is not a viable prefix of the grammar's language")]
pub struct NonViablePrefix(pub String);

/// Requested a parse forest for a string outside the language.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("string {0:?} is not in the grammar's language")]
pub struct NotInLanguage(pub String);

/// A context-free grammar ⟨N, T, P, S⟩ with derived tables used by the
/// recognizer. Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Grammar {
    names: Vec<String>,
    terminals: BTreeSet<char>,
    productions: Vec<Production>,
    start: NonterminalId,
    by_head: Vec<Vec<ProductionId>>,
    nullable: Vec<bool>,
    productive: Vec<bool>,
    /// Production is usable by the recognizer: every body symbol can derive
    /// some terminal string. Unusable productions generate nothing, so
    /// skipping them at prediction time preserves the language and makes
    /// "chart column nonempty" equivalent to prefix viability.
    predictable: Vec<bool>,
    min_len: Vec<usize>,
}

impl Grammar {
    /// Builds a grammar from parts, computing the derived tables.
    /// `names[start]` is the start symbol; production order is preserved.
    pub fn from_parts(
        names: Vec<String>,
        productions: Vec<Production>,
        start: NonterminalId,
    ) -> Result<Self, ParseError> {
        if productions.is_empty() {
            return Err(ParseError::EmptyGrammar);
        }
        assert!(start < names.len(), "start symbol out of range");
        let mut terminals = BTreeSet::new();
        let mut by_head = vec![Vec::new(); names.len()];
        for (idx, p) in productions.iter().enumerate() {
            assert!(p.head < names.len(), "production head out of range");
            by_head[p.head].push(idx);
            for sym in &p.body {
                match *sym {
                    Symbol::Terminal(c) => {
                        terminals.insert(c);
                    }
                    Symbol::Nonterminal(n) => {
                        assert!(n < names.len(), "body nonterminal out of range")
                    }
                }
            }
        }
        let mut g = Grammar {
            names,
            terminals,
            productions,
            start,
            by_head,
            nullable: Vec::new(),
            productive: Vec::new(),
            predictable: Vec::new(),
            min_len: Vec::new(),
        };
        g.compute_tables();
        Ok(g)
    }

    /// Parses the grammar file format: one `head -> body` statement per line
    /// (continuation lines may start with `|`), quoted terminals,
    /// `|`-separated alternatives, empty body for ε, `#` comments.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse::parse_grammar(text)
    }

    fn compute_tables(&mut self) {
        let n = self.names.len();
        // Nullability: fixpoint over productions whose body is all-nullable.
        let mut nullable = vec![false; n];
        loop {
            let mut changed = false;
            for p in &self.productions {
                if !nullable[p.head]
                    && p.body.iter().all(|s| match *s {
                        Symbol::Terminal(_) => false,
                        Symbol::Nonterminal(b) => nullable[b],
                    })
                {
                    nullable[p.head] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        // Minimum derivable length per nonterminal (usize::MAX = nonproductive).
        let mut min_len = vec![usize::MAX; n];
        loop {
            let mut changed = false;
            for p in &self.productions {
                let mut total = 0usize;
                let mut ok = true;
                for s in &p.body {
                    match *s {
                        Symbol::Terminal(_) => total += 1,
                        Symbol::Nonterminal(b) => {
                            if min_len[b] == usize::MAX {
                                ok = false;
                                break;
                            }
                            total += min_len[b];
                        }
                    }
                }
                if ok && total < min_len[p.head] {
                    min_len[p.head] = total;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let productive: Vec<bool> = min_len.iter().map(|&m| m != usize::MAX).collect();
        let predictable: Vec<bool> = self
            .productions
            .iter()
            .map(|p| {
                p.body.iter().all(|s| match *s {
                    Symbol::Terminal(_) => true,
                    Symbol::Nonterminal(b) => productive[b],
                })
            })
            .collect();
        self.nullable = nullable;
        self.min_len = min_len;
        self.productive = productive;
        self.predictable = predictable;
    }

    pub fn start(&self) -> NonterminalId {
        self.start
    }

    pub fn nonterminal_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, id: NonterminalId) -> &str {
        &self.names[id]
    }

    pub fn nonterminal(&self, name: &str) -> Option<NonterminalId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn terminals(&self) -> &BTreeSet<char> {
        &self.terminals
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, id: ProductionId) -> &Production {
        &self.productions[id]
    }

    pub fn productions_of(&self, head: NonterminalId) -> &[ProductionId] {
        &self.by_head[head]
    }

    pub(crate) fn is_nullable(&self, id: NonterminalId) -> bool {
        self.nullable[id]
    }

    pub(crate) fn is_predictable(&self, prod: ProductionId) -> bool {
        self.predictable[prod]
    }

    pub(crate) fn min_len_of(&self, id: NonterminalId) -> usize {
        self.min_len[id]
    }

    /// Membership: true iff `w` ∈ L(G). Strings containing characters
    /// outside the terminal alphabet are simply not members.
    pub fn recognize(&self, w: &str) -> bool {
        let mut chart = Chart::new(self);
        for c in w.chars() {
            if !chart.advance(c) {
                return false;
            }
        }
        chart.accepts()
    }

    /// Prefix viability: true iff some member of the language starts with `p`.
    pub fn viable_prefix(&self, p: &str) -> bool {
        let mut chart = Chart::new(self);
        for c in p.chars() {
            if !chart.advance(c) {
                return false;
            }
        }
        chart.live()
    }

    /// The valid-next-token set for prefix `p`: a token is allowed iff the
    /// prefix extended by its text is still viable, and the end marker is
    /// allowed iff `p` itself is a member. Tokens are checked character by
    /// character against the live chart rather than re-parsed from scratch.
    pub fn valid_next_tokens(
        &self,
        p: &str,
        vocabulary: &Vocabulary,
    ) -> Result<TokenMask, NonViablePrefix> {
        let mut chart = Chart::new(self);
        for c in p.chars() {
            if !chart.advance(c) {
                return Err(NonViablePrefix(p.to_string()));
            }
        }
        if !chart.live() {
            return Err(NonViablePrefix(p.to_string()));
        }
        let mut mask = TokenMask::default();
        mask.set_allow_end(chart.accepts());
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
                mask.allowed.insert(id);
            }
            chart.truncate(base);
        }
        Ok(mask)
    }

    /// Enumerates distinct parse trees of `w`, at most `cap`, in a
    /// deterministic order (production index first, then split lengths,
    /// leftmost child varying slowest). `complete` is false when the cap cut
    /// the enumeration short. Derivations that revisit a nonterminal over the
    /// same span are pruned, so cyclic grammars yield finitely many trees.
    pub fn parse_forest(&self, w: &str, cap: usize) -> Result<Forest, NotInLanguage> {
        if !self.recognize(w) {
            return Err(NotInLanguage(w.to_string()));
        }
        Ok(forest::enumerate(self, w, cap))
    }
}

impl fmt::Display for Grammar {
    /// Writes the grammar back in its file format. Consecutive productions
    /// with the same head are grouped into one `|`-separated statement so
    /// production indices survive a round-trip.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut i = 0;
        while i < self.productions.len() {
            let head = self.productions[i].head;
            let mut alts = Vec::new();
            while i < self.productions.len() && self.productions[i].head == head {
                alts.push(body_text(self, &self.productions[i].body));
                i += 1;
            }
            writeln!(f, "{} -> {}", self.names[head], alts.join(" | "))?;
        }
        Ok(())
    }
}

pub(crate) fn body_text(g: &Grammar, body: &[Symbol]) -> String {
    body.iter()
        .map(|s| match *s {
            Symbol::Terminal(c) => format!("\"{c}\""),
            Symbol::Nonterminal(n) => g.name(n).to_string(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// A decoder token: a nonempty string over the grammar alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, VocabularyError> {
        let text = text.into();
        if text.is_empty() {
            return Err(VocabularyError::EmptyToken);
        }
        Ok(Token(text))
    }

    pub fn text(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabularyError {
    #[error("tokens must be nonempty strings")]
    EmptyToken,
    #[error("duplicate token {0:?}")]
    DuplicateToken(String),
    #[error("token {token:?} uses character {ch:?} outside the grammar alphabet")]
    ForeignCharacter { token: String, ch: char },
}

/// An ordered set of distinct tokens plus the implicit end-of-sequence
/// marker. Entry order is token order followed by the end marker; samplers
/// rely on that order for tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<Token>,
}

impl Vocabulary {
    pub fn new<I, S>(texts: I) -> Result<Self, VocabularyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = BTreeSet::new();
        let mut tokens = Vec::new();
        for t in texts {
            let token = Token::new(t)?;
            if !seen.insert(token.text().to_string()) {
                return Err(VocabularyError::DuplicateToken(token.text().to_string()));
            }
            tokens.push(token);
        }
        Ok(Vocabulary { tokens })
    }

    /// Verifies every token is a string over the grammar's terminal alphabet.
    pub fn check_alphabet(&self, g: &Grammar) -> Result<(), VocabularyError> {
        for t in &self.tokens {
            for ch in t.text().chars() {
                if !g.terminals().contains(&ch) {
                    return Err(VocabularyError::ForeignCharacter {
                        token: t.text().to_string(),
                        ch,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token_text(&self, id: TokenId) -> &str {
        self.tokens[id].text()
    }

    /// Number of scorable entries: every token plus the end marker.
    pub fn entry_count(&self) -> usize {
        self.tokens.len() + 1
    }
}

/// The set of entries a constraint function allows next: some subset of the
/// vocabulary tokens, plus optionally the end marker.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenMask {
    allowed: BTreeSet<TokenId>,
    allow_end: bool,
}

impl TokenMask {
    pub fn allow(&mut self, id: TokenId) {
        self.allowed.insert(id);
    }

    pub fn set_allow_end(&mut self, allow: bool) {
        self.allow_end = allow;
    }

    pub fn contains(&self, id: TokenId) -> bool {
        self.allowed.contains(&id)
    }

    pub fn allows_end(&self) -> bool {
        self.allow_end
    }

    pub fn tokens(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.allowed.iter().copied()
    }

    pub fn token_count(&self) -> usize {
        self.allowed.len()
    }

    /// True when neither a token nor the end marker is allowed.
    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty() && !self.allow_end
    }
}

/// One node of a parse tree: the production applied and its children,
/// aligned one-to-one with the production body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    pub production: ProductionId,
    pub children: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    Leaf(char),
    Node(ParseTree),
}

impl ParseTree {
    /// Left-to-right concatenation of terminal leaves.
    pub fn yield_string(&self) -> String {
        let mut out = String::new();
        self.collect_yield(&mut out);
        out
    }

    fn collect_yield(&self, out: &mut String) {
        for child in &self.children {
            match child {
                TreeNode::Leaf(c) => out.push(*c),
                TreeNode::Node(t) => t.collect_yield(out),
            }
        }
    }
}

/// Result of parse-forest extraction. `complete` is false when the tree cap
/// was hit before the enumeration finished.
#[derive(Debug, Clone)]
pub struct Forest {
    pub trees: Vec<ParseTree>,
    pub complete: bool,
}
