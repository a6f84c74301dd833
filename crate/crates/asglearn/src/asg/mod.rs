//! Annotated grammars: CFG productions carrying logic annotations.
//!
//! The annotation language is the restricted fragment needed for counting
//! constraints: ground facts, definite rules whose head arguments are affine
//! in body variables, child-position lookups (`@k`), negation as failure over
//! child atoms, integer comparisons, and integrity constraints. Children are
//! evaluated before their parent, so negation is stratified by construction
//! and a fixpoint evaluator decides satisfiability without an external
//! solver.

mod eval;
mod mask;
mod parse;

pub use mask::{asg_valid_next_tokens, MaskError};

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::grammar::{Grammar, ParseError, ParseTree, ProductionId};

/// Default bound on the number of parse trees examined per membership query.
pub const DEFAULT_FOREST_CAP: usize = 64;

/// An affine integer term: a constant, a variable, or variable ± constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineTerm {
    pub var: Option<String>,
    pub offset: i64,
}

impl AffineTerm {
    pub fn constant(value: i64) -> Self {
        AffineTerm {
            var: None,
            offset: value,
        }
    }

    pub fn variable(name: impl Into<String>, offset: i64) -> Self {
        AffineTerm {
            var: Some(name.into()),
            offset,
        }
    }
}

impl fmt::Display for AffineTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.var {
            None => write!(f, "{}", self.offset),
            Some(v) if self.offset == 0 => write!(f, "{v}"),
            Some(v) if self.offset > 0 => write!(f, "{v}+{}", self.offset),
            Some(v) => write!(f, "{v}-{}", -self.offset),
        }
    }
}

/// An atom template: predicate applied to affine terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomTemplate {
    pub predicate: String,
    pub args: Vec<AffineTerm>,
}

impl fmt::Display for AtomTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            return write!(f, "{}", self.predicate);
        }
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}({})", self.predicate, args.join(","))
    }
}

/// Where a body literal's atoms are looked up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// The node's own atom set (being computed).
    Local,
    /// A completed child's atom set; 1-based body position.
    Child(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BodyLiteral {
    Atom {
        negated: bool,
        atom: AtomTemplate,
        scope: Scope,
    },
    Compare {
        left: AffineTerm,
        op: CompareOp,
        right: AffineTerm,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    fn eval(self, left: i64, right: i64) -> bool {
        match self {
            CompareOp::Lt => left < right,
            CompareOp::Le => left <= right,
            CompareOp::Gt => left > right,
            CompareOp::Ge => left >= right,
        }
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        };
        write!(f, "{s}")
    }
}

impl fmt::Display for BodyLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyLiteral::Atom {
                negated,
                atom,
                scope,
            } => {
                if *negated {
                    write!(f, "not ")?;
                }
                write!(f, "{atom}")?;
                if let Scope::Child(k) = scope {
                    write!(f, "@{k}")?;
                }
                Ok(())
            }
            BodyLiteral::Compare { left, op, right } => write!(f, "{left} {op} {right}"),
        }
    }
}

/// One annotation: a fact (head only), a rule (head and body), or an
/// integrity constraint (body only — if the body holds, the tree is
/// rejected).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRule {
    pub head: Option<AtomTemplate>,
    pub body: Vec<BodyLiteral>,
}

impl AnnotationRule {
    pub fn fact(head: AtomTemplate) -> Self {
        AnnotationRule {
            head: Some(head),
            body: Vec::new(),
        }
    }

    pub fn rule(head: AtomTemplate, body: Vec<BodyLiteral>) -> Self {
        AnnotationRule {
            head: Some(head),
            body,
        }
    }

    pub fn constraint(body: Vec<BodyLiteral>) -> Self {
        AnnotationRule { head: None, body }
    }

    pub fn is_constraint(&self) -> bool {
        self.head.is_none()
    }

    /// Number of literals (head plus body); the learner's cost unit.
    pub fn literal_count(&self) -> usize {
        self.body.len() + usize::from(self.head.is_some())
    }
}

impl fmt::Display for AnnotationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(head) = &self.head {
            write!(f, "{head}")?;
            if !self.body.is_empty() {
                write!(f, " ")?;
            }
        }
        if !self.body.is_empty() {
            write!(f, ":- ")?;
            let parts: Vec<String> = self.body.iter().map(|l| l.to_string()).collect();
            write!(f, "{}", parts.join(", "))?;
        }
        write!(f, ".")
    }
}

/// A ground atom; the values flowing up the parse tree during evaluation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<i64>,
}

impl GroundAtom {
    pub fn new(predicate: impl Into<String>, args: Vec<i64>) -> Self {
        GroundAtom {
            predicate: predicate.into(),
            args,
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            return write!(f, "{}", self.predicate);
        }
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}({})", self.predicate, args.join(","))
    }
}

/// The evaluated model of one parse-tree node: its atom fixpoint, whether a
/// constraint fired at or below it, and the models of its nonterminal
/// children (terminal leaves carry no model).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeModel {
    pub atoms: BTreeSet<GroundAtom>,
    pub violated: bool,
    pub children: Vec<Option<NodeModel>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AsgError {
    #[error("membership undecided: {cap} parse trees examined without a satisfying one")]
    AmbiguityCapExceeded { cap: usize },
    #[error("evaluation error: {0}")]
    Eval(String),
}

/// A grammar plus per-production annotation rules. Immutable and shareable;
/// evaluation state is per call.
#[derive(Debug, Clone)]
pub struct AnnotatedGrammar {
    grammar: Grammar,
    annotations: Vec<Vec<AnnotationRule>>,
    forest_cap: usize,
}

impl AnnotatedGrammar {
    /// Attaches `annotations[i]` to production `i`, validating child
    /// references, variable safety, negation scoping and predicate arities.
    pub fn new(
        grammar: Grammar,
        annotations: Vec<Vec<AnnotationRule>>,
    ) -> Result<Self, ParseError> {
        let lines = vec![0; annotations.len()];
        Self::new_with_lines(grammar, annotations, lines)
    }

    pub(crate) fn new_with_lines(
        grammar: Grammar,
        annotations: Vec<Vec<AnnotationRule>>,
        lines: Vec<usize>,
    ) -> Result<Self, ParseError> {
        assert_eq!(
            annotations.len(),
            grammar.productions().len(),
            "one annotation list per production"
        );
        let asg = AnnotatedGrammar {
            grammar,
            annotations,
            forest_cap: DEFAULT_FOREST_CAP,
        };
        asg.validate(&lines)?;
        Ok(asg)
    }

    /// Reads the annotated grammar file format (the grammar format plus
    /// `{ ... }` blocks of `.`-terminated rules after each alternative).
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse::parse_asg(text)
    }

    pub fn with_forest_cap(mut self, cap: usize) -> Self {
        self.forest_cap = cap;
        self
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn annotations(&self) -> &[Vec<AnnotationRule>] {
        &self.annotations
    }

    pub fn forest_cap(&self) -> usize {
        self.forest_cap
    }

    fn validate(&self, lines: &[usize]) -> Result<(), ParseError> {
        let mut arities: std::collections::BTreeMap<String, usize> =
            std::collections::BTreeMap::new();
        let mut check_arity = |atom: &AtomTemplate| -> Result<(), ParseError> {
            match arities.get(atom.predicate.as_str()) {
                Some(&a) if a != atom.args.len() => Err(ParseError::ArityMismatch {
                    predicate: atom.predicate.clone(),
                    first: a,
                    second: atom.args.len(),
                }),
                Some(_) => Ok(()),
                None => {
                    arities.insert(atom.predicate.clone(), atom.args.len());
                    Ok(())
                }
            }
        };
        for (prod_id, rules) in self.annotations.iter().enumerate() {
            let line = lines.get(prod_id).copied().unwrap_or(0);
            let arity = self.grammar.production(prod_id).body.len();
            for rule in rules {
                let mut positive_vars: BTreeSet<&str> = BTreeSet::new();
                for lit in &rule.body {
                    if let BodyLiteral::Atom {
                        negated,
                        atom,
                        scope,
                        ..
                    } = lit
                    {
                        check_arity(atom)?;
                        if let Scope::Child(k) = scope {
                            if *k == 0 || *k > arity {
                                return Err(ParseError::ChildOutOfRange {
                                    line,
                                    child: *k,
                                    head: self
                                        .grammar
                                        .name(self.grammar.production(prod_id).head)
                                        .to_string(),
                                    arity,
                                });
                            }
                        }
                        if *negated {
                            if *scope == Scope::Local {
                                return Err(ParseError::LocalNegation { line });
                            }
                        } else {
                            for arg in &atom.args {
                                if let Some(v) = &arg.var {
                                    positive_vars.insert(v);
                                }
                            }
                        }
                    }
                }
                let check_safe = |term: &AffineTerm| -> Result<(), ParseError> {
                    match &term.var {
                        Some(v) if !positive_vars.contains(v.as_str()) => {
                            Err(ParseError::UnsafeVariable {
                                variable: v.clone(),
                                line,
                            })
                        }
                        _ => Ok(()),
                    }
                };
                if let Some(head) = &rule.head {
                    check_arity(head)?;
                    for arg in &head.args {
                        check_safe(arg)?;
                    }
                }
                for lit in &rule.body {
                    match lit {
                        BodyLiteral::Atom {
                            negated: true,
                            atom,
                            ..
                        } => {
                            for arg in &atom.args {
                                check_safe(arg)?;
                            }
                        }
                        BodyLiteral::Compare { left, right, .. } => {
                            check_safe(left)?;
                            check_safe(right)?;
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }

    /// Evaluates a parse tree bottom-up, returning the root model.
    pub fn evaluate_tree(&self, tree: &ParseTree) -> Result<NodeModel, AsgError> {
        eval::evaluate(self, tree)
    }

    /// ASG membership: true iff some parse tree of `w` evaluates without a
    /// violated constraint. Strings outside the CFG are not members. When the
    /// forest cap is hit before a satisfying tree is found, membership is
    /// undecided and reported as an error rather than `false`.
    pub fn member(&self, w: &str) -> Result<bool, AsgError> {
        let forest = match self.grammar.parse_forest(w, self.forest_cap) {
            Ok(f) => f,
            Err(_) => return Ok(false),
        };
        for tree in &forest.trees {
            if !self.evaluate_tree(tree)?.violated {
                return Ok(true);
            }
        }
        if forest.complete {
            Ok(false)
        } else {
            Err(AsgError::AmbiguityCapExceeded {
                cap: self.forest_cap,
            })
        }
    }

    /// Serializes annotations for production `prod` (empty string if none).
    fn block_text(&self, prod: ProductionId) -> Option<String> {
        let rules = &self.annotations[prod];
        if rules.is_empty() {
            return None;
        }
        let inner: Vec<String> = rules.iter().map(|r| r.to_string()).collect();
        Some(format!("{{ {} }}", inner.join(" ")))
    }
}

impl fmt::Display for AnnotatedGrammar {
    /// Writes the grammar in the annotated file format; parsing the output
    /// reproduces the grammar with identical production indices.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = &self.grammar;
        let mut i = 0;
        while i < g.productions().len() {
            let head = g.production(i).head;
            let mut alts = Vec::new();
            while i < g.productions().len() && g.production(i).head == head {
                let mut alt = crate::grammar::body_text(g, &g.production(i).body);
                if let Some(block) = self.block_text(i) {
                    if alt.is_empty() {
                        alt = block;
                    } else {
                        alt = format!("{alt} {block}");
                    }
                }
                alts.push(alt);
                i += 1;
            }
            writeln!(f, "{} -> {}", g.name(head), alts.join(" | "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{strip_annotations, Vocabulary};
    use mask::MaskError;

    /// Equal-counts grammar over three character lists, empty base cases.
    const ABC_EQUAL: &str = "\
start -> as bs cs {
    :- size(X)@1, not size(X)@2.
    :- size(X)@1, not size(X)@3.
}

as -> \"a\" as {
    size(X+1) :- size(X)@2.
} | {
    size(0).
}

bs -> \"b\" bs {
    size(X+1) :- size(X)@2.
} | {
    size(0).
}

cs -> \"c\" cs {
    size(X+1) :- size(X)@2.
} | {
    size(0).
}
";

    /// Equal-counts grammar requiring at least one of each letter.
    const ABC_EQUAL_NONEMPTY: &str = "\
start -> \"a\" as \"b\" bs \"c\" cs {
    :- size(X)@2, not size(X)@4.
    :- size(X)@2, not size(X)@6.
}
as -> \"a\" as { size(X+1) :- size(X)@2. } | { size(0). }
bs -> \"b\" bs { size(X+1) :- size(X)@2. } | { size(0). }
cs -> \"c\" cs { size(X+1) :- size(X)@2. } | { size(0). }
";

    /// a-count equals b-count, any positive number of c's.
    const AB_EQUAL_NONEMPTY: &str = "\
start -> \"a\" as \"b\" bs \"c\" cs {
    :- size(X)@2, not size(X)@4.
}
as -> \"a\" as { size(X+1) :- size(X)@2. } | { size(0). }
bs -> \"b\" bs { size(X+1) :- size(X)@2. } | { size(0). }
cs -> \"c\" cs { size(X+1) :- size(X)@2. } | { size(0). }
";

    fn abc_equal() -> AnnotatedGrammar {
        AnnotatedGrammar::parse(ABC_EQUAL).expect("annotated grammar parses")
    }

    fn abc_equal_nonempty() -> AnnotatedGrammar {
        AnnotatedGrammar::parse(ABC_EQUAL_NONEMPTY).expect("annotated grammar parses")
    }

    #[test]
    fn parses_annotated_grammar() {
        let asg = abc_equal();
        assert_eq!(asg.grammar().productions().len(), 7);
        let annotated: usize = asg.annotations().iter().filter(|r| !r.is_empty()).count();
        assert_eq!(annotated, 7);
        assert_eq!(asg.annotations()[0].len(), 2);
        assert!(asg.annotations()[0].iter().all(|r| r.is_constraint()));
    }

    #[test]
    fn annotated_grammar_component_matches_stripped_parse() {
        let asg = abc_equal();
        let plain = crate::grammar::Grammar::parse(&strip_annotations(ABC_EQUAL)).unwrap();
        assert_eq!(asg.grammar().productions(), plain.productions());
    }

    #[test]
    fn empty_blocks_degenerate_to_cfg() {
        let text = "start -> \"a\" start {} | {}\n";
        let asg = AnnotatedGrammar::parse(text).unwrap();
        assert!(asg.annotations().iter().all(|r| r.is_empty()));
        assert!(asg.member("aaa").unwrap());
        assert!(asg.member("").unwrap());
    }

    #[test]
    fn child_reference_out_of_range() {
        let text = "start -> \"a\" start { size(X+1) :- size(X)@3. } | { size(0). }\n";
        let err = AnnotatedGrammar::parse(text).unwrap_err();
        assert!(matches!(err, ParseError::ChildOutOfRange { child: 3, .. }));
    }

    #[test]
    fn unsafe_variable_is_rejected() {
        let text = "start -> \"a\" start { size(X). } | { size(0). }\n";
        let err = AnnotatedGrammar::parse(text).unwrap_err();
        assert!(matches!(err, ParseError::UnsafeVariable { .. }));

        let text = "start -> \"a\" start { :- size(X)@2, not size(Y)@2. } | { size(0). }\n";
        let err = AnnotatedGrammar::parse(text).unwrap_err();
        assert!(matches!(err, ParseError::UnsafeVariable { ref variable, .. } if variable == "Y"));
    }

    #[test]
    fn local_negation_is_rejected() {
        let text = "start -> \"a\" start { :- size(X)@2, not size(X). } | { size(0). }\n";
        let err = AnnotatedGrammar::parse(text).unwrap_err();
        assert!(matches!(err, ParseError::LocalNegation { .. }));
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let text = "start -> \"a\" start { size(0). size(1,2). } |\n";
        let err = AnnotatedGrammar::parse(text).unwrap_err();
        assert!(matches!(err, ParseError::ArityMismatch { .. }));
    }

    #[test]
    fn evaluates_balanced_tree() {
        let asg = abc_equal();
        let forest = asg.grammar().parse_forest("abc", 8).unwrap();
        assert_eq!(forest.trees.len(), 1);
        let model = asg.evaluate_tree(&forest.trees[0]).unwrap();
        assert!(!model.violated);
        assert!(model.atoms.is_empty());
        let one = GroundAtom::new("size", vec![1]);
        for child in &model.children {
            let child = child.as_ref().expect("list children are nonterminals");
            assert_eq!(
                child.atoms.iter().cloned().collect::<Vec<_>>(),
                vec![one.clone()]
            );
        }
    }

    #[test]
    fn evaluates_unbalanced_tree_as_violated() {
        let asg = abc_equal();
        let forest = asg.grammar().parse_forest("aabc", 8).unwrap();
        assert_eq!(forest.trees.len(), 1);
        let model = asg.evaluate_tree(&forest.trees[0]).unwrap();
        assert!(model.violated);
        let sizes: Vec<i64> = model
            .children
            .iter()
            .map(|c| c.as_ref().unwrap().atoms.iter().next().unwrap().args[0])
            .collect();
        assert_eq!(sizes, vec![2, 1, 1]);
    }

    #[test]
    fn evaluates_annotation_free_tree() {
        let g = crate::grammar::Grammar::parse("start -> \"a\" start | \"a\"\n").unwrap();
        let count = g.productions().len();
        let asg = AnnotatedGrammar::new(g, vec![Vec::new(); count]).unwrap();
        let forest = asg.grammar().parse_forest("aaa", 8).unwrap();
        let model = asg.evaluate_tree(&forest.trees[0]).unwrap();
        assert!(!model.violated);
        assert!(model.atoms.is_empty());
    }

    #[test]
    fn membership_examples() {
        let asg = abc_equal_nonempty();
        assert!(asg.member("aabbcc").unwrap());
        assert!(!asg.member("bcc").unwrap());
        assert!(!asg.member("aaabbccc").unwrap());
        assert!(!asg.member("").unwrap());
        assert!(asg.member("abc").unwrap());

        let relaxed = abc_equal();
        assert!(relaxed.member("").unwrap());
        assert!(relaxed.member("aabbcc").unwrap());
        assert!(!relaxed.member("aabc").unwrap());
    }

    #[test]
    fn membership_agrees_with_counting_predicate() {
        let asg = abc_equal_nonempty();
        let alphabet = ['a', 'b', 'c'];
        let mut strings = vec![String::new()];
        let mut start = 0;
        for _ in 0..6 {
            let end = strings.len();
            for i in start..end {
                for c in alphabet {
                    let mut s = strings[i].clone();
                    s.push(c);
                    strings.push(s);
                }
            }
            start = end;
        }
        for s in &strings {
            let n = s.chars().take_while(|&c| c == 'a').count();
            let expected =
                n >= 1 && *s == format!("{}{}{}", "a".repeat(n), "b".repeat(n), "c".repeat(n));
            assert_eq!(asg.member(s).unwrap(), expected, "string {s:?}");
        }
    }

    #[test]
    fn conservativity_over_cfg() {
        let asg = abc_equal();
        for s in ["", "abc", "aabbcc", "aabc", "ab", "ccc", "ba", "aabbc"] {
            if asg.member(s).unwrap() {
                assert!(
                    asg.grammar().recognize(s),
                    "member implies CFG membership: {s}"
                );
            }
        }
    }

    #[test]
    fn ambiguity_cap_is_reported() {
        let text = "s -> s s { x. :- x@2. } | \"a\"\n";
        let asg = AnnotatedGrammar::parse(text).unwrap();
        // With a generous cap the satisfiable left-leaning tree is found.
        assert!(asg.member("aaa").unwrap());
        // With cap 1 only the violated first tree is seen: undecided.
        let tight = asg.clone().with_forest_cap(1);
        assert_eq!(
            tight.member("aaa").unwrap_err(),
            AsgError::AmbiguityCapExceeded { cap: 1 }
        );
        // Non-members stay decidable when enumeration completes under the cap.
        assert!(!asg.member("ab").unwrap());
    }

    #[test]
    fn mask_forces_balanced_continuation() {
        let asg = abc_equal_nonempty();
        let v = Vocabulary::new(["a", "b", "c"]).unwrap();
        let mask = asg_valid_next_tokens(&asg, "aab", &v, 12).unwrap();
        let allowed: Vec<&str> = mask.tokens().map(|id| v.token_text(id)).collect();
        assert_eq!(allowed, vec!["b"]);
        assert!(!mask.allows_end());
    }

    #[test]
    fn mask_from_empty_prefix_with_word_tokens() {
        let asg = abc_equal_nonempty();
        let v = Vocabulary::new(["a", "cc", "bc", "aab", "cb"]).unwrap();
        let mask = asg_valid_next_tokens(&asg, "", &v, 12).unwrap();
        let allowed: Vec<&str> = mask.tokens().map(|id| v.token_text(id)).collect();
        assert_eq!(allowed, vec!["a", "aab"]);
        assert!(!mask.allows_end());
    }

    #[test]
    fn mask_on_free_tail_grammar() {
        let asg = AnnotatedGrammar::parse(AB_EQUAL_NONEMPTY).unwrap();
        let v = Vocabulary::new(["a", "b", "c"]).unwrap();
        let mask = asg_valid_next_tokens(&asg, "ab", &v, 12).unwrap();
        let allowed: Vec<&str> = mask.tokens().map(|id| v.token_text(id)).collect();
        assert_eq!(allowed, vec!["c"]);
        assert!(!mask.allows_end());
        // After one c the word is complete but can still grow.
        let mask = asg_valid_next_tokens(&asg, "abc", &v, 12).unwrap();
        let allowed: Vec<&str> = mask.tokens().map(|id| v.token_text(id)).collect();
        assert_eq!(allowed, vec!["c"]);
        assert!(mask.allows_end());
    }

    #[test]
    fn mask_reports_dead_end() {
        let asg = abc_equal_nonempty();
        let v = Vocabulary::new(["a", "b", "c"]).unwrap();
        let err = asg_valid_next_tokens(&asg, "aaaa", &v, 2).unwrap_err();
        assert!(matches!(err, MaskError::DeadEnd { .. }));
        let err = asg_valid_next_tokens(&asg, "cb", &v, 12).unwrap_err();
        assert!(matches!(err, MaskError::NonViablePrefix(_)));
    }

    #[test]
    fn mask_respects_budget() {
        let asg = abc_equal_nonempty();
        let v = Vocabulary::new(["a", "b", "c"]).unwrap();
        // From "aaa" the shortest completion of token "a" needs 8 characters.
        let tight = asg_valid_next_tokens(&asg, "aaa", &v, 7).unwrap();
        let allowed: Vec<&str> = tight.tokens().map(|id| v.token_text(id)).collect();
        assert_eq!(allowed, vec!["b"]);
        let loose = asg_valid_next_tokens(&asg, "aaa", &v, 8).unwrap();
        let allowed: Vec<&str> = loose.tokens().map(|id| v.token_text(id)).collect();
        assert_eq!(allowed, vec!["a", "b"]);
    }

    #[test]
    fn display_round_trips_with_annotations() {
        let asg = abc_equal();
        let text = asg.to_string();
        let reparsed = AnnotatedGrammar::parse(&text).unwrap();
        assert_eq!(
            asg.grammar().productions(),
            reparsed.grammar().productions()
        );
        assert_eq!(asg.annotations(), reparsed.annotations());
    }

    #[test]
    fn comparison_literals_evaluate() {
        let text = "start -> as as { :- size(X)@1, size(Y)@2, X < Y. }\nas -> \"a\" as { size(X+1) :- size(X)@2. } | { size(0). }\n";
        let asg = AnnotatedGrammar::parse(text).unwrap();
        // Forest is ambiguous over splits; a split with left >= right must exist.
        assert!(asg.member("aa").unwrap());
        assert!(asg.member("a").unwrap());
        let strict = "start -> as as { :- size(X)@1, size(Y)@2, X >= Y. }\nas -> \"a\" as { size(X+1) :- size(X)@2. } | { size(0). }\n";
        let asg = AnnotatedGrammar::parse(strict).unwrap();
        // Left list must be strictly shorter than the right one.
        assert!(asg.member("a").unwrap());
        assert!(asg.member("aaa").unwrap());
        assert!(!asg.member("").unwrap());
    }
}
