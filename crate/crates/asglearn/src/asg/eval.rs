//! Bottom-up evaluation of annotation rules over a parse tree.
//!
//! Terminal leaves contribute no atoms. Each internal node computes the least
//! fixpoint of its production's facts and rules, looking `@k` literals up in
//! child k's completed atom set; `not A@k` holds iff A is absent there.
//! Constraints with a satisfiable body mark the node violated, and violation
//! propagates to the root.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::grammar::{ParseTree, TreeNode};

use super::{
    AffineTerm, AnnotatedGrammar, AsgError, AtomTemplate, BodyLiteral, GroundAtom, NodeModel, Scope,
};

type Binding<'a> = BTreeMap<&'a str, i64>;

pub(super) fn evaluate(asg: &AnnotatedGrammar, tree: &ParseTree) -> Result<NodeModel, AsgError> {
    let production = asg.grammar().production(tree.production);
    if production.body.len() != tree.children.len() {
        return Err(AsgError::Eval(format!(
            "tree node for production {} has {} children, body has {} symbols",
            tree.production,
            tree.children.len(),
            production.body.len()
        )));
    }
    let mut children: Vec<Option<NodeModel>> = Vec::with_capacity(tree.children.len());
    let mut violated = false;
    for child in &tree.children {
        match child {
            TreeNode::Leaf(_) => children.push(None),
            TreeNode::Node(sub) => {
                let model = evaluate(asg, sub)?;
                violated |= model.violated;
                children.push(Some(model));
            }
        }
    }

    let rules = &asg.annotations()[tree.production];
    let mut atoms: BTreeSet<GroundAtom> = BTreeSet::new();

    // Facts and rules to fixpoint; rules only add atoms, so iterate until
    // nothing new appears.
    loop {
        let mut added = false;
        for rule in rules {
            let Some(head) = &rule.head else { continue };
            for binding in satisfy_body(&rule.body, &atoms, &children)? {
                let atom = ground(head, &binding)?;
                if atoms.insert(atom) {
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }

    if !violated {
        for rule in rules {
            if rule.is_constraint() && !satisfy_body(&rule.body, &atoms, &children)?.is_empty() {
                violated = true;
                break;
            }
        }
    }

    Ok(NodeModel {
        atoms,
        violated,
        children,
    })
}

fn ground(template: &AtomTemplate, binding: &Binding) -> Result<GroundAtom, AsgError> {
    let mut args = Vec::with_capacity(template.args.len());
    for term in &template.args {
        args.push(eval_term(term, binding)?);
    }
    Ok(GroundAtom {
        predicate: template.predicate.clone(),
        args,
    })
}

fn eval_term(term: &AffineTerm, binding: &Binding) -> Result<i64, AsgError> {
    match &term.var {
        None => Ok(term.offset),
        Some(v) => match binding.get(v.as_str()) {
            Some(value) => Ok(value + term.offset),
            None => Err(AsgError::Eval(format!("unbound variable `{v}`"))),
        },
    }
}

/// All variable bindings under which the body holds. Positive literals are
/// joined by backtracking in written order; negated literals and comparisons
/// are checked once every variable is bound (guaranteed by the safety check
/// at construction time).
fn satisfy_body<'r>(
    body: &'r [BodyLiteral],
    local: &BTreeSet<GroundAtom>,
    children: &[Option<NodeModel>],
) -> Result<Vec<Binding<'r>>, AsgError> {
    let positives: Vec<(&AtomTemplate, Scope)> = body
        .iter()
        .filter_map(|lit| match lit {
            BodyLiteral::Atom {
                negated: false,
                atom,
                scope,
            } => Some((atom, *scope)),
            _ => None,
        })
        .collect();
    let mut results = Vec::new();
    let mut binding: Binding<'r> = BTreeMap::new();
    join(
        &positives,
        0,
        local,
        children,
        &mut binding,
        &mut |binding| {
            for lit in body {
                match lit {
                    BodyLiteral::Atom {
                        negated: true,
                        atom,
                        scope,
                    } => {
                        let ground = ground(atom, binding)?;
                        if scope_atoms(*scope, local, children).contains(&ground) {
                            return Ok(());
                        }
                    }
                    BodyLiteral::Compare { left, op, right } => {
                        let holds = op.eval(eval_term(left, binding)?, eval_term(right, binding)?);
                        if !holds {
                            return Ok(());
                        }
                    }
                    _ => {}
                }
            }
            results.push(binding.clone());
            Ok(())
        },
    )?;
    Ok(results)
}

fn scope_atoms<'a>(
    scope: Scope,
    local: &'a BTreeSet<GroundAtom>,
    children: &'a [Option<NodeModel>],
) -> &'a BTreeSet<GroundAtom> {
    static EMPTY: std::sync::OnceLock<BTreeSet<GroundAtom>> = std::sync::OnceLock::new();
    match scope {
        Scope::Local => local,
        Scope::Child(k) => match children.get(k - 1).and_then(|c| c.as_ref()) {
            Some(model) => &model.atoms,
            // Terminal leaves carry no atoms.
            None => EMPTY.get_or_init(BTreeSet::new),
        },
    }
}

fn join<'r>(
    positives: &[(&'r AtomTemplate, Scope)],
    index: usize,
    local: &BTreeSet<GroundAtom>,
    children: &[Option<NodeModel>],
    binding: &mut Binding<'r>,
    emit: &mut dyn FnMut(&Binding<'r>) -> Result<(), AsgError>,
) -> Result<(), AsgError> {
    if index == positives.len() {
        return emit(binding);
    }
    let (atom, scope) = positives[index];
    let candidates = scope_atoms(scope, local, children);
    for candidate in candidates {
        if candidate.predicate != atom.predicate || candidate.args.len() != atom.args.len() {
            continue;
        }
        let mut newly_bound: Vec<&str> = Vec::new();
        let mut ok = true;
        for (term, &value) in atom.args.iter().zip(&candidate.args) {
            match &term.var {
                None => {
                    if term.offset != value {
                        ok = false;
                        break;
                    }
                }
                Some(v) => {
                    let needed = value - term.offset;
                    match binding.get(v.as_str()) {
                        Some(&bound) => {
                            if bound != needed {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            binding.insert(v.as_str(), needed);
                            newly_bound.push(v.as_str());
                        }
                    }
                }
            }
        }
        if ok {
            join(positives, index + 1, local, children, binding, emit)?;
        }
        for v in newly_bound {
            binding.remove(v);
        }
    }
    Ok(())
}
