//! Definition expansion.
//!
//! Definitions are inlined into rule bodies so that evaluation only ever sees
//! data names and bound variables. Definition bodies may only mention data
//! and other definitions, so inlining cannot capture a variable.

use std::collections::HashMap;

use super::{Definition, Rule, RulesError};
use crate::lang::{Expr, ExprKind, Loc, Pred, PredKind, Term, TypeEnv};

/// Inlines `defs` into `rules`. `data` gives the names of the data items.
pub fn expand_defs(defs: &[Definition], rules: Vec<Rule>, data: &TypeEnv) -> Result<Vec<Rule>, RulesError> {
    let mut by_name: HashMap<&str, &Definition> = HashMap::new();
    for d in defs {
        if data.contains_key(&d.name) {
            return Err(RulesError::DefinitionCollision { name: d.name.clone(), loc: d.loc });
        }
        if by_name.insert(&d.name, d).is_some() {
            return Err(RulesError::DuplicateDefinition { name: d.name.clone(), loc: d.loc });
        }
    }

    let order = topological_order(defs, &by_name)?;

    let mut ex = Expander { resolved: HashMap::new(), def_names: &by_name, data, context: String::new() };
    for name in order {
        let def = by_name[name.as_str()];
        ex.context = format!("definition {name}");
        let body = match &def.body {
            // An alias takes the kind of whatever it names.
            Term::Expr(Expr { kind: ExprKind::Name(n), .. }) if ex.resolved.contains_key(n) => {
                ex.resolved[n].clone()
            }
            Term::Expr(e) => {
                let mut e = e.clone();
                ex.expr(&mut e, &mut Vec::new())?;
                Term::Expr(e)
            }
            Term::Pred(p) => {
                let mut p = p.clone();
                ex.pred(&mut p, &mut Vec::new())?;
                Term::Pred(p)
            }
        };
        ex.resolved.insert(name, body);
    }

    let mut out = rules;
    for rule in &mut out {
        for (i, block) in rule.blocks.iter_mut().enumerate() {
            ex.context = format!("rule {}, block {}", rule.id, i + 1);
            ex.check_binders(&block.params, block.loc)?;
            let mut bound = block.params.clone();
            ex.pred(&mut block.where_, &mut bound)?;
            ex.pred(&mut block.expected, &mut bound)?;
        }
    }
    Ok(out)
}

/// Definition names in dependency order, or the first cycle found.
fn topological_order(
    defs: &[Definition],
    by_name: &HashMap<&str, &Definition>,
) -> Result<Vec<String>, RulesError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit(
        name: &str,
        by_name: &HashMap<&str, &Definition>,
        marks: &mut HashMap<String, Mark>,
        stack: &mut Vec<String>,
        order: &mut Vec<String>,
    ) -> Result<(), RulesError> {
        match marks.get(name) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                let start = stack.iter().position(|n| n == name).unwrap_or(0);
                let mut cycle = stack[start..].to_vec();
                cycle.push(name.to_string());
                return Err(RulesError::CyclicDefinition { cycle });
            }
            None => {}
        }
        marks.insert(name.to_string(), Mark::Active);
        stack.push(name.to_string());
        let mut refs = Vec::new();
        match &by_name[name].body {
            Term::Expr(e) => def_refs_expr(e, by_name, &mut Vec::new(), &mut refs),
            Term::Pred(p) => def_refs_pred(p, by_name, &mut Vec::new(), &mut refs),
        }
        for r in refs {
            visit(&r, by_name, marks, stack, order)?;
        }
        stack.pop();
        marks.insert(name.to_string(), Mark::Done);
        order.push(name.to_string());
        Ok(())
    }

    let mut marks = HashMap::new();
    let mut order = Vec::new();
    for d in defs {
        visit(&d.name, by_name, &mut marks, &mut Vec::new(), &mut order)?;
    }
    Ok(order)
}

fn push_ref(name: &str, by_name: &HashMap<&str, &Definition>, bound: &[String], out: &mut Vec<String>) {
    if by_name.contains_key(name) && !bound.iter().any(|b| b == name) && !out.iter().any(|o| o == name) {
        out.push(name.to_string());
    }
}

fn def_refs_expr(e: &Expr, by_name: &HashMap<&str, &Definition>, bound: &mut Vec<String>, out: &mut Vec<String>) {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) => {}
        ExprKind::Name(n) => push_ref(n, by_name, bound, out),
        ExprKind::Unary(_, a) => def_refs_expr(a, by_name, bound, out),
        ExprKind::Binary(_, l, r) => {
            def_refs_expr(l, by_name, bound, out);
            def_refs_expr(r, by_name, bound, out);
        }
        ExprKind::SetExt(items) => items.iter().for_each(|i| def_refs_expr(i, by_name, bound, out)),
        ExprKind::Comprehension { vars, pred, .. } => {
            let n = bound.len();
            bound.extend(vars.iter().cloned());
            def_refs_pred(pred, by_name, bound, out);
            bound.truncate(n);
        }
        ExprKind::Lambda { vars, pred, body, .. } => {
            let n = bound.len();
            bound.extend(vars.iter().cloned());
            def_refs_pred(pred, by_name, bound, out);
            def_refs_expr(body, by_name, bound, out);
            bound.truncate(n);
        }
    }
}

fn def_refs_pred(p: &Pred, by_name: &HashMap<&str, &Definition>, bound: &mut Vec<String>, out: &mut Vec<String>) {
    match &p.kind {
        PredKind::And(l, r) | PredKind::Or(l, r) | PredKind::Implies(l, r) | PredKind::Iff(l, r) => {
            def_refs_pred(l, by_name, bound, out);
            def_refs_pred(r, by_name, bound, out);
        }
        PredKind::Not(q) => def_refs_pred(q, by_name, bound, out),
        PredKind::ForAll { vars, body, .. } | PredKind::Exists { vars, body, .. } => {
            let n = bound.len();
            bound.extend(vars.iter().cloned());
            def_refs_pred(body, by_name, bound, out);
            bound.truncate(n);
        }
        PredKind::Rel(_, l, r) => {
            def_refs_expr(l, by_name, bound, out);
            def_refs_expr(r, by_name, bound, out);
        }
        PredKind::DefRef(n) => push_ref(n, by_name, bound, out),
    }
}

struct Expander<'d> {
    resolved: HashMap<String, Term>,
    def_names: &'d HashMap<&'d str, &'d Definition>,
    data: &'d TypeEnv,
    context: String,
}

impl Expander<'_> {
    fn check_binders(&self, vars: &[String], loc: Loc) -> Result<(), RulesError> {
        for v in vars {
            if self.def_names.contains_key(v.as_str()) || self.data.contains_key(v) {
                return Err(RulesError::Shadowing { name: v.clone(), context: self.context.clone(), loc });
            }
        }
        Ok(())
    }

    fn unknown(&self, name: &str, loc: Loc) -> RulesError {
        RulesError::UnknownName { name: name.to_string(), context: self.context.clone(), loc }
    }

    fn mismatch(&self, name: &str, found: &'static str, wanted: &'static str, loc: Loc) -> RulesError {
        RulesError::KindMismatch { name: name.to_string(), context: self.context.clone(), found, wanted, loc }
    }

    fn expr(&self, e: &mut Expr, bound: &mut Vec<String>) -> Result<(), RulesError> {
        match &mut e.kind {
            ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) => Ok(()),
            ExprKind::Name(n) => {
                if bound.contains(n) || self.data.contains_key(n.as_str()) {
                    return Ok(());
                }
                match self.resolved.get(n.as_str()) {
                    Some(Term::Expr(body)) => {
                        *e = body.clone();
                        Ok(())
                    }
                    Some(Term::Pred(_)) => Err(self.mismatch(n, "a predicate", "an expression", e.loc)),
                    None => Err(self.unknown(n, e.loc)),
                }
            }
            ExprKind::Unary(_, a) => self.expr(a, bound),
            ExprKind::Binary(_, l, r) => {
                self.expr(l, bound)?;
                self.expr(r, bound)
            }
            ExprKind::SetExt(items) => items.iter_mut().try_for_each(|i| self.expr(i, bound)),
            ExprKind::Comprehension { vars, pred, .. } => {
                self.check_binders(vars, e.loc)?;
                let n = bound.len();
                bound.extend(vars.iter().cloned());
                let res = self.pred(pred, bound);
                bound.truncate(n);
                res
            }
            ExprKind::Lambda { vars, pred, body, .. } => {
                self.check_binders(vars, e.loc)?;
                let n = bound.len();
                bound.extend(vars.iter().cloned());
                let res = self.pred(pred, bound).and_then(|_| self.expr(body, bound));
                bound.truncate(n);
                res
            }
        }
    }

    fn pred(&self, p: &mut Pred, bound: &mut Vec<String>) -> Result<(), RulesError> {
        match &mut p.kind {
            PredKind::And(l, r) | PredKind::Or(l, r) | PredKind::Implies(l, r) | PredKind::Iff(l, r) => {
                self.pred(l, bound)?;
                self.pred(r, bound)
            }
            PredKind::Not(q) => self.pred(q, bound),
            PredKind::ForAll { vars, body, .. } | PredKind::Exists { vars, body, .. } => {
                self.check_binders(vars, p.loc)?;
                let n = bound.len();
                bound.extend(vars.iter().cloned());
                let res = self.pred(body, bound);
                bound.truncate(n);
                res
            }
            PredKind::Rel(_, l, r) => {
                self.expr(l, bound)?;
                self.expr(r, bound)
            }
            PredKind::DefRef(n) => {
                if bound.contains(n) {
                    return Err(self.mismatch(n, "a variable", "a predicate", p.loc));
                }
                if self.data.contains_key(n.as_str()) {
                    return Err(self.mismatch(n, "a data item", "a predicate", p.loc));
                }
                match self.resolved.get(n.as_str()) {
                    Some(Term::Pred(body)) => {
                        *p = body.clone();
                        Ok(())
                    }
                    Some(Term::Expr(_)) => Err(self.mismatch(n, "an expression", "a predicate", p.loc)),
                    None => Err(self.unknown(n, p.loc)),
                }
            }
        }
    }
}
