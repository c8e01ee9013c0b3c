//! Bounded enumeration plans.
//!
//! A plan turns the conjunction constraining a list of variables into nested
//! generator loops. Each variable is bound by the first conjunct of the form
//! `v : E` or `v = E` whose expression only mentions globals and variables
//! bound earlier. Every other conjunct becomes a filter, checked as soon as
//! all the plan variables it mentions are bound.

use std::collections::HashSet;
use std::sync::Arc;

use super::{EvalError, EvalErrorKind};
use crate::lang::ast::{free_names_expr, free_names_pred, Expr, ExprKind, Pred, PredKind, RelOp};
use crate::lang::Loc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    /// `v : E`, iterates the elements of `E` in canonical order.
    MemberOf,
    /// `v = E`, binds the single value of `E`.
    Equals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub var: String,
    pub expr: Expr,
    pub kind: GenKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub pred: Pred,
    /// Number of generators that must be bound before the filter runs.
    pub stage: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumPlan {
    /// Variables in declaration order.
    pub vars: Vec<String>,
    pub generators: Vec<Generator>,
    /// Sorted by stage, stable with respect to conjunct order.
    pub filters: Vec<Filter>,
}

impl EnumPlan {
    pub fn filters_at(&self, stage: usize) -> impl Iterator<Item = &Filter> {
        let start = self.filters.partition_point(|f| f.stage < stage);
        self.filters[start..].iter().take_while(move |f| f.stage == stage)
    }
}

/// Plans the enumeration of `vars` over the conjuncts of `where_`.
pub fn plan_enum(vars: &[String], where_: &Pred) -> Result<EnumPlan, EvalError> {
    let conjuncts = where_.conjuncts();
    plan_conjuncts(vars, &conjuncts, where_.loc)
}

fn plan_conjuncts(vars: &[String], conjuncts: &[&Pred], loc: Loc) -> Result<EnumPlan, EvalError> {
    let plan_vars: HashSet<&str> = vars.iter().map(String::as_str).collect();
    let mut bound: Vec<&str> = Vec::new();
    let mut used = vec![false; conjuncts.len()];
    let mut generators = Vec::new();

    while bound.len() < vars.len() {
        let pick = conjuncts.iter().enumerate().find_map(|(i, c)| {
            if used[i] {
                return None;
            }
            let PredKind::Rel(op @ (RelOp::Member | RelOp::Eq), lhs, rhs) = &c.kind else {
                return None;
            };
            let ExprKind::Name(v) = &lhs.kind else { return None };
            if !plan_vars.contains(v.as_str()) || bound.contains(&v.as_str()) {
                return None;
            }
            let ready = free_names_expr(rhs)
                .iter()
                .all(|n| !plan_vars.contains(n.as_str()) || bound.contains(&n.as_str()));
            if !ready {
                return None;
            }
            let kind = if *op == RelOp::Member { GenKind::MemberOf } else { GenKind::Equals };
            Some((i, v.as_str(), (**rhs).clone(), kind))
        });
        let Some((i, var, expr, kind)) = pick else {
            let missing = vars.iter().find(|v| !bound.contains(&v.as_str())).expect("unbound var");
            return Err(EvalError::new(
                EvalErrorKind::UnboundedVariable,
                loc,
                format!(
                    "variable `{missing}` is not bounded: it needs a conjunct `{missing} : S` or \
                     `{missing} = E` over data or previously bound variables"
                ),
            ));
        };
        used[i] = true;
        bound.push(var);
        generators.push(Generator { var: var.to_string(), expr, kind });
    }

    let mut filters: Vec<Filter> = conjuncts
        .iter()
        .enumerate()
        .filter(|(i, _)| !used[*i])
        .map(|(_, c)| {
            let stage = free_names_pred(c)
                .iter()
                .filter_map(|n| generators.iter().position(|g| &g.var == n))
                .map(|pos| pos + 1)
                .max()
                .unwrap_or(0);
            Filter { pred: (*c).clone(), stage }
        })
        .collect();
    filters.sort_by_key(|f| f.stage);

    Ok(EnumPlan { vars: vars.to_vec(), generators, filters })
}

/// Computes and stores the plan of every binder in `p`, innermost first.
pub fn attach_plans_pred(p: &mut Pred) -> Result<(), EvalError> {
    match &mut p.kind {
        PredKind::And(l, r) | PredKind::Or(l, r) | PredKind::Implies(l, r) | PredKind::Iff(l, r) => {
            attach_plans_pred(l)?;
            attach_plans_pred(r)
        }
        PredKind::Not(q) => attach_plans_pred(q),
        PredKind::ForAll { vars, body, plan } => {
            attach_plans_pred(body)?;
            let PredKind::Implies(guard, _) = &body.kind else {
                return Err(EvalError::new(
                    EvalErrorKind::UnboundedVariable,
                    body.loc,
                    "universal quantifier body must have the form `guard => property`",
                ));
            };
            *plan = Some(Arc::new(plan_enum(vars, guard)?));
            Ok(())
        }
        PredKind::Exists { vars, body, plan } => {
            attach_plans_pred(body)?;
            *plan = Some(Arc::new(plan_enum(vars, body)?));
            Ok(())
        }
        PredKind::Rel(_, l, r) => {
            attach_plans_expr(l)?;
            attach_plans_expr(r)
        }
        PredKind::DefRef(_) => Ok(()),
    }
}

pub fn attach_plans_expr(e: &mut Expr) -> Result<(), EvalError> {
    match &mut e.kind {
        ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) | ExprKind::Name(_) => Ok(()),
        ExprKind::Unary(_, a) => attach_plans_expr(a),
        ExprKind::Binary(_, l, r) => {
            attach_plans_expr(l)?;
            attach_plans_expr(r)
        }
        ExprKind::SetExt(items) => items.iter_mut().try_for_each(attach_plans_expr),
        ExprKind::Comprehension { vars, pred, plan } => {
            attach_plans_pred(pred)?;
            *plan = Some(Arc::new(plan_enum(vars, pred)?));
            Ok(())
        }
        ExprKind::Lambda { vars, pred, body, plan } => {
            attach_plans_pred(pred)?;
            attach_plans_expr(body)?;
            *plan = Some(Arc::new(plan_enum(vars, pred)?));
            Ok(())
        }
    }
}
