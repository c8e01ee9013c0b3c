//! Evaluation of typed predicates and expressions, and exhaustive
//! enumeration of the bindings that satisfy a predicate.

pub mod plan;

use std::collections::HashMap;
use std::fmt;
use std::ops::ControlFlow;

use serde::Serialize;
use thiserror::Error;

pub use plan::{attach_plans_expr, attach_plans_pred, plan_enum, EnumPlan, Filter, GenKind, Generator};

use crate::lang::ast::{BinOp, Expr, ExprKind, Pred, PredKind, RelOp, UnOp};
use crate::lang::{BType, Loc, TypeEnv, TypeError};
use crate::value::{self, Limits, Value, WdError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EvalErrorKind {
    #[serde(rename = "wd-apply-outside-domain")]
    ApplyOutsideDomain,
    #[serde(rename = "wd-not-functional")]
    NotFunctional,
    #[serde(rename = "wd-empty-min-max")]
    EmptyMinMax,
    #[serde(rename = "wd-not-a-sequence")]
    NotASequence,
    #[serde(rename = "wd-div-by-zero")]
    DivByZero,
    #[serde(rename = "int-overflow")]
    IntOverflow,
    #[serde(rename = "unbounded-variable")]
    UnboundedVariable,
    #[serde(rename = "resource-limit")]
    ResourceLimit,
    /// An operand of the wrong shape reached an operator; typechecking rules
    /// this out.
    #[serde(rename = "internal")]
    Internal,
}

impl EvalErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalErrorKind::ApplyOutsideDomain => "wd-apply-outside-domain",
            EvalErrorKind::NotFunctional => "wd-not-functional",
            EvalErrorKind::EmptyMinMax => "wd-empty-min-max",
            EvalErrorKind::NotASequence => "wd-not-a-sequence",
            EvalErrorKind::DivByZero => "wd-div-by-zero",
            EvalErrorKind::IntOverflow => "int-overflow",
            EvalErrorKind::UnboundedVariable => "unbounded-variable",
            EvalErrorKind::ResourceLimit => "resource-limit",
            EvalErrorKind::Internal => "internal",
        }
    }
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{kind} at {loc}: {message}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub message: String,
    #[serde(serialize_with = "serialize_loc")]
    pub loc: Loc,
    /// Offending value, machine-rendered, when one is known.
    pub witness: Option<String>,
    /// Bound variables at the point of failure, e.g. `x=1, y="a"`.
    pub binding: Option<String>,
}

fn serialize_loc<S: serde::Serializer>(loc: &Loc, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&loc.to_string())
}

impl EvalError {
    pub fn new(kind: EvalErrorKind, loc: Loc, message: impl Into<String>) -> Self {
        Self { kind, message: message.into(), loc, witness: None, binding: None }
    }

    fn from_wd(e: WdError, loc: Loc) -> Self {
        Self { kind: e.kind, message: e.message, loc, witness: e.witness, binding: None }
    }
}

/// Either failure that can occur while preparing a term for evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrepareError {
    #[error("type error at {0}")]
    Type(#[from] TypeError),
    #[error("{0}")]
    Plan(#[from] EvalError),
}

/// The global frame: every data item and its type. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct Env {
    values: HashMap<String, Value>,
    types: TypeEnv,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, value: Value, ty: BType) {
        let name = name.into();
        self.types.insert(name.clone(), ty);
        self.values.insert(name, value);
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    pub fn types(&self) -> &TypeEnv {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Typechecks `p` against `env` and plans its binders.
pub fn prepare_pred(p: &mut Pred, env: &Env) -> Result<(), PrepareError> {
    crate::lang::typecheck_pred(p, env.types())?;
    attach_plans_pred(p)?;
    Ok(())
}

/// Typechecks `e` against `env` and plans its binders.
pub fn prepare_expr(e: &mut Expr, env: &Env) -> Result<BType, PrepareError> {
    let t = crate::lang::typecheck_expr(e, env.types())?;
    attach_plans_expr(e)?;
    Ok(t)
}

/// One satisfying assignment, in the plan's variable order.
pub type Binding = Vec<(String, Value)>;

/// Whether an enumeration callback wants more bindings.
pub type Flow = ControlFlow<()>;

/// Expression and predicate interpreter over an [`Env`] with a stack of
/// bound variables. Subterms free of bound variables are memoized for the
/// lifetime of the evaluator.
pub struct Evaluator<'a> {
    env: &'a Env,
    locals: Vec<(&'a str, Value)>,
    memo: HashMap<u32, Value>,
    limits: Limits,
}

type EvalResult<T> = Result<T, EvalError>;

impl<'a> Evaluator<'a> {
    pub fn new(env: &'a Env, limits: Limits) -> Self {
        Self { env, locals: Vec::new(), memo: HashMap::new(), limits }
    }

    pub fn push_local(&mut self, name: &'a str, v: Value) {
        self.locals.push((name, v));
    }

    pub fn pop_local(&mut self) {
        self.locals.pop();
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        self.locals.iter().rev().find(|(n, _)| *n == name).map(|(_, v)| v).or_else(|| self.env.get(name))
    }

    /// Current values of `vars`, innermost binding of each name.
    pub fn binding_of(&self, vars: &[String]) -> Binding {
        vars.iter()
            .map(|v| (v.clone(), self.lookup(v).cloned().expect("plan variable is bound")))
            .collect()
    }

    fn describe_locals(&self) -> Option<String> {
        if self.locals.is_empty() {
            return None;
        }
        Some(
            self.locals
                .iter()
                .map(|(n, v)| format!("{n}={}", v.to_machine_string()))
                .collect::<Vec<_>>()
                .join(", "),
        )
    }

    pub fn eval_expr(&mut self, e: &'a Expr) -> EvalResult<Value> {
        if let Some(slot) = e.memo {
            if let Some(v) = self.memo.get(&slot) {
                return Ok(v.clone());
            }
            let v = self.eval_expr_uncached(e)?;
            self.memo.insert(slot, v.clone());
            return Ok(v);
        }
        self.eval_expr_uncached(e)
    }

    fn eval_expr_uncached(&mut self, e: &'a Expr) -> EvalResult<Value> {
        let wd = |r: Result<Value, WdError>| r.map_err(|err| EvalError::from_wd(err, e.loc));
        match &e.kind {
            ExprKind::Int(v) => Ok(Value::Int(*v)),
            ExprKind::Str(s) => Ok(Value::str(s)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Name(n) => self.lookup(n).cloned().ok_or_else(|| {
                EvalError::new(EvalErrorKind::Internal, e.loc, format!("unbound name `{n}`"))
            }),
            ExprKind::Unary(op, a) => {
                let v = self.eval_expr(a)?;
                wd(match op {
                    UnOp::Neg => {
                        let x = wd_int(&v, e.loc)?;
                        return x.checked_neg().map(Value::Int).ok_or_else(|| overflow(e.loc, "-"));
                    }
                    UnOp::Card => value::card(&v),
                    UnOp::Min => value::min(&v),
                    UnOp::Max => value::max(&v),
                    UnOp::Dom => value::dom(&v),
                    UnOp::Ran => value::ran(&v),
                    UnOp::Inverse => value::inverse(&v),
                    UnOp::Size => value::size(&v),
                    UnOp::First => value::first(&v),
                    UnOp::Last => value::last(&v),
                    UnOp::Prj1 => v.as_pair().map(|(a, _)| a.clone()),
                    UnOp::Prj2 => v.as_pair().map(|(_, b)| b.clone()),
                })
            }
            ExprKind::Binary(op, l, r) => {
                let lv = self.eval_expr(l)?;
                let rv = self.eval_expr(r)?;
                self.binary(*op, lv, rv, e.loc)
            }
            ExprKind::SetExt(items) => {
                let mut elems = Vec::with_capacity(items.len());
                for it in items {
                    elems.push(self.eval_expr(it)?);
                }
                Ok(value::mk_set(elems))
            }
            ExprKind::Comprehension { vars, plan, .. } => {
                let plan = plan_of(plan.as_deref(), e.loc)?;
                let mut out = Vec::new();
                let limit = self.limits;
                let _ = self.enumerate_with(plan, &mut |ev| {
                    out.push(ev.tuple_of(vars));
                    check_growth(out.len(), limit, e.loc)?;
                    Ok(Flow::Continue(()))
                })?;
                Ok(value::mk_set(out))
            }
            ExprKind::Lambda { vars, body, plan, .. } => {
                let plan = plan_of(plan.as_deref(), e.loc)?;
                let mut out = Vec::new();
                let limit = self.limits;
                let _ = self.enumerate_with(plan, &mut |ev| {
                    let arg = ev.tuple_of(vars);
                    let res = ev.eval_expr(body)?;
                    out.push(Value::pair(arg, res));
                    check_growth(out.len(), limit, e.loc)?;
                    Ok(Flow::Continue(()))
                })?;
                Ok(value::mk_set(out))
            }
        }
    }

    fn tuple_of(&self, vars: &[String]) -> Value {
        let mut it = vars.iter().map(|v| self.lookup(v).cloned().expect("plan variable is bound"));
        let first = it.next().expect("binder has a variable");
        it.fold(first, Value::pair)
    }

    fn binary(&self, op: BinOp, l: Value, r: Value, loc: Loc) -> EvalResult<Value> {
        let wd = |res: Result<Value, WdError>| res.map_err(|err| EvalError::from_wd(err, loc));
        let arith = |f: fn(i64, i64) -> Option<i64>, sym: &str| -> EvalResult<Value> {
            let (a, b) = (wd_int(&l, loc)?, wd_int(&r, loc)?);
            f(a, b).map(Value::Int).ok_or_else(|| overflow(loc, sym))
        };
        match op {
            BinOp::Add => arith(i64::checked_add, "+"),
            BinOp::Sub => arith(i64::checked_sub, "-"),
            BinOp::Mul => arith(i64::checked_mul, "*"),
            BinOp::Div | BinOp::Mod => {
                if wd_int(&r, loc)? == 0 {
                    let what = if op == BinOp::Div { "division" } else { "modulo" };
                    return Err(EvalError::new(
                        EvalErrorKind::DivByZero,
                        loc,
                        format!("{what} by zero"),
                    )
                    .with_witness(&l));
                }
                if op == BinOp::Div {
                    arith(i64::checked_div, "/")
                } else {
                    arith(i64::checked_rem, "mod")
                }
            }
            BinOp::Interval => wd(value::interval(wd_int(&l, loc)?, wd_int(&r, loc)?, self.limits)),
            BinOp::Maplet => Ok(Value::pair(l, r)),
            BinOp::Union => wd(value::union(&l, &r)),
            BinOp::Inter => wd(value::inter(&l, &r)),
            BinOp::SetMinus => wd(value::set_minus(&l, &r)),
            BinOp::Product => wd(value::cartesian(&l, &r, self.limits)),
            BinOp::Compose => wd(value::compose(&l, &r, self.limits)),
            BinOp::Override => wd(value::override_rel(&l, &r)),
            BinOp::DomRestrict => wd(value::dom_restrict(&l, &r)),
            BinOp::DomSubtract => wd(value::dom_subtract(&l, &r)),
            BinOp::RanRestrict => wd(value::ran_restrict(&l, &r)),
            BinOp::RanSubtract => wd(value::ran_subtract(&l, &r)),
            BinOp::Apply => wd(value::apply_fn(&l, &r)),
            BinOp::Image => wd(value::image(&l, &r)),
        }
    }

    /// Two-valued evaluation; `&`, `or` and `=>` short-circuit left to right.
    pub fn eval_pred(&mut self, p: &'a Pred) -> EvalResult<bool> {
        match &p.kind {
            PredKind::And(l, r) => Ok(self.eval_pred(l)? && self.eval_pred(r)?),
            PredKind::Or(l, r) => Ok(self.eval_pred(l)? || self.eval_pred(r)?),
            PredKind::Implies(l, r) => Ok(!self.eval_pred(l)? || self.eval_pred(r)?),
            PredKind::Iff(l, r) => Ok(self.eval_pred(l)? == self.eval_pred(r)?),
            PredKind::Not(q) => Ok(!self.eval_pred(q)?),
            PredKind::ForAll { body, plan, .. } => {
                let plan = plan_of(plan.as_deref(), p.loc)?;
                let PredKind::Implies(_, property) = &body.kind else {
                    return Err(EvalError::new(
                        EvalErrorKind::Internal,
                        p.loc,
                        "universal quantifier without an implication body",
                    ));
                };
                let mut holds = true;
                let _ = self.enumerate_with(plan, &mut |ev| {
                    if ev.eval_pred(property)? {
                        Ok(Flow::Continue(()))
                    } else {
                        holds = false;
                        Ok(Flow::Break(()))
                    }
                })?;
                Ok(holds)
            }
            PredKind::Exists { plan, .. } => {
                let plan = plan_of(plan.as_deref(), p.loc)?;
                let mut found = false;
                let _ = self.enumerate_with(plan, &mut |_| {
                    found = true;
                    Ok(Flow::Break(()))
                })?;
                Ok(found)
            }
            PredKind::Rel(op, l, r) => {
                let lv = self.eval_expr(l)?;
                let rv = self.eval_expr(r)?;
                let wd = |res: Result<bool, WdError>| res.map_err(|err| EvalError::from_wd(err, p.loc));
                match op {
                    RelOp::Eq => Ok(lv == rv),
                    RelOp::Ne => Ok(lv != rv),
                    RelOp::Lt => Ok(wd_int(&lv, p.loc)? < wd_int(&rv, p.loc)?),
                    RelOp::Le => Ok(wd_int(&lv, p.loc)? <= wd_int(&rv, p.loc)?),
                    RelOp::Gt => Ok(wd_int(&lv, p.loc)? > wd_int(&rv, p.loc)?),
                    RelOp::Ge => Ok(wd_int(&lv, p.loc)? >= wd_int(&rv, p.loc)?),
                    RelOp::Member => wd(value::member(&lv, &rv)),
                    RelOp::NotMember => wd(value::member(&lv, &rv)).map(|b| !b),
                    RelOp::Subset => wd(value::subset(&lv, &rv)),
                    RelOp::NotSubset => wd(value::subset(&lv, &rv)).map(|b| !b),
                }
            }
            PredKind::DefRef(n) => Err(EvalError::new(
                EvalErrorKind::Internal,
                p.loc,
                format!("unexpanded definition `{n}`"),
            )),
        }
    }

    /// Runs `f` once per binding of `plan`, in nested-loop order (the first
    /// generator varies slowest). The plan variables are bound in this
    /// evaluator while `f` runs. Returns `Break` if `f` stopped early.
    pub fn enumerate_with(
        &mut self,
        plan: &'a EnumPlan,
        f: &mut dyn FnMut(&mut Self) -> EvalResult<Flow>,
    ) -> EvalResult<Flow> {
        self.enum_level(plan, 0, f)
    }

    fn enum_level(
        &mut self,
        plan: &'a EnumPlan,
        level: usize,
        f: &mut dyn FnMut(&mut Self) -> EvalResult<Flow>,
    ) -> EvalResult<Flow> {
        for filter in plan.filters_at(level) {
            let ok = self.eval_pred(&filter.pred).map_err(|e| self.attribute(e))?;
            if !ok {
                return Ok(Flow::Continue(()));
            }
        }
        let Some(gen) = plan.generators.get(level) else {
            let res = f(self);
            return res.map_err(|e| self.attribute(e));
        };
        let v = self.eval_expr(&gen.expr).map_err(|e| self.attribute(e))?;
        match gen.kind {
            GenKind::Equals => self.with_local(&gen.var, v, |ev| ev.enum_level(plan, level + 1, f)),
            GenKind::MemberOf => {
                let Value::Set(elems) = v else {
                    return Err(EvalError::new(
                        EvalErrorKind::Internal,
                        gen.expr.loc,
                        "generator expression is not a set",
                    ));
                };
                for x in elems.iter() {
                    let flow =
                        self.with_local(&gen.var, x.clone(), |ev| ev.enum_level(plan, level + 1, f))?;
                    if flow.is_break() {
                        return Ok(flow);
                    }
                }
                Ok(Flow::Continue(()))
            }
        }
    }

    fn attribute(&self, mut err: EvalError) -> EvalError {
        if err.binding.is_none() {
            err.binding = self.describe_locals();
        }
        err
    }

    fn with_local<T>(&mut self, name: &'a str, v: Value, f: impl FnOnce(&mut Self) -> T) -> T {
        self.locals.push((name, v));
        let out = f(self);
        self.locals.pop();
        out
    }
}

impl EvalError {
    fn with_witness(mut self, v: &Value) -> Self {
        self.witness = Some(v.to_machine_string());
        self
    }
}

fn plan_of(plan: Option<&EnumPlan>, loc: Loc) -> EvalResult<&EnumPlan> {
    plan.ok_or_else(|| EvalError::new(EvalErrorKind::Internal, loc, "binder evaluated before planning"))
}

fn wd_int(v: &Value, loc: Loc) -> EvalResult<i64> {
    v.as_int().map_err(|e| EvalError::from_wd(e, loc))
}

fn overflow(loc: Loc, op: &str) -> EvalError {
    EvalError::new(EvalErrorKind::IntOverflow, loc, format!("integer overflow in `{op}`"))
}

fn check_growth(n: usize, limits: Limits, loc: Loc) -> EvalResult<()> {
    if n > limits.max_set_size {
        return Err(EvalError::new(
            EvalErrorKind::ResourceLimit,
            loc,
            format!("set comprehension exceeds the limit of {} elements", limits.max_set_size),
        ));
    }
    Ok(())
}

/// Evaluates a prepared expression in a fresh evaluator.
pub fn eval_expr(e: &Expr, env: &Env) -> Result<Value, EvalError> {
    Evaluator::new(env, Limits::default()).eval_expr(e)
}

/// Evaluates a prepared predicate in a fresh evaluator.
pub fn eval_pred(p: &Pred, env: &Env) -> Result<bool, EvalError> {
    Evaluator::new(env, Limits::default()).eval_pred(p)
}

/// Collects every binding of `plan`, in enumeration order.
pub fn enumerate(plan: &EnumPlan, env: &Env) -> Result<Vec<Binding>, EvalError> {
    let mut ev = Evaluator::new(env, Limits::default());
    let mut out = Vec::new();
    let _ = ev.enumerate_with(plan, &mut |ev| {
        out.push(ev.binding_of(&plan.vars));
        Ok(Flow::Continue(()))
    })?;
    Ok(out)
}
