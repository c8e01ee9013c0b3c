//! Type inference over the INT / BOOL / STRING universe with pairs and sets.
//!
//! Inference runs in two passes. The first pass walks the tree, unifies, and
//! records one inferred type per expression node in pre-order; `-` and `*`
//! stay pending until their operand types are known. The second pass walks
//! the same nodes again, writes the resolved types, rewrites the overloaded
//! operators and assigns memo slots to subterms free of bound variables.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::ast::{BinOp, Expr, ExprKind, Pred, PredKind, RelOp, UnOp};
use super::lexer::Loc;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BType {
    Int,
    Bool,
    Str,
    Pair(Box<BType>, Box<BType>),
    Set(Box<BType>),
}

impl BType {
    pub fn set(t: BType) -> BType {
        BType::Set(Box::new(t))
    }

    pub fn pair(a: BType, b: BType) -> BType {
        BType::Pair(Box::new(a), Box::new(b))
    }

    /// `seq(T)`, i.e. `POW(INT * T)`.
    pub fn seq(t: BType) -> BType {
        BType::set(BType::pair(BType::Int, t))
    }
}

impl fmt::Display for BType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BType::Int => f.write_str("INT"),
            BType::Bool => f.write_str("BOOL"),
            BType::Str => f.write_str("STRING"),
            BType::Pair(a, b) => write!(f, "({a} * {b})"),
            BType::Set(t) => write!(f, "POW({t})"),
        }
    }
}

pub type TypeEnv = HashMap<String, BType>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeErrorKind {
    UnknownName,
    Mismatch,
    Shadowing,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{loc}: {message}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub message: String,
    pub loc: Loc,
}

impl TypeError {
    fn new(kind: TypeErrorKind, loc: Loc, message: impl Into<String>) -> Self {
        Self { kind, message: message.into(), loc }
    }
}

/// Inference-time type with unification variables.
#[derive(Debug, Clone, PartialEq)]
enum Ty {
    Var(u32),
    Int,
    Bool,
    Str,
    Pair(Box<Ty>, Box<Ty>),
    Set(Box<Ty>),
}

impl Ty {
    fn set(t: Ty) -> Ty {
        Ty::Set(Box::new(t))
    }

    fn pair(a: Ty, b: Ty) -> Ty {
        Ty::Pair(Box::new(a), Box::new(b))
    }

    fn from_btype(t: &BType) -> Ty {
        match t {
            BType::Int => Ty::Int,
            BType::Bool => Ty::Bool,
            BType::Str => Ty::Str,
            BType::Pair(a, b) => Ty::pair(Ty::from_btype(a), Ty::from_btype(b)),
            BType::Set(t) => Ty::set(Ty::from_btype(t)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Overload {
    Pending,
    Arith,
    Set,
}

struct PendingOp {
    node: usize,
    op: BinOp,
    lhs: Ty,
    rhs: Ty,
    result: Ty,
    loc: Loc,
}

/// Two-valued shape used to group a typechecked input: a predicate or an
/// expression, both mutated in place.
pub enum TermMut<'a> {
    Pred(&'a mut Pred),
    Expr(&'a mut Expr),
}

struct Checker<'e> {
    env: &'e TypeEnv,
    subst: Vec<Option<Ty>>,
    scope: Vec<(String, Ty)>,
    node_tys: Vec<Ty>,
    overloads: HashMap<usize, Overload>,
    pending: Vec<PendingOp>,
}

impl<'e> Checker<'e> {
    fn new(env: &'e TypeEnv) -> Self {
        Self {
            env,
            subst: Vec::new(),
            scope: Vec::new(),
            node_tys: Vec::new(),
            overloads: HashMap::new(),
            pending: Vec::new(),
        }
    }

    fn fresh(&mut self) -> Ty {
        self.subst.push(None);
        Ty::Var(self.subst.len() as u32 - 1)
    }

    /// Shallow resolution: follows variable bindings at the root only.
    fn shallow(&self, t: &Ty) -> Ty {
        let mut t = t.clone();
        while let Ty::Var(v) = t {
            match &self.subst[v as usize] {
                Some(b) => t = b.clone(),
                None => break,
            }
        }
        t
    }

    /// Final type; variables nothing constrained default to INT.
    fn finalize(&self, t: &Ty) -> BType {
        match self.shallow(t) {
            Ty::Var(_) | Ty::Int => BType::Int,
            Ty::Bool => BType::Bool,
            Ty::Str => BType::Str,
            Ty::Pair(a, b) => BType::pair(self.finalize(&a), self.finalize(&b)),
            Ty::Set(e) => BType::set(self.finalize(&e)),
        }
    }

    fn display(&self, t: &Ty) -> String {
        fn go(c: &Checker, t: &Ty, out: &mut String) {
            match c.shallow(t) {
                Ty::Var(_) => out.push('?'),
                Ty::Int => out.push_str("INT"),
                Ty::Bool => out.push_str("BOOL"),
                Ty::Str => out.push_str("STRING"),
                Ty::Pair(a, b) => {
                    out.push('(');
                    go(c, &a, out);
                    out.push_str(" * ");
                    go(c, &b, out);
                    out.push(')');
                }
                Ty::Set(e) => {
                    out.push_str("POW(");
                    go(c, &e, out);
                    out.push(')');
                }
            }
        }
        let mut out = String::new();
        go(self, t, &mut out);
        out
    }

    fn occurs(&self, v: u32, t: &Ty) -> bool {
        match self.shallow(t) {
            Ty::Var(w) => v == w,
            Ty::Pair(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
            Ty::Set(e) => self.occurs(v, &e),
            _ => false,
        }
    }

    fn unify_inner(&mut self, a: &Ty, b: &Ty) -> bool {
        let (a, b) = (self.shallow(a), self.shallow(b));
        match (&a, &b) {
            (Ty::Var(x), Ty::Var(y)) if x == y => true,
            (Ty::Var(x), other) | (other, Ty::Var(x)) => {
                if self.occurs(*x, other) {
                    return false;
                }
                self.subst[*x as usize] = Some(other.clone());
                true
            }
            (Ty::Int, Ty::Int) | (Ty::Bool, Ty::Bool) | (Ty::Str, Ty::Str) => true,
            (Ty::Pair(a1, b1), Ty::Pair(a2, b2)) => {
                self.unify_inner(a1, a2) && self.unify_inner(b1, b2)
            }
            (Ty::Set(e1), Ty::Set(e2)) => self.unify_inner(e1, e2),
            _ => false,
        }
    }

    /// Unifies the type `found` of the node at `loc` with `expected`.
    fn unify(&mut self, found: &Ty, expected: &Ty, loc: Loc) -> Result<(), TypeError> {
        let (shown_expected, shown_found) = (self.display(expected), self.display(found));
        if self.unify_inner(found, expected) {
            Ok(())
        } else {
            Err(TypeError::new(
                TypeErrorKind::Mismatch,
                loc,
                format!("type mismatch: expected {shown_expected}, found {shown_found}"),
            ))
        }
    }

    fn lookup(&self, name: &str, loc: Loc) -> Result<Ty, TypeError> {
        if let Some((_, t)) = self.scope.iter().rev().find(|(n, _)| n == name) {
            return Ok(t.clone());
        }
        match self.env.get(name) {
            Some(t) => Ok(Ty::from_btype(t)),
            None => Err(TypeError::new(
                TypeErrorKind::UnknownName,
                loc,
                format!("unknown name `{name}`"),
            )),
        }
    }

    fn bind(&mut self, vars: &[String], loc: Loc) -> Result<Vec<Ty>, TypeError> {
        let mut tys = Vec::with_capacity(vars.len());
        for v in vars {
            if self.env.contains_key(v) {
                return Err(TypeError::new(
                    TypeErrorKind::Shadowing,
                    loc,
                    format!("bound variable `{v}` shadows a data item or definition"),
                ));
            }
            let t = self.fresh();
            self.scope.push((v.clone(), t.clone()));
            tys.push(t);
        }
        Ok(tys)
    }

    fn unbind(&mut self, n: usize) {
        let len = self.scope.len();
        self.scope.truncate(len - n);
    }

    fn tuple_ty(tys: Vec<Ty>) -> Ty {
        let mut it = tys.into_iter();
        let first = it.next().expect("binder has at least one variable");
        it.fold(first, Ty::pair)
    }

    // ----------------------------------------------------------- first pass

    fn infer_pred(&mut self, p: &Pred) -> Result<(), TypeError> {
        match &p.kind {
            PredKind::And(l, r) | PredKind::Or(l, r) | PredKind::Implies(l, r) | PredKind::Iff(l, r) => {
                self.infer_pred(l)?;
                self.infer_pred(r)
            }
            PredKind::Not(q) => self.infer_pred(q),
            PredKind::ForAll { vars, body, .. } | PredKind::Exists { vars, body, .. } => {
                self.bind(vars, p.loc)?;
                let res = self.infer_pred(body);
                self.unbind(vars.len());
                res
            }
            PredKind::Rel(op, l, r) => {
                let lt = self.infer_expr(l)?;
                let rt = self.infer_expr(r)?;
                match op {
                    RelOp::Eq | RelOp::Ne => self.unify(&rt, &lt, r.loc),
                    RelOp::Lt | RelOp::Le | RelOp::Gt | RelOp::Ge => {
                        self.unify(&lt, &Ty::Int, l.loc)?;
                        self.unify(&rt, &Ty::Int, r.loc)
                    }
                    RelOp::Member | RelOp::NotMember => self.unify(&rt, &Ty::set(lt), r.loc),
                    RelOp::Subset | RelOp::NotSubset => {
                        let elem = self.fresh();
                        self.unify(&lt, &Ty::set(elem), l.loc)?;
                        self.unify(&rt, &lt, r.loc)
                    }
                }
            }
            PredKind::DefRef(n) => Err(TypeError::new(
                TypeErrorKind::UnknownName,
                p.loc,
                format!("`{n}` is not a predicate"),
            )),
        }
    }

    fn relation(&mut self) -> (Ty, Ty, Ty) {
        let (a, b) = (self.fresh(), self.fresh());
        let rel = Ty::set(Ty::pair(a.clone(), b.clone()));
        (rel, a, b)
    }

    fn infer_expr(&mut self, e: &Expr) -> Result<Ty, TypeError> {
        let idx = self.node_tys.len();
        self.node_tys.push(Ty::Int);
        let t = self.infer_expr_kind(e, idx)?;
        self.node_tys[idx] = t.clone();
        Ok(t)
    }

    fn infer_expr_kind(&mut self, e: &Expr, idx: usize) -> Result<Ty, TypeError> {
        Ok(match &e.kind {
            ExprKind::Int(_) => Ty::Int,
            ExprKind::Str(_) => Ty::Str,
            ExprKind::Bool(_) => Ty::Bool,
            ExprKind::Name(n) => self.lookup(n, e.loc)?,
            ExprKind::Unary(op, a) => {
                let at = self.infer_expr(a)?;
                match op {
                    UnOp::Neg => {
                        self.unify(&at, &Ty::Int, a.loc)?;
                        Ty::Int
                    }
                    UnOp::Card => {
                        let elem = self.fresh();
                        self.unify(&at, &Ty::set(elem), a.loc)?;
                        Ty::Int
                    }
                    UnOp::Min | UnOp::Max => {
                        self.unify(&at, &Ty::set(Ty::Int), a.loc)?;
                        Ty::Int
                    }
                    UnOp::Dom | UnOp::Ran => {
                        let (rel, x, y) = self.relation();
                        self.unify(&at, &rel, a.loc)?;
                        Ty::set(if *op == UnOp::Dom { x } else { y })
                    }
                    UnOp::Inverse => {
                        let (rel, x, y) = self.relation();
                        self.unify(&at, &rel, a.loc)?;
                        Ty::set(Ty::pair(y, x))
                    }
                    UnOp::Size | UnOp::First | UnOp::Last => {
                        let elem = self.fresh();
                        self.unify(&at, &Ty::set(Ty::pair(Ty::Int, elem.clone())), a.loc)?;
                        if *op == UnOp::Size { Ty::Int } else { elem }
                    }
                    UnOp::Prj1 | UnOp::Prj2 => {
                        let (x, y) = (self.fresh(), self.fresh());
                        self.unify(&at, &Ty::pair(x.clone(), y.clone()), a.loc)?;
                        if *op == UnOp::Prj1 { x } else { y }
                    }
                }
            }
            ExprKind::Binary(op, l, r) => {
                let lt = self.infer_expr(l)?;
                let rt = self.infer_expr(r)?;
                self.infer_binary(*op, idx, e.loc, (l, lt), (r, rt))?
            }
            ExprKind::SetExt(items) => {
                let elem = self.fresh();
                for it in items {
                    let t = self.infer_expr(it)?;
                    self.unify(&t, &elem, it.loc)?;
                }
                Ty::set(elem)
            }
            ExprKind::Comprehension { vars, pred, .. } => {
                let tys = self.bind(vars, e.loc)?;
                let res = self.infer_pred(pred);
                self.unbind(vars.len());
                res?;
                Ty::set(Self::tuple_ty(tys))
            }
            ExprKind::Lambda { vars, pred, body, .. } => {
                let tys = self.bind(vars, e.loc)?;
                let res = self.infer_pred(pred).and_then(|_| self.infer_expr(body));
                self.unbind(vars.len());
                let bt = res?;
                Ty::set(Ty::pair(Self::tuple_ty(tys), bt))
            }
        })
    }

    fn infer_binary(
        &mut self,
        op: BinOp,
        idx: usize,
        loc: Loc,
        (l, lt): (&Expr, Ty),
        (r, rt): (&Expr, Ty),
    ) -> Result<Ty, TypeError> {
        Ok(match op {
            BinOp::Add | BinOp::Div | BinOp::Mod => {
                self.unify(&lt, &Ty::Int, l.loc)?;
                self.unify(&rt, &Ty::Int, r.loc)?;
                Ty::Int
            }
            BinOp::Sub | BinOp::Mul => {
                let result = self.fresh();
                self.overloads.insert(idx, Overload::Pending);
                self.pending.push(PendingOp { node: idx, op, lhs: lt, rhs: rt, result: result.clone(), loc });
                self.settle_overloads(false)?;
                result
            }
            BinOp::Interval => {
                self.unify(&lt, &Ty::Int, l.loc)?;
                self.unify(&rt, &Ty::Int, r.loc)?;
                Ty::set(Ty::Int)
            }
            BinOp::Maplet => Ty::pair(lt, rt),
            BinOp::Union | BinOp::Inter | BinOp::SetMinus | BinOp::Override => {
                let elem = self.fresh();
                self.unify(&lt, &Ty::set(elem), l.loc)?;
                self.unify(&rt, &lt, r.loc)?;
                if op == BinOp::Override {
                    let (rel, _, _) = self.relation();
                    self.unify(&lt, &rel, l.loc)?;
                }
                lt
            }
            BinOp::Product => {
                let (a, b) = (self.fresh(), self.fresh());
                self.unify(&lt, &Ty::set(a.clone()), l.loc)?;
                self.unify(&rt, &Ty::set(b.clone()), r.loc)?;
                Ty::set(Ty::pair(a, b))
            }
            BinOp::Compose => {
                let (a, b, c) = (self.fresh(), self.fresh(), self.fresh());
                self.unify(&lt, &Ty::set(Ty::pair(a.clone(), b.clone())), l.loc)?;
                self.unify(&rt, &Ty::set(Ty::pair(b, c.clone())), r.loc)?;
                Ty::set(Ty::pair(a, c))
            }
            BinOp::DomRestrict | BinOp::DomSubtract => {
                let (rel, a, _) = self.relation();
                self.unify(&rt, &rel, r.loc)?;
                self.unify(&lt, &Ty::set(a), l.loc)?;
                rt
            }
            BinOp::RanRestrict | BinOp::RanSubtract => {
                let (rel, _, b) = self.relation();
                self.unify(&lt, &rel, l.loc)?;
                self.unify(&rt, &Ty::set(b), r.loc)?;
                lt
            }
            BinOp::Apply => {
                let (rel, a, b) = self.relation();
                self.unify(&lt, &rel, l.loc)?;
                self.unify(&rt, &a, r.loc)?;
                b
            }
            BinOp::Image => {
                let (rel, a, b) = self.relation();
                self.unify(&lt, &rel, l.loc)?;
                self.unify(&rt, &Ty::set(a), r.loc)?;
                Ty::set(b)
            }
        })
    }

    /// Resolves `-` / `*` nodes whose operand types are known. With `force`,
    /// operators still undetermined default to arithmetic.
    fn settle_overloads(&mut self, force: bool) -> Result<(), TypeError> {
        loop {
            let mut progress = false;
            let mut i = 0;
            while i < self.pending.len() {
                let op = &self.pending[i];
                let (l, r) = (self.shallow(&op.lhs), self.shallow(&op.rhs));
                let decision = match (&l, &r) {
                    (Ty::Set(_), _) | (_, Ty::Set(_)) => Some(Overload::Set),
                    (Ty::Var(_), Ty::Var(_)) => None,
                    _ => Some(Overload::Arith),
                };
                let Some(decision) = decision else {
                    i += 1;
                    continue;
                };
                let op = self.pending.remove(i);
                self.apply_overload(op, decision)?;
                progress = true;
            }
            if self.pending.is_empty() {
                return Ok(());
            }
            if !progress {
                if !force {
                    return Ok(());
                }
                let op = self.pending.remove(0);
                self.apply_overload(op, Overload::Arith)?;
            }
        }
    }

    fn apply_overload(&mut self, op: PendingOp, decision: Overload) -> Result<(), TypeError> {
        self.overloads.insert(op.node, decision);
        match decision {
            Overload::Arith => {
                self.unify(&op.lhs, &Ty::Int, op.loc)?;
                self.unify(&op.rhs, &Ty::Int, op.loc)?;
                self.unify(&op.result, &Ty::Int, op.loc)
            }
            Overload::Set if op.op == BinOp::Sub => {
                let elem = self.fresh();
                self.unify(&op.lhs, &Ty::set(elem), op.loc)?;
                self.unify(&op.rhs, &op.lhs, op.loc)?;
                self.unify(&op.result, &op.lhs, op.loc)
            }
            Overload::Set => {
                let (a, b) = (self.fresh(), self.fresh());
                self.unify(&op.lhs, &Ty::set(a.clone()), op.loc)?;
                self.unify(&op.rhs, &Ty::set(b.clone()), op.loc)?;
                self.unify(&op.result, &Ty::set(Ty::pair(a, b)), op.loc)
            }
            Overload::Pending => unreachable!("pending is not a decision"),
        }
    }

    // ---------------------------------------------------------- second pass

    /// Returns the smallest scope depth of any bound variable referenced
    /// inside `p`, if any.
    fn annotate_pred(&self, p: &mut Pred, st: &mut Annotate) -> Option<usize> {
        match &mut p.kind {
            PredKind::And(l, r) | PredKind::Or(l, r) | PredKind::Implies(l, r) | PredKind::Iff(l, r) => {
                let a = self.annotate_pred(l, st);
                let b = self.annotate_pred(r, st);
                min_depth(a, b)
            }
            PredKind::Not(q) => self.annotate_pred(q, st),
            PredKind::ForAll { vars, body, .. } | PredKind::Exists { vars, body, .. } => {
                st.locals.extend(vars.iter().cloned());
                let d = self.annotate_pred(body, st);
                st.locals.truncate(st.locals.len() - vars.len());
                d
            }
            PredKind::Rel(_, l, r) => {
                let a = self.annotate_expr(l, st);
                let b = self.annotate_expr(r, st);
                min_depth(a, b)
            }
            PredKind::DefRef(_) => None,
        }
    }

    fn annotate_expr(&self, e: &mut Expr, st: &mut Annotate) -> Option<usize> {
        let idx = st.next_node;
        st.next_node += 1;
        e.ty = Some(self.finalize(&self.node_tys[idx]));
        let entry_depth = st.locals.len();
        let (depth, leaf) = match &mut e.kind {
            ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) => (None, true),
            ExprKind::Name(n) => (st.locals.iter().rposition(|l| l == n), true),
            ExprKind::Unary(_, a) => (self.annotate_expr(a, st), false),
            ExprKind::Binary(op, l, r) => {
                if self.overloads.get(&idx) == Some(&Overload::Set) {
                    *op = if *op == BinOp::Sub { BinOp::SetMinus } else { BinOp::Product };
                }
                let a = self.annotate_expr(l, st);
                let b = self.annotate_expr(r, st);
                (min_depth(a, b), false)
            }
            ExprKind::SetExt(items) => {
                let mut d = None;
                for it in items.iter_mut() {
                    d = min_depth(d, self.annotate_expr(it, st));
                }
                (d, false)
            }
            ExprKind::Comprehension { vars, pred, .. } => {
                st.locals.extend(vars.iter().cloned());
                let d = self.annotate_pred(pred, st);
                st.locals.truncate(entry_depth);
                (d, false)
            }
            ExprKind::Lambda { vars, pred, body, .. } => {
                st.locals.extend(vars.iter().cloned());
                let a = self.annotate_pred(pred, st);
                let b = self.annotate_expr(body, st);
                st.locals.truncate(entry_depth);
                (min_depth(a, b), false)
            }
        };
        let closed = depth.map_or(true, |d| d >= entry_depth);
        if closed && !leaf {
            e.memo = Some(st.next_memo);
            st.next_memo += 1;
        }
        depth
    }
}

fn min_depth(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) | (None, x) => x,
    }
}

struct Annotate {
    locals: Vec<String>,
    next_node: usize,
    next_memo: u32,
}

/// Typechecks `terms` in a shared scope where `locals` are bound (in order),
/// returning the inferred local types and each term's type (BOOL for
/// predicates).
pub fn typecheck_terms(
    locals: &[String],
    terms: &mut [TermMut<'_>],
    env: &TypeEnv,
) -> Result<(Vec<BType>, Vec<BType>), TypeError> {
    let mut ck = Checker::new(env);
    let local_tys = ck.bind(locals, terms.first().map(term_loc).unwrap_or_default())?;
    let mut term_tys = Vec::with_capacity(terms.len());
    for t in terms.iter() {
        match t {
            TermMut::Pred(p) => {
                ck.infer_pred(p)?;
                term_tys.push(Ty::Bool);
            }
            TermMut::Expr(e) => term_tys.push(ck.infer_expr(e)?),
        }
    }
    ck.settle_overloads(true)?;

    let mut st = Annotate { locals: locals.to_vec(), next_node: 0, next_memo: 0 };
    for t in terms.iter_mut() {
        match t {
            TermMut::Pred(p) => {
                ck.annotate_pred(p, &mut st);
            }
            TermMut::Expr(e) => {
                ck.annotate_expr(e, &mut st);
            }
        }
    }
    debug_assert_eq!(st.next_node, ck.node_tys.len());
    Ok((
        local_tys.iter().map(|t| ck.finalize(t)).collect(),
        term_tys.iter().map(|t| ck.finalize(t)).collect(),
    ))
}

fn term_loc(t: &TermMut<'_>) -> Loc {
    match t {
        TermMut::Pred(p) => p.loc,
        TermMut::Expr(e) => e.loc,
    }
}

pub fn typecheck_pred(p: &mut Pred, env: &TypeEnv) -> Result<(), TypeError> {
    typecheck_terms(&[], &mut [TermMut::Pred(p)], env).map(|_| ())
}

pub fn typecheck_expr(e: &mut Expr, env: &TypeEnv) -> Result<BType, TypeError> {
    let (_, mut tys) = typecheck_terms(&[], &mut [TermMut::Expr(e)], env)?;
    Ok(tys.remove(0))
}
