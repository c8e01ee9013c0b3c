//! Abstract syntax for expressions and predicates.

use std::sync::Arc;

use super::lexer::Loc;
use super::types::BType;
use crate::eval::EnumPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Card,
    Min,
    Max,
    Dom,
    Ran,
    Inverse,
    Size,
    First,
    Last,
    Prj1,
    Prj2,
}

impl UnOp {
    /// Keyword for the operators written in call syntax, e.g. `card(S)`.
    pub fn keyword(self) -> Option<&'static str> {
        Some(match self {
            UnOp::Card => "card",
            UnOp::Min => "min",
            UnOp::Max => "max",
            UnOp::Dom => "dom",
            UnOp::Ran => "ran",
            UnOp::Size => "size",
            UnOp::First => "first",
            UnOp::Last => "last",
            UnOp::Prj1 => "prj1",
            UnOp::Prj2 => "prj2",
            UnOp::Neg | UnOp::Inverse => return None,
        })
    }

    pub fn from_keyword(kw: &str) -> Option<UnOp> {
        Some(match kw {
            "card" => UnOp::Card,
            "min" => UnOp::Min,
            "max" => UnOp::Max,
            "dom" => UnOp::Dom,
            "ran" => UnOp::Ran,
            "size" => UnOp::Size,
            "first" => UnOp::First,
            "last" => UnOp::Last,
            "prj1" => UnOp::Prj1,
            "prj2" => UnOp::Prj2,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    /// Arithmetic subtraction until the typechecker proves both sides are sets.
    Sub,
    /// Arithmetic product until the typechecker proves both sides are sets.
    Mul,
    Div,
    Mod,
    Interval,
    Maplet,
    Union,
    Inter,
    SetMinus,
    Product,
    Compose,
    Override,
    DomRestrict,
    DomSubtract,
    RanRestrict,
    RanSubtract,
    /// `f(x)`
    Apply,
    /// `r[S]`
    Image,
}

impl BinOp {
    /// Infix spelling; `None` for the postfix forms.
    pub fn symbol(self) -> Option<&'static str> {
        Some(match self {
            BinOp::Add => "+",
            BinOp::Sub | BinOp::SetMinus => "-",
            BinOp::Mul | BinOp::Product => "*",
            BinOp::Div => "/",
            BinOp::Mod => "mod",
            BinOp::Interval => "..",
            BinOp::Maplet => "|->",
            BinOp::Union => "\\/",
            BinOp::Inter => "/\\",
            BinOp::Compose => ";",
            BinOp::Override => "<+",
            BinOp::DomRestrict => "<|",
            BinOp::DomSubtract => "<<|",
            BinOp::RanRestrict => "|>",
            BinOp::RanSubtract => "|>>",
            BinOp::Apply | BinOp::Image => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Member,
    NotMember,
    Subset,
    NotSubset,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "=",
            RelOp::Ne => "/=",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
            RelOp::Member => ":",
            RelOp::NotMember => "/:",
            RelOp::Subset => "<:",
            RelOp::NotSubset => "/<:",
        }
    }

    pub fn from_symbol(s: &str) -> Option<RelOp> {
        Some(match s {
            "=" => RelOp::Eq,
            "/=" => RelOp::Ne,
            "<" => RelOp::Lt,
            "<=" => RelOp::Le,
            ">" => RelOp::Gt,
            ">=" => RelOp::Ge,
            ":" => RelOp::Member,
            "/:" => RelOp::NotMember,
            "<:" => RelOp::Subset,
            "/<:" => RelOp::NotSubset,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Loc,
    /// Filled in by the typechecker.
    pub ty: Option<BType>,
    /// Memoization slot for subterms that mention no bound variable; assigned
    /// by the typechecker.
    pub memo: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Str(String),
    Bool(bool),
    Name(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    SetExt(Vec<Expr>),
    /// `{x, y | P}`
    Comprehension { vars: Vec<String>, pred: Box<Pred>, plan: Option<Arc<EnumPlan>> },
    /// `%(x, y).(P | E)`
    Lambda { vars: Vec<String>, pred: Box<Pred>, body: Box<Expr>, plan: Option<Arc<EnumPlan>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pred {
    pub kind: PredKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredKind {
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Implies(Box<Pred>, Box<Pred>),
    Iff(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
    ForAll { vars: Vec<String>, body: Box<Pred>, plan: Option<Arc<EnumPlan>> },
    Exists { vars: Vec<String>, body: Box<Pred>, plan: Option<Arc<EnumPlan>> },
    Rel(RelOp, Box<Expr>, Box<Expr>),
    /// A bare name in predicate position: a reference to a predicate definition.
    DefRef(String),
}

impl Expr {
    pub fn new(kind: ExprKind, loc: Loc) -> Self {
        Self { kind, loc, ty: None, memo: None }
    }

    pub fn name(name: impl Into<String>, loc: Loc) -> Self {
        Self::new(ExprKind::Name(name.into()), loc)
    }

    pub fn unary(op: UnOp, e: Expr, loc: Loc) -> Self {
        Self::new(ExprKind::Unary(op, Box::new(e)), loc)
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr, loc: Loc) -> Self {
        Self::new(ExprKind::Binary(op, Box::new(l), Box::new(r)), loc)
    }

    /// Left-nested maplet tuple of `items`, the shape bound-variable lists
    /// take as values.
    pub fn tuple(mut items: Vec<Expr>) -> Expr {
        let mut acc = items.remove(0);
        for it in items {
            let loc = acc.loc;
            acc = Expr::binary(BinOp::Maplet, acc, it, loc);
        }
        acc
    }

    /// Resets every location, type annotation and memo slot; used to
    /// compare trees structurally.
    pub fn erase_annotations(&mut self) {
        self.loc = Loc::default();
        self.ty = None;
        self.memo = None;
        match &mut self.kind {
            ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) | ExprKind::Name(_) => {}
            ExprKind::Unary(_, e) => e.erase_annotations(),
            ExprKind::Binary(_, l, r) => {
                l.erase_annotations();
                r.erase_annotations();
            }
            ExprKind::SetExt(items) => items.iter_mut().for_each(Expr::erase_annotations),
            ExprKind::Comprehension { pred, plan, .. } => {
                *plan = None;
                pred.erase_annotations();
            }
            ExprKind::Lambda { pred, body, plan, .. } => {
                *plan = None;
                pred.erase_annotations();
                body.erase_annotations();
            }
        }
    }

    /// Calls `f` on every node of this tree, parents before children.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(Node<'a>)) {
        f(Node::Expr(self));
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) | ExprKind::Name(_) => {}
            ExprKind::Unary(_, e) => e.visit(f),
            ExprKind::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            ExprKind::SetExt(items) => items.iter().for_each(|e| e.visit(f)),
            ExprKind::Comprehension { pred, .. } => pred.visit(f),
            ExprKind::Lambda { pred, body, .. } => {
                pred.visit(f);
                body.visit(f);
            }
        }
    }
}

impl Pred {
    pub fn new(kind: PredKind, loc: Loc) -> Self {
        Self { kind, loc }
    }

    pub fn rel(op: RelOp, l: Expr, r: Expr, loc: Loc) -> Self {
        Self::new(PredKind::Rel(op, Box::new(l), Box::new(r)), loc)
    }

    pub fn and(l: Pred, r: Pred) -> Self {
        let loc = l.loc;
        Self::new(PredKind::And(Box::new(l), Box::new(r)), loc)
    }

    pub fn erase_annotations(&mut self) {
        self.loc = Loc::default();
        match &mut self.kind {
            PredKind::And(l, r) | PredKind::Or(l, r) | PredKind::Implies(l, r) | PredKind::Iff(l, r) => {
                l.erase_annotations();
                r.erase_annotations();
            }
            PredKind::Not(p) => p.erase_annotations(),
            PredKind::ForAll { body, plan, .. } | PredKind::Exists { body, plan, .. } => {
                *plan = None;
                body.erase_annotations();
            }
            PredKind::Rel(_, l, r) => {
                l.erase_annotations();
                r.erase_annotations();
            }
            PredKind::DefRef(_) => {}
        }
    }

    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(Node<'a>)) {
        f(Node::Pred(self));
        match &self.kind {
            PredKind::And(l, r) | PredKind::Or(l, r) | PredKind::Implies(l, r) | PredKind::Iff(l, r) => {
                l.visit(f);
                r.visit(f);
            }
            PredKind::Not(p) => p.visit(f),
            PredKind::ForAll { body, .. } | PredKind::Exists { body, .. } => body.visit(f),
            PredKind::Rel(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            PredKind::DefRef(_) => {}
        }
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Pred> {
        let mut out = Vec::new();
        fn walk<'a>(p: &'a Pred, out: &mut Vec<&'a Pred>) {
            match &p.kind {
                PredKind::And(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                _ => out.push(p),
            }
        }
        walk(self, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Node<'a> {
    Expr(&'a Expr),
    Pred(&'a Pred),
}

impl Node<'_> {
    pub fn loc(&self) -> Loc {
        match self {
            Node::Expr(e) => e.loc,
            Node::Pred(p) => p.loc,
        }
    }
}

/// Either syntactic category; definitions and standalone inputs may be
/// either.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Expr(Expr),
    Pred(Pred),
}

/// Free names of a predicate, in first-occurrence order.
pub fn free_names_pred(p: &Pred) -> Vec<String> {
    let mut out = Vec::new();
    let mut bound = Vec::new();
    collect_pred(p, &mut bound, &mut out);
    out
}

/// Free names of an expression, in first-occurrence order.
pub fn free_names_expr(e: &Expr) -> Vec<String> {
    let mut out = Vec::new();
    let mut bound = Vec::new();
    collect_expr(e, &mut bound, &mut out);
    out
}

fn push_unique(out: &mut Vec<String>, name: &str) {
    if !out.iter().any(|n| n == name) {
        out.push(name.to_string());
    }
}

fn collect_expr(e: &Expr, bound: &mut Vec<String>, out: &mut Vec<String>) {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) => {}
        ExprKind::Name(n) => {
            if !bound.contains(n) {
                push_unique(out, n);
            }
        }
        ExprKind::Unary(_, a) => collect_expr(a, bound, out),
        ExprKind::Binary(_, l, r) => {
            collect_expr(l, bound, out);
            collect_expr(r, bound, out);
        }
        ExprKind::SetExt(items) => items.iter().for_each(|i| collect_expr(i, bound, out)),
        ExprKind::Comprehension { vars, pred, .. } => {
            let n = bound.len();
            bound.extend(vars.iter().cloned());
            collect_pred(pred, bound, out);
            bound.truncate(n);
        }
        ExprKind::Lambda { vars, pred, body, .. } => {
            let n = bound.len();
            bound.extend(vars.iter().cloned());
            collect_pred(pred, bound, out);
            collect_expr(body, bound, out);
            bound.truncate(n);
        }
    }
}

fn collect_pred(p: &Pred, bound: &mut Vec<String>, out: &mut Vec<String>) {
    match &p.kind {
        PredKind::And(l, r) | PredKind::Or(l, r) | PredKind::Implies(l, r) | PredKind::Iff(l, r) => {
            collect_pred(l, bound, out);
            collect_pred(r, bound, out);
        }
        PredKind::Not(q) => collect_pred(q, bound, out),
        PredKind::ForAll { vars, body, .. } | PredKind::Exists { vars, body, .. } => {
            let n = bound.len();
            bound.extend(vars.iter().cloned());
            collect_pred(body, bound, out);
            bound.truncate(n);
        }
        PredKind::Rel(_, l, r) => {
            collect_expr(l, bound, out);
            collect_expr(r, bound, out);
        }
        PredKind::DefRef(n) => {
            if !bound.contains(n) {
                push_unique(out, n);
            }
        }
    }
}
