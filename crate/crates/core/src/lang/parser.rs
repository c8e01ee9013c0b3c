//! Recursive-descent parser for predicates and expressions.
//!
//! Predicate precedence, loosest first: `<=>`, `=>`, `or`, `&`, then `not`,
//! quantifiers and comparisons. All binary connectives associate to the left.
//!
//! Expression precedence, loosest first: `|->`; the set and relation
//! operators (`\/ /\ ; <+ <| <<| |> |>>`); `..`; `+ -`; `* / mod`; unary
//! minus; postfix application `f(x)`, image `r[S]` and inverse `r~`.

use std::collections::HashSet;

use super::ast::{BinOp, Expr, ExprKind, Pred, PredKind, RelOp, Term, UnOp};
use super::lexer::{Loc, Token, TokenKind};
use super::SyntaxError;

pub type ParseResult<T> = Result<T, SyntaxError>;

pub struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    /// Positions of `(` where a parenthesized predicate was already tried and
    /// failed, so backtracking stays linear.
    failed_paren: HashSet<usize>,
}

const SET_OPS: &[(&str, BinOp)] = &[
    ("\\/", BinOp::Union),
    ("/\\", BinOp::Inter),
    (";", BinOp::Compose),
    ("<+", BinOp::Override),
    ("<|", BinOp::DomRestrict),
    ("<<|", BinOp::DomSubtract),
    ("|>", BinOp::RanRestrict),
    ("|>>", BinOp::RanSubtract),
];

impl<'t> Parser<'t> {
    /// `tokens` must end with an EOF token, as produced by `tokenize`.
    pub fn new(tokens: &'t [Token]) -> Self {
        assert!(
            tokens.last().is_some_and(|t| t.kind == TokenKind::Eof),
            "token stream must end with EOF"
        );
        Self { tokens, pos: 0, failed_paren: HashSet::new() }
    }

    pub fn peek(&self) -> &'t Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, n: usize) -> &'t Token {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn reset(&mut self, pos: usize) {
        self.pos = pos;
    }

    pub fn advance(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        self.peek().kind == TokenKind::Eof
    }

    pub fn eat_op(&mut self, op: &str) -> bool {
        if self.peek().is_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek().is_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn error_expected(&self, what: &str) -> SyntaxError {
        let t = self.peek();
        SyntaxError::new(t.loc, format!("expected {what}, found {}", t.describe()))
    }

    pub fn expect_op(&mut self, op: &str) -> ParseResult<Loc> {
        if self.peek().is_op(op) {
            Ok(self.advance().loc)
        } else {
            Err(self.error_expected(&format!("`{op}`")))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> ParseResult<Loc> {
        if self.peek().is_keyword(kw) {
            Ok(self.advance().loc)
        } else {
            Err(self.error_expected(&format!("`{kw}`")))
        }
    }

    pub fn expect_ident(&mut self) -> ParseResult<(String, Loc)> {
        let t = self.peek();
        if t.kind == TokenKind::Ident {
            self.advance();
            Ok((t.text.clone(), t.loc))
        } else {
            Err(self.error_expected("identifier"))
        }
    }

    pub fn expect_eof(&self) -> ParseResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.error_expected("end of input"))
        }
    }

    // ---------------------------------------------------------------- predicates

    pub fn pred(&mut self) -> ParseResult<Pred> {
        self.binary_pred(0)
    }

    fn binary_pred(&mut self, level: usize) -> ParseResult<Pred> {
        const LEVELS: &[&str] = &["<=>", "=>", "or", "&"];
        if level == LEVELS.len() {
            return self.unary_pred();
        }
        let op = LEVELS[level];
        let mut lhs = self.binary_pred(level + 1)?;
        loop {
            let t = self.peek();
            let matches = if op == "or" { t.is_keyword("or") } else { t.is_op(op) };
            if !matches {
                return Ok(lhs);
            }
            self.advance();
            if self.starts_terminator() {
                return Err(self.error_expected(&format!("predicate after `{op}`")));
            }
            let rhs = self.binary_pred(level + 1)?;
            let loc = lhs.loc;
            let (l, r) = (Box::new(lhs), Box::new(rhs));
            let kind = match op {
                "<=>" => PredKind::Iff(l, r),
                "=>" => PredKind::Implies(l, r),
                "or" => PredKind::Or(l, r),
                _ => PredKind::And(l, r),
            };
            lhs = Pred::new(kind, loc);
        }
    }

    /// True when the next token cannot start a predicate or expression.
    fn starts_terminator(&self) -> bool {
        let t = self.peek();
        match t.kind {
            TokenKind::Eof => true,
            TokenKind::Keyword => matches!(
                t.text.as_str(),
                "RULE" | "COUNTEREXAMPLE" | "ANY" | "WHERE" | "EXPECTED" | "END" | "DEFINITION"
            ),
            TokenKind::Punct => matches!(t.text.as_str(), ")" | "}" | "]" | "," | "|"),
            _ => false,
        }
    }

    fn at_connective(&self) -> bool {
        let t = self.peek();
        t.is_op("&") || t.is_op("=>") || t.is_op("<=>") || t.is_keyword("or")
    }

    fn unary_pred(&mut self) -> ParseResult<Pred> {
        let t = self.peek();
        if t.is_keyword("not") {
            self.advance();
            let inner = self.unary_pred()?;
            return Ok(Pred::new(PredKind::Not(Box::new(inner)), t.loc));
        }
        if t.is_op("!") || t.is_op("#") {
            self.advance();
            let vars = self.binder_vars()?;
            self.expect_op(".")?;
            self.expect_op("(")?;
            let body = Box::new(self.pred()?);
            self.expect_op(")")?;
            let kind = if t.text == "!" {
                PredKind::ForAll { vars, body, plan: None }
            } else {
                PredKind::Exists { vars, body, plan: None }
            };
            return Ok(Pred::new(kind, t.loc));
        }
        if t.is_op("(") && !self.failed_paren.contains(&self.pos) {
            let start = self.pos;
            let attempt = (|| {
                self.advance();
                let p = self.pred()?;
                self.expect_op(")")?;
                if !(self.starts_terminator() || self.at_connective()) {
                    return Err(self.error_expected("logical connective"));
                }
                Ok(p)
            })();
            match attempt {
                Ok(p) => return Ok(p),
                Err(pred_err) => {
                    let pred_reach = self.pos;
                    self.failed_paren.insert(start);
                    self.reset(start);
                    return self.comparison().map_err(|expr_err| {
                        // Report whichever reading got further into the input.
                        if pred_reach > self.pos { pred_err } else { expr_err }
                    });
                }
            }
        }
        self.comparison()
    }

    /// `x` or `(x, y, ...)`; names must be pairwise distinct.
    fn binder_vars(&mut self) -> ParseResult<Vec<String>> {
        let mut vars = Vec::new();
        let push = |name: String, loc: Loc, vars: &mut Vec<String>| {
            if vars.contains(&name) {
                return Err(SyntaxError::new(loc, format!("variable `{name}` bound twice")));
            }
            vars.push(name);
            Ok(())
        };
        if self.eat_op("(") {
            loop {
                let (n, loc) = self.expect_ident()?;
                push(n, loc, &mut vars)?;
                if !self.eat_op(",") {
                    break;
                }
            }
            self.expect_op(")")?;
        } else {
            let (n, loc) = self.expect_ident()?;
            push(n, loc, &mut vars)?;
        }
        Ok(vars)
    }

    fn comparison(&mut self) -> ParseResult<Pred> {
        if self.starts_terminator() {
            return Err(self.error_expected("predicate"));
        }
        let lhs = self.expr()?;
        let t = self.peek();
        if t.kind == TokenKind::Operator {
            if let Some(op) = RelOp::from_symbol(&t.text) {
                self.advance();
                let rhs = self.expr()?;
                let loc = lhs.loc;
                return Ok(Pred::rel(op, lhs, rhs, loc));
            }
        }
        if let ExprKind::Name(n) = &lhs.kind {
            return Ok(Pred::new(PredKind::DefRef(n.clone()), lhs.loc));
        }
        Err(self.error_expected("comparison operator"))
    }

    // --------------------------------------------------------------- expressions

    pub fn expr(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.set_expr()?;
        while self.peek().is_op("|->") {
            self.advance();
            let rhs = self.set_expr()?;
            let loc = lhs.loc;
            lhs = Expr::binary(BinOp::Maplet, lhs, rhs, loc);
        }
        Ok(lhs)
    }

    fn set_expr(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.interval()?;
        loop {
            let t = self.peek();
            let Some(&(_, op)) = SET_OPS.iter().find(|(s, _)| t.is_op(s)) else {
                return Ok(lhs);
            };
            self.advance();
            let rhs = self.interval()?;
            let loc = lhs.loc;
            lhs = Expr::binary(op, lhs, rhs, loc);
        }
    }

    fn interval(&mut self) -> ParseResult<Expr> {
        let lhs = self.additive()?;
        if self.eat_op("..") {
            let rhs = self.additive()?;
            let loc = lhs.loc;
            return Ok(Expr::binary(BinOp::Interval, lhs, rhs, loc));
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                t if t.is_op("+") => BinOp::Add,
                t if t.is_op("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            let loc = lhs.loc;
            lhs = Expr::binary(op, lhs, rhs, loc);
        }
    }

    fn multiplicative(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                t if t.is_op("*") => BinOp::Mul,
                t if t.is_op("/") => BinOp::Div,
                t if t.is_keyword("mod") => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary_expr()?;
            let loc = lhs.loc;
            lhs = Expr::binary(op, lhs, rhs, loc);
        }
    }

    fn unary_expr(&mut self) -> ParseResult<Expr> {
        let t = self.peek();
        if t.is_op("-") {
            self.advance();
            let e = self.unary_expr()?;
            return Ok(Expr::unary(UnOp::Neg, e, t.loc));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> ParseResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let t = self.peek();
            if t.is_op("(") {
                self.advance();
                let mut args = vec![self.expr()?];
                while self.eat_op(",") {
                    args.push(self.expr()?);
                }
                self.expect_op(")")?;
                let arg = Expr::tuple(args);
                e = Expr::binary(BinOp::Apply, e, arg, t.loc);
            } else if t.is_op("[") {
                self.advance();
                let arg = self.expr()?;
                self.expect_op("]")?;
                e = Expr::binary(BinOp::Image, e, arg, t.loc);
            } else if t.is_op("~") {
                self.advance();
                e = Expr::unary(UnOp::Inverse, e, t.loc);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> ParseResult<Expr> {
        let t = self.peek();
        let loc = t.loc;
        match t.kind {
            TokenKind::IntLit => {
                self.advance();
                let v: i64 = t.text.parse().map_err(|_| {
                    SyntaxError::new(loc, format!("integer literal {} out of range", t.text))
                })?;
                Ok(Expr::new(ExprKind::Int(v), loc))
            }
            TokenKind::StrLit => {
                self.advance();
                Ok(Expr::new(ExprKind::Str(t.text.clone()), loc))
            }
            TokenKind::Ident | TokenKind::QualifiedIdent => {
                self.advance();
                Ok(Expr::name(t.text.clone(), loc))
            }
            TokenKind::Keyword if t.text == "TRUE" || t.text == "FALSE" => {
                self.advance();
                Ok(Expr::new(ExprKind::Bool(t.text == "TRUE"), loc))
            }
            TokenKind::Keyword => {
                let Some(op) = UnOp::from_keyword(&t.text) else {
                    return Err(self.error_expected("expression"));
                };
                self.advance();
                self.expect_op("(")?;
                let arg = self.expr()?;
                self.expect_op(")")?;
                Ok(Expr::unary(op, arg, loc))
            }
            _ if t.is_op("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_op(")")?;
                Ok(e)
            }
            _ if t.is_op("{") => self.set_literal(),
            _ if t.is_op("%") => {
                self.advance();
                let vars = self.binder_vars()?;
                self.expect_op(".")?;
                self.expect_op("(")?;
                let pred = Box::new(self.pred()?);
                self.expect_op("|")?;
                let body = Box::new(self.expr()?);
                self.expect_op(")")?;
                Ok(Expr::new(ExprKind::Lambda { vars, pred, body, plan: None }, loc))
            }
            _ => Err(self.error_expected("expression")),
        }
    }

    fn set_literal(&mut self) -> ParseResult<Expr> {
        let loc = self.expect_op("{")?;
        if self.eat_op("}") {
            return Ok(Expr::new(ExprKind::SetExt(Vec::new()), loc));
        }
        if self.looks_like_comprehension() {
            let mut vars = Vec::new();
            loop {
                let (n, vloc) = self.expect_ident()?;
                if vars.contains(&n) {
                    return Err(SyntaxError::new(vloc, format!("variable `{n}` bound twice")));
                }
                vars.push(n);
                if !self.eat_op(",") {
                    break;
                }
            }
            self.expect_op("|")?;
            let pred = Box::new(self.pred()?);
            self.expect_op("}")?;
            return Ok(Expr::new(ExprKind::Comprehension { vars, pred, plan: None }, loc));
        }
        let mut items = vec![self.expr()?];
        while self.eat_op(",") {
            items.push(self.expr()?);
        }
        self.expect_op("}")?;
        Ok(Expr::new(ExprKind::SetExt(items), loc))
    }

    /// `ident (, ident)* |` right after the opening brace.
    fn looks_like_comprehension(&self) -> bool {
        let mut i = 0;
        loop {
            if self.peek_at(i).kind != TokenKind::Ident {
                return false;
            }
            let sep = self.peek_at(i + 1);
            if sep.is_op("|") {
                return true;
            }
            if !sep.is_op(",") {
                return false;
            }
            i += 2;
        }
    }

    /// A definition body: a predicate when it parses as one, otherwise an
    /// expression. A bare name is kept as an expression and classified
    /// later from what it names.
    pub fn term(&mut self) -> ParseResult<Term> {
        let start = self.pos;
        let pred_attempt = self.pred().and_then(|p| {
            if self.starts_terminator() {
                Ok(p)
            } else {
                Err(self.error_expected("end of definition"))
            }
        });
        match pred_attempt {
            Ok(Pred { kind: PredKind::DefRef(n), loc }) => Ok(Term::Expr(Expr::name(n, loc))),
            Ok(p) => Ok(Term::Pred(p)),
            Err(pred_err) => {
                let pred_reach = self.pos;
                self.reset(start);
                self.expr().map_err(|e| if pred_reach > self.pos { pred_err } else { e })
                    .map(Term::Expr)
            }
        }
    }
}

/// Parses exactly one predicate, consuming every token.
pub fn parse_pred(tokens: &[Token]) -> ParseResult<Pred> {
    let mut p = Parser::new(tokens);
    let pred = p.pred()?;
    p.expect_eof()?;
    Ok(pred)
}

/// Parses exactly one expression, consuming every token.
pub fn parse_expr(tokens: &[Token]) -> ParseResult<Expr> {
    let mut p = Parser::new(tokens);
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}
