//! Runtime values and the finite set / relation algebra.
//!
//! Sets are stored as strictly increasing slices under the canonical order,
//! which is the derived `Ord` on [`Value`]: integers numerically, `FALSE <
//! TRUE`, strings bytewise, pairs and sets lexicographically. Relations,
//! functions and sequences are sets of pairs, so pairs sharing a first
//! component are contiguous and lookups by key are binary searches.

use std::cmp::Ordering;
use std::fmt::{self, Write};
use std::sync::Arc;

use crate::eval::EvalErrorKind;
use crate::lang::printer::quote_str;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(Arc<str>),
    Pair(Arc<(Value, Value)>),
    Set(Arc<[Value]>),
}

/// A well-definedness or resource violation raised by a value operation;
/// the evaluator attaches the source location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WdError {
    pub kind: EvalErrorKind,
    pub message: String,
    pub witness: Option<String>,
}

impl WdError {
    pub fn new(kind: EvalErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into(), witness: None }
    }

    pub fn with_witness(mut self, v: &Value) -> Self {
        self.witness = Some(v.to_machine_string());
        self
    }
}

pub type WdResult<T> = Result<T, WdError>;

/// Cardinality ceiling for materialized intermediate sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_set_size: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_set_size: 1_000_000 }
    }
}

impl Limits {
    fn check(&self, n: u128, what: &str) -> WdResult<()> {
        if n > self.max_set_size as u128 {
            return Err(WdError::new(
                EvalErrorKind::ResourceLimit,
                format!("{what} would have {n} elements, above the limit of {}", self.max_set_size),
            ));
        }
        Ok(())
    }
}

/// Which convention string values follow when rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Render {
    /// Strings verbatim, for counterexample messages.
    Message,
    /// Strings double-quoted, for machine-readable reports.
    Machine,
}

fn type_fault(what: &str, v: &Value) -> WdError {
    WdError::new(EvalErrorKind::Internal, format!("ill-typed operand for {what}: {v}"))
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Arc::new((a, b)))
    }

    pub fn empty_set() -> Value {
        Value::Set(Arc::from(Vec::new()))
    }

    /// Wraps elements already strictly increasing.
    fn from_sorted(elems: Vec<Value>) -> Value {
        debug_assert!(elems.windows(2).all(|w| w[0] < w[1]), "set not canonical");
        Value::Set(Arc::from(elems))
    }

    /// Builds the sequence `{1|->v1, ..., n|->vn}`.
    pub fn sequence(items: impl IntoIterator<Item = Value>) -> Value {
        let elems = items
            .into_iter()
            .enumerate()
            .map(|(i, v)| Value::pair(Value::Int(i as i64 + 1), v))
            .collect();
        Value::from_sorted(elems)
    }

    pub fn as_int(&self) -> WdResult<i64> {
        match self {
            Value::Int(v) => Ok(*v),
            other => Err(type_fault("integer operation", other)),
        }
    }

    pub fn as_bool(&self) -> WdResult<bool> {
        match self {
            Value::Bool(b) => Ok(*b),
            other => Err(type_fault("boolean operation", other)),
        }
    }

    pub fn as_set(&self) -> WdResult<&[Value]> {
        match self {
            Value::Set(s) => Ok(s),
            other => Err(type_fault("set operation", other)),
        }
    }

    pub fn as_pair(&self) -> WdResult<(&Value, &Value)> {
        match self {
            Value::Pair(p) => Ok((&p.0, &p.1)),
            other => Err(type_fault("pair operation", other)),
        }
    }

    /// Checks the canonical-form invariant recursively.
    pub fn is_canonical(&self) -> bool {
        match self {
            Value::Int(_) | Value::Bool(_) | Value::Str(_) => true,
            Value::Pair(p) => p.0.is_canonical() && p.1.is_canonical(),
            Value::Set(s) => {
                s.windows(2).all(|w| w[0] < w[1]) && s.iter().all(Value::is_canonical)
            }
        }
    }

    pub fn render(&self, mode: Render) -> String {
        let mut out = String::new();
        self.write_to(&mut out, mode);
        out
    }

    pub fn to_message_string(&self) -> String {
        self.render(Render::Message)
    }

    pub fn to_machine_string(&self) -> String {
        self.render(Render::Machine)
    }

    fn write_to(&self, out: &mut String, mode: Render) {
        match self {
            Value::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Value::Bool(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
            Value::Str(s) => match mode {
                Render::Message => out.push_str(s),
                Render::Machine => out.push_str(&quote_str(s)),
            },
            Value::Pair(p) => {
                out.push('(');
                p.0.write_to(out, mode);
                out.push_str("|->");
                p.1.write_to(out, mode);
                out.push(')');
            }
            Value::Set(s) => {
                out.push('{');
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    v.write_to(out, mode);
                }
                out.push('}');
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_machine_string())
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::str(v)
    }
}

pub fn canonical_compare(a: &Value, b: &Value) -> Ordering {
    a.cmp(b)
}

/// Sorts and deduplicates `elems` into a set value.
pub fn mk_set(mut elems: Vec<Value>) -> Value {
    if !elems.windows(2).all(|w| w[0] < w[1]) {
        elems.sort_unstable();
        elems.dedup();
    }
    Value::from_sorted(elems)
}

fn first_of(p: &Value) -> &Value {
    match p {
        Value::Pair(p) => &p.0,
        other => other,
    }
}

/// The contiguous run of pairs in relation `r` whose first component is `x`.
fn pairs_with_first<'r>(r: &'r [Value], x: &Value) -> &'r [Value] {
    let start = r.partition_point(|p| first_of(p) < x);
    let len = r[start..].partition_point(|p| first_of(p) == x);
    &r[start..start + len]
}

pub fn member(x: &Value, s: &Value) -> WdResult<bool> {
    Ok(s.as_set()?.binary_search(x).is_ok())
}

pub fn subset(a: &Value, b: &Value) -> WdResult<bool> {
    let (a, b) = (a.as_set()?, b.as_set()?);
    if a.len() > b.len() {
        return Ok(false);
    }
    let mut j = 0;
    for x in a {
        while j < b.len() && b[j] < *x {
            j += 1;
        }
        if j == b.len() || b[j] != *x {
            return Ok(false);
        }
        j += 1;
    }
    Ok(true)
}

pub fn apply_fn(f: &Value, x: &Value) -> WdResult<Value> {
    let run = pairs_with_first(f.as_set()?, x);
    match run {
        [] => Err(WdError::new(
            EvalErrorKind::ApplyOutsideDomain,
            format!("function applied outside its domain at {}", x.to_machine_string()),
        )
        .with_witness(x)),
        [single] => Ok(single.as_pair()?.1.clone()),
        _ => Err(WdError::new(
            EvalErrorKind::NotFunctional,
            format!(
                "relation is not functional at {} ({} images)",
                x.to_machine_string(),
                run.len()
            ),
        )
        .with_witness(x)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Merge {
    Union,
    Inter,
    Minus,
}

fn merge(a: &[Value], b: &[Value], mode: Merge) -> Value {
    let mut out = Vec::with_capacity(match mode {
        Merge::Union => a.len() + b.len(),
        Merge::Inter => a.len().min(b.len()),
        Merge::Minus => a.len(),
    });
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                if mode != Merge::Inter {
                    out.push(a[i].clone());
                }
                i += 1;
            }
            Ordering::Greater => {
                if mode == Merge::Union {
                    out.push(b[j].clone());
                }
                j += 1;
            }
            Ordering::Equal => {
                if mode != Merge::Minus {
                    out.push(a[i].clone());
                }
                i += 1;
                j += 1;
            }
        }
    }
    if mode != Merge::Inter {
        out.extend_from_slice(&a[i..]);
    }
    if mode == Merge::Union {
        out.extend_from_slice(&b[j..]);
    }
    Value::from_sorted(out)
}

pub fn union(a: &Value, b: &Value) -> WdResult<Value> {
    Ok(merge(a.as_set()?, b.as_set()?, Merge::Union))
}

pub fn inter(a: &Value, b: &Value) -> WdResult<Value> {
    Ok(merge(a.as_set()?, b.as_set()?, Merge::Inter))
}

pub fn set_minus(a: &Value, b: &Value) -> WdResult<Value> {
    Ok(merge(a.as_set()?, b.as_set()?, Merge::Minus))
}

pub fn cartesian(a: &Value, b: &Value, limits: Limits) -> WdResult<Value> {
    let (a, b) = (a.as_set()?, b.as_set()?);
    limits.check(a.len() as u128 * b.len() as u128, "cartesian product")?;
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(Value::pair(x.clone(), y.clone()));
        }
    }
    Ok(Value::from_sorted(out))
}

pub fn interval(lo: i64, hi: i64, limits: Limits) -> WdResult<Value> {
    if lo > hi {
        return Ok(Value::empty_set());
    }
    limits.check((hi as i128 - lo as i128 + 1) as u128, "interval")?;
    Ok(Value::from_sorted((lo..=hi).map(Value::Int).collect()))
}

pub fn card(s: &Value) -> WdResult<Value> {
    Ok(Value::Int(s.as_set()?.len() as i64))
}

pub fn min(s: &Value) -> WdResult<Value> {
    s.as_set()?
        .first()
        .cloned()
        .ok_or_else(|| WdError::new(EvalErrorKind::EmptyMinMax, "min of the empty set"))
}

pub fn max(s: &Value) -> WdResult<Value> {
    s.as_set()?
        .last()
        .cloned()
        .ok_or_else(|| WdError::new(EvalErrorKind::EmptyMinMax, "max of the empty set"))
}

pub fn dom(r: &Value) -> WdResult<Value> {
    let r = r.as_set()?;
    let mut out: Vec<Value> = Vec::with_capacity(r.len());
    for p in r {
        let x = p.as_pair()?.0;
        if out.last() != Some(x) {
            out.push(x.clone());
        }
    }
    Ok(Value::from_sorted(out))
}

pub fn ran(r: &Value) -> WdResult<Value> {
    let seconds = r
        .as_set()?
        .iter()
        .map(|p| p.as_pair().map(|(_, y)| y.clone()))
        .collect::<WdResult<Vec<_>>>()?;
    Ok(mk_set(seconds))
}

pub fn inverse(r: &Value) -> WdResult<Value> {
    let swapped = r
        .as_set()?
        .iter()
        .map(|p| p.as_pair().map(|(x, y)| Value::pair(y.clone(), x.clone())))
        .collect::<WdResult<Vec<_>>>()?;
    Ok(mk_set(swapped))
}

pub fn image(r: &Value, s: &Value) -> WdResult<Value> {
    let r = r.as_set()?;
    let mut out = Vec::new();
    for x in s.as_set()? {
        for p in pairs_with_first(r, x) {
            out.push(p.as_pair()?.1.clone());
        }
    }
    Ok(mk_set(out))
}

/// Forward composition `r1 ; r2`.
pub fn compose(r1: &Value, r2: &Value, limits: Limits) -> WdResult<Value> {
    let r2 = r2.as_set()?;
    let mut out = Vec::new();
    for p in r1.as_set()? {
        let (x, y) = p.as_pair()?;
        for q in pairs_with_first(r2, y) {
            out.push(Value::pair(x.clone(), q.as_pair()?.1.clone()));
        }
        limits.check(out.len() as u128, "relational composition")?;
    }
    Ok(mk_set(out))
}

fn filter_pairs(
    r: &Value,
    keep: impl Fn(&Value, &Value) -> WdResult<bool>,
) -> WdResult<Value> {
    let mut out = Vec::new();
    for p in r.as_set()? {
        let (x, y) = p.as_pair()?;
        if keep(x, y)? {
            out.push(p.clone());
        }
    }
    Ok(Value::from_sorted(out))
}

pub fn dom_restrict(s: &Value, r: &Value) -> WdResult<Value> {
    let s = s.as_set()?;
    filter_pairs(r, |x, _| Ok(s.binary_search(x).is_ok()))
}

pub fn dom_subtract(s: &Value, r: &Value) -> WdResult<Value> {
    let s = s.as_set()?;
    filter_pairs(r, |x, _| Ok(s.binary_search(x).is_err()))
}

pub fn ran_restrict(r: &Value, t: &Value) -> WdResult<Value> {
    let t = t.as_set()?;
    filter_pairs(r, |_, y| Ok(t.binary_search(y).is_ok()))
}

pub fn ran_subtract(r: &Value, t: &Value) -> WdResult<Value> {
    let t = t.as_set()?;
    filter_pairs(r, |_, y| Ok(t.binary_search(y).is_err()))
}

/// `r1 <+ r2`: `r2` together with the pairs of `r1` outside `dom(r2)`.
pub fn override_rel(r1: &Value, r2: &Value) -> WdResult<Value> {
    let kept = dom_subtract(&dom(r2)?, r1)?;
    union(&kept, r2)
}

/// Returns the elements of `s` when it is a sequence (a function whose
/// domain is exactly `1..n`).
pub fn as_sequence(s: &Value) -> WdResult<&[Value]> {
    let elems = s.as_set()?;
    for (i, p) in elems.iter().enumerate() {
        let ok = matches!(p, Value::Pair(p) if p.0 == Value::Int(i as i64 + 1));
        if !ok {
            return Err(WdError::new(
                EvalErrorKind::NotASequence,
                format!("value is not a sequence: domain is not 1..{}", elems.len()),
            ));
        }
    }
    Ok(elems)
}

pub fn size(s: &Value) -> WdResult<Value> {
    Ok(Value::Int(as_sequence(s)?.len() as i64))
}

pub fn first(s: &Value) -> WdResult<Value> {
    match as_sequence(s)?.first() {
        Some(p) => Ok(p.as_pair()?.1.clone()),
        None => Err(WdError::new(EvalErrorKind::EmptyMinMax, "first of the empty sequence")),
    }
}

pub fn last(s: &Value) -> WdResult<Value> {
    match as_sequence(s)?.last() {
        Some(p) => Ok(p.as_pair()?.1.clone()),
        None => Err(WdError::new(EvalErrorKind::EmptyMinMax, "last of the empty sequence")),
    }
}

/// Operation selector for [`rel_op`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Inter,
    SetMinus,
    Cartesian,
    Dom,
    Ran,
    Inverse,
    Image,
    Compose,
    Override,
    DomRestrict,
    DomSubtract,
    RanRestrict,
    RanSubtract,
    Card,
    Min,
    Max,
    Size,
    First,
    Last,
    Interval,
}

/// Uniform entry point over the set and relation operators.
pub fn rel_op(op: SetOp, args: &[Value], limits: Limits) -> WdResult<Value> {
    let arity = match op {
        SetOp::Dom
        | SetOp::Ran
        | SetOp::Inverse
        | SetOp::Card
        | SetOp::Min
        | SetOp::Max
        | SetOp::Size
        | SetOp::First
        | SetOp::Last => 1,
        _ => 2,
    };
    if args.len() != arity {
        return Err(WdError::new(
            EvalErrorKind::Internal,
            format!("{op:?} takes {arity} operands, got {}", args.len()),
        ));
    }
    let a = &args[0];
    let b = args.get(1);
    let b = || b.expect("arity checked");
    match op {
        SetOp::Union => union(a, b()),
        SetOp::Inter => inter(a, b()),
        SetOp::SetMinus => set_minus(a, b()),
        SetOp::Cartesian => cartesian(a, b(), limits),
        SetOp::Dom => dom(a),
        SetOp::Ran => ran(a),
        SetOp::Inverse => inverse(a),
        SetOp::Image => image(a, b()),
        SetOp::Compose => compose(a, b(), limits),
        SetOp::Override => override_rel(a, b()),
        SetOp::DomRestrict => dom_restrict(a, b()),
        SetOp::DomSubtract => dom_subtract(a, b()),
        SetOp::RanRestrict => ran_restrict(a, b()),
        SetOp::RanSubtract => ran_subtract(a, b()),
        SetOp::Card => card(a),
        SetOp::Min => min(a),
        SetOp::Max => max(a),
        SetOp::Size => size(a),
        SetOp::First => first(a),
        SetOp::Last => last(a),
        SetOp::Interval => interval(a.as_int()?, b().as_int()?, limits),
    }
}
