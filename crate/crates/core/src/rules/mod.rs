//! Verification rules: parsing, definition expansion and execution.
//!
//! ```text
//! DEFINITION OMAP == "Trackside OMAP"
//!
//! RULE omap_per_sector
//!   COUNTEREXAMPLE "sector %1 has %3 OMAPs"
//!   ANY s, equipment, nb
//!   WHERE s : ran(Sectors!Id) & equipment = OMAP & nb = card(...)
//!   EXPECTED nb >= 1
//!   END
//! END
//! ```

use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::eval::{EnumPlan, EvalError};
use crate::lang::{Loc, Pred, SyntaxError, Term, TypeError};
use crate::value::Value;

mod check;
mod expand;
mod parse;

pub use check::{check_rule, prepare_rule, run_all, RunOptions};
pub use expand::expand_defs;
pub use parse::{check_unique_ids, parse_rule_file};

/// Rule parameters are referenced by single-digit placeholders.
pub const MAX_PARAMS: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    pub body: Term,
    pub loc: Loc,
}

/// One `COUNTEREXAMPLE ... ANY ... WHERE ... EXPECTED ... END` block.
#[derive(Debug, Clone, PartialEq)]
pub struct CxBlock {
    pub template: String,
    pub params: Vec<String>,
    pub where_: Pred,
    pub expected: Pred,
    pub loc: Loc,
    /// Set by [`prepare_rule`].
    pub plan: Option<Arc<EnumPlan>>,
    /// Planning failure detected at load time, reported when the block runs.
    pub plan_error: Option<EvalError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: String,
    pub blocks: Vec<CxBlock>,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "ERROR")]
    Error,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Error => "ERROR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessParam {
    pub name: String,
    /// Machine rendering of the value.
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub rule_id: String,
    /// 1-based.
    pub block: usize,
    pub message: String,
    pub witness: Vec<WitnessParam>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RuleResult {
    pub rule_id: String,
    pub verdict: Verdict,
    pub findings: Vec<Finding>,
    pub error: Option<EvalError>,
    /// Block (1-based) that raised `error`.
    pub error_block: Option<usize>,
    pub truncated: bool,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Error)]
pub enum RulesError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{loc}: rule {rule}, block {block}: placeholder %{index} but only {params} parameter(s)")]
    PlaceholderOutOfRange { rule: String, block: usize, index: usize, params: usize, loc: Loc },
    #[error("{loc}: rule {rule}, block {block}: at most {MAX_PARAMS} parameters are allowed")]
    TooManyParameters { rule: String, block: usize, loc: Loc },
    #[error("{loc}: rule {rule}, block {block}: parameter `{name}` listed twice")]
    DuplicateParameter { rule: String, block: usize, name: String, loc: Loc },
    #[error("{loc}: duplicate rule id {id}")]
    DuplicateRuleId { id: String, loc: Loc },
    #[error("{loc}: definition {name} is defined twice")]
    DuplicateDefinition { name: String, loc: Loc },
    #[error("{loc}: definition {name} collides with a data item")]
    DefinitionCollision { name: String, loc: Loc },
    #[error("cyclic definitions: {}", .cycle.join(" -> "))]
    CyclicDefinition { cycle: Vec<String> },
    #[error("{loc}: unknown name `{name}` in {context}")]
    UnknownName { name: String, context: String, loc: Loc },
    #[error("{loc}: `{name}` in {context} shadows a data item or definition")]
    Shadowing { name: String, context: String, loc: Loc },
    #[error("{loc}: `{name}` in {context} is {found}, expected {wanted}")]
    KindMismatch { name: String, context: String, found: &'static str, wanted: &'static str, loc: Loc },
    #[error("rule {rule}, block {block}: {error}")]
    Type { rule: String, block: usize, error: TypeError },
}

/// Returns the first placeholder index outside `1..=params` in `template`.
pub fn invalid_placeholder(template: &str, params: usize) -> Option<usize> {
    let mut chars = template.chars();
    while let Some(c) = chars.next() {
        if c != '%' {
            continue;
        }
        match chars.clone().next() {
            Some('%') => {
                chars.next();
            }
            Some(d @ '0'..='9') => {
                chars.next();
                let k = d as usize - '0' as usize;
                if k == 0 || k > params {
                    return Some(k);
                }
            }
            _ => {}
        }
    }
    None
}

/// Instantiates a message template: `%k` is the k-th value, `%%` a percent
/// sign.
pub fn format_message(template: &str, values: &[Value]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut chars = template.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '%' {
            out.push(c);
            continue;
        }
        match chars.peek().copied() {
            Some('%') => {
                chars.next();
                out.push('%');
            }
            Some(d @ '1'..='9') if (d as usize - '1' as usize) < values.len() => {
                chars.next();
                out.push_str(&values[d as usize - '1' as usize].to_message_string());
            }
            _ => out.push('%'),
        }
    }
    out
}
