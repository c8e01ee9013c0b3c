//! Rule execution.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::{format_message, CxBlock, Finding, Rule, RuleResult, RulesError, Verdict, WitnessParam};
use crate::eval::{attach_plans_pred, plan_enum, Env, EvalError, EvalErrorKind, Evaluator, Flow};
use crate::lang::{typecheck_terms, TermMut};
use crate::value::{Limits, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Findings kept per block before the block stops.
    pub max_findings: usize,
    /// Worker threads; 0 picks one per core.
    pub jobs: usize,
    pub limits: Limits,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { max_findings: 10_000, jobs: 0, limits: Limits::default() }
    }
}

/// Typechecks and plans every block of an expanded rule. Type errors are
/// returned; an unplannable block is recorded on the block and surfaces as an
/// ERROR verdict when the rule runs.
pub fn prepare_rule(rule: &mut Rule, env: &Env) -> Result<(), RulesError> {
    for (i, b) in rule.blocks.iter_mut().enumerate() {
        typecheck_terms(
            &b.params,
            &mut [TermMut::Pred(&mut b.where_), TermMut::Pred(&mut b.expected)],
            env.types(),
        )
        .map_err(|error| RulesError::Type { rule: rule.id.clone(), block: i + 1, error })?;
        let planned = attach_plans_pred(&mut b.where_)
            .and_then(|_| attach_plans_pred(&mut b.expected))
            .and_then(|_| plan_enum(&b.params, &b.where_));
        match planned {
            Ok(plan) => b.plan = Some(Arc::new(plan)),
            Err(e) => b.plan_error = Some(e),
        }
    }
    Ok(())
}

/// Runs every block of `rule` in order. Each block gets a fresh evaluator, so
/// nothing computed in one block is visible to the next.
pub fn check_rule(rule: &Rule, env: &Env, opts: RunOptions) -> RuleResult {
    let start = Instant::now();
    let mut findings = Vec::new();
    let mut truncated = false;
    let mut error = None;
    let mut error_block = None;
    for (i, block) in rule.blocks.iter().enumerate() {
        match run_block(&rule.id, i + 1, block, env, opts, &mut findings) {
            Ok(t) => truncated |= t,
            Err(e) => {
                error = Some(e);
                error_block = Some(i + 1);
                break;
            }
        }
    }
    let verdict = if error.is_some() {
        Verdict::Error
    } else if findings.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    RuleResult {
        rule_id: rule.id.clone(),
        verdict,
        findings,
        error,
        error_block,
        truncated,
        elapsed: start.elapsed(),
    }
}

/// Appends the block's findings; returns whether it was truncated.
fn run_block(
    rule_id: &str,
    index: usize,
    block: &CxBlock,
    env: &Env,
    opts: RunOptions,
    findings: &mut Vec<Finding>,
) -> Result<bool, EvalError> {
    if let Some(e) = &block.plan_error {
        return Err(e.clone());
    }
    let Some(plan) = &block.plan else {
        return Err(EvalError::new(EvalErrorKind::Internal, block.loc, "rule checked before preparation"));
    };
    let mut ev = Evaluator::new(env, opts.limits);
    let mut kept = 0;
    let mut truncated = false;
    let _ = ev.enumerate_with(plan, &mut |ev| {
        if ev.eval_pred(&block.expected)? {
            return Ok(Flow::Continue(()));
        }
        if kept == opts.max_findings {
            truncated = true;
            return Ok(Flow::Break(()));
        }
        let values: Vec<Value> =
            block.params.iter().map(|p| ev.lookup(p).cloned().expect("parameter is bound")).collect();
        findings.push(Finding {
            rule_id: rule_id.to_string(),
            block: index,
            message: format_message(&block.template, &values),
            witness: block
                .params
                .iter()
                .zip(&values)
                .map(|(name, v)| WitnessParam { name: name.clone(), value: v.to_machine_string() })
                .collect(),
        });
        kept += 1;
        Ok(Flow::Continue(()))
    })?;
    Ok(truncated)
}

/// Checks every rule, `opts.jobs` at a time. Results are in `rules` order.
pub fn run_all(rules: &[Rule], env: &Env, opts: RunOptions) -> Vec<RuleResult> {
    let check = || rules.par_iter().map(|r| check_rule(r, env, opts)).collect();
    match rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build() {
        Ok(pool) => pool.install(check),
        Err(_) => rules.iter().map(|r| check_rule(r, env, opts)).collect(),
    }
}
