//! Rule-file grammar.

use std::collections::HashSet;

use super::{invalid_placeholder, CxBlock, Definition, Rule, RulesError, MAX_PARAMS};
use crate::lang::{tokenize, Parser, TokenKind};

/// Parses one rule file into its definitions and rules, in file order.
pub fn parse_rule_file(text: &str) -> Result<(Vec<Definition>, Vec<Rule>), RulesError> {
    let tokens = tokenize(text)?;
    let mut p = Parser::new(&tokens);
    let mut defs = Vec::new();
    let mut rules = Vec::new();
    while !p.at_eof() {
        if p.peek().is_keyword("DEFINITION") {
            defs.push(definition(&mut p)?);
        } else if p.peek().is_keyword("RULE") {
            rules.push(rule(&mut p)?);
        } else {
            return Err(p.error_expected("RULE or DEFINITION").into());
        }
    }
    check_unique_ids(&rules)?;
    Ok((defs, rules))
}

/// Rejects the second occurrence of any rule id.
pub fn check_unique_ids(rules: &[Rule]) -> Result<(), RulesError> {
    let mut seen = HashSet::new();
    for r in rules {
        if !seen.insert(r.id.as_str()) {
            return Err(RulesError::DuplicateRuleId { id: r.id.clone(), loc: r.loc });
        }
    }
    Ok(())
}

fn definition(p: &mut Parser<'_>) -> Result<Definition, RulesError> {
    let loc = p.expect_keyword("DEFINITION")?;
    let (name, _) = p.expect_ident()?;
    p.expect_op("==")?;
    let body = p.term()?;
    Ok(Definition { name, body, loc })
}

fn rule(p: &mut Parser<'_>) -> Result<Rule, RulesError> {
    let loc = p.expect_keyword("RULE")?;
    let id = match p.peek().kind {
        TokenKind::Ident | TokenKind::IntLit | TokenKind::StrLit => p.advance().text.clone(),
        _ => return Err(p.error_expected("rule id").into()),
    };
    let mut blocks = Vec::new();
    loop {
        blocks.push(block(p, &id, blocks.len() + 1)?);
        if !p.peek().is_keyword("COUNTEREXAMPLE") {
            break;
        }
    }
    p.expect_keyword("END")?;
    Ok(Rule { id, blocks, loc })
}

fn block(p: &mut Parser<'_>, rule: &str, index: usize) -> Result<CxBlock, RulesError> {
    let loc = p.expect_keyword("COUNTEREXAMPLE")?;
    if p.peek().kind != TokenKind::StrLit {
        return Err(p.error_expected("message string").into());
    }
    let template = p.advance().text.clone();
    p.expect_keyword("ANY")?;
    let mut params = Vec::new();
    loop {
        let (name, ploc) = p.expect_ident()?;
        if params.contains(&name) {
            return Err(RulesError::DuplicateParameter { rule: rule.into(), block: index, name, loc: ploc });
        }
        params.push(name);
        if !p.eat_op(",") {
            break;
        }
    }
    if params.len() > MAX_PARAMS {
        return Err(RulesError::TooManyParameters { rule: rule.into(), block: index, loc });
    }
    if let Some(k) = invalid_placeholder(&template, params.len()) {
        return Err(RulesError::PlaceholderOutOfRange {
            rule: rule.into(),
            block: index,
            index: k,
            params: params.len(),
            loc,
        });
    }
    p.expect_keyword("WHERE")?;
    let where_ = p.pred()?;
    p.expect_keyword("EXPECTED")?;
    let expected = p.pred()?;
    p.expect_keyword("END")?;
    Ok(CxBlock { template, params, where_, expected, loc, plan: None, plan_error: None })
}
