//! Verification reports and their text, CSV and JSON renderings.
//!
//! The CSV and JSON forms are a pure function of the inputs; the start
//! timestamp appears only in the text form.

use std::fmt::Write as _;
use std::time::Duration;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;

use crate::ingest::DataIssue;
use crate::rules::{RuleResult, Verdict, MAX_PARAMS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Format> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" | "txt" => Some(Format::Text),
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Format::Text => "report.txt",
            Format::Csv => "report.csv",
            Format::Json => "report.json",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub rules: usize,
    pub pass: usize,
    pub fail: usize,
    pub error: usize,
    pub findings: usize,
    pub truncated: usize,
    pub data_issues: usize,
    pub load_errors: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool_version: String,
    /// `sha256:` followed by the hex digest of every input file.
    pub config_digest: String,
    #[serde(skip)]
    pub started: DateTime<Utc>,
    #[serde(skip)]
    pub elapsed: Duration,
    pub summary: Summary,
    pub load_errors: Vec<String>,
    pub data_issues: Vec<DataIssue>,
    pub results: Vec<RuleResult>,
}

impl Report {
    pub fn new(
        config_digest: String,
        started: DateTime<Utc>,
        load_errors: Vec<String>,
        data_issues: Vec<DataIssue>,
        results: Vec<RuleResult>,
    ) -> Self {
        let mut summary = Summary {
            rules: results.len(),
            data_issues: data_issues.len(),
            load_errors: load_errors.len(),
            ..Summary::default()
        };
        for r in &results {
            match r.verdict {
                Verdict::Pass => summary.pass += 1,
                Verdict::Fail => summary.fail += 1,
                Verdict::Error => summary.error += 1,
            }
            summary.findings += r.findings.len();
            summary.truncated += usize::from(r.truncated);
        }
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest,
            started,
            elapsed: Duration::ZERO,
            summary,
            load_errors,
            data_issues,
            results,
        }
    }

    /// 0 when everything passed, 1 when some rule failed, 2 on any error,
    /// data issue or load failure.
    pub fn exit_code(&self) -> i32 {
        let s = &self.summary;
        if s.error > 0 || s.data_issues > 0 || s.load_errors > 0 {
            2
        } else if s.fail > 0 {
            1
        } else {
            0
        }
    }
}

pub fn emit(report: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Text => emit_text(report).into_bytes(),
        Format::Csv => emit_csv(report),
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
    }
}

fn summary_line(s: &Summary) -> String {
    format!(
        "rules: {}, pass: {}, fail: {}, error: {}, findings: {}, truncated: {}, data issues: {}, load errors: {}",
        s.rules, s.pass, s.fail, s.error, s.findings, s.truncated, s.data_issues, s.load_errors
    )
}

fn error_line(r: &RuleResult) -> Option<String> {
    let e = r.error.as_ref()?;
    let mut line = format!("block {}: {} at {}: {}", r.error_block.unwrap_or(0), e.kind, e.loc, e.message);
    if let Some(w) = &e.witness {
        let _ = write!(line, " (value {w})");
    }
    if let Some(b) = &e.binding {
        let _ = write!(line, " [{b}]");
    }
    Some(line)
}

fn one_line(s: &str) -> String {
    s.replace(['\r', '\n'], " ")
}

fn emit_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "bvalid {} verification report", report.tool_version);
    let _ = writeln!(out, "started: {}", report.started.to_rfc3339_opts(SecondsFormat::Secs, true));
    let _ = writeln!(out, "elapsed: {:.3}s", report.elapsed.as_secs_f64());
    let _ = writeln!(out, "inputs: {}", report.config_digest);
    let _ = writeln!(out, "{}", summary_line(&report.summary));

    if !report.load_errors.is_empty() {
        let _ = writeln!(out, "\nLoad errors:");
        for e in &report.load_errors {
            let _ = writeln!(out, "  {e}");
        }
    }
    if !report.data_issues.is_empty() {
        let _ = writeln!(out, "\nData issues:");
        for i in &report.data_issues {
            let _ = writeln!(out, "  {i}");
        }
    }
    for r in &report.results {
        let _ = write!(out, "\n{} {}", r.verdict.as_str(), r.rule_id);
        if !r.findings.is_empty() {
            let _ = write!(out, " ({} counterexample{})", r.findings.len(), if r.findings.len() == 1 { "" } else { "s" });
        }
        out.push('\n');
        for f in &r.findings {
            let _ = writeln!(out, "  [{}] {}", f.block, f.message);
        }
        if r.truncated {
            let _ = writeln!(out, "  (truncated: further counterexamples not listed)");
        }
        if let Some(line) = error_line(r) {
            let _ = writeln!(out, "  error: {line}");
        }
    }
    out
}

fn emit_csv(report: &Report) -> Vec<u8> {
    let mut out = String::new();
    let _ = writeln!(out, "# bvalid {}", report.tool_version);
    let _ = writeln!(out, "# inputs: {}", report.config_digest);
    let _ = writeln!(out, "# {}", summary_line(&report.summary));
    for e in &report.load_errors {
        let _ = writeln!(out, "# load error: {}", one_line(e));
    }
    for i in &report.data_issues {
        let _ = writeln!(out, "# data issue: {}", one_line(&i.to_string()));
    }
    for r in &report.results {
        if let Some(line) = error_line(r) {
            let _ = writeln!(out, "# error: {}: {}", r.rule_id, one_line(&line));
        }
        if r.truncated {
            let _ = writeln!(out, "# truncated: {}", r.rule_id);
        }
    }
    let mut bytes = out.into_bytes();

    let mut w = csv::WriterBuilder::new().delimiter(b';').terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["rule_id".to_string(), "block".to_string(), "message".to_string()];
    header.extend((1..=MAX_PARAMS).map(|k| format!("param_{k}")));
    w.write_record(&header).expect("in-memory write");
    for r in &report.results {
        for f in &r.findings {
            let mut row = vec![f.rule_id.clone(), f.block.to_string(), f.message.clone()];
            row.extend(f.witness.iter().map(|p| p.value.clone()));
            row.resize(3 + MAX_PARAMS, String::new());
            w.write_record(&row).expect("in-memory write");
        }
    }
    bytes.extend(w.into_inner().expect("in-memory flush"));
    bytes
}
