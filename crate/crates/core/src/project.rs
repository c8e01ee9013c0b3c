//! Project configuration and the load, bind, check, report pipeline.
//!
//! A project file is a small `key = value` format with sections:
//!
//! ```text
//! # railway data
//! [input]
//! data_dir = data
//! delimiter = ;
//! declarations = data.decl
//! rules = rules/geometry.rules, rules/equipment.rules
//!
//! [output]
//! dir = out
//! formats = text, csv, json
//!
//! [engine]
//! max_findings = 10000
//! jobs = 4
//! max_set_size = 1000000
//! ```
//!
//! List values are comma separated, and a list key may also be repeated.
//! Relative paths are resolved against the directory of the project file.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::Utc;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{build_env, parse_declarations, Dialect};
use crate::report::{emit, Format, Report};
use crate::rules::{check_unique_ids, expand_defs, parse_rule_file, prepare_rule, run_all, RunOptions};
use crate::value::Limits;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectConfig {
    /// Directory the project file lives in; relative paths are shown against it.
    pub base_dir: PathBuf,
    /// Raw project file text, part of the input digest.
    pub config_text: String,
    pub data_dir: PathBuf,
    pub dialect: Dialect,
    pub declarations: Vec<PathBuf>,
    pub rules: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub max_findings: usize,
    pub jobs: usize,
    pub max_set_size: usize,
}

impl ProjectConfig {
    /// A configuration with every default, rooted at `base_dir`.
    pub fn new(base_dir: &Path) -> Self {
        Self {
            base_dir: base_dir.to_path_buf(),
            config_text: String::new(),
            data_dir: base_dir.to_path_buf(),
            dialect: Dialect::default(),
            declarations: Vec::new(),
            rules: Vec::new(),
            out_dir: base_dir.join("out"),
            formats: vec![Format::Text, Format::Csv],
            max_findings: 10_000,
            jobs: 0,
            max_set_size: Limits::default().max_set_size,
        }
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            max_findings: self.max_findings,
            jobs: self.jobs,
            limits: Limits { max_set_size: self.max_set_size },
        }
    }

    fn shown(&self, p: &Path) -> String {
        p.strip_prefix(&self.base_dir).unwrap_or(p).display().to_string()
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing mandatory key `{0}`")]
    MissingKey(&'static str),
}

/// Reads and parses a project file.
pub fn load_project(path: &Path) -> Result<ProjectConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_project(&text, &base)
}

/// Parses project text; relative paths are taken against `base_dir`.
pub fn parse_project(text: &str, base_dir: &Path) -> Result<ProjectConfig, ConfigError> {
    let mut cfg = ProjectConfig::new(base_dir);
    cfg.config_text = text.to_string();
    let mut section = String::new();
    let mut formats: Option<Vec<Format>> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| ConfigError::Parse { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            if !matches!(section.as_str(), "input" | "output" | "engine") {
                return Err(err(format!("unknown section [{section}]")));
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(format!("expected `key = value`, found `{line}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        let full = if key.contains('.') || section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        let list = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
        let number = || value.parse::<usize>().map_err(|_| err(format!("`{full}` must be a non-negative integer")));
        match full.as_str() {
            "input.data_dir" => cfg.data_dir = base_dir.join(value),
            "input.delimiter" => cfg.dialect.delimiter = parse_delimiter(value).map_err(err)?,
            "input.declarations" => cfg.declarations.extend(list().map(|p| base_dir.join(p))),
            "input.rules" => cfg.rules.extend(list().map(|p| base_dir.join(p))),
            "output.dir" => cfg.out_dir = base_dir.join(value),
            "output.formats" => {
                let fs = formats.get_or_insert_with(Vec::new);
                for f in list() {
                    fs.push(Format::parse(f).ok_or_else(|| err(format!("unknown report format `{f}`")))?);
                }
            }
            "engine.max_findings" => {
                cfg.max_findings = number()?;
                if cfg.max_findings == 0 {
                    return Err(err("`engine.max_findings` must be at least 1".into()));
                }
            }
            "engine.jobs" => cfg.jobs = number()?,
            "engine.max_set_size" => cfg.max_set_size = number()?,
            _ => return Err(err(format!("unknown key `{full}`"))),
        }
    }
    if let Some(mut fs) = formats {
        fs.sort();
        fs.dedup();
        cfg.formats = fs;
    }
    if cfg.declarations.is_empty() {
        return Err(ConfigError::MissingKey("input.declarations"));
    }
    if cfg.rules.is_empty() {
        return Err(ConfigError::MissingKey("input.rules"));
    }
    Ok(cfg)
}

/// Accepts a single ASCII character, or `tab` / `\t`.
pub fn parse_delimiter(value: &str) -> Result<u8, String> {
    match value {
        "tab" | "\\t" => return Ok(b'\t'),
        _ => {}
    }
    let mut chars = value.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii() && c != '"' && c != '\n' && c != '\r' => Ok(c as u8),
        _ => Err(format!("delimiter must be a single ASCII character, found `{value}`")),
    }
}

fn digest_part(h: &mut Sha256, label: &str, bytes: &[u8]) {
    h.update(label.as_bytes());
    h.update([0]);
    h.update((bytes.len() as u64).to_le_bytes());
    h.update(bytes);
}

/// Runs the whole pipeline. Nothing escapes as an error: every failure is
/// recorded in the report and reflected in the exit code.
pub fn run_project(cfg: &ProjectConfig) -> (Report, i32) {
    let started = Utc::now();
    let clock = Instant::now();
    let mut hasher = Sha256::new();
    digest_part(&mut hasher, "config", cfg.config_text.as_bytes());
    let mut load_errors = Vec::new();

    let mut decls = Vec::new();
    for path in &cfg.declarations {
        match fs::read_to_string(path) {
            Ok(text) => {
                digest_part(&mut hasher, &cfg.shown(path), text.as_bytes());
                match parse_declarations(&text) {
                    Ok(d) => decls.extend(d),
                    Err(e) => load_errors.push(format!("{}: {e}", cfg.shown(path))),
                }
            }
            Err(e) => load_errors.push(format!("{}: {e}", cfg.shown(path))),
        }
    }

    let mut defs = Vec::new();
    let mut rules = Vec::new();
    for path in &cfg.rules {
        match fs::read_to_string(path) {
            Ok(text) => {
                digest_part(&mut hasher, &cfg.shown(path), text.as_bytes());
                match parse_rule_file(&text) {
                    Ok((d, r)) => {
                        defs.extend(d);
                        rules.extend(r);
                    }
                    Err(e) => load_errors.push(format!("{}: {e}", cfg.shown(path))),
                }
            }
            Err(e) => load_errors.push(format!("{}: {e}", cfg.shown(path))),
        }
    }
    if let Err(e) = check_unique_ids(&rules) {
        load_errors.push(e.to_string());
    }

    let sources: BTreeSet<&Path> = decls.iter().map(|d| d.source.as_path()).collect();
    for src in sources {
        if let Ok(bytes) = fs::read(cfg.data_dir.join(src)) {
            digest_part(&mut hasher, &src.display().to_string(), &bytes);
        }
    }
    let digest = format!("sha256:{}", hex::encode(hasher.finalize()));

    let finish = |load_errors, issues, results| {
        let mut report = Report::new(digest.clone(), started, load_errors, issues, results);
        report.elapsed = clock.elapsed();
        let code = report.exit_code();
        (report, code)
    };

    if !load_errors.is_empty() {
        return finish(load_errors, Vec::new(), Vec::new());
    }
    let ingested = match build_env(&decls, &cfg.data_dir, cfg.dialect) {
        Ok(i) => i,
        Err(e) => return finish(vec![e.to_string()], Vec::new(), Vec::new()),
    };
    let Some(env) = ingested.env else {
        return finish(Vec::new(), ingested.issues, Vec::new());
    };

    let mut rules = match expand_defs(&defs, rules, env.types()) {
        Ok(r) => r,
        Err(e) => return finish(vec![e.to_string()], Vec::new(), Vec::new()),
    };
    for rule in &mut rules {
        if let Err(e) = prepare_rule(rule, &env) {
            load_errors.push(e.to_string());
        }
    }
    if !load_errors.is_empty() {
        return finish(load_errors, Vec::new(), Vec::new());
    }

    let results = run_all(&rules, &env, cfg.run_options());
    finish(Vec::new(), Vec::new(), results)
}

/// Writes one file per configured format into the output directory.
pub fn write_reports(report: &Report, cfg: &ProjectConfig) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out_dir)?;
    let mut written = Vec::new();
    for &format in &cfg.formats {
        let path = cfg.out_dir.join(format.file_name());
        fs::write(&path, emit(report, format))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_filled() {
        let cfg = parse_project("[input]\ndeclarations = d.decl\nrules = r.rules\n", Path::new("/p")).unwrap();
        assert_eq!(cfg.dialect.delimiter, b';');
        assert_eq!(cfg.max_findings, 10_000);
        assert_eq!(cfg.formats, [Format::Text, Format::Csv]);
        assert_eq!(cfg.rules, [PathBuf::from("/p/r.rules")]);
        assert_eq!(cfg.data_dir, PathBuf::from("/p"));
    }

    #[test]
    fn missing_rules() {
        let err = parse_project("[input]\ndeclarations = d.decl\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, ConfigError::MissingKey("input.rules")));
    }

    #[test]
    fn lists_repeats_and_overrides() {
        let text = "# c\n[input]\ndata_dir = csv\ndelimiter = ,\ndeclarations = a.decl\n\
                    rules = x.rules, y.rules\nrules = z.rules\n[output]\nformats = json, csv\n[engine]\njobs = 2\n";
        let cfg = parse_project(text, Path::new("/p")).unwrap();
        assert_eq!(cfg.rules.len(), 3);
        assert_eq!(cfg.data_dir, PathBuf::from("/p/csv"));
        assert_eq!(cfg.dialect.delimiter, b',');
        assert_eq!(cfg.formats, [Format::Csv, Format::Json]);
        assert_eq!(cfg.jobs, 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_project("[input]\nrules = r\nbogus = 1\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err}");
        let err = parse_project("[input]\nrules\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err}");
    }
}
