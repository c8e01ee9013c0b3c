//! CSV loading and binding of declared columns to sequence values.
//!
//! A declaration file lists one item per block:
//!
//! ```text
//! DATA Curvatures_Cap!BeginValueCm : seq(INT) SOURCE "Curvatures_Cap.csv" COLUMN "BeginValueCm"
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eval::Env;
use crate::lang::{tokenize, BType, Loc, Parser, SyntaxError, TokenKind};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dialect {
    pub delimiter: u8,
    pub quote: u8,
}

impl Default for Dialect {
    fn default() -> Self {
        Self { delimiter: b';', quote: b'"' }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub dialect: Dialect,
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: row {row}: {message}")]
    Structure { path: PathBuf, row: usize, message: String },
}

/// Reads and parses a CSV file; the first row is the header.
pub fn read_csv(path: &Path, dialect: Dialect) -> Result<CsvTable, CsvError> {
    let bytes = std::fs::read(path).map_err(|source| CsvError::Io { path: path.to_path_buf(), source })?;
    parse_csv(&bytes, path, dialect)
}

/// Parses CSV text already in memory. `path` is only used for diagnostics.
pub fn parse_csv(bytes: &[u8], path: &Path, dialect: Dialect) -> Result<CsvTable, CsvError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let structure = |row: usize, message: String| CsvError::Structure {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(dialect.delimiter)
        .quote(dialect.quote)
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);

    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(i + 1, |p| p.line() as usize);
            structure(row, e.to_string())
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        let cells: Vec<String> = record.iter().map(str::to_string).collect();
        match &header {
            None => {
                let mut seen = HashSet::new();
                if let Some(dup) = cells.iter().find(|c| !seen.insert(c.as_str())) {
                    return Err(structure(line, format!("duplicate header `{dup}`")));
                }
                header = Some(cells);
            }
            Some(h) => {
                if cells.len() != h.len() {
                    return Err(structure(
                        line,
                        format!("expected {} cells, found {}", h.len(), cells.len()),
                    ));
                }
                rows.push(cells);
            }
        }
    }
    let header = header.ok_or_else(|| structure(1, "missing header row".to_string()))?;
    Ok(CsvTable { path: path.to_path_buf(), header, rows, dialect })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BasicType {
    #[serde(rename = "INT")]
    Int,
    #[serde(rename = "BOOL")]
    Bool,
    #[serde(rename = "STRING")]
    Str,
}

impl BasicType {
    pub fn btype(self) -> BType {
        match self {
            BasicType::Int => BType::Int,
            BasicType::Bool => BType::Bool,
            BasicType::Str => BType::Str,
        }
    }
}

impl fmt::Display for BasicType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasicType::Int => "INT",
            BasicType::Bool => "BOOL",
            BasicType::Str => "STRING",
        })
    }
}

/// A data item bound to one CSV column, typed `seq(elem)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataDecl {
    /// `FileStem!Column`
    pub name: String,
    pub elem: BasicType,
    /// Path as written, relative to the data directory.
    pub source: PathBuf,
    pub column: String,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueReason {
    NotAnInteger,
    NotABoolean,
    MissingColumn,
    ArityMismatch,
    Overflow,
}

impl fmt::Display for IssueReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IssueReason::NotAnInteger => "not-an-integer",
            IssueReason::NotABoolean => "not-a-boolean",
            IssueReason::MissingColumn => "missing-column",
            IssueReason::ArityMismatch => "arity-mismatch",
            IssueReason::Overflow => "overflow",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DataIssue {
    pub decl: String,
    /// 1-based body row (the header is row 0); `None` when the issue is not
    /// tied to a cell.
    pub row: Option<usize>,
    pub cell: String,
    pub reason: IssueReason,
}

impl fmt::Display for DataIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.row {
            Some(row) => write!(f, "{} row {}: {} ({:?})", self.decl, row, self.reason, self.cell),
            None => write!(f, "{}: {} ({})", self.decl, self.reason, self.cell),
        }
    }
}

fn parse_cell(elem: BasicType, raw: &str) -> Result<Value, IssueReason> {
    match elem {
        BasicType::Str => Ok(Value::str(raw)),
        BasicType::Bool => match raw.trim() {
            "TRUE" => Ok(Value::Bool(true)),
            "FALSE" => Ok(Value::Bool(false)),
            _ => Err(IssueReason::NotABoolean),
        },
        BasicType::Int => {
            use std::num::IntErrorKind;
            raw.trim().parse::<i64>().map(Value::Int).map_err(|e| match e.kind() {
                IntErrorKind::PosOverflow | IntErrorKind::NegOverflow => IssueReason::Overflow,
                _ => IssueReason::NotAnInteger,
            })
        }
    }
}

/// Builds the sequence of `decl`'s column, or every offending cell.
pub fn bind_column(decl: &DataDecl, table: &CsvTable) -> Result<Value, Vec<DataIssue>> {
    let Some(col) = table.header.iter().position(|h| h == &decl.column) else {
        return Err(vec![DataIssue {
            decl: decl.name.clone(),
            row: None,
            cell: decl.column.clone(),
            reason: IssueReason::MissingColumn,
        }]);
    };
    let mut values = Vec::with_capacity(table.rows.len());
    let mut issues = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        match parse_cell(decl.elem, &row[col]) {
            Ok(v) => values.push(v),
            Err(reason) => issues.push(DataIssue {
                decl: decl.name.clone(),
                row: Some(i + 1),
                cell: row[col].clone(),
                reason,
            }),
        }
    }
    if issues.is_empty() {
        Ok(Value::sequence(values))
    } else {
        Err(issues)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("declaration {decl}: cannot read {path}: {source}")]
    Io { decl: String, path: PathBuf, source: std::io::Error },
    #[error("data item {0} declared twice")]
    DuplicateDecl(String),
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
}

/// Parses a declaration file.
pub fn parse_declarations(text: &str) -> Result<Vec<DataDecl>, SyntaxError> {
    let tokens = tokenize(text)?;
    let mut p = Parser::new(&tokens);
    let mut decls = Vec::new();
    while !p.at_eof() {
        let loc = p.expect_keyword("DATA")?;
        let t = p.peek();
        if t.kind != TokenKind::QualifiedIdent {
            return Err(p.error_expected("qualified name `File!Column`"));
        }
        let name = p.advance().text.clone();
        p.expect_op(":")?;
        p.expect_keyword("seq")?;
        p.expect_op("(")?;
        let elem = match p.peek().text.as_str() {
            "INT" => BasicType::Int,
            "BOOL" => BasicType::Bool,
            "STRING" => BasicType::Str,
            _ => return Err(p.error_expected("INT, BOOL or STRING")),
        };
        p.advance();
        p.expect_op(")")?;
        p.expect_keyword("SOURCE")?;
        let source = expect_string(&mut p)?;
        p.expect_keyword("COLUMN")?;
        let column = expect_string(&mut p)?;

        let source = PathBuf::from(source);
        let stem = source.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let file_part = name.split('!').next().unwrap_or_default();
        if stem != file_part {
            return Err(SyntaxError::new(
                loc,
                format!("data item {name} must come from a file named {file_part}, not {}", source.display()),
            ));
        }
        decls.push(DataDecl { name, elem, source, column, loc });
    }
    Ok(decls)
}

fn expect_string(p: &mut Parser<'_>) -> Result<String, SyntaxError> {
    if p.peek().kind == TokenKind::StrLit {
        Ok(p.advance().text.clone())
    } else {
        Err(p.error_expected("string literal"))
    }
}

/// Outcome of loading all declared data: the environment exists only when
/// no issue was found.
#[derive(Debug)]
pub struct Ingested {
    pub env: Option<Env>,
    pub issues: Vec<DataIssue>,
}

/// Loads every source file once and binds every declaration.
pub fn build_env(decls: &[DataDecl], data_dir: &Path, dialect: Dialect) -> Result<Ingested, IngestError> {
    let mut seen = HashSet::new();
    for d in decls {
        if !seen.insert(d.name.as_str()) {
            return Err(IngestError::DuplicateDecl(d.name.clone()));
        }
    }

    let mut sources: BTreeMap<&Path, &DataDecl> = BTreeMap::new();
    for d in decls {
        sources.entry(d.source.as_path()).or_insert(d);
    }
    let loaded: Vec<(&Path, Result<CsvTable, CsvError>)> = sources
        .par_iter()
        .map(|(src, _)| (*src, read_csv(&data_dir.join(src), dialect)))
        .collect();

    let mut tables: BTreeMap<&Path, Result<CsvTable, (usize, String)>> = BTreeMap::new();
    for (src, res) in loaded {
        match res {
            Ok(t) => {
                tables.insert(src, Ok(t));
            }
            Err(CsvError::Io { path, source }) => {
                return Err(IngestError::Io { decl: sources[src].name.clone(), path, source });
            }
            Err(CsvError::Structure { row, message, .. }) => {
                tables.insert(src, Err((row, message)));
            }
        }
    }

    let mut env = Env::new();
    let mut issues = Vec::new();
    for d in decls {
        match &tables[d.source.as_path()] {
            Ok(table) => match bind_column(d, table) {
                Ok(v) => env.bind(d.name.clone(), v, BType::seq(d.elem.btype())),
                Err(mut found) => issues.append(&mut found),
            },
            Err((row, message)) => issues.push(DataIssue {
                decl: d.name.clone(),
                row: Some(row.saturating_sub(1)),
                cell: message.clone(),
                reason: IssueReason::ArityMismatch,
            }),
        }
    }
    let env = issues.is_empty().then_some(env);
    Ok(Ingested { env, issues })
}
