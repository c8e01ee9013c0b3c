//! Tokenizer for the B-language subset and the rule/declaration file formats.

use std::fmt;

use super::SyntaxError;

/// A 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Loc {
    pub line: u32,
    pub column: u32,
}

impl Loc {
    pub fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Ident,
    /// `File!Column`
    QualifiedIdent,
    IntLit,
    /// Text holds the decoded contents, without quotes.
    StrLit,
    Operator,
    Punct,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub loc: Loc,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    pub fn is_op(&self, text: &str) -> bool {
        matches!(self.kind, TokenKind::Operator | TokenKind::Punct) && self.text == text
    }

    pub fn is_keyword(&self, text: &str) -> bool {
        self.is(TokenKind::Keyword, text)
    }

    /// Human-readable description used in diagnostics.
    pub fn describe(&self) -> String {
        match self.kind {
            TokenKind::Eof => "end of input".to_string(),
            TokenKind::StrLit => format!("string \"{}\"", self.text),
            _ => format!("`{}`", self.text),
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    // logic and expressions
    "or", "not", "mod", "TRUE", "FALSE", "card", "min", "max", "dom", "ran", "size", "first",
    "last", "prj1", "prj2",
    // rule files
    "RULE", "COUNTEREXAMPLE", "ANY", "WHERE", "EXPECTED", "END", "DEFINITION",
    // declaration files
    "DATA", "SOURCE", "COLUMN", "seq", "INT", "BOOL", "STRING",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// Multi-character operators, longest first so that a linear scan implements
/// maximal munch.
const OPERATORS: &[&str] = &[
    "<<|", "|>>", "|->", "<=>", "/<:", "=>", "==", "<=", ">=", "/=", "/:", "<:", "<|", "|>", "<+",
    "\\/", "/\\", "..", "+", "-", "*", "/", "~", ":", ";", "&", "%", "!", "#", "=", "<", ">",
];

const PUNCT: &[char] = &['(', ')', '{', '}', '[', ']', ',', '.', '|'];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Lexer<'s> {
    src: &'s str,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'s> Lexer<'s> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn loc(&self) -> Loc {
        Loc::new(self.line, self.column)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek_at(1) == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(is_ident_char) {
            self.bump();
        }
        self.src[start..self.pos].to_string()
    }

    fn string(&mut self, start: Loc) -> Result<String, SyntaxError> {
        self.bump(); // opening quote
        let mut out = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(SyntaxError::new(start, "unterminated string literal"));
                }
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    _ => {
                        return Err(SyntaxError::new(
                            start,
                            "invalid escape sequence in string literal",
                        ))
                    }
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, SyntaxError> {
        self.skip_trivia();
        let loc = self.loc();
        let Some(c) = self.peek() else {
            return Ok(Token { kind: TokenKind::Eof, text: String::new(), loc });
        };

        if is_ident_start(c) {
            let first = self.ident();
            // `File!Column`: no whitespace allowed around the bang.
            if self.peek() == Some('!') && self.peek_at(1).is_some_and(is_ident_start) {
                self.bump();
                let second = self.ident();
                return Ok(Token {
                    kind: TokenKind::QualifiedIdent,
                    text: format!("{first}!{second}"),
                    loc,
                });
            }
            let kind = if is_keyword(&first) { TokenKind::Keyword } else { TokenKind::Ident };
            return Ok(Token { kind, text: first, loc });
        }

        if c.is_ascii_digit() {
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
            if self.peek().is_some_and(is_ident_start) {
                return Err(SyntaxError::new(loc, "identifier cannot start with a digit"));
            }
            return Ok(Token {
                kind: TokenKind::IntLit,
                text: self.src[start..self.pos].to_string(),
                loc,
            });
        }

        if c == '"' {
            let text = self.string(loc)?;
            return Ok(Token { kind: TokenKind::StrLit, text, loc });
        }

        let rest = &self.src[self.pos..];
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            for _ in 0..op.chars().count() {
                self.bump();
            }
            return Ok(Token { kind: TokenKind::Operator, text: op.to_string(), loc });
        }
        if PUNCT.contains(&c) {
            self.bump();
            return Ok(Token { kind: TokenKind::Punct, text: c.to_string(), loc });
        }

        Err(SyntaxError::new(loc, format!("illegal character `{c}`")))
    }
}

/// Splits `source` into tokens. The returned list always ends with an
/// [`TokenKind::Eof`] token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut lexer = Lexer { src: source, pos: 0, line: 1, column: 1 };
    let mut out = Vec::new();
    loop {
        let tok = lexer.next_token()?;
        let done = tok.kind == TokenKind::Eof;
        out.push(tok);
        if done {
            return Ok(out);
        }
    }
}
