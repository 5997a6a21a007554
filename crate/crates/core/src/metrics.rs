//! Lexical complexity metrics for generated Python programs.
//!
//! The tokenizer follows Python's own rules closely enough that the operator
//! and keyword streams agree with the stdlib tokenizer on the test corpus:
//! indentation produces synthetic indent/dedent tokens, newlines inside
//! brackets or after a backslash do not end a logical line, and string
//! literals (including triple-quoted and prefixed ones) are single tokens.
//! Tabs advance to the next multiple of 4 columns.
//!
//! The four metrics:
//!
//! * `loc`: non-blank physical lines covered by a non-comment token.
//! * `cyclomatic`: one per function plus one per decision point (`if`,
//!   `elif`, `for`, `while`, `except`, `assert`, `and`, `or`, and the `else`
//!   of a loop or `try`). Code with no functions starts at 1.
//! * `nesting_depth`: deepest open block, where a function body is depth 1.
//! * `unique_ops`: distinct lexemes from a fixed operator lexicon.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::schema::{Cursor, SchemaError};
use crate::task::{defines_function, CandidateProgram, MAIN_ENTRY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Keyword,
    Identifier,
    Operator,
    Literal,
    Comment,
    Newline,
    Indent,
    Dedent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceToken {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based physical line where the token starts.
    pub line: usize,
    /// Line where the token ends; differs from `line` only for multi-line
    /// strings.
    pub end_line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("line {line}: {message}")]
    Lex { line: usize, message: String },
    #[error("line {line}: {message}")]
    Structure { line: usize, message: String },
    #[error("program does not define `main`")]
    NoEntryPoint,
}

/// The reserved words of Python 3.10 (`keyword.kwlist`).
pub const KEYWORDS: [&str; 35] = [
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

// Matching tries lengths 3, 2, 1 in turn, so the longest lexeme wins.
const OPERATORS_3: [&str; 5] = ["**=", "//=", ">>=", "<<=", "..."];
const OPERATORS_2: [&str; 19] = [
    "==", "!=", "<=", ">=", "<<", ">>", "**", "//", "->", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "@=", ":=",
];
const OPERATORS_1: &str = "+-*/%@&|^~<>()[]{},:.;=";

/// Operator lexemes that count towards `unique_ops`. The keyword operators
/// `and`, `or`, `not`, `is`, `in` and the pairs `is not`, `not in` are added
/// by the counter itself.
pub const OPERATOR_LEXICON: [&str; 34] = [
    "+", "-", "*", "/", "//", "%", "**", // arithmetic
    "&", "|", "^", "~", "<<", ">>", // bitwise
    "==", "!=", "<", ">", "<=", ">=", // comparison
    "=", "+=", "-=", "*=", "/=", "//=", "%=", "**=", "&=", "|=", "^=", "<<=", ">>=", "@=", ":=",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

fn is_string_prefix(s: &str) -> bool {
    matches!(
        s.to_ascii_lowercase().as_str(),
        "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf"
    )
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    tokens: Vec<SourceToken>,
    indents: Vec<usize>,
    depth: usize,
    line_has_tokens: bool,
}

impl Lexer {
    fn new(source: &str) -> Self {
        Lexer {
            chars: source.chars().collect(),
            pos: 0,
            line: 1,
            tokens: Vec::new(),
            indents: vec![0],
            depth: 0,
            line_has_tokens: false,
        }
    }

    fn peek(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn push(&mut self, kind: TokenKind, text: String, line: usize) {
        if !matches!(kind, TokenKind::Comment) {
            self.line_has_tokens = true;
        }
        self.tokens.push(SourceToken { kind, text, line, end_line: self.line });
    }

    fn lex_error(&self, line: usize, message: &str) -> MetricsError {
        MetricsError::Lex { line, message: message.to_string() }
    }

    fn run(mut self) -> Result<Vec<SourceToken>, MetricsError> {
        let mut at_line_start = true;
        while self.pos < self.chars.len() {
            if at_line_start {
                at_line_start = false;
                if !self.handle_indentation()? {
                    at_line_start = true;
                    continue;
                }
            }
            let c = self.chars[self.pos];
            match c {
                '\n' => {
                    self.pos += 1;
                    if self.depth == 0 {
                        if self.line_has_tokens {
                            self.tokens.push(SourceToken {
                                kind: TokenKind::Newline,
                                text: "\n".into(),
                                line: self.line,
                                end_line: self.line,
                            });
                            self.line_has_tokens = false;
                        }
                        at_line_start = true;
                    }
                    self.line += 1;
                }
                ' ' | '\t' | '\x0c' | '\r' => self.pos += 1,
                '\\' if matches!(self.peek(1), Some('\n')) => {
                    self.pos += 2;
                    self.line += 1;
                }
                '\\' if matches!((self.peek(1), self.peek(2)), (Some('\r'), Some('\n'))) => {
                    self.pos += 3;
                    self.line += 1;
                }
                '#' => self.comment(),
                '"' | '\'' => self.string(0)?,
                c if c.is_ascii_digit() => self.number(),
                '.' if self.peek(1).is_some_and(|d| d.is_ascii_digit()) => self.number(),
                c if is_ident_start(c) => self.name()?,
                _ => self.operator()?,
            }
        }
        if self.line_has_tokens {
            self.tokens.push(SourceToken {
                kind: TokenKind::Newline,
                text: String::new(),
                line: self.line,
                end_line: self.line,
            });
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.tokens.push(SourceToken {
                kind: TokenKind::Dedent,
                text: String::new(),
                line: self.line,
                end_line: self.line,
            });
        }
        Ok(self.tokens)
    }

    /// Measures leading whitespace of a physical line that starts a logical
    /// line. Returns false for blank and comment-only lines, which do not
    /// affect indentation; those are consumed here.
    fn handle_indentation(&mut self) -> Result<bool, MetricsError> {
        let mut col = 0usize;
        while let Some(c) = self.peek(0) {
            match c {
                ' ' => col += 1,
                '\t' => col = (col / 4 + 1) * 4,
                '\x0c' => col = 0,
                _ => break,
            }
            self.pos += 1;
        }
        match self.peek(0) {
            None => return Ok(false),
            Some('\n') => {
                self.pos += 1;
                self.line += 1;
                return Ok(false);
            }
            Some('\r') if self.peek(1) == Some('\n') => {
                self.pos += 2;
                self.line += 1;
                return Ok(false);
            }
            Some('#') => {
                self.comment();
                if self.peek(0) == Some('\n') {
                    self.pos += 1;
                    self.line += 1;
                }
                return Ok(false);
            }
            _ => {}
        }
        let current = *self.indents.last().expect("indent stack is never empty");
        if col > current {
            self.indents.push(col);
            self.tokens.push(SourceToken {
                kind: TokenKind::Indent,
                text: String::new(),
                line: self.line,
                end_line: self.line,
            });
        } else if col < current {
            while *self.indents.last().expect("indent stack is never empty") > col {
                self.indents.pop();
                self.tokens.push(SourceToken {
                    kind: TokenKind::Dedent,
                    text: String::new(),
                    line: self.line,
                    end_line: self.line,
                });
            }
            if *self.indents.last().expect("indent stack is never empty") != col {
                return Err(MetricsError::Structure {
                    line: self.line,
                    message: "unindent does not match any outer indentation level".into(),
                });
            }
        }
        Ok(true)
    }

    fn comment(&mut self) {
        let start = self.pos;
        while self.peek(0).is_some_and(|c| c != '\n') {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect::<String>().trim_end().to_string();
        self.tokens.push(SourceToken { kind: TokenKind::Comment, text, line: self.line, end_line: self.line });
    }

    /// Lexes a string literal whose prefix (already scanned) is `prefix_len`
    /// characters before `pos`.
    fn string(&mut self, prefix_len: usize) -> Result<(), MetricsError> {
        let start = self.pos - prefix_len;
        let start_line = self.line;
        let quote = self.chars[self.pos];
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        self.pos += if triple { 3 } else { 1 };
        loop {
            let Some(c) = self.peek(0) else {
                return Err(self.lex_error(start_line, "unterminated string literal"));
            };
            match c {
                '\\' => {
                    if self.peek(1) == Some('\n') {
                        self.line += 1;
                    }
                    self.pos += 2;
                }
                '\n' if !triple => {
                    return Err(self.lex_error(start_line, "unterminated string literal"));
                }
                '\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                c if c == quote => {
                    if !triple {
                        self.pos += 1;
                        break;
                    }
                    if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                        self.pos += 3;
                        break;
                    }
                    self.pos += 1;
                }
                _ => self.pos += 1,
            }
        }
        let end = self.pos.min(self.chars.len());
        let text: String = self.chars[start..end].iter().collect();
        self.push(TokenKind::Literal, text, start_line);
        Ok(())
    }

    fn number(&mut self) {
        let start = self.pos;
        let hex = self.peek(0) == Some('0') && matches!(self.peek(1), Some('x' | 'X'));
        while let Some(c) = self.peek(0) {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                self.pos += 1;
                if !hex && matches!(c, 'e' | 'E') && matches!(self.peek(0), Some('+' | '-')) {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        self.push(TokenKind::Literal, text, self.line);
    }

    fn name(&mut self) -> Result<(), MetricsError> {
        let start = self.pos;
        while self.peek(0).is_some_and(is_ident_continue) {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        if matches!(self.peek(0), Some('"' | '\'')) && is_string_prefix(&text) {
            return self.string(self.pos - start);
        }
        let kind = if is_keyword(&text) { TokenKind::Keyword } else { TokenKind::Identifier };
        self.push(kind, text, self.line);
        Ok(())
    }

    fn operator(&mut self) -> Result<(), MetricsError> {
        let rest = |n: usize| -> String { self.chars[self.pos..(self.pos + n).min(self.chars.len())].iter().collect() };
        let three = rest(3);
        let two = rest(2);
        let text = if OPERATORS_3.contains(&three.as_str()) {
            three
        } else if OPERATORS_2.contains(&two.as_str()) {
            two
        } else {
            let c = self.chars[self.pos];
            if !OPERATORS_1.contains(c) {
                return Err(self.lex_error(self.line, &format!("unexpected character {c:?}")));
            }
            c.to_string()
        };
        match text.as_str() {
            "(" | "[" | "{" => self.depth += 1,
            ")" | "]" | "}" => self.depth = self.depth.saturating_sub(1),
            _ => {}
        }
        self.pos += text.chars().count();
        self.push(TokenKind::Operator, text, self.line);
        Ok(())
    }
}

/// Splits Python source into tokens.
pub fn tokenize(source: &str) -> Result<Vec<SourceToken>, MetricsError> {
    Lexer::new(source).run()
}

fn significant(t: &SourceToken) -> bool {
    !matches!(t.kind, TokenKind::Comment | TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent)
}

pub fn loc(source: &str) -> Result<u32, MetricsError> {
    Ok(loc_of(source, &tokenize(source)?))
}

fn loc_of(source: &str, tokens: &[SourceToken]) -> u32 {
    let lines: Vec<&str> = source.lines().collect();
    let mut covered = BTreeSet::new();
    for t in tokens.iter().filter(|t| significant(t)) {
        covered.extend(t.line..=t.end_line);
    }
    covered.into_iter().filter(|&n| lines.get(n - 1).is_some_and(|l| !l.trim().is_empty())).count() as u32
}

/// Splits the token stream into logical lines of significant tokens, each
/// tagged with its block depth.
fn logical_lines(tokens: &[SourceToken]) -> Vec<(usize, Vec<&SourceToken>)> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut current: Vec<&SourceToken> = Vec::new();
    for t in tokens {
        match t.kind {
            TokenKind::Indent => depth += 1,
            TokenKind::Dedent => depth = depth.saturating_sub(1),
            TokenKind::Newline => {
                if !current.is_empty() {
                    out.push((depth, std::mem::take(&mut current)));
                }
            }
            TokenKind::Comment => {}
            _ => current.push(t),
        }
    }
    if !current.is_empty() {
        out.push((depth, current));
    }
    out
}

const COMPOUND_HEADERS: [&str; 12] =
    ["if", "elif", "else", "for", "while", "try", "except", "finally", "with", "def", "class", "async"];

fn header_keyword<'t>(line: &[&'t SourceToken]) -> Option<&'t str> {
    let mut it = line.iter().filter(|t| t.kind == TokenKind::Keyword);
    let first = line.first()?;
    if first.kind != TokenKind::Keyword {
        return None;
    }
    let kw = it.next()?.text.as_str();
    if kw == "async" {
        return line.get(1).filter(|t| t.kind == TokenKind::Keyword).map(|t| t.text.as_str());
    }
    Some(kw)
}

pub fn cyclomatic(source: &str) -> Result<u32, MetricsError> {
    Ok(cyclomatic_of(&tokenize(source)?))
}

#[derive(Clone, Copy, PartialEq)]
enum Chain {
    Loop,
    Try,
    Other,
}

fn cyclomatic_of(tokens: &[SourceToken]) -> u32 {
    let mut functions = 0u32;
    let mut decisions = 0u32;
    // Per depth, the kind of the compound statement chain currently open.
    let mut chains: Vec<Chain> = Vec::new();
    for (depth, line) in logical_lines(tokens) {
        chains.truncate(depth + 1);
        chains.resize(depth + 1, Chain::Other);
        match header_keyword(&line) {
            Some("for" | "while") => chains[depth] = Chain::Loop,
            Some("try") => chains[depth] = Chain::Try,
            Some("except") => {}
            Some("else") => {
                if chains[depth] != Chain::Other {
                    decisions += 1;
                }
                chains[depth] = Chain::Other;
            }
            _ => chains[depth] = Chain::Other,
        }
        for t in line.iter().filter(|t| t.kind == TokenKind::Keyword) {
            match t.text.as_str() {
                "def" => functions += 1,
                "if" | "elif" | "for" | "while" | "except" | "assert" | "and" | "or" => decisions += 1,
                _ => {}
            }
        }
    }
    functions.max(1) + decisions
}

pub fn nesting_depth(source: &str) -> Result<u32, MetricsError> {
    Ok(nesting_of(&tokenize(source)?))
}

fn nesting_of(tokens: &[SourceToken]) -> u32 {
    let mut best = 0usize;
    for (depth, line) in logical_lines(tokens) {
        best = best.max(depth);
        let Some(kw) = header_keyword(&line) else { continue };
        if !COMPOUND_HEADERS.contains(&kw) {
            continue;
        }
        let mut brackets = 0usize;
        for (i, t) in line.iter().enumerate() {
            if t.kind != TokenKind::Operator {
                continue;
            }
            match t.text.as_str() {
                "(" | "[" | "{" => brackets += 1,
                ")" | "]" | "}" => brackets = brackets.saturating_sub(1),
                ":" if brackets == 0 => {
                    if i + 1 < line.len() {
                        best = best.max(depth + 1);
                    }
                    break;
                }
                _ => {}
            }
        }
    }
    best as u32
}

pub fn unique_ops(source: &str) -> Result<u32, MetricsError> {
    Ok(operator_set(&tokenize(source)?).len() as u32)
}

/// The distinct operator lexemes of a token stream. The `in` belonging to a
/// `for` header or comprehension is iteration syntax, not membership.
pub fn operator_set(tokens: &[SourceToken]) -> BTreeSet<String> {
    let toks: Vec<&SourceToken> = tokens.iter().filter(|t| significant(t)).collect();
    let mut found = BTreeSet::new();
    let mut depth = 0usize;
    let mut pending_for: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let t = toks[i];
        let s = t.text.as_str();
        let next = toks.get(i + 1).map(|n| n.text.as_str());
        match t.kind {
            TokenKind::Operator => match s {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    depth = depth.saturating_sub(1);
                    while pending_for.last().is_some_and(|&d| d > depth) {
                        pending_for.pop();
                    }
                }
                _ if OPERATOR_LEXICON.contains(&s) => {
                    found.insert(s.to_string());
                }
                _ => {}
            },
            TokenKind::Keyword => match s {
                "for" => pending_for.push(depth),
                "is" if next == Some("not") => {
                    found.insert("is not".into());
                    i += 1;
                }
                "not" if next == Some("in") => {
                    found.insert("not in".into());
                    i += 1;
                }
                "in" if pending_for.last() == Some(&depth) => {
                    pending_for.pop();
                }
                "is" | "not" | "in" | "and" | "or" => {
                    found.insert(s.to_string());
                }
                _ => {}
            },
            _ => {}
        }
        i += 1;
    }
    found
}

/// The four complexity metrics of one program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub loc: u32,
    pub cyclomatic: u32,
    pub nesting_depth: u32,
    pub unique_ops: u32,
}

impl ComplexityReport {
    /// Computes all four metrics from one tokenization.
    pub fn of_source(source: &str) -> Result<Self, MetricsError> {
        let tokens = tokenize(source)?;
        Ok(ComplexityReport {
            loc: loc_of(source, &tokens),
            cyclomatic: cyclomatic_of(&tokens),
            nesting_depth: nesting_of(&tokens),
            unique_ops: operator_set(&tokens).len() as u32,
        })
    }

    pub(crate) fn from_cursor(c: &Cursor<'_>) -> Result<Self, SchemaError> {
        let field = |k: &str| -> Result<u32, SchemaError> {
            let f = c.field(k)?;
            u32::try_from(f.u64()?).map_err(|_| f.invalid("value out of range"))
        };
        Ok(ComplexityReport {
            loc: field("loc")?,
            cyclomatic: field("cyclomatic")?,
            nesting_depth: field("nesting_depth")?,
            unique_ops: field("unique_ops")?,
        })
    }
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "loc={} cyclomatic={} nesting={} unique_ops={}",
            self.loc, self.cyclomatic, self.nesting_depth, self.unique_ops
        )
    }
}

/// Metrics over the program's source with the shared library prelude
/// removed. The program must define `main`.
pub fn complexity_report(program: &CandidateProgram) -> Result<ComplexityReport, MetricsError> {
    let source = program.solution_source();
    if !defines_function(&source, MAIN_ENTRY) {
        return Err(MetricsError::NoEntryPoint);
    }
    ComplexityReport::of_source(&source)
}
