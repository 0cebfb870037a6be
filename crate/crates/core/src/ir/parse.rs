//! Parser for the textual IR.
//!
//! The grammar is line-structured: a `define NAME(params) : TYPE {`
//! header, then blocks introduced by `#label:`, instruction lines, a
//! `jmp [label{, label}]` terminator (bare `jmp` marks an exit block),
//! an optional `.handlers label{, label}` line, and a closing `}`.
//! `#` introduces labels only; there is no comment syntax.

use super::{Block, Instr, LoadSrc, Operand, ProcDef, Program, QualifiedName, TypeName};
use std::collections::HashSet;
use std::error::Error;
use std::fmt;

/// A parse failure with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl Error for ParseError {}

/// Parse a sequence of `define` procedure definitions.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut parser = Parser::new(text);
    let mut procedures = Vec::new();
    parser.skip_blank();
    while !parser.at_end() {
        procedures.push(parser.proc_def()?);
        parser.skip_blank();
    }
    let program = Program { procedures };
    let mut names = HashSet::new();
    for proc in &program.procedures {
        if !names.insert(proc.name.to_string()) {
            return Err(ParseError {
                line: 1,
                col: 1,
                message: format!("duplicate procedure name {}", proc.name),
            });
        }
    }
    Ok(program)
}

struct Parser<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.lines.len()
    }

    fn skip_blank(&mut self) {
        while !self.at_end() && self.lines[self.pos].trim().is_empty() {
            self.pos += 1;
        }
    }

    fn err(&self, col: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.pos + 1,
            col,
            message: message.into(),
        }
    }

    fn err_at(&self, line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn proc_def(&mut self) -> Result<ProcDef, ParseError> {
        let header = self.lines[self.pos];
        let header_line = self.pos + 1;
        let mut cur = Cursor::new(header, header_line);
        cur.skip_ws();
        cur.expect_word("define")?;
        cur.skip_ws();
        let name = cur.qualified_dotted()?;
        if name.segments.is_empty() {
            return Err(self.err(cur.col(), "procedure name needs a class qualifier"));
        }
        cur.expect_char('(')?;
        let mut params = Vec::new();
        cur.skip_ws();
        if cur.peek() != Some(')') {
            loop {
                cur.skip_ws();
                let pname = cur.ident()?;
                cur.skip_ws();
                cur.expect_char(':')?;
                cur.skip_ws();
                let ty = cur.type_name()?;
                params.push((pname, ty));
                cur.skip_ws();
                if cur.peek() == Some(',') {
                    cur.bump();
                } else {
                    break;
                }
            }
        }
        cur.expect_char(')')?;
        cur.skip_ws();
        cur.expect_char(':')?;
        cur.skip_ws();
        let return_type = cur.type_name()?;
        cur.skip_ws();
        cur.expect_char('{')?;
        cur.skip_ws();
        cur.expect_end()?;
        self.pos += 1;

        let mut blocks = Vec::new();
        loop {
            self.skip_blank();
            if self.at_end() {
                return Err(self.err_at(header_line, 1, "unterminated procedure, missing `}`"));
            }
            let line = self.lines[self.pos].trim();
            if line == "}" {
                self.pos += 1;
                break;
            }
            blocks.push(self.block()?);
        }
        if blocks.is_empty() {
            return Err(self.err_at(header_line, 1, "procedure has no blocks"));
        }

        // Label uniqueness and resolution checks.
        let mut labels = HashSet::new();
        for b in &blocks {
            if !labels.insert(b.label.clone()) {
                return Err(self.err_at(header_line, 1, format!("duplicate label {}", b.label)));
            }
        }
        for b in &blocks {
            for l in b.successors.iter().chain(b.handlers.iter()) {
                if !labels.contains(l) {
                    return Err(self.err_at(
                        header_line,
                        1,
                        format!("unresolved label {l} referenced from block {}", b.label),
                    ));
                }
            }
        }

        Ok(ProcDef {
            name,
            params,
            return_type,
            blocks,
        })
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        let line = self.lines[self.pos].trim();
        let header_line = self.pos + 1;
        let label = line
            .strip_prefix('#')
            .and_then(|rest| rest.strip_suffix(':'))
            .ok_or_else(|| self.err(1, format!("expected block header `#label:`, got `{line}`")))?
            .to_string();
        if label.is_empty() || !label.chars().all(is_ident_char) {
            return Err(self.err(1, format!("invalid block label `{label}`")));
        }
        self.pos += 1;

        let mut instrs = Vec::new();
        let mut defined: HashSet<String> = HashSet::new();
        let successors;
        loop {
            self.skip_blank();
            if self.at_end() {
                return Err(self.err_at(header_line, 1, format!("block {label} has no terminator")));
            }
            let raw = self.lines[self.pos];
            let line = raw.trim();
            if line == "}" || line.starts_with('#') {
                return Err(self.err(1, format!("block {label} has no terminator")));
            }
            if line == "jmp" {
                successors = Vec::new();
                self.pos += 1;
                break;
            }
            if let Some(rest) = line.strip_prefix("jmp ") {
                successors = split_labels(rest)
                    .map_err(|m| self.err(1, m))?;
                if successors.is_empty() {
                    return Err(self.err(1, "jmp with trailing content but no labels"));
                }
                self.pos += 1;
                break;
            }
            let instr = parse_instr(raw, self.pos + 1)?;
            if let Some(d) = instr.dest() {
                if !defined.insert(d.to_string()) {
                    return Err(self.err(1, format!("temp {d} assigned twice in block {label}")));
                }
            }
            instrs.push(instr);
            self.pos += 1;
        }

        // Optional .handlers line directly after the terminator.
        let mut handlers = Vec::new();
        let save = self.pos;
        self.skip_blank();
        if !self.at_end() {
            let line = self.lines[self.pos].trim();
            if let Some(rest) = line.strip_prefix(".handlers") {
                handlers = split_labels(rest).map_err(|m| self.err(1, m))?;
                if handlers.is_empty() {
                    return Err(self.err(1, ".handlers with no labels"));
                }
                self.pos += 1;
            } else {
                self.pos = save;
            }
        } else {
            self.pos = save;
        }

        if successors.is_empty() && !handlers.is_empty() {
            return Err(self.err_at(
                header_line,
                1,
                format!("exit block {label} must not declare handlers"),
            ));
        }

        Ok(Block {
            label,
            instrs,
            successors,
            handlers,
        })
    }
}

fn split_labels(rest: &str) -> Result<Vec<String>, String> {
    let rest = rest.trim();
    if rest.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for part in rest.split(',') {
        let label = part.trim();
        if label.is_empty() || !label.chars().all(is_ident_char) {
            return Err(format!("invalid label `{label}` in label list"));
        }
        out.push(label.to_string());
    }
    Ok(out)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

fn parse_instr(raw: &str, line_no: usize) -> Result<Instr, ParseError> {
    let mut cur = Cursor::new(raw, line_no);
    cur.skip_ws();
    if cur.peek_word("store") {
        cur.expect_word("store")?;
        cur.skip_ws();
        cur.expect_char('&')?;
        let var = cur.ident()?;
        cur.skip_ws();
        cur.expect_str("<-")?;
        cur.skip_ws();
        let src = cur.operand()?;
        cur.expect_char(':')?;
        let ty = cur.type_name()?;
        cur.skip_ws();
        cur.expect_end()?;
        return Ok(Instr::Store { var, src, ty });
    }

    let dest = cur.ident()?;
    cur.skip_ws();
    // A type annotation on the destination marks a load.
    if cur.peek() == Some(':') {
        cur.bump();
        cur.skip_ws();
        let ty = cur.type_name()?;
        cur.skip_ws();
        cur.expect_char('=')?;
        cur.skip_ws();
        cur.expect_word("load")?;
        cur.skip_ws();
        let src = if cur.peek() == Some('&') {
            cur.bump();
            LoadSrc::Var(cur.ident()?)
        } else {
            LoadSrc::Temp(cur.ident()?)
        };
        cur.skip_ws();
        cur.expect_end()?;
        return Ok(Instr::Load { dest, ty, src });
    }

    cur.expect_char('=')?;
    cur.skip_ws();
    if cur.peek_word("__sil_allocate") {
        cur.expect_word("__sil_allocate")?;
        cur.expect_char('(')?;
        cur.expect_char('<')?;
        let class = cur.type_name()?;
        cur.expect_char('>')?;
        cur.expect_char(')')?;
        cur.skip_ws();
        cur.expect_end()?;
        return Ok(Instr::Alloc { dest, class });
    }

    // Call: `recv.class::path.method(args)` or `class::path.method(args)`.
    let chain = cur.dotted_chain()?;
    cur.expect_char('(')?;
    let mut args = Vec::new();
    cur.skip_ws();
    if cur.peek() != Some(')') {
        loop {
            cur.skip_ws();
            args.push(cur.operand()?);
            cur.skip_ws();
            if cur.peek() == Some(',') {
                cur.bump();
            } else {
                break;
            }
        }
    }
    cur.expect_char(')')?;
    cur.skip_ws();
    cur.expect_end()?;

    match chain.len() {
        2 => Ok(Instr::StaticCall {
            dest,
            callee: QualifiedName {
                segments: split_path(&chain[0]),
                name: chain[1].clone(),
            },
            args,
        }),
        3 => {
            let recv = chain[0].clone();
            if recv.contains("::") {
                return Err(cur.error("call receiver must be a temp"));
            }
            Ok(Instr::VirtualCall {
                dest,
                recv,
                method: QualifiedName {
                    segments: split_path(&chain[1]),
                    name: chain[2].clone(),
                },
                args,
            })
        }
        n => Err(cur.error(format!("call target has {n} dotted parts, expected 2 or 3"))),
    }
}

fn split_path(path: &str) -> Vec<String> {
    path.split("::").map(|s| s.to_string()).collect()
}

/// Character cursor over a single line.
struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(text: &str, line: usize) -> Self {
        Cursor {
            chars: text.chars().collect(),
            pos: 0,
            line,
        }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col(),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.pos == self.chars.len() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing content"))
        }
    }

    fn expect_char(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!(
                "expected `{c}`, got `{}`",
                self.peek().map(String::from).unwrap_or_default()
            )))
        }
    }

    fn expect_str(&mut self, s: &str) -> Result<(), ParseError> {
        for c in s.chars() {
            self.expect_char(c)?;
        }
        Ok(())
    }

    fn peek_word(&self, word: &str) -> bool {
        let end = self.pos + word.len();
        if end > self.chars.len() {
            return false;
        }
        let slice: String = self.chars[self.pos..end].iter().collect();
        slice == word && self.chars.get(end).map_or(true, |c| !is_ident_char(*c))
    }

    fn expect_word(&mut self, word: &str) -> Result<(), ParseError> {
        if self.peek_word(word) {
            self.pos += word.len();
            Ok(())
        } else {
            Err(self.error(format!("expected `{word}`")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(c) if is_ident_start(c) => {}
            _ => return Err(self.error("expected identifier")),
        }
        let start = self.pos;
        while matches!(self.peek(), Some(c) if is_ident_char(c)) {
            self.pos += 1;
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    /// An identifier path joined by `::`.
    fn path(&mut self) -> Result<String, ParseError> {
        let mut out = self.ident()?;
        while self.peek() == Some(':') && self.chars.get(self.pos + 1) == Some(&':') {
            self.pos += 2;
            out.push_str("::");
            out.push_str(&self.ident()?);
        }
        Ok(out)
    }

    /// A method name: an identifier or the literal `<init>`.
    fn member_name(&mut self) -> Result<String, ParseError> {
        if self.peek() == Some('<') {
            self.expect_str("<init>")?;
            Ok("<init>".to_string())
        } else {
            self.ident()
        }
    }

    /// Dot-separated chain of paths/members before a `(`, e.g.
    /// `n5.java::io::FileOutputStream.write` or `Main.foo`.
    fn dotted_chain(&mut self) -> Result<Vec<String>, ParseError> {
        let mut parts = vec![self.path()?];
        while self.peek() == Some('.') {
            self.pos += 1;
            if self.peek() == Some('<') {
                parts.push(self.member_name()?);
            } else {
                parts.push(self.path()?);
            }
        }
        Ok(parts)
    }

    /// `Class.name` where the class path is `::`-separated.
    fn qualified_dotted(&mut self) -> Result<QualifiedName, ParseError> {
        let chain = self.dotted_chain()?;
        if chain.len() != 2 {
            return Err(self.error("expected `Class.name`"));
        }
        Ok(QualifiedName {
            segments: split_path(&chain[0]),
            name: chain[1].clone(),
        })
    }

    fn type_name(&mut self) -> Result<TypeName, ParseError> {
        let mut depth = 0;
        while self.peek() == Some('*') {
            self.pos += 1;
            depth += 1;
        }
        let path = self.path()?;
        let ty = TypeName {
            pointer_depth: depth,
            segments: split_path(&path),
        };
        if ty.segments.len() == 1 && ty.segments[0] == "void" && depth != 0 {
            return Err(self.error("void cannot have pointer depth"));
        }
        Ok(ty)
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match self.peek() {
            Some('&') => {
                self.bump();
                Ok(Operand::Var(self.ident()?))
            }
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.error("unterminated string literal")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            _ => return Err(self.error("invalid escape, expected \\\" or \\\\")),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Ok(Operand::Str(s))
            }
            Some(c) if c == '-' || c.is_ascii_digit() => {
                let start = self.pos;
                if c == '-' {
                    self.pos += 1;
                }
                while matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                    self.pos += 1;
                }
                let text: String = self.chars[start..self.pos].iter().collect();
                text.parse::<i64>()
                    .map(Operand::Int)
                    .map_err(|_| self.error(format!("integer literal `{text}` out of range")))
            }
            Some(c) if is_ident_start(c) => Ok(Operand::Temp(self.ident()?)),
            _ => Err(self.error("expected operand")),
        }
    }
}
