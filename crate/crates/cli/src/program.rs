//! Parser for the loop language.
//!
//! ```text
//! program := decl* stmt*
//! decl    := "real" ident ("," ident)* ";"
//! stmt    := ident "=" rhs ";" | "while" "(" "true" ")" "{" stmt* "}"
//! rhs     := "input" "(" num "," num ")" | "[" num "," num "]" | expr
//! expr    := term (("+" | "-") term)*
//! term    := unary ("*" unary)*
//! unary   := "-" unary | num | ident | "(" expr ")"
//! ```
//!
//! Conditionals, division, comparisons and nested loops are rejected with the
//! location of the offending token.

use std::fmt;

use paa_core::{Expr, Interval, Program, Stmt};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Unsupported,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::Unsupported => "unsupported construct",
        };
        write!(f, "{}:{}: {what}: {}", self.line, self.col, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 20] = [
    "<=", ">=", "==", "!=", "&&", "||", "+", "-", "*", "/", "(", ")", "{", "}", "[", "]", ",", ";", "=", "<",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, msg: String| ParseError { line, col, kind: ParseErrorKind::Syntax, message: msg };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            i += 2;
            col += 2;
            loop {
                if i >= chars.len() {
                    return Err(err(l0, c0, "unterminated comment".into()));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    i += 2;
                    col += 2;
                    break;
                }
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let s0 = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[s0..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| err(start.0, start.1, format!("malformed number `{text}`")))?;
            col += i - s0;
            out.push(Token { tok: Tok::Num(v), line: start.0, col: start.1 });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let s0 = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - s0;
            out.push(Token { tok: Tok::Ident(chars[s0..i].iter().collect()), line: start.0, col: start.1 });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let Some(sym) = SYMBOLS.iter().chain([">", "!"].iter()).find(|s| rest.starts_with(**s)) else {
            return Err(err(line, col, format!("unexpected character `{c}`")));
        };
        i += sym.len();
        col += sym.len();
        out.push(Token { tok: Tok::Sym(sym), line: start.0, col: start.1 });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, t: &Token, kind: ParseErrorKind, message: String) -> Result<T, ParseError> {
        Err(ParseError { line: t.line, col: t.col, kind, message })
    }

    fn expect(&mut self, sym: &str) -> Result<Token, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Sym(s) if *s == sym => Ok(t),
            Tok::Sym("/") => self.fail(&t, ParseErrorKind::Unsupported, "division is not supported".into()),
            other => self.fail(&t, ParseErrorKind::Syntax, format!("expected `{sym}`, found {other}")),
        }
    }

    fn at_sym(&self, sym: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(s) if *s == sym)
    }

    fn unsupported_here(&self, t: &Token) -> Option<ParseError> {
        let msg = match &t.tok {
            Tok::Ident(k) if k == "if" || k == "else" => "conditionals are not supported; the domain has no guard semantics",
            Tok::Ident(k) if k == "for" || k == "do" => "only `while (true)` loops are supported",
            Tok::Sym("/") => "division is not supported",
            Tok::Sym("<" | ">" | "<=" | ">=" | "==" | "!=" | "&&" | "||" | "!") => "comparisons and boolean operators are not supported",
            _ => return None,
        };
        Some(ParseError { line: t.line, col: t.col, kind: ParseErrorKind::Unsupported, message: msg.into() })
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut decls = Vec::new();
        while matches!(&self.peek().tok, Tok::Ident(k) if k == "real") {
            self.next();
            loop {
                decls.push(self.ident()?);
                if self.at_sym(",") {
                    self.next();
                } else {
                    break;
                }
            }
            self.expect(";")?;
        }
        let mut body = Vec::new();
        while self.peek().tok != Tok::Eof {
            body.push(self.stmt()?);
        }
        Ok(Program { decls, body })
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        let t = self.next();
        if let Some(e) = self.unsupported_here(&t) {
            return Err(e);
        }
        match t.tok.clone() {
            Tok::Ident(s) if !matches!(s.as_str(), "real" | "while" | "true" | "input") => Ok(s),
            other => self.fail(&t, ParseErrorKind::Syntax, format!("expected identifier, found {other}")),
        }
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let t = self.peek().clone();
        if let Some(e) = self.unsupported_here(&t) {
            return Err(e);
        }
        if matches!(&t.tok, Tok::Ident(k) if k == "while") {
            if self.depth > 0 {
                return self.fail(&t, ParseErrorKind::Unsupported, "nested loops are not supported".into());
            }
            self.next();
            self.expect("(")?;
            let c = self.next();
            if !matches!(&c.tok, Tok::Ident(k) if k == "true") {
                return self.fail(&c, ParseErrorKind::Unsupported, "loop conditions other than `true` are not supported".into());
            }
            self.expect(")")?;
            self.expect("{")?;
            self.depth += 1;
            let mut body = Vec::new();
            while !self.at_sym("}") {
                if self.peek().tok == Tok::Eof {
                    let t = self.peek().clone();
                    return self.fail(&t, ParseErrorKind::Syntax, "unclosed loop body".into());
                }
                body.push(self.stmt()?);
            }
            self.next();
            self.depth -= 1;
            return Ok(Stmt::WhileTrue(Box::new(Stmt::Seq(body))));
        }
        let name = self.ident()?;
        self.expect("=")?;
        let s = if matches!(&self.peek().tok, Tok::Ident(k) if k == "input") {
            self.next();
            self.expect("(")?;
            let iv = self.range(")")?;
            Stmt::Input(name, iv)
        } else if self.at_sym("[") {
            self.next();
            let iv = self.range("]")?;
            Stmt::Input(name, iv)
        } else {
            Stmt::Assign(name, self.expr()?)
        };
        self.expect(";")?;
        Ok(s)
    }

    fn range(&mut self, close: &str) -> Result<Interval, ParseError> {
        let t = self.peek().clone();
        let lo = self.signed()?;
        self.expect(",")?;
        let hi = self.signed()?;
        self.expect(close)?;
        Interval::new(lo, hi).or_else(|_| self.fail(&t, ParseErrorKind::Syntax, format!("empty input range [{lo}, {hi}]")))
    }

    fn signed(&mut self) -> Result<f64, ParseError> {
        let neg = self.at_sym("-");
        if neg {
            self.next();
        }
        let t = self.next();
        match t.tok.clone() {
            Tok::Num(v) => Ok(if neg { -v } else { v }),
            other => self.fail(&t, ParseErrorKind::Syntax, format!("expected number, found {other}")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.at_sym("+") {
                self.next();
                acc = Expr::add(acc, self.term()?);
            } else if self.at_sym("-") {
                self.next();
                acc = Expr::sub(acc, self.term()?);
            } else {
                break;
            }
        }
        if let Some(e) = self.unsupported_here(&self.peek().clone()) {
            return Err(e);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.at_sym("*") {
                self.next();
                let rhs = self.unary()?;
                acc = match (acc, rhs) {
                    (Expr::Const(k), e) | (e, Expr::Const(k)) => Expr::scale(k, e),
                    (a, b) => Expr::mul(a, b),
                };
            } else if let Some(e) = self.unsupported_here(&self.peek().clone()) {
                return Err(e);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.at_sym("-") {
            self.next();
            return Ok(match self.unary()? {
                Expr::Const(v) => Expr::Const(-v),
                e => Expr::scale(-1.0, e),
            });
        }
        let t = self.next();
        if let Some(e) = self.unsupported_here(&t) {
            return Err(e);
        }
        match t.tok.clone() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Ident(s) if s == "input" => {
                self.fail(&t, ParseErrorKind::Syntax, "`input` may only appear as the whole right-hand side".into())
            }
            Tok::Ident(s) => Ok(Expr::Var(s)),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            other => self.fail(&t, ParseErrorKind::Syntax, format!("expected expression, found {other}")),
        }
    }
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    Parser { toks, pos: 0, depth: 0 }.program()
}
