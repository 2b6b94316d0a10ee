//! Lexer and recursive-descent parser for process terms.
//!
//! Precedence, loosest first: `+`, `|`, postfix `\{..}` / `[..]`, prefix `x.P`.
//! `+` and `|` are right-associated into binary nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::label::{Action, Label, RESERVED};
use crate::term::{Name, Relabeling, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Num(u64),
    Dot,
    Plus,
    Bar,
    Backslash,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    Slash,
    Comma,
    LParen,
    RParen,
    Quote,
    Eq,
    Arrow,
    Minus,
    Semi,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", tok_text(other)),
        }
    }
}

fn tok_text(t: &Tok) -> &'static str {
    match t {
        Tok::Dot => ".",
        Tok::Plus => "+",
        Tok::Bar => "|",
        Tok::Backslash => "\\",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LBrack => "[",
        Tok::RBrack => "]",
        Tok::Slash => "/",
        Tok::Comma => ",",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::Quote => "'",
        Tok::Eq => "=",
        Tok::Arrow => "->",
        Tok::Minus => "-",
        Tok::Semi => ";",
        _ => "?",
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(crate) fn lex(src: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
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
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Spanned { tok: Tok::Ident(s), line: tl, col: tc });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            let n = s.parse().map_err(|_| Error::Syntax {
                line: tl,
                col: tc,
                msg: format!("number `{s}` out of range"),
            })?;
            out.push(Spanned { tok: Tok::Num(n), line: tl, col: tc });
            continue;
        }
        let tok = match c {
            '.' => Tok::Dot,
            '+' => Tok::Plus,
            '|' => Tok::Bar,
            '\\' => Tok::Backslash,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            '/' => Tok::Slash,
            ',' => Tok::Comma,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '\'' => Tok::Quote,
            '=' => Tok::Eq,
            ';' => Tok::Semi,
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                col += 1;
                Tok::Arrow
            }
            '-' => Tok::Minus,
            other => {
                return Err(Error::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        i += 1;
        col += 1;
        out.push(Spanned { tok, line: tl, col: tc });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

const KEYWORDS: [&str; 2] = ["rec", "Nil"];

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn line(&self) -> usize {
        self.toks[self.pos].line
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> Error {
        let s = &self.toks[self.pos];
        Error::Syntax { line: s.line, col: s.col, msg: msg.into() }
    }

    pub(crate) fn unexpected(&self, wanted: &str) -> Error {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, t: Tok) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{}`", tok_text(&t))))
        }
    }

    pub(crate) fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub(crate) fn number(&mut self) -> Result<u64> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected("number")),
        }
    }

    /// A visible action name, i.e. an identifier that is not reserved.
    pub(crate) fn action_name(&mut self) -> Result<String> {
        let name = self.ident()?;
        if RESERVED.contains(&name.as_str()) || KEYWORDS.contains(&name.as_str()) {
            self.pos -= 1;
            return Err(self.error(format!("`{name}` is reserved and cannot be used as an action")));
        }
        Ok(name)
    }

    /// label := "tau" | "t" | "tick" | "'"? IDENT
    pub(crate) fn label(&mut self) -> Result<Label> {
        if self.eat(&Tok::Quote) {
            let name = self.action_name()?;
            return Ok(Label::Act(Action::co_of(&name)));
        }
        match self.peek().clone() {
            Tok::Ident(s) if s == "tau" => {
                self.bump();
                Ok(Label::Tau)
            }
            Tok::Ident(s) if s == "t" => {
                self.bump();
                Ok(Label::Time)
            }
            Tok::Ident(s) if s == "tick" => {
                self.bump();
                Ok(Label::Tick)
            }
            Tok::Ident(_) => Ok(Label::Act(Action::new(&self.action_name()?))),
            _ => Err(self.unexpected("label")),
        }
    }

    pub(crate) fn term(&mut self) -> Result<Term> {
        let mut ops = vec![self.par()?];
        while self.eat(&Tok::Plus) {
            ops.push(self.par()?);
        }
        Ok(Term::sum(ops))
    }

    fn par(&mut self) -> Result<Term> {
        let mut ops = vec![self.postfix()?];
        while self.eat(&Tok::Bar) {
            ops.push(self.postfix()?);
        }
        Ok(Term::product(ops))
    }

    fn postfix(&mut self) -> Result<Term> {
        let mut t = self.prefix()?;
        loop {
            if self.eat(&Tok::Backslash) {
                self.expect(Tok::LBrace)?;
                let mut names: BTreeSet<Name> = BTreeSet::new();
                loop {
                    names.insert(Arc::from(self.action_name()?.as_str()));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                t = Term::Restrict(Arc::new(t), Arc::new(names));
            } else if self.eat(&Tok::LBrack) {
                let mut map: BTreeMap<Name, Name> = BTreeMap::new();
                loop {
                    let new = self.action_name()?;
                    self.expect(Tok::Slash)?;
                    let old = self.action_name()?;
                    if map.insert(Arc::from(old.as_str()), Arc::from(new.as_str())).is_some() {
                        return Err(self.error(format!("`{old}` relabelled twice")));
                    }
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrack)?;
                t = Term::Relabel(Arc::new(t), Arc::new(Relabeling(map)));
            } else {
                return Ok(t);
            }
        }
    }

    fn prefix(&mut self) -> Result<Term> {
        let is_label = match (self.peek(), self.peek_at(1)) {
            (Tok::Quote, _) => true,
            (Tok::Ident(s), Tok::Dot) => !KEYWORDS.contains(&s.as_str()),
            _ => false,
        };
        if is_label {
            let l = self.label()?;
            self.expect(Tok::Dot)?;
            let cont = self.prefix()?;
            return Ok(Term::prefix(l, cont));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Term> {
        match self.peek().clone() {
            Tok::Num(0) => {
                self.bump();
                Ok(Term::Nil)
            }
            Tok::Ident(s) if s == "Nil" => {
                self.bump();
                Ok(Term::Nil)
            }
            Tok::Ident(s) if s == "rec" => {
                self.bump();
                let x = self.ident()?;
                if RESERVED.contains(&x.as_str()) || KEYWORDS.contains(&x.as_str()) {
                    self.pos -= 1;
                    return Err(self.error(format!("`{x}` cannot be a recursion variable")));
                }
                self.expect(Tok::Dot)?;
                let body = self.prefix()?;
                Ok(Term::rec(&x, body))
            }
            Tok::Ident(s) => {
                if RESERVED.contains(&s.as_str()) {
                    return Err(self.error(format!("`{s}` is a label, not a process")));
                }
                self.bump();
                Ok(Term::var(&s))
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.unexpected("process term")),
        }
    }
}

/// Parses a single process term.
pub fn parse_term(text: &str) -> Result<Term> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    if !p.at_eof() {
        return Err(p.unexpected("end of input"));
    }
    Ok(t)
}
