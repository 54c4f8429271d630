use std::fmt;
use std::sync::Arc;

use super::diag::Diagnostic;
use crate::kernel::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(Arc<str>),
    Int(i128),
    Str(String),
    Newline,
    Eof,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    LSeq,
    RSeq,
    Comma,
    Colon,
    Dot,
    DotDot,
    Bang,
    Prime,
    Eq,
    Assign,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    MapsTo,
    Arrow,
    Implies,
    And,
    Or,
    Not,
    In,
    NotIn,
    Subseteq,
    Union,
    Intersect,
    SetMinus,
    Forall,
    Exists,
}

impl Tok {
    /// Tokens after which a line break never ends a statement.
    fn continues_line(&self) -> bool {
        matches!(
            self,
            Tok::Comma
                | Tok::Colon
                | Tok::DotDot
                | Tok::Eq
                | Tok::Assign
                | Tok::Ne
                | Tok::Lt
                | Tok::Le
                | Tok::Gt
                | Tok::Ge
                | Tok::Plus
                | Tok::Minus
                | Tok::Star
                | Tok::MapsTo
                | Tok::Arrow
                | Tok::Implies
                | Tok::And
                | Tok::Or
                | Tok::Not
                | Tok::In
                | Tok::NotIn
                | Tok::Subseteq
                | Tok::Union
                | Tok::Intersect
                | Tok::SetMinus
        ) || matches!(self, Tok::Ident(w) if matches!(w.as_ref(), "IF" | "THEN" | "ELSE" | "EXCEPT"))
    }

    /// Tokens that glue a line onto the previous one when they start it.
    fn joins_previous(&self) -> bool {
        matches!(self, Tok::And | Tok::Or | Tok::Implies)
            || matches!(self, Tok::Ident(w) if matches!(w.as_ref(), "THEN" | "ELSE"))
    }
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(name) => return write!(f, "`{name}`"),
            Tok::Int(i) => return write!(f, "`{i}`"),
            Tok::Str(s) => return write!(f, "\"{s}\""),
            Tok::Newline => "end of line",
            Tok::Eof => "end of file",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrack => "`[`",
            Tok::RBrack => "`]`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LSeq => "`<<`",
            Tok::RSeq => "`>>`",
            Tok::Comma => "`,`",
            Tok::Colon => "`:`",
            Tok::Dot => "`.`",
            Tok::DotDot => "`..`",
            Tok::Bang => "`!`",
            Tok::Prime => "`'`",
            Tok::Eq => "`=`",
            Tok::Assign => "`:=`",
            Tok::Ne => "`#`",
            Tok::Lt => "`<`",
            Tok::Le => "`<=`",
            Tok::Gt => "`>`",
            Tok::Ge => "`>=`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::MapsTo => "`|->`",
            Tok::Arrow => "`->`",
            Tok::Implies => "`=>`",
            Tok::And => "`/\\`",
            Tok::Or => "`\\/`",
            Tok::Not => "`~`",
            Tok::In => "`\\in`",
            Tok::NotIn => "`\\notin`",
            Tok::Subseteq => "`\\subseteq`",
            Tok::Union => "`\\union`",
            Tok::Intersect => "`\\intersect`",
            Tok::SetMinus => "`\\setminus`",
            Tok::Forall => "`\\A`",
            Tok::Exists => "`\\E`",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Splits `text` into tokens. Line breaks are significant except inside
/// brackets, after a token that cannot end an expression, and before a line
/// that starts with a connective or `THEN`/`ELSE`.
pub fn lex(text: &str, file: &Arc<str>) -> Result<Vec<Token>, Diagnostic> {
    let mut raw = Lexer { chars: text.char_indices().peekable(), text, file, line: 1, col: 1 }.run()?;
    // Second pass: drop line breaks that do not end a statement.
    let mut out: Vec<Token> = Vec::with_capacity(raw.len());
    let mut depth = 0i32;
    let mut i = 0;
    while i < raw.len() {
        let t = std::mem::replace(&mut raw[i].tok, Tok::Eof);
        let span = raw[i].span.clone();
        i += 1;
        match t {
            Tok::LParen | Tok::LBrack | Tok::LBrace | Tok::LSeq => depth += 1,
            Tok::RParen | Tok::RBrack | Tok::RBrace | Tok::RSeq => depth = (depth - 1).max(0),
            Tok::Newline => {
                let after_cont = out.last().is_none_or(|p| p.tok.continues_line() || p.tok == Tok::Newline);
                let mut j = i;
                while j < raw.len() && raw[j].tok == Tok::Newline {
                    j += 1;
                }
                let before_join = j < raw.len() && raw[j].tok.joins_previous();
                if depth > 0 || after_cont || before_join {
                    continue;
                }
            }
            _ => {}
        }
        out.push(Token { tok: t, span });
    }
    Ok(out)
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
    file: &'a Arc<str>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn span(&self, line: u32, col: u32, len: u32) -> Span {
        Span { file: self.file.clone(), line, col, len }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn rest(&mut self) -> &'a str {
        match self.chars.peek() {
            Some(&(i, _)) => &self.text[i..],
            None => "",
        }
    }

    fn run(mut self) -> Result<Vec<Token>, Diagnostic> {
        let mut out = Vec::new();
        loop {
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push(Token { tok: Tok::Newline, span: self.span(line, col, 0) });
                out.push(Token { tok: Tok::Eof, span: self.span(line, col, 0) });
                return Ok(out);
            };
            if c == '\n' {
                self.bump();
                out.push(Token { tok: Tok::Newline, span: self.span(line, col, 1) });
                continue;
            }
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if self.rest().starts_with("\\*") {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
                continue;
            }
            let tok = self.token(c, line, col)?;
            let len = if self.line == line { self.col - col } else { 1 };
            out.push(Token { tok, span: self.span(line, col, len) });
        }
    }

    fn token(&mut self, c: char, line: u32, col: u32) -> Result<Tok, Diagnostic> {
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = self.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                s.push(c);
                self.bump();
            }
            return Ok(Tok::Ident(Arc::from(s)));
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
                s.push(c);
                self.bump();
            }
            return s
                .parse::<i128>()
                .ok()
                .filter(|v| *v <= i64::MAX as i128 + 1)
                .map(Tok::Int)
                .ok_or_else(|| self.err(line, col, s.len() as u32, format!("integer literal {s} is too large")));
        }
        if c == '"' {
            self.bump();
            let mut s = String::new();
            loop {
                match self.bump() {
                    Some('"') => return Ok(Tok::Str(s)),
                    Some('\n') | None => return Err(self.err(line, col, 1, "unterminated string literal")),
                    Some(c) => s.push(c),
                }
            }
        }
        const TABLE: &[(&str, Tok)] = &[
            ("\\subseteq", Tok::Subseteq),
            ("\\intersect", Tok::Intersect),
            ("\\setminus", Tok::SetMinus),
            ("\\notin", Tok::NotIn),
            ("\\union", Tok::Union),
            ("\\cup", Tok::Union),
            ("\\cap", Tok::Intersect),
            ("\\in", Tok::In),
            ("\\A", Tok::Forall),
            ("\\E", Tok::Exists),
            ("\\/", Tok::Or),
            ("/\\", Tok::And),
            ("|->", Tok::MapsTo),
            ("<<", Tok::LSeq),
            (">>", Tok::RSeq),
            ("..", Tok::DotDot),
            ("->", Tok::Arrow),
            ("=>", Tok::Implies),
            ("<=", Tok::Le),
            (">=", Tok::Ge),
            ("/=", Tok::Ne),
            (":=", Tok::Assign),
            ("(", Tok::LParen),
            (")", Tok::RParen),
            ("[", Tok::LBrack),
            ("]", Tok::RBrack),
            ("{", Tok::LBrace),
            ("}", Tok::RBrace),
            (",", Tok::Comma),
            (":", Tok::Colon),
            (".", Tok::Dot),
            ("!", Tok::Bang),
            ("'", Tok::Prime),
            ("=", Tok::Eq),
            ("#", Tok::Ne),
            ("<", Tok::Lt),
            (">", Tok::Gt),
            ("+", Tok::Plus),
            ("-", Tok::Minus),
            ("*", Tok::Star),
            ("~", Tok::Not),
        ];
        let rest = self.rest();
        for (text, tok) in TABLE {
            if rest.starts_with(text) {
                // `\in` must not swallow the start of a longer word such as `\inter`.
                let word_like = text.strip_prefix('\\').is_some_and(|w| w.chars().all(|c| c.is_ascii_alphabetic()));
                let after = rest.strip_prefix(text).and_then(|r| r.chars().next());
                if word_like && after.is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    continue;
                }
                for _ in 0..text.chars().count() {
                    self.bump();
                }
                return Ok(tok.clone());
            }
        }
        Err(self.err(line, col, 1, format!("unexpected character `{c}`")))
    }

    fn err(&self, line: u32, col: u32, len: u32, message: impl Into<String>) -> Diagnostic {
        Diagnostic::error("E-syntax", message, self.span(line, col, len))
    }
}
