//! Tokenizer and s-expression reader.

use super::diagnostics::{ParseDiagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    /// A lowercased symbol or number.
    Sym(String, SourceSpan),
    List(Vec<SExpr>, SourceSpan),
}

impl SExpr {
    pub fn span(&self) -> SourceSpan {
        match self {
            SExpr::Sym(_, s) | SExpr::List(_, s) => *s,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            SExpr::Sym(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(v, _) => Some(v),
            SExpr::Sym(..) => None,
        }
    }

    /// The head symbol of a list, if any.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_sym()
    }
}

enum Tok {
    Open,
    Close,
    Sym(String),
}

fn tokenize(file: u32, text: &str) -> Vec<(Tok, SourceSpan)> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut line = 1u32;
    let mut line_start = 0usize;
    let span = |start: usize, end: usize, line: u32, line_start: usize| SourceSpan {
        file,
        offset: start,
        len: end - start,
        line,
        column: (start - line_start) as u32 + 1,
    };
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                line_start = i;
            }
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                out.push((Tok::Open, span(i, i + 1, line, line_start)));
                i += 1;
            }
            b')' => {
                out.push((Tok::Close, span(i, i + 1, line, line_start)));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'(' | b')' | b';')
                {
                    i += 1;
                }
                out.push((
                    Tok::Sym(text[start..i].to_lowercase()),
                    span(start, i, line, line_start),
                ));
            }
        }
    }
    out
}

/// Read exactly one top-level expression from `text`.
pub fn read(file: u32, text: &str) -> Result<SExpr, ParseDiagnostic> {
    let toks = tokenize(file, text);
    let end_span = SourceSpan {
        file,
        offset: text.len().saturating_sub(1),
        len: usize::from(!text.is_empty()),
        line: text.lines().count().max(1) as u32,
        column: 1,
    };
    let mut stack: Vec<(Vec<SExpr>, SourceSpan)> = Vec::new();
    let mut done: Option<SExpr> = None;
    for (tok, span) in toks {
        if let Some(d) = &done {
            return Err(ParseDiagnostic::error(
                format!("unexpected input after the closing parenthesis of the form at {}", d.span()),
                span,
            ));
        }
        match tok {
            Tok::Open => stack.push((Vec::new(), span)),
            Tok::Close => {
                let (items, open) = stack
                    .pop()
                    .ok_or_else(|| ParseDiagnostic::error("unmatched ')'", span))?;
                let whole = SourceSpan {
                    len: span.offset + 1 - open.offset,
                    ..open
                };
                let e = SExpr::List(items, whole);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(e),
                    None => done = Some(e),
                }
            }
            Tok::Sym(s) => match stack.last_mut() {
                Some((parent, _)) => parent.push(SExpr::Sym(s, span)),
                None => {
                    return Err(ParseDiagnostic::error(
                        format!("expected '(' but found '{s}'"),
                        span,
                    ))
                }
            },
        }
    }
    if let Some((_, open)) = stack.pop() {
        return Err(ParseDiagnostic::error("unclosed '('", open));
    }
    done.ok_or_else(|| ParseDiagnostic::error("empty input", end_span))
}
