//! Minimal s-expression reader with byte spans. Never panics and never
//! recurses, so arbitrarily nested input is safe.

use super::{Diagnostic, DiagnosticCode, Span};

#[derive(Debug, Clone, PartialEq)]
pub enum Sexpr {
    Atom(String, Span),
    List(Vec<Sexpr>, Span),
}

impl Sexpr {
    pub fn span(&self) -> Span {
        match self {
            Sexpr::Atom(_, s) | Sexpr::List(_, s) => *s,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(a, _) => Some(a),
            Sexpr::List(..) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Atom(..) => None,
        }
    }

    /// Lowercased head atom of a list.
    pub fn head(&self) -> Option<String> {
        self.list()?.first()?.atom().map(str::to_ascii_lowercase)
    }
}

/// Maximum list nesting accepted; deeper input yields a diagnostic.
pub const MAX_DEPTH: usize = 32;

pub fn read_all(src: &str) -> Result<Vec<Sexpr>, Diagnostic> {
    let bytes = src.as_bytes();
    let mut stack: Vec<(Vec<Sexpr>, usize)> = Vec::new();
    let mut top = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                if stack.len() >= MAX_DEPTH {
                    return Err(Diagnostic::error(
                        DiagnosticCode::Syntax,
                        format!("nesting deeper than {MAX_DEPTH}"),
                        Span::new(src, i, i + 1),
                    ));
                }
                stack.push((Vec::new(), i));
                i += 1;
            }
            b')' => {
                let Some((items, start)) = stack.pop() else {
                    return Err(Diagnostic::error(
                        DiagnosticCode::Syntax,
                        "unexpected `)`",
                        Span::new(src, i, i + 1),
                    ));
                };
                let node = Sexpr::List(items, Span::new(src, start, i + 1));
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(node),
                    None => top.push(node),
                }
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
                // `start..i` lies on char boundaries: delimiters are ASCII
                let node = Sexpr::Atom(src[start..i].to_string(), Span::new(src, start, i));
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(node),
                    None => top.push(node),
                }
            }
        }
    }
    if let Some((_, start)) = stack.pop() {
        return Err(Diagnostic::error(
            DiagnosticCode::Syntax,
            "unclosed `(`",
            Span::new(src, start, start + 1),
        ));
    }
    Ok(top)
}
