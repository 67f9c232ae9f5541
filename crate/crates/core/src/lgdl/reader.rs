//! Reads ludeme text into [`Term`] trees without interpreting keywords.

use std::fmt;

use super::term::{Arg, Span, Term, Value};
use crate::num::Decimal;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadError {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for ReadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (offset {}): {}", self.span, self.span.offset, self.message)
    }
}

impl std::error::Error for ReadError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    OpenBrace,
    CloseBrace,
    Str(String),
    Number(Decimal),
    Ident(String),
    /// `name:` introducing a named argument.
    Key(String),
}

struct Scanner<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    column: usize,
}

impl<'a> Scanner<'a> {
    fn span(&self) -> Span {
        Span {
            offset: self.offset,
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        self.src[self.offset..].chars().nth(1)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error<T>(&self, span: Span, message: impl Into<String>) -> Result<T, ReadError> {
        Err(ReadError {
            span,
            message: message.into(),
        })
    }

    fn next_token(&mut self) -> Result<Option<(Span, Tok)>, ReadError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() || c == ',' => {
                    self.bump();
                }
                Some('/') if self.peek2() == Some('/') => {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let span = self.span();
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let tok = match c {
            '(' => {
                self.bump();
                Tok::Open
            }
            ')' => {
                self.bump();
                Tok::Close
            }
            '{' => {
                self.bump();
                Tok::OpenBrace
            }
            '}' => {
                self.bump();
                Tok::CloseBrace
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return self.error(span, "unterminated string literal"),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some(e @ ('"' | '\\')) => s.push(e),
                            _ => return self.error(span, "malformed escape in string literal"),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Tok::Str(s)
            }
            '=' => {
                self.bump();
                Tok::Ident("=".into())
            }
            c if c == '-' || c.is_ascii_digit() => {
                let mut text = String::new();
                while let Some(c) = self.peek().filter(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_')) {
                    text.push(c);
                    self.bump();
                }
                match text.parse::<Decimal>() {
                    Ok(d) => Tok::Number(d),
                    Err(_) => return self.error(span, format!("malformed literal `{text}`")),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut text = String::new();
                while let Some(c) = self.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                    text.push(c);
                    self.bump();
                }
                if self.peek() == Some(':') {
                    self.bump();
                    Tok::Key(text)
                } else {
                    Tok::Ident(text)
                }
            }
            other => return self.error(span, format!("unexpected character `{other}`")),
        };
        Ok(Some((span, tok)))
    }
}

enum Frame {
    Term { term: Term, key: Option<String> },
    Array { items: Vec<Value>, span: Span },
}

/// Reads exactly one top-level term.
pub fn read_term(src: &str) -> Result<Term, ReadError> {
    let mut sc = Scanner {
        src,
        offset: 0,
        line: 1,
        column: 1,
    };
    // Each frame remembers the argument name under which it will be attached
    // to its parent.
    let mut stack: Vec<(Frame, Option<String>)> = Vec::new();
    let mut result: Option<Term> = None;

    loop {
        let Some((span, tok)) = sc.next_token()? else {
            if let Some((frame, _)) = stack.last() {
                let (what, at) = match frame {
                    Frame::Term { term, .. } => ("`)`", term.span),
                    Frame::Array { span, .. } => ("`}`", *span),
                };
                return sc.error(sc.span(), format!("unexpected end of input, expected {what} closing the group opened at {at}"));
            }
            return match result {
                Some(t) => Ok(t),
                None => sc.error(sc.span(), "unexpected end of input, expected `(`"),
            };
        };
        if result.is_some() {
            return sc.error(span, "unexpected text after the top-level ludeme");
        }
        let completed: Option<(Span, Value)> = match tok {
            Tok::Open => {
                let head = match sc.next_token()? {
                    Some((_, Tok::Ident(h))) => h,
                    Some((s, _)) => return sc.error(s, "expected a ludeme keyword after `(`"),
                    None => return sc.error(sc.span(), "unexpected end of input after `(`"),
                };
                let pending = take_key(&mut stack);
                let mut term = Term::new(head);
                term.span = span;
                stack.push((Frame::Term { term, key: None }, pending));
                None
            }
            Tok::OpenBrace => {
                let pending = take_key(&mut stack);
                if stack.is_empty() {
                    return sc.error(span, "expected `(`");
                }
                stack.push((Frame::Array { items: Vec::new(), span }, pending));
                None
            }
            Tok::Close => match stack.pop() {
                Some((Frame::Term { term, key }, name)) => {
                    if let Some(k) = key {
                        return sc.error(span, format!("named argument `{k}:` has no value"));
                    }
                    if stack.is_empty() {
                        result = Some(term);
                        continue;
                    }
                    attach(&mut stack, name, Value::Term(term), span, &sc)?;
                    continue;
                }
                Some((Frame::Array { .. }, _)) => return sc.error(span, "unbalanced `)` inside `{`"),
                None => return sc.error(span, "unbalanced `)`"),
            },
            Tok::CloseBrace => match stack.pop() {
                Some((Frame::Array { items, .. }, name)) => {
                    attach(&mut stack, name, Value::Array(items), span, &sc)?;
                    continue;
                }
                Some((Frame::Term { .. }, _)) => return sc.error(span, "unbalanced `}` inside `(`"),
                None => return sc.error(span, "unbalanced `}`"),
            },
            Tok::Key(k) => {
                match stack.last_mut() {
                    Some((Frame::Term { key, .. }, _)) if key.is_none() => *key = Some(k),
                    Some((Frame::Term { .. }, _)) => {
                        return sc.error(span, format!("named argument `{k}:` follows another name"))
                    }
                    Some((Frame::Array { .. }, _)) => {
                        return sc.error(span, format!("named argument `{k}:` inside an array"))
                    }
                    None => return sc.error(span, format!("named argument `{k}:` outside a ludeme")),
                }
                None
            }
            Tok::Str(s) => Some((span, Value::Str(s))),
            Tok::Number(d) => Some((span, Value::Number(d))),
            Tok::Ident(i) => Some((span, Value::Ident(i))),
        };
        if let Some((span, value)) = completed {
            if stack.is_empty() {
                return sc.error(span, "expected `(`");
            }
            let name = take_key(&mut stack);
            attach(&mut stack, name, value, span, &sc)?;
        }
    }
}

fn take_key(stack: &mut [(Frame, Option<String>)]) -> Option<String> {
    match stack.last_mut() {
        Some((Frame::Term { key, .. }, _)) => key.take(),
        _ => None,
    }
}

fn attach(
    stack: &mut [(Frame, Option<String>)],
    name: Option<String>,
    value: Value,
    span: Span,
    sc: &Scanner<'_>,
) -> Result<(), ReadError> {
    match stack.last_mut() {
        Some((Frame::Term { term, .. }, _)) => {
            term.args.push(Arg { name, value });
            Ok(())
        }
        Some((Frame::Array { items, .. }, _)) => {
            if let Some(n) = name {
                return sc.error(span, format!("named argument `{n}:` inside an array"));
            }
            items.push(value);
            Ok(())
        }
        None => sc.error(span, "value outside any ludeme"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgdl::term::render;

    #[test]
    fn reads_named_arguments_arrays_and_strings() {
        let t = read_term(r#"(set Hidden (sites "Subgraph_0") to:All)"#).unwrap();
        assert_eq!(t.head, "set");
        assert_eq!(t.args.len(), 3);
        assert_eq!(t.get_named("to"), Some(&Value::ident("All")));

        let t = read_term("(random {1, 1, 2} {(a) (b)})").unwrap();
        let first = t.positional().next().unwrap();
        assert_eq!(first, &Value::Array(vec![Value::int(1), Value::int(1), Value::int(2)]));
    }

    #[test]
    fn render_then_read_is_identity() {
        let src = r#"(game "X" (players 2) (rules (end {(if (= (where "Marker" Neutral) 3) (payoffs {(payoff P1 -1) (payoff P2 0.5)}))})))"#;
        let t = read_term(src).unwrap();
        let again = read_term(&render(&t)).unwrap();
        assert_eq!(t, again);
        assert_eq!(render(&t), render(&again));
    }

    #[test]
    fn empty_input_fails_at_offset_zero() {
        let e = read_term("").unwrap_err();
        assert_eq!(e.span.offset, 0);
        assert!(e.message.contains("expected `(`"));
        let e = read_term("   // only a comment").unwrap_err();
        assert!(e.message.contains("end of input"));
    }

    #[test]
    fn reports_positions() {
        let e = read_term("(game\n  (players 2)\n  )x").unwrap_err();
        assert_eq!((e.span.line, e.span.column), (3, 4));
        let e = read_term("(game (players 2)").unwrap_err();
        assert!(e.message.contains("closing the group opened at 1:1"), "{}", e.message);
        let e = read_term("(game 1.2.3)").unwrap_err();
        assert_eq!(e.message, "malformed literal `1.2.3`");
        let e = read_term("(a {x:1})").unwrap_err();
        assert!(e.message.contains("inside an array"));
        let e = read_term("(a b:)").unwrap_err();
        assert!(e.message.contains("has no value"));
    }

    #[test]
    fn deep_nesting_is_iterative() {
        let depth = 100_000;
        let src = format!("{}(x){}", "(if ".repeat(depth), ")".repeat(depth));
        let t = read_term(&src).unwrap();
        let mut n = 0;
        t.walk(|_| n += 1);
        assert_eq!(n, depth + 1);
    }
}
