//! Ludeme terms and their canonical text rendering.

use std::fmt;

use crate::num::Decimal;

/// Source location of a parsed term. Ignored by equality so that parsed and
/// constructed terms compare structurally.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// A parenthesized ludeme: `(head arg... name:arg...)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Term {
    pub head: String,
    pub args: Vec<Arg>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arg {
    pub name: Option<String>,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Term(Term),
    Number(Decimal),
    Str(String),
    Ident(String),
    Array(Vec<Value>),
}

impl Value {
    pub fn int(v: usize) -> Value {
        Value::Number(Decimal::from(v as i64))
    }

    pub fn ident(s: impl Into<String>) -> Value {
        Value::Ident(s.into())
    }

    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn as_term(&self) -> Option<&Term> {
        match self {
            Value::Term(t) => Some(t),
            _ => None,
        }
    }

    fn contains_term_array(&self) -> bool {
        matches!(self, Value::Array(_)) && !self.is_atom_array()
    }

    /// Arrays of numbers, strings and nested atom arrays (such as edge lists).
    fn is_atom_array(&self) -> bool {
        match self {
            Value::Array(items) => items.iter().all(|v| match v {
                Value::Term(_) => false,
                Value::Array(_) => v.is_atom_array(),
                _ => true,
            }),
            _ => false,
        }
    }

    fn is_atom(&self) -> bool {
        !matches!(self, Value::Term(_) | Value::Array(_)) || self.is_atom_array()
    }
}

impl From<Term> for Value {
    fn from(t: Term) -> Self {
        Value::Term(t)
    }
}

impl From<Decimal> for Value {
    fn from(d: Decimal) -> Self {
        Value::Number(d)
    }
}

impl Term {
    pub fn new(head: impl Into<String>) -> Self {
        Term {
            head: head.into(),
            args: Vec::new(),
            span: Span::default(),
        }
    }

    /// Appends a positional argument.
    pub fn arg(mut self, value: impl Into<Value>) -> Self {
        self.args.push(Arg {
            name: None,
            value: value.into(),
        });
        self
    }

    pub fn named(mut self, name: impl Into<String>, value: impl Into<Value>) -> Self {
        self.args.push(Arg {
            name: Some(name.into()),
            value: value.into(),
        });
        self
    }

    pub fn positional(&self) -> impl Iterator<Item = &Value> {
        self.args.iter().filter(|a| a.name.is_none()).map(|a| &a.value)
    }

    pub fn get_named(&self, name: &str) -> Option<&Value> {
        self.args
            .iter()
            .find(|a| a.name.as_deref() == Some(name))
            .map(|a| &a.value)
    }

    /// True when no argument, at any depth, is an array holding terms.
    /// Flat terms render on a single line.
    pub fn is_flat(&self) -> bool {
        let mut stack: Vec<&Value> = self.args.iter().map(|a| &a.value).collect();
        while let Some(v) = stack.pop() {
            match v {
                Value::Term(t) => stack.extend(t.args.iter().map(|a| &a.value)),
                Value::Array(_) if !v.is_atom_array() => return false,
                _ => {}
            }
        }
        true
    }

    /// Visits this term and every nested term in pre-order.
    pub fn walk<'a>(&'a self, mut visit: impl FnMut(&'a Term)) {
        let mut stack: Vec<&'a Value> = Vec::new();
        visit(self);
        stack.extend(self.args.iter().rev().map(|a| &a.value));
        while let Some(v) = stack.pop() {
            match v {
                Value::Term(t) => {
                    visit(t);
                    stack.extend(t.args.iter().rev().map(|a| &a.value));
                }
                Value::Array(items) => stack.extend(items.iter().rev()),
                _ => {}
            }
        }
    }

    /// Mutable pre-order visit.
    pub fn walk_mut(&mut self, visit: &mut impl FnMut(&mut Term)) {
        visit(self);
        let mut stack: Vec<&mut Value> = self.args.iter_mut().rev().map(|a| &mut a.value).collect();
        while let Some(v) = stack.pop() {
            match v {
                Value::Term(t) => {
                    visit(t);
                    stack.extend(t.args.iter_mut().rev().map(|a| &mut a.value));
                }
                Value::Array(items) => stack.extend(items.iter_mut().rev()),
                _ => {}
            }
        }
    }
}

impl Drop for Term {
    fn drop(&mut self) {
        // Long right-nested `if` chains would overflow the stack with the
        // default recursive drop; flatten the tree first.
        let mut pending: Vec<Value> = std::mem::take(&mut self.args)
            .into_iter()
            .map(|a| a.value)
            .collect();
        while let Some(v) = pending.pop() {
            match v {
                Value::Term(mut t) => pending.extend(std::mem::take(&mut t.args).into_iter().map(|a| a.value)),
                Value::Array(items) => pending.extend(items),
                _ => {}
            }
        }
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
}

fn write_inline(out: &mut String, v: &Value) {
    match v {
        Value::Term(t) => write_flat_term(out, t),
        Value::Number(d) => out.push_str(&d.to_string()),
        Value::Str(s) => write_string(out, s),
        Value::Ident(s) => out.push_str(s),
        Value::Array(items) => {
            out.push('{');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write_inline(out, item);
            }
            out.push('}');
        }
    }
}

fn write_arg_prefix(out: &mut String, arg: &Arg) {
    if let Some(name) = &arg.name {
        out.push_str(name);
        out.push(':');
    }
}

fn write_flat_term(out: &mut String, t: &Term) {
    out.push('(');
    out.push_str(&t.head);
    for a in &t.args {
        out.push(' ');
        write_arg_prefix(out, a);
        write_inline(out, &a.value);
    }
    out.push(')');
}

fn indent(out: &mut String, n: usize) {
    out.extend(std::iter::repeat_n(' ', n));
}

/// Sections whose sub-terms always go on their own lines.
fn is_section(head: &str) -> bool {
    matches!(head, "game" | "rules" | "play")
}

fn is_else_if(t: &Term) -> bool {
    t.head == "if" && t.args.len() == 3 && t.args[2].name.is_none() && matches!(&t.args[2].value, Value::Term(e) if e.head == "if")
}

/// Writes a term whose first line starts at the current cursor and whose
/// continuation lines are indented by `level` spaces.
fn write_term(out: &mut String, t: &Term, level: usize) {
    if t.is_flat() {
        write_flat_term(out, t);
        return;
    }
    // `(if C A (if C' A' ...))` chains are written at a single indentation
    // level with the closing parentheses gathered at the end.
    if is_else_if(t) {
        let mut cur = t;
        let mut depth = 0;
        loop {
            out.push_str("(if ");
            write_inline(out, &cur.args[0].value);
            out.push('\n');
            indent(out, level + 2);
            write_value(out, &cur.args[1].value, level + 2);
            out.push('\n');
            indent(out, level);
            depth += 1;
            match &cur.args[2].value {
                Value::Term(next) if is_else_if(next) => cur = next,
                other => {
                    write_value(out, other, level);
                    break;
                }
            }
        }
        out.extend(std::iter::repeat_n(')', depth));
        return;
    }

    out.push('(');
    out.push_str(&t.head);
    let section = is_section(&t.head);
    let mut rest = t.args.iter().peekable();
    while let Some(a) = rest.peek() {
        let inline = if section {
            matches!(a.value, Value::Str(_) | Value::Ident(_) | Value::Number(_))
        } else {
            a.value.is_atom() || matches!(&a.value, Value::Term(t) if t.is_flat())
        };
        if !inline {
            break;
        }
        out.push(' ');
        write_arg_prefix(out, a);
        write_inline(out, &a.value);
        rest.next();
    }
    let remaining: Vec<&Arg> = rest.collect();
    let leading = t.args.len() - remaining.len();
    match remaining.as_slice() {
        [only] if !section && only.value.contains_term_array() => {
            out.push(' ');
            write_arg_prefix(out, only);
            write_value(out, &only.value, level);
            out.push(')');
        }
        [only] if !section && leading == 0 => {
            out.push(' ');
            write_arg_prefix(out, only);
            write_value(out, &only.value, level);
            out.push(')');
        }
        _ => {
            for a in remaining {
                out.push('\n');
                indent(out, level + 2);
                write_arg_prefix(out, a);
                write_value(out, &a.value, level + 2);
            }
            out.push('\n');
            indent(out, level);
            out.push(')');
        }
    }
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Term(t) => write_term(out, t, level),
        Value::Array(items) if !v.is_atom_array() => {
            out.push('{');
            for item in items {
                out.push('\n');
                indent(out, level + 2);
                write_value(out, item, level + 2);
            }
            out.push('\n');
            indent(out, level);
            out.push('}');
        }
        other => write_inline(out, other),
    }
}

/// Canonical multi-line text of a term, two-space indented, newline-terminated.
pub fn render(t: &Term) -> String {
    let mut out = String::new();
    write_term(&mut out, t, 0);
    out.push('\n');
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_term(&mut out, self, 0);
        f.write_str(&out)
    }
}
