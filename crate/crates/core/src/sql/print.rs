//! Canonical SQL text: single spaces, uppercase keywords, lowercase identifiers.

use std::fmt;

use super::ast::{Expr, Query};
use super::sites::{walk, ConstantMut, Sink, Site};

struct TextSink {
    out: String,
}

impl Sink for TextSink {
    fn text(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn constant(&mut self, _site: &Site<'_>, value: ConstantMut<'_>) {
        value.render(&mut self.out);
    }
}

/// Renders each constant through a caller-provided closure.
struct HookSink<F> {
    out: String,
    next: usize,
    hook: F,
}

impl<F: FnMut(usize, &ConstantMut<'_>, &mut String)> Sink for HookSink<F> {
    fn text(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn constant(&mut self, _site: &Site<'_>, value: ConstantMut<'_>) {
        (self.hook)(self.next, &value, &mut self.out);
        self.next += 1;
    }
}

pub fn print(query: &Query) -> String {
    let mut q = query.clone();
    let mut sink = TextSink { out: String::new() };
    walk(&mut q, &mut sink);
    sink.out
}

/// Prints `query`, letting `hook` render the constant at each traversal index.
pub(crate) fn print_with(query: &Query, hook: impl FnMut(usize, &ConstantMut<'_>, &mut String)) -> String {
    let mut q = query.clone();
    let mut sink = HookSink { out: String::new(), next: 0, hook };
    walk(&mut q, &mut sink);
    sink.out
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Star => f.write_str("*"),
            Expr::Column(c) => write!(f, "{c}"),
            Expr::Aggregate { func, distinct, arg } => {
                write!(f, "{}(", func.name())?;
                if *distinct {
                    f.write_str("DISTINCT ")?;
                }
                match arg {
                    super::ast::AggArg::Star => f.write_str("*")?,
                    super::ast::AggArg::Column(c) => write!(f, "{c}")?,
                }
                f.write_str(")")
            }
        }
    }
}
