//! Hand-written lexer and recursive-descent parser for the supported subset.

use thiserror::Error;

use super::ast::{
    AggArg, AggFunc, CmpOp, ColumnRef, Expr, Join, Operand, OrderItem, Predicate, Query, SetOp, SetOpKind,
    SortDir,
};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unsupported construct {construct} at byte {position}")]
    Unsupported { construct: String, position: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(String),
    Str(String),
    Sym(&'static str),
    Hole,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

const SYMBOLS: [&str; 14] = ["<>", "!=", "<=", ">=", "(", ")", ",", ".", "*", "=", "<", ">", ";", "-"];

const RESERVED: [&str; 23] = [
    "select", "distinct", "from", "join", "inner", "on", "where", "group", "by", "having", "order", "asc", "desc",
    "limit", "except", "union", "intersect", "and", "or", "not", "like", "in", "null",
];

/// Words that open constructs outside the subset, with the name reported.
const UNSUPPORTED: [(&str, &str); 23] = [
    ("outer", "OUTER JOIN"),
    ("left", "LEFT JOIN"),
    ("right", "RIGHT JOIN"),
    ("full", "FULL JOIN"),
    ("cross", "CROSS JOIN"),
    ("natural", "NATURAL JOIN"),
    ("with", "WITH (common table expression)"),
    ("over", "window function"),
    ("partition", "window function"),
    ("insert", "INSERT"),
    ("update", "UPDATE"),
    ("delete", "DELETE"),
    ("create", "CREATE"),
    ("drop", "DROP"),
    ("alter", "ALTER"),
    ("exists", "EXISTS"),
    ("between", "BETWEEN"),
    ("case", "CASE"),
    ("is", "IS [NOT] NULL"),
    ("as", "alias (AS)"),
    ("using", "JOIN ... USING"),
    ("offset", "OFFSET"),
    ("cast", "CAST"),
];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Word(text[start..i].to_string()), pos: start });
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            out.push(Token { tok: Tok::Number(text[start..i].to_string()), pos: start });
        } else if c == b'\'' || c == b'"' {
            let quote = c;
            i += 1;
            let mut s = String::new();
            loop {
                if i >= bytes.len() {
                    return Err(ParseError::Syntax { position: start, message: "unterminated string literal".into() });
                }
                if bytes[i] == quote {
                    if i + 1 < bytes.len() && bytes[i + 1] == quote {
                        s.push(quote as char);
                        i += 2;
                        continue;
                    }
                    i += 1;
                    break;
                }
                let ch = text[i..].chars().next().unwrap();
                s.push(ch);
                i += ch.len_utf8();
            }
            out.push(Token { tok: Tok::Str(s), pos: start });
        } else if c == b'`' {
            i += 1;
            let from = i;
            while i < bytes.len() && bytes[i] != b'`' {
                i += 1;
            }
            if i >= bytes.len() {
                return Err(ParseError::Syntax { position: start, message: "unterminated quoted identifier".into() });
            }
            out.push(Token { tok: Tok::Word(text[from..i].to_string()), pos: start });
            i += 1;
        } else if c == b'?' {
            out.push(Token { tok: Tok::Hole, pos: start });
            i += 1;
        } else if text[i..].starts_with("<lit>") {
            out.push(Token { tok: Tok::Hole, pos: start });
            i += 5;
        } else if let Some(sym) = SYMBOLS.iter().find(|s| text[i..].starts_with(**s)) {
            out.push(Token { tok: Tok::Sym(sym), pos: start });
            i += sym.len();
        } else {
            let ch = text[i..].chars().next().unwrap();
            return Err(ParseError::Syntax { position: start, message: format!("unexpected character {ch:?}") });
        }
    }
    out.push(Token { tok: Tok::Eof, pos: text.len() });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    idx: usize,
    literal_ordinal: usize,
    holes: Vec<usize>,
}

/// Parses one query of the supported subset.
pub fn parse(text: &str) -> Result<Query, ParseError> {
    let (q, holes) = parse_with_holes(text)?;
    if !holes.is_empty() {
        return Err(ParseError::Syntax { position: 0, message: "unfilled literal placeholder".into() });
    }
    Ok(q)
}

/// Like [`parse`], but accepts `?` or `<lit>` in literal positions (comparison
/// right-hand sides, IN lists and LIMIT). Holes parse as `NULL` (or `LIMIT 1`);
/// the returned ordinals index the literal-kind constants in source order.
pub fn parse_with_holes(text: &str) -> Result<(Query, Vec<usize>), ParseError> {
    let toks = lex(text)?;
    for t in &toks {
        if let Tok::Word(w) = &t.tok {
            let lw = w.to_ascii_lowercase();
            if let Some((_, name)) = UNSUPPORTED.iter().find(|(k, _)| *k == lw && !matches!(*k, "left" | "right")) {
                return Err(ParseError::Unsupported { construct: name.to_string(), position: t.pos });
            }
        }
    }
    let mut p = Parser { toks, idx: 0, literal_ordinal: 0, holes: Vec::new() };
    let q = p.query(true)?;
    p.eat_sym(";");
    if p.peek() != &Tok::Eof {
        return Err(p.err("unexpected trailing input"));
    }
    Ok((q, p.holes))
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.idx + ahead).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> usize {
        self.toks[self.idx].pos
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { position: self.pos(), message: message.into() }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].tok.clone();
        if self.idx < self.toks.len() - 1 {
            self.idx += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn is_kw_at(&self, ahead: usize, kw: &str) -> bool {
        matches!(self.peek_at(ahead), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected {}", kw.to_ascii_uppercase())))
        }
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), ParseError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{sym}'")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Word(w) => {
                let lw = w.to_ascii_lowercase();
                if RESERVED.contains(&lw.as_str()) {
                    return Err(self.err(format!("expected identifier, found keyword {}", lw.to_ascii_uppercase())));
                }
                self.bump();
                Ok(lw)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn unsupported(&self, construct: &str) -> ParseError {
        ParseError::Unsupported { construct: construct.to_string(), position: self.pos() }
    }

    fn check_subquery(&self) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Sym("(")) && self.is_kw_at(1, "select") {
            return Err(ParseError::Unsupported { construct: "subquery".into(), position: self.pos() });
        }
        Ok(())
    }

    fn query(&mut self, allow_set_op: bool) -> Result<Query, ParseError> {
        self.expect_kw("select")?;
        let distinct = self.eat_kw("distinct");
        let mut select = vec![self.select_item()?];
        while self.eat_sym(",") {
            select.push(self.select_item()?);
        }
        self.expect_kw("from")?;
        self.check_subquery()?;
        let mut from = vec![self.ident()?];
        while self.eat_sym(",") {
            self.check_subquery()?;
            from.push(self.ident()?);
        }
        let mut joins = Vec::new();
        loop {
            for (kw, name) in [("left", "LEFT JOIN"), ("right", "RIGHT JOIN")] {
                if self.is_kw(kw) {
                    return Err(self.unsupported(name));
                }
            }
            if self.is_kw("inner") {
                self.bump();
                self.expect_kw("join")?;
            } else if !self.eat_kw("join") {
                break;
            }
            self.check_subquery()?;
            let table = self.ident()?;
            self.expect_kw("on")?;
            let left = self.column_ref()?;
            self.expect_sym("=")?;
            let right = self.column_ref()?;
            if self.is_kw("and") {
                return Err(self.unsupported("multi-condition JOIN ... ON"));
            }
            joins.push(Join { table, left, right });
        }
        let where_clause = if self.eat_kw("where") { Some(self.predicate()?) } else { None };
        let mut group_by = Vec::new();
        if self.eat_kw("group") {
            self.expect_kw("by")?;
            group_by.push(self.column_ref()?);
            while self.eat_sym(",") {
                group_by.push(self.column_ref()?);
            }
        }
        let having = if self.eat_kw("having") { Some(self.predicate()?) } else { None };
        let mut order_by = Vec::new();
        if self.eat_kw("order") {
            self.expect_kw("by")?;
            loop {
                let expr = self.value_expr()?;
                let dir = if self.eat_kw("desc") {
                    SortDir::Desc
                } else {
                    self.eat_kw("asc");
                    SortDir::Asc
                };
                order_by.push(OrderItem { expr, dir });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        let limit = if self.eat_kw("limit") { Some(self.limit_value()?) } else { None };
        let mut set_op = None;
        for (kw, kind) in [("except", SetOpKind::Except), ("union", SetOpKind::Union), ("intersect", SetOpKind::Intersect)] {
            if self.is_kw(kw) {
                if !allow_set_op {
                    return Err(self.unsupported("chained set operations"));
                }
                self.bump();
                if self.is_kw("all") {
                    return Err(self.unsupported(&format!("{} ALL", kind.keyword())));
                }
                let sub = self.query(false)?;
                set_op = Some(SetOp { kind, query: Box::new(sub) });
                break;
            }
        }
        Ok(Query { distinct, select, from, joins, where_clause, group_by, having, order_by, limit, set_op })
    }

    fn limit_value(&mut self) -> Result<u64, ParseError> {
        let ordinal = self.literal_ordinal;
        self.literal_ordinal += 1;
        match self.peek().clone() {
            Tok::Hole => {
                self.bump();
                self.holes.push(ordinal);
                Ok(1)
            }
            Tok::Number(n) => match n.parse::<u64>() {
                Ok(v) if v >= 1 => {
                    self.bump();
                    Ok(v)
                }
                _ => Err(self.err("LIMIT requires a positive integer")),
            },
            _ => Err(self.err("LIMIT requires a positive integer")),
        }
    }

    fn column_ref(&mut self) -> Result<ColumnRef, ParseError> {
        let first = self.ident()?;
        if self.eat_sym(".") {
            if matches!(self.peek(), Tok::Sym("*")) {
                return Err(self.unsupported("qualified star (t.*)"));
            }
            let second = self.ident()?;
            Ok(ColumnRef { table: Some(first), column: second })
        } else {
            Ok(ColumnRef { table: None, column: first })
        }
    }

    fn is_aggregate_call(&self) -> Option<AggFunc> {
        match (self.peek(), self.peek_at(1)) {
            (Tok::Word(w), Tok::Sym("(")) => AggFunc::from_name(w),
            _ => None,
        }
    }

    fn aggregate(&mut self, func: AggFunc) -> Result<Expr, ParseError> {
        self.bump();
        self.expect_sym("(")?;
        self.check_subquery()?;
        let distinct = self.eat_kw("distinct");
        let arg = if self.eat_sym("*") {
            if func != AggFunc::Count || distinct {
                return Err(self.err("only COUNT(*) may take '*'"));
            }
            AggArg::Star
        } else {
            AggArg::Column(self.column_ref()?)
        };
        self.expect_sym(")")?;
        Ok(Expr::Aggregate { func, distinct, arg })
    }

    fn select_item(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym("*") {
            return Ok(Expr::Star);
        }
        self.value_expr()
    }

    /// Column reference or aggregate call.
    fn value_expr(&mut self) -> Result<Expr, ParseError> {
        if let Some(func) = self.is_aggregate_call() {
            return self.aggregate(func);
        }
        if let Tok::Word(w) = self.peek() {
            if matches!(self.peek_at(1), Tok::Sym("(")) {
                let name = w.to_ascii_uppercase();
                return Err(self.unsupported(&format!("function {name}")));
            }
        }
        Ok(Expr::Column(self.column_ref()?))
    }

    fn predicate(&mut self) -> Result<Predicate, ParseError> {
        let mut left = self.conjunction()?;
        while self.eat_kw("or") {
            let right = self.conjunction()?;
            left = Predicate::or(left, right);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> Result<Predicate, ParseError> {
        let mut left = self.negation()?;
        while self.eat_kw("and") {
            let right = self.negation()?;
            left = Predicate::and(left, right);
        }
        Ok(left)
    }

    fn negation(&mut self) -> Result<Predicate, ParseError> {
        if self.eat_kw("not") {
            return Ok(Predicate::not(self.negation()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Predicate, ParseError> {
        self.check_subquery()?;
        if self.eat_sym("(") {
            let p = self.predicate()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        let left = self.value_expr()?;
        let negate = self.is_kw("not") && (self.is_kw_at(1, "like") || self.is_kw_at(1, "in"));
        if negate {
            self.bump();
        }
        let pred = if self.eat_kw("in") {
            self.check_subquery()?;
            self.expect_sym("(")?;
            self.check_subquery()?;
            let mut list = vec![self.literal()?];
            while self.eat_sym(",") {
                list.push(self.literal()?);
            }
            self.expect_sym(")")?;
            Predicate::In { left, list }
        } else {
            let op = if self.eat_kw("like") {
                CmpOp::Like
            } else {
                match self.bump() {
                    Tok::Sym("=") => CmpOp::Eq,
                    Tok::Sym("!=") | Tok::Sym("<>") => CmpOp::Ne,
                    Tok::Sym("<") => CmpOp::Lt,
                    Tok::Sym("<=") => CmpOp::Le,
                    Tok::Sym(">") => CmpOp::Gt,
                    Tok::Sym(">=") => CmpOp::Ge,
                    _ => {
                        self.idx -= 1;
                        return Err(self.err("expected comparison operator"));
                    }
                }
            };
            self.check_subquery()?;
            let right = if self.starts_literal() {
                Operand::Literal(self.literal()?)
            } else {
                Operand::Expr(self.value_expr()?)
            };
            Predicate::Compare { left, op, right }
        };
        Ok(if negate { Predicate::not(pred) } else { pred })
    }

    fn starts_literal(&self) -> bool {
        match self.peek() {
            Tok::Number(_) | Tok::Str(_) | Tok::Hole | Tok::Sym("-") => true,
            Tok::Word(w) => w.eq_ignore_ascii_case("null"),
            _ => false,
        }
    }

    fn literal(&mut self) -> Result<Value, ParseError> {
        let ordinal = self.literal_ordinal;
        self.literal_ordinal += 1;
        let negative = self.eat_sym("-");
        let v = match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                number_value(&n, negative).ok_or_else(|| self.err("numeric literal out of range"))?
            }
            Tok::Str(s) if !negative => {
                self.bump();
                Value::Text(s)
            }
            Tok::Hole if !negative => {
                self.bump();
                self.holes.push(ordinal);
                Value::Null
            }
            Tok::Word(w) if !negative && w.eq_ignore_ascii_case("null") => {
                self.bump();
                Value::Null
            }
            _ => return Err(self.err("expected literal")),
        };
        Ok(v)
    }
}

fn number_value(text: &str, negative: bool) -> Option<Value> {
    let is_int = text.bytes().all(|b| b.is_ascii_digit());
    if is_int {
        let signed = if negative { format!("-{text}") } else { text.to_string() };
        if let Ok(i) = signed.parse::<i64>() {
            return Some(Value::Int(i));
        }
    }
    let r: f64 = text.parse().ok()?;
    if !r.is_finite() {
        return None;
    }
    Some(Value::Real(if negative { -r } else { r }))
}
