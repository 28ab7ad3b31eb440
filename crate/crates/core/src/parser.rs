//! Textual query syntax.
//!
//! ```text
//! expr     := prodx ("&" prodx)*
//! prodx    := comp ("*" comp)*
//! comp     := postfix ("o" postfix)*
//! postfix  := primary ("/" restr)*
//! primary  := LABEL | LABEL@SOURCE>TARGET | id(NODE) | tau(NODE)
//!           | pi[NODE](NODE) | "(" expr ")"
//! restr    := "{" literal ("," literal)* "}" | "[" cond ("&&" cond)* "]"
//! cond     := "{" literals "}" | expr CMP operand | expr "in" restr
//! query    := "Q(" NODE (";" expr ["as" NAME])+ ")" | expr
//! analytic := "analytic(" query ";" query ";" OP [";" NAME] ")" ["/" answer]
//! answer   := "{" literals "}" | "[" acond ("&&" acond)* "]"
//! acond    := "{" literals "}" | "ans" CMP (literal | OP "(ans)")
//! ```
//!
//! `g o f` applies `f` first. `∘`, `∧` and `×` are accepted for `o`, `&`
//! and `*`. String literals are typed by the node they restrict.

use std::collections::BTreeSet;

use crate::analytic::{AggregateOp, AnalyticQuery, AnswerAtom, AnswerRestriction, Threshold};
use crate::context::Context;
use crate::error::{Error, Result};
use crate::expr::{Atom, CmpOp, Expr, Operand, RestrictionSpec};
use crate::io::resolve_edge_ref;
use crate::node::{AttributeId, NodeRef, TERMINAL_NAME};
use crate::traversal::TraversalQuery;
use crate::value::{BaseType, Value, UNIT_LITERAL};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Qualified(String),
    Int(i64),
    Float(f64),
    Str(String),
    Unit,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Amp,
    AndAnd,
    Star,
    Slash,
    Cmp(CmpOp),
    Compose,
}

const IDENT_STOP: &str = " \t\r\n*×@>()<{}[],;&/=!\"'∘⊤∧≠≤≥";
const QUALIFIED_STOP: &str = " \t\r\n(){}[],;&/=!\"'∘∧";

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Qualified(s) => format!("`{s}`"),
        Tok::Int(i) => i.to_string(),
        Tok::Float(x) => x.to_string(),
        Tok::Str(s) => format!("{s:?}"),
        Tok::Unit => UNIT_LITERAL.into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::LBrace => "`{`".into(),
        Tok::RBrace => "`}`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Amp => "`&`".into(),
        Tok::AndAnd => "`&&`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Cmp(op) => format!("`{}`", op.symbol()),
        Tok::Compose => "`o`".into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let at = |i: usize| chars.get(i).map(|c| c.1);
    while i < chars.len() {
        let (pos, c) = chars[i];
        let next = at(i + 1);
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '*' | '×' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '∘' => Some(Tok::Compose),
            '∧' => Some(Tok::Amp),
            '⊤' => Some(Tok::Unit),
            '≠' => Some(Tok::Cmp(CmpOp::Ne)),
            '≤' => Some(Tok::Cmp(CmpOp::Le)),
            '≥' => Some(Tok::Cmp(CmpOp::Ge)),
            _ => None,
        };
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if let Some(t) = single {
            out.push((pos, t));
            i += 1;
            continue;
        }
        match c {
            '&' => {
                if next == Some('&') {
                    out.push((pos, Tok::AndAnd));
                    i += 2;
                } else {
                    out.push((pos, Tok::Amp));
                    i += 1;
                }
            }
            '=' => {
                out.push((pos, Tok::Cmp(CmpOp::Eq)));
                i += if next == Some('=') { 2 } else { 1 };
            }
            '!' if next == Some('=') => {
                out.push((pos, Tok::Cmp(CmpOp::Ne)));
                i += 2;
            }
            '<' => {
                let op = match next {
                    Some('=') => CmpOp::Le,
                    Some('>') => CmpOp::Ne,
                    _ => CmpOp::Lt,
                };
                i += if op == CmpOp::Lt { 1 } else { 2 };
                out.push((pos, Tok::Cmp(op)));
            }
            '>' => {
                if next == Some('=') {
                    out.push((pos, Tok::Cmp(CmpOp::Ge)));
                    i += 2;
                } else {
                    out.push((pos, Tok::Cmp(CmpOp::Gt)));
                    i += 1;
                }
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match at(i) {
                        None => return Err(Error::syntax(pos, "unterminated string literal")),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            let esc = at(i + 1)
                                .ok_or_else(|| Error::syntax(pos, "unterminated string literal"))?;
                            i += 2;
                            match esc {
                                'n' => s.push('\n'),
                                't' => s.push('\t'),
                                'r' => s.push('\r'),
                                '0' => s.push('\0'),
                                '\\' | '"' | '\'' => s.push(esc),
                                'u' if at(i) == Some('{') => {
                                    let start = i + 1;
                                    let mut j = start;
                                    while at(j).is_some_and(|c| c != '}') {
                                        j += 1;
                                    }
                                    let hex: String = chars[start..j].iter().map(|c| c.1).collect();
                                    let ch = u32::from_str_radix(&hex, 16)
                                        .ok()
                                        .and_then(char::from_u32)
                                        .ok_or_else(|| Error::syntax(chars[i].0, "bad unicode escape"))?;
                                    s.push(ch);
                                    i = j + 1;
                                }
                                other => {
                                    return Err(Error::syntax(chars[i - 1].0, format!("unknown escape `\\{other}`")))
                                }
                            }
                        }
                        Some(ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push((pos, Tok::Str(s)));
            }
            c if c.is_ascii_digit() || (c == '-' && next.is_some_and(|n| n.is_ascii_digit())) => {
                let start = i;
                i += 1;
                while at(i).is_some_and(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_'
                    || ((c == '-' || c == '+') && matches!(at(i - 1), Some('e' | 'E'))))
                {
                    i += 1;
                }
                let s: String = chars[start..i].iter().map(|c| c.1).collect();
                let tok = if let Ok(n) = s.parse::<i64>() {
                    Tok::Int(n)
                } else if let Ok(x) = s.parse::<f64>() {
                    Tok::Float(x)
                } else {
                    return Err(Error::syntax(pos, format!("bad number `{s}`")));
                };
                out.push((pos, tok));
            }
            c if !IDENT_STOP.contains(c) => {
                let start = i;
                while at(i).is_some_and(|c| !IDENT_STOP.contains(c)) {
                    i += 1;
                }
                if at(i) == Some('@') {
                    while at(i).is_some_and(|c| !QUALIFIED_STOP.contains(c)) {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().map(|c| c.1).collect();
                    out.push((pos, Tok::Qualified(s)));
                } else {
                    let s: String = chars[start..i].iter().map(|c| c.1).collect();
                    out.push((pos, if s == "o" { Tok::Compose } else { Tok::Ident(s) }));
                }
            }
            other => return Err(Error::syntax(pos, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Lit {
    Int(i64),
    Float(f64),
    Str(String),
    Unit,
    Tuple(Vec<Lit>),
}

struct Parser<'a> {
    ctx: &'a Context,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &str, ctx: &'a Context) -> Result<Self> {
        Ok(Parser {
            ctx,
            toks: lex(text)?,
            pos: 0,
            end: text.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::syntax(self.offset(), msg)
    }

    fn unexpected(&self, wanted: &str) -> Error {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {}", describe(t))),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&describe(&tok)))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn finish(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.unexpected("end of input")),
        }
    }

    fn node(&mut self) -> Result<NodeRef> {
        let start = self.offset();
        let mut names = vec![];
        loop {
            match self.next() {
                Some(Tok::Ident(s)) => names.push(s),
                Some(Tok::Unit) => names.push(TERMINAL_NAME.to_string()),
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected("a node name"));
                }
            }
            if !self.eat(&Tok::Star) {
                break;
            }
        }
        if names.len() == 1 && names[0] == TERMINAL_NAME {
            return Ok(NodeRef::terminal());
        }
        if names.iter().any(|n| n == TERMINAL_NAME) {
            return Err(Error::syntax(start, "the terminal node cannot be a factor"));
        }
        let node = NodeRef::product(names.iter().map(|s| AttributeId::new(s.as_str())));
        if !self.ctx.has_node(&node) {
            return Err(Error::UnknownNode(node.to_string()));
        }
        Ok(node)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut members = vec![self.prodx()?];
        while self.eat(&Tok::Amp) {
            members.push(self.prodx()?);
        }
        Ok(if members.len() == 1 {
            members.pop().unwrap()
        } else {
            Expr::Pair(members)
        })
    }

    fn prodx(&mut self) -> Result<Expr> {
        let mut members = vec![self.comp()?];
        while self.eat(&Tok::Star) {
            members.push(self.comp()?);
        }
        Ok(if members.len() == 1 {
            members.pop().unwrap()
        } else {
            Expr::Product(members)
        })
    }

    fn comp(&mut self) -> Result<Expr> {
        let mut e = self.postfix()?;
        while self.eat(&Tok::Compose) {
            let rhs = self.postfix()?;
            e = Expr::compose(e, rhs);
        }
        Ok(e)
    }

    fn postfix(&mut self) -> Result<Expr> {
        let mut e = self.primary()?;
        while self.eat(&Tok::Slash) {
            let spec = self.restr(&e.source())?;
            e = Expr::restrict(e, spec);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Qualified(s)) => {
                self.pos += 1;
                Ok(Expr::Edge(resolve_edge_ref(self.ctx, &s)?))
            }
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                let call = self.peek() == Some(&Tok::LParen);
                match s.as_str() {
                    "id" | "tau" if call => {
                        self.pos += 1;
                        let n = self.node()?;
                        self.expect(Tok::RParen)?;
                        Ok(if s == "id" { Expr::Identity(n) } else { Expr::Terminal(n) })
                    }
                    "pi" if self.peek() == Some(&Tok::LBracket) => {
                        self.pos += 1;
                        let to = self.node()?;
                        self.expect(Tok::RBracket)?;
                        self.expect(Tok::LParen)?;
                        let from = self.node()?;
                        self.expect(Tok::RParen)?;
                        Ok(Expr::Projection { from, to })
                    }
                    _ if call => {
                        self.pos -= 1;
                        Err(self.error(format!("`{s}` is not a function")))
                    }
                    _ => Ok(Expr::Edge(self.ctx.resolve_label(&s)?.clone())),
                }
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn literal(&mut self) -> Result<Lit> {
        match self.next() {
            Some(Tok::Int(i)) => Ok(Lit::Int(i)),
            Some(Tok::Float(x)) => Ok(Lit::Float(x)),
            Some(Tok::Str(s)) => Ok(Lit::Str(s)),
            Some(Tok::Unit) => Ok(Lit::Unit),
            Some(Tok::LParen) => {
                let mut items = vec![self.literal()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.literal()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Lit::Tuple(items))
            }
            _ => {
                self.pos -= 1;
                Err(self.unexpected("a literal"))
            }
        }
    }

    fn starts_literal(&self) -> bool {
        match self.peek() {
            Some(Tok::Int(_) | Tok::Float(_) | Tok::Str(_) | Tok::Unit) => true,
            Some(Tok::LParen) => matches!(
                self.peek_at(1),
                Some(Tok::Int(_) | Tok::Float(_) | Tok::Str(_) | Tok::Unit | Tok::LParen)
            ),
            _ => false,
        }
    }

    fn value_set(&mut self, node: &NodeRef) -> Result<BTreeSet<Value>> {
        self.expect(Tok::LBrace)?;
        let mut out = BTreeSet::new();
        if self.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            let at = self.offset();
            let lit = self.literal()?;
            out.insert(coerce(self.ctx, node, &lit).map_err(|e| relocate(e, at))?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(out)
    }

    fn restr(&mut self, node: &NodeRef) -> Result<RestrictionSpec> {
        match self.peek() {
            Some(Tok::LBrace) => Ok(RestrictionSpec::values(self.value_set(node)?)),
            Some(Tok::LBracket) => {
                self.pos += 1;
                let mut atoms = vec![self.cond(node)?];
                while self.eat(&Tok::AndAnd) {
                    atoms.push(self.cond(node)?);
                }
                self.expect(Tok::RBracket)?;
                Ok(RestrictionSpec { atoms })
            }
            _ => Err(self.unexpected("`{` or `[`")),
        }
    }

    fn cond(&mut self, node: &NodeRef) -> Result<Atom> {
        if self.peek() == Some(&Tok::LBrace) {
            return Ok(Atom::Values(self.value_set(node)?));
        }
        let at = self.offset();
        let left = self.expr()?;
        if &left.source() != node {
            return Err(Error::type_mismatch(
                format!("a condition on {node}"),
                format!("{left} with source {}", left.source()),
            ));
        }
        if self.at_keyword("in") {
            self.pos += 1;
            let spec = self.restr(&left.target())?;
            return Ok(Atom::Preimage(left, Box::new(spec)));
        }
        let op = match self.next() {
            Some(Tok::Cmp(op)) => op,
            _ => {
                self.pos -= 1;
                return Err(self.unexpected("a comparison or `in`"));
            }
        };
        let right = if self.starts_literal() {
            let lat = self.offset();
            let lit = self.literal()?;
            Operand::Value(coerce(self.ctx, &left.target(), &lit).map_err(|e| relocate(e, lat))?)
        } else {
            Operand::Expr(self.expr()?)
        };
        let _ = at;
        Ok(Atom::Compare { left, op, right })
    }

    fn query(&mut self) -> Result<TraversalQuery> {
        if self.at_keyword("Q") && self.peek_at(1) == Some(&Tok::LParen) {
            self.pos += 2;
            let key = self.node()?;
            let mut exprs = vec![];
            let mut aliases = vec![];
            while self.eat(&Tok::Semi) {
                let at = self.offset();
                let e = self.expr()?;
                e.type_check(self.ctx).map_err(|err| relocate(err, at))?;
                if e.source() != key {
                    return Err(Error::KeyMismatch {
                        first: key,
                        second: e.source(),
                    });
                }
                exprs.push(e);
                if self.at_keyword("as") {
                    self.pos += 1;
                    match self.next() {
                        Some(Tok::Ident(name)) => aliases.push(Some(name)),
                        _ => {
                            self.pos -= 1;
                            return Err(self.unexpected("an alias name"));
                        }
                    }
                } else {
                    aliases.push(None);
                }
            }
            self.expect(Tok::RParen)?;
            if exprs.is_empty() {
                return Err(self.error("a query needs at least one expression"));
            }
            let mut q = TraversalQuery::new(key, exprs)?;
            q.aliases = aliases;
            return Ok(q);
        }
        let e = self.expr()?;
        e.type_check(self.ctx)?;
        TraversalQuery::from_expr(e)
    }

    fn analytic(&mut self) -> Result<AnalyticQuery> {
        if !(self.at_keyword("analytic") && self.peek_at(1) == Some(&Tok::LParen)) {
            return Err(self.unexpected("`analytic(`"));
        }
        self.pos += 2;
        let grouping = self.query()?;
        self.expect(Tok::Semi)?;
        let measuring = self.query()?;
        self.expect(Tok::Semi)?;
        let op = match self.next() {
            Some(Tok::Ident(name)) => AggregateOp::from_name(&name)?,
            _ => {
                self.pos -= 1;
                return Err(self.unexpected("an aggregate operation"));
            }
        };
        let mut name = None;
        if self.eat(&Tok::Semi) {
            match self.next() {
                Some(Tok::Ident(n)) => name = Some(n),
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected("a result name"));
                }
            }
        }
        self.expect(Tok::RParen)?;
        let mut q = AnalyticQuery::new(self.ctx, grouping, measuring, op)?;
        q.name = name;
        if self.eat(&Tok::Slash) {
            q.restriction = Some(self.answer_restriction(&q)?);
        }
        Ok(q)
    }

    fn answer_restriction(&mut self, q: &AnalyticQuery) -> Result<AnswerRestriction> {
        let domain = q.grouping.target();
        if self.peek() == Some(&Tok::LBrace) {
            return Ok(AnswerRestriction {
                atoms: vec![AnswerAtom::Domain(self.value_set(&domain)?)],
            });
        }
        self.expect(Tok::LBracket)?;
        let mut atoms = vec![];
        loop {
            if self.peek() == Some(&Tok::LBrace) {
                atoms.push(AnswerAtom::Domain(self.value_set(&domain)?));
            } else {
                if !self.at_keyword("ans") {
                    return Err(self.unexpected("`ans` or `{`"));
                }
                self.pos += 1;
                let op = match self.next() {
                    Some(Tok::Cmp(op)) => op,
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected("a comparison"));
                    }
                };
                let threshold = match self.peek().cloned() {
                    Some(Tok::Ident(agg)) if self.peek_at(1) == Some(&Tok::LParen) => {
                        self.pos += 2;
                        let agg = AggregateOp::from_name(&agg)?;
                        if !self.at_keyword("ans") {
                            return Err(self.unexpected("`ans`"));
                        }
                        self.pos += 1;
                        self.expect(Tok::RParen)?;
                        Threshold::Aggregate(agg)
                    }
                    _ => {
                        let lit = self.literal()?;
                        let base = q.result_base(self.ctx);
                        if let Some(b) = base {
                            if coerce_scalar(b, &lit).is_none() {
                                return Err(Error::PredicateType {
                                    left: format!("{b:?}"),
                                    right: coerce_answer(&lit, None).to_string(),
                                });
                            }
                        }
                        Threshold::Value(coerce_answer(&lit, base))
                    }
                };
                atoms.push(AnswerAtom::Codomain { op, threshold });
            }
            if !self.eat(&Tok::AndAnd) {
                break;
            }
        }
        self.expect(Tok::RBracket)?;
        Ok(AnswerRestriction { atoms })
    }
}

fn relocate(e: Error, position: usize) -> Error {
    match e {
        Error::Syntax { message, .. } => Error::Syntax { position, message },
        other => other,
    }
}

fn coerce_scalar(base: BaseType, lit: &Lit) -> Option<Value> {
    match (base, lit) {
        (BaseType::Integer, Lit::Int(i)) => Some(Value::Int(*i)),
        (BaseType::Float, Lit::Int(i)) => Some(Value::Float(*i as f64)),
        (BaseType::Float, Lit::Float(x)) => Some(Value::Float(*x)),
        (BaseType::Text, Lit::Str(s)) => Some(Value::Text(s.clone())),
        (BaseType::Date, Lit::Str(s)) => Value::date(s).ok(),
        (BaseType::Unit, Lit::Unit) => Some(Value::Unit),
        _ => None,
    }
}

fn lit_text(lit: &Lit) -> String {
    match lit {
        Lit::Int(i) => i.to_string(),
        Lit::Float(x) => x.to_string(),
        Lit::Str(s) => format!("{s:?}"),
        Lit::Unit => UNIT_LITERAL.into(),
        Lit::Tuple(items) => format!(
            "({})",
            items.iter().map(lit_text).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn coerce(ctx: &Context, node: &NodeRef, lit: &Lit) -> Result<Value> {
    let bad = || Error::Domain {
        value: lit_text(lit),
        domain: node.to_string(),
    };
    match (node.arity(), lit) {
        (0, Lit::Unit) => Ok(Value::Unit),
        (0, _) => Err(bad()),
        (1, _) => {
            let base = ctx
                .base_type(&node.factors()[0])
                .ok_or_else(|| Error::UnknownNode(node.to_string()))?;
            coerce_scalar(base, lit).ok_or_else(bad)
        }
        (n, Lit::Tuple(items)) if items.len() == n => {
            let mut out = Vec::with_capacity(n);
            for (a, item) in node.factors().iter().zip(items) {
                let base = ctx.base_type(a).ok_or_else(|| Error::UnknownNode(a.to_string()))?;
                out.push(coerce_scalar(base, item).ok_or_else(bad)?);
            }
            Ok(Value::Tuple(out))
        }
        _ => Err(bad()),
    }
}

fn coerce_answer(lit: &Lit, base: Option<BaseType>) -> Value {
    if let Some(v) = base.and_then(|b| coerce_scalar(b, lit)) {
        return v;
    }
    match lit {
        Lit::Int(i) => Value::Int(*i),
        Lit::Float(x) => Value::Float(*x),
        Lit::Str(s) => Value::Text(s.clone()),
        Lit::Unit => Value::Unit,
        Lit::Tuple(items) => Value::Tuple(items.iter().map(|l| coerce_answer(l, None)).collect()),
    }
}

/// Parse and type-check an expression.
pub fn parse_expression(text: &str, ctx: &Context) -> Result<Expr> {
    let mut p = Parser::new(text, ctx)?;
    let e = p.expr()?;
    p.finish()?;
    e.type_check(ctx)?;
    Ok(e)
}

/// Parse `Q(K; E1; ...)` or a bare (pairing) expression.
pub fn parse_traversal(text: &str, ctx: &Context) -> Result<TraversalQuery> {
    let mut p = Parser::new(text, ctx)?;
    let q = p.query()?;
    p.finish()?;
    Ok(q)
}

/// Parse `analytic(G; M; OP)` with an optional answer restriction.
pub fn parse_analytic(text: &str, ctx: &Context) -> Result<AnalyticQuery> {
    let mut p = Parser::new(text, ctx)?;
    let q = p.analytic()?;
    p.finish()?;
    Ok(q)
}

/// Parse a node name such as `Inv`, `Sup*Cat` or `T`.
pub fn parse_node(text: &str, ctx: &Context) -> Result<NodeRef> {
    let mut p = Parser::new(text, ctx)?;
    let n = p.node()?;
    p.finish()?;
    Ok(n)
}

/// Parse a restriction on `node`, in the form written after `/`.
pub fn parse_restriction(text: &str, node: &NodeRef, ctx: &Context) -> Result<RestrictionSpec> {
    let mut p = Parser::new(text, ctx)?;
    let spec = p.restr(node)?;
    p.finish()?;
    spec.type_check(ctx, node)?;
    Ok(spec)
}

/// Parse an answer restriction for an analytic query, in the form written
/// after `/`.
pub fn parse_answer_restriction(text: &str, q: &AnalyticQuery, ctx: &Context) -> Result<AnswerRestriction> {
    let mut p = Parser::new(text, ctx)?;
    let r = p.answer_restriction(q)?;
    p.finish()?;
    Ok(r)
}
