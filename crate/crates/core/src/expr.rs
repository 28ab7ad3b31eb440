//! Expressions of the functional algebra: edges combined by restriction,
//! composition, pairing and product.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use crate::context::{Context, Edge};
use crate::error::{Error, Result};
use crate::node::NodeRef;
use crate::value::{BaseType, Value};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Edge(Edge),
    Identity(NodeRef),
    Terminal(NodeRef),
    /// Projection from a product node onto a sub-product.
    Projection { from: NodeRef, to: NodeRef },
    /// `outer o inner`: apply `inner` first.
    Compose(Box<Expr>, Box<Expr>),
    Pair(Vec<Expr>),
    Restrict(Box<Expr>, RestrictionSpec),
    Product(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_order(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    Expr(Expr),
    Value(Value),
}

/// One conjunct of a restriction, interpreted over the restricted node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// Membership in an explicit value set.
    Values(BTreeSet<Value>),
    /// `left op right`, both sides evaluated at the same element.
    Compare { left: Expr, op: CmpOp, right: Operand },
    /// `expr in spec`: the image under `expr` satisfies `spec`.
    Preimage(Expr, Box<RestrictionSpec>),
}

/// A conjunction of atoms; the empty conjunction admits everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RestrictionSpec {
    pub atoms: Vec<Atom>,
}

impl RestrictionSpec {
    pub fn values(values: impl IntoIterator<Item = Value>) -> Self {
        RestrictionSpec {
            atoms: vec![Atom::Values(values.into_iter().collect())],
        }
    }

    pub fn compare(left: Expr, op: CmpOp, right: Operand) -> Self {
        RestrictionSpec {
            atoms: vec![Atom::Compare { left, op, right }],
        }
    }

    pub fn preimage(expr: Expr, spec: RestrictionSpec) -> Self {
        RestrictionSpec {
            atoms: vec![Atom::Preimage(expr, Box::new(spec))],
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn and(mut self, other: RestrictionSpec) -> Self {
        for a in other.atoms {
            if !self.atoms.contains(&a) {
                self.atoms.push(a);
            }
        }
        self
    }

    /// Check the restriction against the node it restricts.
    pub fn type_check(&self, ctx: &Context, node: &NodeRef) -> Result<()> {
        for atom in &self.atoms {
            match atom {
                Atom::Values(values) => {
                    for v in values {
                        check_value(ctx, node, v)?;
                    }
                }
                Atom::Compare { left, op, right } => {
                    left.type_check(ctx)?;
                    expect_source(left, node)?;
                    match right {
                        Operand::Expr(r) => {
                            r.type_check(ctx)?;
                            expect_source(r, node)?;
                            check_comparable(ctx, &left.target(), &r.target(), *op)?;
                        }
                        Operand::Value(v) => {
                            check_value(ctx, &left.target(), v)?;
                            if op.is_order() && !ordered(ctx, &left.target()) {
                                return Err(Error::PredicateType {
                                    left: left.target().to_string(),
                                    right: v.kind().to_string(),
                                });
                            }
                        }
                    }
                }
                Atom::Preimage(e, spec) => {
                    e.type_check(ctx)?;
                    expect_source(e, node)?;
                    spec.type_check(ctx, &e.target())?;
                }
            }
        }
        Ok(())
    }

    fn write(&self, out: &mut String, q: Qualify) {
        if let [Atom::Values(vs)] = self.atoms.as_slice() {
            write_values(out, vs);
            return;
        }
        out.push('[');
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                out.push_str(" && ");
            }
            match atom {
                Atom::Values(vs) => write_values(out, vs),
                Atom::Compare { left, op, right } => {
                    left.write(out, PAIR, q);
                    let _ = write!(out, " {} ", op.symbol());
                    match right {
                        Operand::Expr(r) => r.write(out, PAIR, q),
                        Operand::Value(v) => {
                            let _ = write!(out, "{v}");
                        }
                    }
                }
                Atom::Preimage(e, spec) => {
                    e.write(out, PAIR, q);
                    out.push_str(" in ");
                    spec.write(out, q);
                }
            }
        }
        out.push(']');
    }
}

fn write_values(out: &mut String, vs: &BTreeSet<Value>) {
    out.push('{');
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{v}");
    }
    out.push('}');
}

fn expect_source(e: &Expr, node: &NodeRef) -> Result<()> {
    if &e.source() != node {
        return Err(Error::type_mismatch(
            format!("source {node}"),
            format!("{e} with source {}", e.source()),
        ));
    }
    Ok(())
}

fn ordered(ctx: &Context, node: &NodeRef) -> bool {
    node.factors()
        .iter()
        .all(|a| ctx.base_type(a).is_some_and(BaseType::is_ordered))
        && !node.is_terminal()
}

fn base_kinds(ctx: &Context, node: &NodeRef) -> Vec<Option<BaseType>> {
    node.factors().iter().map(|a| ctx.base_type(a)).collect()
}

fn check_comparable(ctx: &Context, a: &NodeRef, b: &NodeRef, op: CmpOp) -> Result<()> {
    let (ka, kb) = (base_kinds(ctx, a), base_kinds(ctx, b));
    let compatible = ka.len() == kb.len()
        && ka.iter().zip(&kb).all(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => x == y || (x.is_numeric() && y.is_numeric()),
            _ => false,
        });
    if !compatible || (op.is_order() && !ordered(ctx, a)) {
        return Err(Error::PredicateType {
            left: a.to_string(),
            right: b.to_string(),
        });
    }
    Ok(())
}

/// Check that a literal can belong to the extent of `node`.
pub fn check_value(ctx: &Context, node: &NodeRef, v: &Value) -> Result<()> {
    let bad = || Error::Domain {
        value: v.to_string(),
        domain: node.to_string(),
    };
    let comps = node.components(v);
    if node.is_product() && !matches!(v, Value::Tuple(vs) if vs.len() == node.arity()) {
        return Err(bad());
    }
    if node.is_terminal() {
        return if *v == Value::Unit { Ok(()) } else { Err(bad()) };
    }
    for (a, c) in node.factors().iter().zip(&comps) {
        let base = ctx.base_type(a).ok_or_else(|| Error::UnknownNode(a.to_string()))?;
        if !base.admits(c) {
            return Err(bad());
        }
    }
    Ok(())
}

/// How edge labels are printed.
#[derive(Debug, Clone, Copy)]
pub enum Qualify<'a> {
    Never,
    Always,
    Ambiguous(&'a Context),
}

const PAIR: u8 = 1;
const PRODUCT: u8 = 2;
const COMPOSE: u8 = 3;
const ATOM: u8 = 4;

impl Expr {
    pub fn compose(outer: Expr, inner: Expr) -> Expr {
        Expr::Compose(Box::new(outer), Box::new(inner))
    }

    /// Right-nested composition of a chain given outermost first.
    pub fn chain(parts: Vec<Expr>) -> Expr {
        let mut it = parts.into_iter().rev();
        let first = it.next().expect("nonempty chain");
        it.fold(first, |inner, outer| Expr::compose(outer, inner))
    }

    pub fn restrict(e: Expr, spec: RestrictionSpec) -> Expr {
        Expr::Restrict(Box::new(e), spec)
    }

    pub fn pair(members: Vec<Expr>) -> Expr {
        if members.len() == 1 {
            members.into_iter().next().unwrap()
        } else {
            Expr::Pair(members)
        }
    }

    /// The expression for an unambiguous edge label.
    pub fn edge(ctx: &Context, label: &str) -> Result<Expr> {
        Ok(Expr::Edge(ctx.resolve_label(label)?.clone()))
    }

    pub fn source(&self) -> NodeRef {
        match self {
            Expr::Edge(e) => e.source.clone(),
            Expr::Identity(n) | Expr::Terminal(n) => n.clone(),
            Expr::Projection { from, .. } => from.clone(),
            Expr::Compose(_, inner) => inner.source(),
            Expr::Pair(ms) => ms[0].source(),
            Expr::Restrict(e, _) => e.source(),
            Expr::Product(ms) => NodeRef::merge(&ms.iter().map(Expr::source).collect::<Vec<_>>()).0,
        }
    }

    pub fn target(&self) -> NodeRef {
        match self {
            Expr::Edge(e) => e.target.clone(),
            Expr::Identity(n) => n.clone(),
            Expr::Terminal(_) => NodeRef::terminal(),
            Expr::Projection { to, .. } => to.clone(),
            Expr::Compose(outer, _) => outer.target(),
            Expr::Pair(ms) | Expr::Product(ms) => {
                NodeRef::merge(&ms.iter().map(Expr::target).collect::<Vec<_>>()).0
            }
            Expr::Restrict(e, _) => e.target(),
        }
    }

    /// Recursive well-typing check against a context.
    pub fn type_check(&self, ctx: &Context) -> Result<()> {
        match self {
            Expr::Edge(e) => {
                if ctx.find_edge(&e.label, &e.source, &e.target).is_none() {
                    return Err(Error::UnknownEdge(e.qualified()));
                }
            }
            Expr::Identity(n) | Expr::Terminal(n) => {
                if !ctx.has_node(n) {
                    return Err(Error::UnknownNode(n.to_string()));
                }
            }
            Expr::Projection { from, to } => {
                if !ctx.has_node(from) {
                    return Err(Error::UnknownNode(from.to_string()));
                }
                if !from.is_product() || to.is_terminal() || !to.is_sub_product_of(from) || to == from {
                    return Err(Error::type_mismatch(
                        format!("a proper sub-product of {from}"),
                        to,
                    ));
                }
            }
            Expr::Compose(outer, inner) => {
                outer.type_check(ctx)?;
                inner.type_check(ctx)?;
                if inner.target() != outer.source() {
                    return Err(Error::type_mismatch(
                        format!("source of {outer} = {}", outer.source()),
                        format!("target of {inner} = {}", inner.target()),
                    ));
                }
            }
            Expr::Pair(ms) => {
                if ms.len() < 2 {
                    return Err(Error::type_mismatch("at least two paired expressions", ms.len()));
                }
                for m in ms {
                    m.type_check(ctx)?;
                }
                let first = ms[0].source();
                if let Some(m) = ms.iter().find(|m| m.source() != first) {
                    return Err(Error::KeyMismatch {
                        first,
                        second: m.source(),
                    });
                }
            }
            Expr::Product(ms) => {
                if ms.len() < 2 {
                    return Err(Error::type_mismatch("at least two product factors", ms.len()));
                }
                for m in ms {
                    m.type_check(ctx)?;
                }
            }
            Expr::Restrict(e, spec) => {
                e.type_check(ctx)?;
                spec.type_check(ctx, &e.source())?;
            }
        }
        Ok(())
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Compose(o, i) => vec![o, i],
            Expr::Pair(ms) | Expr::Product(ms) => ms.iter().collect(),
            Expr::Restrict(e, _) => vec![e],
            _ => vec![],
        }
    }

    pub fn child_mut(&mut self, i: usize) -> Option<&mut Expr> {
        match self {
            Expr::Compose(o, _) if i == 0 => Some(o),
            Expr::Compose(_, inner) if i == 1 => Some(inner),
            Expr::Pair(ms) | Expr::Product(ms) => ms.get_mut(i),
            Expr::Restrict(e, _) if i == 0 => Some(e),
            _ => None,
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&Expr> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.children().get(*i)?.at(rest),
        }
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut Expr> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.child_mut(*i)?.at_mut(rest),
        }
    }

    /// Every position in post-order (children before parents,
    /// leftmost first).
    pub fn positions(&self) -> Vec<Vec<usize>> {
        fn walk(e: &Expr, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            for (i, c) in e.children().into_iter().enumerate() {
                prefix.push(i);
                walk(c, prefix, out);
                prefix.pop();
            }
            out.push(prefix.clone());
        }
        let mut out = vec![];
        walk(self, &mut vec![], &mut out);
        out
    }

    /// All subterms, including `self`.
    pub fn subterms(&self) -> Vec<&Expr> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            let e = out[i];
            out.extend(e.children());
            i += 1;
        }
        out
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Composition chain, outermost first; a non-composition is a chain of
    /// one.
    pub fn flatten_chain(&self) -> Vec<&Expr> {
        match self {
            Expr::Compose(o, i) => {
                let mut v = o.flatten_chain();
                v.extend(i.flatten_chain());
                v
            }
            e => vec![e],
        }
    }

    pub fn has_restriction(&self) -> bool {
        self.subterms().iter().any(|e| matches!(e, Expr::Restrict(..)))
    }

    pub fn edges(&self) -> Vec<&Edge> {
        let mut out = vec![];
        for e in self.subterms() {
            if let Expr::Edge(edge) = e {
                out.push(edge);
            }
            if let Expr::Restrict(_, spec) = e {
                spec_edges(spec, &mut out);
            }
        }
        out
    }

    fn write(&self, out: &mut String, min: u8, q: Qualify) {
        let prec = match self {
            Expr::Pair(_) => PAIR,
            Expr::Product(_) => PRODUCT,
            Expr::Compose(..) => COMPOSE,
            _ => ATOM,
        };
        let paren = prec < min;
        if paren {
            out.push('(');
        }
        match self {
            Expr::Edge(e) => {
                let qualified = match q {
                    Qualify::Never => false,
                    Qualify::Always => true,
                    Qualify::Ambiguous(ctx) => ctx.is_ambiguous(&e.label),
                };
                if qualified {
                    out.push_str(&e.qualified());
                } else {
                    out.push_str(&e.label);
                }
            }
            Expr::Identity(n) => {
                let _ = write!(out, "id({n})");
            }
            Expr::Terminal(n) => {
                let _ = write!(out, "tau({n})");
            }
            Expr::Projection { from, to } => {
                let _ = write!(out, "pi[{to}]({from})");
            }
            Expr::Compose(o, i) => {
                o.write(out, COMPOSE, q);
                out.push_str(" o ");
                i.write(out, ATOM, q);
            }
            Expr::Pair(ms) => {
                for (k, m) in ms.iter().enumerate() {
                    if k > 0 {
                        out.push_str(" & ");
                    }
                    m.write(out, PRODUCT, q);
                }
            }
            Expr::Product(ms) => {
                for (k, m) in ms.iter().enumerate() {
                    if k > 0 {
                        out.push_str(" * ");
                    }
                    m.write(out, COMPOSE, q);
                }
            }
            Expr::Restrict(e, spec) => {
                e.write(out, ATOM, q);
                out.push_str(" / ");
                spec.write(out, q);
            }
        }
        if paren {
            out.push(')');
        }
    }

    pub fn to_text(&self, q: Qualify) -> String {
        let mut out = String::new();
        self.write(&mut out, PAIR, q);
        out
    }

    /// Text with every edge qualified; stable across contexts.
    pub fn canonical(&self) -> String {
        self.to_text(Qualify::Always)
    }

    /// Text with labels qualified only where the context needs it.
    pub fn pretty(&self, ctx: &Context) -> String {
        self.to_text(Qualify::Ambiguous(ctx))
    }
}

fn spec_edges<'a>(spec: &'a RestrictionSpec, out: &mut Vec<&'a Edge>) {
    for atom in &spec.atoms {
        match atom {
            Atom::Values(_) => {}
            Atom::Compare { left, right, .. } => {
                out.extend(left.edges());
                if let Operand::Expr(r) = right {
                    out.extend(r.edges());
                }
            }
            Atom::Preimage(e, s) => {
                out.extend(e.edges());
                spec_edges(s, out);
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text(Qualify::Never))
    }
}

impl fmt::Display for RestrictionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        self.write(&mut out, Qualify::Never);
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(label: &str, s: &str, t: &str) -> Expr {
        Expr::Edge(Edge::plain(NodeRef::simple(s), label, NodeRef::simple(t)))
    }

    #[test]
    fn source_and_target_of_compositions_and_pairs() {
        let rb = Expr::compose(e("r", "Branch", "Region"), e("b", "Inv", "Branch"));
        assert_eq!(rb.source(), NodeRef::simple("Inv"));
        assert_eq!(rb.target(), NodeRef::simple("Region"));
        let pair = Expr::Pair(vec![rb, e("p", "Inv", "Prod")]);
        assert_eq!(pair.target(), NodeRef::product(["Prod", "Region"]));
    }

    #[test]
    fn printing_parenthesizes_right_nesting() {
        let (h, s, p) = (e("h", "Sup", "Region"), e("s", "Prod", "Sup"), e("p", "Inv", "Prod"));
        let right = Expr::compose(h.clone(), Expr::compose(s.clone(), p.clone()));
        let left = Expr::compose(Expr::compose(h, s), p);
        assert_eq!(right.to_string(), "h o (s o p)");
        assert_eq!(left.to_string(), "h o s o p");
    }

    #[test]
    fn printing_restrictions() {
        let q = e("q", "Inv", "Qty");
        let r = Expr::restrict(q.clone(), RestrictionSpec::values([Value::Int(1), Value::Int(2)]));
        assert_eq!(r.to_string(), "q / {1, 2}");
        let c = Expr::restrict(
            e("b", "Inv", "Branch"),
            RestrictionSpec::compare(q, CmpOp::Le, Operand::Value(Value::Int(200))),
        );
        assert_eq!(c.to_string(), "b / [q <= 200]");
    }

    #[test]
    fn positions_are_post_order() {
        let x = Expr::compose(e("r", "Branch", "Region"), e("b", "Inv", "Branch"));
        assert_eq!(x.positions(), vec![vec![0], vec![1], vec![]]);
    }
}
