//! Traversal queries: pairings of expressions sharing a key.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::context::Context;
use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::expr::{Expr, Qualify, RestrictionSpec};
use crate::instance::{DatabaseInstance, FiniteFunction};
use crate::node::NodeRef;
use crate::relation::{Column, Relation, RelationSchema};
use crate::value::Value;

/// Maximum number of witness keys carried by an equality violation.
pub const MAX_WITNESSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraversalQuery {
    pub key: NodeRef,
    pub exprs: Vec<Expr>,
    /// Optional display name per expression, overriding derived names.
    pub aliases: Vec<Option<String>>,
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationMode {
    /// Parallel expressions get expression-prefixed column names.
    Alias,
    /// Parallel expressions must agree and collapse into one column.
    RequireEqualities,
}

impl TraversalQuery {
    pub fn new(key: NodeRef, exprs: Vec<Expr>) -> Result<Self> {
        if exprs.is_empty() {
            return Err(Error::type_mismatch("at least one expression", "none"));
        }
        if let Some(e) = exprs.iter().find(|e| e.source() != key) {
            return Err(Error::KeyMismatch {
                first: key,
                second: e.source(),
            });
        }
        let n = exprs.len();
        Ok(TraversalQuery {
            key,
            exprs,
            aliases: vec![None; n],
            name: None,
        })
    }

    /// A top-level pairing becomes one expression per member.
    pub fn from_expr(e: Expr) -> Result<Self> {
        let key = e.source();
        match e {
            Expr::Pair(ms) => TraversalQuery::new(key, ms),
            other => TraversalQuery::new(key, vec![other]),
        }
    }

    /// `Q(K; id(K))`.
    pub fn identity(node: NodeRef) -> Self {
        TraversalQuery::new(node.clone(), vec![Expr::Identity(node)]).expect("identity is keyed")
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn as_expr(&self) -> Expr {
        Expr::pair(self.exprs.clone())
    }

    pub fn target(&self) -> NodeRef {
        self.as_expr().target()
    }

    pub fn type_check(&self, ctx: &Context) -> Result<()> {
        for e in &self.exprs {
            e.type_check(ctx)?;
            if e.source() != self.key {
                return Err(Error::KeyMismatch {
                    first: self.key.clone(),
                    second: e.source(),
                });
            }
        }
        Ok(())
    }

    pub fn to_text(&self, q: Qualify) -> String {
        let simple = self.aliases.iter().all(Option::is_none)
            && !(self.exprs.len() == 1 && matches!(self.exprs[0], Expr::Pair(_)));
        if simple {
            return self.as_expr().to_text(q);
        }
        let mut out = format!("Q({}", self.key);
        for (e, a) in self.exprs.iter().zip(&self.aliases) {
            out.push_str("; ");
            out.push_str(&e.to_text(q));
            if let Some(a) = a {
                out.push_str(" as ");
                out.push_str(a);
            }
        }
        out.push(')');
        out
    }

    pub fn pretty(&self, ctx: &Context) -> String {
        self.to_text(Qualify::Ambiguous(ctx))
    }

    /// Equivalent query whose expressions all have atomic targets.
    pub fn split_product_targets(&self) -> TraversalQuery {
        let mut exprs = vec![];
        let mut aliases = vec![];
        for (e, a) in self.exprs.iter().zip(&self.aliases) {
            let parts = split_expr(e);
            if parts.len() == 1 {
                aliases.push(a.clone());
            } else {
                aliases.extend(std::iter::repeat_n(None, parts.len()));
            }
            exprs.extend(parts);
        }
        TraversalQuery {
            key: self.key.clone(),
            exprs,
            aliases,
            name: self.name.clone(),
        }
    }

    /// Pairs of parallel expressions (same target) after splitting.
    pub fn parallel_pairs(&self) -> Vec<(Expr, Expr)> {
        let split = self.split_product_targets();
        let mut out = vec![];
        for (i, a) in split.exprs.iter().enumerate() {
            for b in &split.exprs[i + 1..] {
                if a.target() == b.target() {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }

    /// No parallel expressions and only atomic targets once split.
    pub fn is_tree(&self) -> bool {
        let split = self.split_product_targets();
        split.exprs.iter().all(|e| e.target().arity() <= 1) && self.parallel_pairs().is_empty()
    }
}

impl fmt::Display for TraversalQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text(Qualify::Never))
    }
}

/// Split an expression with a product target into one expression per
/// factor, pushing pairings outward through compositions.
fn split_expr(e: &Expr) -> Vec<Expr> {
    let t = e.target();
    if t.arity() <= 1 || t.has_repeated_factors() {
        return vec![e.clone()];
    }
    match e {
        Expr::Pair(ms) => ms.iter().flat_map(split_expr).collect(),
        Expr::Compose(outer, inner) => split_expr(outer)
            .into_iter()
            .map(|g| Expr::compose(g, (**inner).clone()))
            .collect(),
        Expr::Restrict(inner, spec) => split_expr(inner)
            .into_iter()
            .map(|g| Expr::restrict(g, spec.clone()))
            .collect(),
        Expr::Product(ms) => {
            let src = e.source();
            if src.has_repeated_factors() {
                return vec![e.clone()];
            }
            ms.iter()
                .flat_map(|m| {
                    let sj = m.source();
                    let src = src.clone();
                    split_expr(m)
                        .into_iter()
                        .map(move |g| match &g {
                            _ if sj == src => g,
                            _ if sj.is_terminal() => Expr::compose(g, Expr::Terminal(src.clone())),
                            _ => Expr::compose(
                                g,
                                Expr::Projection {
                                    from: src.clone(),
                                    to: sj.clone(),
                                },
                            ),
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        }
        Expr::Identity(n) => n
            .factors()
            .iter()
            .map(|a| Expr::Projection {
                from: n.clone(),
                to: NodeRef::simple(a.as_str()),
            })
            .collect(),
        Expr::Projection { from, to } => to
            .factors()
            .iter()
            .map(|a| Expr::Projection {
                from: from.clone(),
                to: NodeRef::simple(a.as_str()),
            })
            .collect(),
        Expr::Edge(_) => t
            .factors()
            .iter()
            .map(|a| {
                Expr::compose(
                    Expr::Projection {
                        from: t.clone(),
                        to: NodeRef::simple(a.as_str()),
                    },
                    e.clone(),
                )
            })
            .collect(),
        Expr::Terminal(_) => vec![e.clone()],
    }
}

/// The answer of a traversal query: one row per key, one value per
/// expression in query order.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversalAnswer {
    pub query: TraversalQuery,
    pub rows: BTreeMap<Value, Vec<Value>>,
}

impl TraversalAnswer {
    /// The answer as a single function into the (sorted) product of the
    /// targets.
    pub fn function(&self) -> FiniteFunction {
        let targets: Vec<NodeRef> = self.query.exprs.iter().map(Expr::target).collect();
        let (merged, layout) = NodeRef::merge(&targets);
        FiniteFunction::from_pairs(
            self.query.key.clone(),
            merged.clone(),
            self.rows.iter().map(|(k, vs)| {
                let mut comps = vec![Value::Unit; merged.arity()];
                for ((v, t), pos) in vs.iter().zip(&targets).zip(&layout) {
                    for (c, &p) in t.components(v).into_iter().zip(pos) {
                        comps[p] = c;
                    }
                }
                (k.clone(), merged.assemble(comps))
            }),
        )
    }
}

pub fn answer(q: &TraversalQuery, db: &DatabaseInstance) -> Result<TraversalAnswer> {
    answer_with(q, &Evaluator::new(db))
}

pub fn answer_with(q: &TraversalQuery, ev: &Evaluator) -> Result<TraversalAnswer> {
    let fs: Vec<FiniteFunction> = q.exprs.iter().map(|e| ev.eval(e)).collect::<Result<_>>()?;
    Ok(TraversalAnswer {
        query: q.clone(),
        rows: pair_rows(&fs),
    })
}

fn pair_rows(fs: &[FiniteFunction]) -> BTreeMap<Value, Vec<Value>> {
    let smallest = fs.iter().min_by_key(|f| f.len()).expect("query has expressions");
    smallest
        .map
        .keys()
        .filter_map(|k| {
            fs.iter()
                .map(|f| f.get(k).cloned())
                .collect::<Option<Vec<_>>>()
                .map(|row| (k.clone(), row))
        })
        .collect()
}

/// Keys where two functions differ on their common carrier, at most
/// [`MAX_WITNESSES`] of them.
pub fn disagreements(a: &FiniteFunction, b: &FiniteFunction, limit: usize) -> Vec<Value> {
    a.map
        .iter()
        .filter(|(k, v)| b.get(k).is_some_and(|w| w != *v))
        .map(|(k, _)| k.clone())
        .take(limit)
        .collect()
}

pub fn induced_relation(q: &TraversalQuery, db: &DatabaseInstance, mode: RelationMode) -> Result<Relation> {
    induced_relation_with(q, &Evaluator::new(db), mode)
}

pub fn induced_relation_with(q: &TraversalQuery, ev: &Evaluator, mode: RelationMode) -> Result<Relation> {
    let ctx = ev.db().context();
    let split = q.split_product_targets();
    let fs: Vec<FiniteFunction> = split.exprs.iter().map(|e| ev.eval(e)).collect::<Result<_>>()?;

    // Column groups: indices of expressions sharing a target.
    let mut keep: Vec<usize> = (0..split.exprs.len()).collect();
    if mode == RelationMode::RequireEqualities {
        keep.clear();
        for (i, e) in split.exprs.iter().enumerate() {
            match keep.iter().find(|&&j| split.exprs[j].target() == e.target()) {
                Some(&j) => {
                    let witnesses = disagreements(&fs[j], &fs[i], MAX_WITNESSES);
                    if !witnesses.is_empty() {
                        return Err(Error::EqualityViolation {
                            left: split.exprs[j].pretty(ctx),
                            right: e.pretty(ctx),
                            witnesses,
                        });
                    }
                }
                None => keep.push(i),
            }
        }
    }

    let key_name = q.key.to_string();
    let attrs: Vec<String> = keep.iter().map(|&i| split.exprs[i].target().to_string()).collect();
    let mut names: Vec<String> = keep
        .iter()
        .zip(&attrs)
        .map(|(&i, a)| split.aliases[i].clone().unwrap_or_else(|| a.clone()))
        .collect();
    let clashes = |names: &[String], i: usize| {
        names[i] == key_name || names.iter().enumerate().any(|(j, n)| j != i && *n == names[i])
    };
    let derived: Vec<usize> = (0..names.len())
        .filter(|&c| split.aliases[keep[c]].is_none() && clashes(&names, c))
        .collect();
    for c in derived {
        names[c] = format!("{}.{}", split.exprs[keep[c]].pretty(ctx), attrs[c]);
    }
    for c in 0..names.len() {
        if clashes(&names, c) {
            let base = names[c].clone();
            let mut k = 2;
            while names.contains(&format!("{base}#{k}")) || format!("{base}#{k}") == key_name {
                k += 1;
            }
            names[c] = format!("{base}#{k}");
        }
    }

    let kept: Vec<FiniteFunction> = keep.iter().map(|&i| fs[i].clone()).collect();
    let rows = pair_rows(&kept)
        .into_iter()
        .map(|(k, vs)| std::iter::once(k).chain(vs).collect())
        .collect();
    Ok(Relation {
        schema: RelationSchema {
            name: q.name.clone().unwrap_or_else(|| format!("R_{}", q.key)),
            key: Column {
                name: key_name.clone(),
                attribute: key_name,
                expr: None,
            },
            columns: keep
                .iter()
                .zip(names)
                .zip(attrs)
                .map(|((&i, name), attribute)| Column {
                    name,
                    attribute,
                    expr: Some(split.exprs[i].pretty(ctx)),
                })
                .collect(),
        },
        rows,
    })
}

/// `outer ∘ inner`: each expression of `outer` applied after `inner`.
pub fn compose_queries(outer: &TraversalQuery, inner: &TraversalQuery) -> Result<TraversalQuery> {
    if inner.target() != outer.key {
        return Err(Error::type_mismatch(
            format!("key of the outer query = {}", outer.key),
            format!("target of the inner query = {}", inner.target()),
        ));
    }
    let f = inner.as_expr();
    TraversalQuery::new(
        inner.key.clone(),
        outer.exprs.iter().map(|g| Expr::compose(g.clone(), f.clone())).collect(),
    )
}

/// Restrict every expression of the query to a subset of the key.
pub fn restrict_query(q: &TraversalQuery, spec: &RestrictionSpec, ctx: &Context) -> Result<TraversalQuery> {
    spec.type_check(ctx, &q.key)?;
    let mut out = q.clone();
    out.exprs = q
        .exprs
        .iter()
        .map(|e| Expr::restrict(e.clone(), spec.clone()))
        .collect();
    Ok(out)
}

/// Pair queries with a common key. Attributes targeted by more than one
/// query are prefixed with the query name (`Q1`, `Q2`, ... when unnamed).
pub fn pair_queries(qs: &[TraversalQuery]) -> Result<TraversalQuery> {
    let first = qs.first().ok_or_else(|| Error::type_mismatch("at least one query", "none"))?;
    if let Some(q) = qs.iter().find(|q| q.key != first.key) {
        return Err(Error::KeyMismatch {
            first: first.key.clone(),
            second: q.key.clone(),
        });
    }
    let qs: Vec<TraversalQuery> = qs.iter().map(TraversalQuery::split_product_targets).collect();
    let mut owners: BTreeMap<NodeRef, BTreeSet<usize>> = BTreeMap::new();
    for (i, q) in qs.iter().enumerate() {
        for e in &q.exprs {
            owners.entry(e.target()).or_default().insert(i);
        }
    }
    let mut exprs = vec![];
    let mut aliases = vec![];
    for (i, q) in qs.iter().enumerate() {
        let qname = q.name.clone().unwrap_or_else(|| format!("Q{}", i + 1));
        for (e, a) in q.exprs.iter().zip(&q.aliases) {
            let alias = match a {
                Some(a) => Some(a.clone()),
                None if owners[&e.target()].len() > 1 => Some(format!("{qname}.{}", e.target())),
                None => None,
            };
            exprs.push(e.clone());
            aliases.push(alias);
        }
    }
    let mut out = TraversalQuery::new(first.key.clone(), exprs)?;
    out.aliases = aliases;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_expression, parse_traversal};
    use crate::value::BaseType;
    use std::sync::Arc;

    fn ctx() -> Context {
        Context::new()
            .with_attribute("Inv", BaseType::Integer)
            .with_attribute("Prod", BaseType::Text)
            .with_attribute("Sup", BaseType::Text)
            .with_attribute("Cat", BaseType::Text)
            .with_edge("Inv", "p", "Prod")
            .with_edge("Prod", "s", "Sup")
            .with_edge("Prod", "c", "Cat")
    }

    #[test]
    fn splitting_distributes_pairs_over_composition() {
        let ctx = ctx();
        let q = parse_traversal("Q(Inv; (s & c) o p)", &ctx).unwrap();
        let split = q.split_product_targets();
        let expected = parse_traversal("Q(Inv; s o p; c o p)", &ctx).unwrap();
        assert_eq!(split.exprs, expected.exprs);
        assert!(q.is_tree());
    }

    #[test]
    fn identity_query_returns_the_diagonal() {
        let ctx = Arc::new(ctx());
        let mut db = DatabaseInstance::new(ctx.clone());
        db.set_extent("Sup", ["s1", "s2"].map(Value::text));
        let a = answer(&TraversalQuery::identity(NodeRef::simple("Sup")), &db).unwrap();
        assert_eq!(a.rows.len(), 2);
        assert!(a.rows.iter().all(|(k, v)| v == &vec![k.clone()]));
        let r = induced_relation(&TraversalQuery::identity(NodeRef::simple("Sup")), &db, RelationMode::Alias).unwrap();
        assert_eq!(r.schema.column_names(), vec!["Sup", "id(Sup).Sup"]);
    }

    #[test]
    fn pairing_prefixes_shared_attributes() {
        let ctx = ctx();
        let q1 = parse_traversal("Q(Inv; p; s o p)", &ctx).unwrap().named("Q");
        let q2 = parse_traversal("Q(Inv; s o p; c o p)", &ctx).unwrap().named("Q'");
        let paired = pair_queries(&[q1, q2]).unwrap();
        assert_eq!(
            paired.aliases,
            vec![None, Some("Q.Sup".into()), Some("Q'.Sup".into()), None]
        );
    }

    #[test]
    fn composing_queries() {
        let ctx = ctx();
        let inner = TraversalQuery::from_expr(parse_expression("p", &ctx).unwrap()).unwrap();
        let outer = TraversalQuery::from_expr(parse_expression("s", &ctx).unwrap()).unwrap();
        let q = compose_queries(&outer, &inner).unwrap();
        assert_eq!(q.to_string(), "s o p");
        assert!(compose_queries(&inner, &outer).is_err());
    }
}
