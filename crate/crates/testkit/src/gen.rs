//! Random well-typed expressions and restrictions over a database.

use std::collections::BTreeSet;

use contextdb::expr::{CmpOp, Operand};
use contextdb::rewrite::{apply_rule, Rule};
use contextdb::{DatabaseInstance, Expr, NodeRef, RestrictionSpec, Value};
use rand::seq::IndexedRandom;
use rand::Rng;

/// Single-step expressions out of `from`: plain edges, projections,
/// identity and terminal.
pub fn atoms(db: &DatabaseInstance, from: &NodeRef) -> Vec<Expr> {
    let ctx = db.context();
    if !ctx.has_node(from) {
        return vec![];
    }
    let mut out: Vec<Expr> = ctx
        .plain_edges()
        .iter()
        .filter(|e| &e.source == from)
        .map(|e| Expr::Edge(e.clone()))
        .collect();
    if !from.has_repeated_factors() {
        for p in ctx.projection_edges(from) {
            out.push(Expr::Projection {
                from: from.clone(),
                to: p.target,
            });
        }
    }
    out.push(Expr::Identity(from.clone()));
    if !from.is_terminal() {
        out.push(Expr::Terminal(from.clone()));
    }
    out
}

/// A random walk of up to `len` plain edges, left-nested.
pub fn random_path(db: &DatabaseInstance, rng: &mut impl Rng, from: &NodeRef, len: usize) -> Option<Expr> {
    let ctx = db.context();
    let mut at = from.clone();
    let mut out: Option<Expr> = None;
    for _ in 0..len {
        let edges: Vec<_> = ctx.plain_edges().iter().filter(|e| e.source == at).collect();
        let Some(e) = edges.choose(rng) else { break };
        at = e.target.clone();
        let step = Expr::Edge((*e).clone());
        out = Some(match out {
            None => step,
            Some(inner) => Expr::compose(step, inner),
        });
    }
    out
}

fn subset(rng: &mut impl Rng, values: &BTreeSet<Value>) -> BTreeSet<Value> {
    let picked: BTreeSet<Value> = values.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
    if picked.is_empty() {
        values.iter().next().cloned().into_iter().collect()
    } else {
        picked
    }
}

/// A random restriction on `node`: a value set, a preimage of a value set
/// under a short path, or a comparison of a numeric measure.
pub fn random_spec(db: &DatabaseInstance, rng: &mut impl Rng, node: &NodeRef) -> RestrictionSpec {
    let extent = db.extent(node, 1 << 12).unwrap_or_default();
    match rng.random_range(0..3) {
        0 => RestrictionSpec::values(subset(rng, &extent)),
        1 => match random_path(db, rng, node, 2) {
            Some(p) => {
                let targets = db.extent(&p.target(), 1 << 12).unwrap_or_default();
                RestrictionSpec::preimage(p, RestrictionSpec::values(subset(rng, &targets)))
            }
            None => RestrictionSpec::values(subset(rng, &extent)),
        },
        _ => {
            let ctx = db.context();
            let numeric: Vec<_> = ctx
                .plain_edges()
                .iter()
                .filter(|e| {
                    &e.source == node
                        && e.target.as_simple().and_then(|a| ctx.base_type(a)).is_some_and(|b| b.is_numeric())
                })
                .collect();
            match numeric.choose(rng) {
                Some(e) => {
                    let values: Vec<Value> = db.extent(&e.target, 1 << 12).unwrap_or_default().into_iter().collect();
                    let v = values.choose(rng).cloned().unwrap_or(Value::Int(0));
                    let op = *[CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne]
                        .choose(rng)
                        .expect("nonempty");
                    RestrictionSpec::compare(Expr::Edge((*e).clone()), op, Operand::Value(v))
                }
                None => RestrictionSpec::values(subset(rng, &extent)),
            }
        }
    }
}

/// A random well-typed expression with source `from`.
pub fn random_expr(db: &DatabaseInstance, rng: &mut impl Rng, from: &NodeRef, depth: usize) -> Expr {
    let ctx = db.context();
    let atom = |rng: &mut dyn rand::RngCore| {
        let cands = atoms(db, from);
        let plain: Vec<&Expr> = cands.iter().filter(|e| matches!(e, Expr::Edge(_))).collect();
        // Favor informative steps over identities.
        match plain.choose(rng) {
            Some(e) if rng.random_bool(0.8) => (*e).clone(),
            _ => cands.choose(rng).cloned().expect("identity is always available"),
        }
    };
    if depth == 0 {
        return atom(rng);
    }
    match rng.random_range(0..5) {
        0 => atom(rng),
        1 | 4 => {
            let inner = random_expr(db, rng, from, depth - 1);
            if ctx.has_node(&inner.target()) {
                let outer = random_expr(db, rng, &inner.target(), depth - 1);
                Expr::compose(outer, inner)
            } else {
                inner
            }
        }
        2 => {
            let a = random_expr(db, rng, from, depth - 1);
            let b = random_expr(db, rng, from, depth - 1);
            Expr::pair(vec![a, b])
        }
        _ => {
            let e = random_expr(db, rng, from, depth - 1);
            Expr::restrict(e, random_spec(db, rng, from))
        }
    }
}

fn step(db: &DatabaseInstance, rng: &mut impl Rng, from: &NodeRef) -> Expr {
    if db.context().has_node(from) {
        random_expr(db, rng, from, 1)
    } else {
        Expr::Identity(from.clone())
    }
}

/// A random expression out of `from` shaped so that `rule` matches at its
/// root.
pub fn rule_shape(rule: Rule, db: &DatabaseInstance, rng: &mut impl Rng, from: &NodeRef) -> Expr {
    let f = random_expr(db, rng, from, 1);
    let mid = f.target();
    match rule {
        Rule::AssociativeLeft => {
            let g = step(db, rng, &mid);
            let h = step(db, rng, &g.target());
            Expr::compose(h, Expr::compose(g, f))
        }
        Rule::AssociativeRight => {
            let g = step(db, rng, &mid);
            let h = step(db, rng, &g.target());
            Expr::compose(Expr::compose(h, g), f)
        }
        Rule::Distributive => Expr::compose(Expr::pair(vec![step(db, rng, &mid), step(db, rng, &mid)]), f),
        Rule::Grouping => Expr::pair(vec![
            Expr::compose(step(db, rng, &mid), f.clone()),
            Expr::compose(step(db, rng, &mid), f),
        ]),
        Rule::RestrictionPropagation => {
            let g = step(db, rng, &mid);
            let spec = if db.context().has_node(&g.source()) {
                random_spec(db, rng, &g.source())
            } else {
                RestrictionSpec::default()
            };
            Expr::compose(Expr::restrict(g, spec), f)
        }
    }
}

/// Every position of `e` where `rule` matches.
pub fn rule_positions(rule: Rule, e: &Expr) -> Vec<Vec<usize>> {
    e.positions().into_iter().filter(|p| apply_rule(rule, e, p).is_ok()).collect()
}
