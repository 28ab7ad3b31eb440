//! Key and expression proposals for a set of target nodes: every node that
//! reaches all targets, with the paths leading there.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::context::{Context, Edge, EdgeKind};
use crate::error::{Error, Result};
use crate::expr::{Expr, Qualify};
use crate::node::NodeRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProposalLimits {
    /// Longest path considered, in edges.
    pub max_len: usize,
    /// Paths kept per (key, target) pair.
    pub max_per_pair: usize,
}

impl Default for ProposalLimits {
    fn default() -> Self {
        ProposalLimits {
            max_len: 8,
            max_per_pair: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub key: NodeRef,
    /// For each requested target, in request order, the expressions from
    /// the key to that target.
    pub expressions: Vec<(NodeRef, Vec<Expr>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProposalJson {
    pub key: String,
    pub expressions: BTreeMap<String, Vec<String>>,
}

impl Proposal {
    pub fn to_json(&self, ctx: &Context) -> ProposalJson {
        ProposalJson {
            key: self.key.to_string(),
            expressions: self
                .expressions
                .iter()
                .map(|(t, es)| (t.to_string(), es.iter().map(|e| e.pretty(ctx)).collect()))
                .collect(),
        }
    }

    pub fn for_target(&self, target: &NodeRef) -> Option<&[Expr]> {
        self.expressions.iter().find(|(t, _)| t == target).map(|(_, es)| es.as_slice())
    }
}

/// Plain and projection edges as expressions. Projections out of nodes
/// with repeated factors have no single-expression form and are skipped.
fn step_edges(ctx: &Context) -> Vec<(Edge, Expr)> {
    ctx.navigable_edges()
        .into_iter()
        .filter_map(|e| match e.kind {
            EdgeKind::Plain => Some((e.clone(), Expr::Edge(e))),
            EdgeKind::Projection if !e.source.has_repeated_factors() => {
                let p = Expr::Projection {
                    from: e.source.clone(),
                    to: e.target.clone(),
                };
                Some((e, p))
            }
            _ => None,
        })
        .collect()
}

/// Shortest path length (at least one edge) from every node to `target`.
fn distances_to(steps: &[(Edge, Expr)], target: &NodeRef) -> BTreeMap<NodeRef, usize> {
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::new();
    for (e, _) in steps.iter().filter(|(e, _)| &e.target == target) {
        if !dist.contains_key(&e.source) {
            dist.insert(e.source.clone(), 1);
            queue.push_back(e.source.clone());
        }
    }
    while let Some(n) = queue.pop_front() {
        let d = dist[&n];
        for (e, _) in steps.iter().filter(|(e, _)| e.target == n) {
            if !dist.contains_key(&e.source) {
                dist.insert(e.source.clone(), d + 1);
                queue.push_back(e.source.clone());
            }
        }
    }
    dist
}

/// All simple paths of 1..=max_len edges from `from` to `to`, outermost
/// edge first.
pub fn simple_paths(ctx: &Context, from: &NodeRef, to: &NodeRef, max_len: usize) -> Vec<Expr> {
    let steps = step_edges(ctx);
    let mut out = vec![];
    let mut path: Vec<Expr> = vec![];
    let mut visited = BTreeSet::from([from.clone()]);
    walk(&steps, from, to, max_len, &mut visited, &mut path, &mut out);
    out
}

fn walk(
    steps: &[(Edge, Expr)],
    at: &NodeRef,
    to: &NodeRef,
    max_len: usize,
    visited: &mut BTreeSet<NodeRef>,
    path: &mut Vec<Expr>,
    out: &mut Vec<Expr>,
) {
    if path.len() >= max_len {
        return;
    }
    for (e, x) in steps.iter().filter(|(e, _)| &e.source == at) {
        if &e.target == to {
            // Left-nested, as the parser reads `h o s o p`.
            let e = path.iter().rev().fold(x.clone(), |acc, p| Expr::compose(acc, p.clone()));
            out.push(e);
        }
        if visited.insert(e.target.clone()) {
            path.push(x.clone());
            walk(steps, &e.target, to, max_len, visited, path, out);
            path.pop();
            visited.remove(&e.target);
        }
    }
}

pub fn enumerate_proposals(ctx: &Context, targets: &[NodeRef], limits: ProposalLimits) -> Result<Vec<Proposal>> {
    if targets.is_empty() {
        return Err(Error::NoCandidateKey(vec![]));
    }
    for t in targets {
        if !ctx.has_node(t) {
            return Err(Error::UnknownNode(t.to_string()));
        }
    }
    let steps = step_edges(ctx);
    let dists: Vec<BTreeMap<NodeRef, usize>> = targets.iter().map(|t| distances_to(&steps, t)).collect();
    let mut keys: Vec<(usize, NodeRef)> = ctx
        .nodes()
        .into_iter()
        .filter(|n| !n.is_terminal())
        .filter_map(|n| {
            let depth = dists.iter().map(|d| d.get(&n).copied()).collect::<Option<Vec<_>>>()?;
            let depth = depth.into_iter().max().unwrap_or(0);
            (depth <= limits.max_len).then_some((depth, n))
        })
        .collect();
    if keys.is_empty() {
        return Err(Error::NoCandidateKey(targets.iter().map(|t| t.to_string()).collect()));
    }
    keys.sort_by_cached_key(|(d, n)| (*d, n.to_string()));
    let order = |e: &Expr| (e.size(), e.to_text(Qualify::Ambiguous(ctx)));
    let mut out = vec![];
    for (_, key) in keys {
        let mut expressions = vec![];
        for t in targets {
            let mut paths = simple_paths(ctx, &key, t, limits.max_len);
            paths.sort_by_cached_key(order);
            paths.dedup();
            paths.truncate(limits.max_per_pair);
            expressions.push((t.clone(), paths));
        }
        if expressions.iter().all(|(_, es)| !es.is_empty()) {
            out.push(Proposal { key, expressions });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::BaseType;

    fn ctx() -> Context {
        Context::new()
            .with_attribute("Inv", BaseType::Integer)
            .with_attribute("Branch", BaseType::Text)
            .with_attribute("Region", BaseType::Text)
            .with_attribute("Prod", BaseType::Text)
            .with_attribute("Sup", BaseType::Text)
            .with_edge("Inv", "b", "Branch")
            .with_edge("Inv", "p", "Prod")
            .with_edge("Branch", "r", "Region")
            .with_edge("Prod", "s", "Sup")
            .with_edge("Sup", "h", "Region")
    }

    #[test]
    fn closest_keys_come_first() {
        let ctx = ctx();
        let ps = enumerate_proposals(&ctx, &[NodeRef::simple("Region")], ProposalLimits::default()).unwrap();
        let keys: Vec<String> = ps.iter().map(|p| p.key.to_string()).collect();
        assert_eq!(keys, ["Branch", "Sup", "Inv", "Prod"]);
        let inv = ps[2].for_target(&NodeRef::simple("Region")).unwrap();
        let texts: Vec<String> = inv.iter().map(|e| e.to_string()).collect();
        assert_eq!(texts, ["r o b", "h o s o p"]);
    }

    #[test]
    fn caps_apply_per_pair() {
        let ctx = ctx();
        let limits = ProposalLimits {
            max_len: 2,
            max_per_pair: 1,
        };
        let ps = enumerate_proposals(&ctx, &[NodeRef::simple("Region")], limits).unwrap();
        assert!(ps.iter().all(|p| p.expressions[0].1.len() == 1));
        assert!(ps.iter().any(|p| p.key == NodeRef::simple("Inv")));
    }

    #[test]
    fn unreachable_targets_have_no_key() {
        let ctx = ctx().with_attribute("Z", BaseType::Text).with_edge("Z", "z", "Inv");
        let err = enumerate_proposals(&ctx, &[NodeRef::simple("Z"), NodeRef::simple("Inv")], ProposalLimits::default());
        assert!(matches!(err, Err(Error::NoCandidateKey(_))));
    }
}
