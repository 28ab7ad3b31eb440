//! The context: a labeled DAG whose nodes are data sets and whose edges
//! are total functions between them.
//!
//! Only plain edges are stored. Identity, terminal and projection edges
//! exist for every node and are synthesized on lookup.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::node::{AttributeId, NodeRef, TERMINAL_NAME};
use crate::value::BaseType;

/// Labels that cannot name plain edges, because the query syntax uses them.
pub const RESERVED_LABELS: &[&str] = &["o", "in", "id", "tau", "pi", TERMINAL_NAME];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Plain,
    Identity,
    Terminal,
    Projection,
}

/// An edge is identified by its (source, label, target) triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub source: NodeRef,
    pub label: String,
    pub target: NodeRef,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn plain(source: NodeRef, label: impl Into<String>, target: NodeRef) -> Self {
        Edge {
            source,
            label: label.into(),
            target,
            kind: EdgeKind::Plain,
        }
    }

    /// `label@Source>Target`, the unambiguous textual reference.
    pub fn qualified(&self) -> String {
        format!("{}@{}>{}", self.label, self.source, self.target)
    }

    pub fn same_triple(&self, other: &Edge) -> bool {
        self.source == other.source && self.label == other.label && self.target == other.target
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}", self.label, self.source, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(rename = "name")]
    pub attribute: AttributeId,
    pub base: BaseType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    #[serde(rename = "eq")]
    Equality,
    #[serde(rename = "ref")]
    Refinement,
}

/// A constraint as declared in a context file; the expressions are kept as
/// text and typed against the context when checked.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintDecl {
    pub kind: ConstraintKind,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub message: String,
    pub elements: Vec<String>,
}

impl Violation {
    pub fn new(code: &str, message: impl Into<String>, elements: Vec<String>) -> Self {
        Violation {
            code: code.to_string(),
            message: message.into(),
            elements,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)?;
        if !self.elements.is_empty() {
            write!(f, " ({})", self.elements.join(", "))?;
        }
        Ok(())
    }
}

/// Findings of a validation pass. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn with_code<'a>(&'a self, code: &'a str) -> impl Iterator<Item = &'a Violation> + 'a {
        self.violations.iter().filter(move |v| v.code == code)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Context {
    attributes: Vec<DomainSpec>,
    declared_nodes: Vec<NodeRef>,
    edges: Vec<Edge>,
    constraints: Vec<ConstraintDecl>,
    /// Representative node -> all members of its coalesced cycle.
    classes: BTreeMap<NodeRef, BTreeSet<NodeRef>>,
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn with_attribute(mut self, name: &str, base: BaseType) -> Self {
        self.add_attribute(name, base);
        self
    }

    pub fn with_edge(mut self, source: &str, label: &str, target: &str) -> Self {
        let source = NodeRef::parse(source).expect("valid node text");
        let target = NodeRef::parse(target).expect("valid node text");
        self.add_edge(Edge::plain(source, label, target));
        self
    }

    pub fn with_node(mut self, node: NodeRef) -> Self {
        self.add_node(node);
        self
    }

    pub fn with_constraint(mut self, kind: ConstraintKind, lhs: &str, rhs: &str) -> Self {
        self.constraints.push(ConstraintDecl {
            kind,
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        });
        self
    }

    pub fn add_attribute(&mut self, name: &str, base: BaseType) {
        self.attributes.push(DomainSpec {
            attribute: AttributeId::new(name),
            base,
        });
    }

    pub fn add_node(&mut self, node: NodeRef) {
        if !self.declared_nodes.contains(&node) {
            self.declared_nodes.push(node);
        }
    }

    pub fn add_edge(&mut self, edge: Edge) {
        self.edges.push(Edge {
            kind: EdgeKind::Plain,
            ..edge
        });
    }

    pub fn add_constraint(&mut self, decl: ConstraintDecl) {
        self.constraints.push(decl);
    }

    pub fn attributes(&self) -> &[DomainSpec] {
        &self.attributes
    }

    pub fn declared_nodes(&self) -> &[NodeRef] {
        &self.declared_nodes
    }

    pub fn constraints(&self) -> &[ConstraintDecl] {
        &self.constraints
    }

    pub fn classes(&self) -> &BTreeMap<NodeRef, BTreeSet<NodeRef>> {
        &self.classes
    }

    pub(crate) fn set_classes(&mut self, classes: BTreeMap<NodeRef, BTreeSet<NodeRef>>) {
        self.classes = classes;
    }

    /// Members of the equivalence class represented by `node`, or just the
    /// node itself.
    pub fn class_of(&self, node: &NodeRef) -> BTreeSet<NodeRef> {
        self.classes
            .get(node)
            .cloned()
            .unwrap_or_else(|| BTreeSet::from([node.clone()]))
    }

    pub fn base_type(&self, attr: &AttributeId) -> Option<BaseType> {
        self.attributes
            .iter()
            .find(|d| &d.attribute == attr)
            .map(|d| d.base)
    }

    pub fn has_attribute(&self, attr: &AttributeId) -> bool {
        self.base_type(attr).is_some()
    }

    /// A node belongs to the context when all its factors are registered.
    pub fn has_node(&self, node: &NodeRef) -> bool {
        node.factors().iter().all(|a| self.has_attribute(a))
    }

    /// All nodes: simple attributes, declared products, edge endpoints and
    /// the terminal node.
    pub fn nodes(&self) -> BTreeSet<NodeRef> {
        let mut nodes: BTreeSet<NodeRef> = self
            .attributes
            .iter()
            .map(|d| NodeRef::simple(d.attribute.as_str()))
            .collect();
        nodes.extend(self.declared_nodes.iter().cloned());
        for e in &self.edges {
            nodes.insert(e.source.clone());
            nodes.insert(e.target.clone());
        }
        nodes.insert(NodeRef::terminal());
        nodes
    }

    pub fn plain_edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edges_labeled<'a>(&'a self, label: &str) -> impl Iterator<Item = &'a Edge> + 'a {
        let label = label.to_string();
        self.edges.iter().filter(move |e| e.label == label)
    }

    pub fn find_edge(&self, label: &str, source: &NodeRef, target: &NodeRef) -> Option<&Edge> {
        self.edges
            .iter()
            .find(|e| e.label == label && &e.source == source && &e.target == target)
    }

    /// Resolve a bare label; `Err(AmbiguousEdge)` when several edges share it.
    pub fn resolve_label(&self, label: &str) -> Result<&Edge> {
        let found: Vec<&Edge> = self.edges_labeled(label).collect();
        match found.as_slice() {
            [] => Err(Error::UnknownEdge(label.to_string())),
            [e] => Ok(e),
            many => Err(Error::AmbiguousEdge {
                label: label.to_string(),
                candidates: many.iter().map(|e| e.qualified()).collect(),
            }),
        }
    }

    pub fn is_ambiguous(&self, label: &str) -> bool {
        self.edges_labeled(label).nth(1).is_some()
    }

    pub fn identity_edge(&self, node: &NodeRef) -> Option<Edge> {
        self.has_node(node).then(|| Edge {
            source: node.clone(),
            label: "id".to_string(),
            target: node.clone(),
            kind: EdgeKind::Identity,
        })
    }

    pub fn terminal_edge(&self, node: &NodeRef) -> Option<Edge> {
        self.has_node(node).then(|| Edge {
            source: node.clone(),
            label: "tau".to_string(),
            target: NodeRef::terminal(),
            kind: EdgeKind::Terminal,
        })
    }

    /// Projection edges out of a product node: one per factor occurrence,
    /// plus one to every declared node that is a proper sub-product.
    pub fn projection_edges(&self, node: &NodeRef) -> Vec<Edge> {
        if !node.is_product() || !self.has_node(node) {
            return vec![];
        }
        let repeated = node.has_repeated_factors();
        let mut out: Vec<Edge> = node
            .factors()
            .iter()
            .enumerate()
            .filter(|(i, a)| repeated || node.factors()[..*i].iter().all(|b| b != *a))
            .map(|(i, a)| Edge {
                source: node.clone(),
                label: if repeated {
                    format!("pi{}", i + 1)
                } else {
                    "pi".to_string()
                },
                target: NodeRef::simple(a.as_str()),
                kind: EdgeKind::Projection,
            })
            .collect();
        for sub in self.nodes() {
            if sub.is_product() && sub != *node && sub.is_sub_product_of(node) {
                out.push(Edge {
                    source: node.clone(),
                    label: "pi".to_string(),
                    target: sub,
                    kind: EdgeKind::Projection,
                });
            }
        }
        out
    }

    /// Plain and projection edges: the edges that carry information.
    pub fn navigable_edges(&self) -> Vec<Edge> {
        let mut out = self.edges.clone();
        for n in self.nodes() {
            out.extend(self.projection_edges(&n));
        }
        out
    }

    /// Every edge including the synthesized identity and terminal edges.
    pub fn all_edges(&self) -> Vec<Edge> {
        let mut out = self.navigable_edges();
        for n in self.nodes() {
            out.extend(self.identity_edge(&n));
            if !n.is_terminal() {
                out.extend(self.terminal_edge(&n));
            }
        }
        out
    }

    /// Nodes reachable from `from` over plain and projection edges,
    /// including `from` itself.
    pub fn reachable_from(&self, from: &NodeRef) -> BTreeSet<NodeRef> {
        let edges = self.navigable_edges();
        let mut seen = BTreeSet::from([from.clone()]);
        let mut stack = vec![from.clone()];
        while let Some(n) = stack.pop() {
            for e in edges.iter().filter(|e| e.source == n) {
                if seen.insert(e.target.clone()) {
                    stack.push(e.target.clone());
                }
            }
        }
        seen
    }

    /// Roots of the context: nodes (up to cycle equivalence) with no
    /// incoming plain or projection edge. A product node whose factors are
    /// all reachable from some other node counts as reached, through the
    /// pairing of those paths.
    pub fn roots(&self) -> Vec<NodeRef> {
        let nodes: Vec<NodeRef> = self.nodes().into_iter().filter(|n| !n.is_terminal()).collect();
        let mut graph: DiGraph<NodeRef, ()> = DiGraph::new();
        let index: HashMap<NodeRef, NodeIndex> = nodes
            .iter()
            .map(|n| (n.clone(), graph.add_node(n.clone())))
            .collect();
        for e in self.navigable_edges() {
            if let (Some(&s), Some(&t)) = (index.get(&e.source), index.get(&e.target)) {
                graph.add_edge(s, t, ());
            }
        }
        let reach: HashMap<&NodeRef, BTreeSet<NodeRef>> =
            nodes.iter().map(|n| (n, self.reachable_from(n))).collect();
        for p in nodes.iter().filter(|n| n.is_product()) {
            let has_incoming = graph
                .neighbors_directed(index[p], petgraph::Direction::Incoming)
                .next()
                .is_some();
            if has_incoming {
                continue;
            }
            let pairing_source = nodes.iter().find(|x| {
                *x != p
                    && !reach[p].contains(*x)
                    && p.factors()
                        .iter()
                        .all(|a| reach[*x].contains(&NodeRef::simple(a.as_str())))
            });
            if let Some(x) = pairing_source {
                graph.add_edge(index[x], index[p], ());
            }
        }
        let sccs = tarjan_scc(&graph);
        let mut component = HashMap::new();
        for (c, members) in sccs.iter().enumerate() {
            for m in members {
                component.insert(*m, c);
            }
        }
        let mut has_incoming = vec![false; sccs.len()];
        for e in graph.edge_indices() {
            let (s, t) = graph.edge_endpoints(e).unwrap();
            if component[&s] != component[&t] {
                has_incoming[component[&t]] = true;
            }
        }
        let mut roots: Vec<NodeRef> = sccs
            .iter()
            .enumerate()
            .filter(|(c, _)| !has_incoming[*c])
            .map(|(_, members)| {
                members
                    .iter()
                    .map(|m| graph[*m].clone())
                    .min_by_key(|n| n.to_string())
                    .unwrap()
            })
            .collect();
        roots.sort();
        roots
    }

    /// The single root, if there is exactly one.
    pub fn root(&self) -> Option<NodeRef> {
        match self.roots().as_slice() {
            [r] => Some(r.clone()),
            _ => None,
        }
    }

    /// Strongly connected components of the plain-edge graph that form
    /// cycles (two or more nodes, or one node with a self-loop).
    pub fn cycle_classes(&self) -> Vec<BTreeSet<NodeRef>> {
        let mut graph: DiGraph<NodeRef, ()> = DiGraph::new();
        let mut index: HashMap<NodeRef, NodeIndex> = HashMap::new();
        for n in self.nodes() {
            index.insert(n.clone(), graph.add_node(n));
        }
        for e in &self.edges {
            graph.add_edge(index[&e.source], index[&e.target], ());
        }
        let mut classes: Vec<BTreeSet<NodeRef>> = tarjan_scc(&graph)
            .into_iter()
            .filter(|c| c.len() > 1 || self.edges.iter().any(|e| e.source == graph[c[0]] && e.target == graph[c[0]]))
            .map(|c| c.into_iter().map(|i| graph[i].clone()).collect())
            .collect();
        classes.sort();
        classes
    }

    /// Check every context invariant; violations are returned as data.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();

        let mut seen = BTreeSet::new();
        for d in &self.attributes {
            if !seen.insert(d.attribute.clone()) {
                report.push(Violation::new(
                    "duplicate-attribute",
                    format!("attribute {} registered twice", d.attribute),
                    vec![d.attribute.to_string()],
                ));
            }
            if !valid_identifier(d.attribute.as_str()) || d.attribute.as_str() == TERMINAL_NAME {
                report.push(Violation::new(
                    "invalid-name",
                    format!("`{}` cannot name an attribute", d.attribute),
                    vec![d.attribute.to_string()],
                ));
            }
        }

        let endpoints = self
            .declared_nodes
            .iter()
            .chain(self.edges.iter().flat_map(|e| [&e.source, &e.target]));
        let mut unknown = BTreeSet::new();
        for n in endpoints {
            for a in n.factors() {
                if !self.has_attribute(a) {
                    unknown.insert(a.to_string());
                }
            }
        }
        if !unknown.is_empty() {
            report.push(Violation::new(
                "unknown-attribute",
                "nodes reference unregistered attributes",
                unknown.into_iter().collect(),
            ));
        }

        for (i, e) in self.edges.iter().enumerate() {
            if self.edges[..i].iter().any(|f| f.same_triple(e)) {
                report.push(Violation::new(
                    "duplicate-edge",
                    format!("edge {} declared twice", e.qualified()),
                    vec![e.qualified()],
                ));
            }
            if !valid_identifier(&e.label) || RESERVED_LABELS.contains(&e.label.as_str()) {
                report.push(Violation::new(
                    "invalid-label",
                    format!("`{}` cannot label an edge", e.label),
                    vec![e.qualified()],
                ));
            }
            if e.source.is_terminal() {
                report.push(Violation::new(
                    "terminal-source",
                    "the terminal node has no outgoing edges",
                    vec![e.qualified()],
                ));
            }
        }

        let mut used: BTreeSet<&AttributeId> = BTreeSet::new();
        for e in &self.edges {
            used.extend(e.source.factors());
            used.extend(e.target.factors());
        }
        for n in self.declared_nodes.iter().filter(|n| n.is_product()) {
            used.extend(n.factors());
        }
        for d in &self.attributes {
            if !used.contains(&d.attribute) {
                report.push(Violation::new(
                    "isolated-node",
                    format!("attribute {} appears in no edge", d.attribute),
                    vec![d.attribute.to_string()],
                ));
            }
        }

        for class in self.cycle_classes() {
            report.push(Violation::new(
                "cycle",
                "nodes on a cycle are equivalent and must be coalesced",
                class.iter().map(|n| n.to_string()).collect(),
            ));
        }

        let roots = self.roots();
        if roots.len() != 1 {
            let code = if roots.is_empty() { "no-root" } else { "multiple-roots" };
            report.push(Violation::new(
                code,
                format!("a context needs exactly one root, found {}", roots.len()),
                roots.iter().map(|n| n.to_string()).collect(),
            ));
        }

        for decl in &self.constraints {
            if let Err(e) = crate::constraint::Constraint::from_decl(decl, self) {
                report.push(Violation::new(
                    "invalid-constraint",
                    format!("{} {} {}: {e}", decl.lhs, kind_symbol(decl.kind), decl.rhs),
                    vec![decl.lhs.clone(), decl.rhs.clone()],
                ));
            }
        }

        report
    }

    /// Replace every cycle of plain edges by a single representative node
    /// (the class member with the least label). Intra-class edges and
    /// self-loops are dropped; class membership is kept in
    /// [`Context::classes`].
    pub fn coalesce_cycles(&self) -> Context {
        let classes = self.cycle_classes();
        let mut mapping: BTreeMap<NodeRef, NodeRef> = BTreeMap::new();
        let mut attr_mapping: BTreeMap<AttributeId, AttributeId> = BTreeMap::new();
        let mut new_classes = self.classes.clone();
        for class in &classes {
            let rep = class
                .iter()
                .min_by_key(|n| n.to_string())
                .cloned()
                .expect("nonempty class");
            let mut members = BTreeSet::new();
            for m in class {
                members.extend(self.class_of(m));
                new_classes.remove(m);
                mapping.insert(m.clone(), rep.clone());
                if let (Some(a), Some(r)) = (m.as_simple(), rep.as_simple()) {
                    attr_mapping.insert(a.clone(), r.clone());
                }
            }
            if members.len() > 1 {
                new_classes.insert(rep.clone(), members);
            }
        }
        let map_node = |n: &NodeRef| -> NodeRef {
            if let Some(r) = mapping.get(n) {
                return r.clone();
            }
            NodeRef::product(
                n.factors()
                    .iter()
                    .map(|a| attr_mapping.get(a).cloned().unwrap_or_else(|| a.clone())),
            )
        };

        let mut out = Context {
            attributes: self
                .attributes
                .iter()
                .filter(|d| attr_mapping.get(&d.attribute).is_none_or(|r| r == &d.attribute))
                .cloned()
                .collect(),
            declared_nodes: vec![],
            edges: vec![],
            constraints: self.constraints.clone(),
            classes: new_classes,
        };
        for n in &self.declared_nodes {
            out.add_node(map_node(n));
        }
        for e in &self.edges {
            let (s, t) = (map_node(&e.source), map_node(&e.target));
            if s == t {
                continue;
            }
            let edge = Edge::plain(s, e.label.clone(), t);
            if !out.edges.iter().any(|f| f.same_triple(&edge)) {
                out.edges.push(edge);
            }
        }
        out
    }

    /// Put two contexts side by side under a new product root with
    /// projections to each original root.
    pub fn join(&self, other: &Context) -> Result<Context> {
        let r1 = self
            .root()
            .ok_or_else(|| Error::RootCollision("left context has no single root".into()))?;
        let r2 = other
            .root()
            .ok_or_else(|| Error::RootCollision("right context has no single root".into()))?;
        if (r1.is_product() && r2.is_sub_product_of(&r1))
            || (r2.is_product() && r1.is_sub_product_of(&r2))
        {
            return Err(Error::RootCollision(format!(
                "root {r1} and root {r2} overlap as products"
            )));
        }
        let mut out = self.clone();
        for d in &other.attributes {
            match out.base_type(&d.attribute) {
                Some(b) if b != d.base => {
                    return Err(Error::DomainConflict {
                        attribute: d.attribute.to_string(),
                    })
                }
                Some(_) => {}
                None => out.attributes.push(d.clone()),
            }
        }
        for n in &other.declared_nodes {
            out.add_node(n.clone());
        }
        for e in &other.edges {
            if !out.edges.iter().any(|f| f.same_triple(e)) {
                out.edges.push(e.clone());
            }
        }
        for c in &other.constraints {
            if !out.constraints.contains(c) {
                out.constraints.push(c.clone());
            }
        }
        for (rep, members) in &other.classes {
            out.classes.entry(rep.clone()).or_default().extend(members.iter().cloned());
        }
        out.add_node(NodeRef::product_of([&r1, &r2]));
        Ok(out)
    }
}

pub(crate) fn kind_symbol(kind: ConstraintKind) -> &'static str {
    match kind {
        ConstraintKind::Equality => "=",
        ConstraintKind::Refinement => "<=",
    }
}

/// Characters that the query syntax reserves.
const RESERVED_CHARS: &str = " \t\r\n*×@>()<{}[],;&/=!\"'∘⊤.";

pub fn valid_identifier(name: &str) -> bool {
    !name.is_empty()
        && !name.chars().any(|c| RESERVED_CHARS.contains(c))
        && !name.starts_with(|c: char| c.is_ascii_digit() || c == '-')
}

#[cfg(test)]
mod tests {
    use super::*;

    fn currency() -> Context {
        Context::new()
            .with_attribute("Prod", BaseType::Text)
            .with_attribute("$Price", BaseType::Float)
            .with_attribute("£Price", BaseType::Float)
            .with_edge("Prod", "price", "$Price")
            .with_edge("$Price", "to_gbp", "£Price")
            .with_edge("£Price", "to_usd", "$Price")
    }

    #[test]
    fn synthesized_edges_exist_for_every_node() {
        let ctx = currency();
        for n in ctx.nodes() {
            assert_eq!(ctx.identity_edge(&n).unwrap().kind, EdgeKind::Identity);
            assert_eq!(ctx.terminal_edge(&n).unwrap().target, NodeRef::terminal());
        }
    }

    #[test]
    fn currency_cycle_is_reported_and_coalesced() {
        let ctx = currency();
        let report = ctx.validate();
        let cycles: Vec<_> = report.with_code("cycle").collect();
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].elements, vec!["$Price", "£Price"]);

        let c = ctx.coalesce_cycles();
        assert!(c.validate().is_empty(), "{:?}", c.validate());
        let rep = NodeRef::simple("$Price");
        assert_eq!(
            c.class_of(&rep),
            BTreeSet::from([rep.clone(), NodeRef::simple("£Price")])
        );
        assert_eq!(c.plain_edges().len(), 1);
    }

    #[test]
    fn isolated_attribute_is_reported() {
        let ctx = Context::new()
            .with_attribute("A", BaseType::Integer)
            .with_attribute("B", BaseType::Integer)
            .with_attribute("Color", BaseType::Text)
            .with_edge("A", "f", "B");
        let report = ctx.validate();
        let isolated: Vec<_> = report.with_code("isolated-node").collect();
        assert_eq!(isolated.len(), 1);
        assert_eq!(isolated[0].elements, vec!["Color"]);
    }

    #[test]
    fn parallel_edges_need_distinct_labels() {
        let ctx = Context::new()
            .with_attribute("A", BaseType::Integer)
            .with_attribute("B", BaseType::Integer)
            .with_edge("A", "f", "B")
            .with_edge("A", "g", "B")
            .with_edge("A", "f", "B");
        assert_eq!(ctx.validate().with_code("duplicate-edge").count(), 1);
    }

    #[test]
    fn two_roots_are_reported() {
        let ctx = Context::new()
            .with_attribute("A", BaseType::Integer)
            .with_attribute("B", BaseType::Integer)
            .with_attribute("C", BaseType::Integer)
            .with_edge("A", "f", "C")
            .with_edge("B", "g", "C");
        let report = ctx.validate();
        let v: Vec<_> = report.with_code("multiple-roots").collect();
        assert_eq!(v[0].elements, vec!["A", "B"]);
    }

    #[test]
    fn reserved_labels_are_rejected() {
        let ctx = Context::new()
            .with_attribute("A", BaseType::Integer)
            .with_attribute("B", BaseType::Integer)
            .with_edge("A", "o", "B");
        assert_eq!(ctx.validate().with_code("invalid-label").count(), 1);
    }

    #[test]
    fn self_loop_is_dropped_by_coalescing() {
        let ctx = Context::new()
            .with_attribute("A", BaseType::Integer)
            .with_attribute("B", BaseType::Integer)
            .with_edge("A", "f", "B")
            .with_edge("B", "loop", "B");
        assert_eq!(ctx.validate().with_code("cycle").count(), 1);
        let c = ctx.coalesce_cycles();
        assert_eq!(c.plain_edges().len(), 1);
        assert!(c.validate().is_empty());
    }
}
