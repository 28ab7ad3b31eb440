//! Database instances: finite extents for simple nodes and finite total
//! functions for plain edges.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::context::{Context, Edge, EdgeKind, ValidationReport, Violation};
use crate::error::{Error, Result};
use crate::node::{AttributeId, NodeRef};
use crate::value::Value;

/// A finite function between the extents of two nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteFunction {
    pub domain_node: NodeRef,
    pub target_node: NodeRef,
    pub map: BTreeMap<Value, Value>,
}

impl FiniteFunction {
    pub fn new(domain_node: NodeRef, target_node: NodeRef) -> Self {
        FiniteFunction {
            domain_node,
            target_node,
            map: BTreeMap::new(),
        }
    }

    pub fn from_pairs(
        domain_node: NodeRef,
        target_node: NodeRef,
        pairs: impl IntoIterator<Item = (Value, Value)>,
    ) -> Self {
        FiniteFunction {
            domain_node,
            target_node,
            map: pairs.into_iter().collect(),
        }
    }

    pub fn identity(node: NodeRef, values: impl IntoIterator<Item = Value>) -> Self {
        FiniteFunction::from_pairs(node.clone(), node, values.into_iter().map(|v| (v.clone(), v)))
    }

    pub fn get(&self, x: &Value) -> Option<&Value> {
        self.map.get(x)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn domain(&self) -> BTreeSet<Value> {
        self.map.keys().cloned().collect()
    }

    pub fn range(&self) -> BTreeSet<Value> {
        self.map.values().cloned().collect()
    }

    /// `{x | f(x) ∈ targets}`.
    pub fn preimage(&self, targets: &BTreeSet<Value>) -> BTreeSet<Value> {
        self.map
            .iter()
            .filter(|(_, y)| targets.contains(*y))
            .map(|(x, _)| x.clone())
            .collect()
    }

    /// Blocks `f⁻¹(y)` for every `y` in the range, ordered by `y`.
    pub fn partition(&self) -> Partition {
        let mut blocks: BTreeMap<&Value, BTreeSet<Value>> = BTreeMap::new();
        for (x, y) in &self.map {
            blocks.entry(y).or_default().insert(x.clone());
        }
        Partition {
            base_node: self.domain_node.clone(),
            blocks: blocks.into_values().collect(),
        }
    }

    /// Blocks keyed by image, in image order.
    pub fn groups(&self) -> BTreeMap<Value, Vec<Value>> {
        let mut groups: BTreeMap<Value, Vec<Value>> = BTreeMap::new();
        for (x, y) in &self.map {
            groups.entry(y.clone()).or_default().push(x.clone());
        }
        groups
    }

    pub fn restrict(&self, carrier: &BTreeSet<Value>) -> FiniteFunction {
        FiniteFunction {
            domain_node: self.domain_node.clone(),
            target_node: self.target_node.clone(),
            map: self
                .map
                .iter()
                .filter(|(x, _)| carrier.contains(*x))
                .map(|(x, y)| (x.clone(), y.clone()))
                .collect(),
        }
    }

    /// `outer ∘ self`, dropping keys whose image is outside `outer`'s domain.
    pub fn then(&self, outer: &FiniteFunction) -> FiniteFunction {
        FiniteFunction {
            domain_node: self.domain_node.clone(),
            target_node: outer.target_node.clone(),
            map: self
                .map
                .iter()
                .filter_map(|(x, y)| outer.get(y).map(|z| (x.clone(), z.clone())))
                .collect(),
        }
    }

    /// Extensional equality up to a tolerance on floats.
    pub fn approx_eq(&self, other: &FiniteFunction, tolerance: f64) -> bool {
        self.map.len() == other.map.len()
            && self.map.iter().zip(&other.map).all(|((k1, v1), (k2, v2))| {
                k1 == k2 && values_close(v1, v2, tolerance)
            })
    }
}

pub fn values_close(a: &Value, b: &Value, tolerance: f64) -> bool {
    match (a, b) {
        (Value::Float(_), _) | (_, Value::Float(_)) => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => (x - y).abs() <= tolerance,
            _ => false,
        },
        (Value::Tuple(xs), Value::Tuple(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| values_close(x, y, tolerance))
        }
        _ => a == b,
    }
}

/// The partition a function induces on its domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub base_node: NodeRef,
    pub blocks: Vec<BTreeSet<Value>>,
}

impl Partition {
    pub fn carrier(&self) -> BTreeSet<Value> {
        self.blocks.iter().flatten().cloned().collect()
    }

    pub fn block_of(&self, x: &Value) -> Option<&BTreeSet<Value>> {
        self.blocks.iter().find(|b| b.contains(x))
    }

    /// Blocks in a canonical order (by least element).
    pub fn normalized(&self) -> Vec<BTreeSet<Value>> {
        let mut blocks = self.blocks.clone();
        blocks.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
        blocks
    }
}

/// Extent and function assignment over a context.
#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseInstance {
    context: Arc<Context>,
    extents: BTreeMap<AttributeId, BTreeSet<Value>>,
    functions: BTreeMap<(NodeRef, String, NodeRef), FiniteFunction>,
}

fn edge_key(edge: &Edge) -> (NodeRef, String, NodeRef) {
    (edge.source.clone(), edge.label.clone(), edge.target.clone())
}

impl DatabaseInstance {
    pub fn new(context: Arc<Context>) -> Self {
        DatabaseInstance {
            context,
            extents: BTreeMap::new(),
            functions: BTreeMap::new(),
        }
    }

    pub fn context(&self) -> &Context {
        &self.context
    }

    pub fn context_arc(&self) -> Arc<Context> {
        self.context.clone()
    }

    pub fn set_extent(&mut self, attr: &str, values: impl IntoIterator<Item = Value>) {
        self.extents
            .insert(AttributeId::new(attr), values.into_iter().collect());
    }

    pub fn insert_value(&mut self, attr: &AttributeId, value: Value) {
        self.extents.entry(attr.clone()).or_default().insert(value);
    }

    pub fn set_function(&mut self, edge: &Edge, pairs: impl IntoIterator<Item = (Value, Value)>) {
        let f = FiniteFunction::from_pairs(edge.source.clone(), edge.target.clone(), pairs);
        self.functions.insert(edge_key(edge), f);
    }

    /// Set the function of the unique edge with this label.
    pub fn set_labeled(
        &mut self,
        label: &str,
        pairs: impl IntoIterator<Item = (Value, Value)>,
    ) -> Result<()> {
        let edge = self.context.resolve_label(label)?.clone();
        self.set_function(&edge, pairs);
        Ok(())
    }

    pub fn remove_function(&mut self, edge: &Edge) -> Option<FiniteFunction> {
        self.functions.remove(&edge_key(edge))
    }

    pub fn function(&self, edge: &Edge) -> Option<&FiniteFunction> {
        self.functions.get(&edge_key(edge))
    }

    pub fn function_mut(&mut self, edge: &Edge) -> Option<&mut FiniteFunction> {
        self.functions.get_mut(&edge_key(edge))
    }

    pub fn functions(&self) -> impl Iterator<Item = (&(NodeRef, String, NodeRef), &FiniteFunction)> {
        self.functions.iter()
    }

    pub fn extents(&self) -> &BTreeMap<AttributeId, BTreeSet<Value>> {
        &self.extents
    }

    pub fn attribute_extent(&self, attr: &AttributeId) -> Option<&BTreeSet<Value>> {
        self.extents.get(attr)
    }

    /// Number of values in the extent of a node; products multiply.
    pub fn extent_size(&self, node: &NodeRef) -> u128 {
        node.factors()
            .iter()
            .map(|a| self.extents.get(a).map_or(0, |s| s.len() as u128))
            .fold(1u128, |acc, n| acc.saturating_mul(n))
    }

    /// Membership in the extent of a node without enumerating products.
    pub fn contains(&self, node: &NodeRef, value: &Value) -> bool {
        match node.arity() {
            0 => *value == Value::Unit,
            1 => self
                .extents
                .get(&node.factors()[0])
                .is_some_and(|s| s.contains(value)),
            n => match value {
                Value::Tuple(vs) if vs.len() == n => node
                    .factors()
                    .iter()
                    .zip(vs)
                    .all(|(a, v)| self.extents.get(a).is_some_and(|s| s.contains(v))),
                _ => false,
            },
        }
    }

    /// The extent of a node, enumerating products up to `limit` elements.
    pub fn extent(&self, node: &NodeRef, limit: u128) -> Result<BTreeSet<Value>> {
        match node.arity() {
            0 => Ok(BTreeSet::from([Value::Unit])),
            1 => Ok(self.extents.get(&node.factors()[0]).cloned().unwrap_or_default()),
            _ => {
                let size = self.extent_size(node);
                if size > limit {
                    return Err(Error::ProductTooLarge {
                        node: node.clone(),
                        size,
                        limit,
                    });
                }
                let mut tuples: Vec<Vec<Value>> = vec![vec![]];
                for a in node.factors() {
                    let values = self.extents.get(a).cloned().unwrap_or_default();
                    tuples = tuples
                        .into_iter()
                        .flat_map(|t| {
                            values.iter().map(move |v| {
                                let mut t = t.clone();
                                t.push(v.clone());
                                t
                            })
                        })
                        .collect();
                }
                Ok(tuples.into_iter().map(Value::Tuple).collect())
            }
        }
    }

    /// Check totality, extent membership and typing of every plain edge.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let ctx = &*self.context;

        for (attr, values) in &self.extents {
            let Some(base) = ctx.base_type(attr) else {
                report.push(Violation::new(
                    "unknown-node",
                    format!("extent given for unregistered attribute {attr}"),
                    vec![attr.to_string()],
                ));
                continue;
            };
            let bad: Vec<String> = values
                .iter()
                .filter(|v| !base.admits(v))
                .map(|v| v.to_string())
                .collect();
            if !bad.is_empty() {
                report.push(Violation::new(
                    "domain",
                    format!("values of {attr} outside domain {base}"),
                    bad,
                ));
            }
        }

        for key in self.functions.keys() {
            if ctx.find_edge(&key.1, &key.0, &key.2).is_none() {
                report.push(Violation::new(
                    "unknown-edge",
                    format!("function given for edge {}@{}>{} not in the context", key.1, key.0, key.2),
                    vec![format!("{}@{}>{}", key.1, key.0, key.2)],
                ));
            }
        }

        for edge in ctx.plain_edges() {
            let Some(f) = self.function(edge) else {
                report.push(Violation::new(
                    "missing-function",
                    format!("no function for edge {}", edge.qualified()),
                    vec![edge.qualified()],
                ));
                continue;
            };
            let outside: Vec<String> = f
                .map
                .keys()
                .filter(|x| !self.contains(&edge.source, x))
                .map(|x| x.to_string())
                .collect();
            if !outside.is_empty() {
                report.push(Violation::new(
                    "extra-key",
                    format!("{} maps values outside the extent of {}", edge.qualified(), edge.source),
                    outside,
                ));
            }
            let inside = f.map.keys().filter(|x| self.contains(&edge.source, x)).count() as u128;
            let expected = self.extent_size(&edge.source);
            if inside < expected {
                let missing: Vec<String> = if edge.source.arity() <= 1 {
                    self.extent(&edge.source, u128::MAX)
                        .unwrap_or_default()
                        .into_iter()
                        .filter(|x| !f.map.contains_key(x))
                        .map(|x| x.to_string())
                        .collect()
                } else {
                    vec![format!("{} of {expected} keys missing", expected - inside)]
                };
                report.push(Violation::new(
                    "totality",
                    format!("{} is not total on {}", edge.qualified(), edge.source),
                    missing,
                ));
            }
            let dangling: Vec<String> = f
                .map
                .values()
                .filter(|y| !self.contains(&edge.target, y))
                .map(|y| y.to_string())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if !dangling.is_empty() {
                report.push(Violation::new(
                    "dangling-image",
                    format!("{} has images outside the extent of {}", edge.qualified(), edge.target),
                    dangling,
                ));
            }
        }
        report
    }

    /// Function of a plain or synthesized edge.
    pub fn edge_function(&self, edge: &Edge, limit: u128) -> Result<FiniteFunction> {
        match edge.kind {
            EdgeKind::Plain => self
                .function(edge)
                .cloned()
                .ok_or_else(|| Error::MissingFunction(edge.qualified())),
            EdgeKind::Identity => Ok(FiniteFunction::identity(
                edge.source.clone(),
                self.extent(&edge.source, limit)?,
            )),
            EdgeKind::Terminal => Ok(FiniteFunction::from_pairs(
                edge.source.clone(),
                NodeRef::terminal(),
                self.extent(&edge.source, limit)?
                    .into_iter()
                    .map(|x| (x, Value::Unit)),
            )),
            EdgeKind::Projection => {
                let positions = edge
                    .source
                    .positions_of(&edge.target)
                    .ok_or_else(|| Error::UnknownEdge(edge.qualified()))?;
                let pairs = self
                    .extent(&edge.source, limit)?
                    .into_iter()
                    .map(|x| {
                        let parts = edge.source.components(&x);
                        let y = edge
                            .target
                            .assemble(positions.iter().map(|&i| parts[i].clone()).collect());
                        (x, y)
                    });
                Ok(FiniteFunction::from_pairs(edge.source.clone(), edge.target.clone(), pairs))
            }
        }
    }
}
