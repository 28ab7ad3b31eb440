//! Attributes and (simple, product, terminal) nodes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::Value;

/// Name reserved for the terminal node in textual forms.
pub const TERMINAL_NAME: &str = "T";

/// An element of the universe of attributes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeId(String);

impl AttributeId {
    pub fn new(name: impl Into<String>) -> Self {
        AttributeId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AttributeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AttributeId {
    fn from(s: &str) -> Self {
        AttributeId::new(s)
    }
}

/// A node: the product of its factors, kept sorted so that `A×B` and `B×A`
/// are the same node and nested products are flat.
///
/// Zero factors is the terminal node `T` (the empty product, whose single
/// value is [`Value::Unit`]); one factor is a simple node. Repeated factors
/// only arise from pairing parallel expressions or self-joins.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    factors: Vec<AttributeId>,
}

impl NodeRef {
    pub fn terminal() -> Self {
        NodeRef { factors: vec![] }
    }

    pub fn simple(name: impl Into<String>) -> Self {
        NodeRef {
            factors: vec![AttributeId::new(name)],
        }
    }

    pub fn product<I, A>(factors: I) -> Self
    where
        I: IntoIterator<Item = A>,
        A: Into<AttributeId>,
    {
        let mut factors: Vec<AttributeId> = factors.into_iter().map(Into::into).collect();
        factors.sort();
        NodeRef { factors }
    }

    /// Flattened product of several nodes.
    pub fn product_of<'a>(nodes: impl IntoIterator<Item = &'a NodeRef>) -> Self {
        NodeRef::product(nodes.into_iter().flat_map(|n| n.factors.iter().cloned()))
    }

    pub fn factors(&self) -> &[AttributeId] {
        &self.factors
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    pub fn is_terminal(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_simple(&self) -> bool {
        self.factors.len() == 1
    }

    pub fn is_product(&self) -> bool {
        self.factors.len() > 1
    }

    pub fn as_simple(&self) -> Option<&AttributeId> {
        match self.factors.as_slice() {
            [a] => Some(a),
            _ => None,
        }
    }

    pub fn has_repeated_factors(&self) -> bool {
        self.factors.windows(2).any(|w| w[0] == w[1])
    }

    pub fn contains(&self, attr: &AttributeId) -> bool {
        self.factors.contains(attr)
    }

    /// Positions in `self` selected by the factors of `sub`; the k-th
    /// occurrence of a repeated factor in `sub` takes the k-th occurrence in
    /// `self`. `None` unless `sub` is a sub-product of `self`.
    pub fn positions_of(&self, sub: &NodeRef) -> Option<Vec<usize>> {
        let mut used = vec![false; self.factors.len()];
        let mut out = Vec::with_capacity(sub.factors.len());
        for f in &sub.factors {
            let pos = (0..self.factors.len()).find(|&i| !used[i] && &self.factors[i] == f)?;
            used[pos] = true;
            out.push(pos);
        }
        Some(out)
    }

    pub fn is_sub_product_of(&self, other: &NodeRef) -> bool {
        other.positions_of(self).is_some()
    }

    /// Split a value of this node into one component per factor.
    pub fn components(&self, value: &Value) -> Vec<Value> {
        match (self.factors.len(), value) {
            (0, _) => vec![],
            (1, v) => vec![v.clone()],
            (_, Value::Tuple(vs)) => vs.clone(),
            (_, v) => vec![v.clone()],
        }
    }

    /// Inverse of [`NodeRef::components`].
    pub fn assemble(&self, mut components: Vec<Value>) -> Value {
        match self.factors.len() {
            0 => Value::Unit,
            1 => components.pop().unwrap_or(Value::Unit),
            _ => Value::Tuple(components),
        }
    }

    /// Flattened product of `parts` together with, for each part, the
    /// positions its factors occupy in the product. Ties between equal
    /// factors keep part order.
    pub fn merge(parts: &[NodeRef]) -> (NodeRef, Vec<Vec<usize>>) {
        let mut tagged: Vec<(&AttributeId, usize, usize)> = parts
            .iter()
            .enumerate()
            .flat_map(|(p, n)| n.factors.iter().enumerate().map(move |(i, a)| (a, p, i)))
            .collect();
        tagged.sort();
        let mut layout: Vec<Vec<usize>> = parts.iter().map(|n| vec![0; n.arity()]).collect();
        for (pos, (_, p, i)) in tagged.iter().enumerate() {
            layout[*p][*i] = pos;
        }
        let merged = NodeRef {
            factors: tagged.into_iter().map(|(a, _, _)| a.clone()).collect(),
        };
        (merged, layout)
    }

    /// Parse `A`, `A*B`, `A×B` or `T`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == TERMINAL_NAME || text == "⊤" {
            return Ok(NodeRef::terminal());
        }
        let parts: Vec<&str> = text.split(['*', '×']).map(str::trim).collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::UnknownNode(text.to_string()));
        }
        Ok(NodeRef::product(parts.into_iter().map(AttributeId::new)))
    }

    /// Node as a list of attribute names, the JSON file form.
    pub fn to_names(&self) -> Vec<String> {
        self.factors.iter().map(|a| a.0.clone()).collect()
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        if names.len() == 1 && names[0].as_ref() == TERMINAL_NAME {
            return NodeRef::terminal();
        }
        NodeRef::product(names.iter().map(|s| AttributeId::new(s.as_ref())))
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str(TERMINAL_NAME);
        }
        for (i, a) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            f.write_str(a.as_str())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::hash_map::DefaultHasher;
    use std::hash::{Hash, Hasher};

    fn hash(n: &NodeRef) -> u64 {
        let mut h = DefaultHasher::new();
        n.hash(&mut h);
        h.finish()
    }

    #[test]
    fn products_are_canonical() {
        let ab = NodeRef::product(["A", "B"]);
        let ba = NodeRef::product(["B", "A"]);
        assert_eq!(ab, ba);
        assert_eq!(hash(&ab), hash(&ba));
        let nested = NodeRef::product_of([&NodeRef::simple("C"), &ab]);
        assert_eq!(nested, NodeRef::product(["A", "B", "C"]));
    }

    #[test]
    fn merge_tracks_positions() {
        let (merged, layout) = NodeRef::merge(&[NodeRef::simple("Region"), NodeRef::simple("Prod")]);
        assert_eq!(merged, NodeRef::product(["Prod", "Region"]));
        assert_eq!(layout, vec![vec![1], vec![0]]);
        let (dup, layout) = NodeRef::merge(&[NodeRef::simple("R"), NodeRef::simple("R")]);
        assert_eq!(dup.arity(), 2);
        assert_eq!(layout, vec![vec![0], vec![1]]);
    }

    #[test]
    fn projection_positions() {
        let p = NodeRef::product(["Cat", "Sup", "Zone"]);
        assert_eq!(p.positions_of(&NodeRef::product(["Sup", "Cat"])), Some(vec![0, 1]));
        assert_eq!(p.positions_of(&NodeRef::simple("Zone")), Some(vec![2]));
        assert_eq!(p.positions_of(&NodeRef::simple("Qty")), None);
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(NodeRef::parse("Sup×Cat").unwrap().to_string(), "Cat*Sup");
        assert!(NodeRef::parse("T").unwrap().is_terminal());
        assert!(NodeRef::parse("A**B").is_err());
    }
}
