//! Seeded random database instances over a context, used for sampling
//! equivalence checks and property tests.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::context::Context;
use crate::instance::DatabaseInstance;
use crate::node::NodeRef;
use crate::value::{BaseType, Value};

#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    /// Extents get between 1 and `max_size` values.
    pub max_size: usize,
    /// Integer and float values are drawn from `0..value_range`.
    pub value_range: i64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            max_size: 8,
            value_range: 16,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_value(base: BaseType, rng: &mut impl Rng, spec: RandomSpec) -> Value {
    let n = rng.random_range(0..spec.value_range.max(1));
    match base {
        BaseType::Integer => Value::Int(n),
        BaseType::Float => Value::Float(n as f64 / 4.0),
        BaseType::Text => Value::Text(format!("v{n}")),
        BaseType::Date => Value::Date(format!("2023-{:02}-{:02}", 1 + n % 12, 1 + n % 28)),
        BaseType::Unit => Value::Unit,
    }
}

/// A valid random instance: nonempty extents and total random functions.
/// Products in edge sources are enumerated; keep them small.
pub fn random_instance(ctx: Arc<Context>, rng: &mut impl Rng, spec: RandomSpec) -> DatabaseInstance {
    let mut db = DatabaseInstance::new(ctx.clone());
    for d in ctx.attributes() {
        let size = rng.random_range(1..=spec.max_size.max(1));
        let mut values = BTreeSet::new();
        for _ in 0..size * 4 {
            if values.len() >= size {
                break;
            }
            values.insert(random_value(d.base, rng, spec));
        }
        db.set_extent(d.attribute.as_str(), values);
    }
    for edge in ctx.plain_edges() {
        let sources = db.extent(&edge.source, 1 << 16).unwrap_or_default();
        let pairs: Vec<(Value, Value)> = sources
            .into_iter()
            .map(|x| (x, random_member(&db, &edge.target, rng)))
            .collect();
        db.set_function(edge, pairs);
    }
    db
}

/// A uniformly chosen member of a node's extent.
pub fn random_member(db: &DatabaseInstance, node: &NodeRef, rng: &mut impl Rng) -> Value {
    let comps: Vec<Value> = node
        .factors()
        .iter()
        .map(|a| {
            let values: Vec<&Value> = db.attribute_extent(a).map(|s| s.iter().collect()).unwrap_or_default();
            values.choose(rng).map(|v| (*v).clone()).unwrap_or(Value::Unit)
        })
        .collect();
    node.assemble(comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_instances_are_valid_and_reproducible() {
        let ctx = Arc::new(
            Context::new()
                .with_attribute("A", BaseType::Integer)
                .with_attribute("B", BaseType::Date)
                .with_attribute("C", BaseType::Float)
                .with_edge("A", "f", "B")
                .with_edge("A*B", "g", "C"),
        );
        for seed in 0..20 {
            let a = random_instance(ctx.clone(), &mut rng(seed), RandomSpec::default());
            assert!(a.validate().is_empty(), "{:?}", a.validate());
            let b = random_instance(ctx.clone(), &mut rng(seed), RandomSpec::default());
            assert_eq!(a, b);
        }
    }
}
