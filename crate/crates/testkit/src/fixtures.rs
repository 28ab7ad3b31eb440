use std::path::PathBuf;
use std::sync::Arc;

use contextdb::io::{load_context, load_database};
use contextdb::{BaseType, Context, DatabaseInstance, NodeRef};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn load_ctx(name: &str) -> Arc<Context> {
    Arc::new(load_context(fixture(name)).unwrap_or_else(|e| panic!("context {name}: {e}")))
}

pub fn load_db(ctx: &Arc<Context>, name: &str) -> DatabaseInstance {
    load_database(ctx.clone(), fixture(name)).unwrap_or_else(|e| panic!("database {name}: {e}"))
}

/// The seven-invoice database with `d`, `b`, `p`, `q` and `r`.
pub fn inv7() -> DatabaseInstance {
    load_db(&load_ctx("inv.ctx"), "inv7.db")
}

/// The supplier/category context with a consistent instance.
pub fn supply() -> DatabaseInstance {
    load_db(&load_ctx("supply.ctx"), "supply_consistent.db")
}

/// `K -> A1 -> A2 -> A3 -> A4`, a side edge `k2: K -> B`, an integer
/// measure `m` and a float measure `f` on K.
pub fn chain_context() -> Arc<Context> {
    Arc::new(
        Context::new()
            .with_attribute("K", BaseType::Integer)
            .with_attribute("A1", BaseType::Integer)
            .with_attribute("A2", BaseType::Text)
            .with_attribute("A3", BaseType::Integer)
            .with_attribute("A4", BaseType::Text)
            .with_attribute("M", BaseType::Integer)
            .with_attribute("F", BaseType::Float)
            .with_attribute("B", BaseType::Text)
            .with_edge("K", "g1", "A1")
            .with_edge("A1", "g2", "A2")
            .with_edge("A2", "g3", "A3")
            .with_edge("A3", "g4", "A4")
            .with_edge("K", "k2", "B")
            .with_edge("K", "m", "M")
            .with_edge("K", "f", "F"),
    )
}

/// A diamond with a product node: `K -> A, K -> B`, `A -> C`, `B -> C`,
/// `u: A*B -> C`, and integer measures `m: A -> M`, `n: K -> M`.
pub fn diamond_context() -> Arc<Context> {
    Arc::new(
        Context::new()
            .with_attribute("K", BaseType::Integer)
            .with_attribute("A", BaseType::Text)
            .with_attribute("B", BaseType::Integer)
            .with_attribute("C", BaseType::Text)
            .with_attribute("M", BaseType::Integer)
            .with_node(NodeRef::product(["A", "B"]))
            .with_edge("K", "a", "A")
            .with_edge("K", "b", "B")
            .with_edge("A", "c", "C")
            .with_edge("B", "d", "C")
            .with_edge("A", "m", "M")
            .with_edge("K", "n", "M")
            .with_edge("A*B", "u", "C"),
    )
}
