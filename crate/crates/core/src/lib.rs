//! A graph database over contexts: schemas are labeled DAGs of total
//! functions between attribute domains, and queries are expressions of a
//! small functional algebra (restriction, composition, pairing, product).

pub mod analytic;
pub mod bridge;
pub mod constraint;
pub mod context;
pub mod error;
pub mod eval;
pub mod expr;
pub mod instance;
pub mod io;
pub mod node;
pub mod parser;
pub mod proposals;
pub mod random;
pub mod relation;
pub mod rewrite;
pub mod traversal;
pub mod value;
pub mod views;

pub use analytic::{evaluate_analytic, AggregateOp, AnalyticAnswer, AnalyticQuery};
pub use context::{Context, Edge, ValidationReport, Violation};
pub use error::{Error, Result};
pub use eval::{eval, Evaluator};
pub use expr::{Expr, RestrictionSpec};
pub use instance::{DatabaseInstance, FiniteFunction};
pub use node::{AttributeId, NodeRef};
pub use parser::{parse_analytic, parse_expression, parse_traversal};
pub use relation::Relation;
pub use traversal::{RelationMode, TraversalQuery};
pub use value::{BaseType, Value};
