//! JSON file formats for contexts and databases, CSV edge and relation import.
//!
//! Context file:
//!
//! ```json
//! {
//!   "attributes": [{"name": "Inv", "base": "integer"}, ...],
//!   "nodes": [["Cat", "Sup"]],
//!   "edges": [{"source": ["Inv"], "label": "b", "target": ["Branch"]}, ...],
//!   "constraints": [{"kind": "eq", "lhs": "r o b", "rhs": "h o s o p"}]
//! }
//! ```
//!
//! Database file:
//!
//! ```json
//! {
//!   "nodes": {"Inv": [1, 2, 3], "Branch": ["Branch-1"]},
//!   "edges": {"b@Inv>Branch": [[1, "Branch-1"], ...]}
//! }
//! ```
//!
//! Values of product nodes are arrays in sorted factor order; the unit
//! value is `"⊤"`. Edge keys may be bare labels when unambiguous.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use sha2::{Digest, Sha256};

use crate::context::{ConstraintDecl, Context, DomainSpec, Edge};
use crate::error::{Error, Result};
use crate::instance::DatabaseInstance;
use crate::node::{AttributeId, NodeRef, TERMINAL_NAME};
use crate::relation::{Column, Relation, RelationSchema};
use crate::value::{BaseType, Value, UNIT_LITERAL};

#[derive(Debug, Serialize, Deserialize)]
struct ContextFile {
    attributes: Vec<DomainSpec>,
    #[serde(default)]
    nodes: Vec<Vec<String>>,
    #[serde(default)]
    edges: Vec<EdgeFile>,
    #[serde(default)]
    constraints: Vec<ConstraintDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    classes: Vec<ClassFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeFile {
    source: Vec<String>,
    label: String,
    target: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClassFile {
    representative: Vec<String>,
    members: Vec<Vec<String>>,
}

fn names(node: &NodeRef) -> Vec<String> {
    if node.is_terminal() {
        vec![TERMINAL_NAME.to_string()]
    } else {
        node.to_names()
    }
}

pub fn context_from_str(text: &str) -> Result<Context> {
    let file: ContextFile = serde_json::from_str(text)?;
    let mut ctx = Context::new();
    for d in file.attributes {
        ctx.add_attribute(d.attribute.as_str(), d.base);
    }
    for n in &file.nodes {
        ctx.add_node(NodeRef::from_names(n));
    }
    for e in file.edges {
        ctx.add_edge(Edge::plain(
            NodeRef::from_names(&e.source),
            e.label,
            NodeRef::from_names(&e.target),
        ));
    }
    for c in file.constraints {
        ctx.add_constraint(c);
    }
    let classes = file
        .classes
        .iter()
        .map(|c| {
            (
                NodeRef::from_names(&c.representative),
                c.members.iter().map(|m| NodeRef::from_names(m)).collect(),
            )
        })
        .collect();
    ctx.set_classes(classes);
    Ok(ctx)
}

pub fn context_to_string(ctx: &Context) -> String {
    let file = ContextFile {
        attributes: ctx.attributes().to_vec(),
        nodes: ctx.declared_nodes().iter().map(names).collect(),
        edges: ctx
            .plain_edges()
            .iter()
            .map(|e| EdgeFile {
                source: names(&e.source),
                label: e.label.clone(),
                target: names(&e.target),
            })
            .collect(),
        constraints: ctx.constraints().to_vec(),
        classes: ctx
            .classes()
            .iter()
            .map(|(rep, members)| ClassFile {
                representative: names(rep),
                members: members.iter().map(names).collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("context serializes");
    out.push('\n');
    out
}

pub fn load_context(path: impl AsRef<Path>) -> Result<Context> {
    context_from_str(&std::fs::read_to_string(path)?)
}

pub fn save_context(ctx: &Context, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, context_to_string(ctx))?;
    Ok(())
}

/// Resolve `label` or `label@Source>Target` against the context.
pub fn resolve_edge_ref(ctx: &Context, text: &str) -> Result<Edge> {
    match text.split_once('@') {
        None => ctx.resolve_label(text.trim()).cloned(),
        Some((label, sig)) => {
            let (s, t) = sig
                .split_once('>')
                .ok_or_else(|| Error::UnknownEdge(text.to_string()))?;
            let (s, t) = (NodeRef::parse(s)?, NodeRef::parse(t)?);
            ctx.find_edge(label.trim(), &s, &t)
                .cloned()
                .ok_or_else(|| Error::UnknownEdge(text.to_string()))
        }
    }
}

/// Best-effort typing of a JSON scalar: values that do not fit the base
/// type are kept as they are so that validation can report them.
fn lenient_scalar(json: &Json, base: Option<BaseType>) -> Result<Value> {
    if let Some(base) = base {
        if let Ok(v) = base.value_from_json(json) {
            return Ok(v);
        }
    }
    match json {
        Json::String(s) if s == UNIT_LITERAL => Ok(Value::Unit),
        Json::String(s) => Ok(Value::Text(s.clone())),
        Json::Number(n) => Ok(n
            .as_i64()
            .map(Value::Int)
            .unwrap_or_else(|| Value::Float(n.as_f64().unwrap_or(f64::NAN)))),
        other => Err(Error::Format(format!("unsupported value {other}"))),
    }
}

/// Read a JSON value belonging to the extent of `node`.
pub fn value_from_json(ctx: &Context, node: &NodeRef, json: &Json) -> Result<Value> {
    match node.arity() {
        0 => lenient_scalar(json, Some(BaseType::Unit)),
        1 => lenient_scalar(json, ctx.base_type(&node.factors()[0])),
        n => match json {
            Json::Array(items) if items.len() == n => Ok(Value::Tuple(
                node.factors()
                    .iter()
                    .zip(items)
                    .map(|(a, j)| lenient_scalar(j, ctx.base_type(a)))
                    .collect::<Result<_>>()?,
            )),
            _ => Err(Error::Format(format!(
                "expected an array of {n} values for {node}, found {json}"
            ))),
        },
    }
}

pub fn database_from_str(ctx: Arc<Context>, text: &str) -> Result<DatabaseInstance> {
    let root: Json = serde_json::from_str(text)?;
    let mut db = DatabaseInstance::new(ctx.clone());
    if let Some(nodes) = root.get("nodes").and_then(Json::as_object) {
        for (name, values) in nodes {
            let node = NodeRef::parse(name)?;
            let attr = node
                .as_simple()
                .ok_or_else(|| Error::Format(format!("extents are given for simple nodes only, not {name}")))?
                .clone();
            let values = values
                .as_array()
                .ok_or_else(|| Error::Format(format!("extent of {name} must be an array")))?;
            let mut set = BTreeSet::new();
            for v in values {
                set.insert(value_from_json(&ctx, &node, v)?);
            }
            db.set_extent(attr.as_str(), set);
        }
    }
    if let Some(edges) = root.get("edges").and_then(Json::as_object) {
        for (key, pairs) in edges {
            let edge = resolve_edge_ref(&ctx, key)?;
            let pairs = pairs
                .as_array()
                .ok_or_else(|| Error::Format(format!("function of {key} must be an array")))?;
            let mut out = Vec::with_capacity(pairs.len());
            for p in pairs {
                match p.as_array().map(Vec::as_slice) {
                    Some([x, y]) => out.push((
                        value_from_json(&ctx, &edge.source, x)?,
                        value_from_json(&ctx, &edge.target, y)?,
                    )),
                    _ => return Err(Error::Format(format!("pairs of {key} must be [x, y], found {p}"))),
                }
            }
            db.set_function(&edge, out);
        }
    }
    Ok(db)
}

pub fn database_to_json(db: &DatabaseInstance) -> Json {
    let ctx = db.context();
    let mut nodes = Map::new();
    for d in ctx.attributes() {
        if let Some(values) = db.attribute_extent(&d.attribute) {
            if nodes.contains_key(d.attribute.as_str()) {
                continue;
            }
            nodes.insert(
                d.attribute.to_string(),
                Json::Array(values.iter().map(Value::to_json).collect()),
            );
        }
    }
    let mut edges = Map::new();
    for e in ctx.plain_edges() {
        if let Some(f) = db.function(e) {
            edges.insert(
                e.qualified(),
                Json::Array(
                    f.map
                        .iter()
                        .map(|(x, y)| Json::Array(vec![x.to_json(), y.to_json()]))
                        .collect(),
                ),
            );
        }
    }
    let mut root = Map::new();
    root.insert("nodes".into(), Json::Object(nodes));
    root.insert("edges".into(), Json::Object(edges));
    Json::Object(root)
}

pub fn database_to_string(db: &DatabaseInstance) -> String {
    let mut out = serde_json::to_string_pretty(&database_to_json(db)).expect("database serializes");
    out.push('\n');
    out
}

pub fn load_database(ctx: Arc<Context>, path: impl AsRef<Path>) -> Result<DatabaseInstance> {
    database_from_str(ctx, &std::fs::read_to_string(path)?)
}

pub fn save_database(db: &DatabaseInstance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, database_to_string(db))?;
    Ok(())
}

/// Content hash of the database; identifies a snapshot in result caches.
pub fn snapshot_id(db: &DatabaseInstance) -> String {
    let text = serde_json::to_string(&database_to_json(db)).expect("database serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Read the pairs of one edge from a two-column CSV file. A first row
/// reading `x,y` is treated as a header.
pub fn read_edge_csv(ctx: &Context, edge: &Edge, reader: impl Read) -> Result<Vec<(Value, Value)>> {
    let base = |node: &NodeRef| -> Result<BaseType> {
        match node.arity() {
            0 => Ok(BaseType::Unit),
            1 => ctx
                .base_type(&node.factors()[0])
                .ok_or_else(|| Error::UnknownNode(node.to_string())),
            _ => Err(Error::Format(format!("CSV import does not support product node {node}"))),
        }
    };
    let (sb, tb) = (base(&edge.source)?, base(&edge.target)?);
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != 2 {
            return Err(Error::Format(format!("row {} has {} columns, expected 2", i + 1, record.len())));
        }
        if i == 0 && record[0].trim().eq_ignore_ascii_case("x") && record[1].trim().eq_ignore_ascii_case("y") {
            continue;
        }
        out.push((sb.value_from_str(&record[0])?, tb.value_from_str(&record[1])?));
    }
    Ok(out)
}

/// Read a keyed relation from a CSV file with a header row naming the
/// attribute of each column. The first column is the key.
pub fn read_relation_csv(ctx: &Context, name: &str, reader: impl Read) -> Result<Relation> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.len() < 2 {
        return Err(Error::Format("a relation needs a key column and at least one more".into()));
    }
    let bases: Vec<BaseType> = header
        .iter()
        .map(|h| {
            ctx.base_type(&AttributeId::new(h.as_str()))
                .ok_or_else(|| Error::UnknownNode(h.clone()))
        })
        .collect::<Result<_>>()?;
    let column = |h: &String| Column {
        name: h.clone(),
        attribute: h.clone(),
        expr: None,
    };
    let mut rows = vec![];
    for record in rdr.records() {
        let record = record?;
        rows.push(
            record
                .iter()
                .zip(&bases)
                .map(|(cell, b)| b.value_from_str(cell))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(Relation {
        schema: RelationSchema {
            name: name.to_string(),
            key: column(&header[0]),
            columns: header[1..].iter().map(column).collect(),
        },
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CTX: &str = r#"{
  "attributes": [
    {"name": "Inv", "base": "integer"},
    {"name": "Branch", "base": "text"}
  ],
  "nodes": [],
  "edges": [
    {"source": ["Inv"], "label": "b", "target": ["Branch"]}
  ],
  "constraints": []
}"#;

    #[test]
    fn context_round_trip_is_stable() {
        let ctx = context_from_str(CTX).unwrap();
        let saved = context_to_string(&ctx);
        let a: Json = serde_json::from_str(CTX).unwrap();
        let b: Json = serde_json::from_str(&saved).unwrap();
        assert_eq!(a, b);
        assert_eq!(context_to_string(&context_from_str(&saved).unwrap()), saved);
    }

    #[test]
    fn database_accepts_bare_and_qualified_labels() {
        let ctx = Arc::new(context_from_str(CTX).unwrap());
        let db = database_from_str(
            ctx.clone(),
            r#"{"nodes": {"Inv": [1, 2], "Branch": ["B1"]},
                "edges": {"b": [[1, "B1"], [2, "B1"]]}}"#,
        )
        .unwrap();
        assert!(db.validate().is_empty());
        let again = database_from_str(ctx, &database_to_string(&db)).unwrap();
        assert_eq!(again, db);
        assert_eq!(snapshot_id(&again), snapshot_id(&db));
    }

    #[test]
    fn mistyped_values_survive_loading_for_validation() {
        let ctx = Arc::new(context_from_str(CTX).unwrap());
        let db = database_from_str(
            ctx,
            r#"{"nodes": {"Inv": [1, "two"], "Branch": ["B1"]},
                "edges": {"b": [[1, "B1"], ["two", "B1"]]}}"#,
        )
        .unwrap();
        assert_eq!(db.validate().with_code("domain").count(), 1);
    }

    #[test]
    fn csv_header_is_optional() {
        let ctx = context_from_str(CTX).unwrap();
        let edge = ctx.resolve_label("b").unwrap().clone();
        let with = read_edge_csv(&ctx, &edge, "x,y\n1,B1\n".as_bytes()).unwrap();
        let without = read_edge_csv(&ctx, &edge, "1,B1\n".as_bytes()).unwrap();
        assert_eq!(with, without);
        assert!(read_edge_csv(&ctx, &edge, "1\n".as_bytes()).is_err());
    }
}
