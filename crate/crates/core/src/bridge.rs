//! Relational bridge: ingest keyed relations as edge functions, export
//! induced relations, and translate analytic queries to SQL GROUP BY text.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{AggregateOp, AnalyticQuery, AnswerAtom, Threshold};
use crate::context::{Context, Edge, EdgeKind};
use crate::error::{Error, Result};
use crate::eval::split_restrictions;
use crate::expr::{check_value, Atom, CmpOp, Expr, Operand, RestrictionSpec};
use crate::instance::DatabaseInstance;
use crate::io::resolve_edge_ref;
use crate::node::NodeRef;
use crate::parser::parse_traversal;
use crate::relation::Relation;
use crate::traversal::{induced_relation, RelationMode};
use crate::value::Value;

/// Load the rows of a keyed relation into `db`: every column bound to an
/// edge from the key node becomes that edge's function, and column values
/// join the extents of their nodes. `bindings` pairs column names with
/// edge references.
pub fn ingest_relation(db: &mut DatabaseInstance, rel: &Relation, bindings: &[(&str, &str)]) -> Result<()> {
    let ctx = db.context_arc();
    let key_node = NodeRef::parse(&rel.schema.key.attribute)?;
    let names = rel.schema.column_names();
    let mut targets = vec![];
    for (column, edge_ref) in bindings {
        let index = names
            .iter()
            .position(|n| n == column)
            .ok_or_else(|| Error::type_mismatch(format!("a column of {}", rel.schema.name), column))?;
        let edge = resolve_edge_ref(&ctx, edge_ref)?;
        let attr = if index == 0 {
            &rel.schema.key.attribute
        } else {
            &rel.schema.columns[index - 1].attribute
        };
        let node = NodeRef::parse(attr)?;
        if edge.source != key_node || edge.target != node {
            return Err(Error::type_mismatch(
                format!("an edge {key_node} -> {node} for column {column}"),
                format!("{}: {} -> {}", edge.label, edge.source, edge.target),
            ));
        }
        targets.push((index, edge));
    }

    let mut by_key: BTreeMap<&Value, &Vec<Value>> = BTreeMap::new();
    for row in &rel.rows {
        check_value(&ctx, &key_node, &row[0])?;
        if let Some(prev) = by_key.insert(&row[0], row) {
            if prev != row {
                return Err(Error::KeyViolation {
                    key: row[0].clone(),
                    first: prev.clone(),
                    second: row.clone(),
                });
            }
        }
    }
    for k in by_key.keys() {
        insert_node_value(db, &key_node, k);
    }
    for (index, edge) in targets {
        let mut pairs = vec![];
        for (k, row) in &by_key {
            let v = &row[index];
            check_value(&ctx, &edge.target, v)?;
            insert_node_value(db, &edge.target, v);
            pairs.push(((*k).clone(), v.clone()));
        }
        db.set_function(&edge, pairs);
    }
    Ok(())
}

fn insert_node_value(db: &mut DatabaseInstance, node: &NodeRef, v: &Value) {
    for (a, c) in node.factors().iter().zip(node.components(v)) {
        db.insert_value(a, c);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Alias,
    Eq,
}

impl From<ModeName> for RelationMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Alias => RelationMode::Alias,
            ModeName::Eq => RelationMode::RequireEqualities,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDef {
    pub name: String,
    pub query: String,
    #[serde(default)]
    pub mode: ModeName,
}

/// A relational schema over a context: named traversal queries.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RelationalViewDef {
    pub relations: Vec<RelationDef>,
}

impl RelationalViewDef {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// One induced relation per definition, in definition order.
pub fn export_database(defs: &RelationalViewDef, db: &DatabaseInstance) -> Result<Vec<Relation>> {
    defs.relations
        .iter()
        .map(|d| {
            let q = parse_traversal(&d.query, db.context())?.named(d.name.clone());
            let mut rel = induced_relation(&q, db, d.mode.into())?;
            rel.schema.name = d.name.clone();
            Ok(rel)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Backing {
    pub table: String,
    pub key_col: String,
    pub val_col: String,
}

/// Tables and columns holding each edge, keyed by label or `label@S>T`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BackingMap(pub BTreeMap<String, Backing>);

impl BackingMap {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, edge: &Edge) -> Option<&Backing> {
        self.0.get(&edge.qualified()).or_else(|| self.0.get(&edge.label))
    }
}

pub fn sql_ident(name: &str) -> String {
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('"', "\"\""))
    }
}

pub fn sql_literal(v: &Value) -> Result<String> {
    Ok(match v {
        Value::Int(i) => i.to_string(),
        Value::Float(_) => v.to_string(),
        Value::Text(s) => format!("'{}'", s.replace('\'', "''")),
        Value::Date(d) => format!("DATE '{d}'"),
        Value::Unit | Value::Tuple(_) => return Err(Error::UnsupportedSql(format!("literal {v}"))),
    })
}

fn sql_cmp(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "=",
        CmpOp::Ne => "<>",
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
    }
}

fn sql_aggregate(op: AggregateOp, col: &str) -> String {
    match op {
        AggregateOp::Sum => format!("SUM({col})"),
        AggregateOp::Min => format!("MIN({col})"),
        AggregateOp::Max => format!("MAX({col})"),
        AggregateOp::Count => format!("COUNT({col})"),
        AggregateOp::CountD => format!("COUNT(DISTINCT {col})"),
        AggregateOp::Avg => format!("AVG({col})"),
    }
}

struct Instance {
    table: String,
    alias: String,
    key_col: String,
    /// Column expression equal to `alias.key_col`.
    anchor: String,
}

#[derive(Default)]
struct Builder {
    instances: Vec<Instance>,
    joins: Vec<String>,
    wheres: Vec<String>,
}

impl Builder {
    fn column(alias: &str, col: &str) -> String {
        format!("{}.{}", sql_ident(alias), sql_ident(col))
    }

    /// Column holding the image of `at` under `edge`; `at` is `None` while
    /// the key is not bound to a table yet.
    fn step(&mut self, backing: &BackingMap, edge: &Edge, at: Option<&str>) -> Result<String> {
        let b = backing.get(edge).ok_or_else(|| Error::UnbackedEdge(edge.label.clone()))?;
        if let Some(at) = at {
            if let Some(i) = self
                .instances
                .iter()
                .find(|i| i.table == b.table && i.key_col == b.key_col && i.anchor == at)
            {
                return Ok(Self::column(&i.alias, &b.val_col));
            }
        }
        let uses = self.instances.iter().filter(|i| i.table == b.table).count();
        let alias = if uses == 0 {
            b.table.clone()
        } else {
            format!("{}_{}", b.table, uses + 1)
        };
        let table = if uses == 0 {
            sql_ident(&b.table)
        } else {
            format!("{} AS {}", sql_ident(&b.table), sql_ident(&alias))
        };
        let key = Self::column(&alias, &b.key_col);
        let anchor = match at {
            None => {
                if !self.instances.is_empty() {
                    return Err(Error::UnsupportedSql("the key is bound to two tables".into()));
                }
                self.joins.push(format!("FROM {table}"));
                key
            }
            Some(at) => {
                self.joins.push(format!("JOIN {table} ON {at} = {key}"));
                at.to_string()
            }
        };
        self.instances.push(Instance {
            table: b.table.clone(),
            alias: alias.clone(),
            key_col: b.key_col.clone(),
            anchor,
        });
        Ok(Self::column(&alias, &b.val_col))
    }

    /// Follow a chain of edges innermost first. `Ok(None)` for a chain
    /// ending in the terminal node.
    fn chain(&mut self, backing: &BackingMap, e: &Expr, start: Option<String>) -> Result<(Option<String>, bool)> {
        let mut at = start;
        let mut terminal = false;
        for part in e.flatten_chain().into_iter().rev() {
            if terminal {
                return Err(Error::UnsupportedSql("composition after a terminal edge".into()));
            }
            match part {
                Expr::Edge(edge) if edge.kind == EdgeKind::Plain => {
                    at = Some(self.step(backing, edge, at.as_deref())?);
                }
                Expr::Identity(_) => {}
                Expr::Terminal(_) => terminal = true,
                other => {
                    return Err(Error::UnsupportedSql(format!(
                        "only chains of edges translate to joins, found {other}"
                    )))
                }
            }
        }
        Ok((at, terminal))
    }

    fn bound(&mut self, backing: &BackingMap, e: &Expr, start: &str) -> Result<String> {
        match self.chain(backing, e, Some(start.to_string()))? {
            (Some(c), false) => Ok(c),
            _ => Err(Error::UnsupportedSql(format!("no column for {e}"))),
        }
    }

    fn restriction(&mut self, backing: &BackingMap, spec: &RestrictionSpec, col: &str) -> Result<()> {
        for atom in &spec.atoms {
            match atom {
                Atom::Values(vs) => {
                    let lits = vs.iter().map(sql_literal).collect::<Result<Vec<_>>>()?;
                    self.wheres.push(match lits.as_slice() {
                        [one] => format!("{col} = {one}"),
                        _ => format!("{col} IN ({})", lits.join(", ")),
                    });
                }
                Atom::Compare { left, op, right } => {
                    let l = self.bound(backing, left, col)?;
                    let r = match right {
                        Operand::Value(v) => sql_literal(v)?,
                        Operand::Expr(e) => self.bound(backing, e, col)?,
                    };
                    self.wheres.push(format!("{l} {} {r}", sql_cmp(*op)));
                }
                Atom::Preimage(e, s) => {
                    let c = self.bound(backing, e, col)?;
                    self.restriction(backing, s, &c)?;
                }
            }
        }
        Ok(())
    }
}

/// SQL GROUP BY text for an analytic query. Joins follow the composition
/// order of the grouping expressions, then of the measuring expression.
pub fn emit_sql(q: &AnalyticQuery, backing: &BackingMap, ctx: &Context) -> Result<String> {
    q.grouping.type_check(ctx)?;
    q.measuring.type_check(ctx)?;
    let measuring = q.measuring.split_product_targets();
    let [m] = measuring.exprs.as_slice() else {
        return Err(Error::UnsupportedSql("measuring query with several expressions".into()));
    };
    let mut pieces: Vec<Expr> = q.grouping.split_product_targets().exprs;
    let n_groups = pieces.len();
    pieces.push(m.clone());
    // The key is bound by the first piece that starts with an edge.
    let binds = |e: &Expr| split_restrictions(e).0.edges().iter().any(|e| e.kind == EdgeKind::Plain);
    let first = pieces.iter().position(binds).unwrap_or(0);
    let visit = std::iter::once(first).chain((0..pieces.len()).filter(|&i| i != first));

    let mut b = Builder::default();
    let mut key: Option<String> = None;
    let mut specs = vec![];
    let mut cols: Vec<Option<String>> = vec![None; pieces.len()];
    for i in visit {
        let (core, spec) = split_restrictions(&pieces[i]);
        let (col, terminal) = b.chain(backing, &core, key.clone())?;
        if key.is_none() {
            key = b.instances.first().map(|i| i.anchor.clone());
        }
        cols[i] = match (col, terminal) {
            (_, true) => None,
            (Some(c), false) => Some(c),
            (None, false) => key.clone(),
        };
        specs.push(spec);
    }
    let measure_col = cols.pop().flatten();
    let group_cols: Vec<String> = cols.into_iter().take(n_groups).flatten().collect();
    let key = key.ok_or_else(|| Error::UnsupportedSql("no edge binds the key to a table".into()))?;
    for spec in specs.iter().filter(|s| !s.is_trivial()) {
        b.restriction(backing, spec, &key)?;
    }
    let measure_col = measure_col.ok_or_else(|| Error::UnsupportedSql("measuring to the terminal node".into()))?;
    let agg = sql_aggregate(q.op, &measure_col);

    let mut having = vec![];
    if let Some(r) = &q.restriction {
        for atom in &r.atoms {
            match atom {
                AnswerAtom::Domain(vs) => {
                    let [col] = group_cols.as_slice() else {
                        return Err(Error::UnsupportedSql("group restriction on several columns".into()));
                    };
                    let lits = vs.iter().map(sql_literal).collect::<Result<Vec<_>>>()?;
                    having.push(format!("{col} IN ({})", lits.join(", ")));
                }
                AnswerAtom::Codomain {
                    op,
                    threshold: Threshold::Value(v),
                } => having.push(format!("{agg} {} {}", sql_cmp(*op), sql_literal(v)?)),
                AnswerAtom::Codomain { .. } => {
                    return Err(Error::UnsupportedSql("thresholds computed from the answer".into()))
                }
            }
        }
    }

    let mut select = group_cols.clone();
    select.push(agg);
    let mut sql = format!("SELECT {} {}", select.join(", "), b.joins.join(" "));
    if !b.wheres.is_empty() {
        sql.push_str(&format!(" WHERE {}", b.wheres.join(" AND ")));
    }
    if !group_cols.is_empty() {
        sql.push_str(&format!(" GROUP BY {}", group_cols.join(", ")));
    }
    if !having.is_empty() {
        sql.push_str(&format!(" HAVING {}", having.join(" AND ")));
    }
    Ok(sql)
}

/// Column names of a backing map's tables, for building fixtures.
pub fn backing_tables(backing: &BackingMap) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for b in backing.0.values() {
        let cols = out.entry(b.table.clone()).or_default();
        cols.insert(b.key_col.clone());
        cols.insert(b.val_col.clone());
    }
    out
}
