//! Views: contexts whose edges are defined by queries over a base context.
//! A view is either unfolded into base expressions or materialized.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analytic::{evaluate_analytic, AnalyticQuery};
use crate::context::{Context, Edge};
use crate::error::{Error, Result};
use crate::eval::eval;
use crate::expr::{Atom, Expr, Operand, RestrictionSpec};
use crate::instance::{DatabaseInstance, FiniteFunction};
use crate::io::{context_from_str, context_to_string, resolve_edge_ref, snapshot_id};
use crate::parser::{parse_analytic, parse_expression};

#[derive(Debug, Clone, PartialEq)]
pub enum Definition {
    Traversal(Expr),
    Analytic(AnalyticQuery),
}

impl Definition {
    pub fn parse(text: &str, base: &Context) -> Result<Definition> {
        if text.trim_start().starts_with("analytic") {
            parse_analytic(text, base).map(Definition::Analytic)
        } else {
            parse_expression(text, base).map(Definition::Traversal)
        }
    }

    pub fn evaluate(&self, db: &DatabaseInstance) -> Result<FiniteFunction> {
        match self {
            Definition::Traversal(e) => eval(e, db),
            Definition::Analytic(q) => Ok(evaluate_analytic(q, db)?.function),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Materialized {
    pub snapshot: String,
    /// View edge functions plus the base extents of the view's nodes.
    pub instance: DatabaseInstance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct View {
    shape: Arc<Context>,
    /// Definition texts as written, keyed by view edge.
    texts: BTreeMap<Edge, String>,
    definitions: BTreeMap<Edge, Definition>,
    materialized: Option<Materialized>,
}

#[derive(Serialize, Deserialize)]
struct ViewFile {
    shape: serde_json::Value,
    definitions: BTreeMap<String, String>,
}

impl View {
    /// Build a view; `definitions` maps view edge references (`label` or
    /// `label@S>T`) to query texts over `base`.
    pub fn new(shape: Context, definitions: &BTreeMap<String, String>, base: &Context) -> Result<View> {
        let report = shape.validate();
        if let Some(v) = report.violations.first() {
            return Err(Error::View(format!("invalid view shape: {v}")));
        }
        for d in shape.attributes() {
            let attr = &d.attribute;
            match base.base_type(attr) {
                Some(b) if b == d.base => {}
                Some(b) => {
                    return Err(Error::View(format!(
                        "attribute {attr} is {} in the view but {b} in the base",
                        d.base
                    )))
                }
                None => return Err(Error::View(format!("attribute {attr} is not in the base context"))),
            }
        }
        let mut texts = BTreeMap::new();
        let mut defs = BTreeMap::new();
        for (reference, text) in definitions {
            let edge = resolve_edge_ref(&shape, reference)?;
            let def = match Definition::parse(text, base) {
                Err(Error::UnknownEdge(label)) if shape.edges_labeled(&label).next().is_some() => {
                    return Err(Error::View(format!(
                        "definition of {} refers to view edge {label}",
                        edge.label
                    )))
                }
                other => other?,
            };
            let (source, target) = match &def {
                Definition::Traversal(e) => (e.source(), e.target()),
                Definition::Analytic(q) => (q.grouping.target(), q.measuring.target()),
            };
            if source != edge.source || target != edge.target {
                return Err(Error::type_mismatch(
                    format!("a definition of type {} -> {}", edge.source, edge.target),
                    format!("{text}: {source} -> {target}"),
                ));
            }
            texts.insert(edge.clone(), text.clone());
            defs.insert(edge, def);
        }
        if let Some(e) = shape.plain_edges().iter().find(|e| !defs.contains_key(*e)) {
            return Err(Error::View(format!("view edge {} has no definition", e.qualified())));
        }
        Ok(View {
            shape: Arc::new(shape),
            texts,
            definitions: defs,
            materialized: None,
        })
    }

    pub fn from_json(text: &str, base: &Context) -> Result<View> {
        let file: ViewFile = serde_json::from_str(text)?;
        let shape = context_from_str(&file.shape.to_string())?;
        View::new(shape, &file.definitions, base)
    }

    pub fn load(path: impl AsRef<Path>, base: &Context) -> Result<View> {
        View::from_json(&std::fs::read_to_string(path)?, base)
    }

    pub fn to_json(&self) -> String {
        let shape: serde_json::Value =
            serde_json::from_str(&context_to_string(&self.shape)).expect("context serializes to JSON");
        let definitions = self
            .texts
            .iter()
            .map(|(e, t)| {
                let key = if self.shape.is_ambiguous(&e.label) { e.qualified() } else { e.label.clone() };
                (key, t.clone())
            })
            .collect();
        let mut out = serde_json::to_string_pretty(&ViewFile { shape, definitions }).expect("serializable");
        out.push('\n');
        out
    }

    pub fn shape(&self) -> &Context {
        &self.shape
    }

    pub fn definition(&self, edge: &Edge) -> Option<&Definition> {
        self.definitions.get(edge)
    }

    pub fn definitions(&self) -> &BTreeMap<Edge, Definition> {
        &self.definitions
    }

    /// Substitute every view edge with its definition. The result is
    /// checked against `base`.
    pub fn unfold(&self, expr: &Expr, base: &Context) -> Result<Expr> {
        expr.type_check(&self.shape)?;
        let out = self.substitute(expr)?;
        out.type_check(base)?;
        Ok(out)
    }

    fn substitute(&self, expr: &Expr) -> Result<Expr> {
        Ok(match expr {
            Expr::Edge(e) => match self.definitions.get(e) {
                Some(Definition::Traversal(d)) => d.clone(),
                Some(Definition::Analytic(_)) => {
                    return Err(Error::View(format!(
                        "{} is defined by an analytic query and has no expression form; materialize the view",
                        e.label
                    )))
                }
                None => expr.clone(),
            },
            Expr::Identity(_) | Expr::Terminal(_) | Expr::Projection { .. } => expr.clone(),
            Expr::Compose(o, i) => Expr::compose(self.substitute(o)?, self.substitute(i)?),
            Expr::Pair(ms) => Expr::Pair(ms.iter().map(|m| self.substitute(m)).collect::<Result<_>>()?),
            Expr::Product(ms) => Expr::Product(ms.iter().map(|m| self.substitute(m)).collect::<Result<_>>()?),
            Expr::Restrict(e, spec) => Expr::Restrict(Box::new(self.substitute(e)?), self.substitute_spec(spec)?),
        })
    }

    fn substitute_spec(&self, spec: &RestrictionSpec) -> Result<RestrictionSpec> {
        let atoms = spec
            .atoms
            .iter()
            .map(|a| {
                Ok(match a {
                    Atom::Values(_) => a.clone(),
                    Atom::Compare { left, op, right } => Atom::Compare {
                        left: self.substitute(left)?,
                        op: *op,
                        right: match right {
                            Operand::Expr(e) => Operand::Expr(self.substitute(e)?),
                            Operand::Value(_) => right.clone(),
                        },
                    },
                    Atom::Preimage(e, s) => Atom::Preimage(self.substitute(e)?, Box::new(self.substitute_spec(s)?)),
                })
            })
            .collect::<Result<_>>()?;
        Ok(RestrictionSpec { atoms })
    }

    /// Evaluate every definition on `db` and store the results.
    pub fn materialize(&self, db: &DatabaseInstance) -> Result<View> {
        let mut instance = DatabaseInstance::new(self.shape.clone());
        for d in self.shape.attributes() {
            let values = db.attribute_extent(&d.attribute).cloned().unwrap_or_default();
            instance.set_extent(d.attribute.as_str(), values);
        }
        for (edge, def) in &self.definitions {
            let f = def.evaluate(db)?;
            instance.set_function(edge, f.map);
        }
        let mut out = self.clone();
        out.materialized = Some(Materialized {
            snapshot: snapshot_id(db),
            instance,
        });
        Ok(out)
    }

    pub fn materialized(&self) -> Option<&Materialized> {
        self.materialized.as_ref()
    }

    /// Whether the stored answers were computed on a different database.
    pub fn is_stale(&self, db: &DatabaseInstance) -> bool {
        self.materialized.as_ref().is_none_or(|m| m.snapshot != snapshot_id(db))
    }

    /// Answer a view query from storage.
    pub fn evaluate_stored(&self, expr: &Expr) -> Result<FiniteFunction> {
        let m = self
            .materialized
            .as_ref()
            .ok_or_else(|| Error::View("view is not materialized".into()))?;
        expr.type_check(&self.shape)?;
        eval(expr, &m.instance)
    }

    /// Answer a view query by unfolding when possible, else from storage.
    pub fn evaluate(&self, expr: &Expr, db: &DatabaseInstance) -> Result<FiniteFunction> {
        match self.unfold(expr, db.context()) {
            Ok(e) => eval(&e, db),
            Err(Error::View(_)) if !self.is_stale(db) => self.evaluate_stored(expr),
            Err(e) => Err(e),
        }
    }

    /// Labels of view edges that an expression over the view refers to.
    pub fn referenced_edges(&self, expr: &Expr) -> BTreeSet<String> {
        expr.edges()
            .into_iter()
            .filter(|e| self.definitions.contains_key(*e))
            .map(|e| e.label.clone())
            .collect()
    }
}
