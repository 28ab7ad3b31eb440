//! Request handling shared by the HTTP service and the command line. Every
//! answer is rendered here, so both front ends print the same bytes.

use std::sync::{Arc, RwLock};

use contextdb::analytic::{applicable_ops, combine_answers, rewrite_composition, Arith, Rhs};
use contextdb::bridge::{emit_sql, BackingMap, ModeName};
use contextdb::io::{context_to_string, snapshot_id};
use contextdb::parser::parse_answer_restriction;
use contextdb::proposals::{enumerate_proposals, ProposalLimits};
use contextdb::traversal::induced_relation;
use contextdb::{
    evaluate_analytic, parse_expression, parse_traversal, AggregateOp, AnalyticAnswer, AnalyticQuery, Context,
    DatabaseInstance, Error, NodeRef, Relation, Value,
};
use serde::Deserialize;
use serde_json::{json, Value as Json};

/// One immutable database with what is needed to answer requests on it.
#[derive(Debug)]
pub struct Snapshot {
    pub db: DatabaseInstance,
    pub id: String,
    pub backing: Option<BackingMap>,
    pub limits: ProposalLimits,
}

impl Snapshot {
    pub fn new(db: DatabaseInstance, backing: Option<BackingMap>) -> Self {
        Snapshot {
            id: snapshot_id(&db),
            db,
            backing,
            limits: ProposalLimits::default(),
        }
    }

    pub fn context(&self) -> &Context {
        self.db.context()
    }
}

/// The current snapshot. Requests hold their own `Arc`, so a swap never
/// disturbs a request in flight.
#[derive(Debug)]
pub struct AppState {
    current: RwLock<Arc<Snapshot>>,
}

impl AppState {
    pub fn new(s: Snapshot) -> Self {
        AppState {
            current: RwLock::new(Arc::new(s)),
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("snapshot lock").clone()
    }

    pub fn swap(&self, s: Snapshot) -> Arc<Snapshot> {
        std::mem::replace(&mut *self.current.write().expect("snapshot lock"), Arc::new(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: 400,
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn body(&self) -> String {
        json!({"code": self.code, "message": self.message}).to_string()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownNode(_) | Error::UnknownEdge(_) => 404,
            Error::Io(_) => 500,
            _ => 400,
        };
        ApiError {
            status,
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ApiError {}

pub type ApiResult<T> = std::result::Result<T, ApiError>;

/// Compact JSON, as sent over HTTP and printed by `--json`.
pub fn render(json: &Json) -> String {
    json.to_string()
}

pub fn health(s: &Snapshot) -> Json {
    json!({"status": "ok", "snapshot": s.id})
}

/// The context file format plus the root node.
pub fn context_json(ctx: &Context) -> Json {
    let mut out: Json = serde_json::from_str(&context_to_string(ctx)).expect("context serializes to JSON");
    out["root"] = ctx.root().map(|r| Json::String(r.to_string())).unwrap_or(Json::Null);
    out
}

#[derive(Debug, Clone, Deserialize)]
pub struct ProposalsRequest {
    pub targets: Vec<String>,
    #[serde(default)]
    pub max_len: Option<usize>,
    #[serde(default)]
    pub max_per_pair: Option<usize>,
}

pub fn proposals(s: &Snapshot, req: &ProposalsRequest) -> ApiResult<Json> {
    let ctx = s.context();
    let targets: Vec<NodeRef> = req.targets.iter().map(|t| NodeRef::parse(t)).collect::<contextdb::Result<_>>()?;
    let limits = ProposalLimits {
        max_len: req.max_len.unwrap_or(s.limits.max_len),
        max_per_pair: req.max_per_pair.unwrap_or(s.limits.max_per_pair),
    };
    let ps = enumerate_proposals(ctx, &targets, limits)?;
    let list: Vec<_> = ps.iter().map(|p| p.to_json(ctx)).collect();
    Ok(json!({"proposals": list}))
}

#[derive(Debug, Clone, Deserialize)]
pub struct TraversalRequest {
    pub query: String,
    #[serde(default)]
    pub mode: ModeName,
}

pub fn traversal_relation(s: &Snapshot, req: &TraversalRequest) -> ApiResult<Relation> {
    let q = parse_traversal(&req.query, s.context())?;
    let name = q.name.clone().unwrap_or_else(|| "Q".to_string());
    let mut rel = induced_relation(&q, &s.db, req.mode.into())?;
    rel.schema.name = name;
    Ok(rel)
}

pub fn traversal(s: &Snapshot, req: &TraversalRequest) -> ApiResult<Json> {
    Ok(traversal_relation(s, req)?.to_json())
}

#[derive(Debug, Clone, Deserialize)]
pub struct AnalyticRequest {
    pub grouping: String,
    pub measuring: String,
    pub op: String,
    /// Answer restriction, e.g. `[ans > 500]` or `{"North"}`.
    #[serde(default)]
    pub restrictions: Option<String>,
    #[serde(default)]
    pub combine: Option<CombineRequest>,
    #[serde(default)]
    pub sql: bool,
    #[serde(default)]
    pub name: Option<String>,
}

/// Pointwise arithmetic with a second analytic query or a scalar.
#[derive(Debug, Clone, Deserialize)]
pub struct CombineRequest {
    pub op: String,
    #[serde(default)]
    pub with: Option<Box<AnalyticRequest>>,
    #[serde(default)]
    pub scalar: Option<serde_json::Number>,
}

pub fn analytic_query(ctx: &Context, req: &AnalyticRequest) -> ApiResult<AnalyticQuery> {
    let g = parse_expression(&req.grouping, ctx)?;
    let m = parse_expression(&req.measuring, ctx)?;
    let op = AggregateOp::from_name(&req.op)?;
    let mut q = AnalyticQuery::from_exprs(ctx, g, m, op)?;
    if let Some(r) = req.restrictions.as_deref().filter(|r| !r.trim().is_empty()) {
        q.restriction = Some(parse_answer_restriction(r, &q, ctx)?);
    }
    q.name = req.name.clone();
    Ok(q)
}

pub struct AnalyticOutcome {
    pub query: AnalyticQuery,
    pub answer: AnalyticAnswer,
    pub sql: Option<String>,
}

pub fn analytic_outcome(s: &Snapshot, req: &AnalyticRequest) -> ApiResult<AnalyticOutcome> {
    let ctx = s.context();
    let query = analytic_query(ctx, req)?;
    let mut answer = evaluate_analytic(&query, &s.db)?;
    if let Some(c) = &req.combine {
        let op = Arith::from_name(&c.op)
            .ok_or_else(|| ApiError::bad_request("bad-request", format!("unknown arithmetic operation `{}`", c.op)))?;
        answer = match (&c.with, &c.scalar) {
            (Some(other), None) => {
                let rhs = analytic_outcome(s, other)?.answer;
                combine_answers(&answer, Rhs::Answer(&rhs), op)?
            }
            (None, Some(n)) => {
                let v = match n.as_i64() {
                    Some(i) => Value::Int(i),
                    None => Value::Float(n.as_f64().unwrap_or(f64::NAN)),
                };
                combine_answers(&answer, Rhs::Scalar(v), op)?
            }
            _ => return Err(ApiError::bad_request("bad-request", "combine needs exactly one of `with` and `scalar`")),
        };
    }
    let sql = if req.sql {
        if req.combine.is_some() {
            return Err(Error::UnsupportedSql("combined answers".into()).into());
        }
        let backing = s
            .backing
            .as_ref()
            .ok_or_else(|| ApiError::bad_request("no-backing", "the service was started without a backing map"))?;
        Some(emit_sql(&query, backing, ctx)?)
    } else {
        None
    };
    Ok(AnalyticOutcome { query, answer, sql })
}

impl AnalyticOutcome {
    pub fn relation(&self) -> Relation {
        self.answer.to_relation(&self.query.result_name())
    }

    pub fn to_json(&self) -> Json {
        let mut out = self.relation().to_json();
        if let Some(sql) = &self.sql {
            out["sql"] = Json::String(sql.clone());
        }
        out
    }

    /// The nested plan when the grouping is a composition, else `direct`.
    pub fn explain(&self) -> String {
        match rewrite_composition(&self.query) {
            Ok(p) if self.query.grouping.exprs.len() == 1 && self.query.grouping.exprs[0].flatten_chain().len() > 1 => {
                p.to_string()
            }
            _ => "direct".to_string(),
        }
    }
}

pub fn analytic(s: &Snapshot, req: &AnalyticRequest) -> ApiResult<Json> {
    Ok(analytic_outcome(s, req)?.to_json())
}

pub fn aggregates(ctx: &Context, node: &str) -> ApiResult<Json> {
    let n = NodeRef::parse(node)?;
    if !ctx.has_node(&n) {
        return Err(Error::UnknownNode(node.to_string()).into());
    }
    let names: Vec<&str> = applicable_ops(ctx, &n).into_iter().map(AggregateOp::name).collect();
    Ok(json!(names))
}
