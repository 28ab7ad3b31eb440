//! Analytic queries `(g, m, op)`: group the key by `g`, measure each key
//! with `m`, aggregate the measures of each group with `op`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::context::Context;
use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::expr::{CmpOp, Expr, Qualify};
use crate::instance::{DatabaseInstance, FiniteFunction};
use crate::node::NodeRef;
use crate::relation::{Column, Relation, RelationSchema};
use crate::traversal::{disagreements, TraversalQuery, MAX_WITNESSES};
use crate::value::{BaseType, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateOp {
    Sum,
    Min,
    Max,
    Count,
    #[serde(rename = "countd")]
    CountD,
    Avg,
}

impl AggregateOp {
    pub const ALL: [AggregateOp; 6] = [
        AggregateOp::Sum,
        AggregateOp::Min,
        AggregateOp::Max,
        AggregateOp::Count,
        AggregateOp::CountD,
        AggregateOp::Avg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregateOp::Sum => "sum",
            AggregateOp::Min => "min",
            AggregateOp::Max => "max",
            AggregateOp::Count => "count",
            AggregateOp::CountD => "countd",
            AggregateOp::Avg => "avg",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        AggregateOp::ALL
            .into_iter()
            .find(|op| op.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownAggregate(name.to_string()))
    }

    /// Whether the aggregate of a union can be computed from aggregates
    /// of its parts.
    pub fn is_associative(self) -> bool {
        matches!(self, AggregateOp::Sum | AggregateOp::Min | AggregateOp::Max | AggregateOp::Count)
    }

    /// Operation combining partial aggregates: counts add up.
    pub fn rollup(self) -> Result<AggregateOp> {
        match self {
            AggregateOp::Count => Ok(AggregateOp::Sum),
            op if op.is_associative() => Ok(op),
            op => Err(Error::NotAssociative(op.name().to_string())),
        }
    }

    /// Applicability on the values of `target`.
    pub fn applicable(self, ctx: &Context, target: &NodeRef) -> bool {
        let base = target.as_simple().and_then(|a| ctx.base_type(a));
        match self {
            AggregateOp::Count | AggregateOp::CountD => true,
            AggregateOp::Sum | AggregateOp::Avg => base.is_some_and(BaseType::is_numeric),
            AggregateOp::Min | AggregateOp::Max => {
                base.is_some_and(|b| b.is_numeric() || b == BaseType::Date)
            }
        }
    }

    /// Base type of the aggregate of values of `measure`.
    pub fn result_base(self, measure: Option<BaseType>) -> Option<BaseType> {
        match self {
            AggregateOp::Count | AggregateOp::CountD => Some(BaseType::Integer),
            AggregateOp::Avg => Some(BaseType::Float),
            _ => measure,
        }
    }

    /// Aggregate a nonempty multiset, folded in the given order.
    pub fn apply(self, values: &[Value]) -> Result<Value> {
        assert!(!values.is_empty(), "groups are never empty");
        match self {
            AggregateOp::Count => Ok(Value::Int(values.len() as i64)),
            AggregateOp::CountD => Ok(Value::Int(values.iter().collect::<BTreeSet<_>>().len() as i64)),
            AggregateOp::Min => Ok(values.iter().min().expect("nonempty").clone()),
            AggregateOp::Max => Ok(values.iter().max().expect("nonempty").clone()),
            AggregateOp::Sum => {
                if values.iter().all(|v| matches!(v, Value::Int(_))) {
                    let mut acc: i64 = 0;
                    for v in values {
                        let Value::Int(i) = v else { unreachable!() };
                        acc = acc.checked_add(*i).ok_or(Error::Overflow)?;
                    }
                    Ok(Value::Int(acc))
                } else {
                    Ok(Value::Float(float_sum(values)?))
                }
            }
            AggregateOp::Avg => {
                let n = values.len() as f64;
                if values.iter().all(|v| matches!(v, Value::Int(_))) {
                    let total: i128 = values
                        .iter()
                        .map(|v| match v {
                            Value::Int(i) => *i as i128,
                            _ => unreachable!(),
                        })
                        .sum();
                    Ok(Value::Float(total as f64 / n))
                } else {
                    Ok(Value::Float(float_sum(values)? / n))
                }
            }
        }
    }
}

fn float_sum(values: &[Value]) -> Result<f64> {
    values.iter().try_fold(0.0, |acc, v| {
        v.as_f64()
            .map(|x| acc + x)
            .ok_or_else(|| Error::type_mismatch("a numeric value", v.kind()))
    })
}

impl fmt::Display for AggregateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Aggregates applicable on the values of a node, in registry order.
pub fn applicable_ops(ctx: &Context, node: &NodeRef) -> Vec<AggregateOp> {
    AggregateOp::ALL.into_iter().filter(|op| op.applicable(ctx, node)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Threshold {
    Value(Value),
    /// An aggregate over all values of the answer, e.g. `avg(ans)`.
    Aggregate(AggregateOp),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AnswerAtom {
    /// Keep only these groups.
    Domain(BTreeSet<Value>),
    /// Keep groups whose aggregate compares to the threshold.
    Codomain { op: CmpOp, threshold: Threshold },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnswerRestriction {
    pub atoms: Vec<AnswerAtom>,
}

impl fmt::Display for AnswerRestriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |vs: &BTreeSet<Value>| {
            format!("{{{}}}", vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))
        };
        if let [AnswerAtom::Domain(vs)] = self.atoms.as_slice() {
            return f.write_str(&set(vs));
        }
        f.write_str("[")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" && ")?;
            }
            match a {
                AnswerAtom::Domain(vs) => f.write_str(&set(vs))?,
                AnswerAtom::Codomain { op, threshold } => {
                    write!(f, "ans {} ", op.symbol())?;
                    match threshold {
                        Threshold::Value(v) => write!(f, "{v}")?,
                        Threshold::Aggregate(agg) => write!(f, "{agg}(ans)")?,
                    }
                }
            }
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnalyticQuery {
    pub grouping: TraversalQuery,
    pub measuring: TraversalQuery,
    pub op: AggregateOp,
    pub restriction: Option<AnswerRestriction>,
    /// Name of the result attribute; defaults to `op(target)`.
    pub name: Option<String>,
}

impl AnalyticQuery {
    pub fn new(ctx: &Context, grouping: TraversalQuery, measuring: TraversalQuery, op: AggregateOp) -> Result<Self> {
        if grouping.key != measuring.key {
            return Err(Error::KeyMismatch {
                first: grouping.key,
                second: measuring.key,
            });
        }
        let target = measuring.target();
        if !op.applicable(ctx, &target) {
            return Err(Error::OpNotApplicable {
                op: op.name().to_string(),
                target: format!("{} values", target),
            });
        }
        Ok(AnalyticQuery {
            grouping,
            measuring,
            op,
            restriction: None,
            name: None,
        })
    }

    pub fn from_exprs(ctx: &Context, g: Expr, m: Expr, op: AggregateOp) -> Result<Self> {
        AnalyticQuery::new(ctx, TraversalQuery::from_expr(g)?, TraversalQuery::from_expr(m)?, op)
    }

    pub fn key(&self) -> &NodeRef {
        &self.grouping.key
    }

    pub fn result_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{}({})", self.op, self.measuring.target()))
    }

    pub fn result_base(&self, ctx: &Context) -> Option<BaseType> {
        let t = self.measuring.target();
        self.op.result_base(t.as_simple().and_then(|a| ctx.base_type(a)))
    }

    pub fn to_text(&self, q: Qualify) -> String {
        let mut out = format!(
            "analytic({}; {}; {}",
            self.grouping.to_text(q),
            self.measuring.to_text(q),
            self.op
        );
        if let Some(n) = &self.name {
            out.push_str("; ");
            out.push_str(n);
        }
        out.push(')');
        if let Some(r) = &self.restriction {
            out.push_str(&format!(" / {r}"));
        }
        out
    }

    pub fn pretty(&self, ctx: &Context) -> String {
        self.to_text(Qualify::Ambiguous(ctx))
    }
}

impl fmt::Display for AnalyticQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text(Qualify::Never))
    }
}

/// An analytic answer: a function from the range of the grouping to
/// aggregate values.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticAnswer {
    /// Node of the group values (the grouping target).
    pub group_node: NodeRef,
    pub value_name: String,
    pub function: FiniteFunction,
}

impl AnalyticAnswer {
    pub fn get(&self, group: &Value) -> Option<&Value> {
        self.function.get(group)
    }

    pub fn len(&self) -> usize {
        self.function.len()
    }

    pub fn is_empty(&self) -> bool {
        self.function.is_empty()
    }

    pub fn to_relation(&self, name: &str) -> Relation {
        let key = self.group_node.to_string();
        Relation {
            schema: RelationSchema {
                name: name.to_string(),
                key: Column {
                    name: key.clone(),
                    attribute: key,
                    expr: None,
                },
                columns: vec![Column {
                    name: self.value_name.clone(),
                    attribute: self.value_name.clone(),
                    expr: None,
                }],
            },
            rows: self
                .function
                .map
                .iter()
                .map(|(k, v)| vec![k.clone(), v.clone()])
                .collect(),
        }
    }
}

/// Reject parallel expressions that disagree on this database.
fn require_tree(q: &TraversalQuery, ev: &Evaluator) -> Result<()> {
    let ctx = ev.db().context();
    for (a, b) in q.parallel_pairs() {
        let (fa, fb) = (ev.eval(&a)?, ev.eval(&b)?);
        if !disagreements(&fa, &fb, MAX_WITNESSES).is_empty() {
            return Err(Error::NotTreeQuery {
                left: a.pretty(ctx),
                right: b.pretty(ctx),
            });
        }
    }
    Ok(())
}

/// Group the keys of `measure` by `grouping` and aggregate each group.
/// Keys are visited in order, so float folds are deterministic.
pub fn aggregate(grouping: &FiniteFunction, measure: &FiniteFunction, op: AggregateOp) -> Result<FiniteFunction> {
    let mut groups: BTreeMap<&Value, Vec<Value>> = BTreeMap::new();
    for (x, v) in &measure.map {
        if let Some(i) = grouping.get(x) {
            groups.entry(i).or_default().push(v.clone());
        }
    }
    let mut out = FiniteFunction::new(grouping.target_node.clone(), measure.target_node.clone());
    for (i, vs) in groups {
        out.map.insert(i.clone(), op.apply(&vs)?);
    }
    Ok(out)
}

pub fn evaluate_analytic(q: &AnalyticQuery, db: &DatabaseInstance) -> Result<AnalyticAnswer> {
    evaluate_analytic_with(q, &Evaluator::new(db))
}

pub fn evaluate_analytic_with(q: &AnalyticQuery, ev: &Evaluator) -> Result<AnalyticAnswer> {
    let ctx = ev.db().context();
    if !q.op.applicable(ctx, &q.measuring.target()) {
        return Err(Error::OpNotApplicable {
            op: q.op.name().to_string(),
            target: format!("{} values", q.measuring.target()),
        });
    }
    require_tree(&q.grouping, ev)?;
    require_tree(&q.measuring, ev)?;
    let g = ev.eval(&q.grouping.as_expr())?;
    let m = ev.eval(&q.measuring.as_expr())?;
    let answer = AnalyticAnswer {
        group_node: q.grouping.target(),
        value_name: q.result_name(),
        function: aggregate(&g, &m, q.op)?,
    };
    match &q.restriction {
        Some(r) => restrict_answer(&answer, r),
        None => Ok(answer),
    }
}

/// Evaluation strategies for analytic queries.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    /// Group and aggregate in one pass.
    Direct(AnalyticQuery),
    /// `(id(K), m, op)`: the aggregate of every singleton group.
    Base { key: NodeRef, measuring: Expr, op: AggregateOp },
    /// Aggregate the answer of `inner` along `outer` with `op`.
    Nested { outer: Expr, inner: Box<Plan>, op: AggregateOp },
}

impl Plan {
    pub fn to_text(&self, q: Qualify) -> String {
        match self {
            Plan::Direct(a) => format!("({}, {}, {})", a.grouping.to_text(q), a.measuring.to_text(q), a.op),
            Plan::Base { key, measuring, op } => format!("(id({key}), {}, {op})", measuring.to_text(q)),
            Plan::Nested { outer, inner, op } => match &**inner {
                Plan::Base { measuring, op: base_op, .. } => {
                    format!("({}, {}, {base_op})", outer.to_text(q), measuring.to_text(q))
                }
                inner => format!("({}, {}, {op})", outer.to_text(q), inner.to_text(q)),
            },
        }
    }

    pub fn execute(&self, db: &DatabaseInstance) -> Result<FiniteFunction> {
        self.execute_with(&Evaluator::new(db))
    }

    pub fn execute_with(&self, ev: &Evaluator) -> Result<FiniteFunction> {
        match self {
            Plan::Direct(q) => Ok(evaluate_analytic_with(q, ev)?.function),
            Plan::Base { measuring, op, .. } => {
                let m = ev.eval(measuring)?;
                let mut out = FiniteFunction::new(m.domain_node.clone(), m.target_node.clone());
                for (x, v) in &m.map {
                    out.map.insert(x.clone(), op.apply(std::slice::from_ref(v))?);
                }
                Ok(out)
            }
            Plan::Nested { outer, inner, op } => {
                let a = inner.execute_with(ev)?;
                let g = ev.eval_on(outer, Some(&a.domain()))?;
                aggregate(&g, &a, *op)
            }
        }
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text(Qualify::Never))
    }
}

/// `(g_n o ... o g_1, m, op)` as `(g_n, (... (g_1, (id(K), m, op), op') ...), op')`
/// where `op'` combines partial aggregates.
pub fn rewrite_composition(q: &AnalyticQuery) -> Result<Plan> {
    let rollup = q.op.rollup()?;
    let grouping = q.grouping.as_expr();
    let chain = grouping.flatten_chain();
    let mut plan = Plan::Base {
        key: q.key().clone(),
        measuring: q.measuring.as_expr(),
        op: q.op,
    };
    for g in chain.into_iter().rev() {
        plan = Plan::Nested {
            outer: g.clone(),
            inner: Box::new(plan),
            op: rollup,
        };
    }
    Ok(plan)
}

/// `(g_i, m, op)` from the paired query `(g_1 & ... & g_n, m, op)`:
/// project the paired answer onto the target of `g_i` and combine.
pub fn rewrite_pairing(component: usize, paired: &AnalyticQuery) -> Result<Plan> {
    let rollup = paired.op.rollup()?;
    let gs = &paired.grouping.exprs;
    let g_i = gs.get(component).ok_or_else(|| {
        Error::type_mismatch(format!("a component index below {}", gs.len()), component)
    })?;
    if gs.len() == 1 {
        return Ok(Plan::Direct(paired.clone()));
    }
    let full = paired.grouping.target();
    let sub = g_i.target();
    let outer = if sub.is_terminal() {
        Expr::Terminal(full)
    } else if sub == full {
        Expr::Identity(full)
    } else {
        Expr::Projection { from: full, to: sub }
    };
    let mut inner = paired.clone();
    inner.restriction = None;
    Ok(Plan::Nested {
        outer,
        inner: Box::new(Plan::Direct(inner)),
        op: rollup,
    })
}

/// Restrict an answer by group values and by predicates on its values.
pub fn restrict_answer(ans: &AnalyticAnswer, r: &AnswerRestriction) -> Result<AnalyticAnswer> {
    let all: Vec<Value> = ans.function.map.values().cloned().collect();
    let mut map = ans.function.map.clone();
    for atom in &r.atoms {
        match atom {
            AnswerAtom::Domain(vs) => map.retain(|k, _| vs.contains(k)),
            AnswerAtom::Codomain { op, threshold } => {
                let t = match threshold {
                    Threshold::Value(v) => v.clone(),
                    Threshold::Aggregate(_) if all.is_empty() => continue,
                    Threshold::Aggregate(agg) => agg.apply(&all)?,
                };
                let mut keep = BTreeMap::new();
                for (k, v) in map {
                    if op.holds(v.compare(&t)?) {
                        keep.insert(k, v);
                    }
                }
                map = keep;
            }
        }
    }
    let mut out = ans.clone();
    out.function.map = map;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arith {
    Add,
    Subtract,
    Multiply,
    Divide,
}

impl Arith {
    pub fn symbol(self) -> &'static str {
        match self {
            Arith::Add => "+",
            Arith::Subtract => "-",
            Arith::Multiply => "*",
            Arith::Divide => "/",
        }
    }

    pub fn from_name(name: &str) -> Option<Arith> {
        match name {
            "add" | "+" => Some(Arith::Add),
            "subtract" | "-" => Some(Arith::Subtract),
            "multiply" | "*" => Some(Arith::Multiply),
            "divide" | "/" => Some(Arith::Divide),
            _ => None,
        }
    }

    fn apply(self, key: &Value, a: &Value, b: &Value) -> Result<Value> {
        let numeric = |v: &Value| v.as_f64().ok_or_else(|| Error::type_mismatch("a numeric value", v.kind()));
        let (x, y) = (numeric(a)?, numeric(b)?);
        if let (Value::Int(i), Value::Int(j), false) = (a, b, self == Arith::Divide) {
            let r = match self {
                Arith::Add => i.checked_add(*j),
                Arith::Subtract => i.checked_sub(*j),
                Arith::Multiply => i.checked_mul(*j),
                Arith::Divide => unreachable!(),
            };
            return r.map(Value::Int).ok_or(Error::Overflow);
        }
        Ok(Value::Float(match self {
            Arith::Add => x + y,
            Arith::Subtract => x - y,
            Arith::Multiply => x * y,
            Arith::Divide if y == 0.0 => return Err(Error::DivisionByZero(key.clone())),
            Arith::Divide => x / y,
        }))
    }
}

pub enum Rhs<'a> {
    Answer(&'a AnalyticAnswer),
    Scalar(Value),
}

/// Pointwise arithmetic between an answer and a scalar, a total (an
/// answer over the terminal node) or an answer covering its domain.
pub fn combine_answers(a: &AnalyticAnswer, b: Rhs, op: Arith) -> Result<AnalyticAnswer> {
    let mut out = a.clone();
    let (name, lookup): (String, Box<dyn Fn(&Value) -> Option<Value>>) = match b {
        Rhs::Scalar(v) => (v.to_string(), Box::new(move |_| Some(v.clone()))),
        Rhs::Answer(t) if t.group_node.is_terminal() && !a.group_node.is_terminal() => {
            let total = t
                .function
                .get(&Value::Unit)
                .cloned()
                .ok_or_else(|| Error::DomainMismatch("the total answer is empty".into()))?;
            (t.value_name.clone(), Box::new(move |_| Some(total.clone())))
        }
        Rhs::Answer(t) => {
            if t.group_node != a.group_node {
                return Err(Error::DomainMismatch(format!(
                    "groups of {} vs groups of {}",
                    a.group_node, t.group_node
                )));
            }
            let f = t.function.clone();
            (t.value_name.clone(), Box::new(move |k| f.get(k).cloned()))
        }
    };
    for (k, v) in out.function.map.iter_mut() {
        let w = lookup(k).ok_or_else(|| Error::DomainMismatch(format!("no value for group {k}")))?;
        *v = op.apply(k, v, &w)?;
    }
    out.value_name = format!("{} {} {}", a.value_name, op.symbol(), name);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(xs: &[i64]) -> Vec<Value> {
        xs.iter().map(|&x| Value::Int(x)).collect()
    }

    #[test]
    fn avg_is_not_associative() {
        let avg = AggregateOp::Avg;
        assert_eq!(avg.apply(&ints(&[1, 2, 3, 4, 5])).unwrap(), Value::Float(3.0));
        let nested = avg
            .apply(&[avg.apply(&ints(&[1, 2])).unwrap(), avg.apply(&ints(&[3, 4, 5])).unwrap()])
            .unwrap();
        assert_eq!(nested, Value::Float(2.75));
        assert!(matches!(avg.rollup(), Err(Error::NotAssociative(_))));
        assert!(AggregateOp::CountD.rollup().is_err());
        assert_eq!(AggregateOp::Count.rollup().unwrap(), AggregateOp::Sum);
    }

    #[test]
    fn integer_sum_overflow_is_reported() {
        assert_eq!(AggregateOp::Sum.apply(&ints(&[i64::MAX, 1])), Err(Error::Overflow));
    }

    #[test]
    fn count_and_countd() {
        let vs = ints(&[100, 100, 200]);
        assert_eq!(AggregateOp::Count.apply(&vs).unwrap(), Value::Int(3));
        assert_eq!(AggregateOp::CountD.apply(&vs).unwrap(), Value::Int(2));
    }

    #[test]
    fn division_by_zero_names_the_key() {
        let a = AnalyticAnswer {
            group_node: NodeRef::simple("B"),
            value_name: "sum(Q)".into(),
            function: FiniteFunction::from_pairs(
                NodeRef::simple("B"),
                NodeRef::simple("Q"),
                [(Value::text("x"), Value::Int(3))],
            ),
        };
        let err = combine_answers(&a, Rhs::Scalar(Value::Int(0)), Arith::Divide).unwrap_err();
        assert_eq!(err, Error::DivisionByZero(Value::text("x")));
        let same = combine_answers(&a, Rhs::Scalar(Value::Int(1)), Arith::Divide).unwrap();
        assert_eq!(same.get(&Value::text("x")), Some(&Value::Float(3.0)));
        let zero = combine_answers(&a, Rhs::Answer(&a), Arith::Subtract).unwrap();
        assert_eq!(zero.get(&Value::text("x")), Some(&Value::Int(0)));
    }
}
