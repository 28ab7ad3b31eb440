//! Set-at-a-time evaluation of expressions, restriction pushing and the
//! implied-function closure.

use std::collections::BTreeSet;

use crate::context::Context;
use crate::error::{Error, Result};
use crate::expr::{Atom, Expr, Operand, RestrictionSpec};
use crate::instance::{DatabaseInstance, FiniteFunction};
use crate::node::NodeRef;
use crate::rewrite::ResultCache;
use crate::value::Value;

/// Largest product extent that evaluation will enumerate.
pub const DEFAULT_PRODUCT_LIMIT: u128 = 1 << 20;

pub struct Evaluator<'a> {
    db: &'a DatabaseInstance,
    limit: u128,
    cache: Option<(&'a ResultCache, String)>,
}

impl<'a> Evaluator<'a> {
    pub fn new(db: &'a DatabaseInstance) -> Self {
        Evaluator {
            db,
            limit: DEFAULT_PRODUCT_LIMIT,
            cache: None,
        }
    }

    pub fn with_limit(mut self, limit: u128) -> Self {
        self.limit = limit;
        self
    }

    /// Look up subexpressions in `cache` under the given snapshot id.
    pub fn with_cache(mut self, cache: &'a ResultCache, snapshot: String) -> Self {
        self.cache = Some((cache, snapshot));
        self
    }

    pub fn db(&self) -> &DatabaseInstance {
        self.db
    }

    /// The value of `expr` on the extent of its source.
    pub fn eval(&self, expr: &Expr) -> Result<FiniteFunction> {
        self.eval_on(expr, None)
    }

    /// The value of `expr` on `domain` (or the whole source extent),
    /// dropping elements where a restriction makes it undefined.
    pub fn eval_on(&self, expr: &Expr, domain: Option<&BTreeSet<Value>>) -> Result<FiniteFunction> {
        if let Some((cache, snapshot)) = &self.cache {
            if !matches!(expr, Expr::Edge(_) | Expr::Identity(_) | Expr::Terminal(_)) {
                if let Some(f) = cache.get(&expr.canonical(), snapshot) {
                    return Ok(match domain {
                        Some(d) => f.restrict(d),
                        None => (*f).clone(),
                    });
                }
            }
        }
        let source = expr.source();
        match expr {
            Expr::Edge(edge) => {
                let f = self
                    .db
                    .function(edge)
                    .ok_or_else(|| Error::MissingFunction(edge.qualified()))?;
                Ok(match domain {
                    Some(d) if d.len() < f.len() => FiniteFunction::from_pairs(
                        f.domain_node.clone(),
                        f.target_node.clone(),
                        d.iter().filter_map(|x| f.get(x).map(|y| (x.clone(), y.clone()))),
                    ),
                    Some(d) => f.restrict(d),
                    None => f.clone(),
                })
            }
            Expr::Identity(n) => {
                let xs = self.carrier(n, domain)?;
                Ok(FiniteFunction::identity(n.clone(), xs))
            }
            Expr::Terminal(n) => {
                let xs = self.carrier(n, domain)?;
                Ok(FiniteFunction::from_pairs(
                    n.clone(),
                    NodeRef::terminal(),
                    xs.into_iter().map(|x| (x, Value::Unit)),
                ))
            }
            Expr::Projection { from, to } => {
                let positions = from
                    .positions_of(to)
                    .ok_or_else(|| Error::type_mismatch(format!("a sub-product of {from}"), to))?;
                let xs = self.carrier(from, domain)?;
                Ok(FiniteFunction::from_pairs(
                    from.clone(),
                    to.clone(),
                    xs.into_iter().map(|x| {
                        let parts = from.components(&x);
                        let y = to.assemble(positions.iter().map(|&i| parts[i].clone()).collect());
                        (x, y)
                    }),
                ))
            }
            Expr::Compose(outer, inner) => {
                let fi = self.eval_on(inner, domain)?;
                let fo = self.eval_on(outer, Some(&fi.range()))?;
                Ok(fi.then(&fo))
            }
            Expr::Pair(members) => {
                let fs: Vec<FiniteFunction> = members
                    .iter()
                    .map(|m| self.eval_on(m, domain))
                    .collect::<Result<_>>()?;
                let targets: Vec<NodeRef> = members.iter().map(Expr::target).collect();
                let (merged, layout) = NodeRef::merge(&targets);
                let mut out = FiniteFunction::new(source, merged.clone());
                let smallest = fs.iter().min_by_key(|f| f.len()).expect("pair has members");
                'keys: for x in smallest.map.keys() {
                    let mut comps = vec![Value::Unit; merged.arity()];
                    for ((f, t), pos) in fs.iter().zip(&targets).zip(&layout) {
                        let Some(y) = f.get(x) else { continue 'keys };
                        for (c, &p) in t.components(y).into_iter().zip(pos) {
                            comps[p] = c;
                        }
                    }
                    out.map.insert(x.clone(), merged.assemble(comps));
                }
                Ok(out)
            }
            Expr::Product(members) => {
                let sources: Vec<NodeRef> = members.iter().map(Expr::source).collect();
                let targets: Vec<NodeRef> = members.iter().map(Expr::target).collect();
                let (src, src_layout) = NodeRef::merge(&sources);
                let (tgt, tgt_layout) = NodeRef::merge(&targets);
                let xs = self.carrier(&src, domain)?;
                let split = |x: &Value, j: usize| -> Value {
                    let parts = src.components(x);
                    sources[j].assemble(src_layout[j].iter().map(|&i| parts[i].clone()).collect())
                };
                let mut fs = Vec::with_capacity(members.len());
                for (j, m) in members.iter().enumerate() {
                    let dom: BTreeSet<Value> = xs.iter().map(|x| split(x, j)).collect();
                    fs.push(self.eval_on(m, Some(&dom))?);
                }
                let mut out = FiniteFunction::new(src.clone(), tgt.clone());
                'xs: for x in &xs {
                    let mut comps = vec![Value::Unit; tgt.arity()];
                    for (j, f) in fs.iter().enumerate() {
                        let Some(y) = f.get(&split(x, j)) else { continue 'xs };
                        for (c, &p) in targets[j].components(y).into_iter().zip(&tgt_layout[j]) {
                            comps[p] = c;
                        }
                    }
                    out.map.insert(x.clone(), tgt.assemble(comps));
                }
                Ok(out)
            }
            Expr::Restrict(inner, spec) => {
                let carrier = self.spec_carrier(spec, &source, domain)?;
                self.eval_on(inner, Some(&carrier))
            }
        }
    }

    /// Elements of `domain` (or of the extent of `node`) that belong to
    /// the extent of `node`.
    fn carrier(&self, node: &NodeRef, domain: Option<&BTreeSet<Value>>) -> Result<BTreeSet<Value>> {
        match domain {
            Some(d) => Ok(d.iter().filter(|x| self.db.contains(node, x)).cloned().collect()),
            None => self.db.extent(node, self.limit),
        }
    }

    /// The subset of `domain` (or of the extent of `node`) satisfying a
    /// restriction on `node`.
    pub fn spec_carrier(
        &self,
        spec: &RestrictionSpec,
        node: &NodeRef,
        domain: Option<&BTreeSet<Value>>,
    ) -> Result<BTreeSet<Value>> {
        let mut current = match (domain, spec.atoms.iter().find_map(|a| match a {
            Atom::Values(vs) => Some(vs),
            _ => None,
        })) {
            (Some(d), _) => d.clone(),
            (None, Some(vs)) => self.carrier(node, Some(vs))?,
            (None, None) => self.db.extent(node, self.limit)?,
        };
        for atom in &spec.atoms {
            current = match atom {
                Atom::Values(vs) => current.intersection(vs).cloned().collect(),
                Atom::Compare { left, op, right } => {
                    let fl = self.eval_on(left, Some(&current))?;
                    let fr = match right {
                        Operand::Expr(r) => Some(self.eval_on(r, Some(&current))?),
                        Operand::Value(_) => None,
                    };
                    let mut keep = BTreeSet::new();
                    for (x, a) in &fl.map {
                        let b = match (&fr, right) {
                            (Some(f), _) => match f.get(x) {
                                Some(b) => b,
                                None => continue,
                            },
                            (None, Operand::Value(v)) => v,
                            (None, Operand::Expr(_)) => unreachable!(),
                        };
                        if op.holds(a.compare(b)?) {
                            keep.insert(x.clone());
                        }
                    }
                    keep
                }
                Atom::Preimage(e, inner) => {
                    let fe = self.eval_on(e, Some(&current))?;
                    let allowed = self.spec_carrier(inner, &e.target(), Some(&fe.range()))?;
                    fe.preimage(&allowed)
                }
            };
        }
        Ok(current)
    }
}

pub fn eval(expr: &Expr, db: &DatabaseInstance) -> Result<FiniteFunction> {
    Evaluator::new(db).eval(expr)
}

pub fn eval_on(expr: &Expr, db: &DatabaseInstance, domain: &BTreeSet<Value>) -> Result<FiniteFunction> {
    Evaluator::new(db).eval_on(expr, Some(domain))
}

/// Split an expression into an unrestricted core and a single restriction
/// on its source.
pub fn split_restrictions(expr: &Expr) -> (Expr, RestrictionSpec) {
    match expr {
        Expr::Edge(_) | Expr::Identity(_) | Expr::Terminal(_) | Expr::Projection { .. } => {
            (expr.clone(), RestrictionSpec::default())
        }
        Expr::Restrict(inner, spec) => {
            let (core, s) = split_restrictions(inner);
            (core, s.and(spec.clone()))
        }
        Expr::Compose(outer, inner) => {
            let (co, so) = split_restrictions(outer);
            let (ci, si) = split_restrictions(inner);
            let spec = if so.is_trivial() {
                si
            } else {
                si.and(RestrictionSpec::preimage(ci.clone(), so))
            };
            (Expr::compose(co, ci), spec)
        }
        Expr::Pair(members) => {
            let mut spec = RestrictionSpec::default();
            let mut cores = Vec::with_capacity(members.len());
            for m in members {
                let (c, s) = split_restrictions(m);
                cores.push(c);
                spec = spec.and(s);
            }
            (Expr::Pair(cores), spec)
        }
        Expr::Product(members) => {
            let src = expr.source();
            if src.has_repeated_factors() {
                return (expr.clone(), RestrictionSpec::default());
            }
            let mut spec = RestrictionSpec::default();
            let mut cores = Vec::with_capacity(members.len());
            for m in members {
                let (c, s) = split_restrictions(m);
                let sj = c.source();
                cores.push(c);
                if s.is_trivial() {
                    continue;
                }
                spec = if sj == src {
                    spec.and(s)
                } else if sj.is_terminal() {
                    spec.and(RestrictionSpec::preimage(Expr::Terminal(src.clone()), s))
                } else {
                    spec.and(RestrictionSpec::preimage(
                        Expr::Projection {
                            from: src.clone(),
                            to: sj,
                        },
                        s,
                    ))
                };
            }
            (Expr::Product(cores), spec)
        }
    }
}

/// An equivalent expression whose only restriction sits at its source.
pub fn push_restrictions(expr: &Expr) -> Expr {
    if !expr.has_restriction() {
        return expr.clone();
    }
    let (core, spec) = split_restrictions(expr);
    if spec.is_trivial() {
        core
    } else {
        Expr::restrict(core, spec)
    }
}

pub type Signature = (NodeRef, NodeRef);

/// One round of the implied-function rules: projections (including
/// identities), transitivity, and augmentation by nodes of the context.
pub fn implied_closure_step(ctx: &Context, known: &BTreeSet<Signature>) -> BTreeSet<Signature> {
    let mut out = known.clone();
    let nodes: Vec<NodeRef> = ctx.nodes().into_iter().filter(|n| !n.is_terminal()).collect();
    for n in &nodes {
        out.insert((n.clone(), n.clone()));
        if n.is_product() {
            for a in n.factors() {
                out.insert((n.clone(), NodeRef::simple(a.as_str())));
            }
            for m in nodes.iter().filter(|m| m.is_product() && *m != n && m.is_sub_product_of(n)) {
                out.insert((n.clone(), m.clone()));
            }
        }
    }
    for (x, y) in known {
        for (y2, z) in known {
            if y == y2 {
                out.insert((x.clone(), z.clone()));
            }
        }
        for z in &nodes {
            let shares = z.factors().iter().any(|a| x.contains(a) || y.contains(a));
            if !shares {
                out.insert((NodeRef::product_of([x, z]), NodeRef::product_of([y, z])));
            }
        }
    }
    out
}
