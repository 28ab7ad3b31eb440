//! Algebraic rewriting of expressions, a result cache keyed by canonical
//! expression text, and sampled equivalence checking.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use crate::context::Context;
use crate::error::{Error, Result};
use crate::eval::{push_restrictions, Evaluator};
use crate::expr::Expr;
use crate::instance::{DatabaseInstance, FiniteFunction};
use crate::random::{random_instance, rng, RandomSpec};
use crate::value::Value;

/// Steps taken by [`rewrite_for_cache`] at most.
pub const MAX_REWRITE_STEPS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    /// `f o (g o h)` to `(f o g) o h`.
    AssociativeLeft,
    /// `(f o g) o h` to `f o (g o h)`.
    AssociativeRight,
    /// `(g1 & ... & gn) o f` to `(g1 o f) & ... & (gn o f)`.
    Distributive,
    /// `(g1 o f) & ... & (gn o f)` to `(g1 & ... & gn) o f`.
    Grouping,
    /// Move every restriction to the source of the subterm.
    RestrictionPropagation,
}

impl Rule {
    pub const ALL: [Rule; 5] = [
        Rule::AssociativeLeft,
        Rule::AssociativeRight,
        Rule::Distributive,
        Rule::Grouping,
        Rule::RestrictionPropagation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::AssociativeLeft => "associative-left",
            Rule::AssociativeRight => "associative-right",
            Rule::Distributive => "distributive",
            Rule::Grouping => "grouping",
            Rule::RestrictionPropagation => "restriction-propagation",
        }
    }

    pub fn from_name(name: &str) -> Result<Rule> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == name)
            .ok_or_else(|| Error::NoMatch {
                rule: name.to_string(),
                path: "/".to_string(),
            })
    }

    /// Rewrite `e` itself, or `None` when the rule does not match there.
    pub fn apply_here(self, e: &Expr) -> Option<Expr> {
        match (self, e) {
            (Rule::AssociativeLeft, Expr::Compose(f, gh)) => match &**gh {
                Expr::Compose(g, h) => Some(Expr::compose(
                    Expr::compose((**f).clone(), (**g).clone()),
                    (**h).clone(),
                )),
                _ => None,
            },
            (Rule::AssociativeRight, Expr::Compose(fg, h)) => match &**fg {
                Expr::Compose(f, g) => Some(Expr::compose(
                    (**f).clone(),
                    Expr::compose((**g).clone(), (**h).clone()),
                )),
                _ => None,
            },
            (Rule::Distributive, Expr::Compose(pair, f)) => match &**pair {
                Expr::Pair(gs) => Some(Expr::Pair(
                    gs.iter().map(|g| Expr::compose(g.clone(), (**f).clone())).collect(),
                )),
                _ => None,
            },
            (Rule::Grouping, Expr::Pair(ms)) => {
                let mut outers = Vec::with_capacity(ms.len());
                let mut inner: Option<&Expr> = None;
                for m in ms {
                    let Expr::Compose(g, f) = m else { return None };
                    match inner {
                        Some(i) if i != &**f => return None,
                        _ => inner = Some(f),
                    }
                    outers.push((**g).clone());
                }
                Some(Expr::compose(Expr::Pair(outers), inner?.clone()))
            }
            (Rule::RestrictionPropagation, e) if e.has_restriction() => {
                let pushed = push_restrictions(e);
                (pushed != *e).then_some(pushed)
            }
            _ => None,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn format_path(path: &[usize]) -> String {
    if path.is_empty() {
        "/".to_string()
    } else {
        path.iter().map(|i| format!("/{i}")).collect()
    }
}

pub fn parse_path(text: &str) -> Option<Vec<usize>> {
    let text = text.trim();
    if text == "/" || text.is_empty() {
        return Some(vec![]);
    }
    text.strip_prefix('/')?
        .split('/')
        .map(|s| s.parse().ok())
        .collect()
}

/// Apply `rule` to the subterm of `expr` at `path`.
pub fn apply_rule(rule: Rule, expr: &Expr, path: &[usize]) -> Result<Expr> {
    let no_match = || Error::NoMatch {
        rule: rule.name().to_string(),
        path: format_path(path),
    };
    let sub = expr.at(path).ok_or_else(no_match)?;
    let replacement = rule.apply_here(sub).ok_or_else(no_match)?;
    let mut out = expr.clone();
    *out.at_mut(path).expect("path exists") = replacement;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteStep {
    pub rule: Rule,
    pub path: Vec<usize>,
    pub before: Expr,
    pub after: Expr,
}

impl RewriteStep {
    /// `rule @ /0/1 : before => after`.
    pub fn explain(&self, ctx: &Context) -> String {
        format!(
            "{} @ {} : {} => {}",
            self.rule,
            format_path(&self.path),
            self.before.pretty(ctx),
            self.after.pretty(ctx)
        )
    }
}

/// Apply a recorded sequence of steps starting from `start`.
pub fn replay(start: &Expr, trace: &[RewriteStep]) -> Result<Expr> {
    trace
        .iter()
        .try_fold(start.clone(), |e, step| apply_rule(step.rule, &e, &step.path))
}

/// Values of evaluated expressions, keyed by canonical text and snapshot.
#[derive(Debug, Default)]
pub struct ResultCache {
    entries: RwLock<HashMap<(String, String), Arc<FiniteFunction>>>,
    hits: AtomicUsize,
}

impl ResultCache {
    pub fn new() -> Self {
        ResultCache::default()
    }

    pub fn get(&self, canonical: &str, snapshot: &str) -> Option<Arc<FiniteFunction>> {
        let found = self
            .entries
            .read()
            .expect("cache lock")
            .get(&(canonical.to_string(), snapshot.to_string()))
            .cloned();
        if found.is_some() {
            self.hits.fetch_add(1, Ordering::Relaxed);
        }
        found
    }

    pub fn insert(&self, canonical: String, snapshot: String, value: FiniteFunction) {
        self.entries
            .write()
            .expect("cache lock")
            .entry((canonical, snapshot))
            .or_insert_with(|| Arc::new(value));
    }

    pub fn contains(&self, canonical: &str, snapshot: &str) -> bool {
        self.entries
            .read()
            .expect("cache lock")
            .contains_key(&(canonical.to_string(), snapshot.to_string()))
    }

    /// Canonical texts cached for a snapshot.
    pub fn keys(&self, snapshot: &str) -> HashSet<String> {
        self.entries
            .read()
            .expect("cache lock")
            .keys()
            .filter(|(_, s)| s == snapshot)
            .map(|(c, _)| c.clone())
            .collect()
    }

    pub fn entries(&self) -> Vec<(String, String, Arc<FiniteFunction>)> {
        let mut out: Vec<_> = self
            .entries
            .read()
            .expect("cache lock")
            .iter()
            .map(|((c, s), f)| (c.clone(), s.clone(), f.clone()))
            .collect();
        out.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        out
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    /// Evaluate `expr` using cached subexpression values, then cache the
    /// result.
    pub fn evaluate(&self, expr: &Expr, db: &DatabaseInstance, snapshot: &str) -> Result<FiniteFunction> {
        let f = Evaluator::new(db)
            .with_cache(self, snapshot.to_string())
            .eval(expr)?;
        self.insert(expr.canonical(), snapshot.to_string(), f.clone());
        Ok(f)
    }
}

/// (distinct cached subterms used, negated count of nodes evaluated
/// outside cached subterms)
fn cache_score(e: &Expr, cached: &HashSet<String>) -> (usize, i64) {
    fn walk(e: &Expr, cached: &HashSet<String>, hits: &mut HashSet<String>, work: &mut i64) {
        let c = e.canonical();
        if cached.contains(&c) {
            hits.insert(c);
            return;
        }
        *work += 1;
        for child in e.children() {
            walk(child, cached, hits, work);
        }
    }
    let mut hits = HashSet::new();
    let mut work = 0;
    walk(e, cached, &mut hits, &mut work);
    (hits.len(), -work)
}

/// Greedily rewrite `expr` so that it references as many cached
/// subexpressions as possible. Candidates are tried at every position in
/// leftmost-innermost order; the best strict improvement wins, earlier
/// candidates winning ties.
pub fn rewrite_for_cache(expr: &Expr, cached: &HashSet<String>) -> (Expr, Vec<RewriteStep>) {
    let mut current = expr.clone();
    let mut trace = vec![];
    if cached.is_empty() {
        return (current, trace);
    }
    let rules = [Rule::AssociativeLeft, Rule::AssociativeRight, Rule::Distributive, Rule::Grouping];
    for _ in 0..MAX_REWRITE_STEPS {
        let score = cache_score(&current, cached);
        let mut best: Option<((usize, i64), Rule, Vec<usize>, Expr)> = None;
        for path in current.positions() {
            for rule in rules {
                let Ok(next) = apply_rule(rule, &current, &path) else { continue };
                let s = cache_score(&next, cached);
                if s.0 == 0 || s <= score {
                    continue;
                }
                if best.as_ref().is_none_or(|b| s > b.0) {
                    best = Some((s, rule, path.clone(), next));
                }
            }
        }
        let Some((_, rule, path, next)) = best else { break };
        trace.push(RewriteStep {
            rule,
            path,
            before: current.clone(),
            after: next.clone(),
        });
        current = next;
    }
    (current, trace)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    EquivalentOnSamples { trials: usize },
    Counterexample {
        db: Box<DatabaseInstance>,
        key: Value,
        left: Option<Value>,
        right: Option<Value>,
    },
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::EquivalentOnSamples { .. })
    }
}

/// First key where two functions differ (including where only one is
/// defined).
pub fn first_difference(a: &FiniteFunction, b: &FiniteFunction) -> Option<(Value, Option<Value>, Option<Value>)> {
    let keys: std::collections::BTreeSet<&Value> = a.map.keys().chain(b.map.keys()).collect();
    keys.into_iter().find_map(|k| {
        let (x, y) = (a.get(k), b.get(k));
        (x != y).then(|| (k.clone(), x.cloned(), y.cloned()))
    })
}

/// Compare two parallel expressions on `trials` seeded random databases.
pub fn check_equivalence(e1: &Expr, e2: &Expr, ctx: &Context, trials: usize, seed: u64) -> Result<Verdict> {
    e1.type_check(ctx)?;
    e2.type_check(ctx)?;
    if e1.source() != e2.source() || e1.target() != e2.target() {
        return Err(Error::type_mismatch(
            format!("{} -> {}", e1.source(), e1.target()),
            format!("{} -> {}", e2.source(), e2.target()),
        ));
    }
    let ctx = Arc::new(ctx.clone());
    let mut r = rng(seed);
    for _ in 0..trials {
        let db = random_instance(ctx.clone(), &mut r, RandomSpec::default());
        let ev = Evaluator::new(&db);
        let (a, b) = (ev.eval(e1)?, ev.eval(e2)?);
        if let Some((key, left, right)) = first_difference(&a, &b) {
            return Ok(Verdict::Counterexample {
                db: Box::new(db),
                key,
                left,
                right,
            });
        }
    }
    Ok(Verdict::EquivalentOnSamples { trials })
}
