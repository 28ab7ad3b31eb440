//! Equality and refinement constraints between expressions.

use std::collections::BTreeSet;
use std::fmt;

use crate::context::{kind_symbol, ConstraintDecl, ConstraintKind, Context, ValidationReport, Violation};
use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::expr::Expr;
use crate::instance::{DatabaseInstance, FiniteFunction};
use crate::parser::parse_expression;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    /// Two parallel expressions with the same value.
    Equality(Expr, Expr),
    /// The partition of the first refines the partition of the second.
    Refinement(Expr, Expr),
}

impl Constraint {
    pub fn equality(lhs: Expr, rhs: Expr) -> Result<Self> {
        if lhs.source() != rhs.source() || lhs.target() != rhs.target() {
            return Err(Error::type_mismatch(
                format!("an expression parallel to {lhs}: {} -> {}", lhs.source(), lhs.target()),
                format!("{rhs}: {} -> {}", rhs.source(), rhs.target()),
            ));
        }
        Ok(Constraint::Equality(lhs, rhs))
    }

    pub fn refinement(lhs: Expr, rhs: Expr) -> Result<Self> {
        if lhs.source() != rhs.source() {
            return Err(Error::KeyMismatch {
                first: lhs.source(),
                second: rhs.source(),
            });
        }
        Ok(Constraint::Refinement(lhs, rhs))
    }

    pub fn from_decl(decl: &ConstraintDecl, ctx: &Context) -> Result<Self> {
        let lhs = parse_expression(&decl.lhs, ctx)?;
        let rhs = parse_expression(&decl.rhs, ctx)?;
        match decl.kind {
            ConstraintKind::Equality => Constraint::equality(lhs, rhs),
            ConstraintKind::Refinement => Constraint::refinement(lhs, rhs),
        }
    }

    pub fn kind(&self) -> ConstraintKind {
        match self {
            Constraint::Equality(..) => ConstraintKind::Equality,
            Constraint::Refinement(..) => ConstraintKind::Refinement,
        }
    }

    pub fn sides(&self) -> (&Expr, &Expr) {
        match self {
            Constraint::Equality(a, b) | Constraint::Refinement(a, b) => (a, b),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.sides();
        write!(f, "{a} {} {b}", kind_symbol(self.kind()))
    }
}

/// A block of the finer partition spread over several blocks of the
/// coarser one, with two keys from different coarse blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockWitness {
    pub block: BTreeSet<Value>,
    pub keys: (Value, Value),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintVerdict {
    Satisfied,
    /// Keys where the two sides of an equality differ.
    EqualityViolated(Vec<Value>),
    /// Every straddling block of a refinement.
    RefinementViolated(Vec<BlockWitness>),
}

impl ConstraintVerdict {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, ConstraintVerdict::Satisfied)
    }
}

fn common<'a>(f: &'a FiniteFunction, g: &'a FiniteFunction) -> impl Iterator<Item = (&'a Value, &'a Value, &'a Value)> {
    f.map.iter().filter_map(|(x, a)| g.get(x).map(|b| (x, a, b)))
}

/// Keys of the common carrier where `f` and `g` differ.
pub fn equality_witnesses(f: &FiniteFunction, g: &FiniteFunction) -> Vec<Value> {
    common(f, g).filter(|(_, a, b)| a != b).map(|(x, _, _)| x.clone()).collect()
}

/// Blocks of `p_f` (on the common carrier) that straddle blocks of `p_g`.
pub fn straddling_blocks(f: &FiniteFunction, g: &FiniteFunction) -> Vec<BlockWitness> {
    let carrier: BTreeSet<Value> = common(f, g).map(|(x, _, _)| x.clone()).collect();
    let mut out = vec![];
    for block in f.restrict(&carrier).partition().blocks {
        let mut it = block.iter();
        let first = it.next().expect("blocks are nonempty");
        let gy = g.get(first).expect("key is in the carrier");
        if let Some(other) = it.find(|x| g.get(x) != Some(gy)) {
            let keys = (first.clone(), other.clone());
            out.push(BlockWitness { block, keys });
        }
    }
    out
}

pub fn refines(f: &FiniteFunction, g: &FiniteFunction) -> bool {
    straddling_blocks(f, g).is_empty()
}

/// The function `h` on `range(f)` with `h ∘ f = g`, defined by
/// `h(y) = g(f⁻¹(y))`. Only the common carrier of `f` and `g` is used.
pub fn refinement_witness(f: &FiniteFunction, g: &FiniteFunction) -> Result<FiniteFunction> {
    if !refines(f, g) {
        return Err(Error::NotRefined {
            left: format!("{} -> {}", f.domain_node, f.target_node),
            right: format!("{} -> {}", g.domain_node, g.target_node),
        });
    }
    Ok(FiniteFunction::from_pairs(
        f.target_node.clone(),
        g.target_node.clone(),
        common(f, g).map(|(_, y, z)| (y.clone(), z.clone())),
    ))
}

pub fn check(c: &Constraint, db: &DatabaseInstance) -> Result<ConstraintVerdict> {
    let ev = Evaluator::new(db);
    let (a, b) = c.sides();
    let (f, g) = (ev.eval(a)?, ev.eval(b)?);
    Ok(match c {
        Constraint::Equality(..) => {
            let w = equality_witnesses(&f, &g);
            if w.is_empty() {
                ConstraintVerdict::Satisfied
            } else {
                ConstraintVerdict::EqualityViolated(w)
            }
        }
        Constraint::Refinement(..) => {
            let w = straddling_blocks(&f, &g);
            if w.is_empty() {
                ConstraintVerdict::Satisfied
            } else {
                ConstraintVerdict::RefinementViolated(w)
            }
        }
    })
}

pub fn check_equality(lhs: &Expr, rhs: &Expr, db: &DatabaseInstance) -> Result<ConstraintVerdict> {
    check(&Constraint::equality(lhs.clone(), rhs.clone())?, db)
}

pub fn check_refinement(lhs: &Expr, rhs: &Expr, db: &DatabaseInstance) -> Result<ConstraintVerdict> {
    check(&Constraint::refinement(lhs.clone(), rhs.clone())?, db)
}

fn join(values: &BTreeSet<Value>) -> String {
    values.iter().map(|v| v.to_cell()).collect::<Vec<_>>().join(", ")
}

/// Check every constraint declared in the database's context.
pub fn check_all(db: &DatabaseInstance) -> ValidationReport {
    let ctx = db.context();
    let mut report = ValidationReport::default();
    for decl in ctx.constraints() {
        let text = format!("{} {} {}", decl.lhs, kind_symbol(decl.kind), decl.rhs);
        let verdict = Constraint::from_decl(decl, ctx).and_then(|c| check(&c, db));
        match verdict {
            Err(e) => report.push(Violation::new("invalid-constraint", format!("{text}: {e}"), vec![])),
            Ok(ConstraintVerdict::Satisfied) => {}
            Ok(ConstraintVerdict::EqualityViolated(keys)) => report.push(Violation::new(
                "equality-violated",
                format!("{text} fails on {} key(s)", keys.len()),
                keys.iter().map(Value::to_cell).collect(),
            )),
            Ok(ConstraintVerdict::RefinementViolated(blocks)) => {
                for b in blocks {
                    report.push(Violation::new(
                        "refinement-violated",
                        format!("{text}: block {{{}}} straddles", join(&b.block)),
                        vec![b.keys.0.to_cell(), b.keys.1.to_cell()],
                    ));
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::node::NodeRef;

    fn f(pairs: &[(i64, i64)]) -> FiniteFunction {
        FiniteFunction::from_pairs(
            NodeRef::simple("X"),
            NodeRef::simple("Y"),
            pairs.iter().map(|&(a, b)| (Value::Int(a), Value::Int(b))),
        )
    }

    #[test]
    fn identity_refines_everything() {
        let id = f(&[(1, 1), (2, 2), (3, 3)]);
        let g = f(&[(1, 0), (2, 0), (3, 1)]);
        assert!(refines(&id, &g));
        assert_eq!(refinement_witness(&id, &g).unwrap().map, g.map);
    }

    #[test]
    fn straddling_block_reports_two_keys() {
        let b = f(&[(1, 1), (2, 1), (3, 2)]);
        let q = f(&[(1, 5), (2, 6), (3, 5)]);
        let w = straddling_blocks(&b, &q);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].keys, (Value::Int(1), Value::Int(2)));
        assert!(matches!(refinement_witness(&b, &q), Err(Error::NotRefined { .. })));
    }

    #[test]
    fn self_refinement_witness_is_identity_on_range() {
        let g = f(&[(1, 7), (2, 7), (3, 9)]);
        let h = refinement_witness(&g, &g).unwrap();
        assert!(h.map.iter().all(|(y, z)| y == z));
        assert_eq!(h.domain(), g.range());
    }
}
