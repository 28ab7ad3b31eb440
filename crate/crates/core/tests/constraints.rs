use std::collections::BTreeMap;
use std::sync::Arc;

use contextdb::constraint::{check, check_all, refinement_witness, refines, straddling_blocks, Constraint, ConstraintVerdict};
use contextdb::random::{random_instance, rng, RandomSpec};
use contextdb::{eval, parse_expression, BaseType, Context, Error, FiniteFunction, NodeRef, Value};
use rand::Rng;
use testkit::oracle;

/// `f: K -> Y`, `g: K -> Z`, `h: Y -> Z`.
fn triangle() -> Arc<Context> {
    Arc::new(
        Context::new()
            .with_attribute("K", BaseType::Integer)
            .with_attribute("Y", BaseType::Text)
            .with_attribute("Z", BaseType::Integer)
            .with_edge("K", "f", "Y")
            .with_edge("K", "g", "Z")
            .with_edge("Y", "h", "Z"),
    )
}

#[test]
fn refinement_witness_matches_exhaustive_search() {
    let ctx = triangle();
    let (mut refining, mut not) = (0, 0);
    for seed in 0..300u64 {
        let mut r = rng(seed);
        let spec = RandomSpec { max_size: 12, value_range: 6 };
        let mut db = random_instance(ctx.clone(), &mut r, spec);
        let f_edge = ctx.resolve_label("f").unwrap().clone();
        let g_edge = ctx.resolve_label("g").unwrap().clone();
        if r.random_bool(0.5) {
            // Make g factor through f.
            let hf = eval(&parse_expression("h o f", &ctx).unwrap(), &db).unwrap();
            db.set_function(&g_edge, hf.map);
        }
        let f = db.function(&f_edge).unwrap().clone();
        let g = db.function(&g_edge).unwrap().clone();
        assert!(f.len() <= 12);
        let brute = oracle::refinement_exists(&f.map, &g.map);
        assert_eq!(refines(&f, &g), brute.is_some(), "seed {seed}");
        match refinement_witness(&f, &g) {
            Ok(h) => {
                refining += 1;
                assert_eq!(oracle::compose(&h.map, &f.map), g.map, "seed {seed}");
                assert_eq!(h.domain(), f.range());
                // Any change to h on the range of f breaks h o f = g.
                let zs = db.extent(&NodeRef::simple("Z"), 64).unwrap();
                let (y, z) = h.map.iter().next().unwrap();
                if let Some(other) = zs.iter().find(|v| *v != z) {
                    let mut bent = h.map.clone();
                    bent.insert(y.clone(), other.clone());
                    assert_ne!(oracle::compose(&bent, &f.map), g.map);
                }
            }
            Err(Error::NotRefined { .. }) => {
                not += 1;
                assert!(!straddling_blocks(&f, &g).is_empty());
            }
            Err(e) => panic!("{e}"),
        }
    }
    assert!(refining >= 100 && not >= 50, "{refining} refining, {not} not");
}

#[test]
fn every_straddling_block_is_reported() {
    let db = testkit::inv7();
    let ctx = db.context();
    let c = Constraint::refinement(parse_expression("b", ctx).unwrap(), parse_expression("q", ctx).unwrap()).unwrap();
    let ConstraintVerdict::RefinementViolated(blocks) = check(&c, &db).unwrap() else { panic!("b does not refine q") };
    assert_eq!(blocks.len(), 3);
    for w in &blocks {
        assert!(w.block.contains(&w.keys.0) && w.block.contains(&w.keys.1));
    }
    let c = Constraint::refinement(parse_expression("id(Inv)", ctx).unwrap(), parse_expression("r o b", ctx).unwrap()).unwrap();
    assert!(check(&c, &db).unwrap().is_satisfied());
}

#[test]
fn branches_refine_regions_with_r_as_witness() {
    let db = testkit::inv7();
    let ctx = db.context();
    let b = eval(&parse_expression("b", ctx).unwrap(), &db).unwrap();
    let rb = eval(&parse_expression("r o b", ctx).unwrap(), &db).unwrap();
    let h = refinement_witness(&b, &rb).unwrap();
    let r = eval(&parse_expression("r", ctx).unwrap(), &db).unwrap();
    assert_eq!(h.map, r.map);
}

#[test]
fn declared_equalities_on_fixtures() {
    let ctx = testkit::load_ctx("emp.ctx");
    assert!(check_all(&testkit::load_db(&ctx, "emp_ok.db")).is_empty());
    let bad = check_all(&testkit::load_db(&ctx, "emp_bad.db"));
    let v: Vec<_> = bad.with_code("equality-violated").collect();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].elements, vec!["e2".to_string()]);

    let ctx = testkit::load_ctx("supply.ctx");
    assert!(check_all(&testkit::load_db(&ctx, "supply_consistent.db")).is_empty());
    let bad = check_all(&testkit::load_db(&ctx, "supply_inconsistent.db"));
    assert_eq!(bad.with_code("equality-violated").next().unwrap().elements, vec!["3".to_string()]);
}

#[test]
fn sides_must_be_parallel() {
    let ctx = testkit::load_ctx("inv.ctx");
    let err = Constraint::equality(parse_expression("b", &ctx).unwrap(), parse_expression("q", &ctx).unwrap());
    assert!(err.is_err());
    let err = Constraint::refinement(parse_expression("r", &ctx).unwrap(), parse_expression("q", &ctx).unwrap());
    assert!(matches!(err, Err(Error::KeyMismatch { .. }) | Err(Error::Type { .. })));
}

#[test]
fn refinement_ignores_keys_outside_the_common_carrier() {
    let k = NodeRef::simple("K");
    let f = FiniteFunction::from_pairs(k.clone(), NodeRef::simple("Y"), [(Value::Int(1), Value::text("a")), (Value::Int(2), Value::text("a"))]);
    let g = FiniteFunction::from_pairs(k, NodeRef::simple("Z"), [(Value::Int(1), Value::Int(5)), (Value::Int(3), Value::Int(6))]);
    let h = refinement_witness(&f, &g).unwrap();
    assert_eq!(h.map, BTreeMap::from([(Value::text("a"), Value::Int(5))]));
}
