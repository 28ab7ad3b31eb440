use std::collections::BTreeSet;

use contextdb::io::{context_from_str, context_to_string, database_from_str, database_to_string, snapshot_id};
use contextdb::random::rng;
use contextdb::{BaseType, Context, NodeRef};
use rand::Rng;
use testkit::oracle;

#[test]
fn fixtures_validate() {
    for name in ["inv.ctx", "supply.ctx", "emp.ctx"] {
        let ctx = testkit::load_ctx(name);
        assert!(ctx.validate().is_empty(), "{name}: {:?}", ctx.validate());
    }
    for (ctx, db) in [("inv.ctx", "inv7.db"), ("supply.ctx", "supply_consistent.db"), ("emp.ctx", "emp_ok.db")] {
        let c = testkit::load_ctx(ctx);
        let report = testkit::load_db(&c, db).validate();
        assert!(report.is_empty(), "{db}: {report:?}");
    }
}

#[test]
fn invoices_are_the_root() {
    assert_eq!(testkit::load_ctx("inv.ctx").root(), Some(NodeRef::simple("Inv")));
    assert_eq!(testkit::load_ctx("supply.ctx").root(), Some(NodeRef::simple("Inv")));
}

#[test]
fn files_round_trip() {
    let ctx = testkit::load_ctx("supply.ctx");
    let text = context_to_string(&ctx);
    let again = context_from_str(&text).unwrap();
    assert_eq!(context_to_string(&again), text);
    let db = testkit::supply();
    let text = database_to_string(&db);
    let again = database_from_str(db.context_arc(), &text).unwrap();
    assert_eq!(database_to_string(&again), text);
    assert_eq!(snapshot_id(&again), snapshot_id(&db));
}

#[test]
fn cycles_are_detected_like_warshall() {
    for seed in 0..80u64 {
        let mut r = rng(seed);
        let n = 2 + r.random_range(0..5);
        let names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
        let mut ctx = Context::new();
        for nm in &names {
            ctx = ctx.with_attribute(nm, BaseType::Integer);
        }
        let mut edges = vec![];
        for (k, (i, j)) in (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).enumerate() {
            if i != j && r.random_bool(0.25) {
                ctx = ctx.with_edge(&names[i], &format!("e{k}"), &names[j]);
                edges.push((names[i].clone(), names[j].clone()));
            }
        }
        let mut ours: Vec<BTreeSet<String>> = ctx
            .cycle_classes()
            .into_iter()
            .map(|c| c.into_iter().map(|n| n.to_string()).collect())
            .collect();
        ours.sort();
        assert_eq!(ours, oracle::cycle_classes(&names, &edges), "seed {seed}");
        let flat = ctx.coalesce_cycles();
        assert!(flat.cycle_classes().is_empty());
        assert_eq!(flat.validate().with_code("cycle").count(), 0);
        assert_eq!(ctx.validate().with_code("cycle").count() > 0, !ours.is_empty());
    }
}

#[test]
fn malformed_contexts_are_reported() {
    let ctx = Context::new()
        .with_attribute("A", BaseType::Integer)
        .with_attribute("A", BaseType::Text)
        .with_attribute("B", BaseType::Integer)
        .with_edge("A", "f", "Missing");
    let report = ctx.validate();
    assert!(report.with_code("duplicate-attribute").count() == 1);
    assert!(report.with_code("unknown-attribute").count() >= 1);
}
