use std::collections::BTreeMap;
use std::sync::Arc;

use contextdb::analytic::{
    combine_answers, evaluate_analytic, rewrite_composition, rewrite_pairing, AggregateOp, AnalyticQuery, Arith,
    Plan, Rhs,
};
use contextdb::instance::values_close;
use contextdb::parser::{parse_analytic, parse_expression};
use contextdb::random::{random_instance, rng, RandomSpec};
use contextdb::{eval, Context, Error, Expr, FiniteFunction, Value};
use rand::Rng;
use testkit::oracle;

fn text(s: &str) -> Value {
    Value::text(s)
}

fn answer_map(f: &FiniteFunction) -> BTreeMap<Value, Value> {
    f.map.clone()
}

#[test]
fn totals_by_branch() {
    let db = testkit::inv7();
    let q = parse_analytic("analytic(b; q; sum)", db.context()).unwrap();
    let ans = evaluate_analytic(&q, &db).unwrap();
    let expected = BTreeMap::from([
        (text("Branch-1"), Value::Int(300)),
        (text("Branch-2"), Value::Int(600)),
        (text("Branch-3"), Value::Int(600)),
    ]);
    assert_eq!(answer_map(&ans.function), expected);
    assert_eq!(ans.value_name, "sum(Qty)");
}

#[test]
fn identity_and_terminal_idioms() {
    let db = testkit::inv7();
    let ctx = db.context();
    let run = |text: &str| evaluate_analytic(&parse_analytic(text, ctx).unwrap(), &db).unwrap().function;
    let q = eval(&parse_expression("q", ctx).unwrap(), &db).unwrap();
    assert_eq!(run("analytic(id(Inv); q; sum)").map, q.map);
    assert_eq!(run("analytic(tau(Inv); id(Inv); count)").map, BTreeMap::from([(Value::Unit, Value::Int(7))]));
    assert_eq!(run("analytic(tau(Inv); q; sum)").map, BTreeMap::from([(Value::Unit, Value::Int(1500))]));
    // Invoices by delivered quantity.
    let by_qty = run("analytic(q; id(Inv); count)");
    assert_eq!(by_qty.get(&Value::Int(100)), Some(&Value::Int(3)));
    assert_eq!(by_qty.get(&Value::Int(200)), Some(&Value::Int(2)));
    assert_eq!(by_qty.get(&Value::Int(400)), Some(&Value::Int(2)));
}

#[test]
fn regions_through_composition() {
    let db = testkit::inv7();
    let q = parse_analytic("analytic(r o b; q; sum)", db.context()).unwrap();
    let direct = evaluate_analytic(&q, &db).unwrap().function;
    let nested = rewrite_composition(&q).unwrap().execute(&db).unwrap();
    let expected = BTreeMap::from([(text("North"), Value::Int(300)), (text("South"), Value::Int(1200))]);
    assert_eq!(direct.map, expected);
    assert_eq!(nested.map, expected);
}

#[test]
fn plans_print_as_nested_triples() {
    let db = testkit::inv7();
    let q = parse_analytic("analytic(r o b; q; sum)", db.context()).unwrap();
    assert_eq!(rewrite_composition(&q).unwrap().to_string(), "(r, (b, q, sum), sum)");
    let c = parse_analytic("analytic(r o b; id(Inv); count)", db.context()).unwrap();
    assert_eq!(rewrite_composition(&c).unwrap().to_string(), "(r, (b, id(Inv), count), sum)");
}

#[test]
fn avg_refuses_nesting_and_the_literal_counterexample_holds() {
    let db = testkit::inv7();
    let q = parse_analytic("analytic(r o b; q; avg)", db.context()).unwrap();
    assert!(matches!(rewrite_composition(&q), Err(Error::NotAssociative(_))));
    let ints: Vec<Value> = (1..=5).map(Value::Int).collect();
    assert_eq!(AggregateOp::Avg.apply(&ints).unwrap(), Value::Float(3.0));
    let parts = [
        AggregateOp::Avg.apply(&ints[..2]).unwrap(),
        AggregateOp::Avg.apply(&ints[2..]).unwrap(),
    ];
    assert_eq!(AggregateOp::Avg.apply(&parts).unwrap(), Value::Float(2.75));
}

#[test]
fn sum_of_branches_is_not_well_formed() {
    let db = testkit::inv7();
    let err = parse_analytic("analytic(q; b; sum)", db.context()).unwrap_err();
    assert!(matches!(err, Error::OpNotApplicable { .. }), "{err:?}");
    let q = parse_analytic("analytic(q; b; count)", db.context()).unwrap();
    assert_eq!(evaluate_analytic(&q, &db).unwrap().len(), 3);
}

#[test]
fn grouping_and_measuring_must_share_a_key() {
    let db = testkit::inv7();
    let err = parse_analytic("analytic(r; q; sum)", db.context()).unwrap_err();
    assert!(matches!(err, Error::KeyMismatch { .. }), "{err:?}");
}

#[test]
fn percentages_divide_by_the_total() {
    let db = testkit::inv7();
    let ctx = db.context();
    let by_branch = evaluate_analytic(&parse_analytic("analytic(b; q; sum)", ctx).unwrap(), &db).unwrap();
    let total = evaluate_analytic(&parse_analytic("analytic(tau(Inv); q; sum)", ctx).unwrap(), &db).unwrap();
    let share = combine_answers(&by_branch, Rhs::Answer(&total), Arith::Divide).unwrap();
    assert_eq!(share.get(&text("Branch-1")), Some(&Value::Float(0.2)));
    assert_eq!(share.get(&text("Branch-2")), Some(&Value::Float(0.4)));
    let pct = combine_answers(&share, Rhs::Scalar(Value::Int(100)), Arith::Multiply).unwrap();
    assert!(values_close(pct.get(&text("Branch-3")).unwrap(), &Value::Float(40.0), 1e-9));
}

#[test]
fn answer_restrictions() {
    let db = testkit::inv7();
    let ctx = db.context();
    let run = |text: &str| evaluate_analytic(&parse_analytic(text, ctx).unwrap(), &db).unwrap().function;
    let small = run("analytic(b; q; sum) / [ans <= 300]");
    assert_eq!(small.domain().into_iter().collect::<Vec<_>>(), vec![text("Branch-1")]);
    let above_avg = run("analytic(b; q; sum) / [ans > avg(ans)]");
    assert_eq!(above_avg.len(), 2);
    let picked = run(r#"analytic(b; q; sum) / {"Branch-2", "Branch-3"}"#);
    assert_eq!(picked.len(), 2);
    assert!(parse_analytic(r#"analytic(b; q; sum) / [ans <= "x"]"#, ctx).is_err());
}

#[test]
fn node_restrictions_filter_groups() {
    let db = testkit::inv7();
    let q = parse_analytic(r#"analytic(b / [d >= "2023-01-05"]; q; sum)"#, db.context()).unwrap();
    let ans = evaluate_analytic(&q, &db).unwrap().function;
    let expected = BTreeMap::from([(text("Branch-2"), Value::Int(400)), (text("Branch-3"), Value::Int(600))]);
    assert_eq!(ans.map, expected);
}

#[test]
fn parallel_groupings_must_agree() {
    let ctx = testkit::load_ctx("supply.ctx");
    let bad = testkit::load_db(&ctx, "supply_inconsistent.db");
    let q = parse_analytic("analytic(r o b & h o s o p; q; sum)", &ctx).unwrap();
    assert!(matches!(evaluate_analytic(&q, &bad), Err(Error::NotTreeQuery { .. })));
    let good = testkit::load_db(&ctx, "supply_consistent.db");
    assert_eq!(evaluate_analytic(&q, &good).unwrap().len(), 2);
}

fn chain_context() -> Arc<Context> {
    testkit::chain_context()
}

fn assert_same(direct: &FiniteFunction, other: &FiniteFunction, what: &str) {
    assert_eq!(direct.domain(), other.domain(), "{what}");
    for (k, v) in &direct.map {
        let w = &other.map[k];
        match (v, w) {
            (Value::Float(_), _) | (_, Value::Float(_)) => assert!(values_close(v, w, 1e-9), "{what}: {v} vs {w}"),
            _ => assert_eq!(v, w, "{what}"),
        }
    }
}

#[test]
fn composition_rule_on_random_databases() {
    let ctx = chain_context();
    let labels = ["g1", "g2", "g3", "g4"];
    for seed in 0..120u64 {
        let mut r = rng(seed);
        let db = random_instance(ctx.clone(), &mut r, RandomSpec::default());
        let depth = r.random_range(1..=4);
        let g = parse_expression(&labels[..depth].iter().rev().cloned().collect::<Vec<_>>().join(" o "), &ctx).unwrap();
        for op in [AggregateOp::Sum, AggregateOp::Count, AggregateOp::Min, AggregateOp::Max] {
            for measure in ["m", "f"] {
                let m = parse_expression(measure, &ctx).unwrap();
                let q = AnalyticQuery::from_exprs(&ctx, g.clone(), m.clone(), op).unwrap();
                let direct = evaluate_analytic(&q, &db).unwrap().function;
                let nested = rewrite_composition(&q).unwrap().execute(&db).unwrap();
                assert_same(&direct, &nested, &format!("seed {seed}, {q}"));
                let gm = eval(&g, &db).unwrap();
                let mm = eval(&m, &db).unwrap();
                let brute = oracle::group_aggregate(&gm.map, &mm.map, op.name());
                assert_same(&direct, &FiniteFunction { map: brute, ..direct.clone() }, &format!("oracle {q}"));
            }
        }
    }
}

#[test]
fn pairing_rule_on_random_databases() {
    let ctx = chain_context();
    for seed in 0..120u64 {
        let mut r = rng(1000 + seed);
        let db = random_instance(ctx.clone(), &mut r, RandomSpec::default());
        let first = ["g1", "g2 o g1", "g3 o g2 o g1"][r.random_range(0..3)];
        let g = parse_expression(&format!("{first} & k2"), &ctx).unwrap();
        for op in [AggregateOp::Sum, AggregateOp::Count, AggregateOp::Min, AggregateOp::Max] {
            for measure in ["m", "f"] {
                let m = parse_expression(measure, &ctx).unwrap();
                let paired = AnalyticQuery::from_exprs(&ctx, g.clone(), m.clone(), op).unwrap();
                for i in 0..2 {
                    let gi = paired.grouping.exprs[i].clone();
                    let single = AnalyticQuery::from_exprs(&ctx, gi, m.clone(), op).unwrap();
                    let direct = evaluate_analytic(&single, &db).unwrap().function;
                    let plan = rewrite_pairing(i, &paired).unwrap();
                    assert!(matches!(plan, Plan::Nested { .. }));
                    let rolled = plan.execute(&db).unwrap();
                    assert_same(&direct, &rolled, &format!("seed {seed}, component {i} of {paired}"));
                }
            }
        }
    }
}

#[test]
fn pairing_rule_refuses_distinct_counts() {
    let ctx = chain_context();
    let g = parse_expression("g1 & k2", &ctx).unwrap();
    let m = parse_expression("m", &ctx).unwrap();
    let q = AnalyticQuery::from_exprs(&ctx, g, m, AggregateOp::CountD).unwrap();
    assert!(matches!(rewrite_pairing(0, &q), Err(Error::NotAssociative(_))));
}

#[test]
fn mass_is_conserved_across_groupings() {
    let ctx = chain_context();
    for seed in 0..50u64 {
        let db = random_instance(ctx.clone(), &mut rng(seed), RandomSpec::default());
        let total = evaluate_analytic(&parse_analytic("analytic(tau(K); m; sum)", &ctx).unwrap(), &db)
            .unwrap()
            .function
            .map[&Value::Unit]
            .clone();
        for g in ["g1", "g2 o g1", "k2", "g1 & k2"] {
            let q = parse_analytic(&format!("analytic({g}; m; sum)"), &ctx).unwrap();
            let ans = evaluate_analytic(&q, &db).unwrap().function;
            let sum: i64 = ans.map.values().map(|v| if let Value::Int(i) = v { *i } else { 0 }).sum();
            assert_eq!(Value::Int(sum), total, "seed {seed}, grouping {g}");
        }
    }
}

#[test]
fn identity_grouping_returns_the_measure() {
    let ctx = chain_context();
    for seed in 0..30u64 {
        let db = random_instance(ctx.clone(), &mut rng(seed), RandomSpec::default());
        let m = eval(&Expr::edge(&ctx, "f").unwrap(), &db).unwrap();
        let q = parse_analytic("analytic(id(K); f; sum)", &ctx).unwrap();
        assert_eq!(evaluate_analytic(&q, &db).unwrap().function.map, m.map);
    }
}
