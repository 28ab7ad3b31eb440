use std::collections::BTreeSet;
use std::sync::Arc;

use contextdb::bridge::{emit_sql, export_database, ingest_relation, BackingMap, RelationalViewDef};
use contextdb::io::read_relation_csv;
use contextdb::parser::{parse_analytic, parse_traversal};
use contextdb::random::{random_instance, rng, RandomSpec};
use contextdb::traversal::{induced_relation, RelationMode};
use contextdb::{evaluate_analytic, AnalyticAnswer, DatabaseInstance, Error, Value};
use testkit::{gen, oracle, sql};

fn invoices() -> contextdb::Relation {
    let ctx = testkit::load_ctx("inv.ctx");
    read_relation_csv(&ctx, "R", testkit::read_fixture("invoices.csv").as_bytes()).unwrap()
}

#[test]
fn invoice_relation_round_trips_through_edge_functions() {
    let ctx = testkit::load_ctx("inv.ctx");
    let rel = invoices();
    assert_eq!(rel.rows.len(), 7);
    let mut db = DatabaseInstance::new(ctx.clone());
    ingest_relation(&mut db, &rel, &[("Date", "d"), ("Branch", "b"), ("Prod", "p"), ("Qty", "q")]).unwrap();
    let q = parse_traversal("Q(Inv; d; b; p; q)", &ctx).unwrap();
    let back = induced_relation(&q, &db, RelationMode::Alias).unwrap();
    assert_eq!(back.row_set(), rel.row_set());
    // Same data as the stored fixture.
    let stored = testkit::inv7();
    let again = induced_relation(&q, &stored, RelationMode::Alias).unwrap();
    assert_eq!(again.row_set(), rel.row_set());
}

#[test]
fn conflicting_duplicate_keys_are_rejected() {
    let ctx = testkit::load_ctx("inv.ctx");
    let mut rel = invoices();
    let mut dup = rel.rows[0].clone();
    rel.rows.push(dup.clone());
    let mut db = DatabaseInstance::new(ctx.clone());
    ingest_relation(&mut db, &rel, &[("Qty", "q")]).unwrap();
    dup[4] = Value::Int(999);
    rel.rows.push(dup);
    let err = ingest_relation(&mut db, &rel, &[("Qty", "q")]).unwrap_err();
    assert!(matches!(err, Error::KeyViolation { key: Value::Int(1), .. }), "{err:?}");
}

#[test]
fn bindings_must_match_edge_signatures() {
    let ctx = testkit::load_ctx("inv.ctx");
    let mut db = DatabaseInstance::new(ctx);
    assert!(ingest_relation(&mut db, &invoices(), &[("Qty", "b")]).is_err());
    assert!(ingest_relation(&mut db, &invoices(), &[("Nope", "q")]).is_err());
}

#[test]
fn induced_relations_satisfy_the_key_dependency() {
    let ctx = testkit::load_ctx("supply.ctx");
    let key = contextdb::NodeRef::simple("Inv");
    let mut checked = 0;
    for seed in 0..150u64 {
        let db = random_instance(ctx.clone(), &mut rng(seed), RandomSpec { max_size: 6, value_range: 8 });
        let mut r = rng(seed + 77);
        let n = 1 + seed as usize % 3;
        let exprs: Vec<_> = (0..n).map(|_| gen::random_expr(&db, &mut r, &key, 2)).collect();
        let q = contextdb::TraversalQuery::new(key.clone(), exprs).unwrap();
        let rel = match induced_relation(&q, &db, RelationMode::Alias) {
            Ok(rel) => rel,
            Err(Error::ProductTooLarge { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        assert!(oracle::key_fd_holds(&rel.rows), "seed {seed}");
        assert!(rel.key_dependency_violations().is_empty());
        let keys: BTreeSet<&Value> = rel.keys().into_iter().collect();
        assert_eq!(keys.len(), rel.rows.len());
        checked += 1;
    }
    assert!(checked >= 100);
}

#[test]
fn equality_mode_collapses_or_reports() {
    let ctx = testkit::load_ctx("supply.ctx");
    let good = testkit::load_db(&ctx, "supply_consistent.db");
    let q = parse_traversal("Q(Inv; r o b; h o s o p)", &ctx).unwrap();
    let rel = induced_relation(&q, &good, RelationMode::RequireEqualities).unwrap();
    assert_eq!(rel.schema.columns.len(), 1);
    let alias = induced_relation(&q, &good, RelationMode::Alias).unwrap();
    assert_eq!(alias.schema.columns.len(), 2);
    let names: BTreeSet<&str> = alias.schema.column_names().into_iter().collect();
    assert_eq!(names.len(), 3, "column names stay unique");
    let bad = testkit::load_db(&ctx, "supply_inconsistent.db");
    match induced_relation(&q, &bad, RelationMode::RequireEqualities) {
        Err(Error::EqualityViolation { witnesses, .. }) => assert_eq!(witnesses, vec![Value::Int(3)]),
        other => panic!("expected a violation, got {other:?}"),
    }
}

#[test]
fn export_follows_the_definitions() {
    let db = testkit::supply();
    let defs = RelationalViewDef::load(testkit::fixture("viewdefs.json")).unwrap();
    let rels = export_database(&defs, &db).unwrap();
    let names: Vec<&str> = rels.iter().map(|r| r.schema.name.as_str()).collect();
    assert_eq!(names, ["R", "R2", "QA", "QB"]);
    assert_eq!(rels[0].row_set(), invoices().row_set());
    assert_eq!(rels[2].row_set(), rels[3].row_set());
    assert_eq!(rels[1].rows.len(), 2);
}

fn answer_rows(ans: &AnalyticAnswer) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = ans
        .function
        .map
        .iter()
        .map(|(k, v)| {
            let mut row = match k {
                Value::Unit => vec![],
                Value::Tuple(parts) => parts.iter().map(Value::to_cell).collect(),
                other => vec![other.to_cell()],
            };
            row.push(match v {
                Value::Float(x) => format!("{x:?}"),
                other => other.to_cell(),
            });
            row
        })
        .collect();
    rows.sort();
    rows
}

fn star_check(query: &str) -> String {
    let db = testkit::inv7();
    let ctx: Arc<_> = db.context_arc();
    let backing = BackingMap::load(testkit::fixture("star/backing.json")).unwrap();
    let tables = sql::load_tables(&testkit::fixture("star"));
    let q = parse_analytic(query, &ctx).unwrap();
    let text = emit_sql(&q, &backing, &ctx).unwrap();
    let engine = answer_rows(&evaluate_analytic(&q, &db).unwrap());
    assert_eq!(sql::execute(&text, &tables), engine, "{text}");
    text
}

#[test]
fn emitted_sql_matches_golden_files() {
    assert_eq!(star_check("analytic(b; q; sum)"), testkit::read_fixture("golden/b_q_sum.sql"));
    assert_eq!(star_check("analytic(r o b; q; sum)"), testkit::read_fixture("golden/rb_q_sum.sql"));
}

#[test]
fn emitted_sql_agrees_with_the_engine() {
    for q in [
        "analytic(b; q; count)",
        "analytic(b; q; max)",
        "analytic(p; q; min)",
        "analytic(tau(Inv); q; sum)",
        "analytic(b & p; q; sum)",
        "analytic(r o b; id(Inv); countd)",
        "analytic(b / [q >= 200]; q; sum)",
        r#"analytic(r o b; q; sum) / [ans > 500]"#,
        r#"analytic(b / [r o b in {"South"}]; q; avg)"#,
    ] {
        star_check(q);
    }
}

#[test]
fn unbacked_edges_cannot_be_emitted() {
    let ctx = testkit::load_ctx("inv.ctx");
    let q = parse_analytic("analytic(b; q; sum)", &ctx).unwrap();
    let err = emit_sql(&q, &BackingMap::default(), &ctx).unwrap_err();
    assert!(matches!(err, Error::UnbackedEdge(_)), "{err:?}");
}
