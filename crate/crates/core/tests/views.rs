use std::collections::BTreeMap;

use contextdb::views::{Definition, View};
use contextdb::{eval, parse_expression, Context, DatabaseInstance, Error, Value};

fn base() -> DatabaseInstance {
    testkit::supply()
}

fn view1(base: &Context) -> View {
    View::load(testkit::fixture("view1.json"), base).unwrap()
}

#[test]
fn view_edges_unfold_into_base_paths() {
    let db = base();
    let v = view1(db.context());
    let e = parse_expression("e & ep", v.shape()).unwrap();
    let unfolded = v.unfold(&e, db.context()).unwrap();
    assert_eq!(unfolded, parse_expression("(r o b) & (c o p)", db.context()).unwrap());
    assert_eq!(
        v.evaluate(&e, &db).unwrap().map,
        eval(&parse_expression("(r o b) & (c o p)", db.context()).unwrap(), &db).unwrap().map
    );
}

#[test]
fn views_nest() {
    let db = base();
    let v1 = view1(db.context());
    let v2 = View::load(testkit::fixture("view2.json"), v1.shape()).unwrap();
    let w = parse_expression("w", v2.shape()).unwrap();
    let once = v2.unfold(&w, v1.shape()).unwrap();
    let twice = v1.unfold(&once, db.context()).unwrap();
    assert_eq!(twice, parse_expression("r o b", db.context()).unwrap());
}

#[test]
fn materialized_answers_match_unfolding() {
    let db = base();
    let v = view1(db.context());
    assert!(v.is_stale(&db));
    let m = v.materialize(&db).unwrap();
    assert!(!m.is_stale(&db));
    for text in ["e", "ep", "q", "e & ep", "e / [q >= 200]"] {
        let e = parse_expression(text, v.shape()).unwrap();
        assert_eq!(m.evaluate_stored(&e).unwrap().map, v.evaluate(&e, &db).unwrap().map, "{text}");
    }
    let mut changed = db.clone();
    let q = changed.context().resolve_label("q").unwrap().clone();
    changed.function_mut(&q).unwrap().map.insert(Value::Int(1), Value::Int(1));
    assert!(m.is_stale(&changed));
}

#[test]
fn analytic_view_edges_are_answered_from_storage() {
    let db = testkit::inv7();
    let v = View::load(testkit::fixture("view_totals.json"), db.context()).unwrap();
    let e2 = parse_expression("e2", v.shape()).unwrap();
    assert!(matches!(v.unfold(&e2, db.context()), Err(Error::View(_))));
    assert!(matches!(v.evaluate(&e2, &db), Err(Error::View(_))));
    let m = v.materialize(&db).unwrap();
    let totals = m.evaluate(&e2, &db).unwrap();
    assert_eq!(totals.get(&Value::text("Branch-2")), Some(&Value::Int(600)));
    assert_eq!(totals.len(), 3);
}

#[test]
fn definitions_are_checked() {
    let db = base();
    let v1 = view1(db.context());
    let mut defs: BTreeMap<String, String> = v1
        .definitions()
        .iter()
        .map(|(e, d)| {
            let text = match d {
                Definition::Traversal(x) => x.pretty(db.context()),
                Definition::Analytic(q) => q.to_string(),
            };
            (e.label.clone(), text)
        })
        .collect();
    assert!(View::new(v1.shape().clone(), &defs, db.context()).is_ok());
    defs.insert("e".into(), "c o p".into());
    assert!(View::new(v1.shape().clone(), &defs, db.context()).is_err());
    defs.insert("e".into(), "nope".into());
    assert!(View::new(v1.shape().clone(), &defs, db.context()).is_err());
}

#[test]
fn view_files_round_trip() {
    let db = base();
    let v = view1(db.context());
    let again = View::from_json(&v.to_json(), db.context()).unwrap();
    assert_eq!(again.definitions(), v.definitions());
}
