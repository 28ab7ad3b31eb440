//! Brute-force reference computations over plain maps.

use std::collections::{BTreeMap, BTreeSet};

use contextdb::Value;

pub type Map = BTreeMap<Value, Value>;

/// Nontrivial mutual-reachability classes, from the Warshall closure of
/// the edge relation.
pub fn cycle_classes(nodes: &[String], edges: &[(String, String)]) -> Vec<BTreeSet<String>> {
    let n = nodes.len();
    let idx = |s: &str| nodes.iter().position(|m| m == s).expect("edge endpoint is a node");
    let mut reach = vec![vec![false; n]; n];
    for (a, b) in edges {
        reach[idx(a)][idx(b)] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut classes: Vec<BTreeSet<String>> = vec![];
    for i in 0..n {
        if !reach[i][i] {
            continue;
        }
        let class: BTreeSet<String> = (0..n)
            .filter(|&j| i == j || (reach[i][j] && reach[j][i]))
            .map(|j| nodes[j].clone())
            .collect();
        if !classes.contains(&class) {
            classes.push(class);
        }
    }
    classes.sort();
    classes
}

/// Every pair of rows agreeing on the key (first cell) agrees everywhere.
pub fn key_fd_holds(rows: &[Vec<Value>]) -> bool {
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            if a[0] == b[0] && a != b {
                return false;
            }
        }
    }
    true
}

fn to_f64(v: &Value) -> f64 {
    match v {
        Value::Int(i) => *i as f64,
        Value::Float(x) => *x,
        other => panic!("not numeric: {other:?}"),
    }
}

/// Aggregate a multiset listed in key order.
pub fn aggregate(values: &[Value], op: &str) -> Value {
    let ints = values.iter().all(|v| matches!(v, Value::Int(_)));
    match op {
        "count" => Value::Int(values.len() as i64),
        "countd" => {
            let mut seen: Vec<&Value> = vec![];
            for v in values {
                if !seen.contains(&v) {
                    seen.push(v);
                }
            }
            Value::Int(seen.len() as i64)
        }
        "sum" if ints => Value::Int(values.iter().map(|v| to_f64(v) as i128).sum::<i128>() as i64),
        "sum" => Value::Float(values.iter().map(to_f64).fold(0.0, |a, b| a + b)),
        "avg" => Value::Float(values.iter().map(to_f64).fold(0.0, |a, b| a + b) / values.len() as f64),
        "min" | "max" => {
            let mut best = values[0].clone();
            for v in &values[1..] {
                let better = if ints || values.iter().all(|v| matches!(v, Value::Float(_))) {
                    let (x, y) = (to_f64(v), to_f64(&best));
                    if op == "min" { x < y } else { x > y }
                } else if op == "min" {
                    *v < best
                } else {
                    *v > best
                };
                if better {
                    best = v.clone();
                }
            }
            best
        }
        other => panic!("unknown aggregate {other}"),
    }
}

/// `i -> op({m(x) : g(x) = i})`, scanning all keys for every group.
pub fn group_aggregate(g: &Map, m: &Map, op: &str) -> Map {
    let groups: BTreeSet<&Value> = g.iter().filter(|(x, _)| m.contains_key(*x)).map(|(_, i)| i).collect();
    let mut out = Map::new();
    for i in groups {
        let block: Vec<Value> = g
            .iter()
            .filter(|(x, gi)| *gi == i && m.contains_key(*x))
            .map(|(x, _)| m[x].clone())
            .collect();
        out.insert(i.clone(), aggregate(&block, op));
    }
    out
}

/// `outer ∘ inner` on the keys where both are defined.
pub fn compose(outer: &Map, inner: &Map) -> Map {
    inner
        .iter()
        .filter_map(|(x, y)| outer.get(y).map(|z| (x.clone(), z.clone())))
        .collect()
}

/// Search for `h` with `h(f(x)) = g(x)` on the common keys, trying every
/// candidate image for each value of `f` in turn.
pub fn refinement_exists(f: &Map, g: &Map) -> Option<Map> {
    let keys: Vec<&Value> = f.keys().filter(|x| g.contains_key(*x)).collect();
    let ys: Vec<Value> = keys.iter().map(|x| f[*x].clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let zs: Vec<Value> = keys.iter().map(|x| g[*x].clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut h = Map::new();
    fn search(i: usize, ys: &[Value], zs: &[Value], keys: &[&Value], f: &Map, g: &Map, h: &mut Map) -> bool {
        if i == ys.len() {
            return keys.iter().all(|x| h.get(&f[*x]) == Some(&g[*x]));
        }
        for z in zs {
            h.insert(ys[i].clone(), z.clone());
            let consistent = keys.iter().filter(|x| f[**x] == ys[i]).all(|x| g[*x] == *z);
            if consistent && search(i + 1, ys, zs, keys, f, g, h) {
                return true;
            }
        }
        h.remove(&ys[i]);
        false
    }
    search(0, &ys, &zs, &keys, f, g, &mut h).then_some(h)
}

/// Simple directed paths of 1..=max_len edges, as label sequences listed
/// outermost edge first. Edges are (source, label, target).
pub fn simple_paths(edges: &[(String, String, String)], from: &str, to: &str, max_len: usize) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<(String, Vec<String>, Vec<String>)> = vec![(from.to_string(), vec![from.to_string()], vec![])];
    while let Some((at, visited, labels)) = stack.pop() {
        if labels.len() == max_len {
            continue;
        }
        for (s, l, t) in edges.iter().filter(|(s, _, _)| *s == at) {
            let _ = s;
            let mut next = labels.clone();
            next.push(l.clone());
            if t == to {
                out.insert(next.iter().rev().cloned().collect());
            }
            if !visited.contains(t) {
                let mut v = visited.clone();
                v.push(t.clone());
                stack.push((t.clone(), v, next));
            }
        }
    }
    out
}

/// Nodes with a path of at least one edge to every target.
pub fn reaching_all(nodes: &[String], edges: &[(String, String, String)], targets: &[&str]) -> BTreeSet<String> {
    nodes
        .iter()
        .filter(|n| targets.iter().all(|t| !simple_paths(edges, n, t, nodes.len()).is_empty()))
        .cloned()
        .collect()
}

/// Rows `(x, f1(x), ..., fn(x))` for keys where every function is defined.
pub fn pair_rows(fs: &[&Map]) -> BTreeSet<Vec<Value>> {
    let Some(first) = fs.first() else {
        return BTreeSet::new();
    };
    first
        .keys()
        .filter(|x| fs.iter().all(|f| f.contains_key(*x)))
        .map(|x| std::iter::once(x.clone()).chain(fs.iter().map(|f| f[x].clone())).collect())
        .collect()
}
