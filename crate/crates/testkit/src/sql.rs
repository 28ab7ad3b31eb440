//! A nested-loop executor for the SELECT ... GROUP BY subset the engine
//! emits, over CSV tables. Cells are strings; numbers are parsed on use.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn load_tables(dir: &Path) -> BTreeMap<String, Table> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("table directory") {
        let path = entry.expect("dir entry").path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let name = path.file_stem().unwrap().to_string_lossy().to_string();
        let mut rd = csv::Reader::from_path(&path).expect("csv file");
        let columns = rd.headers().expect("header").iter().map(String::from).collect();
        let rows = rd
            .records()
            .map(|r| r.expect("csv record").iter().map(String::from).collect())
            .collect();
        out.insert(name, Table { columns, rows });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Num(String),
    Sym(String),
}

fn lex(sql: &str) -> Vec<Tok> {
    let cs: Vec<char> = sql.chars().collect();
    let mut out = vec![];
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '\'' {
            let mut s = String::new();
            i += 1;
            loop {
                if cs[i] == '\'' && cs.get(i + 1) == Some(&'\'') {
                    s.push('\'');
                    i += 2;
                } else if cs[i] == '\'' {
                    i += 1;
                    break;
                } else {
                    s.push(cs[i]);
                    i += 1;
                }
            }
            out.push(Tok::Str(s));
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            while cs[i] != '"' {
                s.push(cs[i]);
                i += 1;
            }
            i += 1;
            out.push(Tok::Word(s));
        } else if c.is_ascii_digit() || (c == '-' && cs.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            i += 1;
            while i < cs.len() && (cs[i].is_ascii_digit() || cs[i] == '.') {
                i += 1;
            }
            out.push(Tok::Num(cs[start..i].iter().collect()));
        } else if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Word(cs[start..i].iter().collect()));
        } else {
            let two: String = cs[i..(i + 2).min(cs.len())].iter().collect();
            if ["<=", ">=", "<>"].contains(&two.as_str()) {
                out.push(Tok::Sym(two));
                i += 2;
            } else {
                out.push(Tok::Sym(c.to_string()));
                i += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
enum Operand {
    Col(String),
    Lit(String),
}

#[derive(Debug, Clone)]
enum Cond {
    Cmp(Operand, String, Operand),
    In(Operand, Vec<String>),
}

#[derive(Debug, Clone)]
enum Item {
    Col(String),
    Agg { func: String, distinct: bool, col: String },
}

struct P {
    toks: Vec<Tok>,
    i: usize,
}

impl P {
    fn peek_word(&self, w: &str) -> bool {
        matches!(self.toks.get(self.i), Some(Tok::Word(x)) if x.eq_ignore_ascii_case(w))
    }
    fn word(&mut self) -> String {
        match self.toks.get(self.i).cloned() {
            Some(Tok::Word(w)) => {
                self.i += 1;
                w
            }
            t => panic!("expected a word at {}, found {t:?}", self.i),
        }
    }
    fn expect_word(&mut self, w: &str) {
        let got = self.word();
        assert!(got.eq_ignore_ascii_case(w), "expected {w}, found {got}");
    }
    fn sym(&mut self) -> String {
        match self.toks.get(self.i).cloned() {
            Some(Tok::Sym(s)) => {
                self.i += 1;
                s
            }
            t => panic!("expected a symbol, found {t:?}"),
        }
    }
    fn peek_sym(&self, s: &str) -> bool {
        matches!(self.toks.get(self.i), Some(Tok::Sym(x)) if x == s)
    }
    fn column(&mut self) -> String {
        let a = self.word();
        assert_eq!(self.sym(), ".");
        format!("{a}.{}", self.word())
    }
    fn operand(&mut self) -> Operand {
        match self.toks.get(self.i).cloned() {
            Some(Tok::Str(s)) | Some(Tok::Num(s)) => {
                self.i += 1;
                Operand::Lit(s)
            }
            Some(Tok::Word(w)) if w == "DATE" => {
                self.i += 1;
                match self.operand() {
                    Operand::Lit(s) => Operand::Lit(s),
                    Operand::Col(_) => panic!("DATE literal"),
                }
            }
            _ => Operand::Col(self.column()),
        }
    }
    fn item(&mut self) -> Item {
        let upper = |s: &str| s.to_ascii_uppercase();
        if let Some(Tok::Word(w)) = self.toks.get(self.i) {
            let w = upper(w);
            if ["SUM", "MIN", "MAX", "COUNT", "AVG"].contains(&w.as_str()) && self.toks.get(self.i + 1) == Some(&Tok::Sym("(".into())) {
                self.i += 2;
                let distinct = self.peek_word("DISTINCT");
                if distinct {
                    self.i += 1;
                }
                let col = self.column();
                assert_eq!(self.sym(), ")");
                return Item::Agg { func: w, distinct, col };
            }
        }
        Item::Col(self.column())
    }
    fn conds(&mut self, agg_items: &mut Vec<Item>) -> Vec<Cond> {
        let mut out = vec![];
        loop {
            let left = if self.toks.get(self.i + 1) == Some(&Tok::Sym("(".into())) {
                let it = self.item();
                agg_items.push(it);
                Operand::Col(format!("#agg{}", agg_items.len() - 1))
            } else {
                self.operand()
            };
            if self.peek_word("IN") {
                self.i += 1;
                assert_eq!(self.sym(), "(");
                let mut lits = vec![];
                loop {
                    match self.operand() {
                        Operand::Lit(s) => lits.push(s),
                        Operand::Col(c) => panic!("IN list holds literals, found {c}"),
                    }
                    if self.sym() == ")" {
                        break;
                    }
                }
                out.push(Cond::In(left, lits));
            } else {
                let op = self.sym();
                out.push(Cond::Cmp(left, op, self.operand()));
            }
            if self.peek_word("AND") {
                self.i += 1;
            } else {
                return out;
            }
        }
    }
}

fn compare(a: &str, op: &str, b: &str) -> bool {
    let ord = match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.partial_cmp(&y).expect("no NaN"),
        _ => a.cmp(b),
    };
    match op {
        "=" => ord.is_eq(),
        "<>" => !ord.is_eq(),
        "<" => ord.is_lt(),
        "<=" => ord.is_le(),
        ">" => ord.is_gt(),
        ">=" => ord.is_ge(),
        _ => panic!("operator {op}"),
    }
}

fn format_number(x: f64, ints: bool) -> String {
    if ints {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

fn apply_aggregate(func: &str, distinct: bool, cells: &[String]) -> String {
    let mut cells: Vec<String> = cells.to_vec();
    if distinct {
        cells.sort();
        cells.dedup();
    }
    let ints = cells.iter().all(|c| c.parse::<i64>().is_ok());
    let nums = || cells.iter().map(|c| c.parse::<f64>().expect("numeric cell"));
    match func {
        "COUNT" => cells.len().to_string(),
        "SUM" => format_number(nums().sum(), ints),
        "AVG" => format!("{:?}", nums().sum::<f64>() / cells.len() as f64),
        "MIN" | "MAX" => {
            let mut best = cells[0].clone();
            for c in &cells[1..] {
                let better = if func == "MIN" { compare(c, "<", &best) } else { compare(c, ">", &best) };
                if better {
                    best = c.clone();
                }
            }
            best
        }
        f => panic!("aggregate {f}"),
    }
}

/// Run one emitted statement. Result rows hold the group columns then the
/// aggregate, sorted.
pub fn execute(sql: &str, tables: &BTreeMap<String, Table>) -> Vec<Vec<String>> {
    let mut p = P { toks: lex(sql), i: 0 };
    p.expect_word("SELECT");
    let mut items = vec![p.item()];
    while p.peek_sym(",") {
        p.i += 1;
        items.push(p.item());
    }
    p.expect_word("FROM");
    // (alias, table, join condition)
    let mut sources: Vec<(String, String, Option<(String, String)>)> = vec![];
    let table = p.word();
    let alias = if p.peek_word("AS") {
        p.i += 1;
        p.word()
    } else {
        table.clone()
    };
    sources.push((alias, table, None));
    while p.peek_word("JOIN") {
        p.i += 1;
        let table = p.word();
        let alias = if p.peek_word("AS") {
            p.i += 1;
            p.word()
        } else {
            table.clone()
        };
        p.expect_word("ON");
        let l = p.column();
        assert_eq!(p.sym(), "=");
        let r = p.column();
        sources.push((alias, table, Some((l, r))));
    }
    let mut extra = vec![];
    let wheres = if p.peek_word("WHERE") {
        p.i += 1;
        p.conds(&mut extra)
    } else {
        vec![]
    };
    let mut group = vec![];
    if p.peek_word("GROUP") {
        p.i += 1;
        p.expect_word("BY");
        group.push(p.column());
        while p.peek_sym(",") {
            p.i += 1;
            group.push(p.column());
        }
    }
    let mut having_aggs = vec![];
    let having = if p.peek_word("HAVING") {
        p.i += 1;
        p.conds(&mut having_aggs)
    } else {
        vec![]
    };
    assert!(p.i == p.toks.len(), "trailing tokens in {sql}");

    // Nested-loop join: bindings map "alias.col" to a cell.
    let mut bindings: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for (alias, table, on) in &sources {
        let t = tables.get(table).unwrap_or_else(|| panic!("no table {table}"));
        let mut next = vec![];
        for b in &bindings {
            for row in &t.rows {
                let mut nb = b.clone();
                for (c, v) in t.columns.iter().zip(row) {
                    nb.insert(format!("{alias}.{c}"), v.clone());
                }
                if let Some((l, r)) = on {
                    if nb[l] != nb[r] {
                        continue;
                    }
                }
                next.push(nb);
            }
        }
        bindings = next;
    }
    let value = |b: &BTreeMap<String, String>, o: &Operand| match o {
        Operand::Col(c) => b.get(c).unwrap_or_else(|| panic!("no column {c}")).clone(),
        Operand::Lit(s) => s.clone(),
    };
    let holds = |b: &BTreeMap<String, String>, cs: &[Cond]| {
        cs.iter().all(|c| match c {
            Cond::Cmp(l, op, r) => compare(&value(b, l), op, &value(b, r)),
            Cond::In(l, lits) => lits.iter().any(|x| compare(&value(b, l), "=", x)),
        })
    };
    bindings.retain(|b| holds(b, &wheres));

    let mut groups: BTreeMap<Vec<String>, Vec<BTreeMap<String, String>>> = BTreeMap::new();
    for b in bindings {
        let k = group.iter().map(|c| b[c].clone()).collect();
        groups.entry(k).or_default().push(b);
    }
    let mut out = vec![];
    for (k, rows) in groups {
        let agg_of = |it: &Item| match it {
            Item::Agg { func, distinct, col } => {
                let cells: Vec<String> = rows.iter().map(|r| r[col].clone()).collect();
                apply_aggregate(func, *distinct, &cells)
            }
            Item::Col(c) => rows[0][c].clone(),
        };
        let mut summary = rows[0].clone();
        for (i, it) in having_aggs.iter().enumerate() {
            summary.insert(format!("#agg{i}"), agg_of(it));
        }
        if !holds(&summary, &having) {
            continue;
        }
        let _ = &k;
        out.push(items.iter().map(agg_of).collect());
    }
    out.sort();
    out
}
