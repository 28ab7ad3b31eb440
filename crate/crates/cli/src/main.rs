use std::collections::HashSet;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context as _};
use clap::{Parser, Subcommand, ValueEnum};
use contextdb::bridge::{emit_sql, export_database, BackingMap, ModeName, RelationalViewDef};
use contextdb::constraint::check_all;
use contextdb::io::{load_context, load_database};
use contextdb::relation::{Column, RelationSchema};
use contextdb::rewrite::{apply_rule, check_equivalence, parse_path, rewrite_for_cache, Rule, Verdict};
use contextdb::views::View;
use contextdb::{parse_analytic, parse_expression, Context, DatabaseInstance, FiniteFunction, Relation};
use contextdb_cli::api::{self, AnalyticRequest, ApiError, AppState, ProposalsRequest, Snapshot, TraversalRequest};
use contextdb_cli::server;

#[derive(Parser)]
#[command(name = "contextdb", version, about = "Query, check and serve context databases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Alias,
    Eq,
}

impl From<Mode> for ModeName {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Alias => ModeName::Alias,
            Mode::Eq => ModeName::Eq,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a context, and optionally a database over it.
    Validate { ctx: PathBuf, db: Option<PathBuf> },
    /// Evaluate a traversal query and print its induced relation.
    Query {
        ctx: PathBuf,
        db: PathBuf,
        query: String,
        #[arg(long, value_enum, default_value = "alias")]
        mode: Mode,
        /// Write the relation to this CSV file instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate an analytic query (grouping, measuring, aggregate).
    Analytic {
        ctx: PathBuf,
        db: PathBuf,
        grouping: String,
        measuring: String,
        op: String,
        /// Answer restriction, e.g. `[ans > 500]`.
        #[arg(long)]
        restrict: Option<String>,
        /// Print the evaluation plan before the answer.
        #[arg(long)]
        explain: bool,
        /// Also print the SQL for this backing map.
        #[arg(long)]
        sql: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Rewrite an expression, towards cached subexpressions or by explicit rules.
    Rewrite {
        expr: String,
        #[arg(long)]
        ctx: PathBuf,
        /// Directory of `*.expr` files listing cached expressions, one per line.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Apply a rule at a position, e.g. `grouping@/` or `associative-left@/0`.
        #[arg(long)]
        apply: Vec<String>,
        #[arg(long)]
        explain: bool,
        /// Compare the input and output on this many random databases.
        #[arg(long)]
        check: Option<usize>,
    },
    /// Check the constraints declared in the context.
    Check { ctx: PathBuf, db: PathBuf },
    /// Write one CSV file per relation of a relational view definition.
    Export {
        ctx: PathBuf,
        db: PathBuf,
        viewdefs: PathBuf,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Translate an analytic query to SQL over backing tables.
    EmitSql { ctx: PathBuf, analytic: String, backing: PathBuf },
    /// List candidate keys and expressions for a set of target nodes.
    Propose {
        ctx: PathBuf,
        #[arg(required = true)]
        targets: Vec<String>,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long)]
        max_per_pair: Option<usize>,
    },
    /// Evaluate an expression over a view of the database.
    View {
        ctx: PathBuf,
        db: PathBuf,
        view: PathBuf,
        expr: String,
    },
    /// Serve the HTTP API over one database.
    Serve {
        ctx: PathBuf,
        db: PathBuf,
        #[arg(long, env = "CONTEXTDB_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Backing map enabling `sql: true` in analytic requests.
        #[arg(long)]
        backing: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let code = match (e.downcast_ref::<contextdb::Error>(), e.downcast_ref::<ApiError>()) {
                (Some(err), _) => Some(err.code()),
                (None, Some(err)) => Some(err.code.as_str()),
                _ => None,
            };
            match code {
                Some(code) => eprintln!("error[{code}]: {e:#}"),
                None => eprintln!("error: {e:#}"),
            }
            // Data that breaks a declared or required dependency is a finding, not a failure.
            let finding = matches!(code, Some("equality-violation" | "not-tree-query" | "key-violation"));
            ExitCode::from(if finding { 1 } else { 2 })
        }
    }
}

fn api_err(e: ApiError) -> anyhow::Error {
    anyhow::Error::new(e)
}

fn ctx_of(path: &Path) -> anyhow::Result<Arc<Context>> {
    Ok(Arc::new(load_context(path).with_context(|| format!("loading {}", path.display()))?))
}

fn db_of(ctx: &Arc<Context>, path: &Path) -> anyhow::Result<DatabaseInstance> {
    Ok(load_database(ctx.clone(), path).with_context(|| format!("loading {}", path.display()))?)
}

fn snapshot(ctx: &Path, db: &Path) -> anyhow::Result<Snapshot> {
    let c = ctx_of(ctx)?;
    Ok(Snapshot::new(db_of(&c, db)?, None))
}

fn print_report(violations: &[contextdb::Violation]) -> ExitCode {
    for v in violations {
        println!("{v}");
    }
    if violations.is_empty() {
        println!("ok");
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn function_relation(name: &str, f: &FiniteFunction) -> Relation {
    let col = |n: String| Column {
        name: n.clone(),
        attribute: n,
        expr: None,
    };
    Relation {
        schema: RelationSchema {
            name: name.to_string(),
            key: col(f.domain_node.to_string()),
            columns: vec![col(f.target_node.to_string())],
        },
        rows: f.map.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect(),
    }
}

fn cached_expressions(dir: &Path, ctx: &Context) -> anyhow::Result<HashSet<String>> {
    let mut out = HashSet::new();
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "expr"))
        .collect();
    files.sort();
    for f in files {
        for line in std::fs::read_to_string(&f)?.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            out.insert(parse_expression(line, ctx)?.canonical());
        }
    }
    Ok(out)
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Validate { ctx, db } => {
            let c = ctx_of(&ctx)?;
            let mut report = c.validate();
            if let Some(db) = db {
                if report.is_empty() {
                    report.extend(db_of(&c, &db)?.validate());
                }
            }
            Ok(print_report(&report.violations))
        }
        Command::Check { ctx, db } => {
            let c = ctx_of(&ctx)?;
            let report = check_all(&db_of(&c, &db)?);
            Ok(print_report(&report.violations))
        }
        Command::Query {
            ctx,
            db,
            query,
            mode,
            csv,
            json,
        } => {
            let s = snapshot(&ctx, &db)?;
            let req = TraversalRequest {
                query,
                mode: mode.into(),
            };
            let rel = api::traversal_relation(&s, &req).map_err(api_err)?;
            if json {
                println!("{}", api::render(&rel.to_json()));
            } else if let Some(out) = csv {
                std::fs::write(&out, rel.to_csv(true)?).with_context(|| format!("writing {}", out.display()))?;
            } else {
                print!("{}", rel.to_csv(true)?);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Analytic {
            ctx,
            db,
            grouping,
            measuring,
            op,
            restrict,
            explain,
            sql,
            json,
        } => {
            let mut s = snapshot(&ctx, &db)?;
            if let Some(b) = &sql {
                s.backing = Some(BackingMap::load(b)?);
            }
            let req = AnalyticRequest {
                grouping,
                measuring,
                op,
                restrictions: restrict,
                combine: None,
                sql: sql.is_some(),
                name: None,
            };
            let out = api::analytic_outcome(&s, &req).map_err(api_err)?;
            if json {
                println!("{}", api::render(&out.to_json()));
                return Ok(ExitCode::SUCCESS);
            }
            if explain {
                println!("query: {}", out.query.pretty(s.context()));
                println!("plan: {}", out.explain());
            }
            if let Some(text) = &out.sql {
                println!("sql: {text}");
            }
            print!("{}", out.relation().to_csv(true)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Rewrite {
            expr,
            ctx,
            cache,
            apply,
            explain,
            check,
        } => {
            let c = ctx_of(&ctx)?;
            let start = parse_expression(&expr, &c)?;
            let mut current = start.clone();
            let mut lines = vec![];
            for a in &apply {
                let (rule, path) = a.split_once('@').unwrap_or((a.as_str(), "/"));
                let rule = Rule::from_name(rule)?;
                let Some(path) = parse_path(path) else { bail!("bad position `{path}`") };
                let next = apply_rule(rule, &current, &path)?;
                lines.push(format!(
                    "{rule} @ {} : {} => {}",
                    contextdb::rewrite::format_path(&path),
                    current.pretty(&c),
                    next.pretty(&c)
                ));
                current = next;
            }
            if let Some(dir) = cache {
                let cached = cached_expressions(&dir, &c)?;
                let (next, trace) = rewrite_for_cache(&current, &cached);
                lines.extend(trace.iter().map(|s| s.explain(&c)));
                current = next;
            }
            if explain {
                for l in &lines {
                    println!("{l}");
                }
            }
            println!("{}", current.pretty(&c));
            if let Some(trials) = check {
                match check_equivalence(&start, &current, &c, trials, 0)? {
                    Verdict::EquivalentOnSamples { trials } => println!("equivalent on {trials} random databases"),
                    Verdict::Counterexample { key, left, right, .. } => {
                        let show = |v: Option<contextdb::Value>| v.map(|v| v.to_string()).unwrap_or_else(|| "undefined".into());
                        println!("counterexample at {key}: {} vs {}", show(left), show(right));
                        return Ok(ExitCode::from(1));
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Export {
            ctx,
            db,
            viewdefs,
            outdir,
        } => {
            let c = ctx_of(&ctx)?;
            let d = db_of(&c, &db)?;
            let defs = RelationalViewDef::load(&viewdefs)?;
            std::fs::create_dir_all(&outdir)?;
            for rel in export_database(&defs, &d)? {
                let path = outdir.join(format!("{}.csv", rel.schema.name));
                std::fs::write(&path, rel.to_csv(true)?)?;
                println!("{} ({} rows)", path.display(), rel.rows.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::EmitSql { ctx, analytic, backing } => {
            let c = ctx_of(&ctx)?;
            let q = parse_analytic(&analytic, &c)?;
            println!("{}", emit_sql(&q, &BackingMap::load(&backing)?, &c)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Propose {
            ctx,
            targets,
            max_len,
            max_per_pair,
        } => {
            let c = ctx_of(&ctx)?;
            let s = Snapshot::new(DatabaseInstance::new(c), None);
            let req = ProposalsRequest {
                targets,
                max_len,
                max_per_pair,
            };
            println!("{}", api::render(&api::proposals(&s, &req).map_err(api_err)?));
            Ok(ExitCode::SUCCESS)
        }
        Command::View { ctx, db, view, expr } => {
            let c = ctx_of(&ctx)?;
            let d = db_of(&c, &db)?;
            let v = View::load(&view, &c)?;
            let e = parse_expression(&expr, v.shape())?;
            let f = match v.evaluate(&e, &d) {
                Err(contextdb::Error::View(_)) => v.materialize(&d)?.evaluate(&e, &d)?,
                other => other?,
            };
            print!("{}", function_relation("view", &f).to_csv(true)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            ctx,
            db,
            port,
            host,
            backing,
        } => {
            let mut s = snapshot(&ctx, &db)?;
            if let Some(b) = &backing {
                s.backing = Some(BackingMap::load(b)?);
            }
            let addr: SocketAddr = format!("{host}:{port}").parse().with_context(|| format!("bad address {host}:{port}"))?;
            let state = Arc::new(AppState::new(s));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                println!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, server::router(state))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
