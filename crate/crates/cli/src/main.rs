//! `qfdef`: decide quantifier-free definability of relations over finite algebras.
//!
//! Exit codes: 0 definable or success, 1 not definable, 2 usage or input
//! error, 3 time or search budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qfdef::bench::{bench, to_csv, BenchConfig, BenchError, Family, Strategy};
use qfdef::decision::{DecideError, Options};
use qfdef::generate::{
    gen_abelian_group, gen_boolean_algebra, gen_random_algebra, gen_random_formula, FormulaBounds,
    DEFAULT_SIGNATURE,
};
use qfdef::merging::merging_decide_with;
use qfdef::oracle::{graph_oracle_definable, graph_star, oracle_definable, DEFAULT_BUDGET};
use qfdef::preprocess::decompose;
use qfdef::splitting::splitting_decide_with;
use qfdef::{iso_type, Algebra, Counterexample, Decision, Graph, Relation};

#[derive(Parser, Debug)]
#[command(
    name = "qfdef",
    version,
    about = "Quantifier-free definability over finite algebras"
)]
struct Cli {
    /// Seed for every generator.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Wall-time budget per decision, in seconds.
    #[arg(long, global = true)]
    time_budget: Option<f64>,
    /// Compact JSON output; `bench` writes JSON records instead of CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Log the decision procedures to stderr (`RUST_LOG` overrides the level).
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether a relation is quantifier-free definable.
    Decide(DecideArgs),
    /// Print the isomorphism type of a tuple.
    Isotype {
        #[arg(long)]
        algebra: PathBuf,
        /// Comma-separated elements, by name or index.
        #[arg(long, allow_hyphen_values = true)]
        tuple: String,
    },
    /// Split a relation into repetition-free parts by equality pattern.
    Decompose {
        #[arg(long)]
        relation: PathBuf,
    },
    /// Brute-force definability check by enumerating subisomorphisms.
    Oracle(OracleArgs),
    /// Generate algebras, graphs and formulas.
    #[command(subcommand)]
    Gen(Gen),
    /// Time both strategies over seeded inputs.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct DecideArgs {
    #[arg(long, default_value = "splitting")]
    strategy: Strategy,
    #[arg(long)]
    algebra: PathBuf,
    #[arg(long)]
    relation: PathBuf,
    /// Write the defining formula here (merging re-runs splitting to get one).
    #[arg(long)]
    emit_formula: Option<PathBuf>,
    /// Check the internal invariants while running.
    #[arg(long)]
    check_invariants: bool,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, required_unless_present = "graph")]
    algebra: Option<PathBuf>,
    /// Decide over the graph G directly instead of an algebra.
    #[arg(long, conflicts_with = "algebra")]
    graph: Option<PathBuf>,
    #[arg(long)]
    relation: PathBuf,
    /// Maximum number of candidate bijections to test.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
}

#[derive(Subcommand, Debug)]
enum Gen {
    /// Random tables over a fixed universe (one binary `f`, one ternary `g`).
    Random {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boolean algebra of subsets of `atoms` atoms.
    Bool {
        #[arg(long)]
        atoms: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Product of cyclic groups, e.g. `--factors 2,2,4`.
    Group {
        #[arg(long, value_delimiter = ',', required = true)]
        factors: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The algebra G* built from a graph.
    GraphStar {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A random formula; optionally also write its extension as a relation.
    Formula {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long, default_value_t = 2)]
        arity: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 8)]
        atoms: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        extension_out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value = "abelian-group")]
    family: Family,
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 16])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 2)]
    arity: usize,
    /// Repeatable; both strategies by default.
    #[arg(long)]
    strategy: Vec<Strategy>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error carrying the exit code it should produce.
#[derive(Debug)]
struct Exit(u8, anyhow::Error);

fn budget_exceeded(e: DecideError) -> Exit {
    match e {
        DecideError::Universe(_) => Exit(2, e.into()),
        DecideError::Timeout | DecideError::OracleBudget { .. } => Exit(3, e.into()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_algebra(path: &Path) -> Result<Algebra> {
    Algebra::from_json(&read(path)?).with_context(|| format!("loading algebra {}", path.display()))
}

fn load_relation(path: &Path, alg: Option<&Algebra>) -> Result<Relation> {
    let src = read(path)?;
    let r = match alg {
        Some(a) => Relation::from_json_for(&src, a),
        None => Relation::from_json(&src),
    };
    r.with_context(|| format!("loading relation {}", path.display()))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit(cli: &Cli, value: &Value) {
    if cli.json {
        println!("{value}");
    } else {
        println!(
            "{}",
            serde_json::to_string_pretty(value).expect("json value")
        );
    }
}

fn names(alg: &Algebra, tuple: &[usize]) -> Vec<String> {
    tuple.iter().map(|&e| alg.element_name(e)).collect()
}

fn counterexample_json(alg: &Algebra, c: &Counterexample) -> Value {
    json!({
        "in_relation": c.witness_in,
        "not_in_relation": c.witness_out,
        "in_relation_names": names(alg, &c.witness_in),
        "not_in_relation_names": names(alg, &c.witness_out),
        "subisomorphism": c.gamma.canonical().pairs().map(|(a, b)| [a, b]).collect::<Vec<_>>(),
    })
}

fn options(cli: &Cli, check_invariants: bool) -> Options {
    Options {
        check_invariants,
        deadline: cli
            .time_budget
            .map(|s| Instant::now() + Duration::from_secs_f64(s)),
    }
}

fn decide(cli: &Cli, args: &DecideArgs) -> Result<u8, Exit> {
    let alg = load_algebra(&args.algebra).map_err(|e| Exit(2, e))?;
    let r = load_relation(&args.relation, Some(&alg)).map_err(|e| Exit(2, e))?;
    let start = Instant::now();
    let (decision, stats) = match args.strategy {
        Strategy::Merging => {
            let (d, s) = merging_decide_with(&alg, &r, &options(cli, args.check_invariants))
                .map_err(budget_exceeded)?;
            let stats = json!({
                "iso_type_calls": s.iso_type_calls,
                "merges": s.merges,
                "pushes": s.pushes,
                "max_stack": s.max_stack,
            });
            (d, stats)
        }
        Strategy::Splitting => {
            let (d, s) = splitting_decide_with(&alg, &r, &options(cli, args.check_invariants))
                .map_err(budget_exceeded)?;
            let stats = json!({
                "max_depth": s.max_depth,
                "blocks_created": s.blocks_created,
                "splits": s.splits,
                "full_blocks": s.full_blocks,
                "steps": s.steps,
            });
            (d, stats)
        }
    };
    let elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
    let mut formula = decision.formula().cloned();
    if formula.is_none() && decision.is_definable() && args.emit_formula.is_some() {
        formula = splitting_decide_with(&alg, &r, &options(cli, false))
            .map_err(budget_exceeded)?
            .0
            .formula()
            .cloned();
    }
    if let (Some(path), Some(phi)) = (&args.emit_formula, &formula) {
        fs::write(path, format!("{phi}\n"))
            .with_context(|| format!("writing {}", path.display()))
            .map_err(|e| Exit(2, e))?;
    }
    let mut out = json!({
        "strategy": args.strategy.name(),
        "definable": decision.is_definable(),
        "elapsed_ms": elapsed_ms,
        "stats": stats,
    });
    if let Some(phi) = &formula {
        out["formula"] = json!(phi.to_string());
    }
    if let Decision::NotDefinable(c) = &decision {
        out["counterexample"] = counterexample_json(&alg, c);
    }
    emit(cli, &out);
    Ok(if decision.is_definable() { 0 } else { 1 })
}

fn isotype(cli: &Cli, algebra: &Path, tuple: &str) -> Result<u8> {
    let alg = load_algebra(algebra)?;
    let a = tuple
        .split(',')
        .map(|s| alg.parse_element(s.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let sig = iso_type(&alg, &a)?;
    emit(
        cli,
        &json!({
            "partition": sig.partition(),
            "universe": names(&alg, sig.universe()),
            "universe_indices": sig.universe(),
            "depth": sig.depth(),
        }),
    );
    Ok(0)
}

fn decompose_cmd(cli: &Cli, relation: &Path) -> Result<u8> {
    let r = load_relation(relation, None)?;
    let bundle = decompose(&r);
    let targets: Vec<Value> = bundle
        .targets()
        .iter()
        .map(|(theta, part)| {
            json!({
                "pattern": theta.blocks(),
                "arity": part.arity(),
                "tuples": part.iter().collect::<Vec<_>>(),
            })
        })
        .collect();
    emit(
        cli,
        &json!({
            "original_arity": bundle.original_arity(),
            "spec": bundle.spec(),
            "targets": targets,
        }),
    );
    Ok(0)
}

fn oracle(cli: &Cli, args: &OracleArgs) -> Result<u8, Exit> {
    if let Some(graph) = &args.graph {
        let g = read(graph)
            .and_then(|s| {
                Graph::from_json(&s).with_context(|| format!("loading graph {}", graph.display()))
            })
            .map_err(|e| Exit(2, e))?;
        let r = load_relation(&args.relation, None).map_err(|e| Exit(2, e))?;
        let definable = graph_oracle_definable(&g, &r, args.budget).map_err(budget_exceeded)?;
        emit(cli, &json!({ "definable": definable }));
        return Ok(if definable { 0 } else { 1 });
    }
    let path = args
        .algebra
        .as_ref()
        .expect("clap requires algebra or graph");
    let alg = load_algebra(path).map_err(|e| Exit(2, e))?;
    let r = load_relation(&args.relation, Some(&alg)).map_err(|e| Exit(2, e))?;
    let decision = oracle_definable(&alg, &r, args.budget).map_err(budget_exceeded)?;
    let mut out = json!({ "definable": decision.is_definable() });
    if let Decision::NotDefinable(c) = &decision {
        out["counterexample"] = counterexample_json(&alg, c);
    }
    emit(cli, &out);
    Ok(if decision.is_definable() { 0 } else { 1 })
}

fn gen(cli: &Cli, g: &Gen) -> Result<u8> {
    match g {
        Gen::Random { size, out } => {
            if *size == 0 {
                bail!("size must be at least 1");
            }
            write_out(
                out.as_deref(),
                &gen_random_algebra(*size, DEFAULT_SIGNATURE, cli.seed).to_json(),
            )?;
        }
        Gen::Bool { atoms, out } => {
            write_out(out.as_deref(), &gen_boolean_algebra(*atoms)?.to_json())?
        }
        Gen::Group { factors, out } => {
            write_out(out.as_deref(), &gen_abelian_group(factors)?.to_json())?
        }
        Gen::GraphStar { graph, out } => {
            let g = Graph::from_json(&read(graph)?)
                .with_context(|| format!("loading graph {}", graph.display()))?;
            write_out(out.as_deref(), &graph_star(&g).algebra.to_json())?;
        }
        Gen::Formula {
            algebra,
            arity,
            depth,
            atoms,
            out,
            extension_out,
        } => {
            if *arity == 0 || *atoms == 0 {
                bail!("arity and atoms must be at least 1");
            }
            let alg = load_algebra(algebra)?;
            let bounds = FormulaBounds {
                depth: *depth,
                atoms: *atoms,
            };
            let phi = gen_random_formula(&alg, *arity, bounds, cli.seed);
            let ext = alg.extension(&phi, *arity)?;
            if let Some(p) = extension_out {
                write_out(Some(p), &ext.to_json())?;
            }
            if cli.json {
                write_out(
                    out.as_deref(),
                    &json!({ "formula": phi.to_string(), "extension_size": ext.len() }).to_string(),
                )?;
            } else {
                write_out(out.as_deref(), &phi.to_string())?;
            }
        }
    }
    Ok(0)
}

fn bench_cmd(cli: &Cli, args: &BenchArgs) -> Result<u8, Exit> {
    let config = BenchConfig {
        family: args.family,
        sizes: args.sizes.clone(),
        samples: args.samples,
        target_arity: args.arity,
        strategies: if args.strategy.is_empty() {
            vec![Strategy::Merging, Strategy::Splitting]
        } else {
            args.strategy.clone()
        },
        seed: cli.seed,
        time_budget: cli.time_budget.map(Duration::from_secs_f64),
        formula: FormulaBounds::default(),
    };
    let records = bench(&config).map_err(|e| match e {
        BenchError::WrongAnswer { .. } => Exit(1, e.into()),
        _ => Exit(2, e.into()),
    })?;
    let text = if cli.json {
        records
            .iter()
            .map(|r| {
                json!({
                    "family": r.family.name(),
                    "size": r.size,
                    "strategy": r.strategy.name(),
                    "samples": r.samples,
                    "median_ms": r.median_ms,
                    "timeouts": r.timeouts,
                    "definable": r.definable,
                    "not_definable": r.not_definable,
                })
                .to_string()
            })
            .collect::<Vec<_>>()
            .join("\n")
    } else {
        to_csv(&records).trim_end().to_string()
    };
    write_out(args.out.as_deref(), &text).map_err(|e| Exit(2, e))?;
    Ok(0)
}

fn run(cli: &Cli) -> Result<u8, Exit> {
    let usage = |e: anyhow::Error| Exit(2, e);
    match &cli.command {
        Command::Decide(args) => decide(cli, args),
        Command::Isotype { algebra, tuple } => isotype(cli, algebra, tuple).map_err(usage),
        Command::Decompose { relation } => decompose_cmd(cli, relation).map_err(usage),
        Command::Oracle(args) => oracle(cli, args),
        Command::Gen(g) => gen(cli, g).map_err(usage),
        Command::Bench(args) => bench_cmd(cli, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.trace {
        tracing_subscriber::fmt()
            .with_writer(std::io::stderr)
            .with_env_filter(
                tracing_subscriber::EnvFilter::try_from_default_env()
                    .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("qfdef=debug")),
            )
            .init();
    }
    if let Some(b) = cli.time_budget {
        if !(b.is_finite() && b > 0.0) {
            eprintln!("error: --time-budget must be a positive number of seconds");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
