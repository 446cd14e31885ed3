use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use cqcount::cores::core_of_query;
use cqcount::counting::{classify, count_answers, Bounds, CountingConfig, CountingMode, TrichotomyReport};
use cqcount::db::{check_compatible, load_database};
use cqcount::gen::{random_query, random_structure, rng, QueryShape};
use cqcount::hom::{self, HomSearchConfig};
use cqcount::parse::{parse_query_with_warnings, render_query};
use cqcount::reductions::{star_oracle_trace, star_query, star_target};
use cqcount::structure::augment;
use cqcount::{ConjunctiveQuery, Error, RelationalStructure, Result};

const BUDGET_VAR: &str = "CQCOUNT_BUDGET";

#[derive(Parser)]
#[command(name = "cqcount", version, about = "Exact answer counting for conjunctive queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the exact number of answers.
    Count {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, default_value = "auto", value_parser = parse_mode)]
        mode: CountingMode,
    },
    /// Print core and contract widths, star sizes and the case label as JSON.
    Analyze {
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, default_value_t = Bounds::default().k_core)]
        k_core: usize,
        #[arg(long, default_value_t = Bounds::default().k_contract)]
        k_contract: usize,
    },
    /// Print the core of the query.
    Core {
        #[arg(long)]
        query: PathBuf,
    },
    /// Print SAT if the query body maps homomorphically into the database.
    Decide {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        query: PathBuf,
    },
    /// Count answers of the query with every variable pinned to a unary
    /// relation, once through blow-up oracle calls and once directly.
    ReduceDemo {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        query: PathBuf,
        /// JSON object mapping query variables to allowed database elements.
        /// Unlisted variables may take any element.
        #[arg(long)]
        pins: Option<PathBuf>,
    },
    /// Cross-check structural against brute-force counts on random instances.
    Selftest {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_mode(s: &str) -> std::result::Result<CountingMode, String> {
    s.parse()
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_query(path: &Path) -> Result<ConjunctiveQuery> {
    let parsed = parse_query_with_warnings(&read(path)?)?;
    for w in &parsed.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(parsed.query)
}

fn load_db(path: &Path) -> Result<RelationalStructure> {
    let loaded = load_database(path)?;
    if loaded.duplicates_removed > 0 {
        eprintln!("note: {}: removed {} duplicate tuples", path.display(), loaded.duplicates_removed);
    }
    Ok(loaded.structure)
}

fn load_pair(db: &Path, query: &Path) -> Result<(ConjunctiveQuery, RelationalStructure)> {
    let q = load_query(query)?;
    let b = load_db(db)?;
    check_compatible(&q, &b)?;
    Ok((q, b))
}

fn search_config() -> Result<HomSearchConfig> {
    let mut cfg = HomSearchConfig::default();
    if let Ok(v) = std::env::var(BUDGET_VAR) {
        cfg.node_budget = v
            .trim()
            .parse()
            .map_err(|_| Error::Unsupported(format!("{BUDGET_VAR} must be a non-negative integer, got `{v}`")))?;
    }
    Ok(cfg)
}

fn counting_config(mode: CountingMode) -> Result<CountingConfig> {
    Ok(CountingConfig {
        hom: search_config()?,
        ..CountingConfig::with_mode(mode)
    })
}

fn report_json(r: &TrichotomyReport) -> serde_json::Value {
    let g = &r.contract_graph;
    let edges: Vec<Vec<&str>> = g
        .edges()
        .iter()
        .map(|e| e.iter().map(|&v| g.labels()[v].as_str()).collect())
        .collect();
    json!({
        "core_query": render_query(&r.core_query),
        "core_treewidth": r.core_treewidth,
        "contract_graph": {"vertices": g.labels(), "edges": edges},
        "contract_treewidth": r.contract_treewidth,
        "star_sizes": r.star_sizes,
        "bounds": r.bounds,
        "case_label": r.case_label,
        "heuristic": r.is_heuristic(),
    })
}

fn read_pins(path: &Path, q: &ConjunctiveQuery, b: &RelationalStructure) -> Result<BTreeMap<String, BTreeSet<u32>>> {
    let raw: BTreeMap<String, Vec<String>> =
        serde_json::from_str(&read(path)?).map_err(|e| Error::MalformedDatabase(format!("pins: {e}")))?;
    let mut pins = BTreeMap::new();
    for (var, elements) in raw {
        if q.structure().index_of(&var).is_none() {
            return Err(Error::UnknownElement(format!("query variable `{var}`")));
        }
        let set = elements
            .iter()
            .map(|e| b.index_of(e).ok_or_else(|| Error::UnknownElement(e.clone())))
            .collect::<Result<_>>()?;
        pins.insert(var, set);
    }
    Ok(pins)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Count { db, query, mode } => {
            let (q, b) = load_pair(&db, &query)?;
            println!("{}", count_answers(&q, &b, &counting_config(mode)?)?);
        }
        Command::Analyze {
            db,
            query,
            k_core,
            k_contract,
        } => {
            let q = load_query(&query)?;
            if let Some(db) = db {
                check_compatible(&q, &load_db(&db)?)?;
            }
            let report = classify(&q, Bounds { k_core, k_contract }, &counting_config(CountingMode::Auto)?)?;
            let text = serde_json::to_string_pretty(&report_json(&report)).expect("serializable");
            println!("{text}");
        }
        Command::Core { query } => {
            let q = load_query(&query)?;
            println!("{}", render_query(&core_of_query(&q, search_config()?)?));
        }
        Command::Decide { db, query } => {
            let (q, b) = load_pair(&db, &query)?;
            let sat = hom::hom_exists(q.structure(), &b, search_config()?)?;
            println!("{}", if sat { "SAT" } else { "UNSAT" });
        }
        Command::ReduceDemo { db, query, pins } => {
            let (mut q, b) = load_pair(&db, &query)?;
            let search = search_config()?;
            if !cqcount::cores::is_core(&augment(&q)?, search)? {
                q = core_of_query(&q, search)?;
                eprintln!("note: the query is not a core; using {}", render_query(&q));
            }
            let pins = match pins {
                Some(path) => read_pins(&path, &q, &b)?,
                None => BTreeMap::new(),
            };
            let target = star_target(&q, &b, &pins)?;
            let cfg = counting_config(CountingMode::Structural)?;
            let trace = star_oracle_trace(&q, &target, |d| count_answers(&q, d, &cfg), search)?;
            let direct = count_answers(&star_query(&q)?, &target, &counting_config(CountingMode::Auto)?)?;
            println!("oracle calls: {}", trace.oracle_calls);
            println!("free automorphisms: {}", trace.free_automorphisms);
            println!("via oracle: {}", trace.count);
            println!("direct: {direct}");
            println!("agree: {}", trace.count == direct);
        }
        Command::Selftest { instances, seed } => {
            let mut r = rng(seed);
            let shape = QueryShape::default();
            let structural = counting_config(CountingMode::Structural)?;
            let brute = counting_config(CountingMode::Brute)?;
            for i in 0..instances {
                let q = random_query(&mut r, &shape);
                let n = 1 + i % 6;
                let b = random_structure(&mut r, &shape.symbols, n, 0.15 + 0.1 * (i % 5) as f64);
                let a = count_answers(&q, &b, &structural)?;
                let e = count_answers(&q, &b, &brute)?;
                if a != e {
                    return Err(Error::Unsupported(format!(
                        "instance {i}: structural count {a} differs from brute-force count {e} for {}",
                        render_query(&q)
                    )));
                }
            }
            println!("selftest: {instances} instances, structural and brute-force counts agree");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_resource() { 2 } else { 1 })
        }
    }
}
