use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use sqlmend_core::exec::Database;
use sqlmend_core::harness::{
    analyze_corpus, fill_terminals, generate_example, generate_inverse_corpus, load_seed_golds, load_tasks, run_repair,
    DbCache, RunOptions, DEFAULT_FILL_CAP,
};
use sqlmend_core::search::{SearchConfig, FALLBACK_ENV};
use sqlmend_core::{execute, outputs_match, parse, print};

#[derive(Parser)]
#[command(name = "sqlmend", version, about = "Repair near-miss SQL queries against an example output")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repair every task of a tasks file and write a JSON report.
    Repair {
        tasks: PathBuf,
        /// Directory that `db_ref` paths are relative to [default: the tasks file's directory].
        #[arg(long)]
        db_root: Option<PathBuf>,
        /// Candidates of each beam to mutate.
        #[arg(long, default_value_t = 10)]
        top_n: usize,
        /// Constant mutations allowed per repair path.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        max_mut: u8,
        /// Failed mutants carried into the second round.
        #[arg(long, default_value_t = 10)]
        beam_width: usize,
        /// Wall-clock budget per task, in milliseconds.
        #[arg(long, default_value_t = 60_000)]
        budget_ms: u64,
        /// Mutant executions allowed per candidate.
        #[arg(long, default_value_t = 20_000)]
        max_executions: usize,
        /// Shell command tried on unsolved tasks [default: $SQLMEND_FALLBACK_CMD].
        #[arg(long)]
        fallback: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Failure, edit-distance and structure statistics of candidate #1 against gold.
    Analyze {
        tasks: PathBuf,
        #[arg(long)]
        db_root: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a gold query and write its result as CSV.
    GenExample {
        query: PathBuf,
        db_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fill the `?` / `<lit>` placeholders of a skeleton query, best first.
    FillTerminals {
        skeleton: PathBuf,
        question: PathBuf,
        db_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FILL_CAP)]
        cap: usize,
        /// Gold query file; reports the rank of the first fill matching its output.
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Break seed gold queries with random in-space constant mutations.
    GenCorpus {
        golds: PathBuf,
        /// Directory holding the seed databases [default: the golds file's directory].
        #[arg(long)]
        db_root: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        mutations: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_output(out, text.as_bytes())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Repair { tasks, db_root, top_n, max_mut, beam_width, budget_ms, max_executions, fallback, out } => {
            let records = load_tasks(&tasks)?;
            let opts = RunOptions {
                config: SearchConfig {
                    max_mutations: max_mut as usize,
                    beam_width,
                    per_candidate_budget: max_executions,
                    time_budget: Duration::from_millis(budget_ms),
                    use_top_n: top_n,
                },
                fallback: fallback.or_else(|| std::env::var(FALLBACK_ENV).ok()).filter(|c| !c.trim().is_empty()),
                db_root: db_root.unwrap_or_else(|| parent_dir(&tasks)),
                tasks_dir: parent_dir(&tasks),
            };
            let report = run_repair(&records, &opts);
            let s = &report.summary;
            eprintln!(
                "{} tasks: base {:.1}%  beam {:.1}%  k1 {:.1}%  k2 {:.1}%  fallback {:.1}%",
                s.total, s.base_pct, s.beam_pct, s.k1_pct, s.k2_pct, s.fallback_pct
            );
            write_json(out.as_deref(), &report)
        }
        Command::Analyze { tasks, db_root, out } => {
            let records = load_tasks(&tasks)?;
            let mut dbs = DbCache::new(db_root.unwrap_or_else(|| parent_dir(&tasks)));
            write_json(out.as_deref(), &analyze_corpus(&records, &mut dbs))
        }
        Command::GenExample { query, db_dir, out } => {
            let db = Database::load_dir(&db_dir)?;
            let gold = parse(&read(&query)?)?;
            let rel = generate_example(&gold, &db)?;
            let mut bytes = Vec::new();
            rel.write_csv(&mut bytes)?;
            write_output(out.as_deref(), &bytes)
        }
        Command::FillTerminals { skeleton, question, db_dir, cap, gold } => {
            let db = Database::load_dir(&db_dir)?;
            let fills = fill_terminals(&read(&skeleton)?, &read(&question)?, &db, cap)?;
            let mut text = String::new();
            for q in &fills {
                text.push_str(&print(q));
                text.push('\n');
            }
            write_output(None, text.as_bytes())?;
            if let Some(gold) = gold {
                let expected = execute(&parse(&read(&gold)?)?, &db)?;
                let rank = fills
                    .iter()
                    .position(|q| execute(q, &db).is_ok_and(|out| outputs_match(&out, &expected)));
                match rank {
                    Some(r) => eprintln!("gold output matched by fill {}", r + 1),
                    None => eprintln!("no fill matches the gold output"),
                }
            }
            Ok(())
        }
        Command::GenCorpus { golds, db_root, count, mutations, seed, out } => {
            let seeds = load_seed_golds(&golds)?;
            let mut dbs = DbCache::new(db_root.unwrap_or_else(|| parent_dir(&golds)));
            let corpus = generate_inverse_corpus(&seeds, &mut dbs, count, mutations as usize, seed)?;
            write_json(out.as_deref(), &corpus)
        }
    }
}
