//! Command-line front end: `run`, `check`, `render` and `suite`.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::catalog::{scenario, ScenarioOptions, CATALOG};
use crate::checkers::{check_level, SearchBudget};
use crate::error::{Error, Result};
use crate::history::History;
use crate::render::{render, Show, Style};
use crate::sim::ScenarioFile;
use crate::specs::spec_bundle;
use crate::suites::{run_suites, SuiteOptions};
use crate::trace::{load_trace, read_verdicts, save_trace, write_verdicts};
use crate::verdict::{Level, Verdict, Witness};

/// Environment variable overriding the node budget of every search.
pub const BUDGET_ENV: &str = "LINSMR_BUDGET_NODES";

#[derive(Parser, Debug)]
#[command(name = "linsmr", version, about = "Consistency checking for replicated objects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a catalog scenario or a TOML scenario file.
    Run {
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        no_read_repair: bool,
    },
    /// Check a trace against a specification.
    Check {
        trace: PathBuf,
        #[arg(long, default_value = "all")]
        level: String,
        #[arg(long)]
        spec: String,
        /// Maximum search nodes per level.
        #[arg(long)]
        budget: Option<u64>,
        /// Write the verdicts as JSON lines to this file.
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
    /// Draw a trace as ASCII or SVG.
    Render {
        trace: PathBuf,
        #[arg(long, default_value = "ascii")]
        style: String,
        #[arg(long, default_value = "spans")]
        show: String,
        /// Verdict file whose first accepted witness is drawn.
        #[arg(long, conflicts_with = "compute")]
        witness: Option<PathBuf>,
        /// Level whose witness is computed on the fly; needs `--spec`.
        #[arg(long, requires = "spec")]
        compute: Option<String>,
        #[arg(long)]
        spec: Option<String>,
        /// Write the diagram here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite, or `all`.
    Suite {
        name: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Check against a deliberately broken specification.
        #[arg(long)]
        mutant: bool,
    },
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn budget(nodes: Option<u64>) -> Result<SearchBudget> {
    let env = match std::env::var(BUDGET_ENV) {
        Ok(v) => Some(v.parse::<u64>().map_err(|_| Error::ConfigInvalid(format!("{BUDGET_ENV}={v}")))?),
        Err(_) => None,
    };
    Ok(match env.or(nodes) {
        Some(n) => SearchBudget::with_nodes(n),
        None => SearchBudget::default(),
    })
}

fn levels(arg: &str) -> Result<Vec<Level>> {
    if arg == "all" {
        return Ok(Level::ALL.to_vec());
    }
    Level::parse(arg).map(|l| vec![l]).ok_or_else(|| Error::UnknownName(arg.into()))
}

/// Exit code: 0 all accepted, 1 some rejected, 3 some undecided.
pub fn verdict_code(verdicts: &[Verdict]) -> u8 {
    if verdicts.iter().any(|v| v.is_rejected() && !v.is_unknown()) {
        1
    } else if verdicts.iter().any(Verdict::is_unknown) {
        3
    } else {
        0
    }
}

pub fn execute(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Run { scenario, seed, out, no_read_repair } => {
            run(&scenario, ScenarioOptions { seed, read_repair: !no_read_repair }, &out)
        }
        Command::Check { trace, level, spec, budget: nodes, verdicts } => {
            let h = load_trace(&trace)?;
            let bundle = spec_bundle(&spec)?;
            let b = budget(nodes)?;
            let mut out = Vec::new();
            for level in levels(&level)? {
                let v = check_level(&h, &bundle, level, &b)?;
                println!("{v}");
                out.push(v);
            }
            if let Some(path) = verdicts {
                write_verdicts(fs::File::create(path)?, &out)?;
            }
            Ok(verdict_code(&out))
        }
        Command::Render { trace, style, show, witness, compute, spec, out } => {
            let h = load_trace(&trace)?;
            let w = match (witness, compute) {
                (Some(path), _) => stored_witness(&path)?,
                (None, Some(level)) => computed_witness(&h, &level, spec.as_deref().unwrap_or_default())?,
                (None, None) => None,
            };
            let diagram = render(&h, w.as_ref(), Style::parse(&style)?, Show::parse(&show)?)?;
            match out {
                Some(path) => fs::write(path, diagram)?,
                None => print!("{diagram}"),
            }
            Ok(0)
        }
        Command::Suite { name, trials, seed, mutant } => {
            let o = SuiteOptions { trials, seed, mutant, budget: budget(None)? };
            let mut code = 0;
            for rep in run_suites(&name, &o)? {
                println!("{rep}");
                if !rep.passed() {
                    code = 1;
                    if let Some(c) = &rep.counterexample {
                        println!("counterexample:\n{c}");
                    }
                }
            }
            Ok(code)
        }
    }
}

fn stored_witness(path: &Path) -> Result<Option<Witness>> {
    let records = read_verdicts(BufReader::new(fs::File::open(path)?))?;
    Ok(records.into_iter().find_map(|v| v.witness))
}

fn computed_witness(h: &History, level: &str, spec: &str) -> Result<Option<Witness>> {
    let level = Level::parse(level).ok_or_else(|| Error::UnknownName(level.into()))?;
    let v = check_level(h, &spec_bundle(spec)?, level, &budget(None)?)?;
    Ok(v.witness)
}

fn run(name: &str, o: ScenarioOptions, out: &Path) -> Result<u8> {
    fs::create_dir_all(out)?;
    let path = Path::new(name);
    if path.extension().is_some_and(|e| e == "toml") {
        let sim = ScenarioFile::load(path)?.run()?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        save_trace(&out.join(format!("{stem}.trace")), &sim.client_history)?;
        fs::write(out.join(format!("{stem}.sim.json")), sim.to_json())?;
        println!("{stem}: {} operations", sim.client_history.len());
        return Ok(0);
    }
    let entry = match scenario(name) {
        Ok(e) => e,
        Err(e) => {
            let names: Vec<&str> = CATALOG.iter().map(|e| e.name).collect();
            eprintln!("{e}; known scenarios: {}", names.join(", "));
            return Ok(2);
        }
    };
    let r = (entry.build)(&o)?;
    save_trace(&out.join(format!("{name}.trace")), &r.history)?;
    if let Some(sim) = &r.sim {
        fs::write(out.join(format!("{name}.sim.json")), sim.to_json())?;
    }
    for (label, h, _, _) in &r.extra {
        save_trace(&out.join(format!("{name}-{label}.trace")), h)?;
    }
    println!("{name}: {} operations, spec {}", r.history.len(), r.spec.unwrap_or("none"));
    Ok(0)
}
