use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use rccta::dsl::{self, Document};
use rccta::emptiness::{
    check_witness, decide, default_unfold_depth, to_dot, validate_unfolding, FiniteTreeModel,
    SearchLimits, Verdict,
};
use rccta::formula::DEFAULT_DNF_CAP;
use rccta::simulate::{sim_state_bound, simulate, SimLimits, DEFAULT_MAX_SIM_STATES};
use rccta::NondetAutomaton;

/// Büchi tree automata with RCC8 spatial constraints.
///
/// Exit codes: 0 success / not-empty, 1 defects found / empty, 2 error.
#[derive(Parser)]
#[command(name = "rccta", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an automaton file for defects.
    Validate { file: PathBuf },
    /// Translate an alternating automaton into a nondeterministic one.
    Simulate {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Decide emptiness; prints `not-empty` or `empty`.
    Emptiness {
        file: PathBuf,
        /// Write the finite tree model as JSON.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Write the finite tree model as Graphviz DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Depth for the unfolding check (default: 3 * height, capped).
        #[arg(long)]
        unfold_depth: Option<usize>,
        /// Node limit for the search (overrides RCCTA_MAX_NODES).
        #[arg(long)]
        max_nodes: Option<usize>,
    },
    /// Re-check a stored witness against an automaton.
    CheckWitness {
        file: PathBuf,
        witness: PathBuf,
        #[arg(long)]
        unfold_depth: Option<usize>,
    },
}

fn env_usize(name: &str) -> Result<Option<usize>> {
    match std::env::var(name) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .with_context(|| format!("{name} must be a non-negative integer, got `{v}`")),
        Err(_) => Ok(None),
    }
}

fn sim_limits() -> Result<SimLimits> {
    Ok(SimLimits {
        dnf_cap: env_usize("RCCTA_DNF_CAP")?.unwrap_or(DEFAULT_DNF_CAP),
        max_states: env_usize("RCCTA_MAX_SIM_STATES")?.unwrap_or(DEFAULT_MAX_SIM_STATES),
    })
}

fn load(path: &Path) -> Result<Document> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    dsl::parse(&text).with_context(|| format!("{}", path.display()))
}

fn defects(doc: &Document) -> Vec<String> {
    let ds = match doc {
        Document::Alternating(a) => a.validate(),
        Document::Nondet(a) => a.validate(),
    };
    ds.iter().map(ToString::to_string).collect()
}

/// The nondeterministic automaton to decide: the file itself, or its simulation.
fn nondet(path: &Path) -> Result<NondetAutomaton> {
    let doc = load(path)?;
    let ds = defects(&doc);
    if !ds.is_empty() {
        bail!("{} is not well-formed:\n  {}", path.display(), ds.join("\n  "));
    }
    match doc {
        Document::Nondet(a) => Ok(a),
        Document::Alternating(a) => Ok(simulate(&a, sim_limits()?)?.automaton),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { file } => {
            let ds = defects(&load(&file)?);
            if ds.is_empty() {
                println!("ok");
                return Ok(ExitCode::SUCCESS);
            }
            for d in &ds {
                println!("{d}");
            }
            Ok(ExitCode::from(1))
        }
        Command::Simulate { file, output } => {
            let doc = load(&file)?;
            let ds = defects(&doc);
            if !ds.is_empty() {
                bail!("{} is not well-formed:\n  {}", file.display(), ds.join("\n  "));
            }
            let Document::Alternating(a) = doc else {
                bail!("{} is already nondeterministic", file.display());
            };
            let sim = simulate(&a, sim_limits()?)?;
            write(&output, &dsl::print_nondet(&sim.automaton))?;
            println!("states: {}", sim.automaton.states.len());
            println!(
                "bound: {}",
                sim_state_bound(a.states.len() as u32, a.accepting.len() as u32)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Emptiness {
            file,
            witness,
            dot,
            unfold_depth,
            max_nodes,
        } => {
            let a = nondet(&file)?;
            let limits = SearchLimits {
                max_nodes: max_nodes.or(env_usize("RCCTA_MAX_NODES")?),
                ..SearchLimits::default()
            };
            let decision = decide(&a, limits)?;
            for d in &decision.diagnostics {
                eprintln!("warning: {d}");
            }
            match decision.verdict {
                Verdict::Empty => {
                    println!("empty");
                    Ok(ExitCode::from(1))
                }
                Verdict::NonEmpty(m) => {
                    if let Some(d) = unfold_depth {
                        if let Err(e) = validate_unfolding(&a, &m, d) {
                            eprintln!("warning: {e}");
                        }
                    }
                    if let Some(p) = witness {
                        write(&p, &m.to_json())?;
                    }
                    if let Some(p) = dot {
                        write(&p, &to_dot(&m))?;
                    }
                    println!("not-empty");
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        Command::CheckWitness {
            file,
            witness,
            unfold_depth,
        } => {
            let a = nondet(&file)?;
            let text = fs::read_to_string(&witness)
                .with_context(|| format!("reading {}", witness.display()))?;
            let m = FiniteTreeModel::from_json(&text)?;
            let depth = unfold_depth.unwrap_or_else(|| default_unfold_depth(&m));
            let report = check_witness(&a, &m, &[1, 2, depth]);
            let b = &report.bounds;
            println!(
                "internal nodes: {} (bound {}), leaves: {} (bound {}){}",
                b.internal,
                b.internal_bound,
                b.leaves,
                b.leaf_bound,
                if b.clamped { ", zero factors raised to 1" } else { "" }
            );
            if report.ok() {
                println!("ok");
                return Ok(ExitCode::SUCCESS);
            }
            if b.internal > b.internal_bound || b.leaves > b.leaf_bound {
                println!("node bounds exceeded");
            }
            for d in &report.defects {
                println!("{d}");
            }
            Ok(ExitCode::from(1))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
