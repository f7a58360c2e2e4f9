//! Command line for the gap satisfiability and gap domination solver.
//!
//! Commands: `solve` (gap feasibility of a bilinear instance), `dominate`
//! (gap domination of an automaton), `oracle` (bounded brute force),
//! `gen` (instance generators), `check` (independent verification of a
//! report against its instance). Exit codes are stable: 0 for the positive
//! verdict, 1 for the negative one, 2 for unknown, 3 for usage or parse
//! errors. All reports are canonical JSON on stdout.

mod gen;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mibgap_core::engine::{self, GapVerdict, Resources};
use mibgap_core::json::{self, Instance};
use mibgap_core::mpta::{self, DominationOutcome, DominationQuery};
use mibgap_core::num::{parse_rat, Rat};
use mibgap_core::{relax, verify};
use num_traits::Signed;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mibgap", version, about = "exact gap solver for bounded mixed-integer bilinear systems and multi-priced timed automata")]
struct Cli {
    /// worker threads for enumeration-heavy phases (env: MIBGAP_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct BudgetArgs {
    /// wall-clock budget in milliseconds
    #[arg(long, default_value_t = 60_000)]
    budget_ms: u64,
    /// node budget (integer points, kernel boxes, branch children)
    #[arg(long, default_value_t = 2_000_000)]
    max_nodes: u64,
}

impl BudgetArgs {
    fn resources(&self) -> Resources {
        Resources { wall_ms: Some(self.budget_ms), max_nodes: self.max_nodes }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide gap satisfiability of a bilinear instance file
    Solve {
        file: PathBuf,
        /// slack, e.g. 1/2
        #[arg(long, allow_hyphen_values = true)]
        epsilon: String,
        #[command(flatten)]
        budget: BudgetArgs,
        /// include the constant ledger in the report
        #[arg(long)]
        explain: bool,
        /// embed the full certificate tree (required for `check` on UNSAT)
        #[arg(long)]
        certificates: bool,
        /// write the report to a file as well as stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decide gap domination of an automaton file
    Dominate {
        file: PathBuf,
        /// target vector, comma-separated rationals, e.g. -3/4,-7/4
        #[arg(long, allow_hyphen_values = true)]
        gamma: String,
        #[arg(long, allow_hyphen_values = true)]
        epsilon: String,
        /// value-tuple piece family file (kind "pieces")
        #[arg(long, conflicts_with = "enumerate")]
        pieces: Option<PathBuf>,
        /// bounded integer-run enumeration "steps,time" producing an
        /// under-approximate piece family
        #[arg(long)]
        enumerate: Option<String>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Brute-force classification within an integer bound
    Oracle {
        file: PathBuf,
        #[arg(long)]
        epsilon: String,
        #[arg(long, default_value_t = 10)]
        xbound: u64,
    },
    /// Emit instance files
    Gen(gen::GenArgs),
    /// Re-verify a report against its instance with an independent checker
    Check { instance: PathBuf, report: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("MIBGAP_THREADS").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(1);
    if let Err(e) =
        rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global()
    {
        eprintln!("warning: thread pool already initialized: {e}");
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let diag = serde_json::json!({
                "error": format!("{e:#}"),
                "kind": "diagnostic",
            });
            eprintln!("{}", json::canonical(&diag).trim_end());
            ExitCode::from(3)
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_eps(s: &str) -> Result<Rat> {
    let eps = parse_rat(s).map_err(|e| anyhow!("invalid epsilon: {e}"))?;
    if !eps.is_positive() {
        bail!("epsilon must be positive");
    }
    Ok(eps)
}

fn emit(report: &serde_json::Value, output: Option<&PathBuf>) -> Result<()> {
    let text = json::canonical(report);
    print!("{text}");
    if let Some(path) = output {
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Solve { file, epsilon, budget, explain, certificates, output } => {
            let eps = parse_eps(&epsilon)?;
            let Instance::Mib(sys) = json::parse_instance(&read_file(&file)?)? else {
                bail!("`solve` expects an instance of kind \"mib\"");
            };
            let report = engine::solve_report(&sys, &eps, &budget.resources())?;
            let ledger = if explain {
                // the ledger of the first standard piece, when one exists
                mibgap_core::mib::to_standard_form(&sys)
                    .ok()
                    .and_then(|pieces| pieces.into_iter().next())
                    .and_then(|(piece, _)| relax::compute_constants(&piece, &eps).ok())
            } else {
                None
            };
            let mut value = json::solve_report_to_json(
                &eps,
                &report.verdict,
                report.stats.nodes,
                ledger.as_ref(),
            );
            if !certificates {
                if let Some(obj) = value.as_object_mut() {
                    if let Some(tree) = obj.remove("unsat") {
                        obj.insert(
                            "unsat_summary".into(),
                            serde_json::json!({
                                "note": "run with --certificates for the checkable tree",
                                "size": tree.to_string().len().to_string(),
                            }),
                        );
                    }
                }
            }
            emit(&value, output.as_ref())?;
            Ok(match report.verdict {
                GapVerdict::Sat { .. } => ExitCode::from(0),
                GapVerdict::Unsat { .. } => ExitCode::from(1),
                GapVerdict::Unknown { .. } => ExitCode::from(2),
            })
        }
        Command::Dominate { file, gamma, epsilon, pieces, enumerate, budget, output } => {
            let eps = parse_eps(&epsilon)?;
            let Instance::Mpta(a) = json::parse_instance(&read_file(&file)?)? else {
                bail!("`dominate` expects an instance of kind \"mpta\"");
            };
            let gamma: Vec<Rat> = gamma
                .split(',')
                .map(|g| parse_rat(g.trim()).map_err(|e| anyhow!("invalid gamma entry: {e}")))
                .collect::<Result<_>>()?;
            if gamma.len() != a.observers.len() {
                bail!(
                    "gamma has {} entries but the automaton has {} observers",
                    gamma.len(),
                    a.observers.len()
                );
            }
            let d = a.observers.len();
            let (family, exact, enum_bounds) = match (&pieces, &enumerate) {
                (Some(path), None) => {
                    let Instance::Pieces { dim, exact, pieces } =
                        json::parse_instance(&read_file(path)?)?
                    else {
                        bail!("`--pieces` expects an instance of kind \"pieces\"");
                    };
                    if dim != (d + 1) * d {
                        bail!("piece family dimension {dim} does not match (d+1)*d");
                    }
                    (pieces, exact, None)
                }
                (None, Some(spec)) => {
                    let (steps, time) = spec
                        .split_once(',')
                        .and_then(|(a, b)| {
                            Some((a.trim().parse::<u64>().ok()?, b.trim().parse::<u64>().ok()?))
                        })
                        .ok_or_else(|| anyhow!("--enumerate expects \"steps,time\""))?;
                    (mpta::pieces_from_enumeration(&a, steps, time, 4096), false, Some((steps, time)))
                }
                _ => bail!("exactly one of --pieces or --enumerate is required"),
            };
            let query = DominationQuery { gamma: gamma.clone(), eps: eps.clone(), pieces: family, exact };
            let outcome = mpta::gap_dominate(&a, &query, &budget.resources())?;
            let value = json::dominate_report_to_json(&gamma, &eps, &outcome, enum_bounds);
            emit(&value, output.as_ref())?;
            Ok(match outcome {
                DominationOutcome::Dominated { .. } => ExitCode::from(0),
                DominationOutcome::NotDominated => ExitCode::from(1),
                DominationOutcome::Unknown { .. } => ExitCode::from(2),
            })
        }
        Command::Oracle { file, epsilon, xbound } => {
            let eps = parse_eps(&epsilon)?;
            let Instance::Mib(sys) = json::parse_instance(&read_file(&file)?)? else {
                bail!("`oracle` expects an instance of kind \"mib\"");
            };
            let verdict = engine::oracle(&sys, &eps, xbound);
            let (name, code) = match &verdict {
                engine::OracleVerdict::SatSlack { .. } => ("sat-slack", 0),
                engine::OracleVerdict::SatNoSlack { .. } => ("sat-no-slack", 0),
                engine::OracleVerdict::UnsatWithinBound => ("unsat-within-bound", 1),
            };
            let mut obj = serde_json::json!({
                "kind": "oracle-report",
                "verdict": name,
                "xbound": xbound.to_string(),
                "epsilon": mibgap_core::num::fmt_rat(&eps),
            });
            if let engine::OracleVerdict::SatSlack { x, y, margin } = &verdict {
                obj["witness"] = serde_json::json!({
                    "x": x.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                    "y": y.iter().map(mibgap_core::num::fmt_rat).collect::<Vec<_>>(),
                });
                if let Some(m) = margin {
                    obj["margin"] = serde_json::Value::String(mibgap_core::num::fmt_rat(m));
                }
            }
            if let engine::OracleVerdict::SatNoSlack { x, y, margin } = &verdict {
                obj["witness"] = serde_json::json!({
                    "x": x.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                    "y": y.iter().map(mibgap_core::num::fmt_rat).collect::<Vec<_>>(),
                });
                obj["margin"] = serde_json::Value::String(mibgap_core::num::fmt_rat(margin));
            }
            emit(&obj, None)?;
            Ok(ExitCode::from(code))
        }
        Command::Gen(args) => {
            gen::run(args)?;
            Ok(ExitCode::from(0))
        }
        Command::Check { instance, report } => {
            let inst = json::parse_instance(&read_file(&instance)?)?;
            let report_text = read_file(&report)?;
            let ok = match inst {
                Instance::Mib(sys) => check_solve_report(&sys, &report_text)?,
                Instance::Mpta(a) => check_dominate_report(&a, &report_text)?,
                Instance::Pieces { .. } => bail!("`check` verifies solve or dominate reports"),
            };
            if ok {
                println!("{}", serde_json::json!({"check": "pass"}));
                Ok(ExitCode::from(0))
            } else {
                println!("{}", serde_json::json!({"check": "fail"}));
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn check_solve_report(sys: &mibgap_core::mib::MibSystem, report: &str) -> Result<bool> {
    let data = json::parse_solve_report(report)?;
    match data.verdict.as_str() {
        "sat" => {
            let witness = data.witness.ok_or_else(|| anyhow!("sat report without witness"))?;
            match verify::verify_witness(sys, &data.epsilon, &witness, data.margin.as_ref()) {
                Ok(()) => Ok(true),
                Err(e) => {
                    eprintln!("{e}");
                    Ok(false)
                }
            }
        }
        "unsat" => {
            let tree = data
                .unsat
                .ok_or_else(|| anyhow!("unsat report without the certificate tree (re-run solve with --certificates)"))?;
            match verify::verify_unsat_tree(sys, &data.epsilon, &tree) {
                Ok(()) => Ok(true),
                Err(e) => {
                    eprintln!("{e}");
                    Ok(false)
                }
            }
        }
        "unknown" => Ok(true),
        v => bail!("unknown verdict `{v}`"),
    }
}

fn check_dominate_report(a: &mibgap_core::mpta::Mpta, report: &str) -> Result<bool> {
    let data = json::parse_dominate_report(report)?;
    match data.verdict.as_str() {
        "dominated" => {
            let (Some(lambdas), Some(tuples), Some(combination)) =
                (&data.lambdas, &data.tuples, &data.combination)
            else {
                bail!("dominated report without a witness");
            };
            match verify::verify_domination_witness(
                a,
                &data.gamma,
                &data.epsilon,
                lambdas,
                tuples,
                combination,
                data.enumerate,
            ) {
                Ok(()) => Ok(true),
                Err(e) => {
                    eprintln!("{e}");
                    Ok(false)
                }
            }
        }
        // negative and unknown verdicts carry no portable certificate
        "not-dominated" | "unknown" => Ok(true),
        v => bail!("unknown verdict `{v}`"),
    }
}
