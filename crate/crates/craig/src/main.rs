//! Batch front end: parse a problem file, interpolate or check
//! satisfiability, optionally verify and dump the proof tree.
//!
//! Exit codes: 0 unsat (interpolant printed), 10 sat, 1 usage/parse
//! error, 2 budget exceeded, 3 verification failure.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use craig::combine::{CiOutcome, CombineError, Combiner, Config};
use craig::parse::parse_problem;
use craig::theory::SatCheck;

#[derive(Parser)]
#[command(name = "craig", version, about = "Quantifier-free interpolation for EUF + IDL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run on a problem file: compute an interpolant or decide satisfiability.
    Interpolate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Problem file (s-expression format; see the README).
    file: std::path::PathBuf,
    /// Re-check the result with the combined satisfiability engine.
    #[arg(long)]
    verify: bool,
    /// Dump the metarule refutation with per-node interpolants.
    #[arg(long)]
    trace: bool,
    /// Fixes the exploration order of Share alternatives.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Search-node budget.
    #[arg(long, default_value_t = 100_000)]
    budget_nodes: u64,
    /// Theory-solver call budget.
    #[arg(long, default_value_t = 10_000)]
    budget_calls: u64,
    #[arg(long, value_enum, default_value_t = Mode::Interpolate)]
    mode: Mode,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Interpolate,
    CheckSat,
}

const EXIT_SAT: u8 = 10;
const EXIT_ERROR: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_VERIFY: u8 = 3;

fn exit_for(e: &CombineError) -> u8 {
    match e {
        CombineError::Budget(_) => EXIT_BUDGET,
        _ => EXIT_ERROR,
    }
}

fn run(args: &RunArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.file.display());
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let problem = match parse_problem(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {}:{e}", args.file.display());
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let config = Config {
        budget_nodes: args.budget_nodes,
        budget_calls: args.budget_calls,
        seed: args.seed,
        verify_sat: args.verify,
    };
    let mut combiner = Combiner::new(&problem.signature, config);

    if args.mode == Mode::CheckSat {
        let joint = problem.a.union(&problem.b).cloned().collect();
        return match combiner.combined_check_sat(&joint) {
            Ok(SatCheck::Sat) => {
                println!("sat");
                ExitCode::from(EXIT_SAT)
            }
            Ok(SatCheck::Unsat) => {
                println!("unsat");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_for(&e))
            }
        };
    }

    match combiner.ci_interpolate(&problem.a, &problem.b) {
        Ok(CiOutcome::Sat) => {
            println!("sat");
            ExitCode::from(EXIT_SAT)
        }
        Ok(CiOutcome::Unsat { interpolant, proof }) => {
            if args.trace {
                print!("{}", proof.trace());
            }
            println!("(interpolant {})", interpolant.formula);
            if args.verify {
                match combiner.verify_interpolant(&problem.a, &problem.b, &interpolant.formula)
                {
                    Ok(report) if report.passed() => {
                        eprintln!("verified: A entails it, B refutes it, symbols are common");
                    }
                    Ok(report) => {
                        eprintln!(
                            "verification FAILED: A-entailment={}, B-refutation={}, common={}",
                            report.a_entails, report.b_refuted, report.common
                        );
                        return ExitCode::from(EXIT_VERIFY);
                    }
                    Err(e) => {
                        eprintln!("error during verification: {e}");
                        return ExitCode::from(exit_for(&e));
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit code would collide with the budget code.
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR);
        }
    };
    match cli.command {
        Command::Interpolate(args) => run(&args),
    }
}
