use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use efftree::cli::{run_command, BudgetOpts, Command, EXIT_USAGE};
use efftree::effects::EffectName;
use efftree::liftings::Mode;

/// Checks effectful programs represented as rational coinductive trees.
#[derive(Debug, Parser)]
#[command(name = "efl", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Effect {
    Pure,
    Timed,
    Nondet,
    Store,
    Input,
}

impl From<Effect> for EffectName {
    fn from(e: Effect) -> Self {
        match e {
            Effect::Pure => EffectName::Pure,
            Effect::Timed => EffectName::Timed,
            Effect::Nondet => EffectName::Nondet,
            Effect::Store => EffectName::Store,
            Effect::Input => EffectName::Input,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Lifting {
    Alpha,
    Beta,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    /// Node layers unfolded along one path.
    #[arg(long, default_value_t = 64)]
    fuel: u32,
    /// Indices inspected under a countable connective.
    #[arg(long, default_value_t = 32)]
    index_bound: u64,
    /// Print the obligation log after the result.
    #[arg(long)]
    trace: bool,
    /// Decide by fuel alone, without closing recurring obligations.
    #[arg(long)]
    no_cycle_rule: bool,
}

impl From<BudgetArgs> for BudgetOpts {
    fn from(b: BudgetArgs) -> Self {
        BudgetOpts {
            fuel: b.fuel,
            index_bound: b.index_bound,
            trace: b.trace,
            no_cycle_rule: b.no_cycle_rule,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check the program's main term against a formula.
    Check {
        #[arg(long, value_enum)]
        effect: Option<Effect>,
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        formula: String,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Check one predicate lifting of the main computation.
    Lift {
        #[arg(long, value_enum)]
        effect: Option<Effect>,
        #[arg(long)]
        program: PathBuf,
        /// Observation literal, e.g. `(tl 2)` or `may`.
        #[arg(long)]
        obs: String,
        #[arg(long, value_enum, default_value = "alpha")]
        mode: Lifting,
        /// `any`, `none`, or a list of accepted results such as `(0 2)`.
        #[arg(long, default_value = "any")]
        pred: String,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Compare both sequencing decompositions on random double trees.
    DecomposeVerify {
        #[arg(long, value_enum)]
        effect: Effect,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Check the relator between two trees of a problem file.
    Gamma {
        #[arg(long, value_enum)]
        effect: Option<Effect>,
        #[arg(long, alias = "program")]
        problem: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Check a candidate simulation, or compute the greatest one.
    Simulate {
        #[arg(long, value_enum)]
        effect: Option<Effect>,
        #[arg(long, alias = "program")]
        problem: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Check {
                effect,
                program,
                formula,
                budget,
            } => Command::Check {
                effect: effect.map(Into::into),
                program,
                formula,
                budget: budget.into(),
            },
            Cmd::Lift {
                effect,
                program,
                obs,
                mode,
                pred,
                budget,
            } => Command::Lift {
                effect: effect.map(Into::into),
                program,
                obs,
                mode: match mode {
                    Lifting::Alpha => Mode::Alpha,
                    Lifting::Beta => Mode::Beta,
                },
                pred,
                budget: budget.into(),
            },
            Cmd::DecomposeVerify {
                effect,
                samples,
                depth,
                seed,
                budget,
            } => Command::DecomposeVerify {
                effect: effect.into(),
                samples,
                depth,
                seed,
                budget: budget.into(),
            },
            Cmd::Gamma {
                effect,
                problem,
                budget,
            } => Command::Gamma {
                effect: effect.map(Into::into),
                problem,
                budget: budget.into(),
            },
            Cmd::Simulate {
                effect,
                problem,
                budget,
            } => Command::Simulate {
                effect: effect.map(Into::into),
                problem,
                budget: budget.into(),
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run_command(&cli.command.into()) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
