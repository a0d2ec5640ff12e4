//! Commands of the `efl` front end and their reports.
//!
//! Every command ends its report with `RESULT: PROVED|REFUTED|UNKNOWN`.
//! Exit codes: 0 proved or passed, 1 refuted or counterexample, 2 unknown,
//! 3 usage, parse or type error.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use crate::decompose::strong_decomposability_suite;
use crate::effects::{
    input_kit, nondet_kit, pure_timed_kit, pure_unobservable_kit, store_kit, EffectKit, EffectName,
};
use crate::error::{Error, Result};
use crate::liftings::{Budget, Mode, Trace};
use crate::logic::{satisfies, TermBody};
use crate::relator::{gamma_check, GammaReport, SimulationReport};
use crate::sexp::parse_one;
use crate::syntax::{
    closed_value, parse_formula, parse_gamma_problem, parse_program, parse_simulation_problem,
    resolve_effect, Program,
};
use crate::trees::{Signature, Value};
use crate::verdict::Verdict;

pub const EXIT_USAGE: u8 = 3;

/// Budget flags shared by the checking commands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetOpts {
    pub fuel: u32,
    pub index_bound: u64,
    pub trace: bool,
    pub no_cycle_rule: bool,
}

impl Default for BudgetOpts {
    fn default() -> Self {
        BudgetOpts {
            fuel: 64,
            index_bound: 32,
            trace: false,
            no_cycle_rule: false,
        }
    }
}

impl BudgetOpts {
    fn budget(&self) -> Budget {
        let mut b = Budget::new(self.fuel, self.index_bound);
        if self.no_cycle_rule {
            b = b.without_cycle_rule();
        }
        if self.trace {
            b.trace = Some(Trace::default());
        }
        b
    }
}

/// A validated command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// Does the program's main term satisfy the formula?
    Check {
        effect: Option<EffectName>,
        program: PathBuf,
        formula: String,
        budget: BudgetOpts,
    },
    /// One α or β lifting of a leaf predicate at one observation.
    Lift {
        effect: Option<EffectName>,
        program: PathBuf,
        obs: String,
        mode: Mode,
        /// `any`, `none`, or a list of accepted leaf values.
        pred: String,
        budget: BudgetOpts,
    },
    /// Randomised comparison of the α- and β-decompositions.
    DecomposeVerify {
        effect: EffectName,
        samples: usize,
        depth: usize,
        seed: u64,
        budget: BudgetOpts,
    },
    Gamma {
        effect: Option<EffectName>,
        problem: PathBuf,
        budget: BudgetOpts,
    },
    Simulate {
        effect: Option<EffectName>,
        problem: PathBuf,
        budget: BudgetOpts,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Proved,
    Refuted,
    Unknown,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Proved => 0,
            Status::Refuted => 1,
            Status::Unknown => 2,
        }
    }
}

impl From<Verdict> for Status {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Proved => Status::Proved,
            Verdict::Refuted => Status::Refuted,
            Verdict::Unknown => Status::Unknown,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Proved => "PROVED",
            Status::Refuted => "REFUTED",
            Status::Unknown => "UNKNOWN",
        })
    }
}

/// A finished command: its status and the full text for standard output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub status: Status,
    pub report: String,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        self.status.exit_code()
    }
}

struct Report {
    text: String,
    trace: Option<Trace>,
}

impl Report {
    fn new(budget: &Budget) -> Self {
        Report {
            text: String::new(),
            trace: budget.trace.clone(),
        }
    }

    fn line(&mut self, l: impl fmt::Display) {
        writeln!(self.text, "{l}").expect("writing to a string");
    }

    fn finish(mut self, status: Status) -> Outcome {
        self.line(format_args!("RESULT: {status}"));
        if let Some(t) = self.trace.take() {
            for l in t.lines() {
                self.line(format_args!("trace: {l}"));
            }
        }
        Outcome {
            status,
            report: self.text,
        }
    }
}

macro_rules! with_kit {
    ($effect:expr, $kit:ident => $body:expr) => {
        match $effect {
            EffectName::Pure => {
                let $kit = pure_unobservable_kit();
                $body
            }
            EffectName::Timed => {
                let $kit = pure_timed_kit();
                $body
            }
            EffectName::Nondet => {
                let $kit = nondet_kit();
                $body
            }
            EffectName::Store => {
                let $kit = store_kit();
                $body
            }
            EffectName::Input => {
                let $kit = input_kit();
                $body
            }
        }
    };
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// Runs a command. Errors correspond to exit code [`EXIT_USAGE`].
pub fn run_command(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Check {
            effect,
            program,
            formula,
            budget,
        } => {
            let text = read(program)?;
            let effect = resolve_effect(&text, *effect)?;
            with_kit!(effect, kit => check(&kit, effect, &text, formula, &budget.budget()))
        }
        Command::Lift {
            effect,
            program,
            obs,
            mode,
            pred,
            budget,
        } => {
            let text = read(program)?;
            let effect = resolve_effect(&text, *effect)?;
            with_kit!(effect, kit => lift(&kit, effect, &text, obs, *mode, pred, &budget.budget()))
        }
        Command::DecomposeVerify {
            effect,
            samples,
            depth,
            seed,
            budget,
        } => {
            with_kit!(*effect, kit => decompose_verify(&kit, *samples, *depth, *seed, &budget.budget()))
        }
        Command::Gamma {
            effect,
            problem,
            budget,
        } => {
            let text = read(problem)?;
            let effect = resolve_effect(&text, *effect)?;
            with_kit!(effect, kit => gamma(&kit, &text, &budget.budget()))
        }
        Command::Simulate {
            effect,
            problem,
            budget,
        } => {
            let text = read(problem)?;
            let effect = resolve_effect(&text, *effect)?;
            with_kit!(effect, kit => simulate(&kit, &text, &budget.budget()))
        }
    }
}

fn check<K: EffectKit>(
    kit: &K,
    effect: EffectName,
    text: &str,
    formula: &str,
    budget: &Budget,
) -> Result<Outcome> {
    let program = Program::parse(text, Some(effect))?;
    let (_, term) = program.lower()?;
    let phi = parse_formula(kit, formula, term.sort(), &term.ty)?;
    let v = satisfies(kit, &term, &phi, budget)?;
    let mut r = Report::new(budget);
    r.line(format_args!("effect: {effect}"));
    let m = &program.main;
    r.line(format_args!("term: ({}, {}) {}", m.sort, m.ty, m.term));
    r.line(format_args!("formula: {phi}"));
    Ok(r.finish(v.into()))
}

fn parse_pred(sig: &Signature, pred: &str) -> Result<Option<Vec<Value>>> {
    let s = parse_one(pred)?;
    match s.as_atom() {
        Some("any") => Ok(None),
        Some("none") => Ok(Some(Vec::new())),
        Some(_) => Err(s.error("expected `any`, `none` or a list of values")),
        None => s
            .expect_list("a list of values")?
            .iter()
            .map(|v| closed_value(sig, v))
            .collect::<Result<_>>()
            .map(Some),
    }
}

#[allow(clippy::too_many_arguments)]
fn lift<K: EffectKit>(
    kit: &K,
    effect: EffectName,
    text: &str,
    obs: &str,
    mode: Mode,
    pred: &str,
    budget: &Budget,
) -> Result<Outcome> {
    let (env, term) = parse_program(text, Some(effect))?;
    let TermBody::Cpt(t) = &term.body else {
        return Err(Error::SortMismatch(
            "lifting needs a computation as the main term".into(),
        ));
    };
    let o = kit.parse_obs(&parse_one(obs)?)?;
    let accepted = parse_pred(kit.signature(), pred)?;
    let p = |v: &Value| -> Result<Verdict> {
        Ok(Verdict::from_bool(
            accepted.as_ref().is_none_or(|a| a.contains(v)),
        ))
    };
    let v = kit.pair().check(mode, &o, &p, &env, t, budget)?;
    let mut r = Report::new(budget);
    r.line(format_args!("effect: {effect}"));
    r.line(format_args!("lifting: {mode} {o} {pred}"));
    Ok(r.finish(v.into()))
}

fn decompose_verify<K: EffectKit>(
    kit: &K,
    samples: usize,
    depth: usize,
    seed: u64,
    budget: &Budget,
) -> Result<Outcome> {
    let rep = strong_decomposability_suite(kit, samples, depth, seed, budget)?;
    let mut r = Report::new(budget);
    r.line(format_args!("effect: {}", kit.name()));
    let verdict = if rep.ok() { "PASS" } else { "FAIL" };
    r.line(format_args!("{verdict} {}/{}", rep.passed, rep.samples));
    r.line(format_args!("unknowns: {}", rep.unknowns));
    r.line(format_args!(
        "lemma: {} refining pairs checked, {} violations",
        rep.lemma_checked,
        rep.lemma_violations.len()
    ));
    for d in &rep.disagreements {
        r.line(format_args!(
            "disagreement: sample {} {} at {}: decomposed {} vs flattened {} on {}",
            d.sample, d.mode, d.obs, d.lhs, d.rhs, d.tree
        ));
    }
    for (d0, d1) in &rep.lemma_violations {
        r.line(format_args!("lemma violation: {d0} refines {d1}"));
    }
    let status = if !rep.ok() {
        Status::Refuted
    } else if rep.unknowns > 0 {
        Status::Unknown
    } else {
        Status::Proved
    };
    Ok(r.finish(status))
}

fn gamma<K: EffectKit>(kit: &K, text: &str, budget: &Budget) -> Result<Outcome> {
    let p = parse_gamma_problem(kit, text)?;
    let rep = gamma_check(
        &kit.pair(),
        &p.carrier,
        &p.relation,
        &p.env,
        &p.left,
        &p.right,
        &p.obs,
        budget,
    )?;
    let mut r = Report::new(budget);
    r.line(format_args!("relation: {}", p.relation));
    let status = match rep {
        GammaReport::Counterexample { subset, obs, side } => {
            let s: Vec<String> = subset.iter().map(Value::to_string).collect();
            r.line(format_args!(
                "counterexample: predicate {{{}}} at {obs}, {side} side",
                s.join(", ")
            ));
            Status::Refuted
        }
        GammaReport::NoCounterexample { unknowns } => {
            r.line(format_args!(
                "no counterexample ({unknowns} undecided liftings)"
            ));
            if unknowns == 0 {
                Status::Proved
            } else {
                Status::Unknown
            }
        }
    };
    Ok(r.finish(status))
}

fn simulate<K: EffectKit>(kit: &K, text: &str, budget: &Budget) -> Result<Outcome> {
    let q = parse_simulation_problem(kit, text, budget)?;
    let pair = kit.pair();
    let mut r = Report::new(budget);
    if q.has_candidate {
        let status = match q.problem.check(&pair)? {
            SimulationReport::Pass { unknowns } => {
                r.line(format_args!(
                    "candidate is a simulation ({unknowns} undecided liftings)"
                ));
                if unknowns == 0 {
                    Status::Proved
                } else {
                    Status::Unknown
                }
            }
            SimulationReport::Violation(v) => {
                r.line(format_args!("violation: {v}"));
                Status::Refuted
            }
        };
        return Ok(r.finish(status));
    }
    let gfp = q.problem.with_full_candidate().greatest_within(&pair)?;
    for (i, (layer, rel)) in q.problem.layers.iter().zip(&gfp).enumerate() {
        r.line(format_args!(
            "layer {i} ({}, {}): {rel}",
            layer.sort, layer.ty
        ));
    }
    let mut status = match q.problem.with_relations(gfp.clone()).check(&pair)? {
        SimulationReport::Pass { unknowns: 0 } => Status::Proved,
        SimulationReport::Pass { .. } => Status::Unknown,
        SimulationReport::Violation(v) => {
            return Err(Error::IllTypedCandidate(format!(
                "greatest simulation failed its own check: {v}"
            )))
        }
    };
    for &(l, i, j) in &q.queries {
        if gfp[l].contains(i, j) {
            r.line(format_args!("query ({l} {i} {j}): similar"));
        } else {
            r.line(format_args!("query ({l} {i} {j}): not similar"));
            status = Status::Refuted;
        }
    }
    Ok(r.finish(status))
}
