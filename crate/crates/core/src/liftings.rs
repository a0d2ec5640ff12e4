//! Inductive (α) and coinductive (β) predicate liftings over trees.
//!
//! Both checkers unfold the tree against a node function producing a test
//! over `(child index, observation)` atoms. On rational trees an obligation
//! `(subtree identity, observation)` that recurs on the current path is
//! closed as `Refuted` for α (least fixpoint) and `Proved` for β (greatest
//! fixpoint). Anonymous subtrees are never closed this way; they run on fuel.

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::testlogic::{dual_test, try_eval_test, Test};
use crate::trees::{force_keyed, Env, Head, Key, Op, Signature, TreeExpr, Value};
use crate::verdict::Verdict;

/// Observation tokens of an effect.
pub trait Observation: Clone + Eq + Hash + Debug + Display + Send + Sync + 'static {}

impl<T: Clone + Eq + Hash + Debug + Display + Send + Sync + 'static> Observation for T {}

/// An observation domain with its leaf and node functions.
pub trait ObsSpec: Send + Sync {
    type Obs: Observation;

    fn signature(&self) -> &Signature;

    /// Whether immediate termination is acceptable for `o`.
    fn leaf_fn(&self, o: &Self::Obs) -> bool;

    /// Obligations on the children of an `op` node for observation `o`.
    fn node_fn(&self, op: &Op, o: &Self::Obs) -> Test<(u64, Self::Obs)>;
}

/// Which lifting is being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Alpha,
    Beta,
}

impl Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Alpha => "alpha",
            Mode::Beta => "beta",
        })
    }
}

/// Shared obligation log, filled when tracing is enabled.
#[derive(Debug, Clone, Default)]
pub struct Trace(Arc<Mutex<Vec<String>>>);

impl Trace {
    pub fn push(&self, line: String) {
        self.0.lock().expect("trace lock poisoned").push(line);
    }

    pub fn lines(&self) -> Vec<String> {
        self.0.lock().expect("trace lock poisoned").clone()
    }
}

/// Resource limits for a check.
#[derive(Debug, Clone)]
pub struct Budget {
    /// Maximum number of node layers unfolded along one path.
    pub fuel: u32,
    /// Number of indices inspected under a countable connective.
    pub index_bound: u64,
    /// Close recurring named obligations by the fixpoint rule.
    pub cycle_rule: bool,
    pub trace: Option<Trace>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            fuel: 64,
            index_bound: 32,
            cycle_rule: true,
            trace: None,
        }
    }
}

impl Budget {
    pub fn new(fuel: u32, index_bound: u64) -> Self {
        Budget {
            fuel,
            index_bound: index_bound.max(1),
            ..Budget::default()
        }
    }

    pub fn without_cycle_rule(mut self) -> Self {
        self.cycle_rule = false;
        self
    }
}

/// Verdict-valued predicate on leaf payloads.
pub type Pred<'a> = &'a dyn Fn(&Value) -> Result<Verdict>;

type NodeFn<'a, O> = &'a dyn Fn(&Op, &O) -> Test<(u64, O)>;
type LeafFn<'a, O> = &'a dyn Fn(&O) -> bool;

/// Inductive lifting: a finite proof that `t` satisfies `o` with leaves in `pred`.
pub fn check_alpha<O: Observation>(
    node_fn: NodeFn<'_, O>,
    leaf_fn: LeafFn<'_, O>,
    o: &O,
    pred: Pred<'_>,
    env: &Env,
    t: &TreeExpr,
    budget: &Budget,
) -> Result<Verdict> {
    Lifter::new(Mode::Alpha, node_fn, leaf_fn, pred, env, budget).check(o, t, budget.fuel)
}

/// Coinductive lifting: leaves outside `leaf_fn` are accepted and recurring
/// obligations are closed as satisfied.
pub fn check_beta<O: Observation>(
    node_fn: NodeFn<'_, O>,
    leaf_fn: LeafFn<'_, O>,
    o: &O,
    pred: Pred<'_>,
    env: &Env,
    t: &TreeExpr,
    budget: &Budget,
) -> Result<Verdict> {
    Lifter::new(Mode::Beta, node_fn, leaf_fn, pred, env, budget).check(o, t, budget.fuel)
}

struct Lifter<'a, O> {
    mode: Mode,
    node_fn: NodeFn<'a, O>,
    leaf_fn: LeafFn<'a, O>,
    pred: Pred<'a>,
    env: &'a Env,
    budget: &'a Budget,
    path: Vec<(Key, O)>,
}

impl<'a, O: Observation> Lifter<'a, O> {
    fn new(
        mode: Mode,
        node_fn: NodeFn<'a, O>,
        leaf_fn: LeafFn<'a, O>,
        pred: Pred<'a>,
        env: &'a Env,
        budget: &'a Budget,
    ) -> Self {
        Lifter {
            mode,
            node_fn,
            leaf_fn,
            pred,
            env,
            budget,
            path: Vec::new(),
        }
    }

    fn log(&self, what: impl FnOnce() -> String) {
        if let Some(trace) = &self.budget.trace {
            let indent = "  ".repeat(self.path.len());
            trace.push(format!("{indent}{} {}", self.mode, what()));
        }
    }

    fn check(&mut self, o: &O, t: &TreeExpr, fuel: u32) -> Result<Verdict> {
        let (head, key) = force_keyed(self.env, t)?;
        match head {
            Head::Leaf(v) => {
                let v = if (self.leaf_fn)(o) {
                    (self.pred)(&v)?
                } else {
                    match self.mode {
                        Mode::Alpha => Verdict::Refuted,
                        Mode::Beta => Verdict::Proved,
                    }
                };
                self.log(|| format!("{o} leaf -> {v}"));
                Ok(v)
            }
            Head::Node(op, children) => {
                if self.budget.cycle_rule {
                    if let Some(k) = &key {
                        if self.path.iter().any(|(pk, po)| pk == k && po == o) {
                            let v = match self.mode {
                                Mode::Alpha => Verdict::Refuted,
                                Mode::Beta => Verdict::Proved,
                            };
                            self.log(|| format!("{o} at {k} revisited -> {v}"));
                            return Ok(v);
                        }
                    }
                }
                if fuel == 0 {
                    self.log(|| format!("{o} at {op}: out of fuel"));
                    return Ok(Verdict::Unknown);
                }
                let test = (self.node_fn)(&op, o);
                self.log(|| match &key {
                    Some(k) => format!("{o} at {op} [{k}]"),
                    None => format!("{o} at {op}"),
                });
                let pushed = key.map(|k| self.path.push((k, o.clone()))).is_some();
                let index_bound = self.budget.index_bound;
                let result = try_eval_test(
                    &mut |(i, next): &(u64, O)| {
                        let child = children.child(*i).ok_or_else(|| Error::ArityMismatch {
                            op: op.to_string(),
                            expected: format!("an index below the arity (asked for {i})"),
                            got: 0,
                        })?;
                        self.check(next, &child, fuel - 1)
                    },
                    &test,
                    index_bound,
                );
                if pushed {
                    self.path.pop();
                }
                let v = result?;
                self.log(|| format!("{o} at {op} -> {v}"));
                Ok(v)
            }
        }
    }
}

/// α and β built from one specification; β uses the dual node tests.
#[derive(Debug, Clone, Copy)]
pub struct ComplementingPair<'s, S: ?Sized> {
    spec: &'s S,
}

pub fn complementing_pair<S: ObsSpec + ?Sized>(spec: &S) -> ComplementingPair<'_, S> {
    ComplementingPair { spec }
}

impl<'s, S: ObsSpec + ?Sized> ComplementingPair<'s, S> {
    pub fn spec(&self) -> &'s S {
        self.spec
    }

    pub fn alpha_node(&self, op: &Op, o: &S::Obs) -> Test<(u64, S::Obs)> {
        self.spec.node_fn(op, o)
    }

    pub fn beta_node(&self, op: &Op, o: &S::Obs) -> Test<(u64, S::Obs)> {
        dual_test(&self.spec.node_fn(op, o))
    }

    pub fn alpha(
        &self,
        o: &S::Obs,
        pred: Pred<'_>,
        env: &Env,
        t: &TreeExpr,
        budget: &Budget,
    ) -> Result<Verdict> {
        check_alpha(
            &|op, o| self.alpha_node(op, o),
            &|o| self.spec.leaf_fn(o),
            o,
            pred,
            env,
            t,
            budget,
        )
    }

    pub fn beta(
        &self,
        o: &S::Obs,
        pred: Pred<'_>,
        env: &Env,
        t: &TreeExpr,
        budget: &Budget,
    ) -> Result<Verdict> {
        check_beta(
            &|op, o| self.beta_node(op, o),
            &|o| self.spec.leaf_fn(o),
            o,
            pred,
            env,
            t,
            budget,
        )
    }

    pub fn check(
        &self,
        mode: Mode,
        o: &S::Obs,
        pred: Pred<'_>,
        env: &Env,
        t: &TreeExpr,
        budget: &Budget,
    ) -> Result<Verdict> {
        match mode {
            Mode::Alpha => self.alpha(o, pred, env, t, budget),
            Mode::Beta => self.beta(o, pred, env, t, budget),
        }
    }
}

/// Predicate that accepts every value.
pub fn any_value(_: &Value) -> Result<Verdict> {
    Ok(Verdict::Proved)
}

/// Predicate that rejects every value.
pub fn no_value(_: &Value) -> Result<Verdict> {
    Ok(Verdict::Refuted)
}
