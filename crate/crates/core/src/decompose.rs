//! Double trees, the refinement orders on trees and double trees, and
//! randomized checks that each kit's decomposition is exact.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::Rng;

use crate::effects::EffectKit;
use crate::error::{Error, Result};
use crate::gen::{self, GenRng};
use crate::liftings::{Budget, ComplementingPair, Mode, ObsSpec};
use crate::testlogic::try_eval_test;
use crate::trees::{map_tree, mu, Env, TreeExpr, Value};
use crate::verdict::Verdict;

/// Leaves of inner trees encode a verdict in `n % 3` and an identifier in
/// `n / 3`, so that leaves can be rewritten individually through lazy maps.
pub fn leaf_of(v: Verdict) -> Value {
    leaf_with_id(v, 0)
}

pub fn leaf_with_id(v: Verdict, id: u64) -> Value {
    let code = match v {
        Verdict::Refuted => 0,
        Verdict::Unknown => 1,
        Verdict::Proved => 2,
    };
    Value::Nat(id * 3 + code)
}

pub fn verdict_of(v: &Value) -> Result<Verdict> {
    match v.as_nat().map(|n| n % 3) {
        Some(0) => Ok(Verdict::Refuted),
        Some(1) => Ok(Verdict::Unknown),
        Some(2) => Ok(Verdict::Proved),
        _ => Err(Error::SortMismatch(format!(
            "leaf {v} of a verdict-leaved tree is not a verdict code"
        ))),
    }
}

/// A tree whose leaves are thunks of verdict-leaved inner trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleTree {
    pub env: Env,
    pub tree: TreeExpr,
}

impl DoubleTree {
    pub fn new(env: Env, tree: TreeExpr) -> Self {
        DoubleTree { env, tree }
    }

    /// The sequenced tree.
    pub fn flatten(&self) -> TreeExpr {
        mu(self.tree.clone())
    }
}

impl fmt::Display for DoubleTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tree)
    }
}

fn inner_tree(v: &Value) -> Result<&TreeExpr> {
    match v {
        Value::Thunk(t) => Ok(t),
        _ => Err(Error::NonThunkLeaf),
    }
}

/// `mode o0 (λ inner. mode o1 verdict inner) d`: the observational tower.
pub fn tower<S: ObsSpec + ?Sized>(
    pair: &ComplementingPair<'_, S>,
    mode: Mode,
    o0: &S::Obs,
    o1: &S::Obs,
    d: &DoubleTree,
    budget: &Budget,
) -> Result<Verdict> {
    let inner = |v: &Value| pair.check(mode, o1, &verdict_of, &d.env, inner_tree(v)?, budget);
    pair.check(mode, o0, &inner, &d.env, &d.tree, budget)
}

/// Whether a refinement check found a violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refinement<O> {
    HoldsOnSample,
    /// The left side is proved and the right side refuted at these observations.
    Counterexample {
        obs: Vec<O>,
        side: Mode,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefineReport<O> {
    pub result: Refinement<O>,
    /// Implications that could not be decided.
    pub unknowns: usize,
}

impl<O> RefineReport<O> {
    pub fn holds(&self) -> bool {
        matches!(self.result, Refinement::HoldsOnSample)
    }
}

/// `t0 ⊑ t1` on verdict-leaved trees: every sampled α and β statement of
/// `t0` carries over to `t1`.
pub fn tree_refines<S: ObsSpec + ?Sized>(
    pair: &ComplementingPair<'_, S>,
    env: &Env,
    t0: &TreeExpr,
    t1: &TreeExpr,
    obs: &[S::Obs],
    budget: &Budget,
) -> Result<RefineReport<S::Obs>> {
    let mut unknowns = 0;
    for o in obs {
        for mode in [Mode::Alpha, Mode::Beta] {
            let v0 = pair.check(mode, o, &verdict_of, env, t0, budget)?;
            if v0.is_refuted() {
                continue;
            }
            let v1 = pair.check(mode, o, &verdict_of, env, t1, budget)?;
            if v0.is_proved() && v1.is_refuted() {
                return Ok(RefineReport {
                    result: Refinement::Counterexample {
                        obs: vec![o.clone()],
                        side: mode,
                    },
                    unknowns,
                });
            }
            if !(v0.is_definite() && v1.is_definite()) {
                unknowns += 1;
            }
        }
    }
    Ok(RefineReport {
        result: Refinement::HoldsOnSample,
        unknowns,
    })
}

/// `d0 ⊑ d1` on double trees: every sampled α and β tower of `d0` carries
/// over to `d1`.
pub fn dtree_refines<S: ObsSpec + ?Sized>(
    pair: &ComplementingPair<'_, S>,
    d0: &DoubleTree,
    d1: &DoubleTree,
    obs: &[S::Obs],
    budget: &Budget,
) -> Result<RefineReport<S::Obs>> {
    let mut unknowns = 0;
    for o0 in obs {
        for o1 in obs {
            for mode in [Mode::Alpha, Mode::Beta] {
                let v0 = tower(pair, mode, o0, o1, d0, budget)?;
                if v0.is_refuted() {
                    continue;
                }
                let v1 = tower(pair, mode, o0, o1, d1, budget)?;
                if v0.is_proved() && v1.is_refuted() {
                    return Ok(RefineReport {
                        result: Refinement::Counterexample {
                            obs: vec![o0.clone(), o1.clone()],
                            side: mode,
                        },
                        unknowns,
                    });
                }
                if !(v0.is_definite() && v1.is_definite()) {
                    unknowns += 1;
                }
            }
        }
    }
    Ok(RefineReport {
        result: Refinement::HoldsOnSample,
        unknowns,
    })
}

/// Outcome of comparing the two sides of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Agree(Verdict),
    Disagree { lhs: Verdict, rhs: Verdict },
}

impl Comparison {
    fn of(lhs: Verdict, rhs: Verdict) -> Self {
        if lhs == rhs {
            Comparison::Agree(lhs)
        } else {
            Comparison::Disagree { lhs, rhs }
        }
    }

    pub fn agrees(&self) -> bool {
        matches!(self, Comparison::Agree(_))
    }
}

/// The lifting of `μ d` at `o` against the kit's decomposition test read
/// over towers of `d`.
pub fn check_decomposition<K: EffectKit>(
    kit: &K,
    mode: Mode,
    o: &K::Obs,
    d: &DoubleTree,
    budget: &Budget,
) -> Result<Comparison> {
    let pair = kit.pair();
    let lhs = pair.check(mode, o, &verdict_of, &d.env, &d.flatten(), budget)?;
    let scope = kit.decomp_scope(&d.env, &d.tree, o)?;
    let test = match mode {
        Mode::Alpha => kit.decomp(o, &scope),
        Mode::Beta => kit.decomp_beta(o, &scope),
    };
    let rhs = try_eval_test(
        &mut |(o0, o1): &(K::Obs, K::Obs)| tower(&pair, mode, o0, o1, d, budget),
        &test,
        budget.index_bound,
    )?;
    Ok(Comparison::of(lhs, rhs))
}

pub fn check_alpha_decomposition<K: EffectKit>(
    kit: &K,
    o: &K::Obs,
    d: &DoubleTree,
    budget: &Budget,
) -> Result<Comparison> {
    check_decomposition(kit, Mode::Alpha, o, d, budget)
}

pub fn check_beta_decomposition<K: EffectKit>(
    kit: &K,
    o: &K::Obs,
    d: &DoubleTree,
    budget: &Budget,
) -> Result<Comparison> {
    check_decomposition(kit, Mode::Beta, o, d, budget)
}

/// Draws a finite double tree with the given generator state. Inner leaves
/// get distinct identifiers.
pub fn random_double_tree<K: EffectKit>(
    kit: &K,
    r: &mut GenRng,
    depth: usize,
    leaf_verdicts: &[Verdict],
) -> DoubleTree {
    assert!(!leaf_verdicts.is_empty(), "need at least one leaf verdict");
    let mut next_id = 0u64;
    let mut outer_leaf = |r: &mut GenRng| {
        let mut inner_leaf = |r: &mut GenRng| {
            next_id += 1;
            leaf_with_id(leaf_verdicts[r.gen_range(0..leaf_verdicts.len())], next_id)
        };
        let inner_depth = r.gen_range(0..=depth);
        Value::thunk(gen::finite_tree(kit, r, inner_depth, &mut inner_leaf))
    };
    let tree = gen::finite_tree(kit, r, depth, &mut outer_leaf);
    DoubleTree::new(Env::empty(), tree)
}

/// A finite double tree of height at most `depth`, reproducible from `seed`.
pub fn gen_double_tree<K: EffectKit>(
    kit: &K,
    depth: usize,
    leaf_verdicts: &[Verdict],
    seed: u64,
) -> DoubleTree {
    random_double_tree(kit, &mut gen::rng(seed), depth, leaf_verdicts)
}

/// Rewrites every inner leaf of `d` through `f`, lazily.
pub fn map_inner_leaves(
    d: &DoubleTree,
    f: impl Fn(&Value) -> Value + Send + Sync + Clone + 'static,
) -> DoubleTree {
    let outer = map_tree(
        move |v| match v {
            Value::Thunk(t) => Value::thunk(map_tree(f.clone(), (**t).clone())),
            other => other.clone(),
        },
        d.tree.clone(),
    );
    DoubleTree::new(d.env.clone(), outer)
}

fn coin(salt: u64, id: u64) -> bool {
    let mut h = DefaultHasher::new();
    (salt, id).hash(&mut h);
    h.finish() & 1 == 1
}

/// Raises a pseudo-random selection of inner leaf verdicts by one step
/// (`Refuted` to `Unknown` or `Proved`, `Unknown` to `Proved`). The result
/// refines `d` because both liftings are monotone in the leaf predicate.
pub fn raise_leaves(d: &DoubleTree, salt: u64, skip_unknown: bool) -> DoubleTree {
    map_inner_leaves(d, move |v| {
        let Some(n) = v.as_nat() else {
            return v.clone();
        };
        let (id, code) = (n / 3, n % 3);
        if code == 2 || !coin(salt, id) {
            return v.clone();
        }
        let raised = if code == 0 && !skip_unknown { 1 } else { 2 };
        Value::Nat(id * 3 + raised)
    })
}

/// One decomposition disagreement found by the suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement<O> {
    pub sample: usize,
    pub mode: Mode,
    pub obs: O,
    pub tree: String,
    pub lhs: Verdict,
    pub rhs: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport<O> {
    pub samples: usize,
    /// Samples on which both decompositions agreed.
    pub passed: usize,
    pub disagreements: Vec<Disagreement<O>>,
    /// Agreements at `Unknown`.
    pub unknowns: usize,
    /// Refining pairs `d0 ⊑ d1` whose flattenings were compared.
    pub lemma_checked: usize,
    /// Pairs with `d0 ⊑ d1` but not `μ d0 ⊑ μ d1`.
    pub lemma_violations: Vec<(String, String)>,
}

impl<O> SuiteReport<O> {
    pub fn ok(&self) -> bool {
        self.disagreements.is_empty() && self.lemma_violations.is_empty()
    }
}

/// Compares both decompositions on `samples` random double trees and
/// observations, and checks that flattening preserves refinement on
/// monotonically raised copies.
pub fn strong_decomposability_suite<K: EffectKit>(
    kit: &K,
    samples: usize,
    depth: usize,
    seed: u64,
    budget: &Budget,
) -> Result<SuiteReport<K::Obs>> {
    let mut r = gen::rng(seed);
    let verdicts = [Verdict::Refuted, Verdict::Proved];
    let pair = kit.pair();
    let sample_obs = kit.obs_sample();
    let mut report = SuiteReport {
        samples,
        passed: 0,
        disagreements: Vec::new(),
        unknowns: 0,
        lemma_checked: 0,
        lemma_violations: Vec::new(),
    };
    for i in 0..samples {
        let d = random_double_tree(kit, &mut r, depth, &verdicts);
        let o = kit.random_obs(&mut r);
        let mut ok = true;
        for mode in [Mode::Alpha, Mode::Beta] {
            match check_decomposition(kit, mode, &o, &d, budget)? {
                Comparison::Agree(v) => {
                    if !v.is_definite() {
                        report.unknowns += 1;
                    }
                }
                Comparison::Disagree { lhs, rhs } => {
                    ok = false;
                    report.disagreements.push(Disagreement {
                        sample: i,
                        mode,
                        obs: o.clone(),
                        tree: d.to_string(),
                        lhs,
                        rhs,
                    });
                }
            }
        }
        if ok {
            report.passed += 1;
        }
        if i % 2 == 0 {
            let d1 = raise_leaves(&d, r.gen(), true);
            check_lemma(&pair, &d, &d1, &sample_obs, budget, &mut report)?;
        }
    }
    Ok(report)
}

/// If `d0 ⊑ d1` holds on the sample with every verdict decided, checks
/// `μ d0 ⊑ μ d1` and records a violation. Returns whether the hypothesis held.
pub fn check_lemma<S: ObsSpec + ?Sized>(
    pair: &ComplementingPair<'_, S>,
    d0: &DoubleTree,
    d1: &DoubleTree,
    obs: &[S::Obs],
    budget: &Budget,
    report: &mut SuiteReport<S::Obs>,
) -> Result<bool> {
    let hyp = dtree_refines(pair, d0, d1, obs, budget)?;
    if !hyp.holds() || hyp.unknowns > 0 {
        return Ok(false);
    }
    let env = d0.env.merge(&d1.env)?;
    report.lemma_checked += 1;
    let concl = tree_refines(pair, &env, &d0.flatten(), &d1.flatten(), obs, budget)?;
    if !concl.holds() {
        report
            .lemma_violations
            .push((d0.to_string(), d1.to_string()));
    }
    Ok(true)
}
