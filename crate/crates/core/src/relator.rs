//! The Γ relation lifting over finite carriers and applicative Γ-simulation.

use std::collections::BTreeSet;
use std::fmt;

use crate::decompose::DoubleTree;
use crate::error::{Error, Result};
use crate::liftings::{Budget, ComplementingPair, Mode, ObsSpec};
use crate::logic::{Sort, TermBody, Ty};
use crate::trees::{force, mu, Env, Head, TreeExpr, Value};
use crate::verdict::Verdict;

/// Largest carrier whose R-correct predicates are enumerated.
pub const DEFAULT_CARRIER_CAP: usize = 12;

/// A finite set of values.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FiniteCarrier {
    elements: Vec<Value>,
}

impl FiniteCarrier {
    pub fn new(elements: Vec<Value>) -> Result<Self> {
        for (i, v) in elements.iter().enumerate() {
            if elements[..i].contains(v) {
                return Err(Error::IllTypedCandidate(format!(
                    "duplicate carrier element {v}"
                )));
            }
        }
        Ok(FiniteCarrier { elements })
    }

    /// The distinct values of `items`, in first-occurrence order.
    pub fn dedup(items: impl IntoIterator<Item = Value>) -> Self {
        let mut elements: Vec<Value> = Vec::new();
        for v in items {
            if !elements.contains(&v) {
                elements.push(v);
            }
        }
        FiniteCarrier { elements }
    }

    pub fn elements(&self) -> &[Value] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, v: &Value) -> Option<usize> {
        self.elements.iter().position(|e| e == v)
    }

    fn require(&self, v: &Value) -> Result<usize> {
        self.index_of(v)
            .ok_or_else(|| Error::NotInCarrier(v.to_string()))
    }
}

/// A homogeneous relation on the indices `0..size` of a carrier.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Relation {
    size: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl Relation {
    pub fn new(size: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        if let Some((a, b)) = pairs.iter().find(|(a, b)| *a >= size || *b >= size) {
            return Err(Error::IllTypedCandidate(format!(
                "pair ({a}, {b}) outside a carrier of size {size}"
            )));
        }
        Ok(Relation { size, pairs })
    }

    pub fn empty(size: usize) -> Self {
        Relation {
            size,
            pairs: BTreeSet::new(),
        }
    }

    pub fn identity(size: usize) -> Self {
        Relation {
            size,
            pairs: (0..size).map(|i| (i, i)).collect(),
        }
    }

    pub fn full(size: usize) -> Self {
        Relation {
            size,
            pairs: (0..size)
                .flat_map(|i| (0..size).map(move |j| (i, j)))
                .collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a, b))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        assert!(a < self.size && b < self.size, "pair outside the carrier");
        self.pairs.insert((a, b));
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        self.pairs.remove(&(a, b));
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (a, b)) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({a}, {b})")?;
        }
        f.write_str("}")
    }
}

pub fn relation_union(r: &Relation, s: &Relation) -> Relation {
    assert_eq!(r.size, s.size, "relations over different carriers");
    Relation {
        size: r.size,
        pairs: r.pairs.union(&s.pairs).copied().collect(),
    }
}

/// Reflexive-transitive closure.
pub fn relation_rt_closure(r: &Relation) -> Relation {
    let mut out = relation_union(r, &Relation::identity(r.size));
    loop {
        let step: Vec<(usize, usize)> = out
            .pairs
            .iter()
            .flat_map(|&(a, b)| {
                out.pairs
                    .range((b, 0)..(b + 1, 0))
                    .map(move |&(_, c)| (a, c))
            })
            .filter(|p| !out.pairs.contains(p))
            .collect();
        if step.is_empty() {
            return out;
        }
        out.pairs.extend(step);
    }
}

/// A subset of a carrier, as a bit mask over indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset(pub u64);

impl Subset {
    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn members(self, size: usize) -> Vec<usize> {
        (0..size).filter(|&i| self.contains(i)).collect()
    }
}

/// All subsets of the carrier closed upwards along `r`.
pub fn r_correct_predicates(size: usize, r: &Relation, cap: usize) -> Result<Vec<Subset>> {
    if size > cap.min(63) {
        return Err(Error::CarrierTooLarge { size, cap });
    }
    Ok((0..1u64 << size)
        .map(Subset)
        .filter(|s| r.pairs().all(|(a, b)| !s.contains(a) || s.contains(b)))
        .collect())
}

/// Outcome of a Γ check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GammaReport<O> {
    /// The predicate `subset` lifted at `obs` on `side` holds of the left
    /// tree and fails on the right one.
    Counterexample {
        subset: Vec<Value>,
        obs: O,
        side: Mode,
    },
    NoCounterexample {
        unknowns: usize,
    },
}

impl<O> GammaReport<O> {
    pub fn passes(&self) -> bool {
        matches!(self, GammaReport::NoCounterexample { .. })
    }
}

/// Verdicts of every lifted R-correct predicate on one tree, indexed by
/// (subset, observation, mode).
struct LiftTable {
    verdicts: Vec<Verdict>,
}

impl LiftTable {
    fn build<S: ObsSpec + ?Sized>(
        pair: &ComplementingPair<'_, S>,
        carrier: &FiniteCarrier,
        subsets: &[Subset],
        env: &Env,
        t: &TreeExpr,
        obs: &[S::Obs],
        budget: &Budget,
    ) -> Result<Self> {
        let mut verdicts = Vec::with_capacity(subsets.len() * obs.len() * 2);
        for &s in subsets {
            let pred = |v: &Value| Ok(Verdict::from_bool(s.contains(carrier.require(v)?)));
            for o in obs {
                for mode in [Mode::Alpha, Mode::Beta] {
                    verdicts.push(pair.check(mode, o, &pred, env, t, budget)?);
                }
            }
        }
        Ok(LiftTable { verdicts })
    }

    fn at(&self, s: usize, o: usize, mode: Mode, n_obs: usize) -> Verdict {
        self.verdicts[(s * n_obs + o) * 2 + (mode == Mode::Beta) as usize]
    }
}

fn compare_tables<O: Clone>(
    carrier: &FiniteCarrier,
    subsets: &[Subset],
    obs: &[O],
    t0: &LiftTable,
    t1: &LiftTable,
) -> GammaReport<O> {
    let mut unknowns = 0;
    for (si, s) in subsets.iter().enumerate() {
        for (oi, o) in obs.iter().enumerate() {
            for mode in [Mode::Alpha, Mode::Beta] {
                let (v0, v1) = (
                    t0.at(si, oi, mode, obs.len()),
                    t1.at(si, oi, mode, obs.len()),
                );
                if v0.is_proved() && v1.is_refuted() {
                    return GammaReport::Counterexample {
                        subset: s
                            .members(carrier.len())
                            .into_iter()
                            .map(|i| carrier.elements[i].clone())
                            .collect(),
                        obs: o.clone(),
                        side: mode,
                    };
                }
                if !v0.is_refuted() && !(v0.is_definite() && v1.is_definite()) {
                    unknowns += 1;
                }
            }
        }
    }
    GammaReport::NoCounterexample { unknowns }
}

/// Γ(R) t0 t1 on the sampled observations: every lifting of every
/// R-correct predicate that holds of `t0` also holds of `t1`.
#[allow(clippy::too_many_arguments)]
pub fn gamma_check<S: ObsSpec + ?Sized>(
    pair: &ComplementingPair<'_, S>,
    carrier: &FiniteCarrier,
    r: &Relation,
    env: &Env,
    t0: &TreeExpr,
    t1: &TreeExpr,
    obs: &[S::Obs],
    budget: &Budget,
) -> Result<GammaReport<S::Obs>> {
    let subsets = r_correct_predicates(carrier.len(), r, DEFAULT_CARRIER_CAP)?;
    let a = LiftTable::build(pair, carrier, &subsets, env, t0, obs, budget)?;
    let b = LiftTable::build(pair, carrier, &subsets, env, t1, obs, budget)?;
    Ok(compare_tables(carrier, &subsets, obs, &a, &b))
}

/// The relation Γ(R) restricted to `trees`, keeping only pairs decided
/// without unknowns.
pub fn gamma_relation<S: ObsSpec + ?Sized>(
    pair: &ComplementingPair<'_, S>,
    carrier: &FiniteCarrier,
    r: &Relation,
    env: &Env,
    trees: &[TreeExpr],
    obs: &[S::Obs],
    budget: &Budget,
) -> Result<Relation> {
    let subsets = r_correct_predicates(carrier.len(), r, DEFAULT_CARRIER_CAP)?;
    let tables = trees
        .iter()
        .map(|t| LiftTable::build(pair, carrier, &subsets, env, t, obs, budget))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Relation::empty(trees.len());
    for (i, a) in tables.iter().enumerate() {
        for (j, b) in tables.iter().enumerate() {
            if compare_tables(carrier, &subsets, obs, a, b)
                == (GammaReport::NoCounterexample { unknowns: 0 })
            {
                out.insert(i, j);
            }
        }
    }
    Ok(out)
}

/// Leaf payloads of a tree reachable through the first `window` children
/// of each node, without repetition. Named subtrees are visited once.
pub fn leaves(env: &Env, t: &TreeExpr, window: u64) -> Result<Vec<Value>> {
    fn go(
        env: &Env,
        t: &TreeExpr,
        window: u64,
        seen: &mut BTreeSet<String>,
        out: &mut Vec<Value>,
        depth: usize,
    ) -> Result<()> {
        if let TreeExpr::Ref(n) = t {
            if !seen.insert(n.to_string()) {
                return Ok(());
            }
        }
        if depth > 64 {
            return Ok(());
        }
        match force(env, t)? {
            Head::Leaf(v) => {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
            Head::Node(_, children) => {
                for i in 0..window {
                    match children.child(i) {
                        Some(c) => go(env, &c, window, seen, out, depth + 1)?,
                        None => break,
                    }
                }
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    go(env, t, window, &mut BTreeSet::new(), &mut out, 0)?;
    Ok(out)
}

/// Outcome of checking that Γ(Γ(R)) on double trees gives Γ(R) on their
/// flattenings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequencingReport<O> {
    pub hypothesis: GammaReport<O>,
    /// Only computed when the hypothesis passes without unknowns.
    pub conclusion: Option<GammaReport<O>>,
}

impl<O: PartialEq> SequencingReport<O> {
    pub fn hypothesis_holds(&self) -> bool {
        self.hypothesis == GammaReport::NoCounterexample { unknowns: 0 }
    }

    /// The hypothesis holds and the conclusion fails.
    pub fn violated(&self) -> bool {
        matches!(self.conclusion, Some(GammaReport::Counterexample { .. }))
    }
}

/// The inner trees at the outer leaves of `d0` and `d1` form the carrier
/// for Γ(Γ(R)); Γ(R) on them is computed pairwise.
#[allow(clippy::too_many_arguments)]
pub fn gamma_sequencing_check<S: ObsSpec + ?Sized>(
    pair: &ComplementingPair<'_, S>,
    carrier: &FiniteCarrier,
    r: &Relation,
    d0: &DoubleTree,
    d1: &DoubleTree,
    obs: &[S::Obs],
    budget: &Budget,
) -> Result<SequencingReport<S::Obs>> {
    let env = d0.env.merge(&d1.env)?;
    let window = budget.index_bound;
    let mut outer = leaves(&env, &d0.tree, window)?;
    for v in leaves(&env, &d1.tree, window)? {
        if !outer.contains(&v) {
            outer.push(v);
        }
    }
    let inner_trees = outer
        .iter()
        .map(|v| match v {
            Value::Thunk(t) => Ok((**t).clone()),
            _ => Err(Error::NonThunkLeaf),
        })
        .collect::<Result<Vec<_>>>()?;
    let outer_carrier = FiniteCarrier::new(outer)?;
    let lifted = gamma_relation(pair, carrier, r, &env, &inner_trees, obs, budget)?;
    let hypothesis = gamma_check(
        pair,
        &outer_carrier,
        &lifted,
        &env,
        &d0.tree,
        &d1.tree,
        obs,
        budget,
    )?;
    let mut report = SequencingReport {
        hypothesis,
        conclusion: None,
    };
    if report.hypothesis_holds() {
        report.conclusion = Some(gamma_check(
            pair,
            carrier,
            r,
            &env,
            &mu(d0.tree.clone()),
            &mu(d1.tree.clone()),
            obs,
            budget,
        )?);
    }
    Ok(report)
}

/// Terms of one (sort, type) together with the candidate relation on them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub sort: Sort,
    pub ty: Ty,
    pub terms: Vec<TermBody>,
    pub relation: Relation,
}

impl Layer {
    pub fn new(sort: Sort, ty: Ty, terms: Vec<TermBody>) -> Self {
        let n = terms.len();
        Layer {
            sort,
            ty,
            terms,
            relation: Relation::empty(n),
        }
    }

    fn position(&self, body: &TermBody) -> Option<usize> {
        self.terms.iter().position(|t| t == body)
    }
}

/// A candidate well-typed relation over a finite universe of terms.
#[derive(Debug, Clone)]
pub struct SimulationProblem<O> {
    pub env: Env,
    pub layers: Vec<Layer>,
    /// Arguments to try at each function type, keyed by the arrow type.
    pub arg_sets: Vec<(Ty, Vec<Value>)>,
    pub obs: Vec<O>,
    pub budget: Budget,
}

/// The first failed closure condition of a candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub sort: Sort,
    pub ty: Ty,
    pub left: usize,
    pub right: usize,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "pair ({}, {}) at ({}, {}): {}",
            self.left, self.right, self.sort, self.ty, self.reason
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimulationReport {
    Pass { unknowns: usize },
    Violation(Violation),
}

impl SimulationReport {
    pub fn passes(&self) -> bool {
        matches!(self, SimulationReport::Pass { .. })
    }
}

impl<O: Clone + fmt::Display> SimulationProblem<O> {
    pub fn layer(&self, sort: Sort, ty: &Ty) -> Option<usize> {
        self.layers
            .iter()
            .position(|l| l.sort == sort && &l.ty == ty)
    }

    fn locate(&self, sort: Sort, ty: &Ty, body: &TermBody) -> Result<(usize, usize)> {
        let li = self.layer(sort, ty).ok_or_else(|| {
            Error::IllTypedCandidate(format!("no terms at ({sort}, {ty}) in the universe"))
        })?;
        let ti = self.layers[li].position(body).ok_or_else(|| {
            let shown = match body {
                TermBody::Val(v) => v.to_string(),
                TermBody::Cpt(t) => t.to_string(),
            };
            Error::IllTypedCandidate(format!(
                "{shown} is missing from the universe at ({sort}, {ty})"
            ))
        })?;
        Ok((li, ti))
    }

    fn args(&self, ty: &Ty) -> &[Value] {
        self.arg_sets
            .iter()
            .find(|(t, _)| t == ty)
            .map_or(&[], |(_, a)| a.as_slice())
    }

    /// Why `(i, j)` in layer `li` breaks a closure condition under `rels`,
    /// or `None` when it does not. Adds undecided Γ comparisons to `unknowns`.
    fn pair_violation<S>(
        &self,
        pair: &ComplementingPair<'_, S>,
        rels: &[Relation],
        li: usize,
        i: usize,
        j: usize,
        unknowns: &mut usize,
    ) -> Result<Option<String>>
    where
        S: ObsSpec<Obs = O> + ?Sized,
    {
        let layer = &self.layers[li];
        let (a, b) = (&layer.terms[i], &layer.terms[j]);
        let related = |sort: Sort, ty: &Ty, x: TermBody, y: TermBody| -> Result<bool> {
            let (l1, x) = self.locate(sort, ty, &x)?;
            let (l2, y) = self.locate(sort, ty, &y)?;
            debug_assert_eq!(l1, l2);
            Ok(rels[l1].contains(x, y))
        };
        let shape =
            || Error::IllTypedCandidate(format!("term shapes do not match type {}", layer.ty));
        match (layer.sort, &layer.ty, a, b) {
            (Sort::Val, Ty::N, TermBody::Val(Value::Nat(n)), TermBody::Val(Value::Nat(m))) => {
                Ok((n != m).then(|| format!("{n} and {m} differ")))
            }
            (
                Sort::Val,
                Ty::Arrow(_, rho),
                TermBody::Val(Value::Fun(f)),
                TermBody::Val(Value::Fun(g)),
            ) => {
                for arg in self.args(&layer.ty) {
                    let (m, n) = (f.apply(arg)?, g.apply(arg)?);
                    if !related(Sort::Cpt, rho, TermBody::Cpt(m), TermBody::Cpt(n))? {
                        return Ok(Some(format!("applications to {arg} are unrelated")));
                    }
                }
                Ok(None)
            }
            (
                Sort::Val,
                Ty::Prod(s, t),
                TermBody::Val(Value::Pair(a0, a1)),
                TermBody::Val(Value::Pair(b0, b1)),
            ) => {
                if !related(
                    Sort::Val,
                    s,
                    TermBody::Val((**a0).clone()),
                    TermBody::Val((**b0).clone()),
                )? {
                    return Ok(Some("first components are unrelated".into()));
                }
                if !related(
                    Sort::Val,
                    t,
                    TermBody::Val((**a1).clone()),
                    TermBody::Val((**b1).clone()),
                )? {
                    return Ok(Some("second components are unrelated".into()));
                }
                Ok(None)
            }
            (
                Sort::Val,
                Ty::U(s),
                TermBody::Val(Value::Thunk(m)),
                TermBody::Val(Value::Thunk(n)),
            ) => {
                let ok = related(
                    Sort::Cpt,
                    s,
                    TermBody::Cpt((**m).clone()),
                    TermBody::Cpt((**n).clone()),
                )?;
                Ok((!ok).then(|| "thunked computations are unrelated".into()))
            }
            (Sort::Cpt, ty, TermBody::Cpt(m), TermBody::Cpt(n)) => {
                let vl = self.layer(Sort::Val, ty).ok_or_else(|| {
                    Error::IllTypedCandidate(format!("no values at (val, {ty}) in the universe"))
                })?;
                let values = &self.layers[vl];
                let carrier = FiniteCarrier::new(
                    values
                        .terms
                        .iter()
                        .map(|t| match t {
                            TermBody::Val(v) => Ok(v.clone()),
                            TermBody::Cpt(_) => Err(shape()),
                        })
                        .collect::<Result<_>>()?,
                )?;
                let report = gamma_check(
                    pair,
                    &carrier,
                    &rels[vl],
                    &self.env,
                    m,
                    n,
                    &self.obs,
                    &self.budget,
                )
                .map_err(|e| match e {
                    Error::NotInCarrier(v) => Error::IllTypedCandidate(format!(
                        "result {v} is missing from the universe at (val, {ty})"
                    )),
                    other => other,
                })?;
                match report {
                    GammaReport::Counterexample { subset, obs, side } => {
                        let set: Vec<String> = subset.iter().map(|v| v.to_string()).collect();
                        Ok(Some(format!(
                            "Γ fails: {side} {obs} holds of the left for {{{}}} but not of the right",
                            set.join(", ")
                        )))
                    }
                    GammaReport::NoCounterexample { unknowns: u } => {
                        *unknowns += u;
                        Ok(None)
                    }
                }
            }
            _ => Err(shape()),
        }
    }

    fn current(&self) -> Vec<Relation> {
        self.layers.iter().map(|l| l.relation.clone()).collect()
    }

    /// Checks every closure condition for every related pair.
    pub fn check<S>(&self, pair: &ComplementingPair<'_, S>) -> Result<SimulationReport>
    where
        S: ObsSpec<Obs = O> + ?Sized,
    {
        let rels = self.current();
        let mut unknowns = 0;
        for (li, layer) in self.layers.iter().enumerate() {
            for (i, j) in layer.relation.pairs() {
                if let Some(reason) = self.pair_violation(pair, &rels, li, i, j, &mut unknowns)? {
                    return Ok(SimulationReport::Violation(Violation {
                        sort: layer.sort,
                        ty: layer.ty.clone(),
                        left: i,
                        right: j,
                        reason,
                    }));
                }
            }
        }
        Ok(SimulationReport::Pass { unknowns })
    }

    /// The largest relation contained in the current candidate that passes
    /// [`SimulationProblem::check`]: pairs are removed until no condition
    /// fails. Undecided Γ checks keep their pair, so a pair outside the
    /// result is refuted outright.
    pub fn greatest_within<S>(&self, pair: &ComplementingPair<'_, S>) -> Result<Vec<Relation>>
    where
        S: ObsSpec<Obs = O> + ?Sized,
    {
        let mut rels = self.current();
        loop {
            let mut changed = false;
            for li in 0..self.layers.len() {
                let pairs: Vec<_> = rels[li].pairs().collect();
                for (i, j) in pairs {
                    let mut u = 0;
                    if self
                        .pair_violation(pair, &rels, li, i, j, &mut u)?
                        .is_some()
                    {
                        rels[li].remove(i, j);
                        changed = true;
                    }
                }
            }
            if !changed {
                return Ok(rels);
            }
        }
    }

    /// Replaces every candidate relation.
    pub fn with_relations(&self, rels: Vec<Relation>) -> Self {
        let mut p = self.clone();
        for (l, r) in p.layers.iter_mut().zip(rels) {
            l.relation = r;
        }
        p
    }

    /// Sets every candidate to the full relation on its layer.
    pub fn with_full_candidate(&self) -> Self {
        let rels = self
            .layers
            .iter()
            .map(|l| Relation::full(l.terms.len()))
            .collect();
        self.with_relations(rels)
    }
}

/// Checks the five closure conditions of an applicative Γ-simulation.
pub fn simulation_check<S: ObsSpec + ?Sized>(
    pair: &ComplementingPair<'_, S>,
    problem: &SimulationProblem<S::Obs>,
) -> Result<SimulationReport> {
    problem.check(pair)
}

/// The greatest applicative Γ-simulation on the problem's universe. A pair
/// outside it is related by no simulation at all.
pub fn greatest_simulation<S: ObsSpec + ?Sized>(
    pair: &ComplementingPair<'_, S>,
    problem: &SimulationProblem<S::Obs>,
) -> Result<Vec<Relation>> {
    problem.with_full_candidate().greatest_within(pair)
}
