use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rand::{Rng, RngCore};

use super::{obs_error, DecompScope, EffectKit};
use crate::error::Result;
use crate::liftings::ObsSpec;
use crate::sexp::Sexp;
use crate::testlogic::{Family, Test};
use crate::trees::{force_keyed, Arity, Env, Head, Op, OpDecl, Signature, TreeExpr};

/// A pair of initial and final states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateObs(pub u64, pub u64);

impl fmt::Display for StateObs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(st {} {})", self.0, self.1)
    }
}

/// A single natural-number cell with `update k` (one child) and `lookup`
/// (countably many children, one per current state).
#[derive(Debug, Clone)]
pub struct StoreKit {
    sig: Signature,
}

impl StoreKit {
    pub fn new() -> Self {
        StoreKit {
            sig: Signature::new(vec![
                OpDecl::parameterised("update", Arity::Finite(1)),
                OpDecl::new("lookup", Arity::Countable),
            ])
            .expect("static signature"),
        }
    }
}

impl Default for StoreKit {
    fn default() -> Self {
        Self::new()
    }
}

impl ObsSpec for StoreKit {
    type Obs = StateObs;

    fn signature(&self) -> &Signature {
        &self.sig
    }

    fn leaf_fn(&self, o: &StateObs) -> bool {
        o.0 == o.1
    }

    fn node_fn(&self, op: &Op, o: &StateObs) -> Test<(u64, StateObs)> {
        match (op.name.as_ref(), op.param) {
            ("update", Some(k)) => Test::Atom((0, StateObs(k, o.1))),
            ("lookup", _) => Test::Atom((o.0, *o)),
            _ => Test::False,
        }
    }
}

impl EffectKit for StoreKit {
    fn name(&self) -> &'static str {
        "store"
    }

    /// ⋁k ⟨((n, k), (k, m))⟩, cut off at the scope's state bound if known.
    fn decomp(&self, o: &StateObs, scope: &DecompScope) -> Test<(StateObs, StateObs)> {
        let StateObs(n, m) = *o;
        Test::BigOr(Family::tagged(
            ("store", n, m),
            scope.state_bound,
            move |k| Test::Atom((StateObs(n, k), StateObs(k, m))),
        ))
    }

    fn decomp_scope(&self, env: &Env, d: &TreeExpr, o: &StateObs) -> Result<DecompScope> {
        let states = store_footprint(env, d, o.0)?;
        Ok(DecompScope {
            state_bound: states.and_then(|s| s.last().map(|k| k + 1)),
        })
    }

    fn obs_sample(&self) -> Vec<StateObs> {
        (0..=4)
            .flat_map(|n| (0..=4).map(move |m| StateObs(n, m)))
            .collect()
    }

    fn random_obs(&self, rng: &mut dyn RngCore) -> StateObs {
        StateObs(rng.gen_range(0..=4), rng.gen_range(0..=4))
    }

    fn random_op(&self, rng: &mut dyn RngCore) -> Op {
        if rng.gen_bool(0.5) {
            Op::with_param("update", rng.gen_range(0..=3))
        } else {
            Op::new("lookup")
        }
    }

    fn parse_obs(&self, s: &Sexp) -> Result<StateObs> {
        match s.as_form() {
            Some(("st", [n, m])) => Ok(StateObs(n.expect_nat()?, m.expect_nat()?)),
            _ => Err(obs_error(s)),
        }
    }
}

const FOOTPRINT_DEPTH: usize = 256;

/// The states a run of `t` from `init` can be in at any node or leaf: the
/// initial state together with every reachable `update` argument. `lookup`
/// children are only explored at states in the footprint. `None` when an
/// anonymous infinite path prevents a finite answer.
pub fn store_footprint(env: &Env, t: &TreeExpr, init: u64) -> Result<Option<BTreeSet<u64>>> {
    let mut states = BTreeSet::from([init]);
    loop {
        let before = states.len();
        let mut seen = HashSet::new();
        if !collect(env, t, &mut states, &mut seen, 0)? {
            return Ok(None);
        }
        if states.len() == before {
            return Ok(Some(states));
        }
    }
}

fn collect(
    env: &Env,
    t: &TreeExpr,
    states: &mut BTreeSet<u64>,
    seen: &mut HashSet<crate::trees::Key>,
    depth: usize,
) -> Result<bool> {
    let (head, key) = force_keyed(env, t)?;
    let Head::Node(op, children) = head else {
        return Ok(true);
    };
    if let Some(k) = key {
        if !seen.insert(k) {
            return Ok(true);
        }
    } else if depth >= FOOTPRINT_DEPTH {
        return Ok(false);
    }
    match (op.name.as_ref(), op.param) {
        ("update", Some(k)) => {
            states.insert(k);
            if let Some(c) = children.child(0) {
                return collect(env, &c, states, seen, depth + 1);
            }
        }
        ("lookup", _) => {
            let now: Vec<u64> = states.iter().copied().collect();
            for s in now {
                if let Some(c) = children.child(s) {
                    if !collect(env, &c, states, seen, depth + 1)? {
                        return Ok(false);
                    }
                }
            }
        }
        _ => {}
    }
    Ok(true)
}
