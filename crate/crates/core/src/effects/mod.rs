//! The built-in observation specifications and their sequencing decompositions.
//!
//! Each kit fixes a signature, an observation domain with leaf and node
//! functions, and a test over observation pairs (`decomp`) that reduces a
//! lifting of a sequenced program to observational towers. The β side is
//! always the dual test.

mod input;
mod nondet;
mod pure;
mod store;
mod timed;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;

pub use input::{Bit, InputKit, InputObs};
pub use nondet::{NondetKit, NondetObs};
pub use pure::{PureKit, Termination};
pub use store::{store_footprint, StateObs, StoreKit};
pub use timed::{TimeLimit, TimedKit};

use crate::error::{Error, Result};
use crate::liftings::{complementing_pair, ComplementingPair, ObsSpec};
use crate::sexp::Sexp;
use crate::testlogic::{dual_test, Test};
use crate::trees::{Env, Op, TreeExpr};

/// Per-instance information some decompositions need to stay exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecompScope {
    /// Every state reachable by the first phase lies below this bound.
    pub state_bound: Option<u64>,
}

/// An observation specification together with its decomposition.
pub trait EffectKit: ObsSpec + Sized {
    fn name(&self) -> &'static str;

    /// The α-decomposition of `o` over `(first phase, second phase)` pairs.
    fn decomp(&self, o: &Self::Obs, scope: &DecompScope) -> Test<(Self::Obs, Self::Obs)>;

    /// The β-decomposition: the dual of [`EffectKit::decomp`].
    fn decomp_beta(&self, o: &Self::Obs, scope: &DecompScope) -> Test<(Self::Obs, Self::Obs)> {
        dual_test(&self.decomp(o, scope))
    }

    /// Scope needed to decompose `o` on the double tree `d`.
    fn decomp_scope(&self, _env: &Env, _d: &TreeExpr, _o: &Self::Obs) -> Result<DecompScope> {
        Ok(DecompScope::default())
    }

    /// A fixed finite sample of observations, closed under the observation
    /// pairs that `decomp` produces for its own members.
    fn obs_sample(&self) -> Vec<Self::Obs>;

    /// A random observation, for decomposition checks.
    fn random_obs(&self, rng: &mut dyn RngCore) -> Self::Obs;

    /// A random operation of the signature (with a parameter where needed).
    fn random_op(&self, rng: &mut dyn RngCore) -> Op {
        use rand::Rng;
        let decls = self.signature().decls();
        let d = &decls[rng.gen_range(0..decls.len())];
        if d.parameterised {
            Op::with_param(&d.name, rng.gen_range(0..4))
        } else {
            Op::new(&d.name)
        }
    }

    /// Parses an observation literal.
    fn parse_obs(&self, s: &Sexp) -> Result<Self::Obs>;

    fn pair(&self) -> ComplementingPair<'_, Self> {
        complementing_pair(self)
    }
}

/// Names of the built-in kits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EffectName {
    Pure,
    Timed,
    Nondet,
    Store,
    Input,
}

impl EffectName {
    pub const ALL: [EffectName; 5] = [
        EffectName::Pure,
        EffectName::Timed,
        EffectName::Nondet,
        EffectName::Store,
        EffectName::Input,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EffectName::Pure => "pure",
            EffectName::Timed => "timed",
            EffectName::Nondet => "nondet",
            EffectName::Store => "store",
            EffectName::Input => "input",
        }
    }
}

impl fmt::Display for EffectName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EffectName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EffectName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::UnknownOp(format!("effect `{s}`")))
    }
}

fn obs_error(s: &Sexp) -> Error {
    Error::UnknownObservation(s.to_string())
}

/// Observing termination only.
pub fn pure_unobservable_kit() -> PureKit {
    PureKit::new()
}

/// Observing termination within a step budget.
pub fn pure_timed_kit() -> TimedKit {
    TimedKit::new()
}

pub fn nondet_kit() -> NondetKit {
    NondetKit::new()
}

pub fn store_kit() -> StoreKit {
    StoreKit::new()
}

pub fn input_kit() -> InputKit {
    InputKit::new()
}
