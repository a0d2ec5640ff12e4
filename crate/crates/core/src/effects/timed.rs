use std::fmt;

use rand::{Rng, RngCore};

use super::{obs_error, DecompScope, EffectKit};
use crate::error::Result;
use crate::liftings::ObsSpec;
use crate::sexp::Sexp;
use crate::testlogic::{Family, Test};
use crate::trees::{Arity, Op, OpDecl, Signature};

/// Termination within at most this many steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeLimit(pub u64);

impl fmt::Display for TimeLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(tl {})", self.0)
    }
}

/// Deterministic programs whose steps `sk` are counted.
#[derive(Debug, Clone)]
pub struct TimedKit {
    sig: Signature,
}

impl TimedKit {
    pub fn new() -> Self {
        TimedKit {
            sig: Signature::new(vec![OpDecl::new("sk", Arity::Finite(1))])
                .expect("static signature"),
        }
    }
}

impl Default for TimedKit {
    fn default() -> Self {
        Self::new()
    }
}

impl ObsSpec for TimedKit {
    type Obs = TimeLimit;

    fn signature(&self) -> &Signature {
        &self.sig
    }

    fn leaf_fn(&self, _: &TimeLimit) -> bool {
        true
    }

    fn node_fn(&self, _: &Op, o: &TimeLimit) -> Test<(u64, TimeLimit)> {
        match o.0 {
            0 => Test::False,
            n => Test::Atom((0, TimeLimit(n - 1))),
        }
    }
}

impl EffectKit for TimedKit {
    fn name(&self) -> &'static str {
        "timed"
    }

    /// ⋁m ⋁k (if m + k ≤ n then ⟨(m, k)⟩ else False), both families supported on `0..=n`.
    fn decomp(&self, o: &TimeLimit, _: &DecompScope) -> Test<(TimeLimit, TimeLimit)> {
        let n = o.0;
        let support = n.checked_add(1);
        Test::BigOr(Family::tagged(("timed", n), support, move |m| {
            if m > n {
                return Test::False;
            }
            Test::BigOr(Family::tagged(("timed", n, m), support, move |k| {
                if m + k <= n {
                    Test::Atom((TimeLimit(m), TimeLimit(k)))
                } else {
                    Test::False
                }
            }))
        }))
    }

    fn obs_sample(&self) -> Vec<TimeLimit> {
        (0..=5).map(TimeLimit).collect()
    }

    fn random_obs(&self, rng: &mut dyn RngCore) -> TimeLimit {
        TimeLimit(rng.gen_range(0..=10))
    }

    fn parse_obs(&self, s: &Sexp) -> Result<TimeLimit> {
        match s.as_form() {
            Some(("tl", [n])) => Ok(TimeLimit(n.expect_nat()?)),
            _ => Err(obs_error(s)),
        }
    }
}
