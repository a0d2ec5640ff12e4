use std::fmt;

use rand::{Rng, RngCore};

use super::{obs_error, DecompScope, EffectKit};
use crate::error::Result;
use crate::liftings::ObsSpec;
use crate::sexp::Sexp;
use crate::testlogic::Test;
use crate::trees::{Arity, Op, OpDecl, Signature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NondetObs {
    May,
    Must,
}

impl fmt::Display for NondetObs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NondetObs::May => "may",
            NondetObs::Must => "must",
        })
    }
}

/// Binary choice `or`, resolved nondeterministically. Child 0 is left.
#[derive(Debug, Clone)]
pub struct NondetKit {
    sig: Signature,
}

impl NondetKit {
    pub fn new() -> Self {
        NondetKit {
            sig: Signature::new(vec![OpDecl::new("or", Arity::Finite(2))])
                .expect("static signature"),
        }
    }
}

impl Default for NondetKit {
    fn default() -> Self {
        Self::new()
    }
}

impl ObsSpec for NondetKit {
    type Obs = NondetObs;

    fn signature(&self) -> &Signature {
        &self.sig
    }

    fn leaf_fn(&self, _: &NondetObs) -> bool {
        true
    }

    fn node_fn(&self, _: &Op, o: &NondetObs) -> Test<(u64, NondetObs)> {
        let (l, r) = (Test::Atom((0, *o)), Test::Atom((1, *o)));
        match o {
            NondetObs::May => Test::or(l, r),
            NondetObs::Must => Test::and(l, r),
        }
    }
}

impl EffectKit for NondetKit {
    fn name(&self) -> &'static str {
        "nondet"
    }

    fn decomp(&self, o: &NondetObs, _: &DecompScope) -> Test<(NondetObs, NondetObs)> {
        Test::Atom((*o, *o))
    }

    fn obs_sample(&self) -> Vec<NondetObs> {
        vec![NondetObs::May, NondetObs::Must]
    }

    fn random_obs(&self, rng: &mut dyn RngCore) -> NondetObs {
        if rng.gen_bool(0.5) {
            NondetObs::May
        } else {
            NondetObs::Must
        }
    }

    fn parse_obs(&self, s: &Sexp) -> Result<NondetObs> {
        match s.as_atom() {
            Some("may") => Ok(NondetObs::May),
            Some("must") => Ok(NondetObs::Must),
            _ => Err(obs_error(s)),
        }
    }
}
