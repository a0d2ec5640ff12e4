use std::fmt;

use rand::RngCore;

use super::{obs_error, DecompScope, EffectKit};
use crate::error::Result;
use crate::liftings::ObsSpec;
use crate::sexp::Sexp;
use crate::testlogic::Test;
use crate::trees::{Arity, Op, OpDecl, Signature};

/// The single observation of the unobservable-skip kit: termination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Termination;

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("term")
    }
}

/// Deterministic programs with unobservable steps `sk`.
#[derive(Debug, Clone)]
pub struct PureKit {
    sig: Signature,
}

impl PureKit {
    pub fn new() -> Self {
        PureKit {
            sig: Signature::new(vec![OpDecl::new("sk", Arity::Finite(1))])
                .expect("static signature"),
        }
    }
}

impl Default for PureKit {
    fn default() -> Self {
        Self::new()
    }
}

impl ObsSpec for PureKit {
    type Obs = Termination;

    fn signature(&self) -> &Signature {
        &self.sig
    }

    fn leaf_fn(&self, _: &Termination) -> bool {
        true
    }

    fn node_fn(&self, _: &Op, _: &Termination) -> Test<(u64, Termination)> {
        Test::Atom((0, Termination))
    }
}

impl EffectKit for PureKit {
    fn name(&self) -> &'static str {
        "pure"
    }

    fn decomp(&self, _: &Termination, _: &DecompScope) -> Test<(Termination, Termination)> {
        Test::Atom((Termination, Termination))
    }

    fn obs_sample(&self) -> Vec<Termination> {
        vec![Termination]
    }

    fn random_obs(&self, _: &mut dyn RngCore) -> Termination {
        Termination
    }

    fn parse_obs(&self, s: &Sexp) -> Result<Termination> {
        match s.as_atom() {
            Some("term") => Ok(Termination),
            _ => Err(obs_error(s)),
        }
    }
}
