use std::fmt;

use rand::{Rng, RngCore};

use super::{obs_error, DecompScope, EffectKit};
use crate::error::Result;
use crate::liftings::ObsSpec;
use crate::sexp::Sexp;
use crate::testlogic::{Family, Test};
use crate::trees::{Arity, Op, OpDecl, Signature};

/// One input bit. `Left` is child 0 of an `input` node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bit {
    Left,
    Right,
}

impl Bit {
    pub fn index(self) -> u64 {
        match self {
            Bit::Left => 0,
            Bit::Right => 1,
        }
    }

    fn parse(s: &Sexp) -> Result<Bit> {
        match s.as_atom() {
            Some("left") => Ok(Bit::Left),
            Some("right") => Ok(Bit::Right),
            _ => Err(s.error(format!("expected `left` or `right`, found `{s}`"))),
        }
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bit::Left => "left",
            Bit::Right => "right",
        })
    }
}

/// `(left, l)`: the program consumes exactly `l` and terminates.
/// `(right, l)`: the program consumes `l` and then asks for more input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputObs {
    pub mode: Bit,
    pub bits: Vec<Bit>,
}

impl InputObs {
    pub fn new(mode: Bit, bits: Vec<Bit>) -> Self {
        InputObs { mode, bits }
    }
}

impl fmt::Display for InputObs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(in {} (", self.mode)?;
        for (i, b) in self.bits.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str("))")
    }
}

/// Programs reading a stream of bits through a binary `input` operation.
#[derive(Debug, Clone)]
pub struct InputKit {
    sig: Signature,
}

impl InputKit {
    pub fn new() -> Self {
        InputKit {
            sig: Signature::new(vec![OpDecl::new("input", Arity::Finite(2))])
                .expect("static signature"),
        }
    }
}

impl Default for InputKit {
    fn default() -> Self {
        Self::new()
    }
}

impl ObsSpec for InputKit {
    type Obs = InputObs;

    fn signature(&self) -> &Signature {
        &self.sig
    }

    fn leaf_fn(&self, o: &InputObs) -> bool {
        o.mode == Bit::Left && o.bits.is_empty()
    }

    fn node_fn(&self, _: &Op, o: &InputObs) -> Test<(u64, InputObs)> {
        match o.bits.split_first() {
            None if o.mode == Bit::Right => Test::True,
            None => Test::False,
            Some((head, tail)) => Test::Atom((head.index(), InputObs::new(o.mode, tail.to_vec()))),
        }
    }
}

/// The `|l| + 1` ways of writing `l` as `x ++ y`, shortest `x` first.
fn splits(l: &[Bit]) -> Family<(InputObs, InputObs)> {
    let l = l.to_vec();
    let n = l.len() as u64 + 1;
    Family::tagged(("input-left", l.clone()), Some(n), move |i| {
        if i >= n {
            return Test::False;
        }
        let (x, y) = l.split_at(i as usize);
        Test::Atom((
            InputObs::new(Bit::Left, x.to_vec()),
            InputObs::new(Bit::Left, y.to_vec()),
        ))
    })
}

fn splits_then_right(l: &[Bit]) -> Family<(InputObs, InputObs)> {
    let l = l.to_vec();
    let n = l.len() as u64 + 1;
    Family::tagged(("input-right", l.clone()), Some(n), move |i| {
        if i >= n {
            return Test::False;
        }
        let (x, y) = l.split_at(i as usize);
        Test::Atom((
            InputObs::new(Bit::Left, x.to_vec()),
            InputObs::new(Bit::Right, y.to_vec()),
        ))
    })
}

impl EffectKit for InputKit {
    fn name(&self) -> &'static str {
        "input"
    }

    fn decomp(&self, o: &InputObs, _: &DecompScope) -> Test<(InputObs, InputObs)> {
        match o.mode {
            Bit::Left => Test::BigOr(splits(&o.bits)),
            Bit::Right => Test::or(
                Test::Atom((o.clone(), o.clone())),
                Test::BigOr(splits_then_right(&o.bits)),
            ),
        }
    }

    fn obs_sample(&self) -> Vec<InputObs> {
        let mut lists: Vec<Vec<Bit>> = vec![vec![]];
        for len in 1..=2 {
            lists.extend(all_bitlists(len));
        }
        [Bit::Left, Bit::Right]
            .into_iter()
            .flat_map(|b| lists.iter().map(move |l| InputObs::new(b, l.clone())))
            .collect()
    }

    fn random_obs(&self, rng: &mut dyn RngCore) -> InputObs {
        let mode = if rng.gen_bool(0.5) {
            Bit::Left
        } else {
            Bit::Right
        };
        let len = rng.gen_range(0..=3);
        let bits = (0..len)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Bit::Left
                } else {
                    Bit::Right
                }
            })
            .collect();
        InputObs::new(mode, bits)
    }

    fn parse_obs(&self, s: &Sexp) -> Result<InputObs> {
        match s.as_form() {
            Some(("in", [mode, bits])) => {
                let bits = bits
                    .expect_list("a list of bits")?
                    .iter()
                    .map(Bit::parse)
                    .collect::<Result<_>>()?;
                Ok(InputObs::new(Bit::parse(mode)?, bits))
            }
            _ => Err(obs_error(s)),
        }
    }
}

/// All bitlists of length `len` in lexicographic order (`left` < `right`).
pub fn all_bitlists(len: usize) -> Vec<Vec<Bit>> {
    (0..1u64 << len)
        .map(|code| {
            (0..len)
                .rev()
                .map(|i| {
                    if code >> i & 1 == 0 {
                        Bit::Left
                    } else {
                        Bit::Right
                    }
                })
                .collect()
        })
        .collect()
}
