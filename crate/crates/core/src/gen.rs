//! Seeded random generators for trees and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::effects::EffectKit;
use crate::logic::{Formula, Sort, Ty};
use crate::testlogic::{Family, Test};
use crate::trees::{Arity, Children, Env, TreeExpr, Value};
use crate::verdict::Verdict;

pub type GenRng = ChaCha8Rng;

pub fn rng(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Number of explicitly generated children of a countable node.
pub const WINDOW: usize = 4;

/// Payload generator for leaves.
pub type LeafGen<'a> = &'a mut dyn FnMut(&mut GenRng) -> Value;

/// Leaves carrying naturals below `n`.
pub fn nat_leaves(n: u64) -> impl FnMut(&mut GenRng) -> Value {
    move |r| Value::Nat(r.gen_range(0..n))
}

pub fn random_verdict(r: &mut GenRng) -> Verdict {
    match r.gen_range(0..3) {
        0 => Verdict::Refuted,
        1 => Verdict::Unknown,
        _ => Verdict::Proved,
    }
}

/// Tree generation with optional back-references into named definitions.
struct TreeBuilder<'a, 'k, K> {
    kit: &'k K,
    leaf: LeafGen<'a>,
    names: &'a [String],
    ref_chance: f64,
}

impl<K: EffectKit> TreeBuilder<'_, '_, K> {
    fn tree(&mut self, r: &mut GenRng, depth: usize, below_node: bool) -> TreeExpr {
        if below_node && !self.names.is_empty() && r.gen_bool(self.ref_chance) {
            let n = &self.names[r.gen_range(0..self.names.len())];
            return TreeExpr::reference(n);
        }
        if depth == 0 || r.gen_bool(0.3) {
            return TreeExpr::Leaf((self.leaf)(r));
        }
        let op = self.kit.random_op(r);
        let arity = self
            .kit
            .signature()
            .arity(&op)
            .expect("kit generates declared ops");
        match arity {
            Arity::Finite(n) => {
                let children = (0..n).map(|_| self.tree(r, depth - 1, true)).collect();
                TreeExpr::node(op, children)
            }
            Arity::Countable => {
                let window: Vec<TreeExpr> =
                    (0..WINDOW).map(|_| self.tree(r, depth - 1, true)).collect();
                let tail = TreeExpr::Leaf((self.leaf)(r));
                TreeExpr::Node(
                    op,
                    Children::rule(move |i| {
                        window
                            .get(i as usize)
                            .cloned()
                            .unwrap_or_else(|| tail.clone())
                    }),
                )
            }
        }
    }
}

/// A finite tree of height at most `depth` over the kit's signature.
pub fn finite_tree<K: EffectKit>(
    kit: &K,
    r: &mut GenRng,
    depth: usize,
    leaf: LeafGen<'_>,
) -> TreeExpr {
    TreeBuilder {
        kit,
        leaf,
        names: &[],
        ref_chance: 0.0,
    }
    .tree(r, depth, false)
}

/// A rational tree: up to three mutually recursive definitions, named
/// `{prefix}0`, `{prefix}1`, .., with references only below nodes.
pub fn rational_tree<K: EffectKit>(
    kit: &K,
    r: &mut GenRng,
    depth: usize,
    prefix: &str,
    leaf: LeafGen<'_>,
) -> (Env, TreeExpr) {
    rational_tree_over(kit, r, depth, prefix, &Env::empty(), leaf)
}

/// Like [`rational_tree`], with the definitions of `base` in scope (for
/// leaf payloads that refer to them). The result contains `base`.
pub fn rational_tree_over<K: EffectKit>(
    kit: &K,
    r: &mut GenRng,
    depth: usize,
    prefix: &str,
    base: &Env,
    leaf: LeafGen<'_>,
) -> (Env, TreeExpr) {
    let count = r.gen_range(1..=3);
    let names: Vec<String> = (0..count).map(|i| format!("{prefix}{i}")).collect();
    let mut b = TreeBuilder {
        kit,
        leaf,
        names: &names,
        ref_chance: 0.3,
    };
    let defs: Vec<(String, TreeExpr)> = names
        .iter()
        .map(|n| (n.clone(), b.tree(r, depth, false)))
        .collect();
    let root = if r.gen_bool(0.5) {
        TreeExpr::reference(&names[0])
    } else {
        b.tree(r, depth, false)
    };
    let inherited = base
        .names()
        .map(|n| (n.clone(), base.get(n).expect("own name").clone()));
    let env = Env::new(inherited.chain(defs.into_iter().map(|(n, t)| (n.into(), t))))
        .expect("generated definitions are closed and guarded");
    (env, root)
}

/// A random test of connective depth at most `depth`.
pub fn random_test<A: Clone + Send + Sync + 'static>(
    r: &mut GenRng,
    depth: usize,
    atom: &mut dyn FnMut(&mut GenRng) -> A,
) -> Test<A> {
    let choice = if depth == 0 {
        r.gen_range(0..3)
    } else {
        r.gen_range(0..7)
    };
    match choice {
        0 => Test::Atom(atom(r)),
        1 => Test::True,
        2 => Test::False,
        3 => Test::and(
            random_test(r, depth - 1, atom),
            random_test(r, depth - 1, atom),
        ),
        4 => Test::or(
            random_test(r, depth - 1, atom),
            random_test(r, depth - 1, atom),
        ),
        c => {
            let disjunctive = c == 5;
            let support = if r.gen_bool(0.7) {
                Some(r.gen_range(0..=4))
            } else {
                None
            };
            let len = r.gen_range(1..=3);
            let members: Vec<Test<A>> = (0..len).map(|_| random_test(r, depth - 1, atom)).collect();
            let tail = if disjunctive { Test::False } else { Test::True };
            let fam = Family::new(support, move |i| {
                if support.is_some_and(|s| i >= s) {
                    tail.clone()
                } else {
                    members[i as usize % members.len()].clone()
                }
            });
            if disjunctive {
                Test::BigOr(fam)
            } else {
                Test::BigAnd(fam)
            }
        }
    }
}

/// A random formula at `(sort, ty)`. Arrow types must take naturals.
/// Without `families` only binary connectives occur, so the formula prints
/// in a form that parses back to itself.
pub fn random_formula<K: EffectKit>(
    kit: &K,
    r: &mut GenRng,
    sort: Sort,
    ty: &Ty,
    depth: usize,
    families: bool,
) -> Formula<K::Obs> {
    if depth > 0 && r.gen_bool(0.25) {
        let mut atom = |r: &mut GenRng| random_formula(kit, r, sort, ty, depth - 1, families);
        let t = if families {
            random_test(r, 2, &mut atom)
        } else {
            binary_test(r, 2, &mut atom)
        };
        return Formula::test(t);
    }
    let next = depth.saturating_sub(1);
    match (sort, ty) {
        (Sort::Cpt, _) => {
            let o = kit.random_obs(r);
            let phi = random_formula(kit, r, Sort::Val, ty, next, families);
            if r.gen_bool(0.5) {
                Formula::obs_a(o, phi)
            } else {
                Formula::obs_b(o, phi)
            }
        }
        (Sort::Val, Ty::N) => {
            let n = r.gen_range(0..4);
            if r.gen_bool(0.5) {
                Formula::Eq(n)
            } else {
                Formula::Neq(n)
            }
        }
        (Sort::Val, Ty::U(a)) => {
            Formula::thunk(random_formula(kit, r, Sort::Cpt, a, next, families))
        }
        (Sort::Val, Ty::Prod(a, b)) => {
            if r.gen_bool(0.5) {
                Formula::fst(random_formula(kit, r, Sort::Val, a, next, families))
            } else {
                Formula::snd(random_formula(kit, r, Sort::Val, b, next, families))
            }
        }
        (Sort::Val, Ty::Arrow(_, b)) => Formula::maps_to(
            Value::Nat(r.gen_range(0..3)),
            random_formula(kit, r, Sort::Cpt, b, next, families),
        ),
    }
}

fn binary_test<A>(r: &mut GenRng, depth: usize, atom: &mut dyn FnMut(&mut GenRng) -> A) -> Test<A> {
    let choice = if depth == 0 {
        r.gen_range(0..3)
    } else {
        r.gen_range(0..5)
    };
    match choice {
        0 => Test::Atom(atom(r)),
        1 => Test::True,
        2 => Test::False,
        3 => Test::and(
            binary_test(r, depth - 1, atom),
            binary_test(r, depth - 1, atom),
        ),
        _ => Test::or(
            binary_test(r, depth - 1, atom),
            binary_test(r, depth - 1, atom),
        ),
    }
}
