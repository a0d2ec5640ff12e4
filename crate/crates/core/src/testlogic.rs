//! The grammar of tests: finite and countable connectives over atoms,
//! its three-valued reading, the functor action and the De Morgan dual.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::verdict::Verdict;

/// A function on atoms, shared so that families can apply it lazily.
pub type AtomMap<A, B> = Arc<dyn Fn(&A) -> B + Send + Sync>;

/// A test over atoms of type `A`.
#[derive(Clone, PartialEq, Eq)]
pub enum Test<A> {
    Atom(A),
    True,
    False,
    And(Box<Test<A>>, Box<Test<A>>),
    Or(Box<Test<A>>, Box<Test<A>>),
    BigAnd(Family<A>),
    BigOr(Family<A>),
}

impl<A> Test<A> {
    pub fn atom(a: A) -> Self {
        Test::Atom(a)
    }

    pub fn and(l: Test<A>, r: Test<A>) -> Self {
        Test::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Test<A>, r: Test<A>) -> Self {
        Test::Or(Box::new(l), Box::new(r))
    }

    /// Visits every atom reachable without expanding countable families.
    pub fn finite_atoms(&self) -> Vec<&A> {
        let mut out = Vec::new();
        fn go<'a, A>(t: &'a Test<A>, out: &mut Vec<&'a A>) {
            match t {
                Test::Atom(a) => out.push(a),
                Test::And(l, r) | Test::Or(l, r) => {
                    go(l, out);
                    go(r, out);
                }
                Test::True | Test::False | Test::BigAnd(_) | Test::BigOr(_) => {}
            }
        }
        go(self, &mut out);
        out
    }
}

/// An ℕ-indexed family of tests under a countable connective.
///
/// Families compare by identity of their generator chain, their parity
/// and their support, so dualising twice gives back an equal family.
const TAG_BIT: usize = 1 << (usize::BITS - 1);

pub struct Family<A> {
    gen: Arc<dyn Fn(u64) -> Test<A> + Send + Sync>,
    key: Arc<[usize]>,
    /// Source family when this one was produced by an involutive map.
    prev: Option<Arc<Family<A>>>,
    support: Option<u64>,
    parity: bool,
}

impl<A> Clone for Family<A> {
    fn clone(&self) -> Self {
        Family {
            gen: self.gen.clone(),
            key: self.key.clone(),
            prev: self.prev.clone(),
            support: self.support,
            parity: self.parity,
        }
    }
}

impl<A> PartialEq for Family<A> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.parity == other.parity && self.support == other.support
    }
}

impl<A> Eq for Family<A> {}

impl<A> fmt::Debug for Family<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Family")
            .field("key", &self.key)
            .field("support", &self.support)
            .field("parity", &self.parity)
            .finish()
    }
}

impl<A: 'static> Family<A> {
    /// A family with generator `gen`. When `support = Some(s)`, indices at
    /// or beyond `s` carry the neutral tail of the surrounding connective
    /// (`False` under ⋁, `True` under ⋀) and are never generated.
    pub fn new(support: Option<u64>, gen: impl Fn(u64) -> Test<A> + Send + Sync + 'static) -> Self {
        let gen: Arc<dyn Fn(u64) -> Test<A> + Send + Sync> = Arc::new(gen);
        let key: Arc<[usize]> = Arc::from(vec![Arc::as_ptr(&gen) as *const () as usize]);
        Family {
            gen,
            key,
            prev: None,
            support,
            parity: false,
        }
    }

    /// A family identified by `tag` rather than by its generator, so that
    /// rebuilding it from the same description gives an equal family.
    pub fn tagged(
        tag: impl Hash,
        support: Option<u64>,
        gen: impl Fn(u64) -> Test<A> + Send + Sync + 'static,
    ) -> Self {
        let mut f = Family::new(support, gen);
        f.key = Arc::from(vec![tag_key(tag)]);
        f
    }

    pub fn support(&self) -> Option<u64> {
        self.support
    }

    pub fn parity(&self) -> bool {
        self.parity
    }

    /// The member at index `i`, dualised when the parity flag is set.
    pub fn at(&self, i: u64) -> Test<A> {
        let t = (self.gen)(i);
        if self.parity {
            t.into_dual()
        } else {
            t
        }
    }

    fn toggled(&self) -> Self {
        let mut f = self.clone();
        f.parity = !f.parity;
        f
    }

    fn mapped<B: 'static>(&self, f: &AtomMap<A, B>) -> Family<B> {
        let src = self.gen.clone();
        let g = f.clone();
        let mut key = self.key.to_vec();
        key.push(Arc::as_ptr(f) as *const () as usize);
        Family {
            gen: Arc::new(move |i| map_test(&g, &src(i))),
            key: key.into(),
            prev: None,
            support: self.support,
            parity: self.parity,
        }
    }

    fn mapped_involution(&self, fid: usize, f: &AtomMap<A, A>) -> Family<A> {
        if let Some(prev) = &self.prev {
            if self.key.last() == Some(&fid) {
                let mut back = (**prev).clone();
                back.parity = self.parity;
                return back;
            }
        }
        let src = self.gen.clone();
        let g = f.clone();
        let mut key = self.key.to_vec();
        key.push(fid);
        Family {
            gen: Arc::new(move |i| involution_with(fid, &g, &src(i))),
            key: key.into(),
            prev: Some(Arc::new(self.clone())),
            support: self.support,
            parity: self.parity,
        }
    }
}

impl<A: fmt::Debug> fmt::Debug for Test<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Test::Atom(a) => write!(f, "<{a:?}>"),
            Test::True => f.write_str("True"),
            Test::False => f.write_str("False"),
            Test::And(l, r) => write!(f, "({l:?} ∧ {r:?})"),
            Test::Or(l, r) => write!(f, "({l:?} ∨ {r:?})"),
            Test::BigAnd(fam) => write!(f, "⋀{fam:?}"),
            Test::BigOr(fam) => write!(f, "⋁{fam:?}"),
        }
    }
}

/// Strong-Kleene evaluation with an infallible atom evaluator.
pub fn eval_test<A: 'static>(
    mut atom_eval: impl FnMut(&A) -> Verdict,
    t: &Test<A>,
    index_bound: u64,
) -> Verdict {
    match try_eval_test(
        &mut |a: &A| Ok::<_, std::convert::Infallible>(atom_eval(a)),
        t,
        index_bound,
    ) {
        Ok(v) => v,
        Err(e) => match e {},
    }
}

/// Strong-Kleene evaluation; countable connectives inspect indices below
/// `min(support, index_bound)`. An unbounded or partly explored ⋁ never
/// yields `Refuted`, and dually ⋀ never yields `Proved`.
pub fn try_eval_test<A: 'static, E>(
    atom_eval: &mut dyn FnMut(&A) -> Result<Verdict, E>,
    t: &Test<A>,
    index_bound: u64,
) -> Result<Verdict, E> {
    let index_bound = index_bound.max(1);
    Ok(match t {
        Test::Atom(a) => atom_eval(a)?,
        Test::True => Verdict::Proved,
        Test::False => Verdict::Refuted,
        Test::And(l, r) => {
            let lv = try_eval_test(atom_eval, l, index_bound)?;
            if lv.is_refuted() {
                return Ok(lv);
            }
            lv.and(try_eval_test(atom_eval, r, index_bound)?)
        }
        Test::Or(l, r) => {
            let lv = try_eval_test(atom_eval, l, index_bound)?;
            if lv.is_proved() {
                return Ok(lv);
            }
            lv.or(try_eval_test(atom_eval, r, index_bound)?)
        }
        Test::BigOr(fam) => {
            let (limit, open_tail) = window(fam.support, index_bound);
            let mut acc = Verdict::Refuted;
            for i in 0..limit {
                acc = acc.or(try_eval_test(atom_eval, &fam.at(i), index_bound)?);
                if acc.is_proved() {
                    return Ok(acc);
                }
            }
            if open_tail {
                acc.or(Verdict::Unknown)
            } else {
                acc
            }
        }
        Test::BigAnd(fam) => {
            let (limit, open_tail) = window(fam.support, index_bound);
            let mut acc = Verdict::Proved;
            for i in 0..limit {
                acc = acc.and(try_eval_test(atom_eval, &fam.at(i), index_bound)?);
                if acc.is_refuted() {
                    return Ok(acc);
                }
            }
            if open_tail {
                acc.and(Verdict::Unknown)
            } else {
                acc
            }
        }
    })
}

fn window(support: Option<u64>, index_bound: u64) -> (u64, bool) {
    match support {
        Some(s) if s <= index_bound => (s, false),
        Some(_) | None => (index_bound, true),
    }
}

/// The De Morgan dual; atoms are fixed.
pub fn dual_test<A: Clone + 'static>(t: &Test<A>) -> Test<A> {
    t.clone().into_dual()
}

impl<A: 'static> Test<A> {
    /// Consuming form of [`dual_test`].
    pub fn into_dual(self) -> Test<A> {
        match self {
            Test::Atom(a) => Test::Atom(a),
            Test::True => Test::False,
            Test::False => Test::True,
            Test::And(l, r) => Test::or(l.into_dual(), r.into_dual()),
            Test::Or(l, r) => Test::and(l.into_dual(), r.into_dual()),
            Test::BigAnd(fam) => Test::BigOr(fam.toggled()),
            Test::BigOr(fam) => Test::BigAnd(fam.toggled()),
        }
    }
}

/// The functor action on atoms. Families are mapped lazily.
pub fn map_test<A: 'static, B: 'static>(f: &AtomMap<A, B>, t: &Test<A>) -> Test<B> {
    match t {
        Test::Atom(a) => Test::Atom(f(a)),
        Test::True => Test::True,
        Test::False => Test::False,
        Test::And(l, r) => Test::and(map_test(f, l), map_test(f, r)),
        Test::Or(l, r) => Test::or(map_test(f, l), map_test(f, r)),
        Test::BigAnd(fam) => Test::BigAnd(fam.mapped(f)),
        Test::BigOr(fam) => Test::BigOr(fam.mapped(f)),
    }
}

/// [`map_test`] for an involution `f`: mapping twice with the same `f`
/// returns a test equal to the original, families included.
pub fn map_involution<A: 'static>(f: &AtomMap<A, A>, t: &Test<A>) -> Test<A> {
    involution_with(Arc::as_ptr(f) as *const () as usize, f, t)
}

/// As [`map_involution`], with `f` identified by `tag` instead of by
/// pointer, so separately built copies of `f` cancel each other.
pub fn map_involution_tagged<A: 'static>(
    tag: impl Hash,
    f: &AtomMap<A, A>,
    t: &Test<A>,
) -> Test<A> {
    involution_with(tag_key(tag), f, t)
}

fn involution_with<A: 'static>(fid: usize, f: &AtomMap<A, A>, t: &Test<A>) -> Test<A> {
    match t {
        Test::Atom(a) => Test::Atom(f(a)),
        Test::True => Test::True,
        Test::False => Test::False,
        Test::And(l, r) => Test::and(involution_with(fid, f, l), involution_with(fid, f, r)),
        Test::Or(l, r) => Test::or(involution_with(fid, f, l), involution_with(fid, f, r)),
        Test::BigAnd(fam) => Test::BigAnd(fam.mapped_involution(fid, f)),
        Test::BigOr(fam) => Test::BigOr(fam.mapped_involution(fid, f)),
    }
}

fn tag_key(tag: impl Hash) -> usize {
    let mut h = DefaultHasher::new();
    tag.hash(&mut h);
    (h.finish() as usize) | TAG_BIT
}
