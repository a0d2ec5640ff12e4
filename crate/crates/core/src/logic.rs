//! Syntactic types, value and computation terms, and the behavioural logic.

use std::fmt;
use std::sync::Arc;

use crate::effects::EffectKit;
use crate::error::{Error, Result};
use crate::liftings::{Budget, Mode, Observation};
use crate::testlogic::{map_involution_tagged, map_test, try_eval_test, AtomMap, Test};
use crate::trees::{Env, TreeExpr, Value};
use crate::verdict::Verdict;

/// Syntactic types.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ty {
    N,
    Arrow(Box<Ty>, Box<Ty>),
    Prod(Box<Ty>, Box<Ty>),
    U(Box<Ty>),
}

impl Ty {
    pub fn arrow(a: Ty, b: Ty) -> Ty {
        Ty::Arrow(Box::new(a), Box::new(b))
    }

    pub fn prod(a: Ty, b: Ty) -> Ty {
        Ty::Prod(Box::new(a), Box::new(b))
    }

    pub fn u(a: Ty) -> Ty {
        Ty::U(Box::new(a))
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::N => f.write_str("N"),
            Ty::Arrow(a, b) => write!(f, "(=> {a} {b})"),
            Ty::Prod(a, b) => write!(f, "(* {a} {b})"),
            Ty::U(a) => write!(f, "(U {a})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sort {
    Val,
    Cpt,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Val => "val",
            Sort::Cpt => "cpt",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermBody {
    Val(Value),
    Cpt(TreeExpr),
}

/// A value or computation term of a syntactic type, with the definitions
/// its trees refer to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub ty: Ty,
    pub body: TermBody,
    pub env: Env,
}

impl Term {
    pub fn val(ty: Ty, v: Value, env: Env) -> Self {
        Term {
            ty,
            body: TermBody::Val(v),
            env,
        }
    }

    pub fn cpt(ty: Ty, t: TreeExpr, env: Env) -> Self {
        Term {
            ty,
            body: TermBody::Cpt(t),
            env,
        }
    }

    pub fn sort(&self) -> Sort {
        match self.body {
            TermBody::Val(_) => Sort::Val,
            TermBody::Cpt(_) => Sort::Cpt,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            TermBody::Val(v) => write!(f, "(val {} {v})", self.ty),
            TermBody::Cpt(t) => write!(f, "(cpt {} {t})", self.ty),
        }
    }
}

/// Formulas over observations `O`.
#[derive(Clone, PartialEq, Eq)]
pub enum Formula<O> {
    Eq(u64),
    Neq(u64),
    MapsTo(Value, Box<Formula<O>>),
    Fst(Box<Formula<O>>),
    Snd(Box<Formula<O>>),
    Thunk(Box<Formula<O>>),
    Test(Box<Test<Formula<O>>>),
    ObsA(O, Box<Formula<O>>),
    ObsB(O, Box<Formula<O>>),
}

impl<O> Formula<O> {
    pub fn maps_to(v: Value, phi: Formula<O>) -> Self {
        Formula::MapsTo(v, Box::new(phi))
    }

    pub fn test(t: Test<Formula<O>>) -> Self {
        Formula::Test(Box::new(t))
    }

    pub fn fst(phi: Formula<O>) -> Self {
        Formula::Fst(Box::new(phi))
    }

    pub fn snd(phi: Formula<O>) -> Self {
        Formula::Snd(Box::new(phi))
    }

    pub fn thunk(phi: Formula<O>) -> Self {
        Formula::Thunk(Box::new(phi))
    }

    pub fn obs_a(o: O, phi: Formula<O>) -> Self {
        Formula::ObsA(o, Box::new(phi))
    }

    pub fn obs_b(o: O, phi: Formula<O>) -> Self {
        Formula::ObsB(o, Box::new(phi))
    }

    pub fn obs(mode: Mode, o: O, phi: Formula<O>) -> Self {
        match mode {
            Mode::Alpha => Formula::obs_a(o, phi),
            Mode::Beta => Formula::obs_b(o, phi),
        }
    }
}

impl<O: fmt::Display + 'static> fmt::Display for Formula<O> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Eq(n) => write!(f, "(eq {n})"),
            Formula::Neq(n) => write!(f, "(neq {n})"),
            Formula::MapsTo(v, p) => write!(f, "(maps {v} {p})"),
            Formula::Fst(p) => write!(f, "(fst {p})"),
            Formula::Snd(p) => write!(f, "(snd {p})"),
            Formula::Thunk(p) => write!(f, "(thunk {p})"),
            Formula::Test(t) => {
                f.write_str("(test ")?;
                fmt_test(t, f)?;
                f.write_str(")")
            }
            Formula::ObsA(o, p) => write!(f, "(obs-alpha {o} {p})"),
            Formula::ObsB(o, p) => write!(f, "(obs-beta {o} {p})"),
        }
    }
}

impl<O: fmt::Display + 'static> fmt::Debug for Formula<O> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

const SHOWN_MEMBERS: u64 = 3;

/// Prints a test of formulas. Bounded families are spelled out as n-ary
/// connectives; unbounded ones show their first members followed by `..`.
fn fmt_test<O: fmt::Display + 'static>(
    t: &Test<Formula<O>>,
    f: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    match t {
        Test::Atom(a) => write!(f, "(atom {a})"),
        Test::True => f.write_str("true"),
        Test::False => f.write_str("false"),
        Test::And(l, r) | Test::Or(l, r) => {
            let head = if matches!(t, Test::And(..)) {
                "and"
            } else {
                "or"
            };
            write!(f, "({head} ")?;
            fmt_test(l, f)?;
            f.write_str(" ")?;
            fmt_test(r, f)?;
            f.write_str(")")
        }
        Test::BigAnd(fam) | Test::BigOr(fam) => {
            let conj = matches!(t, Test::BigAnd(_));
            let shown = fam.support().unwrap_or(SHOWN_MEMBERS);
            if shown == 0 {
                return f.write_str(if conj { "true" } else { "false" });
            }
            f.write_str(if conj { "(and" } else { "(or" })?;
            for i in 0..shown {
                f.write_str(" ")?;
                fmt_test(&fam.at(i), f)?;
            }
            if fam.support().is_none() {
                f.write_str(" ..")?;
            }
            f.write_str(")")
        }
    }
}

fn mismatch(what: impl fmt::Display, sort: Sort, ty: &Ty) -> Error {
    Error::SortMismatch(format!("{what} is not a formula at ({sort}, {ty})"))
}

/// Checks that `phi` is a formula at `(sort, ty)`. Only the first members
/// of countable families are inspected.
pub fn check_formula<O: Observation>(phi: &Formula<O>, sort: Sort, ty: &Ty) -> Result<()> {
    check_formula_within(phi, sort, ty, 8)
}

fn check_formula_within<O: Observation>(
    phi: &Formula<O>,
    sort: Sort,
    ty: &Ty,
    window: u64,
) -> Result<()> {
    let bad = || mismatch(phi, sort, ty);
    match (phi, sort, ty) {
        (Formula::Eq(_) | Formula::Neq(_), Sort::Val, Ty::N) => Ok(()),
        (Formula::MapsTo(v, p), Sort::Val, Ty::Arrow(a, b)) => {
            if !value_fits(v, a) {
                return Err(Error::SortMismatch(format!(
                    "argument {v} is not a value of type {a}"
                )));
            }
            check_formula_within(p, Sort::Cpt, b, window)
        }
        (Formula::Fst(p), Sort::Val, Ty::Prod(a, _)) => {
            check_formula_within(p, Sort::Val, a, window)
        }
        (Formula::Snd(p), Sort::Val, Ty::Prod(_, b)) => {
            check_formula_within(p, Sort::Val, b, window)
        }
        (Formula::Thunk(p), Sort::Val, Ty::U(a)) => check_formula_within(p, Sort::Cpt, a, window),
        (Formula::ObsA(_, p) | Formula::ObsB(_, p), Sort::Cpt, _) => {
            check_formula_within(p, Sort::Val, ty, window)
        }
        (Formula::Test(t), _, _) => check_test(t, sort, ty, window),
        _ => Err(bad()),
    }
}

fn check_test<O: Observation>(
    t: &Test<Formula<O>>,
    sort: Sort,
    ty: &Ty,
    window: u64,
) -> Result<()> {
    match t {
        Test::Atom(p) => check_formula_within(p, sort, ty, window),
        Test::True | Test::False => Ok(()),
        Test::And(l, r) | Test::Or(l, r) => {
            check_test(l, sort, ty, window)?;
            check_test(r, sort, ty, window)
        }
        Test::BigAnd(fam) | Test::BigOr(fam) => {
            let n = fam.support().map_or(window, |s| s.min(window));
            (0..n).try_for_each(|i| check_test(&fam.at(i), sort, ty, window))
        }
    }
}

/// Shallow shape check of a value against a type.
pub fn value_fits(v: &Value, ty: &Ty) -> bool {
    match (v, ty) {
        (Value::Nat(_), Ty::N) => true,
        (Value::Pair(a, b), Ty::Prod(s, t)) => value_fits(a, s) && value_fits(b, t),
        (Value::Thunk(_), Ty::U(_)) => true,
        (Value::Fun(_), Ty::Arrow(..)) => true,
        _ => false,
    }
}

struct Sat<'a, K> {
    kit: &'a K,
    env: &'a Env,
    budget: &'a Budget,
}

impl<K: EffectKit> Sat<'_, K> {
    fn val(&self, ty: &Ty, v: &Value, phi: &Formula<K::Obs>) -> Result<Verdict> {
        let bad = || {
            Error::SortMismatch(format!(
                "value {v} of type {ty} cannot be checked against {phi}"
            ))
        };
        match (phi, ty, v) {
            (Formula::Test(t), _, _) => try_eval_test(
                &mut |p: &Formula<K::Obs>| self.val(ty, v, p),
                t,
                self.budget.index_bound,
            ),
            (Formula::Eq(n), Ty::N, Value::Nat(m)) => Ok(Verdict::from_bool(m == n)),
            (Formula::Neq(n), Ty::N, Value::Nat(m)) => Ok(Verdict::from_bool(m != n)),
            (Formula::MapsTo(arg, p), Ty::Arrow(_, rho), Value::Fun(fv)) => {
                let t = fv.apply(arg)?;
                self.cpt(rho, &t, p)
            }
            (Formula::Fst(p), Ty::Prod(s, _), Value::Pair(a, _)) => self.val(s, a, p),
            (Formula::Snd(p), Ty::Prod(_, s), Value::Pair(_, b)) => self.val(s, b, p),
            (Formula::Thunk(p), Ty::U(s), Value::Thunk(t)) => self.cpt(s, t, p),
            _ => Err(bad()),
        }
    }

    fn cpt(&self, ty: &Ty, t: &TreeExpr, phi: &Formula<K::Obs>) -> Result<Verdict> {
        let pair = self.kit.pair();
        match phi {
            Formula::Test(ts) => try_eval_test(
                &mut |p: &Formula<K::Obs>| self.cpt(ty, t, p),
                ts,
                self.budget.index_bound,
            ),
            Formula::ObsA(o, p) => {
                pair.alpha(o, &|v: &Value| self.val(ty, v, p), self.env, t, self.budget)
            }
            Formula::ObsB(o, p) => {
                pair.beta(o, &|v: &Value| self.val(ty, v, p), self.env, t, self.budget)
            }
            _ => Err(mismatch(phi, Sort::Cpt, ty)),
        }
    }
}

/// Three-valued satisfaction `p ⊨ phi`, with observation modalities
/// checked by the kit's complementing pair.
pub fn satisfies<K: EffectKit>(
    kit: &K,
    p: &Term,
    phi: &Formula<K::Obs>,
    budget: &Budget,
) -> Result<Verdict> {
    check_formula(phi, p.sort(), &p.ty)?;
    let sat = Sat {
        kit,
        env: &p.env,
        budget,
    };
    match &p.body {
        TermBody::Val(v) => sat.val(&p.ty, v, phi),
        TermBody::Cpt(t) => sat.cpt(&p.ty, t, phi),
    }
}

const NEG_TAG: &str = "formula negation";

/// Syntactic negation. Applying it twice gives back an equal formula.
pub fn neg_formula<O: Observation>(phi: &Formula<O>) -> Formula<O> {
    match phi {
        Formula::Eq(n) => Formula::Neq(*n),
        Formula::Neq(n) => Formula::Eq(*n),
        Formula::MapsTo(v, p) => Formula::maps_to(v.clone(), neg_formula(p)),
        Formula::Fst(p) => Formula::fst(neg_formula(p)),
        Formula::Snd(p) => Formula::snd(neg_formula(p)),
        Formula::Thunk(p) => Formula::thunk(neg_formula(p)),
        Formula::ObsA(o, p) => Formula::obs_b(o.clone(), neg_formula(p)),
        Formula::ObsB(o, p) => Formula::obs_a(o.clone(), neg_formula(p)),
        Formula::Test(t) => {
            let f: AtomMap<Formula<O>, Formula<O>> = Arc::new(|p: &Formula<O>| neg_formula(p));
            Formula::test(map_involution_tagged(NEG_TAG, &f, t).into_dual())
        }
    }
}

/// Structural equality of formulas.
pub fn formula_eq<O: Observation>(phi: &Formula<O>, psi: &Formula<O>) -> bool {
    phi == psi
}

/// The observational tower formula of a decomposition test: each atom
/// `(o1, o2)` becomes `obs o1 (thunk (obs o2 phi))` in the given mode.
pub fn tower_formula<O: Observation>(t: &Test<(O, O)>, phi: &Formula<O>, mode: Mode) -> Formula<O> {
    let phi = phi.clone();
    let f: AtomMap<(O, O), Formula<O>> = Arc::new(move |(o1, o2): &(O, O)| {
        Formula::obs(
            mode,
            o1.clone(),
            Formula::thunk(Formula::obs(mode, o2.clone(), phi.clone())),
        )
    });
    Formula::test(map_test(&f, t))
}

/// Outcome of a search for a behavioural difference between two terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeakApprox<O: Observation> {
    /// `P ⊨ phi` and `Q ⊨ ¬phi` are both proved.
    Difference(Formula<O>),
    NoDifference {
        checked: usize,
        unknowns: usize,
    },
}

/// Looks for a formula in `phis` that `p` satisfies while `q` satisfies its
/// negation. Finding none says nothing about formulas outside the list.
pub fn check_weak_approx<K: EffectKit>(
    kit: &K,
    p: &Term,
    q: &Term,
    phis: &[Formula<K::Obs>],
    budget: &Budget,
) -> Result<WeakApprox<K::Obs>> {
    if p.sort() != q.sort() || p.ty != q.ty {
        return Err(Error::SortMismatch(format!(
            "terms at ({}, {}) and ({}, {}) cannot be compared",
            p.sort(),
            p.ty,
            q.sort(),
            q.ty
        )));
    }
    let mut unknowns = 0;
    for phi in phis {
        let vp = satisfies(kit, p, phi, budget)?;
        let vq = satisfies(kit, q, &neg_formula(phi), budget)?;
        if vp.is_proved() && vq.is_proved() {
            return Ok(WeakApprox::Difference(phi.clone()));
        }
        if !vp.is_definite() || !vq.is_definite() {
            unknowns += 1;
        }
    }
    Ok(WeakApprox::NoDifference {
        checked: phis.len(),
        unknowns,
    })
}
