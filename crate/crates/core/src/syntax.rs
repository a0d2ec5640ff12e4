//! Textual syntax: programs, formulas and problem files.
//!
//! Programs are sequences of top-level forms:
//!
//! ```text
//! (sig store)
//! (def loop (update 1 (ref loop)))
//! (fun f (x 0 1 2) (update x (leaf x)))
//! (main cpt N (lookup n (seq (update (+ n 1)) (leaf n))))
//! ```
//!
//! Trees are `(leaf v)`, `(ref name)`, `(seq t u)` or an operation of the
//! signature. An operation applied to no children is its generic effect: it
//! returns `unit` for unary operations and the child index otherwise. A
//! countable operation takes a binder and a body, `(lookup n body)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::effects::{
    input_kit, nondet_kit, pure_timed_kit, pure_unobservable_kit, store_kit, EffectKit, EffectName,
};
use crate::error::{Error, Result};
use crate::liftings::{Budget, ObsSpec};
use crate::logic::{check_formula, neg_formula, Formula, Sort, Term, TermBody, Ty};
use crate::relator::{leaves, FiniteCarrier, Layer, Relation, SimulationProblem};
use crate::sexp::{parse_all, parse_one, Sexp};
use crate::testlogic::Test;
use crate::trees::{
    eta, map_tree, mu, Arity, Children, Env, FunValue, Name, Op, Signature, TreeExpr, Value,
};

/// Natural-number expressions over binder variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NatExpr {
    Lit(u64),
    Var(Name),
    Add(Vec<NatExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueAst {
    Nat(NatExpr),
    Unit,
    Pair(Box<ValueAst>, Box<ValueAst>),
    Thunk(Box<TreeAst>),
    Fn(Name),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpBody {
    /// The generic effect: children are leaves carrying the index.
    Generic,
    Children(Vec<TreeAst>),
    /// A countable operation whose `i`-th child is the body with the binder set to `i`.
    Binder(Name, Box<TreeAst>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpAst {
    pub name: Name,
    pub param: Option<NatExpr>,
    pub arity: Arity,
    pub body: OpBody,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeAst {
    Leaf(ValueAst),
    Ref(Name),
    Seq(Box<TreeAst>, Box<TreeAst>),
    Op(OpAst),
}

/// A named function over a declared list of first-order arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunDef {
    pub name: Name,
    pub binder: Name,
    pub args: Vec<ValueAst>,
    pub body: TreeAst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermAst {
    Val(ValueAst),
    Cpt(TreeAst),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Main {
    pub sort: Sort,
    pub ty: Ty,
    pub term: TermAst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub effect: EffectName,
    pub defs: Vec<(Name, TreeAst)>,
    pub funs: Vec<FunDef>,
    pub main: Main,
}

impl fmt::Display for NatExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NatExpr::Lit(n) => write!(f, "{n}"),
            NatExpr::Var(x) => f.write_str(x),
            NatExpr::Add(es) => {
                f.write_str("(+")?;
                for e in es {
                    write!(f, " {e}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for ValueAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueAst::Nat(e) => write!(f, "{e}"),
            ValueAst::Unit => f.write_str("unit"),
            ValueAst::Pair(a, b) => write!(f, "(pair {a} {b})"),
            ValueAst::Thunk(t) => write!(f, "(thunk {t})"),
            ValueAst::Fn(n) => write!(f, "(fn {n})"),
        }
    }
}

impl fmt::Display for TreeAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeAst::Leaf(v) => write!(f, "(leaf {v})"),
            TreeAst::Ref(n) => write!(f, "(ref {n})"),
            TreeAst::Seq(a, b) => write!(f, "(seq {a} {b})"),
            TreeAst::Op(op) => {
                write!(f, "({}", op.name)?;
                if let Some(p) = &op.param {
                    write!(f, " {p}")?;
                }
                match &op.body {
                    OpBody::Generic => {}
                    OpBody::Children(cs) => {
                        for c in cs {
                            write!(f, " {c}")?;
                        }
                    }
                    OpBody::Binder(x, body) => write!(f, " {x} {body}")?,
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for TermAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermAst::Val(v) => write!(f, "{v}"),
            TermAst::Cpt(t) => write!(f, "{t}"),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(sig {})", self.effect)?;
        for (n, t) in &self.defs {
            writeln!(f, "(def {n} {t})")?;
        }
        for d in &self.funs {
            write!(f, "(fun {} ({}", d.name, d.binder)?;
            for a in &d.args {
                write!(f, " {a}")?;
            }
            writeln!(f, ") {})", d.body)?;
        }
        writeln!(
            f,
            "(main {} {} {})",
            self.main.sort, self.main.ty, self.main.term
        )
    }
}

/// The signature of a built-in effect.
pub fn signature_of(effect: EffectName) -> Signature {
    match effect {
        EffectName::Pure => pure_unobservable_kit().signature().clone(),
        EffectName::Timed => pure_timed_kit().signature().clone(),
        EffectName::Nondet => nondet_kit().signature().clone(),
        EffectName::Store => store_kit().signature().clone(),
        EffectName::Input => input_kit().signature().clone(),
    }
}

/// The effect named by a `(sig ..)` form, if the text has one.
pub fn declared_effect(text: &str) -> Result<Option<EffectName>> {
    let mut found = None;
    for form in parse_all(text)? {
        if let Some(("sig", args)) = form.as_form() {
            let e = parse_effect(&form, args)?;
            if found.is_some_and(|f| f != e) {
                return Err(form.error("conflicting `sig` declarations"));
            }
            found = Some(e);
        }
    }
    Ok(found)
}

fn parse_effect(form: &Sexp, args: &[Sexp]) -> Result<EffectName> {
    match args {
        [e] => {
            let s = e.expect_atom("an effect name")?;
            s.parse()
                .map_err(|_| e.error(format!("unknown effect `{s}`")))
        }
        _ => Err(form.error("expected `(sig effect)`")),
    }
}

/// Resolves the effect of a file against the one requested on the command line.
pub fn resolve_effect(text: &str, requested: Option<EffectName>) -> Result<EffectName> {
    match (declared_effect(text)?, requested) {
        (Some(d), Some(r)) if d != r => Err(Error::Parse {
            line: 1,
            col: 1,
            msg: format!("file declares effect `{d}` but `{r}` was requested"),
        }),
        (Some(e), _) | (None, Some(e)) => Ok(e),
        (None, None) => Err(Error::Parse {
            line: 1,
            col: 1,
            msg: "no effect given: add `(sig effect)` or pass --effect".into(),
        }),
    }
}

pub fn parse_ty(s: &Sexp) -> Result<Ty> {
    if let Some(a) = s.as_atom() {
        return match a {
            "N" => Ok(Ty::N),
            _ => Err(s.error(format!("unknown type `{a}`"))),
        };
    }
    match s.as_form() {
        Some(("=>", [a, b])) => Ok(Ty::arrow(parse_ty(a)?, parse_ty(b)?)),
        Some(("*", [a, b])) => Ok(Ty::prod(parse_ty(a)?, parse_ty(b)?)),
        Some(("U", [a])) => Ok(Ty::u(parse_ty(a)?)),
        _ => Err(s.error(format!("malformed type `{s}`"))),
    }
}

pub fn parse_sort(s: &Sexp) -> Result<Sort> {
    match s.as_atom() {
        Some("val") => Ok(Sort::Val),
        Some("cpt") => Ok(Sort::Cpt),
        _ => Err(s.error(format!("expected `val` or `cpt`, found `{s}`"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Nat,
    Value,
}

const RESERVED: &[&str] = &["unit", "leaf", "ref", "seq", "pair", "thunk", "fn", "+"];

fn is_name(s: &str) -> bool {
    !s.is_empty() && !s.starts_with(|c: char| c.is_ascii_digit()) && !RESERVED.contains(&s)
}

fn expect_name<'s>(s: &'s Sexp, what: &str) -> Result<&'s str> {
    let a = s.expect_atom(what)?;
    if is_name(a) {
        Ok(a)
    } else {
        Err(s.error(format!("`{a}` cannot be used as {what}")))
    }
}

/// Parser for trees and values against a signature and the names of a module.
struct Parser<'a> {
    sig: &'a Signature,
    defs: BTreeSet<String>,
    /// Function names and the kind of their binder.
    funs: BTreeMap<String, VarKind>,
}

type Scope = Vec<(String, VarKind)>;

impl Parser<'_> {
    fn var(&self, s: &Sexp, scope: &Scope) -> Result<(Name, VarKind)> {
        let x = s.expect_atom("a variable")?;
        scope
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(n, k)| (Name::from(n.as_str()), *k))
            .ok_or_else(|| s.error(format!("unbound variable `{x}`")))
    }

    fn nat(&self, s: &Sexp, scope: &Scope) -> Result<NatExpr> {
        if let Some(a) = s.as_atom() {
            if a.starts_with(|c: char| c.is_ascii_digit()) {
                return Ok(NatExpr::Lit(s.expect_nat()?));
            }
            let (x, kind) = self.var(s, scope)?;
            if kind != VarKind::Nat {
                return Err(s.error(format!("variable `{x}` may hold a non-natural")));
            }
            return Ok(NatExpr::Var(x));
        }
        match s.as_form() {
            Some(("+", args)) if !args.is_empty() => Ok(NatExpr::Add(
                args.iter()
                    .map(|a| self.nat(a, scope))
                    .collect::<Result<_>>()?,
            )),
            _ => Err(s.error(format!("expected a natural expression, found `{s}`"))),
        }
    }

    fn value(&self, s: &Sexp, scope: &Scope) -> Result<ValueAst> {
        if let Some(a) = s.as_atom() {
            if a == "unit" {
                return Ok(ValueAst::Unit);
            }
            if a.starts_with(|c: char| c.is_ascii_digit()) {
                return Ok(ValueAst::Nat(NatExpr::Lit(s.expect_nat()?)));
            }
            return Ok(ValueAst::Nat(NatExpr::Var(self.var(s, scope)?.0)));
        }
        match s.as_form() {
            Some(("+", _)) => Ok(ValueAst::Nat(self.nat(s, scope)?)),
            Some(("pair", [a, b])) => Ok(ValueAst::Pair(
                Box::new(self.value(a, scope)?),
                Box::new(self.value(b, scope)?),
            )),
            Some(("thunk", [t])) => Ok(ValueAst::Thunk(Box::new(self.tree(t, scope)?))),
            Some(("fn", [f])) => {
                let name = f.expect_atom("a function name")?;
                if !self.funs.contains_key(name) {
                    return Err(f.error(format!("unknown function `{name}`")));
                }
                Ok(ValueAst::Fn(name.into()))
            }
            _ => Err(s.error(format!("malformed value `{s}`"))),
        }
    }

    /// A closed first-order value: naturals, `unit` and pairs.
    fn first_order(&self, s: &Sexp) -> Result<ValueAst> {
        let v = self.value(s, &Vec::new())?;
        fn ok(v: &ValueAst) -> bool {
            match v {
                ValueAst::Nat(_) | ValueAst::Unit => true,
                ValueAst::Pair(a, b) => ok(a) && ok(b),
                ValueAst::Thunk(_) | ValueAst::Fn(_) => false,
            }
        }
        if ok(&v) {
            Ok(v)
        } else {
            Err(s.error(format!("expected a first-order value, found `{s}`")))
        }
    }

    fn tree(&self, s: &Sexp, scope: &Scope) -> Result<TreeAst> {
        let Some((head, args)) = s.as_form() else {
            return Err(s.error(format!("expected a tree, found `{s}`")));
        };
        match (head, args) {
            ("leaf", [v]) => return Ok(TreeAst::Leaf(self.value(v, scope)?)),
            ("ref", [n]) => {
                let name = n.expect_atom("a definition name")?;
                if !self.defs.contains(name) {
                    return Err(n.error(format!("unbound reference `{name}`")));
                }
                return Ok(TreeAst::Ref(name.into()));
            }
            ("seq", [a, b]) => {
                return Ok(TreeAst::Seq(
                    Box::new(self.tree(a, scope)?),
                    Box::new(self.tree(b, scope)?),
                ))
            }
            ("leaf" | "ref" | "seq", _) => {
                return Err(s.error(format!("wrong number of arguments to `{head}`")))
            }
            _ => {}
        }
        let decl = self
            .sig
            .decl(head)
            .ok_or_else(|| s.error(format!("unknown operation `{head}`")))?;
        let (param, rest) = if decl.parameterised {
            let (p, rest) = args
                .split_first()
                .ok_or_else(|| s.error(format!("`{head}` takes a natural parameter")))?;
            (Some(self.nat(p, scope)?), rest)
        } else {
            (None, args)
        };
        let body = match (decl.arity, rest) {
            (_, []) => OpBody::Generic,
            (Arity::Finite(n), cs) if cs.len() == n => OpBody::Children(
                cs.iter()
                    .map(|c| self.tree(c, scope))
                    .collect::<Result<_>>()?,
            ),
            (Arity::Countable, [x, body]) => {
                let x = expect_name(x, "a binder")?;
                let mut inner = scope.clone();
                inner.push((x.to_string(), VarKind::Nat));
                OpBody::Binder(x.into(), Box::new(self.tree(body, &inner)?))
            }
            (Arity::Finite(n), cs) => {
                return Err(s.error(format!("`{head}` takes {n} children, got {}", cs.len())))
            }
            (Arity::Countable, _) => {
                return Err(s.error(format!("expected `({head} binder body)`")))
            }
        };
        Ok(TreeAst::Op(OpAst {
            name: decl.name.clone(),
            param,
            arity: decl.arity,
            body,
        }))
    }
}

/// Definitions and functions shared by programs and problem files.
struct Module<'a> {
    parser: Parser<'a>,
    defs: Vec<(Name, TreeAst)>,
    funs: Vec<FunDef>,
    /// Forms other than `sig`, `def` and `fun`, in order.
    rest: Vec<Sexp>,
}

fn parse_module<'a>(text: &str, effect: EffectName, sig: &'a Signature) -> Result<Module<'a>> {
    let forms = parse_all(text)?;
    let mut parser = Parser {
        sig,
        defs: BTreeSet::new(),
        funs: BTreeMap::new(),
    };
    // Names first, so that definitions may refer to each other in any order.
    for form in &forms {
        match form.as_form() {
            Some(("def", [n, _])) => {
                let n = expect_name(n, "a definition name")?;
                if !parser.defs.insert(n.to_string()) {
                    return Err(form.error(format!("`{n}` is defined twice")));
                }
            }
            Some(("fun", [n, _, _])) => {
                let n = expect_name(n, "a function name")?;
                if parser.funs.insert(n.to_string(), VarKind::Value).is_some() {
                    return Err(form.error(format!("`{n}` is defined twice")));
                }
            }
            _ => {}
        }
    }
    let mut headers = Vec::new();
    for form in &forms {
        if let Some(("fun", [n, header, body])) = form.as_form() {
            let items = header.expect_list("`(binder args..)`")?;
            let (x, args) = items
                .split_first()
                .ok_or_else(|| header.error("expected `(binder args..)`"))?;
            let x = expect_name(x, "a binder")?;
            let args: Vec<ValueAst> = args
                .iter()
                .map(|a| parser.first_order(a))
                .collect::<Result<_>>()?;
            let kind = if args.iter().all(|a| matches!(a, ValueAst::Nat(_))) {
                VarKind::Nat
            } else {
                VarKind::Value
            };
            parser
                .funs
                .insert(n.expect_atom("a name")?.to_string(), kind);
            headers.push((n, x, args, kind, body));
        }
    }
    let mut funs = Vec::new();
    for (n, x, args, kind, body) in headers {
        let body = parser.tree(body, &vec![(x.to_string(), kind)])?;
        funs.push(FunDef {
            name: n.expect_atom("a name")?.into(),
            binder: x.into(),
            args,
            body,
        });
    }
    let mut defs = Vec::new();
    let mut rest = Vec::new();
    for form in forms {
        match form.as_form() {
            Some(("sig", args)) => {
                let e = parse_effect(&form, args)?;
                if e != effect {
                    return Err(form.error(format!("expected effect `{effect}`, found `{e}`")));
                }
            }
            Some(("def", [n, t])) => {
                defs.push((
                    n.expect_atom("a name")?.into(),
                    parser.tree(t, &Vec::new())?,
                ));
            }
            Some(("def", _)) => return Err(form.error("expected `(def name tree)`")),
            Some(("fun", [_, _, _])) => {}
            Some(("fun", _)) => {
                return Err(form.error("expected `(fun name (binder args..) tree)`"))
            }
            _ => rest.push(form),
        }
    }
    Ok(Module {
        parser,
        defs,
        funs,
        rest,
    })
}

impl Program {
    /// Parses a program. `effect` is used when the text has no `(sig ..)` form.
    pub fn parse(text: &str, effect: Option<EffectName>) -> Result<Program> {
        let effect = resolve_effect(text, effect)?;
        let sig = signature_of(effect);
        let m = parse_module(text, effect, &sig)?;
        let mut main = None;
        for form in &m.rest {
            match form.as_form() {
                Some(("main", [sort, ty, term])) => {
                    if main.is_some() {
                        return Err(form.error("more than one `main`"));
                    }
                    let sort = parse_sort(sort)?;
                    let ty = parse_ty(ty)?;
                    let term = match sort {
                        Sort::Val => TermAst::Val(m.parser.value(term, &Vec::new())?),
                        Sort::Cpt => TermAst::Cpt(m.parser.tree(term, &Vec::new())?),
                    };
                    main = Some(Main { sort, ty, term });
                }
                Some(("main", _)) => return Err(form.error("expected `(main sort type term)`")),
                _ => return Err(form.error(format!("unexpected top-level form `{form}`"))),
            }
        }
        let main = main.ok_or_else(|| Error::Parse {
            line: 1,
            col: 1,
            msg: "missing `(main sort type term)`".into(),
        })?;
        Ok(Program {
            effect,
            defs: m.defs,
            funs: m.funs,
            main,
        })
    }

    /// Builds the definitions and the main term, checking guardedness and
    /// the declared sort and type.
    pub fn lower(&self) -> Result<(Env, Term)> {
        let lw = Lowerer::new(&self.funs);
        let env = lw.env(&self.defs)?;
        let term = match &self.main.term {
            TermAst::Val(v) => {
                let v = lw.value(v, &[]);
                check_value(&env, &v, &self.main.ty)?;
                Term::val(self.main.ty.clone(), v, env.clone())
            }
            TermAst::Cpt(t) => {
                let t = lw.tree(t, &[]);
                check_results(&env, &t, &self.main.ty)?;
                Term::cpt(self.main.ty.clone(), t, env.clone())
            }
        };
        Ok((env, term))
    }
}

/// Parses and lowers a program.
pub fn parse_program(text: &str, effect: Option<EffectName>) -> Result<(Env, Term)> {
    Program::parse(text, effect)?.lower()
}

/// Checks the results a tree can return against its declared type.
fn check_results(env: &Env, t: &TreeExpr, ty: &Ty) -> Result<()> {
    for v in leaves(env, t, 4)? {
        check_value(env, &v, ty).map_err(|_| {
            Error::SortMismatch(format!(
                "computation returns {v}, which is not of type {ty}"
            ))
        })?;
    }
    Ok(())
}

/// Type check of a value. Thunks and functions are checked through their
/// results, so the recursion follows the type.
fn check_value(env: &Env, v: &Value, ty: &Ty) -> Result<()> {
    let mismatch = || Error::SortMismatch(format!("value {v} is not of type {ty}"));
    match (v, ty) {
        (Value::Nat(_), Ty::N) => Ok(()),
        (Value::Pair(a, b), Ty::Prod(s, t)) => {
            check_value(env, a, s)?;
            check_value(env, b, t)
        }
        (Value::Thunk(t), Ty::U(s)) => check_results(env, t, s),
        (Value::Fun(f), Ty::Arrow(a, b)) => {
            for arg in &f.admissible {
                check_value(env, arg, a)?;
                check_results(env, &f.apply(arg)?, b)?;
            }
            Ok(())
        }
        _ => Err(mismatch()),
    }
}

/// Turns syntax into trees. Function values are rebuilt on demand, so
/// recursive functions need no knot-tying.
struct Lowerer {
    funs: BTreeMap<Name, FunDef>,
}

type Binds = [(Name, Value)];

impl Lowerer {
    fn new(funs: &[FunDef]) -> Arc<Lowerer> {
        Arc::new(Lowerer {
            funs: funs.iter().map(|f| (f.name.clone(), f.clone())).collect(),
        })
    }

    fn env(self: &Arc<Self>, defs: &[(Name, TreeAst)]) -> Result<Env> {
        Env::new(defs.iter().map(|(n, t)| (n.clone(), self.tree(t, &[]))))
    }

    fn lookup(binds: &Binds, x: &str) -> Value {
        binds
            .iter()
            .rev()
            .find(|(n, _)| &**n == x)
            .map(|(_, v)| v.clone())
            .expect("variables are scope-checked by the parser")
    }

    fn nat(e: &NatExpr, binds: &Binds) -> u64 {
        match e {
            NatExpr::Lit(n) => *n,
            NatExpr::Var(x) => Self::lookup(binds, x)
                .as_nat()
                .expect("natural positions only bind naturals"),
            NatExpr::Add(es) => es
                .iter()
                .fold(0u64, |acc, e| acc.saturating_add(Self::nat(e, binds))),
        }
    }

    fn value(self: &Arc<Self>, v: &ValueAst, binds: &Binds) -> Value {
        match v {
            ValueAst::Nat(NatExpr::Var(x)) => Self::lookup(binds, x),
            ValueAst::Nat(e) => Value::Nat(Self::nat(e, binds)),
            ValueAst::Unit => Value::Unit,
            ValueAst::Pair(a, b) => Value::pair(self.value(a, binds), self.value(b, binds)),
            ValueAst::Thunk(t) => Value::thunk(self.tree(t, binds)),
            ValueAst::Fn(f) => self.function(f),
        }
    }

    fn function(self: &Arc<Self>, name: &str) -> Value {
        let def = self.funs[name].clone();
        let admissible = def.args.iter().map(|a| self.value(a, &[])).collect();
        let lw = self.clone();
        Value::fun(FunValue::new(name, admissible, move |arg| {
            lw.tree(&def.body, &[(def.binder.clone(), arg.clone())])
        }))
    }

    fn tree(self: &Arc<Self>, t: &TreeAst, binds: &Binds) -> TreeExpr {
        match t {
            TreeAst::Leaf(v) => eta(self.value(v, binds)),
            TreeAst::Ref(n) => TreeExpr::Ref(n.clone()),
            TreeAst::Seq(a, b) => {
                let next = Value::thunk(self.tree(b, binds));
                mu(map_tree(move |_| next.clone(), self.tree(a, binds)))
            }
            TreeAst::Op(op) => {
                let o = match &op.param {
                    Some(p) => Op::with_param(&op.name, Self::nat(p, binds)),
                    None => Op::new(&op.name),
                };
                let children = match (&op.body, op.arity) {
                    (OpBody::Generic, Arity::Finite(1)) => Children::finite(vec![eta(Value::Unit)]),
                    (OpBody::Generic, Arity::Finite(n)) => {
                        Children::finite((0..n as u64).map(TreeExpr::nat).collect())
                    }
                    (OpBody::Generic, Arity::Countable) => Children::rule(TreeExpr::nat),
                    (OpBody::Children(cs), _) => {
                        Children::finite(cs.iter().map(|c| self.tree(c, binds)).collect())
                    }
                    (OpBody::Binder(x, body), _) => {
                        let lw = self.clone();
                        let (x, body) = (x.clone(), body.clone());
                        let outer: Vec<(Name, Value)> = binds.to_vec();
                        Children::rule(move |i| {
                            let mut b = outer.clone();
                            b.push((x.clone(), Value::Nat(i)));
                            lw.tree(&body, &b)
                        })
                    }
                };
                TreeExpr::Node(o, children)
            }
        }
    }
}

/// A closed first-order value: a natural, `unit` or a pair of such.
pub fn closed_value(sig: &Signature, s: &Sexp) -> Result<Value> {
    let parser = Parser {
        sig,
        defs: BTreeSet::new(),
        funs: BTreeMap::new(),
    };
    let v = parser.first_order(s)?;
    Ok(Lowerer::new(&[]).value(&v, &[]))
}

/// Parses a formula and checks it at `(sort, ty)`. `(neg φ)` is expanded
/// by syntactic negation.
pub fn parse_formula<K: EffectKit>(
    kit: &K,
    text: &str,
    sort: Sort,
    ty: &Ty,
) -> Result<Formula<K::Obs>> {
    let phi = formula_from_sexp(kit, &parse_one(text)?)?;
    check_formula(&phi, sort, ty)?;
    Ok(phi)
}

pub fn formula_from_sexp<K: EffectKit>(kit: &K, s: &Sexp) -> Result<Formula<K::Obs>> {
    let f = |x: &Sexp| formula_from_sexp(kit, x);
    let Some((head, args)) = s.as_form() else {
        return Err(s.error(format!("expected a formula, found `{s}`")));
    };
    Ok(match (head, args) {
        ("eq", [n]) => Formula::Eq(n.expect_nat()?),
        ("neq", [n]) => Formula::Neq(n.expect_nat()?),
        ("maps" | "maps-to", [v, p]) => Formula::maps_to(closed_value(kit.signature(), v)?, f(p)?),
        ("fst", [p]) => Formula::fst(f(p)?),
        ("snd", [p]) => Formula::snd(f(p)?),
        ("thunk", [p]) => Formula::thunk(f(p)?),
        ("test", [t]) => Formula::test(test_from_sexp(kit, t)?),
        ("obs-alpha", [o, p]) => Formula::obs_a(kit.parse_obs(o)?, f(p)?),
        ("obs-beta", [o, p]) => Formula::obs_b(kit.parse_obs(o)?, f(p)?),
        ("neg", [p]) => neg_formula(&f(p)?),
        _ => return Err(s.error(format!("malformed formula `{s}`"))),
    })
}

fn test_from_sexp<K: EffectKit>(kit: &K, s: &Sexp) -> Result<Test<Formula<K::Obs>>> {
    match s.as_atom() {
        Some("true") => return Ok(Test::True),
        Some("false") => return Ok(Test::False),
        Some(a) => return Err(s.error(format!("expected a test, found `{a}`"))),
        None => {}
    }
    match s.as_form() {
        Some((c @ ("and" | "or"), args)) => {
            let conj = c == "and";
            let mut items = args
                .iter()
                .map(|a| test_from_sexp(kit, a))
                .collect::<Result<Vec<_>>>()?;
            let Some(mut acc) = items.pop() else {
                return Ok(if conj { Test::True } else { Test::False });
            };
            while let Some(t) = items.pop() {
                acc = if conj {
                    Test::and(t, acc)
                } else {
                    Test::or(t, acc)
                };
            }
            Ok(acc)
        }
        Some(("atom", [p])) => Ok(Test::Atom(formula_from_sexp(kit, p)?)),
        _ => Ok(Test::Atom(formula_from_sexp(kit, s)?)),
    }
}

/// Parses a comma-free list of observation literals, or the kit's sample.
fn parse_obs_list<K: EffectKit>(kit: &K, form: Option<&Sexp>) -> Result<Vec<K::Obs>> {
    match form.and_then(|f| f.as_form()) {
        Some((_, items)) => items.iter().map(|o| kit.parse_obs(o)).collect(),
        None => Ok(kit.obs_sample()),
    }
}

fn single<'s>(rest: &'s [Sexp], head: &str) -> Result<Option<&'s Sexp>> {
    let mut found = rest
        .iter()
        .filter(|f| f.as_form().is_some_and(|(h, _)| h == head));
    let first = found.next();
    if let Some(dup) = found.next() {
        return Err(dup.error(format!("more than one `{head}`")));
    }
    Ok(first)
}

fn required<'s>(rest: &'s [Sexp], head: &str) -> Result<&'s Sexp> {
    single(rest, head)?.ok_or_else(|| Error::Parse {
        line: 1,
        col: 1,
        msg: format!("missing `({head} ..)`"),
    })
}

fn check_known(rest: &[Sexp], known: &[&str]) -> Result<()> {
    for form in rest {
        match form.as_form() {
            Some((h, _)) if known.contains(&h) => {}
            _ => return Err(form.error(format!("unexpected top-level form `{form}`"))),
        }
    }
    Ok(())
}

fn one_arg(form: &Sexp) -> Result<&Sexp> {
    match form.as_form() {
        Some((_, [a])) => Ok(a),
        _ => Err(form.error("expected exactly one argument")),
    }
}

/// A relator query: are two trees related by Γ(R)?
#[derive(Debug, Clone)]
pub struct GammaProblem<O> {
    pub env: Env,
    pub carrier: FiniteCarrier,
    pub relation: Relation,
    pub left: TreeExpr,
    pub right: TreeExpr,
    pub obs: Vec<O>,
}

/// Parses a Γ problem file:
///
/// ```text
/// (sig nondet)
/// (def omega (or (ref omega) (ref omega)))
/// (carrier 0 1)
/// (relation (0 0) (1 1) (0 1))
/// (left (or (leaf 0) (ref omega)))
/// (right (or (ref omega) (leaf 0)))
/// (obs may must)
/// ```
///
/// Relation pairs name carrier elements; `obs` defaults to the kit's sample.
pub fn parse_gamma_problem<K: EffectKit>(kit: &K, text: &str) -> Result<GammaProblem<K::Obs>> {
    let effect = effect_of(kit);
    let m = parse_module(text, effect, kit.signature())?;
    check_known(&m.rest, &["carrier", "relation", "left", "right", "obs"])?;
    let lw = Lowerer::new(&m.funs);
    let env = lw.env(&m.defs)?;
    let carrier_form = required(&m.rest, "carrier")?;
    let elems = carrier_form.as_form().map(|(_, a)| a).unwrap_or_default();
    let carrier = FiniteCarrier::new(
        elems
            .iter()
            .map(|e| closed_value(kit.signature(), e))
            .collect::<Result<_>>()?,
    )
    .map_err(|e| carrier_form.error(e.to_string()))?;
    let relation = match single(&m.rest, "relation")? {
        Some(form) => parse_relation(
            form,
            |s| {
                let v = closed_value(kit.signature(), s)?;
                carrier
                    .index_of(&v)
                    .ok_or_else(|| s.error(format!("{v} is not an element of the carrier")))
            },
            carrier.len(),
        )?,
        None => Relation::identity(carrier.len()),
    };
    let tree = |head: &str| -> Result<TreeExpr> {
        let t = m
            .parser
            .tree(one_arg(required(&m.rest, head)?)?, &Vec::new())?;
        Ok(lw.tree(&t, &[]))
    };
    Ok(GammaProblem {
        left: tree("left")?,
        right: tree("right")?,
        obs: parse_obs_list(kit, single(&m.rest, "obs")?)?,
        env,
        carrier,
        relation,
    })
}

fn parse_relation(
    form: &Sexp,
    mut index: impl FnMut(&Sexp) -> Result<usize>,
    size: usize,
) -> Result<Relation> {
    let (_, pairs) = form.as_form().expect("relation forms are lists");
    let mut out = Vec::new();
    for p in pairs {
        match p.as_list() {
            Some([a, b]) => out.push((index(a)?, index(b)?)),
            _ => return Err(p.error("expected a pair `(a b)`")),
        }
    }
    Relation::new(size, out).map_err(|e| form.error(e.to_string()))
}

/// A simulation query: either check the given candidate, or compute the
/// greatest simulation and test the queried pairs against it.
#[derive(Debug, Clone)]
pub struct SimulationQuery<O> {
    pub problem: SimulationProblem<O>,
    /// Whether any layer declared a candidate relation.
    pub has_candidate: bool,
    /// `(layer, left, right)` pairs that should be similar.
    pub queries: Vec<(usize, usize, usize)>,
}

/// Parses a simulation problem file:
///
/// ```text
/// (sig nondet)
/// (def omega (or (ref omega) (ref omega)))
/// (layer cpt N (terms (ref omega) (leaf 0)) (relation (0 0) (1 1)))
/// (layer val N (terms 0))
/// (args (=> N N) 0 1)
/// (query 0 0 1)
/// (obs may must)
/// ```
///
/// Relations and queries refer to terms by their position in the layer.
pub fn parse_simulation_problem<K: EffectKit>(
    kit: &K,
    text: &str,
    budget: &Budget,
) -> Result<SimulationQuery<K::Obs>> {
    let effect = effect_of(kit);
    let m = parse_module(text, effect, kit.signature())?;
    check_known(&m.rest, &["layer", "args", "query", "obs"])?;
    let lw = Lowerer::new(&m.funs);
    let env = lw.env(&m.defs)?;
    let mut layers = Vec::new();
    let mut has_candidate = false;
    let mut arg_sets = Vec::new();
    let mut queries = Vec::new();
    for form in &m.rest {
        let (head, args) = form.as_form().expect("checked above");
        match head {
            "layer" => {
                let [sort, ty, rest @ ..] = args else {
                    return Err(
                        form.error("expected `(layer sort type (terms ..) [(relation ..)])`")
                    );
                };
                let sort = parse_sort(sort)?;
                let ty = parse_ty(ty)?;
                let mut terms = Vec::new();
                let mut relation = None;
                for part in rest {
                    match part.as_form() {
                        Some(("terms", ts)) => {
                            for t in ts {
                                terms.push(match sort {
                                    Sort::Val => {
                                        let v = lw.value(&m.parser.value(t, &Vec::new())?, &[]);
                                        check_value(&env, &v, &ty)
                                            .map_err(|e| t.error(e.to_string()))?;
                                        TermBody::Val(v)
                                    }
                                    Sort::Cpt => {
                                        let tr = lw.tree(&m.parser.tree(t, &Vec::new())?, &[]);
                                        check_results(&env, &tr, &ty)
                                            .map_err(|e| t.error(e.to_string()))?;
                                        TermBody::Cpt(tr)
                                    }
                                });
                            }
                        }
                        Some(("relation", _)) => relation = Some(part),
                        _ => return Err(part.error(format!("unexpected layer part `{part}`"))),
                    }
                }
                let mut layer = Layer::new(sort, ty, terms);
                if let Some(r) = relation {
                    has_candidate = true;
                    let n = layer.terms.len();
                    layer.relation = parse_relation(
                        r,
                        |s| {
                            let i = s.expect_nat()? as usize;
                            if i < n {
                                Ok(i)
                            } else {
                                Err(s.error(format!("term index {i} out of range")))
                            }
                        },
                        n,
                    )?;
                }
                layers.push(layer);
            }
            "args" => {
                let [ty, vals @ ..] = args else {
                    return Err(form.error("expected `(args type values..)`"));
                };
                let ty = parse_ty(ty)?;
                let vals = vals
                    .iter()
                    .map(|v| closed_value(kit.signature(), v))
                    .collect::<Result<_>>()?;
                arg_sets.push((ty, vals));
            }
            "query" => match args {
                [l, i, j] => queries.push((
                    l.expect_nat()? as usize,
                    i.expect_nat()? as usize,
                    j.expect_nat()? as usize,
                )),
                _ => return Err(form.error("expected `(query layer left right)`")),
            },
            _ => {}
        }
    }
    for &(l, i, j) in &queries {
        let ok = layers
            .get(l)
            .is_some_and(|layer| i < layer.terms.len() && j < layer.terms.len());
        if !ok {
            return Err(Error::Parse {
                line: 1,
                col: 1,
                msg: format!("query ({l} {i} {j}) is out of range"),
            });
        }
    }
    Ok(SimulationQuery {
        problem: SimulationProblem {
            env,
            layers,
            arg_sets,
            obs: parse_obs_list(kit, single(&m.rest, "obs")?)?,
            budget: budget.clone(),
        },
        has_candidate,
        queries,
    })
}

fn effect_of<K: EffectKit>(kit: &K) -> EffectName {
    kit.name().parse().expect("built-in kits have effect names")
}
