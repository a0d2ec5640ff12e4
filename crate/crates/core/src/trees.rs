//! Signatures, rational coinductive trees and the tree monad.
//!
//! A tree is a [`TreeExpr`] read against an [`Env`] of named definitions.
//! Cycles go through [`TreeExpr::Ref`], so an infinite tree with finitely
//! many distinct subtrees has a finite representation. `map_tree` and `mu`
//! build lazy wrappers that are only unfolded by [`force`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Name = Arc<str>;

/// Branching of an operation: a finite number of children, or one child per natural.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arity {
    Finite(usize),
    Countable,
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Finite(n) => write!(f, "{n}"),
            Arity::Countable => f.write_str("countably many"),
        }
    }
}

/// An operation symbol, optionally carrying a natural parameter (`update 3`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Op {
    pub name: Name,
    pub param: Option<u64>,
}

impl Op {
    pub fn new(name: &str) -> Self {
        Op {
            name: name.into(),
            param: None,
        }
    }

    pub fn with_param(name: &str, param: u64) -> Self {
        Op {
            name: name.into(),
            param: Some(param),
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param {
            Some(p) => write!(f, "{} {}", self.name, p),
            None => f.write_str(&self.name),
        }
    }
}

/// Declaration of an operation family in a signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpDecl {
    pub name: Name,
    /// Whether the operation takes a natural parameter.
    pub parameterised: bool,
    pub arity: Arity,
}

impl OpDecl {
    pub fn new(name: &str, arity: Arity) -> Self {
        OpDecl {
            name: name.into(),
            parameterised: false,
            arity,
        }
    }

    pub fn parameterised(name: &str, arity: Arity) -> Self {
        OpDecl {
            name: name.into(),
            parameterised: true,
            arity,
        }
    }
}

/// Operation symbols with their arities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    ops: Vec<OpDecl>,
}

impl Signature {
    pub fn new(ops: Vec<OpDecl>) -> Result<Self> {
        for (i, d) in ops.iter().enumerate() {
            if ops[..i].iter().any(|e| e.name == d.name) {
                return Err(Error::DuplicateOp(d.name.to_string()));
            }
            if d.arity == Arity::Finite(0) {
                return Err(Error::InvalidArity(d.name.to_string()));
            }
        }
        Ok(Signature { ops })
    }

    pub fn decls(&self) -> &[OpDecl] {
        &self.ops
    }

    pub fn decl(&self, name: &str) -> Option<&OpDecl> {
        self.ops.iter().find(|d| &*d.name == name)
    }

    pub fn arity(&self, op: &Op) -> Result<Arity> {
        match self.decl(&op.name) {
            Some(d) if d.parameterised == op.param.is_some() => Ok(d.arity),
            _ => Err(Error::UnknownOp(op.to_string())),
        }
    }
}

/// Host function on leaf payloads, compared by identity.
#[derive(Clone)]
pub struct ValueMap(Arc<dyn Fn(&Value) -> Value + Send + Sync>);

impl ValueMap {
    pub fn new(f: impl Fn(&Value) -> Value + Send + Sync + 'static) -> Self {
        ValueMap(Arc::new(f))
    }

    pub fn apply(&self, v: &Value) -> Value {
        (self.0)(v)
    }

    fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as *const () as usize
    }
}

impl PartialEq for ValueMap {
    fn eq(&self, other: &Self) -> bool {
        self.id() == other.id()
    }
}

impl Eq for ValueMap {}

impl fmt::Debug for ValueMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<map {:#x}>", self.id())
    }
}

/// Child rule of a countably branching node, compared by identity.
#[derive(Clone)]
pub struct ChildRule(Arc<dyn Fn(u64) -> TreeExpr + Send + Sync>);

impl ChildRule {
    pub fn new(f: impl Fn(u64) -> TreeExpr + Send + Sync + 'static) -> Self {
        ChildRule(Arc::new(f))
    }

    pub fn at(&self, i: u64) -> TreeExpr {
        (self.0)(i)
    }
}

impl PartialEq for ChildRule {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Eq for ChildRule {}

impl fmt::Debug for ChildRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<rule {:p}>", Arc::as_ptr(&self.0) as *const ())
    }
}

/// Suspended children of a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Children {
    Finite(Arc<[TreeExpr]>),
    Rule(ChildRule),
}

impl Children {
    pub fn finite(children: Vec<TreeExpr>) -> Self {
        Children::Finite(children.into())
    }

    pub fn rule(f: impl Fn(u64) -> TreeExpr + Send + Sync + 'static) -> Self {
        Children::Rule(ChildRule::new(f))
    }

    /// The child at index `i`, or `None` past a finite arity.
    pub fn child(&self, i: u64) -> Option<TreeExpr> {
        match self {
            Children::Finite(cs) => usize::try_from(i).ok().and_then(|i| cs.get(i).cloned()),
            Children::Rule(r) => Some(r.at(i)),
        }
    }

    /// Rewrites every child lazily.
    pub fn map(&self, f: impl Fn(TreeExpr) -> TreeExpr + Send + Sync + 'static) -> Children {
        match self {
            Children::Finite(cs) => Children::Finite(cs.iter().cloned().map(f).collect()),
            Children::Rule(r) => {
                let r = r.clone();
                Children::rule(move |i| f(r.at(i)))
            }
        }
    }
}

/// A possibly cyclic, lazily unfolded tree expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeExpr {
    Leaf(Value),
    Node(Op, Children),
    Ref(Name),
    /// Functor action, applied to leaves on demand.
    Map(ValueMap, Arc<TreeExpr>),
    /// Monad multiplication: grafts the thunk carried by each leaf.
    Mu(Arc<TreeExpr>),
}

impl TreeExpr {
    pub fn leaf(v: Value) -> Self {
        TreeExpr::Leaf(v)
    }

    pub fn nat(n: u64) -> Self {
        TreeExpr::Leaf(Value::Nat(n))
    }

    pub fn node(op: Op, children: Vec<TreeExpr>) -> Self {
        TreeExpr::Node(op, Children::finite(children))
    }

    pub fn reference(name: &str) -> Self {
        TreeExpr::Ref(name.into())
    }

    /// Every `Ref` name occurring syntactically (not inside host closures).
    fn collect_refs(&self, out: &mut Vec<Name>) {
        match self {
            TreeExpr::Leaf(v) => v.collect_refs(out),
            TreeExpr::Node(_, Children::Finite(cs)) => cs.iter().for_each(|c| c.collect_refs(out)),
            TreeExpr::Node(_, Children::Rule(_)) => {}
            TreeExpr::Ref(n) => out.push(n.clone()),
            TreeExpr::Map(_, t) | TreeExpr::Mu(t) => t.collect_refs(out),
        }
    }

    fn check_ops(&self, sig: &Signature) -> Result<()> {
        match self {
            TreeExpr::Leaf(v) => v.check_ops(sig),
            TreeExpr::Node(op, cs) => {
                let arity = sig.arity(op)?;
                match (arity, cs) {
                    (Arity::Finite(n), Children::Finite(v)) if v.len() == n => {
                        v.iter().try_for_each(|c| c.check_ops(sig))
                    }
                    (Arity::Countable, Children::Rule(_)) => Ok(()),
                    (_, cs) => Err(Error::ArityMismatch {
                        op: op.to_string(),
                        expected: arity.to_string(),
                        got: match cs {
                            Children::Finite(v) => v.len(),
                            Children::Rule(_) => usize::MAX,
                        },
                    }),
                }
            }
            TreeExpr::Ref(_) => Ok(()),
            TreeExpr::Map(_, t) | TreeExpr::Mu(t) => t.check_ops(sig),
        }
    }
}

impl fmt::Display for TreeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeExpr::Leaf(v) => write!(f, "(leaf {v})"),
            TreeExpr::Node(op, Children::Finite(cs)) => {
                write!(f, "({op}")?;
                for c in cs.iter() {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
            TreeExpr::Node(op, Children::Rule(_)) => write!(f, "({op} <rule>)"),
            TreeExpr::Ref(n) => write!(f, "(ref {n})"),
            TreeExpr::Map(_, t) => write!(f, "(map <fn> {t})"),
            TreeExpr::Mu(t) => write!(f, "(mu {t})"),
        }
    }
}

/// A function value: a family of computations over a declared set of arguments.
pub struct FunValue {
    pub name: Name,
    pub admissible: Vec<Value>,
    body: Arc<dyn Fn(&Value) -> TreeExpr + Send + Sync>,
}

impl FunValue {
    pub fn new(
        name: &str,
        admissible: Vec<Value>,
        body: impl Fn(&Value) -> TreeExpr + Send + Sync + 'static,
    ) -> Self {
        FunValue {
            name: name.into(),
            admissible,
            body: Arc::new(body),
        }
    }

    /// Applies the function to a declared argument.
    pub fn apply(&self, arg: &Value) -> Result<TreeExpr> {
        if self.admissible.contains(arg) {
            Ok((self.body)(arg))
        } else {
            Err(Error::InadmissibleArgument {
                fun: self.name.to_string(),
                arg: arg.to_string(),
            })
        }
    }
}

impl fmt::Debug for FunValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FunValue({})", self.name)
    }
}

/// Leaf payloads and value terms.
#[derive(Debug, Clone)]
pub enum Value {
    Nat(u64),
    Unit,
    Pair(Arc<Value>, Arc<Value>),
    Thunk(Arc<TreeExpr>),
    Fun(Arc<FunValue>),
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Self {
        Value::Pair(Arc::new(a), Arc::new(b))
    }

    pub fn thunk(t: TreeExpr) -> Self {
        Value::Thunk(Arc::new(t))
    }

    pub fn fun(f: FunValue) -> Self {
        Value::Fun(Arc::new(f))
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self {
            Value::Nat(n) => Some(*n),
            _ => None,
        }
    }

    fn collect_refs(&self, out: &mut Vec<Name>) {
        match self {
            Value::Pair(a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
            Value::Thunk(t) => t.collect_refs(out),
            Value::Nat(_) | Value::Unit | Value::Fun(_) => {}
        }
    }

    fn check_ops(&self, sig: &Signature) -> Result<()> {
        match self {
            Value::Pair(a, b) => {
                a.check_ops(sig)?;
                b.check_ops(sig)
            }
            Value::Thunk(t) => t.check_ops(sig),
            Value::Nat(_) | Value::Unit | Value::Fun(_) => Ok(()),
        }
    }
}

/// Structural equality; functions compare by declared name.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Nat(a), Value::Nat(b)) => a == b,
            (Value::Unit, Value::Unit) => true,
            (Value::Pair(a0, a1), Value::Pair(b0, b1)) => a0 == b0 && a1 == b1,
            (Value::Thunk(a), Value::Thunk(b)) => Arc::ptr_eq(a, b) || a == b,
            (Value::Fun(a), Value::Fun(b)) => a.name == b.name,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Nat(n) => write!(f, "{n}"),
            Value::Unit => f.write_str("unit"),
            Value::Pair(a, b) => write!(f, "(pair {a} {b})"),
            Value::Thunk(t) => write!(f, "(thunk {t})"),
            Value::Fun(fv) => write!(f, "(fn {})", fv.name),
        }
    }
}

/// Named definitions that `Ref` nodes point into.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Env {
    defs: Arc<BTreeMap<Name, TreeExpr>>,
}

impl Env {
    pub fn empty() -> Self {
        Env::default()
    }

    /// Builds an environment, rejecting unbound references and unguarded cycles.
    pub fn new<N: Into<Name>>(bindings: impl IntoIterator<Item = (N, TreeExpr)>) -> Result<Self> {
        let defs: BTreeMap<Name, TreeExpr> =
            bindings.into_iter().map(|(n, t)| (n.into(), t)).collect();
        let env = Env {
            defs: Arc::new(defs),
        };
        env.validate()?;
        Ok(env)
    }

    pub fn get(&self, name: &str) -> Result<&TreeExpr> {
        self.defs
            .get(name)
            .ok_or_else(|| Error::UnboundRef(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.defs.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// Union of two environments; a name bound differently in both is rejected.
    pub fn merge(&self, other: &Env) -> Result<Env> {
        if other.defs.is_empty() || Arc::ptr_eq(&self.defs, &other.defs) {
            return Ok(self.clone());
        }
        if self.defs.is_empty() {
            return Ok(other.clone());
        }
        let mut defs = (*self.defs).clone();
        for (n, t) in other.defs.iter() {
            match defs.get(n) {
                Some(existing) if existing != t => {
                    return Err(Error::SortMismatch(format!(
                        "definition `{n}` bound twice with different bodies"
                    )))
                }
                _ => {
                    defs.insert(n.clone(), t.clone());
                }
            }
        }
        let env = Env {
            defs: Arc::new(defs),
        };
        env.validate()?;
        Ok(env)
    }

    /// Checks that `t` only refers to bound names.
    pub fn check_closed(&self, t: &TreeExpr) -> Result<()> {
        let mut refs = Vec::new();
        t.collect_refs(&mut refs);
        for r in refs {
            self.get(&r)?;
        }
        Ok(())
    }

    /// Checks every node in the bindings and `roots` against a signature.
    pub fn check_signature(&self, sig: &Signature, roots: &[&TreeExpr]) -> Result<()> {
        for t in self.defs.values() {
            t.check_ops(sig)?;
        }
        roots.iter().try_for_each(|t| t.check_ops(sig))
    }

    fn validate(&self) -> Result<()> {
        for t in self.defs.values() {
            self.check_closed(t)?;
        }
        for n in self.defs.keys() {
            resolve(self, &TreeExpr::Ref(n.clone()))?;
        }
        Ok(())
    }
}

/// The head of a tree after resolving references and lazy wrappers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Head {
    Leaf(Value),
    Node(Op, Children),
}

/// Identity of a named subtree: the last definition reached while forcing,
/// together with the lazy wrappers applied around it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Key {
    wrappers: Arc<[usize]>,
    name: Name,
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in self.wrappers.iter() {
            if *w == MU_WRAPPER {
                f.write_str("mu.")?;
            } else {
                f.write_str("map.")?;
            }
        }
        f.write_str(&self.name)
    }
}

#[derive(Clone)]
enum Wrapper {
    Mu,
    Map(ValueMap),
}

const MU_WRAPPER: usize = 0;
const FORCE_STEP_CAP: usize = 1 << 20;

impl Wrapper {
    fn id(&self) -> usize {
        match self {
            Wrapper::Mu => MU_WRAPPER,
            Wrapper::Map(f) => f.id(),
        }
    }

    fn wrap(&self, t: TreeExpr) -> TreeExpr {
        match self {
            Wrapper::Mu => TreeExpr::Mu(Arc::new(t)),
            Wrapper::Map(f) => TreeExpr::Map(f.clone(), Arc::new(t)),
        }
    }
}

/// Resolves the head of `t`, chasing references and unfolding `Map`/`Mu`.
pub fn force(env: &Env, t: &TreeExpr) -> Result<Head> {
    resolve(env, t).map(|(h, _)| h)
}

/// As [`force`], also returning the identity of the resolved node when it
/// was reached through a named definition.
pub fn force_keyed(env: &Env, t: &TreeExpr) -> Result<(Head, Option<Key>)> {
    resolve(env, t)
}

fn resolve(env: &Env, t: &TreeExpr) -> Result<(Head, Option<Key>)> {
    let mut stack: Vec<Wrapper> = Vec::new();
    // (name, stack depth) of references visited since the stack last shrank below them.
    let mut visits: Vec<(Name, usize)> = Vec::new();
    let mut key: Option<Key> = None;
    let mut current = t.clone();
    for _ in 0..FORCE_STEP_CAP {
        match current {
            TreeExpr::Ref(n) => {
                if visits.iter().any(|(m, d)| *m == n && *d <= stack.len()) {
                    return Err(Error::UnguardedCycle(n.to_string()));
                }
                visits.push((n.clone(), stack.len()));
                key = Some(Key {
                    wrappers: stack.iter().map(Wrapper::id).collect(),
                    name: n.clone(),
                });
                current = env.get(&n)?.clone();
            }
            TreeExpr::Mu(inner) => {
                stack.push(Wrapper::Mu);
                current = (*inner).clone();
            }
            TreeExpr::Map(f, inner) => {
                stack.push(Wrapper::Map(f));
                current = (*inner).clone();
            }
            TreeExpr::Leaf(v) => match stack.pop() {
                None => return Ok((Head::Leaf(v), None)),
                Some(w) => {
                    let depth = stack.len();
                    visits.retain(|(_, d)| *d <= depth);
                    if key.as_ref().is_some_and(|k| k.wrappers.len() > depth) {
                        key = None;
                    }
                    current = match w {
                        Wrapper::Map(f) => TreeExpr::Leaf(f.apply(&v)),
                        Wrapper::Mu => match v {
                            Value::Thunk(inner) => (*inner).clone(),
                            _ => return Err(Error::NonThunkLeaf),
                        },
                    };
                }
            },
            TreeExpr::Node(op, cs) => {
                if stack.is_empty() {
                    return Ok((Head::Node(op, cs), key));
                }
                let stack = Arc::new(stack);
                let cs = cs.map(move |c| stack.iter().rev().fold(c, |acc, w| w.wrap(acc)));
                return Ok((Head::Node(op, cs), key));
            }
        }
    }
    Err(Error::UnguardedCycle(format!(
        "resolution exceeded {FORCE_STEP_CAP} steps"
    )))
}

/// Functor action on leaves, applied lazily.
pub fn map_tree(f: impl Fn(&Value) -> Value + Send + Sync + 'static, t: TreeExpr) -> TreeExpr {
    TreeExpr::Map(ValueMap::new(f), Arc::new(t))
}

/// Monad unit.
pub fn eta(v: Value) -> TreeExpr {
    TreeExpr::Leaf(v)
}

/// Monad multiplication. Leaves of `d` must carry thunks; a leaf that does
/// not is reported as [`Error::NonThunkLeaf`] when it is forced.
pub fn mu(d: TreeExpr) -> TreeExpr {
    TreeExpr::Mu(Arc::new(d))
}

/// A fully forced finite prefix of a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finite {
    Cut,
    Leaf(Value),
    Node(Op, Vec<Finite>),
}

impl fmt::Display for Finite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finite::Cut => f.write_str("Cut"),
            Finite::Leaf(v) => write!(f, "{v}"),
            Finite::Node(op, cs) => {
                write!(f, "{op}(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl Finite {
    /// Whether `self` is obtained from `other` by replacing subtrees with `Cut`.
    pub fn is_prefix_of(&self, other: &Finite) -> bool {
        match (self, other) {
            (Finite::Cut, _) => true,
            (Finite::Leaf(a), Finite::Leaf(b)) => a == b,
            (Finite::Node(o1, c1), Finite::Node(o2, c2)) => {
                o1 == o2
                    && c1.len() == c2.len()
                    && c1.iter().zip(c2).all(|(a, b)| a.is_prefix_of(b))
            }
            _ => false,
        }
    }
}

/// Unfolds `depth` node layers; countable nodes show the children at `0..window`.
pub fn truncate(env: &Env, t: &TreeExpr, depth: usize, window: u64) -> Result<Finite> {
    if depth == 0 {
        return Ok(Finite::Cut);
    }
    match force(env, t)? {
        Head::Leaf(v) => Ok(Finite::Leaf(v)),
        Head::Node(op, Children::Finite(cs)) => Ok(Finite::Node(
            op,
            cs.iter()
                .map(|c| truncate(env, c, depth - 1, window))
                .collect::<Result<_>>()?,
        )),
        Head::Node(op, Children::Rule(r)) => Ok(Finite::Node(
            op,
            (0..window)
                .map(|i| truncate(env, &r.at(i), depth - 1, window))
                .collect::<Result<_>>()?,
        )),
    }
}

/// The canonical diverging tree `d = op(d, .., d)`, bound under the name `diverge`.
pub fn mk_diverge(sig: &Signature, op: &Op) -> Result<(Env, TreeExpr)> {
    mk_diverge_named(sig, op, "diverge")
}

pub fn mk_diverge_named(sig: &Signature, op: &Op, name: &str) -> Result<(Env, TreeExpr)> {
    let body = match sig.arity(op)? {
        Arity::Finite(n) => TreeExpr::node(op.clone(), vec![TreeExpr::reference(name); n]),
        Arity::Countable => {
            let name: Name = name.into();
            TreeExpr::Node(
                op.clone(),
                Children::rule(move |_| TreeExpr::Ref(name.clone())),
            )
        }
    };
    let env = Env::new([(name, body)])?;
    Ok((env, TreeExpr::reference(name)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pure_sig() -> Signature {
        Signature::new(vec![OpDecl::new("sk", Arity::Finite(1))]).unwrap()
    }

    fn sk(t: TreeExpr) -> TreeExpr {
        TreeExpr::node(Op::new("sk"), vec![t])
    }

    fn or(a: TreeExpr, b: TreeExpr) -> TreeExpr {
        TreeExpr::node(Op::new("or"), vec![a, b])
    }

    #[test]
    fn force_leaf_is_identity() {
        let h = force(&Env::empty(), &TreeExpr::nat(5)).unwrap();
        assert_eq!(h, Head::Leaf(Value::Nat(5)));
    }

    #[test]
    fn force_unfolds_diverge_once() {
        let env = Env::new([("d", sk(TreeExpr::reference("d")))]).unwrap();
        let (h, key) = force_keyed(&env, &TreeExpr::reference("d")).unwrap();
        match h {
            Head::Node(op, cs) => {
                assert_eq!(op, Op::new("sk"));
                assert_eq!(cs.child(0), Some(TreeExpr::reference("d")));
            }
            other => panic!("unexpected head {other:?}"),
        }
        assert_eq!(key.unwrap().to_string(), "d");
    }

    #[test]
    fn ref_chain_collapses() {
        let env = Env::new([("a", TreeExpr::reference("b")), ("b", TreeExpr::nat(0))]).unwrap();
        assert_eq!(
            force(&env, &TreeExpr::reference("a")).unwrap(),
            Head::Leaf(Value::Nat(0))
        );
    }

    #[test]
    fn unbound_and_unguarded_are_rejected() {
        assert_eq!(
            Env::new([("a", TreeExpr::reference("zz"))]),
            Err(Error::UnboundRef("zz".into()))
        );
        assert!(matches!(
            Env::new([
                ("a", TreeExpr::reference("b")),
                ("b", TreeExpr::reference("a"))
            ]),
            Err(Error::UnguardedCycle(_))
        ));
        assert!(matches!(
            Env::new([("a", mu(TreeExpr::reference("a")))]),
            Err(Error::UnguardedCycle(_))
        ));
        // mu(leaf(thunk a)) = a, so this is unproductive too
        assert!(matches!(
            Env::new([(
                "a",
                mu(TreeExpr::leaf(Value::thunk(TreeExpr::reference("a"))))
            )]),
            Err(Error::UnguardedCycle(_))
        ));
    }

    #[test]
    fn mu_of_self_thunk_is_productive() {
        // a = leaf(thunk a); mu a = a, which is a leaf
        let env =
            Env::new([("a", TreeExpr::leaf(Value::thunk(TreeExpr::reference("a"))))]).unwrap();
        let h = force(&env, &mu(TreeExpr::reference("a"))).unwrap();
        assert_eq!(h, Head::Leaf(Value::thunk(TreeExpr::reference("a"))));
    }

    #[test]
    fn map_tree_examples() {
        let env = Env::empty();
        let inc = |v: &Value| Value::Nat(v.as_nat().unwrap() + 1);
        assert_eq!(
            truncate(&env, &map_tree(inc, TreeExpr::nat(4)), 1, 1).unwrap(),
            Finite::Leaf(Value::Nat(5))
        );
        let t = or(TreeExpr::nat(1), TreeExpr::nat(2));
        let double = |v: &Value| Value::Nat(v.as_nat().unwrap() * 10);
        let expected = truncate(&env, &or(TreeExpr::nat(10), TreeExpr::nat(20)), 3, 1).unwrap();
        assert_eq!(
            truncate(&env, &map_tree(double, t), 3, 1).unwrap(),
            expected
        );
    }

    #[test]
    fn mu_examples() {
        let env = Env::empty();
        let t = mu(TreeExpr::leaf(Value::thunk(TreeExpr::nat(5))));
        assert_eq!(
            truncate(&env, &t, 4, 1).unwrap(),
            Finite::Leaf(Value::Nat(5))
        );

        let t = mu(sk(TreeExpr::leaf(Value::thunk(TreeExpr::nat(3)))));
        assert_eq!(
            truncate(&env, &t, 4, 1).unwrap(),
            truncate(&env, &sk(TreeExpr::nat(3)), 4, 1).unwrap()
        );

        let env = Env::new([(
            "omega",
            or(TreeExpr::reference("omega"), TreeExpr::reference("omega")),
        )])
        .unwrap();
        let omega = TreeExpr::reference("omega");
        let d = or(
            TreeExpr::leaf(Value::thunk(omega.clone())),
            TreeExpr::leaf(Value::thunk(TreeExpr::nat(0))),
        );
        let expected = or(omega, TreeExpr::nat(0));
        assert_eq!(
            truncate(&env, &mu(d), 3, 1).unwrap(),
            truncate(&env, &expected, 3, 1).unwrap()
        );
    }

    #[test]
    fn mu_rejects_plain_leaves() {
        assert_eq!(
            force(&Env::empty(), &mu(TreeExpr::nat(1))),
            Err(Error::NonThunkLeaf)
        );
    }

    #[test]
    fn truncate_shapes() {
        let (env, d) = mk_diverge(&pure_sig(), &Op::new("sk")).unwrap();
        assert_eq!(truncate(&env, &d, 0, 1).unwrap(), Finite::Cut);
        assert_eq!(truncate(&env, &d, 2, 1).unwrap().to_string(), "sk(sk(Cut))");
        assert_eq!(
            truncate(&env, &d, 3, 1).unwrap().to_string(),
            "sk(sk(sk(Cut)))"
        );
        assert_eq!(
            truncate(&env, &TreeExpr::nat(7), 99, 1).unwrap(),
            Finite::Leaf(Value::Nat(7))
        );
    }

    #[test]
    fn diverge_over_binary_choice() {
        let sig = Signature::new(vec![OpDecl::new("or", Arity::Finite(2))]).unwrap();
        let (env, d) = mk_diverge(&sig, &Op::new("or")).unwrap();
        match force(&env, &d).unwrap() {
            Head::Node(_, cs) => {
                assert_eq!(cs.child(0), Some(d.clone()));
                assert_eq!(cs.child(1), Some(d.clone()));
                assert_eq!(cs.child(2), None);
            }
            h => panic!("unexpected {h:?}"),
        }
        assert_eq!(
            mk_diverge(&sig, &Op::new("sk")).unwrap_err(),
            Error::UnknownOp("sk".into())
        );
    }

    #[test]
    fn signature_invariants() {
        assert!(matches!(
            Signature::new(vec![
                OpDecl::new("a", Arity::Finite(1)),
                OpDecl::new("a", Arity::Finite(2))
            ]),
            Err(Error::DuplicateOp(_))
        ));
        assert!(matches!(
            Signature::new(vec![OpDecl::new("a", Arity::Finite(0))]),
            Err(Error::InvalidArity(_))
        ));
        let sig = Signature::new(vec![OpDecl::parameterised("update", Arity::Finite(1))]).unwrap();
        assert_eq!(
            sig.arity(&Op::with_param("update", 3)),
            Ok(Arity::Finite(1))
        );
        assert!(sig.arity(&Op::new("update")).is_err());
    }

    #[test]
    fn fun_application_checks_admissibility() {
        let f = FunValue::new("inc", vec![Value::Nat(0), Value::Nat(1)], |v| {
            TreeExpr::nat(v.as_nat().unwrap() + 1)
        });
        assert_eq!(f.apply(&Value::Nat(1)), Ok(TreeExpr::nat(2)));
        assert!(matches!(
            f.apply(&Value::Nat(5)),
            Err(Error::InadmissibleArgument { .. })
        ));
    }
}
