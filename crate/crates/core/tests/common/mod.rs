#![allow(dead_code)]

use efftree::error::Result;
use efftree::trees::{Children, Op, TreeExpr, Value};
use efftree::verdict::Verdict;

pub fn sk(t: TreeExpr) -> TreeExpr {
    TreeExpr::node(Op::new("sk"), vec![t])
}

pub fn or(l: TreeExpr, r: TreeExpr) -> TreeExpr {
    TreeExpr::node(Op::new("or"), vec![l, r])
}

pub fn update(k: u64, t: TreeExpr) -> TreeExpr {
    TreeExpr::node(Op::with_param("update", k), vec![t])
}

pub fn lookup(f: impl Fn(u64) -> TreeExpr + Send + Sync + 'static) -> TreeExpr {
    TreeExpr::Node(Op::new("lookup"), Children::rule(f))
}

pub fn input(l: TreeExpr, r: TreeExpr) -> TreeExpr {
    TreeExpr::node(Op::new("input"), vec![l, r])
}

pub fn thunk(t: TreeExpr) -> TreeExpr {
    TreeExpr::leaf(Value::thunk(t))
}

pub fn omega() -> TreeExpr {
    TreeExpr::reference("omega")
}

pub fn omega_env() -> efftree::trees::Env {
    efftree::trees::Env::new([("omega", or(omega(), omega()))]).unwrap()
}

pub fn equals(n: u64) -> impl Fn(&Value) -> Result<Verdict> {
    move |v| Ok(Verdict::from_bool(v.as_nat() == Some(n)))
}

/// The two higher-order nondeterministic programs `P` and `Q` with every
/// subterm reachable from them.
pub fn case_study_problem() -> efftree::relator::SimulationProblem<efftree::effects::NondetObs> {
    use efftree::effects::EffectKit;
    use efftree::logic::{Sort, TermBody, Ty};
    use efftree::relator::{Layer, SimulationProblem};
    let u = Ty::u;
    let p = or(thunk(omega()), thunk(thunk(omega())));
    let q = thunk(or(omega(), thunk(omega())));
    let inner = |t: TreeExpr| TermBody::Val(Value::thunk(t));
    SimulationProblem {
        env: omega_env(),
        layers: vec![
            Layer::new(
                Sort::Cpt,
                u(u(Ty::N)),
                vec![TermBody::Cpt(p), TermBody::Cpt(q)],
            ),
            Layer::new(
                Sort::Val,
                u(u(Ty::N)),
                vec![
                    inner(omega()),
                    inner(thunk(omega())),
                    inner(or(omega(), thunk(omega()))),
                ],
            ),
            Layer::new(
                Sort::Cpt,
                u(Ty::N),
                vec![
                    TermBody::Cpt(omega()),
                    TermBody::Cpt(thunk(omega())),
                    TermBody::Cpt(or(omega(), thunk(omega()))),
                ],
            ),
            Layer::new(Sort::Val, u(Ty::N), vec![inner(omega())]),
            Layer::new(Sort::Cpt, Ty::N, vec![TermBody::Cpt(omega())]),
            Layer::new(Sort::Val, Ty::N, vec![]),
        ],
        arg_sets: vec![],
        obs: efftree::effects::nondet_kit().obs_sample(),
        budget: efftree::liftings::Budget::default(),
    }
}

pub mod instances {
    use efftree::decompose::DoubleTree;
    use efftree::effects::EffectKit;
    use efftree::gen::{self, GenRng};
    use efftree::liftings::Budget;
    use efftree::logic::{Sort, Term, TermBody, Ty};
    use efftree::relator::{leaves, FiniteCarrier, Layer, Relation, SimulationProblem};
    use efftree::trees::{mk_diverge_named, Env, TreeExpr, Value};
    use rand::Rng;
    use std::collections::hash_map::DefaultHasher;
    use std::hash::{Hash, Hasher};

    pub fn random_relation(r: &mut GenRng, n: usize, density: f64) -> Relation {
        let mut rel = Relation::empty(n);
        for a in 0..n {
            for b in 0..n {
                if r.gen_bool(density) {
                    rel.insert(a, b);
                }
            }
        }
        rel
    }

    /// A diverging definition named `spin` over the kit's first operation.
    pub fn spin_env<K: EffectKit>(kit: &K) -> Env {
        let d = &kit.signature().decls()[0];
        let op = if d.parameterised {
            efftree::trees::Op::with_param(&d.name, 0)
        } else {
            efftree::trees::Op::new(&d.name)
        };
        mk_diverge_named(kit.signature(), &op, "spin").unwrap().0
    }

    /// A double tree with a rational outer layer named by `prefix`, inner
    /// leaves `map(v)` for `v` below `n`, and at most `max_outer` distinct
    /// outer leaves.
    pub fn carrier_double_tree<K: EffectKit>(
        kit: &K,
        r: &mut GenRng,
        n: u64,
        max_outer: usize,
        prefix: &str,
        map: &dyn Fn(u64) -> u64,
    ) -> DoubleTree {
        let spin = spin_env(kit);
        loop {
            let mut inner = |r: &mut GenRng| {
                if r.gen_bool(0.15) {
                    Value::thunk(efftree::trees::TreeExpr::reference("spin"))
                } else {
                    let depth = r.gen_range(0..=2);
                    let mut leaf = |r: &mut GenRng| Value::Nat(map(r.gen_range(0..n)));
                    Value::thunk(gen::finite_tree(kit, r, depth, &mut leaf))
                }
            };
            let (env, root) = gen::rational_tree_over(kit, r, 2, prefix, &spin, &mut inner);
            if leaves(&env, &root, 32).unwrap().len() <= max_outer {
                return DoubleTree::new(env, root);
            }
        }
    }

    fn pick(salt: u64, v: u64, choices: &[usize]) -> usize {
        let mut h = DefaultHasher::new();
        (salt, v).hash(&mut h);
        choices[(h.finish() % choices.len() as u64) as usize]
    }

    /// A Γ-sequencing instance: `d1` has the shape of `d0` with each inner
    /// leaf `v` replaced by some `w` such that `(v, w)` is in the relation.
    pub fn sequencing_instance<K: EffectKit>(
        kit: &K,
        r: &mut GenRng,
    ) -> (FiniteCarrier, Relation, DoubleTree, DoubleTree) {
        let n = r.gen_range(1..=6usize);
        let carrier = FiniteCarrier::new((0..n as u64).map(Value::Nat).collect()).unwrap();
        let mut rel = random_relation(r, n, 0.3);
        for a in 0..n {
            rel.insert(a, a);
        }
        let salt: u64 = r.gen();
        let identical = r.gen_bool(0.2);
        let succ: Vec<Vec<usize>> = (0..n)
            .map(|a| (0..n).filter(|&b| rel.contains(a, b)).collect())
            .collect();
        let mut r1 = r.clone();
        let d0 = carrier_double_tree(kit, r, n as u64, 6, "o", &|v| v);
        let step = |v: u64| {
            if identical {
                v
            } else {
                pick(salt, v, &succ[v as usize]) as u64
            }
        };
        let d1 = carrier_double_tree(kit, &mut r1, n as u64, 6, "p", &step);
        (carrier, rel, d0, d1)
    }

    /// A small universe over `N` and `U N`: results 0..3, four computations
    /// returning them, their thunks, and two computations returning thunks.
    pub fn simulation_universe<K: EffectKit>(kit: &K, r: &mut GenRng) -> SimulationProblem<K::Obs> {
        let mut env = spin_env(kit);
        let mut cpts = Vec::new();
        for i in 0..4 {
            let (e, t) = loop {
                let (e, t) =
                    gen::rational_tree(kit, r, 2, &format!("c{i}_"), &mut gen::nat_leaves(3));
                if !cpts.contains(&t) {
                    break (e, t);
                }
            };
            env = env.merge(&e).unwrap();
            cpts.push(t);
        }
        let thunks: Vec<Value> = cpts.iter().cloned().map(Value::thunk).collect();
        let mut upper = Vec::new();
        for _ in 0..2 {
            let pool = thunks.clone();
            let mut leaf = move |r: &mut GenRng| pool[r.gen_range(0..pool.len())].clone();
            loop {
                let t = gen::finite_tree(kit, r, 2, &mut leaf);
                if !upper.contains(&t) {
                    upper.push(t);
                    break;
                }
            }
        }
        let layers = vec![
            Layer::new(
                Sort::Val,
                Ty::N,
                (0..3).map(|n| TermBody::Val(Value::Nat(n))).collect(),
            ),
            Layer::new(
                Sort::Cpt,
                Ty::N,
                cpts.into_iter().map(TermBody::Cpt).collect(),
            ),
            Layer::new(
                Sort::Val,
                Ty::u(Ty::N),
                thunks.into_iter().map(TermBody::Val).collect(),
            ),
            Layer::new(
                Sort::Cpt,
                Ty::u(Ty::N),
                upper.into_iter().map(TermBody::Cpt).collect(),
            ),
        ];
        SimulationProblem {
            env,
            layers,
            arg_sets: vec![],
            obs: kit.obs_sample(),
            budget: Budget::new(32, 8),
        }
    }

    pub fn random_ty(r: &mut GenRng) -> Ty {
        match r.gen_range(0..6) {
            0 => Ty::N,
            1 => Ty::u(Ty::N),
            2 => Ty::u(Ty::u(Ty::N)),
            3 => Ty::prod(Ty::N, Ty::N),
            4 => Ty::u(Ty::prod(Ty::N, Ty::N)),
            _ => Ty::arrow(Ty::N, Ty::u(Ty::N)),
        }
    }

    /// A computation of type `N` or `U N` over rational trees.
    pub fn random_cpt<K: EffectKit>(kit: &K, r: &mut GenRng) -> Term {
        if r.gen_bool(0.5) {
            let (env, t) = gen::rational_tree(kit, r, 3, "t", &mut gen::nat_leaves(4));
            Term::cpt(Ty::N, t, env)
        } else {
            let (inner_env, inner) = gen::rational_tree(kit, r, 2, "i", &mut gen::nat_leaves(4));
            let mut pool = vec![Value::thunk(inner), Value::thunk(TreeExpr::nat(1))];
            if let Some(n) = inner_env.names().next() {
                pool.push(Value::thunk(TreeExpr::reference(n)));
            }
            let mut leaf = move |r: &mut GenRng| pool[r.gen_range(0..pool.len())].clone();
            let (env, t) = gen::rational_tree_over(kit, r, 2, "o", &inner_env, &mut leaf);
            Term::cpt(Ty::u(Ty::N), t, env)
        }
    }

    /// Two simulations inside random candidates that contain the identity.
    pub fn two_simulations<K: EffectKit>(
        kit: &K,
        r: &mut GenRng,
        p: &SimulationProblem<K::Obs>,
    ) -> (Vec<Relation>, Vec<Relation>) {
        let candidate = |r: &mut GenRng| -> Vec<Relation> {
            p.layers
                .iter()
                .map(|l| {
                    let n = l.terms.len();
                    let mut rel = random_relation(r, n, 0.6);
                    for a in 0..n {
                        rel.insert(a, a);
                    }
                    rel
                })
                .collect()
        };
        let pair = kit.pair();
        let c1 = candidate(r);
        let c2 = candidate(r);
        let s1 = p.with_relations(c1).greatest_within(&pair).unwrap();
        let s2 = p.with_relations(c2).greatest_within(&pair).unwrap();
        (s1, s2)
    }
}

/// A direct recursive reading of the liftings on finite trees with total
/// predicates, sharing nothing with the checker beyond the kit's tables.
pub mod oracle {
    use efftree::effects::EffectKit;
    use efftree::testlogic::Test;
    use efftree::trees::{TreeExpr, Value};

    /// Two-valued test evaluation. Families must have bounded support.
    pub fn holds<A: 'static>(t: &Test<A>, atom: &mut dyn FnMut(&A) -> bool) -> bool {
        match t {
            Test::Atom(a) => atom(a),
            Test::True => true,
            Test::False => false,
            Test::And(l, r) => holds(l, atom) && holds(r, atom),
            Test::Or(l, r) => holds(l, atom) || holds(r, atom),
            Test::BigAnd(f) => {
                let n = f.support().expect("bounded family");
                (0..n).all(|i| holds(&f.at(i), atom))
            }
            Test::BigOr(f) => {
                let n = f.support().expect("bounded family");
                (0..n).any(|i| holds(&f.at(i), atom))
            }
        }
    }

    pub fn alpha<K: EffectKit>(
        kit: &K,
        o: &K::Obs,
        p: &dyn Fn(&Value) -> bool,
        t: &TreeExpr,
    ) -> bool {
        match t {
            TreeExpr::Leaf(v) => kit.leaf_fn(o) && p(v),
            TreeExpr::Node(op, cs) => holds(&kit.node_fn(op, o), &mut |(i, o2)| {
                alpha(kit, o2, p, &cs.child(*i).expect("child in range"))
            }),
            other => panic!("not a finite tree: {other:?}"),
        }
    }

    pub fn beta<K: EffectKit>(
        kit: &K,
        o: &K::Obs,
        p: &dyn Fn(&Value) -> bool,
        t: &TreeExpr,
    ) -> bool {
        match t {
            TreeExpr::Leaf(v) => !kit.leaf_fn(o) || p(v),
            TreeExpr::Node(op, cs) => !holds(&kit.node_fn(op, o), &mut |(i, o2)| {
                !beta(kit, o2, p, &cs.child(*i).expect("child in range"))
            }),
            other => panic!("not a finite tree: {other:?}"),
        }
    }
}

/// Monad and functor laws compared on truncations of depth 0 to 5.
pub mod laws {
    use efftree::effects::EffectKit;
    use efftree::gen::{self, GenRng};
    use efftree::trees::{eta, map_tree, mu, truncate, Env, TreeExpr, Value};
    use rand::Rng;

    const WINDOW: u64 = 4;

    fn same_prefixes(law: &str, env: &Env, a: &TreeExpr, b: &TreeExpr) -> Result<(), String> {
        for d in 0..=5 {
            let x = truncate(env, a, d, WINDOW).map_err(|e| e.to_string())?;
            let y = truncate(env, b, d, WINDOW).map_err(|e| e.to_string())?;
            if x != y {
                return Err(format!("{law} at depth {d}: {x} vs {y}"));
            }
        }
        Ok(())
    }

    pub fn nat_tree<K: EffectKit>(kit: &K, r: &mut GenRng) -> (Env, TreeExpr) {
        if r.gen_bool(0.5) {
            (
                Env::empty(),
                gen::finite_tree(kit, r, 4, &mut gen::nat_leaves(5)),
            )
        } else {
            gen::rational_tree(kit, r, 3, "t", &mut gen::nat_leaves(5))
        }
    }

    pub fn monad<K: EffectKit>(kit: &K, r: &mut GenRng) -> Result<(), String> {
        let (env, t) = nat_tree(kit, r);
        same_prefixes("left unit", &env, &mu(eta(Value::thunk(t.clone()))), &t)?;
        let lifted = map_tree(|v| Value::thunk(eta(v.clone())), t.clone());
        same_prefixes("right unit", &env, &mu(lifted), &t)?;

        let mut inner = |r: &mut GenRng| {
            let mut leaf =
                |r: &mut GenRng| Value::thunk(gen::finite_tree(kit, r, 2, &mut gen::nat_leaves(3)));
            Value::thunk(gen::finite_tree(kit, r, 2, &mut leaf))
        };
        let (env, ttt) = gen::rational_tree(kit, r, 2, "m", &mut inner);
        let flat_inner = map_tree(
            |v| match v {
                Value::Thunk(d) => Value::thunk(mu((**d).clone())),
                other => other.clone(),
            },
            ttt.clone(),
        );
        same_prefixes("associativity", &env, &mu(mu(ttt)), &mu(flat_inner))
    }

    pub fn functor<K: EffectKit>(kit: &K, r: &mut GenRng) -> Result<(), String> {
        let (env, t) = nat_tree(kit, r);
        same_prefixes("identity", &env, &map_tree(|v| v.clone(), t.clone()), &t)?;
        let f = |v: &Value| Value::Nat(v.as_nat().unwrap() * 3 + 1);
        let g = |v: &Value| Value::Nat(v.as_nat().unwrap() % 4);
        same_prefixes(
            "composition",
            &env,
            &map_tree(move |v| g(&f(v)), t.clone()),
            &map_tree(g, map_tree(f, t)),
        )
    }

    pub fn truncate_prefix<K: EffectKit>(kit: &K, r: &mut GenRng) -> Result<(), String> {
        let (env, t) = nat_tree(kit, r);
        for d in 0..6 {
            let a = truncate(&env, &t, d, WINDOW).map_err(|e| e.to_string())?;
            let b = truncate(&env, &t, d + 1, WINDOW).map_err(|e| e.to_string())?;
            if !a.is_prefix_of(&b) {
                return Err(format!("{a} is not a prefix of {b}"));
            }
        }
        Ok(())
    }
}
