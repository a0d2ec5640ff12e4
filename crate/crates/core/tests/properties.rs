mod common;

use common::{instances, laws, oracle};
use efftree::effects::*;
use efftree::gen::{self, GenRng};
use efftree::liftings::{Budget, Mode};
use efftree::logic::*;
use efftree::relator::{gamma_check, greatest_simulation};
use efftree::testlogic::{dual_test, eval_test, Test};
use efftree::trees::{mu, Env, Value};
use efftree::verdict::Verdict::{self, *};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tree_monad_laws(seed in any::<u64>()) {
        laws::monad(&nondet_kit(), &mut gen::rng(seed)).map_err(TestCaseError::fail)?;
        laws::monad(&store_kit(), &mut gen::rng(seed)).map_err(TestCaseError::fail)?;
        laws::monad(&pure_timed_kit(), &mut gen::rng(seed)).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn tree_functor_laws(seed in any::<u64>()) {
        laws::functor(&input_kit(), &mut gen::rng(seed)).map_err(TestCaseError::fail)?;
        laws::functor(&store_kit(), &mut gen::rng(seed)).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn truncation_is_prefix_stable(seed in any::<u64>()) {
        laws::truncate_prefix(&nondet_kit(), &mut gen::rng(seed)).map_err(TestCaseError::fail)?;
        laws::truncate_prefix(&store_kit(), &mut gen::rng(seed)).map_err(TestCaseError::fail)?;
    }
}

const ATOMS: usize = 6;

fn random_eval(r: &mut GenRng) -> Vec<Verdict> {
    (0..ATOMS).map(|_| gen::random_verdict(r)).collect()
}

fn random_atom_test(r: &mut GenRng) -> Test<usize> {
    gen::random_test(r, 4, &mut |r: &mut GenRng| r.gen_range(0..ATOMS))
}

fn eval(e: &[Verdict], t: &Test<usize>, bound: u64) -> Verdict {
    eval_test(|a: &usize| e[*a], t, bound)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dual_is_an_involution(seed in any::<u64>()) {
        let t = random_atom_test(&mut gen::rng(seed));
        prop_assert_eq!(dual_test(&dual_test(&t)), t);
    }

    #[test]
    fn dual_under_disjoint_evaluators(seed in any::<u64>(), bound in 1u64..6) {
        let mut r = gen::rng(seed);
        let t = random_atom_test(&mut r);
        let e1 = random_eval(&mut r);
        let e2: Vec<Verdict> = e1
            .iter()
            .map(|v| if v.is_proved() { [Refuted, Unknown][r.gen_range(0..2)] } else { gen::random_verdict(&mut r) })
            .collect();
        let both = eval(&e1, &t, bound).is_proved() && eval(&e2, &dual_test(&t), bound).is_proved();
        prop_assert!(!both, "{:?} under {:?} / {:?}", t, e1, e2);
    }

    #[test]
    fn refining_atoms_keeps_definite_verdicts(seed in any::<u64>(), bound in 1u64..6) {
        let mut r = gen::rng(seed);
        let t = random_atom_test(&mut r);
        let e1 = random_eval(&mut r);
        let e2: Vec<Verdict> = e1
            .iter()
            .map(|v| if v.is_definite() { *v } else { gen::random_verdict(&mut r) })
            .collect();
        let (v1, v2) = (eval(&e1, &t, bound), eval(&e2, &t, bound));
        prop_assert!(!v1.is_definite() || v1 == v2, "{:?}: {} then {}", t, v1, v2);
    }

    #[test]
    fn raising_the_index_bound_keeps_definite_verdicts(seed in any::<u64>(), bound in 1u64..5, extra in 1u64..4) {
        let mut r = gen::rng(seed);
        let t = random_atom_test(&mut r);
        let e = random_eval(&mut r);
        let (v1, v2) = (eval(&e, &t, bound), eval(&e, &t, bound + extra));
        prop_assert!(!v1.is_definite() || v1 == v2, "{:?}: {} then {}", t, v1, v2);
    }
}

/// A verdict-valued predicate on naturals below 5 and one disjoint from it.
fn disjoint_preds(r: &mut GenRng) -> (Vec<Verdict>, Vec<Verdict>) {
    let p: Vec<Verdict> = (0..5).map(|_| gen::random_verdict(r)).collect();
    let q = p
        .iter()
        .map(|v| {
            if v.is_proved() {
                [Refuted, Unknown][r.gen_range(0..2)]
            } else {
                gen::random_verdict(r)
            }
        })
        .collect();
    (p, q)
}

fn table(t: &[Verdict]) -> impl Fn(&Value) -> efftree::error::Result<Verdict> + '_ {
    move |v| Ok(t[v.as_nat().unwrap() as usize])
}

fn lift_disjoint<K: EffectKit>(kit: &K, seed: u64) -> Result<(), TestCaseError> {
    let mut r = gen::rng(seed);
    let pair = kit.pair();
    let (env, t) = gen::rational_tree(kit, &mut r, 3, "t", &mut gen::nat_leaves(5));
    let o = kit.random_obs(&mut r);
    let (p, q) = disjoint_preds(&mut r);
    let b = Budget::new(r.gen_range(0..24), r.gen_range(1..8));
    let a = pair.alpha(&o, &table(&p), &env, &t, &b).unwrap();
    let c = pair.beta(&o, &table(&q), &env, &t, &b).unwrap();
    prop_assert!(!(a.is_proved() && c.is_proved()), "{} at {}", t, o);
    Ok(())
}

fn lift_monotone<K: EffectKit>(kit: &K, seed: u64) -> Result<(), TestCaseError> {
    let mut r = gen::rng(seed);
    let pair = kit.pair();
    let (env, t) = gen::rational_tree(kit, &mut r, 3, "t", &mut gen::nat_leaves(5));
    let o = kit.random_obs(&mut r);
    let (p, _) = disjoint_preds(&mut r);
    let ib = r.gen_range(1..6);
    for mode in [Mode::Alpha, Mode::Beta] {
        let at = |fuel, ib| {
            pair.check(mode, &o, &table(&p), &env, &t, &Budget::new(fuel, ib))
                .unwrap()
        };
        let fuel = r.gen_range(0..16);
        let (v0, v1, v2) = (at(fuel, ib), at(fuel + 16, ib), at(fuel, ib + 8));
        prop_assert!(
            !v0.contradicts(v1) && !v0.contradicts(v2),
            "{} {} at {}: {} {} {}",
            mode,
            t,
            o,
            v0,
            v1,
            v2
        );
        // fuel alone explores every path, so stay shallow
        let at = |fuel| {
            let b = Budget::new(fuel, ib).without_cycle_rule();
            pair.check(mode, &o, &table(&p), &env, &t, &b).unwrap()
        };
        let fuel = r.gen_range(0..5);
        let (v0, v1) = (at(fuel), at(fuel + 5));
        prop_assert!(
            !v0.contradicts(v1),
            "{} {} at {} without cycles: {} {}",
            mode,
            t,
            o,
            v0,
            v1
        );
    }
    Ok(())
}

fn lift_exact<K: EffectKit>(kit: &K, seed: u64) -> Result<(), TestCaseError> {
    let mut r = gen::rng(seed);
    let pair = kit.pair();
    let depth = r.gen_range(0..=4);
    let t = gen::finite_tree(kit, &mut r, depth, &mut gen::nat_leaves(5));
    let o = kit.random_obs(&mut r);
    let accept: Vec<bool> = (0..5).map(|_| r.gen_bool(0.5)).collect();
    let p = |v: &Value| accept[v.as_nat().unwrap() as usize];
    let vp = |v: &Value| Ok(Verdict::from_bool(p(v)));
    let b = Budget::new(depth as u32 + 1, 32).without_cycle_rule();
    let env = Env::empty();
    let a = pair.alpha(&o, &vp, &env, &t, &b).unwrap();
    prop_assert_eq!(
        a,
        Verdict::from_bool(oracle::alpha(kit, &o, &p, &t)),
        "alpha {} at {}",
        t,
        o
    );
    let c = pair.beta(&o, &vp, &env, &t, &b).unwrap();
    prop_assert_eq!(
        c,
        Verdict::from_bool(oracle::beta(kit, &o, &p, &t)),
        "beta {} at {}",
        t,
        o
    );
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn liftings_are_disjoint(seed in any::<u64>()) {
        lift_disjoint(&pure_unobservable_kit(), seed)?;
        lift_disjoint(&pure_timed_kit(), seed)?;
        lift_disjoint(&nondet_kit(), seed)?;
        lift_disjoint(&store_kit(), seed)?;
        lift_disjoint(&input_kit(), seed)?;
    }

    #[test]
    fn more_budget_never_flips(seed in any::<u64>()) {
        lift_monotone(&pure_timed_kit(), seed)?;
        lift_monotone(&nondet_kit(), seed)?;
        lift_monotone(&store_kit(), seed)?;
        lift_monotone(&input_kit(), seed)?;
    }

    #[test]
    fn finite_trees_match_direct_recursion(seed in any::<u64>()) {
        lift_exact(&pure_unobservable_kit(), seed)?;
        lift_exact(&pure_timed_kit(), seed)?;
        lift_exact(&nondet_kit(), seed)?;
        lift_exact(&store_kit(), seed)?;
        lift_exact(&input_kit(), seed)?;
    }

    #[test]
    fn liftings_regression_facts(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let b = Budget::default();
        let (p, _) = disjoint_preds(&mut r);

        let kit = pure_timed_kit();
        let (env, t) = gen::rational_tree(&kit, &mut r, 3, "t", &mut gen::nat_leaves(5));
        let o = kit.random_obs(&mut r);
        let pair = kit.pair();
        if pair.alpha(&o, &table(&p), &env, &t, &b).unwrap().is_proved() {
            prop_assert!(pair.beta(&o, &table(&p), &env, &t, &b).unwrap().is_proved());
        }

        let kit = nondet_kit();
        let pair = kit.pair();
        let (env, t) = gen::rational_tree(&kit, &mut r, 3, "t", &mut gen::nat_leaves(5));
        for (a, c) in [(NondetObs::May, NondetObs::Must), (NondetObs::Must, NondetObs::May)] {
            if pair.alpha(&a, &table(&p), &env, &t, &b).unwrap().is_proved() {
                prop_assert!(pair.beta(&c, &table(&p), &env, &t, &b).unwrap().is_proved(), "{} {}", a, t);
            }
        }

        let kit = input_kit();
        let pair = kit.pair();
        let (env, t) = gen::rational_tree(&kit, &mut r, 3, "t", &mut gen::nat_leaves(5));
        let o = loop {
            let o = kit.random_obs(&mut r);
            if o.mode == Bit::Right {
                break o;
            }
        };
        for mode in [Mode::Alpha, Mode::Beta] {
            let yes = pair.check(mode, &o, &table(&[Proved; 5]), &env, &t, &b).unwrap();
            let no = pair.check(mode, &o, &table(&[Refuted; 5]), &env, &t, &b).unwrap();
            prop_assert_eq!(yes, no, "{} {} at {}", mode, t, o);
        }
    }
}

fn formula_disjoint<K: EffectKit>(kit: &K, seed: u64) -> Result<(), TestCaseError> {
    let mut r = gen::rng(seed);
    let term = instances::random_cpt(kit, &mut r);
    let phi = gen::random_formula(kit, &mut r, Sort::Cpt, &term.ty, 4, true);
    let b = Budget::new(32, 8);
    let yes = satisfies(kit, &term, &phi, &b).unwrap();
    let no = satisfies(kit, &term, &neg_formula(&phi), &b).unwrap();
    prop_assert!(!(yes.is_proved() && no.is_proved()), "{}", phi);
    prop_assert!(
        !yes.is_definite() || !no.is_definite() || yes != no,
        "{}",
        phi
    );
    Ok(())
}

fn tower<K: EffectKit>(kit: &K, seed: u64) -> Result<(), TestCaseError> {
    let mut r = gen::rng(seed);
    let mut inner = |r: &mut GenRng| {
        let d = r.gen_range(0..=2);
        Value::thunk(gen::finite_tree(kit, r, d, &mut gen::nat_leaves(4)))
    };
    let m = gen::finite_tree(kit, &mut r, 3, &mut inner);
    let env = Env::empty();
    let o = kit.random_obs(&mut r);
    let phi = gen::random_formula(kit, &mut r, Sort::Val, &Ty::N, 2, true);
    let scope = kit.decomp_scope(&env, &m, &o).unwrap();
    let b = Budget::default();
    let flat = Term::cpt(Ty::N, mu(m.clone()), env.clone());
    let double = Term::cpt(Ty::u(Ty::N), m.clone(), env.clone());
    for (mode, d) in [
        (Mode::Alpha, kit.decomp(&o, &scope)),
        (Mode::Beta, kit.decomp_beta(&o, &scope)),
    ] {
        let lhs = satisfies(kit, &flat, &Formula::obs(mode, o.clone(), phi.clone()), &b).unwrap();
        let rhs = satisfies(kit, &double, &tower_formula(&d, &phi, mode), &b).unwrap();
        prop_assert!(
            !lhs.contradicts(rhs),
            "{} {} at {}: {} vs {}",
            mode,
            m,
            o,
            lhs,
            rhs
        );
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn negation_is_an_involution(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let kit = store_kit();
        let ty = instances::random_ty(&mut r);
        let sort = if r.gen_bool(0.5) { Sort::Val } else { Sort::Cpt };
        let phi = gen::random_formula(&kit, &mut r, sort, &ty, 4, true);
        prop_assert!(formula_eq(&neg_formula(&neg_formula(&phi)), &phi), "{}", phi);
    }

    #[test]
    fn no_term_satisfies_a_formula_and_its_negation(seed in any::<u64>()) {
        formula_disjoint(&pure_timed_kit(), seed)?;
        formula_disjoint(&nondet_kit(), seed)?;
        formula_disjoint(&store_kit(), seed)?;
        formula_disjoint(&input_kit(), seed)?;
    }

    #[test]
    fn sequenced_lifting_equals_its_tower(seed in any::<u64>()) {
        tower(&pure_unobservable_kit(), seed)?;
        tower(&pure_timed_kit(), seed)?;
        tower(&nondet_kit(), seed)?;
        tower(&store_kit(), seed)?;
        tower(&input_kit(), seed)?;
    }
}

fn gamma_monotone<K: EffectKit>(kit: &K, seed: u64) -> Result<(), TestCaseError> {
    let mut r = gen::rng(seed);
    let pair = kit.pair();
    let (carrier, rel, d0, d1) = instances::sequencing_instance(kit, &mut r);
    let n = carrier.len();
    let wider = efftree::relator::relation_union(&rel, &instances::random_relation(&mut r, n, 0.3));
    let env = d0.env.merge(&d1.env).unwrap();
    let obs = kit.obs_sample();
    let b = Budget::new(32, 8);
    for (a, c) in [(&d0, &d1), (&d0, &d0), (&d1, &d0)] {
        let (a, c) = (a.flatten(), c.flatten());
        let narrow = gamma_check(&pair, &carrier, &rel, &env, &a, &c, &obs, &b).unwrap();
        let wide = gamma_check(&pair, &carrier, &wider, &env, &a, &c, &obs, &b).unwrap();
        prop_assert!(!narrow.passes() || wide.passes(), "{} {}", rel, wider);
    }
    Ok(())
}

fn similar_terms_approximate<K: EffectKit>(kit: &K, seed: u64) -> Result<(), TestCaseError> {
    let mut r = gen::rng(seed);
    let pair = kit.pair();
    let p = instances::simulation_universe(kit, &mut r);
    let g = greatest_simulation(&pair, &p).unwrap();
    let b = Budget::new(32, 8);
    for (layer, rel) in p.layers.iter().zip(&g) {
        for (i, j) in rel.pairs().filter(|(i, j)| i != j) {
            let term = |k: usize| Term {
                ty: layer.ty.clone(),
                body: layer.terms[k].clone(),
                env: p.env.clone(),
            };
            for _ in 0..3 {
                let phi = gen::random_formula(kit, &mut r, layer.sort, &layer.ty, 3, false);
                let left = satisfies(kit, &term(i), &phi, &b).unwrap();
                let right = satisfies(kit, &term(j), &phi, &b).unwrap();
                prop_assert!(
                    !(left.is_proved() && right.is_refuted()),
                    "({} {}) {}",
                    i,
                    j,
                    phi
                );
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gamma_is_monotone_in_the_relation(seed in any::<u64>()) {
        gamma_monotone(&nondet_kit(), seed)?;
        gamma_monotone(&pure_timed_kit(), seed)?;
        gamma_monotone(&input_kit(), seed)?;
    }

    #[test]
    fn similarity_implies_logical_approximation(seed in any::<u64>()) {
        similar_terms_approximate(&nondet_kit(), seed)?;
        similar_terms_approximate(&pure_timed_kit(), seed)?;
        similar_terms_approximate(&store_kit(), seed)?;
    }
}
