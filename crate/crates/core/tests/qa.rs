mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use stickychase::chase::classic_chase;
use stickychase::classes::{is_syn_sch, select, SelectionFunction};
use stickychase::generate::{random_program, random_query, GenConfig};
use stickychase::parser::{parse_program, parse_query};
use stickychase::qa::{
    is_applicable, proof_height_bound, qchase, qchase_rounds, resume, schqa, schqa_with_state,
    selected_value_count, AnswerSet, QaOptions,
};
use stickychase::{evaluate_cq, Assignment, Error, PositionSet, Term};

fn theta(pairs: &[(&str, Term)]) -> Assignment {
    pairs.iter().map(|(v, t)| ((*v).into(), t.clone())).collect()
}

fn c(name: &str) -> Term {
    Term::constant(name)
}

#[test]
fn applicability_and_freezing() {
    let p = parse_program("P(a,b). P(X,Y) -> exists Z P(Y,Z).").unwrap();
    let mut state = qchase_rounds(&p, PositionSet::new(), 0);
    assert!(state.instance().is_isomorphic(&atoms("P(a,b). P(b,_:n1).")));
    let rule = &p.rules[0];

    // P(ζ,ζ') maps onto P(b,ζ).
    assert!(!is_applicable(rule, &theta(&[("X", c("b")), ("Y", Term::Null(1))]), &state));
    state.freeze();
    assert!(is_applicable(rule, &theta(&[("X", c("b")), ("Y", Term::Frozen(1))]), &state));
    // Body image not in the instance.
    assert!(!is_applicable(rule, &theta(&[("X", c("c")), ("Y", c("d"))]), &state));
    // Already applied.
    assert!(!is_applicable(rule, &theta(&[("X", c("a")), ("Y", c("b"))]), &state));
}

#[test]
fn query_chase_with_one_resumption() {
    let p = program("alg");
    let state = qchase(&p, &query("alg"), &SelectionFunction::Bottom).unwrap();
    let want = union(&p.edb, "P(b,_:f1). R(a,b). P(_:f1,_:n2). R(b,_:f1).");
    assert!(state.instance().is_isomorphic(&want), "{:?}", state.instance());
    assert_eq!(state.resumptions_done, 1);
}

#[test]
fn query_chase_with_rank_selection() {
    let p = program("algs");
    let state = qchase(&p, &query("algs"), &SelectionFunction::Rank).unwrap();
    let want = union(&p.edb, "P(c,_:n1). U(a). U(b).");
    assert!(state.instance().is_isomorphic(&want), "{:?}", state.instance());
}

#[test]
fn answers_match_certain_answers() {
    let p = program("alg");
    let q = query("alg");
    assert_eq!(schqa(&p, &q, &SelectionFunction::Bottom, true).unwrap().tuples, consts(&["a", "b"]));

    // U(c) would need V on a null, which no rule derives.
    let p = program("algs");
    let q = query("algs");
    let oracle = classic_chase(&p, 100);
    assert!(oracle.terminated);
    let certain = AnswerSet::from_raw(evaluate_cq(&q, &oracle.instance)).tuples;
    assert_eq!(certain, consts(&["a", "b"]));
    assert_eq!(schqa(&p, &q, &SelectionFunction::Exists, false).unwrap().tuples, certain);
    assert_eq!(schqa(&p, &q, &SelectionFunction::Rank, false).unwrap().tuples, certain);
}

#[test]
fn strict_mode_rejects_refuted_programs() {
    let err = schqa(&program("algs"), &query("algs"), &SelectionFunction::Rank, true).unwrap_err();
    assert!(matches!(err, Error::NotInClass(_)), "{err:?}");
}

#[test]
fn boolean_answers() {
    let p = program("magic");
    let a = schqa(&p, &query("magic"), &SelectionFunction::Exists, false).unwrap();
    assert_eq!(a.tuples, BTreeSet::from([vec![]]));
    assert_eq!(a.render_text(true), "true\n");
    assert_eq!(a.to_json(true)["holds"], true);
}

#[test]
fn resumption_override() {
    let p = program("alg");
    let q = query("alg");
    let opts = QaOptions { resumptions: Some(0), ..QaOptions::default() };
    let (a, state) = schqa_with_state(&p, &q, &SelectionFunction::Bottom, &opts).unwrap();
    assert_eq!(state.resumptions_done, 0);
    assert_eq!(a.tuples, consts(&["a"]));
}

#[test]
fn incremental_resumption() {
    let p = program("alg");
    let pi = select(&SelectionFunction::Bottom, &p).unwrap();
    let one = qchase_rounds(&p, pi.clone(), 1);
    let same = resume(one.clone(), 0);
    assert_eq!(same.instance().to_set(), one.instance().to_set());
    let fresh = qchase_rounds(&p, pi, 2);
    let more = resume(one, 1);
    assert!(fresh.instance().is_isomorphic(more.instance()));
    assert_eq!(more.resumptions_done, 2);
}

#[test]
fn proof_height_bounds() {
    let p = parse_program("U(a).").unwrap();
    assert_eq!(proof_height_bound(&p, &parse_query("?Q :- U(a).").unwrap(), 0), 1);

    let alg = program("alg");
    let q = query("alg");
    let state = qchase(&alg, &q, &SelectionFunction::Bottom).unwrap();
    let s = selected_value_count(&state);
    assert_eq!(s, 0);
    assert_eq!(proof_height_bound(&alg, &q, s), 18);

    let p = parse_program("S(X,Y,Z) -> U(X).").unwrap();
    assert_eq!(proof_height_bound(&p, &parse_query("?Q(X) :- U(X).").unwrap(), 3), 250);
}

#[test]
fn answer_rendering() {
    let a = AnswerSet::from_raw(BTreeSet::from([vec![c("b")], vec![c("a")], vec![Term::Null(1)]]));
    assert_eq!(a.tuples, consts(&["a", "b"]));
    assert_eq!(a.raw.len(), 3);
    assert_eq!(a.render_text(false), "a\nb\n");
    let v = a.to_json(false);
    assert_eq!(v["answers"], serde_json::json!([["a"], ["b"]]));
    assert!(v.get("holds").is_none());
}

fn config() -> impl Strategy<Value = GenConfig> {
    (1usize..5, 1usize..4, 1usize..5, 1usize..4, 0.0f64..0.4, 1usize..12).prop_map(|(p, a, r, b, e, f)| {
        GenConfig {
            predicates: p,
            max_arity: a,
            rules: r,
            max_body: b,
            exist_prob: e,
            facts: f,
            constants: 3,
            ..GenConfig::default()
        }
    })
}

fn selection() -> impl Strategy<Value = SelectionFunction> {
    prop_oneof![
        Just(SelectionFunction::Bottom),
        Just(SelectionFunction::Rank),
        Just(SelectionFunction::Exists),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn answers_are_sound_and_complete_on_members(seed in any::<u64>(), cfg in config(), sel in selection()) {
        let p = random_program(seed, &cfg);
        prop_assume!(!p.schema.is_empty());
        let q = random_query(seed ^ 0x9e37, &p, 3);
        let oracle = classic_chase(&p, 2_000);
        prop_assume!(oracle.terminated);
        let certain = AnswerSet::from_raw(evaluate_cq(&q, &oracle.instance)).tuples;
        let got = schqa(&p, &q, &sel, false).unwrap().tuples;
        prop_assert!(got.is_subset(&certain), "{:?} not within {:?}", got, certain);
        if is_syn_sch(&p, &sel).unwrap().0 {
            prop_assert_eq!(got, certain);
        }
    }

    #[test]
    fn null_free_atoms_come_from_the_classic_chase(seed in any::<u64>(), cfg in config(), sel in selection()) {
        let p = random_program(seed, &cfg);
        prop_assume!(!p.schema.is_empty());
        let oracle = classic_chase(&p, 2_000);
        prop_assume!(oracle.terminated);
        let pi = select(&sel, &p).unwrap();
        let state = qchase_rounds(&p, pi, 2);
        for a in state.instance().iter().filter(|a| !a.args.iter().any(Term::is_any_null)) {
            prop_assert!(oracle.instance.contains(a), "{}", a);
        }
    }

    #[test]
    fn resuming_equals_running_longer(seed in any::<u64>(), cfg in config(), sel in selection(), m in 0usize..3) {
        let p = random_program(seed, &cfg);
        prop_assume!(classic_chase(&p, 2_000).terminated);
        let pi = select(&sel, &p).unwrap();
        let fresh = qchase_rounds(&p, pi.clone(), m + 1);
        let more = resume(qchase_rounds(&p, pi, m), 1);
        // Null numbering is deterministic, so equal sets are the common case.
        let same = fresh.instance().to_set() == more.instance().to_set();
        prop_assert!(same || fresh.instance().is_isomorphic(more.instance()));
        prop_assert_eq!(fresh.resumptions_done, more.resumptions_done);
    }

    #[test]
    fn state_answers_shorter_queries(seed in any::<u64>(), cfg in config(), sel in selection()) {
        let p = random_program(seed, &cfg);
        prop_assume!(!p.schema.is_empty());
        prop_assume!(is_syn_sch(&p, &sel).unwrap().0);
        prop_assume!(classic_chase(&p, 2_000).terminated);
        let mut qs = [random_query(seed ^ 1, &p, 3), random_query(seed ^ 2, &p, 3)];
        qs.sort_by_key(|q| std::cmp::Reverse(q.m_q()));
        let [long, short] = qs;
        let (_, state) = schqa_with_state(&p, &long, &sel, &QaOptions::default()).unwrap();
        let reused = AnswerSet::from_raw(evaluate_cq(&short, state.instance())).tuples;
        prop_assert_eq!(reused, schqa(&p, &short, &sel, false).unwrap().tuples);
    }
}
