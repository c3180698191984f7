mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use stickychase::classes::{
    classify, is_syn_sch, mark_variables, mark_variables_in_order, select, syn_sch_witnesses,
    SelectionFunction,
};
use stickychase::generate::{random_program, rng, GenConfig};
use stickychase::parser::parse_program;
use stickychase::{Error, Position, PositionSet, Program, Sym};

fn set(ps: &[&str]) -> PositionSet {
    ps.iter().map(|p| p.parse().unwrap()).collect()
}

fn vars(vs: &[&str]) -> BTreeSet<Sym> {
    vs.iter().map(|v| Sym::from(*v)).collect()
}

#[test]
fn marking_of_sticky_program() {
    let m = mark_variables(&program("sticky").rules);
    assert_eq!(m.marked[0], vars(&["X", "Y"]));
    assert!(m.marked[1].is_empty());
}

#[test]
fn marking_propagates_through_heads() {
    let p = program("not_sticky");
    let m = mark_variables(&p.rules);
    assert_eq!(m.marked[1], vars(&["Y"]));
    assert_eq!(m.marked[2], vars(&["Y"]));
    // Both body occurrences of Y in the joining rule.
    let occ: BTreeSet<_> = m.occurrences(&p.rules).into_iter().filter(|o| o.0 == 1).collect();
    assert_eq!(occ, BTreeSet::from([(1, 0, 1), (1, 1, 0)]));
}

#[test]
fn copy_rule_marks_nothing() {
    let p = parse_program("R(X,Y) -> R(X,Y).").unwrap();
    assert!(mark_variables(&p.rules).marked[0].is_empty());
}

#[test]
fn selection_functions() {
    let any = program("not_sticky");
    assert!(select(&SelectionFunction::Bottom, &any).unwrap().is_empty());
    assert_eq!(select(&SelectionFunction::Rank, &program("ws")).unwrap(), set(&["U[1]"]));
    assert_eq!(
        select(&SelectionFunction::Exists, &program("jws")).unwrap(),
        set(&["U[1]", "R[1]", "R[2]"])
    );
    let oracle = SelectionFunction::Oracle(set(&["R[2]"]));
    assert_eq!(select(&oracle, &any).unwrap(), set(&["R[2]"]));
}

#[test]
fn oracle_selection_rejects_unknown_positions() {
    let oracle = SelectionFunction::Oracle(set(&["Q[1]"]));
    assert!(matches!(select(&oracle, &program("sticky")), Err(Error::UnknownPosition(p)) if p == "Q[1]"));
}

#[test]
fn syntactic_membership_examples() {
    assert!(is_syn_sch(&program("sticky"), &SelectionFunction::Bottom).unwrap().0);

    let (ok, w) = is_syn_sch(&program("not_ws"), &SelectionFunction::Rank).unwrap();
    assert!(!ok);
    assert_eq!(w.len(), 1);
    assert_eq!(w[0].rule_id, program("not_ws").rules[1].id);
    assert_eq!(w[0].var.as_ref(), "Y");
    let at: PositionSet = w[0].positions.iter().cloned().collect();
    assert_eq!(at, set(&["R[1]", "R[2]"]));

    assert!(is_syn_sch(&program("jws"), &SelectionFunction::Exists).unwrap().0);
}

#[test]
fn selected_join_position_exempts_the_variable() {
    let p = program("not_sticky");
    assert!(!syn_sch_witnesses(&p.rules, &PositionSet::new()).is_empty());
    assert!(syn_sch_witnesses(&p.rules, &set(&["R[1]"])).is_empty());
}

#[test]
fn repetition_within_one_atom_counts() {
    let p = parse_program("R(X,X) -> exists Z R(Z,Z). R(X,Y) -> U(Y).").unwrap();
    let (ok, w) = is_syn_sch(&p, &SelectionFunction::Bottom).unwrap();
    assert!(!ok);
    assert_eq!(w[0].var.as_ref(), "X");
}

#[test]
fn classify_examples() {
    let j = classify(&program("jws").rules);
    assert!(!j.wa && !j.sticky && !j.ws && j.jws);
    assert!(!j.ws_witnesses.is_empty() && j.jws_witnesses.is_empty());

    let e = classify(&[]);
    assert!(e.wa && e.ja && e.sticky && e.ws && e.jws);

    assert!(classify(&program("magic").rules).jws);
}

#[test]
fn classify_json_shape() {
    let v = classify(&program("jws").rules).to_json();
    assert_eq!(v["WA"], false);
    assert_eq!(v["Sticky"], false);
    assert_eq!(v["WS"], false);
    assert_eq!(v["JWS"], true);
    assert_eq!(v["witnesses"]["WS"][0]["var"], "Y");
}

#[test]
fn classification_of_large_programs_is_fast() {
    let cfg = GenConfig { predicates: 40, max_arity: 4, rules: 1500, max_body: 4, ..GenConfig::default() };
    let p = random_program(7, &cfg);
    let t = Instant::now();
    let r = classify(&p.rules);
    assert!(!r.sticky || r.ws);
    assert!(t.elapsed() < Duration::from_secs(10), "{:?}", t.elapsed());
}

fn config() -> impl Strategy<Value = GenConfig> {
    (1usize..5, 1usize..4, 1usize..7, 1usize..4, 0.0f64..0.6).prop_map(|(p, a, r, b, e)| GenConfig {
        predicates: p,
        max_arity: a,
        rules: r,
        max_body: b,
        exist_prob: e,
        ..GenConfig::default()
    })
}

fn subset_of(all: &PositionSet, mask: u64) -> PositionSet {
    all.iter().enumerate().filter(|(i, _)| mask >> (i % 64) & 1 == 1).map(|(_, p)| p.clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn marking_is_order_independent(seed in any::<u64>(), cfg in config()) {
        let rules = random_program(seed, &cfg).rules;
        let mut order: Vec<usize> = (0..rules.len()).collect();
        order.shuffle(&mut rng(seed));
        prop_assert_eq!(mark_variables_in_order(&rules, &order), mark_variables(&rules));
    }

    #[test]
    fn class_inclusions_hold(seed in any::<u64>(), cfg in config()) {
        let r = classify(&random_program(seed, &cfg).rules);
        prop_assert!(!r.sticky || r.ws);
        prop_assert!(!r.ws || r.jws);
        prop_assert!(!r.wa || r.ja);
        prop_assert_eq!(r.sticky, r.sticky_witnesses.is_empty());
        prop_assert_eq!(r.jws, r.jws_witnesses.is_empty());
    }

    #[test]
    fn syn_sch_is_monotone_in_the_selection(seed in any::<u64>(), cfg in config(), m1 in any::<u64>(), m2 in any::<u64>()) {
        let p: Program = random_program(seed, &cfg);
        let all = p.positions();
        let small = subset_of(&all, m1 & m2);
        let big = subset_of(&all, m1);
        prop_assert!(small.is_subset(&big));
        let (ok_small, _) = is_syn_sch(&p, &SelectionFunction::Oracle(small)).unwrap();
        let (ok_big, _) = is_syn_sch(&p, &SelectionFunction::Oracle(big)).unwrap();
        prop_assert!(!ok_small || ok_big);
    }

    #[test]
    fn selections_stay_within_program_positions(seed in any::<u64>(), cfg in config()) {
        let p = random_program(seed, &cfg);
        let all = p.positions();
        for sel in [SelectionFunction::Bottom, SelectionFunction::Rank, SelectionFunction::Exists] {
            prop_assert!(select(&sel, &p).unwrap().is_subset(&all));
        }
        let rank = select(&SelectionFunction::Rank, &p).unwrap();
        let exists = select(&SelectionFunction::Exists, &p).unwrap();
        prop_assert!(rank.is_subset(&exists));
    }

    #[test]
    fn witnesses_name_repeated_marked_variables(seed in any::<u64>(), cfg in config()) {
        let p = random_program(seed, &cfg);
        let m = mark_variables(&p.rules);
        for w in syn_sch_witnesses(&p.rules, &PositionSet::new()) {
            let ri = p.rules.iter().position(|r| r.id == w.rule_id).unwrap();
            prop_assert!(m.is_marked(ri, &w.var));
            prop_assert!(w.positions.len() >= 2);
            prop_assert!(w.positions.iter().all(|q: &Position| p.positions().contains(q)));
        }
    }
}
