mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use stickychase::chase::classic_chase;
use stickychase::classes::classify;
use stickychase::generate::{random_program, random_query, GenConfig};
use stickychase::graph::finite_existential_positions;
use stickychase::magic::{
    adorn, default_sips, load_rules, magicd_plus, Adornment, DefaultSips, MagicProgram, ShuffledSips,
    Sips,
};
use stickychase::parser::{parse_program, parse_query};
use stickychase::qa::AnswerSet;
use stickychase::{evaluate_cq, Atom, Position, Sym, Term};

fn vars(vs: &[&str]) -> BTreeSet<Sym> {
    vs.iter().map(|v| Sym::from(*v)).collect()
}

fn ad(s: &str) -> Adornment {
    Adornment(s.into())
}

fn rule_strings(m: &MagicProgram) -> BTreeSet<String> {
    m.program.rules.iter().map(|r| r.to_string()).collect()
}

#[test]
fn default_sips_binds_left_to_right() {
    let p = parse_program("P(X,Z), R(X,Y), R(Y,Z) -> T(X).").unwrap();
    let plan = default_sips(&p.rules[0], &ad("b"));
    assert_eq!(plan.order, [0, 1, 2]);
    assert_eq!(plan.before(0), &vars(&["X"]));
    assert_eq!(plan.after[0], vars(&["X", "Z"]));
    assert_eq!(plan.after[1], vars(&["X", "Y", "Z"]));
    assert_eq!(plan.after[2], vars(&["X", "Y", "Z"]));
}

#[test]
fn adornment_of_atoms() {
    let a = Atom::new("R", vec![Term::var("X"), Term::constant("c"), Term::var("Y")]);
    assert_eq!(Adornment::of_atom(&a, &vars(&["Y"])), ad("fbb"));
    assert_eq!(Adornment::of_atom(&a, &BTreeSet::new()), ad("fbf"));
    assert_eq!(ad("fbf").bound_count(), 1);
}

#[test]
fn adorned_rules_of_example() {
    let p = program("magic");
    let a = adorn(&p, &query("magic"), &DefaultSips);
    let trace: Vec<(String, String)> =
        a.trace.iter().map(|(p, a)| (p.to_string(), a.to_string())).collect();
    let want = [("P", "bf"), ("R", "bf"), ("R", "fb")].map(|(p, a)| (p.into(), a.into()));
    assert_eq!(trace, want);
    let rules: Vec<String> = a.rules.iter().map(|r| r.rule.to_string()).collect();
    assert_eq!(
        rules,
        [
            "R__bf(X,Y), R__bf(Y,Z) -> P__bf(X,Z).",
            "U(Y), R__fb(X,Y) -> exists Z R__bf(Y,Z).",
        ]
    );
    // R^fb would bind the existential Z, so it gets no adorned rule.
    assert!(a.rules.iter().all(|r| r.adornment != ad("fb")));
    assert_eq!(a.query.body[0].pred.as_ref(), "P__bf");
}

#[test]
fn rewriting_of_example() {
    let (m, rep) = magicd_plus(&program("magic"), &query("magic"), &DefaultSips).unwrap();
    assert_eq!((m.guarded_rules, m.magic_rules, m.load_rules), (2, 3, 3));
    assert!(rule_strings(&m).contains("mg__P__bf(X), R__bf(X,Y), R__bf(Y,Z) -> P__bf(X,Z)."));
    assert!(rule_strings(&m).contains("mg__P__bf(X), R__bf(X,Y) -> mg__R__bf(Y)."));
    assert_eq!(m.seeds, vec![Atom::new("mg__P__bf", vec![Term::constant("a1")])]);
    assert!(m.program.edb.contains(&m.seeds[0]));
    assert_eq!(rep.closure_holds, Some(true));
    let v = rep.to_json(&m);
    assert_eq!(v["rules"]["magic"], 3);
    assert_eq!(v["closure"], true);
}

#[test]
fn rewriting_is_deterministic() {
    let p = program("magic");
    let q = query("magic");
    let (a, _) = magicd_plus(&p, &q, &ShuffledSips { seed: 3 }).unwrap();
    let (b, _) = magicd_plus(&p, &q, &ShuffledSips { seed: 3 }).unwrap();
    assert_eq!(rule_strings(&a), rule_strings(&b));
    let (c, _) = magicd_plus(&p, &q, &DefaultSips).unwrap();
    let (d, _) = magicd_plus(&p, &q, &DefaultSips).unwrap();
    assert_eq!(c.program.rules, d.program.rules);
}

#[test]
fn query_without_constants_gets_nullary_seed() {
    let p = parse_program("R(a,b). R(X,Y), R(Y,Z) -> P(X,Z).").unwrap();
    let (m, _) = magicd_plus(&p, &parse_query("?Q(X,Y) :- P(X,Y).").unwrap(), &DefaultSips).unwrap();
    assert_eq!(m.seeds, vec![Atom::new("mg__P__ff", vec![])]);
    assert!(rule_strings(&m).contains("mg__P__ff(), R(X,Y), R(Y,Z) -> P__ff(X,Z)."));
}

#[test]
fn load_rules_need_intensional_data() {
    let trace = [(Sym::from("P"), ad("bf"))];
    let none = parse_program("R(a,b). R(X,Y) -> P(X,Y).").unwrap();
    assert!(load_rules(&none, &trace).is_empty());
    let some = parse_program("P(a,b). R(X,Y) -> P(X,Y).").unwrap();
    let rules = load_rules(&some, &trace);
    assert_eq!(rules.len(), 1);
    assert_eq!(rules[0].to_string(), "mg__P__bf(X1), P(X1,X2) -> P__bf(X1,X2).");
}

#[test]
fn extensional_query_is_left_alone() {
    let p = program("magic");
    let (m, _) = magicd_plus(&p, &parse_query("?Q(X) :- U(X).").unwrap(), &DefaultSips).unwrap();
    assert!(m.program.rules.is_empty());
    assert!(m.seeds.is_empty());
    assert_eq!(m.query.body[0].pred.as_ref(), "U");
}

#[test]
fn rewriting_of_non_ws_program() {
    let p = program("notclosed");
    let (m, rep) = magicd_plus(&p, &query("notclosed"), &DefaultSips).unwrap();
    assert!(rep.input.jws);
    assert!(!rep.output.ws);
    assert!(rep.output.jws);
    assert_eq!(rep.closure_holds, Some(true));
    assert_eq!(m.seeds, vec![Atom::new("mg__R__fb", vec![Term::constant("a")])]);
}

#[test]
fn closure_is_unknown_for_non_jws_input() {
    let p = program("not_ws");
    let q = parse_query(&format!("?Q(X) :- {}(X,Y).", p.rules[0].head.pred)).unwrap();
    let (_, rep) = magicd_plus(&p, &q, &DefaultSips).unwrap();
    assert!(!rep.input.jws);
    assert_eq!(rep.closure_holds, None);
}

fn config() -> impl Strategy<Value = GenConfig> {
    (2usize..5, 1usize..4, 1usize..5, 1usize..4, 0.0f64..0.4, 1usize..15).prop_map(|(p, a, r, b, e, f)| {
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

fn sips(seed: u64, shuffled: bool) -> Box<dyn Sips> {
    if shuffled {
        Box::new(ShuffledSips { seed })
    } else {
        Box::new(DefaultSips)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rewriting_preserves_certain_answers(seed in any::<u64>(), cfg in config(), shuffled in any::<bool>()) {
        // Guards add a body atom; wider bodies make diverging oblivious
        // chases enumerate cubic numbers of images per level.
        let p = random_program(seed, &GenConfig { max_body: cfg.max_body.min(2), ..cfg });
        prop_assume!(!p.schema.is_empty());
        let q = random_query(seed ^ 0x5eed, &p, 3);
        let before = classic_chase(&p, 1_000);
        prop_assume!(before.terminated);
        let (m, _) = magicd_plus(&p, &q, sips(seed, shuffled).as_ref()).unwrap();
        let after = classic_chase(&m.program, 2_000);
        prop_assume!(after.terminated);
        let want = AnswerSet::from_raw(evaluate_cq(&q, &before.instance)).tuples;
        let got = AnswerSet::from_raw(evaluate_cq(&m.query, &after.instance)).tuples;
        prop_assert_eq!(got, want);
    }

    #[test]
    fn bound_positions_have_finite_existential_rank(seed in any::<u64>(), cfg in config(), shuffled in any::<bool>()) {
        let p = random_program(seed, &cfg);
        prop_assume!(classify(&p.rules).jws);
        let q = random_query(seed ^ 0x5eed, &p, 3);
        let (m, _) = magicd_plus(&p, &q, sips(seed, shuffled).as_ref()).unwrap();
        let (pi_e, _) = finite_existential_positions(&m.program.rules);
        let rule_preds: BTreeSet<_> = stickychase::rule_positions(&m.program.rules);
        for ((_, a), name) in &m.adorned_names {
            for i in (0..a.0.len()).filter(|&i| a.is_bound(i)) {
                let at = Position { pred: name.as_str().into(), index: i + 1 };
                if rule_preds.contains(&at) {
                    prop_assert!(pi_e.contains(&at), "{}", at);
                }
            }
        }
    }

    /// Adorned and load rules stay JWS; a magic rule can lose the head
    /// occurrence of a repeated variable and fail the test.
    #[test]
    fn jws_witnesses_come_from_magic_rules(seed in any::<u64>(), cfg in config(), shuffled in any::<bool>()) {
        let p = random_program(seed, &cfg);
        prop_assume!(classify(&p.rules).jws);
        let q = random_query(seed ^ 0x5eed, &p, 3);
        let (m, rep) = magicd_plus(&p, &q, sips(seed, shuffled).as_ref()).unwrap();
        let magic: BTreeSet<String> = (m.guarded_rules + 1..=m.guarded_rules + m.magic_rules)
            .map(|i| format!("r{i}"))
            .collect();
        for w in &rep.output.jws_witnesses {
            prop_assert!(magic.contains(w.rule_id.as_str()), "{}", w.rule_id);
        }
    }
}
