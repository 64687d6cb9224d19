//! Labelled transitions, reduction, barbs and graphs.

mod common;

use std::collections::BTreeSet;

use mpst_core::bisim::{explore_typed, TypedState};
use mpst_core::lts::{
    barbs, complete_role_set, default_universe, dual_labels, explore, reduce, step, weak_closure, ActionLabel, Barb,
    ExploreConfig, LtsGraph, StepConfig,
};
use mpst_core::typing::{parse_session_env, SessionEnv};
use mpst_core::workspace::annotate_from_gamma;
use mpst_core::{congruent, parse_process, Process};

fn p(s: &str) -> Process {
    parse_process(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn lab(s: &str) -> ActionLabel {
    s.parse().unwrap_or_else(|e| panic!("{s}: {e:?}"))
}

fn labels(q: &Process) -> BTreeSet<String> {
    let u = default_universe(q, &[]);
    step(q, &u, StepConfig::default()).moves.into_iter().map(|(l, _)| l.to_string()).collect()
}

#[test]
fn inaction_has_no_moves() {
    assert!(labels(&Process::Inact).is_empty());
    let g = explore(&Process::Inact, &[], ExploreConfig::default());
    assert_eq!(g.states.len(), 1);
    assert!(g.transitions.is_empty());
    assert!(!g.truncated);
}

#[test]
fn accept_and_request_are_visible() {
    let ls = labels(&p("a[1](x).0"));
    assert_eq!(ls.len(), 1);
    let l: ActionLabel = ls.iter().next().unwrap().parse().unwrap();
    assert!(matches!(&l, ActionLabel::Acc { shared, roles, .. } if shared == "a" && roles == &BTreeSet::from([1])));
    let l = step(&p("a~[2](x).0"), &[], StepConfig::default()).moves[0].0.clone();
    assert!(matches!(&l, ActionLabel::Req { roles, .. } if roles == &BTreeSet::from([2])));
}

#[test]
fn session_initiation_needs_every_role() {
    let ws = common::load("intro.mpst");
    let all = Process::par_all(["P1", "P2", "P3"].map(|n| ws.proc(n).unwrap().clone()));
    let u = default_universe(&all, &[]);
    let taus = step(&all, &u, StepConfig::default()).moves.into_iter().filter(|(l, _)| l.is_tau()).count();
    assert!(taus >= 1);
    // without the requester there is nothing to synchronise with
    let two = Process::par_all(["P1", "P2"].map(|n| ws.proc(n).unwrap().clone()));
    assert!(reduce(&two, StepConfig::default()).is_empty());
}

#[test]
fn communication_and_conditionals_reduce() {
    let r = reduce(&p("s[1][2]!<true>.0 | s[2][1]?(x).0"), StepConfig::default());
    assert_eq!(r.len(), 1);
    assert!(congruent(&r[0], &Process::Inact));
    let r = reduce(&p("if true then s[1][2]!<true>.0 else 0"), StepConfig::default());
    assert_eq!(r.len(), 1);
    assert!(congruent(&r[0], &p("s[1][2]!<true>.0")));
    let r = reduce(&p("s[1][2](+)l.0 | s[2][1]&{l: 0, r: s[2][3]!<true>.0}"), StepConfig::default());
    assert_eq!(r.len(), 1);
    assert!(congruent(&r[0], &Process::Inact));
    assert!(reduce(&p("s[1][2]!<true>.0 | s[3][1]?(x).0"), StepConfig::default()).is_empty());
}

#[test]
fn restriction_hides_actions() {
    assert!(labels(&p("(new s) s[1][2]!<true>.0")).is_empty());
    assert!(!labels(&p("(new t) s[1][2]!<true>.0")).is_empty());
}

#[test]
fn duality_of_labels() {
    assert!(dual_labels(&lab("s!<1,2,v>"), &lab("s?<2,1,v>")));
    assert!(dual_labels(&lab("s?<2,1,v>"), &lab("s!<1,2,v>")));
    assert!(!dual_labels(&lab("s!<1,2,v>"), &lab("s?<2,1,w>")));
    assert!(!dual_labels(&lab("s!<1,2,v>"), &lab("s?<3,1,v>")));
    assert!(!dual_labels(&ActionLabel::Tau, &ActionLabel::Tau));
}

#[test]
fn label_text_round_trips() {
    for s in ["s!<1,2,v>", "s?<2,1,v>", "tau"] {
        assert_eq!(lab(s).to_string(), s);
    }
}

#[test]
fn complete_role_sets() {
    assert!(complete_role_set(&BTreeSet::from([1, 2, 3]), 3));
    assert!(!complete_role_set(&BTreeSet::from([1, 3]), 3));
    assert!(!complete_role_set(&BTreeSet::from([1, 2]), 3));
    assert!(!complete_role_set(&BTreeSet::new(), 1));
}

#[test]
fn barbs_respect_delta() {
    let q = p("s[1][2]!<true>.0 | a~[2](x).0");
    let b = barbs(&q, &SessionEnv::new());
    assert!(b.contains(&Barb::Session { session: "s".into(), from: 1, to: 2 }));
    assert!(b.contains(&Barb::Shared("a".into())));
    // the receiver is local, so the output is not observable
    let d = parse_session_env("{s[2]: 1?(bool).end}").unwrap();
    assert!(!barbs(&q, &d).contains(&Barb::Session { session: "s".into(), from: 1, to: 2 }));
}

#[test]
fn parallel_and_sequential_receivers_differ_initially() {
    let ws = common::load("intro.mpst");
    let g = ws.gamma("G").unwrap();
    let d0 = ws.delta("D0").unwrap();
    let has = |name: &str, label: &str| {
        let q = annotate_from_gamma(ws.proc(name).unwrap(), g);
        let (graph, _) = explore_typed(&TypedState::new(g.clone(), &q, d0), ExploreConfig::default());
        let found = graph.successors(0).any(|(_, l, _)| l.to_string() == label);
        found
    };
    assert!(has("Q1", "s_a!<2,3,v>"));
    assert!(!has("Q2", "s_a!<2,3,v>"));
    assert!(has("Q2", "s_a!<1,3,v>"));
}

fn line(n: usize) -> LtsGraph {
    // 0 -tau-> 1 -a-> 2 -tau-> 3 ...
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, if i % 2 == 0 { ActionLabel::Tau } else { lab("s!<1,2,v>") }, i + 1));
    }
    LtsGraph { states: vec![Process::Inact; n + 1], transitions: t, truncated: false }
}

#[test]
fn weak_closure_saturates() {
    let w = weak_closure(&line(3));
    let e = w.edge_set();
    for s in 0..4 {
        assert!(e.contains(&(s, ActionLabel::Tau, s)));
    }
    assert!(e.contains(&(0, lab("s!<1,2,v>"), 2)));
    assert!(e.contains(&(0, lab("s!<1,2,v>"), 3)));
    assert!(!e.contains(&(2, lab("s!<1,2,v>"), 3)));
    assert!(!e.contains(&(3, ActionLabel::Tau, 0)));
    assert_eq!(e, common::weak_edges_by_paths(&line(3)));
}

#[test]
fn graph_json_round_trips() {
    let ws = common::load("intro.mpst");
    let q = ws.proc("Sys2").unwrap();
    let g = explore(q, &default_universe(q, &[]), ExploreConfig::default());
    assert!(g.states.len() > 1);
    let text = serde_json::to_string(&g).unwrap();
    let back: LtsGraph = serde_json::from_str(&text).unwrap();
    assert_eq!(back.edge_set(), g.edge_set());
    assert_eq!(back.states.len(), g.states.len());
    for (a, b) in g.states.iter().zip(&back.states) {
        assert!(congruent(a, b));
    }
}

#[test]
fn exploration_stops_at_the_state_bound() {
    let q = p("rec X. a~[2](x).X");
    let g = explore(&q, &[], ExploreConfig { max_states: 3, ..ExploreConfig::default() });
    assert!(g.states.len() <= 3);
    let q = p("(rec X. s[1][2]!<true>.X) | rec Y. a[1](y).(y[1][2]!<true>.0 | Y)");
    let g = explore(&q, &default_universe(&q, &[]), ExploreConfig { max_states: 4, ..ExploreConfig::default() });
    assert!(g.states.len() <= 4);
}
