use ncrip::equilibrium::{enumerate_sse_restricted, SearchLimits};
use ncrip::game::{expected_utilities, GameTree, StrategyProfile};
use ncrip::protocols::coloring::{build_three_coloring, Graph, DEFAULT_VERTEX_CAP};
use ncrip::protocols::mip::{toy_clause_variable_mip, toy_lottery_mip, Cnf};
use ncrip::protocols::mrip::{build_mrip_simulation, toy_mrip};
use ncrip::protocols::nexp::build_nexp_protocol;
use ncrip::protocols::pnexp::{build_pnexp_protocol, toy_two_query_machine};
use ncrip::protocols::ProtocolGame;
use ncrip::rational::{rat, Rational};
use ncrip::subforms::{distinct_actions, find_dominant_sse, is_dominant_sse};
use ncrip::utility_gap::answer_bit_distribution;

fn budget_ok(game: &GameTree) {
    let unit = |x: &Rational| *x >= rat(-1, 1) && *x <= rat(1, 1);
    for t in game.terminals() {
        let pay = game.node(t).payments().unwrap();
        assert!(pay.iter().all(unit), "{pay:?}");
        assert!(unit(&pay.iter().sum()));
    }
}

fn check_builder(built: &ProtocolGame) -> StrategyProfile {
    let g = &built.game;
    assert!(g.is_valid() && g.has_perfect_recall());
    budget_ok(g);
    let dominant = find_dominant_sse(g).unwrap().expect("a dominant SSE exists");
    let sses = enumerate_sse_restricted(g, SearchLimits::default(), &distinct_actions(g)).unwrap();
    assert!(is_dominant_sse(g, &built.honest, &sses).unwrap().dominant, "honest profile is dominant");
    for s in [&dominant, &built.honest] {
        let dist = answer_bit_distribution(g, s).unwrap();
        assert_eq!(dist[built.correct_bit as usize], rat(1, 1));
    }
    dominant
}

fn unscaled(built: &ProtocolGame, s: &StrategyProfile) -> Vec<Rational> {
    expected_utilities(&built.game, s).unwrap().iter().map(|u| built.unscaled(u)).collect()
}

#[test]
fn coloring_triangle_and_k4() {
    let k3 = build_three_coloring(&Graph::complete(3), DEFAULT_VERTEX_CAP).unwrap();
    let s = check_builder(&k3);
    assert_eq!(unscaled(&k3, &s), vec![rat(2, 1), rat(1, 1)]);
    let k4 = build_three_coloring(&Graph::complete(4), DEFAULT_VERTEX_CAP).unwrap();
    let s = check_builder(&k4);
    assert_eq!(k4.correct_bit, 0);
    assert_eq!(unscaled(&k4, &s), vec![rat(1, 1), rat(1, 1)]);
}

#[test]
fn monochromatic_coloring_is_refuted() {
    let k3 = build_three_coloring(&Graph::complete(3), DEFAULT_VERTEX_CAP).unwrap();
    let g = &k3.game;
    let s = find_dominant_sse(g).unwrap().unwrap();
    let mut mono = s.clone();
    mono.set_at(g, &["yes".to_string()], "000").unwrap();
    assert_eq!(s.to_labels(g)["/yes/000"], "edge-0-1");
    assert_eq!(unscaled(&k3, &mono), vec![rat(0, 1), rat(2, 1)]);
}

#[test]
fn nexp_builders() {
    let unsat = build_nexp_protocol(&toy_lottery_mip(3).unwrap()).unwrap();
    let s = check_builder(&unsat);
    assert_eq!(unscaled(&unsat, &s), vec![rat(1, 2), rat(1, 2)]);

    let mip = toy_clause_variable_mip(&Cnf::new(vec![vec![1, 2], vec![-1]]).unwrap(), 1).unwrap();
    let sat = build_nexp_protocol(&mip).unwrap();
    let s = check_builder(&sat);
    assert_eq!(unscaled(&sat, &s), vec![rat(1, 1), rat(1, 1)]);
}

#[test]
fn pnexp_builder() {
    let built = build_pnexp_protocol(&toy_two_query_machine()).unwrap();
    let s = check_builder(&built);
    assert_eq!(unscaled(&built, &s)[0], rat(1, 1));
}

#[test]
fn mrip_builder() {
    let built = build_mrip_simulation(&toy_mrip()).unwrap();
    check_builder(&built);
}

#[test]
fn two_round_simulation_has_no_dominant_sse() {
    // Probes whose prefix misses the chosen round-one message pay nothing, so
    // equilibria with different round-one messages are incomparable there.
    let built = build_mrip_simulation(&ncrip::protocols::mrip::toy_two_round_mrip()).unwrap();
    assert_eq!(find_dominant_sse(&built.game).unwrap(), None);
}
