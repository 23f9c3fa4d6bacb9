use std::path::{Path, PathBuf};

use ncrip::cli::run;
use ncrip::equilibrium::{all_profiles, is_sse_bruteforce};
use ncrip::io::{load_game, strategy_to_json};
use ncrip::protocols::coloring::{build_three_coloring, Graph, DEFAULT_VERTEX_CAP};
use ncrip::subforms::find_dominant_sse;
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn ncrip(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv: Vec<&str> = std::iter::once("ncrip").chain(args.iter().copied()).collect();
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn shipped_games() -> Vec<PathBuf> {
    let mut games: Vec<PathBuf> = std::fs::read_dir(root().join("games"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_str().unwrap().ends_with(".strategy.json"))
        .collect();
    games.sort();
    games
}

#[test]
fn build_then_find_dominant_reports_bit_one_for_the_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let game = dir.path().join("k3.json");
    let (code, _, err) = ncrip(&["build", "three-coloring", p(&root().join("instances/k3.edges")), "--out", p(&game)]);
    assert_eq!(code, 0, "{err}");
    let (code, out, _) = ncrip(&["find-dominant", p(&game), "--format", "structured"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["report"]["answer_bit"], 1);
    assert_eq!(v["report"]["utilities"], serde_json::json!(["1/2", "1/4"]));

    // Loading the saved file gives the same answer as the in-memory game.
    let built = build_three_coloring(&Graph::complete(3), DEFAULT_VERTEX_CAP).unwrap();
    let s = find_dominant_sse(&built.game).unwrap().unwrap();
    assert_eq!(v["report"]["profile"], strategy_to_json(&built.game, &s));
    let (_, again, _) = ncrip(&["find-dominant", p(&game), "--format", "structured"]);
    assert_eq!(again, out);
}

#[test]
fn check_sse_flags_a_dominated_action() {
    let dir = tempfile::tempdir().unwrap();
    let game = root().join("games/nexp_lottery3.json");
    let bad = dir.path().join("bad.json");
    let honest: Value = serde_json::from_str(&std::fs::read_to_string(root().join("games/nexp_lottery3.strategy.json")).unwrap()).unwrap();
    let mut lie = honest.clone();
    lie["/"] = Value::from("1");
    std::fs::write(&bad, lie.to_string()).unwrap();
    let (code, out, _) = ncrip(&["check-sse", p(&game), p(&bad)]);
    assert_eq!(code, 1);
    assert!(out.contains("violation at / (reachable, belief (1)): 1 -> 0 gains 5/12"), "{out}");
    let (code, out, _) = ncrip(&["check-sse", p(&game), p(&root().join("games/nexp_lottery3.strategy.json"))]);
    assert_eq!(code, 0);
    assert!(out.starts_with("sse: true"));
}

#[test]
fn prune_writes_a_game_and_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let game = dir.path().join("lottery.json");
    let pruned = dir.path().join("pruned.json");
    let report = dir.path().join("report.json");
    assert_eq!(ncrip(&["build", "nexp", "--lottery", "20", "--out", p(&game)]).0, 0);
    let (code, _, err) = ncrip(&["prune", p(&game), "--alpha", "2", "--prover", "P1", "--pruned", p(&pruned), "--format", "structured", "--out", p(&report)]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["ok"], true);
    assert!(v["report"]["max_support"].as_u64().unwrap() <= 16);
    let (small, _) = load_game(&pruned).unwrap();
    assert!(small.is_valid());
}

#[test]
fn enumeration_matches_brute_force_on_shipped_games() {
    for game in shipped_games() {
        let (g, _) = load_game(&game).unwrap();
        let brute = all_profiles(&g, 1 << 20).unwrap().into_iter().filter(|s| is_sse_bruteforce(&g, s).unwrap().verdict).count();
        let (code, out, _) = ncrip(&["enumerate-sse", p(&game), "--format", "structured"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["report"]["count"].as_u64().unwrap() as usize, brute, "{}", game.display());
        let (_, parallel, _) = ncrip(&["enumerate-sse", p(&game), "--format", "structured", "--jobs", "3"]);
        assert_eq!(parallel, out);
    }
}

#[test]
fn shipped_games_round_trip_byte_for_byte() {
    for game in shipped_games() {
        let text = std::fs::read_to_string(&game).unwrap();
        let (g, mu) = load_game(&game).unwrap();
        assert_eq!(ncrip::io::to_text(&ncrip::io::game_to_json(&g, mu.as_ref())), text, "{}", game.display());
    }
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"provers\": 1,\n  \"nodes\": [\n").unwrap();
    let (code, _, err) = ncrip(&["validate", p(&broken)]);
    assert_eq!(code, 2);
    assert!(err.contains("broken.json:4:"), "{err}");
    assert_eq!(ncrip(&["validate", p(&broken), "--bogus"]).0, 2);
    assert_eq!(ncrip(&[]).0, 2);
    let (code, _, err) = ncrip(&["enumerate-sse", p(&root().join("games/mrip_toy.json")), "--max-nodes", "10"]);
    assert_eq!(code, 2);
    assert!(err.contains("above the limit of 10"));
}

#[test]
fn validate_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"provers": 1, "nodes": {"/": {"player": "nature", "actions": ["a", "b"], "probabilities": ["1/2", "1/3"]},
            "/a": {"payments": ["3/2"], "answer_bit": 0}, "/b": {"payments": ["0"], "answer_bit": 0}}, "info_sets": []}"#,
    )
    .unwrap();
    let (code, out, _) = ncrip(&["validate", p(&bad)]);
    assert_eq!(code, 1);
    assert!(out.contains("nature distribution sums to 5/6"), "{out}");
    assert!(out.contains("total payment 3/2 outside [-1,1]"), "{out}");
}

#[test]
fn check_gap_on_the_lottery_protocol() {
    let game = root().join("games/nexp_lottery3.json");
    let (code, out, _) = ncrip(&["check-gap", p(&game), "--alpha", "3", "--format", "structured"]);
    assert_eq!(code, 0, "{out}");
    let v: Value = serde_json::from_str(&out).unwrap();
    // 5/6 before the 1/2 payment scaling.
    assert_eq!(v["report"]["measured_gap"], "5/12");
}
