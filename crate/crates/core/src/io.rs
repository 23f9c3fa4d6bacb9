//! JSON game and strategy files. Keys are sorted and rationals are written in
//! lowest terms as strings, so save(load(x)) is byte-stable.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::beliefs::BeliefSystem;
use crate::error::{Error, Result};
use crate::game::{parse_path, path_of, GameTree, History, NodeInfo, PlayerId, StrategyProfile};
use crate::rational::{fmt_rational, parse_rational, Rational};

fn rationals(xs: &[Rational]) -> Value {
    Value::Array(xs.iter().map(|x| Value::String(fmt_rational(x))).collect())
}

pub fn game_to_json(game: &GameTree, beliefs: Option<&BeliefSystem>) -> Value {
    let mut nodes = Map::new();
    for node in game.nodes() {
        let record = match &node.info {
            NodeInfo::Terminal { payments, answer_bit } => json!({"payments": rationals(payments), "answer_bit": answer_bit}),
            NodeInfo::Decision { player, actions, nature_dist } => {
                let mut r = json!({"player": player.to_string(), "actions": actions});
                if let Some(p) = nature_dist {
                    r["probabilities"] = rationals(p);
                }
                r
            }
        };
        nodes.insert(path_of(&node.history), record);
    }
    let sets: Vec<Value> = game
        .info_sets()
        .iter()
        .map(|s| json!({"owner": s.owner.to_string(), "members": s.members.iter().map(|h| path_of(h)).collect::<Vec<_>>()}))
        .collect();
    let mut doc = json!({"provers": game.provers(), "nodes": nodes, "info_sets": sets});
    if let Some(mu) = beliefs {
        let b: Map<String, Value> = game.info_sets().iter().zip(&mu.beliefs).map(|(s, d)| (s.id(), rationals(d))).collect();
        doc["beliefs"] = Value::Object(b);
    }
    doc
}

/// Pretty JSON with a trailing newline.
pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Parse errors point at the first line mentioning `needle`, or line 1.
struct Source<'a> {
    path: &'a str,
    text: &'a str,
}

impl Source<'_> {
    fn err(&self, needle: &str, message: impl Into<String>) -> Error {
        let quoted = format!("\"{needle}\"");
        let line = self.text.lines().position(|l| l.contains(&quoted)).map_or(1, |i| i + 1);
        Error::Parse { path: self.path.to_string(), line, message: message.into() }
    }

    fn json(&self) -> Result<Value> {
        serde_json::from_str(self.text).map_err(|e| Error::Parse { path: self.path.to_string(), line: e.line(), message: e.to_string() })
    }
}

fn rational_list(src: &Source, v: &Value, at: &str) -> Result<Vec<Rational>> {
    v.as_array()
        .ok_or_else(|| src.err(at, format!("{at}: expected an array of rationals")))?
        .iter()
        .map(|x| match x {
            Value::String(s) => parse_rational(s).map_err(|e| src.err(at, format!("{at}: {e}"))),
            Value::Number(n) if n.is_i64() => Ok(crate::rational::int(n.as_i64().unwrap())),
            _ => Err(src.err(at, format!("{at}: rationals are written as \"num/den\" strings"))),
        })
        .collect()
}

fn history(src: &Source, p: &str) -> Result<History> {
    parse_path(p).map_err(|e| src.err(p, e.to_string()))
}

pub fn parse_game(text: &str, path: &str) -> Result<(GameTree, Option<BeliefSystem>)> {
    let src = Source { path, text };
    let doc = src.json()?;
    let provers = doc["provers"].as_u64().ok_or_else(|| src.err("provers", "`provers` must be a non-negative integer"))? as usize;
    let mut nodes = BTreeMap::new();
    for (p, rec) in doc["nodes"].as_object().ok_or_else(|| src.err("nodes", "`nodes` must be an object"))? {
        let h = history(&src, p)?;
        let info = if let Some(pay) = rec.get("payments") {
            let bit = rec["answer_bit"].as_u64().filter(|b| *b <= 1).ok_or_else(|| src.err(p, format!("{p}: `answer_bit` must be 0 or 1")))?;
            NodeInfo::Terminal { payments: rational_list(&src, pay, p)?, answer_bit: bit as u8 }
        } else {
            let player = rec["player"].as_str().ok_or_else(|| src.err(p, format!("{p}: missing `player` or `payments`")))?;
            let player = PlayerId::parse(player).map_err(|e| src.err(p, format!("{p}: {e}")))?;
            let actions = rec["actions"]
                .as_array()
                .and_then(|a| a.iter().map(|x| x.as_str().map(str::to_string)).collect::<Option<Vec<_>>>())
                .ok_or_else(|| src.err(p, format!("{p}: `actions` must be an array of strings")))?;
            let nature_dist = match rec.get("probabilities") {
                Some(v) => Some(rational_list(&src, v, p)?),
                None => None,
            };
            NodeInfo::Decision { player, actions, nature_dist }
        };
        nodes.insert(h, info);
    }
    let mut sets = Vec::new();
    for s in doc["info_sets"].as_array().ok_or_else(|| src.err("info_sets", "`info_sets` must be an array"))? {
        let owner = s["owner"].as_str().ok_or_else(|| src.err("owner", "information set without `owner`"))?;
        let owner = PlayerId::parse(owner).map_err(|e| src.err(owner, e.to_string()))?;
        let members = s["members"]
            .as_array()
            .ok_or_else(|| src.err("members", "`members` must be an array of history paths"))?
            .iter()
            .map(|m| m.as_str().ok_or_else(|| src.err("members", "member paths must be strings")).and_then(|m| history(&src, m)))
            .collect::<Result<Vec<_>>>()?;
        sets.push((owner, members));
    }
    let game = GameTree::new(provers, nodes, sets);
    let beliefs = match doc.get("beliefs") {
        None => None,
        Some(b) => {
            let b = b.as_object().ok_or_else(|| src.err("beliefs", "`beliefs` must be an object"))?;
            let mut out = Vec::with_capacity(game.info_sets().len());
            for set in game.info_sets() {
                let id = set.id();
                let d = b.get(&id).ok_or_else(|| src.err("beliefs", format!("no belief for information set {id}")))?;
                out.push(rational_list(&src, d, &id)?);
            }
            Some(BeliefSystem { beliefs: out })
        }
    };
    Ok((game, beliefs))
}

pub fn load_game(path: &Path) -> Result<(GameTree, Option<BeliefSystem>)> {
    let text = std::fs::read_to_string(path)?;
    parse_game(&text, &path.display().to_string())
}

pub fn save_game(path: &Path, game: &GameTree, beliefs: Option<&BeliefSystem>) -> Result<()> {
    std::fs::write(path, to_text(&game_to_json(game, beliefs)))?;
    Ok(())
}

pub fn strategy_to_json(game: &GameTree, s: &StrategyProfile) -> Value {
    Value::Object(s.to_labels(game).into_iter().map(|(k, v)| (k, Value::String(v))).collect())
}

pub fn parse_strategy(text: &str, path: &str, game: &GameTree) -> Result<StrategyProfile> {
    let src = Source { path, text };
    let labels: BTreeMap<String, String> = src
        .json()?
        .as_object()
        .ok_or_else(|| Error::Parse { path: path.to_string(), line: 1, message: "strategy file must map set ids to action labels".into() })?
        .iter()
        .map(|(k, v)| v.as_str().map(|v| (k.clone(), v.to_string())).ok_or_else(|| src.err(k, format!("{k}: action label must be a string"))))
        .collect::<Result<_>>()?;
    StrategyProfile::from_labels(game, &labels).map_err(|e| match &e {
        Error::UnknownAction { set, .. } | Error::UnknownInfoSet(set) => src.err(set, e.to_string()),
        _ => Error::Parse { path: path.to_string(), line: 1, message: e.to_string() },
    })
}

pub fn load_strategy(path: &Path, game: &GameTree) -> Result<StrategyProfile> {
    let text = std::fs::read_to_string(path)?;
    parse_strategy(&text, &path.display().to_string(), game)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefs::limit_beliefs;
    use crate::protocols::nexp::build_nexp_protocol;
    use crate::protocols::mip::toy_lottery_mip;

    #[test]
    fn game_round_trip_is_byte_stable() {
        let built = build_nexp_protocol(&toy_lottery_mip(2).unwrap()).unwrap();
        let (mu, _) = limit_beliefs(&built.game, &built.honest).unwrap();
        let text = to_text(&game_to_json(&built.game, Some(&mu)));
        let (g, b) = parse_game(&text, "g.json").unwrap();
        assert_eq!(g.info_sets(), built.game.info_sets());
        assert_eq!(b.unwrap(), mu);
        assert_eq!(to_text(&game_to_json(&g, Some(&mu))), text);
        assert!(text.contains("\"-1/2\""));
    }

    #[test]
    fn errors_name_the_line() {
        let text = "{\n  \"provers\": 1,\n  \"nodes\": {\n    \"/\": {\"player\": \"P7x\", \"actions\": []}\n  },\n  \"info_sets\": []\n}\n";
        let err = parse_game(text, "bad.json").unwrap_err();
        assert!(err.to_string().starts_with("bad.json:4: /:"), "{err}");
        let err = parse_game("{\n  \"provers\": 1,\n", "cut.json").unwrap_err();
        assert!(err.to_string().starts_with("cut.json:3:"), "{err}");
    }

    #[test]
    fn strategy_files() {
        let built = build_nexp_protocol(&toy_lottery_mip(2).unwrap()).unwrap();
        let text = to_text(&strategy_to_json(&built.game, &built.honest));
        assert_eq!(parse_strategy(&text, "s.json", &built.game).unwrap(), built.honest);
        let err = parse_strategy("{\"/\": \"7\"}", "s.json", &built.game).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }
}
