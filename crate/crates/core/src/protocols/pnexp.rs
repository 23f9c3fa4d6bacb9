//! Three-prover protocol for a polynomial machine with α adaptive NEXP
//! queries: P1 sends the answer and all query answers; the verifier
//! re-runs the machine, then cross-checks one random query with P2 and P3
//! through the NEXP protocol.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::game::{child_history, GameBuilder, StrategyProfile};
use crate::protocols::mip::{toy_clause_variable_mip, toy_lottery_mip, Cnf, MipBlackbox};
use crate::protocols::nexp::{in_language, nexp_reward, Embedding};
use crate::protocols::ProtocolGame;
use crate::rational::{rat, Rational};

/// A machine making `alpha` adaptive queries. `queries` maps each answer
/// prefix (a bit string shorter than `alpha`) to the name of the instance
/// queried next; `accept` lists the full answer strings it accepts.
#[derive(Clone, Debug)]
pub struct OracleMachine {
    pub alpha: usize,
    pub queries: BTreeMap<String, String>,
    pub accept: BTreeSet<String>,
    pub instances: BTreeMap<String, MipBlackbox>,
}

pub const MAX_ALPHA: usize = 4;

fn bit_strings(len: usize) -> Vec<String> {
    (0..1usize << len).map(|i| (0..len).map(|k| if i >> (len - 1 - k) & 1 == 1 { '1' } else { '0' }).collect()).collect()
}

impl OracleMachine {
    pub fn new(
        alpha: usize,
        queries: BTreeMap<String, String>,
        accept: BTreeSet<String>,
        instances: BTreeMap<String, MipBlackbox>,
    ) -> Result<OracleMachine> {
        if alpha == 0 || alpha > MAX_ALPHA {
            return Err(Error::Instance(format!("alpha must be in 1..={MAX_ALPHA}")));
        }
        for len in 0..alpha {
            for prefix in bit_strings(len) {
                let name = queries.get(&prefix).ok_or_else(|| Error::Instance(format!("no query after answers {prefix:?}")))?;
                if !instances.contains_key(name) {
                    return Err(Error::Instance(format!("query {name:?} names no instance")));
                }
                if name.contains(['/', ',']) || name.is_empty() {
                    return Err(Error::Instance(format!("bad instance name {name:?}")));
                }
            }
        }
        if let Some(bad) = accept.iter().find(|a| a.len() != alpha || !a.bytes().all(|b| b == b'0' || b == b'1')) {
            return Err(Error::Instance(format!("accepting answer string {bad:?} is not {alpha} bits")));
        }
        Ok(OracleMachine { alpha, queries, accept, instances })
    }

    /// JSON form:
    /// `{"alpha": 2, "queries": {"": "a", "0": "b", "1": "a"}, "accept": ["01"],
    ///   "instances": {"a": {"lottery": 3}, "b": {"cnf": [[1]], "repetitions": 1}}}`.
    pub fn from_json(v: &Value) -> Result<OracleMachine> {
        let bad = |m: &str| Error::Instance(format!("machine: {m}"));
        let alpha = v["alpha"].as_u64().ok_or_else(|| bad("`alpha` must be a positive integer"))? as usize;
        let queries = v["queries"]
            .as_object()
            .ok_or_else(|| bad("`queries` must be an object"))?
            .iter()
            .map(|(k, x)| Ok((k.clone(), x.as_str().ok_or_else(|| bad("query names must be strings"))?.to_string())))
            .collect::<Result<_>>()?;
        let accept = v["accept"]
            .as_array()
            .ok_or_else(|| bad("`accept` must be an array"))?
            .iter()
            .map(|x| x.as_str().map(str::to_string).ok_or_else(|| bad("accepting strings must be strings")))
            .collect::<Result<_>>()?;
        let mut instances = BTreeMap::new();
        for (name, spec) in v["instances"].as_object().ok_or_else(|| bad("`instances` must be an object"))? {
            instances.insert(name.clone(), instance_from_json(spec).map_err(|e| bad(&format!("instance {name:?}: {e}")))?);
        }
        OracleMachine::new(alpha, queries, accept, instances)
    }

    pub fn load(path: &Path) -> Result<OracleMachine> {
        let text = std::fs::read_to_string(path)?;
        let v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.display().to_string(), line: e.line(), message: e.to_string() })?;
        OracleMachine::from_json(&v)
    }

    /// Instance queried after answering `prefix`.
    pub fn query(&self, prefix: &str) -> &str {
        &self.queries[prefix]
    }

    pub fn accepts(&self, answers: &str) -> bool {
        self.accept.contains(answers)
    }

    /// The true query answers and the machine's verdict.
    pub fn run(&self) -> Result<(String, u8)> {
        let mut answers = String::new();
        for _ in 0..self.alpha {
            let bit = in_language(&self.instances[self.query(&answers)])?;
            answers.push(if bit { '1' } else { '0' });
        }
        let verdict = u8::from(self.accepts(&answers));
        Ok((answers, verdict))
    }
}

fn instance_from_json(spec: &Value) -> Result<MipBlackbox> {
    if let Some(k) = spec.get("lottery") {
        let k = k.as_u64().ok_or_else(|| Error::Instance("`lottery` must be a positive integer".into()))?;
        return toy_lottery_mip(k as usize);
    }
    let clauses = spec["cnf"]
        .as_array()
        .ok_or_else(|| Error::Instance("expected `lottery` or `cnf`".into()))?
        .iter()
        .map(|c| {
            c.as_array()
                .and_then(|c| c.iter().map(Value::as_i64).collect::<Option<Vec<i64>>>())
                .ok_or_else(|| Error::Instance("clauses must be arrays of integers".into()))
        })
        .collect::<Result<_>>()?;
    let r = spec.get("repetitions").map_or(Some(1), Value::as_u64).ok_or_else(|| Error::Instance("`repetitions` must be an integer".into()))?;
    toy_clause_variable_mip(&Cnf::new(clauses)?, r as usize)
}

pub fn pnexp_scale() -> Rational {
    rat(1, 3)
}

/// P1's message label: the claimed answer followed by the claimed query answers.
pub fn message_label(answer: u8, query_answers: &str) -> String {
    format!("{answer}{query_answers}")
}

/// Unscaled payment to P1 when the checked query's claimed answer is
/// `claimed` and P2 announced `checked`.
pub fn query_reward(claimed: u8, checked: u8) -> Rational {
    rat(i64::from(claimed == checked), 1)
}

pub fn build_pnexp_protocol(machine: &OracleMachine) -> Result<ProtocolGame> {
    let scale = pnexp_scale();
    let alpha = machine.alpha;
    let messages: Vec<String> = bit_strings(alpha + 1);
    let mut b = GameBuilder::new(3);
    b.prover(&[], 1, messages.clone(), None);
    let index_labels: Vec<String> = (1..=alpha).map(|i| format!("i{i}")).collect();
    let mut embeddings = Vec::new();
    for msg in &messages {
        let c = msg.as_bytes()[0] - b'0';
        let answers = &msg[1..];
        let at = vec![msg.clone()];
        if c != u8::from(machine.accepts(answers)) {
            b.terminal(&at, vec![rat(-1, 1) * &scale, rat(0, 1), rat(0, 1)], c);
            continue;
        }
        b.nature(&at, index_labels.clone(), vec![rat(1, alpha as i64); alpha]);
        for (i, label) in index_labels.iter().enumerate() {
            let name = machine.query(&answers[..i]);
            let claimed = answers.as_bytes()[i] - b'0';
            let e = Embedding {
                at: child_history(&at, label),
                claimant: 2,
                second: 3,
                key: format!("{label}:{name}"),
                mip: &machine.instances[name],
            };
            let scale = scale.clone();
            e.add(&mut b, &move |checked, outcome| {
                let (r2, r3) = nexp_reward(outcome);
                (vec![query_reward(claimed, checked) * &scale, r2 * &scale, r3 * &scale], c)
            });
            embeddings.push((e, name.to_string()));
        }
    }
    let game = b.build();
    let (answers, verdict) = machine.run()?;
    let mut honest = StrategyProfile::first(&game);
    honest.set_at(&game, &[], &message_label(verdict, &answers))?;
    for (e, name) in &embeddings {
        e.set_honest(&game, &mut honest, u8::from(in_language(&machine.instances[name])?))?;
    }
    Ok(ProtocolGame { game, honest, correct_bit: verdict, scale })
}

/// The two-query example: the first query is false; the second is true after
/// answer 0 and false after answer 1; the machine accepts iff the answers are
/// "01".
pub fn toy_two_query_machine() -> OracleMachine {
    let v = serde_json::json!({
        "alpha": 2,
        "queries": {"": "lottery3", "0": "unit", "1": "lottery3"},
        "accept": ["01"],
        "instances": {"lottery3": {"lottery": 3}, "unit": {"cnf": [[1]], "repetitions": 1}}
    });
    OracleMachine::from_json(&v).expect("well-formed toy machine")
}
