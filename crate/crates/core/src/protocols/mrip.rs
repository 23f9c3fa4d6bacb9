//! Two-prover simulation of a cooperative multi-prover protocol: P2′ commits
//! to one probed message, P1′ supplies the whole transcript, and any
//! contradiction between them costs both.
//!
//! In the toy model a prover's round-j message depends only on its own
//! earlier messages. The probe and the transcript are simultaneous messages;
//! the tree puts the transcript first so that every one of P2′'s sets stays
//! reachable.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::{One, Signed, Zero};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::game::{child_history, GameBuilder, StrategyProfile};
use crate::protocols::ProtocolGame;
use crate::rational::{parse_rational, rat, Rational};

pub const MAX_PROVERS: usize = 2;
pub const MAX_ROUNDS: usize = 2;
pub const MAX_ALPHABET: usize = 4;

#[derive(Clone, Debug)]
pub struct MripSpec {
    pub provers: usize,
    pub rounds: usize,
    pub alphabet: Vec<String>,
    pub randomness: Vec<(String, Rational)>,
    /// Payment per random string and transcript key (see [`MripSpec::transcript_key`]).
    pub payments: BTreeMap<String, BTreeMap<String, Rational>>,
}

/// `m[i][j]`: prover `i`'s round-`j` message, as alphabet indices.
pub type Transcript = Vec<Vec<usize>>;

/// Prover `i`'s strategy: its message after each of its own message prefixes.
pub type ProverStrategy = BTreeMap<Vec<usize>, usize>;

impl MripSpec {
    pub fn new(
        provers: usize,
        rounds: usize,
        alphabet: Vec<String>,
        randomness: Vec<(String, Rational)>,
        payments: BTreeMap<String, BTreeMap<String, Rational>>,
    ) -> Result<MripSpec> {
        if provers == 0 || provers > MAX_PROVERS || rounds == 0 || rounds > MAX_ROUNDS || alphabet.is_empty() || alphabet.len() > MAX_ALPHABET {
            return Err(Error::Instance(format!(
                "MRIP spec too large: at most {MAX_PROVERS} provers, {MAX_ROUNDS} rounds and {MAX_ALPHABET} symbols"
            )));
        }
        if alphabet.iter().any(|a| a.is_empty() || a.contains(['/', ',', '.', '-', ':'])) {
            return Err(Error::Instance("alphabet symbols must be non-empty and avoid / , . - :".into()));
        }
        let total: Rational = randomness.iter().map(|(_, p)| p).sum();
        if !total.is_one() || randomness.iter().any(|(r, p)| !p.is_positive() || r.contains(['/', ','])) {
            return Err(Error::Instance(format!("randomness must be a distribution with plain labels, sums to {total}")));
        }
        let spec = MripSpec { provers, rounds, alphabet, randomness, payments };
        for (r, table) in &spec.payments {
            if !spec.randomness.iter().any(|(x, _)| x == r) {
                return Err(Error::Instance(format!("payments name unknown random string {r:?}")));
            }
            for (m, v) in table {
                if spec.parse_transcript(m).is_none() {
                    return Err(Error::Instance(format!("payments name malformed transcript {m:?}")));
                }
                if v.is_negative() || *v > Rational::one() {
                    return Err(Error::PaymentOutOfRange(v.to_string()));
                }
            }
        }
        Ok(spec)
    }

    /// `{"provers": 1, "rounds": 2, "alphabet": ["0","1"], "randomness": {"r0": "1/2", ...},
    ///   "payments": {"r0": {"1.0": "1", ...}}}`; missing payments are 0.
    pub fn from_json(v: &Value) -> Result<MripSpec> {
        let bad = |m: &str| Error::Instance(format!("MRIP spec: {m}"));
        let count = |k: &str| v[k].as_u64().map(|x| x as usize).ok_or_else(|| bad(&format!("`{k}` must be a positive integer")));
        let text = |x: &Value| -> Result<Rational> {
            match x {
                Value::String(s) => parse_rational(s),
                Value::Number(n) if n.is_i64() => Ok(rat(n.as_i64().unwrap(), 1)),
                _ => Err(bad("probabilities and payments must be rationals as strings")),
            }
        };
        let alphabet = v["alphabet"]
            .as_array()
            .ok_or_else(|| bad("`alphabet` must be an array"))?
            .iter()
            .map(|a| a.as_str().map(str::to_string).ok_or_else(|| bad("symbols must be strings")))
            .collect::<Result<_>>()?;
        let randomness = v["randomness"]
            .as_object()
            .ok_or_else(|| bad("`randomness` must be an object"))?
            .iter()
            .map(|(r, p)| Ok((r.clone(), text(p)?)))
            .collect::<Result<_>>()?;
        let mut payments = BTreeMap::new();
        for (r, table) in v["payments"].as_object().ok_or_else(|| bad("`payments` must be an object"))? {
            let table = table.as_object().ok_or_else(|| bad("payment tables must be objects"))?;
            payments.insert(r.clone(), table.iter().map(|(m, x)| Ok((m.clone(), text(x)?))).collect::<Result<_>>()?);
        }
        MripSpec::new(count("provers")?, count("rounds")?, alphabet, randomness, payments)
    }

    pub fn load(path: &Path) -> Result<MripSpec> {
        let text = std::fs::read_to_string(path)?;
        let v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.display().to_string(), line: e.line(), message: e.to_string() })?;
        MripSpec::from_json(&v)
    }

    /// Messages in round-major order, joined by `.`: `m11.m21.m12.m22`.
    pub fn transcript_key(&self, m: &Transcript) -> String {
        (0..self.rounds).flat_map(|j| (0..self.provers).map(move |i| (i, j))).map(|(i, j)| self.alphabet[m[i][j]].as_str()).collect::<Vec<_>>().join(".")
    }

    fn parse_transcript(&self, key: &str) -> Option<Transcript> {
        let parts: Vec<&str> = key.split('.').collect();
        if parts.len() != self.provers * self.rounds {
            return None;
        }
        let mut m = vec![vec![0; self.rounds]; self.provers];
        for (t, part) in parts.iter().enumerate() {
            m[t % self.provers][t / self.provers] = self.alphabet.iter().position(|a| a == part)?;
        }
        Some(m)
    }

    pub fn payment(&self, r: &str, m: &Transcript) -> Rational {
        self.payments.get(r).and_then(|t| t.get(&self.transcript_key(m))).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn expected_payment(&self, m: &Transcript) -> Rational {
        self.randomness.iter().map(|(r, p)| p * self.payment(r, m)).sum()
    }

    /// Every own-message prefix a prover can be asked about, shortest first.
    fn prefixes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        let mut level = vec![Vec::new()];
        for _ in 1..self.rounds {
            level = level.iter().flat_map(|p: &Vec<usize>| (0..self.alphabet.len()).map(move |a| [p.clone(), vec![a]].concat())).collect();
            out.extend(level.iter().cloned());
        }
        out
    }

    pub fn play(&self, strategies: &[ProverStrategy]) -> Transcript {
        strategies
            .iter()
            .map(|f| {
                let mut own = Vec::new();
                for _ in 0..self.rounds {
                    own.push(f[&own]);
                }
                own
            })
            .collect()
    }

    /// Payment-maximizing strategies, first in canonical order among ties.
    pub fn optimum(&self) -> (Rational, Vec<ProverStrategy>) {
        let prefixes = self.prefixes();
        let per = prefixes.len();
        let digits = per * self.provers;
        let base = self.alphabet.len();
        let total = base.pow(digits as u32);
        let mut best: Option<(Rational, Vec<ProverStrategy>)> = None;
        for mut code in 0..total {
            let mut d = vec![0; digits];
            for x in d.iter_mut().rev() {
                *x = code % base;
                code /= base;
            }
            let strategies: Vec<ProverStrategy> = (0..self.provers).map(|i| prefixes.iter().cloned().zip(d[i * per..(i + 1) * per].iter().copied()).collect()).collect();
            let v = self.expected_payment(&self.play(&strategies));
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, strategies));
            }
        }
        best.expect("non-empty strategy space")
    }

    pub fn answer_bit(&self, m: &Transcript) -> u8 {
        u8::from(self.alphabet[m[0][0]].starts_with('1'))
    }

    fn join(&self, symbols: &[usize]) -> String {
        symbols.iter().map(|&a| self.alphabet[a].as_str()).collect::<Vec<_>>().join(".")
    }

    /// All tuples of `len` symbols, lexicographic.
    fn tuples(&self, len: usize) -> Vec<Vec<usize>> {
        (0..len).fold(vec![Vec::new()], |acc, _| acc.into_iter().flat_map(|t| (0..self.alphabet.len()).map(move |a| [t.clone(), vec![a]].concat())).collect())
    }
}

/// A probe of prover `i`'s round-`j` message after own prefix `prefix`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Probe {
    pub prover: usize,
    pub round: usize,
    pub prefix: Vec<usize>,
    pub prob: Rational,
}

pub fn probes(spec: &MripSpec) -> Vec<Probe> {
    let mut out = Vec::new();
    for i in 0..spec.provers {
        for j in 0..spec.rounds {
            let strings = spec.tuples(j);
            let prob = rat(1, (spec.provers * spec.rounds * strings.len()) as i64);
            for prefix in strings {
                out.push(Probe { prover: i, round: j, prefix, prob: prob.clone() });
            }
        }
    }
    out
}

pub fn probe_label(spec: &MripSpec, p: &Probe) -> String {
    format!("p{}r{}-{}", p.prover + 1, p.round + 1, spec.join(&p.prefix))
}

pub fn mrip_scale() -> Rational {
    rat(1, 2)
}

/// Unscaled payments for one leaf: prefix mismatch, contradiction, or the
/// original payment to P2′.
fn leaf_payments(spec: &MripSpec, r: &str, m: &Transcript, probe: &Probe, answer: usize) -> (Rational, Rational) {
    if m[probe.prover][..probe.round] != probe.prefix[..] {
        (Rational::zero(), Rational::zero())
    } else if m[probe.prover][probe.round] != answer {
        (rat(-1, 1), rat(-1, 1))
    } else {
        (Rational::zero(), spec.payment(r, m))
    }
}

pub fn build_mrip_simulation(spec: &MripSpec) -> Result<ProtocolGame> {
    let scale = mrip_scale();
    let (_, optimum) = spec.optimum();
    let first_rounds = spec.tuples(spec.provers);
    let later = spec.tuples(spec.provers * (spec.rounds - 1));
    let probes = probes(spec);
    let symbols: Vec<String> = spec.alphabet.clone();
    let mut b = GameBuilder::new(2);
    let round1: Vec<String> = first_rounds.iter().map(|t| spec.join(t)).collect();
    b.prover(&[], 1, round1.clone(), None);
    let rest_labels: Vec<String> = later.iter().map(|t| if t.is_empty() { "end".to_string() } else { spec.join(t) }).collect();
    for (t1, l1) in first_rounds.iter().zip(&round1) {
        let h1 = vec![l1.clone()];
        b.nature(&h1, probes.iter().map(|p| probe_label(spec, p)).collect(), probes.iter().map(|p| p.prob.clone()).collect());
        for probe in &probes {
            let h2 = child_history(&h1, &probe_label(spec, probe));
            b.nature(&h2, spec.randomness.iter().map(|(r, _)| r.clone()).collect(), spec.randomness.iter().map(|(_, p)| p.clone()).collect());
            for (r, _) in &spec.randomness {
                let h3 = child_history(&h2, r);
                b.prover(&h3, 1, rest_labels.clone(), Some(format!("tx:{l1}:{r}")));
                for (rest, rl) in later.iter().zip(&rest_labels) {
                    let h4 = child_history(&h3, rl);
                    b.prover(&h4, 2, symbols.clone(), Some(format!("probe:{}", probe_label(spec, probe))));
                    // m[i][0] from round one, m[i][j] for j ≥ 1 from the transcript
                    let m: Transcript = (0..spec.provers)
                        .map(|i| std::iter::once(t1[i]).chain((1..spec.rounds).map(|j| rest[(j - 1) * spec.provers + i])).collect())
                        .collect();
                    let bit = spec.answer_bit(&m);
                    for (a, sym) in symbols.iter().enumerate() {
                        let (p1, p2) = leaf_payments(spec, r, &m, probe, a);
                        b.terminal(&child_history(&h4, sym), vec![p1 * &scale, p2 * &scale], bit);
                    }
                }
            }
        }
    }
    let game = b.build();

    let honest_m = spec.play(&optimum);
    let mut honest = StrategyProfile::first(&game);
    let l1 = spec.join(&(0..spec.provers).map(|i| honest_m[i][0]).collect::<Vec<_>>());
    honest.set_at(&game, &[], &l1)?;
    for (t1, l1) in first_rounds.iter().zip(&round1) {
        // Continue the committed strategies from this round-one tuple.
        let m: Transcript = (0..spec.provers)
            .map(|i| {
                let mut own = vec![t1[i]];
                while own.len() < spec.rounds {
                    own.push(optimum[i][&own]);
                }
                own
            })
            .collect();
        let rest: Vec<usize> = (1..spec.rounds).flat_map(|j| (0..spec.provers).map(move |i| (i, j))).map(|(i, j)| m[i][j]).collect();
        let rest_label = if rest.is_empty() { "end".to_string() } else { spec.join(&rest) };
        for (r, _) in &spec.randomness {
            let h = vec![l1.clone(), probe_label(spec, &probes[0]), r.clone()];
            honest.set_at(&game, &h, &rest_label)?;
        }
    }
    for probe in &probes {
        let h = vec![round1[0].clone(), probe_label(spec, probe), spec.randomness[0].0.clone(), rest_labels[0].clone()];
        let answer = optimum[probe.prover][&probe.prefix];
        honest.set_at(&game, &h, &spec.alphabet[answer])?;
    }
    Ok(ProtocolGame { game, honest, correct_bit: spec.answer_bit(&honest_m), scale })
}

/// Two provers, one round, binary alphabet; the optimum transcript is "1.0".
pub fn toy_mrip() -> MripSpec {
    let v = serde_json::json!({
        "provers": 2,
        "rounds": 1,
        "alphabet": ["0", "1"],
        "randomness": {"a": "1/3", "b": "2/3"},
        "payments": {
            "a": {"0.0": "1", "1.0": "1/2", "1.1": "1/4"},
            "b": {"0.0": "1/4", "1.0": "1", "0.1": "1/2"}
        }
    });
    MripSpec::from_json(&v).expect("well-formed toy MRIP")
}

/// One prover, two rounds, binary alphabet; the optimum transcript is "1.0".
pub fn toy_two_round_mrip() -> MripSpec {
    let v = serde_json::json!({
        "provers": 1,
        "rounds": 2,
        "alphabet": ["0", "1"],
        "randomness": {"r0": "1/2", "r1": "1/2"},
        "payments": {
            "r0": {"0.0": "1/4", "0.1": "0", "1.0": "1", "1.1": "1/2"},
            "r1": {"0.0": "1/4", "0.1": "1/4", "1.0": "3/4", "1.1": "0"}
        }
    });
    MripSpec::from_json(&v).expect("well-formed toy MRIP")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::is_sse;
    use crate::game::expected_utilities;

    #[test]
    fn toy_optimum() {
        let spec = toy_two_round_mrip();
        let (v, s) = spec.optimum();
        assert_eq!(v, rat(7, 8));
        assert_eq!(spec.transcript_key(&spec.play(&s)), "1.0");
    }

    #[test]
    fn probe_probabilities_shrink_with_the_round() {
        let spec = toy_two_round_mrip();
        let ps = probes(&spec);
        let labels: Vec<String> = ps.iter().map(|p| probe_label(&spec, p)).collect();
        assert_eq!(labels, vec!["p1r1-", "p1r2-0", "p1r2-1"]);
        assert_eq!(ps.iter().map(|p| p.prob.clone()).collect::<Vec<_>>(), vec![rat(1, 2), rat(1, 4), rat(1, 4)]);
    }

    #[test]
    fn honest_simulation_pays_the_optimum() {
        let built = build_mrip_simulation(&toy_two_round_mrip()).unwrap();
        let g = &built.game;
        assert!(g.is_valid() && g.has_perfect_recall());
        assert_eq!(g.profile_count(), 256u32.into());
        assert_eq!(built.correct_bit, 1);
        let u = expected_utilities(g, &built.honest).unwrap();
        // Probe p1r2-0 never matches the transcript prefix "1", so only 3/4 of
        // the probe mass carries the payment.
        assert_eq!(u, vec![rat(0, 1), rat(3, 4) * rat(7, 8) * mrip_scale()]);
        assert!(is_sse(g, &built.honest).unwrap().verdict);
    }

    #[test]
    fn one_round_simulation_pays_the_full_optimum() {
        let spec = toy_mrip();
        let (best, s) = spec.optimum();
        assert_eq!(best, rat(5, 6));
        assert_eq!(spec.transcript_key(&spec.play(&s)), "1.0");
        let built = build_mrip_simulation(&spec).unwrap();
        assert_eq!(built.correct_bit, 1);
        assert_eq!(expected_utilities(&built.game, &built.honest).unwrap()[1], best * mrip_scale());
        assert!(is_sse(&built.game, &built.honest).unwrap().verdict);
    }

    #[test]
    fn oversize_specs_are_rejected() {
        let v = serde_json::json!({"provers": 3, "rounds": 1, "alphabet": ["0"], "randomness": {"r": "1"}, "payments": {}});
        assert!(MripSpec::from_json(&v).is_err());
    }
}
