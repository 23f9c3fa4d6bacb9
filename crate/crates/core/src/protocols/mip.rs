//! Two-prover one-round MIP verifiers given as explicit tables.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::game::valid_label;
use crate::rational::{rat, Rational};

/// Limit on strategies enumerated by [`MipBlackbox::best_strategies`].
pub const MAX_MIP_STRATEGIES: u128 = 1 << 22;

/// One outcome of the verifier's randomness.
#[derive(Clone, Debug, PartialEq)]
pub struct MipQuery {
    pub q1: String,
    pub q2: String,
    pub prob: Rational,
}

#[derive(Clone, Debug)]
pub struct MipBlackbox {
    pub queries: Vec<MipQuery>,
    /// Answer alphabet per first-prover query.
    pub answers1: BTreeMap<String, Vec<String>>,
    pub answers2: BTreeMap<String, Vec<String>>,
    /// `accept[i][a][b]`: query `i` with answer indices `a`, `b`.
    accept: Vec<Vec<Vec<bool>>>,
}

/// A prover strategy: answer index per query.
pub type MipStrategy = BTreeMap<String, usize>;

impl MipBlackbox {
    pub fn new(
        queries: Vec<MipQuery>,
        answers1: BTreeMap<String, Vec<String>>,
        answers2: BTreeMap<String, Vec<String>>,
        accepts: impl Fn(usize, &str, &str) -> bool,
    ) -> Result<MipBlackbox> {
        let total: Rational = queries.iter().map(|q| &q.prob).sum();
        if !total.is_one() || queries.iter().any(|q| q.prob <= Rational::zero()) {
            return Err(Error::Instance(format!("query probabilities must be positive and sum to 1, got {total}")));
        }
        for alphabet in answers1.values().chain(answers2.values()) {
            if alphabet.is_empty() || alphabet.iter().any(|a| !valid_label(a)) {
                return Err(Error::Instance(format!("bad answer alphabet {alphabet:?}")));
            }
        }
        let mut accept = Vec::with_capacity(queries.len());
        for (i, q) in queries.iter().enumerate() {
            if !valid_label(&q.q1) || !valid_label(&q.q2) {
                return Err(Error::Instance(format!("bad query label in {q:?}")));
            }
            let (Some(x), Some(y)) = (answers1.get(&q.q1), answers2.get(&q.q2)) else {
                return Err(Error::Instance(format!("query {i} has no answer alphabet")));
            };
            accept.push(x.iter().map(|a| y.iter().map(|b| accepts(i, a, b)).collect()).collect());
        }
        Ok(MipBlackbox { queries, answers1, answers2, accept })
    }

    pub fn accepts(&self, query: usize, a1: usize, a2: usize) -> bool {
        self.accept[query][a1][a2]
    }

    pub fn acceptance(&self, s1: &MipStrategy, s2: &MipStrategy) -> Rational {
        self.queries
            .iter()
            .enumerate()
            .filter(|(i, q)| self.accept[*i][s1[&q.q1]][s2[&q.q2]])
            .map(|(_, q)| q.prob.clone())
            .sum()
    }

    /// Acceptance-maximizing strategy pair, ties broken toward the first in
    /// canonical order. Enumerates the side with fewer strategies and lets the
    /// other side best-respond query by query.
    pub fn best_strategies(&self) -> Result<(Rational, MipStrategy, MipStrategy)> {
        let count = |m: &BTreeMap<String, Vec<String>>| m.values().try_fold(1u128, |acc, a| acc.checked_mul(a.len() as u128));
        let (c1, c2) = (count(&self.answers1), count(&self.answers2));
        let fewer_first = c1 <= c2;
        let n = if fewer_first { c1 } else { c2 };
        let n = n.filter(|&n| n <= MAX_MIP_STRATEGIES).ok_or_else(|| Error::Instance("MIP strategy space too large to search".into()))?;
        let (fixed_side, free_side) = if fewer_first { (&self.answers1, &self.answers2) } else { (&self.answers2, &self.answers1) };
        let keys: Vec<&String> = fixed_side.keys().collect();
        let mut digits = vec![0usize; keys.len()];
        let mut best: Option<(Rational, MipStrategy, MipStrategy)> = None;
        for _ in 0..n {
            let fixed: MipStrategy = keys.iter().zip(&digits).map(|(k, &d)| ((*k).clone(), d)).collect();
            let mut free = MipStrategy::new();
            let mut value = Rational::zero();
            for (key, alphabet) in free_side {
                let mut top: Option<(Rational, usize)> = None;
                for b in 0..alphabet.len() {
                    let v: Rational = self
                        .queries
                        .iter()
                        .enumerate()
                        .filter(|(_, q)| if fewer_first { &q.q2 } else { &q.q1 } == key)
                        .filter(|(i, q)| {
                            if fewer_first {
                                self.accept[*i][fixed[&q.q1]][b]
                            } else {
                                self.accept[*i][b][fixed[&q.q2]]
                            }
                        })
                        .map(|(_, q)| q.prob.clone())
                        .sum();
                    if top.as_ref().is_none_or(|(t, _)| v > *t) {
                        top = Some((v, b));
                    }
                }
                let (v, b) = top.expect("alphabets are non-empty");
                value += v;
                free.insert(key.clone(), b);
            }
            if best.as_ref().is_none_or(|(b, _, _)| value > *b) {
                best = Some(if fewer_first { (value, fixed, free) } else { (value, free, fixed) });
            }
            for (d, k) in digits.iter_mut().zip(&keys).rev() {
                *d += 1;
                if *d < fixed_side[*k].len() {
                    break;
                }
                *d = 0;
            }
        }
        Ok(best.expect("at least one strategy"))
    }

    pub fn max_acceptance(&self) -> Result<Rational> {
        Ok(self.best_strategies()?.0)
    }
}

/// CNF over variables `1..=vars`; literals are signed variable indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    pub vars: usize,
    pub clauses: Vec<Vec<i64>>,
}

impl Cnf {
    pub fn new(clauses: Vec<Vec<i64>>) -> Result<Cnf> {
        if clauses.is_empty() || clauses.iter().any(|c| c.is_empty() || c.contains(&0)) {
            return Err(Error::Instance("CNF needs non-empty clauses of non-zero literals".into()));
        }
        let vars = clauses.iter().flatten().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0);
        Ok(Cnf { vars, clauses })
    }

    /// DIMACS text: `c` comment lines, a `p cnf V C` header, clauses ended by 0.
    pub fn parse_dimacs(text: &str, path: &str) -> Result<Cnf> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        let mut last_line = 0;
        for (i, line) in text.lines().enumerate() {
            let bad = |message: String| Error::Parse { path: path.to_string(), line: i + 1, message };
            let line = line.trim();
            last_line = i + 1;
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('p') {
                let parts: Vec<&str> = line.split_whitespace().collect();
                match parts.as_slice() {
                    ["p", "cnf", v, c] if header.is_none() => {
                        let v = v.parse().map_err(|_| bad(format!("bad variable count {v:?}")))?;
                        let c = c.parse().map_err(|_| bad(format!("bad clause count {c:?}")))?;
                        header = Some((v, c));
                    }
                    _ => return Err(bad(format!("malformed header {line:?}"))),
                }
                continue;
            }
            let (vars, _) = header.ok_or_else(|| bad("clause before the `p cnf` header".into()))?;
            for t in line.split_whitespace() {
                let lit: i64 = t.parse().map_err(|_| bad(format!("expected a literal, found {t:?}")))?;
                if lit == 0 {
                    if current.is_empty() {
                        return Err(bad("empty clause".into()));
                    }
                    clauses.push(std::mem::take(&mut current));
                } else if lit.unsigned_abs() as usize > vars {
                    return Err(bad(format!("literal {lit} exceeds the declared {vars} variables")));
                } else {
                    current.push(lit);
                }
            }
        }
        let bad = |message: String| Error::Parse { path: path.to_string(), line: last_line, message };
        let (vars, count) = header.ok_or_else(|| bad("missing `p cnf` header".into()))?;
        if !current.is_empty() {
            return Err(bad("last clause is not terminated by 0".into()));
        }
        if clauses.len() != count {
            return Err(bad(format!("header declares {count} clauses, found {}", clauses.len())));
        }
        let mut cnf = Cnf::new(clauses).map_err(|e| bad(e.to_string()))?;
        cnf.vars = vars;
        Ok(cnf)
    }

    pub fn load(path: &Path) -> Result<Cnf> {
        let text = std::fs::read_to_string(path)?;
        Cnf::parse_dimacs(&text, &path.display().to_string())
    }

    pub fn satisfied_by(&self, assignment: u64) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| literal_true(l, assignment >> (l.unsigned_abs() - 1) & 1 == 1)))
    }

    pub fn is_satisfiable(&self) -> bool {
        (0..1u64 << self.vars).any(|a| self.satisfied_by(a))
    }
}

fn literal_true(lit: i64, value: bool) -> bool {
    (lit > 0) == value
}

pub const MAX_TOY_VARS: usize = 4;
pub const MAX_TOY_CLAUSES: usize = 6;
pub const MAX_TOY_REPETITIONS: usize = 3;

/// All tuples over `0..n` of length `r`, in lexicographic order.
fn tuples(n: usize, r: usize) -> Vec<Vec<usize>> {
    (0..r).fold(vec![Vec::new()], |acc, _| {
        acc.into_iter().flat_map(|t| (0..n).map(move |i| [t.clone(), vec![i]].concat())).collect()
    })
}

fn bit_strings(len: usize) -> Vec<String> {
    (0..1usize << len).map(|i| (0..len).map(|k| if i >> (len - 1 - k) & 1 == 1 { '1' } else { '0' }).collect()).collect()
}

/// Clause-variable test, repeated `r` times in parallel: the verifier draws a
/// clause and one of its variables per repetition, asks the first prover for
/// an assignment to each clause and the second for each variable, and accepts
/// iff every clause is satisfied and every variable answer matches.
///
/// First-prover queries are clause indices `c0.c2`, answers the clause's
/// variable bits `10.0`; second-prover queries are variables `x1.x2`, answers
/// bits `1.0`.
pub fn toy_clause_variable_mip(cnf: &Cnf, r: usize) -> Result<MipBlackbox> {
    if cnf.vars > MAX_TOY_VARS || cnf.clauses.len() > MAX_TOY_CLAUSES || r == 0 || r > MAX_TOY_REPETITIONS {
        return Err(Error::Instance(format!(
            "toy MIP supports at most {MAX_TOY_VARS} variables, {MAX_TOY_CLAUSES} clauses and 1..={MAX_TOY_REPETITIONS} repetitions"
        )));
    }
    let m = cnf.clauses.len();
    // (clause, position of the probed variable)
    let probes: Vec<(usize, usize)> = (0..m).flat_map(|c| (0..cnf.clauses[c].len()).map(move |p| (c, p))).collect();
    let mut queries = Vec::new();
    let mut answers1 = BTreeMap::new();
    let mut answers2 = BTreeMap::new();
    let mut picks: Vec<Vec<(usize, usize)>> = Vec::new();
    for t in tuples(probes.len(), r) {
        let pick: Vec<(usize, usize)> = t.iter().map(|&i| probes[i]).collect();
        let prob = pick.iter().fold(Rational::one(), |acc, &(c, _)| acc * rat(1, (m * cnf.clauses[c].len()) as i64));
        let q1 = pick.iter().map(|&(c, _)| format!("c{c}")).collect::<Vec<_>>().join(".");
        let q2 = pick.iter().map(|&(c, p)| format!("x{}", cnf.clauses[c][p].unsigned_abs())).collect::<Vec<_>>().join(".");
        answers1.entry(q1.clone()).or_insert_with(|| {
            pick.iter().map(|&(c, _)| bit_strings(cnf.clauses[c].len())).fold(vec![String::new()], |acc, parts| {
                acc.iter().flat_map(|a| parts.iter().map(move |p| if a.is_empty() { p.clone() } else { format!("{a}.{p}") })).collect()
            })
        });
        answers2.entry(q2.clone()).or_insert_with(|| {
            tuples(2, r).into_iter().map(|t| t.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(".")).collect()
        });
        queries.push(MipQuery { q1, q2, prob });
        picks.push(pick);
    }
    MipBlackbox::new(queries, answers1, answers2, |i, a1, a2| {
        picks[i].iter().zip(a1.split('.')).zip(a2.split('.')).all(|((&(c, p), bits), bit)| {
            let clause = &cnf.clauses[c];
            let bits = bits.as_bytes();
            let satisfied = clause.iter().zip(bits).any(|(&l, &b)| literal_true(l, b == b'1'));
            satisfied && bits[p] == bit.as_bytes()[0]
        })
    })
}

/// A verifier that ignores the answers and accepts with probability exactly
/// `1/k`: it draws a ticket `t0..t{k-1}` the provers never see and accepts on
/// `t0`.
pub fn toy_lottery_mip(k: usize) -> Result<MipBlackbox> {
    if k == 0 {
        return Err(Error::Instance("lottery needs at least one ticket".into()));
    }
    let queries = (0..k).map(|_| MipQuery { q1: "draw".into(), q2: "draw".into(), prob: rat(1, k as i64) }).collect();
    let alphabet = || BTreeMap::from([("draw".to_string(), vec!["0".to_string(), "1".to_string()])]);
    MipBlackbox::new(queries, alphabet(), alphabet(), |i, _, _| i == 0)
}
