//! Utility gap: how much a deviating prover forfeits in some reachable
//! subform when the verifier ends up with the wrong answer.

use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::equilibrium::advance;
use crate::error::{Error, Result};
use crate::game::{expected_utilities, node_values, reach_probabilities, GameTree, StrategyProfile};
use crate::rational::{int, one, zero, Rational};
use crate::subforms::{dominant_among, find_subforms, Subform};

/// Probability of answer bit 0 and 1.
pub fn answer_bit_distribution(game: &GameTree, s: &StrategyProfile) -> Result<[Rational; 2]> {
    game.require_valid()?;
    let reach = reach_probabilities(game, s);
    let mut out = [zero(), zero()];
    for t in game.terminals() {
        let bit = game.node(t).answer_bit().unwrap() as usize;
        out[bit] += &reach[t];
    }
    Ok(out)
}

/// Is the answer `correct_bit` with probability one?
pub fn answers_correctly(game: &GameTree, s: &StrategyProfile, correct_bit: u8) -> Result<bool> {
    Ok(answer_bit_distribution(game, s)?[correct_bit as usize] == one())
}

/// `s_star` inside the subform, `s_prime` everywhere else.
pub fn splice(s_prime: &StrategyProfile, sf: &Subform, s_star: &StrategyProfile) -> StrategyProfile {
    let mut out = s_prime.clone();
    for &k in &sf.sets {
        out.choice[k] = s_star.choice[k];
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapWitness {
    pub subform: String,
    /// Position in the `find_subforms` order.
    pub subform_index: usize,
    /// 1-based prover index.
    pub prover: usize,
    /// u_j(splice) - u_j(s_prime).
    pub loss: Rational,
}

/// Per reachable subform and prover acting in it: the loss from `s_prime`
/// relative to splicing in `s_star`, and whether that prover deviated there.
///
/// Only the subform's members see the change, so the loss is the
/// reach-weighted difference of member values.
fn subform_losses(game: &GameTree, subforms: &[Subform], star_values: &[Vec<Rational>], s_star: &StrategyProfile, s_prime: &StrategyProfile) -> Vec<(usize, usize, bool, Rational)> {
    let values = node_values(game, s_prime);
    let reach = reach_probabilities(game, s_prime);
    let mut out = Vec::new();
    for (f, sf) in subforms.iter().enumerate() {
        if sf.members.iter().all(|&m| reach[m].is_zero()) {
            continue;
        }
        for &j in &sf.provers {
            let deviated = sf
                .sets
                .iter()
                .any(|&k| game.info_sets()[k].owner.prover_index() == Some(j) && s_star.choice[k] != s_prime.choice[k]);
            let mut loss = zero();
            for &m in &sf.members {
                if !reach[m].is_zero() {
                    loss += &reach[m] * (&star_values[m][j - 1] - &values[m][j - 1]);
                }
            }
            out.push((f, j, deviated, loss));
        }
    }
    out
}

/// First witness (subform order, then prover order) whose loss exceeds 1/alpha.
pub fn find_gap_witness(game: &GameTree, s_star: &StrategyProfile, s_prime: &StrategyProfile, alpha: &Rational) -> Result<Option<GapWitness>> {
    let subforms = find_subforms(game)?;
    let threshold = one() / alpha;
    let star_values = node_values(game, s_star);
    Ok(subform_losses(game, &subforms, &star_values, s_star, s_prime)
        .into_iter()
        .find(|(_, _, deviated, loss)| *deviated && *loss > threshold)
        .map(|(f, j, _, loss)| GapWitness { subform: subforms[f].id(game), subform_index: f, prover: j, loss }))
}

/// Largest loss over reachable subforms and deviating provers.
pub fn largest_gap_witness(game: &GameTree, s_star: &StrategyProfile, s_prime: &StrategyProfile) -> Result<Option<GapWitness>> {
    let subforms = find_subforms(game)?;
    let star_values = node_values(game, s_star);
    Ok(best_witness(game, &subforms, &star_values, s_star, s_prime))
}

fn best_witness(game: &GameTree, subforms: &[Subform], star_values: &[Vec<Rational>], s_star: &StrategyProfile, s_prime: &StrategyProfile) -> Option<GapWitness> {
    let mut best: Option<GapWitness> = None;
    for (f, j, deviated, loss) in subform_losses(game, subforms, star_values, s_star, s_prime) {
        if deviated && best.as_ref().is_none_or(|b| loss > b.loss) {
            best = Some(GapWitness { subform: subforms[f].id(game), subform_index: f, prover: j, loss });
        }
    }
    best
}

/// Smallest loss seen, its profile index and witness.
type Worst = Option<(Rational, u64, Option<GapWitness>)>;

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub alpha: Rational,
    pub holds: bool,
    pub profiles: u64,
    pub wrong_profiles: u64,
    /// Minimum over wrong-answer profiles of the largest witness loss; a
    /// profile with no deviating prover in any reachable subform counts as 0.
    pub measured_gap: Option<Rational>,
    /// First wrong-answer profile attaining the measured gap.
    pub worst_profile: Option<StrategyProfile>,
    pub worst_witness: Option<GapWitness>,
}

/// Scans every pure profile. The protocol has the gap iff every wrong-answer
/// profile has a witness with loss above 1/alpha.
pub fn verify_utility_gap(game: &GameTree, s_star: &StrategyProfile, alpha: &Rational, correct_bit: u8, cap: u64) -> Result<GapReport> {
    let count = game.profile_count();
    let total = count.to_u64().filter(|&c| c <= cap).ok_or_else(|| Error::CapExceeded { profiles: count.to_string(), cap })?;
    let subforms = find_subforms(game)?;
    let star_values = node_values(game, s_star);
    let radix: Vec<usize> = game.info_sets().iter().map(|s| s.actions.len()).collect();
    const CHUNK: u64 = 4096;
    let chunks = total.div_ceil(CHUNK);
    // (wrong count, best (loss, index, witness)) per chunk.
    let parts: Vec<(u64, Worst)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut digits = decode(start, &radix);
            let mut wrong = 0;
            let mut worst: Worst = None;
            for idx in start..end {
                let s = StrategyProfile { choice: digits.clone() };
                if !answers_correctly(game, &s, correct_bit).expect("valid game") {
                    wrong += 1;
                    let w = best_witness(game, &subforms, &star_values, s_star, &s);
                    let loss = w.as_ref().map_or(zero(), |w| w.loss.clone().max(zero()));
                    if worst.as_ref().is_none_or(|(l, _, _)| loss < *l) {
                        worst = Some((loss, idx, w));
                    }
                }
                advance(&mut digits, &radix);
            }
            (wrong, worst)
        })
        .collect();
    let mut wrong_profiles = 0;
    let mut worst: Worst = None;
    for (w, part) in parts {
        wrong_profiles += w;
        if let Some(p) = part {
            if worst.as_ref().is_none_or(|(l, _, _)| p.0 < *l) {
                worst = Some(p);
            }
        }
    }
    let threshold = one() / alpha;
    let holds = worst.as_ref().is_none_or(|(l, _, _)| *l > threshold);
    Ok(GapReport {
        alpha: alpha.clone(),
        holds,
        profiles: total,
        wrong_profiles,
        measured_gap: worst.as_ref().map(|(l, _, _)| l.clone()),
        worst_profile: worst.as_ref().map(|(_, i, _)| StrategyProfile { choice: decode(*i, &radix) }),
        worst_witness: worst.and_then(|(_, _, w)| w),
    })
}

fn decode(mut index: u64, radix: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radix.len()];
    for i in (0..radix.len()).rev() {
        digits[i] = (index % radix[i] as u64) as usize;
        index /= radix[i] as u64;
    }
    digits
}

/// True iff in every subform reachable under `s`, no prover acting there
/// would gain 1/alpha or more from switching the subform to `s_star`.
pub fn check_gap_closeness(game: &GameTree, s: &StrategyProfile, s_star: &StrategyProfile, alpha: &Rational) -> Result<bool> {
    let subforms = find_subforms(game)?;
    let star_values = node_values(game, s_star);
    let threshold = one() / alpha;
    Ok(subform_losses(game, &subforms, &star_values, s_star, s).iter().all(|(_, _, _, loss)| *loss < threshold))
}

/// Index of the subinterval [k/(4α), (k+1)/(4α)) holding `u`; 1 falls in the top one.
pub fn subinterval_index(u: &Rational, alpha: &Rational) -> i64 {
    let scaled = u * alpha * int(4);
    let top = (alpha * int(4)).ceil().to_integer().to_i64().expect("bounded");
    let k = scaled.floor().to_integer().to_i64().expect("bounded");
    if k >= top {
        top - 1
    } else {
        k
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubintervalReport {
    pub dominant: StrategyProfile,
    pub checked: usize,
    /// SSEs failing the closeness test.
    pub not_close: usize,
    /// Not-close SSEs whose subinterval profile equals the dominant one's.
    pub violations: Vec<StrategyProfile>,
}

/// For every SSE that fails the closeness test, its per-prover subinterval
/// profile must differ from the dominant SSE's.
pub fn subinterval_profile_check(game: &GameTree, alpha: &Rational, sse_set: &[StrategyProfile]) -> Result<SubintervalReport> {
    let dominant = dominant_among(game, sse_set)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Instance("no dominant SSE among the given profiles".into()))?;
    let profile = |s: &StrategyProfile| -> Result<Vec<i64>> {
        Ok(expected_utilities(game, s)?.iter().map(|u| subinterval_index(u, alpha)).collect())
    };
    let target = profile(&dominant)?;
    let mut not_close = 0;
    let mut violations = Vec::new();
    for s in sse_set {
        if check_gap_closeness(game, s, &dominant, alpha)? {
            continue;
        }
        not_close += 1;
        if profile(s)? == target {
            violations.push(s.clone());
        }
    }
    Ok(SubintervalReport { dominant, checked: sse_set.len(), not_close, violations })
}
