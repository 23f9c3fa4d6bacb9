//! Beliefs at information sets: Bayes' rule where a set is reached, and the
//! ε-perturbation limit everywhere else.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::game::{node_values, reach_probabilities, GameTree, History, NodeId, StrategyProfile};
use crate::rational::{int, one, rat, sum, zero, Rational};

/// One distribution per information set, indexed like `GameTree::info_sets`.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefSystem {
    pub beliefs: Vec<Vec<Rational>>,
}

impl BeliefSystem {
    pub fn at(&self, set: usize) -> &[Rational] {
        &self.beliefs[set]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemberTrace {
    pub history: History,
    pub c: Rational,
    pub e: usize,
    pub f: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetTrace {
    pub members: Vec<MemberTrace>,
    pub d: usize,
    pub b_d: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitBeliefTrace {
    pub sets: Vec<SetTrace>,
}

/// Reachable sets with their total reach probability, in canonical set order.
pub fn reachable_sets(game: &GameTree, s: &StrategyProfile) -> Result<Vec<(usize, Rational)>> {
    game.require_valid()?;
    let reach = reach_probabilities(game, s);
    Ok(set_masses(game, &reach)
        .into_iter()
        .enumerate()
        .filter(|(_, p)| !p.is_zero())
        .collect())
}

pub(crate) fn set_masses(game: &GameTree, reach: &[Rational]) -> Vec<Rational> {
    (0..game.info_sets().len())
        .map(|k| sum(game.set_nodes(k).iter().map(|&n| &reach[n])))
        .collect()
}

pub(crate) fn bayes_from_reach(game: &GameTree, set: usize, reach: &[Rational]) -> Option<Vec<Rational>> {
    let total = sum(game.set_nodes(set).iter().map(|&n| &reach[n]));
    if total.is_zero() {
        return None;
    }
    Some(game.set_nodes(set).iter().map(|&n| &reach[n] / &total).collect())
}

pub fn bayes_beliefs(game: &GameTree, s: &StrategyProfile, set: usize) -> Result<Vec<Rational>> {
    game.require_valid()?;
    let info = game.info_sets().get(set).ok_or_else(|| Error::UnknownInfoSet(format!("#{set}")))?;
    let reach = reach_probabilities(game, s);
    bayes_from_reach(game, set, &reach).ok_or_else(|| Error::BayesUndefined(info.id()))
}

/// Per-node (c, e, f) of the perturbed profile where every unplayed action at
/// a node with zero-probability alternatives gets ε/|A⁰| mass.
fn perturbation_weights(game: &GameTree, s: &StrategyProfile) -> Vec<(Rational, usize, usize)> {
    let n = game.nodes().len();
    let mut w = vec![(one(), 0usize, 0usize); n];
    for id in 0..n {
        let node = game.node(id);
        if node.is_terminal() {
            continue;
        }
        let (c, e, f) = w[id].clone();
        let actions = node.actions().len();
        match node.nature_dist() {
            Some(dist) => {
                let zeros = dist.iter().filter(|p| p.is_zero()).count();
                for (a, p) in dist.iter().enumerate() {
                    let child = node.child(a);
                    w[child] = if p.is_zero() {
                        (&c * rat(1, zeros as i64), e + 1, f)
                    } else {
                        (&c * p, e, f + usize::from(zeros > 0))
                    };
                }
            }
            None => {
                let chosen = s.choice[game.set_of(id).expect("prover node in a set")];
                for a in 0..actions {
                    let child = node.child(a);
                    w[child] = if a == chosen {
                        (c.clone(), e, f + usize::from(actions >= 2))
                    } else {
                        (&c / int(actions as i64 - 1), e + 1, f)
                    };
                }
            }
        }
    }
    w
}

pub fn limit_beliefs(game: &GameTree, s: &StrategyProfile) -> Result<(BeliefSystem, LimitBeliefTrace)> {
    game.require_valid()?;
    let w = perturbation_weights(game, s);
    let mut beliefs = Vec::with_capacity(game.info_sets().len());
    let mut sets = Vec::with_capacity(game.info_sets().len());
    for k in 0..game.info_sets().len() {
        let ids = game.set_nodes(k);
        let d = ids.iter().map(|&n| w[n].1).min().unwrap_or(0);
        let b_d = sum(ids.iter().filter(|&&n| w[n].1 == d).map(|&n| &w[n].0));
        let mu = ids
            .iter()
            .map(|&n| if w[n].1 == d { &w[n].0 / &b_d } else { zero() })
            .collect();
        let members = ids
            .iter()
            .map(|&n| MemberTrace { history: game.node(n).history.clone(), c: w[n].0.clone(), e: w[n].1, f: w[n].2 })
            .collect();
        beliefs.push(mu);
        sets.push(SetTrace { members, d, b_d });
    }
    Ok((BeliefSystem { beliefs }, LimitBeliefTrace { sets }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RationalityViolation {
    pub set: String,
    pub current: String,
    pub better: String,
    pub delta: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RationalityVerdict {
    pub holds: bool,
    pub violations: Vec<RationalityViolation>,
}

/// Owner's conditional value at `set` for each available action, holding the
/// rest of `s` fixed. `values` are the node values under `s`.
pub(crate) fn action_values(game: &GameTree, set: usize, belief: &[Rational], values: &[Vec<Rational>]) -> Vec<Rational> {
    let info = &game.info_sets()[set];
    let j = info.owner.prover_index().expect("prover set") - 1;
    let ids: &[NodeId] = game.set_nodes(set);
    (0..info.actions.len())
        .map(|a| {
            let mut acc = zero();
            for (&n, p) in ids.iter().zip(belief) {
                if !p.is_zero() {
                    acc += p * &values[game.node(n).child(a)][j];
                }
            }
            acc
        })
        .collect()
}

pub fn verify_sequential_rationality(game: &GameTree, s: &StrategyProfile, mu: &BeliefSystem) -> Result<RationalityVerdict> {
    game.require_perfect_recall()?;
    if mu.beliefs.len() != game.info_sets().len() {
        return Err(Error::BadBelief(format!("{} beliefs for {} information sets", mu.beliefs.len(), game.info_sets().len())));
    }
    let values = node_values(game, s);
    let mut violations = Vec::new();
    for (k, info) in game.info_sets().iter().enumerate() {
        crate::game::check_distribution(&mu.beliefs[k], info.members.len())?;
        let vals = action_values(game, k, &mu.beliefs[k], &values);
        let cur = s.choice[k];
        for (a, v) in vals.iter().enumerate() {
            let delta = v - &vals[cur];
            if delta > zero() {
                violations.push(RationalityViolation {
                    set: info.id(),
                    current: info.actions[cur].clone(),
                    better: info.actions[a].clone(),
                    delta,
                });
            }
        }
    }
    Ok(RationalityVerdict { holds: violations.is_empty(), violations })
}

/// True when every belief sums to one with nonnegative entries.
pub fn is_belief_system(game: &GameTree, mu: &BeliefSystem) -> bool {
    mu.beliefs.len() == game.info_sets().len()
        && mu
            .beliefs
            .iter()
            .zip(game.info_sets())
            .all(|(b, info)| b.len() == info.members.len() && b.iter().all(|p| *p >= zero()) && sum(b).is_one())
}
