//! Strong sequential equilibrium: the one-shot deviation check, an exhaustive
//! deviation oracle, and enumeration of all pure SSEs of small games.

use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::Zero;
use rayon::prelude::*;

use crate::beliefs::{action_values, bayes_from_reach};
use crate::error::{Error, Result};
use crate::game::{expected_utilities, node_values, path_of, reach_probabilities, subtree_value, GameTree, NodeId, StrategyProfile};
use crate::rational::{one, sum, zero, Rational};

pub const DEFAULT_MAX_PROFILES: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SseViolation {
    pub set: String,
    pub reachable: bool,
    /// Member history for an unreachable set.
    pub history: Option<String>,
    /// Bayes belief for a reachable set.
    pub belief: Option<Vec<Rational>>,
    pub current: String,
    pub better: String,
    pub delta: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SseCertificate {
    pub verdict: bool,
    pub violations: Vec<SseViolation>,
    /// Elementary steps spent (node evaluations plus member-action comparisons).
    pub operations: u64,
}

/// Best strictly improving action, ties to the lowest index.
fn best_improvement(vals: &[Rational], cur: usize) -> Option<(usize, Rational)> {
    let mut best: Option<(usize, Rational)> = None;
    for (a, v) in vals.iter().enumerate() {
        let delta = v - &vals[cur];
        if delta > zero() && best.as_ref().is_none_or(|(_, d)| delta > *d) {
            best = Some((a, delta));
        }
    }
    best
}

/// One-shot deviation check in a single bottom-up pass.
pub fn is_sse(game: &GameTree, s: &StrategyProfile) -> Result<SseCertificate> {
    game.require_perfect_recall()?;
    let values = node_values(game, s);
    let reach = reach_probabilities(game, s);
    let mut ops = 2 * game.nodes().len() as u64;
    let mut violations = Vec::new();
    for (k, info) in game.info_sets().iter().enumerate() {
        let j = info.owner.prover_index().expect("prover set") - 1;
        let cur = s.choice[k];
        let ids = game.set_nodes(k);
        ops += (ids.len() * info.actions.len()) as u64;
        match bayes_from_reach(game, k, &reach) {
            Some(belief) => {
                let vals = action_values(game, k, &belief, &values);
                if let Some((a, delta)) = best_improvement(&vals, cur) {
                    violations.push(SseViolation {
                        set: info.id(),
                        reachable: true,
                        history: None,
                        belief: Some(belief),
                        current: info.actions[cur].clone(),
                        better: info.actions[a].clone(),
                        delta,
                    });
                }
            }
            None => {
                for &n in ids {
                    let node = game.node(n);
                    let vals: Vec<Rational> = (0..info.actions.len()).map(|a| values[node.child(a)][j].clone()).collect();
                    if let Some((a, delta)) = best_improvement(&vals, cur) {
                        violations.push(SseViolation {
                            set: info.id(),
                            reachable: false,
                            history: Some(path_of(&node.history)),
                            belief: None,
                            current: info.actions[cur].clone(),
                            better: info.actions[a].clone(),
                            delta,
                        });
                    }
                }
            }
        }
    }
    Ok(SseCertificate { verdict: violations.is_empty(), violations, operations: ops })
}

/// Sets owned by the owner of `set` that meet the subtrees below its members,
/// `set` itself first.
fn owner_sets_below(game: &GameTree, set: usize) -> Vec<usize> {
    let owner = game.info_sets()[set].owner;
    let roots = game.set_nodes(set);
    let mut out = vec![set];
    for (k, info) in game.info_sets().iter().enumerate() {
        if k == set || info.owner != owner {
            continue;
        }
        let below = game.set_nodes(k).iter().any(|&n| roots.iter().any(|&r| game.is_descendant(r, n)));
        if below {
            out.push(k);
        }
    }
    out
}

/// Tests every full alternative strategy of the owner below each set rather
/// than one-shot changes. Exponential; meant as an oracle for small games.
pub fn is_sse_bruteforce(game: &GameTree, s: &StrategyProfile) -> Result<SseCertificate> {
    game.require_perfect_recall()?;
    let reach = reach_probabilities(game, s);
    let mut violations = Vec::new();
    let mut ops = 0u64;
    for (k, info) in game.info_sets().iter().enumerate() {
        let j = info.owner.prover_index().expect("prover set") - 1;
        let ids = game.set_nodes(k);
        let scope = owner_sets_below(game, k);
        let radix: Vec<usize> = scope.iter().map(|&q| game.info_sets()[q].actions.len()).collect();
        let base: Vec<Rational> = ids.iter().map(|&n| subtree_value(game, s, n)[j].clone()).collect();
        let belief = bayes_from_reach(game, k, &reach);
        // Best gain per member (unreachable) or overall (reachable).
        let mut best: Vec<Option<(usize, Rational)>> = vec![None; ids.len()];
        let mut best_total: Option<(usize, Rational)> = None;
        let mut digits = vec![0usize; scope.len()];
        loop {
            let mut alt = s.clone();
            for (q, &d) in scope.iter().zip(&digits) {
                alt.choice[*q] = d;
            }
            let vals: Vec<Rational> = ids.iter().map(|&n| subtree_value(game, &alt, n)[j].clone()).collect();
            ops += ids.len() as u64;
            match &belief {
                Some(mu) => {
                    let gain = sum(mu.iter().zip(vals.iter().zip(&base)).map(|(p, (v, b))| p * (v - b)).collect::<Vec<_>>().iter());
                    if gain > zero() && best_total.as_ref().is_none_or(|(_, g)| gain > *g) {
                        best_total = Some((digits[0], gain));
                    }
                }
                None => {
                    for (i, (v, b)) in vals.iter().zip(&base).enumerate() {
                        let gain = v - b;
                        if gain > zero() && best[i].as_ref().is_none_or(|(_, g)| gain > *g) {
                            best[i] = Some((digits[0], gain));
                        }
                    }
                }
            }
            if !advance(&mut digits, &radix) {
                break;
            }
        }
        let cur = s.choice[k];
        match belief {
            Some(mu) => {
                if let Some((a, delta)) = best_total {
                    violations.push(SseViolation {
                        set: info.id(),
                        reachable: true,
                        history: None,
                        belief: Some(mu),
                        current: info.actions[cur].clone(),
                        better: info.actions[a].clone(),
                        delta,
                    });
                }
            }
            None => {
                for (i, found) in best.into_iter().enumerate() {
                    if let Some((a, delta)) = found {
                        violations.push(SseViolation {
                            set: info.id(),
                            reachable: false,
                            history: Some(path_of(&game.node(ids[i]).history)),
                            belief: None,
                            current: info.actions[cur].clone(),
                            better: info.actions[a].clone(),
                            delta,
                        });
                    }
                }
            }
        }
    }
    Ok(SseCertificate { verdict: violations.is_empty(), violations, operations: ops })
}

/// Mixed-radix increment; false after the last combination.
pub(crate) fn advance(digits: &mut [usize], radix: &[usize]) -> bool {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < radix[i] {
            return true;
        }
        digits[i] = 0;
    }
    false
}

#[derive(Clone, Copy, Debug)]
pub struct SearchLimits {
    /// Budget of search nodes (partial assignments) visited.
    pub max_profiles: u64,
    pub jobs: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_profiles: DEFAULT_MAX_PROFILES, jobs: 1 }
    }
}

/// Precomputed dependency structure for the backtracking search.
struct Plan {
    order: Vec<usize>,
    /// Sets whose member-wise test becomes possible after step t.
    local_at: Vec<Vec<usize>>,
    /// Sets whose exact test becomes possible after step t.
    exact_at: Vec<Vec<usize>>,
}

fn plan(game: &GameTree) -> Plan {
    let sets = game.info_sets().len();
    let max_depth = |k: usize| game.set_nodes(k).iter().map(|&n| game.node(n).depth).max().unwrap_or(0);
    let mut order: Vec<usize> = (0..sets).collect();
    order.sort_by_key(|&k| (std::cmp::Reverse(max_depth(k)), k));
    let mut pos = vec![0; sets];
    for (t, &k) in order.iter().enumerate() {
        pos[k] = t;
    }
    let mut local_at = vec![Vec::new(); sets];
    let mut exact_at = vec![Vec::new(); sets];
    for k in 0..sets {
        let mut local = pos[k];
        let mut exact = pos[k];
        for &m in game.set_nodes(k) {
            for n in m + 1..game.node(m).end {
                if let Some(q) = game.set_of(n) {
                    local = local.max(pos[q]);
                }
            }
            let mut cur = game.node(m).parent;
            while let Some(p) = cur {
                if let Some(q) = game.set_of(p) {
                    exact = exact.max(pos[q]);
                }
                cur = game.node(p).parent;
            }
        }
        local_at[local].push(k);
        exact_at[local.max(exact)].push(k);
    }
    Plan { order, local_at, exact_at }
}

/// Subtree value for prover `j` under a partial assignment that covers every
/// set below `n`.
fn partial_value(game: &GameTree, choice: &[Option<usize>], n: NodeId, j: usize) -> Rational {
    let node = game.node(n);
    if let Some(p) = node.payments() {
        return p[j].clone();
    }
    match node.nature_dist() {
        Some(dist) => {
            let mut acc = zero();
            for (a, p) in dist.iter().enumerate() {
                if !p.is_zero() {
                    acc += p * partial_value(game, choice, node.child(a), j);
                }
            }
            acc
        }
        None => {
            let a = choice[game.set_of(n).unwrap()].expect("dependency assigned");
            partial_value(game, choice, node.child(a), j)
        }
    }
}

fn partial_reach(game: &GameTree, choice: &[Option<usize>], n: NodeId) -> Rational {
    let mut p = one();
    let mut cur = n;
    while let Some(parent) = game.node(cur).parent {
        let node = game.node(parent);
        let a = node.children.iter().position(|c| *c == Some(cur)).unwrap();
        match node.nature_dist() {
            Some(dist) => p *= &dist[a],
            None => {
                if choice[game.set_of(parent).unwrap()] != Some(a) {
                    return zero();
                }
            }
        }
        if p.is_zero() {
            return p;
        }
        cur = parent;
    }
    p
}

#[derive(Clone, Copy, PartialEq)]
enum LocalStatus {
    Rejected,
    Accepted,
    Undecided,
}

fn member_values(game: &GameTree, choice: &[Option<usize>], k: usize) -> Vec<Vec<Rational>> {
    let info = &game.info_sets()[k];
    let j = info.owner.prover_index().unwrap() - 1;
    game.set_nodes(k)
        .iter()
        .map(|&m| (0..info.actions.len()).map(|a| partial_value(game, choice, game.node(m).child(a), j)).collect())
        .collect()
}

fn local_test(game: &GameTree, choice: &[Option<usize>], k: usize) -> LocalStatus {
    let cur = choice[k].unwrap();
    let vals = member_values(game, choice, k);
    let actions = game.info_sets()[k].actions.len();
    let dominated = (0..actions).any(|b| b != cur && vals.iter().all(|v| v[b] > v[cur]));
    if dominated {
        return LocalStatus::Rejected;
    }
    if vals.iter().all(|v| v.iter().all(|x| *x <= v[cur])) {
        LocalStatus::Accepted
    } else {
        LocalStatus::Undecided
    }
}

fn exact_test(game: &GameTree, choice: &[Option<usize>], k: usize) -> bool {
    let cur = choice[k].unwrap();
    let reach: Vec<Rational> = game.set_nodes(k).iter().map(|&m| partial_reach(game, choice, m)).collect();
    let total = sum(&reach);
    if total.is_zero() {
        // Unreachable: must be optimal member-wise, which the local test
        // would have accepted.
        return false;
    }
    let vals = member_values(game, choice, k);
    let actions = game.info_sets()[k].actions.len();
    let weighted = |a: usize| sum(reach.iter().zip(&vals).map(|(p, v)| p * &v[a]).collect::<Vec<_>>().iter());
    let base = weighted(cur);
    (0..actions).all(|b| weighted(b) <= base)
}

struct Search<'a> {
    game: &'a GameTree,
    plan: &'a Plan,
    visited: &'a AtomicU64,
    cap: u64,
    allowed: &'a [Vec<usize>],
}

impl Search<'_> {
    fn run(&self, t: usize, choice: &mut Vec<Option<usize>>, status: &mut Vec<LocalStatus>, out: &mut Vec<StrategyProfile>) -> std::result::Result<(), ()> {
        if t == self.plan.order.len() {
            out.push(StrategyProfile { choice: choice.iter().map(|c| c.unwrap()).collect() });
            return Ok(());
        }
        let k = self.plan.order[t];
        for &a in &self.allowed[k] {
            self.try_action(t, k, a, choice, status, out)?;
        }
        choice[k] = None;
        Ok(())
    }

    fn try_action(
        &self,
        t: usize,
        k: usize,
        a: usize,
        choice: &mut Vec<Option<usize>>,
        status: &mut Vec<LocalStatus>,
        out: &mut Vec<StrategyProfile>,
    ) -> std::result::Result<(), ()> {
        if self.visited.fetch_add(1, Ordering::Relaxed) >= self.cap {
            return Err(());
        }
        choice[k] = Some(a);
        let mut ok = true;
        for &q in &self.plan.local_at[t] {
            status[q] = local_test(self.game, choice, q);
            if status[q] == LocalStatus::Rejected {
                ok = false;
                break;
            }
        }
        if ok {
            for &q in &self.plan.exact_at[t] {
                if status[q] != LocalStatus::Accepted && !exact_test(self.game, choice, q) {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            self.run(t + 1, choice, status, out)?;
        }
        Ok(())
    }
}

/// All pure SSEs in canonical order (lexicographic in set order, then action
/// order).
pub fn enumerate_sse(game: &GameTree) -> Result<Vec<StrategyProfile>> {
    enumerate_sse_with(game, SearchLimits::default())
}

pub fn enumerate_sse_with(game: &GameTree, limits: SearchLimits) -> Result<Vec<StrategyProfile>> {
    let every: Vec<Vec<usize>> = game.info_sets().iter().map(|s| (0..s.actions.len()).collect()).collect();
    enumerate_sse_restricted(game, limits, &every)
}

/// SSEs whose choices come from `allowed[set]`. Deviation checks still range
/// over every action.
pub fn enumerate_sse_restricted(game: &GameTree, limits: SearchLimits, allowed: &[Vec<usize>]) -> Result<Vec<StrategyProfile>> {
    game.require_perfect_recall()?;
    let sets = game.info_sets().len();
    let plan = plan(game);
    let visited = AtomicU64::new(0);
    let search = Search { game, plan: &plan, visited: &visited, cap: limits.max_profiles, allowed };
    let exceeded = || Error::CapExceeded { profiles: game.profile_count().to_string(), cap: limits.max_profiles };
    let mut found = Vec::new();
    if sets == 0 {
        found.push(StrategyProfile { choice: Vec::new() });
    } else if limits.jobs <= 1 {
        let mut choice = vec![None; sets];
        let mut status = vec![LocalStatus::Undecided; sets];
        search.run(0, &mut choice, &mut status, &mut found).map_err(|_| exceeded())?;
    } else {
        let first = plan.order[0];
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(limits.jobs)
            .build()
            .map_err(|e| Error::Instance(e.to_string()))?;
        let parts: Vec<std::result::Result<Vec<StrategyProfile>, ()>> = pool.install(|| {
            allowed[first]
                .par_iter()
                .map(|&a| {
                    let mut choice = vec![None; sets];
                    let mut status = vec![LocalStatus::Undecided; sets];
                    let mut out = Vec::new();
                    search.try_action(0, first, a, &mut choice, &mut status, &mut out)?;
                    Ok(out)
                })
                .collect()
        });
        for part in parts {
            found.extend(part.map_err(|_| exceeded())?);
        }
    }
    found.sort();
    Ok(found)
}

/// The SSE with the largest total expected utility (first on ties), and
/// whether it weakly dominates every listed SSE player by player.
pub fn max_total_utility_sse(game: &GameTree, sse_set: &[StrategyProfile]) -> Result<(StrategyProfile, bool)> {
    if sse_set.is_empty() {
        return Err(Error::Instance("empty SSE set".into()));
    }
    let utils: Vec<Vec<Rational>> = sse_set.iter().map(|s| expected_utilities(game, s)).collect::<Result<_>>()?;
    let mut best = 0;
    let mut best_total = sum(&utils[0]);
    for (i, u) in utils.iter().enumerate().skip(1) {
        let total = sum(u);
        if total > best_total {
            best = i;
            best_total = total;
        }
    }
    let dominant = utils.iter().all(|u| u.iter().zip(&utils[best]).all(|(x, b)| b >= x));
    Ok((sse_set[best].clone(), dominant))
}

/// Brute-force scan of every pure profile; used as an oracle in tests.
pub fn all_profiles(game: &GameTree, cap: u64) -> Result<Vec<StrategyProfile>> {
    let count = game.profile_count();
    if count > num_bigint::BigUint::from(cap) {
        return Err(Error::CapExceeded { profiles: count.to_string(), cap });
    }
    let radix: Vec<usize> = game.info_sets().iter().map(|s| s.actions.len()).collect();
    let mut digits = vec![0; radix.len()];
    let mut out = Vec::new();
    loop {
        out.push(StrategyProfile { choice: digits.clone() });
        if !advance(&mut digits, &radix) {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{parse_path, GameBuilder, History};
    use crate::rational::rat;

    fn h(p: &str) -> History {
        parse_path(p).unwrap()
    }

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|x| x.to_string()).collect()
    }

    fn one_choice(pay: &[Rational]) -> crate::game::GameTree {
        let names: Vec<String> = (0..pay.len()).map(|i| format!("a{i}")).collect();
        let mut b = GameBuilder::new(1);
        b.prover(&h("/"), 1, names.clone(), None);
        for (n, p) in names.iter().zip(pay) {
            b.terminal(std::slice::from_ref(n), vec![p.clone()], 0);
        }
        b.build()
    }

    #[test]
    fn single_decision() {
        let g = one_choice(&[rat(1, 4), rat(3, 4)]);
        assert!(is_sse(&g, &StrategyProfile { choice: vec![1] }).unwrap().verdict);
        let cert = is_sse(&g, &StrategyProfile { choice: vec![0] }).unwrap();
        assert!(!cert.verdict);
        assert_eq!(cert.violations[0].delta, rat(1, 2));
        assert_eq!(enumerate_sse(&g).unwrap(), vec![StrategyProfile { choice: vec![1] }]);
    }

    #[test]
    fn ties_give_two_equilibria() {
        let g = one_choice(&[rat(1, 2), rat(1, 2)]);
        assert_eq!(enumerate_sse(&g).unwrap().len(), 2);
    }

    #[test]
    fn unreachable_set_is_checked_per_history() {
        // P1 exits at once; P2's unreached set must still be optimal at each member.
        let mut b = GameBuilder::new(2);
        b.prover(&h("/"), 1, labels(&["out", "in"]), None);
        b.terminal(&h("/out"), vec![rat(1, 2), zero()], 0);
        b.nature(&h("/in"), labels(&["l", "r"]), vec![rat(1, 2), rat(1, 2)]);
        for (side, x, y) in [("/in/l", rat(1, 2), zero()), ("/in/r", zero(), rat(1, 4))] {
            b.prover(&h(side), 2, labels(&["x", "y"]), Some("k".into()));
            b.terminal(&h(&format!("{side}/x")), vec![zero(), x], 0);
            b.terminal(&h(&format!("{side}/y")), vec![zero(), y], 0);
        }
        let g = b.build();
        let s = StrategyProfile { choice: vec![0, 0] };
        let cert = is_sse(&g, &s).unwrap();
        assert!(!cert.verdict);
        assert_eq!(cert.violations.len(), 1);
        assert_eq!(cert.violations[0].history.as_deref(), Some("/in/r"));
        // With "in" chosen, Bayes weighs the members and x wins overall.
        let s = StrategyProfile { choice: vec![1, 0] };
        assert!(!is_sse(&g, &s).unwrap().verdict);
        assert_eq!(enumerate_sse(&g).unwrap(), Vec::<StrategyProfile>::new());
        for s in all_profiles(&g, 100).unwrap() {
            assert_eq!(is_sse(&g, &s).unwrap().verdict, is_sse_bruteforce(&g, &s).unwrap().verdict);
        }
    }

    #[test]
    fn max_total_flags_dominance() {
        let g = one_choice(&[rat(1, 2), rat(1, 2)]);
        let sses = enumerate_sse(&g).unwrap();
        let (s, flag) = max_total_utility_sse(&g, &sses).unwrap();
        assert_eq!(s, sses[0]);
        assert!(flag);

        let mut b = GameBuilder::new(2);
        b.prover(&h("/"), 1, labels(&["a", "b"]), None);
        b.terminal(&h("/a"), vec![rat(1, 2), zero()], 0);
        b.terminal(&h("/b"), vec![zero(), rat(1, 2)], 0);
        let g = b.build();
        let both = vec![StrategyProfile { choice: vec![0] }, StrategyProfile { choice: vec![1] }];
        let (s, flag) = max_total_utility_sse(&g, &both).unwrap();
        assert_eq!(s, both[0]);
        assert!(!flag);
    }

    #[test]
    fn cap_reports_profile_count() {
        let g = one_choice(&[zero(), zero(), zero()]);
        let err = enumerate_sse_with(&g, SearchLimits { max_profiles: 2, jobs: 1 }).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { ref profiles, cap: 2 } if profiles == "3"));
    }
}
