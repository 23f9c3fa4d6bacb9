//! Collapsing Nature moves to small support: outcomes whose values for one
//! prover share an interval representative are merged onto the first of them.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::beliefs::reachable_sets;
use crate::equilibrium::{enumerate_sse_with, is_sse, SearchLimits};
use crate::error::{Error, Result};
use crate::game::{expected_utilities, node_values, path_of, GameTree, NodeId, PlayerId, StrategyProfile};
use crate::rational::{fmt_rational, int, one, rat, sum, Rational};
use crate::subforms::dominant_among;

/// Representative of the half-interval of width 1/(4α) containing `r`.
/// Intervals are closed on the left; the top one also contains 1.
pub fn interval_representative(r: &Rational, alpha: u64) -> Result<Rational> {
    if r.abs() > one() {
        return Err(Error::PaymentOutOfRange(fmt_rational(r)));
    }
    if alpha == 0 {
        return Err(Error::Instance("alpha must be positive".into()));
    }
    let a = alpha as i64;
    let scaled = r * int(4 * a);
    let mut k = scaled.floor().to_integer().to_i64().expect("bounded");
    if k == 4 * a {
        k -= 1;
    }
    let (l, b) = k.div_mod_floor(&2);
    Ok(rat(4 * l + 1 + 2 * b, 4 * a))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMap {
    /// Path of the Nature node.
    pub node: String,
    pub alpha: u64,
    /// Positive-probability outcome indices grouped by representative, each
    /// group ascending; groups ordered by representative.
    pub groups: Vec<Vec<usize>>,
    pub representatives: Vec<Rational>,
    /// Lowest index per group, which receives the group's mass.
    pub keepers: Vec<usize>,
}

pub fn prune_nature(game: &GameTree, s: &StrategyProfile, alpha: u64, prover: PlayerId) -> Result<(GameTree, Vec<IntervalMap>)> {
    game.require_valid()?;
    let j = game.check_prover(prover)?;
    let values = node_values(game, s);
    let mut maps = Vec::new();
    let mut dists: Vec<(NodeId, Vec<Rational>)> = Vec::new();
    for n in 0..game.nodes().len() {
        let node = game.node(n);
        let Some(dist) = node.nature_dist() else { continue };
        let mut by_rep: BTreeMap<Rational, Vec<usize>> = BTreeMap::new();
        for (i, p) in dist.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let rep = interval_representative(&values[node.child(i)][j], alpha)?;
            by_rep.entry(rep).or_default().push(i);
        }
        let mut new = vec![Rational::zero(); dist.len()];
        let mut map = IntervalMap { node: path_of(&node.history), alpha, groups: Vec::new(), representatives: Vec::new(), keepers: Vec::new() };
        for (rep, group) in by_rep {
            let keeper = group[0];
            new[keeper] = sum(group.iter().map(|&i| &dist[i]));
            map.keepers.push(keeper);
            map.representatives.push(rep);
            map.groups.push(group);
        }
        dists.push((n, new));
        maps.push(map);
    }
    Ok((game.with_nature_distributions(&dists), maps))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PruningReport {
    pub alpha: u64,
    pub designated: usize,
    /// |u_j(original) - u_j(pruned)| per prover.
    pub drift: Vec<Rational>,
    pub drift_bound: Rational,
    /// Drift of the designated prover is below the bound.
    pub drift_ok: bool,
    pub max_support: usize,
    pub support_ok: bool,
    /// Every set reachable in the pruned game is reachable in the original.
    pub reachable_subset: bool,
    /// Whether `s` is a dominant SSE of the original; `None` when the
    /// enumeration cap was hit.
    pub dominant_before: Option<bool>,
    pub dominant_after: Option<bool>,
}

impl PruningReport {
    /// All checked guarantees hold (dominance is only required when it held before).
    pub fn holds(&self) -> bool {
        self.drift_ok
            && self.support_ok
            && self.reachable_subset
            && !(self.dominant_before == Some(true) && self.dominant_after != Some(true))
    }
}

fn dominant_in(game: &GameTree, s: &StrategyProfile, limits: SearchLimits) -> Result<Option<bool>> {
    if !is_sse(game, s)?.verdict {
        return Ok(Some(false));
    }
    match enumerate_sse_with(game, limits) {
        Ok(sses) => Ok(Some(dominant_among(game, &sses)?.contains(s))),
        Err(Error::CapExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn verify_pruning(
    original: &GameTree,
    pruned: &GameTree,
    s: &StrategyProfile,
    alpha: u64,
    prover: PlayerId,
    limits: SearchLimits,
) -> Result<PruningReport> {
    let designated = original.check_prover(prover)?;
    let before = expected_utilities(original, s)?;
    let after = expected_utilities(pruned, s)?;
    let drift: Vec<Rational> = before.iter().zip(&after).map(|(x, y)| (x - y).abs()).collect();
    let drift_bound = rat(1, 4 * alpha as i64);
    let max_support = pruned
        .nodes()
        .iter()
        .filter_map(|n| n.nature_dist())
        .map(|d| d.iter().filter(|p| !p.is_zero()).count())
        .max()
        .unwrap_or(0);
    let was: Vec<usize> = reachable_sets(original, s)?.into_iter().map(|(k, _)| k).collect();
    let reachable_subset = reachable_sets(pruned, s)?.iter().all(|(k, _)| was.contains(k));
    let dominant_before = dominant_in(original, s, limits)?;
    let dominant_after = if dominant_before == Some(true) { dominant_in(pruned, s, limits)? } else { None };
    Ok(PruningReport {
        alpha,
        designated: designated + 1,
        drift_ok: drift[designated] < drift_bound,
        drift,
        drift_bound,
        max_support,
        support_ok: max_support as u64 <= 8 * alpha,
        reachable_subset,
        dominant_before,
        dominant_after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{parse_path, GameBuilder};

    #[test]
    fn representatives_follow_the_interval_map() {
        assert_eq!(interval_representative(&rat(1, 10), 1).unwrap(), rat(1, 4));
        assert_eq!(interval_representative(&rat(3, 10), 1).unwrap(), rat(3, 4));
        assert_eq!(interval_representative(&rat(0, 1), 1).unwrap(), rat(1, 4));
        assert_eq!(interval_representative(&rat(1, 1), 1).unwrap(), interval_representative(&rat(9, 10), 1).unwrap());
        assert_eq!(interval_representative(&rat(-1, 1), 1).unwrap(), rat(-7, 4));
        assert!(interval_representative(&rat(5, 4), 1).is_err());
    }

    #[test]
    fn representatives_are_injective_over_8_alpha_intervals() {
        for alpha in 1..=3u64 {
            let a = alpha as i64;
            let reps: std::collections::BTreeSet<Rational> =
                (-4 * a..=4 * a).map(|k| interval_representative(&rat(k, 4 * a), alpha).unwrap()).collect();
            assert_eq!(reps.len() as u64, 8 * alpha);
        }
    }

    fn three_way(pays: [Rational; 3]) -> GameTree {
        let mut b = GameBuilder::new(1);
        let labels: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        b.nature(&parse_path("/").unwrap(), labels.clone(), vec![rat(1, 3), rat(1, 3), rat(1, 3)]);
        for (l, p) in labels.iter().zip(pays) {
            b.terminal(std::slice::from_ref(l), vec![p], 0);
        }
        b.build()
    }

    #[test]
    fn merges_outcomes_sharing_a_representative() {
        let g = three_way([rat(1, 10), rat(3, 20), rat(3, 10)]);
        let s = StrategyProfile::first(&g);
        let (pruned, maps) = prune_nature(&g, &s, 1, PlayerId::Prover(1)).unwrap();
        assert_eq!(pruned.node(0).nature_dist().unwrap(), &[rat(2, 3), rat(0, 1), rat(1, 3)]);
        assert_eq!(maps[0].groups, vec![vec![0, 1], vec![2]]);
        let report = verify_pruning(&g, &pruned, &s, 1, PlayerId::Prover(1), SearchLimits::default()).unwrap();
        // (1/10 + 3/20 + 3/10)/3 against (2/3)(1/10) + (1/3)(3/10).
        assert_eq!(report.drift[0], rat(1, 60));
        assert!(report.holds());
    }

    #[test]
    fn one_interval_collapses_to_first_outcome() {
        let g = three_way([rat(1, 20), rat(1, 10), rat(1, 5)]);
        let (pruned, _) = prune_nature(&g, &StrategyProfile::first(&g), 1, PlayerId::Prover(1)).unwrap();
        assert_eq!(pruned.node(0).nature_dist().unwrap(), &[rat(1, 1), rat(0, 1), rat(0, 1)]);
    }

    #[test]
    fn merging_can_flip_a_best_response() {
        // The prover does not see the coin; under `a` both outcomes land in [0, 1/4).
        let mut b = GameBuilder::new(1);
        b.nature(&[], vec!["n0".into(), "n1".into()], vec![rat(1, 2), rat(1, 2)]);
        for (n, pa, pb) in [("n0", rat(1, 10), rat(1, 5)), ("n1", rat(3, 20), rat(0, 1))] {
            let h = vec![n.to_string()];
            b.prover(&h, 1, vec!["a".into(), "b".into()], Some("blind".into()));
            b.terminal(&[n.to_string(), "a".into()], vec![pa], 0);
            b.terminal(&[n.to_string(), "b".into()], vec![pb], 0);
        }
        let g = b.build();
        let s = StrategyProfile::first(&g);
        assert!(is_sse(&g, &s).unwrap().verdict);
        let (pruned, _) = prune_nature(&g, &s, 1, PlayerId::Prover(1)).unwrap();
        assert!(!is_sse(&pruned, &s).unwrap().verdict);
        let report = verify_pruning(&g, &pruned, &s, 1, PlayerId::Prover(1), SearchLimits::default()).unwrap();
        assert_eq!(report.dominant_before, Some(true));
        assert_eq!(report.dominant_after, Some(false));
        assert!(!report.holds());
    }
}
