//! Subforms (information sets closed under everything that follows them) and
//! the height-layered dominance test for SSEs.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::equilibrium::{enumerate_sse_with, is_sse, SearchLimits};
use crate::error::{Error, Result};
use crate::game::{check_distribution, node_values, path_of, reach_probabilities, GameTree, History, NodeId, NodeInfo, PlayerId, StrategyProfile};
use crate::rational::{sum, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubformRoot {
    Set(usize),
    /// A Nature node, or a terminal root.
    Node(NodeId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subform {
    pub root: SubformRoot,
    /// Root members in preorder.
    pub members: Vec<NodeId>,
    /// Edges from a root member to its deepest terminal.
    pub height: usize,
    /// Information sets inside, the root set included.
    pub sets: Vec<usize>,
    /// 1-based indices of provers owning a set inside.
    pub provers: Vec<usize>,
}

impl Subform {
    pub fn id(&self, game: &GameTree) -> String {
        match self.root {
            SubformRoot::Set(k) => game.info_sets()[k].id(),
            SubformRoot::Node(n) => path_of(&game.node(n).history),
        }
    }

    pub fn contains(&self, game: &GameTree, n: NodeId) -> bool {
        let i = self.members.partition_point(|&m| m <= n);
        i > 0 && game.is_descendant(self.members[i - 1], n)
    }

    pub fn contains_set(&self, k: usize) -> bool {
        self.sets.binary_search(&k).is_ok()
    }
}

fn node_heights(game: &GameTree) -> Vec<usize> {
    let mut height = vec![0; game.nodes().len()];
    for n in (0..game.nodes().len()).rev() {
        height[n] = game.node(n).children.iter().flatten().map(|&c| height[c] + 1).max().unwrap_or(0);
    }
    height
}

/// Every subform, sorted by height and then by the preorder of its first
/// member. The whole game is always present.
pub fn find_subforms(game: &GameTree) -> Result<Vec<Subform>> {
    game.require_perfect_recall()?;
    let heights = node_heights(game);
    let mut candidates: Vec<(SubformRoot, Vec<NodeId>)> = Vec::new();
    for k in 0..game.info_sets().len() {
        candidates.push((SubformRoot::Set(k), game.set_nodes(k).to_vec()));
    }
    for n in 0..game.nodes().len() {
        let node = game.node(n);
        let nature = node.nature_dist().is_some();
        if nature || (n == game.root() && node.is_terminal()) {
            candidates.push((SubformRoot::Node(n), vec![n]));
        }
    }
    let mut out = Vec::new();
    for (root, mut members) in candidates {
        members.sort_unstable();
        let mut sf = Subform { root, members, height: 0, sets: Vec::new(), provers: Vec::new() };
        let mut closed = true;
        'scan: for &m in &sf.members {
            for n in m..game.node(m).end {
                if let Some(q) = game.set_of(n) {
                    if game.set_nodes(q).iter().any(|&x| !sf.contains(game, x)) {
                        closed = false;
                        break 'scan;
                    }
                    sf.sets.push(q);
                }
            }
        }
        if !closed {
            continue;
        }
        sf.sets.sort_unstable();
        sf.sets.dedup();
        sf.provers = sf.sets.iter().filter_map(|&q| game.info_sets()[q].owner.prover_index()).collect();
        sf.provers.sort_unstable();
        sf.provers.dedup();
        sf.height = sf.members.iter().map(|&m| heights[m]).max().unwrap_or(0);
        out.push(sf);
    }
    out.sort_by_key(|sf| (sf.height, sf.members[0]));
    Ok(out)
}

/// The subform as a standalone game. A single member gives the plain subtree;
/// otherwise a Nature root labelled `h0`, `h1`, ... plays `belief` into the
/// members.
pub fn conditional_game(game: &GameTree, sf: &Subform, belief: &[Rational]) -> Result<GameTree> {
    check_distribution(belief, sf.members.len())?;
    let mut nodes: BTreeMap<History, NodeInfo> = BTreeMap::new();
    let mut remap: Vec<Option<History>> = vec![None; game.nodes().len()];
    let single = sf.members.len() == 1;
    if !single {
        nodes.insert(
            Vec::new(),
            NodeInfo::Decision {
                player: PlayerId::Nature,
                actions: (0..sf.members.len()).map(|i| format!("h{i}")).collect(),
                nature_dist: Some(belief.to_vec()),
            },
        );
    }
    for (i, &m) in sf.members.iter().enumerate() {
        let cut = game.node(m).depth;
        for (n, slot) in remap.iter_mut().enumerate().take(game.node(m).end).skip(m) {
            let mut h: History = if single { Vec::new() } else { vec![format!("h{i}")] };
            h.extend(game.node(n).history[cut..].iter().cloned());
            nodes.insert(h.clone(), game.node(n).info.clone());
            *slot = Some(h);
        }
    }
    let sets = sf
        .sets
        .iter()
        .map(|&q| {
            let members = game.set_nodes(q).iter().map(|&n| remap[n].clone().expect("closed subform")).collect();
            (game.info_sets()[q].owner, members)
        })
        .collect();
    Ok(GameTree::new(game.provers(), nodes, sets))
}

/// What dominance comparisons need from one profile on one subform.
#[derive(Clone, Debug)]
struct Eval {
    /// Conditional payoffs under Bayes beliefs when the root is reached.
    bayes: Option<Vec<Rational>>,
    /// Payoff vector per root member.
    members: Vec<Vec<Rational>>,
}

fn evaluate(game: &GameTree, s: &StrategyProfile, subforms: &[Subform]) -> Vec<Eval> {
    let values = node_values(game, s);
    let reach = reach_probabilities(game, s);
    subforms
        .iter()
        .map(|sf| {
            let total = sum(sf.members.iter().map(|&m| &reach[m]));
            let members: Vec<Vec<Rational>> = sf.members.iter().map(|&m| values[m].clone()).collect();
            let bayes = (!total.is_zero()).then(|| {
                (0..game.provers())
                    .map(|j| sum(sf.members.iter().map(|&m| &reach[m] * &values[m][j] / &total).collect::<Vec<_>>().iter()))
                    .collect()
            });
            Eval { bayes, members }
        })
        .collect()
}

fn dominates(a: &Eval, b: &Eval, provers: &[usize]) -> bool {
    match (&a.bayes, &b.bayes) {
        (Some(x), Some(y)) => provers.iter().all(|&j| x[j - 1] >= y[j - 1]),
        _ => a
            .members
            .iter()
            .zip(&b.members)
            .all(|(x, y)| provers.iter().all(|&j| x[j - 1] >= y[j - 1])),
    }
}

/// Weak dominance of `s` over `s2` on `sf`: Bayes-conditional payoffs when both
/// reach the root, member-by-member payoffs otherwise.
pub fn dominates_on_subform(game: &GameTree, s: &StrategyProfile, s2: &StrategyProfile, sf: &Subform) -> bool {
    let sfs = std::slice::from_ref(sf);
    dominates(&evaluate(game, s, sfs)[0], &evaluate(game, s2, sfs)[0], &sf.provers)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubformTrace {
    pub subform: String,
    pub height: usize,
    /// Profiles the candidate had to dominate (those surviving all lower heights).
    pub compared: usize,
    pub dominated_all: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominanceVerdict {
    pub dominant: bool,
    pub trace: Vec<SubformTrace>,
}

/// Runs the height layers over `sse_set`; returns per-layer survivor masks
/// and, per subform, whether each profile dominated all survivors of the
/// previous layer.
fn layers(game: &GameTree, subforms: &[Subform], sse_set: &[StrategyProfile]) -> (Vec<bool>, Vec<(usize, Vec<bool>)>) {
    let evals: Vec<Vec<Eval>> = sse_set.iter().map(|s| evaluate(game, s, subforms)).collect();
    let mut alive = vec![true; sse_set.len()];
    let mut per_subform = Vec::new();
    let mut i = 0;
    while i < subforms.len() {
        let h = subforms[i].height;
        let level: Vec<usize> = (i..subforms.len()).take_while(|&f| subforms[f].height == h).collect();
        i += level.len();
        let survivors: Vec<usize> = (0..sse_set.len()).filter(|&t| alive[t]).collect();
        let mut next = alive.clone();
        for &f in &level {
            let ok: Vec<bool> = (0..sse_set.len())
                .map(|t| survivors.iter().all(|&u| dominates(&evals[t][f], &evals[u][f], &subforms[f].provers)))
                .collect();
            for t in 0..sse_set.len() {
                next[t] &= ok[t];
            }
            per_subform.push((survivors.len(), ok));
        }
        alive = next;
    }
    (alive, per_subform)
}

pub fn is_dominant_sse(game: &GameTree, s: &StrategyProfile, sse_set: &[StrategyProfile]) -> Result<DominanceVerdict> {
    if !is_sse(game, s)?.verdict {
        return Err(Error::NotAnSse);
    }
    let subforms = find_subforms(game)?;
    let mut profiles = sse_set.to_vec();
    let me = match profiles.iter().position(|p| p == s) {
        Some(i) => i,
        None => {
            profiles.push(s.clone());
            profiles.len() - 1
        }
    };
    let (alive, per_subform) = layers(game, &subforms, &profiles);
    let trace = subforms
        .iter()
        .zip(&per_subform)
        .map(|(sf, (compared, ok))| SubformTrace { subform: sf.id(game), height: sf.height, compared: *compared, dominated_all: ok[me] })
        .collect();
    Ok(DominanceVerdict { dominant: alive[me], trace })
}

/// All dominant SSEs among `sse_set`, in the order given.
pub fn dominant_among(game: &GameTree, sse_set: &[StrategyProfile]) -> Result<Vec<StrategyProfile>> {
    let subforms = find_subforms(game)?;
    let (alive, _) = layers(game, &subforms, sse_set);
    Ok(sse_set.iter().zip(alive).filter(|(_, a)| *a).map(|(s, _)| s.clone()).collect())
}

/// Per set, the actions kept when actions whose children are payoff- and
/// bit-identical terminals at every member are collapsed to the first one.
pub fn distinct_actions(game: &GameTree) -> Vec<Vec<usize>> {
    game.info_sets()
        .iter()
        .enumerate()
        .map(|(k, info)| {
            let leaf = |n: NodeId, a: usize| {
                let c = game.node(game.node(n).child(a));
                c.payments().map(|p| (p.to_vec(), c.answer_bit()))
            };
            (0..info.actions.len())
                .filter(|&b| {
                    !(0..b).any(|a| {
                        game.set_nodes(k).iter().all(|&n| {
                            let x = leaf(n, a);
                            x.is_some() && x == leaf(n, b)
                        })
                    })
                })
                .collect()
        })
        .collect()
}

/// First dominant SSE in canonical order, if any.
///
/// With `collapse` the search skips actions that only duplicate an earlier
/// terminal outcome; such profiles are indistinguishable in every utility, so
/// the first dominant SSE is the same either way.
pub fn find_dominant_sse_with(game: &GameTree, limits: SearchLimits, collapse: bool) -> Result<Option<StrategyProfile>> {
    let sses = if collapse {
        crate::equilibrium::enumerate_sse_restricted(game, limits, &distinct_actions(game))?
    } else {
        enumerate_sse_with(game, limits)?
    };
    Ok(dominant_among(game, &sses)?.into_iter().next())
}

pub fn find_dominant_sse(game: &GameTree) -> Result<Option<StrategyProfile>> {
    find_dominant_sse_with(game, SearchLimits::default(), true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::enumerate_sse;
    use crate::game::{conditional_utility, expected_utilities, parse_path, Anchor, GameBuilder};
    use crate::rational::{rat, zero};

    fn h(p: &str) -> History {
        parse_path(p).unwrap()
    }

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|x| x.to_string()).collect()
    }

    /// Nature splits into two P1 nodes P1 cannot tell apart; below one of
    /// them P2 moves with information that crosses back into the other.
    fn straddle() -> GameTree {
        let mut b = GameBuilder::new(2);
        b.nature(&h("/"), labels(&["l", "r"]), vec![rat(1, 2), rat(1, 2)]);
        b.prover(&h("/l"), 1, labels(&["a"]), Some("one".into()));
        b.prover(&h("/r"), 1, labels(&["a"]), Some("two".into()));
        b.prover(&h("/l/a"), 2, labels(&["x", "y"]), Some("k".into()));
        b.prover(&h("/r/a"), 2, labels(&["x", "y"]), Some("k".into()));
        for p in ["/l/a/x", "/l/a/y", "/r/a/x", "/r/a/y"] {
            b.terminal(&h(p), vec![zero(), zero()], 0);
        }
        b.build()
    }

    #[test]
    fn perfect_information_nodes_all_root_subforms() {
        let mut b = GameBuilder::new(2);
        b.prover(&h("/"), 1, labels(&["a", "b"]), None);
        b.prover(&h("/a"), 2, labels(&["x", "y"]), None);
        b.terminal(&h("/b"), vec![zero(), zero()], 0);
        b.terminal(&h("/a/x"), vec![zero(), zero()], 0);
        b.terminal(&h("/a/y"), vec![zero(), zero()], 0);
        let g = b.build();
        let sfs = find_subforms(&g).unwrap();
        assert_eq!(sfs.len(), 2);
        assert_eq!((sfs[0].id(&g), sfs[0].height), ("/a".to_string(), 1));
        assert_eq!((sfs[1].id(&g), sfs[1].height), ("/".to_string(), 2));
    }

    #[test]
    fn straddling_set_blocks_closure() {
        let g = straddle();
        let ids: Vec<String> = find_subforms(&g).unwrap().iter().map(|sf| sf.id(&g)).collect();
        assert_eq!(ids, vec!["/l/a,/r/a".to_string(), "/".to_string()]);
    }

    #[test]
    fn conditional_game_shapes() {
        let g = straddle();
        let sfs = find_subforms(&g).unwrap();
        let whole = sfs.iter().find(|sf| sf.id(&g) == "/").unwrap();
        let copy = conditional_game(&g, whole, &[rat(1, 1)]).unwrap();
        assert_eq!(copy.nodes().len(), g.nodes().len());
        assert_eq!(copy.info_sets(), g.info_sets());

        let inner = &sfs[0];
        let cg = conditional_game(&g, inner, &[rat(1, 2), rat(1, 2)]).unwrap();
        assert!(cg.has_perfect_recall());
        assert_eq!(cg.info_sets()[0].id(), "/h0,/h1");
        assert!(conditional_game(&g, inner, &[rat(1, 2)]).is_err());
    }

    #[test]
    fn conditional_game_averages_members() {
        let mut b = GameBuilder::new(1);
        b.nature(&h("/"), labels(&["l", "r"]), vec![rat(1, 3), rat(2, 3)]);
        for (side, v) in [("/l", zero()), ("/r", rat(1, 1))] {
            b.prover(&h(side), 1, labels(&["a"]), Some("k".into()));
            b.terminal(&h(&format!("{side}/a")), vec![v], 0);
        }
        let g = b.build();
        let sf = find_subforms(&g).unwrap().into_iter().find(|sf| sf.root == SubformRoot::Set(0)).unwrap();
        let cg = conditional_game(&g, &sf, &[rat(1, 2), rat(1, 2)]).unwrap();
        let s = StrategyProfile::first(&g);
        assert_eq!(expected_utilities(&cg, &StrategyProfile::first(&cg)).unwrap()[0], rat(1, 2));
        let direct = conditional_utility(&g, &s, PlayerId::Prover(1), &Anchor::Belief { set: 0, belief: vec![rat(1, 2), rat(1, 2)] }).unwrap();
        assert_eq!(direct, rat(1, 2));
    }

    #[test]
    fn conflicting_equilibria_have_no_dominant_one() {
        // P1's set spans both Nature branches, so P2's node roots no subform.
        // P1 is indifferent at his set; P2 prefers "x" only if P1 plays "a".
        // The two SSEs split the provers' preferences at the root.
        let mut b = GameBuilder::new(2);
        b.nature(&h("/"), labels(&["l", "m"]), vec![rat(1, 2), rat(1, 2)]);
        b.prover(&h("/l"), 2, labels(&["x", "y"]), None);
        b.terminal(&h("/l/y"), vec![rat(1, 2), rat(1, 4)], 0);
        for node in ["/l/x", "/m"] {
            b.prover(&h(node), 1, labels(&["a", "b"]), Some("j".into()));
        }
        b.terminal(&h("/l/x/a"), vec![zero(), rat(1, 2)], 0);
        b.terminal(&h("/l/x/b"), vec![zero(), zero()], 0);
        b.terminal(&h("/m/a"), vec![zero(), zero()], 0);
        b.terminal(&h("/m/b"), vec![zero(), zero()], 0);
        let g = b.build();
        let ids: Vec<String> = find_subforms(&g).unwrap().iter().map(|sf| sf.id(&g)).collect();
        assert_eq!(ids, vec!["/l/x,/m".to_string(), "/".to_string()]);
        let sses = enumerate_sse(&g).unwrap();
        assert_eq!(sses.len(), 2);
        assert_eq!(find_dominant_sse(&g).unwrap(), None);
        let verdict = is_dominant_sse(&g, &sses[0], &sses).unwrap();
        assert!(!verdict.dominant);
        assert!(verdict.trace[0].dominated_all);
        assert!(!verdict.trace[1].dominated_all);
    }

    #[test]
    fn single_sse_is_dominant_and_non_sse_rejected() {
        let mut b = GameBuilder::new(1);
        b.prover(&h("/"), 1, labels(&["a", "b"]), None);
        b.terminal(&h("/a"), vec![rat(1, 2)], 1);
        b.terminal(&h("/b"), vec![zero()], 0);
        let g = b.build();
        let sses = enumerate_sse(&g).unwrap();
        assert!(is_dominant_sse(&g, &sses[0], &sses).unwrap().dominant);
        let bad = StrategyProfile { choice: vec![1] };
        assert!(matches!(is_dominant_sse(&g, &bad, &sses), Err(Error::NotAnSse)));
        assert!(dominates_on_subform(&g, &sses[0], &bad, &find_subforms(&g).unwrap()[0]));
        assert!(!dominates_on_subform(&g, &bad, &sses[0], &find_subforms(&g).unwrap()[0]));
    }
}
