//! Extensive-form games with imperfect information: structure, validation and
//! expected utilities under pure strategy profiles.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{fmt_rational, one, sum, zero, Rational};

pub type History = Vec<String>;
pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlayerId {
    Nature,
    /// 1-based prover index.
    Prover(usize),
}

impl PlayerId {
    pub fn prover_index(self) -> Option<usize> {
        match self {
            PlayerId::Prover(i) => Some(i),
            PlayerId::Nature => None,
        }
    }

    pub fn parse(text: &str) -> Result<PlayerId> {
        if text == "nature" {
            return Ok(PlayerId::Nature);
        }
        text.strip_prefix('P')
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&i| i >= 1)
            .map(PlayerId::Prover)
            .ok_or_else(|| Error::Instance(format!("unknown player {text:?}")))
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayerId::Nature => write!(f, "nature"),
            PlayerId::Prover(i) => write!(f, "P{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeInfo {
    Decision {
        player: PlayerId,
        actions: Vec<String>,
        /// Present iff `player` is Nature.
        nature_dist: Option<Vec<Rational>>,
    },
    Terminal {
        payments: Vec<Rational>,
        answer_bit: u8,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InformationSet {
    pub owner: PlayerId,
    /// Sorted by path text; this is also the order of belief vectors.
    pub members: Vec<History>,
    pub actions: Vec<String>,
}

impl InformationSet {
    /// Canonical identifier: member paths joined with `,`.
    pub fn id(&self) -> String {
        self.members.iter().map(|h| path_of(h)).collect::<Vec<_>>().join(",")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub history: Option<String>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.history {
            Some(h) => write!(f, "{h}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

pub type ValidationReport = Vec<Violation>;

fn violation(history: Option<&History>, message: impl Into<String>) -> Violation {
    Violation { history: history.map(|h| path_of(h)), message: message.into() }
}

pub fn path_of(h: &[String]) -> String {
    format!("/{}", h.join("/"))
}

pub fn parse_path(text: &str) -> Result<History> {
    let rest = text
        .strip_prefix('/')
        .ok_or_else(|| Error::Instance(format!("history path {text:?} must start with '/'")))?;
    if rest.is_empty() {
        return Ok(Vec::new());
    }
    rest.split('/')
        .map(|label| {
            if label.is_empty() {
                Err(Error::Instance(format!("empty action label in {text:?}")))
            } else {
                Ok(label.to_string())
            }
        })
        .collect()
}

pub fn valid_label(label: &str) -> bool {
    !label.is_empty() && !label.contains('/') && !label.contains(',')
}

#[derive(Clone, Debug)]
pub struct Node {
    pub history: History,
    pub info: NodeInfo,
    pub parent: Option<NodeId>,
    /// Child per action, `None` when the child history is missing.
    pub children: Vec<Option<NodeId>>,
    pub depth: usize,
    /// Exclusive end of this node's subtree in preorder.
    pub end: NodeId,
}

impl Node {
    pub fn is_terminal(&self) -> bool {
        matches!(self.info, NodeInfo::Terminal { .. })
    }

    pub fn player(&self) -> Option<PlayerId> {
        match &self.info {
            NodeInfo::Decision { player, .. } => Some(*player),
            NodeInfo::Terminal { .. } => None,
        }
    }

    pub fn actions(&self) -> &[String] {
        match &self.info {
            NodeInfo::Decision { actions, .. } => actions,
            NodeInfo::Terminal { .. } => &[],
        }
    }

    pub fn nature_dist(&self) -> Option<&[Rational]> {
        match &self.info {
            NodeInfo::Decision { nature_dist: Some(d), .. } => Some(d),
            _ => None,
        }
    }

    pub fn payments(&self) -> Option<&[Rational]> {
        match &self.info {
            NodeInfo::Terminal { payments, .. } => Some(payments),
            _ => None,
        }
    }

    pub fn answer_bit(&self) -> Option<u8> {
        match &self.info {
            NodeInfo::Terminal { answer_bit, .. } => Some(*answer_bit),
            _ => None,
        }
    }

    pub fn child(&self, action: usize) -> NodeId {
        self.children[action].expect("child of a valid game")
    }
}

/// An immutable game. Construction never fails: structural problems are kept
/// and surfaced by [`validate_game`]; analyses refuse invalid games.
#[derive(Clone, Debug)]
pub struct GameTree {
    provers: usize,
    nodes: Vec<Node>,
    index: HashMap<History, NodeId>,
    info_sets: Vec<InformationSet>,
    set_nodes: Vec<Vec<NodeId>>,
    set_of: Vec<Option<usize>>,
    set_index: HashMap<String, usize>,
    problems: Vec<Violation>,
    report: ValidationReport,
    recall: ValidationReport,
}

impl GameTree {
    pub fn new(
        provers: usize,
        nodes: BTreeMap<History, NodeInfo>,
        sets: Vec<(PlayerId, Vec<History>)>,
    ) -> GameTree {
        let mut problems = Vec::new();
        let mut arena: Vec<Node> = Vec::with_capacity(nodes.len());
        let mut index = HashMap::new();

        if nodes.contains_key(&Vec::new()) {
            // Iterative preorder walk following action order.
            let mut stack: Vec<(History, Option<NodeId>)> = vec![(Vec::new(), None)];
            while let Some((h, parent)) = stack.pop() {
                let info = nodes[&h].clone();
                let id = arena.len();
                let depth = h.len();
                if let Some(p) = parent {
                    let label = h.last().unwrap();
                    let slot = arena[p].actions().iter().position(|a| a == label).unwrap();
                    arena[p].children[slot] = Some(id);
                }
                let n_actions = match &info {
                    NodeInfo::Decision { actions, .. } => actions.len(),
                    NodeInfo::Terminal { .. } => 0,
                };
                index.insert(h.clone(), id);
                arena.push(Node { history: h.clone(), info, parent, children: vec![None; n_actions], depth, end: 0 });
                let actions: Vec<String> = arena[id].actions().to_vec();
                let mut seen = std::collections::HashSet::new();
                for a in actions.iter().rev() {
                    if !seen.insert(a.clone()) {
                        continue;
                    }
                    let mut child = h.clone();
                    child.push(a.clone());
                    if nodes.contains_key(&child) {
                        stack.push((child, Some(id)));
                    } else {
                        problems.push(violation(Some(&h), format!("action {a:?} has no child node")));
                    }
                }
            }
            // Subtree ends: a node's subtree is contiguous in preorder.
            for id in (0..arena.len()).rev() {
                let end = arena[id]
                    .children
                    .iter()
                    .flatten()
                    .map(|&c| arena[c].end)
                    .max()
                    .unwrap_or(id + 1)
                    .max(id + 1);
                arena[id].end = end;
            }
        } else if !nodes.is_empty() {
            problems.push(violation(None, "game has no root node"));
        } else {
            problems.push(violation(None, "game has no nodes"));
        }

        for h in nodes.keys() {
            if index.contains_key(h) {
                continue;
            }
            let parent = &h[..h.len().saturating_sub(1)];
            if !h.is_empty() && !nodes.contains_key(parent) {
                problems.push(violation(Some(h), "parent history is missing"));
            } else {
                problems.push(violation(Some(h), "node is not reachable from the root"));
            }
        }

        // Information sets.
        let mut set_of = vec![None; arena.len()];
        let mut raw_sets: Vec<(InformationSet, Vec<NodeId>)> = Vec::new();
        for (owner, members) in sets {
            let mut members = members;
            members.sort_by_key(|h| path_of(h));
            members.dedup();
            let ids: Vec<NodeId> = members.iter().filter_map(|h| index.get(h).copied()).collect();
            let actions = ids.first().map(|&n| arena[n].actions().to_vec()).unwrap_or_default();
            raw_sets.push((InformationSet { owner, members, actions }, ids));
        }
        raw_sets.sort_by_key(|(_, ids)| ids.iter().copied().min().unwrap_or(usize::MAX));
        let mut info_sets = Vec::new();
        let mut set_nodes = Vec::new();
        let mut set_index = HashMap::new();
        for (k, (set, ids)) in raw_sets.into_iter().enumerate() {
            for h in &set.members {
                match index.get(h) {
                    None => problems.push(violation(Some(h), format!("information set {} names an unknown history", set.id()))),
                    Some(&n) => {
                        if let Some(prev) = set_of[n] {
                            let prev_set: &InformationSet = &info_sets[prev];
                            problems.push(violation(Some(h), format!("history is in two information sets ({} and {})", prev_set.id(), set.id())));
                        } else {
                            set_of[n] = Some(k);
                        }
                    }
                }
            }
            set_index.insert(set.id(), k);
            info_sets.push(set);
            set_nodes.push(ids);
        }

        let mut tree = GameTree {
            provers,
            nodes: arena,
            index,
            info_sets,
            set_nodes,
            set_of,
            set_index,
            problems,
            report: Vec::new(),
            recall: Vec::new(),
        };
        tree.report = tree.compute_validation();
        if tree.report.is_empty() {
            tree.recall = tree.compute_recall();
        }
        tree
    }

    /// Same tree with some Nature distributions replaced.
    pub fn with_nature_distributions(&self, dists: &[(NodeId, Vec<Rational>)]) -> GameTree {
        let mut g = self.clone();
        for (n, d) in dists {
            if let NodeInfo::Decision { nature_dist: Some(x), .. } = &mut g.nodes[*n].info {
                *x = d.clone();
            }
        }
        g.report = g.compute_validation();
        g.recall = if g.report.is_empty() { g.compute_recall() } else { Vec::new() };
        g
    }

    /// Nodes keyed by history, as accepted by [`GameTree::new`].
    pub fn node_map(&self) -> BTreeMap<History, NodeInfo> {
        self.nodes.iter().map(|n| (n.history.clone(), n.info.clone())).collect()
    }

    pub fn provers(&self) -> usize {
        self.provers
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node_id(&self, h: &[String]) -> Result<NodeId> {
        self.index.get(h).copied().ok_or_else(|| Error::UnknownHistory(path_of(h)))
    }

    pub fn info_sets(&self) -> &[InformationSet] {
        &self.info_sets
    }

    pub fn set_nodes(&self, set: usize) -> &[NodeId] {
        &self.set_nodes[set]
    }

    pub fn set_of(&self, node: NodeId) -> Option<usize> {
        self.set_of[node]
    }

    pub fn set_by_id(&self, id: &str) -> Result<usize> {
        self.set_index.get(id).copied().ok_or_else(|| Error::UnknownInfoSet(id.to_string()))
    }

    /// Is `desc` in the subtree rooted at `anc` (inclusive)?
    pub fn is_descendant(&self, anc: NodeId, desc: NodeId) -> bool {
        anc <= desc && desc < self.nodes[anc].end
    }

    pub fn terminals(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&n| self.nodes[n].is_terminal())
    }

    /// Number of pure strategy profiles, Π |A(I)|.
    pub fn profile_count(&self) -> num_bigint::BigUint {
        self.info_sets.iter().fold(num_bigint::BigUint::one(), |acc, s| acc * s.actions.len())
    }

    pub fn is_valid(&self) -> bool {
        self.report.is_empty()
    }

    pub fn has_perfect_recall(&self) -> bool {
        self.report.is_empty() && self.recall.is_empty()
    }

    /// Fails unless the game passed validation.
    pub fn require_valid(&self) -> Result<()> {
        match self.report.first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidGame(v.to_string())),
        }
    }

    pub fn require_perfect_recall(&self) -> Result<()> {
        self.require_valid()?;
        match self.recall.first() {
            None => Ok(()),
            Some(v) => Err(Error::ImperfectRecall(v.to_string())),
        }
    }

    pub fn check_prover(&self, j: PlayerId) -> Result<usize> {
        match j {
            PlayerId::Prover(i) if i >= 1 && i <= self.provers => Ok(i - 1),
            _ => Err(Error::NotAProver(j.to_string())),
        }
    }

    fn compute_validation(&self) -> ValidationReport {
        let mut out = self.problems.clone();
        for node in &self.nodes {
            let h = Some(&node.history);
            match &node.info {
                NodeInfo::Decision { player, actions, nature_dist } => {
                    if actions.is_empty() {
                        out.push(violation(h, "decision node has no actions"));
                    }
                    let mut seen = std::collections::HashSet::new();
                    for a in actions {
                        if !valid_label(a) {
                            out.push(violation(h, format!("invalid action label {a:?}")));
                        }
                        if !seen.insert(a) {
                            out.push(violation(h, format!("duplicate action label {a:?}")));
                        }
                    }
                    match (player, nature_dist) {
                        (PlayerId::Nature, None) => out.push(violation(h, "nature node has no distribution")),
                        (PlayerId::Nature, Some(dist)) => {
                            if dist.len() != actions.len() {
                                out.push(violation(h, format!("nature distribution has {} entries for {} actions", dist.len(), actions.len())));
                            }
                            if dist.iter().any(|p| p.is_negative()) {
                                out.push(violation(h, "nature distribution has a negative probability"));
                            }
                            let total = sum(dist);
                            if !total.is_one() {
                                out.push(violation(h, format!("nature distribution sums to {}", fmt_rational(&total))));
                            }
                        }
                        (PlayerId::Prover(i), dist) => {
                            if dist.is_some() {
                                out.push(violation(h, "prover node carries a nature distribution"));
                            }
                            if *i < 1 || *i > self.provers {
                                out.push(violation(h, format!("player P{i} is not one of the {} provers", self.provers)));
                            }
                            if self.set_of[self.index[&node.history]].is_none() {
                                out.push(violation(h, "prover decision node is in no information set"));
                            }
                        }
                    }
                }
                NodeInfo::Terminal { payments, answer_bit } => {
                    if payments.len() != self.provers {
                        out.push(violation(h, format!("terminal has {} payments for {} provers", payments.len(), self.provers)));
                    }
                    for p in payments {
                        if p.abs() > one() {
                            out.push(violation(h, format!("payment {} outside [-1,1]", fmt_rational(p))));
                        }
                    }
                    let total = sum(payments);
                    if total.abs() > one() {
                        out.push(violation(h, format!("total payment {} outside [-1,1]", fmt_rational(&total))));
                    }
                    if *answer_bit > 1 {
                        out.push(violation(h, format!("answer bit {answer_bit} is not 0 or 1")));
                    }
                }
            }
        }
        for (k, set) in self.info_sets.iter().enumerate() {
            let id = set.id();
            if set.members.is_empty() {
                out.push(violation(None, "information set has no members"));
            }
            if set.owner == PlayerId::Nature {
                out.push(violation(None, format!("information set {id} is owned by nature")));
            }
            for &n in &self.set_nodes[k] {
                let node = &self.nodes[n];
                match node.player() {
                    Some(p) if p == set.owner => {}
                    _ => out.push(violation(Some(&node.history), format!("member of information set {id} is not a decision node of {}", set.owner))),
                }
                if node.actions() != set.actions.as_slice() {
                    out.push(violation(Some(&node.history), format!("action list differs from the rest of information set {id}")));
                }
            }
        }
        out
    }

    /// Perfect recall: members of one set share the owner's sequence of
    /// (information set, action) experiences.
    fn compute_recall(&self) -> ValidationReport {
        let mut out = Vec::new();
        for (k, set) in self.info_sets.iter().enumerate() {
            let owner = set.owner;
            let mut reference: Option<Vec<(usize, usize)>> = None;
            for &n in &self.set_nodes[k] {
                let exp = self.experience(n, owner);
                match &reference {
                    None => reference = Some(exp),
                    Some(r) if *r != exp => {
                        out.push(violation(None, format!("information set {} mixes histories with different own experience of {}", set.id(), owner)));
                        break;
                    }
                    _ => {}
                }
            }
        }
        out
    }

    fn experience(&self, n: NodeId, owner: PlayerId) -> Vec<(usize, usize)> {
        let mut seq = Vec::new();
        let mut cur = n;
        while let Some(p) = self.nodes[cur].parent {
            if self.nodes[p].player() == Some(owner) {
                let label = self.nodes[cur].history.last().unwrap();
                let a = self.nodes[p].actions().iter().position(|x| x == label).unwrap();
                seq.push((self.set_of[p].unwrap_or(usize::MAX), a));
            }
            cur = p;
        }
        seq.reverse();
        seq
    }
}

pub fn validate_game(game: &GameTree) -> ValidationReport {
    game.report.clone()
}

pub fn check_perfect_recall(game: &GameTree) -> ValidationReport {
    game.recall.clone()
}

/// Convenience constructor for protocol builders: prover nodes that share a
/// key form one information set; nodes without a key get a singleton set.
#[derive(Default)]
pub struct GameBuilder {
    provers: usize,
    nodes: BTreeMap<History, NodeInfo>,
    keyed: BTreeMap<(PlayerId, String), Vec<History>>,
}

impl GameBuilder {
    pub fn new(provers: usize) -> Self {
        GameBuilder { provers, ..Default::default() }
    }

    pub fn prover(&mut self, h: &[String], prover: usize, actions: Vec<String>, key: Option<String>) {
        let player = PlayerId::Prover(prover);
        let key = key.unwrap_or_else(|| format!("#{}", path_of(h)));
        self.keyed.entry((player, key)).or_default().push(h.to_vec());
        self.nodes.insert(h.to_vec(), NodeInfo::Decision { player, actions, nature_dist: None });
    }

    pub fn nature(&mut self, h: &[String], actions: Vec<String>, dist: Vec<Rational>) {
        self.nodes.insert(h.to_vec(), NodeInfo::Decision { player: PlayerId::Nature, actions, nature_dist: Some(dist) });
    }

    pub fn terminal(&mut self, h: &[String], payments: Vec<Rational>, answer_bit: u8) {
        self.nodes.insert(h.to_vec(), NodeInfo::Terminal { payments, answer_bit });
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn build(self) -> GameTree {
        let sets = self.keyed.into_iter().map(|((p, _), members)| (p, members)).collect();
        GameTree::new(self.provers, self.nodes, sets)
    }
}

pub fn child_history(h: &[String], a: &str) -> History {
    let mut c = h.to_vec();
    c.push(a.to_string());
    c
}

/// One action index per information set, in the game's canonical set order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrategyProfile {
    pub choice: Vec<usize>,
}

impl StrategyProfile {
    /// First action everywhere.
    pub fn first(game: &GameTree) -> StrategyProfile {
        StrategyProfile { choice: vec![0; game.info_sets().len()] }
    }

    pub fn from_labels(game: &GameTree, labels: &BTreeMap<String, String>) -> Result<StrategyProfile> {
        let mut choice = Vec::with_capacity(game.info_sets().len());
        for set in game.info_sets() {
            let id = set.id();
            let label = labels.get(&id).ok_or_else(|| Error::MissingChoice(id.clone()))?;
            let a = set
                .actions
                .iter()
                .position(|x| x == label)
                .ok_or_else(|| Error::UnknownAction { set: id.clone(), action: label.clone() })?;
            choice.push(a);
        }
        for id in labels.keys() {
            game.set_by_id(id)?;
        }
        Ok(StrategyProfile { choice })
    }

    pub fn to_labels(&self, game: &GameTree) -> BTreeMap<String, String> {
        game.info_sets()
            .iter()
            .zip(&self.choice)
            .map(|(set, &a)| (set.id(), set.actions[a].clone()))
            .collect()
    }

    pub fn action_at(&self, game: &GameTree, node: NodeId) -> Option<usize> {
        game.set_of(node).map(|k| self.choice[k])
    }

    /// Sets a choice by set id and action label.
    pub fn set(&mut self, game: &GameTree, set_id: &str, label: &str) -> Result<()> {
        let k = game.set_by_id(set_id)?;
        let a = game.info_sets()[k]
            .actions
            .iter()
            .position(|x| x == label)
            .ok_or_else(|| Error::UnknownAction { set: set_id.to_string(), action: label.to_string() })?;
        self.choice[k] = a;
        Ok(())
    }

    /// Sets the choice of the information set containing history `h`.
    pub fn set_at(&mut self, game: &GameTree, h: &[String], label: &str) -> Result<()> {
        let n = game.node_id(h)?;
        let k = game.set_of(n).ok_or_else(|| Error::UnknownInfoSet(path_of(h)))?;
        let id = game.info_sets()[k].id();
        self.set(game, &id, label)
    }
}

/// Probability of each node under `s` and Nature, indexed by node id.
pub fn reach_probabilities(game: &GameTree, s: &StrategyProfile) -> Vec<Rational> {
    let mut reach = vec![zero(); game.nodes().len()];
    if reach.is_empty() {
        return reach;
    }
    reach[0] = one();
    for n in 0..game.nodes().len() {
        if reach[n].is_zero() {
            continue;
        }
        let node = game.node(n);
        match &node.info {
            NodeInfo::Terminal { .. } => {}
            NodeInfo::Decision { nature_dist: Some(dist), .. } => {
                for (a, p) in dist.iter().enumerate() {
                    reach[node.child(a)] = &reach[n] * p;
                }
            }
            NodeInfo::Decision { .. } => {
                let a = s.choice[game.set_of(n).expect("prover node in a set")];
                reach[node.child(a)] = reach[n].clone();
            }
        }
    }
    reach
}

pub fn reach_probability(game: &GameTree, s: &StrategyProfile, h: &[String]) -> Result<Rational> {
    game.require_valid()?;
    let target = game.node_id(h)?;
    let mut p = one();
    let mut cur = target;
    while let Some(parent) = game.node(cur).parent {
        let node = game.node(parent);
        let a = node.children.iter().position(|c| *c == Some(cur)).unwrap();
        match node.nature_dist() {
            Some(dist) => p *= &dist[a],
            None => {
                if s.choice[game.set_of(parent).unwrap()] != a {
                    return Ok(zero());
                }
            }
        }
        cur = parent;
    }
    Ok(p)
}

/// Expected payment vector of every node's subtree under `s` (all provers).
pub fn node_values(game: &GameTree, s: &StrategyProfile) -> Vec<Vec<Rational>> {
    let mut values: Vec<Vec<Rational>> = vec![Vec::new(); game.nodes().len()];
    for n in (0..game.nodes().len()).rev() {
        values[n] = node_value_from(game, s, n, &values);
    }
    values
}

fn node_value_from(game: &GameTree, s: &StrategyProfile, n: NodeId, values: &[Vec<Rational>]) -> Vec<Rational> {
    let node = game.node(n);
    match &node.info {
        NodeInfo::Terminal { payments, .. } => payments.clone(),
        NodeInfo::Decision { nature_dist: Some(dist), .. } => {
            let mut acc = vec![zero(); game.provers()];
            for (a, p) in dist.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                for (j, v) in values[node.child(a)].iter().enumerate() {
                    acc[j] += p * v;
                }
            }
            acc
        }
        NodeInfo::Decision { .. } => {
            let a = s.choice[game.set_of(n).unwrap()];
            values[node.child(a)].clone()
        }
    }
}

/// Payment vector of the subtree at `n` under `s`, without evaluating the
/// rest of the tree.
pub fn subtree_value(game: &GameTree, s: &StrategyProfile, n: NodeId) -> Vec<Rational> {
    let node = game.node(n);
    match &node.info {
        NodeInfo::Terminal { payments, .. } => payments.clone(),
        NodeInfo::Decision { nature_dist: Some(dist), .. } => {
            let mut acc = vec![zero(); game.provers()];
            for (a, p) in dist.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                for (j, v) in subtree_value(game, s, node.child(a)).iter().enumerate() {
                    acc[j] += p * v;
                }
            }
            acc
        }
        NodeInfo::Decision { .. } => subtree_value(game, s, node.child(s.choice[game.set_of(n).unwrap()])),
    }
}

pub fn expected_utilities(game: &GameTree, s: &StrategyProfile) -> Result<Vec<Rational>> {
    game.require_valid()?;
    Ok(subtree_value(game, s, game.root()))
}

pub fn expected_utility(game: &GameTree, s: &StrategyProfile, j: PlayerId) -> Result<Rational> {
    let idx = game.check_prover(j)?;
    Ok(expected_utilities(game, s)?.swap_remove(idx))
}

/// Where a conditional utility is evaluated.
#[derive(Clone, Debug)]
pub enum Anchor {
    History(History),
    /// Information set (by index) with a belief over its members, in member order.
    Belief { set: usize, belief: Vec<Rational> },
}

pub fn check_distribution(belief: &[Rational], expected_len: usize) -> Result<()> {
    if belief.len() != expected_len {
        return Err(Error::BadBelief(format!("{} entries for {} members", belief.len(), expected_len)));
    }
    if belief.iter().any(|p| p.is_negative()) {
        return Err(Error::BadBelief("negative entry".into()));
    }
    let total = sum(belief);
    if !total.is_one() {
        return Err(Error::BadBelief(format!("sums to {}", fmt_rational(&total))));
    }
    Ok(())
}

pub fn conditional_utility(game: &GameTree, s: &StrategyProfile, j: PlayerId, anchor: &Anchor) -> Result<Rational> {
    game.require_valid()?;
    let idx = game.check_prover(j)?;
    match anchor {
        Anchor::History(h) => {
            let n = game.node_id(h)?;
            Ok(subtree_value(game, s, n).swap_remove(idx))
        }
        Anchor::Belief { set, belief } => {
            let members = game
                .info_sets()
                .get(*set)
                .ok_or_else(|| Error::UnknownInfoSet(format!("#{set}")))?
                .members
                .clone();
            check_distribution(belief, members.len())?;
            let mut acc = zero();
            for (h, p) in members.iter().zip(belief) {
                if p.is_zero() {
                    continue;
                }
                let n = game.node_id(h)?;
                acc += p * &subtree_value(game, s, n)[idx];
            }
            Ok(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn h(path: &str) -> History {
        parse_path(path).unwrap()
    }

    fn coin_game() -> GameTree {
        let mut b = GameBuilder::new(1);
        b.nature(&h("/"), vec!["H".into(), "T".into()], vec![rat(1, 2), rat(1, 2)]);
        b.prover(&h("/H"), 1, vec!["a".into(), "b".into()], Some("x".into()));
        b.prover(&h("/T"), 1, vec!["a".into(), "b".into()], Some("x".into()));
        b.terminal(&h("/H/a"), vec![rat(0, 1)], 0);
        b.terminal(&h("/H/b"), vec![rat(1, 1)], 1);
        b.terminal(&h("/T/a"), vec![rat(1, 1)], 0);
        b.terminal(&h("/T/b"), vec![rat(0, 1)], 1);
        b.build()
    }

    #[test]
    fn single_terminal_is_valid() {
        let mut nodes = BTreeMap::new();
        nodes.insert(Vec::new(), NodeInfo::Terminal { payments: vec![rat(0, 1)], answer_bit: 0 });
        let g = GameTree::new(1, nodes, vec![]);
        assert!(validate_game(&g).is_empty());
        assert!(check_perfect_recall(&g).is_empty());
    }

    #[test]
    fn nature_sum_reported() {
        let mut b = GameBuilder::new(1);
        b.nature(&h("/"), vec!["x".into(), "y".into()], vec![rat(1, 2), rat(1, 3)]);
        b.terminal(&h("/x"), vec![rat(0, 1)], 0);
        b.terminal(&h("/y"), vec![rat(0, 1)], 0);
        let report = validate_game(&b.build());
        assert!(report.iter().any(|v| v.message == "nature distribution sums to 5/6"), "{report:?}");
    }

    #[test]
    fn total_budget_reported() {
        let mut nodes = BTreeMap::new();
        nodes.insert(Vec::new(), NodeInfo::Terminal { payments: vec![rat(3, 4), rat(3, 4)], answer_bit: 0 });
        let report = validate_game(&GameTree::new(2, nodes, vec![]));
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].message, "total payment 3/2 outside [-1,1]");
    }

    #[test]
    fn missing_parent_reported() {
        let mut nodes = BTreeMap::new();
        nodes.insert(Vec::new(), NodeInfo::Terminal { payments: vec![rat(0, 1)], answer_bit: 0 });
        nodes.insert(h("/a/b"), NodeInfo::Terminal { payments: vec![rat(0, 1)], answer_bit: 0 });
        let report = validate_game(&GameTree::new(1, nodes, vec![]));
        assert!(report.iter().any(|v| v.message == "parent history is missing"));
    }

    #[test]
    fn reach_and_utilities() {
        let g = coin_game();
        let s = StrategyProfile { choice: vec![1] };
        assert_eq!(reach_probability(&g, &s, &h("/")).unwrap(), rat(1, 1));
        assert_eq!(reach_probability(&g, &s, &h("/H/b")).unwrap(), rat(1, 2));
        assert_eq!(reach_probability(&g, &s, &h("/H/a")).unwrap(), rat(0, 1));
        assert_eq!(expected_utility(&g, &s, PlayerId::Prover(1)).unwrap(), rat(1, 2));
        assert!(reach_probability(&g, &s, &h("/Q")).is_err());
    }

    #[test]
    fn conditional_utility_anchors() {
        let g = coin_game();
        let s = StrategyProfile { choice: vec![1] };
        let p1 = PlayerId::Prover(1);
        let root = conditional_utility(&g, &s, p1, &Anchor::History(vec![])).unwrap();
        assert_eq!(root, expected_utility(&g, &s, p1).unwrap());
        let point = conditional_utility(&g, &s, p1, &Anchor::History(h("/T"))).unwrap();
        assert_eq!(point, rat(0, 1));
        let avg = conditional_utility(&g, &s, p1, &Anchor::Belief { set: 0, belief: vec![rat(1, 2), rat(1, 2)] }).unwrap();
        assert_eq!(avg, rat(1, 2));
        let bad = conditional_utility(&g, &s, p1, &Anchor::Belief { set: 0, belief: vec![rat(1, 2), rat(1, 3)] });
        assert!(matches!(bad, Err(Error::BadBelief(_))));
    }

    #[test]
    fn imperfect_recall_detected() {
        // P1 moves, then cannot tell which of his own actions he took.
        let mut b = GameBuilder::new(1);
        b.prover(&h("/"), 1, vec!["l".into(), "r".into()], None);
        b.prover(&h("/l"), 1, vec!["a".into(), "b".into()], Some("forget".into()));
        b.prover(&h("/r"), 1, vec!["a".into(), "b".into()], Some("forget".into()));
        for p in ["/l/a", "/l/b", "/r/a", "/r/b"] {
            b.terminal(&h(p), vec![rat(0, 1)], 0);
        }
        let g = b.build();
        assert!(validate_game(&g).is_empty());
        let report = check_perfect_recall(&g);
        assert_eq!(report.len(), 1);
        assert!(report[0].message.contains("/l,/r"));
    }

    #[test]
    fn set_ids_are_sorted_paths() {
        let g = coin_game();
        assert_eq!(g.info_sets()[0].id(), "/H,/T");
        assert_eq!(g.set_by_id("/H,/T").unwrap(), 0);
    }
}
