//! Seeded random games with perfect recall, for property campaigns.

use std::collections::HashMap;

use rand::Rng;

use crate::game::{GameBuilder, GameTree, History, StrategyProfile};
use crate::rational::{rat, Rational};

#[derive(Clone, Debug)]
pub struct RandomGameConfig {
    pub provers: usize,
    pub max_nodes: usize,
    pub max_depth: usize,
    pub max_actions: usize,
    /// Largest Nature support.
    pub nature_max_actions: usize,
    /// Chance that an interior node belongs to Nature.
    pub nature_share: f64,
    /// Allow a Nature node below another Nature node.
    pub nested_nature: bool,
    /// Chance that a prover sees a move made by someone else.
    pub visibility: f64,
    /// Payments are multiples of 1/(provers * grid).
    pub grid: i64,
}

impl Default for RandomGameConfig {
    fn default() -> Self {
        RandomGameConfig {
            provers: 2,
            max_nodes: 200,
            max_depth: 4,
            max_actions: 3,
            nature_max_actions: 3,
            nature_share: 0.3,
            nested_nature: true,
            visibility: 0.5,
            grid: 4,
        }
    }
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    cfg: &'a RandomGameConfig,
    builder: GameBuilder,
    /// Action count fixed per (prover, observation key).
    arity: HashMap<(usize, String), usize>,
    nodes: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn payment(&mut self) -> Rational {
        let d = self.cfg.grid;
        rat(self.rng.gen_range(-d..=d), d * self.cfg.provers as i64)
    }

    fn grow(&mut self, h: History, obs: Vec<Vec<String>>, nature_above: bool) {
        let remaining = self.cfg.max_nodes.saturating_sub(self.nodes);
        let widest = self.cfg.max_actions.max(self.cfg.nature_max_actions);
        let stop = h.len() >= self.cfg.max_depth || remaining < 1 + widest || (!h.is_empty() && self.rng.gen_bool(0.2));
        self.nodes += 1;
        if stop {
            let payments = (0..self.cfg.provers).map(|_| self.payment()).collect();
            let bit = self.rng.gen_range(0..2u8);
            self.builder.terminal(&h, payments, bit);
            return;
        }
        let nature_ok = self.cfg.nested_nature || !nature_above;
        let mover = if nature_ok && self.rng.gen_bool(self.cfg.nature_share) {
            None
        } else {
            Some(self.rng.gen_range(0..self.cfg.provers))
        };
        let (actions, key) = match mover {
            None => {
                let n = self.rng.gen_range(2..=self.cfg.nature_max_actions.max(2));
                let weights: Vec<i64> = (0..n).map(|_| self.rng.gen_range(1..=3)).collect();
                let total: i64 = weights.iter().sum();
                let labels: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
                self.builder.nature(&h, labels.clone(), weights.iter().map(|w| rat(*w, total)).collect());
                (labels, None)
            }
            Some(j) => {
                let key = obs[j].join(";");
                let max = self.cfg.max_actions;
                let n = *self.arity.entry((j, key.clone())).or_insert_with(|| self.rng.gen_range(1..=max));
                let labels: Vec<String> = (0..n).map(|i| format!("p{}{}", j + 1, (b'a' + i as u8) as char)).collect();
                self.builder.prover(&h, j + 1, labels.clone(), Some(key.clone()));
                (labels, Some((j, key)))
            }
        };
        let seen: Vec<bool> = (0..self.cfg.provers).map(|_| self.rng.gen_bool(self.cfg.visibility)).collect();
        for a in actions {
            let mut child_obs = obs.clone();
            for (i, o) in child_obs.iter_mut().enumerate() {
                match &key {
                    Some((j, k)) if *j == i => o.push(format!("{k}>{a}")),
                    _ if seen[i] => o.push(a.clone()),
                    _ => {}
                }
            }
            let mut child = h.clone();
            child.push(a);
            self.grow(child, child_obs, nature_above || mover.is_none());
        }
    }
}

pub fn random_game<R: Rng>(rng: &mut R, cfg: &RandomGameConfig) -> GameTree {
    let mut gen = Gen { rng, cfg, builder: GameBuilder::new(cfg.provers), arity: HashMap::new(), nodes: 0 };
    gen.grow(Vec::new(), vec![Vec::new(); cfg.provers], false);
    gen.builder.build()
}

pub fn random_profile<R: Rng>(rng: &mut R, game: &GameTree) -> StrategyProfile {
    StrategyProfile { choice: game.info_sets().iter().map(|s| rng.gen_range(0..s.actions.len())).collect() }
}
