//! Single-round NEXP protocol: the first prover announces the answer bit; on
//! "1" both provers run the MIP and are paid by its verdict.

use crate::error::{Error, Result};
use crate::game::{child_history, GameBuilder, GameTree, History, StrategyProfile};
use crate::protocols::mip::MipBlackbox;
use crate::protocols::ProtocolGame;
use crate::rational::{rat, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NexpOutcome {
    /// The claimant answered 0 and no MIP ran.
    Declined,
    Accepted,
    Rejected,
}

/// Unscaled payments to the claimant and the second prover.
pub fn nexp_reward(outcome: NexpOutcome) -> (Rational, Rational) {
    match outcome {
        NexpOutcome::Declined => (rat(1, 2), rat(1, 2)),
        NexpOutcome::Accepted => (rat(1, 1), rat(1, 1)),
        NexpOutcome::Rejected => (rat(-1, 1), rat(-1, 1)),
    }
}

/// Where a NEXP subgame lives inside a larger game.
pub(crate) struct Embedding<'a> {
    pub at: History,
    pub claimant: usize,
    pub second: usize,
    /// Prefix of every information-set key, so distinct embeddings never share sets.
    pub key: String,
    pub mip: &'a MipBlackbox,
}

impl Embedding<'_> {
    fn claim_key(&self) -> String {
        format!("{}:claim", self.key)
    }

    fn q1_key(&self, q1: &str) -> String {
        format!("{}:q1:{q1}", self.key)
    }

    fn q2_key(&self, q2: &str) -> String {
        format!("{}:q2:{q2}", self.key)
    }

    /// Adds the subgame; `leaf` maps (claimed bit, outcome) to payments and answer bit.
    pub fn add(&self, b: &mut GameBuilder, leaf: &dyn Fn(u8, NexpOutcome) -> (Vec<Rational>, u8)) {
        b.prover(&self.at, self.claimant, vec!["0".into(), "1".into()], Some(self.claim_key()));
        let (pay, bit) = leaf(0, NexpOutcome::Declined);
        b.terminal(&child_history(&self.at, "0"), pay, bit);
        let run = child_history(&self.at, "1");
        let labels: Vec<String> = (0..self.mip.queries.len()).map(|i| format!("r{i}")).collect();
        b.nature(&run, labels.clone(), self.mip.queries.iter().map(|q| q.prob.clone()).collect());
        for (i, q) in self.mip.queries.iter().enumerate() {
            let h1 = child_history(&run, &labels[i]);
            let first = &self.mip.answers1[&q.q1];
            let second = &self.mip.answers2[&q.q2];
            b.prover(&h1, self.claimant, first.clone(), Some(self.q1_key(&q.q1)));
            for (x, a1) in first.iter().enumerate() {
                let h2 = child_history(&h1, a1);
                b.prover(&h2, self.second, second.clone(), Some(self.q2_key(&q.q2)));
                for (y, a2) in second.iter().enumerate() {
                    let outcome = if self.mip.accepts(i, x, y) { NexpOutcome::Accepted } else { NexpOutcome::Rejected };
                    let (pay, bit) = leaf(1, outcome);
                    b.terminal(&child_history(&h2, a2), pay, bit);
                }
            }
        }
    }

    /// Honest play inside the subgame: claim `claim`, answer with the
    /// acceptance-maximizing MIP strategies.
    pub fn set_honest(&self, game: &GameTree, s: &mut StrategyProfile, claim: u8) -> Result<()> {
        let (_, s1, s2) = self.mip.best_strategies()?;
        s.set_at(game, &self.at, if claim == 1 { "1" } else { "0" })?;
        let run = child_history(&self.at, "1");
        for (i, q) in self.mip.queries.iter().enumerate() {
            let h1 = child_history(&run, &format!("r{i}"));
            let a1 = &self.mip.answers1[&q.q1][s1[&q.q1]];
            s.set_at(game, &h1, a1)?;
            s.set_at(game, &child_history(&h1, a1), &self.mip.answers2[&q.q2][s2[&q.q2]])?;
        }
        Ok(())
    }
}

/// Whether the instance behind `mip` is in the language: some strategy pair
/// makes the verifier accept surely.
pub fn in_language(mip: &MipBlackbox) -> Result<bool> {
    Ok(mip.max_acceptance()? == rat(1, 1))
}

pub fn nexp_scale() -> Rational {
    rat(1, 2)
}

pub fn build_nexp_protocol(mip: &MipBlackbox) -> Result<ProtocolGame> {
    if mip.queries.is_empty() {
        return Err(Error::Instance("MIP has no queries".into()));
    }
    let scale = nexp_scale();
    let embedding = Embedding { at: Vec::new(), claimant: 1, second: 2, key: "nexp".into(), mip };
    let mut b = GameBuilder::new(2);
    embedding.add(&mut b, &|c, outcome| {
        let (r1, r2) = nexp_reward(outcome);
        (vec![r1 * &scale, r2 * &scale], c)
    });
    let game = b.build();
    let bit = u8::from(in_language(mip)?);
    let mut honest = StrategyProfile::first(&game);
    embedding.set_honest(&game, &mut honest, bit)?;
    Ok(ProtocolGame { game, honest, correct_bit: bit, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::is_sse;
    use crate::game::expected_utilities;
    use crate::protocols::mip::{toy_clause_variable_mip, toy_lottery_mip, Cnf};

    #[test]
    fn lying_on_a_lottery_costs_five_sixths() {
        let built = build_nexp_protocol(&toy_lottery_mip(3).unwrap()).unwrap();
        assert_eq!(built.correct_bit, 0);
        let g = &built.game;
        assert!(g.is_valid() && g.has_perfect_recall());
        let honest = expected_utilities(g, &built.honest).unwrap();
        assert_eq!(built.unscaled(&honest[0]), rat(1, 2));
        let mut lie = built.honest.clone();
        lie.set_at(g, &[], "1").unwrap();
        assert_eq!(built.unscaled(&expected_utilities(g, &lie).unwrap()[0]), rat(-1, 3));
        assert!(is_sse(g, &built.honest).unwrap().verdict);
    }

    #[test]
    fn satisfiable_instance_claims_one() {
        let mip = toy_clause_variable_mip(&Cnf::new(vec![vec![1]]).unwrap(), 1).unwrap();
        let built = build_nexp_protocol(&mip).unwrap();
        assert_eq!(built.correct_bit, 1);
        let u = expected_utilities(&built.game, &built.honest).unwrap();
        assert_eq!(u, vec![rat(1, 2), rat(1, 2)]);
        assert!(is_sse(&built.game, &built.honest).unwrap().verdict);
    }
}
