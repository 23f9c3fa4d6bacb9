//! Protocol compilers: each builder turns a toy instance into a game tree plus
//! the honest profile its correctness argument singles out.

pub mod coloring;
pub mod mip;
pub mod mrip;
pub mod nexp;
pub mod pnexp;

use crate::game::{GameTree, StrategyProfile};
use crate::rational::Rational;

#[derive(Clone, Debug)]
pub struct ProtocolGame {
    pub game: GameTree,
    pub honest: StrategyProfile,
    /// The answer bit the honest profile produces.
    pub correct_bit: u8,
    /// Factor applied to the protocol's payments to fit the [-1,1] budget.
    pub scale: Rational,
}

impl ProtocolGame {
    /// Undo the payment scaling.
    pub fn unscaled(&self, r: &Rational) -> Rational {
        r / &self.scale
    }
}

/// The honest profile of a built protocol game.
pub fn honest_strategy(built: &ProtocolGame) -> StrategyProfile {
    built.honest.clone()
}
