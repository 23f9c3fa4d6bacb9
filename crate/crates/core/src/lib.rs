//! Build and analyze non-cooperative rational interactive proof protocols as
//! extensive-form games with imperfect information.

pub mod beliefs;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod io;
pub mod protocols;
pub mod pruning;
pub mod random;
pub mod rational;
pub mod subforms;
pub mod utility_gap;

pub use error::{Error, Result};
pub use rational::Rational;
