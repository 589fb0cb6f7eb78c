//! Exact-arithmetic fictitious play on bimatrix games.
//!
//! - [`game`]: exact-rational games, best responses, regret.
//! - [`generators`]: the cycling family `G_n`, reference and random games, `.fpg` I/O.
//! - [`engine`]: deterministic fictitious play with run-length traces.
//! - [`analysis`]: structural certification of `G_n` runs and regret trajectories.
//! - [`bounds`]: last-occurrence scores and the worst-case regret guarantee.

pub mod analysis;
pub mod bounds;
pub mod engine;
pub mod error;
pub mod game;
pub mod generators;

pub use error::{Error, Result};
pub use game::{BimatrixGame, MixedStrategy, Player, Rational, Regret};
