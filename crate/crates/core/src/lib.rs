pub mod bounds;
pub mod chain;
pub mod curve;
pub mod error;
pub mod fixtures;
pub mod game;
pub mod generalgamma;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod matrixgame;
pub mod polytope;
pub mod stationary;
pub mod staticsolve;
pub mod verify;

pub use error::{Error, Result};
pub use game::{AffineMap, MixedAction, Player, StationaryStrategy, SwitchGame, Violation};
pub use linalg::Matrix;
