//! Small games with known solutions, used by tests, the CLI and examples.

use crate::game::SwitchGame;
use crate::linalg::Matrix;

fn game(a: Vec<Vec<f64>>, s: Vec<Vec<f64>>) -> SwitchGame {
    SwitchGame::from_rows(a, s).expect("fixture is valid")
}

/// Player 1 guesses where Player 2 hides; catching him at column `j` pays
/// `j + 1`. Uniform switching costs.
pub fn evasion() -> SwitchGame {
    game(
        vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 3.0],
        ],
        Matrix::uniform_switching(3).to_rows(),
    )
}

/// Rock-paper-scissors with switching costs `1 + delta` above the diagonal
/// and `1 - delta` below, `-1 <= delta <= 1`.
pub fn rps(delta: f64) -> SwitchGame {
    let (up, down) = (1.0 + delta, 1.0 - delta);
    game(
        vec![
            vec![0.0, 1.0, -1.0],
            vec![-1.0, 0.0, 1.0],
            vec![1.0, -1.0, 0.0],
        ],
        vec![
            vec![0.0, up, up],
            vec![down, 0.0, up],
            vec![down, down, 0.0],
        ],
    )
}

/// Two rows, four columns; switching is free only to the same column or
/// its right neighbour (cyclically).
pub fn cyclic() -> SwitchGame {
    game(
        vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]],
        vec![
            vec![0.0, 0.0, 1.0, 1.0],
            vec![1.0, 0.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0, 0.0],
        ],
    )
}

/// Identity payoffs with unequal symmetric switching costs.
pub fn identity_costs() -> SwitchGame {
    game(
        Matrix::identity(3).to_rows(),
        vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 3.0],
            vec![2.0, 3.0, 0.0],
        ],
    )
}

/// A 2x3 game whose static minimax is not piecewise linear in `c`.
pub fn curved_static() -> SwitchGame {
    game(
        vec![vec![-200.0, 1.0, 200.0], vec![200.0, 1.0, -200.0]],
        vec![
            vec![0.0, 1.0, 100.0],
            vec![1.0, 0.0, 1.0],
            vec![100.0, 1.0, 0.0],
        ],
    )
}

/// The games above, by name.
pub fn regression_games() -> Vec<(&'static str, SwitchGame)> {
    vec![
        ("evasion", evasion()),
        ("rps", rps(0.0)),
        ("rps-third", rps(1.0 / 3.0)),
        ("rps-one", rps(1.0)),
        ("cyclic", cyclic()),
        ("identity-costs", identity_costs()),
        ("curved-static", curved_static()),
    ]
}
