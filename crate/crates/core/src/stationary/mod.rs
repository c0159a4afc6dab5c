//! Stationary-strategy value `v(c)`: the ACOE solver, the auxiliary-game
//! oracle, strategy lines and curve tracing.

pub mod acoe;
pub mod auxiliary;

use serde::{Deserialize, Serialize};

use crate::chain::closed_classes;
use crate::curve::{trace_concave, Line, PiecewiseLinearCurve, MAX_SEGMENTS};
use crate::error::{Error, Result};
use crate::game::{Player, StationaryStrategy, SwitchGame};
use crate::linalg::dot;

pub use acoe::{acoe_solve, solve_stage_games, AcoeMethod, AcoeSolution, StageGames};
pub use auxiliary::{build_auxiliary, stationary_value_oracle, AuxColumn, AuxiliaryMatrixGame};

/// The payoff line of one closed class of the chain induced by `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLine {
    pub states: Vec<usize>,
    pub pi: Vec<f64>,
    pub line: Line,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyLine {
    /// The class line with the largest intercept (then slope); the only line
    /// when the chain has one closed class.
    pub line: Line,
    pub classes: Vec<ClassLine>,
    /// Set when the chain has several closed classes, so the payoff depends
    /// on the start state.
    pub multiple_classes: bool,
}

/// Payoff of Player 2's stationary `tau` against a best-responding Player 1,
/// as a function of `c`. Player 1 cannot move the state, so his best
/// response is myopic, and it does not depend on `c` because the cost term
/// is the same for every row.
pub fn strategy_line(game: &SwitchGame, tau: &StationaryStrategy) -> Result<StrategyLine> {
    let n = game.n();
    if tau.owner != Player::Player2 || tau.states() != n {
        return Err(Error::Structural(format!(
            "expected a Player 2 strategy over {n} states"
        )));
    }
    let p: Vec<Vec<f64>> = tau.per_state.iter().map(|y| y.probs().to_vec()).collect();
    let stage: Vec<f64> = (0..n)
        .map(|s| {
            game.payoffs()
                .mul_vec(&p[s])
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let cost: Vec<f64> = (0..n).map(|s| dot(&p[s], game.switching().row(s))).collect();
    let classes: Vec<ClassLine> = closed_classes(&p)
        .into_iter()
        .map(|cl| ClassLine {
            line: Line::new(dot(&cl.pi, &stage), dot(&cl.pi, &cost)),
            states: cl.states,
            pi: cl.pi,
        })
        .collect();
    let line = classes
        .iter()
        .map(|c| c.line)
        .max_by(|a, b| {
            a.intercept
                .total_cmp(&b.intercept)
                .then(a.slope.total_cmp(&b.slope))
        })
        .expect("a finite chain has a closed class");
    Ok(StrategyLine {
        line,
        multiple_classes: classes.len() > 1,
        classes,
    })
}

/// `v(c)` together with the payoff line of the optimal strategy found.
pub fn value_with_line(game: &SwitchGame, c: f64) -> Result<(f64, Line)> {
    let sol = acoe_solve(game, c)?;
    let sl = strategy_line(game, &sol.p2_strategy)?;
    let scale = 1.0 + sol.gamma.abs();
    if (sl.line.at(c) - sol.gamma).abs() > 1e-7 * scale {
        return Err(Error::solver(
            format!("strategy line disagrees with the ACOE value at c = {c}"),
            (sl.line.at(c) - sol.gamma).abs(),
        ));
    }
    Ok((sol.gamma, sl.line))
}

/// Exact piecewise-linear `v` on `[0, c_max]`.
pub fn trace_value_curve(game: &SwitchGame, c_max: f64) -> Result<PiecewiseLinearCurve> {
    trace_value_curve_capped(game, c_max, MAX_SEGMENTS)
}

pub fn trace_value_curve_capped(
    game: &SwitchGame,
    c_max: f64,
    max_segments: usize,
) -> Result<PiecewiseLinearCurve> {
    trace_concave(|c| value_with_line(game, c), c_max, max_segments)
}
