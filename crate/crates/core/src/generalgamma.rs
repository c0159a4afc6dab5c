//! Stochastic games in which the state is Player 2's previous action and the
//! payoff `r(state, row, column)` is arbitrary: membership in the additive
//! (stage payoff + switching cost) subclass, stationary and static values,
//! and the quarter bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{MixedAction, SwitchGame};
use crate::linalg::{subsets, Matrix};
use crate::matrixgame::matrix_game_value;
use crate::polytope::{clean_simplex_point, face_stationary_point};
use crate::staticsolve::{lattice, oracle_resolution, zoom, Best, STATIC_N_CAP};
use crate::stationary::acoe::{solve_stage_games, AcoeSolution, StageGames};
use crate::stationary::auxiliary::{build_with, AUX_CAP};

/// Upper limit on the linear systems tried by [`static_minimax_g`].
pub const SYSTEM_CAP: usize = 1_000_000;

const MEMBER_TOL: f64 = 1e-9;

/// Payoff tensor `r[state][row][column]`; the next state is the column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct GeneralGame {
    r: Vec<Vec<Vec<f64>>>,
    rows: usize,
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for GeneralGame {
    type Error = Error;
    fn try_from(r: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        GeneralGame::new(r)
    }
}

impl From<GeneralGame> for Vec<Vec<Vec<f64>>> {
    fn from(g: GeneralGame) -> Self {
        g.r
    }
}

impl GeneralGame {
    pub fn new(r: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = r.len();
        if n == 0 {
            return Err(Error::Structural("tensor has no states".into()));
        }
        let rows = r[0].len();
        if rows == 0 {
            return Err(Error::Structural("tensor has no rows".into()));
        }
        for (s, layer) in r.iter().enumerate() {
            if layer.len() != rows {
                return Err(Error::Structural(format!(
                    "state {s} has {} rows, expected {rows}",
                    layer.len()
                )));
            }
            for (i, row) in layer.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::Structural(format!(
                        "r[{s}][{i}] has {} columns; the number of columns must equal the number of states ({n})",
                        row.len()
                    )));
                }
                if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Structural(format!("r[{s}][{i}][{j}] is not finite")));
                }
            }
        }
        Ok(GeneralGame { r, rows })
    }

    /// The tensor of a switching-cost game at weight `c`:
    /// `r(s, i, j) = a_ij + c s_sj`.
    pub fn from_switch_game(game: &SwitchGame, c: f64) -> Self {
        let r = (0..game.n())
            .map(|s| game.state_matrix(s, c).to_rows())
            .collect();
        GeneralGame { r, rows: game.m() }
    }

    pub fn states(&self) -> usize {
        self.r.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn get(&self, s: usize, i: usize, j: usize) -> f64 {
        self.r[s][i][j]
    }

    pub fn tensor(&self) -> &[Vec<Vec<f64>>] {
        &self.r
    }

    pub fn stage_matrix(&self, s: usize) -> Matrix {
        Matrix::from_rows(self.r[s].clone()).expect("validated shape")
    }

    pub fn min(&self) -> f64 {
        self.values().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values().fold(f64::NEG_INFINITY, f64::max)
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.r.iter().flatten().flatten().copied()
    }

    /// Minimum entry 0 and maximum entry 1.
    pub fn is_normalized(&self) -> bool {
        self.min().abs() <= 1e-12 && (self.max() - 1.0).abs() <= 1e-12
    }

    /// Affinely rescaled copy with entries in `[0, 1]`, with `(scale,
    /// shift)` such that `r = scale r' + shift`; `None` for a constant tensor.
    pub fn normalize(&self) -> Option<(GeneralGame, f64, f64)> {
        let (lo, hi) = (self.min(), self.max());
        if hi - lo <= 0.0 {
            return None;
        }
        let r = self
            .r
            .iter()
            .map(|l| l.iter().map(|row| row.iter().map(|v| (v - lo) / (hi - lo)).collect()).collect())
            .collect();
        Some((GeneralGame { r, rows: self.rows }, hi - lo, lo))
    }

    fn scale(&self) -> f64 {
        1.0 + self.min().abs().max(self.max().abs())
    }

    /// `Σ_s y_s max_i Σ_j y_j r(s, i, j)`: the long-run payoff of the static
    /// action `y` against Player 1's best stationary reply.
    pub fn static_objective(&self, y: &[f64]) -> f64 {
        (0..self.states())
            .filter(|&s| y[s] > 0.0)
            .map(|s| y[s] * self.best_reply(s, y).1)
            .sum()
    }

    /// Player 1's best row in state `s` against `y`, and its payoff.
    pub fn best_reply(&self, s: usize, y: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, row) in self.r[s].iter().enumerate() {
            let v: f64 = row.iter().zip(y).map(|(a, b)| a * b).sum();
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }
}

/// `r(j', i, j) = a_ij + s_j'j` with a zero-diagonal `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    #[serde(rename = "A")]
    pub a: Matrix,
    #[serde(rename = "S")]
    pub s: Matrix,
    /// Some off-diagonal entry of `s` is negative, so the game is additive
    /// but not a switching-cost game.
    pub outside_cost_model: bool,
    pub notes: Vec<String>,
}

impl Decomposition {
    /// The switching-cost game (at `c = 1`) when the costs are nonnegative.
    pub fn switch_game(&self) -> Option<SwitchGame> {
        if self.outside_cost_model {
            None
        } else {
            SwitchGame::new(self.a.clone(), self.s.clone()).ok()
        }
    }
}

/// Whether `r(j', i, j) − r(j'', i, j)` is independent of `i`, and if so the
/// additive decomposition with base row 0 and base state 0.
pub fn membership_g_s(game: &GeneralGame) -> Option<Decomposition> {
    let (n, m) = (game.states(), game.rows());
    let tol = MEMBER_TOL * game.scale();
    for sp in 1..n {
        for i in 1..m {
            for j in 0..n {
                let lhs = game.get(sp, i, j) - game.get(0, i, j);
                let rhs = game.get(sp, 0, j) - game.get(0, 0, j);
                if (lhs - rhs).abs() > tol {
                    return None;
                }
            }
        }
    }
    let d = Matrix::from_fn(n, n, |sp, j| game.get(sp, 0, j) - game.get(0, 0, j));
    let a = Matrix::from_fn(m, n, |i, j| game.get(0, i, j) + d.get(j, j));
    let s = Matrix::from_fn(n, n, |sp, j| if sp == j { 0.0 } else { d.get(sp, j) - d.get(j, j) });
    let mut notes = Vec::new();
    if (0..n).any(|j| d.get(j, j) != 0.0) {
        notes.push("staying costs folded into the stage payoffs so that S has a zero diagonal".into());
    }
    let outside_cost_model = s.iter().any(|v| v < -tol);
    let s = if outside_cost_model { s } else { s.map(|v| v.max(0.0)) };
    if outside_cost_model {
        notes.push("additive, but S has negative off-diagonal entries: outside the switching-cost model".into());
    }
    Some(Decomposition {
        a,
        s,
        outside_cost_model,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralValue {
    pub value: f64,
    /// Value of the auxiliary game over pure stationary strategies.
    pub auxiliary_value: f64,
    pub acoe: AcoeSolution,
}

/// Value in stationary strategies, computed twice (auxiliary matrix game and
/// optimality equation) and cross-checked to 1e-7.
pub fn stationary_value_g(game: &GeneralGame) -> Result<GeneralValue> {
    let (n, m) = (game.states(), game.rows());
    let aux = build_with(m, n, |s, i, j| game.get(s, i, j), |_, _| 0.0, AUX_CAP)?;
    let auxiliary_value = aux.value_at(0.0)?;
    let stages = StageGames {
        matrices: (0..n).map(|s| game.stage_matrix(s)).collect(),
    };
    let acoe = solve_stage_games(&stages)?;
    let diff = (acoe.gamma - auxiliary_value).abs();
    if diff > 1e-7 * game.scale() {
        return Err(Error::solver(
            "optimality equation and auxiliary game disagree",
            diff,
        ));
    }
    Ok(GeneralValue {
        value: acoe.gamma,
        auxiliary_value,
        acoe,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralStatic {
    pub value: f64,
    pub y: MixedAction,
    /// Player 1's best row per state against `y`.
    pub best_reply: Vec<usize>,
    /// Grid value minus the enumerated value (nonnegative up to round-off).
    pub oracle_gap: Option<f64>,
}

/// Minimax value when Player 2 is restricted to static actions.
///
/// On a support `U` with a fixed tied-row set `T_s` in each state `s` of
/// `U`, the objective is the quadratic `Σ_s y_s r(s, k_s, y)` (`k_s` the
/// first row of `T_s`) and the ties `r(s, i, y) = r(s, k_s, y)` are linear.
/// Every local minimizer is a stationary point of one such system.
pub fn static_minimax_g(game: &GeneralGame) -> Result<GeneralStatic> {
    let (n, m) = (game.states(), game.rows());
    if n > STATIC_N_CAP {
        return Err(Error::resource("static enumeration states", STATIC_N_CAP));
    }
    let row_sets: Vec<Vec<usize>> = subsets(m).collect();
    let mut best = Best::new();
    for j in 0..n {
        let y = MixedAction::pure(n, j);
        best.offer(game.static_objective(y.probs()), y.probs());
    }
    let mut systems = 0usize;
    for support in subsets(n) {
        let mut choice = vec![0usize; support.len()];
        loop {
            let ties: usize = choice.iter().map(|&c| row_sets[c].len() - 1).sum();
            if ties < support.len() {
                systems += 1;
                if systems > SYSTEM_CAP {
                    return Err(Error::resource("static enumeration systems", SYSTEM_CAP));
                }
                if let Some(y) = system_point(game, &support, &choice, &row_sets) {
                    best.offer(game.static_objective(&y), &y);
                }
            }
            // Next per-state row-set choice (odometer).
            let mut d = 0;
            while d < choice.len() {
                choice[d] += 1;
                if choice[d] < row_sets.len() {
                    break;
                }
                choice[d] = 0;
                d += 1;
            }
            if d == choice.len() {
                break;
            }
        }
    }
    let oracle_gap = if n <= 5 && n >= 2 {
        let grid = grid_g(game, oracle_resolution(n));
        let gap = grid.0 - best.value;
        if gap < -1e-7 * game.scale() {
            return Err(Error::solver(
                "grid search undercuts the enumerated static minimum",
                -gap,
            ));
        }
        Some(gap)
    } else {
        None
    };
    let y = MixedAction::from_solver(best.y, 1e-9)?;
    let best_reply = (0..n).map(|s| game.best_reply(s, y.probs()).0).collect();
    Ok(GeneralStatic {
        value: best.value,
        y,
        best_reply,
        oracle_gap,
    })
}

fn system_point(
    game: &GeneralGame,
    support: &[usize],
    choice: &[usize],
    row_sets: &[Vec<usize>],
) -> Option<Vec<f64>> {
    let n = game.states();
    let mut q = Matrix::zeros(n, n);
    let mut eq = vec![(vec![1.0; n], 1.0)];
    for (&s, &c) in support.iter().zip(choice) {
        let rows = &row_sets[c];
        let k = rows[0];
        for j in 0..n {
            let half = 0.5 * game.get(s, k, j);
            q.set(s, j, q.get(s, j) + half);
            q.set(j, s, q.get(j, s) + half);
        }
        for &i in &rows[1..] {
            let diff = (0..n).map(|j| game.get(s, i, j) - game.get(s, k, j)).collect();
            eq.push((diff, 0.0));
        }
    }
    let mut y = face_stationary_point(&q, &vec![0.0; n], support, &eq)?;
    if y.iter().any(|&v| v < -1e-9) {
        return None;
    }
    clean_simplex_point(&mut y);
    Some(y)
}

/// Lattice scan at resolution `k` refined by local pattern search.
fn grid_g(game: &GeneralGame, k: usize) -> (f64, Vec<f64>) {
    let n = game.states();
    let f = |y: &[f64]| game.static_objective(y);
    let mut best = Best::new();
    let mut t = vec![0usize; n];
    let mut y = vec![0.0; n];
    lattice(&mut t, 0, k, &mut |t| {
        for (yj, &tj) in y.iter_mut().zip(t) {
            *yj = tj as f64 / k as f64;
        }
        best.offer(f(&y), &y);
    });
    zoom(&f, best.value, best.y, 1.0 / k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterBound {
    /// `¾ (1 − v)`.
    pub delta: f64,
    pub gap: f64,
    /// `(1 − ṽ) / (1 − v)`; absent when `v = 1`.
    pub ratio: Option<f64>,
    pub ratio_ok: bool,
    /// A state whose stage game Player 2 holds to at most `v`, and the
    /// action doing so.
    pub j_star: usize,
    pub y_star: MixedAction,
    /// `½ δ_{j*} + ½ y*`, with static payoff at most `¼ v + ¾`.
    pub filter_strategy: MixedAction,
    pub filter_payoff: f64,
    /// `(1 − 1/|J|)(1 − v)` when every stage game has value at most `v`.
    pub refined: Option<RefinedBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedBound {
    pub delta: f64,
    pub holds: bool,
    pub note: String,
}

pub fn quarter_bound(game: &GeneralGame, v: f64, vtilde: f64) -> Result<QuarterBound> {
    if !game.is_normalized() {
        return Err(Error::Precondition(
            "quarter bound needs a tensor with minimum 0 and maximum 1".into(),
        ));
    }
    let n = game.states();
    let stage_values = (0..n)
        .map(|s| matrix_game_value(&game.stage_matrix(s)))
        .collect::<Result<Vec<_>>>()?;
    let Some(j_star) = (0..n).find(|&s| stage_values[s].value <= v + 1e-9) else {
        return Err(Error::solver(
            "no state whose stage value is at most the stationary value",
            stage_values.iter().map(|s| s.value - v).fold(f64::INFINITY, f64::min),
        ));
    };
    let y_star = stage_values[j_star].y.clone();
    let mut mix: Vec<f64> = y_star.probs().iter().map(|p| 0.5 * p).collect();
    mix[j_star] += 0.5;
    let filter_strategy = MixedAction::from_solver(mix, 1e-9)?;
    let filter_payoff = game.static_objective(filter_strategy.probs());
    let gap = vtilde - v;
    let (delta, ratio, ratio_ok) = if v >= 1.0 - 1e-12 {
        (0.0, None, true)
    } else {
        let ratio = (1.0 - vtilde) / (1.0 - v);
        (0.75 * (1.0 - v), Some(ratio), ratio >= 0.25 - 1e-9)
    };
    let refined = stage_values.iter().all(|s| s.value <= v + 1e-9).then(|| {
        let delta = (1.0 - 1.0 / n as f64) * (1.0 - v);
        RefinedBound {
            delta,
            holds: gap <= delta + 1e-7,
            note: "prose-level claim: every state's stage game is held to at most v".into(),
        }
    });
    Ok(QuarterBound {
        delta,
        gap,
        ratio,
        ratio_ok,
        j_star,
        y_star,
        filter_strategy,
        filter_payoff,
        refined,
    })
}

/// `r(s, 0, (s + 1) mod n) = 0`, every other entry 1: Player 2 pays nothing
/// by cycling, while any static action pays at least `¾`.
pub fn quarter_tight(n: usize) -> GeneralGame {
    let r = (0..n)
        .map(|s| vec![(0..n).map(|j| if j == (s + 1) % n { 0.0 } else { 1.0 }).collect()])
        .collect();
    GeneralGame::new(r).expect("valid shape")
}

/// Two states, two rows: each row is dominated in one state, so Player 1's
/// best reply to a static action switches rows with the state.
pub fn state_dependent_reply() -> GeneralGame {
    GeneralGame::new(vec![
        vec![vec![1.0, 0.0], vec![1.0, 1.0]],
        vec![vec![1.0, 1.0], vec![0.0, 1.0]],
    ])
    .expect("valid shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn quarter_tight_values() {
        let g = quarter_tight(5);
        let v = stationary_value_g(&g).unwrap();
        assert!(v.value.abs() < 1e-9);
        let st = static_minimax_g(&g).unwrap();
        assert!((st.value - 0.75).abs() < 1e-9, "{st:?}");
        // Uniform play pays 4/5; the minimizer concentrates on two
        // consecutive states.
        assert!((g.static_objective(&[0.2; 5]) - 0.8).abs() < 1e-12);
        let q = quarter_bound(&g, v.value, st.value).unwrap();
        assert!((q.ratio.unwrap() - 0.25).abs() < 1e-9);
        assert!(q.ratio_ok);
        assert!(q.filter_payoff <= 0.75 + 1e-12);
    }

    #[test]
    fn state_dependent_reply_is_not_additive() {
        let g = state_dependent_reply();
        assert!(membership_g_s(&g).is_none());
        let v = stationary_value_g(&g).unwrap();
        let st = static_minimax_g(&g).unwrap();
        assert!((v.value - 1.0).abs() < 1e-9);
        assert!((st.value - 1.0).abs() < 1e-9);
        assert_eq!(st.best_reply.len(), 2);
    }

    #[test]
    fn constant_tensor() {
        let g = GeneralGame::new(vec![vec![vec![0.3; 3]; 2]; 3]).unwrap();
        assert!((stationary_value_g(&g).unwrap().value - 0.3).abs() < 1e-12);
        assert!((static_minimax_g(&g).unwrap().value - 0.3).abs() < 1e-12);
    }

    #[test]
    fn switch_games_round_trip() {
        for (name, game) in fixtures::regression_games() {
            let c = 0.4;
            let t = GeneralGame::from_switch_game(&game, c);
            let d = membership_g_s(&t).unwrap_or_else(|| panic!("{name}"));
            assert!(!d.outside_cost_model, "{name}");
            for s in 0..t.states() {
                for i in 0..t.rows() {
                    for j in 0..t.states() {
                        let back = d.a.get(i, j) + d.s.get(s, j);
                        assert!((back - t.get(s, i, j)).abs() < 1e-12, "{name}");
                    }
                }
            }
            let recovered = d.switch_game().unwrap();
            let direct = crate::stationary::acoe_solve(&game, c).unwrap().gamma;
            let via = crate::stationary::acoe_solve(&recovered, 1.0).unwrap().gamma;
            assert!((direct - via).abs() < 1e-7, "{name}");
            assert!((stationary_value_g(&t).unwrap().value - direct).abs() < 1e-7, "{name}");
        }
    }

    #[test]
    fn staying_cost_is_folded() {
        // r(s, i, j) = a_ij + d_sj with a nonzero diagonal in d.
        let d = [[0.5, 0.2], [0.1, 0.3]];
        let a = [[0.0, 0.4], [0.2, 0.1]];
        let r = (0..2)
            .map(|s| (0..2).map(|i| (0..2).map(|j| a[i][j] + d[s][j]).collect()).collect())
            .collect();
        let dec = membership_g_s(&GeneralGame::new(r).unwrap()).unwrap();
        assert_eq!(dec.s.get(0, 0), 0.0);
        assert!((dec.s.get(1, 0) - (0.1 - 0.5)).abs() < 1e-12);
        assert!(dec.outside_cost_model);
        assert!(dec.switch_game().is_none());
    }

    #[test]
    fn ragged_tensor_is_rejected() {
        assert!(GeneralGame::new(vec![vec![vec![0.0, 1.0]]]).is_err());
        assert!(GeneralGame::new(vec![vec![vec![0.0]], vec![vec![1.0]]]).is_err());
    }
}
