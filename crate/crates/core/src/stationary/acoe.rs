//! Average-cost optimality equation for games where Player 2 alone moves the
//! state: state `s` is Player 2's previous action and the stage game there is
//! `M_s`, so playing column `j` leads to state `j`.
//!
//! The solver is policy iteration over Player 2's stationary strategies,
//! with Player 1 best responding state by state. A candidate is accepted
//! only after the verification step: with continuation payoffs `h`, each
//! state's augmented game `M_s + 1 h^T` must have value `gamma + h_s`, and
//! Player 1's optimal action there must keep Player 2 indifferent on his
//! support.

use serde::{Deserialize, Serialize};

use crate::chain::closed_classes;
use crate::error::{Error, Result};
use crate::game::{MixedAction, Player, StationaryStrategy, SwitchGame};
use crate::linalg::{dot, solve, Matrix};
use crate::matrixgame::{matrix_game_value, MatrixGameValue};
use crate::polytope::{vertices, VERTEX_CAP};

/// Policy-iteration rounds before falling back to enumeration.
pub const MAX_ROUNDS: usize = 200;
/// Cap on candidate strategy tuples examined by the fallback.
pub const TUPLE_CAP: usize = 1_000_000;
/// Tolerance of the verification step.
pub const VERIFY_TOL: f64 = 1e-7;

/// Per-state stage games of a single-controller game.
#[derive(Debug, Clone, PartialEq)]
pub struct StageGames {
    pub matrices: Vec<Matrix>,
}

impl StageGames {
    /// `M_s = A + c 1 s_s^T`: the stage payoff plus the switching cost from
    /// state `s` to each column.
    pub fn switching(game: &SwitchGame, c: f64) -> Self {
        StageGames {
            matrices: (0..game.n()).map(|s| game.state_matrix(s, c)).collect(),
        }
    }

    pub fn states(&self) -> usize {
        self.matrices.len()
    }

    pub fn rows(&self) -> usize {
        self.matrices[0].rows()
    }

    /// Stage payoff against `y` in state `s` when Player 1 best responds.
    pub fn best_response_payoff(&self, s: usize, y: &[f64]) -> f64 {
        self.matrices[s]
            .mul_vec(y)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn augmented(&self, s: usize, h: &[f64]) -> Matrix {
        let m = &self.matrices[s];
        Matrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j) + h[j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcoeMethod {
    PolicyIteration,
    Enumeration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcoeSolution {
    /// Long-run average payoff; the value of the game.
    pub gamma: f64,
    /// Continuation payoffs with `continuation[0] = 0`.
    pub continuation: Vec<f64>,
    pub p2_strategy: StationaryStrategy,
    pub p1_strategy: StationaryStrategy,
    pub support_signature: Vec<Vec<usize>>,
    /// Largest verification residual.
    pub residual: f64,
    pub method: AcoeMethod,
    pub rounds: usize,
}

/// Solves the switching-cost game at weight `c`.
pub fn acoe_solve(game: &SwitchGame, c: f64) -> Result<AcoeSolution> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Precondition(format!("c must be finite and >= 0, got {c}")));
    }
    solve_stage_games(&StageGames::switching(game, c))
}

/// Solves a single-controller game given by its stage matrices.
pub fn solve_stage_games(games: &StageGames) -> Result<AcoeSolution> {
    let n = games.states();
    if games.matrices.iter().any(|m| m.cols() != n) {
        return Err(Error::Structural(
            "every stage game needs one column per state".into(),
        ));
    }
    let scale = 1.0
        + games
            .matrices
            .iter()
            .map(|m| m.max().abs().max(m.min().abs()))
            .fold(0.0, f64::max);

    let mut policy: Vec<Vec<f64>> = Vec::with_capacity(n);
    for m in &games.matrices {
        policy.push(matrix_game_value(m)?.y.probs().to_vec());
    }
    let mut best_residual = f64::INFINITY;
    for round in 1..=MAX_ROUNDS {
        let (gamma, h) = evaluate_unichain(games, &mut policy);
        let mut changed = false;
        let mut solved = Vec::with_capacity(n);
        for s in 0..n {
            let g = matrix_game_value(&games.augmented(s, &h))?;
            if g.value < gamma + h[s] - 1e-10 * scale {
                policy[s] = g.y.probs().to_vec();
                changed = true;
            }
            solved.push(g);
        }
        if !changed {
            match certify(games, &policy, gamma, &h, &solved, AcoeMethod::PolicyIteration, round) {
                Ok(sol) => return Ok(sol),
                Err(Error::SolverFailure { residual, .. }) => {
                    best_residual = best_residual.min(residual);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    enumerate_candidates(games, scale).map_err(|e| match e {
        Error::SolverFailure { message, residual } => Error::SolverFailure {
            message,
            residual: residual.min(best_residual),
        },
        other => other,
    })
}

/// Evaluates `policy`, first making it unichain: if several closed classes
/// exist, the one with the lowest average is kept and every other state
/// moves straight into it.
fn evaluate_unichain(games: &StageGames, policy: &mut [Vec<f64>]) -> (f64, Vec<f64>) {
    loop {
        if let Some(sol) = evaluate(games, policy) {
            return sol;
        }
        let classes = closed_classes(policy);
        let rewards: Vec<f64> = (0..policy.len())
            .map(|s| games.best_response_payoff(s, &policy[s]))
            .collect();
        let keep = classes
            .iter()
            .min_by(|a, b| dot(&a.pi, &rewards).total_cmp(&dot(&b.pi, &rewards)))
            .expect("a finite chain has a closed class");
        let target = keep.states[0];
        for s in 0..policy.len() {
            if !keep.states.contains(&s) {
                policy[s] = MixedAction::pure(policy.len(), target).probs().to_vec();
            }
        }
    }
}

/// Solves `gamma + h_s - sum_j y_sj h_j = r_s` with `h_0 = 0`. Singular for
/// multichain policies.
fn evaluate(games: &StageGames, policy: &[Vec<f64>]) -> Option<(f64, Vec<f64>)> {
    let n = policy.len();
    let mut m = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for s in 0..n {
        m[s][0] = 1.0;
        for j in 1..n {
            m[s][j] = if s == j { 1.0 } else { 0.0 } - policy[s][j];
        }
        rhs[s] = games.best_response_payoff(s, &policy[s]);
    }
    let z = solve(m, rhs)?;
    let mut h = z.clone();
    h[0] = 0.0;
    Some((z[0], h))
}

/// Step 5: checks the candidate against the augmented games and assembles
/// the solution.
fn certify(
    games: &StageGames,
    policy: &[Vec<f64>],
    gamma: f64,
    h: &[f64],
    solved: &[MatrixGameValue],
    method: AcoeMethod,
    rounds: usize,
) -> Result<AcoeSolution> {
    let n = policy.len();
    let mut residual: f64 = 0.0;
    let mut p1 = Vec::with_capacity(n);
    let mut p2 = Vec::with_capacity(n);
    for s in 0..n {
        let y = MixedAction::from_solver(policy[s].clone(), 1e-9)?;
        let x = &solved[s].x;
        let val = solved[s].value;
        let g = games.augmented(s, h);
        let guarantee = g.vec_mul(x.probs());
        for (j, &gj) in guarantee.iter().enumerate() {
            let gap = if y.probs()[j] > VERIFY_TOL {
                (gj - val).abs()
            } else {
                (val - gj).max(0.0)
            };
            residual = residual.max(gap);
        }
        let expected = games.matrices[s].bilinear(x.probs(), y.probs()) + dot(y.probs(), h);
        residual = residual.max((gamma + h[s] - expected).abs());
        residual = residual.max((gamma + h[s] - val).abs());
        p1.push(x.clone());
        p2.push(y);
    }
    if residual > VERIFY_TOL {
        return Err(Error::solver("ACOE candidate failed verification", residual));
    }
    let support_signature = p2.iter().map(|y| y.support(1e-9)).collect();
    Ok(AcoeSolution {
        gamma,
        continuation: h.to_vec(),
        p2_strategy: StationaryStrategy::new(Player::Player2, p2)?,
        p1_strategy: StationaryStrategy::new(Player::Player1, p1)?,
        support_signature,
        residual,
        method,
        rounds,
    })
}

/// Fallback: per state, the candidate actions are the vertices of
/// `{(y, t) : M_s y <= t, y in simplex}` (every optimal action of any
/// augmented game is among them). Tuples are tried by decreasing total
/// support, then lexicographically; the first one that verifies wins.
fn enumerate_candidates(games: &StageGames, scale: f64) -> Result<AcoeSolution> {
    let n = games.states();
    let mut per_state: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n);
    for m in &games.matrices {
        per_state.push(epigraph_vertices(m)?);
    }
    let total = per_state
        .iter()
        .try_fold(1usize, |acc, v| acc.checked_mul(v.len()))
        .filter(|&t| t <= TUPLE_CAP)
        .ok_or_else(|| Error::resource("ACOE candidate tuples", TUPLE_CAP))?;
    let support = |y: &[f64]| y.iter().filter(|&&p| p > 1e-9).count();
    let mut tuples: Vec<Vec<usize>> = Vec::with_capacity(total);
    let mut cur = vec![0usize; n];
    'outer: loop {
        tuples.push(cur.clone());
        for k in (0..n).rev() {
            cur[k] += 1;
            if cur[k] < per_state[k].len() {
                continue 'outer;
            }
            cur[k] = 0;
        }
        break;
    }
    tuples.sort_by_key(|t| {
        std::cmp::Reverse(t.iter().enumerate().map(|(s, &k)| support(&per_state[s][k])).sum::<usize>())
    });
    let mut best = f64::INFINITY;
    for t in tuples {
        let policy: Vec<Vec<f64>> = t.iter().enumerate().map(|(s, &k)| per_state[s][k].clone()).collect();
        let Some((gamma, h)) = evaluate(games, &policy) else { continue };
        let mut solved = Vec::with_capacity(n);
        let mut improvable = false;
        for s in 0..n {
            let g = matrix_game_value(&games.augmented(s, &h))?;
            if g.value < gamma + h[s] - 1e-9 * scale {
                improvable = true;
                best = best.min(gamma + h[s] - g.value);
                break;
            }
            solved.push(g);
        }
        if improvable {
            continue;
        }
        match certify(games, &policy, gamma, &h, &solved, AcoeMethod::Enumeration, 0) {
            Ok(sol) => return Ok(sol),
            Err(Error::SolverFailure { residual, .. }) => best = best.min(residual),
            Err(e) => return Err(e),
        }
    }
    Err(Error::solver("no ACOE candidate verified", best))
}

fn epigraph_vertices(m: &Matrix) -> Result<Vec<Vec<f64>>> {
    let n = m.cols();
    let dim = n + 1;
    let mut sum = vec![1.0; n];
    sum.push(0.0);
    let eq = vec![(sum, 1.0)];
    let mut ineq = Vec::new();
    for i in 0..m.rows() {
        let mut row = m.row(i).to_vec();
        row.push(-1.0);
        ineq.push((row, 0.0));
    }
    for j in 0..n {
        let mut row = vec![0.0; dim];
        row[j] = -1.0;
        ineq.push((row, 0.0));
    }
    let mut out: Vec<Vec<f64>> = vertices(dim, &eq, &ineq, VERTEX_CAP)?
        .into_iter()
        .map(|mut z| {
            z.pop();
            crate::polytope::clean_simplex_point(&mut z);
            z
        })
        .collect();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn evasion() -> SwitchGame {
        SwitchGame::uniform(
            Matrix::from_rows(vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 2.0, 0.0],
                vec![0.0, 0.0, 3.0],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn evasion_first_segment() {
        let c = 0.3;
        let sol = acoe_solve(&evasion(), c).unwrap();
        assert!((sol.gamma - (6.0 / 11.0 + 72.0 / 121.0 * c)).abs() < 1e-9);
        let expected = [0.0, 3.0 * c / 11.0, 4.0 * c / 11.0];
        for (h, e) in sol.continuation.iter().zip(expected) {
            assert!((h - e).abs() < 1e-9, "{:?}", sol.continuation);
        }
        assert!(sol.p2_strategy.is_static(1e-9));
    }

    #[test]
    fn evasion_second_segment_drops_right_after_left() {
        let sol = acoe_solve(&evasion(), 0.72).unwrap();
        assert!((sol.gamma - (156.0 * 0.72 + 198.0) / 319.0).abs() < 1e-9);
        let y = sol.p2_strategy.action(0).probs();
        assert!((y[0] - 2.0 / 3.0).abs() < 1e-9 && (y[1] - 1.0 / 3.0).abs() < 1e-9);
        assert!(y[2].abs() < 1e-12);
    }

    #[test]
    fn evasion_large_cost_is_absorbing() {
        let sol = acoe_solve(&evasion(), 1.0).unwrap();
        assert!((sol.gamma - 1.0).abs() < 1e-9);
        assert_eq!(sol.p2_strategy.action(0).pure_index(1e-9), Some(0));
    }

    #[test]
    fn enumeration_fallback_agrees() {
        let games = StageGames::switching(&evasion(), 0.72);
        let scale = 4.0;
        let sol = enumerate_candidates(&games, scale).unwrap();
        assert_eq!(sol.method, AcoeMethod::Enumeration);
        assert!((sol.gamma - (156.0 * 0.72 + 198.0) / 319.0).abs() < 1e-9);
    }

    #[test]
    fn negative_c_is_rejected() {
        assert!(matches!(acoe_solve(&evasion(), -1.0), Err(Error::Precondition(_))));
    }
}
