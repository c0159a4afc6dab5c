//! One-shot zero-sum matrix games. The row player maximizes `x^T A y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::MixedAction;
use crate::linalg::Matrix;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::polytope::{simplex_vertices, VERTEX_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixGameSolution {
    pub value: f64,
    pub x_opt: MixedAction,
    pub y_opt: MixedAction,
    /// Vertices of the Player 2 optimal polytope, sorted lexicographically.
    pub y_polytope_vertices: Vec<MixedAction>,
    pub pure_minimax_value: f64,
    pub pure_minimax_actions: Vec<usize>,
}

/// Value and one optimal strategy per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixGameValue {
    pub value: f64,
    pub x: MixedAction,
    pub y: MixedAction,
}

/// Value and optimal strategies, without enumerating the optimal polytope.
///
/// After shifting `A` so that every entry is at least 1, Player 2 solves
/// `max 1.u  s.t. A' u <= 1` and Player 1 solves `min 1.w  s.t. A'^T w >= 1`;
/// both optima equal `1 / (v + shift)`. The two programs are solved
/// independently and must agree to 1e-9. Simplex pivots follow Bland's rule,
/// so the returned strategies are basic (vertices of the optimal sets) and
/// deterministic.
pub fn matrix_game_value(a: &Matrix) -> Result<MatrixGameValue> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Structural("payoff matrix has non-finite entries".into()));
    }
    let (m, n) = (a.rows(), a.cols());
    let shift = 1.0 - a.min();
    let shifted = a.map(|v| v + shift);

    let mut p2 = LinearProgram::maximize(vec![1.0; n]);
    for i in 0..m {
        p2.constrain(shifted.row(i).to_vec(), Relation::Le, 1.0);
    }
    let (u, sum_u) = expect_optimal(p2.solve()?, "column player")?;

    let mut p1 = LinearProgram::minimize(vec![1.0; m]);
    for j in 0..n {
        p1.constrain(shifted.column(j), Relation::Ge, 1.0);
    }
    let (w, sum_w) = expect_optimal(p1.solve()?, "row player")?;

    let (v2, v1) = (1.0 / sum_u - shift, 1.0 / sum_w - shift);
    let scale = 1.0 + a.max().abs().max(a.min().abs());
    if (v1 - v2).abs() > 1e-9 * scale {
        return Err(Error::solver(
            "primal and dual matrix-game programs disagree",
            (v1 - v2).abs(),
        ));
    }
    let y = MixedAction::from_solver(u.iter().map(|v| v / sum_u).collect(), 1e-9)?;
    let x = MixedAction::from_solver(w.iter().map(|v| v / sum_w).collect(), 1e-9)?;
    Ok(MatrixGameValue { value: v2, x, y })
}

fn expect_optimal(outcome: LpOutcome, who: &str) -> Result<(Vec<f64>, f64)> {
    match outcome {
        LpOutcome::Optimal { x, objective } if objective > 0.0 => Ok((x, objective)),
        other => Err(Error::solver(
            format!("{who} program ended as {other:?}"),
            f64::NAN,
        )),
    }
}

/// Full solution including the optimal polytope and the pure minimax.
pub fn solve_matrix_game(a: &Matrix) -> Result<MatrixGameSolution> {
    let base = matrix_game_value(a)?;
    let y_polytope_vertices = vertices_at_value(a, base.value, VERTEX_CAP)?;
    let (pure_minimax_value, pure_minimax_actions) = pure_minimax(a);
    Ok(MatrixGameSolution {
        value: base.value,
        x_opt: base.x,
        y_opt: base.y,
        y_polytope_vertices,
        pure_minimax_value,
        pure_minimax_actions,
    })
}

/// All vertices of `{y in simplex : A y <= v}`, where `v` is the game value.
pub fn optimal_strategy_vertices(a: &Matrix) -> Result<Vec<MixedAction>> {
    optimal_strategy_vertices_capped(a, VERTEX_CAP)
}

pub fn optimal_strategy_vertices_capped(a: &Matrix, cap: usize) -> Result<Vec<MixedAction>> {
    let value = matrix_game_value(a)?.value;
    vertices_at_value(a, value, cap)
}

fn vertices_at_value(a: &Matrix, value: f64, cap: usize) -> Result<Vec<MixedAction>> {
    let rows: Vec<_> = (0..a.rows()).map(|i| (a.row(i).to_vec(), value)).collect();
    simplex_vertices(a.cols(), &rows, cap)?
        .into_iter()
        .map(|y| MixedAction::from_solver(y, 1e-9))
        .collect()
}

/// `min_j max_i a_ij` and every column attaining it.
pub fn pure_minimax(a: &Matrix) -> (f64, Vec<usize>) {
    let maxima: Vec<f64> = (0..a.cols())
        .map(|j| a.column(j).into_iter().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let best = maxima.iter().copied().fold(f64::INFINITY, f64::min);
    let cols = (0..a.cols()).filter(|&j| maxima[j] == best).collect();
    (best, cols)
}

/// `max_i min_j a_ij`.
pub fn pure_maximin(a: &Matrix) -> f64 {
    (0..a.rows())
        .map(|i| a.row(i).iter().copied().fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn evasion() -> Matrix {
        Matrix::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 3.0],
        ])
        .unwrap()
    }

    #[test]
    fn evasion_value_and_strategies() {
        let sol = solve_matrix_game(&evasion()).unwrap();
        assert!((sol.value - 6.0 / 11.0).abs() < 1e-12);
        let y = [6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0];
        assert!(close(sol.y_opt.probs(), &y, 1e-12));
        assert_eq!(sol.y_polytope_vertices.len(), 1);
        assert!(close(sol.y_polytope_vertices[0].probs(), &y, 1e-12));
        assert_eq!(sol.pure_minimax_value, 1.0);
        assert_eq!(sol.pure_minimax_actions, vec![0]);
    }

    #[test]
    fn rock_paper_scissors() {
        let a = Matrix::from_rows(vec![
            vec![0.0, 1.0, -1.0],
            vec![-1.0, 0.0, 1.0],
            vec![1.0, -1.0, 0.0],
        ])
        .unwrap();
        let sol = solve_matrix_game(&a).unwrap();
        assert!(sol.value.abs() < 1e-12);
        assert!(close(sol.y_opt.probs(), &[1.0 / 3.0; 3], 1e-12));
        assert!(close(sol.x_opt.probs(), &[1.0 / 3.0; 3], 1e-12));
        assert_eq!(sol.pure_minimax_actions, vec![0, 1, 2]);
    }

    #[test]
    fn one_by_one() {
        let sol = solve_matrix_game(&Matrix::from_rows(vec![vec![5.0]]).unwrap()).unwrap();
        assert!((sol.value - 5.0).abs() < 1e-12);
        assert_eq!(sol.x_opt.probs(), &[1.0]);
        assert_eq!(sol.y_opt.probs(), &[1.0]);
    }

    #[test]
    fn identity_two_by_two_polytope_is_a_point() {
        let v = optimal_strategy_vertices(&Matrix::identity(2)).unwrap();
        assert_eq!(v.len(), 1);
        assert!(close(v[0].probs(), &[0.5, 0.5], 1e-12));
    }

    #[test]
    fn cyclic_polytope_vertices() {
        let a = Matrix::from_rows(vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]])
            .unwrap();
        let v = optimal_strategy_vertices(&a).unwrap();
        let got: Vec<Vec<f64>> = v.iter().map(|y| y.probs().to_vec()).collect();
        let expected = vec![
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.5, 0.5, 0.0],
            vec![0.5, 0.0, 0.0, 0.5],
            vec![0.5, 0.5, 0.0, 0.0],
        ];
        assert_eq!(got.len(), expected.len());
        for (g, e) in got.iter().zip(&expected) {
            assert!(close(g, e, 1e-12), "{got:?}");
        }
    }

    #[test]
    fn constant_matrix_pure_minimax() {
        let (v, cols) = pure_minimax(&Matrix::from_fn(2, 3, |_, _| 7.0));
        assert_eq!(v, 7.0);
        assert_eq!(cols, vec![0, 1, 2]);
    }

    #[test]
    fn rejects_non_finite() {
        let a = Matrix::from_rows(vec![vec![f64::NAN]]).unwrap();
        assert!(matrix_game_value(&a).is_err());
    }
}
