//! Domain types shared by every solver: the switching-cost game, mixed
//! actions, stationary strategies, validation and normalization.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Absolute tolerance for feasibility tests (probabilities, constraints).
pub const FEAS_TOL: f64 = 1e-9;
/// Absolute tolerance for comparing game values.
pub const VALUE_TOL: f64 = 1e-7;
/// Negative probability mass up to this magnitude is treated as round-off.
pub const CLAMP_TOL: f64 = 1e-12;

/// A zero-sum game with switching costs: stage payoffs `A` (m x n, paid by
/// the column player to the row player) and switching costs `S` (n x n).
///
/// The cost weight `c` is supplied per solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchGame {
    a: Matrix,
    s: Matrix,
}

/// One rule broken by a candidate switching-cost game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub matrix: char,
    /// One-based `(row, column)` of the offending entry.
    pub entry: (usize, usize),
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{},{}]: {}",
            self.matrix, self.entry.0, self.entry.1, self.message
        )
    }
}

impl SwitchGame {
    /// Builds a game, checking only dimensions. Use [`SwitchGame::validate`]
    /// for the model rules, or [`SwitchGame::new`] to enforce them.
    pub fn unchecked(a: Matrix, s: Matrix) -> Result<Self> {
        if s.rows() != s.cols() {
            return Err(Error::Structural(format!(
                "S must be square, got {}x{}",
                s.rows(),
                s.cols()
            )));
        }
        if a.cols() != s.rows() {
            return Err(Error::Structural(format!(
                "A has {} columns but S is {}x{}",
                a.cols(),
                s.rows(),
                s.cols()
            )));
        }
        Ok(SwitchGame { a, s })
    }

    /// Builds a game and rejects any violation of the model rules.
    pub fn new(a: Matrix, s: Matrix) -> Result<Self> {
        let game = Self::unchecked(a, s)?;
        let violations = game.validate();
        if let Some(first) = violations.first() {
            return Err(Error::Structural(format!(
                "{} violation(s), first: {}",
                violations.len(),
                first
            )));
        }
        Ok(game)
    }

    pub fn from_rows(a: Vec<Vec<f64>>, s: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Matrix::from_rows(a)?, Matrix::from_rows(s)?)
    }

    /// Game with uniform switching costs `ones - identity`.
    pub fn uniform(a: Matrix) -> Result<Self> {
        let n = a.cols();
        Self::new(a, Matrix::uniform_switching(n))
    }

    pub fn payoffs(&self) -> &Matrix {
        &self.a
    }

    pub fn switching(&self) -> &Matrix {
        &self.s
    }

    /// Number of Player 1 (row) actions.
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// Number of Player 2 (column) actions, which is also the number of states.
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Lists every entry breaking the model: finite entries, zero diagonal
    /// and nonnegative switching costs.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for i in 0..self.a.rows() {
            for j in 0..self.a.cols() {
                if !self.a.get(i, j).is_finite() {
                    out.push(Violation {
                        matrix: 'A',
                        entry: (i + 1, j + 1),
                        message: "entry is not finite".into(),
                    });
                }
            }
        }
        for k in 0..self.s.rows() {
            for j in 0..self.s.cols() {
                let v = self.s.get(k, j);
                let message = if !v.is_finite() {
                    Some("entry is not finite".to_string())
                } else if k == j && v != 0.0 {
                    Some(format!("diagonal switching cost must be 0, got {v}"))
                } else if v < 0.0 {
                    Some(format!("switching cost must be nonnegative, got {v}"))
                } else {
                    None
                };
                if let Some(message) = message {
                    out.push(Violation {
                        matrix: 'S',
                        entry: (k + 1, j + 1),
                        message,
                    });
                }
            }
        }
        out
    }

    /// True when `min A = 0`, `max A = 1` and the smallest nonzero switching
    /// cost equals 1.
    pub fn is_canonical(&self) -> bool {
        let tol = 1e-12;
        let s_min = self.min_nonzero_switch();
        self.a.min().abs() <= tol
            && (self.a.max() - 1.0).abs() <= tol
            && s_min.is_some_and(|s| (s - 1.0).abs() <= tol)
    }

    pub fn min_nonzero_switch(&self) -> Option<f64> {
        self.s
            .iter()
            .filter(|&v| v != 0.0)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    }

    /// `s_ij = 1` for all `i != j`.
    pub fn has_uniform_switching(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let target = if i == j { 0.0 } else { 1.0 };
                (self.s.get(i, j) - target).abs() <= 1e-12
            })
        })
    }

    /// No free switches: every off-diagonal switching cost is positive.
    pub fn has_positive_switching(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| i == j || self.s.get(i, j) > 0.0))
    }

    /// The game with `S` replaced by its symmetric part.
    pub fn symmetrized(&self) -> SwitchGame {
        SwitchGame {
            a: self.a.clone(),
            s: self.s.symmetric_part(),
        }
    }

    /// Stage matrix of the state reached after Player 2 played `state`:
    /// entry `(i, j)` is `a_ij + c s_{state, j}`.
    pub fn state_matrix(&self, state: usize, c: f64) -> Matrix {
        Matrix::from_fn(self.m(), self.n(), |i, j| {
            self.a.get(i, j) + c * self.s.get(state, j)
        })
    }

    /// Rescales the game to its canonical form and returns the map between
    /// the two parametrizations.
    pub fn normalize(&self) -> Result<(SwitchGame, AffineMap)> {
        let (lo, hi) = (self.a.min(), self.a.max());
        if hi - lo <= 0.0 {
            return Err(Error::Degenerate(format!(
                "payoff matrix is constant ({lo}); nothing to normalize"
            )));
        }
        let s_scale = self.min_nonzero_switch().ok_or_else(|| {
            Error::Degenerate("all switching costs are zero; switching is free".into())
        })?;
        let a_scale = hi - lo;
        let map = AffineMap {
            a_scale,
            a_shift: lo,
            s_scale,
        };
        let game = SwitchGame {
            a: self.a.map(|x| (x - lo) / a_scale),
            s: self.s.map(|x| x / s_scale),
        };
        Ok((game, map))
    }
}

/// Relates a game to its normalized image: `A = a_scale * A' + a_shift`,
/// `S = s_scale * S'`. A cost weight `c` in the original game corresponds to
/// `c' = c * s_scale / a_scale` in the normalized one, and values map back by
/// `v = a_scale * v' + a_shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a_scale: f64,
    pub a_shift: f64,
    pub s_scale: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        a_scale: 1.0,
        a_shift: 0.0,
        s_scale: 1.0,
    };

    pub fn is_identity(&self, tol: f64) -> bool {
        (self.a_scale - 1.0).abs() <= tol
            && self.a_shift.abs() <= tol
            && (self.s_scale - 1.0).abs() <= tol
    }

    pub fn c_to_normalized(&self, c: f64) -> f64 {
        c * self.s_scale / self.a_scale
    }

    pub fn c_from_normalized(&self, c: f64) -> f64 {
        c * self.a_scale / self.s_scale
    }

    pub fn value_from_normalized(&self, v: f64) -> f64 {
        self.a_scale * v + self.a_shift
    }

    pub fn value_to_normalized(&self, v: f64) -> f64 {
        (v - self.a_shift) / self.a_scale
    }

    /// `dv/dc = a_scale * dv'/dc' * dc'/dc = s_scale * dv'/dc'`.
    pub fn slope_from_normalized(&self, slope: f64) -> f64 {
        slope * self.s_scale
    }
}

/// A probability distribution over a finite action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedAction(Vec<f64>);

impl MixedAction {
    /// Validates and repairs a probability vector: components in
    /// `[-1e-12, 0)` are clamped to zero and the vector renormalized.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbability("empty action set".into()));
        }
        for (k, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidProbability(format!(
                    "component {k} is not finite"
                )));
            }
            if *p < 0.0 {
                if *p < -CLAMP_TOL {
                    return Err(Error::InvalidProbability(format!(
                        "component {k} is negative ({p})"
                    )));
                }
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > FEAS_TOL {
            return Err(Error::InvalidProbability(format!(
                "components sum to {total}, not 1"
            )));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(MixedAction(probs))
    }

    /// Like [`MixedAction::new`] but with a looser clamp, for vectors coming
    /// out of linear solves.
    pub(crate) fn from_solver(mut probs: Vec<f64>, tol: f64) -> Result<Self> {
        for p in probs.iter_mut() {
            if *p < 0.0 && *p >= -tol {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if total > 0.0 && (total - 1.0).abs() <= tol * probs.len() as f64 {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        MixedAction::new(probs)
    }

    pub fn pure(len: usize, index: usize) -> Self {
        let mut v = vec![0.0; len];
        v[index] = 1.0;
        MixedAction(v)
    }

    pub fn uniform(len: usize) -> Self {
        MixedAction(vec![1.0 / len as f64; len])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices carrying more than `tol` probability.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.0.len()).filter(|&k| self.0[k] > tol).collect()
    }

    /// Index of the action played with certainty, if any.
    pub fn pure_index(&self, tol: f64) -> Option<usize> {
        let support = self.support(tol);
        (support.len() == 1).then(|| support[0])
    }

    /// Largest componentwise difference.
    pub fn distance(&self, other: &MixedAction) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |acc, (a, b)| f64::max(acc, (a - b).abs()))
    }
}

impl TryFrom<Vec<f64>> for MixedAction {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        MixedAction::new(value)
    }
}

impl From<MixedAction> for Vec<f64> {
    fn from(value: MixedAction) -> Self {
        value.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Player {
    Player1,
    Player2,
}

/// A strategy that depends only on Player 2's previous action: one mixed
/// action per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryStrategy {
    pub owner: Player,
    pub per_state: Vec<MixedAction>,
}

impl StationaryStrategy {
    pub fn new(owner: Player, per_state: Vec<MixedAction>) -> Result<Self> {
        if per_state.is_empty() {
            return Err(Error::Structural("stationary strategy has no states".into()));
        }
        let len = per_state[0].len();
        if per_state.iter().any(|a| a.len() != len) {
            return Err(Error::Structural(
                "per-state actions have different lengths".into(),
            ));
        }
        if owner == Player::Player2 && len != per_state.len() {
            return Err(Error::Structural(format!(
                "a Player 2 stationary strategy over {} states must mix over {} actions, got {}",
                per_state.len(),
                per_state.len(),
                len
            )));
        }
        Ok(StationaryStrategy { owner, per_state })
    }

    /// The same mixed action in every state.
    pub fn static_strategy(owner: Player, states: usize, action: MixedAction) -> Self {
        StationaryStrategy {
            owner,
            per_state: vec![action; states],
        }
    }

    pub fn states(&self) -> usize {
        self.per_state.len()
    }

    pub fn action(&self, state: usize) -> &MixedAction {
        &self.per_state[state]
    }

    /// True when every state plays the same mixed action.
    pub fn is_static(&self, tol: f64) -> bool {
        self.per_state
            .windows(2)
            .all(|w| w[0].distance(&w[1]) <= tol)
    }

    pub fn supports(&self, tol: f64) -> Vec<Vec<usize>> {
        self.per_state.iter().map(|a| a.support(tol)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn evasion() -> SwitchGame {
        SwitchGame::from_rows(
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 2.0, 0.0],
                vec![0.0, 0.0, 3.0],
            ],
            Matrix::uniform_switching(3).to_rows(),
        )
        .unwrap()
    }

    #[test]
    fn evasion_game_is_valid_but_not_canonical() {
        let g = evasion();
        assert!(g.validate().is_empty());
        assert!(!g.is_canonical());
        assert!(g.has_uniform_switching());
    }

    #[test]
    fn diagonal_violation_names_entry() {
        let g = SwitchGame::unchecked(
            Matrix::identity(2),
            Matrix::from_rows(vec![vec![0.5, 1.0], vec![1.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let v = g.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].entry, (1, 1));
        assert_eq!(v[0].matrix, 'S');
    }

    #[test]
    fn negative_cost_violation_names_entry() {
        let g = SwitchGame::unchecked(
            Matrix::identity(2),
            Matrix::from_rows(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let v = g.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].entry, (1, 2));
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let err = SwitchGame::unchecked(Matrix::identity(3), Matrix::uniform_switching(2));
        assert!(matches!(err, Err(Error::Structural(_))));
        let err = SwitchGame::unchecked(
            Matrix::identity(2),
            Matrix::from_rows(vec![vec![0.0, 1.0]]).unwrap(),
        );
        assert!(matches!(err, Err(Error::Structural(_))));
    }

    #[test]
    fn evasion_normalization_divides_by_three() {
        let (g, map) = evasion().normalize().unwrap();
        assert_eq!(map.a_scale, 3.0);
        assert_eq!(map.a_shift, 0.0);
        assert_eq!(map.s_scale, 1.0);
        assert!((g.payoffs().get(2, 2) - 1.0).abs() < 1e-15);
        assert!((g.payoffs().get(1, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!(g.is_canonical());
    }

    #[test]
    fn normalization_is_idempotent() {
        let (g, _) = evasion().normalize().unwrap();
        let (g2, map2) = g.normalize().unwrap();
        assert!(map2.is_identity(1e-15));
        assert_eq!(g, g2);
    }

    #[test]
    fn scaled_switching_costs_fold_into_c() {
        let g = SwitchGame::new(
            evasion().payoffs().clone(),
            Matrix::uniform_switching(3).map(|x| 2.0 * x),
        )
        .unwrap();
        let (norm, map) = g.normalize().unwrap();
        assert_eq!(map.s_scale, 2.0);
        assert!(norm.has_uniform_switching());
        assert!((map.c_to_normalized(1.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_normalizations() {
        let constant = SwitchGame::new(
            Matrix::from_fn(2, 2, |_, _| 4.0),
            Matrix::uniform_switching(2),
        )
        .unwrap();
        assert!(matches!(constant.normalize(), Err(Error::Degenerate(_))));
        let free = SwitchGame::new(Matrix::identity(2), Matrix::zeros(2, 2)).unwrap();
        assert!(matches!(free.normalize(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mixed_action_clamps_round_off() {
        let a = MixedAction::new(vec![0.5, 0.5 + 5e-13, -5e-13]).unwrap();
        assert_eq!(a.probs()[2], 0.0);
        assert!((a.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(MixedAction::new(vec![1.1, -0.1]).is_err());
        assert!(MixedAction::new(vec![0.3, 0.3]).is_err());
    }

    #[test]
    fn player2_strategy_shape_is_checked() {
        let bad = StationaryStrategy::new(
            Player::Player2,
            vec![MixedAction::uniform(3), MixedAction::uniform(3)],
        );
        assert!(bad.is_err());
        let ok = StationaryStrategy::new(
            Player::Player1,
            vec![MixedAction::uniform(4), MixedAction::uniform(4)],
        );
        assert!(ok.is_ok());
    }
}
