//! The one-shot game whose pure actions are pure stationary strategies.
//!
//! A pure Player 2 map `tau` drives the state deterministically into a cycle,
//! and the long-run average only sees that cycle. Each entry is therefore an
//! affine function `b + beta * c` of the cost weight, with `beta` shared by
//! the whole column.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::SwitchGame;
use crate::linalg::Matrix;
use crate::matrixgame::{matrix_game_value, MatrixGameValue};

/// Default cap on `rows * columns` of the auxiliary game.
pub const AUX_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxColumn {
    /// Next action as a function of the current state.
    pub tau: Vec<usize>,
    /// States of the limit cycle reached from state 0, in visiting order.
    pub cycle: Vec<usize>,
    /// Average switching cost per stage along the cycle.
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryMatrixGame {
    pub m: usize,
    pub n: usize,
    /// Player 1 maps, `rows[r][s]` is the row played in state `s`.
    pub rows: Vec<Vec<usize>>,
    pub columns: Vec<AuxColumn>,
    /// c-independent part of every entry.
    pub b: Matrix,
    /// One representative column per distinct cycle; the others duplicate it.
    pub distinct: Vec<usize>,
}

pub fn build_auxiliary(game: &SwitchGame) -> Result<AuxiliaryMatrixGame> {
    build_auxiliary_capped(game, AUX_CAP)
}

pub fn build_auxiliary_capped(game: &SwitchGame, cap: usize) -> Result<AuxiliaryMatrixGame> {
    let (a, s) = (game.payoffs(), game.switching());
    build_with(
        game.m(),
        game.n(),
        |_, i, j| a.get(i, j),
        |state, j| s.get(state, j),
        cap,
    )
}

/// Builds the auxiliary game for any payoff `payoff(state, row, column)` and
/// per-transition cost `cost(state, column)`.
pub(crate) fn build_with(
    m: usize,
    n: usize,
    payoff: impl Fn(usize, usize, usize) -> f64,
    cost: impl Fn(usize, usize) -> f64,
    cap: usize,
) -> Result<AuxiliaryMatrixGame> {
    let n_rows = checked_pow(m, n);
    let n_cols = checked_pow(n, n);
    match (n_rows, n_cols) {
        (Some(r), Some(c)) if r.checked_mul(c).is_some_and(|e| e <= cap) => {}
        _ => {
            return Err(Error::resource(
                format!("auxiliary game with {m}^{n} x {n}^{n} entries"),
                cap,
            ))
        }
    }
    let rows: Vec<Vec<usize>> = all_maps(n, m);
    let mut columns = Vec::new();
    let mut keys: Vec<Vec<usize>> = Vec::new();
    let mut distinct = Vec::new();
    for tau in all_maps(n, n) {
        let cycle = limit_cycle(&tau);
        let beta = cycle.iter().map(|&st| cost(st, tau[st])).sum::<f64>() / cycle.len() as f64;
        let key = canonical_rotation(&cycle);
        if !keys.contains(&key) {
            keys.push(key);
            distinct.push(columns.len());
        }
        columns.push(AuxColumn { tau, cycle, beta });
    }
    let b = Matrix::from_fn(rows.len(), columns.len(), |r, col| {
        let column = &columns[col];
        let sigma = &rows[r];
        column
            .cycle
            .iter()
            .map(|&st| payoff(st, sigma[st], column.tau[st]))
            .sum::<f64>()
            / column.cycle.len() as f64
    });
    Ok(AuxiliaryMatrixGame {
        m,
        n,
        rows,
        columns,
        b,
        distinct,
    })
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Every map from `0..len` into `0..range`, in lexicographic order.
fn all_maps(len: usize, range: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; len];
    loop {
        out.push(cur.clone());
        let mut k = len;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < range {
                break;
            }
            cur[k] = 0;
        }
    }
}

/// The cycle eventually reached by iterating `tau` from state 0.
pub fn limit_cycle(tau: &[usize]) -> Vec<usize> {
    let mut first_visit = vec![usize::MAX; tau.len()];
    let mut path = Vec::new();
    let mut state = 0;
    while first_visit[state] == usize::MAX {
        first_visit[state] = path.len();
        path.push(state);
        state = tau[state];
    }
    path[first_visit[state]..].to_vec()
}

fn canonical_rotation(cycle: &[usize]) -> Vec<usize> {
    let start = (0..cycle.len()).min_by_key(|&k| cycle[k]).unwrap_or(0);
    cycle[start..].iter().chain(&cycle[..start]).copied().collect()
}

impl AuxiliaryMatrixGame {
    /// Entry `(row, column)` at cost weight `c`.
    pub fn entry(&self, row: usize, col: usize, c: f64) -> f64 {
        self.b.get(row, col) + self.columns[col].beta * c
    }

    /// The payoff matrix at `c`, restricted to distinct columns.
    pub fn matrix_at(&self, c: f64) -> Matrix {
        Matrix::from_fn(self.rows.len(), self.distinct.len(), |r, k| {
            self.entry(r, self.distinct[k], c)
        })
    }

    /// Solves the game at `c`. The column strategy is over `distinct`.
    pub fn solve_at(&self, c: f64) -> Result<MatrixGameValue> {
        matrix_game_value(&self.matrix_at(c))
    }

    pub fn value_at(&self, c: f64) -> Result<f64> {
        Ok(self.solve_at(c)?.value)
    }
}

/// `v(c)` via the auxiliary game.
pub fn stationary_value_oracle(game: &SwitchGame, c: f64) -> Result<f64> {
    build_auxiliary(game)?.value_at(c)
}
