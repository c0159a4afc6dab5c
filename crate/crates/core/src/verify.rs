//! Independent checks of solver output: exact long-run payoff of a pair of
//! stationary strategies, and seeded Monte-Carlo play.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::chain::closed_classes;
use crate::error::{Error, Result};
use crate::game::{MixedAction, Player, StationaryStrategy, SwitchGame};
use crate::linalg::solve;

/// Number of running-average checkpoints kept in a [`SimulationResult`].
pub const CHECKPOINTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassValue {
    pub states: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEvaluation {
    /// Largest long-run payoff over the closed classes of the chain.
    pub value: f64,
    /// Long-run payoff when play starts in state 0.
    pub from_start: f64,
    pub classes: Vec<ClassValue>,
    pub multiple_classes: bool,
}

fn check_pair(game: &SwitchGame, sigma: &StationaryStrategy, tau: &StationaryStrategy) -> Result<()> {
    let (m, n) = (game.m(), game.n());
    if sigma.owner != Player::Player1 || tau.owner != Player::Player2 {
        return Err(Error::Structural("expected (Player 1, Player 2) strategies".into()));
    }
    if sigma.states() != n || tau.states() != n {
        return Err(Error::Structural(format!("strategies must cover {n} states")));
    }
    if sigma.action(0).len() != m || tau.action(0).len() != n {
        return Err(Error::Structural("strategy action counts do not match the game".into()));
    }
    Ok(())
}

/// Expected stage payoff in state `s`, switching cost included.
fn stage_payoff(game: &SwitchGame, c: f64, sigma: &StationaryStrategy, tau: &StationaryStrategy, s: usize) -> f64 {
    let (x, y) = (sigma.action(s).probs(), tau.action(s).probs());
    let m = game.state_matrix(s, c);
    (0..game.m())
        .map(|i| x[i] * (0..game.n()).map(|j| m.get(i, j) * y[j]).sum::<f64>())
        .sum()
}

/// Exact long-run average payoff of `(sigma, tau)`. Player 2 alone moves
/// the state, so the chain is `P[s][j] = tau_s(j)`.
pub fn evaluate_pair_exact(
    game: &SwitchGame,
    c: f64,
    sigma: &StationaryStrategy,
    tau: &StationaryStrategy,
) -> Result<PairEvaluation> {
    check_pair(game, sigma, tau)?;
    let n = game.n();
    let p: Vec<Vec<f64>> = (0..n).map(|s| tau.action(s).probs().to_vec()).collect();
    let r: Vec<f64> = (0..n).map(|s| stage_payoff(game, c, sigma, tau, s)).collect();
    let classes: Vec<ClassValue> = closed_classes(&p)
        .into_iter()
        .map(|cl| ClassValue {
            value: cl.pi.iter().zip(&r).map(|(a, b)| a * b).sum(),
            states: cl.states,
        })
        .collect();
    let value = classes.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
    let from_start = absorbed_value(&p, &classes, 0);
    Ok(PairEvaluation {
        value,
        from_start,
        multiple_classes: classes.len() > 1,
        classes,
    })
}

/// `Σ_k P(absorbed in class k | start) · value_k`.
fn absorbed_value(p: &[Vec<f64>], classes: &[ClassValue], start: usize) -> f64 {
    let n = p.len();
    let mut closed_value = vec![None; n];
    for c in classes {
        for &s in &c.states {
            closed_value[s] = Some(c.value);
        }
    }
    if let Some(v) = closed_value[start] {
        return v;
    }
    // Transient states: u = P_TT u + P_TC w.
    let transient: Vec<usize> = (0..n).filter(|&s| closed_value[s].is_none()).collect();
    let k = transient.len();
    let mut m = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for (a, &s) in transient.iter().enumerate() {
        m[a][a] = 1.0;
        for (b, &t) in transient.iter().enumerate() {
            m[a][b] -= p[s][t];
        }
        rhs[a] = (0..n).filter_map(|t| closed_value[t].map(|v| p[s][t] * v)).sum();
    }
    let u = solve(m, rhs).expect("transient block is invertible");
    u[transient.iter().position(|&s| s == start).unwrap()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub empirical_mean: f64,
    pub horizon: u64,
    pub seed: u64,
    /// Sample standard deviation of the per-stage payoffs.
    pub std_dev: f64,
    /// Minimum running average over the final 10% of prefixes.
    pub liminf_diagnostic: f64,
    /// `(t, running average after t stages)` at up to [`CHECKPOINTS`]
    /// evenly spaced prefixes, always including `t = horizon`.
    pub running_averages: Vec<(u64, f64)>,
}

impl SimulationResult {
    /// `3 σ̂ / √T`.
    pub fn three_sigma(&self) -> f64 {
        3.0 * self.std_dev / (self.horizon as f64).sqrt()
    }
}

/// Unit float from the top 53 bits.
fn unit(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF draw; round-off at the top falls to the last positive entry.
fn draw(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Plays `T` stages from state 0. Each stage draws Player 1's row, then
/// Player 2's column, from one SplitMix64 stream seeded with `seed`. The
/// first stage pays no switching cost.
pub fn simulate_play(
    game: &SwitchGame,
    c: f64,
    sigma: &StationaryStrategy,
    tau: &StationaryStrategy,
    horizon: u64,
    seed: u64,
) -> Result<SimulationResult> {
    check_pair(game, sigma, tau)?;
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let (a, s) = (game.payoffs(), game.switching());
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut state = 0usize;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let tail_start = horizon - horizon / 10;
    let mut liminf = f64::INFINITY;
    let every = horizon.div_ceil(CHECKPOINTS as u64);
    let mut running = Vec::new();
    for t in 1..=horizon {
        let i = draw(sigma.action(state).probs(), unit(&mut rng));
        let j = draw(tau.action(state).probs(), unit(&mut rng));
        let mut u = a.get(i, j);
        if t > 1 {
            u += c * s.get(state, j);
        }
        sum += u;
        sum_sq += u * u;
        state = j;
        let avg = sum / t as f64;
        if t >= tail_start {
            liminf = liminf.min(avg);
        }
        if t % every == 0 || t == horizon {
            running.push((t, avg));
        }
    }
    let t = horizon as f64;
    let mean = sum / t;
    let var = if horizon > 1 {
        ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SimulationResult {
        empirical_mean: mean,
        horizon,
        seed,
        std_dev: var.sqrt(),
        liminf_diagnostic: liminf,
        running_averages: running,
    })
}

/// Player 1's pure best reply to the static action `y`, in every state.
pub fn best_reply_to_static(game: &SwitchGame, y: &MixedAction) -> StationaryStrategy {
    let ay = game.payoffs().mul_vec(y.probs());
    let mut best = 0;
    for i in 1..ay.len() {
        if ay[i] > ay[best] {
            best = i;
        }
    }
    StationaryStrategy::static_strategy(Player::Player1, game.n(), MixedAction::pure(game.m(), best))
}
