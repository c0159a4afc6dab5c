//! Loss bounds between the static and stationary values, and the
//! thresholds they are built from. Every bound assumes the canonical
//! normalization (payoffs in `[0, 1]`, smallest nonzero switching cost 1).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{MixedAction, SwitchGame};
use crate::linalg::{dot, lex_cmp, subsets, Matrix};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::matrixgame::{matrix_game_value, optimal_strategy_vertices, pure_minimax};
use crate::polytope::{clean_simplex_point, face_stationary_point};
use crate::stationary::trace_value_curve;

const N_CAP: usize = 6;

fn require_canonical(game: &SwitchGame) -> Result<()> {
    if game.is_canonical() {
        Ok(())
    } else {
        Err(Error::Precondition(
            "bounds need the canonical normalization (min A = 0, max A = 1, min nonzero S = 1); \
             call normalize() first"
                .into(),
        ))
    }
}

fn require_n(n: usize) -> Result<()> {
    if n > N_CAP {
        Err(Error::resource("quadratic support enumeration columns", N_CAP))
    } else {
        Ok(())
    }
}

/// `max_{j,k} |s_jk - s_kj|`.
pub fn asymmetry_xi(s: &Matrix) -> f64 {
    let n = s.rows();
    let mut xi: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            xi = xi.max((s.get(j, k) - s.get(k, j)).abs());
        }
    }
    xi
}

/// `M = max_y y^T S y` over the simplex, with a maximizer.
pub fn max_switch_cost(s: &Matrix) -> Result<(f64, Vec<f64>)> {
    let n = s.rows();
    require_n(n)?;
    let q = s.symmetric_part();
    let mut best = (0.0, MixedAction::pure(n, 0).probs().to_vec());
    let zero = vec![0.0; n];
    for support in subsets(n) {
        let eq = vec![(vec![1.0; n], 1.0)];
        let Some(mut y) = face_stationary_point(&q, &zero, &support, &eq) else {
            continue;
        };
        if y.iter().any(|&v| v < -1e-9) {
            continue;
        }
        clean_simplex_point(&mut y);
        let value = q.bilinear(&y, &y);
        if value > best.0 + 1e-12 {
            best = (value, y);
        }
    }
    Ok(best)
}

/// `½(1 − v(c)) + cΞ/4 + cM/4`.
pub fn bound_uniform_loss(game: &SwitchGame, c: f64, v_c: f64) -> Result<f64> {
    require_canonical(game)?;
    let xi = asymmetry_xi(game.switching());
    let (m, _) = max_switch_cost(game.switching())?;
    Ok(0.5 * (1.0 - v_c) + c * xi / 4.0 + c * m / 4.0)
}

/// For symmetric `S`: `Δ = ½(1 − v) + cM/4` and whether
/// `(1 + cM − ṽ) / (1 + cM − v) >= ½`.
pub fn bound_symmetric_ratio(game: &SwitchGame, c: f64, v_c: f64, vtilde_c: f64) -> Result<(f64, bool)> {
    require_canonical(game)?;
    if !game.switching().is_symmetric(1e-12) {
        return Err(Error::Precondition("symmetric-cost bound needs S = S^T".into()));
    }
    let (m, _) = max_switch_cost(game.switching())?;
    let delta = 0.5 * (1.0 - v_c) + c * m / 4.0;
    let den = 1.0 + c * m - v_c;
    let ok = if den <= 1e-12 {
        vtilde_c <= v_c + 1e-9
    } else {
        (1.0 + c * m - vtilde_c) / den >= 0.5 - 1e-9
    };
    Ok((delta, ok))
}

/// `½(1 + c(1 − 1/n) − v(c))` for uniform switching costs.
pub fn bound_uniform_s(game: &SwitchGame, c: f64, v_c: f64) -> Result<f64> {
    require_canonical(game)?;
    require_uniform(game)?;
    let n = game.n() as f64;
    Ok(0.5 * (1.0 + c * (1.0 - 1.0 / n) - v_c))
}

fn require_uniform(game: &SwitchGame) -> Result<()> {
    if game.has_uniform_switching() {
        Ok(())
    } else {
        Err(Error::Precondition("needs uniform switching costs".into()))
    }
}

/// The cheapest optimal static action: `argmin_{y in 𝒜} y^T S y`, where `𝒜`
/// is Player 2's optimal set in `A`; the lexicographically smallest minimizer
/// on ties. Candidates are the vertices of `𝒜` and the stationary points of
/// the quadratic on every face.
pub fn cheapest_optimal_action(game: &SwitchGame) -> Result<(MixedAction, f64)> {
    let (m, n) = (game.m(), game.n());
    require_n(n)?;
    let a = game.payoffs();
    let v = matrix_game_value(a)?.value;
    let q = game.switching().symmetric_part();
    let zero = vec![0.0; n];
    let tol = 1e-9 * (1.0 + v.abs());
    let mut candidates: Vec<Vec<f64>> = optimal_strategy_vertices(a)?
        .into_iter()
        .map(|y| y.probs().to_vec())
        .collect();
    let mut row_sets: Vec<Vec<usize>> = vec![Vec::new()];
    row_sets.extend(subsets(m));
    for support in subsets(n) {
        for rows in row_sets.iter().filter(|t| t.len() < support.len()) {
            let mut eq = vec![(vec![1.0; n], 1.0)];
            eq.extend(rows.iter().map(|&i| (a.row(i).to_vec(), v)));
            let Some(mut y) = face_stationary_point(&q, &zero, &support, &eq) else {
                continue;
            };
            if y.iter().any(|&p| p < -1e-9) {
                continue;
            }
            clean_simplex_point(&mut y);
            if a.mul_vec(&y).iter().all(|&r| r <= v + tol) {
                candidates.push(y);
            }
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for y in candidates {
        let s = q.bilinear(&y, &y);
        let better = match &best {
            None => true,
            Some((bs, by)) => s < bs - 1e-12 || (s <= bs + 1e-12 && lex_cmp(&y, by, 1e-12).is_lt()),
        };
        if better {
            best = Some((s, y));
        }
    }
    let (s, y) = best.ok_or_else(|| Error::solver("optimal set has no candidate point", f64::NAN))?;
    Ok((MixedAction::from_solver(y, 1e-9)?, s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UbarC {
    /// Largest `c` for which the static `y_star` stays optimal; infinite
    /// when it is optimal for every `c`.
    pub ubar_c: f64,
    pub y_star: MixedAction,
    /// `y_star^T S y_star`.
    pub s: f64,
    /// Per state, the largest `c` keeping `y_star` optimal there.
    pub per_state: Vec<f64>,
}

impl UbarC {
    /// False when no static strategy is optimal for any `c > 0`.
    pub fn static_optimal_near_zero(&self) -> bool {
        self.ubar_c > 1e-12
    }
}

/// The largest `c` up to which the static `y*` (cheapest optimal action) is
/// an optimal stationary strategy, with value `v + c s`.
///
/// With `y*` played in every state the continuation payoffs are
/// `h_s = c((S y*)_s − (S y*)_0)`. In state `s` Player 1 must hold Player 2
/// to that payoff with an action on the rows that are best against `y*`:
/// `(xA)_j − v + c[(s_sj + (S y*)_j) − (S y*)_s − s] >= 0`, with equality on
/// the support of `y*`. This is linear in `(x, c)`, so the largest feasible
/// `c` per state is one small LP.
pub fn ubar_c(game: &SwitchGame) -> Result<UbarC> {
    let a = game.payoffs();
    let (pure_value, pure_cols) = pure_minimax(a);
    let v = matrix_game_value(a)?.value;
    if pure_value <= v + 1e-9 * (1.0 + v.abs()) {
        return Err(Error::TrivialPure { column: pure_cols[0] });
    }
    let (y_star, s) = cheapest_optimal_action(game)?;
    let y = y_star.probs();
    let (m, n) = (game.m(), game.n());
    let sm = game.switching();
    let sy = sm.mul_vec(y);
    let ay = a.mul_vec(y);
    let top: Vec<usize> = (0..m).filter(|&i| ay[i] >= v - 1e-9).collect();
    let support = y_star.support(1e-12);
    let mut per_state = Vec::with_capacity(n);
    for st in 0..n {
        // Variables: x over `top`, then c.
        let k = top.len();
        let mut obj = vec![0.0; k + 1];
        obj[k] = 1.0;
        let mut lp = LinearProgram::maximize(obj);
        let mut sum = vec![1.0; k + 1];
        sum[k] = 0.0;
        lp.constrain(sum, Relation::Eq, 1.0);
        for j in 0..n {
            let mut row: Vec<f64> = top.iter().map(|&i| a.get(i, j)).collect();
            row.push(sm.get(st, j) + sy[j] - sy[st] - s);
            let rel = if support.contains(&j) { Relation::Eq } else { Relation::Ge };
            lp.constrain(row, rel, v);
        }
        let bound = match lp.solve()? {
            LpOutcome::Optimal { objective, .. } => objective.max(0.0),
            LpOutcome::Unbounded => f64::INFINITY,
            LpOutcome::Infeasible => 0.0,
        };
        per_state.push(bound);
    }
    let ubar = per_state.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(UbarC {
        ubar_c: ubar,
        y_star,
        s,
        per_state,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarC {
    /// `ĉ = v̄`, an upper bound on the threshold above which the pure minimax
    /// action is optimal.
    pub c_hat: f64,
    /// Start of the final flat piece of the traced value curve at `v̄`.
    pub empirical: Option<f64>,
}

pub fn bar_c_upper(game: &SwitchGame) -> Result<BarC> {
    require_canonical(game)?;
    if !game.has_positive_switching() {
        return Err(Error::Precondition(
            "the threshold bound needs every off-diagonal switching cost to be positive".into(),
        ));
    }
    let (v_bar, _) = pure_minimax(game.payoffs());
    let c_hat = v_bar;
    let empirical = if c_hat <= 0.0 {
        Some(0.0)
    } else {
        let curve = trace_value_curve(game, 1.05 * c_hat)?;
        let tail = curve.tail();
        let start = *curve.breakpoints.last().expect("nonempty");
        (tail.slope.abs() <= 1e-7 && (tail.at(start) - v_bar).abs() <= 1e-7).then_some(start)
    };
    Ok(BarC { c_hat, empirical })
}

/// Everything the bounds need, computed once per (normalized) game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundLedger {
    pub n: usize,
    pub v: f64,
    pub v_bar: f64,
    pub xi: f64,
    #[serde(rename = "M")]
    pub m_cost: f64,
    pub symmetric: bool,
    pub uniform: bool,
    /// Column with a pure optimal action, when there is one.
    pub trivial_pure: Option<usize>,
    pub ubar_c: Option<f64>,
    pub y_star: Option<MixedAction>,
    pub s: Option<f64>,
    pub c0: Option<f64>,
    pub bar_c_upper: Option<f64>,
    pub bar_c_empirical: Option<f64>,
    /// Pure minimax column used for the mixture bound.
    pub y_bar: usize,
    pub s_hat: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub notes: Vec<String>,
}

impl BoundLedger {
    pub fn build(game: &SwitchGame) -> Result<Self> {
        require_canonical(game)?;
        let a = game.payoffs();
        let v = matrix_game_value(a)?.value;
        let (v_bar, pure_cols) = pure_minimax(a);
        let xi = asymmetry_xi(game.switching());
        let (m_cost, _) = max_switch_cost(game.switching())?;
        let mut notes = Vec::new();
        let mut ledger = BoundLedger {
            n: game.n(),
            v,
            v_bar,
            xi,
            m_cost,
            symmetric: game.switching().is_symmetric(1e-12),
            uniform: game.has_uniform_switching(),
            trivial_pure: None,
            ubar_c: None,
            y_star: None,
            s: None,
            c0: None,
            bar_c_upper: None,
            bar_c_empirical: None,
            y_bar: pure_cols[0],
            s_hat: None,
            c1: None,
            c2: None,
            notes: Vec::new(),
        };
        match ubar_c(game) {
            Ok(u) => {
                ledger.ubar_c = Some(u.ubar_c);
                ledger.s = Some(u.s);
                if u.s > 0.0 {
                    ledger.c0 = Some((v_bar - v) / u.s);
                }
                if !u.static_optimal_near_zero() {
                    notes.push("no static strategy is optimal for any c > 0 (ubar_c = 0)".into());
                }
                // ŝ from the pure minimax column giving the smallest value.
                let sm = game.switching();
                let y = u.y_star.probs();
                let (sy, sty) = (sm.mul_vec(y), sm.transpose().mul_vec(y));
                let (col, s_hat) = pure_cols
                    .iter()
                    .map(|&j| (j, sy[j] + sty[j]))
                    .min_by(|p, q| p.1.total_cmp(&q.1))
                    .expect("at least one pure minimax column");
                ledger.y_bar = col;
                ledger.s_hat = Some(s_hat);
                if let Some(c0) = ledger.c0 {
                    if u.s > s_hat {
                        ledger.c1 = Some(c0 * u.s / (2.0 * u.s - s_hat));
                        ledger.c2 = Some(if s_hat > 0.0 { c0 * u.s / s_hat } else { f64::INFINITY });
                    } else {
                        notes.push("mixture bound inapplicable: s <= ŝ".into());
                    }
                }
                ledger.y_star = Some(u.y_star);
            }
            Err(Error::TrivialPure { column }) => {
                ledger.trivial_pure = Some(column);
                notes.push(format!(
                    "column {column} is optimal without switching costs, so v(c) = ṽ(c) = v for all c"
                ));
            }
            Err(e) => return Err(e),
        }
        match bar_c_upper(game) {
            Ok(b) => {
                ledger.bar_c_upper = Some(b.c_hat);
                ledger.bar_c_empirical = b.empirical;
            }
            Err(Error::Precondition(msg)) => notes.push(msg),
            Err(e) => return Err(e),
        }
        ledger.notes = notes;
        Ok(ledger)
    }

    /// The threshold used by the piecewise bound and whether it is the
    /// looser `ĉ`.
    fn bar_c(&self) -> Option<(f64, bool)> {
        match (self.bar_c_empirical, self.bar_c_upper) {
            (Some(c), _) => Some((c, false)),
            (None, Some(c)) => Some((c, true)),
            _ => None,
        }
    }

    /// Piecewise loss bound; `Err` carries the reason it does not apply.
    pub fn loss(&self, c: f64) -> std::result::Result<(f64, bool), String> {
        if self.trivial_pure.is_some() {
            return Ok((0.0, false));
        }
        let (ubar, s) = match (self.ubar_c, self.s) {
            (Some(u), Some(s)) => (u, s),
            _ => return Err("ubar_c unavailable".into()),
        };
        if s <= 0.0 {
            return Ok((0.0, false));
        }
        let c0 = self.c0.expect("s > 0 gives c0");
        let (bar, loose) = self.bar_c().ok_or("needs positive off-diagonal switching costs")?;
        if c <= ubar || c >= bar || bar <= ubar {
            return Ok((0.0, loose));
        }
        let value = if c <= c0 {
            (c - ubar) * (bar - c0) / (bar - ubar) * s
        } else {
            (bar - c) * (c0 - ubar) / (bar - ubar) * s
        };
        Ok((value.max(0.0), loose))
    }

    /// Mixture bound and the matching upper estimate of `ṽ(c)`.
    pub fn mixture(&self, c: f64) -> std::result::Result<(f64, f64), String> {
        let (Some(c1), Some(c2)) = (self.c1, self.c2) else {
            return Err(if self.uniform {
                "s <= ŝ (uniform S)".into()
            } else {
                "s <= ŝ or ubar_c unavailable".into()
            });
        };
        let (ubar, s, s_hat) = (self.ubar_c.unwrap(), self.s.unwrap(), self.s_hat.unwrap());
        let (bar, _) = self.bar_c().ok_or("needs positive off-diagonal switching costs")?;
        if c < c1 || c > c2 || c <= ubar || c >= bar {
            return Err(format!("c outside the window [{c1}, {c2}] ∩ ({ubar}, {bar})"));
        }
        let (v, vb) = (self.v, self.v_bar);
        let quad = (vb - v - c * s_hat).powi(2) / (4.0 * c * (s - s_hat));
        let delta = (vb - v - ubar * s) * (bar - c) / (bar - ubar) - quad;
        Ok((delta, vb - quad))
    }

    /// All bounds at one `c`, given measured `v(c)` and `ṽ(c)`.
    pub fn evaluate(&self, game: &SwitchGame, c: f64, v_c: f64, vtilde_c: f64) -> BoundRow {
        let gap = vtilde_c - v_c;
        let mut bounds = BTreeMap::new();
        let mut reasons = BTreeMap::new();
        let uniform_loss = 0.5 * (1.0 - v_c) + c * self.xi / 4.0 + c * self.m_cost / 4.0;
        bounds.insert("uniform_loss".to_string(), uniform_loss);
        let mut symmetric_ratio_ok = None;
        if self.symmetric {
            match bound_symmetric_ratio(game, c, v_c, vtilde_c) {
                Ok((d, ok)) => {
                    bounds.insert("symmetric".into(), d);
                    symmetric_ratio_ok = Some(ok);
                }
                Err(e) => {
                    reasons.insert("symmetric".into(), e.to_string());
                }
            }
        } else {
            reasons.insert("symmetric".into(), "S is not symmetric".into());
        }
        match self.loss(c) {
            Ok((d, loose)) => {
                bounds.insert("loss".into(), d);
                if loose {
                    reasons.insert("loss".into(), "bound computed with ĉ >= c̄, hence looser".into());
                }
            }
            Err(r) => {
                reasons.insert("loss".into(), r);
            }
        }
        match self.mixture(c) {
            Ok((d, _)) => {
                bounds.insert("mixture".into(), d);
            }
            Err(r) => {
                reasons.insert("mixture".into(), r);
            }
        }
        if self.uniform {
            let n = self.n as f64;
            bounds.insert("uniform_s".into(), 0.5 * (1.0 + c * (1.0 - 1.0 / n) - v_c));
        } else {
            reasons.insert("uniform_s".into(), "S is not uniform".into());
        }
        let dominates = bounds
            .iter()
            .map(|(k, &b)| (k.clone(), b >= gap - 1e-7))
            .collect();
        BoundRow {
            c,
            v: v_c,
            vtilde: vtilde_c,
            gap,
            bounds,
            dominates,
            symmetric_ratio_ok,
            reasons,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub c: f64,
    pub v: f64,
    pub vtilde: f64,
    pub gap: f64,
    pub bounds: BTreeMap<String, f64>,
    /// Per bound, whether it is at least the measured gap (within 1e-7).
    pub dominates: BTreeMap<String, bool>,
    pub symmetric_ratio_ok: Option<bool>,
    /// Why a bound is absent or flagged.
    pub reasons: BTreeMap<String, String>,
}

/// Stand-alone evaluation of the piecewise bound.
pub fn bound_loss(game: &SwitchGame, c: f64) -> Result<f64> {
    let ledger = BoundLedger::build(game)?;
    ledger.loss(c).map(|(d, _)| d).map_err(Error::Precondition)
}

/// Stand-alone evaluation of the mixture bound; `None` when inapplicable.
pub fn bound_mixture(game: &SwitchGame, c: f64) -> Result<Option<f64>> {
    let ledger = BoundLedger::build(game)?;
    Ok(ledger.mixture(c).ok().map(|(d, _)| d))
}

/// Whether `s > ŝ` can hold with uniform costs, evaluated as
/// `(2ȳ − y*)·y* > 1` for every pure minimax column `ȳ`.
pub fn check_s_hat_condition(game: &SwitchGame) -> Result<bool> {
    require_uniform(game)?;
    let (y_star, _) = cheapest_optimal_action(game)?;
    let (_, cols) = pure_minimax(game.payoffs());
    let y = y_star.probs();
    Ok(cols.iter().any(|&j| {
        let mut two_bar = vec![0.0; y.len()];
        two_bar[j] = 2.0;
        let diff: Vec<f64> = two_bar.iter().zip(y).map(|(b, p)| b - p).collect();
        dot(&diff, y) > 1.0 + 1e-12
    }))
}
