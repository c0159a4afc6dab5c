//! Static-strategy minimax `ṽ(c) = min_y max_i A_i y + c y^T S y`.
//!
//! Only the symmetric part of `S` enters the quadratic form. The objective
//! is a maximum of quadratics, so its global minimum sits at a stationary
//! point of one of them restricted to a face of the simplex and to the set
//! where some rows tie. The general solver enumerates all such systems; for
//! uniform switching costs the minimum is at a vertex of a best-response
//! region, which gives an exact, c-independent candidate set.

use serde::{Deserialize, Serialize};

use crate::curve::{trace_concave, Line, PiecewiseLinearCurve, MAX_SEGMENTS};
use crate::error::{Error, Result};
use crate::game::{MixedAction, SwitchGame};
use crate::linalg::{dot, lex_cmp, subsets, Matrix};
use crate::polytope::{clean_simplex_point, face_stationary_point, simplex_vertices, VERTEX_CAP};

/// Largest number of columns the enumeration accepts.
pub const STATIC_N_CAP: usize = 6;
/// Largest number of rows the enumeration accepts.
pub const STATIC_M_CAP: usize = 12;
/// Best-response membership tolerance.
pub const REGION_TOL: f64 = 1e-8;
/// Approximate lattice size used for the built-in grid cross-check.
const ORACLE_POINTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StaticMethod {
    SupportEnumeration,
    UniformVertex,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticSolveResult {
    pub value: f64,
    pub y_star: MixedAction,
    pub best_rows: Vec<usize>,
    pub method: StaticMethod,
    /// Grid-oracle value minus `value`, when the oracle was run.
    pub oracle_gap: Option<f64>,
    /// Lattice resolution of the oracle run.
    pub oracle_k: Option<usize>,
}

/// `x^T A y + c y^T S y`.
pub fn static_payoff(game: &SwitchGame, c: f64, x: &MixedAction, y: &MixedAction) -> f64 {
    game.payoffs().bilinear(x.probs(), y.probs()) + c * game.switching().bilinear(y.probs(), y.probs())
}

/// `max_i A_i y + c y^T S y`: the payoff of `y` against a best response.
pub fn best_response_value(game: &SwitchGame, c: f64, y: &[f64]) -> f64 {
    max_row(game.payoffs(), y) + c * game.switching().bilinear(y, y)
}

fn max_row(a: &Matrix, y: &[f64]) -> f64 {
    a.mul_vec(y).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn best_rows(a: &Matrix, y: &[f64]) -> Vec<usize> {
    let ay = a.mul_vec(y);
    let top = ay.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..ay.len()).filter(|&i| ay[i] >= top - REGION_TOL).collect()
}

fn check_c(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("c must be finite and >= 0, got {c}")))
    }
}

/// Keeps the lowest value; near-ties go to the lexicographically smaller
/// point.
pub(crate) struct Best {
    pub value: f64,
    pub y: Vec<f64>,
}

impl Best {
    pub fn new() -> Self {
        Best {
            value: f64::INFINITY,
            y: Vec::new(),
        }
    }

    pub fn offer(&mut self, value: f64, y: &[f64]) {
        let tol = 1e-11 * (1.0 + value.abs());
        let better = value < self.value - tol
            || (value <= self.value + tol && lex_cmp(y, &self.y, 1e-12).is_lt());
        if better {
            self.value = value;
            self.y = y.to_vec();
        }
    }
}

/// Stationary-point candidates of the general static problem.
///
/// For every support `U` and tied row set `T` (`|T| <= |U|`), with `k` the
/// first row of `T`: minimize `A_k y + c y^T S_sym y` subject to
/// `sum_U y = 1` and `(A_i - A_k) y = 0` for `i` in `T`.
fn enumerate_static(game: &SwitchGame, c: f64) -> Result<Best> {
    let (m, n) = (game.m(), game.n());
    if n > STATIC_N_CAP {
        return Err(Error::resource("static support enumeration columns", STATIC_N_CAP));
    }
    if m > STATIC_M_CAP {
        return Err(Error::resource("static support enumeration rows", STATIC_M_CAP));
    }
    let a = game.payoffs();
    let q = game.switching().symmetric_part().map(|v| c * v);
    let mut best = Best::new();
    for j in 0..n {
        let y = MixedAction::pure(n, j);
        best.offer(best_response_value(game, c, y.probs()), y.probs());
    }
    let row_sets: Vec<Vec<usize>> = subsets(m).collect();
    for support in subsets(n) {
        for rows in row_sets.iter().filter(|t| t.len() <= support.len()) {
            let k = rows[0];
            let mut eq = vec![(vec![1.0; n], 1.0)];
            for &i in &rows[1..] {
                let diff: Vec<f64> = (0..n).map(|j| a.get(i, j) - a.get(k, j)).collect();
                eq.push((diff, 0.0));
            }
            let Some(mut y) = face_stationary_point(&q, a.row(k), &support, &eq) else {
                continue;
            };
            if y.iter().any(|&v| v < -1e-9) {
                continue;
            }
            clean_simplex_point(&mut y);
            best.offer(best_response_value(game, c, &y), &y);
        }
    }
    Ok(best)
}

/// Global static minimax at `c`, cross-checked against the grid oracle
/// when `n <= 5`.
pub fn static_minimax(game: &SwitchGame, c: f64) -> Result<StaticSolveResult> {
    static_minimax_with(game, c, true)
}

pub fn static_minimax_with(game: &SwitchGame, c: f64, run_oracle: bool) -> Result<StaticSolveResult> {
    check_c(c)?;
    let best = enumerate_static(game, c)?;
    let mut result = finish(game, best, StaticMethod::SupportEnumeration)?;
    if run_oracle && game.n() <= 5 {
        let k = oracle_resolution(game.n());
        let oracle = grid_oracle(game, c, k)?;
        let gap = oracle.value - result.value;
        let scale = 1.0 + result.value.abs();
        if gap < -1e-7 * scale {
            return Err(Error::solver(
                format!("grid oracle found {} below the enumerated minimum {}", oracle.value, result.value),
                -gap,
            ));
        }
        result.oracle_gap = Some(gap);
        result.oracle_k = Some(k);
    }
    Ok(result)
}

fn finish(game: &SwitchGame, best: Best, method: StaticMethod) -> Result<StaticSolveResult> {
    let y_star = MixedAction::from_solver(best.y, 1e-9)?;
    Ok(StaticSolveResult {
        value: best.value,
        best_rows: best_rows(game.payoffs(), y_star.probs()),
        y_star,
        method,
        oracle_gap: None,
        oracle_k: None,
    })
}

/// Largest `k >= 50` whose lattice has at most about 2e5 points.
pub(crate) fn oracle_resolution(n: usize) -> usize {
    let mut k = 50;
    while lattice_size(n, k + 1) <= ORACLE_POINTS && k < 1000 {
        k += 1;
    }
    k
}

fn lattice_size(n: usize, k: usize) -> usize {
    // C(k + n - 1, n - 1)
    let mut acc: u128 = 1;
    for i in 1..n as u128 {
        acc = acc * (k as u128 + i) / i;
    }
    acc.min(usize::MAX as u128) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOracleResult {
    pub value: f64,
    pub y: Vec<f64>,
    pub k: usize,
    /// Lipschitz constant of the objective on the simplex (max-norm to
    /// value); the lattice minimum exceeds the true one by at most `C / k`.
    pub lipschitz: f64,
}

/// Minimum of the static objective over `{t / k : t in N^n, sum t = k}`,
/// followed by one pass of exact line searches moving mass between pairs of
/// coordinates and a local pattern search on finer lattices. Every point
/// evaluated is feasible, so the result never undercuts the true minimum.
pub fn grid_oracle(game: &SwitchGame, c: f64, k: usize) -> Result<GridOracleResult> {
    check_c(c)?;
    let n = game.n();
    if n > 5 {
        return Err(Error::Precondition(format!("grid oracle needs n <= 5, got {n}")));
    }
    if k < 50 {
        return Err(Error::Precondition(format!("grid oracle needs k >= 50, got {k}")));
    }
    let s_sym = game.switching().symmetric_part();
    let f = |y: &[f64]| max_row(game.payoffs(), y) + c * s_sym.bilinear(y, y);
    let mut best = Best::new();
    let mut t = vec![0usize; n];
    let mut y = vec![0.0; n];
    lattice(&mut t, 0, k, &mut |t| {
        for (yj, &tj) in y.iter_mut().zip(t) {
            *yj = tj as f64 / k as f64;
        }
        best.offer(f(&y), &y);
    });
    let mut y = best.y.clone();
    let mut value = best.value;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let (v, y2) = pair_line_search(game, &s_sym, c, &y, i, j);
                if v < value {
                    value = v;
                    y = y2;
                }
            }
        }
    }
    let (value, y) = zoom(&f, value, y, 1.0 / k as f64);
    let max_a = game.payoffs().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let max_s = s_sym.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(GridOracleResult {
        value,
        y,
        k,
        lipschitz: n as f64 * (max_a + 2.0 * c * max_s),
    })
}

/// Pattern search on successively finer local lattices around `y`: at each
/// level the `9^(n-1)` points within four steps are scanned until none
/// improves, then the step shrinks fourfold.
pub(crate) fn zoom(f: &impl Fn(&[f64]) -> f64, mut value: f64, mut y: Vec<f64>, step: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    if n < 2 {
        return (value, y);
    }
    let mut h = step;
    for _level in 0..10 {
        for _round in 0..8 {
            let mut improved = false;
            let mut offsets = vec![-4i32; n - 1];
            let mut z = vec![0.0; n];
            loop {
                let mut last = 1.0;
                let mut ok = true;
                for d in 0..n - 1 {
                    z[d] = y[d] + offsets[d] as f64 * h;
                    ok &= z[d] >= 0.0;
                    last -= z[d];
                }
                z[n - 1] = last;
                if ok && last >= 0.0 {
                    let v = f(&z);
                    if v < value - 1e-15 {
                        value = v;
                        y.copy_from_slice(&z);
                        improved = true;
                    }
                }
                let mut d = 0;
                while d < n - 1 {
                    offsets[d] += 1;
                    if offsets[d] <= 4 {
                        break;
                    }
                    offsets[d] = -4;
                    d += 1;
                }
                if d == n - 1 {
                    break;
                }
            }
            if !improved {
                break;
            }
        }
        h /= 4.0;
    }
    (value, y)
}

pub(crate) fn lattice(t: &mut Vec<usize>, pos: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
    if pos == t.len() - 1 {
        t[pos] = left;
        visit(t);
        return;
    }
    for v in 0..=left {
        t[pos] = v;
        lattice(t, pos + 1, left - v, visit);
    }
}

/// Exact minimum of the objective along `y + s (e_i - e_j)`. Between the
/// points where two rows tie the objective is linear plus a concave
/// quadratic, so the minimum is at a tie point or an end point.
fn pair_line_search(
    game: &SwitchGame,
    s_sym: &Matrix,
    c: f64,
    y: &[f64],
    i: usize,
    j: usize,
) -> (f64, Vec<f64>) {
    let a = game.payoffs();
    let (lo, hi) = (-y[i], y[j]);
    let mut steps = vec![lo, hi];
    let base = a.mul_vec(y);
    let dir: Vec<f64> = (0..a.rows()).map(|r| a.get(r, i) - a.get(r, j)).collect();
    for r in 0..a.rows() {
        for q in r + 1..a.rows() {
            let dd = dir[r] - dir[q];
            if dd.abs() > 1e-15 {
                let s = (base[q] - base[r]) / dd;
                if s > lo && s < hi {
                    steps.push(s);
                }
            }
        }
    }
    let mut best = (f64::INFINITY, y.to_vec());
    for s in steps {
        let mut z = y.to_vec();
        z[i] += s;
        z[j] -= s;
        clean_simplex_point(&mut z);
        let v = max_row(a, &z) + c * s_sym.bilinear(&z, &z);
        if v < best.0 {
            best = (v, z);
        }
    }
    best
}

/// Candidate actions for uniform switching costs: all vertices of the
/// best-response regions `{y : A_i y >= A_l y for all l}`. On this set
/// `ṽ(c) = min_y max_i A_i y + c (1 - |y|^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformCandidates {
    /// `(y, max_i A_i y, 1 - |y|^2)`.
    pub points: Vec<(Vec<f64>, f64, f64)>,
}

impl UniformCandidates {
    pub fn new(game: &SwitchGame) -> Result<Self> {
        if !game.has_uniform_switching() {
            return Err(Error::Precondition(
                "uniform-cost solver needs s_ij = 1 for all i != j".into(),
            ));
        }
        let (a, n) = (game.payoffs(), game.n());
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for i in 0..game.m() {
            let ineq: Vec<(Vec<f64>, f64)> = (0..game.m())
                .filter(|&l| l != i)
                .map(|l| ((0..n).map(|j| a.get(l, j) - a.get(i, j)).collect(), 0.0))
                .collect();
            for y in simplex_vertices(n, &ineq, VERTEX_CAP)? {
                if pts.iter().all(|p| crate::polytope::max_distance(p, &y) > 1e-10) {
                    pts.push(y);
                }
            }
        }
        pts.sort_by(|p, q| lex_cmp(p, q, 0.0));
        let points = pts
            .into_iter()
            .map(|y| {
                let top = max_row(a, &y);
                let spread = 1.0 - dot(&y, &y);
                (y, top, spread)
            })
            .collect();
        Ok(UniformCandidates { points })
    }

    /// Minimum at `c` with the winning candidate's line.
    pub fn solve(&self, c: f64) -> (f64, Line, Vec<f64>) {
        let mut best = Best::new();
        for (y, top, spread) in &self.points {
            best.offer(top + c * spread, y);
        }
        let (_, top, spread) = self
            .points
            .iter()
            .find(|p| p.0 == best.y)
            .expect("the winner is one of the candidates");
        let line = Line::new(*top, *spread);
        (best.value, line, best.y)
    }
}

/// Exact uniform-cost static minimax.
pub fn static_minimax_uniform(game: &SwitchGame, c: f64) -> Result<StaticSolveResult> {
    check_c(c)?;
    let cands = UniformCandidates::new(game)?;
    let (value, _, y) = cands.solve(c);
    finish(game, Best { value, y }, StaticMethod::UniformVertex)
}

/// Static curve: exact for uniform costs, sampled otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StaticCurve {
    PiecewiseLinear { curve: PiecewiseLinearCurve },
    SemiAlgebraic { samples: SampledCurve },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    pub c: Vec<f64>,
    pub value: Vec<f64>,
    /// Per interval, the largest distance between the chord and the
    /// concavity envelope formed by the neighbouring chords.
    pub envelope_width: Vec<f64>,
}

impl StaticCurve {
    pub fn eval(&self, c: f64) -> Option<f64> {
        match self {
            StaticCurve::PiecewiseLinear { curve } => Some(curve.eval(c)),
            StaticCurve::SemiAlgebraic { samples } => samples
                .c
                .iter()
                .position(|&x| (x - c).abs() <= 1e-12)
                .map(|k| samples.value[k]),
        }
    }

    pub fn method(&self) -> StaticMethod {
        match self {
            StaticCurve::PiecewiseLinear { .. } => StaticMethod::UniformVertex,
            StaticCurve::SemiAlgebraic { .. } => StaticMethod::SupportEnumeration,
        }
    }
}

pub fn trace_static_curve(game: &SwitchGame, c_max: f64, samples: usize) -> Result<StaticCurve> {
    if samples < 16 {
        return Err(Error::Precondition(format!("need at least 16 samples, got {samples}")));
    }
    if !(c_max > 0.0) || !c_max.is_finite() {
        return Err(Error::Precondition(format!("c_max must be positive, got {c_max}")));
    }
    // Only the symmetric part of S matters, so a skewed S whose symmetric
    // part is uniform still has the exact vertex solution.
    let sym = game.symmetrized();
    if sym.has_uniform_switching() {
        let cands = UniformCandidates::new(&sym)?;
        let curve = trace_concave(
            |c| {
                let (v, line, _) = cands.solve(c);
                Ok((v, line))
            },
            c_max,
            MAX_SEGMENTS,
        )?;
        return Ok(StaticCurve::PiecewiseLinear { curve });
    }
    let cs: Vec<f64> = (0..samples)
        .map(|k| c_max * k as f64 / (samples - 1) as f64)
        .collect();
    let mut values = Vec::with_capacity(samples);
    for &c in &cs {
        values.push(static_minimax_with(game, c, false)?.value);
    }
    let sampled = sampled_curve(cs, values);
    let issues = sampled_shape_issues(&sampled, 1e-7);
    if let Some(first) = issues.first() {
        return Err(Error::solver(
            format!("static curve is not concave and nondecreasing: {first}"),
            f64::NAN,
        ));
    }
    Ok(StaticCurve::SemiAlgebraic { samples: sampled })
}

fn sampled_curve(c: Vec<f64>, value: Vec<f64>) -> SampledCurve {
    let k = c.len();
    let chord = |a: usize, b: usize| {
        let slope = (value[b] - value[a]) / (c[b] - c[a]);
        Line::new(value[a] - slope * c[a], slope)
    };
    let mut envelope_width = Vec::with_capacity(k.saturating_sub(1));
    for i in 0..k.saturating_sub(1) {
        let mid = chord(i, i + 1);
        let left = (i > 0).then(|| chord(i - 1, i));
        let right = (i + 2 < k).then(|| chord(i + 1, i + 2));
        let width = match (left, right) {
            (Some(l), Some(r)) => match l.intersect(&r) {
                Some(x) if x >= c[i] && x <= c[i + 1] => (l.at(x) - mid.at(x)).max(0.0),
                _ => 0.0,
            },
            (Some(l), None) => (l.at(c[i + 1]) - value[i + 1]).max(0.0),
            (None, Some(r)) => (r.at(c[i]) - value[i]).max(0.0),
            (None, None) => 0.0,
        };
        envelope_width.push(width);
    }
    SampledCurve {
        c,
        value,
        envelope_width,
    }
}

/// Monotonicity and sampled concavity of a static curve.
pub fn sampled_shape_issues(curve: &SampledCurve, tol: f64) -> Vec<String> {
    let (c, v) = (&curve.c, &curve.value);
    let mut issues = Vec::new();
    for i in 1..c.len() {
        if v[i] < v[i - 1] - tol {
            issues.push(format!("decreases between c = {} and c = {}", c[i - 1], c[i]));
        }
    }
    for i in 1..c.len().saturating_sub(1) {
        let t = (c[i] - c[i - 1]) / (c[i + 1] - c[i - 1]);
        let chord = v[i - 1] + t * (v[i + 1] - v[i - 1]);
        if v[i] < chord - tol {
            issues.push(format!("not concave at c = {}", c[i]));
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn pure_y_has_no_quadratic_term() {
        let g = fixtures::identity_costs();
        let x = MixedAction::uniform(3);
        let y = MixedAction::pure(3, 2);
        assert!((static_payoff(&g, 5.0, &x, &y) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn evasion_static_payoff_at_optimum() {
        let g = fixtures::evasion();
        let y = MixedAction::new(vec![6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0]).unwrap();
        let v = static_payoff(&g, 1.0, &y, &y);
        assert!((v - (6.0 / 11.0 + 72.0 / 121.0)).abs() < 1e-12);
    }

    #[test]
    fn evasion_static_minimax_both_sides_of_cutoff() {
        let g = fixtures::evasion();
        let r = static_minimax(&g, 0.5).unwrap();
        assert!((r.value - (6.0 / 11.0 + 36.0 / 121.0)).abs() < 1e-9);
        assert!(r.oracle_gap.unwrap() >= 0.0);
        assert!(r.best_rows.len() >= 2);
        let r = static_minimax(&g, 0.9).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert_eq!(r.y_star.pure_index(1e-12), Some(0));
    }

    #[test]
    fn zero_cost_is_the_matrix_game() {
        let g = fixtures::rps(0.5);
        let r = static_minimax(&g, 0.0).unwrap();
        assert!(r.value.abs() < 1e-9);
    }

    #[test]
    fn uniform_paths_agree_on_rps() {
        let g = fixtures::rps(0.0);
        for c in [0.0, 0.5, 1.0, 1.4, 1.5, 1.7, 2.0, 3.0] {
            let a = static_minimax_with(&g, c, false).unwrap();
            let b = static_minimax_uniform(&g, c).unwrap();
            assert!((a.value - b.value).abs() < 1e-9, "c = {c}");
        }
        let r = static_minimax_uniform(&g, 1.0).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_solver_rejects_other_costs() {
        let err = static_minimax_uniform(&fixtures::identity_costs(), 1.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn grid_oracle_upper_bounds() {
        let g = fixtures::evasion();
        let o = grid_oracle(&g, 0.5, 200).unwrap();
        assert!((o.value - (6.0 / 11.0 + 36.0 / 121.0)).abs() < 1e-3);
        assert!(o.value >= 6.0 / 11.0 + 36.0 / 121.0 - 1e-12);
        assert!(grid_oracle(&g, 0.5, 10).is_err());
    }

    #[test]
    fn evasion_static_curve_has_one_breakpoint() {
        let curve = trace_static_curve(&fixtures::evasion(), 2.0, 32).unwrap();
        let StaticCurve::PiecewiseLinear { curve } = curve else { panic!() };
        assert_eq!(curve.breakpoints.len(), 2);
        assert!((curve.breakpoints[1] - 55.0 / 72.0).abs() < 1e-9);
    }

    #[test]
    fn resolution_stays_near_budget() {
        assert!(lattice_size(3, oracle_resolution(3)) <= ORACLE_POINTS);
        assert_eq!(oracle_resolution(5), 50);
    }
}
