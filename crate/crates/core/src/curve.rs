//! Piecewise-linear concave value curves and their tracing.
//!
//! Both `v(c)` and, for uniform switching costs, `ṽ(c)` are lower envelopes
//! of finitely many lines, and every solve returns the line of the strategy
//! it found. A line that is optimal at `c` supports the envelope there, which
//! is all the tracer needs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of linear pieces of a traced curve.
pub const MAX_SEGMENTS: usize = 200;

/// `intercept + slope * c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub intercept: f64,
    pub slope: f64,
}

impl Line {
    pub fn new(intercept: f64, slope: f64) -> Self {
        Line { intercept, slope }
    }

    pub fn at(&self, c: f64) -> f64 {
        self.intercept + self.slope * c
    }

    pub fn approx_eq(&self, other: &Line, tol: f64) -> bool {
        (self.intercept - other.intercept).abs() <= tol && (self.slope - other.slope).abs() <= tol
    }

    /// The `c` where the two lines cross, if they are not parallel.
    pub fn intersect(&self, other: &Line) -> Option<f64> {
        let ds = self.slope - other.slope;
        (ds.abs() > 1e-14).then(|| (other.intercept - self.intercept) / ds)
    }
}

/// A reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Best continued-fraction approximation of `x` with denominator at most
    /// `max_den`, accepted only if it lies within `tol` of `x`.
    pub fn snap(x: f64, max_den: i64, tol: f64) -> Option<Rational> {
        if !x.is_finite() {
            return None;
        }
        let (mut h0, mut h1) = (0i64, 1i64);
        let (mut k0, mut k1) = (1i64, 0i64);
        let mut r = x;
        for _ in 0..64 {
            let a = r.floor();
            if a.abs() > 1e15 {
                break;
            }
            let a = a as i64;
            let (Some(h2), Some(k2)) = (
                a.checked_mul(h1).and_then(|v| v.checked_add(h0)),
                a.checked_mul(k1).and_then(|v| v.checked_add(k0)),
            ) else {
                break;
            };
            if k2 > max_den {
                break;
            }
            (h0, h1, k0, k1) = (h1, h2, k1, k2);
            let frac = r - a as f64;
            if frac.abs() < 1e-12 {
                break;
            }
            r = 1.0 / frac;
        }
        let candidate = Rational { num: h1, den: k1 };
        (k1 > 0 && (candidate.to_f64() - x).abs() <= tol).then_some(candidate)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// A breakpoint as computed and, when a small fraction lies within 1e-8, as
/// that fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub raw: f64,
    pub snapped: Option<Rational>,
}

impl Breakpoint {
    pub fn new(raw: f64) -> Self {
        Breakpoint {
            raw,
            snapped: Rational::snap(raw, 10_000, 1e-8),
        }
    }
}

/// Piece `k` applies on `[breakpoints[k], breakpoints[k + 1])`; the last
/// piece extends to infinity. `breakpoints[0]` is always 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearCurve {
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<Line>,
    /// Right end of the interval the curve was actually traced on.
    pub traced_to: f64,
}

impl PiecewiseLinearCurve {
    pub fn constant(value: f64, traced_to: f64) -> Self {
        PiecewiseLinearCurve {
            breakpoints: vec![0.0],
            pieces: vec![Line::new(value, 0.0)],
            traced_to,
        }
    }

    pub fn segment_index(&self, c: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= c).saturating_sub(1)
    }

    pub fn eval(&self, c: f64) -> f64 {
        self.pieces[self.segment_index(c)].at(c)
    }

    pub fn slope_at(&self, c: f64) -> f64 {
        self.pieces[self.segment_index(c)].slope
    }

    /// Breakpoints other than the leading 0.
    pub fn interior_breakpoints(&self) -> Vec<Breakpoint> {
        self.breakpoints[1..].iter().map(|&b| Breakpoint::new(b)).collect()
    }

    /// The tail piece.
    pub fn tail(&self) -> Line {
        *self.pieces.last().expect("curve has at least one piece")
    }

    /// Continuity at every breakpoint, nonnegative slopes, and nonincreasing
    /// slopes. Returns a description of every violation.
    pub fn check_shape(&self, tol: f64) -> Vec<String> {
        let mut issues = Vec::new();
        if self.breakpoints.first() != Some(&0.0) {
            issues.push("curve does not start at 0".to_string());
        }
        if self.breakpoints.len() != self.pieces.len() {
            issues.push("breakpoint and piece counts differ".to_string());
            return issues;
        }
        for (k, w) in self.breakpoints.windows(2).enumerate() {
            if w[1] <= w[0] {
                issues.push(format!("breakpoints {k} and {} are not increasing", k + 1));
            }
            let (l, r) = (self.pieces[k], self.pieces[k + 1]);
            let jump = (l.at(w[1]) - r.at(w[1])).abs();
            if jump > tol {
                issues.push(format!("jump of {jump:.3e} at c = {}", w[1]));
            }
            if r.slope > l.slope + tol {
                issues.push(format!("slope increases at c = {}", w[1]));
            }
        }
        for (k, p) in self.pieces.iter().enumerate() {
            if p.slope < -tol {
                issues.push(format!("piece {k} has negative slope {}", p.slope));
            }
        }
        issues
    }
}

/// Traces a concave piecewise-linear function on `[0, c_max]`.
///
/// `eval(c)` must return the function value at `c` together with a line that
/// is optimal at `c` (touches the function there and lies on or above it
/// everywhere). Starting from the lines at both ends, the interval is split at
/// the crossing of the two bounding lines: if the function reaches the lines
/// there, the crossing is a breakpoint, otherwise the line found at the
/// crossing is a new piece and both halves are refined. Each refinement
/// discovers a new piece, so the number of evaluations is linear in the
/// number of pieces.
pub fn trace_concave<F>(mut eval: F, c_max: f64, max_segments: usize) -> Result<PiecewiseLinearCurve>
where
    F: FnMut(f64) -> Result<(f64, Line)>,
{
    if !(c_max > 0.0) || !c_max.is_finite() {
        return Err(Error::Precondition(format!(
            "c_max must be positive and finite, got {c_max}"
        )));
    }
    let (_, first) = eval(0.0)?;
    let (_, last) = eval(c_max)?;
    let mut segments: Vec<(Line, f64, f64)> = Vec::new();
    let mut budget = 4 * max_segments + 16;
    refine(&mut eval, 0.0, first, c_max, last, &mut segments, &mut budget, max_segments)?;
    Ok(assemble(segments, c_max))
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    eval: &mut F,
    a: f64,
    la: Line,
    b: f64,
    lb: Line,
    out: &mut Vec<(Line, f64, f64)>,
    budget: &mut usize,
    max_segments: usize,
) -> Result<()>
where
    F: FnMut(f64) -> Result<(f64, Line)>,
{
    let scale = 1.0 + la.intercept.abs().max(lb.intercept.abs());
    if la.approx_eq(&lb, 1e-12 * scale) {
        out.push((la, a, b));
        return Ok(());
    }
    let x = la.intersect(&lb).unwrap_or(b).clamp(a, b);
    if *budget == 0 || out.len() > max_segments {
        return Err(Error::resource("value-curve segments", max_segments));
    }
    *budget -= 1;
    let (value, lx) = eval(x)?;
    if value >= la.at(x).min(lb.at(x)) - 1e-9 * scale {
        out.push((la, a, x));
        out.push((lb, x, b));
        return Ok(());
    }
    refine(eval, a, la, x, lx, out, budget, max_segments)?;
    refine(eval, x, lx, b, lb, out, budget, max_segments)
}

fn assemble(segments: Vec<(Line, f64, f64)>, c_max: f64) -> PiecewiseLinearCurve {
    let mut merged: Vec<(Line, f64, f64)> = Vec::new();
    for (line, start, end) in segments {
        if end - start <= 1e-12 * (1.0 + end.abs()) && !merged.is_empty() {
            continue;
        }
        match merged.last_mut() {
            Some(prev) if prev.0.approx_eq(&line, 1e-10 * (1.0 + line.intercept.abs())) => {
                prev.2 = end;
            }
            Some(prev) if prev.2 - prev.1 <= 1e-12 * (1.0 + prev.2.abs()) => {
                // A leading zero-length piece (optimal only at c = 0).
                *prev = (line, prev.1, end);
            }
            _ => merged.push((line, start, end)),
        }
    }
    PiecewiseLinearCurve {
        breakpoints: merged.iter().map(|s| s.1).collect(),
        pieces: merged.iter().map(|s| s.0).collect(),
        traced_to: c_max,
    }
}
