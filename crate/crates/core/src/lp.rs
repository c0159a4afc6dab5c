//! Dense two-phase primal simplex with Bland's anticycling rule.
//!
//! Solves `min c^T x` subject to rows `a_k x {<=, >=, =} b_k` and `x >= 0`.
//! Problems here have at most a few hundred rows and columns, so the whole
//! tableau is kept in memory.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

impl LinearProgram {
    /// A program minimizing `objective . x`.
    pub fn minimize(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            rows: Vec::new(),
        }
    }

    /// A program maximizing `objective . x`; the reported objective is the
    /// maximum.
    pub fn maximize(objective: Vec<f64>) -> MaximizeProgram {
        MaximizeProgram(LinearProgram::minimize(
            objective.into_iter().map(|c| -c).collect(),
        ))
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        debug_assert_eq!(coeffs.len(), self.objective.len());
        self.rows.push((coeffs, rel, rhs));
        self
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        Tableau::build(self).run(&self.objective)
    }
}

/// Thin wrapper flipping the sign of the objective on the way in and out.
#[derive(Debug, Clone)]
pub struct MaximizeProgram(LinearProgram);

impl MaximizeProgram {
    pub fn constrain(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        self.0.constrain(coeffs, rel, rhs);
        self
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        Ok(match self.0.solve()? {
            LpOutcome::Optimal { x, objective } => LpOutcome::Optimal {
                x,
                objective: -objective,
            },
            other => other,
        })
    }
}

struct Tableau {
    /// Constraint rows, each `width + 1` long (last entry is the rhs).
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_orig: usize,
    /// Columns `>= first_artificial` are artificial.
    first_artificial: usize,
    width: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.objective.len();
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = lp
            .rows
            .iter()
            .map(|(a, rel, b)| {
                if *b < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (a.iter().map(|v| -v).collect(), flipped, -b)
                } else {
                    (a.clone(), *rel, *b)
                }
            })
            .collect();
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = n + n_slack;
        let width = first_artificial + n_art;
        let mut t = Vec::with_capacity(rows.len());
        let mut basis = Vec::with_capacity(rows.len());
        let (mut slack, mut art) = (n, first_artificial);
        for (a, rel, b) in rows.drain(..) {
            let mut row = vec![0.0; width + 1];
            row[..n].copy_from_slice(&a);
            row[width] = b;
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
            }
            t.push(row);
        }
        Tableau {
            t,
            basis,
            n_orig: n,
            first_artificial,
            width,
        }
    }

    fn run(mut self, objective: &[f64]) -> Result<LpOutcome> {
        if self.first_artificial < self.width {
            let mut phase1 = vec![0.0; self.width];
            phase1[self.first_artificial..].iter_mut().for_each(|c| *c = 1.0);
            let value = match self.optimize(&phase1, self.width)? {
                Some(v) => v,
                None => unreachable!("phase one is bounded below by zero"),
            };
            let scale = self.rhs_scale();
            if value > 1e-9 * scale {
                return Ok(LpOutcome::Infeasible);
            }
            self.drive_out_artificials();
        }
        let mut cost = vec![0.0; self.width];
        cost[..self.n_orig].copy_from_slice(objective);
        match self.optimize(&cost, self.first_artificial)? {
            None => Ok(LpOutcome::Unbounded),
            Some(objective) => {
                let mut x = vec![0.0; self.n_orig];
                for (r, &b) in self.basis.iter().enumerate() {
                    if b < self.n_orig {
                        x[b] = self.t[r][self.width].max(0.0);
                    }
                }
                Ok(LpOutcome::Optimal { x, objective })
            }
        }
    }

    fn rhs_scale(&self) -> f64 {
        self.t
            .iter()
            .fold(1.0_f64, |acc, row| acc.max(row[self.width].abs()))
    }

    /// Minimizes `cost` over the current basis using only columns below
    /// `allowed`. Returns `None` when unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<Option<f64>> {
        for _ in 0..MAX_PIVOTS {
            let reduced = self.reduced_costs(cost, allowed);
            // Bland: lowest-index improving column.
            let entering = match (0..allowed).find(|&j| reduced[j] < -1e-10) {
                Some(j) => j,
                None => return Ok(Some(self.objective_value(cost))),
            };
            let mut leaving: Option<(usize, f64)> = None;
            for (r, row) in self.t.iter().enumerate() {
                let a = row[entering];
                if a > PIVOT_EPS {
                    let ratio = row[self.width] / a;
                    leaving = match leaving {
                        None => Some((r, ratio)),
                        Some((best, best_ratio)) => {
                            if ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && self.basis[r] < self.basis[best])
                            {
                                Some((r, ratio))
                            } else {
                                Some((best, best_ratio))
                            }
                        }
                    };
                }
            }
            match leaving {
                None => return Ok(None),
                Some((r, _)) => self.pivot(r, entering),
            }
        }
        Err(Error::solver("simplex pivot limit reached", f64::NAN))
    }

    fn reduced_costs(&self, cost: &[f64], allowed: usize) -> Vec<f64> {
        let mut reduced = cost[..allowed].to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, red) in reduced.iter_mut().enumerate() {
                    *red -= cb * self.t[r][j];
                }
            }
        }
        reduced
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(r, &b)| cost[b] * self.t[r][self.width])
            .sum()
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.t[r][col];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (k, row) in self.t.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        }
        self.basis[r] = col;
    }

    /// After a feasible phase one, pivots remaining (zero-level) artificial
    /// variables out of the basis; rows where that is impossible are
    /// redundant and dropped.
    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.t.len() {
            if self.basis[r] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&j| self.t[r][j].abs() > 1e-9);
                match col {
                    Some(j) => self.pivot(r, j),
                    None => {
                        self.t.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(o: LpOutcome) -> (Vec<f64>, f64) {
        match o {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::maximize(vec![3.0, 5.0]);
        lp.constrain(vec![1.0, 0.0], Relation::Le, 4.0)
            .constrain(vec![0.0, 2.0], Relation::Le, 12.0)
            .constrain(vec![3.0, 2.0], Relation::Le, 18.0);
        let (x, obj) = optimal(lp.solve().unwrap());
        assert!((obj - 36.0).abs() < 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y, x + y = 3, x >= 1, y >= 0.5 -> x = 2.5, y = 0.5
        let mut lp = LinearProgram::minimize(vec![1.0, 2.0]);
        lp.constrain(vec![1.0, 1.0], Relation::Eq, 3.0)
            .constrain(vec![1.0, 0.0], Relation::Ge, 1.0)
            .constrain(vec![0.0, 1.0], Relation::Ge, 0.5);
        let (x, obj) = optimal(lp.solve().unwrap());
        assert!((obj - 3.5).abs() < 1e-9);
        assert!((x[0] - 2.5).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.constrain(vec![1.0], Relation::Le, 1.0)
            .constrain(vec![1.0], Relation::Ge, 2.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.constrain(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.constrain(vec![1.0, 1.0], Relation::Eq, 1.0)
            .constrain(vec![2.0, 2.0], Relation::Eq, 2.0);
        let (_, obj) = optimal(lp.solve().unwrap());
        assert!((obj - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // -x <= -2  <=>  x >= 2
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.constrain(vec![-1.0], Relation::Le, -2.0);
        let (x, _) = optimal(lp.solve().unwrap());
        assert!((x[0] - 2.0).abs() < 1e-12);
    }
}
