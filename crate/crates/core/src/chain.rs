//! Finite Markov chains: closed communicating classes and their stationary
//! distributions.

use crate::linalg::solve;

/// Transitions with probability at most this are ignored when computing the
/// class structure.
const EDGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedClass {
    /// States of the class in increasing order.
    pub states: Vec<usize>,
    /// Stationary distribution over all states (zero outside the class).
    pub pi: Vec<f64>,
}

/// Closed classes of the chain with row-stochastic matrix `p`, ordered by
/// their smallest state.
pub fn closed_classes(p: &[Vec<f64>]) -> Vec<ClosedClass> {
    let n = p.len();
    // reach[i][j]: j reachable from i in zero or more steps.
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if p[i][j] > EDGE_TOL {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        class.iter().for_each(|&j| seen[j] = true);
        let closed = class
            .iter()
            .all(|&s| (0..n).all(|j| !reach[s][j] || class.contains(&j)));
        if closed {
            let pi = stationary_on(p, &class);
            out.push(ClosedClass { states: class, pi });
        }
    }
    out
}

/// Stationary distribution of the chain restricted to a closed class.
fn stationary_on(p: &[Vec<f64>], class: &[usize]) -> Vec<f64> {
    let k = class.len();
    let mut m = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for (row, &to) in class.iter().enumerate().take(k - 1) {
        for (col, &from) in class.iter().enumerate() {
            m[row][col] = p[from][to] - if from == to { 1.0 } else { 0.0 };
        }
    }
    m[k - 1] = vec![1.0; k];
    rhs[k - 1] = 1.0;
    let local = solve(m, rhs).unwrap_or_else(|| vec![1.0 / k as f64; k]);
    let mut pi = vec![0.0; p.len()];
    for (&s, v) in class.iter().zip(local) {
        pi[s] = v.max(0.0);
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    pi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_chain() {
        let p = vec![vec![0.5, 0.5], vec![0.25, 0.75]];
        let classes = closed_classes(&p);
        assert_eq!(classes.len(), 1);
        assert!((classes[0].pi[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((classes[0].pi[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn absorbing_states_are_separate_classes() {
        let p = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.5, 0.5, 0.0],
        ];
        let classes = closed_classes(&p);
        assert_eq!(classes.len(), 2);
        assert_eq!(classes[0].states, vec![0]);
        assert_eq!(classes[1].states, vec![1]);
    }

    #[test]
    fn deterministic_cycle_is_uniform() {
        let p = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]];
        let classes = closed_classes(&p);
        assert_eq!(classes.len(), 1);
        assert!(classes[0].pi.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-12));
    }
}
