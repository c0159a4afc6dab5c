#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;

use switchcost::generalgamma::GeneralGame;
use switchcost::{Matrix, SwitchGame};

#[derive(Debug, Clone, Copy)]
pub enum Costs {
    Uniform,
    Symmetric,
    Asymmetric,
    /// One random column is cheap to switch to and from; all other
    /// switches are expensive.
    Hub,
}

pub fn random_payoffs(rng: &mut StdRng, m: usize, n: usize) -> Matrix {
    Matrix::from_fn(m, n, |_, _| rng.gen_range(0.0..1.0))
}

/// Off-diagonal costs in `[0.2, 2]` (hub: `[0.2, 0.5]` at the hub, `[2, 6]`
/// elsewhere).
pub fn random_costs(rng: &mut StdRng, n: usize, kind: Costs) -> Matrix {
    let mut s = Matrix::zeros(n, n);
    let hub = rng.gen_range(0..n);
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let v = match kind {
                Costs::Uniform => 1.0,
                Costs::Symmetric if k < j => s.get(k, j),
                Costs::Hub if j == hub || k == hub => rng.gen_range(0.2..0.5),
                Costs::Hub => rng.gen_range(2.0..6.0),
                _ => rng.gen_range(0.2..2.0),
            };
            s.set(j, k, v);
        }
    }
    s
}

pub fn random_game(rng: &mut StdRng, m: usize, n: usize, kind: Costs) -> SwitchGame {
    SwitchGame::new(random_payoffs(rng, m, n), random_costs(rng, n, kind)).unwrap()
}

/// Random tensor, rescaled to span exactly `[0, 1]`.
pub fn random_tensor(rng: &mut StdRng, states: usize, rows: usize) -> GeneralGame {
    let r = (0..states)
        .map(|_| (0..rows).map(|_| (0..states).map(|_| rng.gen_range(0.0..1.0)).collect()).collect())
        .collect();
    GeneralGame::new(r).unwrap().normalize().unwrap().0
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
