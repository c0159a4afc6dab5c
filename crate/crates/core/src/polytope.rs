//! Active-set geometry on small polytopes: vertex enumeration by choosing
//! tight inequality subsets, and stationary points of quadratics restricted
//! to a face.

use crate::error::{Error, Result};
use crate::linalg::{combinations, dot, lex_cmp, solve, Matrix};

/// Default cap on the number of distinct vertices returned.
pub const VERTEX_CAP: usize = 10_000;

/// Points closer than this (max-norm) are treated as the same vertex.
pub const DEDUP_TOL: f64 = 1e-8;

/// A linear row `coeffs . z (= or <=) rhs`.
pub type Row = (Vec<f64>, f64);

/// Vertices of `{z in R^dim : E z = f, G z <= h}`.
///
/// The equality rows must be linearly independent. Every choice of
/// `dim - eq.len()` inequalities is made tight, the square system solved, and
/// the solution kept if it satisfies all remaining inequalities. The result
/// is duplicate-free and sorted lexicographically.
pub fn vertices(dim: usize, eq: &[Row], ineq: &[Row], cap: usize) -> Result<Vec<Vec<f64>>> {
    if eq.len() > dim {
        return Err(Error::Structural(format!(
            "{} equality rows in dimension {dim}",
            eq.len()
        )));
    }
    let k = dim - eq.len();
    let mut found: Vec<Vec<f64>> = Vec::new();
    for tight in combinations(ineq.len(), k) {
        let mut m = Vec::with_capacity(dim);
        let mut rhs = Vec::with_capacity(dim);
        for (a, b) in eq.iter().chain(tight.iter().map(|&t| &ineq[t])) {
            m.push(a.clone());
            rhs.push(*b);
        }
        let Some(z) = solve(m, rhs) else { continue };
        let feasible = ineq
            .iter()
            .all(|(a, b)| dot(a, &z) <= b + 1e-9 * (1.0 + b.abs()));
        if !feasible {
            continue;
        }
        if found
            .iter()
            .all(|v| max_distance(v, &z) > DEDUP_TOL)
        {
            if found.len() == cap {
                return Err(Error::resource("polytope vertex enumeration", cap));
            }
            found.push(z);
        }
    }
    found.sort_by(|a, b| lex_cmp(a, b, 0.0));
    Ok(found)
}

/// Vertices of `{y in simplex(n) : G y <= h}`, with tiny negative
/// coordinates clamped to zero.
pub fn simplex_vertices(n: usize, ineq: &[Row], cap: usize) -> Result<Vec<Vec<f64>>> {
    let eq = vec![(vec![1.0; n], 1.0)];
    let mut rows: Vec<Row> = ineq.to_vec();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        rows.push((e, 0.0));
    }
    let mut out = vertices(n, &eq, &rows, cap)?;
    for v in out.iter_mut() {
        clean_simplex_point(v);
    }
    Ok(out)
}

/// Clamps round-off negatives to zero and renormalizes.
pub(crate) fn clean_simplex_point(y: &mut [f64]) {
    for v in y.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = y.iter().sum();
    if total > 0.0 {
        y.iter_mut().for_each(|v| *v /= total);
    }
}

pub(crate) fn max_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |acc, (x, y)| f64::max(acc, (x - y).abs()))
}

/// Stationary point of `y^T Q y + p . y` over the affine set
/// `{y : y_j = 0 for j not in support, a . y = b for every (a, b) in eq}`,
/// from the KKT system
///
/// ```text
/// [ 2 Q_UU  E_U^T ] [ y_U    ]   [ -p_U ]
/// [ E_U     0     ] [ lambda ] = [  b   ]
/// ```
///
/// `Q` is taken to be symmetric. Returns the full-length point, or `None`
/// when the system is singular. Nonnegativity is left to the caller.
pub fn face_stationary_point(
    q: &Matrix,
    p: &[f64],
    support: &[usize],
    eq: &[Row],
) -> Option<Vec<f64>> {
    let u = support.len();
    let size = u + eq.len();
    let mut m = vec![vec![0.0; size]; size];
    let mut rhs = vec![0.0; size];
    for (a, &j) in support.iter().enumerate() {
        for (b, &k) in support.iter().enumerate() {
            m[a][b] = 2.0 * q.get(j, k);
        }
        for (r, (coeffs, _)) in eq.iter().enumerate() {
            m[a][u + r] = coeffs[j];
            m[u + r][a] = coeffs[j];
        }
        rhs[a] = -p[j];
    }
    for (r, (_, b)) in eq.iter().enumerate() {
        rhs[u + r] = *b;
    }
    let z = solve(m, rhs)?;
    let mut y = vec![0.0; q.rows()];
    for (a, &j) in support.iter().enumerate() {
        y[j] = z[a];
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_has_four_vertices() {
        let ineq = vec![
            (vec![1.0, 0.0], 1.0),
            (vec![0.0, 1.0], 1.0),
            (vec![-1.0, 0.0], 0.0),
            (vec![0.0, -1.0], 0.0),
        ];
        let v = vertices(2, &[], &ineq, VERTEX_CAP).unwrap();
        assert_eq!(
            v,
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]
        );
    }

    #[test]
    fn bare_simplex_vertices_are_unit_vectors() {
        let v = simplex_vertices(3, &[], VERTEX_CAP).unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|p| p.iter().filter(|&&x| x == 1.0).count() == 1));
    }

    #[test]
    fn degenerate_vertices_are_deduplicated() {
        // y1 <= 0 on the 3-simplex: the face y1 = 0 has two vertices, and
        // the cut passes through vertex e2 and e3 many ways.
        let ineq = vec![(vec![1.0, 0.0, 0.0], 0.0), (vec![2.0, 0.0, 0.0], 0.0)];
        let v = simplex_vertices(3, &ineq, VERTEX_CAP).unwrap();
        assert_eq!(v, vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]);
    }

    #[test]
    fn vertex_cap_is_enforced() {
        let err = simplex_vertices(4, &[], 2).unwrap_err();
        assert!(matches!(err, Error::Resource { cap: 2, .. }));
    }

    #[test]
    fn quadratic_on_edge() {
        // max of y1*y2 on the simplex edge is at (1/2, 1/2).
        let q = Matrix::from_rows(vec![vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        let y = face_stationary_point(&q, &[0.0, 0.0], &[0, 1], &[(vec![1.0, 1.0], 1.0)]).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-12 && (y[1] - 0.5).abs() < 1e-12);
    }
}
