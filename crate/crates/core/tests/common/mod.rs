//! Shared helpers for the integration suite: a dense LU oracle (independent
//! of the sparse iterative solvers it checks) and small hand-checkable maps.

#![allow(dead_code)]

use deq_core::geometry::Point2;
use deq_core::sparse::CsrMatrix;
use deq_core::PlanarMap;

/// Solves `A x = b` by Gaussian elimination with partial pivoting. Dense,
/// O(n³), and deliberately naive — its job is to be an obviously-correct
/// reference for small systems, not to be fast.
pub fn lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    assert_eq!(a.len(), n);
    assert!(a.iter().all(|row| row.len() == n));

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
            .unwrap();
        assert!(
            a[pivot][col].abs() > 1e-300,
            "singular matrix in dense oracle (column {col})"
        );
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                let head = a[col][k];
                a[row][k] -= factor * head;
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Expands a CSR matrix to dense rows for the oracle.
pub fn csr_to_dense(m: &CsrMatrix) -> Vec<Vec<f64>> {
    let mut dense = vec![vec![0.0; m.n_cols()]; m.n_rows()];
    for i in 0..m.n_rows() {
        let (cols, values) = m.row(i);
        for (&j, &v) in cols.iter().zip(values) {
            dense[i][j] += v;
        }
    }
    dense
}

/// Hexagonal fan: one interior vertex at the origin surrounded by six ring
/// vertices, six faces. The smallest mesh with a genuinely interior vertex.
pub fn hex_fan_map() -> PlanarMap {
    let mut coords = vec![Point2::new(0.0, 0.0)];
    for k in 0..6 {
        let theta = k as f64 * std::f64::consts::TAU / 6.0;
        coords.push(Point2::new(theta.cos(), theta.sin()));
    }
    let faces = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    PlanarMap::new_land(coords, faces).expect("hex fan is a valid disk")
}

/// Hex fan with fixed irregular vertex positions, so operator tests do not
/// accidentally pass thanks to symmetry.
pub fn skewed_fan_map() -> PlanarMap {
    let coords = vec![
        Point2::new(0.11, -0.07),
        Point2::new(1.3, 0.1),
        Point2::new(0.4, 0.9),
        Point2::new(-0.5, 1.1),
        Point2::new(-1.2, -0.2),
        Point2::new(-0.3, -0.8),
        Point2::new(0.7, -1.0),
    ];
    let faces = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    PlanarMap::new_land(coords, faces).expect("skewed fan is a valid disk")
}

/// Largest absolute difference between two equal-length slices.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Least-squares slope of y against x.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}
