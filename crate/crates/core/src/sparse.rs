//! Minimal CSR sparse matrices and iterative solvers.
//!
//! The systems solved here are modest (tens of thousands of unknowns at most),
//! so Jacobi-preconditioned conjugate gradients covers the symmetric
//! positive-definite path and BiCGSTAB the general path, with conjugate
//! gradients on the normal equations as a slow-but-steady fallback. Assembly
//! from triplets sums duplicates, making element-wise operator construction
//! order-independent.

use crate::error::{Error, Result};

/// `(row, col, value)` contribution; duplicates are summed on assembly.
pub type Triplet = (usize, usize, f64);

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// How a solve finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Cholesky,
    Cg,
    Lu,
    BiCgStab,
}

/// Iteration count and final relative residual of a successful solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub iterations: usize,
    pub residual: f64,
}

/// Solver knobs. `max_iterations` of `None` means ten times the system size.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tolerance: f64,
    pub max_iterations: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-10,
            max_iterations: None,
        }
    }
}

impl CsrMatrix {
    /// Assembles a matrix from triplets, summing duplicate positions.
    /// The result is independent of triplet order.
    pub fn assemble(n_rows: usize, n_cols: usize, triplets: &[Triplet]) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::TripletOutOfRange {
                    row: r,
                    col: c,
                    rows: n_rows,
                    cols: n_cols,
                });
            }
        }
        let mut sorted: Vec<Triplet> = triplets.to_vec();
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut rows = Vec::with_capacity(sorted.len());
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        for &(r, c, v) in &sorted {
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        let mut row_ptr = vec![0usize; n_rows + 1];
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of one row as parallel `(columns, values)` slices.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                rows: self.n_rows,
                cols: self.n_cols,
                len: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
        Ok(y)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((c, r, v));
            }
        }
        CsrMatrix::assemble(self.n_cols, self.n_rows, &triplets)
            .expect("transpose of a valid matrix is valid")
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.n_rows.min(self.n_cols);
        let mut d = vec![0.0; n];
        for (r, slot) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if c == r {
                    *slot += v;
                }
            }
        }
        d
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute asymmetry `|A_ij - A_ji|` over all entries.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut dev: f64 = 0.0;
        for r in 0..self.n_rows {
            let (cols_a, vals_a) = self.row(r);
            let (cols_b, vals_b) = t.row(r);
            // Merge the two sorted rows.
            let (mut i, mut j) = (0, 0);
            while i < cols_a.len() || j < cols_b.len() {
                match (cols_a.get(i), cols_b.get(j)) {
                    (Some(&ca), Some(&cb)) if ca == cb => {
                        dev = dev.max((vals_a[i] - vals_b[j]).abs());
                        i += 1;
                        j += 1;
                    }
                    (Some(&ca), Some(&cb)) if ca < cb => {
                        dev = dev.max(vals_a[i].abs());
                        i += 1;
                    }
                    (Some(_), Some(_)) => {
                        dev = dev.max(vals_b[j].abs());
                        j += 1;
                    }
                    (Some(_), None) => {
                        dev = dev.max(vals_a[i].abs());
                        i += 1;
                    }
                    (None, Some(_)) => {
                        dev = dev.max(vals_b[j].abs());
                        j += 1;
                    }
                    (None, None) => unreachable!(),
                }
            }
        }
        dev
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_square_system(a: &CsrMatrix, b: &[f64]) -> Result<()> {
    if a.n_rows != a.n_cols || b.len() != a.n_rows {
        return Err(Error::DimensionMismatch {
            rows: a.n_rows,
            cols: a.n_cols,
            len: b.len(),
        });
    }
    Ok(())
}

/// Relative symmetry deviation allowed by [`solve_spd`].
pub const SYMMETRY_REL_TOL: f64 = 1e-12;

/// Solves `A x = b` for symmetric positive-definite `A` using
/// Jacobi-preconditioned conjugate gradients. Symmetry is verified up to
/// `1e-12` relative to the largest entry. `x0` seeds the iteration (and is
/// returned untouched if it already meets the tolerance).
pub fn solve_spd(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    check_square_system(a, b)?;
    let dev = a.asymmetry();
    let threshold = SYMMETRY_REL_TOL * a.max_abs().max(f64::MIN_POSITIVE);
    if dev > threshold {
        return Err(Error::NotSymmetric {
            deviation: dev,
            threshold,
        });
    }

    let n = a.n_rows;
    let max_iter = opts.max_iterations.unwrap_or(10 * n.max(1));
    let inv_diag: Vec<f64> = {
        let d = a.diagonal();
        let mut inv = vec![0.0; n];
        for (r, &v) in d.iter().enumerate() {
            if v == 0.0 {
                return Err(Error::ZeroDiagonal { row: r });
            }
            inv[r] = 1.0 / v;
        }
        inv
    };

    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                method: SolveMethod::Cg,
                iterations: 0,
                residual: 0.0,
            },
        ));
    }

    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        _ => vec![0.0; n],
    };
    let mut r = b.to_vec();
    let ax = a.matvec(&x)?;
    for i in 0..n {
        r[i] -= ax[i];
    }
    if norm(&r) / b_norm <= opts.tolerance {
        return Ok((
            x,
            SolveReport {
                method: SolveMethod::Cg,
                iterations: 0,
                residual: norm(&r) / b_norm,
            },
        ));
    }

    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.matvec(&p)?;
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // Not positive definite along p; surface as a stall.
            return Err(Error::SolverStalled {
                method: "cg",
                iterations: it,
                residual: norm(&r) / b_norm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / b_norm;
        if rel <= opts.tolerance {
            return Ok((
                x,
                SolveReport {
                    method: SolveMethod::Cg,
                    iterations: it,
                    residual: rel,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverStalled {
        method: "cg",
        iterations: max_iter,
        residual: norm(&r) / b_norm,
    })
}

/// Solves `A x = b` for general square `A`: Jacobi-preconditioned BiCGSTAB,
/// falling back to conjugate gradients on the normal equations when BiCGSTAB
/// breaks down or stalls.
pub fn solve_general(
    a: &CsrMatrix,
    b: &[f64],
    opts: SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    check_square_system(a, b)?;
    match bicgstab(a, b, opts) {
        Ok(done) => Ok(done),
        Err(Error::SolverStalled { .. }) => cg_normal_equations(a, b, opts),
        Err(e) => Err(e),
    }
}

fn bicgstab(a: &CsrMatrix, b: &[f64], opts: SolveOptions) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.n_rows;
    let max_iter = opts.max_iterations.unwrap_or(10 * n.max(1));
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                method: SolveMethod::BiCgStab,
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let diag = a.diagonal();
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(x, d)| x * d).collect() };

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];

    for it in 1..=max_iter {
        let rho_next = dot(&r0, &r);
        if rho_next.abs() < f64::MIN_POSITIVE.sqrt() * b_norm * b_norm {
            return Err(Error::SolverStalled {
                method: "bicgstab",
                iterations: it,
                residual: norm(&r) / b_norm,
            });
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        v = a.matvec(&p_hat)?;
        let r0v = dot(&r0, &v);
        if r0v == 0.0 {
            return Err(Error::SolverStalled {
                method: "bicgstab",
                iterations: it,
                residual: norm(&r) / b_norm,
            });
        }
        alpha = rho / r0v;
        let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
        if norm(&s) / b_norm <= opts.tolerance {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok((
                x,
                SolveReport {
                    method: SolveMethod::BiCgStab,
                    iterations: it,
                    residual: norm(&s) / b_norm,
                },
            ));
        }
        let s_hat = precond(&s);
        let t = a.matvec(&s_hat)?;
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(Error::SolverStalled {
                method: "bicgstab",
                iterations: it,
                residual: norm(&s) / b_norm,
            });
        }
        omega = dot(&t, &s) / tt;
        if omega == 0.0 {
            return Err(Error::SolverStalled {
                method: "bicgstab",
                iterations: it,
                residual: norm(&s) / b_norm,
            });
        }
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm(&r) / b_norm;
        if rel <= opts.tolerance {
            return Ok((
                x,
                SolveReport {
                    method: SolveMethod::BiCgStab,
                    iterations: it,
                    residual: rel,
                },
            ));
        }
        if !rel.is_finite() {
            return Err(Error::SolverStalled {
                method: "bicgstab",
                iterations: it,
                residual: rel,
            });
        }
    }
    Err(Error::SolverStalled {
        method: "bicgstab",
        iterations: max_iter,
        residual: norm(&r) / b_norm,
    })
}

/// Conjugate gradients on `A^T A x = A^T b`. Slow (condition number squared)
/// but convergent for any nonsingular system; the residual check stays on the
/// original system.
fn cg_normal_equations(
    a: &CsrMatrix,
    b: &[f64],
    opts: SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.n_rows;
    let at = a.transpose();
    let max_iter = opts.max_iterations.unwrap_or(10 * n.max(1)) * 4;
    let b_norm = norm(b).max(f64::MIN_POSITIVE);

    let mut x = vec![0.0; n];
    let mut r = b.to_vec(); // residual of the original system
    let mut g = at.matvec(&r)?; // gradient (normal-equation residual)
    let mut p = g.clone();
    let mut gg = dot(&g, &g);
    for it in 1..=max_iter {
        let ap = a.matvec(&p)?;
        let denom = dot(&ap, &ap);
        if denom == 0.0 || gg == 0.0 {
            break;
        }
        let alpha = gg / denom;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / b_norm;
        if rel <= opts.tolerance {
            return Ok((
                x,
                SolveReport {
                    method: SolveMethod::Cg,
                    iterations: it,
                    residual: rel,
                },
            ));
        }
        g = at.matvec(&r)?;
        let gg_next = dot(&g, &g);
        let beta = gg_next / gg;
        gg = gg_next;
        for i in 0..n {
            p[i] = g[i] + beta * p[i];
        }
    }
    Err(Error::SolverStalled {
        method: "cg (normal equations)",
        iterations: max_iter,
        residual: norm(&r) / b_norm,
    })
}
