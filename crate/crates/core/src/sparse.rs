//! Compressed-row sparse matrices and the two Krylov solvers the scheme
//! needs: Jacobi-preconditioned CG for the symmetric mass-type systems and
//! BiCGStab for the nonsymmetric Newton Jacobians.
//!
//! Convergence is measured in the Jacobi-preconditioned residual 2-norm
//! relative to the initial residual. Matrices are immutable once built and
//! safe to share across threads.

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row storage. Column indices are
/// strictly increasing within each row and duplicates are merged at build
/// time.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Preconditioned residual norm before the first iteration.
    pub initial_residual_norm: f64,
    /// Preconditioned residual norm at exit.
    pub final_residual_norm: f64,
    pub converged: bool,
}

impl SparseMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<SparseMatrix> {
        for &(r, c, _) in &triplets {
            if r >= n || c >= n {
                return Err(Error::DimensionMismatch { expected: n, got: r.max(c) + 1 });
            }
        }
        triplets.sort_unstable_by_key(|t| (t.0, t.1));

        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut row = 0usize;
        for (r, c, v) in triplets {
            while row < r {
                row_offsets.push(col_indices.len());
                row += 1;
            }
            if let Some(last) = col_indices.last() {
                if row_offsets.last() != Some(&col_indices.len()) && *last == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            col_indices.push(c);
            values.push(v);
        }
        while row < n {
            row_offsets.push(col_indices.len());
            row += 1;
        }
        Ok(SparseMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> SparseMatrix {
        SparseMatrix {
            n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entries `(col, value)` of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        self.col_indices[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(c, v)| (*c, *v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .find(|(c, _)| *c == j)
            .map(|(_, v)| v)
            .unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`, allocating the result. Errors on length mismatch.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without allocation; lengths are the caller's contract.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let lo = self.row_offsets[i];
            let hi = self.row_offsets[i + 1];
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            y[i] = acc;
        }
    }

    /// `alpha * self + beta * other` with merged sparsity patterns.
    pub fn add_scaled(&self, other: &SparseMatrix, alpha: f64, beta: f64) -> Result<SparseMatrix> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut row_offsets = Vec::with_capacity(self.n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..self.n {
            let mut a = self.row_offsets[i];
            let a_hi = self.row_offsets[i + 1];
            let mut b = other.row_offsets[i];
            let b_hi = other.row_offsets[i + 1];
            while a < a_hi || b < b_hi {
                let ca = if a < a_hi { self.col_indices[a] } else { usize::MAX };
                let cb = if b < b_hi { other.col_indices[b] } else { usize::MAX };
                if ca == cb {
                    col_indices.push(ca);
                    values.push(alpha * self.values[a] + beta * other.values[b]);
                    a += 1;
                    b += 1;
                } else if ca < cb {
                    col_indices.push(ca);
                    values.push(alpha * self.values[a]);
                    a += 1;
                } else {
                    col_indices.push(cb);
                    values.push(beta * other.values[b]);
                    b += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            n: self.n,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Same sparsity pattern, new values. Used to rebuild Newton Jacobians
    /// without reassembling connectivity.
    pub fn with_values(&self, values: Vec<f64>) -> Result<SparseMatrix> {
        if values.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: values.len(),
            });
        }
        Ok(SparseMatrix {
            n: self.n,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values,
        })
    }

    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        self.n == other.n
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn jacobi_diag(a: &SparseMatrix) -> Vec<f64> {
    a.diagonal()
        .into_iter()
        .map(|d| if d != 0.0 { d } else { 1.0 })
        .collect()
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive
/// definite systems, starting from the zero vector. On non-convergence the
/// best iterate is still returned (`converged = false`) and the caller
/// decides.
pub fn cg_solve(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    if b.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: b.len(),
        });
    }
    let n = a.n();
    let d = jacobi_diag(a);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&d).map(|(ri, di)| ri / di).collect();
    let res0 = norm2(&z);
    if res0 == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                initial_residual_norm: 0.0,
                final_residual_norm: 0.0,
                converged: true,
            },
        ));
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = res0;
    for it in 1..=maxit {
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // Loss of positive definiteness at roundoff scale.
            return Ok((
                x,
                SolveReport {
                    iterations: it - 1,
                    initial_residual_norm: res0,
                    final_residual_norm: res,
                    converged: res <= tol * res0,
                },
            ));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        for (zi, (ri, di)) in z.iter_mut().zip(r.iter().zip(&d)) {
            *zi = ri / di;
        }
        res = norm2(&z);
        if res <= tol * res0 {
            return Ok((
                x,
                SolveReport {
                    iterations: it,
                    initial_residual_norm: res0,
                    final_residual_norm: res,
                    converged: true,
                },
            ));
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok((
        x,
        SolveReport {
            iterations: maxit,
            initial_residual_norm: res0,
            final_residual_norm: res,
            converged: false,
        },
    ))
}

/// Jacobi-preconditioned BiCGStab; no symmetry requirement. Identical
/// convergence contract as [`cg_solve`].
pub fn bicgstab_solve(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    if b.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: b.len(),
        });
    }
    let n = a.n();
    let d = jacobi_diag(a);
    // Left-scaled system D^-1 A x = D^-1 b; its residual is the
    // preconditioned residual.
    let bs: Vec<f64> = b.iter().zip(&d).map(|(bi, di)| bi / di).collect();
    let apply = |x: &[f64], y: &mut Vec<f64>| {
        a.mul_into(x, y);
        for (yi, di) in y.iter_mut().zip(&d) {
            *yi /= di;
        }
    };

    let mut x = vec![0.0; n];
    let mut r = bs.clone();
    let res0 = norm2(&r);
    if res0 == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                initial_residual_norm: 0.0,
                final_residual_norm: 0.0,
                converged: true,
            },
        ));
    }
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut res = res0;

    for it in 1..=maxit {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < f64::MIN_POSITIVE * 1e10 {
            return Ok((
                x,
                SolveReport {
                    iterations: it - 1,
                    initial_residual_norm: res0,
                    final_residual_norm: res,
                    converged: res <= tol * res0,
                },
            ));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        apply(&p, &mut v);
        alpha = rho / dot(&r_hat, &v);
        // s lives in r from here on
        axpy(-alpha, &v, &mut r);
        res = norm2(&r);
        if res <= tol * res0 {
            axpy(alpha, &p, &mut x);
            return Ok((
                x,
                SolveReport {
                    iterations: it,
                    initial_residual_norm: res0,
                    final_residual_norm: res,
                    converged: true,
                },
            ));
        }
        apply(&r, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Ok((
                x,
                SolveReport {
                    iterations: it,
                    initial_residual_norm: res0,
                    final_residual_norm: res,
                    converged: false,
                },
            ));
        }
        omega = dot(&t, &r) / tt;
        axpy(alpha, &p, &mut x);
        axpy(omega, &r, &mut x);
        axpy(-omega, &t, &mut r);
        res = norm2(&r);
        if res <= tol * res0 {
            return Ok((
                x,
                SolveReport {
                    iterations: it,
                    initial_residual_norm: res0,
                    final_residual_norm: res,
                    converged: true,
                },
            ));
        }
    }
    Ok((
        x,
        SolveReport {
            iterations: maxit,
            initial_residual_norm: res0,
            final_residual_norm: res,
            converged: false,
        },
    ))
}
