//! Compressed sparse row matrices and the two linear solvers used by the
//! time stepper: a cached sparse Cholesky factorization for the constant
//! SPD step matrices, and Jacobi-preconditioned conjugate gradients for the
//! singular surface Poisson problem.

use faer::prelude::SpSolver;
use faer::sparse::linalg::solvers::Cholesky;
use faer::sparse::SparseColMat;
use faer::Side;
use rayon::prelude::*;

use crate::error::{Error, Result};

const PAR_THRESHOLD: usize = 8192;

/// Square sparse matrix in CSR layout. Column indices within a row are sorted
/// and unique.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assemble from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, c, _) in triplets {
            assert!(
                r < n && c < n,
                "triplet ({r}, {c}) out of bounds for n = {n}"
            );
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let k = cursor[r];
            cols[k] = c;
            vals[k] = v;
            cursor[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..n {
            scratch.clear();
            scratch.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_by_key(|&(c, _)| c);
            for &(c, v) in &scratch {
                match col_idx.last() {
                    Some(&last) if last == c && col_idx.len() > row_ptr[r] => {
                        *values.last_mut().unwrap() += v;
                    }
                    _ => {
                        col_idx.push(c);
                        values.push(v);
                    }
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let triplets: Vec<_> = diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect();
        Self::from_triplets(diag.len(), &triplets)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            acc += self.values[k] * x[self.col_idx[k]];
        }
        acc
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        if self.n >= PAR_THRESHOLD {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = self.row_dot(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// Largest `|A_ij - A_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest absolute row sum, i.e. `‖A·1‖_∞`.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    /// `‖A‖_∞`, the largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ_k c_k A_k + diag(d)` for matrices of equal dimension.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)], diag: Option<&[f64]>) -> CsrMatrix {
        let n = terms
            .first()
            .map(|(_, m)| m.n)
            .or(diag.map(|d| d.len()))
            .expect("empty linear combination");
        let mut triplets = Vec::new();
        for (c, m) in terms {
            assert_eq!(m.n, n);
            triplets.extend(m.triplets().map(|(i, j, v)| (i, j, c * v)));
        }
        if let Some(d) = diag {
            assert_eq!(d.len(), n);
            triplets.extend(d.iter().enumerate().map(|(i, &v)| (i, i, v)));
        }
        CsrMatrix::from_triplets(n, &triplets)
    }

    /// `A · diag(d) · A` for a symmetric `A`.
    pub fn sandwich_diagonal(&self, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.n);
        let mut triplets = Vec::new();
        let mut accum: Vec<f64> = vec![0.0; self.n];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.n {
            for (k, a_ik) in self.row(i) {
                let s = a_ik * d[k];
                for (j, a_kj) in self.row(k) {
                    if accum[j] == 0.0 && !touched.contains(&j) {
                        touched.push(j);
                    }
                    accum[j] += s * a_kj;
                }
            }
            for &j in &touched {
                triplets.push((i, j, accum[j]));
                accum[j] = 0.0;
            }
            touched.clear();
        }
        CsrMatrix::from_triplets(self.n, &triplets)
    }

    fn to_faer_lower(&self) -> Result<SparseColMat<usize, f64>> {
        // CSR of a symmetric matrix read as CSC is its transpose, i.e. itself;
        // only the lower triangle is handed to the factorization.
        let triplets: Vec<(usize, usize, f64)> =
            self.triplets().filter(|&(i, j, _)| i >= j).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| Error::invalid(format!("sparse matrix assembly failed: {e:?}")))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Statistics of a completed linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Sparse Cholesky factorization of a fixed SPD matrix, reused across steps.
///
/// Each solve is followed by one step of iterative refinement and a residual
/// check against the configured tolerance.
pub struct CholeskySolver {
    matrix: CsrMatrix,
    factor: Cholesky<usize, f64>,
    tolerance: f64,
}

impl std::fmt::Debug for CholeskySolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CholeskySolver")
            .field("dim", &self.matrix.dim())
            .field("nnz", &self.matrix.nnz())
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

impl CholeskySolver {
    pub fn new(matrix: CsrMatrix, tolerance: f64) -> Result<Self> {
        let lower = matrix.to_faer_lower()?;
        let factor = lower
            .as_ref()
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::invalid(format!("matrix is not positive definite: {e:?}")))?;
        Ok(CholeskySolver {
            matrix,
            factor,
            tolerance,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = faer::Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        self.factor.solve_in_place(rhs.as_mut());
        (0..b.len()).map(|i| rhs.read(i, 0)).collect()
    }

    /// Solve with up to `MAX_REFINEMENT` refinement sweeps. The reported
    /// residual is the normwise backward error
    /// `‖b - Ax‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)`, compared against the tolerance.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        const MAX_REFINEMENT: usize = 4;
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let bnorm = inf(b);
        let mut x = self.raw_solve(b);
        if bnorm == 0.0 {
            return Ok((
                x,
                SolveStats {
                    iterations: 0,
                    relative_residual: 0.0,
                },
            ));
        }
        let anorm = self.matrix.norm_inf();
        let residual = |x: &[f64]| -> Vec<f64> {
            let ax = self.matrix.mul_vec(x);
            b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
        };
        let backward = |r: &[f64], x: &[f64]| inf(r) / (anorm * inf(x) + bnorm);
        let mut r = residual(&x);
        let mut err = backward(&r, &x);
        let mut iterations = 1;
        while iterations <= MAX_REFINEMENT && err > 1e-15 {
            let dx = self.raw_solve(&r);
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + di).collect();
            let r_trial = residual(&trial);
            let e_trial = backward(&r_trial, &trial);
            iterations += 1;
            if !(e_trial < err) {
                break;
            }
            x = trial;
            r = r_trial;
            err = e_trial;
        }
        if !err.is_finite() || err > self.tolerance {
            return Err(Error::SolverFailure {
                iterations,
                residual: err,
            });
        }
        Ok((
            x,
            SolveStats {
                iterations,
                relative_residual: err,
            },
        ))
    }
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// semidefinite `a` and a consistent right-hand side.
///
/// When `null_weights` is given the iterate is kept orthogonal (in the
/// weighted sense) to the constant vector, which is the kernel of a closed
/// surface stiffness matrix.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    tolerance: f64,
    max_iterations: usize,
    null_weights: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = 1.0;
    for it in 1..=max_iterations {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm2(&r) / bnorm;
        if rel <= tolerance {
            if let Some(w) = null_weights {
                remove_weighted_mean(&mut x, w);
            }
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    relative_residual: rel,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure {
        iterations: max_iterations,
        residual: rel,
    })
}

/// Subtract the `w`-weighted mean so that `Σ w_i x_i = 0`.
pub fn remove_weighted_mean(x: &mut [f64], w: &[f64]) {
    let total: f64 = w.iter().sum();
    let mean = dot(x, w) / total;
    x.iter_mut().for_each(|xi| *xi -= mean);
}

pub fn weighted_mean(x: &[f64], w: &[f64]) -> f64 {
    dot(x, w) / w.iter().sum::<f64>()
}
