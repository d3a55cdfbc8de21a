//! Small shared linear-algebra utilities: a CSR sparse matrix, spectral
//! radius estimation for large sparse operators, and a sorted symmetric
//! eigendecomposition with a deterministic sign convention.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Row-compressed sparse matrix, the storage for reservoir recurrence weights.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets; triplets must be unique and
    /// sorted row-major (the constructors in this crate emit them that way).
    pub fn from_sorted_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Self {
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            row_ptr[r + 1] += 1;
            col_idx.push(c as u32);
            values.push(v);
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Fraction of entries that are stored (structurally nonzero).
    pub fn density(&self) -> f64 {
        if self.nrows == 0 || self.ncols == 0 {
            return 0.0;
        }
        self.nnz() as f64 / (self.nrows as f64 * self.ncols as f64)
    }

    /// Multiply every stored value by `s`.
    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// y = A x, writing into a caller-provided buffer.
    pub fn mul_vec_into(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k] as usize];
            }
            y[r] = acc;
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.nrows);
        self.mul_vec_into(x, &mut y);
        y
    }

    /// y = Aᵀ x.
    pub fn tr_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.nrows);
        let mut y = DVector::zeros(self.ncols);
        for r in 0..self.nrows {
            let xr = x[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k] as usize] += self.values[k] * xr;
            }
        }
        y
    }

    /// Dense copy, for small-N test oracles.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k] as usize)] = self.values[k];
            }
        }
        m
    }
}

/// Deterministic pseudo-random start vector for the iterative solvers
/// (fixed splitmix64 sequence, independent of the caller's RNG streams).
fn start_vector(n: usize) -> DVector<f64> {
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    };
    let mut v = DVector::from_fn(n, |_, _| (next() >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    }
    v
}

/// Largest eigenvalue modulus of a sparse square matrix.
///
/// Krylov power method: build an Arnoldi subspace, take the max-modulus Ritz
/// value of the Hessenberg, restart until two consecutive estimates agree to
/// `rel_tol`. Random real matrices often carry a complex-conjugate dominant
/// pair, which plain power iteration cannot resolve; the small Hessenberg
/// eigenproblem handles it.
pub fn spectral_radius(a: &SparseMatrix, rel_tol: f64) -> Result<f64> {
    assert_eq!(a.nrows(), a.ncols(), "spectral radius needs a square matrix");
    let n = a.nrows();
    if n == 0 || a.nnz() == 0 {
        return Ok(0.0);
    }
    let m = 80.min(n);
    let max_restarts = 100;

    let mut v0 = start_vector(n);
    let mut last_estimate = f64::NAN;
    let mut agreements = 0;

    for _ in 0..max_restarts {
        // Arnoldi factorization A V ≈ V H.
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m);
        let mut h = DMatrix::<f64>::zeros(m + 1, m);
        basis.push(v0.clone());
        let mut breakdown_at = m;
        for j in 0..m {
            let mut w = a.mul_vec(&basis[j]);
            // Modified Gram-Schmidt with one re-orthogonalization pass.
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c = q.dot(&w);
                    h[(i, j)] += c;
                    w.axpy(-c, q, 1.0);
                }
            }
            let norm = w.norm();
            h[(j + 1, j)] = norm;
            if norm <= 1e-14 {
                breakdown_at = j + 1;
                break;
            }
            if j + 1 < m {
                basis.push(w / norm);
            }
        }

        let k = breakdown_at.min(basis.len());
        let hk = h.view((0, 0), (k, k)).into_owned();
        let eigs = hk.complex_eigenvalues();
        let mut rho = 0.0f64;
        let mut dominant = Complex::new(0.0, 0.0);
        for ev in eigs.iter() {
            if ev.norm() > rho {
                rho = ev.norm();
                dominant = *ev;
            }
        }
        if !rho.is_finite() {
            return Err(Error::Numerical(
                "spectral radius estimate is not finite".into(),
            ));
        }
        if breakdown_at < m {
            // Krylov space is invariant; the Ritz values are exact.
            return Ok(rho);
        }
        if last_estimate.is_finite() && (rho - last_estimate).abs() <= rel_tol * rho.max(1e-300) {
            agreements += 1;
            if agreements >= 2 {
                return Ok(rho);
            }
        } else {
            agreements = 0;
        }
        last_estimate = rho;

        // Restart from the dominant Ritz vector: inverse iteration on the
        // (slightly shifted) Hessenberg gives its small-space coordinates.
        v0 = match dominant_ritz_vector(&hk, dominant, &basis) {
            Some(v) => v,
            None => {
                // Fall back to a few plain power steps.
                let mut v = a.mul_vec(&basis[0]);
                for _ in 0..2 {
                    v = a.mul_vec(&v);
                    let nrm = v.norm();
                    if nrm <= 1e-300 {
                        return Ok(rho);
                    }
                    v /= nrm;
                }
                v
            }
        };
    }
    Ok(last_estimate)
}

fn dominant_ritz_vector(
    hk: &DMatrix<f64>,
    theta: Complex<f64>,
    basis: &[DVector<f64>],
) -> Option<DVector<f64>> {
    let k = hk.nrows();
    // Shift slightly off the Ritz value so the system is solvable; inverse
    // iteration still converges to the corresponding eigenvector.
    let shift = theta * Complex::new(1.0 + 1e-10, 0.0) + Complex::new(1e-12, 1e-12);
    let mut shifted = hk.map(|x| Complex::new(x, 0.0));
    for i in 0..k {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();
    let mut w = DVector::from_element(k, Complex::new(1.0, 0.0));
    for _ in 0..3 {
        w = lu.solve(&w)?;
        let norm = w.norm();
        if !norm.is_finite() || norm <= 1e-300 {
            return None;
        }
        w /= Complex::new(norm, 0.0);
    }
    let n = basis[0].len();
    let mut real = DVector::zeros(n);
    let mut imag = DVector::zeros(n);
    for (j, q) in basis.iter().enumerate().take(k) {
        real.axpy(w[j].re, q, 1.0);
        imag.axpy(w[j].im, q, 1.0);
    }
    // For a complex-pair Ritz value, Re and Im span the 2D invariant
    // subspace; any combination restarts inside it.
    let mut v = real + imag;
    let norm = v.norm();
    if !norm.is_finite() || norm <= 1e-300 {
        return None;
    }
    v /= norm;
    Some(v)
}

/// Induced 2-norm (largest singular value) via power iteration on AᵀA.
pub fn operator_norm(a: &SparseMatrix) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nnz() == 0 {
        return 0.0;
    }
    let mut v = start_vector(n);
    let mut lambda = 0.0f64;
    for _ in 0..10_000 {
        let w = a.tr_mul_vec(&a.mul_vec(&v));
        let new_lambda = v.dot(&w);
        let norm = w.norm();
        if norm <= 1e-300 {
            return 0.0;
        }
        v = w / norm;
        if (new_lambda - lambda).abs() <= 1e-12 * new_lambda.abs().max(1e-300) {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    lambda.max(0.0).sqrt()
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order and each eigenvector's largest-magnitude entry made
/// positive (deterministic across runs).
pub fn symmetric_eigen_sorted(mat: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    assert_eq!(mat.nrows(), mat.ncols());
    let m = mat.nrows();
    let eig = mat.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("eigensolver produced non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("finite eigenvalues")
    });
    let mut values = DVector::zeros(m);
    let mut vectors = DMatrix::zeros(m, m);
    for (slot, &src) in order.iter().enumerate() {
        values[slot] = eig.eigenvalues[src];
        let mut col = eig.eigenvectors.column(src).clone_owned();
        let mut max_abs = 0.0;
        let mut max_idx = 0;
        for (i, &c) in col.iter().enumerate() {
            if c.abs() > max_abs {
                max_abs = c.abs();
                max_idx = i;
            }
        }
        if col[max_idx] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(slot, &col);
    }
    Ok((values, vectors))
}
