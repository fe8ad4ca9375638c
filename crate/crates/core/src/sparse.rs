//! Compressed-row kernels for the hot loops.
//!
//! Every operator in the model is a low-order polynomial in ladder operators,
//! so rows carry only a handful of entries. Trajectory and master-equation
//! right-hand sides are evaluated through these kernels; the dense
//! [`OperatorMatrix`] stays the reference representation.

use crate::hilbert::OperatorMatrix;
use crate::C64;

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Keeps exactly the nonzero entries of `op`.
    pub fn from_dense(op: &OperatorMatrix) -> Self {
        let m = op.matrix();
        let n = m.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[C64], y: &mut [C64]) {
        for i in 0..self.n {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    /// `y += alpha A x`
    pub fn mul_vec_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for i in 0..self.n {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] += alpha * acc;
        }
    }

    /// `Y = A X` for column-major `X` of shape `n × ncols`.
    pub fn mul_mat(&self, x: &[C64], ncols: usize, y: &mut [C64]) {
        let n = self.n;
        for col in 0..ncols {
            self.mul_vec(&x[col * n..(col + 1) * n], &mut y[col * n..(col + 1) * n]);
        }
    }

    /// `Y += X A†` for column-major `X` (`n × n`).
    ///
    /// `(X A†)[i, j] = Σ_k X[i, k] conj(A[j, k])`.
    pub fn add_mul_right_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let n = self.n;
        for j in 0..n {
            for p in self.row_ptr[j]..self.row_ptr[j + 1] {
                let k = self.cols[p];
                let a = self.vals[p].conj();
                let xk = &x[k * n..(k + 1) * n];
                let yj = &mut y[j * n..(j + 1) * n];
                for (yy, xx) in yj.iter_mut().zip(xk) {
                    *yy += xx * a;
                }
            }
        }
    }
}

/// A fixed sparsity pattern shared by several operators, so that
/// `Σ_j c_j(t) A_j` can be assembled in `O(nnz)` for each new set of
/// coefficients.
#[derive(Clone, Debug)]
pub struct LinearCombination {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    components: Vec<Vec<C64>>,
}

impl LinearCombination {
    pub fn new(ops: &[OperatorMatrix]) -> Self {
        assert!(!ops.is_empty(), "linear combination needs at least one operator");
        let n = ops[0].dim();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                if ops.iter().any(|op| op.get(i, j) != C64::new(0.0, 0.0)) {
                    cols.push(j);
                }
            }
            row_ptr.push(cols.len());
        }
        let components = ops
            .iter()
            .map(|op| {
                let mut v = Vec::with_capacity(cols.len());
                for i in 0..n {
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        v.push(op.get(i, cols[k]));
                    }
                }
                v
            })
            .collect();
        Self {
            n,
            row_ptr,
            cols,
            components,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Writes the values of `Σ_j coeffs[j] A_j` into `out` (length `nnz`).
    pub fn assemble(&self, coeffs: &[C64], out: &mut [C64]) {
        debug_assert_eq!(coeffs.len(), self.components.len());
        out.copy_from_slice(&self.components[0]);
        if coeffs[0] != C64::new(1.0, 0.0) {
            for v in out.iter_mut() {
                *v *= coeffs[0];
            }
        }
        for (c, comp) in coeffs.iter().zip(&self.components).skip(1) {
            if *c == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, v) in out.iter_mut().zip(comp) {
                *o += c * v;
            }
        }
    }

    /// `y = A x` with `A` given by assembled values.
    pub fn mul_vec(&self, vals: &[C64], x: &[C64], y: &mut [C64]) {
        for i in 0..self.n {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    /// `Y = A X` for column-major `X` of shape `n × ncols`.
    pub fn mul_mat(&self, vals: &[C64], x: &[C64], ncols: usize, y: &mut [C64]) {
        let n = self.n;
        for col in 0..ncols {
            self.mul_vec(vals, &x[col * n..(col + 1) * n], &mut y[col * n..(col + 1) * n]);
        }
    }
}
