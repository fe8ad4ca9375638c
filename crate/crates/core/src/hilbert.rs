//! Truncated Fock-space operators for the three bosonic modes.
//!
//! Tensor-product order is fixed everywhere as (optical, mechanical,
//! electrical): basis index `n_o * d_m * d_e + n_m * d_e + n_e`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Optical,
    Mechanical,
    Electrical,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Optical, Mode::Mechanical, Mode::Electrical];

    /// Position of the mode in the tensor product.
    pub fn slot(self) -> usize {
        match self {
            Mode::Optical => 0,
            Mode::Mechanical => 1,
            Mode::Electrical => 2,
        }
    }

    pub fn label(self) -> char {
        match self {
            Mode::Optical => 'o',
            Mode::Mechanical => 'm',
            Mode::Electrical => 'e',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeSpec {
    pub mode: Mode,
    pub dim: usize,
}

impl ModeSpec {
    pub fn new(mode: Mode, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self { mode, dim })
    }
}

/// Dense complex square matrix acting on a (possibly composite) Fock space.
#[derive(Clone, PartialEq)]
pub struct OperatorMatrix(DMatrix<C64>);

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorMatrix({}x{})", self.0.nrows(), self.0.ncols())
    }
}

impl OperatorMatrix {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(&self.0 * v)
    }

    pub fn scale(&self, k: C64) -> Self {
        Self(&self.0 * k)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 * &rhs.0)
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, k: f64) -> OperatorMatrix {
        OperatorMatrix(&self.0 * C64::new(k, 0.0))
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        OperatorMatrix(-&self.0)
    }
}

/// Single-mode lowering operator with `M[n-1, n] = sqrt(n)`.
pub fn annihilation(dim: usize) -> Result<OperatorMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(OperatorMatrix(m))
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` placed at `slot`.
pub fn embed(op: &OperatorMatrix, slot: Mode, specs: &[ModeSpec; 3]) -> Result<OperatorMatrix> {
    let s = slot.slot();
    if op.dim() != specs[s].dim {
        return Err(Error::DimensionMismatch {
            expected: specs[s].dim,
            found: op.dim(),
        });
    }
    let factor = |i: usize| {
        if i == s {
            op.clone()
        } else {
            OperatorMatrix::identity(specs[i].dim)
        }
    };
    Ok(factor(0).kron(&factor(1)).kron(&factor(2)))
}

/// `x̂ = x_zpf (b + b†)`.
pub fn displacement_x(b: &OperatorMatrix, x_zpf: f64) -> OperatorMatrix {
    &(b + &b.dagger()) * x_zpf
}

/// The three-mode truncated space together with its embedded ladder operators.
#[derive(Clone, Debug)]
pub struct FockSpace {
    specs: [ModeSpec; 3],
    a: OperatorMatrix,
    b: OperatorMatrix,
    c: OperatorMatrix,
}

impl FockSpace {
    pub fn new(dims: [usize; 3]) -> Result<Self> {
        let specs = [
            ModeSpec::new(Mode::Optical, dims[0])?,
            ModeSpec::new(Mode::Mechanical, dims[1])?,
            ModeSpec::new(Mode::Electrical, dims[2])?,
        ];
        let a = embed(&annihilation(dims[0])?, Mode::Optical, &specs)?;
        let b = embed(&annihilation(dims[1])?, Mode::Mechanical, &specs)?;
        let c = embed(&annihilation(dims[2])?, Mode::Electrical, &specs)?;
        Ok(Self { specs, a, b, c })
    }

    pub fn specs(&self) -> &[ModeSpec; 3] {
        &self.specs
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.specs[0].dim, self.specs[1].dim, self.specs[2].dim]
    }

    pub fn dim(&self) -> usize {
        self.specs.iter().map(|s| s.dim).product()
    }

    pub fn a(&self) -> &OperatorMatrix {
        &self.a
    }

    pub fn b(&self) -> &OperatorMatrix {
        &self.b
    }

    pub fn c(&self) -> &OperatorMatrix {
        &self.c
    }

    pub fn lowering(&self, mode: Mode) -> &OperatorMatrix {
        match mode {
            Mode::Optical => &self.a,
            Mode::Mechanical => &self.b,
            Mode::Electrical => &self.c,
        }
    }

    pub fn number(&self, mode: Mode) -> OperatorMatrix {
        let l = self.lowering(mode);
        &l.dagger() * l
    }

    /// Sum of the three number operators.
    pub fn total_number(&self) -> OperatorMatrix {
        let n = &self.number(Mode::Optical) + &self.number(Mode::Mechanical);
        &n + &self.number(Mode::Electrical)
    }

    pub fn index(&self, occ: [usize; 3]) -> Result<usize> {
        let d = self.dims();
        for (slot, (&n, &dim)) in occ.iter().zip(d.iter()).enumerate() {
            if n >= dim {
                return Err(Error::InvalidParameter {
                    name: "occupation",
                    reason: format!("level {n} of mode {slot} exceeds truncation {dim}"),
                });
            }
        }
        Ok((occ[0] * d[1] + occ[1]) * d[2] + occ[2])
    }

    pub fn occupations(&self, index: usize) -> [usize; 3] {
        let d = self.dims();
        [index / (d[1] * d[2]), (index / d[2]) % d[1], index % d[2]]
    }

    /// Fock basis vector `|n_o, n_m, n_e⟩`.
    pub fn basis(&self, occ: [usize; 3]) -> Result<DVector<C64>> {
        let mut v = DVector::zeros(self.dim());
        v[self.index(occ)?] = C64::new(1.0, 0.0);
        Ok(v)
    }
}
