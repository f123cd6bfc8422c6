//! Dense complex linear algebra on small Hilbert spaces.
//!
//! States and operators are thin wrappers over `nalgebra` dynamic storage.
//! Unitary exponentials go through a Hermitian eigendecomposition so that
//! each step is unitary to round-off.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::EmptyDimension);
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("state amplitudes"));
        }
        Ok(Self(DVector::from_vec(amplitudes)))
    }

    /// Unit vector along canonical axis `k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut v = DVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub fn from_vector(v: DVector<C64>) -> Self {
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(Self(&self.0 / C64::new(n, 0.0)))
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self(&self.0 * c)
    }

    /// Multiplies by `e^{i phase}`.
    pub fn phased(&self, phase: f64) -> Self {
        self.scaled(C64::from_polar(1.0, phase))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        StateVector(&self.0 + &rhs.0)
    }
}

impl Sub for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &StateVector) -> StateVector {
        StateVector(&self.0 - &rhs.0)
    }
}

/// `<a|b>`: conjugate-linear in `a`, linear in `b`.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.0.dotc(&b.0))
}

/// `|M - M^dag|_max` over entry moduli.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    assert!(m.is_square(), "hermiticity_defect needs a square matrix");
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    /// Validates hermiticity at `tol.hermitian · max(1, |H|_max)`, then
    /// stores the exactly Hermitian part `(H + H^dag)/2`.
    pub fn new(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let dim = m.nrows();
        if dim == 0 {
            return Err(Error::EmptyDimension);
        }
        if dim > tol.max_dim {
            return Err(Error::DimensionTooLarge {
                dim,
                max: tol.max_dim,
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("Hamiltonian entries"));
        }
        let defect = hermiticity_defect(&m);
        let allowed = tol.hermitian * max_abs(&m).max(1.0);
        if defect > allowed {
            return Err(Error::NotHermitian {
                defect,
                tolerance: allowed,
            });
        }
        Ok(Self::hermitian_part(&m))
    }

    /// `(M + M^dag)/2` without validation.
    pub(crate) fn hermitian_part(m: &CMatrix) -> Self {
        Self((m + m.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        StateVector(&self.0 * &v.0)
    }

    /// `<v|H|v>`, real for Hermitian `H`.
    pub fn expectation(&self, v: &StateVector) -> f64 {
        v.0.dotc(&(&self.0 * &v.0)).re
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .0
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator(CMatrix);

impl UnitaryOperator {
    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        StateVector(&self.0 * &v.0)
    }

    /// `|U^dag U - I|_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.0.adjoint() * &self.0 - CMatrix::identity(n, n)))
    }
}

impl Mul for &UnitaryOperator {
    type Output = UnitaryOperator;
    fn mul(self, rhs: &UnitaryOperator) -> UnitaryOperator {
        UnitaryOperator(&self.0 * &rhs.0)
    }
}

/// `exp(-i H dt / hbar)` via `H = V diag(e) V^dag`.
pub fn expi_hermitian(h: &HermitianOperator, dt: f64, hbar: f64) -> Result<UnitaryOperator> {
    if !dt.is_finite() {
        return Err(Error::NonFinite("time step"));
    }
    if !hbar.is_finite() || hbar <= 0.0 {
        return Err(Error::NonFinite("hbar"));
    }
    let eig = h.0.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&e| C64::from_polar(1.0, -e * dt / hbar)),
    );
    let scaled = CMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * phases[j]);
    Ok(UnitaryOperator(scaled * v.adjoint()))
}

pub mod pauli {
    use super::{CMatrix, C64};

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0., 0.),
                C64::new(1., 0.),
                C64::new(1., 0.),
                C64::new(0., 0.),
            ],
        )
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0., 0.),
                C64::new(0., -1.),
                C64::new(0., 1.),
                C64::new(0., 0.),
            ],
        )
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1., 0.),
                C64::new(0., 0.),
                C64::new(0., 0.),
                C64::new(-1., 0.),
            ],
        )
    }
}
