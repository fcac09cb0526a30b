//! Density matrices and the maximally entangled state.

use crate::error::{QpdError, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::pauli::PauliOperator;

pub const STATE_TOL: f64 = 1e-10;

/// `2^n x 2^n` Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(n: usize, mat: CMatrix) -> Result<Self> {
        let dim = 1usize << n;
        if mat.shape() != (dim, dim) {
            return Err(QpdError::InvalidState(format!(
                "expected {dim}x{dim} matrix, got {:?}",
                mat.shape()
            )));
        }
        let herm = linalg::hermiticity_error(&mat);
        if herm > STATE_TOL {
            return Err(QpdError::InvalidState(format!("not Hermitian (error {herm:e})")));
        }
        let tr = linalg::trace(&mat);
        if (tr - linalg::ONE).norm() > STATE_TOL {
            return Err(QpdError::InvalidState(format!("trace {tr} != 1")));
        }
        let min = linalg::min_eigenvalue(&mat);
        if min < -STATE_TOL {
            return Err(QpdError::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { n, mat })
    }

    /// Skips validation; for outputs of maps already known to be CPTP.
    pub(crate) fn new_unchecked(n: usize, mat: CMatrix) -> Self {
        Self { n, mat }
    }

    pub fn from_ket(psi: &CVector) -> Result<Self> {
        let dim = psi.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(QpdError::InvalidState(format!("ket dimension {dim}")));
        }
        let norm = psi.norm();
        if norm < 1e-300 {
            return Err(QpdError::InvalidState("zero ket".into()));
        }
        let v = psi.unscale(norm);
        Ok(Self {
            n: dim.trailing_zeros() as usize,
            mat: linalg::projector(&v),
        })
    }

    pub fn basis_state(n: usize, index: usize) -> Self {
        let dim = 1usize << n;
        Self {
            n,
            mat: linalg::projector(&linalg::ket(dim, index)),
        }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        Self {
            n,
            mat: linalg::identity(dim) / linalg::real(dim as f64),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_of_product(&self.mat, &self.mat).re
    }

    /// `tr[O rho]` for a Pauli observable.
    pub fn pauli_expectation(&self, observable: &PauliOperator) -> Result<f64> {
        if observable.num_qubits() != self.n {
            return Err(QpdError::DimensionMismatch(observable.num_qubits(), self.n));
        }
        Ok(linalg::trace_of_product(&observable.matrix(), &self.mat).re)
    }

    pub fn expectation(&self, observable: &CMatrix) -> C64 {
        linalg::trace_of_product(observable, &self.mat)
    }

    /// `<psi|rho|psi>`.
    pub fn overlap(&self, psi: &CVector) -> f64 {
        linalg::expectation(&self.mat, psi).re
    }

    pub fn conjugated(&self, u: &CMatrix) -> Self {
        Self {
            n: self.n,
            mat: u * &self.mat * u.adjoint(),
        }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            n: self.n + other.n,
            mat: linalg::kron(&self.mat, &other.mat),
        }
    }

    /// `||rho - sigma||_1`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.n != other.n {
            return Err(QpdError::DimensionMismatch(self.n, other.n));
        }
        Ok(linalg::trace_norm_hermitian(&(&self.mat - &other.mat)))
    }
}

/// `|Phi_n> = 2^{-n/2} sum_i |i>|i>` on `2n` qubits, reference register first.
pub fn max_entangled_ket(n: usize) -> CVector {
    let dim = 1usize << n;
    let mut v = CVector::zeros(dim * dim);
    let amp = linalg::real(1.0 / (dim as f64).sqrt());
    for i in 0..dim {
        v[i * dim + i] = amp;
    }
    v
}

/// The maximally entangled state `Phi_n` as a `2n`-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntangledState {
    n: usize,
    state: DensityMatrix,
}

impl MaxEntangledState {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            state: DensityMatrix::new_unchecked(2 * n, linalg::projector(&max_entangled_ket(n))),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn ket(&self) -> CVector {
        max_entangled_ket(self.n)
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    /// `<Phi_n|rho|Phi_n>` for a `2n`-qubit state.
    pub fn fidelity_with(&self, rho: &DensityMatrix) -> Result<f64> {
        if rho.num_qubits() != 2 * self.n {
            return Err(QpdError::DimensionMismatch(rho.num_qubits(), 2 * self.n));
        }
        Ok(rho.overlap(&self.ket()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real};

    #[test]
    fn validation_rejects_bad_matrices() {
        let bad_trace = linalg::identity(2);
        assert!(DensityMatrix::new(1, bad_trace).is_err());
        let non_herm = CMatrix::from_row_slice(2, 2, &[real(0.5), real(0.5), real(0.0), real(0.5)]);
        assert!(DensityMatrix::new(1, non_herm).is_err());
        let negative = CMatrix::from_row_slice(2, 2, &[real(1.5), real(0.0), real(0.0), real(-0.5)]);
        assert!(DensityMatrix::new(1, negative).is_err());
        let wrong_dim = linalg::identity(3) / real(3.0);
        assert!(DensityMatrix::new(1, wrong_dim).is_err());
        let ok = CMatrix::from_row_slice(2, 2, &[real(0.5), c(0.0, 0.5), c(0.0, -0.5), real(0.5)]);
        assert!(DensityMatrix::new(1, ok).is_ok());
    }

    #[test]
    fn max_entangled_state_is_pure_with_unit_overlap() {
        for n in 1..=2 {
            let phi = MaxEntangledState::new(n);
            assert!((phi.state().purity() - 1.0).abs() < 1e-12);
            assert!((phi.fidelity_with(phi.state()).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_distance_is_bounded_by_two() {
        let a = DensityMatrix::basis_state(1, 0);
        let b = DensityMatrix::basis_state(1, 1);
        assert!((a.trace_distance(&b).unwrap() - 2.0).abs() < 1e-12);
        assert!(a.trace_distance(&a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pauli_expectation_of_basis_state() {
        let one = DensityMatrix::basis_state(1, 1);
        let z = PauliOperator::from_label("Z").unwrap();
        assert!((one.pauli_expectation(&z).unwrap() + 1.0).abs() < 1e-15);
    }
}
