//! Dense complex linear algebra helpers shared by the rest of the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{QpdError, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `i^k` for `k` taken mod 4.
#[inline]
pub fn i_pow(k: u8) -> C64 {
    match k % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn unitarity_error(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// Eigen-decomposition of a Hermitian matrix. The input is symmetrized first so
/// round-off in the lower triangle cannot leak into the result.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()) * real(0.5);
    let eig = SymmetricEigen::new(sym);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.into_iter().fold(f64::INFINITY, f64::min)
}

/// Trace norm of a Hermitian matrix, the sum of absolute eigenvalues.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.iter().map(|v| v.abs()).sum()
}

/// Number of singular values above `tol`.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > tol)
        .count()
}

/// Column-stacking vectorization.
pub fn vec_col(m: &CMatrix) -> CVector {
    CVector::from_iterator(m.len(), m.iter().copied())
}

pub fn unvec_col(v: &CVector, dim: usize) -> CMatrix {
    CMatrix::from_iterator(dim, dim, v.iter().copied())
}

pub fn ket(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = ONE;
    v
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// `<v|m|v>` for a normalized or unnormalized ket.
pub fn expectation(m: &CMatrix, v: &CVector) -> C64 {
    (v.adjoint() * m * v)[(0, 0)]
}

/// `tr[a b]` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let d = a.nrows();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub mod gates {
    use super::*;

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn pauli_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    pub fn hadamard() -> CMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[real(h), real(h), real(h), real(-h)])
    }

    pub fn phase_s() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, I])
    }

    pub fn swap() -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 2)] = ONE;
        m[(2, 1)] = ONE;
        m[(3, 3)] = ONE;
        m
    }

    pub fn controlled_z() -> CMatrix {
        let mut m = identity(4);
        m[(3, 3)] = -ONE;
        m
    }

    /// `exp(-i theta/2 (axis . sigma))` for a unit axis.
    pub fn rotation(theta: f64, axis: [f64; 3]) -> CMatrix {
        let (s, co) = (theta / 2.0).sin_cos();
        let generator = pauli_x() * real(axis[0]) + pauli_y() * real(axis[1]) + pauli_z() * real(axis[2]);
        identity(2) * real(co) - generator * (I * s)
    }

    /// Places a single-qubit gate on `qubit` of an `n`-qubit register.
    pub fn on_qubit(gate: &CMatrix, qubit: usize, n: usize) -> CMatrix {
        let mut out = identity(1);
        for q in 0..n {
            out = if q == qubit {
                kron(&out, gate)
            } else {
                kron(&out, &identity(2))
            };
        }
        out
    }
}

/// Row-major complex matrix in the JSON interchange format: each entry is a
/// `[re, im]` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                let z = m[(r, col)];
                data.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(QpdError::Parse(format!(
                "matrix data has {} entries, expected {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(CMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.data.iter().map(|[re, im]| C64::new(*re, *im)),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::gates::*;
    use super::*;

    #[test]
    fn vec_unvec_column_stacking() {
        let m = CMatrix::from_row_slice(2, 2, &[real(1.0), real(2.0), real(3.0), real(4.0)]);
        let v = vec_col(&m);
        assert_eq!(v[1], real(3.0));
        assert_eq!(unvec_col(&v, 2), m);
    }

    #[test]
    fn superoperator_identity_for_conjugation() {
        // vec(A X B) = (B^T kron A) vec(X)
        let a = hadamard() * phase_s();
        let b = pauli_y();
        let x = CMatrix::from_row_slice(2, 2, &[real(0.3), c(0.1, 0.2), c(0.1, -0.2), real(0.7)]);
        let lhs = vec_col(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec_col(&x);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn rotation_is_unitary() {
        let u = rotation(0.7, [0.6, 0.0, 0.8]);
        assert!(unitarity_error(&u) < 1e-14);
    }

    #[test]
    fn matrix_json_round_trip_is_exact() {
        let m = rotation(0.3, [0.0, 1.0, 0.0]) * real(1.0 / 3.0);
        let json = serde_json::to_string(&MatrixJson::from_matrix(&m)).unwrap();
        let back: MatrixJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
    }

    #[test]
    fn trace_norm_of_difference_of_orthogonal_pure_states() {
        let p0 = projector(&ket(2, 0));
        let p1 = projector(&ket(2, 1));
        assert!((trace_norm_hermitian(&(p0 - p1)) - 2.0).abs() < 1e-12);
    }
}
