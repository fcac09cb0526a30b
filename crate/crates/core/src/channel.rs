//! Linear maps on n-qubit operators and validated CPTP channels.
//!
//! The canonical representation is the column-stacking superoperator `S`, with
//! `vec(C(rho)) = S vec(rho)`; the map `rho -> A rho B` is `B^T (x) A`. The chi
//! matrix, normalized Choi state, Kraus operators and Pauli transfer matrix are
//! derived from it. A [`Channel`] additionally keeps its chi matrix, computed once
//! at construction (or taken verbatim when built from chi, which makes the JSON
//! form round-trip exactly).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QpdError, Result};
use crate::linalg::{self, real, CMatrix, C64, ONE, ZERO};
use crate::pauli::{pauli_basis, PauliOperator};
use crate::rng;
use crate::state::{max_entangled_ket, DensityMatrix};

/// Tolerance on Choi eigenvalues and the trace-preservation residual.
pub const CPTP_TOL: f64 = 1e-9;
/// Choi eigenvalues below this are dropped when extracting Kraus operators.
pub const KRAUS_CUTOFF: f64 = 1e-12;
/// Singular values above this count towards the Pauli-transfer-matrix rank.
pub const PTM_RANK_TOL: f64 = 1e-9;

/// Largest register a superoperator is built for (`4^n x 4^n` dense matrix).
pub const MAX_CHANNEL_QUBITS: usize = 4;

/// A linear map on `2^n x 2^n` operators, not necessarily CPTP.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    n: usize,
    mat: CMatrix,
}

impl Superoperator {
    pub fn from_matrix(n: usize, mat: CMatrix) -> Result<Self> {
        check_qubits(n)?;
        let d2 = 1usize << (2 * n);
        if mat.shape() != (d2, d2) {
            return Err(QpdError::InvalidChannel(format!(
                "superoperator for {n} qubits must be {d2}x{d2}, got {:?}",
                mat.shape()
            )));
        }
        Ok(Self { n, mat })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            mat: linalg::identity(1 << (2 * n)),
        }
    }

    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(u))
    }

    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| QpdError::InvalidChannel("empty Kraus list".into()))?;
        let dim = first.nrows();
        if !dim.is_power_of_two() || !first.is_square() {
            return Err(QpdError::InvalidChannel(format!(
                "Kraus operator shape {:?}",
                first.shape()
            )));
        }
        let n = dim.trailing_zeros() as usize;
        check_qubits(n)?;
        let mut mat = CMatrix::zeros(dim * dim, dim * dim);
        for k in kraus {
            if k.shape() != (dim, dim) {
                return Err(QpdError::InvalidChannel("Kraus operators differ in shape".into()));
            }
            mat += linalg::kron(&k.map(|z| z.conj()), k);
        }
        Ok(Self { n, mat })
    }

    /// `sum_ab chi_ab P_a rho P_b`.
    pub fn from_chi_unchecked(n: usize, chi: &CMatrix) -> Result<Self> {
        check_qubits(n)?;
        let d2 = 1usize << (2 * n);
        if chi.shape() != (d2, d2) {
            return Err(QpdError::InvalidChi(format!(
                "chi for {n} qubits must be {d2}x{d2}, got {:?}",
                chi.shape()
            )));
        }
        let w = pauli_vectorization(n);
        let choi = &w * chi * w.adjoint();
        Ok(Self {
            n,
            mat: reshuffle(&choi, 1 << n),
        })
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

    pub fn apply_operator(&self, op: &CMatrix) -> CMatrix {
        linalg::unvec_col(&(&self.mat * linalg::vec_col(op)), self.dim())
    }

    /// `self` followed by `after`.
    pub fn then(&self, after: &Self) -> Result<Self> {
        if self.n != after.n {
            return Err(QpdError::DimensionMismatch(self.n, after.n));
        }
        Ok(Self {
            n: self.n,
            mat: &after.mat * &self.mat,
        })
    }

    /// `rho -> U^dagger C(U rho U^dagger) U`.
    pub fn conjugated_by(&self, u: &CMatrix) -> Self {
        let before = linalg::kron(&u.map(|z| z.conj()), u);
        let ud = u.adjoint();
        let after = linalg::kron(&ud.map(|z| z.conj()), &ud);
        Self {
            n: self.n,
            mat: after * &self.mat * before,
        }
    }

    pub fn linear_combination(terms: &[(f64, &Superoperator)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| QpdError::InvalidChannel("empty linear combination".into()))?;
        let n = first.n;
        let mut mat = CMatrix::zeros(first.mat.nrows(), first.mat.ncols());
        for (w, s) in terms {
            if s.n != n {
                return Err(QpdError::DimensionMismatch(n, s.n));
            }
            mat += &s.mat * real(*w);
        }
        Ok(Self { n, mat })
    }

    /// Unnormalized Choi matrix `sum_ij |i><j| (x) C(|i><j|)`.
    pub fn choi_unnormalized(&self) -> CMatrix {
        reshuffle(&self.mat, self.dim())
    }

    /// Chi matrix in the Hermitian Pauli basis.
    pub fn chi(&self) -> CMatrix {
        let w = pauli_vectorization(self.n);
        let d = self.dim() as f64;
        w.adjoint() * self.choi_unnormalized() * w / real(d * d)
    }

    /// `R_ij = tr[P_i C(P_j)] / 2^n`, real for Hermiticity-preserving maps.
    pub fn pauli_transfer_matrix(&self) -> CMatrix {
        let d = self.dim();
        let basis = pauli_basis(self.n);
        let mut u = CMatrix::zeros(d * d, basis.len());
        for (col, p) in basis.iter().enumerate() {
            u.set_column(col, &linalg::vec_col(&p.matrix()));
        }
        u.adjoint() * &self.mat * u / real(d as f64)
    }

    /// `tr S / d^2`, the Bell overlap of the Choi state.
    pub fn entanglement_fidelity(&self) -> f64 {
        let d = self.dim() as f64;
        linalg::trace(&self.mat).re / (d * d)
    }

    /// `(I_R (x) C)(rho)` for an operator on reference (first) plus system.
    pub fn apply_extended(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim();
        let dr = rho.nrows() / d;
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        for i in 0..dr {
            for j in 0..dr {
                let block = rho.view((i * d, j * d), (d, d)).into_owned();
                let mapped = self.apply_operator(&block);
                out.view_mut((i * d, j * d), (d, d)).copy_from(&mapped);
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(&self.mat, &other.mat)
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_CHANNEL_QUBITS {
        return Err(QpdError::UnsupportedQubitCount {
            n,
            min: 1,
            max: MAX_CHANNEL_QUBITS,
        });
    }
    Ok(())
}

/// Columns `w_a = (I (x) P_a) sum_i |i>|i>`.
fn pauli_vectorization(n: usize) -> CMatrix {
    let d = 1usize << n;
    let basis = pauli_basis(n);
    let mut w = CMatrix::zeros(d * d, basis.len());
    for (col, p) in basis.iter().enumerate() {
        let pm = p.matrix();
        for i in 0..d {
            for r in 0..d {
                let v = pm[(r, i)];
                if v != ZERO {
                    w[(i * d + r, col)] = v;
                }
            }
        }
    }
    w
}

/// Swaps between the superoperator and the unnormalized Choi matrix; the map is an
/// involution: `J[i d + k, j d + l] = S[l d + k, j d + i]`.
fn reshuffle(m: &CMatrix, d: usize) -> CMatrix {
    let mut out = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    out[(i * d + k, j * d + l)] = m[(l * d + k, j * d + i)];
                }
            }
        }
    }
    out
}

/// A validated CPTP map with equal input and output dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    superop: Superoperator,
    chi: CMatrix,
}

impl Channel {
    pub fn from_superoperator(superop: Superoperator) -> Result<Self> {
        validate_cptp(&superop)?;
        let chi = superop.chi();
        Ok(Self { superop, chi })
    }

    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        Self::from_superoperator(Superoperator::from_kraus(kraus)?)
    }

    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        let err = linalg::unitarity_error(u);
        if err > 1e-10 {
            return Err(QpdError::InvalidChannel(format!(
                "matrix is not unitary (error {err:e})"
            )));
        }
        Self::from_kraus(std::slice::from_ref(u))
    }

    pub fn identity(n: usize) -> Self {
        let superop = Superoperator::identity(n);
        let mut chi = CMatrix::zeros(superop.mat.nrows(), superop.mat.ncols());
        chi[(0, 0)] = ONE;
        Self { superop, chi }
    }

    /// Channel from a chi matrix, kept verbatim as the chi view.
    pub fn from_chi(n: usize, chi: CMatrix) -> Result<Self> {
        let herm = linalg::hermiticity_error(&chi);
        if herm > 1e-10 {
            return Err(QpdError::InvalidChi(format!("not Hermitian (error {herm:e})")));
        }
        let min = linalg::min_eigenvalue(&chi);
        if min < -CPTP_TOL {
            return Err(QpdError::InvalidChi(format!(
                "not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        let superop = Superoperator::from_chi_unchecked(n, &chi)?;
        let tp = trace_preservation_error(&superop);
        if tp > CPTP_TOL {
            return Err(QpdError::InvalidChi(format!(
                "trace-preservation condition violated (residual {tp:e})"
            )));
        }
        Ok(Self { superop, chi })
    }

    /// Pauli channel `rho -> sum_a probs[a] P_a rho P_a`.
    pub fn from_pauli_probabilities(n: usize, probs: &[f64]) -> Result<Self> {
        let count = 1usize << (2 * n);
        if probs.len() != count {
            return Err(QpdError::InvalidChannel(format!(
                "expected {count} Pauli probabilities, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|&p| p < -1e-12 || !p.is_finite()) {
            return Err(QpdError::InvalidChannel("negative Pauli probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(QpdError::InvalidChannel(format!("Pauli probabilities sum to {total}")));
        }
        let chi = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(count, probs.iter().map(|&p| real(p))));
        Self::from_chi(n, chi)
    }

    pub fn num_qubits(&self) -> usize {
        self.superop.n
    }

    pub fn superoperator(&self) -> &Superoperator {
        &self.superop
    }

    pub fn into_superoperator(self) -> Superoperator {
        self.superop
    }

    pub fn chi(&self) -> &CMatrix {
        &self.chi
    }

    /// Diagonal of the chi matrix.
    pub fn pauli_probabilities(&self) -> Vec<f64> {
        self.chi.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.num_qubits() != self.num_qubits() {
            return Err(QpdError::DimensionMismatch(rho.num_qubits(), self.num_qubits()));
        }
        Ok(DensityMatrix::new_unchecked(
            self.num_qubits(),
            self.superop.apply_operator(rho.matrix()),
        ))
    }

    pub fn then(&self, after: &Channel) -> Result<Channel> {
        Channel::from_superoperator(self.superop.then(&after.superop)?)
    }

    /// `<Phi|(I (x) C)(Phi)|Phi>`, evaluated from the superoperator trace.
    pub fn entanglement_fidelity(&self) -> f64 {
        self.superop.entanglement_fidelity()
    }

    /// `sum_{i != j} |chi_ij|`.
    pub fn coherent_offdiag_sum(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.chi.nrows() {
            for j in 0..self.chi.ncols() {
                if i != j {
                    total += self.chi[(i, j)].norm();
                }
            }
        }
        total
    }

    pub fn is_pauli(&self, tol: f64) -> bool {
        self.coherent_offdiag_sum() <= tol
    }

    /// Normalized Choi state `(I (x) C)(Phi_n)` on `2n` qubits.
    pub fn choi_state(&self) -> DensityMatrix {
        let d = self.superop.dim() as f64;
        DensityMatrix::new_unchecked(2 * self.num_qubits(), self.superop.choi_unnormalized() / real(d))
    }

    /// Kraus operators from the eigen-decomposition of the Choi matrix.
    pub fn kraus(&self) -> Vec<CMatrix> {
        let d = self.superop.dim();
        let (vals, vecs) = linalg::hermitian_eigen(&self.superop.choi_unnormalized());
        let mut out = Vec::new();
        for (k, &lambda) in vals.iter().enumerate() {
            if lambda <= KRAUS_CUTOFF {
                continue;
            }
            let scale = lambda.sqrt();
            let v = vecs.column(k);
            out.push(CMatrix::from_fn(d, d, |r, i| v[i * d + r] * scale));
        }
        out
    }

    pub fn pauli_transfer_matrix(&self) -> CMatrix {
        self.superop.pauli_transfer_matrix()
    }

    pub fn ptm_rank(&self) -> usize {
        linalg::numerical_rank(&self.pauli_transfer_matrix(), PTM_RANK_TOL)
    }

    pub fn to_json(&self) -> ChannelJson {
        let flat = linalg::MatrixJson::from_matrix(&self.chi);
        ChannelJson {
            n: self.num_qubits(),
            representation: "chi".into(),
            data: flat.data,
        }
    }

    pub fn from_json(doc: &ChannelJson) -> Result<Self> {
        if doc.representation != "chi" {
            return Err(QpdError::Parse(format!(
                "unsupported channel representation {:?}",
                doc.representation
            )));
        }
        check_qubits(doc.n)?;
        let d2 = 1usize << (2 * doc.n);
        let chi = linalg::MatrixJson {
            rows: d2,
            cols: d2,
            data: doc.data.clone(),
        }
        .to_matrix()?;
        Self::from_chi(doc.n, chi)
    }

    /// Random channel with `rank` Kraus operators, drawn from a Haar-random
    /// Stinespring isometry.
    pub fn random<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Result<Self> {
        check_qubits(n)?;
        if rank == 0 {
            return Err(QpdError::InvalidParameter("Kraus rank must be positive".into()));
        }
        let d = 1usize << n;
        let g = CMatrix::from_fn(rank * d, d, |_, _| rng::complex_normal(rng));
        let svd = g.svd(true, true);
        let isometry = svd.u.expect("u requested") * svd.v_t.expect("v_t requested");
        let kraus: Vec<CMatrix> = (0..rank)
            .map(|k| isometry.view((k * d, 0), (d, d)).into_owned())
            .collect();
        Self::from_kraus(&kraus)
    }
}

/// JSON document `{n, representation: "chi", data}` with `data` the row-major chi
/// entries as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub n: usize,
    pub representation: String,
    pub data: Vec<[f64; 2]>,
}

fn trace_preservation_error(s: &Superoperator) -> f64 {
    let d = s.dim();
    let choi = s.choi_unnormalized() / real(d as f64);
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut acc = ZERO;
            for k in 0..d {
                acc += choi[(i * d + k, j * d + k)];
            }
            let target = if i == j { 1.0 / d as f64 } else { 0.0 };
            worst = worst.max((acc - real(target)).norm());
        }
    }
    worst
}

fn validate_cptp(s: &Superoperator) -> Result<()> {
    let d = s.dim() as f64;
    let choi = s.choi_unnormalized() / real(d);
    let herm = linalg::hermiticity_error(&choi);
    if herm > CPTP_TOL {
        return Err(QpdError::InvalidChannel(format!(
            "Choi matrix not Hermitian (error {herm:e})"
        )));
    }
    let min = linalg::min_eigenvalue(&choi);
    if min < -CPTP_TOL {
        return Err(QpdError::InvalidChannel(format!(
            "not completely positive (min Choi eigenvalue {min:e})"
        )));
    }
    let tp = trace_preservation_error(s);
    if tp > CPTP_TOL {
        return Err(QpdError::InvalidChannel(format!(
            "not trace preserving (residual {tp:e})"
        )));
    }
    Ok(())
}

/// `p I + (1-p)/(4^n - 1) sum_{P != I} P . P`.
pub fn depolarizing(n: usize, p: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QpdError::InvalidParameter(format!(
            "depolarizing parameter {p} outside [0, 1]"
        )));
    }
    check_qubits(n)?;
    let count = 1usize << (2 * n);
    let mut probs = vec![(1.0 - p) / (count - 1) as f64; count];
    probs[0] = p;
    Channel::from_pauli_probabilities(n, &probs)
}

/// `tr[O C(rho)]` for a Pauli observable and an arbitrary linear map.
pub fn pauli_expectation_after(map: &Superoperator, rho: &DensityMatrix, observable: &PauliOperator) -> Result<f64> {
    if rho.num_qubits() != map.num_qubits() {
        return Err(QpdError::DimensionMismatch(rho.num_qubits(), map.num_qubits()));
    }
    let out = map.apply_operator(rho.matrix());
    Ok(linalg::trace_of_product(&observable.matrix(), &out).re)
}

/// Sampled lower bound on the diamond distance: the largest trace distance of
/// `(I (x) A)(psi)` and `(I (x) B)(psi)` over `samples` Haar-random pure inputs on
/// system plus an equally sized reference.
pub fn sampled_diamond_lower_bound<R: Rng + ?Sized>(
    a: &Superoperator,
    b: &Superoperator,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if a.n != b.n {
        return Err(QpdError::DimensionMismatch(a.n, b.n));
    }
    let diff = Superoperator {
        n: a.n,
        mat: &a.mat - &b.mat,
    };
    let d = a.dim();
    let mut best: f64 = 0.0;
    // The maximally entangled input is always included.
    let phi = linalg::projector(&max_entangled_ket(a.n));
    best = best.max(linalg::trace_norm_hermitian(&diff.apply_extended(&phi)));
    for _ in 0..samples {
        let psi = rng::haar_ket(d * d, rng);
        let out = diff.apply_extended(&linalg::projector(&psi));
        best = best.max(linalg::trace_norm_hermitian(&out));
    }
    Ok(best)
}

/// Conjugation superoperator `rho -> U rho U^dagger`.
pub fn unitary_superoperator(u: &CMatrix) -> CMatrix {
    linalg::kron(&u.map(|z: C64| z.conj()), u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, gates};
    use crate::rng::{haar_ket, stream_rng};

    fn bell_projector() -> CMatrix {
        linalg::projector(&max_entangled_ket(1))
    }

    #[test]
    fn identity_channel_has_unit_fidelity() {
        for n in 1..=2 {
            let id = Channel::identity(n);
            assert!((id.entanglement_fidelity() - 1.0).abs() < 1e-15);
            assert!((id.chi()[(0, 0)].re - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn depolarizing_fidelity_equals_parameter() {
        for n in 1..=2 {
            for p in [0.0, 0.25, 0.5, 1.0] {
                let ch = depolarizing(n, p).unwrap();
                assert!((ch.entanglement_fidelity() - p).abs() < 1e-12);
                assert!((ch.superoperator().chi()[(0, 0)].re - p).abs() < 1e-12);
            }
        }
        assert!(depolarizing(1, 1.2).is_err());
        assert!(depolarizing(1, -0.1).is_err());
    }

    #[test]
    fn z_conjugation_has_zero_fidelity_by_bell_overlap() {
        let ch = Channel::from_unitary(&gates::pauli_z()).unwrap();
        let out = ch.superoperator().apply_extended(&bell_projector());
        let overlap = linalg::expectation(&out, &max_entangled_ket(1)).re;
        assert!(overlap.abs() < 1e-15);
        assert!(ch.entanglement_fidelity().abs() < 1e-15);
    }

    #[test]
    fn depolarizing_is_affine_in_p() {
        for n in 1..=2 {
            let id = Superoperator::identity(n);
            let d0 = depolarizing(n, 0.0).unwrap();
            for p in [0.1, 0.37, 0.9] {
                let dp = depolarizing(n, p).unwrap();
                let combo = Superoperator::linear_combination(&[(p, &id), (1.0 - p, d0.superoperator())]).unwrap();
                assert!(dp.superoperator().max_abs_diff(&combo) < 1e-12);
            }
        }
    }

    #[test]
    fn fully_depolarizing_output_overlaps() {
        // One qubit: <0|D_0(|0><0|)|0> = 1/3.
        let d0 = depolarizing(1, 0.0).unwrap();
        let out = d0.apply(&DensityMatrix::basis_state(1, 0)).unwrap();
        assert!((out.matrix()[(0, 0)].re - 1.0 / 3.0).abs() < 1e-14);

        // Two qubits, Haar-random pure input, oracle by explicit 15-term Pauli sum.
        let mut rng = stream_rng(21, &[]);
        let psi = haar_ket(4, &mut rng);
        let rho = DensityMatrix::from_ket(&psi).unwrap();
        let mut oracle = CMatrix::zeros(4, 4);
        for p in pauli_basis(2).into_iter().skip(1) {
            oracle += p.matrix() * rho.matrix() * p.matrix();
        }
        oracle /= real(15.0);
        let out = depolarizing(2, 0.0).unwrap().apply(&rho).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), &oracle) < 1e-14);
        assert!((out.overlap(&psi) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn chi_examples() {
        let mut e00 = CMatrix::zeros(4, 4);
        e00[(0, 0)] = ONE;
        let ch = Channel::from_chi(1, e00).unwrap();
        assert!(ch.superoperator().max_abs_diff(&Superoperator::identity(1)) < 1e-15);

        // chi diagonal (1-q, q px, q py, q pz) in index order I, X, Z, Y
        let (q, px, py, pz) = (0.2, 0.5, 0.3, 0.2);
        let ch = Channel::from_pauli_probabilities(1, &[1.0 - q, q * px, q * pz, q * py]).unwrap();
        let rho = DensityMatrix::from_ket(&haar_ket(2, &mut stream_rng(5, &[]))).unwrap();
        let (x, y, z) = (gates::pauli_x(), gates::pauli_y(), gates::pauli_z());
        let direct = rho.matrix() * real(1.0 - q)
            + (&x * rho.matrix() * &x) * real(q * px)
            + (&y * rho.matrix() * &y) * real(q * py)
            + (&z * rho.matrix() * &z) * real(q * pz);
        assert!(linalg::max_abs_diff(ch.apply(&rho).unwrap().matrix(), &direct) < 1e-14);
    }

    #[test]
    fn chi_action_matches_direct_sum_for_random_channels() {
        let mut rng = stream_rng(31, &[]);
        for n in 1..=2 {
            let ch = Channel::random(n, 3, &mut rng).unwrap();
            let basis = pauli_basis(n);
            let rho = DensityMatrix::from_ket(&haar_ket(1 << n, &mut rng)).unwrap();
            let mut direct = CMatrix::zeros(1 << n, 1 << n);
            for (a, pa) in basis.iter().enumerate() {
                for (b, pb) in basis.iter().enumerate() {
                    direct += pa.matrix() * rho.matrix() * pb.matrix() * ch.chi()[(a, b)];
                }
            }
            assert!(linalg::max_abs_diff(ch.apply(&rho).unwrap().matrix(), &direct) < 1e-12);
            let rebuilt = Channel::from_chi(n, ch.chi().clone()).unwrap();
            assert!(linalg::max_abs_diff(&rebuilt.superoperator().chi(), ch.chi()) < 1e-12);
        }
    }

    #[test]
    fn invalid_chi_reports_failed_invariant() {
        let mut chi = CMatrix::zeros(4, 4);
        chi[(0, 0)] = real(0.5);
        let err = Channel::from_chi(1, chi.clone()).unwrap_err().to_string();
        assert!(err.contains("trace-preservation"), "{err}");
        chi[(0, 0)] = ONE;
        chi[(0, 1)] = c(0.0, 0.3);
        let err = Channel::from_chi(1, chi.clone()).unwrap_err().to_string();
        assert!(err.contains("Hermitian"), "{err}");
        chi[(1, 0)] = c(0.0, -0.3);
        let err = Channel::from_chi(1, chi).unwrap_err().to_string();
        assert!(err.contains("semidefinite"), "{err}");
    }

    #[test]
    fn coherent_offdiag_sum_of_x_rotation() {
        let theta: f64 = 0.3;
        let ch = Channel::from_unitary(&gates::rotation(theta, [1.0, 0.0, 0.0])).unwrap();
        let half = theta / 2.0;
        let analytic = 2.0 * (half.cos() * half.sin()).abs();
        assert!((ch.coherent_offdiag_sum() - analytic).abs() < 1e-12);
        assert!((analytic - 0.295_520_206_661_339_6).abs() < 1e-12);

        let pauli = depolarizing(1, 0.4).unwrap();
        assert!(pauli.coherent_offdiag_sum() < 1e-15);
        let composed = pauli
            .then(&Channel::from_unitary(&gates::rotation(0.0, [0.0, 0.0, 1.0])).unwrap())
            .unwrap();
        assert!(composed.coherent_offdiag_sum() < 1e-12);
    }

    #[test]
    fn choi_state_examples() {
        let choi = Channel::identity(1).choi_state();
        assert!(linalg::max_abs_diff(choi.matrix(), &bell_projector()) < 1e-15);

        let d0 = depolarizing(1, 0.0).unwrap();
        let direct = d0.superoperator().apply_extended(&bell_projector());
        assert!(linalg::max_abs_diff(d0.choi_state().matrix(), &direct) < 1e-15);
        assert!(d0.choi_state().overlap(&max_entangled_ket(1)).abs() < 1e-15);

        let mut rng = stream_rng(41, &[]);
        for _ in 0..100 {
            let ch = Channel::random(1, 2, &mut rng).unwrap();
            let overlap = ch.choi_state().overlap(&max_entangled_ket(1));
            assert!((overlap - ch.chi()[(0, 0)].re).abs() < 1e-10);
        }
    }

    #[test]
    fn ptm_rank_examples() {
        assert_eq!(depolarizing(1, 0.0).unwrap().ptm_rank(), 4);
        assert_eq!(depolarizing(2, 0.0).unwrap().ptm_rank(), 16);
        let mut probs = vec![0.25; 4];
        probs[0] = 0.25;
        assert_eq!(Channel::from_pauli_probabilities(1, &probs).unwrap().ptm_rank(), 1);
        assert_eq!(
            Channel::from_pauli_probabilities(2, &[1.0 / 16.0; 16])
                .unwrap()
                .ptm_rank(),
            1
        );
    }

    #[test]
    fn representation_round_trips() {
        let mut rng = stream_rng(51, &[]);
        for n in 1..=2 {
            let ch = Channel::random(n, 2, &mut rng).unwrap();
            let from_kraus = Channel::from_kraus(&ch.kraus()).unwrap();
            assert!(from_kraus.superoperator().max_abs_diff(ch.superoperator()) < 1e-10);
            let via_chi = Superoperator::from_chi_unchecked(n, &ch.superoperator().chi()).unwrap();
            assert!(via_chi.max_abs_diff(ch.superoperator()) < 1e-10);
        }
    }

    #[test]
    fn random_channels_map_states_to_states() {
        let mut rng = stream_rng(61, &[]);
        let ch = Channel::random(1, 3, &mut rng).unwrap();
        for _ in 0..50 {
            let rho = DensityMatrix::from_ket(&haar_ket(2, &mut rng)).unwrap();
            let out = ch.apply(&rho).unwrap();
            DensityMatrix::new(1, out.matrix().clone()).unwrap();
            assert!(out.trace_distance(&rho).unwrap() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn non_cp_map_is_rejected() {
        // Transpose map is positive but not completely positive.
        let mut mat = CMatrix::zeros(4, 4);
        for r in 0..2 {
            for col in 0..2 {
                mat[(r * 2 + col, col * 2 + r)] = ONE;
            }
        }
        let s = Superoperator::from_matrix(1, mat).unwrap();
        assert!(Channel::from_superoperator(s).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rng = stream_rng(71, &[]);
        let ch = Channel::random(1, 2, &mut rng).unwrap();
        let text = serde_json::to_string(&ch.to_json()).unwrap();
        let parsed: ChannelJson = serde_json::from_str(&text).unwrap();
        let back = Channel::from_json(&parsed).unwrap();
        assert_eq!(back.chi(), ch.chi());
        assert_eq!(serde_json::to_string(&back.to_json()).unwrap(), text);
        let bad = r#"{"n":1,"representation":"kraus","data":[]}"#;
        assert!(Channel::from_json(&serde_json::from_str(bad).unwrap()).is_err());
    }

    #[test]
    fn diamond_lower_bound_of_orthogonal_unitaries() {
        let mut rng = stream_rng(81, &[]);
        let id = Superoperator::identity(1);
        let z = Superoperator::from_unitary(&gates::pauli_z()).unwrap();
        let lb = sampled_diamond_lower_bound(&id, &z, 20, &mut rng).unwrap();
        assert!((lb - 2.0).abs() < 1e-12);
        assert!(sampled_diamond_lower_bound(&id, &id, 5, &mut rng).unwrap() < 1e-15);
    }
}
