//! Enumeration of the Clifford group for one and two qubits.
//!
//! Elements are found by breadth-first search from the identity, multiplying by
//! `H_q`, `S_q` and `CZ` on neighbouring qubits. Two unitaries are the same element
//! when they act identically (signs included) on the generators `X_q`, `Z_q`, which
//! identifies them up to a global phase. The search order is fixed, so the element
//! list is deterministic.

use std::collections::{HashMap, VecDeque};

use crate::error::{QpdError, Result};
use crate::linalg::{self, gates, CMatrix};
use crate::pauli::{pauli_basis, PauliOperator};

/// Largest register supported by the enumeration.
pub const MAX_CLIFFORD_QUBITS: usize = 2;

/// Image of one generator under conjugation: Pauli index and sign.
type Image = (usize, i8);

/// A Clifford unitary together with its action `U g U^dagger` on the generators
/// `X_0..X_{n-1}, Z_0..Z_{n-1}`.
#[derive(Debug, Clone)]
pub struct CliffordElement {
    pub unitary: CMatrix,
    pub images: Vec<Image>,
}

impl CliffordElement {
    /// Images with signs dropped; equal for two elements differing by a Pauli.
    pub fn symplectic_key(&self) -> Vec<usize> {
        self.images.iter().map(|&(a, _)| a).collect()
    }
}

/// Identifies `m` as `sign * P_a`, or `None` when it is not a signed Hermitian
/// Pauli.
pub fn as_signed_pauli(m: &CMatrix, basis: &[PauliOperator]) -> Option<Image> {
    let d = m.nrows() as f64;
    for (a, p) in basis.iter().enumerate() {
        let t = linalg::trace_of_product(&p.matrix(), m) / d;
        if (t.re - 1.0).abs() < 1e-9 && t.im.abs() < 1e-9 {
            return Some((a, 1));
        }
        if (t.re + 1.0).abs() < 1e-9 && t.im.abs() < 1e-9 {
            return Some((a, -1));
        }
    }
    None
}

fn generator_paulis(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(2 * n);
    for q in 0..n {
        out.push(gates::on_qubit(&gates::pauli_x(), q, n));
    }
    for q in 0..n {
        out.push(gates::on_qubit(&gates::pauli_z(), q, n));
    }
    out
}

fn images_of(u: &CMatrix, generators: &[CMatrix], basis: &[PauliOperator]) -> Result<Vec<Image>> {
    let ud = u.adjoint();
    generators
        .iter()
        .map(|g| {
            as_signed_pauli(&(u * g * &ud), basis)
                .ok_or_else(|| QpdError::InvalidEnsemble("gate does not normalize the Pauli group".into()))
        })
        .collect()
}

/// All `24` (n = 1) or `11520` (n = 2) Clifford elements modulo global phase.
pub fn clifford_group(n: usize) -> Result<Vec<CliffordElement>> {
    if n == 0 || n > MAX_CLIFFORD_QUBITS {
        return Err(QpdError::UnsupportedQubitCount {
            n,
            min: 1,
            max: MAX_CLIFFORD_QUBITS,
        });
    }
    let basis = pauli_basis(n);
    let gens = generator_paulis(n);
    let mut step_gates = Vec::new();
    for q in 0..n {
        step_gates.push(gates::on_qubit(&gates::hadamard(), q, n));
        step_gates.push(gates::on_qubit(&gates::phase_s(), q, n));
    }
    if n == 2 {
        step_gates.push(gates::controlled_z());
    }

    let start = linalg::identity(1 << n);
    let start_images = images_of(&start, &gens, &basis)?;
    let mut seen: HashMap<Vec<Image>, usize> = HashMap::new();
    seen.insert(start_images.clone(), 0);
    let mut elements = vec![CliffordElement {
        unitary: start,
        images: start_images,
    }];
    let mut queue = VecDeque::from([0usize]);
    while let Some(idx) = queue.pop_front() {
        for g in &step_gates {
            let u = g * &elements[idx].unitary;
            let images = images_of(&u, &gens, &basis)?;
            if seen.contains_key(&images) {
                continue;
            }
            seen.insert(images.clone(), elements.len());
            queue.push_back(elements.len());
            elements.push(CliffordElement { unitary: u, images });
        }
    }
    Ok(elements)
}

/// One element per symplectic class (Clifford group modulo Paulis), first in
/// search order: `6` for one qubit, `720` for two.
pub fn symplectic_representatives(n: usize) -> Result<Vec<CliffordElement>> {
    let mut seen = std::collections::HashSet::new();
    Ok(clifford_group(n)?
        .into_iter()
        .filter(|e| seen.insert(e.symplectic_key()))
        .collect())
}
