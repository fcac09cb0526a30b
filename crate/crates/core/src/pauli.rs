//! Phase-tracked n-qubit Pauli operators and maximally commuting partitions.
//!
//! A [`PauliOperator`] is `i^k X_x Z_z` with `x`, `z` stored as bit masks (bit `i`
//! is qubit `i`). The Pauli basis used by every channel representation in the
//! crate is the Hermitian representative `P_a = i^{x.z} X_x Z_z` of index
//! `a = x + 2^n z`, which gives the familiar `Y` on qubits with both bits set.

use std::fmt;

use crate::error::{QpdError, Result};
use crate::linalg::{self, gates, hermitian_eigen, i_pow, max_abs_diff, CMatrix, ONE, ZERO};
use crate::state::DensityMatrix;

/// Largest register the bit-mask representation supports.
pub const MAX_PAULI_QUBITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: u32,
    z: u32,
    phase: u8,
}

impl PauliOperator {
    pub fn new(n: usize, x: u32, z: u32, phase: u8) -> Result<Self> {
        if n == 0 || n > MAX_PAULI_QUBITS {
            return Err(QpdError::UnsupportedQubitCount {
                n,
                min: 1,
                max: MAX_PAULI_QUBITS,
            });
        }
        let mask = low_mask(n);
        if x & !mask != 0 || z & !mask != 0 {
            return Err(QpdError::InvalidParameter(format!(
                "Pauli bits exceed {n} qubits (x={x:#b}, z={z:#b})"
            )));
        }
        Ok(Self {
            n,
            x,
            z,
            phase: phase % 4,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, 0, 0, 0).expect("identity on a supported register")
    }

    /// Hermitian basis element `P_a` for the packed index `a = x + 2^n z`.
    pub fn from_index(n: usize, a: usize) -> Result<Self> {
        let count = 1usize << (2 * n);
        if a >= count {
            return Err(QpdError::InvalidParameter(format!(
                "Pauli index {a} out of range for {n} qubits"
            )));
        }
        let mask = low_mask(n) as usize;
        let x = (a & mask) as u32;
        let z = ((a >> n) & mask) as u32;
        Self::new(n, x, z, ((x & z).count_ones() % 4) as u8)
    }

    /// Parses a label such as `"XIZ"` (qubit 0 first, optional leading sign / `i`)
    /// into the Hermitian representative times the given phase.
    pub fn from_label(label: &str) -> Result<Self> {
        let mut rest = label.trim();
        let mut phase = 0u8;
        if let Some(r) = rest.strip_prefix('-') {
            phase += 2;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        }
        if let Some(r) = rest.strip_prefix('i') {
            phase += 1;
            rest = r;
        }
        let n = rest.chars().count();
        if n == 0 {
            return Err(QpdError::Parse(format!("empty Pauli label {label:?}")));
        }
        let (mut x, mut z) = (0u32, 0u32);
        for (q, ch) in rest.chars().enumerate() {
            match ch.to_ascii_uppercase() {
                'I' => {}
                'X' => x |= 1 << q,
                'Z' => z |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                other => {
                    return Err(QpdError::Parse(format!(
                        "unexpected character {other:?} in Pauli label {label:?}"
                    )))
                }
            }
        }
        let base = (x & z).count_ones() as u8;
        Self::new(n, x, z, base + phase)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> u32 {
        self.x
    }

    pub fn z(&self) -> u32 {
        self.z
    }

    /// Exponent `k` in `i^k X_x Z_z`.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    /// Packed index of the phase-free part.
    pub fn index(&self) -> usize {
        (self.x as usize) | ((self.z as usize) << self.n)
    }

    /// The `2n` binary vector `(x_0..x_{n-1}, z_0..z_{n-1})`.
    pub fn to_binary_vector(&self) -> Vec<u8> {
        let bits = self.index();
        (0..2 * self.n).map(|i| ((bits >> i) & 1) as u8).collect()
    }

    pub fn from_binary_vector(n: usize, bits: &[u8]) -> Result<Self> {
        if bits.len() != 2 * n {
            return Err(QpdError::InvalidParameter(format!(
                "binary vector of length {} for {n} qubits",
                bits.len()
            )));
        }
        let a = bits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | (usize::from(b & 1) << i));
        Self::from_index(n, a)
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_hermitian(&self) -> bool {
        (self.phase as u32 + (self.x & self.z).count_ones()) % 2 == 0
    }

    /// Same operator with the phase reset to the Hermitian representative.
    pub fn projected(&self) -> Self {
        Self {
            phase: ((self.x & self.z).count_ones() % 4) as u8,
            ..*self
        }
    }

    /// Phase of `self` relative to its Hermitian representative, so that
    /// `self = i^k P_a`.
    pub fn relative_phase(&self) -> u8 {
        (self.phase + 4 - ((self.x & self.z).count_ones() % 4) as u8) % 4
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        symplectic_product(self.x, self.z, other.x, other.z) == 0
    }

    /// Phase-tracked product `self * other`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(QpdError::DimensionMismatch(self.n, other.n));
        }
        // Z_z1 X_x2 = (-1)^{z1.x2} X_x2 Z_z1
        let swap = 2 * ((self.z & other.x).count_ones() % 2) as u8;
        Ok(Self {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase: (self.phase + other.phase + swap) % 4,
        })
    }

    pub fn adjoint(&self) -> Self {
        // (X_x Z_z)^dagger = Z_z X_x = (-1)^{x.z} X_x Z_z
        let flip = 2 * ((self.x & self.z).count_ones() % 2) as u8;
        Self {
            phase: (4 - self.phase + flip) % 4,
            ..*self
        }
    }

    /// `self * other * self^dagger`.
    pub fn conjugate(&self, other: &Self) -> Result<Self> {
        self.product(other)?.product(&self.adjoint())
    }

    /// Dense `2^n x 2^n` matrix.
    pub fn matrix(&self) -> CMatrix {
        let dim = 1usize << self.n;
        let fx = self.index_mask(self.x);
        let fz = self.index_mask(self.z);
        let global = i_pow(self.phase);
        let mut m = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let sign = if (fz & col).count_ones() % 2 == 0 { ONE } else { -ONE };
            m[(col ^ fx, col)] = global * sign;
        }
        m
    }

    /// Maps qubit bit `i` to basis-index bit `n - 1 - i`.
    fn index_mask(&self, qubit_mask: u32) -> usize {
        (0..self.n)
            .filter(|q| qubit_mask >> q & 1 == 1)
            .fold(0usize, |acc, q| acc | (1 << (self.n - 1 - q)))
    }

    pub fn label(&self) -> String {
        let body: String = (0..self.n)
            .map(|q| match (self.x >> q & 1, self.z >> q & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (0, 1) => 'Z',
                _ => 'Y',
            })
            .collect();
        let prefix = match self.relative_phase() {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        format!("{prefix}{body}")
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn low_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

fn symplectic_product(x1: u32, z1: u32, x2: u32, z2: u32) -> u32 {
    ((x1 & z2).count_ones() + (z1 & x2).count_ones()) % 2
}

/// All `4^n` Hermitian basis elements in index order.
pub fn pauli_basis(n: usize) -> Vec<PauliOperator> {
    (0..1usize << (2 * n))
        .map(|a| PauliOperator::from_index(n, a).expect("index in range"))
        .collect()
}

/// Hilbert-Schmidt pairing `tr[p q]`, evaluated algebraically.
pub fn hs_inner(p: &PauliOperator, q: &PauliOperator) -> Result<linalg::C64> {
    let r = p.product(q)?;
    if r.is_identity() {
        Ok(i_pow(r.phase) * (1u64 << p.n) as f64)
    } else {
        Ok(ZERO)
    }
}

/// `(1/4^n) sum_{P in Q_n} P m P` for an arbitrary operator.
pub fn pauli_average_operator(m: &CMatrix) -> CMatrix {
    let n = qubits_of(m);
    let mut acc = CMatrix::zeros(m.nrows(), m.ncols());
    for p in pauli_basis(n) {
        let pm = p.matrix();
        acc += &pm * m * &pm;
    }
    acc / linalg::real((1usize << (2 * n)) as f64)
}

/// `(1/2^n) sum_a Z_a m Z_a` for an arbitrary operator.
pub fn z_average_operator(m: &CMatrix) -> CMatrix {
    let n = qubits_of(m);
    let mut acc = CMatrix::zeros(m.nrows(), m.ncols());
    for z in 0..1u32 << n {
        let zm = PauliOperator::new(n, 0, z, 0).expect("valid mask").matrix();
        acc += &zm * m * &zm;
    }
    acc / linalg::real((1usize << n) as f64)
}

/// Average over conjugation by the full Pauli group; for a state this is `I/2^n`.
pub fn full_pauli_average(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::new_unchecked(rho.num_qubits(), pauli_average_operator(rho.matrix()))
}

/// Average over conjugation by the `Z_a`; removes all off-diagonal entries.
pub fn z_average(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::new_unchecked(rho.num_qubits(), z_average_operator(rho.matrix()))
}

fn qubits_of(m: &CMatrix) -> usize {
    let dim = m.nrows();
    assert!(dim.is_power_of_two() && m.is_square(), "operator must be 2^n x 2^n");
    dim.trailing_zeros() as usize
}

/// Largest register [`commuting_partition`] will search.
pub const MAX_PARTITION_QUBITS: usize = 3;

const SIGN_TOL: f64 = 1e-10;

/// Partition of the non-identity Paulis into `2^n + 1` maximally commuting sets of
/// size `2^n - 1`, with a unitary `V_j` per set such that
/// `sets[j][a-1] = signs[j][a-1] * V_j Z_a V_j^dagger` for `a = 1..2^n`.
#[derive(Debug, Clone)]
pub struct CommutingPartition {
    n: usize,
    sets: Vec<Vec<PauliOperator>>,
    diagonalizers: Vec<CMatrix>,
    signs: Vec<Vec<i8>>,
}

impl CommutingPartition {
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn sets(&self) -> &[Vec<PauliOperator>] {
        &self.sets
    }

    pub fn diagonalizers(&self) -> &[CMatrix] {
        &self.diagonalizers
    }

    /// `signs[j][a-1]` is `s_{j,a}`.
    pub fn signs(&self) -> &[Vec<i8>] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// Builds the partition for `1 <= n <= 3`.
///
/// For one qubit the sets are `{Z}, {X}, {Y}` with `V = I, H, SH`. Larger registers
/// use a deterministic backtracking search over maximal isotropic subspaces
/// (lowest uncovered index first) and obtain each `V_j` as the joint eigenbasis of
/// the set's generators.
pub fn commuting_partition(n: usize) -> Result<CommutingPartition> {
    if n == 0 || n > MAX_PARTITION_QUBITS {
        return Err(QpdError::UnsupportedQubitCount {
            n,
            min: 1,
            max: MAX_PARTITION_QUBITS,
        });
    }
    let (subspaces, diagonalizers) = if n == 1 {
        let h = gates::hadamard();
        let s = gates::phase_s();
        (
            vec![vec![2u32], vec![1u32], vec![3u32]],
            vec![linalg::identity(2), h.clone(), s * h],
        )
    } else {
        let spread = find_spread(n)?;
        let mut diagonalizers = Vec::with_capacity(spread.len());
        for gens in &spread {
            diagonalizers.push(joint_eigenbasis(n, gens)?);
        }
        (spread, diagonalizers)
    };

    let mut sets = Vec::with_capacity(subspaces.len());
    let mut signs = Vec::with_capacity(subspaces.len());
    for (gens, v) in subspaces.iter().zip(&diagonalizers) {
        let members: Vec<PauliOperator> = span(gens)
            .into_iter()
            .filter(|&a| a != 0)
            .map(|a| PauliOperator::from_index(n, a as usize))
            .collect::<Result<_>>()?;
        let (ordered, set_signs) = match_members(n, v, &members)?;
        sets.push(ordered);
        signs.push(set_signs);
    }
    Ok(CommutingPartition {
        n,
        sets,
        diagonalizers,
        signs,
    })
}

/// Assigns each `V Z_a V^dagger` to the set member it equals up to a sign.
fn match_members(n: usize, v: &CMatrix, members: &[PauliOperator]) -> Result<(Vec<PauliOperator>, Vec<i8>)> {
    let mut ordered = Vec::with_capacity(members.len());
    let mut signs = Vec::with_capacity(members.len());
    let vd = v.adjoint();
    for a in 1u32..1 << n {
        let za = PauliOperator::new(n, 0, a, 0)?.matrix();
        let image = v * za * &vd;
        let mut found = None;
        for m in members {
            let mm = m.matrix();
            if max_abs_diff(&image, &mm) < SIGN_TOL {
                found = Some((*m, 1i8));
                break;
            }
            if max_abs_diff(&image, &(-mm)) < SIGN_TOL {
                found = Some((*m, -1i8));
                break;
            }
        }
        let (m, s) = found.ok_or_else(|| {
            QpdError::Partition(format!("V Z_a V^dagger for a={a:#b} matches no set member up to sign"))
        })?;
        ordered.push(m);
        signs.push(s);
    }
    Ok((ordered, signs))
}

/// All elements of the F2-span of the packed generators (including 0).
fn span(gens: &[u32]) -> Vec<u32> {
    let mut out = vec![0u32];
    for &g in gens {
        let extra: Vec<u32> = out.iter().map(|&s| s ^ g).collect();
        out.extend(extra);
    }
    out
}

fn packed_commute(n: usize, a: u32, b: u32) -> bool {
    let mask = low_mask(n);
    symplectic_product(a & mask, a >> n, b & mask, b >> n) == 0
}

/// Generators of `2^n + 1` disjoint maximal isotropic subspaces covering every
/// non-zero packed index.
fn find_spread(n: usize) -> Result<Vec<Vec<u32>>> {
    let total = 1usize << (2 * n);
    let mut covered = vec![false; total];
    covered[0] = true;
    let mut out = Vec::new();
    if spread_search(n, &mut covered, &mut out) {
        Ok(out)
    } else {
        Err(QpdError::Partition(format!("no partition found for n={n}")))
    }
}

fn spread_search(n: usize, covered: &mut [bool], out: &mut Vec<Vec<u32>>) -> bool {
    let Some(first) = covered.iter().position(|&c| !c) else {
        return true;
    };
    let mut found = false;
    let mut gens = vec![first as u32];
    let mut members = span(&gens);
    extend_subspace(n, covered, &mut gens, &mut members, &mut |gens, members, covered| {
        for &m in members.iter().filter(|&&m| m != 0) {
            covered[m as usize] = true;
        }
        out.push(gens.to_vec());
        if spread_search(n, covered, out) {
            found = true;
            return true;
        }
        out.pop();
        for &m in members.iter().filter(|&&m| m != 0) {
            covered[m as usize] = false;
        }
        false
    });
    found
}

/// Depth-first extension of an isotropic subspace by lexicographically increasing
/// generators; calls `visit` on every completed (dimension `n`) subspace until it
/// returns `true`.
fn extend_subspace(
    n: usize,
    covered: &mut [bool],
    gens: &mut Vec<u32>,
    members: &mut Vec<u32>,
    visit: &mut dyn FnMut(&[u32], &[u32], &mut [bool]) -> bool,
) -> bool {
    if gens.len() == n {
        return visit(gens, members, covered);
    }
    let last = *gens.last().expect("seeded with one generator");
    for cand in (last + 1)..(covered.len() as u32) {
        if covered[cand as usize] || members.contains(&cand) {
            continue;
        }
        if !gens.iter().all(|&g| packed_commute(n, g, cand)) {
            continue;
        }
        let new_members: Vec<u32> = members.iter().map(|&m| m ^ cand).collect();
        if new_members.iter().any(|&m| covered[m as usize]) {
            continue;
        }
        gens.push(cand);
        let saved = members.len();
        members.extend(new_members);
        if extend_subspace(n, covered, gens, members, visit) {
            return true;
        }
        members.truncate(saved);
        gens.pop();
    }
    false
}

/// Unitary whose column `k` is the joint eigenvector of the generators with
/// eigenvalue `(-1)^{k_i}` for generator `i`, so that `V Z_i V^dagger = G_i`.
///
/// The weighted sum `sum_i 2^-i G_i` has non-degenerate spectrum on a maximal
/// commuting set, so a single Hermitian eigen-decomposition separates every joint
/// eigenspace.
fn joint_eigenbasis(n: usize, gens: &[u32]) -> Result<CMatrix> {
    let dim = 1usize << n;
    let mats: Vec<CMatrix> = gens
        .iter()
        .map(|&g| PauliOperator::from_index(n, g as usize).map(|p| p.matrix()))
        .collect::<Result<_>>()?;
    let mut weighted = CMatrix::zeros(dim, dim);
    for (i, m) in mats.iter().enumerate() {
        weighted += m * linalg::real(0.5f64.powi(i as i32));
    }
    let (_, vecs) = hermitian_eigen(&weighted);
    let mut v = CMatrix::zeros(dim, dim);
    let mut filled = vec![false; dim];
    for col in 0..dim {
        let ev = vecs.column(col).into_owned();
        let mut index = 0usize;
        for (i, m) in mats.iter().enumerate() {
            let val = linalg::expectation(m, &ev).re;
            if (val.abs() - 1.0).abs() > 1e-8 {
                return Err(QpdError::Partition(format!(
                    "eigenvector is not a joint eigenvector (<G_{i}> = {val})"
                )));
            }
            if val < 0.0 {
                index |= 1 << (n - 1 - i);
            }
        }
        if filled[index] {
            return Err(QpdError::Partition("degenerate joint eigenspace".into()));
        }
        filled[index] = true;
        v.set_column(index, &ev);
    }
    Ok(v)
}
