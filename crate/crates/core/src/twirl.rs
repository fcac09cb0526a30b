//! Unitary ensembles and channel twirls `sum_i p_i U_i^dagger C(U_i rho U_i^dagger) U_i`.

use serde::{Deserialize, Serialize};

use crate::channel::{Channel, Superoperator};
use crate::clifford::{self, as_signed_pauli};
use crate::error::{QpdError, Result};
use crate::exec::{self, Execution};
use crate::linalg::{self, gates, CMatrix};
use crate::pauli::{pauli_basis, CommutingPartition, PauliOperator};

pub const PROBABILITY_TOL: f64 = 1e-12;
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleLabel {
    TwoDesign,
    PauliMixing,
    Trivial,
    Custom,
}

impl EnsembleLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EnsembleLabel::TwoDesign => "two_design",
            EnsembleLabel::PauliMixing => "pauli_mixing",
            EnsembleLabel::Trivial => "trivial",
            EnsembleLabel::Custom => "custom",
        }
    }
}

impl std::fmt::Display for EnsembleLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Finite probability distribution over `n`-qubit unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryEnsemble {
    n: usize,
    items: Vec<(f64, CMatrix)>,
    label: EnsembleLabel,
}

impl UnitaryEnsemble {
    pub fn new(n: usize, items: Vec<(f64, CMatrix)>, label: EnsembleLabel) -> Result<Self> {
        if items.is_empty() {
            return Err(QpdError::InvalidEnsemble("no elements".into()));
        }
        let dim = 1usize << n;
        let mut total = 0.0;
        for (i, (p, u)) in items.iter().enumerate() {
            if !(*p >= 0.0) || !p.is_finite() {
                return Err(QpdError::InvalidEnsemble(format!("element {i} has probability {p}")));
            }
            if u.shape() != (dim, dim) {
                return Err(QpdError::InvalidEnsemble(format!(
                    "element {i} has shape {:?}, expected {dim}x{dim}",
                    u.shape()
                )));
            }
            let err = linalg::unitarity_error(u);
            if err > UNITARITY_TOL {
                return Err(QpdError::InvalidEnsemble(format!(
                    "element {i} not unitary (error {err:e})"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(QpdError::InvalidEnsemble(format!("probabilities sum to {total}")));
        }
        Ok(Self { n, items, label })
    }

    /// Equal weights over `unitaries`.
    pub fn uniform(n: usize, unitaries: Vec<CMatrix>, label: EnsembleLabel) -> Result<Self> {
        let w = 1.0 / unitaries.len().max(1) as f64;
        Self::new(n, unitaries.into_iter().map(|u| (w, u)).collect(), label)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn items(&self) -> &[(f64, CMatrix)] {
        &self.items
    }

    pub fn label(&self) -> EnsembleLabel {
        self.label
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn to_json(&self) -> EnsembleJson {
        EnsembleJson {
            n: self.n,
            label: self.label,
            items: self
                .items
                .iter()
                .map(|(p, u)| EnsembleItemJson {
                    probability: *p,
                    unitary: linalg::MatrixJson::from_matrix(u),
                })
                .collect(),
        }
    }

    pub fn from_json(doc: &EnsembleJson) -> Result<Self> {
        let items = doc
            .items
            .iter()
            .map(|it| Ok((it.probability, it.unitary.to_matrix()?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.n, items, doc.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleJson {
    pub n: usize,
    pub label: EnsembleLabel,
    pub items: Vec<EnsembleItemJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleItemJson {
    pub probability: f64,
    pub unitary: linalg::MatrixJson,
}

/// `{I}` with probability one.
pub fn trivial(n: usize) -> UnitaryEnsemble {
    UnitaryEnsemble {
        n,
        items: vec![(1.0, linalg::identity(1 << n))],
        label: EnsembleLabel::Trivial,
    }
}

fn cyclic_cliffords() -> [CMatrix; 3] {
    let h = gates::hadamard();
    let s = gates::phase_s();
    [linalg::identity(2), &h * &s, &s * &h]
}

/// `{A B | A in {I, HS, SH}, B in {I, X, Y, Z}}`, uniform; index `4a + b`.
pub fn single_qubit_two_design() -> UnitaryEnsemble {
    let paulis = [
        linalg::identity(2),
        gates::pauli_x(),
        gates::pauli_y(),
        gates::pauli_z(),
    ];
    let mut items = Vec::with_capacity(12);
    for a in cyclic_cliffords() {
        for b in &paulis {
            items.push((1.0 / 12.0, &a * b));
        }
    }
    UnitaryEnsemble {
        n: 1,
        items,
        label: EnsembleLabel::TwoDesign,
    }
}

/// `{I, HS, SH}`, uniform.
pub fn single_qubit_pauli_mixing() -> UnitaryEnsemble {
    UnitaryEnsemble {
        n: 1,
        items: cyclic_cliffords().into_iter().map(|u| (1.0 / 3.0, u)).collect(),
        label: EnsembleLabel::PauliMixing,
    }
}

/// Unitary two-design: the hand-built 12-element set for one qubit, the full
/// two-qubit Clifford group (11520 elements modulo phase) for two.
pub fn two_design(n: usize) -> Result<UnitaryEnsemble> {
    match n {
        1 => Ok(single_qubit_two_design()),
        2 => {
            let group = clifford::clifford_group(2)?;
            UnitaryEnsemble::uniform(
                2,
                group.into_iter().map(|e| e.unitary).collect(),
                EnsembleLabel::TwoDesign,
            )
        }
        _ => Err(QpdError::UnsupportedQubitCount { n, min: 1, max: 2 }),
    }
}

/// Pauli-mixing ensemble: `{I, HS, SH}` for one qubit, one Clifford per
/// symplectic class (720 elements) for two.
pub fn pauli_mixing(n: usize) -> Result<UnitaryEnsemble> {
    match n {
        1 => Ok(single_qubit_pauli_mixing()),
        2 => {
            let reps = clifford::symplectic_representatives(2)?;
            UnitaryEnsemble::uniform(
                2,
                reps.into_iter().map(|e| e.unitary).collect(),
                EnsembleLabel::PauliMixing,
            )
        }
        _ => Err(QpdError::UnsupportedQubitCount { n, min: 1, max: 2 }),
    }
}

/// Uniform over the `4^n` Hermitian Paulis. Every element maps each Pauli to
/// itself up to sign, so this ensemble is not Pauli-mixing.
pub fn pauli_group(n: usize) -> UnitaryEnsemble {
    let mats: Vec<CMatrix> = pauli_basis(n).iter().map(|p| p.matrix()).collect();
    let w = 1.0 / mats.len() as f64;
    UnitaryEnsemble {
        n,
        items: mats.into_iter().map(|u| (w, u)).collect(),
        label: EnsembleLabel::Custom,
    }
}

/// Uniform over `V_j^dagger` for the diagonalizers of a commuting partition.
pub fn measurement_ensemble(partition: &CommutingPartition) -> UnitaryEnsemble {
    let w = 1.0 / partition.len() as f64;
    UnitaryEnsemble {
        n: partition.num_qubits(),
        items: partition.diagonalizers().iter().map(|v| (w, v.adjoint())).collect(),
        label: EnsembleLabel::Custom,
    }
}

/// Twirl of a general linear map; conjugations are evaluated in parallel and summed
/// in ensemble order.
pub fn twirl_superoperator(s: &Superoperator, e: &UnitaryEnsemble, exec: Execution) -> Result<Superoperator> {
    if s.num_qubits() != e.n {
        return Err(QpdError::DimensionMismatch(s.num_qubits(), e.n));
    }
    let terms = exec::map_slice(exec, &e.items, |(p, u)| (*p, s.conjugated_by(u)));
    let refs: Vec<(f64, &Superoperator)> = terms.iter().map(|(p, t)| (*p, t)).collect();
    Superoperator::linear_combination(&refs)
}

pub fn twirl(c: &Channel, e: &UnitaryEnsemble) -> Result<Channel> {
    twirl_with(c, e, Execution::default())
}

pub fn twirl_with(c: &Channel, e: &UnitaryEnsemble, exec: Execution) -> Result<Channel> {
    Channel::from_superoperator(twirl_superoperator(c.superoperator(), e, exec)?)
}

/// Outcome of [`verify_pauli_mixing`].
#[derive(Debug, Clone, PartialEq)]
pub struct PauliMixingReport {
    pub is_pauli_mixing: bool,
    /// First `(input, output)` pair whose conjugation frequency is not uniform.
    pub violation: Option<PauliMixingViolation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliMixingViolation {
    pub input: PauliOperator,
    pub output: PauliOperator,
    pub probability: f64,
    pub expected: f64,
}

/// Checks that for every non-identity `P`, the Pauli `U^dagger P U` (sign
/// dropped) is uniform over the non-identity Paulis when `U` is drawn from `e`.
/// Errors when some element does not normalize the Pauli group.
pub fn verify_pauli_mixing(e: &UnitaryEnsemble) -> Result<PauliMixingReport> {
    let n = e.n;
    let basis = pauli_basis(n);
    let count = basis.len();
    let expected = 1.0 / (count - 1) as f64;
    let mut table = vec![vec![0.0; count]; count];
    for (idx, (p, u)) in e.items.iter().enumerate() {
        let ud = u.adjoint();
        for (a, pa) in basis.iter().enumerate().skip(1) {
            let image = &ud * pa.matrix() * u;
            let (b, _) = as_signed_pauli(&image, &basis)
                .ok_or_else(|| QpdError::InvalidEnsemble(format!("element {idx} does not map {pa} to a Pauli")))?;
            table[a][b] += p;
        }
    }
    for a in 1..count {
        for b in 1..count {
            if (table[a][b] - expected).abs() > 1e-9 {
                return Ok(PauliMixingReport {
                    is_pauli_mixing: false,
                    violation: Some(PauliMixingViolation {
                        input: basis[a],
                        output: basis[b],
                        probability: table[a][b],
                        expected,
                    }),
                });
            }
        }
    }
    Ok(PauliMixingReport {
        is_pauli_mixing: true,
        violation: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::depolarizing;
    use crate::rng::{stream_rng, uniform_simplex};

    #[test]
    fn ensemble_sizes_and_validation() {
        assert_eq!(single_qubit_two_design().len(), 12);
        assert_eq!(single_qubit_pauli_mixing().len(), 3);
        assert!(UnitaryEnsemble::new(1, vec![(0.5, linalg::identity(2))], EnsembleLabel::Custom).is_err());
        assert!(UnitaryEnsemble::new(
            1,
            vec![(1.0, linalg::identity(2) * linalg::real(2.0))],
            EnsembleLabel::Custom
        )
        .is_err());
        assert!(UnitaryEnsemble::new(1, vec![(1.0, linalg::identity(4))], EnsembleLabel::Custom).is_err());
        assert!(UnitaryEnsemble::new(1, vec![], EnsembleLabel::Custom).is_err());
    }

    #[test]
    fn x_is_cycled_through_all_paulis() {
        let basis = pauli_basis(1);
        let x = gates::pauli_x();
        let mut outputs: Vec<usize> = single_qubit_pauli_mixing()
            .items()
            .iter()
            .map(|(_, u)| as_signed_pauli(&(u.adjoint() * &x * u), &basis).unwrap().0)
            .collect();
        outputs.sort();
        assert_eq!(outputs, vec![1, 2, 3]);
    }

    #[test]
    fn pauli_mixing_verification() {
        assert!(
            verify_pauli_mixing(&single_qubit_pauli_mixing())
                .unwrap()
                .is_pauli_mixing
        );
        assert!(verify_pauli_mixing(&single_qubit_two_design()).unwrap().is_pauli_mixing);
        let report = verify_pauli_mixing(&trivial(1)).unwrap();
        assert!(!report.is_pauli_mixing);
        let v = report.violation.unwrap();
        assert_eq!((v.input.label(), v.output.label()), ("X".to_string(), "X".to_string()));
        assert!(!verify_pauli_mixing(&pauli_group(2)).unwrap().is_pauli_mixing);
        assert!(verify_pauli_mixing(&pauli_mixing(2).unwrap()).unwrap().is_pauli_mixing);
        let non_clifford = UnitaryEnsemble::new(
            1,
            vec![(1.0, gates::rotation(0.3, [0.0, 0.0, 1.0]))],
            EnsembleLabel::Custom,
        )
        .unwrap();
        assert!(verify_pauli_mixing(&non_clifford).is_err());
    }

    #[test]
    fn trivial_twirl_is_identity_map() {
        let mut rng = stream_rng(3, &[]);
        let c = Channel::random(1, 2, &mut rng).unwrap();
        let t = twirl(&c, &trivial(1)).unwrap();
        assert!(t.superoperator().max_abs_diff(c.superoperator()) < 1e-15);
    }

    #[test]
    fn rotation_twirled_by_two_design() {
        let c = Channel::from_unitary(&gates::rotation(0.3, [0.0, 0.0, 1.0])).unwrap();
        let t = twirl(&c, &single_qubit_two_design()).unwrap();
        let expected = depolarizing(1, 0.15f64.cos().powi(2)).unwrap();
        assert!(t.superoperator().max_abs_diff(expected.superoperator()) < 1e-12);
        let id = twirl(&Channel::identity(1), &single_qubit_two_design()).unwrap();
        assert!(id.superoperator().max_abs_diff(&Superoperator::identity(1)) < 1e-14);
    }

    #[test]
    fn pauli_channel_twirled_by_pauli_mixing() {
        let mut rng = stream_rng(4, &[]);
        for _ in 0..20 {
            let probs = uniform_simplex(4, &mut rng);
            let c = Channel::from_pauli_probabilities(1, &probs).unwrap();
            let t = twirl(&c, &single_qubit_pauli_mixing()).unwrap();
            let expected = depolarizing(1, probs[0]).unwrap();
            assert!(t.superoperator().max_abs_diff(expected.superoperator()) < 1e-12);
        }
    }

    #[test]
    fn depolarizing_is_a_fixed_point() {
        for e in [single_qubit_two_design(), single_qubit_pauli_mixing(), trivial(1)] {
            let d = depolarizing(1, 0.7).unwrap();
            let t = twirl(&d, &e).unwrap();
            assert!(t.superoperator().max_abs_diff(d.superoperator()) < 1e-14);
        }
    }

    #[test]
    fn two_qubit_ensembles_depolarize() {
        let mut rng = stream_rng(5, &[]);
        let c = Channel::random(2, 2, &mut rng).unwrap();
        let f = c.entanglement_fidelity();
        let t = twirl(&c, &two_design(2).unwrap()).unwrap();
        assert!(
            t.superoperator()
                .max_abs_diff(depolarizing(2, f).unwrap().superoperator())
                < 1e-10
        );

        let probs = uniform_simplex(16, &mut rng);
        let pc = Channel::from_pauli_probabilities(2, &probs).unwrap();
        let t = twirl(&pc, &pauli_mixing(2).unwrap()).unwrap();
        assert!(
            t.superoperator()
                .max_abs_diff(depolarizing(2, probs[0]).unwrap().superoperator())
                < 1e-10
        );
        // Pauli-group twirl leaves a Pauli channel unchanged rather than depolarizing it.
        let t = twirl(&pc, &pauli_group(2)).unwrap();
        assert!(t.superoperator().max_abs_diff(pc.superoperator()) < 1e-12);
    }

    #[test]
    fn sequential_and_parallel_twirls_are_bit_identical() {
        let mut rng = stream_rng(6, &[]);
        let c = Channel::random(2, 3, &mut rng).unwrap();
        let e = pauli_mixing(2).unwrap();
        let a = twirl_with(&c, &e, Execution::Sequential).unwrap();
        let b = twirl_with(&c, &e, Execution::Parallel).unwrap();
        assert_eq!(a.superoperator().matrix(), b.superoperator().matrix());
    }

    #[test]
    fn ensemble_json_round_trip() {
        let e = single_qubit_two_design();
        let text = serde_json::to_string(&e.to_json()).unwrap();
        let back = UnitaryEnsemble::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, e);
    }
}
