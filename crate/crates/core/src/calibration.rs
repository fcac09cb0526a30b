//! Entanglement-fidelity estimation from the survival probability of `|0...0>`
//! through the twirled channel: `F = ((2^n + 1) P00 - 1) / 2^n` for a depolarizing
//! twirl.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{QpdError, Result};
use crate::exec::{self, Execution};
use crate::rng::stream_rng;
use crate::state::DensityMatrix;
use crate::twirl::{self, EnsembleLabel, UnitaryEnsemble};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationResult {
    pub n: usize,
    pub p00_hat: f64,
    pub f_hat: f64,
    pub shots: u64,
    pub stderr: f64,
    pub ensemble_label: EnsembleLabel,
}

/// CSV row form: `f_hat, stderr, shots, ensemble_label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub f_hat: f64,
    pub stderr: f64,
    pub shots: u64,
    pub ensemble_label: EnsembleLabel,
}

impl CalibrationResult {
    pub fn from_survival(n: usize, p00_hat: f64, shots: u64, ensemble_label: EnsembleLabel) -> Self {
        let d = (1u64 << n) as f64;
        let scale = (d + 1.0) / d;
        Self {
            n,
            p00_hat,
            f_hat: fidelity_from_survival(n, p00_hat),
            shots,
            stderr: scale * (p00_hat * (1.0 - p00_hat) / shots as f64).sqrt(),
            ensemble_label,
        }
    }

    pub fn row(&self) -> CalibrationRow {
        CalibrationRow {
            f_hat: self.f_hat,
            stderr: self.stderr,
            shots: self.shots,
            ensemble_label: self.ensemble_label,
        }
    }
}

/// `((2^n + 1) / 2^n) P00 - 1/2^n`; not clamped.
pub fn fidelity_from_survival(n: usize, p00: f64) -> f64 {
    let d = (1u64 << n) as f64;
    (d + 1.0) / d * p00 - 1.0 / d
}

/// Survival probability of `|0><0|` through `U^dagger C(U . U^dagger) U`.
fn element_survival(c: &Channel, u: &crate::linalg::CMatrix) -> Result<f64> {
    let zero = DensityMatrix::basis_state(c.num_qubits(), 0);
    let out = c.apply(&zero.conjugated(u))?.conjugated(&u.adjoint());
    Ok(out.matrix()[(0, 0)].re.clamp(0.0, 1.0))
}

/// Per shot: draw an ensemble element by its probability, prepare `|0...0>`, run
/// the twirled circuit and record whether all-zeros is measured.
pub fn calibrate(c: &Channel, e: &UnitaryEnsemble, shots: u64, seed: u64) -> Result<CalibrationResult> {
    calibrate_with(c, e, shots, seed, Execution::default())
}

pub fn calibrate_with(
    c: &Channel,
    e: &UnitaryEnsemble,
    shots: u64,
    seed: u64,
    exec: Execution,
) -> Result<CalibrationResult> {
    if shots == 0 {
        return Err(QpdError::InvalidParameter("calibration needs at least one shot".into()));
    }
    if c.num_qubits() != e.num_qubits() {
        return Err(QpdError::DimensionMismatch(c.num_qubits(), e.num_qubits()));
    }
    let survival = exec::map_slice(exec, e.items(), |(_, u)| element_survival(c, u))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;

    // Element counts are multinomial: split sequentially by conditional binomials.
    let mut rng = stream_rng(seed, &[0]);
    let mut counts = Vec::with_capacity(e.len());
    let (mut left, mut mass) = (shots, 1.0);
    for (i, (p, _)) in e.items().iter().enumerate() {
        let k = if i + 1 == e.len() {
            left
        } else {
            draw_binomial(&mut rng, left, (p / mass).clamp(0.0, 1.0))?
        };
        counts.push(k);
        left -= k;
        mass -= p;
    }
    let zeros: Vec<u64> = exec::map_range(exec, counts.len(), |i| {
        let mut rng = stream_rng(seed, &[1, i as u64]);
        draw_binomial(&mut rng, counts[i], survival[i])
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let p00 = zeros.iter().sum::<u64>() as f64 / shots as f64;
    Ok(CalibrationResult::from_survival(c.num_qubits(), p00, shots, e.label()))
}

pub(crate) fn draw_binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> Result<u64> {
    if n == 0 || p <= 0.0 {
        return Ok(0);
    }
    if p >= 1.0 {
        return Ok(n);
    }
    let dist = Binomial::new(n, p).map_err(|e| QpdError::InvalidParameter(format!("binomial({n}, {p}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Infinite-shot value: survival probability from the twirled superoperator,
/// mapped through [`fidelity_from_survival`].
pub fn calibrate_exact(c: &Channel, e: &UnitaryEnsemble) -> Result<f64> {
    let twirled = twirl::twirl_superoperator(c.superoperator(), e, Execution::default())?;
    let zero = DensityMatrix::basis_state(c.num_qubits(), 0);
    let p00 = twirled.apply_operator(zero.matrix())[(0, 0)].re;
    Ok(fidelity_from_survival(c.num_qubits(), p00))
}
