//! Noise models: a Pauli channel followed by a coherent rotation, channels drawn to
//! hit a target fidelity, teleportation through an imperfect resource, and a
//! resource state degraded by repeated noisy SWAPs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{depolarizing, Channel};
use crate::error::{QpdError, Result};
use crate::linalg::gates;
use crate::pauli::pauli_basis;
use crate::rng::{uniform_simplex, uniform_sphere};
use crate::state::{max_entangled_ket, DensityMatrix, MaxEntangledState};

/// Draws allowed per target before [`random_channel_targeting`] gives up.
pub const MAX_TARGET_ATTEMPTS: usize = 10_000;

/// Single-qubit noise: Pauli errors with total probability `q` distributed as
/// `(p_x, p_y, p_z)`, then a rotation by `theta` about `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModelParams {
    pub q: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    pub theta: f64,
    pub axis: [f64; 3],
}

impl NoiseModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.q) {
            return Err(QpdError::InvalidParameter(format!(
                "error probability {} outside [0, 1]",
                self.q
            )));
        }
        let ps = [self.p_x, self.p_y, self.p_z];
        if ps.iter().any(|&p| !(p >= 0.0)) {
            return Err(QpdError::InvalidParameter(format!(
                "negative Pauli error weight in {ps:?}"
            )));
        }
        let total: f64 = ps.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(QpdError::InvalidParameter(format!(
                "Pauli error weights sum to {total}"
            )));
        }
        if !self.theta.is_finite() {
            return Err(QpdError::InvalidParameter("rotation angle is not finite".into()));
        }
        let norm = self.axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(QpdError::InvalidParameter(format!("rotation axis has norm {norm}")));
        }
        Ok(())
    }

    /// `(1 - q) cos^2(theta/2) + q (sum_k p_k n_k^2) sin^2(theta/2)`.
    pub fn entanglement_fidelity(&self) -> f64 {
        let (s, c) = (self.theta / 2.0).sin_cos();
        let w = self.p_x * self.axis[0].powi(2) + self.p_y * self.axis[1].powi(2) + self.p_z * self.axis[2].powi(2);
        (1.0 - self.q) * c * c + self.q * w * s * s
    }
}

/// The Pauli part followed by the rotation.
pub fn noise_model_channel(params: &NoiseModelParams) -> Result<Channel> {
    params.validate()?;
    let q = params.q;
    // Index order I, X, Z, Y.
    let pauli = Channel::from_pauli_probabilities(1, &[1.0 - q, q * params.p_x, q * params.p_z, q * params.p_y])?;
    let rotation = Channel::from_unitary(&gates::rotation(params.theta, params.axis))?;
    pauli.then(&rotation)
}

/// Draws the error distribution and rotation axis at random and solves for `q` so
/// that the channel has fidelity `fidelity`. Draws with `q` outside `[0, 1]` are
/// rejected.
pub fn random_channel_targeting<R: Rng + ?Sized>(
    fidelity: f64,
    theta: f64,
    rng: &mut R,
) -> Result<(Channel, NoiseModelParams)> {
    if !(0.0..=1.0).contains(&fidelity) || !theta.is_finite() {
        return Err(QpdError::InvalidParameter(format!(
            "target F={fidelity}, theta={theta}"
        )));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    let (c2, s2) = (c * c, s * s);
    let mut q_range = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..MAX_TARGET_ATTEMPTS {
        let p = uniform_simplex(3, rng);
        let axis = uniform_sphere(rng);
        let w = p[0] * axis[0].powi(2) + p[1] * axis[1].powi(2) + p[2] * axis[2].powi(2);
        let denom = c2 - w * s2;
        let q = if (c2 - fidelity).abs() <= 1e-15 {
            0.0
        } else {
            (c2 - fidelity) / denom
        };
        if !q.is_finite() {
            continue;
        }
        q_range = (q_range.0.min(q), q_range.1.max(q));
        if !(0.0..=1.0).contains(&q) {
            continue;
        }
        let params = NoiseModelParams {
            q,
            p_x: p[0],
            p_y: p[1],
            p_z: p[2],
            theta,
            axis,
        };
        return Ok((noise_model_channel(&params)?, params));
    }
    Err(QpdError::InfeasibleTarget {
        fidelity,
        theta,
        attempts: MAX_TARGET_ATTEMPTS,
        detail: format!(
            "solved error probability ranged over [{:.4}, {:.4}]; cos^2(theta/2) = {c2:.4}",
            q_range.0, q_range.1
        ),
    })
}

/// A state on `2n` qubits shared between sender (first) and receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceState {
    n: usize,
    rho: DensityMatrix,
}

impl ResourceState {
    pub fn new(n: usize, rho: DensityMatrix) -> Result<Self> {
        if rho.num_qubits() != 2 * n {
            return Err(QpdError::DimensionMismatch(rho.num_qubits(), 2 * n));
        }
        Ok(Self { n, rho })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.rho
    }

    /// `<Phi_n|rho|Phi_n>`.
    pub fn bell_fidelity(&self) -> f64 {
        self.rho.overlap(&max_entangled_ket(self.n))
    }
}

/// Teleportation through `resource`: the Pauli channel with probabilities
/// `<Phi^a|rho|Phi^a>`, `Phi^a = (P_a (x) I) Phi_n`.
pub fn teleportation_channel(resource: &ResourceState) -> Result<Channel> {
    let n = resource.n;
    let phi = max_entangled_ket(n);
    let id = crate::linalg::identity(1 << n);
    let probs: Vec<f64> = pauli_basis(n)
        .iter()
        .map(|p| {
            let v = crate::linalg::kron(&p.matrix(), &id) * &phi;
            resource.rho.overlap(&v).max(0.0)
        })
        .collect();
    let total: f64 = probs.iter().sum();
    let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
    Channel::from_pauli_probabilities(n, &probs)
}

/// `Phi_1` after `k` noisy SWAPs, each an ideal SWAP followed by two-qubit
/// depolarizing noise of strength `per_swap_noise`.
pub fn swap_degraded_resource(k: usize, per_swap_noise: f64) -> Result<ResourceState> {
    if !(0.0..=1.0).contains(&per_swap_noise) {
        return Err(QpdError::InvalidParameter(format!(
            "per-SWAP noise {per_swap_noise} outside [0, 1]"
        )));
    }
    let noisy_swap = Channel::from_unitary(&gates::swap())?.then(&depolarizing(2, 1.0 - per_swap_noise)?)?;
    let mut rho = MaxEntangledState::new(1).state().clone();
    for _ in 0..k {
        rho = noisy_swap.apply(&rho)?;
    }
    ResourceState::new(1, rho)
}
