use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qpdwire::calibration::calibrate;
use qpdwire::channel::depolarizing;
use qpdwire::noise::{
    noise_model_channel, swap_degraded_resource, teleportation_channel, NoiseModelParams, ResourceState,
};
use qpdwire::qpd::{estimate_expectation, exact_expectation};
use qpdwire::rng::{haar_ket, stream_rng, uniform_simplex, uniform_sphere};
use qpdwire::twirl::{self, twirl};
use qpdwire::{Channel, DensityMatrix, Execution, PauliOperator, QpdPlan, Superoperator};

type CMatrix = DMatrix<Complex64>;

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_channel(seed: u64, n: usize) -> Channel {
    let mut rng = stream_rng(seed, &[]);
    let rank = 1 + (seed as usize % (1 << (2 * n)));
    Channel::random(n, rank, &mut rng).unwrap()
}

fn random_state(seed: u64, n: usize) -> DensityMatrix {
    let mut rng = stream_rng(seed, &[1]);
    DensityMatrix::from_ket(&haar_ket(1 << n, &mut rng)).unwrap()
}

/// Identity-mixed random channel with fidelity at least one half.
fn advantageous(seed: u64, n: usize) -> Channel {
    let c = random_channel(seed, n);
    let f = c.entanglement_fidelity();
    let floor = 1.0 / (1u64 << n) as f64 + 0.05;
    if f >= floor {
        return c;
    }
    let t = (floor - f) / (1.0 - f);
    let mixed =
        Superoperator::linear_combination(&[(t, &Superoperator::identity(n)), (1.0 - t, c.superoperator())]).unwrap();
    Channel::from_superoperator(mixed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pauli_product_matches_matrices(n in 1usize..=3, a in 0usize..64, b in 0usize..64) {
        let size = 1usize << (2 * n);
        let p = PauliOperator::from_index(n, a % size).unwrap();
        let q = PauliOperator::from_index(n, b % size).unwrap();
        let prod = p.product(&q).unwrap().matrix();
        prop_assert!(max_abs_diff(&prod, &(p.matrix() * q.matrix())) < 1e-12);
    }

    #[test]
    fn conjugation_is_signed_pauli(n in 1usize..=3, a in 0usize..64, b in 0usize..64) {
        let size = 1usize << (2 * n);
        let p = PauliOperator::from_index(n, a % size).unwrap();
        let q = PauliOperator::from_index(n, b % size).unwrap();
        let conj = p.conjugate(&q).unwrap();
        let sign = if p.commutes_with(&q) { 1.0 } else { -1.0 };
        let expected = q.matrix() * Complex64::new(sign, 0.0);
        prop_assert!(max_abs_diff(&conj.matrix(), &expected) < 1e-12);
        prop_assert!(max_abs_diff(&conj.matrix(), &(p.matrix() * q.matrix() * p.matrix().adjoint())) < 1e-12);
    }

    #[test]
    fn channels_map_states_to_states(seed in any::<u64>(), n in 1usize..=2) {
        let c = random_channel(seed, n);
        let out = c.apply(&random_state(seed, n)).unwrap();
        let m = out.matrix();
        prop_assert!((m.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(max_abs_diff(m, &m.adjoint()) < 1e-10);
        let eig = m.clone().symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&l| l > -1e-10));
        let other = c.apply(&random_state(seed ^ 1, n)).unwrap();
        prop_assert!(out.trace_distance(&other).unwrap() <= 2.0 + 1e-12);
    }

    #[test]
    fn choi_bell_overlap_is_fidelity(seed in any::<u64>()) {
        let c = random_channel(seed, 1);
        let bell = qpdwire::state::max_entangled_ket(1);
        prop_assert!((c.choi_state().overlap(&bell) - c.entanglement_fidelity()).abs() < 1e-12);
    }

    #[test]
    fn twirls_preserve_fidelity(seed in any::<u64>(), which in 0usize..3) {
        let c = random_channel(seed, 1);
        let e = [twirl::two_design(1).unwrap(), twirl::pauli_mixing(1).unwrap(), twirl::pauli_group(1)][which].clone();
        let t = twirl(&c, &e).unwrap();
        prop_assert!((t.entanglement_fidelity() - c.entanglement_fidelity()).abs() < 1e-12);
    }

    #[test]
    fn two_design_twirl_depolarizes(seed in any::<u64>()) {
        let c = random_channel(seed, 1);
        let t = twirl(&c, &twirl::two_design(1).unwrap()).unwrap();
        let d = depolarizing(1, c.entanglement_fidelity()).unwrap();
        prop_assert!(t.superoperator().max_abs_diff(d.superoperator()) < 1e-10);
    }

    #[test]
    fn pauli_mixing_twirl_of_pauli_channel_depolarizes(seed in any::<u64>(), n in 1usize..=2) {
        let mut rng = stream_rng(seed, &[]);
        let probs = uniform_simplex(1 << (2 * n), &mut rng);
        let c = Channel::from_pauli_probabilities(n, &probs).unwrap();
        let t = twirl(&c, &twirl::pauli_mixing(n).unwrap()).unwrap();
        let d = depolarizing(n, probs[0]).unwrap();
        prop_assert!(t.superoperator().max_abs_diff(d.superoperator()) < 1e-12);
    }

    #[test]
    fn decomposition_is_exact(seed in any::<u64>(), n in 1usize..=2) {
        let c = advantageous(seed, n);
        let f = c.entanglement_fidelity();
        let e = if n == 1 { twirl::two_design(1).unwrap() } else { twirl::pauli_mixing(2).unwrap() };
        // The n=2 mixing set only depolarizes Pauli channels.
        let c = if n == 1 { c } else { Channel::from_pauli_probabilities(2, &c.pauli_probabilities()).unwrap() };
        let plan = QpdPlan::build(&c, &e, f).unwrap();
        let s = plan.implemented_superoperator().unwrap();
        prop_assert!(s.max_abs_diff(&Superoperator::identity(n)) < 1e-10);
        prop_assert!((plan.kappa() - (2.0 / f - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn estimator_mean_is_ideal_expectation(seed in any::<u64>(), o in 1usize..4) {
        let c = advantageous(seed, 1);
        let plan = QpdPlan::build(&c, &twirl::two_design(1).unwrap(), c.entanglement_fidelity()).unwrap();
        let rho = random_state(seed, 1);
        let obs = PauliOperator::from_index(1, o).unwrap();
        let exact = exact_expectation(&plan, &rho, &obs).unwrap();
        prop_assert!((exact - rho.pauli_expectation(&obs).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn estimates_are_reproducible(seed in any::<u64>(), shots in 1u64..5000) {
        let c = advantageous(seed, 1);
        let plan = QpdPlan::build(&c, &twirl::two_design(1).unwrap(), c.entanglement_fidelity()).unwrap();
        let rho = random_state(seed, 1);
        let z = PauliOperator::from_label("Z").unwrap();
        let a = estimate_expectation(&plan, &rho, &z, shots, seed, Execution::Sequential).unwrap();
        let b = estimate_expectation(&plan, &rho, &z, shots, seed, Execution::Parallel).unwrap();
        prop_assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        prop_assert!(a.estimate.abs() <= plan.kappa() + 1e-12);
    }

    #[test]
    fn noise_model_fidelity_formula(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, &[]);
        let p = uniform_simplex(3, &mut rng);
        let params = NoiseModelParams {
            q: rand::Rng::random::<f64>(&mut rng),
            p_x: p[0],
            p_y: p[1],
            p_z: p[2],
            theta: 6.0 * rand::Rng::random::<f64>(&mut rng),
            axis: uniform_sphere(&mut rng),
        };
        let c = noise_model_channel(&params).unwrap();
        prop_assert!((c.entanglement_fidelity() - params.entanglement_fidelity()).abs() < 1e-10);
    }

    #[test]
    fn teleportation_gives_pauli_channels(seed in any::<u64>()) {
        let rho = random_state(seed, 2);
        let mixed = random_channel(seed, 2).apply(&rho).unwrap();
        let t = teleportation_channel(&ResourceState::new(1, mixed.clone()).unwrap()).unwrap();
        let probs = t.pauli_probabilities();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(probs.iter().all(|&p| p > -1e-12));
        prop_assert!(t.coherent_offdiag_sum() < 1e-10);
        let resource = ResourceState::new(1, mixed).unwrap();
        prop_assert!((t.entanglement_fidelity() - resource.bell_fidelity()).abs() < 1e-10);
    }

    #[test]
    fn swap_degradation_is_monotone(noise in 0.0f64..0.3) {
        let mut prev = f64::INFINITY;
        for k in 0..30 {
            let f = swap_degraded_resource(k, noise).unwrap().bell_fidelity();
            prop_assert!(f <= prev + 1e-14);
            prop_assert!(f >= 0.25 - 1e-12);
            prev = f;
        }
    }

    #[test]
    fn calibration_is_reported_raw(seed in any::<u64>(), p in 0.0f64..0.2) {
        // Near zero fidelity the sampled estimate must be free to leave [0, 1].
        let r = calibrate(&depolarizing(1, p).unwrap(), &twirl::two_design(1).unwrap(), 200, seed).unwrap();
        prop_assert!((r.f_hat - (1.5 * r.p00_hat - 0.5)).abs() < 1e-15);
    }
}

#[test]
fn parity_sums_vanish_off_zero() {
    for n in 1..=4u32 {
        for a in 0u32..1 << n {
            let total: i64 = (0u32..1 << n)
                .map(|b| if (a & b).count_ones() % 2 == 0 { 1 } else { -1 })
                .sum();
            assert_eq!(total, if a == 0 { 1 << n } else { 0 });
        }
    }
}

#[test]
fn pauli_orthogonality() {
    for n in 1..=3 {
        let basis = qpdwire::pauli::pauli_basis(n);
        for (i, p) in basis.iter().enumerate() {
            for (j, q) in basis.iter().enumerate() {
                let v = qpdwire::pauli::hs_inner(p, q).unwrap();
                let expected = if i == j { (1u64 << n) as f64 } else { 0.0 };
                assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn depolarizing_mixture_identity() {
    for n in 1..=2 {
        let d0 = depolarizing(n, 0.0).unwrap();
        for p in [0.0, 0.25, 0.5, 1.0] {
            let d = depolarizing(n, p).unwrap();
            assert!((d.entanglement_fidelity() - p).abs() < 1e-12);
            let mix =
                Superoperator::linear_combination(&[(p, &Superoperator::identity(n)), (1.0 - p, d0.superoperator())])
                    .unwrap();
            assert!(mix.max_abs_diff(d.superoperator()) < 1e-12);
        }
    }
}
