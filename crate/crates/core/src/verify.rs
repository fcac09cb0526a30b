//! Invariant suite run by `qpdwire verify`. Every check is deterministic.

use serde::Serialize;

use crate::calibration::calibrate_exact;
use crate::channel::{depolarizing, Channel, Superoperator};
use crate::error::Result;
use crate::linalg::{self, C64};
use crate::noise::{
    noise_model_channel, swap_degraded_resource, teleportation_channel, NoiseModelParams, ResourceState,
};
use crate::pauli::{commuting_partition, hs_inner, pauli_basis, PauliOperator};
use crate::qpd::{build_d0, exact_expectation, QpdPlan};
use crate::rng::{haar_ket, stream_rng, uniform_simplex, uniform_sphere};
use crate::state::DensityMatrix;
use crate::twirl::{self, verify_pauli_mixing};

const RANDOM_TRIALS: usize = 20;

/// Fault injection for exercising the suite itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Added to the fidelity expected from a Pauli-mixing twirl.
    pub chi00_perturbation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// One line per check.
    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{mark}  {:width$}  {}\n", c.name, c.detail));
        }
        let failed = self.failures().count();
        out.push_str(&format!("{} checks, {} failed\n", self.checks.len(), failed));
        out
    }
}

type CheckFn = fn(&VerifyOptions) -> Result<(bool, String)>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("pauli_products", pauli_products),
    ("pauli_orthogonality", pauli_orthogonality),
    ("commuting_partition", partition_valid),
    ("depolarizing_fidelity", depolarizing_fidelity),
    ("depolarizing_mixture", depolarizing_mixture),
    ("choi_overlap_is_chi00", choi_overlap),
    ("twirl_preserves_fidelity", twirl_preserves_fidelity),
    ("pauli_mixing_ensembles", pauli_mixing_ensembles),
    ("pauli_mixing_depolarizes", pauli_mixing_depolarizes),
    ("two_design_depolarizes", two_design_depolarizes),
    ("twirl_idempotent", twirl_idempotent),
    ("measure_prepare_is_d0", measure_prepare_is_d0),
    ("d0_ptm_full_rank", d0_ptm_full_rank),
    ("qpd_reconstructs_identity", qpd_identity),
    ("estimator_unbiased", estimator_unbiased),
    ("noise_model_fidelity", noise_model_fidelity),
    ("teleportation_is_pauli", teleportation_is_pauli),
    ("choi_teleportation_chain", choi_chain),
    ("swap_degradation_monotone", swap_monotone),
    ("calibration_linear_map", calibration_linear_map),
];

pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let checks = CHECKS
        .iter()
        .map(|(name, f)| match f(opts) {
            Ok((passed, detail)) => Check { name, passed, detail },
            Err(e) => Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect();
    VerifyReport { checks }
}

fn within(err: f64, tol: f64) -> (bool, String) {
    (err < tol, format!("max deviation {err:.3e} (tolerance {tol:.0e})"))
}

fn random_channels(opts: &VerifyOptions, tag: u64, n: usize) -> Result<Vec<Channel>> {
    let mut rng = stream_rng(opts.seed, &[tag]);
    (0..RANDOM_TRIALS)
        .map(|i| Channel::random(n, 1 + i % (1 << (2 * n)), &mut rng))
        .collect()
}

fn pauli_products(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        let basis = pauli_basis(n);
        for p in &basis {
            for q in &basis {
                let prod = p.product(q)?.matrix();
                worst = worst.max(linalg::max_abs_diff(&prod, &(p.matrix() * q.matrix())));
            }
        }
    }
    Ok(within(worst, 1e-12))
}

fn pauli_orthogonality(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        let basis = pauli_basis(n);
        for (a, p) in basis.iter().enumerate() {
            for (b, q) in basis.iter().enumerate() {
                let expected = if a == b { (1u64 << n) as f64 } else { 0.0 };
                worst = worst.max((hs_inner(p, q)? - C64::new(expected, 0.0)).norm());
            }
        }
    }
    Ok(within(worst, 1e-12))
}

fn partition_valid(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let part = commuting_partition(n)?;
        let mut seen = vec![false; 1 << (2 * n)];
        for (j, set) in part.sets().iter().enumerate() {
            let v = &part.diagonalizers()[j];
            for (a, p) in set.iter().enumerate() {
                if std::mem::replace(&mut seen[p.index()], true) || set.iter().any(|q| !p.commutes_with(q)) {
                    return Ok((false, format!("n={n}: set {j} overlaps or does not commute")));
                }
                let za = PauliOperator::new(n, 0, a as u32 + 1, 0)?.matrix();
                let image = v * za * v.adjoint() * C64::new(part.signs()[j][a] as f64, 0.0);
                worst = worst.max(linalg::max_abs_diff(&image, &p.matrix()));
            }
        }
        if seen.iter().skip(1).any(|s| !s) || part.len() != (1 << n) + 1 {
            return Ok((
                false,
                format!("n={n}: partition does not cover every non-identity Pauli"),
            ));
        }
    }
    Ok(within(worst, 1e-10))
}

fn depolarizing_fidelity(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        for p in [0.0, 0.25, 0.5, 1.0] {
            worst = worst.max((depolarizing(n, p)?.entanglement_fidelity() - p).abs());
        }
    }
    Ok(within(worst, 1e-12))
}

fn depolarizing_mixture(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        let id = Superoperator::identity(n);
        let d0 = depolarizing(n, 0.0)?;
        for p in [0.1, 0.6] {
            let mix = Superoperator::linear_combination(&[(p, &id), (1.0 - p, d0.superoperator())])?;
            worst = worst.max(mix.max_abs_diff(depolarizing(n, p)?.superoperator()));
        }
    }
    Ok(within(worst, 1e-12))
}

fn choi_overlap(opts: &VerifyOptions) -> Result<(bool, String)> {
    let bell = crate::state::max_entangled_ket(1);
    let mut worst: f64 = 0.0;
    for c in random_channels(opts, 1, 1)? {
        worst = worst.max((c.choi_state().overlap(&bell) - c.entanglement_fidelity()).abs());
    }
    Ok(within(worst, 1e-12))
}

fn twirl_preserves_fidelity(opts: &VerifyOptions) -> Result<(bool, String)> {
    let ensembles = [twirl::two_design(1)?, twirl::pauli_mixing(1)?, twirl::trivial(1)];
    let mut worst: f64 = 0.0;
    for (i, c) in random_channels(opts, 2, 1)?.iter().enumerate() {
        let t = twirl::twirl(c, &ensembles[i % ensembles.len()])?;
        worst = worst.max((t.entanglement_fidelity() - c.entanglement_fidelity()).abs());
    }
    Ok(within(worst, 1e-12))
}

fn pauli_mixing_ensembles(_: &VerifyOptions) -> Result<(bool, String)> {
    for n in 1..=2 {
        let report = verify_pauli_mixing(&twirl::pauli_mixing(n)?)?;
        if !report.is_pauli_mixing {
            return Ok((false, format!("n={n}: {:?}", report.violation)));
        }
    }
    Ok((true, "ensembles for n=1,2 map each Pauli uniformly".into()))
}

fn pauli_mixing_depolarizes(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut rng = stream_rng(opts.seed, &[3]);
    let e = twirl::pauli_mixing(1)?;
    let mut worst: f64 = 0.0;
    for _ in 0..RANDOM_TRIALS {
        let probs = uniform_simplex(4, &mut rng);
        let c = Channel::from_pauli_probabilities(1, &probs)?;
        let expected = (c.entanglement_fidelity() + opts.chi00_perturbation).clamp(0.0, 1.0);
        let diff = twirl::twirl(&c, &e)?
            .superoperator()
            .max_abs_diff(depolarizing(1, expected)?.superoperator());
        worst = worst.max(diff);
    }
    Ok(within(worst, 1e-12))
}

fn two_design_depolarizes(opts: &VerifyOptions) -> Result<(bool, String)> {
    let e = twirl::two_design(1)?;
    let mut worst: f64 = 0.0;
    for c in random_channels(opts, 4, 1)? {
        let d = depolarizing(1, c.entanglement_fidelity())?;
        worst = worst.max(twirl::twirl(&c, &e)?.superoperator().max_abs_diff(d.superoperator()));
    }
    Ok(within(worst, 1e-10))
}

fn twirl_idempotent(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        let d = depolarizing(n, 0.37)?;
        for e in [twirl::two_design(n)?, twirl::pauli_mixing(n)?, twirl::trivial(n)] {
            worst = worst.max(twirl::twirl(&d, &e)?.superoperator().max_abs_diff(d.superoperator()));
        }
    }
    Ok(within(worst, 1e-10))
}

fn measure_prepare_is_d0(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        let d0 = build_d0(n, &commuting_partition(n)?)?;
        worst = worst.max(d0.superoperator().max_abs_diff(depolarizing(n, 0.0)?.superoperator()));
        let plan = QpdPlan::build(&depolarizing(n, 0.8)?, &twirl::trivial(n), 0.8)?;
        let mp_variants = plan.variants().iter().filter(|v| v.sign < 0).count();
        if mp_variants != (1 << n) + 1 {
            return Ok((false, format!("n={n}: {mp_variants} measure-and-prepare variants")));
        }
    }
    Ok(within(worst, 1e-10))
}

fn d0_ptm_full_rank(_: &VerifyOptions) -> Result<(bool, String)> {
    for n in 1..=2 {
        let rank = build_d0(n, &commuting_partition(n)?)?.ptm_rank();
        if rank != 1 << (2 * n) {
            return Ok((false, format!("n={n}: rank {rank}")));
        }
    }
    Ok((true, "rank 4^n for n=1,2".into()))
}

fn qpd_identity(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let e = twirl::two_design(1)?;
    for c in random_channels(opts, 5, 1)? {
        let f = c.entanglement_fidelity();
        if f < 0.5 {
            continue;
        }
        let plan = QpdPlan::build(&c, &e, f)?;
        worst = worst.max(
            plan.implemented_superoperator()?
                .max_abs_diff(&Superoperator::identity(1)),
        );
        worst = worst.max((plan.kappa() - (2.0 / f - 1.0)).abs());
    }
    let d = depolarizing(2, 0.6)?;
    let plan = QpdPlan::build(&d, &twirl::trivial(2), 0.6)?;
    worst = worst.max(
        plan.implemented_superoperator()?
            .max_abs_diff(&Superoperator::identity(2)),
    );
    Ok(within(worst, 1e-10))
}

fn estimator_unbiased(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut rng = stream_rng(opts.seed, &[6]);
    let e = twirl::two_design(1)?;
    let mut worst: f64 = 0.0;
    for c in random_channels(opts, 7, 1)? {
        let f = c.entanglement_fidelity();
        if f < 0.5 {
            continue;
        }
        let plan = QpdPlan::build(&c, &e, f)?;
        let rho = DensityMatrix::from_ket(&haar_ket(2, &mut rng))?;
        for label in ["X", "Y", "Z"] {
            let o = PauliOperator::from_label(label)?;
            worst = worst.max((exact_expectation(&plan, &rho, &o)? - rho.pauli_expectation(&o)?).abs());
        }
    }
    Ok(within(worst, 1e-12))
}

fn noise_model_fidelity(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut rng = stream_rng(opts.seed, &[8]);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = uniform_simplex(3, &mut rng);
        let params = NoiseModelParams {
            q: rand::Rng::random::<f64>(&mut rng),
            p_x: p[0],
            p_y: p[1],
            p_z: p[2],
            theta: rand::Rng::random::<f64>(&mut rng) * std::f64::consts::PI,
            axis: uniform_sphere(&mut rng),
        };
        worst =
            worst.max((noise_model_channel(&params)?.entanglement_fidelity() - params.entanglement_fidelity()).abs());
    }
    Ok(within(worst, 1e-10))
}

fn teleportation_is_pauli(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for k in [0, 3, 10] {
        let c = teleportation_channel(&swap_degraded_resource(k, 0.05)?)?;
        worst = worst.max(c.coherent_offdiag_sum());
        let probs = c.pauli_probabilities();
        worst = worst.max((probs.iter().sum::<f64>() - 1.0).abs());
        if probs.iter().any(|&p| p < -1e-12) {
            return Ok((false, format!("k={k}: negative probability in {probs:?}")));
        }
    }
    Ok(within(worst, 1e-10))
}

fn choi_chain(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for c in random_channels(opts, 9, 1)? {
        let t = teleportation_channel(&ResourceState::new(1, c.choi_state())?)?;
        worst = worst.max((t.entanglement_fidelity() - c.entanglement_fidelity()).abs());
        worst = worst.max(t.coherent_offdiag_sum());
    }
    Ok(within(worst, 1e-10))
}

fn swap_monotone(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut prev = f64::INFINITY;
    for k in 0..=60 {
        let f = swap_degraded_resource(k, 0.02)?.bell_fidelity();
        if f > prev + 1e-14 {
            return Ok((false, format!("fidelity rises at k={k}")));
        }
        prev = f;
    }
    let floor = swap_degraded_resource(2000, 0.02)?.bell_fidelity();
    Ok(within((floor - 0.25).abs(), 1e-9))
}

fn calibration_linear_map(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        for p in [0.0, 0.3, 1.0] {
            worst = worst.max((calibrate_exact(&depolarizing(n, p)?, &twirl::trivial(n))? - p).abs());
        }
    }
    Ok(within(worst, 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes() {
        let report = run_verify(&VerifyOptions::default());
        assert!(report.passed(), "{}", report.table());
    }

    #[test]
    fn perturbed_fixture_fails_only_its_check() {
        let report = run_verify(&VerifyOptions {
            chi00_perturbation: 1e-3,
            ..Default::default()
        });
        let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
        assert_eq!(failed, vec!["pauli_mixing_depolarizes"]);
    }
}
