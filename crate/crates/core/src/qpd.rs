//! The decomposition of the identity channel, its sampling plan and the Monte Carlo
//! estimator.
//!
//! A plan holds one circuit variant per element of the channel-twirl ensemble
//! (`U_i`, the noisy channel, `U_i^dagger`; sign `+1`) and one per diagonalizer of
//! the commuting partition (`V_j^dagger`, the measure-and-prepare channel, `V_j`;
//! sign `-1`). Variant `v` is run `floor(w_v N)` times; shots left over by the
//! rounding are dropped.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, ChannelJson, Superoperator};
use crate::error::{QpdError, Result};
use crate::exec::{self, Execution};
use crate::linalg::{self, CMatrix};
use crate::pauli::{commuting_partition, CommutingPartition, PauliOperator};
use crate::rng::{stream_id, stream_rng};
use crate::state::DensityMatrix;
use crate::twirl::{self, EnsembleJson, EnsembleLabel, UnitaryEnsemble};

/// Computational-basis measurement followed by preparation of the uniform mixture
/// over the basis states orthogonal to the outcome.
#[derive(Debug, Clone)]
pub struct MeasurePrepareChannel {
    n: usize,
    channel: Channel,
}

impl MeasurePrepareChannel {
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }
}

/// Kraus operators `|l><k| / sqrt(2^n - 1)` for `l != k`.
pub fn mp_channel(n: usize) -> Result<MeasurePrepareChannel> {
    if n == 0 {
        return Err(QpdError::UnsupportedQubitCount { n, min: 1, max: 4 });
    }
    let d = 1usize << n;
    let amp = linalg::real(1.0 / ((d - 1) as f64).sqrt());
    let mut kraus = Vec::with_capacity(d * (d - 1));
    for k in 0..d {
        for l in 0..d {
            if l != k {
                let mut m = CMatrix::zeros(d, d);
                m[(l, k)] = amp;
                kraus.push(m);
            }
        }
    }
    Ok(MeasurePrepareChannel {
        n,
        channel: Channel::from_kraus(&kraus)?,
    })
}

/// Twirl of the measure-and-prepare channel over the `2^n + 1` unitaries
/// `V_j^dagger`; equals the fully depolarizing channel.
pub fn build_d0(n: usize, partition: &CommutingPartition) -> Result<Channel> {
    if partition.num_qubits() != n {
        return Err(QpdError::DimensionMismatch(partition.num_qubits(), n));
    }
    twirl::twirl(mp_channel(n)?.channel(), &twirl::measurement_ensemble(partition))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Channel,
    MeasurePrepare,
}

/// One circuit: `post . branch(pre rho pre^dagger) . post^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitVariant {
    pub branch: Branch,
    pub pre: CMatrix,
    pub post: CMatrix,
    /// Sampling probability of this variant.
    pub weight: f64,
    pub sign: i8,
}

#[derive(Debug, Clone)]
pub struct QpdPlan {
    n: usize,
    channel: Channel,
    mp: Channel,
    ensemble: UnitaryEnsemble,
    variants: Vec<CircuitVariant>,
    fidelity: f64,
    c1: f64,
    c2: f64,
    kappa: f64,
    q1: f64,
    q2: f64,
}

impl QpdPlan {
    /// Plan with coefficients `1/F` and `1 - 1/F`; `F` is taken as given.
    pub fn build(c: &Channel, e: &UnitaryEnsemble, fidelity: f64) -> Result<Self> {
        let partition = commuting_partition(c.num_qubits())?;
        Self::build_with_partition(c, e, fidelity, &partition)
    }

    pub fn build_with_partition(
        c: &Channel,
        e: &UnitaryEnsemble,
        fidelity: f64,
        partition: &CommutingPartition,
    ) -> Result<Self> {
        let n = c.num_qubits();
        check_fidelity(n, fidelity)?;
        Self::assemble(c, e, 1.0 / fidelity, partition)
    }

    /// Plan with an explicit channel-branch coefficient `c1 in [1, 2^n]`; the
    /// second coefficient is `1 - c1`.
    pub fn with_coefficient(c: &Channel, e: &UnitaryEnsemble, c1: f64) -> Result<Self> {
        let partition = commuting_partition(c.num_qubits())?;
        Self::with_coefficient_and_partition(c, e, c1, &partition)
    }

    pub fn with_coefficient_and_partition(
        c: &Channel,
        e: &UnitaryEnsemble,
        c1: f64,
        partition: &CommutingPartition,
    ) -> Result<Self> {
        if !c1.is_finite() || c1 < 1.0 {
            return Err(QpdError::InvalidParameter(format!("coefficient {c1} below 1")));
        }
        check_fidelity(c.num_qubits(), 1.0 / c1)?;
        Self::assemble(c, e, c1, partition)
    }

    fn assemble(c: &Channel, e: &UnitaryEnsemble, c1: f64, partition: &CommutingPartition) -> Result<Self> {
        let n = c.num_qubits();
        if e.num_qubits() != n {
            return Err(QpdError::DimensionMismatch(e.num_qubits(), n));
        }
        if partition.num_qubits() != n {
            return Err(QpdError::DimensionMismatch(partition.num_qubits(), n));
        }
        let c2 = 1.0 - c1;
        let kappa = c1.abs() + c2.abs();
        let (q1, q2) = (c1.abs() / kappa, c2.abs() / kappa);
        let mut variants = Vec::with_capacity(e.len() + partition.len());
        for (p, u) in e.items() {
            variants.push(CircuitVariant {
                branch: Branch::Channel,
                pre: u.clone(),
                post: u.adjoint(),
                weight: q1 * p,
                sign: 1,
            });
        }
        let mp_weight = q2 / partition.len() as f64;
        for v in partition.diagonalizers() {
            variants.push(CircuitVariant {
                branch: Branch::MeasurePrepare,
                pre: v.adjoint(),
                post: v.clone(),
                weight: mp_weight,
                sign: -1,
            });
        }
        Ok(Self {
            n,
            channel: c.clone(),
            mp: mp_channel(n)?.channel,
            ensemble: e.clone(),
            variants,
            fidelity: 1.0 / c1,
            c1,
            c2,
            kappa,
            q1,
            q2,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn ensemble(&self) -> &UnitaryEnsemble {
        &self.ensemble
    }

    pub fn ensemble_label(&self) -> EnsembleLabel {
        self.ensemble.label()
    }

    pub fn variants(&self) -> &[CircuitVariant] {
        &self.variants
    }

    /// The fidelity the coefficients were built from.
    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    pub fn coefficients(&self) -> (f64, f64) {
        (self.c1, self.c2)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn branch_probabilities(&self) -> (f64, f64) {
        (self.q1, self.q2)
    }

    /// Output state of variant `v` on `input`.
    pub fn variant_output(&self, v: usize, input: &DensityMatrix) -> Result<DensityMatrix> {
        if input.num_qubits() != self.n {
            return Err(QpdError::DimensionMismatch(input.num_qubits(), self.n));
        }
        let var = &self.variants[v];
        let ch = match var.branch {
            Branch::Channel => &self.channel,
            Branch::MeasurePrepare => &self.mp,
        };
        let mid = ch.apply(&input.conjugated(&var.pre))?;
        Ok(mid.conjugated(&var.post))
    }

    /// `tr[O sigma_v]` for every variant.
    pub fn variant_expectations(&self, input: &DensityMatrix, observable: &PauliOperator) -> Result<Vec<f64>> {
        check_observable(self.n, observable)?;
        (0..self.variants.len())
            .map(|v| self.variant_output(v, input)?.pauli_expectation(observable))
            .collect()
    }

    /// `sum_v kappa sign_v w_v S_v` as a superoperator.
    pub fn implemented_superoperator(&self) -> Result<Superoperator> {
        let mut terms = Vec::with_capacity(self.variants.len());
        for var in &self.variants {
            let ch = match var.branch {
                Branch::Channel => &self.channel,
                Branch::MeasurePrepare => &self.mp,
            };
            let s = ch.superoperator().conjugated_by(&var.post.adjoint());
            terms.push((self.kappa * var.sign as f64 * var.weight, s));
        }
        let refs: Vec<(f64, &Superoperator)> = terms.iter().map(|(w, s)| (*w, s)).collect();
        Superoperator::linear_combination(&refs)
    }

    /// `floor(w_v N)` for every variant.
    pub fn allocation(&self, shots: u64) -> Vec<u64> {
        allocate(&self.variants, shots)
    }

    pub fn to_json(&self) -> PlanJson {
        PlanJson {
            n: self.n,
            channel: self.channel.to_json(),
            ensemble: self.ensemble.to_json(),
            channel_coefficient: self.c1,
        }
    }

    pub fn from_json(doc: &PlanJson) -> Result<Self> {
        let channel = Channel::from_json(&doc.channel)?;
        let ensemble = UnitaryEnsemble::from_json(&doc.ensemble)?;
        if channel.num_qubits() != doc.n {
            return Err(QpdError::DimensionMismatch(channel.num_qubits(), doc.n));
        }
        Self::with_coefficient(&channel, &ensemble, doc.channel_coefficient)
    }
}

/// Serialized plan: the channel, its twirl ensemble and the channel coefficient;
/// the measurement branch is rebuilt deterministically on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanJson {
    pub n: usize,
    pub channel: ChannelJson,
    pub ensemble: EnsembleJson,
    pub channel_coefficient: f64,
}

fn check_fidelity(n: usize, fidelity: f64) -> Result<()> {
    // At exactly 2^-n the decomposition is still valid and its overhead equals the
    // classical wire cut; only fidelities below that are rejected.
    let threshold = 1.0 / (1u64 << n) as f64;
    if !fidelity.is_finite() || fidelity < threshold {
        return Err(QpdError::NoAdvantage { fidelity, threshold });
    }
    if fidelity > 1.0 {
        return Err(QpdError::FidelityAboveOne(fidelity));
    }
    Ok(())
}

fn check_observable(n: usize, observable: &PauliOperator) -> Result<()> {
    if observable.num_qubits() != n {
        return Err(QpdError::DimensionMismatch(observable.num_qubits(), n));
    }
    if !observable.is_hermitian() {
        return Err(QpdError::InvalidParameter(format!(
            "observable {observable} is not Hermitian"
        )));
    }
    Ok(())
}

pub fn allocate(variants: &[CircuitVariant], shots: u64) -> Vec<u64> {
    variants
        .iter()
        .map(|v| (v.weight * shots as f64).floor() as u64)
        .collect()
}

/// Signed linear combination realized by the plan.
pub fn exact_implemented_channel(plan: &QpdPlan) -> Result<Superoperator> {
    plan.implemented_superoperator()
}

/// Single-shot record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub variant_id: usize,
    pub sign: i8,
    pub outcome: i8,
    pub stream_id: u64,
}

pub fn write_shot_records<W: Write>(out: W, records: &[ShotRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_shot_records<R: std::io::Read>(input: R) -> Result<Vec<ShotRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(QpdError::from)).collect()
}

/// Estimator value from single-shot records: `kappa sum sign * outcome / count`.
pub fn estimate_from_records(kappa: f64, records: &[ShotRecord]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let total: i64 = records.iter().map(|r| r.sign as i64 * r.outcome as i64).sum();
    Some(kappa * total as f64 / records.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    pub shots_used: u64,
    pub per_variant_counts: Vec<u64>,
    /// Number of `+1` outcomes per variant.
    pub per_variant_plus: Vec<u64>,
}

/// Stream id of variant `v`'s shot generator.
pub fn variant_stream(v: usize) -> u64 {
    stream_id(&[v as u64])
}

fn draw_shots(seed: u64, v: usize, count: u64, p_plus: f64, mut sink: impl FnMut(bool)) {
    let mut rng = stream_rng(seed, &[v as u64]);
    for _ in 0..count {
        sink(rng.random::<f64>() < p_plus);
    }
}

fn born_plus(expectation: f64) -> f64 {
    ((1.0 + expectation) / 2.0).clamp(0.0, 1.0)
}

/// Runs `floor(w_v N)` single shots of every variant, drawing `+-1` outcomes from
/// the exact Born distribution, and averages `kappa * sign * outcome`.
pub fn estimate_expectation(
    plan: &QpdPlan,
    input: &DensityMatrix,
    observable: &PauliOperator,
    shots: u64,
    seed: u64,
    exec: Execution,
) -> Result<Estimate> {
    if shots == 0 {
        return Err(QpdError::InvalidParameter("shot count must be positive".into()));
    }
    let expectations = plan.variant_expectations(input, observable)?;
    let counts = plan.allocation(shots);
    let plus = exec::map_range(exec, counts.len(), |v| {
        let mut k = 0u64;
        draw_shots(seed, v, counts[v], born_plus(expectations[v]), |hit| k += hit as u64);
        k
    });
    Ok(summarize(plan, counts, plus))
}

fn summarize(plan: &QpdPlan, counts: Vec<u64>, plus: Vec<u64>) -> Estimate {
    let shots_used: u64 = counts.iter().sum();
    let mut total = 0.0;
    for (v, var) in plan.variants.iter().enumerate() {
        let sum = 2 * plus[v] as i64 - counts[v] as i64;
        total += var.sign as f64 * sum as f64;
    }
    let estimate = if shots_used == 0 {
        0.0
    } else {
        plan.kappa * total / shots_used as f64
    };
    Estimate {
        estimate,
        shots_used,
        per_variant_counts: counts,
        per_variant_plus: plus,
    }
}

/// Same shots as [`estimate_expectation`], returned as individual records.
pub fn shot_records(
    plan: &QpdPlan,
    input: &DensityMatrix,
    observable: &PauliOperator,
    shots: u64,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    let expectations = plan.variant_expectations(input, observable)?;
    let counts = plan.allocation(shots);
    let mut records = Vec::with_capacity(counts.iter().sum::<u64>() as usize);
    for (v, var) in plan.variants.iter().enumerate() {
        let sid = variant_stream(v);
        draw_shots(seed, v, counts[v], born_plus(expectations[v]), |hit| {
            records.push(ShotRecord {
                variant_id: v,
                sign: var.sign,
                outcome: if hit { 1 } else { -1 },
                stream_id: sid,
            })
        });
    }
    Ok(records)
}

/// `sum_v w_v kappa sign_v tr[O sigma_v]`, the infinite-shot value of the
/// estimator under ideal proportional allocation.
pub fn exact_expectation(plan: &QpdPlan, input: &DensityMatrix, observable: &PauliOperator) -> Result<f64> {
    let ex = plan.variant_expectations(input, observable)?;
    Ok(plan
        .variants
        .iter()
        .zip(&ex)
        .map(|(v, e)| v.weight * plan.kappa * v.sign as f64 * e)
        .sum())
}

/// Exact mean of [`estimate_expectation`] at a finite shot count, accounting for
/// the floor allocation.
pub fn allocated_mean(plan: &QpdPlan, input: &DensityMatrix, observable: &PauliOperator, shots: u64) -> Result<f64> {
    let ex = plan.variant_expectations(input, observable)?;
    let counts = plan.allocation(shots);
    let used: u64 = counts.iter().sum();
    if used == 0 {
        return Ok(0.0);
    }
    Ok(plan
        .variants
        .iter()
        .zip(&ex)
        .zip(&counts)
        .map(|((v, e), &k)| k as f64 * plan.kappa * v.sign as f64 * e)
        .sum::<f64>()
        / used as f64)
}

/// Smallest `N >= 2 (kappa/eps)^2 ln(2/delta)`, at least one.
pub fn hoeffding_shots(kappa: f64, eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0) {
        return Err(QpdError::InvalidParameter(format!("accuracy {eps} must be positive")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(QpdError::InvalidParameter(format!(
            "failure probability {delta} outside (0, 1]"
        )));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(QpdError::InvalidParameter(format!("overhead {kappa} below 1")));
    }
    let n = 2.0 * (kappa / eps).powi(2) * (2.0 / delta).ln();
    Ok((n.ceil() as u64).max(1))
}

/// Upper bound on the estimator bias from an imperfect depolarizing twirl, an
/// imperfect measure-and-prepare twirl and a misestimated fidelity.
pub fn bias_bound(
    n: usize,
    observable_norm: f64,
    fidelity: f64,
    fidelity_estimate: f64,
    dp_error: f64,
    d0_error: f64,
) -> Result<f64> {
    let threshold = 1.0 / (1u64 << n) as f64;
    if !(fidelity_estimate > threshold) || !fidelity_estimate.is_finite() {
        return Err(QpdError::NoAdvantage {
            fidelity: fidelity_estimate,
            threshold,
        });
    }
    for (name, v) in [
        ("observable norm", observable_norm),
        ("fidelity", fidelity),
        ("depolarizing error", dp_error),
        ("measure-and-prepare error", d0_error),
    ] {
        if !(v >= 0.0) {
            return Err(QpdError::InvalidParameter(format!(
                "{name} must be nonnegative, got {v}"
            )));
        }
    }
    let f = fidelity_estimate;
    Ok(observable_norm * (dp_error / f + (1.0 / f - 1.0) * d0_error + 2.0 * (fidelity / f - 1.0).abs()))
}
