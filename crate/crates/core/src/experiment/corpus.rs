//! Stored shot data for one noisy-channel cell.
//!
//! For each (state, observable, circuit) the corpus keeps the number of `+1`
//! outcomes among the first `L` shots for every prefix length `L` that some
//! estimator needs. Tallies at increasing lengths are drawn as successive binomial
//! increments, which has the same joint distribution as recording single shots and
//! counting prefixes. Estimators are pure functions of the corpus.

use serde::{Deserialize, Serialize};

use crate::calibration::draw_binomial;
use crate::channel::Channel;
use crate::error::{QpdError, Result};
use crate::exec::{self, Execution};
use crate::linalg::{self, CMatrix};
use crate::pauli::PauliOperator;
use crate::qpd::{Branch, QpdPlan};
use crate::rng::stream_rng;
use crate::state::DensityMatrix;

/// A distinct circuit: branch plus the unitaries around it.
#[derive(Debug, Clone)]
pub struct Circuit {
    pub branch: Branch,
    pub pre: CMatrix,
    pub post: CMatrix,
}

/// Deduplicated circuits shared by all estimators of a cell.
#[derive(Debug, Clone, Default)]
pub struct CircuitTable {
    circuits: Vec<Circuit>,
}

impl CircuitTable {
    pub fn circuits(&self) -> &[Circuit] {
        &self.circuits
    }

    pub fn len(&self) -> usize {
        self.circuits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuits.is_empty()
    }

    fn index_of(&mut self, branch: Branch, pre: &CMatrix, post: &CMatrix) -> usize {
        if let Some(i) = self.circuits.iter().position(|c| {
            c.branch == branch
                && linalg::max_abs_diff(&c.pre, pre) < 1e-12
                && linalg::max_abs_diff(&c.post, post) < 1e-12
        }) {
            return i;
        }
        self.circuits.push(Circuit {
            branch,
            pre: pre.clone(),
            post: post.clone(),
        });
        self.circuits.len() - 1
    }

    /// Registers the plan's variants and returns its estimator.
    pub fn register(&mut self, plan: &QpdPlan) -> Estimator {
        let terms = plan
            .variants()
            .iter()
            .map(|v| Term {
                circuit: self.index_of(v.branch, &v.pre, &v.post),
                weight: v.weight,
                sign: v.sign,
            })
            .collect();
        Estimator {
            kappa: plan.kappa(),
            terms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub circuit: usize,
    pub weight: f64,
    pub sign: i8,
}

/// Weighted combination of corpus circuits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub kappa: f64,
    pub terms: Vec<Term>,
}

impl Estimator {
    /// `floor(w N)`, matching [`QpdPlan::allocation`].
    pub fn shots_for(term: &Term, shots: u64) -> u64 {
        (term.weight * shots as f64).floor() as u64
    }

    /// Adds every prefix length this estimator reads at `shots` to `needs`.
    pub fn record_needs(&self, shots: u64, needs: &mut [Vec<u64>]) {
        for t in &self.terms {
            let k = Self::shots_for(t, shots);
            if k > 0 {
                needs[t.circuit].push(k);
            }
        }
    }

    /// Estimate from the tallies of one (state, observable).
    pub fn evaluate(&self, shots: u64, tallies: &[PrefixTally]) -> Result<f64> {
        let mut used = 0u64;
        let mut total = 0.0;
        for t in &self.terms {
            let k = Self::shots_for(t, shots);
            if k == 0 {
                continue;
            }
            let plus = tallies[t.circuit].plus_at(k)?;
            used += k;
            total += t.sign as f64 * (2.0 * plus as f64 - k as f64);
        }
        Ok(if used == 0 {
            0.0
        } else {
            self.kappa * total / used as f64
        })
    }
}

/// `+1` counts at increasing prefix lengths.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrefixTally {
    pub lengths: Vec<u64>,
    pub plus: Vec<u64>,
}

impl PrefixTally {
    pub fn plus_at(&self, length: u64) -> Result<u64> {
        match self.lengths.binary_search(&length) {
            Ok(i) => Ok(self.plus[i]),
            Err(_) => Err(QpdError::InvalidParameter(format!(
                "prefix length {length} was not sampled"
            ))),
        }
    }

    fn sample(lengths: &[u64], p_plus: f64, seed: u64, coords: &[u64]) -> Result<Self> {
        let mut rng = stream_rng(seed, coords);
        let mut plus = Vec::with_capacity(lengths.len());
        let (mut prev_len, mut acc) = (0u64, 0u64);
        for &len in lengths {
            acc += draw_binomial(&mut rng, len - prev_len, p_plus)?;
            plus.push(acc);
            prev_len = len;
        }
        Ok(Self {
            lengths: lengths.to_vec(),
            plus,
        })
    }
}

/// Shot data of one cell: `truth[s][o]` and `tallies[s][o][circuit]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCorpus {
    pub cell: usize,
    pub observables: Vec<String>,
    pub truth: Vec<Vec<f64>>,
    pub tallies: Vec<Vec<Vec<PrefixTally>>>,
}

impl CellCorpus {
    pub fn num_states(&self) -> usize {
        self.truth.len()
    }
}

/// Inputs needed to sample a cell's corpus.
pub struct CorpusSpec<'a> {
    pub seed: u64,
    pub cell: usize,
    pub channel: &'a Channel,
    pub mp: &'a Channel,
    pub table: &'a CircuitTable,
    pub states: &'a [DensityMatrix],
    pub observables: &'a [PauliOperator],
    /// Sorted, deduplicated prefix lengths per circuit.
    pub needs: &'a [Vec<u64>],
}

pub const SHOT_STREAM_TAG: u64 = 0x5407;

/// Normalizes per-circuit length lists: sorted, unique, non-zero.
pub fn finalize_needs(needs: &mut [Vec<u64>]) {
    for v in needs.iter_mut() {
        v.sort_unstable();
        v.dedup();
        v.retain(|&k| k > 0);
    }
}

pub fn sample_corpus(spec: &CorpusSpec<'_>, exec: Execution) -> Result<CellCorpus> {
    let per_state = exec::map_range(exec, spec.states.len(), |s| sample_state(spec, s));
    let mut truth = Vec::with_capacity(per_state.len());
    let mut tallies = Vec::with_capacity(per_state.len());
    for r in per_state {
        let (t, tl) = r?;
        truth.push(t);
        tallies.push(tl);
    }
    Ok(CellCorpus {
        cell: spec.cell,
        observables: spec.observables.iter().map(|o| o.label()).collect(),
        truth,
        tallies,
    })
}

#[allow(clippy::type_complexity)]
fn sample_state(spec: &CorpusSpec<'_>, s: usize) -> Result<(Vec<f64>, Vec<Vec<PrefixTally>>)> {
    let rho = &spec.states[s];
    let outputs: Vec<DensityMatrix> = spec
        .table
        .circuits()
        .iter()
        .map(|c| {
            let ch = match c.branch {
                Branch::Channel => spec.channel,
                Branch::MeasurePrepare => spec.mp,
            };
            Ok(ch.apply(&rho.conjugated(&c.pre))?.conjugated(&c.post))
        })
        .collect::<Result<_>>()?;
    let mut truth = Vec::with_capacity(spec.observables.len());
    let mut tallies = Vec::with_capacity(spec.observables.len());
    for (o, obs) in spec.observables.iter().enumerate() {
        truth.push(rho.pauli_expectation(obs)?);
        let mut row = Vec::with_capacity(outputs.len());
        for (c, out) in outputs.iter().enumerate() {
            let p_plus = ((1.0 + out.pauli_expectation(obs)?) / 2.0).clamp(0.0, 1.0);
            let coords = [SHOT_STREAM_TAG, spec.cell as u64, s as u64, o as u64, c as u64];
            row.push(PrefixTally::sample(&spec.needs[c], p_plus, spec.seed, &coords)?);
        }
        tallies.push(row);
    }
    Ok((truth, tallies))
}

/// Mean and standard error of `|estimate - truth|` over states, for one
/// observable index or pooled over all when `observable` is `None`.
pub fn error_statistics(
    corpus: &CellCorpus,
    estimator: &Estimator,
    shots: u64,
    observable: Option<usize>,
) -> Result<(f64, f64)> {
    let mut errors = Vec::new();
    for s in 0..corpus.num_states() {
        let range = match observable {
            Some(o) => o..o + 1,
            None => 0..corpus.observables.len(),
        };
        for o in range {
            let est = estimator.evaluate(shots, &corpus.tallies[s][o])?;
            errors.push((est - corpus.truth[s][o]).abs());
        }
    }
    Ok(mean_and_stderr(&errors))
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
