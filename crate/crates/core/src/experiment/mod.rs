//! Config-driven simulation studies: estimation error against shot count, the
//! fidelity of a SWAP-degraded link, and the coefficient scan.
//!
//! Every random object is drawn from a stream keyed by the master seed and the
//! coordinates of the work item (cell, state, observable, circuit), so output does
//! not depend on scheduling or on the worker count.

mod config;
pub mod corpus;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use config::{CoefficientSource, ExperimentConfig, ExperimentKind, Method, SCHEMA_VERSION};
use corpus::{error_statistics, finalize_needs, sample_corpus, CellCorpus, CircuitTable, CorpusSpec, Estimator};

use crate::calibration::{calibrate_with, CalibrationResult};
use crate::channel::Channel;
use crate::error::{QpdError, Result};
use crate::exec::Execution;
use crate::noise::{random_channel_targeting, swap_degraded_resource, teleportation_channel, NoiseModelParams};
use crate::pauli::{commuting_partition, CommutingPartition};
use crate::qpd::{mp_channel, QpdPlan};
use crate::rng::{haar_ket, stream_id, stream_rng};
use crate::state::DensityMatrix;
use crate::twirl::{self, UnitaryEnsemble};

const CHANNEL_TAG: u64 = 0xC4A1;
const STATE_TAG: u64 = 0x57A7;
const CALIBRATION_TAG: u64 = 0xCA1B;
const SWAP_TAG: u64 = 0x5A4B;

/// Label used for rows pooled over all observables.
pub const POOLED_OBSERVABLE: &str = "all";

/// One row of the error-scaling study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    #[serde(rename = "F_target")]
    pub f_target: f64,
    pub theta: f64,
    #[serde(rename = "N")]
    pub shots: u64,
    pub observable: String,
    pub mean_abs_error: f64,
    pub stderr_of_mean: f64,
    pub num_states: usize,
    pub seed: u64,
}

/// A noisy channel generated for one `(F, theta)` target.
#[derive(Debug, Clone)]
pub struct Cell {
    pub index: usize,
    pub f_target: f64,
    pub theta: f64,
    pub channel: Channel,
    pub params: NoiseModelParams,
    /// Fidelity the plans are built from (exact or calibrated).
    pub plan_fidelity: f64,
    pub calibration: Option<CalibrationResult>,
}

pub fn build_cells(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<Cell>> {
    cfg.validate_cells(false)?;
    let mut cells = Vec::new();
    let two = twirl::two_design(cfg.n)?;
    for (fi, &f) in cfg.fidelities.iter().enumerate() {
        for (ti, &theta) in cfg.thetas.iter().enumerate() {
            let mut rng = stream_rng(cfg.seed, &[CHANNEL_TAG, fi as u64, ti as u64]);
            let (channel, params) = random_channel_targeting(f, theta, &mut rng)?;
            let (plan_fidelity, calibration) = match cfg.coefficient_source {
                CoefficientSource::Exact => (channel.entanglement_fidelity(), None),
                CoefficientSource::Calibrated => {
                    let seed = stream_id(&[cfg.seed, CALIBRATION_TAG, fi as u64, ti as u64]);
                    let r = calibrate_with(&channel, &two, cfg.calibration_shots, seed, exec)?;
                    (r.f_hat, Some(r))
                }
            };
            cells.push(Cell {
                index: cells.len(),
                f_target: f,
                theta,
                channel,
                params,
                plan_fidelity,
                calibration,
            });
        }
    }
    Ok(cells)
}

/// Haar-random input states, shared by every cell.
pub fn haar_states(cfg: &ExperimentConfig) -> Result<Vec<DensityMatrix>> {
    (0..cfg.num_states)
        .map(|s| {
            let mut rng = stream_rng(cfg.seed, &[STATE_TAG, s as u64]);
            DensityMatrix::from_ket(&haar_ket(1 << cfg.n, &mut rng))
        })
        .collect()
}

fn method_ensemble(method: Method, n: usize) -> Result<UnitaryEnsemble> {
    match method {
        Method::Direct | Method::NoTwirl => Ok(twirl::trivial(n)),
        Method::PauliMixing => twirl::pauli_mixing(n),
        Method::TwoDesign => twirl::two_design(n),
    }
}

/// Plan of `method` with channel-branch coefficient `c1`; direct use is the plan
/// with `c1 = 1` and no twirl.
fn method_plan(method: Method, cell: &Cell, c1: f64, partition: &CommutingPartition) -> Result<QpdPlan> {
    let e = method_ensemble(method, cell.channel.num_qubits())?;
    let c1 = if method == Method::Direct { 1.0 } else { c1 };
    QpdPlan::with_coefficient_and_partition(&cell.channel, &e, c1, partition)
}

fn plan_coefficient(cell: &Cell) -> Result<f64> {
    let f = cell.plan_fidelity;
    let threshold = 1.0 / (1u64 << cell.channel.num_qubits()) as f64;
    if !(f >= threshold) {
        return Err(QpdError::NoAdvantage { fidelity: f, threshold });
    }
    if f > 1.0 {
        return Err(QpdError::FidelityAboveOne(f));
    }
    Ok(1.0 / f)
}

struct CellRun {
    corpus: CellCorpus,
}

fn run_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    estimators: &[Estimator],
    table: &CircuitTable,
    states: &[DensityMatrix],
    exec: Execution,
) -> Result<CellRun> {
    let observables = cfg.parsed_observables()?;
    let mut needs = vec![Vec::new(); table.len()];
    for est in estimators {
        for &n in &cfg.shots {
            est.record_needs(n, &mut needs);
        }
    }
    finalize_needs(&mut needs);
    let mp = mp_channel(cfg.n)?;
    let spec = CorpusSpec {
        seed: cfg.seed,
        cell: cell.index,
        channel: &cell.channel,
        mp: mp.channel(),
        table,
        states,
        observables: &observables,
        needs: &needs,
    };
    Ok(CellRun {
        corpus: sample_corpus(&spec, exec)?,
    })
}

/// Everything an error-scaling run produced; `corpora` allow the rows to be
/// recomputed from stored shots alone.
pub struct ErrorScalingOutput {
    pub rows: Vec<ResultRow>,
    pub cells: Vec<Cell>,
    pub estimators: Vec<Vec<(Method, Estimator)>>,
    pub corpora: Vec<CellCorpus>,
}

pub fn run_error_scaling(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<ResultRow>> {
    Ok(run_error_scaling_full(cfg, exec)?.rows)
}

pub fn run_error_scaling_full(cfg: &ExperimentConfig, exec: Execution) -> Result<ErrorScalingOutput> {
    cfg.validate_cells(true)?;
    let partition = commuting_partition(cfg.n)?;
    let cells = build_cells(cfg, exec)?;
    let states = haar_states(cfg)?;
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();

    let mut rows = Vec::new();
    let mut all_estimators = Vec::new();
    let mut corpora = Vec::new();
    for cell in &cells {
        let c1 = plan_coefficient(cell)?;
        let mut table = CircuitTable::default();
        let estimators: Vec<(Method, Estimator)> = methods
            .iter()
            .map(|&m| Ok((m, table.register(&method_plan(m, cell, c1, &partition)?))))
            .collect::<Result<_>>()?;
        let only: Vec<Estimator> = estimators.iter().map(|(_, e)| e.clone()).collect();
        let run = run_cell(cfg, cell, &only, &table, &states, exec)?;
        rows.extend(rows_from_corpus(cfg, cell, &estimators, &run.corpus)?);
        all_estimators.push(estimators);
        corpora.push(run.corpus);
    }
    Ok(ErrorScalingOutput {
        rows,
        cells,
        estimators: all_estimators,
        corpora,
    })
}

/// Rows of one cell, computed from its corpus only.
pub fn rows_from_corpus(
    cfg: &ExperimentConfig,
    cell: &Cell,
    estimators: &[(Method, Estimator)],
    corpus: &CellCorpus,
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (method, est) in estimators {
        for &n in &cfg.shots {
            let mut push = |observable: String, stats: (f64, f64)| {
                rows.push(ResultRow {
                    method: *method,
                    f_target: cell.f_target,
                    theta: cell.theta,
                    shots: n,
                    observable,
                    mean_abs_error: stats.0,
                    stderr_of_mean: stats.1,
                    num_states: corpus.num_states(),
                    seed: cfg.seed,
                })
            };
            for (o, label) in corpus.observables.iter().enumerate() {
                push(label.clone(), error_statistics(corpus, est, n, Some(o))?);
            }
            push(POOLED_OBSERVABLE.into(), error_statistics(corpus, est, n, None)?);
        }
    }
    Ok(rows)
}

/// One row of the coefficient scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffRow {
    pub method: Method,
    #[serde(rename = "F_target")]
    pub f_target: f64,
    pub theta: f64,
    #[serde(rename = "N")]
    pub shots: u64,
    pub observable: String,
    pub coefficient: f64,
    pub kappa: f64,
    pub mean_abs_error: f64,
    pub stderr_of_mean: f64,
    pub num_states: usize,
    pub seed: u64,
}

/// Minimizing coefficient of one (method, cell, N, observable) curve next to the
/// coefficient `1/F` the plan would use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffSummary {
    pub method: Method,
    #[serde(rename = "F_target")]
    pub f_target: f64,
    pub theta: f64,
    #[serde(rename = "N")]
    pub shots: u64,
    pub observable: String,
    pub c_opt: f64,
    pub c_com: f64,
    pub min_mean_abs_error: f64,
}

pub struct CoeffScanOutput {
    pub rows: Vec<CoeffRow>,
    pub summaries: Vec<CoeffSummary>,
}

/// Error against the channel-branch coefficient over the configured grid. All
/// coefficients of a cell read the same shot corpus.
pub fn run_coeff_scan(cfg: &ExperimentConfig, exec: Execution) -> Result<CoeffScanOutput> {
    cfg.validate_cells(true)?;
    let partition = commuting_partition(cfg.n)?;
    let cells = build_cells(cfg, exec)?;
    let states = haar_states(cfg)?;
    let grid = cfg.coefficient_grid();
    let mut methods: Vec<Method> = cfg.methods.iter().copied().filter(|&m| m != Method::Direct).collect();
    methods.sort();
    methods.dedup();
    if methods.is_empty() {
        return Err(QpdError::Config(
            "coefficient scan needs at least one decomposition method".into(),
        ));
    }

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for cell in &cells {
        let c_com = plan_coefficient(cell)?;
        let mut table = CircuitTable::default();
        let mut estimators = Vec::with_capacity(methods.len() * grid.len());
        for &m in &methods {
            for &c in &grid {
                estimators.push((m, c, table.register(&method_plan(m, cell, c, &partition)?)));
            }
        }
        let only: Vec<Estimator> = estimators.iter().map(|(_, _, e)| e.clone()).collect();
        let run = run_cell(cfg, cell, &only, &table, &states, exec)?;
        let corpus = &run.corpus;
        let n_obs = corpus.observables.len();
        for &n in &cfg.shots {
            for &m in &methods {
                let mut best: Vec<Option<(f64, f64)>> = vec![None; n_obs + 1];
                for (method, c, est) in estimators.iter().filter(|(mm, _, _)| *mm == m) {
                    for o in 0..=n_obs {
                        let (label, which) = if o < n_obs {
                            (corpus.observables[o].clone(), Some(o))
                        } else {
                            (POOLED_OBSERVABLE.to_string(), None)
                        };
                        let (mean, se) = error_statistics(corpus, est, n, which)?;
                        if best[o].is_none_or(|(_, e)| mean < e) {
                            best[o] = Some((*c, mean));
                        }
                        rows.push(CoeffRow {
                            method: *method,
                            f_target: cell.f_target,
                            theta: cell.theta,
                            shots: n,
                            observable: label,
                            coefficient: *c,
                            kappa: est.kappa,
                            mean_abs_error: mean,
                            stderr_of_mean: se,
                            num_states: corpus.num_states(),
                            seed: cfg.seed,
                        });
                    }
                }
                for (o, b) in best.into_iter().enumerate() {
                    let (c_opt, err) = b.expect("grid is non-empty");
                    summaries.push(CoeffSummary {
                        method: m,
                        f_target: cell.f_target,
                        theta: cell.theta,
                        shots: n,
                        observable: if o < n_obs {
                            corpus.observables[o].clone()
                        } else {
                            POOLED_OBSERVABLE.into()
                        },
                        c_opt,
                        c_com,
                        min_mean_abs_error: err,
                    });
                }
            }
        }
    }
    Ok(CoeffScanOutput { rows, summaries })
}

/// Fidelity of teleportation through a resource after `k` noisy SWAPs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRow {
    pub k: usize,
    pub f_exact: f64,
    pub f_hat: f64,
    pub stderr: f64,
    pub shots: u64,
    pub per_swap_noise: f64,
    pub seed: u64,
}

pub struct SwapSweepOutput {
    pub rows: Vec<SwapRow>,
    /// Smallest `k` whose calibrated fidelity is below `1/2`.
    pub first_below_half: Option<usize>,
    /// Same threshold for the exact fidelity.
    pub first_below_half_exact: Option<usize>,
}

pub fn run_swap_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<SwapSweepOutput> {
    let ensemble = twirl::two_design(1)?;
    let mut rows = Vec::with_capacity(cfg.max_swaps + 1);
    for k in 0..=cfg.max_swaps {
        let resource = swap_degraded_resource(k, cfg.per_swap_noise)?;
        let channel = teleportation_channel(&resource)?;
        let seed = stream_id(&[cfg.seed, SWAP_TAG, k as u64]);
        let r = calibrate_with(&channel, &ensemble, cfg.calibration_shots, seed, exec)?;
        rows.push(SwapRow {
            k,
            f_exact: channel.entanglement_fidelity(),
            f_hat: r.f_hat,
            stderr: r.stderr,
            shots: r.shots,
            per_swap_noise: cfg.per_swap_noise,
            seed: cfg.seed,
        });
    }
    let first_below_half = rows.iter().find(|r| r.f_hat < 0.5).map(|r| r.k);
    let first_below_half_exact = rows.iter().find(|r| r.f_exact < 0.5).map(|r| r.k);
    Ok(SwapSweepOutput {
        rows,
        first_below_half,
        first_below_half_exact,
    })
}

/// Calibration of every cell's channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCellRow {
    #[serde(rename = "F_target")]
    pub f_target: f64,
    pub theta: f64,
    pub f_exact: f64,
    pub f_hat: f64,
    pub stderr: f64,
    pub shots: u64,
    pub ensemble_label: twirl::EnsembleLabel,
    pub seed: u64,
}

pub fn run_calibration(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<CalibrationCellRow>> {
    let mut calibrated = cfg.clone();
    calibrated.coefficient_source = CoefficientSource::Calibrated;
    build_cells(&calibrated, exec)?
        .into_iter()
        .map(|cell| {
            let r = cell.calibration.expect("calibrated cells carry a result");
            Ok(CalibrationCellRow {
                f_target: cell.f_target,
                theta: cell.theta,
                f_exact: cell.channel.entanglement_fidelity(),
                f_hat: r.f_hat,
                stderr: r.stderr,
                shots: r.shots,
                ensemble_label: r.ensemble_label,
                seed: cfg.seed,
            })
        })
        .collect()
}

/// Writes serializable rows as CSV with a header.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(std::io::BufWriter::new(file), rows)
}
