//! Monte-Carlo decoding performance over a QBER grid.
//!
//! Trial `t` at grid index `g` draws from `substream(seed, Ldpc, g * trials + t)`,
//! so results do not depend on the number of worker threads.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{decode, Arithmetic, LdpcError, ParityCheckMatrix};
use crate::rng::{substream, Stream};

pub const SWEEP_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_CLOCK_HZ: f64 = 50e6;
pub const DEFAULT_CYCLES_PER_ITERATION: f64 = 46.0;
pub const DEFAULT_MAX_ITER: u32 = 40;

/// How channel errors are placed in a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    /// Each bit flips independently with probability `qber`.
    Bernoulli,
    /// Exactly `round(qber n)` distinct bits flip.
    #[default]
    FixedCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub max_iter: u32,
    pub clock_hz: f64,
    pub cycles_per_iteration: f64,
    pub error_model: ErrorModel,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            max_iter: DEFAULT_MAX_ITER,
            clock_hz: DEFAULT_CLOCK_HZ,
            cycles_per_iteration: DEFAULT_CYCLES_PER_ITERATION,
            error_model: ErrorModel::FixedCount,
        }
    }
}

/// Sifted-key throughput of a fully parallel decoder in Mb/s:
/// `n clock / (cycles_per_iteration mean_iterations)`.
pub fn throughput_model(n: usize, mean_iterations: f64, clock_hz: f64, cycles_per_iteration: f64) -> f64 {
    n as f64 * clock_hz / (cycles_per_iteration * mean_iterations) / 1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub success: bool,
    pub converged: bool,
    pub iterations: u32,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub schema_version: u32,
    pub qber: f64,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    /// Over successful blocks only; zero when none succeeded.
    pub mean_iterations: f64,
    /// Over all blocks, failures counted at `max_iter`.
    pub mean_iterations_all: f64,
    /// From `mean_iterations`; zero when none succeeded.
    pub throughput_mbps: f64,
}

impl SweepRow {
    /// Binomial standard error of the success rate.
    pub fn success_sigma(&self) -> f64 {
        (self.success_rate * (1.0 - self.success_rate) / self.trials as f64).sqrt()
    }
}

/// Random key and its noisy copy.
pub fn noisy_block<R: Rng + ?Sized>(n: usize, qber: f64, model: ErrorModel, rng: &mut R) -> (Vec<u8>, Vec<u8>) {
    let key: Vec<u8> = (0..n).map(|_| rng.random::<bool>() as u8).collect();
    let mut received = key.clone();
    match model {
        ErrorModel::Bernoulli => {
            for b in received.iter_mut() {
                if rng.random::<f64>() < qber {
                    *b ^= 1;
                }
            }
        }
        ErrorModel::FixedCount => {
            let k = ((qber * n as f64).round() as usize).min(n);
            for j in rand::seq::index::sample(rng, n, k) {
                received[j] ^= 1;
            }
        }
    }
    (key, received)
}

fn validate(qber: f64, trials: u64) -> Result<(), LdpcError> {
    if trials == 0 {
        return Err(LdpcError::Trials);
    }
    if !(0.0..0.5).contains(&qber) {
        return Err(LdpcError::Qber(qber));
    }
    Ok(())
}

/// Decodes `trials` independent blocks at one grid point. The decoder is
/// told the true `qber`; it clamps zero to its floor.
pub fn run_trials(
    h: &ParityCheckMatrix,
    qber: f64,
    trials: u64,
    grid_index: u64,
    arithmetic: Arithmetic,
    cfg: &SweepConfig,
    seed: u64,
) -> Result<Vec<TrialOutcome>, LdpcError> {
    validate(qber, trials)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, Stream::Ldpc, grid_index * trials + t);
            let (key, received) = noisy_block(h.n(), qber, cfg.error_model, &mut rng);
            let parity = h.syndrome(&key)?;
            let r = decode(h, &parity, &received, qber, cfg.max_iter, arithmetic)?;
            Ok(TrialOutcome {
                success: r.converged && r.corrected == key,
                converged: r.converged,
                iterations: r.iterations,
                errors: key.iter().zip(&received).filter(|(a, b)| a != b).count(),
            })
        })
        .collect()
}

pub fn summarize(h: &ParityCheckMatrix, qber: f64, outcomes: &[TrialOutcome], cfg: &SweepConfig) -> SweepRow {
    let trials = outcomes.len() as u64;
    let ok: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.success).collect();
    let successes = ok.len() as u64;
    let mean_iterations = if ok.is_empty() { 0.0 } else { ok.iter().map(|o| o.iterations as f64).sum::<f64>() / ok.len() as f64 };
    let mean_iterations_all =
        outcomes.iter().map(|o| if o.success { o.iterations } else { cfg.max_iter } as f64).sum::<f64>() / trials.max(1) as f64;
    let throughput_mbps =
        if ok.is_empty() { 0.0 } else { throughput_model(h.n(), mean_iterations, cfg.clock_hz, cfg.cycles_per_iteration) };
    SweepRow {
        schema_version: SWEEP_SCHEMA_VERSION,
        qber,
        trials,
        successes,
        success_rate: successes as f64 / trials.max(1) as f64,
        mean_iterations,
        mean_iterations_all,
        throughput_mbps,
    }
}

/// One row per grid point, in grid order.
pub fn sweep_performance(
    h: &ParityCheckMatrix,
    qber_grid: &[f64],
    trials: u64,
    arithmetic: Arithmetic,
    cfg: &SweepConfig,
    seed: u64,
) -> Result<Vec<SweepRow>, LdpcError> {
    qber_grid
        .iter()
        .enumerate()
        .map(|(g, &q)| Ok(summarize(h, q, &run_trials(h, q, trials, g as u64, arithmetic, cfg, seed)?, cfg)))
        .collect()
}

/// Fraction of blocks on which two arithmetics reach the same success
/// verdict, both decoding identical blocks.
pub fn decision_agreement(
    h: &ParityCheckMatrix,
    qber: f64,
    trials: u64,
    a: Arithmetic,
    b: Arithmetic,
    cfg: &SweepConfig,
    seed: u64,
) -> Result<f64, LdpcError> {
    let ra = run_trials(h, qber, trials, 0, a, cfg, seed)?;
    let rb = run_trials(h, qber, trials, 0, b, cfg, seed)?;
    Ok(ra.iter().zip(&rb).filter(|(x, y)| x.success == y.success).count() as f64 / trials as f64)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), LdpcError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "schema_version",
        "qber",
        "trials",
        "successes",
        "success_rate",
        "mean_iterations",
        "mean_iterations_all",
        "throughput_mbps",
    ])
    .map_err(|e| LdpcError::Io(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.schema_version.to_string(),
            r.qber.to_string(),
            r.trials.to_string(),
            r.successes.to_string(),
            format!("{:.6}", r.success_rate),
            format!("{:.4}", r.mean_iterations),
            format!("{:.4}", r.mean_iterations_all),
            format!("{:.4}", r.throughput_mbps),
        ])
        .map_err(|e| LdpcError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| LdpcError::Io(e.to_string()))
}
