//! One-way LDPC reconciliation.
//!
//! Alice sends the syndrome `p = H alpha` of her key; Bob runs sum-product
//! belief propagation on his noisy copy `beta` until his hard decision
//! reproduces `p`. Messages are probabilities of a one, in `f64` or in an
//! unsigned fixed-point fraction of 12, 16 or 24 bits.

mod decoder;
mod design;
mod fixed;
mod matrix;
mod sweep;

use thiserror::Error;

pub use decoder::{
    check_node_update, check_node_update_in, decode, init_beliefs, init_beliefs_in, variable_node_update, variable_node_update_in,
    Arithmetic, BeliefState, DecodeResult, Domain, FixedDomain, FloatDomain, FLOAT_QBER_FLOOR,
};
pub use design::{
    candidate_distributions, complexity, density_evolution_converges, density_evolution_threshold, design_matrix, progressive_edge_growth,
    DensityEvolution, DesignReport, DesignSpec, WeightDistribution, MAX_COLUMN_WEIGHT, MIN_COLUMN_WEIGHT,
};
pub use fixed::{fixed_mul, fixed_normalize, FixedFormat, FixedPoint, SUPPORTED_BITS};
pub use matrix::ParityCheckMatrix;
pub use sweep::{
    decision_agreement, noisy_block, run_trials, summarize, sweep_performance, throughput_model, write_sweep_csv, ErrorModel, SweepConfig,
    SweepRow, TrialOutcome, DEFAULT_CLOCK_HZ, DEFAULT_CYCLES_PER_ITERATION, DEFAULT_MAX_ITER, SWEEP_SCHEMA_VERSION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LdpcError {
    #[error("length mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("qber {0} outside [0, 0.5)")]
    Qber(f64),
    #[error("max_iter must be at least 1")]
    MaxIter,
    #[error("trials must be at least 1")]
    Trials,
    #[error("unknown arithmetic {0:?}; expected float, fixed12, fixed16 or fixed24")]
    Arithmetic(String),
    #[error("unsupported fixed-point width {0}; expected 12, 16 or 24")]
    FixedBits(u32),
    #[error("invalid matrix: {0}")]
    Matrix(String),
    #[error("invalid alist: {0}")]
    Alist(String),
    #[error("m = {m} rows below the Shannon bound n H2({qber}) = {bound:.1} for n = {n}")]
    ShannonBound { m: usize, n: usize, qber: f64, bound: f64 },
    #[error("design infeasible: {0}")]
    Infeasible(String),
    #[error("io: {0}")]
    Io(String),
}

/// `H key mod 2`.
pub fn compute_parity(h: &ParityCheckMatrix, key: &[u8]) -> Result<Vec<u8>, LdpcError> {
    h.syndrome(key)
}
