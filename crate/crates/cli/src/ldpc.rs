//! `ldpc design | sim | syndrome | decode`.
//!
//! Bit files hold `0` and `1` characters; whitespace is ignored.

use std::fs;
use std::path::Path;

use serde::Serialize;

use qframe::ldpc::{
    compute_parity, decode, design_matrix, sweep_performance, write_sweep_csv, Arithmetic, ParityCheckMatrix, SweepRow, WeightDistribution,
    SWEEP_SCHEMA_VERSION,
};
use qframe::rng::{stream, Stream};

use crate::{create, io_err, with_format, write_json, write_rows, CliError, Common, Format};

/// Overrides of the `[ldpc]` config section.
#[derive(Debug, Clone, Default)]
pub struct LdpcOverrides {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub row_weight: Option<usize>,
    pub target_qber: Option<f64>,
    pub arithmetic: Option<String>,
    pub max_iter: Option<u32>,
    pub trials: Option<u64>,
    pub qber_grid: Option<Vec<f64>>,
}

fn settings(common: &Common, o: &LdpcOverrides) -> Result<(u64, qframe::config::LdpcSettings, qframe::config::OutputPaths), CliError> {
    let cfg = common.load_config()?;
    let mut s = cfg.ldpc.clone();
    if let Some(n) = o.n {
        s.n = n;
    }
    if o.m.is_some() {
        s.m = o.m;
    }
    if let Some(w) = o.row_weight {
        s.row_weight = w;
    }
    if let Some(q) = o.target_qber {
        s.target_qber = q;
    }
    if let Some(a) = &o.arithmetic {
        s.arithmetic = a.clone();
    }
    if let Some(m) = o.max_iter {
        s.max_iter = m;
    }
    if let Some(t) = o.trials {
        s.trials = t;
    }
    if let Some(g) = &o.qber_grid {
        s.qber_grid = g.clone();
    }
    s.arithmetic()?;
    if s.max_iter == 0 || s.trials == 0 {
        return Err(CliError::Config("max_iter and trials must be at least 1".into()));
    }
    Ok((cfg.seed, s, cfg.outputs))
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignSummary {
    pub schema_version: u32,
    pub n: usize,
    pub m: usize,
    pub row_weight: usize,
    pub edges: usize,
    pub distribution: WeightDistribution,
    pub complexity: u64,
    pub four_cycles: u64,
    pub shannon_rows: f64,
    pub converges_at_target: bool,
    pub threshold: Option<f64>,
}

fn design(seed: u64, s: &qframe::config::LdpcSettings) -> Result<(ParityCheckMatrix, DesignSummary), CliError> {
    let mut rng = stream(seed, Stream::Ldpc);
    let rep = design_matrix(&s.design_spec(), &mut rng).map_err(|e| CliError::Config(e.to_string()))?;
    let summary = DesignSummary {
        schema_version: SWEEP_SCHEMA_VERSION,
        n: rep.matrix.n(),
        m: rep.matrix.m(),
        row_weight: rep.matrix.row_weight(),
        edges: rep.matrix.edges(),
        distribution: rep.distribution.clone(),
        complexity: rep.complexity,
        four_cycles: rep.four_cycles,
        shannon_rows: rep.shannon_rows,
        converges_at_target: rep.converges_at_target,
        threshold: rep.threshold,
    };
    Ok((rep.matrix, summary))
}

/// Designs a matrix from the config and writes it as alist text plus
/// `design.json`.
pub fn run_design(common: &Common, o: &LdpcOverrides) -> Result<DesignSummary, CliError> {
    let (seed, s, paths) = settings(common, o)?;
    let out_dir = common.prepare_out()?;
    let (h, summary) = design(seed, &s)?;
    let path = out_dir.join(&paths.matrix);
    fs::write(&path, h.to_alist()).map_err(|e| io_err(&path, e))?;
    write_json(&out_dir.join("design.json"), &summary)?;
    Ok(summary)
}

pub fn read_matrix(path: &Path) -> Result<ParityCheckMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    ParityCheckMatrix::from_alist(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Sweeps the QBER grid on `matrix`, or on a freshly designed matrix.
pub fn run_sim(common: &Common, o: &LdpcOverrides, matrix: Option<&Path>) -> Result<Vec<SweepRow>, CliError> {
    let (seed, s, paths) = settings(common, o)?;
    let out_dir = common.prepare_out()?;
    let h = match matrix {
        Some(p) => read_matrix(p)?,
        None => design(seed, &s)?.0,
    };
    let arithmetic = s.arithmetic()?;
    let rows =
        sweep_performance(&h, &s.qber_grid, s.trials, arithmetic, &s.sweep_config(), seed).map_err(|e| CliError::Config(e.to_string()))?;
    let path = out_dir.join(with_format(&paths.sweep, common.format));
    match common.format {
        Format::Csv => write_sweep_csv(&rows, create(&path)?).map_err(|e| io_err(&path, e))?,
        Format::Jsonl => write_rows(&path, &rows, Format::Jsonl)?,
    }
    Ok(rows)
}

pub fn read_bits(path: &Path) -> Result<Vec<u8>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(CliError::Data(format!("{}: unexpected character {other:?} in bit file", path.display()))),
        })
        .collect()
}

pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b & 1 == 1 { '1' } else { '0' }).collect()
}

/// Writes the syndrome of `key` to `out_name` in the output directory.
pub fn run_syndrome(common: &Common, matrix: &Path, key: &Path, out_name: &str) -> Result<Vec<u8>, CliError> {
    let out_dir = common.prepare_out()?;
    let h = read_matrix(matrix)?;
    let k = read_bits(key)?;
    let p = compute_parity(&h, &k).map_err(|e| CliError::Data(e.to_string()))?;
    let path = out_dir.join(out_name);
    fs::write(&path, bits_to_string(&p) + "\n").map_err(|e| io_err(&path, e))?;
    Ok(p)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecodeSummary {
    pub schema_version: u32,
    pub arithmetic: String,
    pub converged: bool,
    pub syndrome_matched: bool,
    pub iterations: u32,
    pub degenerate_events: u64,
    pub corrected: String,
}

/// Corrects `received` against `syndrome`. Writes the summary even when
/// decoding fails, then reports non-convergence.
pub fn run_decode(
    common: &Common,
    o: &LdpcOverrides,
    matrix: &Path,
    received: &Path,
    syndrome: &Path,
    qber: f64,
) -> Result<DecodeSummary, CliError> {
    let (_, s, paths) = settings(common, o)?;
    let out_dir = common.prepare_out()?;
    let h = read_matrix(matrix)?;
    let beta = read_bits(received)?;
    let p = read_bits(syndrome)?;
    let arithmetic: Arithmetic = s.arithmetic()?;
    let r = decode(&h, &p, &beta, qber, s.max_iter, arithmetic).map_err(|e| CliError::Data(e.to_string()))?;
    let summary = DecodeSummary {
        schema_version: SWEEP_SCHEMA_VERSION,
        arithmetic: arithmetic.label(),
        converged: r.converged,
        syndrome_matched: r.syndrome_matched,
        iterations: r.iterations,
        degenerate_events: r.degenerate_events,
        corrected: bits_to_string(&r.corrected),
    };
    write_json(&out_dir.join(&paths.decoded), &summary)?;
    if !r.converged {
        return Err(CliError::NotConverged(r.iterations));
    }
    Ok(summary)
}
