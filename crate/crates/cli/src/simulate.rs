//! `simulate`: one link session with logs and detector counts.

use std::io::Write;

use serde::Serialize;

use qframe::framing::IntensityClass;
use qframe::framing::{duty_cycle_report, module_for_frame, run_session, DutyCycle, SiftStats, LOG_SCHEMA_VERSION};
use qframe::jones::Polarization;

use crate::{create, io_err, with_format, write_json, write_rows, CliError, Common};

#[derive(Debug, Clone, Serialize)]
struct StokesRow {
    schema_version: u32,
    frame_idx: u64,
    t: f64,
    module: usize,
    s1: f64,
    s2: f64,
    s3: f64,
}

#[derive(Debug, Clone, Serialize)]
struct QberRow {
    schema_version: u32,
    frame_idx: u64,
    t: f64,
    qber_burst: Option<f64>,
    qber_window: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct SequenceRow {
    schema_version: u32,
    index: usize,
    module: usize,
    cframe: Polarization,
    /// Empty for random BB84 states.
    qubit: Option<Polarization>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub frames: u64,
    pub duration_s: f64,
    pub duty_cycle: DutyCycle,
    pub sift: SiftStats,
    /// Sifted signal-key error rate.
    pub qber_signal: Option<f64>,
    /// Mean and extremes of the rolling-window QBER timeline.
    pub qber_window_mean: Option<f64>,
    pub qber_window_min: Option<f64>,
    pub qber_window_max: Option<f64>,
}

/// Runs the session and writes the JSON-lines frame log, the Stokes log,
/// the QBER timeline, the per-detector count CSV, the measurement sequence
/// and `summary.json`.
pub fn run(common: &Common, duration_override: Option<f64>) -> Result<SimulateSummary, CliError> {
    let mut cfg = common.load_config()?;
    if let Some(d) = duration_override {
        cfg.simulation.duration_s = d;
        cfg.validate()?;
    }
    let out_dir = common.prepare_out()?;
    let schedule = cfg.session_schedule();
    let out = run_session(&schedule, &cfg.link_config(), cfg.simulation.duration_s, cfg.seed, cfg.simulation.keep_keys)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let paths = &cfg.outputs;

    let log_path = out_dir.join(&paths.session_log);
    let mut f = create(&log_path)?;
    for rec in &out.log {
        serde_json::to_writer(&mut f, rec).map_err(|e| io_err(&log_path, e))?;
        f.write_all(b"\n").map_err(|e| io_err(&log_path, e))?;
    }
    f.flush().map_err(|e| io_err(&log_path, e))?;

    let stokes: Vec<StokesRow> = out
        .stokes_log
        .iter()
        .map(|s| StokesRow {
            schema_version: LOG_SCHEMA_VERSION,
            frame_idx: s.frame_idx,
            t: s.t,
            module: s.module,
            s1: s.s1,
            s2: s.s2,
            s3: s.s3,
        })
        .collect();
    write_rows(&out_dir.join(with_format(&paths.stokes_log, common.format)), &stokes, common.format)?;

    let qber: Vec<QberRow> = out
        .qber_timeline
        .iter()
        .map(|q| QberRow {
            schema_version: LOG_SCHEMA_VERSION,
            frame_idx: q.frame_idx,
            t: q.t,
            qber_burst: q.qber_burst,
            qber_window: q.qber_window,
        })
        .collect();
    write_rows(&out_dir.join(with_format(&paths.qber_timeline, common.format)), &qber, common.format)?;

    let seq: Vec<SequenceRow> = out
        .sequence
        .iter()
        .enumerate()
        .map(|(i, p)| SequenceRow {
            schema_version: LOG_SCHEMA_VERSION,
            index: i,
            module: module_for_frame(schedule.pattern, i),
            cframe: p.cframe,
            qubit: p.qubit,
        })
        .collect();
    write_rows(&out_dir.join(with_format(&paths.sequence, common.format)), &seq, common.format)?;

    let counts_path = out_dir.join(&paths.counts);
    out.counts.write_csv(create(&counts_path)?).map_err(|e| io_err(&counts_path, e))?;

    let windows: Vec<f64> = out.qber_timeline.iter().filter_map(|q| q.qber_window).collect();
    let mean = (!windows.is_empty()).then(|| windows.iter().sum::<f64>() / windows.len() as f64);
    let summary = SimulateSummary {
        schema_version: LOG_SCHEMA_VERSION,
        seed: cfg.seed,
        frames: out.qber_timeline.len() as u64,
        duration_s: cfg.simulation.duration_s,
        duty_cycle: duty_cycle_report(&schedule),
        sift: out.sift,
        qber_signal: out.sift.mismatch_rate(IntensityClass::Signal),
        qber_window_mean: mean,
        qber_window_min: windows.iter().copied().reduce(f64::min),
        qber_window_max: windows.iter().copied().reduce(f64::max),
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}
