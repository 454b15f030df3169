//! `keyrate`: secret-key-rate curves and the optimal signal intensity.

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use qframe::decoy::{curves, optimal_mu, rate_a, rate_b, write_rate_csv, CurvePoint, DecoyError, MeasuredGains, RATE_SCHEMA_VERSION};
use qframe::photonics::CountTable;

use crate::{create, io_err, write_json, CliError, Common};

#[derive(Debug, Clone, Serialize)]
pub struct KeyrateSummary {
    pub schema_version: u32,
    pub mu_opt: Option<f64>,
    pub rate_b_at_mu_opt: Option<f64>,
    pub mu: f64,
    pub nu: f64,
    /// Curve B over curve A at the configured `mu`.
    pub ratio_b_over_a: Option<f64>,
    pub rate_c: Option<f64>,
    pub rate_c_sigma: Option<f64>,
    pub diagnostics: Vec<String>,
}

/// Curves A and B over the decoy grid, curve C from `counts` if given.
/// Missing intensity classes leave curve C at zero with a diagnostic on
/// standard error.
pub fn run(common: &Common, counts: Option<&Path>) -> Result<KeyrateSummary, CliError> {
    let cfg = common.load_config()?;
    let out_dir = common.prepare_out()?;
    let lp = cfg.link_params();
    let nu = cfg.decoy.nu;
    let mut diagnostics = Vec::new();

    let measured = match counts {
        None => None,
        Some(p) => {
            let f = File::open(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let table = CountTable::read_csv(f).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            match MeasuredGains::from_counts(&table, lp.mu, nu) {
                Ok(m) => {
                    diagnostics.extend(m.warnings());
                    Some(m)
                }
                Err(e) => {
                    diagnostics.push(format!("curve C unavailable, reported as zero: {e}"));
                    None
                }
            }
        }
    };

    let mut points: Vec<CurvePoint> = curves(&lp, &cfg.decoy.grid(), nu, measured.as_ref()).map_err(|e| CliError::Config(e.to_string()))?;
    if counts.is_some() && measured.is_none() {
        // zero rate at the measured intensity
        if let Some(p) = points.iter_mut().find(|p| (p.mu - lp.mu).abs() < 1e-12) {
            p.c = Some(qframe::decoy::KeyRateReport { s: 0.0, s_raw: 0.0, sigma: None, ..p.b });
        } else {
            let b = rate_b(&lp, lp.mu, nu).map_err(|e| CliError::Config(e.to_string()))?;
            let c = qframe::decoy::KeyRateReport { s: 0.0, s_raw: 0.0, sigma: None, ..b };
            points.push(CurvePoint { mu: lp.mu, a: rate_a(&lp, lp.mu), b, c: Some(c) });
            points.sort_by(|x, y| x.mu.total_cmp(&y.mu));
        }
    }
    for p in &points {
        if p.b.clamped {
            diagnostics.push(format!("mu = {}: single-photon yield bound clamped at zero", p.mu));
            break;
        }
    }

    let rates_path = out_dir.join(&cfg.outputs.rates);
    write_rate_csv(&points, create(&rates_path)?).map_err(|e| io_err(&rates_path, e))?;

    let mu_opt = match optimal_mu(&lp, nu) {
        Ok(m) => Some(m),
        Err(DecoyError::NoPositiveRate) => {
            diagnostics.push("curve B is zero everywhere; no optimal mu".into());
            None
        }
        Err(e) => return Err(CliError::Config(e.to_string())),
    };
    let a = rate_a(&lp, lp.mu).s;
    let b = rate_b(&lp, lp.mu, nu).map_err(|e| CliError::Config(e.to_string()))?.s;
    let c = points.iter().find_map(|p| p.c);
    let summary = KeyrateSummary {
        schema_version: RATE_SCHEMA_VERSION,
        rate_b_at_mu_opt: mu_opt.map(|m| rate_b(&lp, m, nu).map(|r| r.s).unwrap_or(0.0)),
        mu_opt,
        mu: lp.mu,
        nu,
        ratio_b_over_a: (a > 0.0).then(|| b / a),
        rate_c: c.map(|r| r.s),
        rate_c_sigma: c.and_then(|r| r.sigma),
        diagnostics,
    };
    for d in &summary.diagnostics {
        eprintln!("keyrate: {d}");
    }
    write_json(&out_dir.join("keyrate.json"), &summary)?;
    Ok(summary)
}
