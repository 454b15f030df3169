//! Secret-key rate per gated signal pulse (GLLP) with three ways of
//! obtaining the single-photon gain and error rate:
//!
//! * A: fair loss, single-photon contribution computed from the link model;
//! * B: decoy-state bounds (weak decoy plus vacuum) fed by the link model;
//! * C: decoy-state bounds fed by measured gains.
//!
//! Rates are per gated signal pulse; multiply by the gate rate and the
//! signal fraction of the decoy mixture for bits per second.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binary_entropy;
use crate::framing::IntensityClass;
use crate::photonics::{CountTable, LinkParams, PhotonicsError};

/// Error rate of vacuum detections.
pub const E0: f64 = 0.5;
pub const MU_MAX: f64 = 1.5;
pub const MU_TOL: f64 = 1e-3;
pub const RATE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecoyError {
    #[error("decoy bounds need 0 < nu < mu (mu = {mu}, nu = {nu})")]
    Degenerate { mu: f64, nu: f64 },
    #[error("secret key rate is zero over (0, {MU_MAX}]")]
    NoPositiveRate,
    #[error("missing measured {0:?} counts")]
    MissingClass(IntensityClass),
    #[error(transparent)]
    Params(#[from] PhotonicsError),
}

/// `H2(x)`.
pub fn shannon_entropy(x: f64) -> f64 {
    binary_entropy(x)
}

/// Signal gain and error rate from the link model at mean photon number `mu`.
pub fn gain_error_signal(lp: &LinkParams, mu: f64) -> (f64, f64) {
    let k = 1.0 - lp.y0_half;
    let ec = (-mu * lp.t * lp.eta * lp.a).exp();
    let ew = (-mu * lp.t * lp.eta * (1.0 - lp.a)).exp();
    let q = 2.0 - k * (ec + ew);
    (q, (1.0 - k * ew) / q)
}

/// Single-photon gain and error rate under fair loss.
pub fn gain_error_single_fair(lp: &LinkParams, mu: f64) -> (f64, f64) {
    let k = 1.0 - lp.y0_half;
    let te = lp.t * lp.eta;
    let y1 = 2.0 - k * (2.0 - te);
    (mu * (-mu).exp() * y1, (1.0 - k * (1.0 - (1.0 - lp.a) * te)) / y1)
}

/// Decoy-state single-photon bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyBounds {
    pub q1_lower: f64,
    pub e1_upper: f64,
    pub y1_lower: f64,
    /// A bound fell outside its physical range and was clamped.
    pub clamped: bool,
}

/// Weak-decoy plus vacuum bounds with vacuum error rate `E0`. `y0` is the
/// vacuum gain.
pub fn decoy_bounds(q_mu: f64, e_mu: f64, q_nu: f64, e_nu: f64, y0: f64, mu: f64, nu: f64) -> Result<DecoyBounds, DecoyError> {
    let _ = e_mu;
    if !(nu > 0.0 && nu < mu) || (mu * nu - nu * nu).abs() < 1e-15 {
        return Err(DecoyError::Degenerate { mu, nu });
    }
    let bracket = q_nu * nu.exp() - q_mu * mu.exp() * nu * nu / (mu * mu) - (mu * mu - nu * nu) / (mu * mu) * y0;
    let denom = mu * nu - nu * nu;
    let mut y1 = mu / denom * bracket;
    let mut q1 = mu * mu * (-mu).exp() / denom * bracket;
    let mut clamped = false;
    if y1 <= 0.0 {
        y1 = 0.0;
        q1 = 0.0;
        clamped = true;
    }
    let mut e1 = if y1 > 0.0 { (e_nu * q_nu * nu.exp() - E0 * y0) / (y1 * nu) } else { E0 };
    if !(0.0..=E0).contains(&e1) {
        e1 = e1.clamp(0.0, E0);
        clamped = true;
    }
    Ok(DecoyBounds { q1_lower: q1, e1_upper: e1, y1_lower: y1, clamped })
}

/// `S = (Q1 (1 - H2(e1)) - Q_mu f H2(E_mu)) / 2` before clamping.
pub fn gllp_rate_raw(q1: f64, e1: f64, q_mu: f64, e_mu: f64, f_ec: f64) -> f64 {
    0.5 * (q1 * (1.0 - shannon_entropy(e1)) - q_mu * f_ec * shannon_entropy(e_mu))
}

/// GLLP rate clamped at zero.
pub fn gllp_rate(q1: f64, e1: f64, q_mu: f64, e_mu: f64, f_ec: f64) -> f64 {
    gllp_rate_raw(q1, e1, q_mu, e_mu, f_ec).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    FairLossSinglePhoton,
    FairLossDecoy,
    MeasuredDecoy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    /// Rate clamped at zero.
    pub s: f64,
    pub s_raw: f64,
    pub q1: f64,
    pub e1: f64,
    pub y1: f64,
    pub mu_used: f64,
    pub method: RateMethod,
    /// One-sigma uncertainty, measured inputs only.
    pub sigma: Option<f64>,
    pub clamped: bool,
}

/// Gains and error rates with their one-sigma uncertainties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredGains {
    pub mu: f64,
    pub nu: f64,
    pub q_mu: f64,
    pub e_mu: f64,
    pub q_nu: f64,
    pub e_nu: f64,
    pub y0: f64,
    pub sigma: [f64; 5],
}

impl MeasuredGains {
    /// Aggregates signal, decoy and vacuum counts.
    pub fn from_counts(counts: &CountTable, mu: f64, nu: f64) -> Result<Self, DecoyError> {
        let get = |c| counts.gain(c).ok_or(DecoyError::MissingClass(c));
        let s = get(IntensityClass::Signal)?;
        let d = get(IntensityClass::Decoy)?;
        let v = get(IntensityClass::Vacuum)?;
        Ok(MeasuredGains {
            mu,
            nu,
            q_mu: s.q,
            e_mu: s.e,
            q_nu: d.q,
            e_nu: d.e,
            y0: v.q,
            sigma: [s.sigma_q, s.sigma_e, d.sigma_q, d.sigma_e, v.sigma_q],
        })
    }

    /// Values above 0.5 for error rates are suspicious but accepted.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        for (name, e) in [("E_mu", self.e_mu), ("E_nu", self.e_nu)] {
            if e > 0.5 {
                w.push(format!("{name} = {e:.4} exceeds 0.5"));
            }
        }
        w
    }

    fn as_array(&self) -> [f64; 5] {
        [self.q_mu, self.e_mu, self.q_nu, self.e_nu, self.y0]
    }

    fn rate_of(mu: f64, nu: f64, x: [f64; 5], f_ec: f64) -> Result<(f64, DecoyBounds), DecoyError> {
        let b = decoy_bounds(x[0], x[1], x[2], x[3], x[4], mu, nu)?;
        Ok((gllp_rate_raw(b.q1_lower, b.e1_upper, x[0], x[1], f_ec), b))
    }
}

/// Curve A at one `mu`.
pub fn rate_a(lp: &LinkParams, mu: f64) -> KeyRateReport {
    let (q, e) = gain_error_signal(lp, mu);
    let (q1, e1) = gain_error_single_fair(lp, mu);
    let raw = gllp_rate_raw(q1, e1, q, e, lp.f_ec);
    let y1 = if mu > 0.0 { q1 / (mu * (-mu).exp()) } else { 0.0 };
    KeyRateReport {
        s: raw.max(0.0),
        s_raw: raw,
        q1,
        e1,
        y1,
        mu_used: mu,
        method: RateMethod::FairLossSinglePhoton,
        sigma: None,
        clamped: false,
    }
}

/// Curve B at one `mu` with decoy `nu`.
pub fn rate_b(lp: &LinkParams, mu: f64, nu: f64) -> Result<KeyRateReport, DecoyError> {
    let (q, e) = gain_error_signal(lp, mu);
    let (qn, en) = gain_error_signal(lp, nu);
    let b = decoy_bounds(q, e, qn, en, lp.y0(), mu, nu)?;
    let raw = gllp_rate_raw(b.q1_lower, b.e1_upper, q, e, lp.f_ec);
    Ok(KeyRateReport {
        s: raw.max(0.0),
        s_raw: raw,
        q1: b.q1_lower,
        e1: b.e1_upper,
        y1: b.y1_lower,
        mu_used: mu,
        method: RateMethod::FairLossDecoy,
        sigma: None,
        clamped: b.clamped,
    })
}

/// Curve C from measured gains; the uncertainty is propagated linearly.
pub fn rate_c(m: &MeasuredGains, f_ec: f64) -> Result<KeyRateReport, DecoyError> {
    let x = m.as_array();
    let (raw, b) = MeasuredGains::rate_of(m.mu, m.nu, x, f_ec)?;
    let mut var = 0.0;
    for i in 0..5 {
        if m.sigma[i] <= 0.0 {
            continue;
        }
        let h = (m.sigma[i] * 1e-3).max(1e-15);
        let (mut up, mut dn) = (x, x);
        up[i] += h;
        dn[i] -= h;
        let d = (MeasuredGains::rate_of(m.mu, m.nu, up, f_ec)?.0 - MeasuredGains::rate_of(m.mu, m.nu, dn, f_ec)?.0) / (2.0 * h);
        var += (d * m.sigma[i]).powi(2);
    }
    Ok(KeyRateReport {
        s: raw.max(0.0),
        s_raw: raw,
        q1: b.q1_lower,
        e1: b.e1_upper,
        y1: b.y1_lower,
        mu_used: m.mu,
        method: RateMethod::MeasuredDecoy,
        sigma: Some(var.sqrt()),
        clamped: b.clamped,
    })
}

/// One row of the three curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub mu: f64,
    pub a: KeyRateReport,
    pub b: KeyRateReport,
    pub c: Option<KeyRateReport>,
}

/// Curves A and B over the points of `mu_grid` above `nu`; curve C at the
/// measured mean photon number, which is added to the grid if absent.
pub fn curves(lp: &LinkParams, mu_grid: &[f64], nu: f64, measured: Option<&MeasuredGains>) -> Result<Vec<CurvePoint>, DecoyError> {
    lp.validate()?;
    let mut grid: Vec<f64> = mu_grid.iter().copied().filter(|&mu| mu > nu).collect();
    if let Some(m) = measured {
        if !grid.iter().any(|g| (g - m.mu).abs() < 1e-12) {
            grid.push(m.mu);
        }
    }
    grid.sort_by(f64::total_cmp);
    let c = measured.map(|m| rate_c(m, lp.f_ec)).transpose()?;
    grid.iter()
        .map(|&mu| Ok(CurvePoint { mu, a: rate_a(lp, mu), b: rate_b(lp, mu, nu)?, c: c.filter(|r| (r.mu_used - mu).abs() < 1e-12) }))
        .collect()
}

/// Argmax of curve B over `(0, MU_MAX]`: a coarse scan brackets the
/// maximum, golden-section search refines it to `MU_TOL`.
pub fn optimal_mu(lp: &LinkParams, nu: f64) -> Result<f64, DecoyError> {
    let f = |mu: f64| rate_b(lp, mu, nu).map(|r| r.s_raw);
    let lo = nu * (1.0 + 1e-6);
    let steps = 300;
    let grid: Vec<f64> = (0..=steps).map(|i| lo + (MU_MAX - lo) * i as f64 / steps as f64).collect();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &mu) in grid.iter().enumerate() {
        let v = f(mu)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    if best.1 <= 0.0 {
        return Err(DecoyError::NoPositiveRate);
    }
    let (mut a, mut b) = (grid[best.0.saturating_sub(1)], grid[(best.0 + 1).min(steps)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > MU_TOL / 10.0 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Writes the rate-curve CSV. Empty `rate_C` cells mean no measurement.
pub fn write_rate_csv<W: Write>(points: &[CurvePoint], w: W) -> Result<(), csv::Error> {
    #[derive(Serialize)]
    struct Row {
        schema_version: u32,
        mu: f64,
        #[serde(rename = "rate_A")]
        rate_a: f64,
        #[serde(rename = "rate_B")]
        rate_b: f64,
        #[serde(rename = "rate_C")]
        rate_c: Option<f64>,
        #[serde(rename = "q1_B")]
        q1_b: f64,
        #[serde(rename = "e1_B")]
        e1_b: f64,
        #[serde(rename = "rate_C_sigma")]
        rate_c_sigma: Option<f64>,
    }
    let mut wr = csv::Writer::from_writer(w);
    for p in points {
        wr.serialize(Row {
            schema_version: RATE_SCHEMA_VERSION,
            mu: p.mu,
            rate_a: p.a.s,
            rate_b: p.b.s,
            rate_c: p.c.map(|c| c.s),
            q1_b: p.b.q1,
            e1_b: p.b.e1,
            rate_c_sigma: p.c.and_then(|c| c.sigma),
        })?;
    }
    wr.flush()?;
    Ok(())
}
