//! Fibre channel: slowly drifting birefringence, insertion loss, and the
//! polarization stabilizer that re-locks on every C-frame.
//!
//! Drift is an isotropic random walk on SU(2). Each step rotates the
//! Poincare sphere by an angle `|N(0, sigma sqrt(dt))|` about a uniformly
//! random axis, with `sigma` switching between a day and a night rate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::jones::{gauss, random_axis, Basis, JonesMatrix, JonesVector, StokesVector, SU2};

/// Re-orthonormalize the channel unitary once it drifts this far from U(2).
pub const REORTHONORMALIZE_AT: f64 = 1e-9;

/// Day-time drift rate, rad/sqrt(s). Gives a mean Stokes excursion of
/// about 0.26 rad over 60 s and under 0.05 rad over 2 s.
pub const DEFAULT_SIGMA_DAY: f64 = 0.0464;
/// Night-time drift rate, rad/sqrt(s).
pub const DEFAULT_SIGMA_NIGHT: f64 = 0.0464 / 5.0;
/// Residual lock error of the stabilizer, rad. Contributes about
/// `sigma^2 / 4 = 0.5%` QBER.
pub const DEFAULT_SIGMA_RESIDUAL: f64 = 0.14;
/// Response time of the commercial stabilizer, s.
pub const STABILIZER_RESPONSE_TIME: f64 = 0.018;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub u: JonesMatrix,
    pub loss_db: f64,
    /// Simulation time in seconds.
    pub t_now: f64,
}

impl ChannelState {
    pub fn new(u: JonesMatrix, loss_db: f64) -> Self {
        assert!(loss_db >= 0.0, "loss must be non-negative");
        ChannelState { u, loss_db, t_now: 0.0 }
    }

    pub fn ideal() -> Self {
        Self::new(JonesMatrix::identity(), 0.0)
    }

    /// Power transmission `10^(-loss/10)`.
    pub fn transmission(&self) -> f64 {
        10f64.powf(-self.loss_db / 10.0)
    }
}

/// Day/night regime switch on a 24 h clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegimeSchedule {
    /// Clock hour at which the day regime begins.
    pub day_start_hour: f64,
    /// Clock hour at which night begins.
    pub day_end_hour: f64,
    /// Clock hour corresponding to `t = 0`.
    pub start_hour: f64,
}

impl Default for RegimeSchedule {
    fn default() -> Self {
        RegimeSchedule { day_start_hour: 8.0, day_end_hour: 20.0, start_hour: 12.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Day,
    Night,
}

impl RegimeSchedule {
    pub fn regime_at(&self, t: f64) -> Regime {
        let hour = (self.start_hour + t / 3600.0).rem_euclid(24.0);
        if hour >= self.day_start_hour && hour < self.day_end_hour {
            Regime::Day
        } else {
            Regime::Night
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftParams {
    pub sigma_day: f64,
    pub sigma_night: f64,
    pub schedule: RegimeSchedule,
}

impl Default for DriftParams {
    fn default() -> Self {
        DriftParams { sigma_day: DEFAULT_SIGMA_DAY, sigma_night: DEFAULT_SIGMA_NIGHT, schedule: RegimeSchedule::default() }
    }
}

impl DriftParams {
    pub fn none() -> Self {
        DriftParams { sigma_day: 0.0, sigma_night: 0.0, ..Default::default() }
    }

    pub fn sigma_at(&self, t: f64) -> f64 {
        match self.schedule.regime_at(t) {
            Regime::Day => self.sigma_day,
            Regime::Night => self.sigma_night,
        }
    }
}

/// Advances the birefringence by `dt` seconds.
pub fn step_drift<R: Rng + ?Sized>(state: &ChannelState, dt: f64, params: &DriftParams, rng: &mut R) -> ChannelState {
    assert!(dt > 0.0, "drift step must be positive");
    let sigma = params.sigma_at(state.t_now);
    let mut next = *state;
    next.t_now += dt;
    if sigma > 0.0 {
        let angle = (gauss(rng) * sigma * dt.sqrt()).abs();
        let axis = random_axis(rng);
        next.u = SU2::from_axis_angle(axis, angle).to_matrix().mul(&state.u);
        if next.u.unitarity_deviation() > REORTHONORMALIZE_AT {
            next.u = next.u.reorthonormalized();
        }
    }
    next
}

/// Sends a state through the fibre. Loss is polarization independent.
pub fn transmit(v: &JonesVector, power: f64, state: &ChannelState) -> (JonesVector, f64) {
    (state.u.apply(v), power * state.transmission())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilizerState {
    /// Compensation unitary applied after the fibre.
    pub comp: JonesMatrix,
    /// Basis of the C-frame the stabilizer last locked on.
    pub reference: Basis,
    pub response_time: f64,
    pub locked: bool,
    pub sigma_residual: f64,
}

impl StabilizerState {
    pub fn new(reference: Basis, sigma_residual: f64) -> Self {
        StabilizerState { comp: JonesMatrix::identity(), reference, response_time: STABILIZER_RESPONSE_TIME, locked: false, sigma_residual }
    }
}

/// Rotation of the Poincare sphere taking direction `from` to `to` along
/// the shortest arc. For anti-parallel inputs the axis is the coordinate
/// axis most orthogonal to `from`, projected to be exactly orthogonal.
pub fn minimal_rotation(from: &StokesVector, to: &StokesVector) -> JonesMatrix {
    let angle = from.angle_to(to);
    if angle == 0.0 {
        return JonesMatrix::identity();
    }
    let cross = from.cross(to);
    let n = cross.norm();
    let axis = if n > 1e-12 * from.norm() * to.norm() { [cross.s1 / n, cross.s2 / n, cross.s3 / n] } else { antiparallel_axis(from) };
    SU2::from_axis_angle(axis, angle).to_matrix()
}

fn antiparallel_axis(from: &StokesVector) -> [f64; 3] {
    let f = from.as_array();
    let fnorm = from.norm().max(f64::MIN_POSITIVE);
    let f = [f[0] / fnorm, f[1] / fnorm, f[2] / fnorm];
    let k = (0..3).min_by(|&i, &j| f[i].abs().partial_cmp(&f[j].abs()).unwrap()).unwrap_or(0);
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let d = f[k];
    let v = [e[0] - d * f[0], e[1] - d * f[1], e[2] - d * f[2]];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// One lock cycle: rotate the compensation so that `measured` lands on
/// `target`, then perturb by a residual angle `N(0, sigma_residual)` about
/// a random axis orthogonal to `target`.
pub fn stabilizer_update<R: Rng + ?Sized>(
    stab: &StabilizerState,
    measured: &StokesVector,
    target: &StokesVector,
    rng: &mut R,
) -> StabilizerState {
    let mut next = *stab;
    let rot = minimal_rotation(measured, target);
    next.comp = rot.mul(&stab.comp);
    if stab.sigma_residual > 0.0 {
        let angle = gauss(rng) * stab.sigma_residual;
        let axis = random_orthogonal_axis(target, rng);
        next.comp = SU2::from_axis_angle(axis, angle).to_matrix().mul(&next.comp);
    }
    if next.comp.unitarity_deviation() > REORTHONORMALIZE_AT {
        next.comp = next.comp.reorthonormalized();
    }
    next.locked = true;
    next
}

fn random_orthogonal_axis<R: Rng + ?Sized>(target: &StokesVector, rng: &mut R) -> [f64; 3] {
    let t = target.as_array();
    let tn = target.norm().max(f64::MIN_POSITIVE);
    let t = [t[0] / tn, t[1] / tn, t[2] / tn];
    loop {
        let r = random_axis(rng);
        let d = r[0] * t[0] + r[1] * t[1] + r[2] * t[2];
        let v = [r[0] - d * t[0], r[1] - d * t[1], r[2] - d * t[2]];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}
