//! Full link session: alternating C-frames and quantum bursts over a
//! drifting channel, with per-detector counts, post-lock Stokes vectors and
//! a rolling QBER.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    measurement_sequence, module_for_frame, sift_burst, BobClick, CFrameHeader, FramePlan, FramingError, HeaderError, IntensityClass,
    QFrame, SessionSchedule, SiftedKey,
};
use crate::channel::{stabilizer_update, step_drift, ChannelState, DriftParams, StabilizerState, DEFAULT_SIGMA_RESIDUAL};
use crate::jones::{stokes_from_jones, JonesMatrix, Polarization, StokesVector};
use crate::photonics::{CountKey, CountTable, DetectorModel, LinkParams, MeasurementModule, PhotonNumber};
use crate::rng::{stream, Stream};

pub const LOG_SCHEMA_VERSION: u32 = 1;

/// Everything about the link that is not the frame schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkConfig {
    /// Detector model per measurement module; its `gate_rate` is replaced by
    /// the schedule's.
    pub detector: DetectorModel,
    pub drift: DriftParams,
    pub stabilizer_enabled: bool,
    pub sigma_residual: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            detector: DetectorModel::new(LinkParams::long_run_regime()),
            drift: DriftParams::default(),
            stabilizer_enabled: true,
            sigma_residual: DEFAULT_SIGMA_RESIDUAL,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error(transparent)]
    Framing(#[from] FramingError),
    #[error(transparent)]
    Header(#[from] HeaderError),
    #[error("invalid link parameters: {0}")]
    Link(String),
    #[error("session duration {0} s is shorter than one frame")]
    Duration(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Cframe,
    Qdata,
}

/// One JSON-lines record. C-frame records carry the lock, quantum-data
/// records the click count and the rolling QBER.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLogRecord {
    pub schema_version: u32,
    pub frame_idx: u64,
    #[serde(rename = "type")]
    pub kind: FrameKind,
    pub t_start: f64,
    /// Polarization each module is locked to during this record.
    pub stab_pol: Vec<Option<Polarization>>,
    pub stab_basis: Option<crate::jones::Basis>,
    pub module: Option<usize>,
    pub stokes_after_lock: Option<[f64; 3]>,
    pub clicks: Option<u64>,
    pub qber_window: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesEntry {
    pub frame_idx: u64,
    pub t: f64,
    pub module: usize,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesEntry {
    pub fn stokes(&self) -> StokesVector {
        StokesVector::new(self.s1, self.s2, self.s3)
    }
}

/// QBER after one quantum burst.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberPoint {
    pub frame_idx: u64,
    /// End of the burst.
    pub t: f64,
    pub qber_burst: Option<f64>,
    pub qber_window: Option<f64>,
}

/// Sifted-key totals per intensity class (signal, decoy, vacuum).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SiftStats {
    pub gates: u64,
    pub sifted: [u64; 3],
    pub errors: [u64; 3],
    pub double_clicks: u64,
}

impl SiftStats {
    pub fn mismatch_rate(&self, class: IntensityClass) -> Option<f64> {
        let i = class.index();
        (self.sifted[i] > 0).then(|| self.errors[i] as f64 / self.sifted[i] as f64)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SessionOutput {
    pub sequence: Vec<FramePlan>,
    pub counts: CountTable,
    pub log: Vec<FrameLogRecord>,
    pub stokes_log: Vec<StokesEntry>,
    pub qber_timeline: Vec<QberPoint>,
    pub sift: SiftStats,
    /// The first `keep_keys` sifted bits of Alice and Bob.
    pub keys: (SiftedKey, SiftedKey),
}

/// Per-burst signal tallies over matching-basis detectors.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    correct_det: u64,
    correct_trg: u64,
    wrong_det: u64,
    wrong_trg: u64,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.correct_det += o.correct_det;
        self.correct_trg += o.correct_trg;
        self.wrong_det += o.wrong_det;
        self.wrong_trg += o.wrong_trg;
    }

    fn qber(&self) -> Option<f64> {
        if self.correct_trg == 0 || self.wrong_trg == 0 {
            return None;
        }
        let pc = self.correct_det as f64 / self.correct_trg as f64;
        let pw = self.wrong_det as f64 / self.wrong_trg as f64;
        (pc + pw > 0.0).then(|| pw / (pc + pw))
    }
}

struct Module {
    det: MeasurementModule,
    stab: StabilizerState,
    locked_to: Option<Polarization>,
}

fn pol_index(p: Polarization) -> usize {
    match p {
        Polarization::H => 0,
        Polarization::V => 1,
        Polarization::R => 2,
        Polarization::L => 3,
    }
}

const H_TARGET: StokesVector = StokesVector { s1: 1.0, s2: 0.0, s3: 0.0 };

fn drift_for<R: Rng + ?Sized>(ch: &mut ChannelState, span: f64, step: f64, params: &DriftParams, rng: &mut R) {
    let n = (span / step).ceil().max(1.0) as usize;
    let dt = span / n as f64;
    for _ in 0..n {
        *ch = step_drift(ch, dt, params, rng);
    }
}

/// Runs whole Q-frames until `duration` seconds are used up. `keep_keys`
/// bounds the sifted bits retained in the output.
pub fn run_session(
    schedule: &SessionSchedule,
    link: &LinkConfig,
    duration: f64,
    seed: u64,
    keep_keys: usize,
) -> Result<SessionOutput, SessionError> {
    schedule.validate()?;
    link.detector.params.validate().map_err(|e| SessionError::Link(e.to_string()))?;
    let frames = (duration / schedule.frame_s() + 1e-9).floor() as u64;
    if frames == 0 {
        return Err(SessionError::Duration(duration));
    }

    let mut rng_channel = stream(seed, Stream::Channel);
    let mut rng_source = stream(seed, Stream::Source);
    let mut rng_det = stream(seed, Stream::Detector);
    let mut rng_stab = stream(seed, Stream::Stabilizer);

    let sequence = measurement_sequence(schedule.pattern);
    let mut det_model = link.detector;
    det_model.gate_rate = schedule.gate_rate;
    let lp = det_model.params;
    let photons = [PhotonNumber::new(lp.mu), PhotonNumber::new(lp.nu), PhotonNumber::new(0.0)];

    let mut modules: Vec<Module> = (0..schedule.pattern.modules())
        .map(|_| Module {
            det: MeasurementModule::new(det_model),
            stab: StabilizerState::new(crate::jones::Basis::Linear, link.sigma_residual),
            locked_to: None,
        })
        .collect();

    let mut ch = ChannelState::ideal();
    let mut out = SessionOutput { sequence: sequence.clone(), ..Default::default() };
    let mut window: VecDeque<(f64, Tally)> = VecDeque::new();
    let mut window_sum = Tally::default();
    let step = schedule.drift_step_s;
    let gates = schedule.gates_per_burst() as usize;
    let slices = ((schedule.qdata_s / step).ceil().max(1.0)) as usize;
    let mut clicks_buf: Vec<Option<BobClick>> = Vec::with_capacity(gates);

    for k in 0..frames {
        let t0 = k as f64 * schedule.frame_s();
        let plan = sequence[(k as usize) % sequence.len()];
        let m = module_for_frame(schedule.pattern, k as usize);

        // C-frame: header over the fibre, then lock at its end.
        let header = CFrameHeader::new(plan.cframe, schedule.cframe_s)?;
        let received = CFrameHeader::from_pulses(&header.to_pulses()?)?;
        ch.t_now = t0;
        drift_for(&mut ch, schedule.cframe_s, step, &link.drift, &mut rng_channel);
        let stab_pol = received.stabilization_pol;
        {
            let md = &mut modules[m];
            if link.stabilizer_enabled {
                let measured = stokes_from_jones(&md.stab.comp.mul(&ch.u).apply(&stab_pol.jones()));
                md.stab = stabilizer_update(&md.stab, &measured, &H_TARGET, &mut rng_stab);
                md.stab.reference = stab_pol.basis();
            }
            md.locked_to = Some(stab_pol);
        }
        let after = stokes_from_jones(&modules[m].stab.comp.mul(&ch.u).apply(&stab_pol.jones()));
        out.stokes_log.push(StokesEntry { frame_idx: k, t: t0 + schedule.cframe_s, module: m, s1: after.s1, s2: after.s2, s3: after.s3 });
        let stab_pols: Vec<Option<Polarization>> = modules.iter().map(|md| md.locked_to).collect();
        out.log.push(FrameLogRecord {
            schema_version: LOG_SCHEMA_VERSION,
            frame_idx: k,
            kind: FrameKind::Cframe,
            t_start: t0,
            stab_pol: stab_pols.clone(),
            stab_basis: Some(stab_pol.basis()),
            module: Some(m),
            stokes_after_lock: Some(after.as_array()),
            clicks: None,
            qber_window: None,
        });

        // Quantum burst.
        let t_burst = t0 + schedule.cframe_s;
        let frame = QFrame::generate(received, schedule, plan.qubit, &mut rng_source);
        clicks_buf.clear();
        let mut tally = Tally::default();
        let mut burst_clicks = 0u64;
        let mut gate = 0usize;
        for s in 0..slices {
            let end = gates * (s + 1) / slices;
            // Probability of the H port per module and prepared state.
            let mut p_h = [[0.0f64; 4]; 2];
            for (mi, md) in modules.iter().enumerate() {
                let u: JonesMatrix = md.stab.comp.mul(&ch.u);
                for p in Polarization::ALL {
                    let w = u.apply(&p.jones());
                    p_h[mi][pol_index(p)] = w.j1.norm_sqr() / w.power();
                }
            }
            while gate < end {
                let slot = frame.qdata[gate];
                let pol = slot.polarization();
                let mut resolved: [Option<(usize, u8)>; 2] = [None, None];
                for (mi, md) in modules.iter_mut().enumerate() {
                    let Some(locked) = md.locked_to else { continue };
                    let o =
                        md.det.detect_with_port_probability(p_h[mi][pol_index(pol)], &photons[slot.intensity_class.index()], &mut rng_det);
                    for port in 0..2u8 {
                        if !o.triggered[port as usize] {
                            continue;
                        }
                        let key = CountKey {
                            pol_cframe: locked,
                            pol_qubit: pol,
                            intensity_class: slot.intensity_class,
                            detector_id: (mi as u8) * 2 + port,
                        };
                        let hit = o.raw[port as usize];
                        out.counts.add(key, hit);
                        burst_clicks += hit as u64;
                        if slot.intensity_class == IntensityClass::Signal {
                            match key.is_correct_detector() {
                                Some(true) => {
                                    tally.correct_trg += 1;
                                    tally.correct_det += hit as u64;
                                }
                                Some(false) => {
                                    tally.wrong_trg += 1;
                                    tally.wrong_det += hit as u64;
                                }
                                None => {}
                            }
                        }
                    }
                    if o.double_click() {
                        out.sift.double_clicks += 1;
                    }
                    resolved[mi] = o.resolved.map(|port| (mi, port));
                }
                let pick = match resolved {
                    [Some(a), Some(b)] => Some(if rng_det.random::<bool>() { a } else { b }),
                    [a, b] => a.or(b),
                };
                clicks_buf.push(pick.map(|(mi, port)| {
                    let locked = modules[mi].locked_to.expect("clicking module is locked");
                    let seen = if port == 0 { locked } else { locked.orthogonal() };
                    BobClick { basis: seen.basis(), bit: seen.bit() }
                }));
                gate += 1;
            }
            ch.t_now = t_burst + schedule.qdata_s * s as f64 / slices as f64;
            drift_for(&mut ch, schedule.qdata_s / slices as f64, step, &link.drift, &mut rng_channel);
        }

        let (mut ka, mut kb) = (SiftedKey::default(), SiftedKey::default());
        sift_burst(&frame.qdata, &clicks_buf, out.sift.gates, &mut ka, &mut kb);
        out.sift.gates += gates as u64;
        for i in 0..ka.len() {
            let c = ka.intensity_class[i].index();
            out.sift.sifted[c] += 1;
            out.sift.errors[c] += (ka.bits[i] != kb.bits[i]) as u64;
        }
        let room = keep_keys.saturating_sub(out.keys.0.len()).min(ka.len());
        if room > 0 {
            out.keys.0.bits.extend_from_slice(&ka.bits[..room]);
            out.keys.0.positions.extend_from_slice(&ka.positions[..room]);
            out.keys.0.intensity_class.extend_from_slice(&ka.intensity_class[..room]);
            out.keys.1.bits.extend_from_slice(&kb.bits[..room]);
            out.keys.1.positions.extend_from_slice(&kb.positions[..room]);
            out.keys.1.intensity_class.extend_from_slice(&kb.intensity_class[..room]);
        }

        let t_end = t_burst + schedule.qdata_s;
        window.push_back((t_end, tally));
        window_sum.add(&tally);
        while let Some((t, _)) = window.front() {
            if *t > t_end - schedule.qber_window_s + 1e-9 {
                break;
            }
            let (_, old) = window.pop_front().expect("front exists");
            window_sum.correct_det -= old.correct_det;
            window_sum.correct_trg -= old.correct_trg;
            window_sum.wrong_det -= old.wrong_det;
            window_sum.wrong_trg -= old.wrong_trg;
        }
        let qber_window = window_sum.qber();
        out.qber_timeline.push(QberPoint { frame_idx: k, t: t_end, qber_burst: tally.qber(), qber_window });
        out.log.push(FrameLogRecord {
            schema_version: LOG_SCHEMA_VERSION,
            frame_idx: k,
            kind: FrameKind::Qdata,
            t_start: t_burst,
            stab_pol: stab_pols,
            stab_basis: None,
            module: None,
            stokes_after_lock: None,
            clicks: Some(burst_clicks),
            qber_window,
        });
    }
    Ok(out)
}
