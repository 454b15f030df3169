//! Q-frame protocol: C-frame scheduling and headers, quantum-data bursts,
//! measurement sequences, full link sessions and sifting.
//!
//! A Q-frame is a C-frame (strong classical pulses carrying a header and
//! serving as the stabilizer reference) followed by a quantum-data burst.
//! Bob's stabilizer rotates the C-frame polarization onto the horizontal
//! port of the measurement module that the frame addresses, so the module
//! measures in the basis of that C-frame until its next lock.

mod header;
mod session;

pub use header::{CFrameHeader, Encoding, HeaderError, Protocol, HEADER_LEN, PREAMBLE, PULSES_PER_HEADER, WIRE_VERSION};
pub use session::{
    run_session, FrameKind, FrameLogRecord, LinkConfig, QberPoint, SessionError, SessionOutput, SiftStats, StokesEntry, LOG_SCHEMA_VERSION,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::STABILIZER_RESPONSE_TIME;
use crate::jones::{Basis, Polarization};

/// Intensity class of a faint pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityClass {
    Signal,
    Decoy,
    Vacuum,
}

impl IntensityClass {
    pub const ALL: [IntensityClass; 3] = [IntensityClass::Signal, IntensityClass::Decoy, IntensityClass::Vacuum];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Per-pulse intensity-class probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoyMixture {
    pub signal: f64,
    pub decoy: f64,
    pub vacuum: f64,
}

impl Default for DecoyMixture {
    fn default() -> Self {
        DecoyMixture { signal: 0.875, decoy: 0.0625, vacuum: 0.0625 }
    }
}

impl DecoyMixture {
    pub fn signal_only() -> Self {
        DecoyMixture { signal: 1.0, decoy: 0.0, vacuum: 0.0 }
    }

    pub fn validate(&self) -> Result<(), FramingError> {
        let parts = [self.signal, self.decoy, self.vacuum];
        if parts.iter().any(|p| !(*p >= 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(FramingError::Mixture(parts));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> IntensityClass {
        let u: f64 = rng.random();
        if u < self.signal {
            IntensityClass::Signal
        } else if u < self.signal + self.decoy {
            IntensityClass::Decoy
        } else {
            IntensityClass::Vacuum
        }
    }
}

/// Measurement pattern of a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// One measurement module; every (C-frame, qubit) pair of two fixed
    /// polarizations in turn.
    TwoDetector,
    /// Two modules behind the 50/50 splitter; odd frames lock module 1,
    /// even frames module 2.
    FourDetector,
    /// Two modules, C-frames cycling H, R, V, L and random qubits.
    Production,
}

impl Pattern {
    pub fn modules(self) -> usize {
        match self {
            Pattern::TwoDetector => 1,
            Pattern::FourDetector | Pattern::Production => 2,
        }
    }
}

/// One entry of a measurement sequence. `qubit = None` means random BB84
/// states per pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePlan {
    pub cframe: Polarization,
    pub qubit: Option<Polarization>,
}

fn parse_pairs(s: &str) -> Vec<FramePlan> {
    s.split_whitespace()
        .map(|p| {
            let mut c = p.chars();
            let cframe = Polarization::from_letter(c.next().unwrap()).unwrap();
            let qubit = Polarization::from_letter(c.next().unwrap());
            FramePlan { cframe, qubit }
        })
        .collect()
}

/// C-frame cycle of the production pattern.
pub const PRODUCTION_CYCLE: [Polarization; 4] = [Polarization::H, Polarization::R, Polarization::V, Polarization::L];

/// The repeating frame sequence of a pattern.
pub fn measurement_sequence(pattern: Pattern) -> Vec<FramePlan> {
    match pattern {
        Pattern::TwoDetector => parse_pairs("HH HL HV HR LH LL LV LR VH VL VV VR RH RL RV RR"),
        Pattern::FourDetector => parse_pairs(
            "HH RH VH LH RH HH LH VH HR RR VR LR RR HR LR VR \
             HV RV VV LV RV HV LV VV HL RL VL LL RL HL LL VL",
        ),
        Pattern::Production => PRODUCTION_CYCLE.iter().map(|&cframe| FramePlan { cframe, qubit: None }).collect(),
    }
}

/// Measurement module locked by the `index`-th frame (0-based).
pub fn module_for_frame(pattern: Pattern, index: usize) -> usize {
    index % pattern.modules()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionSchedule {
    pub cframe_s: f64,
    pub qdata_s: f64,
    /// Laser repetition rate.
    pub source_rate: f64,
    /// Detector gate rate; only gated pulses are simulated.
    pub gate_rate: f64,
    pub pattern: Pattern,
    pub mixture: DecoyMixture,
    /// Span of the rolling QBER window.
    pub qber_window_s: f64,
    /// Drift integration step.
    pub drift_step_s: f64,
}

impl Default for SessionSchedule {
    fn default() -> Self {
        SessionSchedule {
            cframe_s: 5.0,
            qdata_s: 2.0,
            source_rate: 50e6,
            gate_rate: 1e6,
            pattern: Pattern::TwoDetector,
            mixture: DecoyMixture::default(),
            qber_window_s: 3600.0,
            drift_step_s: 0.25,
        }
    }
}

impl SessionSchedule {
    pub fn frame_s(&self) -> f64 {
        self.cframe_s + self.qdata_s
    }

    /// Gates per quantum burst.
    pub fn gates_per_burst(&self) -> u64 {
        (self.qdata_s * self.gate_rate).round() as u64
    }

    pub fn validate(&self) -> Result<(), FramingError> {
        if !(self.cframe_s >= STABILIZER_RESPONSE_TIME) {
            return Err(FramingError::Schedule("cframe_s must be at least the stabilizer response time"));
        }
        if !(self.qdata_s > 0.0) {
            return Err(FramingError::Schedule("qdata_s must be positive"));
        }
        if !(self.gate_rate > 0.0 && self.source_rate >= self.gate_rate) {
            return Err(FramingError::Schedule("need 0 < gate_rate <= source_rate"));
        }
        if !(self.qber_window_s > 0.0 && self.drift_step_s > 0.0) {
            return Err(FramingError::Schedule("qber_window_s and drift_step_s must be positive"));
        }
        self.mixture.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DutyCycle {
    pub current: f64,
    /// With the C-frame shortened to the stabilizer response time.
    pub projected: f64,
}

/// Fraction of time spent on quantum data.
pub fn duty_cycle_report(schedule: &SessionSchedule) -> DutyCycle {
    let ratio = |c: f64| {
        let total = c + schedule.qdata_s;
        if total > 0.0 {
            schedule.qdata_s / total
        } else {
            0.0
        }
    };
    DutyCycle { current: ratio(schedule.cframe_s), projected: ratio(STABILIZER_RESPONSE_TIME.min(schedule.cframe_s)) }
}

/// One gated faint pulse as prepared by Alice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitSlot {
    pub basis: Basis,
    pub bit: u8,
    pub intensity_class: IntensityClass,
}

impl QubitSlot {
    pub fn polarization(&self) -> Polarization {
        Polarization::from_basis_bit(self.basis, self.bit)
    }
}

/// A C-frame header with the quantum data that follows it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QFrame {
    pub header: CFrameHeader,
    pub qdata: Vec<QubitSlot>,
    pub qdata_duration: f64,
}

impl QFrame {
    /// Draws the quantum data of one frame; a fixed `qubit` overrides the
    /// random basis and bit.
    pub fn generate<R: Rng + ?Sized>(header: CFrameHeader, schedule: &SessionSchedule, qubit: Option<Polarization>, rng: &mut R) -> Self {
        let n = schedule.gates_per_burst() as usize;
        let mut qdata = Vec::with_capacity(n);
        for _ in 0..n {
            let (basis, bit) = match qubit {
                Some(p) => (p.basis(), p.bit()),
                None => (if rng.random::<bool>() { Basis::Circular } else { Basis::Linear }, rng.random_range(0..2u8)),
            };
            qdata.push(QubitSlot { basis, bit, intensity_class: schedule.mixture.sample(rng) });
        }
        QFrame { header, qdata, qdata_duration: schedule.qdata_s }
    }
}

/// Bob's result for one gate after double-click resolution across modules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BobClick {
    pub basis: Basis,
    pub bit: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftedKey {
    pub bits: Vec<u8>,
    pub positions: Vec<u64>,
    pub intensity_class: Vec<IntensityClass>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    fn push(&mut self, bit: u8, pos: u64, class: IntensityClass) {
        self.bits.push(bit);
        self.positions.push(pos);
        self.intensity_class.push(class);
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FramingError {
    #[error("misaligned streams: {alice} qubits vs {bob} gates")]
    Misaligned { alice: usize, bob: usize },
    #[error("invalid schedule: {0}")]
    Schedule(&'static str),
    #[error("decoy mixture {0:?} must be non-negative and sum to 1")]
    Mixture([f64; 3]),
}

/// Keeps gates where Bob registered a single click in Alice's basis.
/// Positions index the concatenated gate streams.
pub fn sift(alice: &[QFrame], bob: &[Vec<Option<BobClick>>]) -> Result<(SiftedKey, SiftedKey), FramingError> {
    if alice.len() != bob.len() {
        return Err(FramingError::Misaligned { alice: alice.len(), bob: bob.len() });
    }
    let (mut ka, mut kb) = (SiftedKey::default(), SiftedKey::default());
    let mut offset = 0u64;
    for (frame, clicks) in alice.iter().zip(bob) {
        if frame.qdata.len() != clicks.len() {
            return Err(FramingError::Misaligned { alice: frame.qdata.len(), bob: clicks.len() });
        }
        sift_burst(&frame.qdata, clicks, offset, &mut ka, &mut kb);
        offset += clicks.len() as u64;
    }
    Ok((ka, kb))
}

pub(crate) fn sift_burst(qdata: &[QubitSlot], clicks: &[Option<BobClick>], offset: u64, ka: &mut SiftedKey, kb: &mut SiftedKey) {
    for (i, (q, c)) in qdata.iter().zip(clicks).enumerate() {
        if let Some(c) = c {
            if c.basis == q.basis {
                ka.push(q.bit, offset + i as u64, q.intensity_class);
                kb.push(c.bit, offset + i as u64, q.intensity_class);
            }
        }
    }
}
