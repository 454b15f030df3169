//! Per-detector detection and trigger counts, keyed by the C-frame and qubit
//! polarizations and the intensity class, with a CSV form.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::framing::IntensityClass;
use crate::jones::Polarization;

pub const COUNTS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: detections {detections} exceed triggers {triggers}")]
    DetectionsExceedTriggers { row: usize, detections: u64, triggers: u64 },
    #[error("row {row}: unsupported schema_version {version}")]
    Schema { row: usize, version: u32 },
}

/// Row label. `pol_cframe` is the polarization of the C-frame the detector's
/// module last locked on; port 0 of that module carries this polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountKey {
    pub pol_cframe: Polarization,
    pub pol_qubit: Polarization,
    pub intensity_class: IntensityClass,
    /// `module * 2 + port`.
    pub detector_id: u8,
}

impl CountKey {
    pub fn port(&self) -> u8 {
        self.detector_id % 2
    }

    /// `Some(true)` for the detector matching the qubit, `Some(false)` for
    /// the orthogonal one, `None` if the bases differ.
    pub fn is_correct_detector(&self) -> Option<bool> {
        if self.pol_cframe.basis() != self.pol_qubit.basis() {
            return None;
        }
        let expected_port = if self.pol_qubit == self.pol_cframe { 0 } else { 1 };
        Some(self.port() == expected_port)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub detections: u64,
    pub triggers: u64,
}

impl Counts {
    pub fn probability(&self) -> Option<f64> {
        (self.triggers > 0).then(|| self.detections as f64 / self.triggers as f64)
    }

    fn add(&mut self, o: Counts) {
        self.detections += o.detections;
        self.triggers += o.triggers;
    }
}

/// Gain and error rate of one intensity class with binomial uncertainties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEstimate {
    pub q: f64,
    pub e: f64,
    pub sigma_q: f64,
    pub sigma_e: f64,
    pub p_correct: f64,
    pub p_wrong: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    #[serde(default = "default_schema")]
    schema_version: u32,
    pol_cframe: Polarization,
    pol_qubit: Polarization,
    intensity_class: IntensityClass,
    detector_id: u8,
    detections: u64,
    triggers: u64,
}

fn default_schema() -> u32 {
    COUNTS_SCHEMA_VERSION
}

/// The DetectionRecord set of a run, ordered by key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountTable {
    cells: BTreeMap<CountKey, Counts>,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: CountKey, detected: bool) {
        let c = self.cells.entry(key).or_default();
        c.triggers += 1;
        c.detections += detected as u64;
    }

    pub fn add_counts(&mut self, key: CountKey, counts: Counts) {
        self.cells.entry(key).or_default().add(counts);
    }

    pub fn merge(&mut self, other: &CountTable) {
        for (k, c) in &other.cells {
            self.add_counts(*k, *c);
        }
    }

    pub fn get(&self, key: &CountKey) -> Counts {
        self.cells.get(key).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CountKey, &Counts)> {
        self.cells.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Pooled correct and wrong detector counts over matching-basis cells.
    pub fn pooled(&self, class: IntensityClass) -> (Counts, Counts) {
        let (mut correct, mut wrong) = (Counts::default(), Counts::default());
        for (k, c) in self.cells.iter().filter(|(k, _)| k.intensity_class == class) {
            match k.is_correct_detector() {
                Some(true) => correct.add(*c),
                Some(false) => wrong.add(*c),
                None => {}
            }
        }
        (correct, wrong)
    }

    /// `Q = P_correct + P_wrong`, `E = P_wrong / Q`, or `None` without
    /// triggers on either detector or without any detection.
    pub fn gain(&self, class: IntensityClass) -> Option<GainEstimate> {
        let (c, w) = self.pooled(class);
        let (pc, pw) = (c.probability()?, w.probability()?);
        let q = pc + pw;
        if q <= 0.0 {
            return None;
        }
        let var_c = pc * (1.0 - pc) / c.triggers as f64;
        let var_w = pw * (1.0 - pw) / w.triggers as f64;
        let e = pw / q;
        let sigma_e = ((pw / (q * q)).powi(2) * var_c + (pc / (q * q)).powi(2) * var_w).sqrt();
        Some(GainEstimate { q, e, sigma_q: (var_c + var_w).sqrt(), sigma_e, p_correct: pc, p_wrong: pw })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), RecordError> {
        let mut wr = csv::Writer::from_writer(w);
        for (k, c) in &self.cells {
            wr.serialize(Row {
                schema_version: COUNTS_SCHEMA_VERSION,
                pol_cframe: k.pol_cframe,
                pol_qubit: k.pol_qubit,
                intensity_class: k.intensity_class,
                detector_id: k.detector_id,
                detections: c.detections,
                triggers: c.triggers,
            })?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the CSV form; the `schema_version` column is optional.
    pub fn read_csv<R: Read>(r: R) -> Result<Self, RecordError> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let mut t = CountTable::new();
        for (i, row) in rd.deserialize::<Row>().enumerate() {
            let row = row?;
            let line = i + 2;
            if row.schema_version != COUNTS_SCHEMA_VERSION {
                return Err(RecordError::Schema { row: line, version: row.schema_version });
            }
            if row.detections > row.triggers {
                return Err(RecordError::DetectionsExceedTriggers { row: line, detections: row.detections, triggers: row.triggers });
            }
            let key = CountKey {
                pol_cframe: row.pol_cframe,
                pol_qubit: row.pol_qubit,
                intensity_class: row.intensity_class,
                detector_id: row.detector_id,
            };
            t.add_counts(key, Counts { detections: row.detections, triggers: row.triggers });
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Polarization::*;

    fn key(c: Polarization, q: Polarization, d: u8) -> CountKey {
        CountKey { pol_cframe: c, pol_qubit: q, intensity_class: IntensityClass::Signal, detector_id: d }
    }

    #[test]
    fn correct_detector_labels() {
        assert_eq!(key(H, H, 0).is_correct_detector(), Some(true));
        assert_eq!(key(H, V, 1).is_correct_detector(), Some(true));
        assert_eq!(key(V, V, 2).is_correct_detector(), Some(true));
        assert_eq!(key(V, H, 0).is_correct_detector(), Some(false));
        assert_eq!(key(H, R, 0).is_correct_detector(), None);
    }

    #[test]
    fn csv_round_trip() {
        let mut t = CountTable::new();
        t.add_counts(key(H, H, 0), Counts { detections: 40_000, triggers: 13_000_000 });
        t.add_counts(key(H, H, 1), Counts { detections: 1_569, triggers: 13_254_716 });
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("schema_version,pol_cframe,pol_qubit,intensity_class,detector_id,detections,triggers\n"));
        assert_eq!(CountTable::read_csv(&buf[..]).unwrap(), t);
        let g = t.gain(IntensityClass::Signal).unwrap();
        assert!((g.e - g.p_wrong / (g.p_correct + g.p_wrong)).abs() < 1e-15);
    }

    #[test]
    fn rejects_detections_above_triggers() {
        let text = "pol_cframe,pol_qubit,intensity_class,detector_id,detections,triggers\nH,H,signal,0,5,4\n";
        assert!(matches!(CountTable::read_csv(text.as_bytes()), Err(RecordError::DetectionsExceedTriggers { .. })));
    }

    #[test]
    fn missing_class_has_no_gain() {
        assert!(CountTable::new().gain(IntensityClass::Decoy).is_none());
    }
}
