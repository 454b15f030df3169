//! C-frame header wire format.
//!
//! Fixed 14-byte layout, big-endian:
//!
//! | offset | size | field         |
//! |-------:|-----:|---------------|
//! | 0      | 2    | preamble `0x7E5A` |
//! | 2      | 1    | version (`1`) |
//! | 3      | 2    | sender        |
//! | 5      | 2    | receiver      |
//! | 7      | 1    | encoding      |
//! | 8      | 1    | protocol      |
//! | 9      | 1    | stab_pol      |
//! | 10     | 2    | duration_ms   |
//! | 12     | 2    | CRC-16        |
//!
//! The CRC is CRC-16/IBM-3740 (poly `0x1021`, init `0xFFFF`) over bytes
//! 2..12. On the fibre each byte is sent as four strong pulses carrying two
//! bits each, most significant pair first, using the symbol map
//! `00 -> H, 01 -> V, 10 -> R, 11 -> L`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::STABILIZER_RESPONSE_TIME;
use crate::jones::Polarization;

pub const PREAMBLE: u16 = 0x7E5A;
pub const WIRE_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 14;
pub const PULSES_PER_HEADER: usize = HEADER_LEN * 4;

const CRC16: crc::Crc<u16> = crc::Crc::<u16>::new(&crc::CRC_16_IBM_3740);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeaderError {
    #[error("header needs {HEADER_LEN} bytes, got {0}")]
    Length(usize),
    #[error("bad preamble {0:#06x}")]
    Preamble(u16),
    #[error("unsupported wire version {0}")]
    Version(u8),
    #[error("CRC mismatch: computed {computed:#06x}, received {received:#06x}")]
    Crc { computed: u16, received: u16 },
    #[error("unknown {field} code {code}")]
    Code { field: &'static str, code: u8 },
    #[error("C-frame duration {0} s is shorter than the stabilizer response time")]
    TooShort(f64),
    #[error("C-frame duration {0} s does not fit the 16-bit millisecond field")]
    TooLong(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Polarization,
    TimeBin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Bb84Decoy,
    Bb84,
    B92,
}

impl Encoding {
    pub const ALL: [Encoding; 2] = [Encoding::Polarization, Encoding::TimeBin];
    fn code(self) -> u8 {
        self as u8
    }
    fn from_code(c: u8) -> Result<Self, HeaderError> {
        Self::ALL.get(c as usize).copied().ok_or(HeaderError::Code { field: "encoding", code: c })
    }
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Bb84Decoy, Protocol::Bb84, Protocol::B92];
    fn code(self) -> u8 {
        self as u8
    }
    fn from_code(c: u8) -> Result<Self, HeaderError> {
        Self::ALL.get(c as usize).copied().ok_or(HeaderError::Code { field: "protocol", code: c })
    }
}

fn pol_code(p: Polarization) -> u8 {
    match p {
        Polarization::H => 0,
        Polarization::V => 1,
        Polarization::R => 2,
        Polarization::L => 3,
    }
}

fn pol_from_code(c: u8) -> Result<Polarization, HeaderError> {
    match c {
        0 => Ok(Polarization::H),
        1 => Ok(Polarization::V),
        2 => Ok(Polarization::R),
        3 => Ok(Polarization::L),
        _ => Err(HeaderError::Code { field: "stab_pol", code: c }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CFrameHeader {
    pub sender_addr: u16,
    pub receiver_addr: u16,
    pub encoding: Encoding,
    pub protocol: Protocol,
    pub stabilization_pol: Polarization,
    /// Seconds; carried on the wire in whole milliseconds.
    pub duration: f64,
}

impl CFrameHeader {
    pub fn new(stabilization_pol: Polarization, duration: f64) -> Result<Self, HeaderError> {
        let h = CFrameHeader {
            sender_addr: 1,
            receiver_addr: 2,
            encoding: Encoding::Polarization,
            protocol: Protocol::Bb84Decoy,
            stabilization_pol,
            duration,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), HeaderError> {
        if !(self.duration >= STABILIZER_RESPONSE_TIME) {
            return Err(HeaderError::TooShort(self.duration));
        }
        if (self.duration * 1000.0).round() > u16::MAX as f64 {
            return Err(HeaderError::TooLong(self.duration));
        }
        Ok(())
    }

    pub fn duration_ms(&self) -> u16 {
        (self.duration * 1000.0).round() as u16
    }

    pub fn to_bytes(&self) -> Result<[u8; HEADER_LEN], HeaderError> {
        self.validate()?;
        let mut b = [0u8; HEADER_LEN];
        b[0..2].copy_from_slice(&PREAMBLE.to_be_bytes());
        b[2] = WIRE_VERSION;
        b[3..5].copy_from_slice(&self.sender_addr.to_be_bytes());
        b[5..7].copy_from_slice(&self.receiver_addr.to_be_bytes());
        b[7] = self.encoding.code();
        b[8] = self.protocol.code();
        b[9] = pol_code(self.stabilization_pol);
        b[10..12].copy_from_slice(&self.duration_ms().to_be_bytes());
        let crc = CRC16.checksum(&b[2..12]);
        b[12..14].copy_from_slice(&crc.to_be_bytes());
        Ok(b)
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, HeaderError> {
        if b.len() != HEADER_LEN {
            return Err(HeaderError::Length(b.len()));
        }
        let be = |i: usize| u16::from_be_bytes([b[i], b[i + 1]]);
        if be(0) != PREAMBLE {
            return Err(HeaderError::Preamble(be(0)));
        }
        let computed = CRC16.checksum(&b[2..12]);
        if computed != be(12) {
            return Err(HeaderError::Crc { computed, received: be(12) });
        }
        if b[2] != WIRE_VERSION {
            return Err(HeaderError::Version(b[2]));
        }
        Ok(CFrameHeader {
            sender_addr: be(3),
            receiver_addr: be(5),
            encoding: Encoding::from_code(b[7])?,
            protocol: Protocol::from_code(b[8])?,
            stabilization_pol: pol_from_code(b[9])?,
            duration: be(10) as f64 / 1000.0,
        })
    }

    /// Strong-pulse polarization sequence of the header.
    pub fn to_pulses(&self) -> Result<Vec<Polarization>, HeaderError> {
        let bytes = self.to_bytes()?;
        let mut out = Vec::with_capacity(PULSES_PER_HEADER);
        for byte in bytes {
            for shift in [6, 4, 2, 0] {
                out.push(pol_from_code((byte >> shift) & 3).expect("two-bit symbol"));
            }
        }
        Ok(out)
    }

    pub fn from_pulses(pulses: &[Polarization]) -> Result<Self, HeaderError> {
        if pulses.len() != PULSES_PER_HEADER {
            return Err(HeaderError::Length(pulses.len() / 4));
        }
        let bytes: Vec<u8> = pulses.chunks(4).map(|c| c.iter().fold(0u8, |acc, p| (acc << 2) | pol_code(*p))).collect();
        Self::from_bytes(&bytes)
    }
}
