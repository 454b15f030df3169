//! Simulation and analysis toolkit for a polarization-encoded BB84 link
//! with decoy states and classical control frames.
//!
//! * [`jones`]: Jones calculus for the Faraday-mirror basic unit and the
//!   two-way polarization and intensity modulators.
//! * [`channel`]: drifting fibre birefringence, loss and the C-frame driven
//!   polarization stabilizer.
//! * [`photonics`]: faint-pulse source, gated detectors, closed-form
//!   detection statistics and per-detector count records.
//! * [`framing`]: Q-frame scheduling, the C-frame header codec, full link
//!   sessions and sifting.
//! * [`decoy`]: GLLP secret-key rate with fair-loss and decoy-state bounds.
//! * [`ldpc`]: one-way LDPC reconciliation with float and fixed-point
//!   sum-product decoding.
//! * [`config`]: the serializable run configuration.
//!
//! The guide in `book/` walks through each part; its code listings are
//! compiled and run as doc-tests of this crate.

// `!(x >= lo)` checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod decoy;
pub mod framing;
pub mod jones;
pub mod ldpc;
pub mod photonics;
pub mod rng;

/// Binary entropy `H2(x) = -x log2 x - (1-x) log2 (1-x)`, with `H2(0) = H2(1) = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/jones.md")]
    mod jones {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/photonics.md")]
    mod photonics {}
    #[doc = include_str!("../../../book/src/framing.md")]
    mod framing {}
    #[doc = include_str!("../../../book/src/decoy.md")]
    mod decoy {}
    #[doc = include_str!("../../../book/src/ldpc.md")]
    mod ldpc {}
    #[doc = include_str!("../../../book/src/fixed_point.md")]
    mod fixed_point {}
}
