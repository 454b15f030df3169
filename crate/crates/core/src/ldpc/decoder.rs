//! Probability-domain sum-product decoding.
//!
//! Messages are stored as the probability that the bit is one:
//! `q1[e] = P'_1(i, j)` from bit to check and `r1[e] = r_{alpha_j=1}(i, j)`
//! from check to bit, with `P_0 = 1 - P_1` and `r_0 = 1 - r_1`.
//!
//! The check node uses the odd-parity recursion
//! `odd(A u B) = odd(A) (1 - odd(B)) + (1 - odd(A)) odd(B)` with prefix and
//! suffix accumulations to leave each edge out; this equals the sum over
//! all parity-consistent assignments of the other bits. The variable node
//! multiplies the prior with the `r` messages of all other checks and
//! normalizes.

use serde::{Deserialize, Serialize};

use super::fixed::{fixed_normalize, FixedFormat, FixedPoint};
use super::{LdpcError, ParityCheckMatrix};

/// Smallest QBER used to build priors in float mode.
pub const FLOAT_QBER_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    Float,
    Fixed(u32),
}

impl Arithmetic {
    pub fn label(self) -> String {
        match self {
            Arithmetic::Float => "float".into(),
            Arithmetic::Fixed(b) => format!("fixed{b}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self, LdpcError> {
        match s {
            "float" => Ok(Arithmetic::Float),
            _ => {
                let bits = s.strip_prefix("fixed").and_then(|b| b.parse().ok()).ok_or(LdpcError::Arithmetic(s.to_string()))?;
                FixedFormat::new(bits)?;
                Ok(Arithmetic::Fixed(bits))
            }
        }
    }
}

/// Number representation used by the message updates.
pub trait Domain: Copy + Send + Sync {
    type V: Copy + PartialEq + PartialOrd + std::fmt::Debug + Send + Sync;
    fn from_f64(&self, x: f64) -> Self::V;
    fn to_f64(&self, v: Self::V) -> f64;
    fn zero(&self) -> Self::V;
    fn mul(&self, a: Self::V, b: Self::V) -> Self::V;
    fn add(&self, a: Self::V, b: Self::V) -> Self::V;
    fn complement(&self, a: Self::V) -> Self::V;
    /// Applied to every check-to-bit message.
    fn clamp_r(&self, r: Self::V) -> Self::V;
    /// Smallest admissible QBER for priors.
    fn qber_floor(&self) -> f64;
    /// Normalized `(P'_0, P'_1)` from the factor lists, or `None` if both
    /// products vanish.
    fn posterior(&self, f0: &[Self::V], f1: &[Self::V]) -> Option<(Self::V, Self::V)>;
    /// Normalizes already formed products; `None` defers to `posterior`.
    fn normalize(&self, q0: Self::V, q1: Self::V) -> Option<(Self::V, Self::V)>;

    fn odd(&self, a: Self::V, b: Self::V) -> Self::V {
        self.add(self.mul(a, self.complement(b)), self.mul(self.complement(a), b))
    }
}

/// IEEE double precision with a log-domain fallback on underflow.
#[derive(Debug, Clone, Copy, Default)]
pub struct FloatDomain;

impl Domain for FloatDomain {
    type V = f64;
    fn from_f64(&self, x: f64) -> f64 {
        x
    }
    fn to_f64(&self, v: f64) -> f64 {
        v
    }
    fn zero(&self) -> f64 {
        0.0
    }
    fn mul(&self, a: f64, b: f64) -> f64 {
        a * b
    }
    fn add(&self, a: f64, b: f64) -> f64 {
        a + b
    }
    fn complement(&self, a: f64) -> f64 {
        1.0 - a
    }
    fn clamp_r(&self, r: f64) -> f64 {
        r
    }
    fn qber_floor(&self) -> f64 {
        FLOAT_QBER_FLOOR
    }
    fn normalize(&self, q0: f64, q1: f64) -> Option<(f64, f64)> {
        let s = q0 + q1;
        if q0 > 0.0 && q1 > 0.0 && s.is_finite() {
            let p1 = q1 / s;
            Some((1.0 - p1, p1))
        } else {
            None
        }
    }
    fn posterior(&self, f0: &[f64], f1: &[f64]) -> Option<(f64, f64)> {
        let q0: f64 = f0.iter().product();
        let q1: f64 = f1.iter().product();
        let s = q0 + q1;
        if s > 0.0 && s.is_finite() && (q0 > 0.0 || f0.contains(&0.0)) && (q1 > 0.0 || f1.contains(&0.0)) {
            let p1 = q1 / s;
            return Some((1.0 - p1, p1));
        }
        let l0: f64 = f0.iter().map(|x| x.ln()).sum();
        let l1: f64 = f1.iter().map(|x| x.ln()).sum();
        if l0 == f64::NEG_INFINITY && l1 == f64::NEG_INFINITY {
            return None;
        }
        let p1 = 1.0 / (1.0 + (l0 - l1).exp());
        Some((1.0 - p1, p1))
    }
}

/// Unsigned fixed point with truncating products and the zero clamp on
/// both `q` and `r` values.
#[derive(Debug, Clone, Copy)]
pub struct FixedDomain(pub FixedFormat);

impl Domain for FixedDomain {
    type V = FixedPoint;
    fn from_f64(&self, x: f64) -> FixedPoint {
        self.0.from_f64(x)
    }
    fn to_f64(&self, v: FixedPoint) -> f64 {
        v.to_f64()
    }
    fn zero(&self) -> FixedPoint {
        self.0.zero()
    }
    fn mul(&self, a: FixedPoint, b: FixedPoint) -> FixedPoint {
        a.mul(b)
    }
    fn add(&self, a: FixedPoint, b: FixedPoint) -> FixedPoint {
        a.add(b)
    }
    fn complement(&self, a: FixedPoint) -> FixedPoint {
        a.complement()
    }
    fn clamp_r(&self, r: FixedPoint) -> FixedPoint {
        r.clamp_zero()
    }
    fn qber_floor(&self) -> f64 {
        self.0.lsb().to_f64()
    }
    fn normalize(&self, q0: FixedPoint, q1: FixedPoint) -> Option<(FixedPoint, FixedPoint)> {
        Some(fixed_normalize(q0, q1))
    }
    fn posterior(&self, f0: &[FixedPoint], f1: &[FixedPoint]) -> Option<(FixedPoint, FixedPoint)> {
        let prod = |f: &[FixedPoint]| f[1..].iter().fold(f[0], |acc, &x| acc.mul(x));
        Some(fixed_normalize(prod(f0), prod(f1)))
    }
}

/// Bit priors, edge messages and bit posteriors.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState<V> {
    pub received: Vec<u8>,
    /// `P_1(j)`.
    pub prior1: Vec<V>,
    /// `P'_1(i, j)` per edge.
    pub q1: Vec<V>,
    /// `r_{alpha_j=1}(i, j)` per edge.
    pub r1: Vec<V>,
    /// `P'_0(j)` and `P'_1(j)` from all checks.
    pub post0: Vec<V>,
    pub post1: Vec<V>,
    /// Variable-node updates where both products vanished even in the log
    /// domain; the prior was kept.
    pub degenerate_events: u64,
}

impl<V: Copy + PartialOrd> BeliefState<V> {
    /// Most likely value of each bit; ties keep the received bit.
    pub fn hard_decision(&self) -> Vec<u8> {
        (0..self.received.len())
            .map(|j| {
                let (p0, p1) = (self.post0[j], self.post1[j]);
                if p1 > p0 {
                    1
                } else if p0 > p1 {
                    0
                } else {
                    self.received[j]
                }
            })
            .collect()
    }
}

fn check_qber<D: Domain>(d: &D, qber: f64) -> Result<f64, LdpcError> {
    if !(0.0..0.5).contains(&qber) {
        return Err(LdpcError::Qber(qber));
    }
    Ok(qber.max(d.qber_floor()))
}

/// Priors `P_1(j) = 1 - qber` for a received one and `qber` otherwise;
/// every edge starts from its bit's prior.
pub fn init_beliefs_in<D: Domain>(d: &D, h: &ParityCheckMatrix, received: &[u8], qber: f64) -> Result<BeliefState<D::V>, LdpcError> {
    if received.len() != h.n() {
        return Err(LdpcError::Dimension { expected: h.n(), got: received.len() });
    }
    let qber = check_qber(d, qber)?;
    let (lo, hi) = (d.from_f64(qber), d.complement(d.from_f64(qber)));
    let prior1: Vec<D::V> = received.iter().map(|&b| if b & 1 == 1 { hi } else { lo }).collect();
    let q1 = (0..h.edges()).map(|e| prior1[h.edge_col(e)]).collect();
    let post1 = prior1.clone();
    let post0 = prior1.iter().map(|&p| d.complement(p)).collect();
    Ok(BeliefState {
        received: received.iter().map(|b| b & 1).collect(),
        prior1,
        q1,
        r1: vec![d.zero(); h.edges()],
        post0,
        post1,
        degenerate_events: 0,
    })
}

/// Float priors.
pub fn init_beliefs(h: &ParityCheckMatrix, received: &[u8], qber: f64) -> Result<BeliefState<f64>, LdpcError> {
    init_beliefs_in(&FloatDomain, h, received, qber)
}

/// Check-to-bit messages: probability that check `i` is satisfied given
/// `alpha_j = 1` and the current `q` messages of the other bits.
pub fn check_node_update_in<D: Domain>(
    d: &D,
    state: &mut BeliefState<D::V>,
    h: &ParityCheckMatrix,
    parity: &[u8],
) -> Result<(), LdpcError> {
    if parity.len() != h.m() {
        return Err(LdpcError::Dimension { expected: h.m(), got: parity.len() });
    }
    let mut prefix = Vec::with_capacity(h.row_weight() + 1);
    for (i, &p) in parity.iter().enumerate() {
        let edges = h.row_edges(i);
        prefix.clear();
        prefix.push(d.zero());
        for e in edges.clone() {
            let last = *prefix.last().unwrap();
            prefix.push(d.odd(last, state.q1[e]));
        }
        let mut suffix = d.zero();
        for (k, e) in edges.clone().enumerate().rev() {
            let odd_others = d.odd(prefix[k], suffix);
            let r = if p & 1 == 0 { odd_others } else { d.complement(odd_others) };
            state.r1[e] = d.clamp_r(r);
            suffix = d.odd(suffix, state.q1[e]);
        }
    }
    Ok(())
}

pub fn check_node_update(state: &mut BeliefState<f64>, h: &ParityCheckMatrix, parity: &[u8]) -> Result<(), LdpcError> {
    check_node_update_in(&FloatDomain, state, h, parity)
}

/// Bit-to-check messages excluding each edge's own check, and the full
/// posteriors.
pub fn variable_node_update_in<D: Domain>(d: &D, state: &mut BeliefState<D::V>, h: &ParityCheckMatrix) {
    let mut f0 = Vec::new();
    let mut f1 = Vec::new();
    for j in 0..h.n() {
        let edges = h.col_edges(j);
        let p1 = state.prior1[j];
        let p0 = d.complement(p1);
        for skip in 0..=edges.len() {
            // products in edge order, the prior first
            let (mut q0, mut q1) = (p0, p1);
            for (k, &e) in edges.iter().enumerate() {
                if k != skip {
                    let r = state.r1[e as usize];
                    q0 = d.mul(q0, d.complement(r));
                    q1 = d.mul(q1, r);
                }
            }
            let post = match d.normalize(q0, q1) {
                Some(p) => Some(p),
                None => {
                    f0.clear();
                    f1.clear();
                    f0.push(p0);
                    f1.push(p1);
                    for (k, &e) in edges.iter().enumerate() {
                        if k != skip {
                            f0.push(d.complement(state.r1[e as usize]));
                            f1.push(state.r1[e as usize]);
                        }
                    }
                    d.posterior(&f0, &f1)
                }
            };
            let post = post.unwrap_or_else(|| {
                state.degenerate_events += 1;
                (p0, p1)
            });
            if skip < edges.len() {
                state.q1[edges[skip] as usize] = post.1;
            } else {
                state.post0[j] = post.0;
                state.post1[j] = post.1;
            }
        }
    }
}

pub fn variable_node_update(state: &mut BeliefState<f64>, h: &ParityCheckMatrix) {
    variable_node_update_in(&FloatDomain, state, h)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub corrected: Vec<u8>,
    pub converged: bool,
    /// Iterations run; the syndrome is first tested after iteration 1.
    pub iterations: u32,
    pub syndrome_matched: bool,
    pub degenerate_events: u64,
}

fn decode_in<D: Domain>(
    d: &D,
    h: &ParityCheckMatrix,
    parity: &[u8],
    received: &[u8],
    qber: f64,
    max_iter: u32,
) -> Result<DecodeResult, LdpcError> {
    if parity.len() != h.m() {
        return Err(LdpcError::Dimension { expected: h.m(), got: parity.len() });
    }
    if max_iter == 0 {
        return Err(LdpcError::MaxIter);
    }
    let mut state = init_beliefs_in(d, h, received, qber)?;
    let mut corrected = state.received.clone();
    for it in 1..=max_iter {
        check_node_update_in(d, &mut state, h, parity)?;
        variable_node_update_in(d, &mut state, h);
        corrected = state.hard_decision();
        if h.syndrome(&corrected)?.iter().zip(parity).all(|(a, b)| a == &(b & 1)) {
            return Ok(DecodeResult {
                corrected,
                converged: true,
                iterations: it,
                syndrome_matched: true,
                degenerate_events: state.degenerate_events,
            });
        }
    }
    Ok(DecodeResult {
        corrected,
        converged: false,
        iterations: max_iter,
        syndrome_matched: false,
        degenerate_events: state.degenerate_events,
    })
}

/// Iterates check and variable updates until the hard decision reproduces
/// the parity vector or `max_iter` is reached.
pub fn decode(
    h: &ParityCheckMatrix,
    parity: &[u8],
    received: &[u8],
    qber: f64,
    max_iter: u32,
    arithmetic: Arithmetic,
) -> Result<DecodeResult, LdpcError> {
    match arithmetic {
        Arithmetic::Float => decode_in(&FloatDomain, h, parity, received, qber, max_iter),
        Arithmetic::Fixed(bits) => decode_in(&FixedDomain(FixedFormat::new(bits)?), h, parity, received, qber, max_iter),
    }
}
