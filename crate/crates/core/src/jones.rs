//! Jones calculus for the polarization devices of the link.
//!
//! States are complex 2-vectors in the (H, V) basis. Matrices act linearly;
//! the Faraday mirror is the one antilinear element and is kept separate:
//! any device that ends in a mirror is described by a [`MirrorOperator`],
//! i.e. a linear matrix applied after the mirror.
//!
//! Handedness convention: `s3 = 2 Im(j1* j2)`, and the state prepared with
//! `delta_phi_m = pi/4` is called left circular, so `L = [1, i]/sqrt(2)`
//! sits at `s3 = +1`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used for all device-model identities.
pub const DEVICE_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JonesError {
    #[error("cannot normalize a zero-power Jones vector")]
    ZeroPower,
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("extinction ratio undefined for non-positive minimum power {0}")]
    UnmeasurableRatio(f64),
}

/// A (possibly unnormalized) Jones vector. `power()` is `|j1|^2 + |j2|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesVector {
    pub j1: Complex64,
    pub j2: Complex64,
}

impl JonesVector {
    /// Builds a normalized state from two amplitudes.
    pub fn new(j1: Complex64, j2: Complex64) -> Result<Self, JonesError> {
        Self::raw(j1, j2).normalized()
    }

    /// Keeps the amplitudes as given; used for power bookkeeping.
    pub const fn raw(j1: Complex64, j2: Complex64) -> Self {
        JonesVector { j1, j2 }
    }

    pub fn horizontal() -> Self {
        Self::raw(ONE, ZERO)
    }

    pub fn vertical() -> Self {
        Self::raw(ZERO, ONE)
    }

    pub fn diagonal() -> Self {
        Self::raw(ONE * FRAC_1_SQRT_2, ONE * FRAC_1_SQRT_2)
    }

    pub fn antidiagonal() -> Self {
        Self::raw(ONE * FRAC_1_SQRT_2, -ONE * FRAC_1_SQRT_2)
    }

    /// `[1, -i]/sqrt(2)`, `s3 = -1`.
    pub fn right_circular() -> Self {
        Self::raw(ONE * FRAC_1_SQRT_2, -I * FRAC_1_SQRT_2)
    }

    /// `[1, i]/sqrt(2)`, `s3 = +1`.
    pub fn left_circular() -> Self {
        Self::raw(ONE * FRAC_1_SQRT_2, I * FRAC_1_SQRT_2)
    }

    /// A Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = Self::raw(Complex64::new(gauss(rng), gauss(rng)), Complex64::new(gauss(rng), gauss(rng)));
            if let Ok(n) = v.normalized() {
                return n;
            }
        }
    }

    pub fn power(&self) -> f64 {
        self.j1.norm_sqr() + self.j2.norm_sqr()
    }

    pub fn normalized(&self) -> Result<Self, JonesError> {
        let p = self.power();
        if p <= 0.0 || !p.is_finite() {
            return Err(JonesError::ZeroPower);
        }
        let s = 1.0 / p.sqrt();
        Ok(Self::raw(self.j1 * s, self.j2 * s))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::raw(self.j1 * s, self.j2 * s)
    }

    /// `<self|other>` (conjugate-linear in `self`).
    pub fn inner(&self, other: &JonesVector) -> Complex64 {
        self.j1.conj() * other.j1 + self.j2.conj() * other.j2
    }

    /// `|<a|b>|^2 / (|a|^2 |b|^2)`.
    pub fn overlap(&self, other: &JonesVector) -> f64 {
        self.inner(other).norm_sqr() / (self.power() * other.power())
    }

    pub fn stokes(&self) -> StokesVector {
        stokes_from_jones(self)
    }

    /// Angle between the two states on the Poincare sphere. Global phase
    /// and power do not enter.
    pub fn bloch_distance(&self, other: &JonesVector) -> f64 {
        self.stokes().angle_to(&other.stokes())
    }

    /// Largest componentwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &JonesVector) -> f64 {
        (self.j1 - other.j1).norm().max((self.j2 - other.j2).norm())
    }
}

impl fmt::Display for JonesVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.6}, {:.6}]", self.j1, self.j2)
    }
}

/// A 2x2 complex Jones matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesMatrix {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl JonesMatrix {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        JonesMatrix { a, b, c, d }
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn diag(d1: Complex64, d2: Complex64) -> Self {
        Self::new(d1, ZERO, ZERO, d2)
    }

    /// Real rotation by `theta` (radians).
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(ONE * c, -ONE * s, ONE * s, ONE * c)
    }

    /// The 45 degree rotation between the PM fibre axes and the waveguide.
    pub fn r45() -> Self {
        Self::rotation(FRAC_PI_4)
    }

    /// Birefringent PM fibre: `diag(1, e^{i phi})`.
    pub fn pm_fibre(phi_pmf: f64) -> Self {
        Self::diag(ONE, Complex64::from_polar(1.0, phi_pmf))
    }

    /// The general single-mode-fibre unitary with parameters `a`, `alpha`,
    /// `beta`:
    /// `[[sqrt(a), sqrt(1-a) e^{i alpha}], [sqrt(1-a) e^{i beta}, -sqrt(a) e^{i(alpha+beta)}]]`.
    pub fn unitary_from_params(a: f64, alpha: f64, beta: f64) -> Self {
        let a = a.clamp(0.0, 1.0);
        let sa = a.sqrt();
        let sb = (1.0 - a).sqrt();
        Self::new(ONE * sa, Complex64::from_polar(sb, alpha), Complex64::from_polar(sb, beta), -Complex64::from_polar(sa, alpha + beta))
    }

    /// Haar-distributed element of U(2).
    pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u = SU2::random(rng).to_matrix();
        u.scale(Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU))
    }

    /// An arbitrary complex matrix with Gaussian entries (generally neither
    /// unitary nor invertible-well-conditioned).
    pub fn random_general<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut g = || Complex64::new(gauss(rng), gauss(rng));
        Self::new(g(), g(), g(), g())
    }

    pub fn apply(&self, v: &JonesVector) -> JonesVector {
        JonesVector::raw(self.a * v.j1 + self.b * v.j2, self.c * v.j1 + self.d * v.j2)
    }

    pub fn mul(&self, o: &JonesMatrix) -> JonesMatrix {
        JonesMatrix::new(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d, self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)
    }

    pub fn adjoint(&self) -> JonesMatrix {
        JonesMatrix::new(self.a.conj(), self.c.conj(), self.b.conj(), self.d.conj())
    }

    pub fn conj(&self) -> JonesMatrix {
        JonesMatrix::new(self.a.conj(), self.b.conj(), self.c.conj(), self.d.conj())
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn scale(&self, s: Complex64) -> JonesMatrix {
        JonesMatrix::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// The matrix `M~` with `FM . M = M~ . FM`:
    /// `[[d*, -c*], [-b*, a*]]`.
    pub fn mirror_conjugate(&self) -> JonesMatrix {
        JonesMatrix::new(self.d.conj(), -self.c.conj(), -self.b.conj(), self.a.conj())
    }

    /// Largest entry of `|M^dagger M - 1|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.adjoint().mul(self);
        [(p.a - ONE).norm(), p.b.norm(), p.c.norm(), (p.d - ONE).norm()].into_iter().fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// Projects onto U(2) via Gram-Schmidt on the columns.
    pub fn reorthonormalized(&self) -> JonesMatrix {
        let c0 = JonesVector::raw(self.a, self.c).normalized().unwrap_or_else(|_| JonesVector::horizontal());
        let c1 = JonesVector::raw(self.b, self.d);
        let proj = c0.inner(&c1);
        let c1 = JonesVector::raw(c1.j1 - proj * c0.j1, c1.j2 - proj * c0.j2)
            .normalized()
            // Orthogonal complement of c0 as a fallback for a collapsed column.
            .unwrap_or(JonesVector::raw(-c0.j2.conj(), c0.j1.conj()));
        JonesMatrix::new(c0.j1, c1.j1, c0.j2, c1.j2)
    }

    pub fn max_abs_diff(&self, o: &JonesMatrix) -> f64 {
        [(self.a - o.a).norm(), (self.b - o.b).norm(), (self.c - o.c).norm(), (self.d - o.d).norm()].into_iter().fold(0.0, f64::max)
    }
}

/// Unit quaternion representation of an SU(2) element,
/// `U = w 1 - i (x sx + y sy + z sz)` in the Stokes axis ordering
/// (s1 ~ H/V, s2 ~ D/A, s3 ~ circular).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SU2 {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SU2 {
    /// Rotation of the Poincare sphere by `angle` about the unit `axis`.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let (s, c) = (angle / 2.0).sin_cos();
        SU2 { w: c, x: axis[0] * s, y: axis[1] * s, z: axis[2] * s }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let (w, x, y, z) = (gauss(rng), gauss(rng), gauss(rng), gauss(rng));
        let n = (w * w + x * x + y * y + z * z).sqrt();
        SU2 { w: w / n, x: x / n, y: y / n, z: z / n }
    }

    /// Maps to a Jones matrix. With `s = (|j1|^2-|j2|^2, 2Re(j1*j2), 2Im(j1*j2))`
    /// the Pauli matrices are sx = diag(1,-1), sy = [[0,1],[1,0]],
    /// sz = [[0,-i],[i,0]].
    pub fn to_matrix(self) -> JonesMatrix {
        let SU2 { w, x, y, z } = self;
        JonesMatrix::new(Complex64::new(w, -x), Complex64::new(-z, -y), Complex64::new(z, -y), Complex64::new(w, x))
    }
}

/// A uniformly random unit 3-vector.
pub(crate) fn random_axis<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [gauss(rng), gauss(rng), gauss(rng)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

pub(crate) fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample::<f64, _>(rand_distr::StandardNormal)
}

/// Real Stokes 3-vector, normalized by `s0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub const fn new(s1: f64, s2: f64, s3: f64) -> Self {
        StokesVector { s1, s2, s3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }

    pub fn norm(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }

    pub fn dot(&self, o: &StokesVector) -> f64 {
        self.s1 * o.s1 + self.s2 * o.s2 + self.s3 * o.s3
    }

    pub fn cross(&self, o: &StokesVector) -> StokesVector {
        StokesVector::new(self.s2 * o.s3 - self.s3 * o.s2, self.s3 * o.s1 - self.s1 * o.s3, self.s1 * o.s2 - self.s2 * o.s1)
    }

    /// Angle on the sphere between the directions of the two vectors.
    pub fn angle_to(&self, o: &StokesVector) -> f64 {
        // atan2 form stays accurate near 0 and pi.
        self.cross(o).norm().atan2(self.dot(o))
    }

    /// The pure state with this Stokes direction.
    pub fn to_jones(&self) -> JonesVector {
        let n = self.norm().max(f64::MIN_POSITIVE);
        let (s1, s2, s3) = (self.s1 / n, self.s2 / n, self.s3 / n);
        let theta = s1.clamp(-1.0, 1.0).acos();
        let phi = s3.atan2(s2);
        JonesVector::raw(ONE * (theta / 2.0).cos(), Complex64::from_polar((theta / 2.0).sin(), phi))
    }
}

/// Phase settings of the two-way modulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationSetting {
    /// Half the difference of the return and forward waveguide phases.
    pub delta_phi_m: f64,
    /// Birefringent phase of the PM input fibre.
    pub phi_pmf: f64,
}

impl ModulationSetting {
    pub fn new(delta_phi_m: f64, phi_pmf: f64) -> Self {
        ModulationSetting { delta_phi_m, phi_pmf }
    }

    /// The protocol setting that prepares `pol`.
    pub fn for_polarization(pol: Polarization, phi_pmf: f64) -> Self {
        Self::new(pol.delta_phi_m(), phi_pmf)
    }
}

/// The four BB84 states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
    R,
    L,
}

/// Measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Linear,
    Circular,
}

impl Polarization {
    pub const ALL: [Polarization; 4] = [Polarization::H, Polarization::V, Polarization::R, Polarization::L];

    pub fn basis(self) -> Basis {
        match self {
            Polarization::H | Polarization::V => Basis::Linear,
            Polarization::R | Polarization::L => Basis::Circular,
        }
    }

    /// Key bit carried by the state: H and R encode 0.
    pub fn bit(self) -> u8 {
        match self {
            Polarization::H | Polarization::R => 0,
            Polarization::V | Polarization::L => 1,
        }
    }

    pub fn from_basis_bit(basis: Basis, bit: u8) -> Self {
        match (basis, bit & 1) {
            (Basis::Linear, 0) => Polarization::H,
            (Basis::Linear, _) => Polarization::V,
            (Basis::Circular, 0) => Polarization::R,
            (Basis::Circular, _) => Polarization::L,
        }
    }

    pub fn orthogonal(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
            Polarization::R => Polarization::L,
            Polarization::L => Polarization::R,
        }
    }

    /// Waveguide setting used by the two-way modulator for this state.
    pub fn delta_phi_m(self) -> f64 {
        match self {
            Polarization::H => FRAC_PI_2,
            Polarization::V => 0.0,
            Polarization::R => -FRAC_PI_4,
            Polarization::L => FRAC_PI_4,
        }
    }

    /// The ideal Jones vector (`phi_pmf = 0`).
    pub fn jones(self) -> JonesVector {
        match self {
            Polarization::H => JonesVector::horizontal(),
            Polarization::V => JonesVector::vertical(),
            Polarization::R => JonesVector::right_circular(),
            Polarization::L => JonesVector::left_circular(),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Polarization::H => 'H',
            Polarization::V => 'V',
            Polarization::R => 'R',
            Polarization::L => 'L',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'H' => Some(Polarization::H),
            'V' => Some(Polarization::V),
            'R' => Some(Polarization::R),
            'L' => Some(Polarization::L),
            _ => None,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl std::str::FromStr for Polarization {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut it = s.chars();
        match (it.next().and_then(Polarization::from_letter), it.next()) {
            (Some(p), None) => Ok(p),
            _ => Err(format!("unknown polarization {s:?}")),
        }
    }
}

/// `J_out = M . J_in` without renormalization.
pub fn apply(m: &JonesMatrix, v: &JonesVector) -> JonesVector {
    m.apply(v)
}

/// Faraday mirror: `[j1, j2] -> [j2*, -j1*]`.
pub fn faraday_mirror(v: &JonesVector) -> JonesVector {
    JonesVector::raw(v.j2.conj(), -v.j1.conj())
}

/// Evaluates both sides of the mirror-conjugation identity
/// `M^dagger . FM . M . v = det(M*) . FM . v`, returning `(lhs, rhs)`.
/// Holds for any 2x2 `M`, including lossy ones.
pub fn conjugation_identity_check(m: &JonesMatrix, v: &JonesVector) -> (JonesVector, JonesVector) {
    let lhs = m.adjoint().apply(&faraday_mirror(&m.apply(v)));
    let rhs = faraday_mirror(v).scale(m.conj().det());
    (lhs, rhs)
}

/// An optical path that ends with a Faraday mirror: `v -> linear . FM(v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorOperator {
    pub linear: JonesMatrix,
}

impl MirrorOperator {
    pub fn apply(&self, v: &JonesVector) -> JonesVector {
        self.linear.apply(&faraday_mirror(v))
    }
}

/// Phases of the basic unit that only contribute to the global phase or
/// the waveguide mean phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BasicUnitPhases {
    /// Mean waveguide phase `(phi_in + phi_out)/2`.
    pub phi_m_mean: f64,
}

/// The full go-and-return chain of the basic unit,
/// `PMF^dag . R45^dag . WG_back . SMF^dag . FM . SMF . WG_fwd . R45 . PMF`,
/// folded into a [`MirrorOperator`]. `smf` must be unitary.
pub fn basic_unit_matrix(
    setting: &ModulationSetting,
    phi_e: f64,
    smf: &JonesMatrix,
    phases: &BasicUnitPhases,
) -> Result<MirrorOperator, JonesError> {
    let dev = smf.unitarity_deviation();
    if dev > DEVICE_TOL {
        return Err(JonesError::NotUnitary(dev));
    }
    let (fwd, back) = basic_unit_halves(setting, phi_e, smf, phases);
    Ok(MirrorOperator { linear: back.mul(&fwd.mirror_conjugate()) })
}

/// Forward and return matrices around the mirror.
pub(crate) fn basic_unit_halves(
    setting: &ModulationSetting,
    phi_e: f64,
    smf: &JonesMatrix,
    phases: &BasicUnitPhases,
) -> (JonesMatrix, JonesMatrix) {
    let phi_in = phases.phi_m_mean - setting.delta_phi_m;
    let phi_out = phases.phi_m_mean + setting.delta_phi_m;
    let pmf = JonesMatrix::pm_fibre(setting.phi_pmf);
    let r45 = JonesMatrix::r45();
    let wg_fwd = JonesMatrix::diag(ONE, Complex64::from_polar(1.0, phi_in + phi_e));
    let wg_back = JonesMatrix::diag(ONE, Complex64::from_polar(1.0, -(phi_out + phi_e)));
    let fwd = smf.mul(&wg_fwd).mul(&r45).mul(&pmf);
    let back = pmf.adjoint().mul(&r45.adjoint()).mul(&wg_back).mul(&smf.adjoint());
    (fwd, back)
}

/// Closed form of the basic unit:
/// `g . [[cos d, -i e^{i phi} sin d], [-i e^{-i phi} sin d, cos d]] . FM`
/// with `g = conj(det SMF) . e^{-i(phi_pmf + phi_e + phi_m_mean)}`.
pub fn basic_unit_closed_form(setting: &ModulationSetting, phi_e: f64, smf: &JonesMatrix, phases: &BasicUnitPhases) -> MirrorOperator {
    let (s, c) = setting.delta_phi_m.sin_cos();
    let g = smf.det().conj() * Complex64::from_polar(1.0, -(setting.phi_pmf + phi_e + phases.phi_m_mean));
    let e = Complex64::from_polar(1.0, setting.phi_pmf);
    let m = JonesMatrix::new(ONE * c, -I * e * s, -I * e.conj() * s, ONE * c);
    MirrorOperator { linear: m.scale(g) }
}

/// Output of the basic unit for horizontal input, global phase dropped:
/// `[-i e^{i phi_pmf} sin d, cos d]`.
pub fn basic_unit_output_h(setting: &ModulationSetting) -> JonesVector {
    let (s, c) = setting.delta_phi_m.sin_cos();
    JonesVector::raw(-I * Complex64::from_polar(s, setting.phi_pmf), ONE * c)
}

/// Fraction of power the two-way intensity modulator passes: the vertical
/// component of the basic-unit output for horizontal input.
pub fn intensity_modulator_transmission(setting: &ModulationSetting) -> f64 {
    basic_unit_output_h(setting).j2.norm_sqr()
}

pub fn stokes_from_jones(v: &JonesVector) -> StokesVector {
    let p = v.power();
    let x = v.j1.conj() * v.j2;
    StokesVector::new((v.j1.norm_sqr() - v.j2.norm_sqr()) / p, 2.0 * x.re / p, 2.0 * x.im / p)
}

/// `10 log10(p_max / p_min)`.
pub fn extinction_ratio_db(p_max: f64, p_min: f64) -> Result<f64, JonesError> {
    if p_min <= 0.0 {
        return Err(JonesError::UnmeasurableRatio(p_min));
    }
    Ok(10.0 * (p_max / p_min).log10())
}
