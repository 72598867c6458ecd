//! Two-qubit polarization states.
//!
//! Basis order is fixed to (HH, HV, VH, VV); index 0 of each qubit is H.
//! Entropies follow two conventions: von Neumann entropy is reported in bits,
//! the one-arm Rényi-2 entropy in nats.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, LN_2};
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::unit_interval;
use crate::linalg::{kron, Mat2, Mat4, Matrix, C64, ONE, ZERO};
use crate::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_TOL, 0)` are treated as round-off and clamped to zero.
pub const PSD_TOL: f64 = 1e-10;

/// Polarization analyzer axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Axis {
    pub const ALL: [Axis; 6] = [Axis::H, Axis::V, Axis::D, Axis::A, Axis::R, Axis::L];
    pub const LINEAR: [Axis; 4] = [Axis::H, Axis::V, Axis::D, Axis::A];

    /// Unit state vector in the (H, V) basis.
    pub fn ket(self) -> [C64; 2] {
        let r = FRAC_1_SQRT_2;
        match self {
            Axis::H => [ONE, ZERO],
            Axis::V => [ZERO, ONE],
            Axis::D => [C64::new(r, 0.0), C64::new(r, 0.0)],
            Axis::A => [C64::new(r, 0.0), C64::new(-r, 0.0)],
            Axis::R => [C64::new(r, 0.0), C64::new(0.0, r)],
            Axis::L => [C64::new(r, 0.0), C64::new(0.0, -r)],
        }
    }

    pub fn projector(self) -> Mat2 {
        let k = self.ket();
        Matrix::outer(&k, &k)
    }

    /// The orthogonal axis of the same basis.
    pub fn partner(self) -> Axis {
        match self {
            Axis::H => Axis::V,
            Axis::V => Axis::H,
            Axis::D => Axis::A,
            Axis::A => Axis::D,
            Axis::R => Axis::L,
            Axis::L => Axis::R,
        }
    }

    /// The two linear axes rotated by ±45° from a linear axis.
    pub fn diagonal_partners(self) -> Option<(Axis, Axis)> {
        match self {
            Axis::H | Axis::V => Some((Axis::D, Axis::A)),
            Axis::D | Axis::A => Some((Axis::H, Axis::V)),
            Axis::R | Axis::L => None,
        }
    }

    /// Pauli-basis Bloch vector `(x, y, z)`: D = +x, R = +y, H = +z.
    pub fn bloch(self) -> [f64; 3] {
        match self {
            Axis::H => [0.0, 0.0, 1.0],
            Axis::V => [0.0, 0.0, -1.0],
            Axis::D => [1.0, 0.0, 0.0],
            Axis::A => [-1.0, 0.0, 0.0],
            Axis::R => [0.0, 1.0, 0.0],
            Axis::L => [0.0, -1.0, 0.0],
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Axis::H => 'H',
            Axis::V => 'V',
            Axis::D => 'D',
            Axis::A => 'A',
            Axis::R => 'R',
            Axis::L => 'L',
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" | "h" => Ok(Axis::H),
            "V" | "v" => Ok(Axis::V),
            "D" | "d" => Ok(Axis::D),
            "A" | "a" => Ok(Axis::A),
            "R" | "r" => Ok(Axis::R),
            "L" | "l" => Ok(Axis::L),
            other => Err(Error::param("axis", format!("unknown polarization axis `{other}`"))),
        }
    }
}

/// Analyzer of one arm: a polarization axis, or none (every photon passes).
pub fn analyzer_projector(axis: Option<Axis>) -> Mat2 {
    axis.map_or_else(Mat2::identity, Axis::projector)
}

/// Ket of a linear polarizer at `angle_deg` from horizontal.
pub fn linear_polarizer(angle_deg: f64) -> Mat2 {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let k = [C64::new(c, 0.0), C64::new(s, 0.0)];
    Matrix::outer(&k, &k)
}

/// Which arm of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellKind {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];

    pub fn ket(self) -> [C64; 4] {
        let r = C64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            BellKind::PhiPlus => [r, ZERO, ZERO, r],
            BellKind::PhiMinus => [r, ZERO, ZERO, -r],
            BellKind::PsiPlus => [ZERO, r, r, ZERO],
            BellKind::PsiMinus => [ZERO, r, -r, ZERO],
        }
    }

    /// +1 when the state is correlated in the given basis (same outcome on
    /// both arms), -1 when anticorrelated. The basis is named by either axis.
    pub fn correlation_sign(self, basis: Axis) -> f64 {
        let signs = match self {
            BellKind::PhiPlus => [1.0, 1.0, -1.0],
            BellKind::PhiMinus => [1.0, -1.0, 1.0],
            BellKind::PsiPlus => [-1.0, 1.0, 1.0],
            BellKind::PsiMinus => [-1.0, -1.0, -1.0],
        };
        match basis {
            Axis::H | Axis::V => signs[0],
            Axis::D | Axis::A => signs[1],
            Axis::R | Axis::L => signs[2],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
        }
    }
}

impl FromStr for BellKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "phi+" => Ok(BellKind::PhiPlus),
            "phi-" => Ok(BellKind::PhiMinus),
            "psi+" => Ok(BellKind::PsiPlus),
            "psi-" => Ok(BellKind::PsiMinus),
            other => Err(Error::param("bell_state", format!("unknown Bell state `{other}`"))),
        }
    }
}

/// Validated two-qubit density matrix: Hermitian, unit trace and positive
/// semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: Mat4,
}

impl DensityMatrix {
    /// Validates a candidate matrix against the density-matrix invariants.
    pub fn new(m: Mat4) -> Result<Self> {
        let herm = m.hermiticity_error();
        if !(herm <= HERMITIAN_TOL) {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace();
        if !((tr.re - 1.0).abs() <= TRACE_TOL && tr.im.abs() <= TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let (values, _) = m.hermitian_eigen();
        if values[0] < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e}",
                values[0]
            )));
        }
        Ok(DensityMatrix { m })
    }

    /// Builds a state from a Hermitian matrix by clamping negative eigenvalues
    /// and renormalizing the trace.
    pub fn project_psd(m: &Mat4) -> Result<Self> {
        let (mut values, vectors) = m.hermitian_eigen();
        values.iter_mut().for_each(|v| *v = v.max(0.0));
        let total: f64 = values.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidState("no positive eigenvalue to keep".into()));
        }
        values.iter_mut().for_each(|v| *v /= total);
        let mut rho = Mat4::from_spectrum(&values, &vectors);
        hermitize(&mut rho);
        DensityMatrix::new(rho)
    }

    pub fn from_pure(ket: &[C64; 4]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        DensityMatrix::new(Matrix::outer(ket, ket).scale(1.0 / norm))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix {
            m: Mat4::identity().scale(0.25),
        }
    }

    pub fn product(a: &QubitState, b: &QubitState) -> Self {
        DensityMatrix {
            m: kron(&a.matrix(), &b.matrix()),
        }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.m
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.m.0[row][col]
    }

    /// Eigenvalues in ascending order with round-off negatives clamped to zero.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let (mut values, _) = self.m.hermitian_eigen();
        values.iter_mut().for_each(|v| *v = v.max(0.0));
        values
    }

    /// Born probability `Tr(rho (P_a ⊗ P_b))` for the two analyzers.
    pub fn coincidence_probability(&self, axis_a: Axis, axis_b: Axis) -> f64 {
        self.joint_probability(&axis_a.projector(), &axis_b.projector())
    }

    /// `Tr(rho (P_a ⊗ P_b))` for arbitrary single-arm operators.
    pub fn joint_probability(&self, op_a: &Mat2, op_b: &Mat2) -> f64 {
        let p = kron(op_a, op_b).trace_product(&self.m).re;
        p.clamp(0.0, 1.0)
    }

    pub fn partial_trace(&self, keep: Side) -> QubitState {
        let mut r = Mat2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    r.0[i][j] += match keep {
                        Side::A => self.m.0[2 * i + k][2 * j + k],
                        Side::B => self.m.0[2 * k + i][2 * k + j],
                    };
                }
            }
        }
        QubitState { m: r }
    }

    /// `Tr(rho^2)`, in `[1/4, 1]`.
    pub fn purity(&self) -> f64 {
        self.m.trace_product(&self.m).re
    }

    /// `-Tr(rho log2 rho)` in bits, in `[0, 2]`.
    pub fn von_neumann_entropy(&self) -> f64 {
        shannon_bits(&self.eigenvalues())
    }

    /// One-arm Rényi-2 entropy `-ln Tr(rho_side^2)` in nats, in `[0, ln 2]`.
    pub fn renyi2_entropy(&self, side: Side) -> f64 {
        let reduced = self.partial_trace(side);
        let p = reduced.purity().clamp(0.5, 1.0);
        (-p.ln()).clamp(0.0, LN_2)
    }

    /// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
    pub fn fidelity(&self, other: &DensityMatrix) -> f64 {
        let (values, vectors) = self.m.hermitian_eigen();
        let roots = values.map(|v| v.max(0.0).sqrt());
        let sqrt_rho = Mat4::from_spectrum(&roots, &vectors);
        let mut inner = sqrt_rho * other.m * sqrt_rho;
        hermitize(&mut inner);
        let (inner_values, _) = inner.hermitian_eigen();
        let root_sum: f64 = inner_values.iter().map(|v| v.max(0.0).sqrt()).sum();
        (root_sum * root_sum).clamp(0.0, 1.0)
    }

    /// `<bell| rho |bell>`.
    pub fn bell_fidelity(&self, kind: BellKind) -> f64 {
        let k = kind.ket();
        let mut acc = ZERO;
        for i in 0..4 {
            for j in 0..4 {
                acc += k[i].conj() * self.m.0[i][j] * k[j];
            }
        }
        acc.re.clamp(0.0, 1.0)
    }

    /// `(U_a ⊗ U_b) rho (U_a ⊗ U_b)^dagger`.
    pub fn apply_local(&self, u_a: &Mat2, u_b: &Mat2) -> Self {
        let mut m = self.m.conjugate_by(&kron(u_a, u_b));
        hermitize(&mut m);
        DensityMatrix { m }
    }
}

pub fn bell_state(kind: BellKind) -> DensityMatrix {
    let k = kind.ket();
    DensityMatrix {
        m: Matrix::outer(&k, &k),
    }
}

/// `p |phi+><phi+| + (1 - p) I/4`.
pub fn werner(p: f64) -> Result<DensityMatrix> {
    unit_interval("p", p)?;
    mix(
        &[bell_state(BellKind::PhiPlus), DensityMatrix::maximally_mixed()],
        &[p, 1.0 - p],
    )
}

/// Convex combination of states.
pub fn mix(states: &[DensityMatrix], weights: &[f64]) -> Result<DensityMatrix> {
    if states.is_empty() || states.len() != weights.len() {
        return Err(Error::param("weights", "need one weight per state"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::param("weights", "weights must be nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::param("weights", format!("weights sum to {total}, expected 1")));
    }
    let mut m = Mat4::zeros();
    for (s, &w) in states.iter().zip(weights) {
        m = m + s.m.scale(w / total);
    }
    hermitize(&mut m);
    Ok(DensityMatrix { m })
}

fn hermitize<const N: usize>(m: &mut Matrix<N>) {
    for i in 0..N {
        m.0[i][i] = C64::new(m.0[i][i].re, 0.0);
        for j in (i + 1)..N {
            let avg = (m.0[i][j] + m.0[j][i].conj()) * 0.5;
            m.0[i][j] = avg;
            m.0[j][i] = avg.conj();
        }
    }
}

/// `-sum p log2 p` with `0 log 0 = 0`.
pub(crate) fn shannon_bits(probabilities: &[f64]) -> f64 {
    probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Single-qubit (one-arm) polarization state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    m: Mat2,
}

impl QubitState {
    /// State with Stokes vector `(s1, s2, s3)` = (H−V, D−A, R−L), `|s| <= 1`.
    pub fn from_stokes(stokes: [f64; 3]) -> Result<Self> {
        let norm = stokes.iter().map(|s| s * s).sum::<f64>().sqrt();
        if !(norm <= 1.0 + 1e-12) {
            return Err(Error::param(
                "stokes",
                format!("degree of polarization {norm} exceeds 1"),
            ));
        }
        let [s1, s2, s3] = stokes;
        let m = Matrix([
            [C64::new((1.0 + s1) / 2.0, 0.0), C64::new(s2 / 2.0, -s3 / 2.0)],
            [C64::new(s2 / 2.0, s3 / 2.0), C64::new((1.0 - s1) / 2.0, 0.0)],
        ]);
        Ok(QubitState { m })
    }

    pub fn from_axis(axis: Axis) -> Self {
        QubitState {
            m: axis.projector(),
        }
    }

    pub fn unpolarized() -> Self {
        QubitState {
            m: Mat2::identity().scale(0.5),
        }
    }

    pub fn matrix(&self) -> Mat2 {
        self.m
    }

    /// Stokes vector (H−V, D−A, R−L).
    pub fn stokes(&self) -> [f64; 3] {
        let m = &self.m.0;
        [
            m[0][0].re - m[1][1].re,
            2.0 * m[0][1].re,
            -2.0 * m[0][1].im,
        ]
    }

    pub fn purity(&self) -> f64 {
        self.m.trace_product(&self.m).re
    }

    /// Contrast seen by a rotating linear polarizer: the length of the linear
    /// part of the Stokes vector.
    pub fn linear_polarization_degree(&self) -> f64 {
        let [s1, s2, _] = self.stokes();
        (s1 * s1 + s2 * s2).sqrt()
    }

    pub fn rotate(&self, u: &Mat2) -> Self {
        let mut m = self.m.conjugate_by(u);
        hermitize(&mut m);
        QubitState { m }
    }

    pub fn probability(&self, projector: &Mat2) -> f64 {
        self.m.trace_product(projector).re.clamp(0.0, 1.0)
    }
}

/// Rotation of the polarization (Bloch/Poincaré) sphere, used for fiber
/// transformations and polarization-controller settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochRotation {
    /// Rotation axis in Pauli coordinates (x = D, y = R, z = H); normalized on use.
    pub axis: [f64; 3],
    pub angle_deg: f64,
}

impl BlochRotation {
    pub const IDENTITY: BlochRotation = BlochRotation {
        axis: [0.0, 0.0, 1.0],
        angle_deg: 0.0,
    };

    /// `exp(-i angle/2 n·sigma)`.
    pub fn unitary(&self) -> Result<Mat2> {
        let norm = self.axis.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(norm > 0.0 && self.angle_deg.is_finite()) {
            return Err(Error::param("rotation", "axis must be a nonzero vector"));
        }
        let [x, y, z] = self.axis.map(|a| a / norm);
        Ok(su2(x, y, z, self.angle_deg.to_radians()))
    }
}

impl Default for BlochRotation {
    fn default() -> Self {
        BlochRotation::IDENTITY
    }
}

/// `cos(t/2) I - i sin(t/2) (x X + y Y + z Z)` for a unit axis.
pub fn su2(x: f64, y: f64, z: f64, angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    Matrix([
        [C64::new(c, -s * z), C64::new(-s * y, -s * x)],
        [C64::new(s * y, -s * x), C64::new(c, s * z)],
    ])
}

/// Tunable source: a Bell state mixed with white noise and an unentangled
/// product impurity, followed by a local unitary on each arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceStateModel {
    pub bell_state: BellKind,
    pub bell_fraction: f64,
    pub depolarized_fraction: f64,
    pub impurity_fraction: f64,
    /// Stokes vectors (H−V, D−A, R−L) of the impurity on each arm.
    #[serde(default = "unpolarized_stokes")]
    pub impurity_stokes_a: [f64; 3],
    #[serde(default = "unpolarized_stokes")]
    pub impurity_stokes_b: [f64; 3],
    #[serde(default)]
    pub pre_rotation_a: BlochRotation,
    #[serde(default)]
    pub pre_rotation_b: BlochRotation,
}

fn unpolarized_stokes() -> [f64; 3] {
    [0.0; 3]
}

impl SourceStateModel {
    pub fn pure(kind: BellKind) -> Self {
        SourceStateModel {
            bell_state: kind,
            bell_fraction: 1.0,
            depolarized_fraction: 0.0,
            impurity_fraction: 0.0,
            impurity_stokes_a: [0.0; 3],
            impurity_stokes_b: [0.0; 3],
            pre_rotation_a: BlochRotation::IDENTITY,
            pre_rotation_b: BlochRotation::IDENTITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        unit_interval("bell_fraction", self.bell_fraction)?;
        unit_interval("depolarized_fraction", self.depolarized_fraction)?;
        unit_interval("impurity_fraction", self.impurity_fraction)?;
        let total = self.bell_fraction + self.depolarized_fraction + self.impurity_fraction;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param(
                "bell_fraction",
                format!("state fractions sum to {total}, expected 1"),
            ));
        }
        QubitState::from_stokes(self.impurity_stokes_a)?;
        QubitState::from_stokes(self.impurity_stokes_b)?;
        self.pre_rotation_a.unitary()?;
        self.pre_rotation_b.unitary()?;
        Ok(())
    }

    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        self.validate()?;
        let impurity = DensityMatrix::product(
            &QubitState::from_stokes(self.impurity_stokes_a)?,
            &QubitState::from_stokes(self.impurity_stokes_b)?,
        );
        let mixed = mix(
            &[
                bell_state(self.bell_state),
                DensityMatrix::maximally_mixed(),
                impurity,
            ],
            &[
                self.bell_fraction,
                self.depolarized_fraction,
                self.impurity_fraction,
            ],
        )?;
        Ok(mixed.apply_local(&self.pre_rotation_a.unitary()?, &self.pre_rotation_b.unitary()?))
    }
}

/// Real and imaginary parts of every element in (HH, HV, VH, VV) order;
/// the serialized form of a density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub basis: [String; 4],
    pub elements: Vec<Vec<[f64; 2]>>,
}

pub const BASIS_ORDER: [&str; 4] = ["HH", "HV", "VH", "VV"];

impl MatrixRecord {
    pub fn from_matrix(m: &Mat4) -> Self {
        MatrixRecord {
            basis: BASIS_ORDER.map(String::from),
            elements: m
                .0
                .iter()
                .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<Mat4> {
        if self.basis.iter().zip(BASIS_ORDER).any(|(a, b)| a != b) {
            return Err(Error::InvalidState("unexpected basis order".into()));
        }
        if self.elements.len() != 4 || self.elements.iter().any(|r| r.len() != 4) {
            return Err(Error::InvalidState("expected a 4x4 matrix".into()));
        }
        let mut m = Mat4::zeros();
        for (i, row) in self.elements.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                m.0[i][j] = C64::new(z[0], z[1]);
            }
        }
        Ok(m)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        MatrixRecord::from_matrix(&self.m).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let record = MatrixRecord::deserialize(deserializer)?;
        let m = record.to_matrix().map_err(D::Error::custom)?;
        DensityMatrix::new(m).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn phi_plus_elements() {
        let rho = bell_state(BellKind::PhiPlus);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((rho.element(i, j) - c(0.5)).norm() < 1e-15);
        }
        assert_eq!(rho.element(1, 1), ZERO);
        assert_eq!(rho.element(0, 1), ZERO);
    }

    #[test]
    fn bell_states_are_pure() {
        for kind in BellKind::ALL {
            let rho = bell_state(kind);
            assert_abs_diff_eq!(rho.matrix().trace().re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(rho.von_neumann_entropy(), 0.0, epsilon = 1e-9);
        }
        let singlet = bell_state(BellKind::PsiMinus);
        assert_abs_diff_eq!(singlet.element(1, 1).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(singlet.element(0, 0).re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn born_rule_for_phi_plus() {
        let rho = bell_state(BellKind::PhiPlus);
        assert_abs_diff_eq!(rho.coincidence_probability(Axis::H, Axis::H), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.coincidence_probability(Axis::H, Axis::V), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.coincidence_probability(Axis::D, Axis::D), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.coincidence_probability(Axis::R, Axis::L), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.coincidence_probability(Axis::R, Axis::R), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn correlation_signs_match_born_rule() {
        for kind in BellKind::ALL {
            let rho = bell_state(kind);
            for axis in [Axis::H, Axis::D, Axis::R] {
                let same = rho.coincidence_probability(axis, axis);
                let cross = rho.coincidence_probability(axis, axis.partner());
                let v = (same - cross) / (same + cross);
                assert_abs_diff_eq!(v, kind.correlation_sign(axis), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn partial_traces() {
        let half = Mat2::identity().scale(0.5);
        let reduced = bell_state(BellKind::PhiPlus).partial_trace(Side::A);
        assert!(reduced.matrix().max_abs_diff(&half) < 1e-15);

        let sigma = QubitState::from_stokes([0.3, -0.2, 0.5]).unwrap();
        let tau = QubitState::from_axis(Axis::D);
        let product = DensityMatrix::product(&sigma, &tau);
        assert!(product.partial_trace(Side::A).matrix().max_abs_diff(&sigma.matrix()) < 1e-15);
        assert!(product.partial_trace(Side::B).matrix().max_abs_diff(&tau.matrix()) < 1e-15);

        for p in [0.0, 0.3, 0.77, 1.0] {
            let w = werner(p).unwrap();
            assert!(w.partial_trace(Side::A).matrix().max_abs_diff(&half) < 1e-15);
            assert!(w.partial_trace(Side::B).matrix().max_abs_diff(&half) < 1e-15);
        }
    }

    #[test]
    fn scalar_metrics() {
        let mixed = DensityMatrix::maximally_mixed();
        assert_abs_diff_eq!(mixed.purity(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(mixed.von_neumann_entropy(), 2.0, epsilon = 1e-12);
        let phi = bell_state(BellKind::PhiPlus);
        assert_abs_diff_eq!(phi.renyi2_entropy(Side::A), core::f64::consts::LN_2, epsilon = 1e-12);
        // p^2 + p(1-p)/2 + (1-p)^2/4 at p = 0.9
        assert_abs_diff_eq!(werner(0.9).unwrap().purity(), 0.8575, epsilon = 1e-12);
    }

    #[test]
    fn werner_endpoints_and_born() {
        assert!(werner(1.0).unwrap().matrix().max_abs_diff(bell_state(BellKind::PhiPlus).matrix()) < 1e-15);
        assert!(werner(0.0).unwrap().matrix().max_abs_diff(DensityMatrix::maximally_mixed().matrix()) < 1e-15);
        let w = werner(0.9).unwrap();
        assert_abs_diff_eq!(w.coincidence_probability(Axis::H, Axis::H), 0.475, epsilon = 1e-15);
        assert!(werner(1.2).is_err());
        assert!(werner(-0.1).is_err());
    }

    #[test]
    fn mix_rejects_bad_weights() {
        let states = [bell_state(BellKind::PhiPlus), DensityMatrix::maximally_mixed()];
        assert!(mix(&states, &[0.5, 0.6]).is_err());
        assert!(mix(&states, &[1.5, -0.5]).is_err());
        assert!(mix(&states, &[1.0]).is_err());
    }

    #[test]
    fn fidelity_properties() {
        let w = werner(0.6).unwrap();
        let phi = bell_state(BellKind::PhiPlus);
        assert_abs_diff_eq!(w.fidelity(&w), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w.fidelity(&phi), phi.fidelity(&w), epsilon = 1e-9);
        // Pure argument reduces to <phi|rho|phi> = (1 + 3p)/4.
        assert_abs_diff_eq!(w.fidelity(&phi), 0.7, epsilon = 1e-9);
        assert_abs_diff_eq!(w.bell_fidelity(BellKind::PhiPlus), 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(phi.fidelity(&bell_state(BellKind::PsiMinus)), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_invalid_matrices() {
        let mut m = Mat4::identity().scale(0.25);
        m.0[0][1] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        assert!(DensityMatrix::new(Mat4::identity()).is_err());
        let negative = Matrix([
            [c(1.2), ZERO, ZERO, ZERO],
            [ZERO, c(-0.2), ZERO, ZERO],
            [ZERO, ZERO, ZERO, ZERO],
            [ZERO, ZERO, ZERO, ZERO],
        ]);
        assert!(DensityMatrix::new(negative).is_err());
        let projected = DensityMatrix::project_psd(&negative).unwrap();
        assert_abs_diff_eq!(projected.element(0, 0).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn stokes_round_trip_and_rotation() {
        let s = [0.1, 0.4, -0.3];
        let q = QubitState::from_stokes(s).unwrap();
        for (a, b) in q.stokes().iter().zip(s) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(QubitState::from_axis(Axis::R).stokes().map(|v| v.round()), [0.0, 0.0, 1.0]);
        assert_eq!(QubitState::from_axis(Axis::D).stokes().map(|v| v.round()), [0.0, 1.0, 0.0]);
        // Quarter-wave style rotation about the D axis turns R into H or V.
        let u = su2(1.0, 0.0, 0.0, core::f64::consts::FRAC_PI_2);
        let rotated = QubitState::from_axis(Axis::R).rotate(&u);
        assert_abs_diff_eq!(rotated.linear_polarization_degree(), 1.0, epsilon = 1e-12);
        assert!(QubitState::from_stokes([1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn source_model_assembles_valid_state() {
        let mut model = SourceStateModel::pure(BellKind::PhiPlus);
        model.bell_fraction = 0.8;
        model.depolarized_fraction = 0.15;
        model.impurity_fraction = 0.05;
        model.impurity_stokes_a = [0.0, 0.0, 1.0];
        model.pre_rotation_b = BlochRotation { axis: [1.0, 1.0, 0.0], angle_deg: 33.0 };
        let rho = model.to_density_matrix().unwrap();
        assert_abs_diff_eq!(rho.matrix().trace().re, 1.0, epsilon = 1e-12);
        model.impurity_fraction = 0.2;
        assert!(model.to_density_matrix().is_err());
    }

    #[test]
    fn axis_parsing() {
        assert_eq!("D".parse::<Axis>().unwrap(), Axis::D);
        assert!("X".parse::<Axis>().is_err());
        assert_eq!("psi-".parse::<BellKind>().unwrap(), BellKind::PsiMinus);
    }
}
