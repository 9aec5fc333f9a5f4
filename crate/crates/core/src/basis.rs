//! The four-level basis `{|0>, |0'>, |-1>, |+1>}`, optionally tensored with a
//! truncated Fock space. Fock index varies fastest: `index = 4-level * n_fock + n`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "0'")]
    ZeroPrime,
    #[serde(rename = "-1")]
    Minus,
    #[serde(rename = "+1")]
    Plus,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Zero, Level::ZeroPrime, Level::Minus, Level::Plus];

    pub fn index(self) -> usize {
        match self {
            Level::Zero => 0,
            Level::ZeroPrime => 1,
            Level::Minus => 2,
            Level::Plus => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::Zero => "0",
            Level::ZeroPrime => "0'",
            Level::Minus => "-1",
            Level::Plus => "+1",
        }
    }

    /// Magnetic quantum number; the linear Zeeman shift is `m * lambda0`.
    pub fn m(self) -> f64 {
        match self {
            Level::Minus => -1.0,
            Level::Plus => 1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Names accepted by [`StateVector::population`].
///
/// `D` and `B` are the fixed combinations `(|-1> -/+ |+1>)/sqrt2`. `u`, `d`
/// and `P` (the protected state) depend on the dressing phase and need a
/// [`DressedFrame`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateLabel {
    Bare(Level),
    Up,
    Down,
    Dark,
    Bright,
    Protected,
}

impl FromStr for StateLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "0" => StateLabel::Bare(Level::Zero),
            "0'" => StateLabel::Bare(Level::ZeroPrime),
            "-1" => StateLabel::Bare(Level::Minus),
            "+1" => StateLabel::Bare(Level::Plus),
            "u" => StateLabel::Up,
            "d" => StateLabel::Down,
            "D" => StateLabel::Dark,
            "B" => StateLabel::Bright,
            "P" => StateLabel::Protected,
            other => return Err(Error::UnknownLabel(other.to_string())),
        })
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLabel::Bare(l) => f.write_str(l.label()),
            StateLabel::Up => f.write_str("u"),
            StateLabel::Down => f.write_str("d"),
            StateLabel::Dark => f.write_str("D"),
            StateLabel::Bright => f.write_str("B"),
            StateLabel::Protected => f.write_str("P"),
        }
    }
}

/// Internal levels times `n_fock` motional levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelBasis {
    n_fock: usize,
}

impl LevelBasis {
    pub fn internal() -> Self {
        LevelBasis { n_fock: 1 }
    }

    pub fn with_fock(n_fock: usize) -> Result<Self> {
        if n_fock == 0 {
            return Err(Error::param("n_fock", "must be at least 1"));
        }
        Ok(LevelBasis { n_fock })
    }

    pub fn n_fock(&self) -> usize {
        self.n_fock
    }

    pub fn dim(&self) -> usize {
        4 * self.n_fock
    }

    pub fn index(&self, level: Level, n: usize) -> usize {
        level.index() * self.n_fock + n
    }
}

/// A normalised pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    /// Normalises `amps`. The length must be a multiple of four.
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_multiple_of(4) {
            return Err(Error::Dimension { expected: 4, got: amps.len() });
        }
        let norm = amps.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(StateVector { amps: amps / C64::from(norm) })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amps))
    }

    pub fn basis(level: Level) -> Self {
        Self::basis_fock(level, 0, 1).expect("valid basis state")
    }

    pub fn basis_fock(level: Level, n: usize, n_fock: usize) -> Result<Self> {
        if n >= n_fock {
            return Err(Error::param("n", format!("Fock level {n} outside truncation {n_fock}")));
        }
        let b = LevelBasis::with_fock(n_fock)?;
        let mut amps = DVector::zeros(b.dim());
        amps[b.index(level, n)] = ONE;
        Ok(StateVector { amps })
    }

    /// Internal-state superposition, normalised.
    pub fn superposition(terms: &[(Level, C64)]) -> Result<Self> {
        let mut amps = DVector::zeros(4);
        for &(l, a) in terms {
            amps[l.index()] += a;
        }
        Self::new(amps)
    }

    /// Tensor an internal state with Fock state `|n>`.
    pub fn with_fock(&self, n: usize, n_fock: usize) -> Result<Self> {
        if self.dim() != 4 {
            return Err(Error::Dimension { expected: 4, got: self.dim() });
        }
        if n >= n_fock {
            return Err(Error::param("n", format!("Fock level {n} outside truncation {n_fock}")));
        }
        let mut amps = DVector::zeros(4 * n_fock);
        for l in 0..4 {
            amps[l * n_fock + n] = self.amps[l];
        }
        Ok(StateVector { amps })
    }

    /// Wraps amplitudes that are already normalised (checked loosely).
    pub(crate) fn from_normalized(amps: DVector<C64>) -> Self {
        debug_assert!((amps.norm() - 1.0).abs() < 1e-6);
        StateVector { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_fock(&self) -> usize {
        self.amps.len() / 4
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalize(&mut self) {
        let n = self.amps.norm();
        if n > 0.0 {
            self.amps /= C64::from(n);
        }
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: other.dim() });
        }
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Population of a bare level, summed over motional states.
    pub fn level_population(&self, level: Level) -> f64 {
        let n = self.n_fock();
        let start = level.index() * n;
        self.amps.rows(start, n).iter().map(|a| a.norm_sqr()).sum()
    }

    /// Populations of `|0>, |0'>, |-1>, |+1>` in basis order.
    pub fn level_populations(&self) -> [f64; 4] {
        Level::ALL.map(|l| self.level_population(l))
    }

    /// Phonon-number distribution traced over the internal levels.
    pub fn fock_distribution(&self) -> Vec<f64> {
        let n = self.n_fock();
        (0..n).map(|k| (0..4).map(|l| self.amps[l * n + k].norm_sqr()).sum()).collect()
    }

    /// Population of a named state, summed over motional states.
    pub fn population(&self, label: StateLabel, frame: Option<&DressedFrame>) -> Result<f64> {
        if let StateLabel::Bare(l) = label {
            return Ok(self.level_population(l));
        }
        let v = match (label, frame) {
            (StateLabel::Dark, _) => dark_vector(0.0),
            (StateLabel::Bright, _) => bright_vector(0.0),
            (_, None) => return Err(Error::MissingFrame(label.to_string())),
            (_, Some(frame)) => frame.vector(label)?,
        };
        Ok(self.projected_population(&v))
    }

    pub fn population_str(&self, label: &str, frame: Option<&DressedFrame>) -> Result<f64> {
        self.population(label.parse()?, frame)
    }

    fn projected_population(&self, v: &[C64; 4]) -> f64 {
        let n = self.n_fock();
        (0..n).map(|k| (0..4).map(|l| v[l].conj() * self.amps[l * n + k]).sum::<C64>().norm_sqr()).sum()
    }
}

/// A square complex matrix acting on a [`LevelBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension { expected: m.nrows(), got: m.ncols() });
        }
        if m.nrows() == 0 || !m.nrows().is_multiple_of(4) {
            return Err(Error::Dimension { expected: 4, got: m.nrows() });
        }
        Ok(Operator { m })
    }

    /// Like [`Operator::new`] but rejects non-Hermitian input.
    pub fn hermitian(m: DMatrix<C64>) -> Result<Self> {
        let op = Self::new(m)?;
        let dev = op.hermiticity_deviation();
        let scale = op.m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if dev > HERMITIAN_TOL * scale {
            return Err(Error::NonHermitian { deviation: dev });
        }
        Ok(op)
    }

    pub fn zeros(dim: usize) -> Self {
        Operator { m: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Operator { m: DMatrix::identity(dim, dim) }
    }

    /// `|a><b|` on the internal levels.
    pub fn transition(a: Level, b: Level) -> Self {
        let mut m = DMatrix::zeros(4, 4);
        m[(a.index(), b.index())] = ONE;
        Operator { m }
    }

    pub fn projector(level: Level) -> Self {
        Self::transition(level, level)
    }

    /// `|+1><+1| - |-1><-1|`, the linear Zeeman operator in units of `lambda0`.
    pub fn zeeman() -> Self {
        let mut m = DMatrix::zeros(4, 4);
        m[(Level::Plus.index(), Level::Plus.index())] = ONE;
        m[(Level::Minus.index(), Level::Minus.index())] = -ONE;
        Operator { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let d = &self.m - self.m.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITIAN_TOL * self.m.iter().map(|z| z.norm()).fold(1.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        Operator { m: self.m.adjoint() }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<DVector<C64>> {
        if psi.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: psi.dim() });
        }
        Ok(&self.m * psi.amplitudes())
    }

    pub fn expectation(&self, psi: &StateVector) -> Result<C64> {
        let v = self.apply(psi)?;
        Ok(psi.amplitudes().dotc(&v))
    }

    pub fn scale(&self, s: C64) -> Self {
        Operator { m: &self.m * s }
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: other.dim() });
        }
        Ok(Operator { m: &self.m + &other.m })
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: other.dim() });
        }
        Ok(Operator { m: &self.m * &other.m })
    }

    /// Eigenvalues of a Hermitian operator in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

/// `op (x) 1_fock`.
pub fn tensor_with_fock(op: &Operator, n_fock: usize) -> Result<Operator> {
    if n_fock == 0 {
        return Err(Error::param("n_fock", "must be at least 1"));
    }
    Operator::new(op.m.kronecker(&DMatrix::<C64>::identity(n_fock, n_fock)))
}

fn bright_vector(phase: f64) -> [C64; 4] {
    let s = FRAC_1_SQRT_2;
    [ZERO, ZERO, C64::from(s), C64::from_polar(s, phase)]
}

fn dark_vector(phase: f64) -> [C64; 4] {
    let s = FRAC_1_SQRT_2;
    [ZERO, ZERO, C64::from(s), -C64::from_polar(s, phase)]
}

/// Dressed basis of a resonant microwave pair with relative phase `phase`
/// (phase of the `|+1>` drive minus that of the `|-1>` drive).
///
/// Columns of the transform are `u = (B_phi + |0>)/sqrt2`,
/// `d = (B_phi - |0>)/sqrt2`, the protected state `P = D_phi` and `|0'>`,
/// where `B_phi, D_phi = (|-1> +/- e^{i phi}|+1>)/sqrt2`.
#[derive(Clone, Debug, PartialEq)]
pub struct DressedFrame {
    phase: f64,
    columns: [[C64; 4]; 4],
}

impl DressedFrame {
    pub fn new(phase: f64) -> Self {
        let s = C64::from(FRAC_1_SQRT_2);
        let b = bright_vector(phase);
        let mut u = [ZERO; 4];
        let mut d = [ZERO; 4];
        for i in 0..4 {
            u[i] = b[i] * s;
            d[i] = b[i] * s;
        }
        u[0] += s;
        d[0] -= s;
        let mut zp = [ZERO; 4];
        zp[1] = ONE;
        DressedFrame { phase, columns: [u, d, dark_vector(phase), zp] }
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Bare-basis components of a named state.
    pub fn vector(&self, label: StateLabel) -> Result<[C64; 4]> {
        Ok(match label {
            StateLabel::Bare(l) => {
                let mut v = [ZERO; 4];
                v[l.index()] = ONE;
                v
            }
            StateLabel::Up => self.columns[0],
            StateLabel::Down => self.columns[1],
            StateLabel::Protected => self.columns[2],
            StateLabel::Dark => dark_vector(0.0),
            StateLabel::Bright => bright_vector(0.0),
        })
    }

    pub fn state(&self, label: StateLabel) -> StateVector {
        let v = self.vector(label).expect("all labels resolve in a frame");
        StateVector::from_slice(&v).expect("unit vector")
    }

    /// Unitary whose columns are `u, d, P, |0'>`.
    pub fn transform(&self) -> Operator {
        let mut m = DMatrix::zeros(4, 4);
        for (j, col) in self.columns.iter().enumerate() {
            for i in 0..4 {
                m[(i, j)] = col[i];
            }
        }
        Operator { m }
    }

    /// Amplitudes in the `(u, d, P, 0')` basis, per Fock level.
    pub fn to_dressed(&self, psi: &StateVector) -> StateVector {
        let n = psi.n_fock();
        let t = self.transform();
        let big = tensor_with_fock(&t.adjoint(), n).expect("n_fock >= 1");
        StateVector::from_normalized(big.matrix() * psi.amplitudes())
    }
}

/// Unitary mapping the dressed basis `(u, d, P, 0')` onto bare levels.
pub fn dressed_transform(phase: f64) -> Operator {
    DressedFrame::new(phase).transform()
}
