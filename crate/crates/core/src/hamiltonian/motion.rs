use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, Matrix4};
use serde::{Deserialize, Serialize};

use super::{common_period, fill_drives, DriveField, Frame, HamiltonianFunction, IonLevels, Perturbation, Transition};
use crate::basis::{DressedFrame, Level, Operator, StateLabel, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// A single motional mode coupled to the Zeeman levels by a magnetic gradient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TrapMode {
    /// Mode angular frequency, rad/s.
    pub nu: f64,
    /// Gradient coupling, rad/s.
    pub lambda: f64,
    pub n_fock: usize,
}

impl TrapMode {
    pub fn new(nu: f64, eta: f64, n_fock: usize) -> Result<Self> {
        let m = TrapMode { nu, lambda: eta * nu, n_fock };
        m.validate()?;
        Ok(m)
    }

    /// Effective Lamb-Dicke parameter `lambda / nu`.
    pub fn eta(&self) -> f64 {
        self.lambda / self.nu
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::param("nu", "trap frequency must be positive"));
        }
        if !self.lambda.is_finite() {
            return Err(Error::param("lambda", "must be finite"));
        }
        if self.n_fock < 2 {
            return Err(Error::param("n_fock", "need at least two Fock levels"));
        }
        Ok(())
    }

    pub fn annihilation(&self) -> DMatrix<C64> {
        let n = self.n_fock;
        let mut a = DMatrix::zeros(n, n);
        for k in 1..n {
            a[(k - 1, k)] = C64::from((k as f64).sqrt());
        }
        a
    }

    /// `exp(alpha (b^dag - b))` in the truncated space.
    pub fn displacement(&self, alpha: f64) -> DMatrix<C64> {
        let a = self.annihilation();
        // K = i(b^dag - b) is Hermitian and exp(alpha(b^dag - b)) = exp(-i alpha K)
        let k = (a.adjoint() - &a) * C64::i();
        let eig = k.symmetric_eigen();
        let v = &eig.eigenvectors;
        let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -alpha * e)));
        v * phases * v.adjoint()
    }
}

/// Full multi-qubit-gate Hamiltonian of one ion and one mode, lab-frame
/// motion, rotating frame for the internal levels:
///
/// `nu b^dag b + lambda (|+1><+1| - |-1><-1|)(b + b^dag) + H_drives(t)`.
#[derive(Clone, Debug)]
pub struct MqgHamiltonian {
    static_part: DMatrix<C64>,
    drives: Vec<DriveField>,
    lambda0: f64,
    n_fock: usize,
}

pub fn build_mqg(levels: &IonLevels, mode: &TrapMode, dressing: &[DriveField], rf_pair: &[DriveField; 2]) -> Result<MqgHamiltonian> {
    levels.validate()?;
    mode.validate()?;
    if let Some(d) = dressing.iter().find(|d| !d.transition.is_microwave()) {
        return Err(Error::param("dressing", format!("{:?} is not a microwave transition", d.transition)));
    }
    let rf: Vec<Transition> = rf_pair.iter().map(|d| d.transition).collect();
    if !(rf.contains(&Transition::MinusZeroPrime) && rf.contains(&Transition::PlusZeroPrime)) {
        return Err(Error::param("rf_pair", "needs one drive on each |0'> transition"));
    }
    let drives: Vec<DriveField> = dressing.iter().chain(rf_pair.iter()).cloned().collect();
    for d in &drives {
        d.validate()?;
    }
    let n = mode.n_fock;
    let a = mode.annihilation();
    let number = a.adjoint() * &a;
    let x = &a + a.adjoint();
    let mut z = DMatrix::<C64>::zeros(4, 4);
    z[(Level::Plus.index(), Level::Plus.index())] = ONE;
    z[(Level::Minus.index(), Level::Minus.index())] = -ONE;
    let static_part = DMatrix::<C64>::identity(4, 4).kronecker(&number) * C64::from(mode.nu) + z.kronecker(&x) * C64::from(mode.lambda);
    Ok(MqgHamiltonian { static_part, drives, lambda0: levels.lambda0, n_fock: n })
}

impl MqgHamiltonian {
    pub fn n_fock(&self) -> usize {
        self.n_fock
    }
}

impl HamiltonianFunction for MqgHamiltonian {
    fn dim(&self) -> usize {
        4 * self.n_fock
    }

    fn fill(&self, t: f64, out: &mut DMatrix<C64>) {
        out.copy_from(&self.static_part);
        let mut h4 = Matrix4::zeros();
        fill_drives(&mut h4, &self.drives, t, t, Frame::MultiRotatingRwa, self.lambda0, &Perturbation::default());
        add_internal(out, &h4, self.n_fock);
    }

    fn period(&self) -> Option<f64> {
        common_period(self.drives.iter().map(|d| d.detuning))
    }
}

fn add_internal(out: &mut DMatrix<C64>, h4: &Matrix4<C64>, n: usize) {
    for l in 0..4 {
        for m in 0..4 {
            let v = h4[(l, m)];
            if v != ZERO {
                for k in 0..n {
                    out[(l * n + k, m * n + k)] += v;
                }
            }
        }
    }
}

/// `U = |+1><+1| D(eta) + |-1><-1| D(-eta) + (|0><0| + |0'><0'|)`, with
/// `D(a) = exp(a(b^dag - b))`. `U H U^dag` removes the linear gradient term.
pub fn polaron_transform(mode: &TrapMode) -> Result<Operator> {
    mode.validate()?;
    let n = mode.n_fock;
    let eta = mode.eta();
    let blocks = [
        (Level::Zero, DMatrix::identity(n, n)),
        (Level::ZeroPrime, DMatrix::identity(n, n)),
        (Level::Minus, mode.displacement(-eta)),
        (Level::Plus, mode.displacement(eta)),
    ];
    let mut u = DMatrix::zeros(4 * n, 4 * n);
    for (l, b) in blocks {
        let o = l.index() * n;
        u.view_mut((o, o), (n, n)).copy_from(&b);
    }
    Operator::new(u)
}

/// Effective first-order sideband Hamiltonian in the interaction picture of
/// the mode:
///
/// `sqrt2 eta g (|D><0'| e^{i delta t} - h.c.)(b^dag e^{i nu t} - b e^{-i nu t})`.
///
/// `delta = nu` is the red sideband, `delta = -nu` the blue one.
#[derive(Clone, Debug)]
pub struct SidebandHamiltonian {
    coupling: f64,
    delta: f64,
    nu: f64,
    n_fock: usize,
    dark: [C64; 4],
    b: DMatrix<C64>,
}

pub fn sideband_effective(mode: &TrapMode, g: f64, delta: f64) -> Result<SidebandHamiltonian> {
    mode.validate()?;
    if !(g.is_finite() && delta.is_finite()) {
        return Err(Error::param("sideband", "g and delta must be finite"));
    }
    Ok(SidebandHamiltonian {
        coupling: SQRT_2 * mode.eta() * g,
        delta,
        nu: mode.nu,
        n_fock: mode.n_fock,
        dark: DressedFrame::new(0.0).vector(StateLabel::Protected)?,
        b: mode.annihilation(),
    })
}

impl SidebandHamiltonian {
    /// Matrix element `|<D,n-1|H|0',n>|` of the resonant red sideband.
    pub fn sideband_rate(&self, n: usize) -> f64 {
        self.coupling.abs() * (n as f64).sqrt()
    }
}

impl HamiltonianFunction for SidebandHamiltonian {
    fn dim(&self) -> usize {
        4 * self.n_fock
    }

    fn fill(&self, t: f64, out: &mut DMatrix<C64>) {
        let n = self.n_fock;
        let zp = Level::ZeroPrime.index();
        let mut a = DMatrix::<C64>::zeros(4, 4);
        let ph = C64::from_polar(1.0, self.delta * t);
        for i in 0..4 {
            a[(i, zp)] += self.dark[i] * ph;
            a[(zp, i)] -= self.dark[i].conj() * ph.conj();
        }
        let rot = C64::from_polar(1.0, self.nu * t);
        let x = self.b.adjoint() * rot - &self.b * rot.conj();
        let h = a.kronecker(&x) * C64::from(self.coupling);
        debug_assert_eq!(h.nrows(), 4 * n);
        out.copy_from(&h);
    }

    fn period(&self) -> Option<f64> {
        common_period([self.delta, self.nu].into_iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::tensor_with_fock;

    fn sector(m: &DMatrix<C64>, level: Level, n: usize) -> DMatrix<C64> {
        let o = level.index() * n;
        m.view((o, o), (n, n)).into_owned()
    }

    #[test]
    fn zero_eta_gives_identity() {
        let mode = TrapMode { nu: 1.0, lambda: 0.0, n_fock: 6 };
        let u = polaron_transform(&mode).unwrap();
        assert!((u.matrix() - DMatrix::<C64>::identity(24, 24)).norm() < 1e-13);
    }

    #[test]
    fn polaron_removes_linear_term_on_low_fock_block() {
        let mode = TrapMode::new(1.0, 0.05, 30).unwrap();
        let levels = IonLevels::default();
        let rf = [DriveField::new(Transition::MinusZeroPrime, 0.0), DriveField::new(Transition::PlusZeroPrime, 0.0)];
        let h = build_mqg(&levels, &mode, &[], &rf).unwrap().at(0.0);
        let u = polaron_transform(&mode).unwrap();
        let hp = u.matrix() * h.matrix() * u.matrix().adjoint();
        let n = mode.n_fock;
        let eta = mode.eta();
        for level in [Level::Plus, Level::Minus] {
            let s = sector(&hp, level, n);
            for i in 0..8 {
                for j in 0..8 {
                    let expect = if i == j { i as f64 - eta * eta } else { 0.0 };
                    assert!((s[(i, j)] - C64::from(expect)).norm() < 1e-10, "{level:?} {i},{j}: {}", s[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn displacement_shifts_annihilation() {
        let mode = TrapMode::new(1.0, 0.05, 40).unwrap();
        let d = mode.displacement(0.05);
        let b = mode.annihilation();
        let shifted = &d * &b * d.adjoint();
        for i in 0..10 {
            for j in 0..10 {
                let expect = b[(i, j)] - if i == j { C64::from(0.05) } else { ZERO };
                assert!((shifted[(i, j)] - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn effective_hamiltonian_is_hermitian_and_couples_red_sideband() {
        let mode = TrapMode::new(2.0, 0.1, 4).unwrap();
        let h = sideband_effective(&mode, 0.5, mode.nu).unwrap();
        for t in [0.0, 0.37, 1.3] {
            assert!(h.at(t).is_hermitian());
        }
        assert!((h.sideband_rate(1) - SQRT_2 * 0.1 * 0.5).abs() < 1e-15);
        let zero = tensor_with_fock(&Operator::identity(4), 4).unwrap();
        assert_eq!(zero.dim(), h.dim());
    }
}
