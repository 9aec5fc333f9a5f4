//! Hamiltonians of the dressed ion, in angular-frequency units (hbar = 1).

mod comb;
mod drive;
mod motion;
mod sqg;

pub use comb::{comb_stark_shifts, CombLine, CombSpec, IonShift};
pub use drive::{resonant_pair, DriveField, Envelope, Transition};
pub use motion::{build_mqg, polaron_transform, sideband_effective, MqgHamiltonian, SidebandHamiltonian, TrapMode};
pub use sqg::build_sqg_interaction;

use nalgebra::{DMatrix, Matrix4};
use serde::{Deserialize, Serialize};

use crate::basis::{Level, Operator, C64};
use crate::error::{Error, Result};
use crate::units::hz;

/// Bare level structure: `|+-1>` sit at `+-lambda0` relative to the clock pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IonLevels {
    /// Clock transition angular frequency, rad/s.
    pub omega0: f64,
    /// Linear Zeeman shift, rad/s.
    pub lambda0: f64,
}

impl Default for IonLevels {
    /// 171Yb+ at 0.714 mT: the two microwave transitions sit at
    /// 12.6528121 GHz and 12.6328272 GHz.
    fn default() -> Self {
        let (hi, lo) = (12.652_812_1e9, 12.632_827_2e9);
        IonLevels { omega0: hz(0.5 * (hi + lo)), lambda0: hz(0.5 * (hi - lo)) }
    }
}

impl IonLevels {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0.is_finite() && self.lambda0 >= 0.0) {
            return Err(Error::param("lambda0", "must be finite and non-negative"));
        }
        if !self.omega0.is_finite() {
            return Err(Error::param("omega0", "must be finite"));
        }
        Ok(())
    }
}

/// Rotating-frame choice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// Each transition in its own rotating frame, counter-rotating and
    /// cross-transition terms dropped.
    #[default]
    #[serde(rename = "multiRotatingRWA")]
    MultiRotatingRwa,
    /// Keeps the cross terms: a drive on one Zeeman transition also drives
    /// the partner transition, detuned by `2 lambda0`.
    #[serde(rename = "singleRotatingFull")]
    SingleRotatingFull,
}

/// Per-step perturbation of the drive Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    /// Shift of `lambda0`, rad/s.
    pub zeeman: f64,
    /// Extra phase on the `|-1>` and `|+1>` microwave drives.
    pub mw_phase: [f64; 2],
    /// Multiplicative amplitude factor on the two microwave drives.
    pub mw_scale: [f64; 2],
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation { zeeman: 0.0, mw_phase: [0.0; 2], mw_scale: [1.0; 2] }
    }
}

/// Time-dependent Hamiltonian `H(t)`.
pub trait HamiltonianFunction: Send + Sync {
    fn dim(&self) -> usize;

    /// Overwrites `out` with `H(t)`.
    fn fill(&self, t: f64, out: &mut DMatrix<C64>);

    fn at(&self, t: f64) -> Operator {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        self.fill(t, &mut m);
        Operator::new(m).expect("dimension is a multiple of four")
    }

    /// Period of `H`, if it is periodic. Used to cache step propagators.
    fn period(&self) -> Option<f64> {
        None
    }
}

/// Internal-state Hamiltonian of a set of drives.
#[derive(Clone, Debug)]
pub struct DriveHamiltonian {
    pub drives: Vec<DriveField>,
    pub frame: Frame,
    pub lambda0: f64,
    /// Absolute time at which the envelopes' local clock starts.
    pub origin: f64,
}

/// Validates the drives and returns `H(t)` for them.
pub fn build_time_dependent(levels: &IonLevels, drives: &[DriveField], frame: Frame) -> Result<DriveHamiltonian> {
    levels.validate()?;
    for d in drives {
        d.validate()?;
    }
    if frame == Frame::SingleRotatingFull && levels.lambda0 == 0.0 {
        return Err(Error::param("lambda0", "singleRotatingFull needs a non-zero Zeeman splitting"));
    }
    Ok(DriveHamiltonian { drives: drives.to_vec(), frame, lambda0: levels.lambda0, origin: 0.0 })
}

impl HamiltonianFunction for DriveHamiltonian {
    fn dim(&self) -> usize {
        4
    }

    fn fill(&self, t: f64, out: &mut DMatrix<C64>) {
        let mut h = Matrix4::zeros();
        fill_drives(&mut h, &self.drives, t, t - self.origin, self.frame, self.lambda0, &Perturbation::default());
        out.copy_from(&h);
    }

    fn period(&self) -> Option<f64> {
        match self.frame {
            Frame::MultiRotatingRwa => common_period(self.drives.iter().map(|d| d.detuning)),
            Frame::SingleRotatingFull => None,
        }
    }
}

/// Period of a sum of tones at angular frequencies `freqs`, if they are
/// commensurate with a fundamental no lower than `min|f| / 16`.
pub(crate) fn common_period(freqs: impl Iterator<Item = f64>) -> Option<f64> {
    let fs: Vec<f64> = freqs.map(f64::abs).filter(|f| *f > 0.0).collect();
    let fmin = fs.iter().copied().fold(f64::INFINITY, f64::min);
    if fs.is_empty() {
        return None;
    }
    (1..=16).map(|k| fmin / k as f64).find_map(|f0| {
        let ok = fs.iter().all(|f| {
            let r = f / f0;
            (r - r.round()).abs() < 1e-9 * r.max(1.0)
        });
        ok.then_some(std::f64::consts::TAU / f0)
    })
}

/// Adds the drive terms (and the Zeeman perturbation) to the 4x4 block `out`.
pub(crate) fn fill_drives(
    out: &mut Matrix4<C64>,
    drives: &[DriveField],
    t: f64,
    t_local: f64,
    frame: Frame,
    lambda0: f64,
    p: &Perturbation,
) {
    for d in drives {
        let mut c = d.coupling(t, t_local);
        if d.transition.is_microwave() {
            let k = if d.transition.side() == Level::Minus { 0 } else { 1 };
            c *= C64::from_polar(p.mw_scale[k], p.mw_phase[k]);
        }
        add_coupling(out, d.transition, c);
        if frame == Frame::SingleRotatingFull {
            // Same carrier seen by the partner transition, 2 lambda0 away.
            let shift = match d.transition.side() {
                Level::Minus => -2.0 * lambda0,
                _ => 2.0 * lambda0,
            };
            add_coupling(out, d.transition.partner(), c * C64::from_polar(1.0, shift * t));
        }
    }
    if p.zeeman != 0.0 {
        out[(Level::Plus.index(), Level::Plus.index())] += p.zeeman;
        out[(Level::Minus.index(), Level::Minus.index())] -= p.zeeman;
    }
}

fn add_coupling(out: &mut Matrix4<C64>, tr: Transition, c: C64) {
    let (m, h) = (tr.side().index(), tr.hub().index());
    out[(m, h)] += c;
    out[(h, m)] += c.conj();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::DressedFrame;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn default_levels_match_microwave_lines() {
        let l = IonLevels::default();
        assert!((crate::units::to_hz(2.0 * l.lambda0) - 19.984_9e6).abs() < 1.0);
    }

    #[test]
    fn resonant_pair_has_dressed_spectrum() {
        let omega = crate::units::khz(36.5);
        let h = build_time_dependent(&IonLevels::default(), &resonant_pair(Level::Zero, omega, PI), Frame::MultiRotatingRwa).unwrap();
        let e = h.at(0.0).eigenvalues();
        let a = omega * FRAC_1_SQRT_2;
        let expect = [-a, 0.0, 0.0, a];
        for (x, y) in e.iter().zip(expect) {
            assert!((x - y).abs() < 1e-9 * omega);
        }
        // the protected state of the frame is a zero-energy eigenvector
        let f = DressedFrame::new(PI);
        let p = f.state(crate::basis::StateLabel::Protected);
        let hp = h.at(0.3).apply(&p).unwrap();
        assert!(hp.norm() < 1e-9 * omega);
    }

    #[test]
    fn single_rotating_requires_splitting() {
        let lv = IonLevels { omega0: 1.0, lambda0: 0.0 };
        let d = [DriveField::new(Transition::MinusZero, 1.0)];
        assert!(build_time_dependent(&lv, &d, Frame::SingleRotatingFull).is_err());
        assert!(build_time_dependent(&lv, &d, Frame::MultiRotatingRwa).is_ok());
    }

    #[test]
    fn cross_terms_oscillate_at_twice_lambda0() {
        let lv = IonLevels { omega0: 1.0, lambda0: 3.0 };
        let d = [DriveField::new(Transition::MinusZero, 2.0)];
        let h = build_time_dependent(&lv, &d, Frame::SingleRotatingFull).unwrap();
        let t = 0.4;
        let m = h.at(t);
        let cross = m.matrix()[(Level::Plus.index(), 0)];
        assert!((cross - C64::from_polar(1.0, -6.0 * t)).norm() < 1e-14);
    }

    #[test]
    fn common_period_detects_mixed_tones() {
        assert_eq!(common_period([0.0, 2.0, -2.0].into_iter()), Some(PI));
        assert!((common_period([2.0, 3.0].into_iter()).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert_eq!(common_period([1.0, std::f64::consts::E].into_iter()), None);
        assert_eq!(common_period([0.0].into_iter()), None);
    }
}
