use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;

use crate::basis::{DressedFrame, Level, Operator, StateLabel, C64};
use crate::error::{Error, Result};

/// Static dressed-basis interaction picture of the single-qubit gate:
///
/// `(Omega/sqrt2)(|u><u| - |d><d|) + sqrt2 Omega_g (|P><0'| + |0'><P|)`
///
/// returned in the bare basis. `P` is the protected state of the dressing
/// with relative phase `phase`; at `phase = 0` it is `D`, at `pi` it is `B`.
///
/// A resonant rf pair of Rabi frequency `Omega_rf` on the `|0'>` transitions
/// corresponds to `omega_g = Omega_rf / 2` here.
pub fn build_sqg_interaction(omega: f64, omega_g: f64, phase: f64) -> Result<Operator> {
    for (name, v) in [("omega", omega), ("omega_g", omega_g), ("phase", phase)] {
        if !v.is_finite() {
            return Err(Error::param(name, "must be finite"));
        }
    }
    let f = DressedFrame::new(phase);
    let u = f.vector(StateLabel::Up)?;
    let d = f.vector(StateLabel::Down)?;
    let p = f.vector(StateLabel::Protected)?;
    let zp = Level::ZeroPrime.index();
    let a = omega / SQRT_2;
    let g = SQRT_2 * omega_g;
    let mut m = DMatrix::<C64>::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] += a * (u[i] * u[j].conj() - d[i] * d[j].conj());
        }
        m[(i, zp)] += g * p[i];
        m[(zp, i)] += g * p[i].conj();
    }
    Operator::hermitian(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spectrum_without_gate_field() {
        let omega = 2.0;
        let e = build_sqg_interaction(omega, 0.0, 0.7).unwrap().eigenvalues();
        let a = omega / SQRT_2;
        let expect = [-a, 0.0, 0.0, a];
        for (x, y) in e.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gate_block_splits_by_twice_sqrt2_omega_g() {
        let e = build_sqg_interaction(5.0, 0.1, 0.0).unwrap().eigenvalues();
        // middle pair comes from the protected/0' block
        let g = SQRT_2 * 0.1;
        assert!((e[1] + g).abs() < 1e-12 && (e[2] - g).abs() < 1e-12);
    }

    #[test]
    fn phase_pi_couples_symmetric_combination() {
        let h = build_sqg_interaction(0.0, 1.0, PI).unwrap();
        let zp = crate::basis::StateVector::basis(Level::ZeroPrime);
        let v = h.apply(&zp).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2 * SQRT_2;
        assert!((v[2].re - s).abs() < 1e-12 && (v[3].re - s).abs() < 1e-12);
    }
}
