use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Transition;
use crate::basis::{dressed_transform, Level, C64};
use crate::error::{Error, Result};

/// One tone of a microwave frequency comb.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CombLine {
    pub transition: Transition,
    /// Detuning from the reference ion's transition, rad/s.
    pub detuning: f64,
    /// Rabi frequency, rad/s.
    pub rabi: f64,
    #[serde(default)]
    pub phase: f64,
}

/// A chain of ions with Zeeman offsets `(k - (n-1)/2) * zeeman_step` and the
/// comb tones shining on all of them.
///
/// An ion sees a `MinusZero` tone at `detuning - offset` and a `PlusZero`
/// tone at `detuning + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CombSpec {
    pub ion_count: usize,
    /// Zeeman shift step between neighbouring ions, rad/s.
    pub zeeman_step: f64,
    pub lines: Vec<CombLine>,
}

impl CombSpec {
    /// Each ion dressed by its own resonant pair of Rabi `omega`.
    pub fn dressing_comb(ion_count: usize, zeeman_step: f64, omega: f64) -> Self {
        let mut spec = CombSpec { ion_count, zeeman_step, lines: Vec::new() };
        for k in 0..ion_count {
            let o = spec.offset(k);
            spec.lines.push(CombLine { transition: Transition::MinusZero, detuning: o, rabi: omega, phase: 0.0 });
            spec.lines.push(CombLine { transition: Transition::PlusZero, detuning: -o, rabi: omega, phase: 0.0 });
        }
        spec
    }

    pub fn offset(&self, ion: usize) -> f64 {
        (ion as f64 - 0.5 * (self.ion_count as f64 - 1.0)) * self.zeeman_step
    }

    /// Detuning of `line` as seen by `ion`.
    pub fn seen_by(&self, line: &CombLine, ion: usize) -> f64 {
        match line.transition.side() {
            Level::Minus => line.detuning - self.offset(ion),
            _ => line.detuning + self.offset(ion),
        }
    }
}

/// Second-order shifts of one ion's dressed states.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IonShift {
    pub ion: usize,
    pub dressing_rabi: f64,
    /// Shifts of `u, d, P, 0'`, rad/s.
    pub shifts: [f64; 4],
    /// Shift of the protected state relative to `|0'>`, rad/s. This is
    /// what detunes the qubit.
    pub qubit_shift: f64,
}

/// Time-averaged (second-order Floquet) energy shifts of each ion's dressed
/// states caused by the off-resonant comb tones.
///
/// Tones resonant with an ion are taken as that ion's dressing pair. An ion
/// without resonant tones is assumed dressed at Rabi `omega`.
pub fn comb_stark_shifts(comb: &CombSpec, omega: f64) -> Result<Vec<IonShift>> {
    if comb.ion_count == 0 {
        return Err(Error::CombDesign("no ions".into()));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::param("omega", "dressing Rabi frequency must be positive"));
    }
    for l in &comb.lines {
        if !l.transition.is_microwave() {
            return Err(Error::CombDesign(format!("{:?} is not a microwave transition", l.transition)));
        }
        if !(l.rabi.is_finite() && l.rabi >= 0.0 && l.detuning.is_finite()) {
            return Err(Error::CombDesign("tone with invalid Rabi frequency or detuning".into()));
        }
    }
    (0..comb.ion_count).map(|k| ion_shift(comb, k, omega)).collect()
}

fn ion_shift(comb: &CombSpec, ion: usize, omega: f64) -> Result<IonShift> {
    let tol = 1e-9 * omega.max(comb.zeeman_step.abs());
    let mut minus = None;
    let mut plus = None;
    let mut off = Vec::new();
    for line in &comb.lines {
        let det = comb.seen_by(line, ion);
        if det.abs() <= tol {
            let slot = if line.transition == Transition::MinusZero { &mut minus } else { &mut plus };
            if slot.replace(line).is_some() {
                return Err(Error::CombDesign(format!("two tones resonant with {:?} of ion {ion}", line.transition)));
            }
        } else {
            off.push((line, det));
        }
    }
    let (rabi, phase) = match (minus, plus) {
        (None, None) => (omega, 0.0),
        (Some(m), Some(p)) => {
            if (m.rabi - p.rabi).abs() > 1e-9 * m.rabi.max(p.rabi) {
                return Err(Error::CombDesign(format!("unbalanced dressing pair on ion {ion}")));
            }
            (m.rabi, p.phase - m.phase)
        }
        _ => {
            return Err(Error::CombDesign(format!("tone resonant with only one transition of ion {ion}")));
        }
    };
    let a = rabi * FRAC_1_SQRT_2;
    let energies = [a, -a, 0.0, 0.0];
    for (line, det) in &off {
        let guard = 2.0 * line.rabi;
        for gap in [0.0, a, 2.0 * a] {
            if (det.abs() - gap).abs() < guard {
                return Err(Error::CombDesign(format!(
                    "tone at {:.4e} rad/s is within {:.2e} rad/s of a dressed resonance of ion {ion}",
                    det, guard
                )));
            }
        }
    }

    // Fourier components: group tones by |detuning|.
    let t = dressed_transform(phase);
    let mut freqs: Vec<f64> = Vec::new();
    for (_, det) in &off {
        if !freqs.iter().any(|w| (w - det.abs()).abs() <= tol) {
            freqs.push(det.abs());
        }
    }
    let mut shifts = [0.0; 4];
    for w in freqs {
        // C multiplies e^{+i w t}
        let mut c = DMatrix::<C64>::zeros(4, 4);
        for (line, det) in &off {
            if (det.abs() - w).abs() > tol {
                continue;
            }
            let amp = C64::from_polar(0.5 * line.rabi, line.phase);
            let (m, h) = (line.transition.side().index(), line.transition.hub().index());
            if *det > 0.0 {
                c[(m, h)] += amp;
            } else {
                c[(h, m)] += amp.conj();
            }
        }
        let cd = t.matrix().adjoint() * &c * t.matrix();
        for (ai, shift) in shifts.iter_mut().enumerate() {
            for (bi, eb) in energies.iter().enumerate() {
                let ea = energies[ai];
                // +w component and its conjugate at -w
                let fwd = cd[(bi, ai)].norm_sqr();
                let back = cd[(ai, bi)].norm_sqr();
                if fwd != 0.0 {
                    *shift += fwd / (ea - eb - w);
                }
                if back != 0.0 {
                    *shift += back / (ea - eb + w);
                }
            }
        }
    }
    Ok(IonShift { ion, dressing_rabi: rabi, shifts, qubit_shift: shifts[2] - shifts[3] })
}
