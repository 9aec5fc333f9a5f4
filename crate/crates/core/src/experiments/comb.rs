use serde::Serialize;

use crate::basis::{DressedFrame, Level, StateLabel, C64};
use crate::error::{Error, Result};
use crate::hamiltonian::{comb_stark_shifts, CombSpec, DriveField, DriveHamiltonian, Envelope, Frame, IonShift};
use crate::propagator::period_propagator;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CombReport {
    pub shifts: Vec<IonShift>,
    /// Qubit shift from the exact quasi-energies, when the comb is periodic.
    pub floquet: Vec<Option<f64>>,
    /// Largest `|qubit_shift|`, rad/s.
    pub worst_qubit_shift: f64,
}

/// Perturbative shifts for every ion, cross-checked against exact Floquet
/// quasi-energies with `steps_per_period` steps (0 skips the check).
pub fn run_comb(spec: &CombSpec, omega: f64, steps_per_period: usize) -> Result<CombReport> {
    let shifts = comb_stark_shifts(spec, omega)?;
    let floquet = (0..spec.ion_count)
        .map(|k| {
            if steps_per_period == 0 {
                return Ok(None);
            }
            match floquet_qubit_shift(spec, k, omega, steps_per_period) {
                Ok(s) => Ok(Some(s)),
                Err(Error::InvalidParameter { name: "h", .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_qubit_shift = shifts.iter().map(|s| s.qubit_shift.abs()).fold(0.0, f64::max);
    Ok(CombReport { shifts, floquet, worst_qubit_shift })
}

/// Quasi-energy of the protected state minus that of `|0'>` for one ion,
/// from the one-period propagator of the full comb.
pub fn floquet_qubit_shift(spec: &CombSpec, ion: usize, omega: f64, steps_per_period: usize) -> Result<f64> {
    if ion >= spec.ion_count {
        return Err(Error::param("ion", format!("{ion} not in a chain of {}", spec.ion_count)));
    }
    let dressing = comb_stark_shifts(spec, omega)?[ion].dressing_rabi;
    let mut drives: Vec<DriveField> = spec
        .lines
        .iter()
        .map(|l| DriveField {
            transition: l.transition,
            rabi: l.rabi,
            detuning: spec.seen_by(l, ion),
            phase: l.phase,
            envelope: Envelope::Constant { level: 1.0 },
        })
        .collect();
    let resonant = drives.iter().filter(|d| d.detuning.abs() < 1e-9 * omega).count();
    let mut phase = 0.0;
    if resonant == 0 {
        drives.extend(crate::hamiltonian::resonant_pair(Level::Zero, dressing, 0.0));
    } else {
        let m = drives.iter().find(|d| d.detuning.abs() < 1e-9 * omega && d.transition.side() == Level::Minus);
        let p = drives.iter().find(|d| d.detuning.abs() < 1e-9 * omega && d.transition.side() == Level::Plus);
        if let (Some(m), Some(p)) = (m, p) {
            phase = p.phase - m.phase;
        }
        // exactly resonant tones must not break periodicity
        for d in drives.iter_mut().filter(|d| d.detuning.abs() < 1e-9 * omega) {
            d.detuning = 0.0;
        }
    }
    let h = DriveHamiltonian { drives, frame: Frame::MultiRotatingRwa, lambda0: 0.0, origin: 0.0 };
    let (period, u) = period_propagator(&h, steps_per_period)?;
    let frame = DressedFrame::new(phase);
    // U is normal, so a generic Hermitian combination of its parts shares
    // its eigenvectors.
    let ud = u.adjoint();
    let mix = (&u + &ud) * C64::new(0.5, 0.0) + (&u - &ud) * C64::new(0.0, -0.5 * 0.618_034);
    let modes = mix.symmetric_eigen().eigenvectors;
    let quasi = |label: StateLabel| -> Result<f64> {
        let v = nalgebra::DVector::from_column_slice(&frame.vector(label)?);
        let best =
            modes.column_iter().max_by(|a, b| a.dotc(&v).norm().total_cmp(&b.dotc(&v).norm())).expect("4x4 has eigenvectors").into_owned();
        let lambda = best.dotc(&(&u * &best));
        Ok(-lambda.arg() / period)
    };
    Ok(quasi(StateLabel::Protected)? - quasi(StateLabel::Bare(Level::ZeroPrime))?)
}
