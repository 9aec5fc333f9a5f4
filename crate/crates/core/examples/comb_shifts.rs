//! Stark shifts from a frequency comb addressing a chain of ions.

use std::f64::consts::TAU;

use dressed_ion::experiments::run_comb;
use dressed_ion::hamiltonian::{CombLine, CombSpec, Transition};

fn main() -> dressed_ion::Result<()> {
    let omega = TAU * 36.5e3;
    let comb = CombSpec::dressing_comb(3, TAU * 1e6, omega);
    let r = run_comb(&comb, omega, 0)?;
    for s in &r.shifts {
        println!("dressing comb, ion {}: qubit shift {:.3e} Hz", s.ion, s.qubit_shift / TAU);
    }

    let lone = CombSpec {
        ion_count: 1,
        zeeman_step: 0.0,
        lines: vec![CombLine { transition: Transition::MinusZero, detuning: 10.0 * omega, rabi: omega, phase: 0.0 }],
    };
    let r = run_comb(&lone, omega, 2000)?;
    println!("unpaired tone: {:.1} Hz perturbative, {:?} Hz Floquet", r.shifts[0].qubit_shift / TAU, r.floquet[0].map(|f| f / TAU));
    Ok(())
}
