//! Eigenvalues of the dressed interaction Hamiltonian and the labelled
//! dressed states for a few relative phases.

use std::f64::consts::{PI, TAU};

use dressed_ion::basis::{DressedFrame, StateLabel};
use dressed_ion::hamiltonian::build_sqg_interaction;

fn main() -> dressed_ion::Result<()> {
    let omega = TAU * 36.5e3;
    for phase in [0.0, PI / 2.0, PI] {
        let h = build_sqg_interaction(omega, 0.0, phase)?;
        let e: Vec<String> = h.eigenvalues().iter().map(|x| format!("{:+.1}", x / TAU)).collect();
        println!("phase {phase:.3}: eigenvalues [{}] Hz", e.join(", "));
    }
    let frame = DressedFrame::new(0.0);
    for label in [StateLabel::Up, StateLabel::Down, StateLabel::Protected] {
        let v = frame.vector(label)?;
        let amps: Vec<String> = v.iter().map(|c| format!("{:+.3}{:+.3}i", c.re, c.im)).collect();
        println!("{label:?}: ({})", amps.join(", "));
    }
    Ok(())
}
