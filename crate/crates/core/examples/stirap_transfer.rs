//! Adiabatic transfer from |-1> into the protected dressed state and back,
//! with populations printed along the way.

use dressed_ion::basis::{DressedFrame, Level, StateLabel, StateVector};
use dressed_ion::hamiltonian::{Frame, IonLevels};
use dressed_ion::propagator::evolve;
use dressed_ion::sequence::{stirap_schedule, StirapParams};

fn main() -> dressed_ion::Result<()> {
    let p = StirapParams { f_omega: 36.5e3, hold_time: 1e-3, ..Default::default() };
    let s = stirap_schedule(&p, IonLevels::default(), Frame::MultiRotatingRwa, &[])?;
    let tr = evolve(&s, &StateVector::basis(Level::Minus), None, 200)?;
    let frame = DressedFrame::new(p.relative_phase);
    println!("{:>10} {:>8} {:>8} {:>8}", "t (ms)", "P(-1)", "P(+1)", "P(P)");
    for (t, psi) in tr.times.iter().zip(&tr.states) {
        let pops = psi.level_populations();
        let prot = psi.population(StateLabel::Protected, Some(&frame))?;
        println!("{:>10.4} {:>8.4} {:>8.4} {:>8.4}", t * 1e3, pops[Level::Minus.index()], pops[Level::Plus.index()], prot);
    }
    println!("hold from {:?} s to {:?} s", s.marker("T1"), s.marker("T2"));
    Ok(())
}
