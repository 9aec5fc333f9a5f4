//! Gradient-induced sideband coupling: full model against the effective
//! Hamiltonian.

use std::f64::consts::TAU;

use dressed_ion::experiments::{run_sideband_gate, SidebandConfig};
use dressed_ion::hamiltonian::{IonLevels, TrapMode};

fn main() -> dressed_ion::Result<()> {
    let omega = TAU * 36.5e3;
    let cfg = SidebandConfig {
        levels: IonLevels::default(),
        omega,
        rf_rabi: omega / 20.0,
        mode: TrapMode::new(TAU * 200e3, 0.05, 8)?,
        initial_fock: 1,
        detuning_offset: 0.0,
        steps_per_period: 64,
        duration: None,
    };
    let r = run_sideband_gate(&cfg)?;
    println!("pi time {:.3} ms, deviation {:.4}, bright leakage {:.2e}", r.pi_time * 1e3, r.max_deviation, r.max_bright_leakage);
    for k in (0..r.times.len()).step_by((r.times.len() / 10).max(1)) {
        println!("{:>8.3} ms  P(D) full {:.3}  effective {:.3}", r.times[k] * 1e3, r.full[k][0], r.effective[k][0]);
    }
    Ok(())
}
