//! One-dimensional robustness scans of the STIRAP transfer.

use dressed_ion::experiments::{robustness_grid, scan_stirap, SpamModel};
use dressed_ion::hamiltonian::IonLevels;

fn main() -> dressed_ion::Result<()> {
    let spam = SpamModel { preparation_error: 0.035, dark_to_bright: 0.035, bright_to_dark: 0.0 };
    let rows = scan_stirap(&robustness_grid(36.5e3), IonLevels::default(), &spam)?;
    for r in rows {
        println!(
            "{:<15} N={:<4} s_t={:<5} N_t={:<3} det={:+8.1} Hz  F={:.5}  measured={:.4}",
            format!("{:?}", r.axis),
            r.width,
            r.separation,
            r.steps_per_period,
            r.detuning,
            r.fidelity,
            r.measured
        );
    }
    Ok(())
}
