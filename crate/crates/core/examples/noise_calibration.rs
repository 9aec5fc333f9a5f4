//! Calibrates the OU magnetic-noise amplitude to a bare-qubit T2 and checks
//! it with independent trajectories.

use dressed_ion::noise::{calibrate_bare_t2, estimate_t2, simulate_bare_coherence, CalibrationOptions, OuNoise, T2Estimator};

fn main() -> dressed_ion::Result<()> {
    let (t2, tau_c) = (5.3e-3, 100e-6);
    let opts = CalibrationOptions { n_traj: 4000, ..Default::default() };
    let cal = calibrate_bare_t2(t2, tau_c, &opts)?;
    println!("amplitude {:.1} rad/s (closed form {:.1}), {} iterations", cal.amplitude, cal.analytic_amplitude, cal.iterations);

    let noise = OuNoise::new(cal.amplitude, tau_c);
    let (t, c) = simulate_bare_coherence(&noise, 3.0 * t2, 1e-5, 10, 2000, 99)?;
    println!("independent check: T2 = {:.3} ms", estimate_t2(&t, &c, T2Estimator::LogSlope) * 1e3);
    println!(
        "leakage-limited dressed lifetime at 36.5 kHz: {:.2} s",
        1.0 / noise.dressed_leakage_rate(std::f64::consts::TAU * 36.5e3 / 2f64.sqrt())
    );
    Ok(())
}
